use thiserror::Error;

/// Errors produced by the geometry kernels.
#[derive(Debug, Error)]
pub enum GeoError {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("evaluation error in `{op}` (argument value {value})")]
    Eval { op: &'static str, value: f64 },

    #[error("derivative order {requested} not supported (jet carries order {available})")]
    UnsupportedOrder { requested: usize, available: usize },

    #[error("point {point:?} outside chart domain ({what})")]
    Domain { what: String, point: Vec<f64> },

    #[error("metric is singular or not positive definite: {0}")]
    SingularMetric(String),

    #[error("degenerate 2-plane: Gram determinant {0:.3e} below tolerance")]
    DegeneratePlane(f64),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("precondition violated: {what} (residual {residual:.3e})")]
    Precondition { what: String, residual: f64 },

    #[error("immersion is rank deficient at grid point ({u:.4}, {v:.4}): min eigenvalue {min_eig:.3e}")]
    Immersion { u: f64, v: f64, min_eig: f64 },

    #[error("infeasible branch: {0}")]
    Infeasible(String),

    #[error("frame integration is not compatible: max mixed-partial residual {residual:.3e} at ({u:.4}, {v:.4})")]
    Integrability { residual: f64, u: f64, v: f64 },

    #[error("curve left the chart domain at s = {s:.4}, point {point:?}")]
    ChartExit { s: f64, point: Vec<f64> },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type GeoResult<T> = Result<T, GeoError>;
