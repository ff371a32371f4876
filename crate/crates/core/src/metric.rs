//! Chart-level Riemannian machinery: metric evaluation, Christoffel symbols,
//! curvature, covariant derivatives and ∇R, for any metric supplied as a
//! jet-differentiable function.
//!
//! Index conventions for the curvature storage: `comp[i][j][k][l]` is the
//! `∂_l` component of `R(∂_i, ∂_j)∂_k` with
//! `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_{[X,Y]}Z`.

use std::sync::Arc;

use crate::error::{GeoError, GeoResult};
use crate::jet::{seed_independents, Jet};

/// Jet-differentiable map from chart coordinates to a vector of scalars.
pub type ChartMapFn = Arc<dyn Fn(&[Jet]) -> GeoResult<Vec<Jet>> + Send + Sync>;
/// Jet-differentiable map from chart coordinates to a matrix of scalars.
pub type ChartMatrixFn = Arc<dyn Fn(&[Jet]) -> GeoResult<Vec<Vec<Jet>>> + Send + Sync>;

#[derive(Clone)]
pub struct MetricChart {
    pub dim: usize,
    pub metric: ChartMatrixFn,
    /// Box constraints; evaluation outside is a domain error.
    pub domain: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct TangentVector {
    pub base: Vec<f64>,
    pub components: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: Vec<f64>, components: Vec<f64>) -> Self {
        TangentVector { base, components }
    }
}

/// Pointwise curvature tensor, `comp[(((i·d)+j)·d+k)·d+l]` as documented above.
#[derive(Clone, Debug)]
pub struct CurvatureValue {
    pub dim: usize,
    pub comp: Vec<f64>,
}

impl CurvatureValue {
    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let d = self.dim;
        self.comp[(((i * d) + j) * d + k) * d + l]
    }

    /// R(X,Y)Z as a coordinate vector.
    pub fn apply(&self, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d];
        for i in 0..d {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                if y[j] == 0.0 {
                    continue;
                }
                let xy = x[i] * y[j];
                for k in 0..d {
                    if z[k] == 0.0 {
                        continue;
                    }
                    let w = xy * z[k];
                    for l in 0..d {
                        out[l] += w * self.at(i, j, k, l);
                    }
                }
            }
        }
        out
    }
}

impl MetricChart {
    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim
            && p.iter()
                .zip(self.domain.iter())
                .all(|(x, (lo, hi))| *x >= *lo && *x <= *hi)
    }

    pub fn check_domain(&self, p: &[f64]) -> GeoResult<()> {
        if !self.contains(p) {
            return Err(GeoError::Domain {
                what: "metric chart".into(),
                point: p.to_vec(),
            });
        }
        Ok(())
    }

    /// Metric entries as jets of the requested order at `p`.
    pub fn metric_jets(&self, p: &[f64], order: usize) -> GeoResult<Vec<Vec<Jet>>> {
        self.check_domain(p)?;
        let seeds = seed_independents(p, order)?;
        (self.metric)(&seeds)
    }

    pub fn metric_values(&self, p: &[f64]) -> GeoResult<Vec<Vec<f64>>> {
        let g = self.metric_jets(p, 0)?;
        Ok(g.iter()
            .map(|row| row.iter().map(|j| j.value).collect())
            .collect())
    }
}

// ---------------------------------------------------------------------------
// Jet linear algebra
// ---------------------------------------------------------------------------

/// Invert a square matrix of jets by Gauss–Jordan elimination with partial
/// pivoting on the value parts.
pub fn invert_jet_matrix(m: &[Vec<Jet>]) -> GeoResult<Vec<Vec<Jet>>> {
    let n = m.len();
    let dim = m[0][0].dim();
    let order = m[0][0].order();
    let mut a: Vec<Vec<Jet>> = m.to_vec();
    let mut inv: Vec<Vec<Jet>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| Jet::constant(if i == j { 1.0 } else { 0.0 }, dim, order))
                .collect()
        })
        .collect();

    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if a[r][col].value.abs() > a[piv][col].value.abs() {
                piv = r;
            }
        }
        if a[piv][col].value.abs() < 1e-12 {
            return Err(GeoError::SingularMetric(format!(
                "pivot {:.3e} in column {col}",
                a[piv][col].value
            )));
        }
        a.swap(col, piv);
        inv.swap(col, piv);

        let scale = a[col][col].recip()?;
        for j in 0..n {
            a[col][j] = a[col][j].mul(&scale);
            inv[col][j] = inv[col][j].mul(&scale);
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r][col].clone();
            if f.value == 0.0 && f.first.iter().all(|&x| x == 0.0) && f.order() <= 1 {
                continue;
            }
            for j in 0..n {
                a[r][j] = a[r][j].sub(&f.mul(&a[col][j]));
                inv[r][j] = inv[r][j].sub(&f.mul(&inv[col][j]));
            }
        }
    }
    Ok(inv)
}

/// Solve `A x = b` for jet-valued `A`, `b` (LU with partial pivoting).
pub fn solve_jet_system(a: &[Vec<Jet>], b: &[Jet]) -> GeoResult<Vec<Jet>> {
    let n = a.len();
    let mut m: Vec<Vec<Jet>> = a.to_vec();
    let mut rhs: Vec<Jet> = b.to_vec();
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if m[r][col].value.abs() > m[piv][col].value.abs() {
                piv = r;
            }
        }
        if m[piv][col].value.abs() < 1e-12 {
            return Err(GeoError::SingularMetric(format!(
                "singular linear system, pivot {:.3e}",
                m[piv][col].value
            )));
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        let inv = m[col][col].recip()?;
        for r in (col + 1)..n {
            let f = m[r][col].mul(&inv);
            for j in col..n {
                m[r][j] = m[r][j].sub(&f.mul(&m[col][j]));
            }
            rhs[r] = rhs[r].sub(&f.mul(&rhs[col]));
        }
    }
    let dim = b[0].dim();
    let order = b[0].order().min(a[0][0].order());
    let mut x = vec![Jet::constant(0.0, dim, order); n];
    for row in (0..n).rev() {
        let mut acc = rhs[row].clone();
        for j in (row + 1)..n {
            acc = acc.sub(&m[row][j].mul(&x[j]));
        }
        x[row] = acc.div(&m[row][row])?;
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// Christoffel symbols and curvature
// ---------------------------------------------------------------------------

/// Christoffel symbols of the second kind as jets, `gamma[k][i][j]`,
/// one order below the metric jets.
pub fn christoffel_jets(g: &[Vec<Jet>]) -> GeoResult<Vec<Vec<Vec<Jet>>>> {
    let n = g.len();
    let out_order = g[0][0].order().saturating_sub(1);
    // invert at the output order; the top-order coefficients of g only feed
    // the ∂g terms
    let g_trunc: Vec<Vec<Jet>> = g
        .iter()
        .map(|row| row.iter().map(|j| j.clone().truncated(out_order)).collect())
        .collect();
    let ginv = invert_jet_matrix(&g_trunc)?;

    // ∂_i g_{jl}
    let dg: Vec<Vec<Vec<Jet>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|l| g[j][l].partial(i)).collect())
                .collect()
        })
        .collect();

    let dim = g[0][0].dim();
    let zero = Jet::constant(0.0, dim, out_order);
    let mut gamma = vec![vec![vec![zero; n]; n]; n];
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut acc = Jet::constant(0.0, dim, out_order);
                for l in 0..n {
                    let sym = dg[i][j][l].add(&dg[j][i][l]).sub(&dg[l][i][j]);
                    acc = acc.add(&ginv[k][l].mul(&sym));
                }
                let val = acc.scale(0.5);
                gamma[k][i][j] = val.clone();
                gamma[k][j][i] = val;
            }
        }
    }
    Ok(gamma)
}

/// Curvature jets from Christoffel jets: `r[i][j][k][l] = (R(∂i,∂j)∂k)^l`,
/// one order below the Christoffel jets.
pub fn riemann_jets(gamma: &[Vec<Vec<Jet>>]) -> Vec<Vec<Vec<Vec<Jet>>>> {
    let n = gamma.len();
    let dim = gamma[0][0][0].dim();
    let out_order = gamma[0][0][0].order().saturating_sub(1);
    let zero = Jet::constant(0.0, dim, out_order);
    let mut r = vec![vec![vec![vec![zero; n]; n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            for k in 0..n {
                for l in 0..n {
                    // ∂_i Γ^l_{jk} − ∂_j Γ^l_{ik} + Γ^l_{im}Γ^m_{jk} − Γ^l_{jm}Γ^m_{ik}
                    let mut acc = gamma[l][j][k].partial(i).sub(&gamma[l][i][k].partial(j));
                    for m in 0..n {
                        acc = acc
                            .add(&gamma[l][i][m].mul(&gamma[m][j][k]))
                            .sub(&gamma[l][j][m].mul(&gamma[m][i][k]));
                    }
                    r[i][j][k][l] = acc;
                }
            }
        }
    }
    r
}

fn jets_to_values4(r: &[Vec<Vec<Vec<Jet>>>]) -> CurvatureValue {
    let n = r.len();
    let mut comp = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    comp[(((i * n) + j) * n + k) * n + l] = r[i][j][k][l].value;
                }
            }
        }
    }
    CurvatureValue { dim: n, comp }
}

/// Christoffel symbols at a point, `gamma[k][i][j]` values.
pub fn christoffel(chart: &MetricChart, p: &[f64]) -> GeoResult<Vec<Vec<Vec<f64>>>> {
    let g = chart.metric_jets(p, 1)?;
    let gamma = christoffel_jets(&g)?;
    Ok(gamma
        .iter()
        .map(|a| {
            a.iter()
                .map(|b| b.iter().map(|j| j.value).collect())
                .collect()
        })
        .collect())
}

pub fn riemann(chart: &MetricChart, p: &[f64]) -> GeoResult<CurvatureValue> {
    let g = chart.metric_jets(p, 2)?;
    let gamma = christoffel_jets(&g)?;
    Ok(jets_to_values4(&riemann_jets(&gamma)))
}

/// Covariant derivative (∇_X Y)^k = X^i ∂_i Y^k + Γ^k_{ij} X^i Y^j at `p`.
pub fn covariant_derivative(
    chart: &MetricChart,
    p: &[f64],
    x: &TangentVector,
    y_field: &ChartMapFn,
) -> GeoResult<TangentVector> {
    let n = chart.dim;
    let seeds = seed_independents(p, 1)?;
    let y = y_field(&seeds)?;
    let gamma = christoffel(chart, p)?;
    let mut out = vec![0.0; n];
    for k in 0..n {
        let mut acc = 0.0;
        for i in 0..n {
            acc += x.components[i] * y[k].first[i];
            for j in 0..n {
                acc += gamma[k][i][j] * x.components[i] * y[j].value;
            }
        }
        out[k] = acc;
    }
    Ok(TangentVector::new(p.to_vec(), out))
}

/// (∇_U R) at `p` as a rank-4 array with the same index layout as
/// [`CurvatureValue`]. Needs order-3 metric jets.
pub fn nabla_riemann(chart: &MetricChart, p: &[f64], u: &[f64]) -> GeoResult<CurvatureValue> {
    let n = chart.dim;
    let g = chart.metric_jets(p, 3)?;
    let gamma_jets = christoffel_jets(&g)?;
    let r_jets = riemann_jets(&gamma_jets);

    let gamma = |k: usize, i: usize, j: usize| gamma_jets[k][i][j].value;
    let rv = |i: usize, j: usize, k: usize, l: usize| r_jets[i][j][k][l].value;

    let mut comp = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut acc = 0.0;
                    for m in 0..n {
                        if u[m] == 0.0 {
                            continue;
                        }
                        let mut term = r_jets[i][j][k][l].first[m];
                        for a in 0..n {
                            term += gamma(l, m, a) * rv(i, j, k, a);
                            term -= gamma(a, m, i) * rv(a, j, k, l);
                            term -= gamma(a, m, j) * rv(i, a, k, l);
                            term -= gamma(a, m, k) * rv(i, j, a, l);
                        }
                        acc += u[m] * term;
                    }
                    comp[(((i * n) + j) * n + k) * n + l] = acc;
                }
            }
        }
    }
    Ok(CurvatureValue { dim: n, comp })
}

/// Christoffel symbol values at a point, via nalgebra for the inverse;
/// cheaper than the jet route when no Γ-derivatives are needed.
pub fn christoffel_values(chart: &MetricChart, p: &[f64]) -> GeoResult<Vec<Vec<Vec<f64>>>> {
    let n = chart.dim;
    let g = chart.metric_jets(p, 1)?;
    let gm = nalgebra::DMatrix::from_fn(n, n, |i, j| g[i][j].value);
    let ginv = gm
        .try_inverse()
        .ok_or_else(|| GeoError::SingularMetric("metric not invertible".into()))?;
    let mut gamma = vec![vec![vec![0.0; n]; n]; n];
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += ginv[(k, l)]
                        * (g[j][l].first[i] + g[i][l].first[j] - g[i][j].first[l]);
                }
                gamma[k][i][j] = 0.5 * acc;
                gamma[k][j][i] = 0.5 * acc;
            }
        }
    }
    Ok(gamma)
}

/// Christoffel symbols evaluated on foreign jets (e.g. a position given as
/// jets in curve or surface parameters) via Taylor composition. The outer
/// expansion order is capped at 2 (metric jets of order 3).
pub fn christoffel_at_jets(
    chart: &MetricChart,
    p_jets: &[Jet],
    order: usize,
) -> GeoResult<Vec<Vec<Vec<Jet>>>> {
    let q = order.min(2);
    let point: Vec<f64> = p_jets.iter().map(|j| j.value).collect();
    chart.check_domain(&point)?;
    let seeds = crate::jet::seed_independents(&point, q + 1)?;
    let g = (chart.metric)(&seeds)?;
    let gamma = christoffel_jets(&g)?;
    let n = chart.dim;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                row.push(crate::jet::compose(&gamma[k][i][j], p_jets));
            }
            rows.push(row);
        }
        out.push(rows);
    }
    Ok(out)
}

/// Evaluate a matrix-valued chart function on foreign jets via composition.
pub fn matrix_at_jets(
    f: &ChartMatrixFn,
    p_jets: &[Jet],
    outer_order: usize,
) -> GeoResult<Vec<Vec<Jet>>> {
    let point: Vec<f64> = p_jets.iter().map(|j| j.value).collect();
    let seeds = crate::jet::seed_independents(&point, outer_order)?;
    let outer = f(&seeds)?;
    Ok(outer
        .iter()
        .map(|row| row.iter().map(|o| crate::jet::compose(o, p_jets)).collect())
        .collect())
}

/// Evaluate a vector-valued chart function on foreign jets via composition.
pub fn vector_at_jets(
    f: &ChartMapFn,
    p_jets: &[Jet],
    outer_order: usize,
) -> GeoResult<Vec<Jet>> {
    let point: Vec<f64> = p_jets.iter().map(|j| j.value).collect();
    let seeds = crate::jet::seed_independents(&point, outer_order)?;
    let outer = f(&seeds)?;
    Ok(outer.iter().map(|o| crate::jet::compose(o, p_jets)).collect())
}

pub fn inner(g: &[Vec<f64>], u: &[f64], v: &[f64]) -> f64 {
    let n = g.len();
    let mut acc = 0.0;
    for i in 0..n {
        if u[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            acc += g[i][j] * u[i] * v[j];
        }
    }
    acc
}

pub fn norm(g: &[Vec<f64>], u: &[f64]) -> f64 {
    inner(g, u, u).max(0.0).sqrt()
}

/// Sectional curvature of span(X, Y) from precomputed metric and curvature.
pub fn sectional_from(
    g: &[Vec<f64>],
    r: &CurvatureValue,
    x: &[f64],
    y: &[f64],
) -> GeoResult<f64> {
    let rxyy = r.apply(x, y, y);
    let num = inner(g, &rxyy, x);
    let den = inner(g, x, x) * inner(g, y, y) - inner(g, x, y).powi(2);
    if den.abs() < 1e-12 {
        return Err(GeoError::DegeneratePlane(den));
    }
    Ok(num / den)
}

pub fn sectional_curvature(
    chart: &MetricChart,
    p: &[f64],
    x: &TangentVector,
    y: &TangentVector,
) -> GeoResult<f64> {
    let g = chart.metric_values(p)?;
    let r = riemann(chart, p)?;
    sectional_from(&g, &r, &x.components, &y.components)
}

/// Flat Euclidean chart of the given dimension (testing and product factors).
pub fn euclidean_chart(dim: usize, half_width: f64) -> MetricChart {
    MetricChart {
        dim,
        metric: Arc::new(move |p: &[Jet]| {
            let d = p.len();
            let order = p[0].order();
            let jdim = p[0].dim();
            let mut g = vec![vec![Jet::constant(0.0, jdim, order); d]; d];
            for (i, row) in g.iter_mut().enumerate() {
                row[i] = Jet::constant(1.0, jdim, order);
            }
            Ok(g)
        }),
        domain: vec![(-half_width, half_width); dim],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn sphere2_chart() -> MetricChart {
        // round 2-sphere in (θ, φ), metric diag(1, sin²θ)
        MetricChart {
            dim: 2,
            metric: Arc::new(|p: &[Jet]| {
                let zero = Jet::constant(0.0, p[0].dim(), p[0].order());
                let one = Jet::constant(1.0, p[0].dim(), p[0].order());
                let s = p[0].sin();
                Ok(vec![vec![one, zero.clone()], vec![zero, s.mul(&s)]])
            }),
            domain: vec![(0.1, std::f64::consts::PI - 0.1), (-10.0, 10.0)],
        }
    }

    #[test]
    fn euclidean_christoffel_and_curvature_vanish() {
        let chart = euclidean_chart(3, 10.0);
        let gamma = christoffel(&chart, &[0.3, -1.0, 2.0]).unwrap();
        for a in gamma.iter().flatten().flatten() {
            assert_eq!(*a, 0.0);
        }
        let r = riemann(&chart, &[0.3, -1.0, 2.0]).unwrap();
        assert!(r.comp.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn sphere_christoffel_closed_form() {
        let chart = sphere2_chart();
        let p = [std::f64::consts::FRAC_PI_3, 0.0];
        let gamma = christoffel(&chart, &p).unwrap();
        let expected = -(p[0].sin() * p[0].cos());
        assert!((gamma[0][1][1] - expected).abs() < 1e-12);
        // cross-check against central finite differences of the metric
        let h = 1e-5;
        let gp = chart.metric_values(&[p[0] + h, p[1]]).unwrap();
        let gm = chart.metric_values(&[p[0] - h, p[1]]).unwrap();
        let dg_theta = (gp[1][1] - gm[1][1]) / (2.0 * h);
        let g = chart.metric_values(&p).unwrap();
        let fd_gamma = -0.5 * dg_theta / g[0][0];
        assert!((gamma[0][1][1] - fd_gamma).abs() < 1e-8);
    }

    #[test]
    fn sphere_sectional_curvature_is_one() {
        let chart = sphere2_chart();
        let p = vec![1.0, 0.4];
        let x = TangentVector::new(p.clone(), vec![1.0, 0.2]);
        let y = TangentVector::new(p.clone(), vec![-0.3, 1.1]);
        let k = sectional_curvature(&chart, &p, &x, &y).unwrap();
        assert!((k - 1.0).abs() < 1e-10, "sec = {k}");
    }

    #[test]
    fn scaled_metric_scales_sectional_curvature() {
        let lambda2 = 2.5;
        let chart = MetricChart {
            dim: 2,
            metric: Arc::new(move |p: &[Jet]| {
                let zero = Jet::constant(0.0, p[0].dim(), p[0].order());
                let one = Jet::constant(lambda2, p[0].dim(), p[0].order());
                let s = p[0].sin();
                Ok(vec![
                    vec![one, zero.clone()],
                    vec![zero, s.mul(&s).scale(lambda2)],
                ])
            }),
            domain: vec![(0.1, 3.0), (-10.0, 10.0)],
        };
        let p = vec![1.1, -0.2];
        let x = TangentVector::new(p.clone(), vec![1.0, 0.0]);
        let y = TangentVector::new(p.clone(), vec![0.0, 1.0]);
        let k = sectional_curvature(&chart, &p, &x, &y).unwrap();
        assert!((k - 1.0 / lambda2).abs() < 1e-10, "sec = {k}");
    }

    #[test]
    fn sectional_is_plane_invariant() {
        let chart = sphere2_chart();
        let p = vec![0.9, 1.3];
        let x = vec![0.7, -0.1];
        let y = vec![0.4, 0.8];
        let g = chart.metric_values(&p).unwrap();
        let r = riemann(&chart, &p).unwrap();
        let k0 = sectional_from(&g, &r, &x, &y).unwrap();
        // replace (X, Y) by (aX+bY, cX+dY), ad − bc ≠ 0
        let (a, b, c, d) = (1.3, -0.4, 0.2, 0.9);
        let xp: Vec<f64> = (0..2).map(|i| a * x[i] + b * y[i]).collect();
        let yp: Vec<f64> = (0..2).map(|i| c * x[i] + d * y[i]).collect();
        let k1 = sectional_from(&g, &r, &xp, &yp).unwrap();
        assert!((k0 - k1).abs() < 1e-9);
    }

    #[test]
    fn degenerate_plane_is_an_error() {
        let chart = euclidean_chart(3, 10.0);
        let p = vec![0.0, 0.0, 0.0];
        let x = TangentVector::new(p.clone(), vec![1.0, 2.0, 0.0]);
        let y = TangentVector::new(p.clone(), vec![2.0, 4.0, 0.0]);
        assert!(matches!(
            sectional_curvature(&chart, &p, &x, &y),
            Err(GeoError::DegeneratePlane(_))
        ));
    }

    #[test]
    fn covariant_derivative_flat_cases() {
        let chart = euclidean_chart(3, 10.0);
        let p = vec![0.5, -0.2, 0.7];
        let x = TangentVector::new(p.clone(), vec![1.0, 2.0, 3.0]);
        let constant: ChartMapFn = Arc::new(|s: &[Jet]| {
            let (d, o) = (s[0].dim(), s[0].order());
            Ok(vec![
                Jet::constant(1.0, d, o),
                Jet::constant(-2.0, d, o),
                Jet::constant(0.5, d, o),
            ])
        });
        let dv = covariant_derivative(&chart, &p, &x, &constant).unwrap();
        assert!(dv.components.iter().all(|&c| c == 0.0));

        let position: ChartMapFn = Arc::new(|s: &[Jet]| Ok(s.to_vec()));
        let dv = covariant_derivative(&chart, &p, &x, &position).unwrap();
        for (a, b) in dv.components.iter().zip(x.components.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn nabla_riemann_flat_and_sphere() {
        let chart = euclidean_chart(3, 10.0);
        let nr = nabla_riemann(&chart, &[0.1, 0.2, 0.3], &[1.0, -1.0, 0.5]).unwrap();
        assert!(nr.comp.iter().all(|&x| x.abs() < 1e-14));

        // constant curvature => locally symmetric => ∇R = 0
        let chart = sphere2_chart();
        let nr = nabla_riemann(&chart, &[1.0, 0.3], &[0.7, -0.4]).unwrap();
        let max = nr.comp.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        assert!(max < 1e-7, "max |∇R| = {max}");
    }

    #[test]
    fn metric_compatibility_and_torsion_freeness() {
        let chart = sphere2_chart();
        let p = [0.8, 0.5];
        let g = chart.metric_jets(&p, 1).unwrap();
        let gamma = christoffel(&chart, &p).unwrap();
        let n = 2;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(gamma[k][i][j], gamma[k][j][i]);
                }
            }
        }
        // ∇_k g_{ij} = ∂_k g_{ij} − Γ^m_{ki} g_{mj} − Γ^m_{kj} g_{im}
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut r = g[i][j].first[k];
                    for m in 0..n {
                        r -= gamma[m][k][i] * g[m][j].value;
                        r -= gamma[m][k][j] * g[i][m].value;
                    }
                    assert!(r.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn curvature_symmetries_and_first_bianchi() {
        let chart = sphere2_chart();
        let p = [1.2, -0.7];
        let g = chart.metric_values(&p).unwrap();
        let r = riemann(&chart, &p).unwrap();
        let n = 2;
        let low = |i: usize, j: usize, k: usize, l: usize| -> f64 {
            (0..n).map(|m| g[l][m] * r.at(i, j, k, m)).sum()
        };
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        assert!((low(i, j, k, l) + low(j, i, k, l)).abs() < 1e-9);
                        assert!((low(i, j, k, l) + low(i, j, l, k)).abs() < 1e-9);
                        assert!((low(i, j, k, l) - low(k, l, i, j)).abs() < 1e-9);
                        let b = low(i, j, k, l) + low(j, k, i, l) + low(k, i, j, l);
                        assert!(b.abs() < 1e-9);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod bianchi_tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn second_bianchi_identity() {
        // (∇_X R)(Y,Z) + (∇_Y R)(Z,X) + (∇_Z R)(X,Y) = 0 on a curved chart
        let chart = MetricChart {
            dim: 3,
            metric: Arc::new(|p: &[Jet]| {
                let (d, o) = (p[0].dim(), p[0].order());
                let zero = Jet::constant(0.0, d, o);
                let one = Jet::constant(1.0, d, o);
                // warped: diag(1, 1 + x², e^{2z} (1 + sin²x))
                let w1 = p[0].mul(&p[0]).add_scalar(1.0);
                let sx = p[0].sin();
                let w2 = p[2]
                    .scale(2.0)
                    .exp()
                    .mul(&sx.mul(&sx).add_scalar(1.0));
                Ok(vec![
                    vec![one, zero.clone(), zero.clone()],
                    vec![zero.clone(), w1, zero.clone()],
                    vec![zero.clone(), zero, w2],
                ])
            }),
            domain: vec![(-2.0, 2.0); 3],
        };
        let p = [0.3, -0.4, 0.2];
        let n = 3;
        let mut basis = vec![vec![0.0; n]; n];
        for (i, e) in basis.iter_mut().enumerate() {
            e[i] = 1.0;
        }
        let nr: Vec<CurvatureValue> = (0..n)
            .map(|i| nabla_riemann(&chart, &p, &basis[i]).unwrap())
            .collect();
        let mut worst = 0.0f64;
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            let s = nr[x].at(y, z, k, l)
                                + nr[y].at(z, x, k, l)
                                + nr[z].at(x, y, k, l);
                            worst = worst.max(s.abs());
                        }
                    }
                }
            }
        }
        assert!(worst < 1e-6, "second Bianchi residual {worst:.3e}");
    }
}
