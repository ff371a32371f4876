//! The two quadratic forms carried by anti-invariant surfaces with parallel
//! mean curvature, evaluated in isothermal coordinates, and the numerical
//! verification that their (2,0)-parts are holomorphic.
//!
//! Complexified tangent vectors use `Z = (∂u − i∂v)/√2` and complex-bilinear
//! extensions of every pairing; the discrete `∂̄ = ½(∂/∂u + i∂/∂v)` uses
//! centered differences with a one-cell margin.

use num_complex::Complex64;

use crate::error::{GeoError, GeoResult};
use crate::surface::{classify_surface, NodeGeom, SurfaceGeometry};

/// Isothermal gate: relative deviation must stay below this.
pub const ISOTHERMAL_TOL: f64 = 1e-7;

pub struct IsothermalPatch<'a> {
    pub geom: &'a SurfaceGeometry,
    pub lambda_sq: Vec<f64>,
}

impl<'a> IsothermalPatch<'a> {
    pub fn new(geom: &'a SurfaceGeometry) -> GeoResult<Self> {
        let resid = geom.isothermal_residual();
        if resid > ISOTHERMAL_TOL {
            return Err(GeoError::Precondition {
                what: "surface patch is not isothermal".into(),
                residual: resid,
            });
        }
        Ok(IsothermalPatch {
            geom,
            lambda_sq: geom.nodes.iter().map(|n| n.lambda_sq).collect(),
        })
    }
}

#[derive(Clone)]
pub struct QGrid {
    pub nu: usize,
    pub nv: usize,
    pub us: Vec<f64>,
    pub vs: Vec<f64>,
    pub q1: Vec<Complex64>,
    pub q2: Vec<Complex64>,
    /// Discrete ∂̄ values on the interior (None on the margin).
    pub dbar_q1: Vec<Option<Complex64>>,
    pub dbar_q2: Vec<Option<Complex64>>,
}

impl QGrid {
    pub fn max_abs_dbar(&self) -> (f64, f64) {
        let m1 = self
            .dbar_q1
            .iter()
            .flatten()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        let m2 = self
            .dbar_q2
            .iter()
            .flatten()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        (m1, m2)
    }

    pub fn min_abs_q(&self) -> (f64, f64) {
        let m1 = self.q1.iter().map(|c| c.norm()).fold(f64::MAX, f64::min);
        let m2 = self.q2.iter().map(|c| c.norm()).fold(f64::MAX, f64::min);
        (m1, m2)
    }
}

/// Q₁(Z,Z) and Q₂(Z,Z) at a stored node, from the model constant `c`.
pub fn q_values_at(node: &NodeGeom, c: f64) -> (Complex64, Complex64) {
    // σ(Z,Z) = ½(σ_uu − σ_vv) − i σ_uv
    let s_h_re = 0.5
        * (node.inner(&node.sigma[0], &node.h) - node.inner(&node.sigma[2], &node.h));
    let s_h_im = -node.inner(&node.sigma[1], &node.h);
    let sigma_h = Complex64::new(s_h_re, s_h_im);
    // η(Z) = (η(∂u) − iη(∂v))/√2
    let sqrt2 = std::f64::consts::SQRT_2;
    let eta_z = Complex64::new(node.eta_tangent(0), -node.eta_tangent(1)) / sqrt2;
    // ⟨φZ, H⟩ = (⟨φ∂u, H⟩ − i⟨φ∂v, H⟩)/√2
    let phi_z_h =
        Complex64::new(node.phi_tangent_dot_h(0), -node.phi_tangent_dot_h(1)) / sqrt2;

    let q1 = 8.0 * sigma_h - (c - 1.0) * eta_z * eta_z;
    let q2 = phi_z_h * phi_z_h + eta_z * eta_z - 2.0 * eta_z * phi_z_h;
    (q1, q2)
}

/// Q₂ via the squared-difference identity (η(Z) − ⟨φZ,H⟩)².
pub fn q2_square_form(node: &NodeGeom) -> Complex64 {
    let sqrt2 = std::f64::consts::SQRT_2;
    let eta_z = Complex64::new(node.eta_tangent(0), -node.eta_tangent(1)) / sqrt2;
    let phi_z_h =
        Complex64::new(node.phi_tangent_dot_h(0), -node.phi_tangent_dot_h(1)) / sqrt2;
    let d = eta_z - phi_z_h;
    d * d
}

/// Q₁ as a complex-bilinear form on two complexified tangent vectors given by
/// coordinate components (au + i bu, av + i bv).
pub fn q1_bilinear(node: &NodeGeom, c: f64, x: [Complex64; 2], y: [Complex64; 2]) -> Complex64 {
    let sigma_h = |a: usize, b: usize| -> f64 { node.inner(&node.sigma[a + b], &node.h) };
    let mut s = Complex64::new(0.0, 0.0);
    for a in 0..2 {
        for b in 0..2 {
            s += x[a] * y[b] * sigma_h(a, b);
        }
    }
    let eta_x = x[0] * node.eta_tangent(0) + x[1] * node.eta_tangent(1);
    let eta_y = y[0] * node.eta_tangent(0) + y[1] * node.eta_tangent(1);
    8.0 * s - (c - 1.0) * eta_x * eta_y
}

impl NodeGeom {
    /// η(∂_a) for the coordinate tangents, recovered from the stored values
    /// on the orthonormal frame: ∂u = √g₁₁ Ê₁ and ∂v = (g₁₂/√g₁₁)Ê₁ + n₂Ê₂
    /// with n₂² = g₂₂ − g₁₂²/g₁₁.
    pub fn eta_tangent(&self, axis: usize) -> f64 {
        let g11 = self.gind[0];
        if axis == 0 {
            self.eta_e1 * g11.sqrt()
        } else {
            let n2 = (self.gind[2] - self.gind[1] * self.gind[1] / g11).max(0.0).sqrt();
            self.eta_e2 * n2 + self.eta_e1 * self.gind[1] / g11.sqrt()
        }
    }

    /// ⟨φ∂_a, H⟩.
    pub fn phi_tangent_dot_h(&self, axis: usize) -> f64 {
        let g11 = self.gind[0];
        if axis == 0 {
            self.inner(&self.phi_e1, &self.h) * g11.sqrt()
        } else {
            let n2 = (self.gind[2] - self.gind[1] * self.gind[1] / g11).max(0.0).sqrt();
            self.inner(&self.phi_e2, &self.h) * n2
                + self.inner(&self.phi_e1, &self.h) * self.gind[1] / g11.sqrt()
        }
    }
}

/// Evaluate both forms and their discrete ∂̄ on the grid.
pub fn q_forms(patch: &IsothermalPatch, c: f64) -> QGrid {
    let geom = patch.geom;
    let (nu, nv) = (geom.nu, geom.nv);
    let q: Vec<(Complex64, Complex64)> =
        geom.nodes.iter().map(|n| q_values_at(n, c)).collect();
    let q1: Vec<Complex64> = q.iter().map(|p| p.0).collect();
    let q2: Vec<Complex64> = q.iter().map(|p| p.1).collect();

    let du = geom.us[1] - geom.us[0];
    let dv = geom.vs[1] - geom.vs[0];
    let dbar = |vals: &[Complex64]| -> Vec<Option<Complex64>> {
        let mut out = vec![None; vals.len()];
        for iv in 1..nv - 1 {
            for iu in 1..nu - 1 {
                let idx = iv * nu + iu;
                let ddu = (vals[idx + 1] - vals[idx - 1]) / (2.0 * du);
                let ddv = (vals[idx + nu] - vals[idx - nu]) / (2.0 * dv);
                out[idx] = Some(0.5 * (ddu + Complex64::new(0.0, 1.0) * ddv));
            }
        }
        out
    };
    let dbar_q1 = dbar(&q1);
    let dbar_q2 = dbar(&q2);
    QGrid {
        nu,
        nv,
        us: geom.us.clone(),
        vs: geom.vs.clone(),
        q1,
        q2,
        dbar_q1,
        dbar_q2,
    }
}

#[derive(Clone, Copy, Debug)]
pub struct HolomorphicityRecord {
    pub max_dbar_q1: f64,
    pub max_dbar_q2: f64,
    pub grid: usize,
}

/// Gate + ∂̄ statistics for one grid. The surface must be anti-invariant and
/// pmc before the holomorphicity statement applies.
pub fn holomorphicity_residual(
    geom: &SurfaceGeometry,
    c: f64,
    anti_invariant_tol: f64,
    pmc_resid: f64,
    pmc_tol: f64,
) -> GeoResult<HolomorphicityRecord> {
    let class = classify_surface(geom);
    if class.anti_invariant_residual > anti_invariant_tol {
        return Err(GeoError::Precondition {
            what: "holomorphicity requires an anti-invariant surface".into(),
            residual: class.anti_invariant_residual,
        });
    }
    if pmc_resid > pmc_tol {
        return Err(GeoError::Precondition {
            what: "holomorphicity requires parallel mean curvature".into(),
            residual: pmc_resid,
        });
    }
    let patch = IsothermalPatch::new(geom)?;
    let grid = q_forms(&patch, c);
    let (m1, m2) = grid.max_abs_dbar();
    Ok(HolomorphicityRecord {
        max_dbar_q1: m1,
        max_dbar_q2: m2,
        grid: geom.nu,
    })
}

/// Empirical convergence orders from residuals at successively refined grids.
pub fn convergence_orders(residuals: &[(usize, f64)]) -> Vec<f64> {
    residuals
        .windows(2)
        .map(|w| {
            let (n0, r0) = w[0];
            let (n1, r1) = w[1];
            let ratio = (n1 as f64 - 1.0) / (n0 as f64 - 1.0);
            if r1 <= 0.0 || r0 <= 0.0 {
                f64::INFINITY
            } else {
                (r0 / r1).ln() / ratio.ln()
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug)]
pub struct QVanishing {
    pub q1_zero: bool,
    pub pseudo_umbilical: bool,
    pub agree: bool,
    pub max_abs_q1: f64,
    pub pseudo_umbilical_residual: f64,
}

/// On integral surfaces in a 7-dimensional model, Q₁ ≡ 0 iff the surface is
/// pseudo-umbilical.
pub fn q_vanishing_equivalence(
    geom: &SurfaceGeometry,
    c: f64,
    tol: f64,
) -> GeoResult<QVanishing> {
    let class = classify_surface(geom);
    if class.integral_residual > tol {
        return Err(GeoError::Precondition {
            what: "equivalence applies to integral surfaces".into(),
            residual: class.integral_residual,
        });
    }
    if geom.nodes[0].x.len() != 7 {
        return Err(GeoError::Precondition {
            what: "equivalence is stated for 7-dimensional models".into(),
            residual: geom.nodes[0].x.len() as f64,
        });
    }
    let max_abs_q1 = geom
        .nodes
        .iter()
        .map(|n| q_values_at(n, c).0.norm())
        .fold(0.0, f64::max);
    let q1_zero = max_abs_q1 < tol;
    let pseudo_umbilical = class.pseudo_umbilical_residual < tol;
    Ok(QVanishing {
        q1_zero,
        pseudo_umbilical,
        agree: q1_zero == pseudo_umbilical,
        max_abs_q1,
        pseudo_umbilical_residual: class.pseudo_umbilical_residual,
    })
}
