//! Coordinate models of the simply connected Sasakian space forms
//! `N^{2n+1}(c)` and the verification of their structure identities.
//!
//! Model charts:
//! - `c = 1`: unit sphere `S^{2n+1} ⊂ ℂ^{n+1}` with its canonical structure,
//!   in the stereographic chart from the south pole.
//! - `c = 4/a − 3 > −3`: the same sphere with the `a`-deformed structure
//!   `η = a·η₀`, `ξ = ξ₀/a`, `φ = φ₀`, `⟨,⟩ = a⟨,⟩₀ + a(a−1)η₀⊗η₀`.
//! - `c = −3`: the generalized Heisenberg group `ℝ^{2n+1}` with coordinates
//!   `(x¹..xⁿ, y¹..yⁿ, z)`, `ξ = 2∂z`, `η = ½(dz − Σ yⁱdxⁱ)`.
//! - `c = k − 3 < −3`: `B^{2n} × ℝ` over the complex ball with the Bergman
//!   metric of holomorphic sectional curvature `k < 0`, `η = ω + dt`.
//!
//! All structure tensors are closed-form jet expressions, so every identity
//! below is checked to machine precision of the jet pipeline.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{GeoError, GeoResult};
use crate::jet::{seed_independents, Jet};
use crate::metric::{
    christoffel_jets, inner, nabla_riemann, norm, riemann, sectional_from, ChartMapFn,
    ChartMatrixFn, MetricChart,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    StandardSphere,
    DeformedSphere,
    Heisenberg,
    BallTimesLine,
    /// Flat chart with vanishing structure tensors; testing only.
    Euclidean,
}

impl ModelKind {
    pub fn parse(s: &str) -> GeoResult<ModelKind> {
        match s {
            "standard_sphere" => Ok(ModelKind::StandardSphere),
            "deformed_sphere" => Ok(ModelKind::DeformedSphere),
            "heisenberg" => Ok(ModelKind::Heisenberg),
            "ball_times_line" => Ok(ModelKind::BallTimesLine),
            other => Err(GeoError::Parameter(format!("unknown model kind `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::StandardSphere => "standard_sphere",
            ModelKind::DeformedSphere => "deformed_sphere",
            ModelKind::Heisenberg => "heisenberg",
            ModelKind::BallTimesLine => "ball_times_line",
            ModelKind::Euclidean => "euclidean",
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ModelParams {
    /// Deformation parameter of the sphere structure (`c = 4/a − 3`).
    pub a: Option<f64>,
    /// Holomorphic sectional curvature of the ball factor (`c = k − 3`).
    pub k: Option<f64>,
    /// Optional diagonal metric perturbation, for detector demonstrations.
    pub perturb: f64,
}

pub struct ModelSpace {
    pub kind: ModelKind,
    pub n: usize,
    /// φ-sectional curvature.
    pub c: f64,
    pub deform_a: Option<f64>,
    pub k_ball: Option<f64>,
    pub chart: MetricChart,
    /// `phi[i][j] = (φ ∂_j)^i`.
    pub phi: ChartMatrixFn,
    pub xi: ChartMapFn,
    /// Covector components of η.
    pub eta: ChartMapFn,
    /// Sub-box of the chart domain used for seeded random sampling.
    pub sample_box: Vec<(f64, f64)>,
}

impl ModelSpace {
    pub fn dim(&self) -> usize {
        self.chart.dim
    }
}

/// Pointwise evaluation bundle of the structure tensors.
pub struct ModelPoint {
    pub p: Vec<f64>,
    pub g: Vec<Vec<Jet>>,
    pub phi: Vec<Vec<Jet>>,
    pub eta: Vec<Jet>,
    pub xi: Vec<Jet>,
    pub gamma: Vec<Vec<Vec<f64>>>,
}

impl ModelPoint {
    pub fn g_values(&self) -> Vec<Vec<f64>> {
        self.g
            .iter()
            .map(|r| r.iter().map(|j| j.value).collect())
            .collect()
    }

    pub fn phi_values(&self) -> Vec<Vec<f64>> {
        self.phi
            .iter()
            .map(|r| r.iter().map(|j| j.value).collect())
            .collect()
    }

    pub fn eta_values(&self) -> Vec<f64> {
        self.eta.iter().map(|j| j.value).collect()
    }

    pub fn xi_values(&self) -> Vec<f64> {
        self.xi.iter().map(|j| j.value).collect()
    }

    pub fn eta_of(&self, v: &[f64]) -> f64 {
        self.eta.iter().zip(v).map(|(e, x)| e.value * x).sum()
    }

    pub fn phi_of(&self, v: &[f64]) -> Vec<f64> {
        let d = v.len();
        (0..d)
            .map(|i| (0..d).map(|j| self.phi[i][j].value * v[j]).sum())
            .collect()
    }

    pub fn inner_of(&self, u: &[f64], v: &[f64]) -> f64 {
        let d = u.len();
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += self.g[i][j].value * u[i] * v[j];
            }
        }
        acc
    }
}

impl ModelSpace {
    /// Evaluate metric, φ, η, ξ jets and Christoffel values at `p`.
    pub fn eval_point(&self, p: &[f64], order: usize) -> GeoResult<ModelPoint> {
        self.chart.check_domain(p)?;
        let seeds = seed_independents(p, order.max(1))?;
        let g = (self.chart.metric)(&seeds)?;
        let phi = (self.phi)(&seeds)?;
        let eta = (self.eta)(&seeds)?;
        let xi = (self.xi)(&seeds)?;
        let gamma_jets = christoffel_jets(&g)?;
        let gamma = gamma_jets
            .iter()
            .map(|a| {
                a.iter()
                    .map(|b| b.iter().map(|j| j.value).collect())
                    .collect()
            })
            .collect();
        Ok(ModelPoint {
            p: p.to_vec(),
            g,
            phi,
            eta,
            xi,
            gamma,
        })
    }

    /// Seeded uniform samples from the model's sampling box.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                self.sample_box
                    .iter()
                    .map(|(lo, hi)| rng.gen_range(*lo..*hi))
                    .collect()
            })
            .collect()
    }

    /// Seeded random tangent vector with entries in [−1, 1).
    pub fn sample_vector(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..self.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }
}

// ---------------------------------------------------------------------------
// Model construction
// ---------------------------------------------------------------------------

pub fn make_model(kind: ModelKind, n: usize, params: ModelParams) -> GeoResult<ModelSpace> {
    if n < 1 {
        return Err(GeoError::Parameter("n must be at least 1".into()));
    }
    match kind {
        ModelKind::StandardSphere => {
            if let Some(a) = params.a {
                if (a - 1.0).abs() > 1e-15 {
                    return Err(GeoError::Parameter(
                        "standard sphere has no deformation parameter (use deformed_sphere)"
                            .into(),
                    ));
                }
            }
            Ok(sphere_model(n, 1.0, params.perturb, ModelKind::StandardSphere))
        }
        ModelKind::DeformedSphere => {
            let a = params
                .a
                .ok_or_else(|| GeoError::Parameter("deformed_sphere requires a".into()))?;
            if a <= 0.0 {
                return Err(GeoError::Parameter(format!(
                    "deformation parameter must be positive, got {a}"
                )));
            }
            Ok(sphere_model(n, a, params.perturb, ModelKind::DeformedSphere))
        }
        ModelKind::Heisenberg => Ok(heisenberg_model(n, params.perturb)),
        ModelKind::BallTimesLine => {
            let k = params
                .k
                .ok_or_else(|| GeoError::Parameter("ball_times_line requires k".into()))?;
            if k >= 0.0 {
                return Err(GeoError::Parameter(format!(
                    "holomorphic curvature k must be negative, got {k}"
                )));
            }
            Ok(ball_model(n, k, params.perturb))
        }
        ModelKind::Euclidean => Ok(euclidean_model(2 * n + 1)),
    }
}

/// Flat chart with zero structure tensors (`φ = 0`, `ξ = 0`, `η = 0`).
pub fn euclidean_model(dim: usize) -> ModelSpace {
    let zero_mat: ChartMatrixFn = Arc::new(move |p: &[Jet]| {
        let (jd, o) = (p[0].dim(), p[0].order());
        Ok(vec![vec![Jet::constant(0.0, jd, o); p.len()]; p.len()])
    });
    let zero_vec: ChartMapFn = Arc::new(move |p: &[Jet]| {
        let (jd, o) = (p[0].dim(), p[0].order());
        Ok(vec![Jet::constant(0.0, jd, o); p.len()])
    });
    ModelSpace {
        kind: ModelKind::Euclidean,
        n: dim / 2,
        c: 0.0,
        deform_a: None,
        k_ball: None,
        chart: crate::metric::euclidean_chart(dim, 10.0),
        phi: zero_mat,
        xi: zero_vec.clone(),
        eta: zero_vec,
        sample_box: vec![(-1.0, 1.0); dim],
    }
}

fn perturbation_term(p: &[Jet], i: usize, eps: f64) -> Jet {
    // diagonal bump ε·(1 + x_i²)
    p[i].mul(&p[i]).add_scalar(1.0).scale(eps)
}

// --- Heisenberg -------------------------------------------------------------

fn heisenberg_model(n: usize, perturb: f64) -> ModelSpace {
    let d = 2 * n + 1;

    let eta_fn = move |p: &[Jet]| -> GeoResult<Vec<Jet>> {
        let (jd, o) = (p[0].dim(), p[0].order());
        let mut eta = vec![Jet::constant(0.0, jd, o); d];
        for i in 0..n {
            eta[i] = p[n + i].scale(-0.5); // η_{xⁱ} = −yⁱ/2
        }
        eta[2 * n] = Jet::constant(0.5, jd, o);
        Ok(eta)
    };

    let metric: ChartMatrixFn = Arc::new(move |p: &[Jet]| {
        let (jd, o) = (p[0].dim(), p[0].order());
        let eta = eta_fn(p)?;
        let mut g = vec![vec![Jet::constant(0.0, jd, o); d]; d];
        for i in 0..2 * n {
            g[i][i] = Jet::constant(0.25, jd, o);
        }
        for i in 0..d {
            for j in 0..d {
                g[i][j] = g[i][j].add(&eta[i].mul(&eta[j]));
            }
        }
        if perturb != 0.0 {
            for i in 0..d {
                g[i][i] = g[i][i].add(&perturbation_term(p, i, perturb));
            }
        }
        Ok(g)
    });

    let phi: ChartMatrixFn = Arc::new(move |p: &[Jet]| {
        let (jd, o) = (p[0].dim(), p[0].order());
        let mut m = vec![vec![Jet::constant(0.0, jd, o); d]; d];
        // φ(∂xʲ) = −∂yʲ, φ(∂yʲ) = ∂xʲ + yʲ∂z, φ(∂z) = 0
        for j in 0..n {
            m[n + j][j] = Jet::constant(-1.0, jd, o);
            m[j][n + j] = Jet::constant(1.0, jd, o);
            m[2 * n][n + j] = p[n + j].clone();
        }
        Ok(m)
    });

    let xi: ChartMapFn = Arc::new(move |p: &[Jet]| {
        let (jd, o) = (p[0].dim(), p[0].order());
        let mut v = vec![Jet::constant(0.0, jd, o); d];
        v[2 * n] = Jet::constant(2.0, jd, o);
        Ok(v)
    });

    ModelSpace {
        kind: ModelKind::Heisenberg,
        n,
        c: -3.0,
        deform_a: None,
        k_ball: None,
        chart: MetricChart {
            dim: d,
            metric,
            domain: vec![(-6.0, 6.0); d],
        },
        phi,
        xi,
        eta: Arc::new(move |p: &[Jet]| eta_fn(p)),
        sample_box: vec![(-0.8, 0.8); d],
    }
}

// --- Spheres ----------------------------------------------------------------
//
// The sphere sits in ℝ^{2n+2} with coordinates ordered in complex pairs
// (u₁,v₁,…,u_{n+1},v_{n+1}); the stereographic chart from the south pole uses
// the first 2n+1 ambient coordinates, the pole coordinate being v_{n+1}.
// F(x) = (2x, 1−|x|²)/(1+|x|²), and 𝒥 acts pairwise by (u,v) ↦ (−v,u).

/// η₀ covector components in the stereographic chart (closed form).
fn sphere_eta0(p: &[Jet], n: usize) -> Vec<Jet> {
    let d = 2 * n + 1;
    let (jd, o) = (p[0].dim(), p[0].order());
    let mut r2 = Jet::constant(0.0, jd, o);
    for x in p.iter().take(d) {
        r2 = r2.add(&x.mul(x));
    }
    let dd = r2.add_scalar(1.0); // 1 + |x|²
    let w = r2.neg().add_scalar(1.0); // 1 − |x|²
    let inv_d2 = dd.mul(&dd).recip().expect("1+|x|² > 0");
    let last = d - 1;

    let mut eta = vec![Jet::constant(0.0, jd, o); d];
    for j in 0..n {
        // pair (2j, 2j+1)
        eta[2 * j] = p[2 * j + 1].scale(4.0).mul(&inv_d2);
        eta[2 * j + 1] = p[2 * j].scale(-4.0).mul(&inv_d2);
    }
    eta[last] = w.scale(2.0).mul(&inv_d2);
    for i in 0..d {
        eta[i] = eta[i].add(&p[last].mul(&p[i]).scale(4.0).mul(&inv_d2));
    }
    eta
}

/// ξ₀ vector components in the stereographic chart (closed form).
fn sphere_xi0(p: &[Jet], n: usize) -> Vec<Jet> {
    let d = 2 * n + 1;
    let (jd, o) = (p[0].dim(), p[0].order());
    let last = d - 1;
    let mut xi = vec![Jet::constant(0.0, jd, o); d];
    for j in 0..n {
        xi[2 * j] = p[2 * j + 1].add(&p[2 * j].mul(&p[last]));
        xi[2 * j + 1] = p[2 * j].neg().add(&p[2 * j + 1].mul(&p[last]));
    }
    let mut r2 = Jet::constant(0.0, jd, o);
    for x in p.iter().take(d) {
        r2 = r2.add(&x.mul(x));
    }
    xi[last] = r2.neg().add_scalar(1.0).scale(0.5).add(&p[last].mul(&p[last]));
    xi
}

fn sphere_model(n: usize, a: f64, perturb: f64, kind: ModelKind) -> ModelSpace {
    let d = 2 * n + 1;
    let c = 4.0 / a - 3.0;

    let metric: ChartMatrixFn = Arc::new(move |p: &[Jet]| {
        let (jd, o) = (p[0].dim(), p[0].order());
        let mut r2 = Jet::constant(0.0, jd, o);
        for x in p.iter().take(d) {
            r2 = r2.add(&x.mul(x));
        }
        let dd = r2.add_scalar(1.0);
        let conf = dd.mul(&dd).recip()?.scale(4.0 * a); // 4a/D²
        let eta0 = sphere_eta0(p, n);
        let mut g = vec![vec![Jet::constant(0.0, jd, o); d]; d];
        for i in 0..d {
            g[i][i] = conf.clone();
        }
        let coef = a * (a - 1.0);
        if coef != 0.0 {
            for i in 0..d {
                for j in 0..d {
                    g[i][j] = g[i][j].add(&eta0[i].mul(&eta0[j]).scale(coef));
                }
            }
        }
        if perturb != 0.0 {
            for i in 0..d {
                g[i][i] = g[i][i].add(&perturbation_term(p, i, perturb));
            }
        }
        Ok(g)
    });

    // φ columns: chart components of s(𝒥 dF e_i), with
    // dF e_i = (2/D)ê_i − (4x_i/D²)X̃,   X̃ = (x, 1),
    // s(W) = W − ⟨W, X⟩X,   dπ(V)_r = (D/2)(V_r − x_r V_pole).
    let phi: ChartMatrixFn = Arc::new(move |p: &[Jet]| {
        let (jd, o) = (p[0].dim(), p[0].order());
        let amb = d + 1;
        let mut r2 = Jet::constant(0.0, jd, o);
        for x in p.iter().take(d) {
            r2 = r2.add(&x.mul(x));
        }
        let dd = r2.add_scalar(1.0);
        let w = r2.neg().add_scalar(1.0);
        let inv_d = dd.recip()?;
        let inv_d2 = inv_d.mul(&inv_d);

        // ambient position X = F(x)
        let mut xamb = Vec::with_capacity(amb);
        for x in p.iter().take(d) {
            xamb.push(x.scale(2.0).mul(&inv_d));
        }
        xamb.push(w.mul(&inv_d));

        let mut cols: Vec<Vec<Jet>> = Vec::with_capacity(d);
        for i in 0..d {
            // W = dF e_i
            let mut wv = vec![Jet::constant(0.0, jd, o); amb];
            for r in 0..d {
                let mut t = p[i].mul(&p[r]).scale(-4.0).mul(&inv_d2);
                if r == i {
                    t = t.add(&inv_d.scale(2.0));
                }
                wv[r] = t;
            }
            wv[d] = p[i].scale(-4.0).mul(&inv_d2);

            // JW, pairwise (u,v) ↦ (−v,u)
            let mut jw = vec![Jet::constant(0.0, jd, o); amb];
            for jpair in 0..(n + 1) {
                jw[2 * jpair] = wv[2 * jpair + 1].neg();
                jw[2 * jpair + 1] = wv[2 * jpair].clone();
            }

            // tangential projection
            let mut dot = Jet::constant(0.0, jd, o);
            for r in 0..amb {
                dot = dot.add(&jw[r].mul(&xamb[r]));
            }
            let tang: Vec<Jet> = (0..amb).map(|r| jw[r].sub(&dot.mul(&xamb[r]))).collect();

            // chart components
            let half_d = dd.scale(0.5);
            let col: Vec<Jet> = (0..d)
                .map(|r| half_d.mul(&tang[r].sub(&p[r].mul(&tang[d]))))
                .collect();
            cols.push(col);
        }

        let mut m = vec![vec![Jet::constant(0.0, jd, o); d]; d];
        for (j, col) in cols.iter().enumerate() {
            for i in 0..d {
                m[i][j] = col[i].clone();
            }
        }
        Ok(m)
    });

    let xi: ChartMapFn = Arc::new(move |p: &[Jet]| {
        Ok(sphere_xi0(p, n).into_iter().map(|j| j.scale(1.0 / a)).collect())
    });
    let eta: ChartMapFn =
        Arc::new(move |p: &[Jet]| Ok(sphere_eta0(p, n).into_iter().map(|j| j.scale(a)).collect()));

    ModelSpace {
        kind,
        n,
        c,
        deform_a: Some(a),
        k_ball: None,
        chart: MetricChart {
            dim: d,
            metric,
            domain: vec![(-3.0, 3.0); d],
        },
        phi,
        xi,
        eta,
        sample_box: vec![(-0.35, 0.35); d],
    }
}

// --- Ball × line ------------------------------------------------------------
//
// Coordinates (x¹..xⁿ, y¹..yⁿ, t). The Bergman-type metric on B^{2n} comes
// from the potential (4/k)·log(1−|z|²) and has holomorphic sectional
// curvature k < 0; the contact form is η = ω + dt with
// ω = μ(Σ yᵅdxᵅ − xᵅdyᵅ)/(1−|z|²), μ = −4/k.

pub(crate) fn ball_omega(p: &[Jet], n: usize, mu: f64) -> GeoResult<Vec<Jet>> {
    let (jd, o) = (p[0].dim(), p[0].order());
    let d = 2 * n + 1;
    let mut s = Jet::constant(0.0, jd, o);
    for x in p.iter().take(2 * n) {
        s = s.add(&x.mul(x));
    }
    if s.value >= 0.95 {
        return Err(GeoError::Domain {
            what: format!("ball model requires |z|² < 1 (got {:.3})", s.value),
            point: p.iter().map(|j| j.value).collect(),
        });
    }
    let inv = s.neg().add_scalar(1.0).recip()?;
    let mut w = vec![Jet::constant(0.0, jd, o); d];
    for al in 0..n {
        w[al] = p[n + al].scale(mu).mul(&inv); // ω_{xᵅ} = μ yᵅ/(1−s)
        w[n + al] = p[al].scale(-mu).mul(&inv); // ω_{yᵅ} = −μ xᵅ/(1−s)
    }
    Ok(w)
}

/// Base Kähler metric blocks: G = [[A, B], [Bᵀ, A]] on (x | y) coordinates.
pub(crate) fn ball_base_metric(p: &[Jet], n: usize, mu: f64) -> GeoResult<Vec<Vec<Jet>>> {
    let (jd, o) = (p[0].dim(), p[0].order());
    let mut s = Jet::constant(0.0, jd, o);
    for x in p.iter().take(2 * n) {
        s = s.add(&x.mul(x));
    }
    if s.value >= 0.95 {
        return Err(GeoError::Domain {
            what: format!("ball model requires |z|² < 1 (got {:.3})", s.value),
            point: p.iter().map(|j| j.value).collect(),
        });
    }
    let one_m = s.neg().add_scalar(1.0);
    let inv2 = one_m.mul(&one_m).recip()?;
    let m = 2 * n;
    let mut g = vec![vec![Jet::constant(0.0, jd, o); m]; m];
    for al in 0..n {
        for be in 0..n {
            // A_{αβ} = μ[δ_{αβ}(1−s) + xᵅxᵝ + yᵅyᵝ]/(1−s)²
            let mut a = p[al].mul(&p[be]).add(&p[n + al].mul(&p[n + be]));
            if al == be {
                a = a.add(&one_m);
            }
            let a = a.scale(mu).mul(&inv2);
            // B_{αβ} = μ(xᵅyᵝ − xᵝyᵅ)/(1−s)²
            let b = p[al]
                .mul(&p[n + be])
                .sub(&p[be].mul(&p[n + al]))
                .scale(mu)
                .mul(&inv2);
            g[al][be] = a.clone();
            g[n + al][n + be] = a;
            g[al][n + be] = b.clone();
            g[n + be][al] = b;
        }
    }
    Ok(g)
}

fn ball_model(n: usize, k: f64, perturb: f64) -> ModelSpace {
    let d = 2 * n + 1;
    let mu = -4.0 / k;

    let eta_fn = move |p: &[Jet]| -> GeoResult<Vec<Jet>> {
        let (jd, o) = (p[0].dim(), p[0].order());
        let mut eta = ball_omega(p, n, mu)?;
        eta[2 * n] = Jet::constant(1.0, jd, o);
        Ok(eta)
    };

    let metric: ChartMatrixFn = Arc::new(move |p: &[Jet]| {
        let (jd, o) = (p[0].dim(), p[0].order());
        let base = ball_base_metric(p, n, mu)?;
        let eta = eta_fn(p)?;
        let mut g = vec![vec![Jet::constant(0.0, jd, o); d]; d];
        for i in 0..2 * n {
            for j in 0..2 * n {
                g[i][j] = base[i][j].clone();
            }
        }
        for i in 0..d {
            for j in 0..d {
                g[i][j] = g[i][j].add(&eta[i].mul(&eta[j]));
            }
        }
        if perturb != 0.0 {
            for i in 0..d {
                g[i][i] = g[i][i].add(&perturbation_term(p, i, perturb));
            }
        }
        Ok(g)
    });

    // φU = (J dπU)^H: J∂xᵅ = ∂yᵅ, J∂yᵅ = −∂xᵅ, t-row = −ω∘J, φ∂t = 0.
    let phi: ChartMatrixFn = Arc::new(move |p: &[Jet]| {
        let (jd, o) = (p[0].dim(), p[0].order());
        let w = ball_omega(p, n, mu)?;
        let mut m = vec![vec![Jet::constant(0.0, jd, o); d]; d];
        for al in 0..n {
            m[n + al][al] = Jet::constant(1.0, jd, o); // φ∂xᵅ ⊃ ∂yᵅ
            m[al][n + al] = Jet::constant(-1.0, jd, o); // φ∂yᵅ ⊃ −∂xᵅ
            m[2 * n][al] = w[n + al].neg(); // −ω(J∂xᵅ) = −ω_{yᵅ}
            m[2 * n][n + al] = w[al].clone(); // −ω(J∂yᵅ) = +ω_{xᵅ}
        }
        Ok(m)
    });

    let xi: ChartMapFn = Arc::new(move |p: &[Jet]| {
        let (jd, o) = (p[0].dim(), p[0].order());
        let mut v = vec![Jet::constant(0.0, jd, o); d];
        v[2 * n] = Jet::constant(1.0, jd, o);
        Ok(v)
    });

    // the per-coordinate box is loose; the |z|² < 0.95 guard inside the
    // metric closure is the effective boundary of the ball factor
    let mut domain = vec![(-0.97, 0.97); d];
    domain[2 * n] = (-5.0, 5.0);
    let mut sample_box = vec![(-0.2, 0.2); d];
    sample_box[2 * n] = (-0.8, 0.8);

    ModelSpace {
        kind: ModelKind::BallTimesLine,
        n,
        c: k - 3.0,
        deform_a: None,
        k_ball: Some(k),
        chart: MetricChart {
            dim: d,
            metric,
            domain,
        },
        phi,
        xi,
        eta: Arc::new(move |p: &[Jet]| eta_fn(p)),
        sample_box,
    }
}

// ---------------------------------------------------------------------------
// Structure residuals
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct StructureResiduals {
    /// φ² + I − ξ⊗η
    pub phi_square: f64,
    /// ⟨φU,φV⟩ − ⟨U,V⟩ + η(U)η(V)
    pub compatibility: f64,
    /// dη(U,V) − ⟨U,φV⟩ (halved exterior derivative)
    pub contact: f64,
    /// Nijenhuis normality N_φ + 2dη⊗ξ
    pub normality: f64,
    /// (∇_Uφ)V − ⟨U,V⟩ξ + η(V)U
    pub sasaki: f64,
    /// ∇_Uξ + φU
    pub xi_derivative: f64,
    /// η(ξ) − 1, φξ, η∘φ
    pub algebraic: f64,
}

impl StructureResiduals {
    pub fn max(&self) -> f64 {
        [
            self.phi_square,
            self.compatibility,
            self.contact,
            self.normality,
            self.sasaki,
            self.xi_derivative,
            self.algebraic,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn structure_residuals(m: &ModelSpace, p: &[f64]) -> GeoResult<StructureResiduals> {
    let mp = m.eval_point(p, 1)?;
    let d = m.dim();
    let g = &mp.g;
    let phi = &mp.phi;
    let eta = &mp.eta;
    let xi = &mp.xi;
    let gamma = &mp.gamma;

    let mut phi_square = 0.0f64;
    let mut compatibility = 0.0f64;
    let mut contact = 0.0f64;
    let mut normality = 0.0f64;
    let mut sasaki = 0.0f64;
    let mut xi_derivative = 0.0f64;
    let mut algebraic = 0.0f64;

    let is_flat = m.kind == ModelKind::Euclidean;

    // algebraic identities
    if !is_flat {
        let eta_xi: f64 = (0..d).map(|i| eta[i].value * xi[i].value).sum();
        algebraic = algebraic.max((eta_xi - 1.0).abs());
    }
    for k in 0..d {
        let phixi: f64 = (0..d).map(|j| phi[k][j].value * xi[j].value).sum();
        algebraic = algebraic.max(phixi.abs());
        let etaphi: f64 = (0..d).map(|i| eta[i].value * phi[i][k].value).sum();
        algebraic = algebraic.max(etaphi.abs());
    }

    for i in 0..d {
        for j in 0..d {
            // φ² + I − ξ⊗η
            if !is_flat {
                let mut pp: f64 = (0..d).map(|s| phi[i][s].value * phi[s][j].value).sum();
                if i == j {
                    pp += 1.0;
                }
                pp -= xi[i].value * eta[j].value;
                phi_square = phi_square.max(pp.abs());
            }

            // compatibility ⟨φ∂_i, φ∂_j⟩ − g_{ij} + η_iη_j
            if !is_flat {
                let mut cmp = -g[i][j].value + eta[i].value * eta[j].value;
                for s in 0..d {
                    for t in 0..d {
                        cmp += phi[s][i].value * g[s][t].value * phi[t][j].value;
                    }
                }
                compatibility = compatibility.max(cmp.abs());
            }

            // contact: ½(∂_i η_j − ∂_j η_i) = g(∂_i, φ∂_j)
            if !is_flat {
                let deta = 0.5 * (eta[j].first[i] - eta[i].first[j]);
                let gphi: f64 = (0..d).map(|s| g[i][s].value * phi[s][j].value).sum();
                contact = contact.max((deta - gphi).abs());
            }

            // Nijenhuis normality, coordinate fields
            for k in 0..d {
                let mut nij = 0.0;
                for s in 0..d {
                    nij += phi[s][i].value * phi[k][j].first[s]
                        - phi[s][j].value * phi[k][i].first[s]
                        + phi[s][i].first[j] * phi[k][s].value
                        - phi[s][j].first[i] * phi[k][s].value;
                }
                nij += (eta[j].first[i] - eta[i].first[j]) * xi[k].value;
                normality = normality.max(nij.abs());
            }

            // Sasakian identity (∇_iφ)^k_j = g_{ij}ξ^k − η_j δ^k_i
            for k in 0..d {
                let mut nab = phi[k][j].first[i];
                for s in 0..d {
                    nab += gamma[k][i][s] * phi[s][j].value - gamma[s][i][j] * phi[k][s].value;
                }
                if !is_flat {
                    nab -= g[i][j].value * xi[k].value;
                    if k == i {
                        nab += eta[j].value;
                    }
                }
                sasaki = sasaki.max(nab.abs());
            }
        }

        // ∇_iξ + φ∂_i
        for k in 0..d {
            let mut r = xi[k].first[i] + phi[k][i].value;
            for s in 0..d {
                r += gamma[k][i][s] * xi[s].value;
            }
            if is_flat {
                r -= phi[k][i].value;
            }
            xi_derivative = xi_derivative.max(r.abs());
        }
    }

    Ok(StructureResiduals {
        phi_square,
        compatibility,
        contact,
        normality,
        sasaki,
        xi_derivative,
        algebraic,
    })
}

/// Sectional curvature of span(U, φU) for unit U ⊥ ξ.
pub fn phi_sectional(m: &ModelSpace, p: &[f64], u: &[f64]) -> GeoResult<f64> {
    let mp = m.eval_point(p, 0)?;
    let g = mp.g_values();
    let nu = norm(&g, u);
    let eta_u = mp.eta_of(u);
    if eta_u.abs() > 1e-10 * nu.max(1.0) {
        return Err(GeoError::Precondition {
            what: "φ-sectional direction must be orthogonal to ξ".into(),
            residual: eta_u.abs(),
        });
    }
    if (nu - 1.0).abs() > 1e-8 {
        return Err(GeoError::Precondition {
            what: "φ-sectional direction must be unit".into(),
            residual: (nu - 1.0).abs(),
        });
    }
    let phiu = mp.phi_of(u);
    let r = riemann(&m.chart, p)?;
    sectional_from(&g, &r, u, &phiu)
}

/// Unit vector orthogonal to ξ from a raw sample (model metric).
pub fn orthonormalize_against_xi(mp: &ModelPoint, raw: &[f64]) -> Option<Vec<f64>> {
    let g = mp.g_values();
    let xi = mp.xi_values();
    let d = raw.len();
    let mut v: Vec<f64> = raw.to_vec();
    let proj = inner(&g, &v, &xi); // |ξ| = 1
    for i in 0..d {
        v[i] -= proj * xi[i];
    }
    let nv = norm(&g, &v);
    if nv < 1e-6 {
        return None;
    }
    Some(v.iter().map(|x| x / nv).collect())
}

/// Right side of the space-form curvature expression, assembled from the
/// structure tensors with the given φ-sectional constant.
pub fn curvature_rhs(mp: &ModelPoint, c: f64, u: &[f64], v: &[f64], w: &[f64]) -> Vec<f64> {
    let d = u.len();
    let g = mp.g_values();
    let wu = inner(&g, w, u);
    let wv = inner(&g, w, v);
    let eu = mp.eta_of(u);
    let ev = mp.eta_of(v);
    let ew = mp.eta_of(w);
    let phi_u = mp.phi_of(u);
    let phi_v = mp.phi_of(v);
    let phi_w = mp.phi_of(w);
    let w_phiv = inner(&g, w, &phi_v);
    let w_phiu = inner(&g, w, &phi_u);
    let u_phiv = inner(&g, u, &phi_v);
    let xi = mp.xi_values();

    let mut out = vec![0.0; d];
    let q1 = (c + 3.0) / 4.0;
    let q2 = (c - 1.0) / 4.0;
    for i in 0..d {
        out[i] += q1 * (wv * u[i] - wu * v[i]);
        out[i] += q2
            * (ew * eu * v[i] - ew * ev * u[i] + wu * ev * xi[i] - wv * eu * xi[i]
                + w_phiv * phi_u[i]
                - w_phiu * phi_v[i]
                + 2.0 * u_phiv * phi_w[i]);
    }
    out
}

/// Max-norm difference between the curvature tensor of the chart metric and
/// the space-form expression with constant `c_used`.
pub fn curvature_formula_residual_with(
    m: &ModelSpace,
    p: &[f64],
    u: &[f64],
    v: &[f64],
    w: &[f64],
    c_used: f64,
) -> GeoResult<f64> {
    let mp = m.eval_point(p, 0)?;
    let r = riemann(&m.chart, p)?;
    let lhs = r.apply(u, v, w);
    let rhs = curvature_rhs(&mp, c_used, u, v, w);
    Ok(lhs
        .iter()
        .zip(rhs.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

pub fn curvature_formula_residual(
    m: &ModelSpace,
    p: &[f64],
    u: &[f64],
    v: &[f64],
    w: &[f64],
) -> GeoResult<f64> {
    curvature_formula_residual_with(m, p, u, v, w, m.c)
}

/// Okumura's torsion 𝒯 and the curvature of the associated connection.
pub struct OkumuraData<'a> {
    pub model: &'a ModelSpace,
    /// Flip the sign of the −η(U)φV term (detector demonstrations).
    pub flip_sign: bool,
}

impl<'a> OkumuraData<'a> {
    pub fn new(model: &'a ModelSpace) -> Self {
        OkumuraData {
            model,
            flip_sign: false,
        }
    }

    /// 𝒯_U V = ⟨U, φV⟩ξ − η(U)φV + η(V)φU at an evaluated point.
    pub fn torsion_at(&self, mp: &ModelPoint, u: &[f64], v: &[f64]) -> Vec<f64> {
        let d = u.len();
        let g = mp.g_values();
        let phi_u = mp.phi_of(u);
        let phi_v = mp.phi_of(v);
        let xi = mp.xi_values();
        let s = inner(&g, u, &phi_v);
        let eu = mp.eta_of(u);
        let ev = mp.eta_of(v);
        let sign = if self.flip_sign { 1.0 } else { -1.0 };
        (0..d)
            .map(|i| s * xi[i] + sign * eu * phi_v[i] + ev * phi_u[i])
            .collect()
    }

    pub fn torsion(&self, p: &[f64], u: &[f64], v: &[f64]) -> GeoResult<Vec<f64>> {
        let mp = self.model.eval_point(p, 0)?;
        Ok(self.torsion_at(&mp, u, v))
    }

    /// R̄(U,V)W of the Okumura connection.
    pub fn rbar(&self, p: &[f64], u: &[f64], v: &[f64], w: &[f64]) -> GeoResult<Vec<f64>> {
        let mp = self.model.eval_point(p, 0)?;
        let r = riemann(&self.model.chart, p)?;
        let g = mp.g_values();
        let d = u.len();
        let rn = r.apply(u, v, w);
        let phi_u = mp.phi_of(u);
        let phi_v = mp.phi_of(v);
        let phi_w = mp.phi_of(w);
        let xi = mp.xi_values();
        let (eu, ev, ew) = (mp.eta_of(u), mp.eta_of(v), mp.eta_of(w));
        let pv_w = inner(&g, &phi_v, w);
        let pu_w = inner(&g, &phi_u, w);
        let pu_v = inner(&g, &phi_u, v);
        let uw = inner(&g, u, w);
        let vw = inner(&g, v, w);
        Ok((0..d)
            .map(|i| {
                rn[i] + ew * (eu * v[i] - ev * u[i]) + pv_w * phi_u[i] - pu_w * phi_v[i]
                    + 2.0 * pu_v * phi_w[i]
                    + (uw * ev - vw * eu) * xi[i]
            })
            .collect())
    }
}

/// |𝒯_v v|, which vanishes identically; confirms that the Okumura connection
/// has the same geodesics as the Levi-Civita connection.
pub fn okumura_geodesic_check(m: &ModelSpace, p: &[f64], v: &[f64]) -> GeoResult<f64> {
    let ok = OkumuraData::new(m);
    let mp = m.eval_point(p, 0)?;
    let t = ok.torsion_at(&mp, v, v);
    let g = mp.g_values();
    Ok(norm(&g, &t))
}

/// Max-norm of (∇_U R)(X,Y)Z + 𝒯_U R(X,Y)Z − R(𝒯_UX,Y)Z − R(X,𝒯_UY)Z − R(X,Y)𝒯_UZ.
pub fn phi_symmetry_residual(
    m: &ModelSpace,
    p: &[f64],
    u: &[f64],
    x: &[f64],
    y: &[f64],
    z: &[f64],
) -> GeoResult<f64> {
    let mp = m.eval_point(p, 0)?;
    let r = riemann(&m.chart, p)?;
    let nr = nabla_riemann(&m.chart, p, u)?;
    let ok = OkumuraData::new(m);

    let lhs = nr.apply(x, y, z);
    let rxyz = r.apply(x, y, z);
    let t_rxyz = ok.torsion_at(&mp, u, &rxyz);
    let tx = ok.torsion_at(&mp, u, x);
    let ty = ok.torsion_at(&mp, u, y);
    let tz = ok.torsion_at(&mp, u, z);
    let r1 = r.apply(&tx, y, z);
    let r2 = r.apply(x, &ty, z);
    let r3 = r.apply(x, y, &tz);

    Ok((0..u.len())
        .map(|i| (lhs[i] + t_rxyz[i] - r1[i] - r2[i] - r3[i]).abs())
        .fold(0.0, f64::max))
}

/// dω − Ω on the ball factor, with Ω(X,Y) = G(X, JY); sampled pointwise.
pub fn ball_exactness_residual(m: &ModelSpace, p: &[f64]) -> GeoResult<f64> {
    if m.kind != ModelKind::BallTimesLine {
        return Err(GeoError::Unsupported(
            "exactness check applies to the ball model".into(),
        ));
    }
    let n = m.n;
    let mu = -4.0 / m.k_ball.unwrap();
    let seeds = seed_independents(&p[..2 * n], 1)?;
    let omega = ball_omega(&seeds, n, mu)?;
    let gb = ball_base_metric(&seeds, n, mu)?;
    let mb = 2 * n;
    // J on base columns: J∂xᵅ = ∂yᵅ, J∂yᵅ = −∂xᵅ
    let jmat = |i: usize, j: usize| -> f64 {
        if j < n && i == j + n {
            1.0
        } else if j >= n && i == j - n {
            -1.0
        } else {
            0.0
        }
    };
    let mut res = 0.0f64;
    for i in 0..mb {
        for j in 0..mb {
            let domega = 0.5 * (omega[j].first[i] - omega[i].first[j]);
            let mut big_omega = 0.0;
            for s in 0..mb {
                big_omega += gb[i][s].value * jmat(s, j);
            }
            res = res.max((domega - big_omega).abs());
        }
    }
    Ok(res)
}


// ---------------------------------------------------------------------------
// Verification suites
// ---------------------------------------------------------------------------

/// Residual statistics for the full model verification suite: structure
/// axioms at `n_points` seeded samples, the space-form curvature expression
/// over coordinate triples, φ-sectional constancy over random directions, and
/// the φ-symmetry identity at a third-derivative subsample.
pub struct ModelSuite {
    pub structure: Vec<f64>,
    pub curvature_formula: Vec<f64>,
    pub phi_sectional_spread: Vec<f64>,
    pub phi_sectional_mean_dev: Vec<f64>,
    pub phi_symmetry: Vec<f64>,
}

pub fn run_model_suite(
    m: &ModelSpace,
    n_points: usize,
    n_dirs: usize,
    n_sym_points: usize,
    seed: u64,
) -> GeoResult<ModelSuite> {
    let points = m.sample_points(n_points, seed);
    let d = m.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);

    let mut structure = Vec::with_capacity(points.len());
    let mut curvature_formula = Vec::with_capacity(points.len());
    let mut spread = Vec::with_capacity(points.len());
    let mut mean_dev = Vec::with_capacity(points.len());

    for p in &points {
        structure.push(structure_residuals(m, p)?.max());

        let mp = m.eval_point(p, 0)?;
        let r = riemann(&m.chart, p)?;
        // curvature expression over all coordinate triples
        let mut worst = 0.0f64;
        let mut basis = vec![vec![0.0; d]; d];
        for (i, e) in basis.iter_mut().enumerate() {
            e[i] = 1.0;
        }
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let lhs = r.apply(&basis[i], &basis[j], &basis[k]);
                    let rhs = curvature_rhs(&mp, m.c, &basis[i], &basis[j], &basis[k]);
                    for (a, b) in lhs.iter().zip(rhs.iter()) {
                        worst = worst.max((a - b).abs());
                    }
                }
            }
        }
        curvature_formula.push(worst);

        // φ-sectional curvature over random directions
        let g = mp.g_values();
        let mut secs = Vec::with_capacity(n_dirs);
        while secs.len() < n_dirs {
            let raw = m.sample_vector(&mut rng);
            let Some(u) = orthonormalize_against_xi(&mp, &raw) else {
                continue;
            };
            let phiu = mp.phi_of(&u);
            secs.push(sectional_from(&g, &r, &u, &phiu)?);
        }
        let max = secs.iter().copied().fold(f64::MIN, f64::max);
        let min = secs.iter().copied().fold(f64::MAX, f64::min);
        spread.push(max - min);
        let mean = secs.iter().sum::<f64>() / secs.len() as f64;
        mean_dev.push((mean - m.c).abs());
    }

    // φ-symmetry at a subsample (third-order jets)
    let mut phi_symmetry = Vec::with_capacity(n_sym_points);
    for p in points.iter().take(n_sym_points) {
        let mut worst = 0.0f64;
        for _ in 0..4 {
            let pick = |rng: &mut ChaCha8Rng| -> Vec<f64> {
                let mut v = vec![0.0; d];
                v[rng.gen_range(0..d)] = 1.0;
                v
            };
            let u = pick(&mut rng);
            let x = pick(&mut rng);
            let y = pick(&mut rng);
            let z = pick(&mut rng);
            worst = worst.max(phi_symmetry_residual(m, p, &u, &x, &y, &z)?);
        }
        phi_symmetry.push(worst);
    }

    Ok(ModelSuite {
        structure,
        curvature_formula,
        phi_sectional_spread: spread,
        phi_sectional_mean_dev: mean_dev,
        phi_symmetry,
    })
}
