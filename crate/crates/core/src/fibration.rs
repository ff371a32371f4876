//! The fibration of each model space over its space of ξ-orbits: projection,
//! horizontal lifts, the submersion equation for lifted fields, and Hopf
//! cylinders (preimages of base curves).
//!
//! Base spaces: complex projective space with the Fubini–Study metric scaled
//! to holomorphic sectional curvature `c + 3` (sphere models, affine chart
//! `w = z/z_{n+1}`), flat `ℂⁿ` (Heisenberg), and the Bergman ball
//! (ball × line). In every case `J = dπ ∘ φ ∘ lift`.

use std::sync::Arc;

use crate::curve::{gram_schmidt_in_metric, synthesize_curve, CurveSample};
use crate::error::{GeoError, GeoResult};
use crate::flows::{FieldFn, FlowSurface};
use crate::jet::Jet;
use crate::metric::{
    christoffel, christoffel_at_jets, covariant_derivative, inner, norm, ChartMapFn,
    ChartMatrixFn, MetricChart, TangentVector,
};
use crate::models::{ModelKind, ModelSpace};
use crate::surface::SurfacePatch;

pub type LiftFn = Arc<dyn Fn(&[Jet], &[Jet]) -> GeoResult<Vec<Jet>> + Send + Sync>;
pub type SectionFn = Arc<dyn Fn(&[f64]) -> GeoResult<Vec<f64>> + Send + Sync>;

pub struct FibrationData {
    pub model: Arc<ModelSpace>,
    pub base_dim: usize,
    /// Total chart point → base chart point.
    pub project: ChartMapFn,
    pub base_chart: MetricChart,
    /// Base complex structure, `j[i][k] = (J ∂_k)^i`.
    pub base_j: ChartMatrixFn,
    /// (total point jets, base vector jets) → horizontal lift jets.
    pub lift: LiftFn,
    /// One point of the fiber over a base point.
    pub section: SectionFn,
    /// Holomorphic sectional curvature of the base, `c + 3`.
    pub hol_curvature: f64,
}

impl FibrationData {
    pub fn project_point(&self, p: &[f64]) -> GeoResult<Vec<f64>> {
        let jets: Vec<Jet> = p.iter().map(|&v| Jet::constant(v, 1, 0)).collect();
        Ok((self.project)(&jets)?.into_iter().map(|j| j.value).collect())
    }

    pub fn base_j_values(&self, w: &[f64]) -> GeoResult<Vec<Vec<f64>>> {
        let jets: Vec<Jet> = w.iter().map(|&v| Jet::constant(v, 1, 0)).collect();
        Ok((self.base_j)(&jets)?
            .into_iter()
            .map(|row| row.into_iter().map(|j| j.value).collect())
            .collect())
    }

    /// dπ(ξ) at a total point (should vanish).
    pub fn vertical_residual(&self, p: &[f64]) -> GeoResult<f64> {
        let seeds = crate::jet::seed_independents(p, 1)?;
        let w = (self.project)(&seeds)?;
        let mp = self.model.eval_point(p, 0)?;
        let xi = mp.xi_values();
        let mut worst = 0.0f64;
        for comp in &w {
            let v: f64 = (0..p.len()).map(|k| comp.first[k] * xi[k]).sum();
            worst = worst.max(v.abs());
        }
        Ok(worst)
    }
}

// ---------------------------------------------------------------------------
// Construction per model kind
// ---------------------------------------------------------------------------

/// Real form of a Hermitian matrix h = A + iB on coordinates (x | y):
/// G = [[A, B], [Bᵀ, A]] with Bᵀ = −B.
fn hermitian_to_real(a: &[Vec<Jet>], b: &[Vec<Jet>], scale: f64) -> Vec<Vec<Jet>> {
    let n = a.len();
    let (jd, o) = (a[0][0].dim(), a[0][0].order());
    let m = 2 * n;
    let mut g = vec![vec![Jet::constant(0.0, jd, o); m]; m];
    for al in 0..n {
        for be in 0..n {
            g[al][be] = a[al][be].scale(scale);
            g[n + al][n + be] = a[al][be].scale(scale);
            g[al][n + be] = b[al][be].scale(scale);
            g[n + be][al] = b[al][be].scale(scale);
        }
    }
    g
}

pub fn make_fibration(model: Arc<ModelSpace>) -> GeoResult<FibrationData> {
    match model.kind {
        ModelKind::Heisenberg => make_heisenberg_fibration(model),
        ModelKind::StandardSphere | ModelKind::DeformedSphere => make_sphere_fibration(model),
        ModelKind::BallTimesLine => make_ball_fibration(model),
        ModelKind::Euclidean => Err(GeoError::Unsupported(
            "the flat test chart has no orbit fibration".into(),
        )),
    }
}

fn make_heisenberg_fibration(model: Arc<ModelSpace>) -> GeoResult<FibrationData> {
    let n = model.n;
    let base_dim = 2 * n;

    let project: ChartMapFn = Arc::new(move |p: &[Jet]| Ok(p[0..2 * n].to_vec()));

    let base_metric: crate::metric::ChartMatrixFn = Arc::new(move |w: &[Jet]| {
        let (jd, o) = (w[0].dim(), w[0].order());
        let mut g = vec![vec![Jet::constant(0.0, jd, o); 2 * n]; 2 * n];
        for (i, row) in g.iter_mut().enumerate() {
            row[i] = Jet::constant(0.25, jd, o);
        }
        Ok(g)
    });

    // J dπ = dπ φ : J∂x = −∂y, J∂y = ∂x
    let base_j: ChartMatrixFn = Arc::new(move |w: &[Jet]| {
        let (jd, o) = (w[0].dim(), w[0].order());
        let mut m = vec![vec![Jet::constant(0.0, jd, o); 2 * n]; 2 * n];
        for al in 0..n {
            m[n + al][al] = Jet::constant(-1.0, jd, o);
            m[al][n + al] = Jet::constant(1.0, jd, o);
        }
        Ok(m)
    });

    // η(U) = 0 ⇔ U_z = Σ yⁱ U_{xⁱ}
    let lift: LiftFn = Arc::new(move |p: &[Jet], b: &[Jet]| {
        let (jd, o) = (p[0].dim(), p[0].order().min(b[0].order()));
        let mut out: Vec<Jet> = b.iter().map(|x| x.clone().truncated(o)).collect();
        let mut z = Jet::constant(0.0, jd, o);
        for i in 0..n {
            z = z.add(&p[n + i].mul(&b[i]));
        }
        out.push(z);
        Ok(out)
    });

    let section: SectionFn = Arc::new(move |w: &[f64]| {
        let mut p = w.to_vec();
        p.push(0.0);
        Ok(p)
    });

    Ok(FibrationData {
        model,
        base_dim,
        project,
        base_chart: MetricChart {
            dim: base_dim,
            metric: base_metric,
            domain: vec![(-20.0, 20.0); base_dim],
        },
        base_j,
        lift,
        section,
        hol_curvature: 0.0,
    })
}

fn make_ball_fibration(model: Arc<ModelSpace>) -> GeoResult<FibrationData> {
    let n = model.n;
    let base_dim = 2 * n;
    let k = model.k_ball.unwrap();
    let mu = -4.0 / k;

    let project: ChartMapFn = Arc::new(move |p: &[Jet]| Ok(p[0..2 * n].to_vec()));

    let base_metric: crate::metric::ChartMatrixFn =
        Arc::new(move |w: &[Jet]| crate::models::ball_base_metric(w, n, mu));

    let base_j: ChartMatrixFn = Arc::new(move |w: &[Jet]| {
        let (jd, o) = (w[0].dim(), w[0].order());
        let mut m = vec![vec![Jet::constant(0.0, jd, o); 2 * n]; 2 * n];
        for al in 0..n {
            m[n + al][al] = Jet::constant(1.0, jd, o); // J∂x = ∂y
            m[al][n + al] = Jet::constant(-1.0, jd, o); // J∂y = −∂x
        }
        Ok(m)
    });

    // η(U) = ω(U_base) + U_t = 0
    let lift: LiftFn = Arc::new(move |p: &[Jet], b: &[Jet]| {
        let o = p[0].order().min(b[0].order());
        let mut out: Vec<Jet> = b.iter().map(|x| x.clone().truncated(o)).collect();
        let omega = crate::models::ball_omega(p, n, mu)?;
        let mut t = Jet::constant(0.0, p[0].dim(), o);
        for i in 0..2 * n {
            t = t.sub(&omega[i].mul(&b[i]));
        }
        out.push(t);
        Ok(out)
    });

    let section: SectionFn = Arc::new(move |w: &[f64]| {
        let mut p = w.to_vec();
        p.push(0.0);
        Ok(p)
    });

    let base_domain = vec![(-0.97, 0.97); base_dim];

    Ok(FibrationData {
        model,
        base_dim,
        project,
        base_chart: MetricChart {
            dim: base_dim,
            metric: base_metric,
            domain: base_domain,
        },
        base_j,
        lift,
        section,
        hol_curvature: k,
    })
}

/// Ambient sphere position as complex pairs (re, im) from stereographic
/// chart jets.
fn sphere_ambient_complex(p: &[Jet], n: usize) -> GeoResult<(Vec<Jet>, Vec<Jet>)> {
    let d = 2 * n + 1;
    let (jd, o) = (p[0].dim(), p[0].order());
    let mut r2 = Jet::constant(0.0, jd, o);
    for x in p.iter().take(d) {
        r2 = r2.add(&x.mul(x));
    }
    let inv_d = r2.add_scalar(1.0).recip()?;
    let w = r2.neg().add_scalar(1.0);
    // z_{j+1} = X_{2j} + i X_{2j+1}; pole coordinate is Im z_{n+1}
    let mut re = Vec::with_capacity(n + 1);
    let mut im = Vec::with_capacity(n + 1);
    for j in 0..n {
        re.push(p[2 * j].scale(2.0).mul(&inv_d));
        im.push(p[2 * j + 1].scale(2.0).mul(&inv_d));
    }
    re.push(p[2 * n].scale(2.0).mul(&inv_d));
    im.push(w.mul(&inv_d));
    Ok((re, im))
}

fn make_sphere_fibration(model: Arc<ModelSpace>) -> GeoResult<FibrationData> {
    let n = model.n;
    let base_dim = 2 * n;
    let a = model.deform_a.unwrap_or(1.0);
    let d = 2 * n + 1;

    // w_α = z_α / z_{n+1} → (Re w | Im w)
    let project: ChartMapFn = Arc::new(move |p: &[Jet]| {
        let (re, im) = sphere_ambient_complex(p, n)?;
        let nrm = re[n].mul(&re[n]).add(&im[n].mul(&im[n]));
        let inv = nrm.recip()?;
        let mut out = Vec::with_capacity(2 * n);
        for al in 0..n {
            out.push(
                re[al]
                    .mul(&re[n])
                    .add(&im[al].mul(&im[n]))
                    .mul(&inv),
            );
        }
        for al in 0..n {
            out.push(
                im[al]
                    .mul(&re[n])
                    .sub(&re[al].mul(&im[n]))
                    .mul(&inv),
            );
        }
        Ok(out)
    });

    // Fubini–Study scaled by a: h = δ/(1+|w|²) − w̄ᵅwᵝ/(1+|w|²)²
    let base_metric: crate::metric::ChartMatrixFn = Arc::new(move |w: &[Jet]| {
        let (jd, o) = (w[0].dim(), w[0].order());
        let mut s = Jet::constant(0.0, jd, o);
        for x in w.iter().take(2 * n) {
            s = s.add(&x.mul(x));
        }
        let one_p = s.add_scalar(1.0);
        let inv1 = one_p.recip()?;
        let inv2 = inv1.mul(&inv1);
        let mut a_re = vec![vec![Jet::constant(0.0, jd, o); n]; n];
        let mut b_im = vec![vec![Jet::constant(0.0, jd, o); n]; n];
        for al in 0..n {
            for be in 0..n {
                let mut t = w[al]
                    .mul(&w[be])
                    .add(&w[n + al].mul(&w[n + be]))
                    .neg()
                    .mul(&inv2);
                if al == be {
                    t = t.add(&inv1);
                }
                a_re[al][be] = t;
                b_im[al][be] = w[al]
                    .mul(&w[n + be])
                    .sub(&w[be].mul(&w[n + al]))
                    .neg()
                    .mul(&inv2);
            }
        }
        Ok(hermitian_to_real(&a_re, &b_im, a))
    });

    // π holomorphic: J = i in the affine chart.
    let base_j: ChartMatrixFn = Arc::new(move |w: &[Jet]| {
        let (jd, o) = (w[0].dim(), w[0].order());
        let mut m = vec![vec![Jet::constant(0.0, jd, o); 2 * n]; 2 * n];
        for al in 0..n {
            m[n + al][al] = Jet::constant(1.0, jd, o); // J∂p = ∂q
            m[al][n + al] = Jet::constant(-1.0, jd, o);
        }
        Ok(m)
    });

    // W = ζ(b_aug − ⟨b_aug, z⟩_H z), realified, then to chart coordinates.
    let lift: LiftFn = Arc::new(move |p: &[Jet], b: &[Jet]| {
        let o = p[0].order().min(b[0].order());
        let jd = p[0].dim();
        let (zre, zim) = sphere_ambient_complex(p, n)?;
        // c = Σ b_α conj(z_α)
        let mut cre = Jet::constant(0.0, jd, o);
        let mut cim = Jet::constant(0.0, jd, o);
        for al in 0..n {
            let br = &b[al];
            let bi = &b[n + al];
            cre = cre.add(&br.mul(&zre[al])).add(&bi.mul(&zim[al]));
            cim = cim.add(&bi.mul(&zre[al])).sub(&br.mul(&zim[al]));
        }
        // complex products W_α = ζ(b_α − c z_α); W_n = −c ζ²
        let zeta_re = &zre[n];
        let zeta_im = &zim[n];
        let mut amb_re = Vec::with_capacity(n + 1);
        let mut amb_im = Vec::with_capacity(n + 1);
        for al in 0..n {
            let tr = b[al].sub(&cre.mul(&zre[al]).sub(&cim.mul(&zim[al])));
            let ti = b[n + al].sub(&cre.mul(&zim[al]).add(&cim.mul(&zre[al])));
            amb_re.push(zeta_re.mul(&tr).sub(&zeta_im.mul(&ti)));
            amb_im.push(zeta_re.mul(&ti).add(&zeta_im.mul(&tr)));
        }
        let z2_re = zeta_re.mul(zeta_re).sub(&zeta_im.mul(zeta_im));
        let z2_im = zeta_re.mul(zeta_im).scale(2.0);
        amb_re.push(cre.mul(&z2_re).sub(&cim.mul(&z2_im)).neg());
        amb_im.push(cre.mul(&z2_im).add(&cim.mul(&z2_re)).neg());

        // ambient vector (pairs), then dπ_stereo
        let mut amb = Vec::with_capacity(2 * n + 2);
        for j in 0..=n {
            amb.push(amb_re[j].clone());
            amb.push(amb_im[j].clone());
        }
        let mut r2 = Jet::constant(0.0, jd, o);
        for x in p.iter().take(d) {
            r2 = r2.add(&x.mul(x).truncated(o));
        }
        let half_d = r2.add_scalar(1.0).scale(0.5);
        let out: Vec<Jet> = (0..d)
            .map(|r| half_d.mul(&amb[r].sub(&p[r].clone().truncated(o).mul(&amb[d]))))
            .collect();
        Ok(out)
    });

    // fiber point over w: z = i(w, 1)/√(1+|w|²)
    let section: SectionFn = Arc::new(move |w: &[f64]| {
        let s: f64 = w.iter().map(|x| x * x).sum();
        let nrm = (1.0 + s).sqrt();
        let mut amb = vec![0.0; 2 * n + 2];
        for al in 0..n {
            amb[2 * al] = -w[n + al] / nrm;
            amb[2 * al + 1] = w[al] / nrm;
        }
        amb[2 * n] = 0.0;
        amb[2 * n + 1] = 1.0 / nrm;
        let denom = 1.0 + amb[2 * n + 1];
        Ok((0..2 * n + 1).map(|i| amb[i] / denom).collect())
    });

    Ok(FibrationData {
        model,
        base_dim,
        project,
        base_chart: MetricChart {
            dim: base_dim,
            metric: base_metric,
            domain: vec![(-12.0, 12.0); base_dim],
        },
        base_j,
        lift,
        section,
        hol_curvature: 4.0 / a,
    })
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

pub fn horizontal_lift(
    fib: &FibrationData,
    base_vector: &TangentVector,
    total_point: &[f64],
) -> GeoResult<TangentVector> {
    let w = fib.project_point(total_point)?;
    let mismatch = w
        .iter()
        .zip(base_vector.base.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if mismatch > 1e-8 {
        return Err(GeoError::Precondition {
            what: "total point does not project to the base point of the vector".into(),
            residual: mismatch,
        });
    }
    let p_jets: Vec<Jet> = total_point.iter().map(|&v| Jet::constant(v, 1, 0)).collect();
    let b_jets: Vec<Jet> = base_vector
        .components
        .iter()
        .map(|&v| Jet::constant(v, 1, 0))
        .collect();
    let lift = (fib.lift)(&p_jets, &b_jets)?;
    Ok(TangentVector::new(
        total_point.to_vec(),
        lift.into_iter().map(|j| j.value).collect(),
    ))
}

#[derive(Clone, Copy, Debug)]
pub struct OneillResidual {
    /// |∇ᴺ_{Xᴴ}Yᴴ − (∇̄_X Y)ᴴ + ⟨Xᴴ, φYᴴ⟩ξ|
    pub total: f64,
    /// η-part mismatch of ∇ᴺ_{Xᴴ}Yᴴ against −⟨Xᴴ, φYᴴ⟩
    pub vertical: f64,
}

/// Submersion equation residual for lifted base coordinate fields.
pub fn oneill_residual(
    fib: &FibrationData,
    x_field: &ChartMapFn,
    y_field: &ChartMapFn,
    p: &[f64],
) -> GeoResult<OneillResidual> {
    let model = &fib.model;
    let dtot = model.dim();
    let mp = model.eval_point(p, 0)?;
    let g = mp.g_values();

    // Yᴴ as a jet field over the total space
    let seeds = crate::jet::seed_independents(p, 1)?;
    let w_jets = (fib.project)(&seeds)?;
    let y_base_jets = y_field(&w_jets)?;
    let yh = (fib.lift)(&seeds, &y_base_jets)?;

    // Xᴴ pointwise
    let w0: Vec<f64> = w_jets.iter().map(|j| j.value).collect();
    let w0_jets: Vec<Jet> = w0.iter().map(|&v| Jet::constant(v, 1, 0)).collect();
    let x_base: Vec<f64> = x_field(&w0_jets)?.into_iter().map(|j| j.value).collect();
    let xh = horizontal_lift(fib, &TangentVector::new(w0.clone(), x_base.clone()), p)?;

    // ∇ᴺ_{Xᴴ}Yᴴ
    let gamma = christoffel(&model.chart, p)?;
    let mut nab = vec![0.0; dtot];
    for k in 0..dtot {
        let mut acc = 0.0;
        for i in 0..dtot {
            acc += xh.components[i] * yh[k].first[i];
            for j in 0..dtot {
                acc += gamma[k][i][j] * xh.components[i] * yh[j].value;
            }
        }
        nab[k] = acc;
    }

    // (∇̄_X Y)ᴴ
    let x_base_tv = TangentVector::new(w0.clone(), x_base);
    let base_nab = covariant_derivative(&fib.base_chart, &w0, &x_base_tv, y_field)?;
    let base_nab_h = horizontal_lift(fib, &base_nab, p)?;

    // ⟨Xᴴ, φYᴴ⟩ξ
    let yh_vals: Vec<f64> = yh.iter().map(|j| j.value).collect();
    let phi_yh = mp.phi_of(&yh_vals);
    let coef = inner(&g, &xh.components, &phi_yh);
    let xi = mp.xi_values();

    let resid: Vec<f64> = (0..dtot)
        .map(|k| nab[k] - base_nab_h.components[k] + coef * xi[k])
        .collect();
    let vertical = (mp.eta_of(&nab) + coef).abs();
    Ok(OneillResidual {
        total: norm(&g, &resid),
        vertical,
    })
}

/// Unit base vector field frame seeds for circles with prescribed complex
/// torsion: `tau = ±1` takes E₂ = ∓J E₁, `tau = 0` picks E₂ ⊥ {E₁, JE₁}.
pub fn circle_start_frame(
    fib: &FibrationData,
    w0: &[f64],
    tau: f64,
) -> GeoResult<Vec<Vec<f64>>> {
    let g = fib.base_chart.metric_values(w0)?;
    let jm = fib.base_j_values(w0)?;
    let m = fib.base_dim;
    let mut e1 = vec![0.0; m];
    e1[0] = 1.0;
    let n1 = norm(&g, &e1);
    for x in e1.iter_mut() {
        *x /= n1;
    }
    let je1: Vec<f64> = (0..m)
        .map(|i| (0..m).map(|j| jm[i][j] * e1[j]).sum())
        .collect();
    let e2 = if tau >= 0.5 {
        je1.iter().map(|x| -x).collect::<Vec<f64>>()
    } else if tau <= -0.5 {
        je1.clone()
    } else {
        if m < 4 {
            return Err(GeoError::Unsupported(
                "τ = 0 circles need a base of real dimension at least 4".into(),
            ));
        }
        // unit vector orthogonal to E₁ and JE₁
        let mut cand = vec![0.0; m];
        cand[1] = 1.0;
        let mut legs = vec![e1.clone(), je1.clone(), cand];
        if !gram_schmidt_in_metric(&g, &mut legs) {
            return Err(GeoError::SingularMetric("degenerate frame seed".into()));
        }
        legs.pop().unwrap()
    };
    Ok(vec![e1, e2])
}

/// Synthesize a base circle with curvature κ and the given complex torsion.
pub fn base_circle(
    fib: &FibrationData,
    w0: &[f64],
    kappa: f64,
    tau: f64,
    length: f64,
    steps: usize,
) -> GeoResult<CurveSample> {
    let frame = circle_start_frame(fib, w0, tau)?;
    synthesize_curve(&fib.base_chart, w0, &frame, &[kappa], length, steps)
}

/// Hopf cylinder over a synthesized base curve: the patch (s, t) ↦ flow of ξ
/// for time t from the horizontal lift of γ(s).
pub fn hopf_cylinder(
    fib: &FibrationData,
    base_curve: &CurveSample,
    fiber_span: (f64, f64),
    grid: (usize, usize),
) -> GeoResult<SurfacePatch> {
    let generator = base_curve.generator.clone().ok_or_else(|| {
        GeoError::Precondition {
            what: "Hopf cylinders need a synthesized base curve (with generator data)".into(),
            residual: f64::NAN,
        }
    })?;
    let model = fib.model.clone();
    let dtot = model.dim();
    let mbase = fib.base_dim;
    let r = generator.r;
    let s_span = (
        *base_curve.s.first().unwrap_or(&0.0),
        *base_curve.s.last().unwrap_or(&1.0),
    );

    // state: [p (dtot) | E₁…E_r (r·mbase) | s]
    let p0 = (fib.section)(&generator.start)?;
    model.chart.check_domain(&p0)?;
    let mut y0 = p0;
    for leg in &generator.frame {
        y0.extend_from_slice(leg);
    }
    y0.push(s_span.0);

    let base_chart = fib.base_chart.clone();
    let project = fib.project.clone();
    let lift = fib.lift.clone();
    let kappa = generator.kappa.clone();
    let field_s: FieldFn = Arc::new(move |y: &[Jet]| {
        let p = &y[0..dtot];
        let legs: Vec<&[Jet]> = (0..r)
            .map(|i| &y[dtot + i * mbase..dtot + (i + 1) * mbase])
            .collect();
        let s = &y[dtot + r * mbase];
        let o = y[0].order();
        let jd = y[0].dim();
        if o == 0 {
            let ks: Vec<f64> = kappa(&Jet::constant(s.value, 1, 0))?
                .iter()
                .map(|j| j.value)
                .collect();
            let w_jets = (project)(p)?;
            let w: Vec<f64> = w_jets.iter().map(|j| j.value).collect();
            let gamma = crate::metric::christoffel_values(&base_chart, &w)?;
            let lift_jets = (lift)(p, legs[0])?;
            let mut out: Vec<f64> = lift_jets.iter().map(|j| j.value).collect();
            for i in 0..r {
                for k in 0..mbase {
                    let mut acc = 0.0;
                    if i == 0 {
                        if r >= 2 {
                            acc += ks[0] * legs[1][k].value;
                        }
                    } else {
                        acc -= ks[i - 1] * legs[i - 1][k].value;
                        if i + 1 < r {
                            acc += ks[i] * legs[i + 1][k].value;
                        }
                    }
                    for l in 0..mbase {
                        for m in 0..mbase {
                            acc -= gamma[k][l][m] * legs[0][l].value * legs[i][m].value;
                        }
                    }
                    out.push(acc);
                }
            }
            out.push(1.0);
            return Ok(out.into_iter().map(|v| Jet::constant(v, jd, 0)).collect());
        }
        let ks = kappa(s)?;
        let w = (project)(p)?;
        let gamma = christoffel_at_jets(&base_chart, &w, o.min(2))?;

        let mut out = Vec::with_capacity(y.len());
        out.extend((lift)(p, legs[0])?);
        for i in 0..r {
            for k in 0..mbase {
                let mut acc = Jet::constant(0.0, jd, o);
                if i == 0 {
                    if r >= 2 {
                        acc = ks[0].mul(&legs[1][k]);
                    }
                } else {
                    acc = ks[i - 1].neg().mul(&legs[i - 1][k]);
                    if i + 1 < r {
                        acc = acc.add(&ks[i].mul(&legs[i + 1][k]));
                    }
                }
                for l in 0..mbase {
                    for q in 0..mbase {
                        acc = acc.sub(&gamma[k][l][q].mul(&legs[0][l]).mul(&legs[i][q]));
                    }
                }
                out.push(acc);
            }
        }
        out.push(Jet::constant(1.0, jd, o));
        Ok(out)
    });

    let xi_fn = model.xi.clone();
    let field_t: FieldFn = Arc::new(move |y: &[Jet]| {
        let p = &y[0..dtot];
        let o = y[0].order();
        let jd = y[0].dim();
        let mut out = crate::metric::vector_at_jets(&xi_fn, p, o + 1)?;
        for _ in dtot..y.len() {
            out.push(Jet::constant(0.0, jd, o));
        }
        Ok(out)
    });

    let flow = FlowSurface::build(
        field_s,
        field_t,
        y0,
        s_span,
        fiber_span,
        grid,
        2e-3,
    )?;
    // the lifted tangent field and ξ commute on a Sasakian total space;
    // this certifies the construction
    let comm = flow.commutator_residual(8)?;
    if comm > 1e-5 {
        return Err(GeoError::Integrability {
            residual: comm,
            u: s_span.1,
            v: fiber_span.1,
        });
    }
    SurfacePatch::from_flow(model, Arc::new(flow), dtot)
}
