//! End-to-end reconstructions: the flat product surface carried by integral
//! pseudo-umbilical pmc surfaces in 7-dimensional models, built from its
//! structure equations and verified against every checkable identity, plus
//! the terminal polynomial scan of the non-existence argument.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::curve::{frenet_apparatus, legendre_residual, CurveSample};
use crate::error::{GeoError, GeoResult};
use crate::flows::{FieldFn, FlowCurve, FlowSurface};
use crate::jet::Jet;
use crate::metric::{christoffel_at_jets, inner, norm};
use crate::models::{make_model, structure_residuals, ModelKind, ModelParams, ModelSpace};
use crate::qforms::{convergence_orders, q_forms, IsothermalPatch, QGrid};
use crate::report::{CheckRecord, VerificationReport};
use crate::surface::{
    classify_surface, deriv_a_residuals, fundamental_equation_residuals, gaussian_curvature,
    lemma_normal_residuals, pmc_residual, shape_operator_on_frame, sigma_phi_symmetry_residual,
    surface_geometry, FrameLabel, SurfaceGeometry, SurfacePatch,
};

// ---------------------------------------------------------------------------
// Curvature bookkeeping
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Theorem2Curvatures {
    pub a_sq: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    pub kappa_circle: f64,
}

/// Curvatures of the two product factors from (c, |H|):
/// κ₁ = √(a²+h²), κ₂ = a√(1+h²)/κ₁, κ₃ = h√(1+h²)/κ₁, with
/// a² = (c+3)/8 + h²/2.
pub fn theorem2_curvatures(c: f64, h: f64) -> GeoResult<Theorem2Curvatures> {
    if h <= 0.0 {
        return Err(GeoError::Parameter("mean curvature must be positive".into()));
    }
    let a_sq = (c + 3.0) / 8.0 + h * h / 2.0;
    if a_sq < -1e-12 {
        return Err(GeoError::Infeasible(format!(
            "|H|² ≥ −(c+3)/4 is violated: h² = {:.6} < {:.6}",
            h * h,
            -(c + 3.0) / 4.0
        )));
    }
    let a_sq = a_sq.max(0.0);
    let a = a_sq.sqrt();
    let kappa1 = (a_sq + h * h).sqrt();
    let lift = (1.0 + h * h).sqrt();
    Ok(Theorem2Curvatures {
        a_sq,
        kappa1,
        kappa2: a * lift / kappa1,
        kappa3: h * lift / kappa1,
        kappa_circle: kappa1,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Theorem2Config {
    pub c: f64,
    pub h: f64,
    pub grid: usize,
    pub extent: f64,
    pub seed: u64,
    /// Tolerance for grid-limited checks.
    pub tol_grid: f64,
    /// Tolerance for pointwise-exact checks.
    pub tol_exact: f64,
}

impl Theorem2Config {
    pub fn new(c: f64, h: f64, grid: usize) -> Theorem2Config {
        Theorem2Config {
            c,
            h,
            grid,
            extent: 1.5,
            seed: 42,
            tol_grid: 1e-5,
            tol_exact: 1e-7,
        }
    }
}

/// The model family containing a 7-dimensional space form with the given c.
pub fn model_for_c(c: f64) -> GeoResult<ModelSpace> {
    if c > -3.0 {
        let a = 4.0 / (c + 3.0);
        let kind = if (a - 1.0).abs() < 1e-14 {
            ModelKind::StandardSphere
        } else {
            ModelKind::DeformedSphere
        };
        make_model(
            kind,
            3,
            ModelParams {
                a: Some(a),
                ..Default::default()
            },
        )
    } else if c == -3.0 {
        make_model(ModelKind::Heisenberg, 3, ModelParams::default())
    } else {
        make_model(
            ModelKind::BallTimesLine,
            3,
            ModelParams {
                k: Some(c + 3.0),
                ..Default::default()
            },
        )
    }
}

// ---------------------------------------------------------------------------
// Adapted frames and the structure field
// ---------------------------------------------------------------------------

/// Orthonormal frame (E₁, E₂, φE₁, φE₂, E₅, φE₅, ξ) at the canonical start
/// point of the model, with E₁, E₂, E₅ in the contact distribution.
pub fn adapted_start_frame(model: &ModelSpace) -> GeoResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let d = model.dim();
    if d != 7 {
        return Err(GeoError::Parameter(
            "the adapted frame construction needs a 7-dimensional model".into(),
        ));
    }
    let p0 = vec![0.0; d];
    let mp = model.eval_point(&p0, 0)?;
    let g = mp.g_values();
    let xi = mp.xi_values();

    let mut accepted: Vec<Vec<f64>> = Vec::new(); // horizontal legs E1, E2, E5
    let mut blocked: Vec<Vec<f64>> = vec![xi.clone()];
    for k in 0..d {
        if accepted.len() == 3 {
            break;
        }
        let mut v = vec![0.0; d];
        v[k] = 1.0;
        for b in &blocked {
            let c = inner(&g, &v, b) / inner(&g, b, b);
            for i in 0..d {
                v[i] -= c * b[i];
            }
        }
        let nv = norm(&g, &v);
        if nv < 1e-8 {
            continue;
        }
        let v: Vec<f64> = v.iter().map(|x| x / nv).collect();
        let phi_v = mp.phi_of(&v);
        accepted.push(v.clone());
        blocked.push(v);
        blocked.push(phi_v);
    }
    if accepted.len() < 3 {
        return Err(GeoError::Precondition {
            what: "could not build the adapted start frame".into(),
            residual: (3 - accepted.len()) as f64,
        });
    }
    let e1 = accepted[0].clone();
    let e2 = accepted[1].clone();
    let e5 = accepted[2].clone();
    let frame = vec![
        e1.clone(),
        e2.clone(),
        mp.phi_of(&e1),
        mp.phi_of(&e2),
        e5.clone(),
        mp.phi_of(&e5),
        xi,
    ];
    // orthonormality sanity
    let mut worst = 0.0f64;
    for (i, a) in frame.iter().enumerate() {
        for (j, b) in frame.iter().enumerate() {
            let t = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((inner(&g, a, b) - t).abs());
        }
    }
    if worst > 1e-10 {
        return Err(GeoError::Precondition {
            what: "adapted frame is not orthonormal".into(),
            residual: worst,
        });
    }
    Ok((p0, frame))
}

/// Coefficient table of the frame transport: `table[i][j]` is the E_{j+1}
/// coefficient of the derivative of E_{i+1} along the chosen direction.
fn structure_constants(a: f64, h: f64, dir: usize, perturb: f64) -> [[f64; 7]; 7] {
    let mut s = [[0.0; 7]; 7];
    if dir == 0 {
        s[0][2] = a;
        s[0][4] = h;
        s[1][3] = -a;
        s[2][0] = -a;
        s[2][5] = h * (1.0 + perturb);
        s[2][6] = 1.0 + perturb;
        s[3][1] = a;
        s[4][0] = -h;
        s[5][2] = -h;
        s[6][2] = -1.0;
    } else {
        s[0][3] = -a;
        s[1][2] = -a;
        s[1][4] = h;
        s[2][1] = a;
        s[3][0] = a;
        s[3][5] = h * (1.0 + perturb);
        s[3][6] = 1.0 + perturb;
        s[4][1] = -h;
        s[5][3] = -h;
        s[6][3] = -1.0;
    }
    s
}

fn structure_field(model: Arc<ModelSpace>, a: f64, h: f64, dir: usize, perturb: f64) -> FieldFn {
    let d = model.dim();
    Arc::new(move |y: &[Jet]| {
        let jd = y[0].dim();
        let o = y[0].order();
        if o == 0 {
            // value-level evaluation: pure f64 is an order of magnitude
            // faster and integration dominates the runtime
            let p: Vec<f64> = y[0..d].iter().map(|j| j.value).collect();
            let legs: Vec<&[Jet]> = (0..7).map(|i| &y[d + i * d..d + (i + 1) * d]).collect();
            let gamma = crate::metric::christoffel_values(&model.chart, &p)?;
            let s = structure_constants(a, h, dir, perturb);
            let transport: Vec<f64> = legs[dir].iter().map(|j| j.value).collect();
            let mut out: Vec<f64> = transport.clone();
            for i in 0..7 {
                for k in 0..d {
                    let mut acc = 0.0;
                    for j in 0..7 {
                        if s[i][j] != 0.0 {
                            acc += s[i][j] * legs[j][k].value;
                        }
                    }
                    for l in 0..d {
                        if transport[l] == 0.0 {
                            continue;
                        }
                        for m in 0..d {
                            acc -= gamma[k][l][m] * transport[l] * legs[i][m].value;
                        }
                    }
                    out.push(acc);
                }
            }
            return Ok(out
                .into_iter()
                .map(|v| Jet::constant(v, jd, 0))
                .collect());
        }
        let f = &y[0..d];
        let legs: Vec<&[Jet]> = (0..7).map(|i| &y[d + i * d..d + (i + 1) * d]).collect();
        let gamma = christoffel_at_jets(&model.chart, f, o.min(2))?;
        let s = structure_constants(a, h, dir, perturb);
        let transport = legs[dir];

        let mut out = Vec::with_capacity(y.len());
        out.extend(transport.iter().cloned());
        for i in 0..7 {
            for k in 0..d {
                let mut acc = Jet::constant(0.0, jd, o);
                for j in 0..7 {
                    if s[i][j] != 0.0 {
                        acc = acc.add(&legs[j][k].scale(s[i][j]));
                    }
                }
                for l in 0..d {
                    for m in 0..d {
                        acc = acc.sub(&gamma[k][l][m].mul(&transport[l]).mul(&legs[i][m]));
                    }
                }
                out.push(acc);
            }
        }
        Ok(out)
    })
}

pub struct ProductSurface {
    pub patch: SurfacePatch,
    pub flow: Arc<FlowSurface>,
    pub a: f64,
    pub corner_residual: f64,
    pub commutator_residual: f64,
}

/// Integrate the first-order frame system of the flat product surface.
pub fn build_product_surface(
    model: Arc<ModelSpace>,
    cfg: &Theorem2Config,
) -> GeoResult<ProductSurface> {
    build_product_surface_perturbed(model, cfg, 0.0)
}

pub fn build_product_surface_perturbed(
    model: Arc<ModelSpace>,
    cfg: &Theorem2Config,
    perturb: f64,
) -> GeoResult<ProductSurface> {
    if (model.c - cfg.c).abs() > 1e-10 {
        return Err(GeoError::Parameter(format!(
            "model has c = {} but the configuration asks for c = {}",
            model.c, cfg.c
        )));
    }
    let curv = theorem2_curvatures(cfg.c, cfg.h)?;
    let a = curv.a_sq.sqrt();
    let (p0, frame) = adapted_start_frame(&model)?;
    let d = model.dim();
    let mut y0 = p0;
    for leg in &frame {
        y0.extend_from_slice(leg);
    }

    let field_u = structure_field(model.clone(), a, cfg.h, 0, perturb);
    let field_v = structure_field(model.clone(), a, cfg.h, 1, 0.0);
    let flow = FlowSurface::build(
        field_u,
        field_v,
        y0,
        (0.0, cfg.extent),
        (0.0, cfg.extent),
        (cfg.grid, cfg.grid),
        2e-3,
    )?;

    let corner = flow.corner_residual()?;
    let commutator = flow.commutator_residual(16)?;
    if corner.max(commutator) > 1e-4 {
        return Err(GeoError::Integrability {
            residual: corner.max(commutator),
            u: cfg.extent,
            v: cfg.extent,
        });
    }
    let flow = Arc::new(flow);
    let patch = SurfacePatch::from_flow(model, flow.clone(), d)?;
    Ok(ProductSurface {
        patch,
        flow,
        a,
        corner_residual: corner,
        commutator_residual: commutator,
    })
}

/// Max deviation of the frame block from orthonormality over corner states.
pub fn frame_gram_drift(flow: &FlowSurface, model: &ModelSpace) -> GeoResult<f64> {
    let d = model.dim();
    let mut worst = 0.0f64;
    for idx in [
        0,
        flow.nu - 1,
        (flow.nv - 1) * flow.nu,
        flow.nu * flow.nv - 1,
    ] {
        let st = &flow.states[idx];
        let p = &st[0..d];
        let g = model.chart.metric_values(p)?;
        for i in 0..7 {
            for j in 0..7 {
                let a = &st[d + i * d..d + (i + 1) * d];
                let b = &st[d + j * d..d + (j + 1) * d];
                let t = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((inner(&g, a, b) - t).abs());
            }
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Coordinate curve extraction
// ---------------------------------------------------------------------------

pub struct ExtractedCurve {
    pub sample: CurveSample,
    pub mean_kappas: Vec<f64>,
    pub legendre: f64,
}

/// Integrate a coordinate line of the product surface and run the
/// independent Frenet extraction on its positions.
pub fn extract_coordinate_curve(
    model: &Arc<ModelSpace>,
    surface: &ProductSurface,
    dir: usize,
    length: f64,
) -> GeoResult<ExtractedCurve> {
    let d = model.dim();
    let field = if dir == 0 {
        surface.flow.field_u.clone()
    } else {
        surface.flow.field_v.clone()
    };
    let steps = ((length * 1000.0).ceil() as usize).max(1000);
    let start = surface.flow.states[0].clone();
    let line = FlowCurve::build(field, start, 0.0, length, steps, None, None)?;
    let positions: Vec<Vec<f64>> = line.states.iter().map(|st| st[0..d].to_vec()).collect();
    let step = length / steps as f64;
    let sample = frenet_apparatus(&positions, step, &model.chart, 1e-6)?;
    let mean_kappas = sample.mean_curvatures();
    let legendre = legendre_residual(&sample, model)?;
    Ok(ExtractedCurve {
        sample,
        mean_kappas,
        legendre,
    })
}

// ---------------------------------------------------------------------------
// Full verification
// ---------------------------------------------------------------------------

pub struct Theorem2Artifacts {
    pub report: VerificationReport,
    pub geometry: SurfaceGeometry,
    pub qgrid: QGrid,
    pub gamma1: Option<ExtractedCurve>,
    pub gamma2: Option<ExtractedCurve>,
    pub surface: ProductSurface,
    pub model: Arc<ModelSpace>,
}

fn sample_grid_indices(n: usize, want: usize) -> Vec<usize> {
    let stride = ((n - 2) / want.max(1)).max(1);
    (1..n - 1).step_by(stride).collect()
}

pub fn verify_theorem2(cfg: &Theorem2Config) -> GeoResult<Theorem2Artifacts> {
    let model = Arc::new(model_for_c(cfg.c)?);
    let curv = theorem2_curvatures(cfg.c, cfg.h)?;
    let a = curv.a_sq.sqrt();
    let umbilical_branch = curv.a_sq < 1e-12;

    let mut report = VerificationReport::new(
        "theorem2",
        serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null),
        cfg.seed,
    );
    if cfg.grid < 32 {
        report.note(
            "grid below 32: discretized ∂̄ statistics are reported with their convergence \
             order instead of a fixed floor",
        );
    }
    if umbilical_branch {
        report.note("a² = 0: totally umbilical branch (flat surface in a 3-dimensional space form)");
    }

    let surface = build_product_surface(model.clone(), cfg)?;
    report.push(CheckRecord::new(
        "integrability_corner",
        surface.corner_residual,
        surface.corner_residual,
        cfg.tol_grid,
    ));
    report.push(CheckRecord::new(
        "integrability_commutator",
        surface.commutator_residual,
        surface.commutator_residual,
        cfg.tol_grid,
    ));
    let drift = frame_gram_drift(&surface.flow, &model)?;
    report.push(CheckRecord::new("frame_gram_drift", drift, drift, 1e-6));

    // model sanity at the surface start point
    let sr = structure_residuals(&model, &vec![0.0; 7])?;
    report.push(CheckRecord::new(
        "ambient_structure_axioms",
        sr.max(),
        sr.max(),
        1e-8,
    ));

    let geometry = surface_geometry(&surface.patch)?;
    let class = classify_surface(&geometry);
    report.push(CheckRecord::new(
        "integral_residual",
        class.integral_residual,
        class.integral_residual,
        cfg.tol_grid,
    ));
    report.push(CheckRecord::new(
        "anti_invariant_residual",
        class.anti_invariant_residual,
        class.anti_invariant_residual,
        cfg.tol_grid,
    ));
    report.push(CheckRecord::new(
        "pseudo_umbilical_residual",
        class.pseudo_umbilical_residual,
        class.pseudo_umbilical_residual,
        cfg.tol_grid,
    ));
    report.push(CheckRecord::new(
        "eta_h",
        class.eta_h,
        class.eta_h,
        cfg.tol_grid,
    ));
    report.push(CheckRecord::new(
        "phi_h_tangency",
        class.phi_h_tangency,
        class.phi_h_tangency,
        cfg.tol_grid,
    ));

    let pmc = pmc_residual(&surface.patch)?;
    report.push(CheckRecord::new("pmc_residual", pmc, pmc, cfg.tol_grid));

    // |H| round trip
    let h_err: Vec<f64> = geometry
        .nodes
        .iter()
        .map(|n| (n.h_norm - cfg.h).abs())
        .collect();
    report.push(CheckRecord::from_samples("mean_curvature_value", &h_err, cfg.tol_grid));

    // a constancy and value
    if !umbilical_branch {
        let a_err: Vec<f64> = geometry
            .nodes
            .iter()
            .filter_map(|n| n.a_value.map(|av| (av - a).abs()))
            .collect();
        report.push(CheckRecord::from_samples("a_value", &a_err, cfg.tol_grid));
    }

    // shape operators against the structure matrices, on sampled nodes
    let ius = sample_grid_indices(geometry.nu, 3);
    let ivs = sample_grid_indices(geometry.nv, 3);
    let mut shape_res: Vec<f64> = Vec::new();
    for &iu in &ius {
        for &iv in &ivs {
            let n = geometry.node(iu, iv);
            let legs: Vec<(FrameLabel, &Vec<f64>)> =
                n.frame.iter().map(|(l, v)| (*l, v)).collect();
            for (label, leg) in legs {
                let m = shape_operator_on_frame(n, leg);
                let expect: [[f64; 2]; 2] = match label {
                    FrameLabel::PhiE1 => [[a, 0.0], [0.0, -a]],
                    FrameLabel::PhiE2 => [[0.0, -a], [-a, 0.0]],
                    FrameLabel::MeanDir => [[cfg.h, 0.0], [0.0, cfg.h]],
                    FrameLabel::PhiMean | FrameLabel::Xi => [[0.0; 2]; 2],
                    FrameLabel::Coord(_) => continue,
                };
                let mut worst = 0.0f64;
                for r in 0..2 {
                    for cix in 0..2 {
                        worst = worst.max((m[r][cix] - expect[r][cix]).abs());
                    }
                }
                shape_res.push(worst);
            }
        }
    }
    report.push(CheckRecord::from_samples(
        "shape_operators_vs_structure",
        &shape_res,
        cfg.tol_grid,
    ));

    // totally umbilical branch: σ(X,Y) = ⟨X,Y⟩H
    if umbilical_branch {
        let mut umb: Vec<f64> = Vec::new();
        for n in &geometry.nodes {
            for (idx, expect_coef) in [(0usize, 1.0), (1, 0.0), (2, 1.0)] {
                let resid: Vec<f64> = (0..7)
                    .map(|k| n.sigma_on[idx][k] - expect_coef * n.h[k])
                    .collect();
                umb.push(norm(&n.g_amb, &resid));
            }
        }
        report.push(CheckRecord::from_samples(
            "totally_umbilical_residual",
            &umb,
            cfg.tol_grid,
        ));
    }

    // σ/φ total symmetry on integral patches
    let int0: Vec<f64> = geometry
        .nodes
        .iter()
        .map(sigma_phi_symmetry_residual)
        .collect();
    report.push(CheckRecord::from_samples(
        "sigma_phi_total_symmetry",
        &int0,
        1e-6,
    ));

    // Gaussian curvature by three routes
    let expected_k = (cfg.c + 3.0) / 4.0 - 2.0 * curv.a_sq + cfg.h * cfg.h;
    let mut k_gauss = Vec::new();
    let mut k_intr = Vec::new();
    let mut k_formula = Vec::new();
    for &iu in &ius {
        for &iv in &ivs {
            let k = gaussian_curvature(&surface.patch, &geometry, iu, iv)?;
            k_gauss.push((k.via_gauss_eq - expected_k).abs());
            k_intr.push((k.intrinsic - expected_k).abs());
            if let Some(f) = k.formula {
                k_formula.push((f - expected_k).abs());
            }
        }
    }
    report.push(CheckRecord::from_samples(
        "gaussian_curvature_gauss_route",
        &k_gauss,
        cfg.tol_grid,
    ));
    report.push(CheckRecord::from_samples(
        "gaussian_curvature_intrinsic_route",
        &k_intr,
        cfg.tol_grid,
    ));
    if !k_formula.is_empty() {
        report.push(CheckRecord::from_samples(
            "gaussian_curvature_formula_route",
            &k_formula,
            cfg.tol_grid,
        ));
    }

    // fundamental equations at sampled nodes
    let mut gauss = Vec::new();
    let mut codazzi = Vec::new();
    let mut ricci = Vec::new();
    for &iu in &ius {
        for &iv in &ivs {
            let f = fundamental_equation_residuals(&surface.patch, &geometry, iu, iv)?;
            gauss.push(f.gauss);
            codazzi.push(f.codazzi);
            ricci.push(f.ricci);
        }
    }
    report.push(CheckRecord::from_samples("gauss_equation", &gauss, 1e-6));
    report.push(CheckRecord::from_samples("codazzi_equation", &codazzi, 1e-6));
    report.push(CheckRecord::from_samples("ricci_equation", &ricci, 1e-6));

    // adapted-frame identities
    let mut lemma_diag = Vec::new();
    let mut lemma_off = Vec::new();
    let mut lemma_phih = Vec::new();
    let mut lemma_xi = Vec::new();
    let mut da_rel = Vec::new();
    let mut da_mag = Vec::new();
    for &iu in &ius {
        for &iv in &ivs {
            let n = geometry.node(iu, iv);
            let l = lemma_normal_residuals(&surface.patch, n.u, n.v)?;
            lemma_diag.push(l.diagonal);
            lemma_off.push(l.off_diagonal);
            lemma_phih.push(l.phi_h);
            lemma_xi.push(l.xi);
            if !umbilical_branch {
                let da = deriv_a_residuals(&surface.patch, n.u, n.v)?;
                da_rel.push(da.relation);
                da_mag.push(da.derivative_magnitude);
            }
        }
    }
    report.push(CheckRecord::from_samples(
        "normal_connection_diagonal",
        &lemma_diag,
        cfg.tol_grid,
    ));
    report.push(CheckRecord::from_samples(
        "normal_connection_off_diagonal",
        &lemma_off,
        cfg.tol_grid,
    ));
    report.push(CheckRecord::from_samples(
        "normal_connection_phi_h",
        &lemma_phih,
        cfg.tol_grid,
    ));
    report.push(CheckRecord::from_samples(
        "normal_connection_xi",
        &lemma_xi,
        cfg.tol_grid,
    ));
    if !umbilical_branch {
        report.push(CheckRecord::from_samples(
            "a_derivative_relation",
            &da_rel,
            cfg.tol_grid,
        ));
        report.push(CheckRecord::from_samples(
            "a_derivative_magnitude",
            &da_mag,
            cfg.tol_grid,
        ));
    }

    // quadratic forms: Q₁ vanishes on the pseudo-umbilical integral surface
    let iso = IsothermalPatch::new(&geometry)?;
    let qgrid = q_forms(&iso, cfg.c);
    let q1_max = qgrid.q1.iter().map(|z| z.norm()).fold(0.0, f64::max);
    report.push(CheckRecord::new("q1_vanishing", q1_max, q1_max, cfg.tol_grid));

    // holomorphicity: ∂̄ statistics under one refinement
    if cfg.grid >= 32 {
        let coarse_patch = SurfacePatch {
            model: model.clone(),
            immersion: surface.patch.immersion.clone(),
            u_range: surface.patch.u_range,
            v_range: surface.patch.v_range,
            grid: (cfg.grid / 2, cfg.grid / 2),
        };
        let coarse_geom = surface_geometry(&coarse_patch)?;
        let coarse_iso = IsothermalPatch::new(&coarse_geom)?;
        let coarse_q = q_forms(&coarse_iso, cfg.c);
        let (c1, c2) = coarse_q.max_abs_dbar();
        let (f1, f2) = qgrid.max_abs_dbar();
        let orders1 = convergence_orders(&[(cfg.grid / 2, c1), (cfg.grid, f1)]);
        let orders2 = convergence_orders(&[(cfg.grid / 2, c2), (cfg.grid, f2)]);
        let o1 = orders1[0];
        let o2 = orders2[0];
        // the forms are constant (≈ 0 and (h²−?)…) on this surface only up to
        // the grid; require either tiny absolute ∂̄ or second-order decay
        let ok1 = f1 < 1e-10 || o1 >= 1.8;
        let ok2 = f2 < 1e-10 || o2 >= 1.8;
        report.push(CheckRecord {
            name: "dbar_q1_convergence".into(),
            max_residual: f1,
            mean_residual: o1,
            tolerance: f64::INFINITY,
            pass: ok1,
        });
        report.push(CheckRecord {
            name: "dbar_q2_convergence".into(),
            max_residual: f2,
            mean_residual: o2,
            tolerance: f64::INFINITY,
            pass: ok2,
        });
    } else {
        let (f1, f2) = qgrid.max_abs_dbar();
        report.note(format!(
            "coarse grid ∂̄ residuals: |∂̄Q₁| = {f1:.3e}, |∂̄Q₂| = {f2:.3e} (convergence not asserted)"
        ));
    }

    // coordinate curves
    let curve_length = match model.kind {
        ModelKind::BallTimesLine => 1.6,
        _ => 5.0,
    };
    let gamma1 = extract_coordinate_curve(&model, &surface, 0, curve_length)?;
    let gamma2 = extract_coordinate_curve(&model, &surface, 1, curve_length)?;
    let expected_order_1 = if umbilical_branch { 2 } else { 4 };
    report.push(CheckRecord::new(
        "gamma1_osculating_order",
        (gamma1.sample.osculating_order as f64 - expected_order_1 as f64).abs(),
        gamma1.sample.osculating_order as f64,
        0.5,
    ));
    report.push(CheckRecord::new(
        "gamma2_osculating_order",
        (gamma2.sample.osculating_order as f64 - 2.0).abs(),
        gamma2.sample.osculating_order as f64,
        0.5,
    ));
    let expected1: Vec<f64> = if umbilical_branch {
        vec![curv.kappa1]
    } else {
        vec![curv.kappa1, curv.kappa2, curv.kappa3]
    };
    let mut k1_err: Vec<f64> = Vec::new();
    for (i, e) in expected1.iter().enumerate() {
        if i < gamma1.mean_kappas.len() {
            k1_err.push((gamma1.mean_kappas[i] - e).abs());
        } else {
            k1_err.push(*e);
        }
    }
    report.push(CheckRecord::from_samples("gamma1_curvatures", &k1_err, 1e-4));
    let k2_err = if gamma2.mean_kappas.is_empty() {
        curv.kappa_circle
    } else {
        (gamma2.mean_kappas[0] - curv.kappa_circle).abs()
    };
    report.push(CheckRecord::new("gamma2_curvature", k2_err, k2_err, 1e-4));
    report.push(CheckRecord::new(
        "gamma1_legendre",
        gamma1.legendre,
        gamma1.legendre,
        cfg.tol_grid,
    ));
    report.push(CheckRecord::new(
        "gamma2_legendre",
        gamma2.legendre,
        gamma2.legendre,
        cfg.tol_grid,
    ));

    Ok(Theorem2Artifacts {
        report,
        geometry,
        qgrid,
        gamma1: Some(gamma1),
        gamma2: Some(gamma2),
        surface,
        model,
    })
}

// ---------------------------------------------------------------------------
// Polynomial scan
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Theorem5Scan {
    pub max_value: f64,
    pub all_negative: bool,
    pub argmax_c: f64,
    pub argmax_t: f64,
}

/// P(c,t) = (1−c)t⁴ + (c−5)t² − 16 on a (c, t) grid with t ∈ (0,1) exclusive.
pub fn theorem5_polynomial_scan(
    c_min: f64,
    c_max: f64,
    c_steps: usize,
    t_steps: usize,
) -> GeoResult<Theorem5Scan> {
    if c_max >= 1.0 {
        return Err(GeoError::Parameter(
            "the scan requires c < 1 throughout".into(),
        ));
    }
    if c_min > c_max || c_steps < 2 || t_steps < 1 {
        return Err(GeoError::Parameter("empty scan grid".into()));
    }
    let mut max_value = f64::MIN;
    let mut arg = (c_min, 0.5);
    for i in 0..c_steps {
        let c = c_min + (c_max - c_min) * i as f64 / (c_steps - 1) as f64;
        for j in 1..=t_steps {
            let t = j as f64 / (t_steps + 1) as f64;
            let t2 = t * t;
            let p = (1.0 - c) * t2 * t2 + (c - 5.0) * t2 - 16.0;
            if p > max_value {
                max_value = p;
                arg = (c, t);
            }
        }
    }
    Ok(Theorem5Scan {
        max_value,
        all_negative: max_value < 0.0,
        argmax_c: arg.0,
        argmax_t: arg.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curvature_formulas_at_reference_points() {
        let t = theorem2_curvatures(-3.0, 1.0).unwrap();
        assert!((t.a_sq - 0.5).abs() < 1e-12);
        assert!((t.kappa1 - 1.5f64.sqrt()).abs() < 1e-12);
        assert!((t.kappa2 - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((t.kappa3 - (4.0f64 / 3.0).sqrt()).abs() < 1e-12);

        let t = theorem2_curvatures(5.0, 1.0).unwrap();
        assert!((t.a_sq - 1.5).abs() < 1e-12);
        assert!((t.kappa1 - 2.5f64.sqrt()).abs() < 1e-12);
        assert!((t.kappa2 - 1.2f64.sqrt()).abs() < 1e-12);
        assert!((t.kappa3 - 0.8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn infeasible_branch_rejected() {
        assert!(matches!(
            theorem2_curvatures(-7.0, 0.5f64.sqrt()),
            Err(GeoError::Infeasible(_))
        ));
        assert!(matches!(
            theorem2_curvatures(-7.0, 0.1),
            Err(GeoError::Infeasible(_))
        ));
    }

    #[test]
    fn consistency_triangle() {
        // κ₂² + κ₃² = 1 + h²
        for (c, h) in [(-3.0, 1.0), (-1.0, 0.5), (5.0, 2.0), (-6.9, 1.0)] {
            let t = theorem2_curvatures(c, h).unwrap();
            let lhs = t.kappa2 * t.kappa2 + t.kappa3 * t.kappa3;
            assert!((lhs - 1.0 - h * h).abs() < 1e-10, "c={c}, h={h}");
        }
    }

    #[test]
    fn k_formula_coherence() {
        // (c+3)/4 − 2a² + h² = 0 exactly when a² = (c+3)/8 + h²/2
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let c: f64 = rng.gen_range(-8.0..0.99);
            let h: f64 = rng.gen_range(0.1..2.0);
            let a_sq = (c + 3.0) / 8.0 + h * h / 2.0;
            if a_sq < 0.0 {
                continue;
            }
            let k = (c + 3.0) / 4.0 - 2.0 * a_sq + h * h;
            assert!(k.abs() < 1e-12);
        }
    }

    #[test]
    fn polynomial_scan_values() {
        // direct evaluation at (c, t) = (0, 0.5)
        let p = |c: f64, t: f64| (1.0 - c) * t.powi(4) + (c - 5.0) * t * t - 16.0;
        assert!((p(0.0, 0.5) + 17.1875).abs() < 1e-12);
        let scan = theorem5_polynomial_scan(-50.0, 0.999, 100, 100).unwrap();
        assert!(scan.all_negative);
        assert!(scan.max_value < -14.0, "max {}", scan.max_value);
        assert!(theorem5_polynomial_scan(-10.0, 1.5, 10, 10).is_err());
    }

    #[test]
    fn model_selection_covers_all_branches() {
        assert_eq!(model_for_c(-3.0).unwrap().kind, ModelKind::Heisenberg);
        assert_eq!(model_for_c(-1.0).unwrap().kind, ModelKind::DeformedSphere);
        assert_eq!(model_for_c(1.0).unwrap().kind, ModelKind::StandardSphere);
        assert_eq!(model_for_c(-7.0).unwrap().kind, ModelKind::BallTimesLine);
        assert!((model_for_c(-1.0).unwrap().c + 1.0).abs() < 1e-12);
    }

    #[test]
    fn adapted_frame_satisfies_relations() {
        let model = model_for_c(-3.0).unwrap();
        let (p0, frame) = adapted_start_frame(&model).unwrap();
        let mp = model.eval_point(&p0, 0).unwrap();
        // φ-relations of the adapted legs
        for (src, dst) in [(0usize, 2usize), (1, 3), (4, 5)] {
            let phi_src = mp.phi_of(&frame[src]);
            for k in 0..7 {
                assert!((phi_src[k] - frame[dst][k]).abs() < 1e-12);
            }
        }
        // η vanishes on all but ξ
        for leg in frame.iter().take(6) {
            assert!(mp.eta_of(leg).abs() < 1e-12);
        }
        assert!((mp.eta_of(&frame[6]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn structure_constants_are_skew() {
        for dir in 0..2 {
            let s = structure_constants(0.7, 1.3, dir, 0.0);
            for i in 0..7 {
                for j in 0..7 {
                    assert!(
                        (s[i][j] + s[j][i]).abs() < 1e-15,
                        "dir {dir}: ({i},{j}) not skew"
                    );
                }
            }
        }
    }
}
