//! Frenet apparatus of curves in a metric chart: synthesis of helices from
//! prescribed curvatures by integrating the Frenet system, independent
//! re-extraction of frames and curvatures from position samples, Legendre
//! residuals, and complex torsions of projected curves.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{GeoError, GeoResult};
use crate::fibration::FibrationData;
use crate::flows::{FieldFn, FlowCurve, GuardFn, PostStepFn};
use crate::jet::Jet;
use crate::metric::{christoffel_at_jets, inner, norm, MetricChart};
use crate::models::ModelSpace;

/// Curvature functions κ₁(s)…κ_{r−1}(s) as jets of arclength.
pub type KappaFn = Arc<dyn Fn(&Jet) -> GeoResult<Vec<Jet>> + Send + Sync>;

/// What produced a synthesized curve; retained so fibered constructions can
/// re-integrate the same Frenet data.
#[derive(Clone)]
pub struct CurveGenerator {
    pub start: Vec<f64>,
    pub frame: Vec<Vec<f64>>,
    pub kappa: KappaFn,
    pub r: usize,
}

#[derive(Clone)]
pub struct CurveSample {
    /// Arclength grid (uniform).
    pub s: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    /// Per-sample orthonormal frame legs E₁…E_r.
    pub frame: Vec<Vec<Vec<f64>>>,
    /// Per-sample curvatures κ₁…κ_{r−1}.
    pub curvatures: Vec<Vec<f64>>,
    pub osculating_order: usize,
    pub reparametrized: bool,
    pub truncated: bool,
    pub generator: Option<CurveGenerator>,
}

impl CurveSample {
    pub fn step(&self) -> f64 {
        if self.s.len() >= 2 {
            self.s[1] - self.s[0]
        } else {
            0.0
        }
    }

    /// Mean of κ_i over the samples.
    pub fn mean_curvatures(&self) -> Vec<f64> {
        if self.curvatures.is_empty() {
            return Vec::new();
        }
        let r = self.curvatures[0].len();
        let mut acc = vec![0.0; r];
        for row in &self.curvatures {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        let n = self.curvatures.len() as f64;
        acc.iter().map(|a| a / n).collect()
    }

    /// Max spread (max − min) of each κ_i over the samples.
    pub fn curvature_spread(&self) -> Vec<f64> {
        if self.curvatures.is_empty() {
            return Vec::new();
        }
        let r = self.curvatures[0].len();
        (0..r)
            .map(|i| {
                let vals = self.curvatures.iter().map(|row| row[i]);
                let max = vals.clone().fold(f64::MIN, f64::max);
                let min = vals.fold(f64::MAX, f64::min);
                max - min
            })
            .collect()
    }
}

pub fn constant_kappa(values: Vec<f64>) -> KappaFn {
    Arc::new(move |s: &Jet| {
        Ok(values
            .iter()
            .map(|&k| Jet::constant(k, s.dim(), s.order()))
            .collect())
    })
}

// ---------------------------------------------------------------------------
// Synthesis
// ---------------------------------------------------------------------------

/// Metric Gram–Schmidt in place; returns false on degeneracy.
pub fn gram_schmidt_in_metric(g: &[Vec<f64>], vecs: &mut [Vec<f64>]) -> bool {
    let n = vecs.len();
    for i in 0..n {
        for j in 0..i {
            let proj = inner(g, &vecs[i], &vecs[j]);
            let prev = vecs[j].clone();
            for (x, p) in vecs[i].iter_mut().zip(prev.iter()) {
                *x -= proj * p;
            }
        }
        let nv = norm(g, &vecs[i]);
        if nv < 1e-10 {
            return false;
        }
        for x in vecs[i].iter_mut() {
            *x /= nv;
        }
    }
    true
}

fn frame_orthonormality_residual(g: &[Vec<f64>], frame: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in frame.iter().enumerate() {
        for (j, b) in frame.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((inner(g, a, b) - target).abs());
        }
    }
    worst
}

/// Frenet field on the state [p | E₁…E_r | s].
fn frenet_field(chart: &MetricChart, kappa: KappaFn, r: usize) -> FieldFn {
    let chart = chart.clone();
    Arc::new(move |y: &[Jet]| {
        let d = chart.dim;
        let (jd, o) = (y[0].dim(), y[0].order());
        if o == 0 {
            let p: Vec<f64> = y[0..d].iter().map(|j| j.value).collect();
            let legs: Vec<Vec<f64>> = (0..r)
                .map(|i| y[d + i * d..d + (i + 1) * d].iter().map(|j| j.value).collect())
                .collect();
            let s_val = y[d + r * d].value;
            let ks: Vec<f64> = kappa(&Jet::constant(s_val, 1, 0))?
                .iter()
                .map(|j| j.value)
                .collect();
            let gamma = crate::metric::christoffel_values(&chart, &p)?;
            let mut out: Vec<f64> = legs[0].clone();
            for i in 0..r {
                for k in 0..d {
                    let mut acc = 0.0;
                    if i == 0 {
                        if r >= 2 {
                            acc += ks[0] * legs[1][k];
                        }
                    } else {
                        acc -= ks[i - 1] * legs[i - 1][k];
                        if i + 1 < r {
                            acc += ks[i] * legs[i + 1][k];
                        }
                    }
                    for l in 0..d {
                        if legs[0][l] == 0.0 {
                            continue;
                        }
                        for m in 0..d {
                            acc -= gamma[k][l][m] * legs[0][l] * legs[i][m];
                        }
                    }
                    out.push(acc);
                }
            }
            out.push(1.0);
            return Ok(out.into_iter().map(|v| Jet::constant(v, jd, 0)).collect());
        }
        let p = &y[0..d];
        let legs: Vec<&[Jet]> = (0..r).map(|i| &y[d + i * d..d + (i + 1) * d]).collect();
        let s = &y[d + r * d];
        let ks = kappa(s)?;
        let gamma = christoffel_at_jets(&chart, p, o.min(2))?;

        let zero = || Jet::constant(0.0, jd, o);
        let mut out = Vec::with_capacity(y.len());
        // p' = E₁
        out.extend(legs[0].iter().cloned());
        // Frenet relations with Christoffel correction
        for i in 0..r {
            let mut nabla: Vec<Jet> = vec![zero(); d];
            if i == 0 {
                if r >= 2 {
                    for k in 0..d {
                        nabla[k] = ks[0].mul(&legs[1][k]);
                    }
                }
            } else {
                for k in 0..d {
                    nabla[k] = ks[i - 1].neg().mul(&legs[i - 1][k]);
                    if i + 1 < r {
                        nabla[k] = nabla[k].add(&ks[i].mul(&legs[i + 1][k]));
                    }
                }
            }
            for k in 0..d {
                let mut corr = zero();
                for l in 0..d {
                    for m in 0..d {
                        corr = corr.add(&gamma[k][l][m].mul(&legs[0][l]).mul(&legs[i][m]));
                    }
                }
                out.push(nabla[k].sub(&corr));
            }
        }
        // s' = 1
        out.push(Jet::constant(1.0, jd, o));
        Ok(out)
    })
}

/// Integrate the Frenet system with per-step modified Gram–Schmidt
/// re-orthonormalization of the frame.
pub fn synthesize_curve_with(
    chart: &MetricChart,
    start: &[f64],
    start_frame: &[Vec<f64>],
    kappa: KappaFn,
    r: usize,
    length: f64,
    steps: usize,
) -> GeoResult<CurveSample> {
    let d = chart.dim;
    if start_frame.len() != r {
        return Err(GeoError::Parameter(format!(
            "expected {r} frame legs, got {}",
            start_frame.len()
        )));
    }
    let g0 = chart.metric_values(start)?;
    let ortho = frame_orthonormality_residual(&g0, start_frame);
    if ortho > 1e-8 {
        return Err(GeoError::Precondition {
            what: "start frame must be orthonormal in the chart metric".into(),
            residual: ortho,
        });
    }

    let mut y0 = start.to_vec();
    for leg in start_frame {
        y0.extend_from_slice(leg);
    }
    y0.push(0.0);

    let field = frenet_field(chart, kappa.clone(), r);
    let chart_post = chart.clone();
    let post: PostStepFn = Arc::new(move |y: &mut [f64]| {
        let d = chart_post.dim;
        if let Ok(g) = chart_post.metric_values(&y[0..d].to_vec()) {
            let mut legs: Vec<Vec<f64>> =
                (0..y.len() / d - 1).map(|i| y[d + i * d..d + (i + 1) * d].to_vec()).collect();
            legs.truncate((y.len() - d - 1) / d);
            if gram_schmidt_in_metric(&g, &mut legs) {
                for (i, leg) in legs.iter().enumerate() {
                    y[d + i * d..d + (i + 1) * d].copy_from_slice(leg);
                }
            }
        }
    });
    let chart_guard = chart.clone();
    let guard: GuardFn = Arc::new(move |y: &[f64]| chart_guard.contains(&y[0..chart_guard.dim]));

    let flow = FlowCurve::build(field, y0, 0.0, length, steps, Some(post), Some(guard))?;

    let n = flow.states.len();
    let mut s = Vec::with_capacity(n);
    let mut positions = Vec::with_capacity(n);
    let mut frame = Vec::with_capacity(n);
    let mut curvatures = Vec::with_capacity(n);
    for (idx, st) in flow.states.iter().enumerate() {
        let sv = flow.s_at(idx);
        s.push(sv);
        positions.push(st[0..d].to_vec());
        frame.push((0..r).map(|i| st[d + i * d..d + (i + 1) * d].to_vec()).collect());
        let sj = Jet::constant(sv, 1, 0);
        let ks = kappa(&sj)?;
        curvatures.push(ks.iter().map(|k| k.value).collect());
    }

    Ok(CurveSample {
        s,
        positions,
        frame,
        curvatures,
        osculating_order: r,
        reparametrized: false,
        truncated: false,
        generator: Some(CurveGenerator {
            start: start.to_vec(),
            frame: start_frame.to_vec(),
            kappa,
            r,
        }),
    })
}

/// Synthesize a helix with constant positive curvatures (`r = len + 1`);
/// an empty list integrates a geodesic.
pub fn synthesize_curve(
    chart: &MetricChart,
    start: &[f64],
    start_frame: &[Vec<f64>],
    curvatures: &[f64],
    length: f64,
    steps: usize,
) -> GeoResult<CurveSample> {
    if curvatures.iter().any(|&k| k <= 0.0) {
        return Err(GeoError::Parameter(
            "prescribed curvatures must be positive".into(),
        ));
    }
    let r = curvatures.len() + 1;
    synthesize_curve_with(
        chart,
        start,
        start_frame,
        constant_kappa(curvatures.to_vec()),
        r,
        length,
        steps,
    )
}

/// Orthonormal start frame with all legs orthogonal to ξ (as far as the
/// contact distribution allows); used for Legendre curve synthesis.
pub fn legendre_start_frame(
    model: &ModelSpace,
    p: &[f64],
    legs: usize,
) -> GeoResult<Vec<Vec<f64>>> {
    let mp = model.eval_point(p, 0)?;
    let g = mp.g_values();
    let xi = mp.xi_values();
    let d = model.dim();
    if legs > d - 1 {
        return Err(GeoError::Parameter(format!(
            "at most {} η-horizontal legs exist",
            d - 1
        )));
    }
    let mut frame: Vec<Vec<f64>> = Vec::new();
    for k in 0..d {
        if frame.len() == legs {
            break;
        }
        let mut v = vec![0.0; d];
        v[k] = 1.0;
        let proj = inner(&g, &v, &xi);
        for i in 0..d {
            v[i] -= proj * xi[i];
        }
        for prev in &frame {
            let c = inner(&g, &v, prev);
            for i in 0..d {
                v[i] -= c * prev[i];
            }
        }
        let nv = norm(&g, &v);
        if nv < 1e-8 {
            continue;
        }
        for x in v.iter_mut() {
            *x /= nv;
        }
        frame.push(v);
    }
    if frame.len() < legs {
        return Err(GeoError::Precondition {
            what: "could not complete an η-horizontal frame".into(),
            residual: (legs - frame.len()) as f64,
        });
    }
    Ok(frame)
}

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

/// Eighth-order central first derivative on a strided grid. High order keeps
/// the truncation error negligible while the repeated differentiation of the
/// Frenet recursion amplifies roundoff by ~2/h per stage.
fn stencil_derivative(field: &[Vec<f64>], i: usize, m: usize, h: f64) -> Vec<f64> {
    const W: [(isize, f64); 8] = [
        (-4, 1.0 / 280.0),
        (-3, -4.0 / 105.0),
        (-2, 1.0 / 5.0),
        (-1, -4.0 / 5.0),
        (1, 4.0 / 5.0),
        (2, -1.0 / 5.0),
        (3, 4.0 / 105.0),
        (4, -1.0 / 280.0),
    ];
    let d = field[0].len();
    (0..d)
        .map(|k| {
            W.iter()
                .map(|&(off, w)| {
                    let idx = (i as isize + off * m as isize) as usize;
                    w * field[idx][k]
                })
                .sum::<f64>()
                / h
        })
        .collect()
}

/// Stencil half-width in samples.
const STENCIL_REACH: usize = 4;

/// Frenet frame, curvatures, and osculating order extracted from uniformly
/// sampled positions by strided five-point differences and the chart
/// connection. Independent of any synthesis data.
pub fn frenet_apparatus(
    positions: &[Vec<f64>],
    step: f64,
    chart: &MetricChart,
    rank_tol: f64,
) -> GeoResult<CurveSample> {
    frenet_apparatus_inner(positions, step, chart, rank_tol, true)
}

fn frenet_apparatus_inner(
    positions: &[Vec<f64>],
    step: f64,
    chart: &MetricChart,
    rank_tol: f64,
    allow_reparam: bool,
) -> GeoResult<CurveSample> {
    let n = positions.len();
    let d = chart.dim;
    if n < 60 {
        return Err(GeoError::Parameter(
            "need at least 60 samples for Frenet extraction".into(),
        ));
    }

    // stride targeting h ≈ 1.5e−2 balances truncation against the roundoff
    // amplification of repeated differentiation
    let m = ((1.5e-2 / step).round() as usize).clamp(1, (n - 1) / 60);
    let h = m as f64 * step;
    let max_r = d.min(7);
    // roundoff floor of a j-fold derivative chain, with safety margin
    let noise_floor = |stage: usize| -> f64 { 20.0 * 1e-16 * (2.1 / h).powi(stage as i32) };

    // connection table (parallel): Γ at every sample
    let gammas: Vec<Vec<Vec<Vec<f64>>>> = positions
        .par_iter()
        .map(|p| crate::metric::christoffel_values(chart, p))
        .collect::<GeoResult<Vec<_>>>()?;
    let metrics: Vec<Vec<Vec<f64>>> = positions
        .par_iter()
        .map(|p| chart.metric_values(p))
        .collect::<GeoResult<Vec<_>>>()?;

    // γ' and the unit-speed check
    let reach = STENCIL_REACH * m;
    let mut lo = reach;
    let mut hi = n - 1 - reach;
    if lo >= hi {
        return Err(GeoError::Parameter(
            "curve too short for the differentiation stencils".into(),
        ));
    }
    let tangent: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            if i >= reach && i + reach < n {
                stencil_derivative(positions, i, m, h)
            } else {
                vec![0.0; d]
            }
        })
        .collect();

    let mut speed_dev = 0.0f64;
    for i in lo..=hi {
        let sp = norm(&metrics[i], &tangent[i]);
        speed_dev = speed_dev.max((sp - 1.0).abs());
    }
    if speed_dev > 1e-4 {
        if !allow_reparam {
            return Err(GeoError::Precondition {
                what: "curve is not unit speed even after re-parametrization".into(),
                residual: speed_dev,
            });
        }
        let (resampled, new_step) = reparametrize_by_arclength(positions, step, &metrics)?;
        let mut out = frenet_apparatus_inner(&resampled, new_step, chart, rank_tol, false)?;
        out.reparametrized = true;
        return Ok(out);
    }

    let cov = |field: &[Vec<f64>], lo: usize, hi: usize| -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                if i >= lo + reach && i <= hi.saturating_sub(reach) && i >= reach && i + reach < n {
                    let mut dv = stencil_derivative(field, i, m, h);
                    let gam = &gammas[i];
                    for k in 0..d {
                        for l in 0..d {
                            for q in 0..d {
                                dv[k] += gam[k][l][q] * tangent[i][l] * field[i][q];
                            }
                        }
                    }
                    dv
                } else {
                    vec![0.0; d]
                }
            })
            .collect()
    };

    // E₁ = normalized tangent
    let e1: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let nv = norm(&metrics[i], &tangent[i]);
            if nv > 0.0 {
                tangent[i].iter().map(|x| x / nv).collect()
            } else {
                tangent[i].clone()
            }
        })
        .collect();

    let mut legs: Vec<Vec<Vec<f64>>> = vec![e1];
    let mut kappas: Vec<Vec<f64>> = Vec::new();
    let mut truncated = false;
    let kappa_floor = 1e-6;

    loop {
        let cur = legs.last().unwrap();
        let der = cov(cur, lo, hi);
        lo += reach;
        hi -= reach;
        if lo >= hi {
            break;
        }
        // normal development: F = ∇E_r + κ_{r−1}E_{r−1}
        let mut f: Vec<Vec<f64>> = der;
        if legs.len() >= 2 {
            let prev_kappa = kappas.last().unwrap();
            let prev_leg = &legs[legs.len() - 2];
            for i in lo..=hi {
                for k in 0..d {
                    f[i][k] += prev_kappa[i] * prev_leg[i][k];
                }
            }
        }
        let mags: Vec<f64> = (0..n)
            .map(|i| {
                if i >= lo && i <= hi {
                    norm(&metrics[i], &f[i])
                } else {
                    0.0
                }
            })
            .collect();
        let mean_mag =
            mags[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64;
        let kappa1_scale = if kappas.is_empty() {
            mean_mag.max(kappa_floor)
        } else {
            kappas[0][lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        };

        let stage = legs.len() + 1;
        let threshold = kappa_floor
            .max(rank_tol * kappa1_scale)
            .max(noise_floor(stage));
        if mean_mag < threshold {
            break; // osculating order reached
        }
        if legs.len() == max_r {
            truncated = true;
            break;
        }
        if mags[lo..=hi].iter().any(|&v| v < 0.25 * mean_mag) {
            // curvature dips toward zero inside the window: unreliable order
            truncated = true;
        }
        let next: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                if i >= lo && i <= hi && mags[i] > 0.0 {
                    f[i].iter().map(|x| x / mags[i]).collect()
                } else {
                    vec![0.0; d]
                }
            })
            .collect();
        kappas.push(mags);
        legs.push(next);
    }

    let r = legs.len();
    let mut s = Vec::new();
    let mut out_positions = Vec::new();
    let mut out_frame = Vec::new();
    let mut out_curv = Vec::new();
    for i in lo..=hi {
        s.push(i as f64 * step);
        out_positions.push(positions[i].clone());
        out_frame.push(legs.iter().map(|leg| leg[i].clone()).collect());
        out_curv.push(kappas.iter().map(|k| k[i]).collect());
    }

    Ok(CurveSample {
        s,
        positions: out_positions,
        frame: out_frame,
        curvatures: out_curv,
        osculating_order: r,
        reparametrized: false,
        truncated,
        generator: None,
    })
}

fn reparametrize_by_arclength(
    positions: &[Vec<f64>],
    step: f64,
    metrics: &[Vec<Vec<f64>>],
) -> GeoResult<(Vec<Vec<f64>>, f64)> {
    let n = positions.len();
    let d = positions[0].len();
    // stride-1 central differences: only O(step²) accurate, but free of the
    // boundary margins of the wide stencils
    let mut speeds = vec![0.0; n];
    for i in 0..n {
        let (a, b, denom) = if i == 0 {
            (0, 1, step)
        } else if i == n - 1 {
            (n - 2, n - 1, step)
        } else {
            (i - 1, i + 1, 2.0 * step)
        };
        let diff: Vec<f64> = (0..d)
            .map(|k| (positions[b][k] - positions[a][k]) / denom)
            .collect();
        speeds[i] = norm(&metrics[i], &diff).max(1e-12);
    }
    let mut cum = vec![0.0; n];
    for i in 1..n {
        cum[i] = cum[i - 1] + step * 0.5 * (speeds[i - 1] + speeds[i]);
    }
    let total = cum[n - 1];
    let new_step = total / (n - 1) as f64;
    let mut out = Vec::with_capacity(n);
    let mut seg = 0usize;
    for j in 0..n {
        let target = j as f64 * new_step;
        while seg + 2 < n && cum[seg + 1] < target {
            seg += 1;
        }
        let t = ((target - cum[seg]) / (cum[seg + 1] - cum[seg])).clamp(0.0, 1.0);
        // cubic Hermite on each component
        let span = cum[seg + 1] - cum[seg];
        let p0 = &positions[seg];
        let p1 = &positions[seg + 1];
        let d0: Vec<f64> = (0..d)
            .map(|k| {
                if seg >= 1 && seg + 1 < n {
                    (positions[seg + 1][k] - positions[seg - 1][k]) / (cum[seg + 1] - cum[seg - 1])
                } else {
                    (positions[seg + 1][k] - positions[seg][k]) / span
                }
            })
            .collect();
        let d1: Vec<f64> = (0..d)
            .map(|k| {
                if seg + 2 < n {
                    (positions[seg + 2][k] - positions[seg][k]) / (cum[seg + 2] - cum[seg])
                } else {
                    (positions[seg + 1][k] - positions[seg][k]) / span
                }
            })
            .collect();
        let h00 = 2.0 * t * t * t - 3.0 * t * t + 1.0;
        let h10 = t * t * t - 2.0 * t * t + t;
        let h01 = -2.0 * t * t * t + 3.0 * t * t;
        let h11 = t * t * t - t * t;
        out.push(
            (0..d)
                .map(|k| {
                    h00 * p0[k] + h10 * span * d0[k] + h01 * p1[k] + h11 * span * d1[k]
                })
                .collect(),
        );
    }
    Ok((out, new_step))
}

// ---------------------------------------------------------------------------
// Legendre residual and complex torsions
// ---------------------------------------------------------------------------

/// max |η(γ′)| over the samples.
pub fn legendre_residual(sample: &CurveSample, model: &ModelSpace) -> GeoResult<f64> {
    let mut worst = 0.0f64;
    for (p, legs) in sample.positions.iter().zip(sample.frame.iter()) {
        let mp = model.eval_point(p, 0)?;
        worst = worst.max(mp.eta_of(&legs[0]).abs());
    }
    Ok(worst)
}

#[derive(Clone, Debug)]
pub struct TorsionTable {
    pub r: usize,
    /// τ_ij for 1 ≤ i < j ≤ r (1-based indices).
    pub tau: Vec<((usize, usize), f64)>,
}

impl TorsionTable {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.tau
            .iter()
            .find(|((a, b), _)| *a == i && *b == j)
            .map(|(_, t)| *t)
    }
}

/// Project a curve through the fibration, extract the base Frenet frame, and
/// pair the legs with the base complex structure.
pub fn complex_torsions(
    sample: &CurveSample,
    fib: &FibrationData,
) -> GeoResult<TorsionTable> {
    let step = sample.step();
    if step <= 0.0 {
        return Err(GeoError::Parameter("curve sample too short".into()));
    }
    let base_positions: Vec<Vec<f64>> = sample
        .positions
        .iter()
        .map(|p| fib.project_point(p))
        .collect::<GeoResult<Vec<_>>>()?;
    let base = frenet_apparatus(&base_positions, step, &fib.base_chart, 1e-6)?;
    let r = base.osculating_order;
    let mut sums: Vec<((usize, usize), (f64, usize))> = Vec::new();
    for i in 1..=r {
        for j in (i + 1)..=r {
            sums.push(((i, j), (0.0, 0)));
        }
    }
    for (p, legs) in base.positions.iter().zip(base.frame.iter()) {
        let jm = fib.base_j_values(p)?;
        let g = fib.base_chart.metric_values(p)?;
        for ((i, j), (acc, count)) in sums.iter_mut() {
            let ei = &legs[*i - 1];
            let ej = &legs[*j - 1];
            let jej: Vec<f64> = (0..ej.len())
                .map(|a| (0..ej.len()).map(|b| jm[a][b] * ej[b]).sum())
                .collect();
            *acc += inner(&g, ei, &jej);
            *count += 1;
        }
    }
    let tau = sums
        .into_iter()
        .map(|((i, j), (acc, count))| ((i, j), acc / count.max(1) as f64))
        .collect();
    Ok(TorsionTable { r, tau })
}
