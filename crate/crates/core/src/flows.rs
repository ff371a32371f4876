//! Integration machinery for autonomous fields evaluated through jets:
//! classical RK4 tables, Taylor jets of flow curves, and surfaces swept by a
//! pair of commuting fields.
//!
//! A field is a jet-differentiable map `F: ℝᵐ → ℝᵐ`; the independents of the
//! jets handed to a field are the *flow parameters*, never the state
//! coordinates, so fields must be pure algebraic compositions of their
//! inputs (use [`crate::jet::compose`]-based helpers for anything that needs
//! chart derivatives).

use std::sync::Arc;

use crate::error::{GeoError, GeoResult};
use crate::jet::{seed_independents, Jet};

pub type FieldFn = Arc<dyn Fn(&[Jet]) -> GeoResult<Vec<Jet>> + Send + Sync>;
/// Optional projection applied after each integration step (frame
/// re-orthonormalization and the like).
pub type PostStepFn = Arc<dyn Fn(&mut [f64]) + Send + Sync>;
/// Domain guard: `false` aborts the integration with a chart-exit error.
pub type GuardFn = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

pub fn field_values(field: &FieldFn, y: &[f64]) -> GeoResult<Vec<f64>> {
    let jets: Vec<Jet> = y.iter().map(|&v| Jet::constant(v, 1, 0)).collect();
    Ok(field(&jets)?.into_iter().map(|j| j.value).collect())
}

pub fn rk4_step(field: &FieldFn, y: &[f64], h: f64) -> GeoResult<Vec<f64>> {
    let m = y.len();
    let k1 = field_values(field, y)?;
    let mid1: Vec<f64> = (0..m).map(|i| y[i] + 0.5 * h * k1[i]).collect();
    let k2 = field_values(field, &mid1)?;
    let mid2: Vec<f64> = (0..m).map(|i| y[i] + 0.5 * h * k2[i]).collect();
    let k3 = field_values(field, &mid2)?;
    let end: Vec<f64> = (0..m).map(|i| y[i] + h * k3[i]).collect();
    let k4 = field_values(field, &end)?;
    Ok((0..m)
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Advance by `delta` using RK4 substeps of size at most `max_step`.
pub fn advance(
    field: &FieldFn,
    y: &[f64],
    delta: f64,
    max_step: f64,
    post: Option<&PostStepFn>,
) -> GeoResult<Vec<f64>> {
    if delta == 0.0 {
        return Ok(y.to_vec());
    }
    let nsub = (delta.abs() / max_step).ceil().max(1.0) as usize;
    let h = delta / nsub as f64;
    let mut cur = y.to_vec();
    for _ in 0..nsub {
        cur = rk4_step(field, &cur, h)?;
        if let Some(p) = post {
            p(&mut cur);
        }
    }
    Ok(cur)
}

/// Taylor jets of the joint flow of `fields` through `y0`, assuming the
/// fields commute. The jets have one independent per field; coefficients are
/// filled degree by degree from `∂y/∂τ_v = F_v(y)`.
pub fn flow_jets(fields: &[&FieldFn], y0: &[f64], order: usize) -> GeoResult<Vec<Jet>> {
    let nvars = fields.len();
    let m = y0.len();
    let mut y: Vec<Jet> = y0
        .iter()
        .map(|&v| Jet::constant(v, nvars, order))
        .collect();

    let truncate = |y: &[Jet], o: usize| -> Vec<Jet> {
        y.iter().map(|j| j.clone().truncated(o)).collect()
    };
    if order >= 1 {
        let ytr = truncate(&y, 0);
        for v in 0..nvars {
            let f = fields[v](&ytr)?;
            for c in 0..m {
                y[c].first[v] = f[c].value;
            }
        }
    }
    if order >= 2 {
        let ytr = truncate(&y, 1);
        for v in 0..nvars {
            let f = fields[v](&ytr)?;
            for w in v..nvars {
                for c in 0..m {
                    let val = f[c].first[w];
                    y[c].second[v * nvars + w] = val;
                    y[c].second[w * nvars + v] = val;
                }
            }
        }
    }
    if order >= 3 {
        let ytr = truncate(&y, 2);
        for v in 0..nvars {
            let f = fields[v](&ytr)?;
            for w in v..nvars {
                for x in w..nvars {
                    for c in 0..m {
                        let val = f[c].second[w * nvars + x];
                        for (a, b, cc) in [
                            (v, w, x),
                            (v, x, w),
                            (w, v, x),
                            (w, x, v),
                            (x, v, w),
                            (x, w, v),
                        ] {
                            y[c].third[(a * nvars + b) * nvars + cc] = val;
                        }
                    }
                }
            }
        }
    }
    Ok(y)
}

/// Max-norm of the commutator `dF_u·F_v − dF_v·F_u` at a state.
pub fn commutator_norm(field_u: &FieldFn, field_v: &FieldFn, y: &[f64]) -> GeoResult<f64> {
    let seeds = seed_independents(y, 1)?;
    let fu = field_u(&seeds)?;
    let fv = field_v(&seeds)?;
    let m = y.len();
    let mut worst = 0.0f64;
    for i in 0..m {
        let mut acc = 0.0;
        for j in 0..m {
            acc += fu[i].first[j] * fv[j].value - fv[i].first[j] * fu[j].value;
        }
        worst = worst.max(acc.abs());
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Flow curves
// ---------------------------------------------------------------------------

#[derive(Clone)]
pub struct FlowCurve {
    pub field: FieldFn,
    pub s_start: f64,
    pub step: f64,
    pub states: Vec<Vec<f64>>,
    max_substep: f64,
}

impl FlowCurve {
    pub fn build(
        field: FieldFn,
        y0: Vec<f64>,
        s_start: f64,
        length: f64,
        steps: usize,
        post: Option<PostStepFn>,
        guard: Option<GuardFn>,
    ) -> GeoResult<FlowCurve> {
        let step = length / steps as f64;
        let mut states = Vec::with_capacity(steps + 1);
        let mut cur = y0;
        if let Some(g) = &guard {
            if !g(&cur) {
                return Err(GeoError::ChartExit {
                    s: s_start,
                    point: cur,
                });
            }
        }
        states.push(cur.clone());
        for k in 0..steps {
            cur = rk4_step(&field, &cur, step).map_err(|e| match e {
                GeoError::Domain { point, .. } => GeoError::ChartExit {
                    s: s_start + (k + 1) as f64 * step,
                    point,
                },
                other => other,
            })?;
            if let Some(p) = &post {
                p(&mut cur);
            }
            if let Some(g) = &guard {
                if !g(&cur) {
                    return Err(GeoError::ChartExit {
                        s: s_start + (k + 1) as f64 * step,
                        point: cur,
                    });
                }
            }
            states.push(cur.clone());
        }
        Ok(FlowCurve {
            field,
            s_start,
            step,
            states,
            max_substep: step.abs().min(1e-3),
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn s_at(&self, idx: usize) -> f64 {
        self.s_start + idx as f64 * self.step
    }

    pub fn state_at(&self, s: f64) -> GeoResult<Vec<f64>> {
        let rel = (s - self.s_start) / self.step;
        let idx = (rel.round() as isize).clamp(0, self.states.len() as isize - 1) as usize;
        let delta = s - self.s_at(idx);
        if delta.abs() < 1e-12 {
            return Ok(self.states[idx].clone());
        }
        advance(&self.field, &self.states[idx], delta, self.max_substep, None)
    }

    pub fn jets_at(&self, s: f64, order: usize) -> GeoResult<Vec<Jet>> {
        let y = self.state_at(s)?;
        flow_jets(&[&self.field], &y, order)
    }
}

// ---------------------------------------------------------------------------
// Flow surfaces
// ---------------------------------------------------------------------------

/// Surface swept by two commuting fields: a `v`-spine through the start state
/// and `u`-lines across it. Node states are stored; jets at arbitrary (u,v)
/// come from short RK4 refinements plus [`flow_jets`].
pub struct FlowSurface {
    pub field_u: FieldFn,
    pub field_v: FieldFn,
    pub u_range: (f64, f64),
    pub v_range: (f64, f64),
    pub nu: usize,
    pub nv: usize,
    /// `states[iv * nu + iu]`
    pub states: Vec<Vec<f64>>,
    max_substep: f64,
}

impl FlowSurface {
    pub fn build(
        field_u: FieldFn,
        field_v: FieldFn,
        y0: Vec<f64>,
        u_range: (f64, f64),
        v_range: (f64, f64),
        grid: (usize, usize),
        max_substep: f64,
    ) -> GeoResult<FlowSurface> {
        let (nu, nv) = grid;
        assert!(nu >= 2 && nv >= 2, "grid needs at least 2 nodes per axis");
        let du = (u_range.1 - u_range.0) / (nu - 1) as f64;
        let dv = (v_range.1 - v_range.0) / (nv - 1) as f64;

        let mut spine = Vec::with_capacity(nv);
        spine.push(y0);
        for iv in 1..nv {
            let prev = spine[iv - 1].clone();
            spine.push(advance(&field_v, &prev, dv, max_substep, None)?);
        }

        // u-lines from each spine node are independent
        use rayon::prelude::*;
        let rows: Vec<Vec<Vec<f64>>> = spine
            .into_par_iter()
            .map(|start| {
                let mut row = Vec::with_capacity(nu);
                row.push(start);
                for iu in 1..nu {
                    let prev = row[iu - 1].clone();
                    row.push(advance(&field_u, &prev, du, max_substep, None)?);
                }
                Ok(row)
            })
            .collect::<GeoResult<Vec<_>>>()?;
        let states: Vec<Vec<f64>> = rows.into_iter().flatten().collect();
        Ok(FlowSurface {
            field_u,
            field_v,
            u_range,
            v_range,
            nu,
            nv,
            states,
            max_substep,
        })
    }

    pub fn du(&self) -> f64 {
        (self.u_range.1 - self.u_range.0) / (self.nu - 1) as f64
    }

    pub fn dv(&self) -> f64 {
        (self.v_range.1 - self.v_range.0) / (self.nv - 1) as f64
    }

    pub fn state_at(&self, u: f64, v: f64) -> GeoResult<Vec<f64>> {
        let du = self.du();
        let dv = self.dv();
        let iu = (((u - self.u_range.0) / du).round() as isize).clamp(0, self.nu as isize - 1)
            as usize;
        let iv = (((v - self.v_range.0) / dv).round() as isize).clamp(0, self.nv as isize - 1)
            as usize;
        let su = self.u_range.0 + iu as f64 * du;
        let sv = self.v_range.0 + iv as f64 * dv;
        let mut y = self.states[iv * self.nu + iu].clone();
        if (v - sv).abs() > 1e-12 {
            y = advance(&self.field_v, &y, v - sv, self.max_substep, None)?;
        }
        if (u - su).abs() > 1e-12 {
            y = advance(&self.field_u, &y, u - su, self.max_substep, None)?;
        }
        Ok(y)
    }

    pub fn jets_at(&self, u: f64, v: f64, order: usize) -> GeoResult<Vec<Jet>> {
        let y = self.state_at(u, v)?;
        flow_jets(&[&self.field_u, &self.field_v], &y, order)
    }

    /// Max commutator norm over a subsample of node states.
    pub fn commutator_residual(&self, max_samples: usize) -> GeoResult<f64> {
        let total = self.states.len();
        let stride = (total / max_samples.max(1)).max(1);
        let mut worst = 0.0f64;
        for idx in (0..total).step_by(stride) {
            worst = worst.max(commutator_norm(
                &self.field_u,
                &self.field_v,
                &self.states[idx],
            )?);
        }
        Ok(worst)
    }

    /// Integrate to the far corner along both route orders and compare.
    pub fn corner_residual(&self) -> GeoResult<f64> {
        let y0 = &self.states[0];
        let du_total = self.u_range.1 - self.u_range.0;
        let dv_total = self.v_range.1 - self.v_range.0;
        let step = self.max_substep;
        let (ra, rb) = rayon::join(
            || -> GeoResult<Vec<f64>> {
                let a = advance(&self.field_u, y0, du_total, step, None)?;
                advance(&self.field_v, &a, dv_total, step, None)
            },
            || -> GeoResult<Vec<f64>> {
                let b = advance(&self.field_v, y0, dv_total, step, None)?;
                advance(&self.field_u, &b, du_total, step, None)
            },
        );
        let (a, b) = (ra?, rb?);
        Ok(a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotation_field() -> FieldFn {
        // y' = (−y₂, y₁): circular motion
        Arc::new(|y: &[Jet]| Ok(vec![y[1].neg(), y[0].clone()]))
    }

    #[test]
    fn rk4_circle_period() {
        let f = rotation_field();
        let curve = FlowCurve::build(
            f,
            vec![1.0, 0.0],
            0.0,
            2.0 * std::f64::consts::PI,
            4000,
            None,
            None,
        )
        .unwrap();
        let last = curve.states.last().unwrap();
        assert!((last[0] - 1.0).abs() < 1e-10);
        assert!(last[1].abs() < 1e-10);
    }

    #[test]
    fn flow_jets_match_analytic_taylor() {
        // solution (cos s, sin s) at s = 0: derivatives known
        let f = rotation_field();
        let jets = flow_jets(&[&f], &[1.0, 0.0], 3).unwrap();
        // y₀ = cos: value 1, d1 0, d2 −1, d3 0
        assert!((jets[0].value - 1.0).abs() < 1e-15);
        assert!(jets[0].first[0].abs() < 1e-15);
        assert!((jets[0].second[0] + 1.0).abs() < 1e-15);
        assert!(jets[0].third[0].abs() < 1e-15);
        // y₁ = sin: value 0, d1 1, d2 0, d3 −1
        assert!((jets[1].first[0] - 1.0).abs() < 1e-15);
        assert!((jets[1].third[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn commuting_translations_build_flat_sheet() {
        let fu: FieldFn = Arc::new(|y: &[Jet]| {
            let (d, o) = (y[0].dim(), y[0].order());
            Ok(vec![Jet::constant(1.0, d, o), Jet::constant(0.0, d, o)])
        });
        let fv: FieldFn = Arc::new(|y: &[Jet]| {
            let (d, o) = (y[0].dim(), y[0].order());
            Ok(vec![y[0].scale(0.0), Jet::constant(2.0, d, o)])
        });
        let surf = FlowSurface::build(
            fu,
            fv,
            vec![0.0, 0.0],
            (0.0, 1.0),
            (0.0, 1.0),
            (5, 5),
            1e-2,
        )
        .unwrap();
        assert!(surf.corner_residual().unwrap() < 1e-12);
        assert!(surf.commutator_residual(10).unwrap() < 1e-12);
        let st = surf.state_at(0.5, 0.25).unwrap();
        assert!((st[0] - 0.5).abs() < 1e-12);
        assert!((st[1] - 0.5).abs() < 1e-12);
        let jets = surf.jets_at(0.3, 0.7, 2).unwrap();
        assert!((jets[0].first[0] - 1.0).abs() < 1e-12);
        assert!((jets[1].first[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn noncommuting_fields_detected() {
        let fu: FieldFn = Arc::new(|y: &[Jet]| {
            let (d, o) = (y[0].dim(), y[0].order());
            Ok(vec![Jet::constant(1.0, d, o), Jet::constant(0.0, d, o)])
        });
        // F_v depends on y₀, so [F_u, F_v] ≠ 0
        let fv: FieldFn = Arc::new(|y: &[Jet]| {
            let (d, o) = (y[0].dim(), y[0].order());
            Ok(vec![Jet::constant(0.0, d, o), y[0].clone()])
        });
        let r = commutator_norm(&fu, &fv, &[0.3, 0.1]).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }
}
