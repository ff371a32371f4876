//! Second-order geometry of parametrized surfaces in a model space: induced
//! metric, second fundamental form, mean curvature, adapted normal frames,
//! the fundamental equations, and the classification predicates used for
//! surfaces in contact geometry.
//!
//! All derivative quantities come from jets of the immersion composed with
//! jets of the ambient structure tensors, so first derivatives of σ and H
//! (and hence normal-connection residuals) are exact up to roundoff. Only
//! the normal-curvature check uses numerical differentiation, with an
//! analytic five-point stencil at step 1e−3 independent of the grid.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{GeoError, GeoResult};
use crate::flows::FlowSurface;
use crate::jet::Jet;
use crate::metric::{
    christoffel_at_jets, christoffel_jets, inner, matrix_at_jets, norm, riemann, riemann_jets,
    vector_at_jets,
};
use crate::models::ModelSpace;

pub type ImmersionFn = Arc<dyn Fn(f64, f64, usize) -> GeoResult<Vec<Jet>> + Send + Sync>;

pub struct SurfacePatch {
    pub model: Arc<ModelSpace>,
    pub immersion: ImmersionFn,
    pub u_range: (f64, f64),
    pub v_range: (f64, f64),
    /// Node counts per axis.
    pub grid: (usize, usize),
}

impl SurfacePatch {
    pub fn from_closure<F>(
        model: Arc<ModelSpace>,
        f: F,
        u_range: (f64, f64),
        v_range: (f64, f64),
        grid: (usize, usize),
    ) -> SurfacePatch
    where
        F: Fn(&Jet, &Jet) -> GeoResult<Vec<Jet>> + Send + Sync + 'static,
    {
        let immersion: ImmersionFn = Arc::new(move |u: f64, v: f64, order: usize| {
            let uj = Jet::independent(u, 0, 2, order);
            let vj = Jet::independent(v, 1, 2, order);
            f(&uj, &vj)
        });
        SurfacePatch {
            model,
            immersion,
            u_range,
            v_range,
            grid,
        }
    }

    /// Wrap a flow surface; the immersion is the leading `dim` state block.
    pub fn from_flow(
        model: Arc<ModelSpace>,
        flow: Arc<FlowSurface>,
        dim: usize,
    ) -> GeoResult<SurfacePatch> {
        let u_range = flow.u_range;
        let v_range = flow.v_range;
        let grid = (flow.nu, flow.nv);
        let immersion: ImmersionFn = Arc::new(move |u: f64, v: f64, order: usize| {
            let jets = flow.jets_at(u, v, order)?;
            Ok(jets[0..dim].to_vec())
        });
        Ok(SurfacePatch {
            model,
            immersion,
            u_range,
            v_range,
            grid,
        })
    }

    pub fn nodes(&self) -> (Vec<f64>, Vec<f64>) {
        let (nu, nv) = self.grid;
        let du = (self.u_range.1 - self.u_range.0) / (nu - 1) as f64;
        let dv = (self.v_range.1 - self.v_range.0) / (nv - 1) as f64;
        (
            (0..nu).map(|i| self.u_range.0 + i as f64 * du).collect(),
            (0..nv).map(|j| self.v_range.0 + j as f64 * dv).collect(),
        )
    }
}

// ---------------------------------------------------------------------------
// Node jets
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameLabel {
    PhiE1,
    PhiE2,
    MeanDir,
    PhiMean,
    Xi,
    Coord(usize),
}

pub struct FrameLeg {
    pub label: FrameLabel,
    pub vec: Vec<Jet>,
}

/// Evaluation orders for a node-jet build.
#[derive(Clone, Copy)]
pub struct NodeLevel {
    pub x_order: usize,
    pub g_order: usize,
    pub gamma_order: usize,
    pub phi_order: usize,
    pub eta_order: usize,
}

impl NodeLevel {
    /// Pointwise geometry only.
    pub const VALUES: NodeLevel = NodeLevel {
        x_order: 2,
        g_order: 1,
        gamma_order: 0,
        phi_order: 0,
        eta_order: 0,
    };
    /// First derivatives of σ, H, frames.
    pub const DERIV: NodeLevel = NodeLevel {
        x_order: 3,
        g_order: 1,
        gamma_order: 1,
        phi_order: 1,
        eta_order: 1,
    };
    /// Everything, including second derivatives of the induced metric.
    pub const FULL: NodeLevel = NodeLevel {
        x_order: 3,
        g_order: 2,
        gamma_order: 1,
        phi_order: 1,
        eta_order: 1,
    };
}

pub struct NodeJets {
    pub u: f64,
    pub v: f64,
    pub x: Vec<Jet>,
    pub tu: Vec<Jet>,
    pub tv: Vec<Jet>,
    pub g_amb: Vec<Vec<Jet>>,
    pub gamma: Vec<Vec<Vec<Jet>>>,
    pub phi: Vec<Vec<Jet>>,
    pub eta: Vec<Jet>,
    pub xi: Vec<Jet>,
    /// Induced metric entries [g11, g12, g22].
    pub gind: [Jet; 3],
    /// Inverse induced metric [g^11, g^12, g^22].
    pub gind_inv: [Jet; 3],
    /// σ(∂u,∂u), σ(∂u,∂v), σ(∂v,∂v).
    pub sigma: [Vec<Jet>; 3],
    pub h: Vec<Jet>,
    /// Orthonormal tangents as coordinate coefficients (α, β): Ê = α∂u + β∂v.
    pub e_coef: [[Jet; 2]; 2],
    /// Orthonormal tangents as ambient vectors.
    pub e_amb: [Vec<Jet>; 2],
    pub frame: Vec<FrameLeg>,
}

impl NodeJets {
    pub fn inner_values(&self, a: &[f64], b: &[f64]) -> f64 {
        let d = a.len();
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += self.g_amb[i][j].value * a[i] * b[j];
            }
        }
        acc
    }

    fn inner_jets(&self, a: &[Jet], b: &[Jet]) -> Jet {
        let d = a.len();
        let mut acc = Jet::constant(0.0, a[0].dim(), a[0].order().min(b[0].order()));
        for i in 0..d {
            for j in 0..d {
                acc = acc.add(&self.g_amb[i][j].mul(&a[i]).mul(&b[j]));
            }
        }
        acc
    }

    /// Split an ambient vector (jets) into tangential coefficients and the
    /// normal remainder.
    fn split(&self, w: &[Jet]) -> ([Jet; 2], Vec<Jet>) {
        let wu = self.inner_jets(w, &self.tu);
        let wv = self.inner_jets(w, &self.tv);
        let cu = self.gind_inv[0].mul(&wu).add(&self.gind_inv[1].mul(&wv));
        let cv = self.gind_inv[1].mul(&wu).add(&self.gind_inv[2].mul(&wv));
        let perp: Vec<Jet> = (0..w.len())
            .map(|k| w[k].sub(&cu.mul(&self.tu[k])).sub(&cv.mul(&self.tv[k])))
            .collect();
        ([cu, cv], perp)
    }

    pub fn perp(&self, w: &[Jet]) -> Vec<Jet> {
        self.split(w).1
    }

    pub fn perp_values(&self, w: &[f64]) -> Vec<f64> {
        let jw: Vec<Jet> = w.iter().map(|&x| Jet::constant(x, 2, 0)).collect();
        self.perp(&jw).iter().map(|j| j.value).collect()
    }

    /// Ambient covariant derivative of a (jet) field along ∂_a, at values.
    pub fn ambient_derivative(&self, field: &[Jet], axis: usize) -> Vec<f64> {
        let d = field.len();
        let t = if axis == 0 { &self.tu } else { &self.tv };
        (0..d)
            .map(|k| {
                let mut acc = field[k].first[axis];
                for l in 0..d {
                    for m in 0..d {
                        acc += self.gamma[k][l][m].value * t[l].value * field[m].value;
                    }
                }
                acc
            })
            .collect()
    }

    /// ∇⊥ of a normal (jet) field along ∂_a, at values.
    pub fn normal_derivative(&self, field: &[Jet], axis: usize) -> Vec<f64> {
        self.perp_values(&self.ambient_derivative(field, axis))
    }
}

pub fn build_node_jets(
    patch: &SurfacePatch,
    u: f64,
    v: f64,
    level: NodeLevel,
    forced_frame: Option<&[FrameLabel]>,
) -> GeoResult<NodeJets> {
    let model = &patch.model;
    let d = model.dim();
    let x = (patch.immersion)(u, v, level.x_order)?;
    if x.len() != d {
        return Err(GeoError::Dimension(format!(
            "immersion returned {} components for a chart of dimension {d}",
            x.len()
        )));
    }
    let x0: Vec<f64> = x.iter().map(|j| j.value).collect();
    patch.model.chart.check_domain(&x0)?;

    let g_amb = matrix_at_jets(&model.chart.metric, &x, level.g_order)?;
    let gamma = christoffel_at_jets(&model.chart, &x, level.gamma_order)?;
    let phi = matrix_at_jets(&model.phi, &x, level.phi_order)?;
    let eta = vector_at_jets(&model.eta, &x, level.eta_order)?;
    let xi = vector_at_jets(&model.xi, &x, level.eta_order)?;

    let tu: Vec<Jet> = x.iter().map(|j| j.partial(0)).collect();
    let tv: Vec<Jet> = x.iter().map(|j| j.partial(1)).collect();

    let jet_inner = |a: &[Jet], b: &[Jet]| -> Jet {
        let mut acc = Jet::constant(0.0, 2, a[0].order().min(b[0].order()).min(level.g_order));
        for i in 0..d {
            for j in 0..d {
                acc = acc.add(&g_amb[i][j].mul(&a[i]).mul(&b[j]));
            }
        }
        acc
    };
    let g11 = jet_inner(&tu, &tu);
    let g12 = jet_inner(&tu, &tv);
    let g22 = jet_inner(&tv, &tv);
    let det = g11.mul(&g22).sub(&g12.mul(&g12));
    if det.value <= 0.0 {
        return Err(GeoError::Immersion {
            u,
            v,
            min_eig: det.value,
        });
    }
    let inv_det = det.recip()?;
    let gind_inv = [
        g22.mul(&inv_det),
        g12.neg().mul(&inv_det),
        g11.mul(&inv_det),
    ];
    let gind = [g11.clone(), g12.clone(), g22.clone()];

    // second derivatives of the immersion + connection correction
    let hess =
        |a: usize, b: usize| -> Vec<Jet> { x.iter().map(|j| j.partial(a).partial(b)).collect() };
    let nabla = |a: usize, b: usize, hess_ab: Vec<Jet>| -> Vec<Jet> {
        let ta = if a == 0 { &tu } else { &tv };
        let tb = if b == 0 { &tu } else { &tv };
        (0..d)
            .map(|k| {
                let mut acc = hess_ab[k].clone();
                for l in 0..d {
                    for m in 0..d {
                        acc = acc.add(&gamma[k][l][m].mul(&ta[l]).mul(&tb[m]));
                    }
                }
                acc
            })
            .collect()
    };
    let nab_uu = nabla(0, 0, hess(0, 0));
    let nab_uv = nabla(0, 1, hess(0, 1));
    let nab_vv = nabla(1, 1, hess(1, 1));

    // tangential split helper on raw pieces (before NodeJets exists)
    let split = |w: &[Jet]| -> Vec<Jet> {
        let wu = jet_inner(w, &tu);
        let wv = jet_inner(w, &tv);
        let cu = gind_inv[0].mul(&wu).add(&gind_inv[1].mul(&wv));
        let cv = gind_inv[1].mul(&wu).add(&gind_inv[2].mul(&wv));
        (0..d)
            .map(|k| w[k].sub(&cu.mul(&tu[k])).sub(&cv.mul(&tv[k])))
            .collect()
    };
    let sigma = [split(&nab_uu), split(&nab_uv), split(&nab_vv)];

    // H = ½ g^{ab} σ_ab
    let h: Vec<Jet> = (0..d)
        .map(|k| {
            gind_inv[0]
                .mul(&sigma[0][k])
                .add(&gind_inv[1].mul(&sigma[1][k]).scale(2.0))
                .add(&gind_inv[2].mul(&sigma[2][k]))
                .scale(0.5)
        })
        .collect();

    // orthonormal tangents
    let inv_sqrt_g11 = g11.sqrt()?.recip()?;
    let n2sq = g22.sub(&g12.mul(&g12).div(&g11)?);
    if n2sq.value <= 0.0 {
        return Err(GeoError::Immersion {
            u,
            v,
            min_eig: n2sq.value,
        });
    }
    let inv_n2 = n2sq.sqrt()?.recip()?;
    let e1_coef = [inv_sqrt_g11.clone(), Jet::constant(0.0, 2, inv_sqrt_g11.order())];
    let e2_coef = [
        g12.neg().div(&g11)?.mul(&inv_n2),
        inv_n2.clone(),
    ];
    let lin = |c: &[Jet; 2]| -> Vec<Jet> {
        (0..d)
            .map(|k| c[0].mul(&tu[k]).add(&c[1].mul(&tv[k])))
            .collect()
    };
    let e1_amb = lin(&e1_coef);
    let e2_amb = lin(&e2_coef);

    let mut node = NodeJets {
        u,
        v,
        x,
        tu,
        tv,
        g_amb,
        gamma,
        phi,
        eta,
        xi,
        gind,
        gind_inv,
        sigma,
        h,
        e_coef: [e1_coef, e2_coef],
        e_amb: [e1_amb, e2_amb],
        frame: Vec::new(),
    };
    build_normal_frame(&mut node, forced_frame)?;
    Ok(node)
}

fn apply_phi(node: &NodeJets, w: &[Jet]) -> Vec<Jet> {
    let d = w.len();
    (0..d)
        .map(|i| {
            let mut acc = Jet::constant(0.0, 2, node.phi[0][0].order().min(w[0].order()));
            for j in 0..d {
                acc = acc.add(&node.phi[i][j].mul(&w[j]));
            }
            acc
        })
        .collect()
}

/// Gram–Schmidt over the adapted candidate list φÊ₁, φÊ₂, Ĥ, φĤ, ξ and then
/// ambient coordinate directions; degenerate candidates are skipped.
fn build_normal_frame(node: &mut NodeJets, forced: Option<&[FrameLabel]>) -> GeoResult<()> {
    let d = node.x.len();
    let codim = d - 2;
    let h_norm_sq = node.inner_jets(&node.h, &node.h);

    let candidate = |node: &NodeJets, label: FrameLabel| -> GeoResult<Option<Vec<Jet>>> {
        Ok(match label {
            FrameLabel::PhiE1 => Some(apply_phi(node, &node.e_amb[0])),
            FrameLabel::PhiE2 => Some(apply_phi(node, &node.e_amb[1])),
            FrameLabel::MeanDir => {
                if h_norm_sq.value < 1e-16 {
                    None
                } else {
                    let inv = h_norm_sq.sqrt()?.recip()?;
                    Some(node.h.iter().map(|c| c.mul(&inv)).collect())
                }
            }
            FrameLabel::PhiMean => {
                if h_norm_sq.value < 1e-16 {
                    None
                } else {
                    let inv = h_norm_sq.sqrt()?.recip()?;
                    let hn: Vec<Jet> = node.h.iter().map(|c| c.mul(&inv)).collect();
                    Some(apply_phi(node, &hn))
                }
            }
            FrameLabel::Xi => Some(node.xi.clone()),
            FrameLabel::Coord(k) => {
                let o = node.x[0].order().saturating_sub(1);
                let mut v = vec![Jet::constant(0.0, 2, o); d];
                v[k] = Jet::constant(1.0, 2, o);
                Some(v)
            }
        })
    };

    let labels: Vec<FrameLabel> = match forced {
        Some(list) => list.to_vec(),
        None => {
            let mut l = vec![
                FrameLabel::PhiE1,
                FrameLabel::PhiE2,
                FrameLabel::MeanDir,
                FrameLabel::PhiMean,
                FrameLabel::Xi,
            ];
            l.extend((0..d).map(FrameLabel::Coord));
            l
        }
    };

    let mut frame: Vec<FrameLeg> = Vec::new();
    for label in labels {
        if frame.len() == codim && forced.is_none() {
            break;
        }
        let Some(cand) = candidate(node, label)? else {
            continue;
        };
        // project out tangents and accepted normals, twice
        let mut w = node.perp(&cand);
        for leg in &frame {
            let c = node.inner_jets(&w, &leg.vec);
            w = (0..d).map(|k| w[k].sub(&c.mul(&leg.vec[k]))).collect();
        }
        let mut nsq = node.inner_jets(&w, &w);
        if nsq.value < 1e-16 {
            if forced.is_some() {
                return Err(GeoError::Precondition {
                    what: format!("forced frame leg {label:?} is degenerate"),
                    residual: nsq.value,
                });
            }
            continue;
        }
        let inv = nsq.sqrt()?.recip()?;
        w = w.iter().map(|c| c.mul(&inv)).collect();
        // second pass
        w = node.perp(&w);
        for leg in &frame {
            let c = node.inner_jets(&w, &leg.vec);
            w = (0..d).map(|k| w[k].sub(&c.mul(&leg.vec[k]))).collect();
        }
        nsq = node.inner_jets(&w, &w);
        let inv = nsq.sqrt()?.recip()?;
        w = w.iter().map(|c| c.mul(&inv)).collect();
        frame.push(FrameLeg { label, vec: w });
    }
    if frame.len() < codim {
        return Err(GeoError::Precondition {
            what: "could not complete the normal frame".into(),
            residual: (codim - frame.len()) as f64,
        });
    }
    node.frame = frame;
    Ok(())
}

// ---------------------------------------------------------------------------
// Stored geometry
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct NodeGeom {
    pub u: f64,
    pub v: f64,
    pub x: Vec<f64>,
    pub tu: Vec<f64>,
    pub tv: Vec<f64>,
    /// [g11, g12, g22]
    pub gind: [f64; 3],
    pub lambda_sq: f64,
    /// σ in coordinate directions.
    pub sigma: [Vec<f64>; 3],
    /// σ on the orthonormal tangent frame.
    pub sigma_on: [Vec<f64>; 3],
    pub h: Vec<f64>,
    pub h_norm: f64,
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    pub eta_e1: f64,
    pub eta_e2: f64,
    pub eta_h: f64,
    pub phi_e1: Vec<f64>,
    pub phi_e2: Vec<f64>,
    pub phi_h: Vec<f64>,
    pub xi: Vec<f64>,
    pub g_amb: Vec<Vec<f64>>,
    pub frame: Vec<(FrameLabel, Vec<f64>)>,
    pub a_value: Option<f64>,
}

impl NodeGeom {
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        inner(&self.g_amb, a, b)
    }
}

pub struct SurfaceGeometry {
    pub nu: usize,
    pub nv: usize,
    pub us: Vec<f64>,
    pub vs: Vec<f64>,
    pub nodes: Vec<NodeGeom>,
    pub min_metric_eig: f64,
}

impl SurfaceGeometry {
    pub fn node(&self, iu: usize, iv: usize) -> &NodeGeom {
        &self.nodes[iv * self.nu + iu]
    }

    pub fn node_mut(&mut self, iu: usize, iv: usize) -> &mut NodeGeom {
        &mut self.nodes[iv * self.nu + iu]
    }

    /// Max deviation from isothermal coordinates relative to λ².
    pub fn isothermal_residual(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| {
                let l = n.lambda_sq.max(1e-30);
                ((n.gind[0] - n.gind[2]).abs() / l).max(n.gind[1].abs() / l)
            })
            .fold(0.0, f64::max)
    }
}

fn node_geom_from_jets(node: &NodeJets) -> NodeGeom {
    let vals = |v: &[Jet]| -> Vec<f64> { v.iter().map(|j| j.value).collect() };
    let d = node.x.len();
    let g_amb: Vec<Vec<f64>> = node
        .g_amb
        .iter()
        .map(|r| r.iter().map(|j| j.value).collect())
        .collect();
    let e1 = vals(&node.e_amb[0]);
    let e2 = vals(&node.e_amb[1]);
    let sigma = [
        vals(&node.sigma[0]),
        vals(&node.sigma[1]),
        vals(&node.sigma[2]),
    ];
    // σ(Êa, Êb) from coordinate σ and the orthonormalization coefficients
    let c1 = [node.e_coef[0][0].value, node.e_coef[0][1].value];
    let c2 = [node.e_coef[1][0].value, node.e_coef[1][1].value];
    let sig = |a: &[f64; 2], b: &[f64; 2]| -> Vec<f64> {
        (0..d)
            .map(|k| {
                a[0] * b[0] * sigma[0][k]
                    + (a[0] * b[1] + a[1] * b[0]) * sigma[1][k]
                    + a[1] * b[1] * sigma[2][k]
            })
            .collect()
    };
    let sigma_on = [sig(&c1, &c1), sig(&c1, &c2), sig(&c2, &c2)];

    let h = vals(&node.h);
    let h_norm = inner(&g_amb, &h, &h).max(0.0).sqrt();
    let eta_v: Vec<f64> = node.eta.iter().map(|j| j.value).collect();
    let eta_of = |w: &[f64]| -> f64 { eta_v.iter().zip(w).map(|(e, x)| e * x).sum() };
    let phi_v: Vec<Vec<f64>> = node
        .phi
        .iter()
        .map(|r| r.iter().map(|j| j.value).collect())
        .collect();
    let phi_of = |w: &[f64]| -> Vec<f64> {
        (0..d)
            .map(|i| (0..d).map(|j| phi_v[i][j] * w[j]).sum())
            .collect()
    };

    let frame: Vec<(FrameLabel, Vec<f64>)> = node
        .frame
        .iter()
        .map(|leg| (leg.label, vals(&leg.vec)))
        .collect();

    let eta_e1 = eta_of(&e1);
    let eta_e2 = eta_of(&e2);

    // a is defined for integral patches in 7-dimensional models
    let a_value = if d == 7 && eta_e1.abs() < 1e-6 && eta_e2.abs() < 1e-6 {
        let phie1 = phi_of(&e1);
        let m11 = inner(&g_amb, &sigma_on[0], &phie1);
        let m12 = inner(&g_amb, &sigma_on[1], &phie1);
        let m22 = inner(&g_amb, &sigma_on[2], &phie1);
        let tr2 = 0.5 * (m11 + m22);
        let f2 = (m11 - tr2).powi(2) + (m22 - tr2).powi(2) + 2.0 * m12 * m12;
        Some((f2 / 2.0).max(0.0).sqrt())
    } else {
        None
    };

    NodeGeom {
        u: node.u,
        v: node.v,
        x: vals(&node.x),
        tu: vals(&node.tu),
        tv: vals(&node.tv),
        gind: [
            node.gind[0].value,
            node.gind[1].value,
            node.gind[2].value,
        ],
        lambda_sq: 0.5 * (node.gind[0].value + node.gind[2].value),
        sigma,
        sigma_on,
        eta_h: eta_of(&h),
        phi_h: phi_of(&h),
        h,
        h_norm,
        phi_e1: phi_of(&e1),
        phi_e2: phi_of(&e2),
        e1,
        e2,
        eta_e1,
        eta_e2,
        xi: node.xi.iter().map(|j| j.value).collect(),
        g_amb,
        frame,
        a_value,
    }
}

/// Evaluate the pointwise geometry on the whole grid.
pub fn surface_geometry(patch: &SurfacePatch) -> GeoResult<SurfaceGeometry> {
    let (us, vs) = patch.nodes();
    let coords: Vec<(usize, usize)> = (0..vs.len())
        .flat_map(|iv| (0..us.len()).map(move |iu| (iu, iv)))
        .collect();
    let nodes: Vec<NodeGeom> = coords
        .par_iter()
        .map(|&(iu, iv)| {
            let node = build_node_jets(patch, us[iu], vs[iv], NodeLevel::VALUES, None)?;
            Ok(node_geom_from_jets(&node))
        })
        .collect::<GeoResult<Vec<_>>>()?;

    let mut min_eig = f64::MAX;
    for n in &nodes {
        let tr = n.gind[0] + n.gind[2];
        let det = n.gind[0] * n.gind[2] - n.gind[1] * n.gind[1];
        let eig = 0.5 * (tr - (tr * tr - 4.0 * det).max(0.0).sqrt());
        if eig < min_eig {
            min_eig = eig;
        }
        if eig < 1e-10 {
            return Err(GeoError::Immersion {
                u: n.u,
                v: n.v,
                min_eig: eig,
            });
        }
    }
    Ok(SurfaceGeometry {
        nu: us.len(),
        nv: vs.len(),
        us,
        vs,
        nodes,
        min_metric_eig: min_eig,
    })
}

// ---------------------------------------------------------------------------
// Shape operators and classification
// ---------------------------------------------------------------------------

/// Matrix of A_V in the coordinate tangent basis at a stored node.
pub fn shape_operator(node: &NodeGeom, v: &[f64]) -> GeoResult<[[f64; 2]; 2]> {
    let nv = inner(&node.g_amb, v, v).max(0.0).sqrt();
    // tangential residual
    let vu = inner(&node.g_amb, v, &node.tu);
    let vv = inner(&node.g_amb, v, &node.tv);
    let det = node.gind[0] * node.gind[2] - node.gind[1] * node.gind[1];
    let cu = (node.gind[2] * vu - node.gind[1] * vv) / det;
    let cv = (-node.gind[1] * vu + node.gind[0] * vv) / det;
    let tang: Vec<f64> = (0..v.len())
        .map(|k| cu * node.tu[k] + cv * node.tv[k])
        .collect();
    let tres = inner(&node.g_amb, &tang, &tang).max(0.0).sqrt();
    if tres > 1e-9 * nv.max(1.0) {
        return Err(GeoError::Precondition {
            what: "shape operator direction must be normal".into(),
            residual: tres,
        });
    }
    let s = [
        inner(&node.g_amb, &node.sigma[0], v),
        inner(&node.g_amb, &node.sigma[1], v),
        inner(&node.g_amb, &node.sigma[2], v),
    ];
    let ginv = [
        node.gind[2] / det,
        -node.gind[1] / det,
        node.gind[0] / det,
    ];
    Ok([
        [
            ginv[0] * s[0] + ginv[1] * s[1],
            ginv[0] * s[1] + ginv[1] * s[2],
        ],
        [
            ginv[1] * s[0] + ginv[2] * s[1],
            ginv[1] * s[1] + ginv[2] * s[2],
        ],
    ])
}

/// Matrix of A_V in the orthonormal tangent frame (symmetric).
pub fn shape_operator_on_frame(node: &NodeGeom, v: &[f64]) -> [[f64; 2]; 2] {
    let m11 = inner(&node.g_amb, &node.sigma_on[0], v);
    let m12 = inner(&node.g_amb, &node.sigma_on[1], v);
    let m22 = inner(&node.g_amb, &node.sigma_on[2], v);
    [[m11, m12], [m12, m22]]
}

#[derive(Clone, Copy, Debug)]
pub struct Classification {
    pub integral_residual: f64,
    pub anti_invariant_residual: f64,
    pub pseudo_umbilical_residual: f64,
    pub eta_h: f64,
    pub phi_h_tangency: f64,
}

pub fn classify_surface(geom: &SurfaceGeometry) -> Classification {
    let mut integral = 0.0f64;
    let mut anti = 0.0f64;
    let mut pumb = 0.0f64;
    let mut eta_h = 0.0f64;
    let mut phi_h_tan = 0.0f64;
    for n in &geom.nodes {
        integral = integral.max(n.eta_e1.abs()).max(n.eta_e2.abs());
        for pe in [&n.phi_e1, &n.phi_e2] {
            anti = anti
                .max(n.inner(pe, &n.e1).abs())
                .max(n.inner(pe, &n.e2).abs());
        }
        let ah = shape_operator_on_frame(n, &n.h);
        let h2 = n.h_norm * n.h_norm;
        let dev = [[ah[0][0] - h2, ah[0][1]], [ah[1][0], ah[1][1] - h2]];
        let tr = dev[0][0] + dev[1][1];
        let det = dev[0][0] * dev[1][1] - dev[0][1] * dev[1][0];
        let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
        pumb = pumb
            .max(0.5 * (tr.abs() + disc))
            .max(0.5 * (disc - tr.abs()).abs());
        eta_h = eta_h.max(n.eta_h.abs());
        // tangential part of φH
        let pu = n.inner(&n.phi_h, &n.e1);
        let pv = n.inner(&n.phi_h, &n.e2);
        phi_h_tan = phi_h_tan.max((pu * pu + pv * pv).sqrt());
    }
    Classification {
        integral_residual: integral,
        anti_invariant_residual: anti,
        pseudo_umbilical_residual: pumb,
        eta_h,
        phi_h_tangency: phi_h_tan,
    }
}

#[derive(Clone, Copy, Debug)]
pub enum CommutingCheck {
    Value(f64),
    NotApplicable,
}

/// ‖[A_H, A_V]‖ for normal V orthogonal to φ(TΣ) and φH.
pub fn commuting_shape_check(node: &NodeGeom) -> CommutingCheck {
    if node.h_norm < 1e-8 {
        return CommutingCheck::NotApplicable;
    }
    let codim = node.frame.len();
    // constraints: ⟨V, φÊ₁⟩ = ⟨V, φÊ₂⟩ = ⟨V, φH⟩ = 0
    let mut m = DMatrix::zeros(3, codim);
    for (col, (_, leg)) in node.frame.iter().enumerate() {
        m[(0, col)] = node.inner(leg, &node.phi_e1);
        m[(1, col)] = node.inner(leg, &node.phi_e2);
        m[(2, col)] = node.inner(leg, &node.phi_h);
    }
    // null space of the constraint matrix from the spectrum of MᵀM
    let mtm = m.transpose() * &m;
    let eig = mtm.symmetric_eigen();
    let mut worst: Option<f64> = None;
    let ah = shape_operator_on_frame(node, &node.h);
    for col in 0..codim {
        if eig.eigenvalues[col].abs() > 1e-18 {
            continue;
        }
        let coef: Vec<f64> = (0..codim).map(|c| eig.eigenvectors[(c, col)]).collect();
        let d = node.x.len();
        let v: Vec<f64> = (0..d)
            .map(|k| {
                node.frame
                    .iter()
                    .zip(coef.iter())
                    .map(|((_, leg), c)| c * leg[k])
                    .sum()
            })
            .collect();
        let av = shape_operator_on_frame(node, &v);
        let comm = [
            [
                ah[0][0] * av[0][0] + ah[0][1] * av[1][0]
                    - (av[0][0] * ah[0][0] + av[0][1] * ah[1][0]),
                ah[0][0] * av[0][1] + ah[0][1] * av[1][1]
                    - (av[0][0] * ah[0][1] + av[0][1] * ah[1][1]),
            ],
            [
                ah[1][0] * av[0][0] + ah[1][1] * av[1][0]
                    - (av[1][0] * ah[0][0] + av[1][1] * ah[1][0]),
                ah[1][0] * av[0][1] + ah[1][1] * av[1][1]
                    - (av[1][0] * ah[0][1] + av[1][1] * ah[1][1]),
            ],
        ];
        let norm2: f64 = comm.iter().flatten().map(|x| x * x).sum();
        let val = norm2.sqrt();
        worst = Some(worst.map_or(val, |w: f64| w.max(val)));
    }
    match worst {
        Some(v) => CommutingCheck::Value(v),
        None => CommutingCheck::NotApplicable,
    }
}

// ---------------------------------------------------------------------------
// Parallel mean curvature and fundamental equations
// ---------------------------------------------------------------------------

/// max |∇⊥H| over the grid (exact jets; no discretization).
pub fn pmc_residual(patch: &SurfacePatch) -> GeoResult<f64> {
    let (us, vs) = patch.nodes();
    let coords: Vec<(f64, f64)> = vs
        .iter()
        .flat_map(|&v| us.iter().map(move |&u| (u, v)))
        .collect();
    let worst = coords
        .par_iter()
        .map(|&(u, v)| {
            let node = build_node_jets(patch, u, v, NodeLevel::DERIV, None)?;
            let g: Vec<Vec<f64>> = node
                .g_amb
                .iter()
                .map(|r| r.iter().map(|j| j.value).collect())
                .collect();
            let mut res = 0.0f64;
            for axis in 0..2 {
                let dh = node.normal_derivative(&node.h, axis);
                res = res.max(norm(&g, &dh));
            }
            Ok(res)
        })
        .collect::<GeoResult<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(worst)
}

#[derive(Clone, Copy, Debug)]
pub struct FundamentalResiduals {
    pub gauss: f64,
    pub codazzi: f64,
    pub ricci: f64,
}

/// Residuals of the three fundamental equations at a point. The Gauss check
/// uses the stored σ of `geom` (so deliberate perturbations are visible);
/// Codazzi and the normal-curvature equation use fresh jets.
pub fn fundamental_equation_residuals(
    patch: &SurfacePatch,
    geom: &SurfaceGeometry,
    iu: usize,
    iv: usize,
) -> GeoResult<FundamentalResiduals> {
    let stored = geom.node(iu, iv);
    let u = stored.u;
    let v = stored.v;
    let node = build_node_jets(patch, u, v, NodeLevel::FULL, None)?;
    let g_amb: Vec<Vec<f64>> = node
        .g_amb
        .iter()
        .map(|r| r.iter().map(|j| j.value).collect())
        .collect();
    let rn = riemann(&patch.model.chart, &stored.x)?;

    // --- Gauss, over coordinate frames, using stored σ
    let gind2 = vec![
        vec![node.gind[0].clone(), node.gind[1].clone()],
        vec![node.gind[1].clone(), node.gind[2].clone()],
    ];
    let gamma_ind = christoffel_jets(&gind2)?;
    let r_ind = riemann_jets(&gamma_ind);
    let gind_v = [
        [stored.gind[0], stored.gind[1]],
        [stored.gind[1], stored.gind[2]],
    ];
    let tang = [&stored.tu, &stored.tv];
    let sig = |a: usize, b: usize| -> &Vec<f64> { &stored.sigma[a + b] };
    let mut gauss = 0.0f64;
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                for e in 0..2 {
                    let lhs: f64 = (0..2)
                        .map(|f| r_ind[a][b][c][f].value * gind_v[f][e])
                        .sum();
                    let rnv = rn.apply(tang[a], tang[b], tang[c]);
                    let amb = inner(&g_amb, &rnv, tang[e]);
                    let s1 = inner(&g_amb, sig(b, c), sig(a, e));
                    let s2 = inner(&g_amb, sig(a, c), sig(b, e));
                    gauss = gauss.max((lhs - amb - s1 + s2).abs());
                }
            }
        }
    }

    // --- Codazzi: (Rᴺ(X,Y)Z)⊥ = (∇⊥_Xσ)(Y,Z) − (∇⊥_Yσ)(X,Z)
    let gamma_ind_v: Vec<Vec<Vec<f64>>> = gamma_ind
        .iter()
        .map(|a| {
            a.iter()
                .map(|b| b.iter().map(|j| j.value).collect())
                .collect()
        })
        .collect();
    let sigma_idx = |a: usize, b: usize| -> &Vec<Jet> { &node.sigma[a + b] };
    let nabla_perp_sigma = |x: usize, y: usize, z: usize| -> Vec<f64> {
        let d = node.x.len();
        let raw = node.ambient_derivative(sigma_idx(y, z), x);
        let mut out = node.perp_values(&raw);
        for dd in 0..2 {
            let c1 = gamma_ind_v[dd][x][y];
            let c2 = gamma_ind_v[dd][x][z];
            for k in 0..d {
                out[k] -= c1 * sigma_idx(dd, z)[k].value + c2 * sigma_idx(y, dd)[k].value;
            }
        }
        out
    };
    let mut codazzi = 0.0f64;
    for (x, y, z) in [(0usize, 1usize, 0usize), (0, 1, 1)] {
        let rnv = rn.apply(tang[x], tang[y], tang[z]);
        let lhs = node.perp_values(&rnv);
        let r1 = nabla_perp_sigma(x, y, z);
        let r2 = nabla_perp_sigma(y, x, z);
        let d = node.x.len();
        let resid: Vec<f64> = (0..d).map(|k| lhs[k] - r1[k] + r2[k]).collect();
        codazzi = codazzi.max(norm(&g_amb, &resid));
    }

    // --- normal curvature via analytic stencils
    let ricci = ricci_residual(patch, &node, &rn, &g_amb)?;

    Ok(FundamentalResiduals {
        gauss,
        codazzi,
        ricci,
    })
}

/// ⟨R⊥(∂u,∂v)U, V⟩ − ⟨[A_U,A_V]∂u, ∂v⟩ − ⟨Rᴺ(∂u,∂v)U, V⟩ over frame pairs.
fn ricci_residual(
    patch: &SurfacePatch,
    node: &NodeJets,
    rn: &crate::metric::CurvatureValue,
    g_amb: &[Vec<f64>],
) -> GeoResult<f64> {
    let labels: Vec<FrameLabel> = node.frame.iter().map(|l| l.label).collect();
    let nfr = labels.len();
    let h = 1e-3;

    // scalar tables f_axis[i][j] = ⟨∇⊥_axis N_i, N_j⟩ at a displaced node
    let tables_at = |du: f64, dv: f64| -> GeoResult<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let n = build_node_jets(
            patch,
            node.u + du,
            node.v + dv,
            NodeLevel::DERIV,
            Some(&labels),
        )?;
        let mut fu = vec![vec![0.0; nfr]; nfr];
        let mut fv = vec![vec![0.0; nfr]; nfr];
        let g: Vec<Vec<f64>> = n
            .g_amb
            .iter()
            .map(|r| r.iter().map(|j| j.value).collect())
            .collect();
        for i in 0..nfr {
            let du_i = n.normal_derivative(&n.frame[i].vec, 0);
            let dv_i = n.normal_derivative(&n.frame[i].vec, 1);
            for j in 0..nfr {
                let vj: Vec<f64> = n.frame[j].vec.iter().map(|c| c.value).collect();
                fu[i][j] = inner(&g, &du_i, &vj);
                fv[i][j] = inner(&g, &dv_i, &vj);
            }
        }
        Ok((fu, fv))
    };

    let stencil = [(-2.0, 1.0 / 12.0), (-1.0, -8.0 / 12.0), (1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)];
    // D_u f_v and D_v f_u
    let mut du_fv = vec![vec![0.0; nfr]; nfr];
    let mut dv_fu = vec![vec![0.0; nfr]; nfr];
    for (off, w) in stencil {
        let (_, fv_u) = tables_at(off * h, 0.0)?;
        let (fu_v, _) = tables_at(0.0, off * h)?;
        for i in 0..nfr {
            for j in 0..nfr {
                du_fv[i][j] += w * fv_u[i][j] / h;
                dv_fu[i][j] += w * fu_v[i][j] / h;
            }
        }
    }

    // ∇⊥ values at the center, as vectors for the cross terms
    let mut du_n = Vec::with_capacity(nfr);
    let mut dv_n = Vec::with_capacity(nfr);
    for i in 0..nfr {
        du_n.push(node.normal_derivative(&node.frame[i].vec, 0));
        dv_n.push(node.normal_derivative(&node.frame[i].vec, 1));
    }

    let tu: Vec<f64> = node.tu.iter().map(|j| j.value).collect();
    let tv: Vec<f64> = node.tv.iter().map(|j| j.value).collect();
    let gind = [
        node.gind[0].value,
        node.gind[1].value,
        node.gind[2].value,
    ];
    let det = gind[0] * gind[2] - gind[1] * gind[1];
    let ginv = [gind[2] / det, -gind[1] / det, gind[0] / det];

    // coordinate-basis shape operator from σ jets
    let shape = |v: &[f64]| -> [[f64; 2]; 2] {
        let s = [
            inner(g_amb, &node.sigma[0].iter().map(|j| j.value).collect::<Vec<_>>(), v),
            inner(g_amb, &node.sigma[1].iter().map(|j| j.value).collect::<Vec<_>>(), v),
            inner(g_amb, &node.sigma[2].iter().map(|j| j.value).collect::<Vec<_>>(), v),
        ];
        [
            [ginv[0] * s[0] + ginv[1] * s[1], ginv[0] * s[1] + ginv[1] * s[2]],
            [ginv[1] * s[0] + ginv[2] * s[1], ginv[1] * s[1] + ginv[2] * s[2]],
        ]
    };

    let mut worst = 0.0f64;
    for i in 0..nfr {
        let ni: Vec<f64> = node.frame[i].vec.iter().map(|c| c.value).collect();
        let ai = shape(&ni);
        for j in 0..nfr {
            if i == j {
                continue;
            }
            let nj: Vec<f64> = node.frame[j].vec.iter().map(|c| c.value).collect();
            let aj = shape(&nj);
            // ⟨R⊥(∂u,∂v)N_i, N_j⟩
            let lhs = du_fv[i][j] - dv_fu[i][j] - inner(g_amb, &dv_n[i], &du_n[j])
                + inner(g_amb, &du_n[i], &dv_n[j]);
            // ⟨[A_i, A_j]∂u, ∂v⟩: lower with the induced metric
            let aiaj = [
                ai[0][0] * aj[0][0] + aj[1][0] * ai[0][1],
                ai[1][0] * aj[0][0] + aj[1][0] * ai[1][1],
            ];
            let ajai = [
                aj[0][0] * ai[0][0] + ai[1][0] * aj[0][1],
                aj[1][0] * ai[0][0] + ai[1][0] * aj[1][1],
            ];
            let comm_u = [aiaj[0] - ajai[0], aiaj[1] - ajai[1]];
            let comm_low = comm_u[0] * gind[1] + comm_u[1] * gind[2];
            let rn_uv = rn.apply(&tu, &tv, &ni);
            let rn_term = inner(g_amb, &rn_uv, &nj);
            worst = worst.max((lhs - comm_low - rn_term).abs());
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Gaussian curvature
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct GaussianCurvature {
    pub via_gauss_eq: f64,
    pub intrinsic: f64,
    /// (c+3)/4 − 2a² + |H|², when `a` is defined.
    pub formula: Option<f64>,
}

pub fn gaussian_curvature(
    patch: &SurfacePatch,
    geom: &SurfaceGeometry,
    iu: usize,
    iv: usize,
) -> GeoResult<GaussianCurvature> {
    let stored = geom.node(iu, iv);
    let node = build_node_jets(patch, stored.u, stored.v, NodeLevel::FULL, None)?;
    let g_amb: Vec<Vec<f64>> = node
        .g_amb
        .iter()
        .map(|r| r.iter().map(|j| j.value).collect())
        .collect();
    let rn = riemann(&patch.model.chart, &stored.x)?;

    let det = stored.gind[0] * stored.gind[2] - stored.gind[1] * stored.gind[1];
    let rn_uvv = rn.apply(&stored.tu, &stored.tv, &stored.tv);
    let amb = inner(&g_amb, &rn_uvv, &stored.tu);
    let s_uu_vv = inner(&g_amb, &stored.sigma[0], &stored.sigma[2]);
    let s_uv = inner(&g_amb, &stored.sigma[1], &stored.sigma[1]);
    let via_gauss_eq = (amb + s_uu_vv - s_uv) / det;

    // frame formula K = E₁(w₂) + E₂(w₁) − w₁² − w₂²,
    // w₁ = ⟨∇_{E₁}E₁, E₂⟩, w₂ = ⟨∇_{E₂}E₂, E₁⟩
    let gind2 = vec![
        vec![node.gind[0].clone(), node.gind[1].clone()],
        vec![node.gind[1].clone(), node.gind[2].clone()],
    ];
    let gamma_ind = christoffel_jets(&gind2)?;
    let e = &node.e_coef;
    let nab = |i: usize, j: usize| -> [Jet; 2] {
        // (∇_{Êi}Êj)^b = Êi^a ∂_a(Êj^b) + γ^b_{ac} Êi^a Êj^c
        let mut out = [
            Jet::constant(0.0, 2, 1),
            Jet::constant(0.0, 2, 1),
        ];
        for b in 0..2 {
            let mut acc = e[i][0]
                .mul(&e[j][b].partial(0))
                .add(&e[i][1].mul(&e[j][b].partial(1)));
            for a in 0..2 {
                for c in 0..2 {
                    acc = acc.add(&gamma_ind[b][a][c].mul(&e[i][a]).mul(&e[j][c]));
                }
            }
            out[b] = acc;
        }
        out
    };
    let ip = |a: &[Jet; 2], b: &[Jet; 2], g: &[Jet; 3]| -> Jet {
        g[0].mul(&a[0]).mul(&b[0])
            .add(&g[1].mul(&a[0]).mul(&b[1]))
            .add(&g[1].mul(&a[1]).mul(&b[0]))
            .add(&g[2].mul(&a[1]).mul(&b[1]))
    };
    let n11 = nab(0, 0);
    let n22 = nab(1, 1);
    let w1 = ip(&n11, &e[1], &node.gind);
    let w2 = ip(&n22, &e[0], &node.gind);
    let e_dir = |i: usize, f: &Jet| -> f64 {
        e[i][0].value * f.first[0] + e[i][1].value * f.first[1]
    };
    let intrinsic = e_dir(0, &w2) + e_dir(1, &w1) - w1.value * w1.value - w2.value * w2.value;

    let formula = stored.a_value.map(|a| {
        (patch.model.c + 3.0) / 4.0 - 2.0 * a * a + stored.h_norm * stored.h_norm
    });

    Ok(GaussianCurvature {
        via_gauss_eq,
        intrinsic,
        formula,
    })
}

// ---------------------------------------------------------------------------
// Adapted-frame identities on integral pmc surfaces
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct LemmaNormalResiduals {
    /// ∇⊥_{Êᵢ}φÊᵢ − ⟨∇_{Êᵢ}Êᵢ, Êⱼ⟩φÊⱼ − φH − ξ
    pub diagonal: f64,
    /// ∇⊥_{Êᵢ}φÊⱼ − ⟨∇_{Êᵢ}Êⱼ, Êᵢ⟩φÊᵢ (i ≠ j)
    pub off_diagonal: f64,
    /// ∇⊥_X φH + |H|²φX
    pub phi_h: f64,
    /// ∇⊥_X ξ + φX
    pub xi: f64,
}

pub fn lemma_normal_residuals(
    patch: &SurfacePatch,
    u: f64,
    v: f64,
) -> GeoResult<LemmaNormalResiduals> {
    let node = build_node_jets(patch, u, v, NodeLevel::FULL, None)?;
    let d = node.x.len();
    let g: Vec<Vec<f64>> = node
        .g_amb
        .iter()
        .map(|r| r.iter().map(|j| j.value).collect())
        .collect();

    // intrinsic connection coefficients for the orthonormal tangent frame
    let gind2 = vec![
        vec![node.gind[0].clone(), node.gind[1].clone()],
        vec![node.gind[1].clone(), node.gind[2].clone()],
    ];
    let gamma_ind = christoffel_jets(&gind2)?;
    let e = &node.e_coef;
    let nab_coef = |i: usize, j: usize| -> [f64; 2] {
        let mut out = [0.0; 2];
        for b in 0..2 {
            let mut acc = e[i][0].value * e[j][b].first[0] + e[i][1].value * e[j][b].first[1];
            for a in 0..2 {
                for c in 0..2 {
                    acc += gamma_ind[b][a][c].value * e[i][a].value * e[j][c].value;
                }
            }
            out[b] = acc;
        }
        out
    };
    let ip_coef = |a: &[f64; 2], b: &[Jet; 2]| -> f64 {
        let g = &node.gind;
        g[0].value * a[0] * b[0].value
            + g[1].value * (a[0] * b[1].value + a[1] * b[0].value)
            + g[2].value * a[1] * b[1].value
    };

    // normal derivative along Êᵢ of a jet field
    let nd_along = |field: &[Jet], i: usize| -> Vec<f64> {
        let d0 = node.normal_derivative(field, 0);
        let d1 = node.normal_derivative(field, 1);
        (0..d)
            .map(|k| e[i][0].value * d0[k] + e[i][1].value * d1[k])
            .collect()
    };

    let phi_e: [Vec<Jet>; 2] = [apply_phi(&node, &node.e_amb[0]), apply_phi(&node, &node.e_amb[1])];
    let phi_h_field = apply_phi(&node, &node.h);
    let h_sq = node.inner_values(
        &node.h.iter().map(|j| j.value).collect::<Vec<_>>(),
        &node.h.iter().map(|j| j.value).collect::<Vec<_>>(),
    );

    let mut diagonal = 0.0f64;
    let mut off_diagonal = 0.0f64;
    for i in 0..2 {
        let j = 1 - i;
        // diagonal identity
        let lhs = nd_along(&phi_e[i], i);
        let cij = ip_coef(&nab_coef(i, i), &e[j]);
        let resid: Vec<f64> = (0..d)
            .map(|k| {
                lhs[k] - cij * phi_e[j][k].value - phi_h_field[k].value - node.xi[k].value
            })
            .collect();
        diagonal = diagonal.max(norm(&g, &resid));
        // off-diagonal identity
        let lhs = nd_along(&phi_e[j], i);
        let cji = ip_coef(&nab_coef(i, j), &e[i]);
        let resid: Vec<f64> = (0..d).map(|k| lhs[k] - cji * phi_e[i][k].value).collect();
        off_diagonal = off_diagonal.max(norm(&g, &resid));
    }

    let mut phi_h_res = 0.0f64;
    let mut xi_res = 0.0f64;
    for i in 0..2 {
        let lhs = nd_along(&phi_h_field, i);
        let resid: Vec<f64> = (0..d)
            .map(|k| lhs[k] + h_sq * phi_e[i][k].value)
            .collect();
        phi_h_res = phi_h_res.max(norm(&g, &resid));

        let lhs = nd_along(&node.xi, i);
        let resid: Vec<f64> = (0..d).map(|k| lhs[k] + phi_e[i][k].value).collect();
        xi_res = xi_res.max(norm(&g, &resid));
    }

    Ok(LemmaNormalResiduals {
        diagonal,
        off_diagonal,
        phi_h: phi_h_res,
        xi: xi_res,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct DerivAResiduals {
    /// |Êᵢ(a) − 3a⟨∇_{Êⱼ}Êⱼ, Êᵢ⟩|
    pub relation: f64,
    /// max |Êᵢ(a)|
    pub derivative_magnitude: f64,
}

pub fn deriv_a_residuals(patch: &SurfacePatch, u: f64, v: f64) -> GeoResult<DerivAResiduals> {
    let node = build_node_jets(patch, u, v, NodeLevel::FULL, None)?;

    // a(u,v) as a jet from the invariant ‖A_{φÊ₁}‖²_F/2
    let phi_e1 = apply_phi(&node, &node.e_amb[0]);
    let sig_on = |a: usize, b: usize| -> Vec<Jet> {
        let d = node.x.len();
        let ca = &node.e_coef[a];
        let cb = &node.e_coef[b];
        (0..d)
            .map(|k| {
                ca[0].mul(&cb[0]).mul(&node.sigma[0][k])
                    .add(&ca[0].mul(&cb[1]).add(&ca[1].mul(&cb[0])).mul(&node.sigma[1][k]))
                    .add(&ca[1].mul(&cb[1]).mul(&node.sigma[2][k]))
            })
            .collect()
    };
    let m11 = node.inner_jets(&sig_on(0, 0), &phi_e1);
    let m12 = node.inner_jets(&sig_on(0, 1), &phi_e1);
    let m22 = node.inner_jets(&sig_on(1, 1), &phi_e1);
    let tr_half = m11.add(&m22).scale(0.5);
    let d11 = m11.sub(&tr_half);
    let d22 = m22.sub(&tr_half);
    let f2 = d11.mul(&d11).add(&d22.mul(&d22)).add(&m12.mul(&m12).scale(2.0));
    let a_jet = f2.scale(0.5).sqrt()?;

    let e = &node.e_coef;
    let e_dir = |i: usize, f: &Jet| -> f64 {
        e[i][0].value * f.first[0] + e[i][1].value * f.first[1]
    };

    let gind2 = vec![
        vec![node.gind[0].clone(), node.gind[1].clone()],
        vec![node.gind[1].clone(), node.gind[2].clone()],
    ];
    let gamma_ind = christoffel_jets(&gind2)?;
    let nab_coef = |i: usize, j: usize| -> [f64; 2] {
        let mut out = [0.0; 2];
        for b in 0..2 {
            let mut acc = e[i][0].value * e[j][b].first[0] + e[i][1].value * e[j][b].first[1];
            for a in 0..2 {
                for c in 0..2 {
                    acc += gamma_ind[b][a][c].value * e[i][a].value * e[j][c].value;
                }
            }
            out[b] = acc;
        }
        out
    };
    let ip_coef = |a: &[f64; 2], b: &[Jet; 2]| -> f64 {
        let g = &node.gind;
        g[0].value * a[0] * b[0].value
            + g[1].value * (a[0] * b[1].value + a[1] * b[0].value)
            + g[2].value * a[1] * b[1].value
    };

    let a_val = a_jet.value;
    let mut relation = 0.0f64;
    let mut magnitude = 0.0f64;
    for i in 0..2 {
        let j = 1 - i;
        let ea = e_dir(i, &a_jet);
        let rhs = 3.0 * a_val * ip_coef(&nab_coef(j, j), &e[i]);
        relation = relation.max((ea - rhs).abs());
        magnitude = magnitude.max(ea.abs());
    }
    Ok(DerivAResiduals {
        relation,
        derivative_magnitude: magnitude,
    })
}

/// max |⟨σ(Êᵢ,Êⱼ), φÊ_k⟩ − ⟨σ(Êᵢ,Ê_k), φÊⱼ⟩| (total symmetry on integral
/// patches).
pub fn sigma_phi_symmetry_residual(node: &NodeGeom) -> f64 {
    let phi_e = [&node.phi_e1, &node.phi_e2];
    let sig = |a: usize, b: usize| -> &Vec<f64> { &node.sigma_on[a + b] };
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let s1 = node.inner(sig(i, j), phi_e[k]);
                let s2 = node.inner(sig(i, k), phi_e[j]);
                worst = worst.max((s1 - s2).abs());
            }
        }
    }
    worst
}

/// ‖A_{φH}‖ in the orthonormal frame.
pub fn shape_phi_h_norm(node: &NodeGeom) -> f64 {
    let m = shape_operator_on_frame(node, &node.phi_h);
    m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{euclidean_model, make_model, ModelKind, ModelParams};

    fn great_sphere_patch() -> SurfacePatch {
        // totally geodesic S² ⊂ S³ (u₂ = 0 slice) in the stereographic chart
        let model = Arc::new(make_model(ModelKind::StandardSphere, 1, ModelParams::default()).unwrap());
        SurfacePatch::from_closure(
            model,
            |u: &Jet, v: &Jet| {
                let su = u.sin();
                let cu = u.cos();
                let denom = cu.add_scalar(1.0).recip()?;
                Ok(vec![
                    su.mul(&v.cos()).mul(&denom),
                    su.mul(&v.sin()).mul(&denom),
                    Jet::constant(0.0, 2, u.order()),
                ])
            },
            (0.4, 1.2),
            (0.2, 1.0),
            (9, 9),
        )
    }

    fn flat_plane_patch() -> SurfacePatch {
        let model = Arc::new(euclidean_model(3));
        SurfacePatch::from_closure(
            model,
            |u: &Jet, v: &Jet| Ok(vec![u.clone(), v.clone(), Jet::constant(0.0, 2, u.order())]),
            (-1.0, 1.0),
            (-1.0, 1.0),
            (6, 6),
        )
    }

    #[test]
    fn totally_geodesic_sphere_has_no_second_fundamental_form() {
        let patch = great_sphere_patch();
        let geom = surface_geometry(&patch).unwrap();
        for n in &geom.nodes {
            for s in &n.sigma {
                assert!(norm(&n.g_amb, s) < 1e-9, "σ = {s:?}");
            }
            assert!(n.h_norm < 1e-9);
        }
        assert!(pmc_residual(&patch).unwrap() < 1e-9);
    }

    #[test]
    fn sphere_gaussian_curvature_is_one() {
        let patch = great_sphere_patch();
        let geom = surface_geometry(&patch).unwrap();
        let k = gaussian_curvature(&patch, &geom, 3, 4).unwrap();
        assert!((k.via_gauss_eq - 1.0).abs() < 1e-8, "{k:?}");
        assert!((k.intrinsic - 1.0).abs() < 1e-7, "{k:?}");
    }

    #[test]
    fn plane_fundamental_equations_vanish() {
        let patch = flat_plane_patch();
        let geom = surface_geometry(&patch).unwrap();
        let r = fundamental_equation_residuals(&patch, &geom, 2, 3).unwrap();
        assert!(r.gauss < 1e-12, "{r:?}");
        assert!(r.codazzi < 1e-12, "{r:?}");
        assert!(r.ricci < 1e-9, "{r:?}");
        let k = gaussian_curvature(&patch, &geom, 2, 2).unwrap();
        assert!(k.via_gauss_eq.abs() < 1e-12);
        assert!(k.intrinsic.abs() < 1e-9);
    }

    #[test]
    fn sphere_fundamental_equations_hold() {
        let patch = great_sphere_patch();
        let geom = surface_geometry(&patch).unwrap();
        let r = fundamental_equation_residuals(&patch, &geom, 4, 3).unwrap();
        assert!(r.gauss < 1e-8, "{r:?}");
        assert!(r.codazzi < 1e-8, "{r:?}");
        assert!(r.ricci < 1e-6, "{r:?}");
    }

    #[test]
    fn shape_operator_self_adjoint_and_normal_gate() {
        let patch = great_sphere_patch();
        let geom = surface_geometry(&patch).unwrap();
        let n = geom.node(2, 2);
        // normal leg exists
        let (_, leg) = &n.frame[0];
        let a = shape_operator(n, leg).unwrap();
        // ⟨A ∂u, ∂v⟩ = ⟨σ(∂u,∂v), V⟩ by construction; check symmetry of the
        // lowered matrix
        let low_uv = a[0][0] * n.gind[1] + a[1][0] * n.gind[2];
        let low_vu = a[0][1] * n.gind[0] + a[1][1] * n.gind[1];
        assert!((low_uv - low_vu).abs() < 1e-10);
        // tangent input rejected
        assert!(shape_operator(n, &n.tu.clone()).is_err());
    }

    #[test]
    fn zeroed_sigma_breaks_gauss_residual() {
        let patch = great_sphere_patch();
        let mut geom = surface_geometry(&patch).unwrap();
        // artificially remove the second fundamental form: K = 1 vs flat rhs
        for node in geom.nodes.iter_mut() {
            for s in node.sigma.iter_mut() {
                for x in s.iter_mut() {
                    *x = 0.0;
                }
            }
        }
        // the great sphere is totally geodesic (σ = 0 already), so zeroing is
        // a no-op; inject a fake σ to make the imbalance visible
        for node in geom.nodes.iter_mut() {
            node.sigma[0][0] += 0.5;
            node.sigma[2][0] += 0.5;
        }
        let r = fundamental_equation_residuals(&patch, &geom, 4, 4).unwrap();
        assert!(r.gauss > 1e-2, "perturbed σ not detected: {r:?}");
    }

    #[test]
    fn classification_on_plane() {
        let patch = flat_plane_patch();
        let geom = surface_geometry(&patch).unwrap();
        let c = classify_surface(&geom);
        // flat chart has zero structure tensors: everything vanishes
        assert!(c.integral_residual < 1e-12);
        assert!(c.anti_invariant_residual < 1e-12);
        assert!(c.pseudo_umbilical_residual < 1e-12);
    }
}
