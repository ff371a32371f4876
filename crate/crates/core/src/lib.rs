//! Numerical geometry of Sasakian space forms.
//!
//! The crate instantiates the simply connected Sasakian space forms
//! `N^{2n+1}(c)` in explicit coordinate charts, computes their connection and
//! curvature data by third-order jet (truncated Taylor) arithmetic, and layers
//! surface, curve, and fibration geometry on top. Everything is organized
//! around residuals: each structural identity is evaluated numerically and
//! reported as a max/mean residual against a stated tolerance.
//!
//! # Conventions
//!
//! Fixed once, asserted by tests:
//! - Curvature sign: `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_{[X,Y]}Z`, so the
//!   round unit sphere has sectional curvature `+1`.
//! - Exterior derivative of a 1-form uses the halved convention
//!   `dη(U,V) = ½(U(η(V)) − V(η(U)) − η([U,V]))`; with it the contact axiom
//!   reads `dη(U,V) = ⟨U, φV⟩` on every model.
//! - Sphere models live in the stereographic chart from the south pole, so
//!   closed geodesics and long fibers stay inside a single chart.
//! - The ball model `B^{2n}×ℝ` uses the Kähler potential
//!   `F = (4/k)·log(1−|z|²)` (holomorphic sectional curvature `k < 0`) and the
//!   primitive `ω = (−4/k)(Σ yᵅdxᵅ − xᵅdyᵅ)/(1−|z|²)` of the fundamental
//!   2-form `Ω(X,Y) = G(X,JY)`; `dω = Ω` is verified numerically.
//! - Complexified tangent vectors use `Z = (∂u − i∂v)/√2` with complex
//!   bilinear (not Hermitian) extensions of all pairings.

pub mod curve;
pub mod error;
pub mod fibration;
pub mod flows;
pub mod jet;
pub mod metric;
pub mod models;
pub mod qforms;
pub mod report;
pub mod scenario;
pub mod surface;

pub use error::{GeoError, GeoResult};
pub use jet::Jet;
