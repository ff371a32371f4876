//! Truncated Taylor arithmetic ("jets") up to third order in several variables.
//!
//! A [`Jet`] carries a value together with the raw partial derivatives of a
//! scalar quantity with respect to `dim` independent variables, up to a
//! tracked `order <= 3`. Arithmetic and the elementary functions propagate
//! derivatives exactly (product rule, Faà di Bruno), so any chart-level
//! expression built from jets yields machine-precision partials.
//!
//! Conventions:
//! - `second` and `third` store the full symmetric tensors of *raw* partials
//!   (not Taylor coefficients); the 1/2! and 1/3! factors appear only inside
//!   [`compose`], which evaluates a truncated Taylor polynomial.
//! - Orders combine pessimistically: the result of a binary operation is
//!   valid to `min` of the operand orders.
//! - Differentiating with [`Jet::partial`] drops the order by one.

use crate::error::{GeoError, GeoResult};

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    dim: usize,
    order: usize,
    pub value: f64,
    /// Gradient, length `dim` (empty when `order == 0`).
    pub first: Vec<f64>,
    /// Hessian, row-major `dim × dim` (empty when `order < 2`).
    pub second: Vec<f64>,
    /// Third derivatives, `dim³` (empty when `order < 3`).
    pub third: Vec<f64>,
}

pub const MAX_ORDER: usize = 3;

#[inline(always)]
fn i2(d: usize, i: usize, j: usize) -> usize {
    i * d + j
}

#[inline(always)]
fn i3(d: usize, i: usize, j: usize, k: usize) -> usize {
    (i * d + j) * d + k
}

impl Jet {
    pub fn constant(value: f64, dim: usize, order: usize) -> Jet {
        assert!(order <= MAX_ORDER);
        Jet {
            dim,
            order,
            value,
            first: if order >= 1 { vec![0.0; dim] } else { Vec::new() },
            second: if order >= 2 { vec![0.0; dim * dim] } else { Vec::new() },
            third: if order >= 3 { vec![0.0; dim * dim * dim] } else { Vec::new() },
        }
    }

    /// Jet of the `axis`-th independent variable at `value`.
    pub fn independent(value: f64, axis: usize, dim: usize, order: usize) -> Jet {
        assert!(axis < dim);
        let mut j = Jet::constant(value, dim, order);
        if order >= 1 {
            j.first[axis] = 1.0;
        }
        j
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    /// Reduce the tracked order (cheap truncation; never raises it).
    pub fn truncated(mut self, order: usize) -> Jet {
        if order < self.order {
            self.order = order;
            if order < 3 {
                self.third = Vec::new();
            }
            if order < 2 {
                self.second = Vec::new();
            }
            if order < 1 {
                self.first = Vec::new();
            }
        }
        self
    }

    /// Raw partial derivative for a multi-index given as repeated axes,
    /// e.g. `&[0, 0, 1]` for d³/dx²dy.
    pub fn partial_at(&self, idx: &[usize]) -> GeoResult<f64> {
        if idx.len() > MAX_ORDER {
            return Err(GeoError::UnsupportedOrder {
                requested: idx.len(),
                available: self.order,
            });
        }
        if idx.len() > self.order {
            return Err(GeoError::UnsupportedOrder {
                requested: idx.len(),
                available: self.order,
            });
        }
        for &a in idx {
            if a >= self.dim {
                return Err(GeoError::Dimension(format!(
                    "axis {a} out of range for dimension {}",
                    self.dim
                )));
            }
        }
        Ok(match idx {
            [] => self.value,
            [i] => self.first[*i],
            [i, j] => self.second[i2(self.dim, *i, *j)],
            [i, j, k] => self.third[i3(self.dim, *i, *j, *k)],
            _ => unreachable!(),
        })
    }

    /// The derivative jet ∂/∂axis, one order lower.
    pub fn partial(&self, axis: usize) -> Jet {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        assert!(axis < self.dim);
        let d = self.dim;
        let order = self.order - 1;
        let mut out = Jet::constant(self.first[axis], d, order);
        if order >= 1 {
            for i in 0..d {
                out.first[i] = self.second[i2(d, axis, i)];
            }
        }
        if order >= 2 {
            for i in 0..d {
                for j in 0..d {
                    out.second[i2(d, i, j)] = self.third[i3(d, axis, i, j)];
                }
            }
        }
        out
    }

    fn common(&self, o: &Jet) -> (usize, usize) {
        debug_assert_eq!(self.dim, o.dim, "jet dimension mismatch");
        (self.dim, self.order.min(o.order))
    }

    pub fn add(&self, o: &Jet) -> Jet {
        let (d, ord) = self.common(o);
        let mut r = Jet::constant(self.value + o.value, d, ord);
        for i in 0..r.first.len() {
            r.first[i] = self.first[i] + o.first[i];
        }
        for i in 0..r.second.len() {
            r.second[i] = self.second[i] + o.second[i];
        }
        for i in 0..r.third.len() {
            r.third[i] = self.third[i] + o.third[i];
        }
        r
    }

    pub fn sub(&self, o: &Jet) -> Jet {
        let (d, ord) = self.common(o);
        let mut r = Jet::constant(self.value - o.value, d, ord);
        for i in 0..r.first.len() {
            r.first[i] = self.first[i] - o.first[i];
        }
        for i in 0..r.second.len() {
            r.second[i] = self.second[i] - o.second[i];
        }
        for i in 0..r.third.len() {
            r.third[i] = self.third[i] - o.third[i];
        }
        r
    }

    pub fn neg(&self) -> Jet {
        self.scale(-1.0)
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut r = self.clone();
        r.value *= s;
        for x in r.first.iter_mut() {
            *x *= s;
        }
        for x in r.second.iter_mut() {
            *x *= s;
        }
        for x in r.third.iter_mut() {
            *x *= s;
        }
        r
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut r = self.clone();
        r.value += s;
        r
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        let (d, ord) = self.common(o);
        let (av, bv) = (self.value, o.value);
        let mut r = Jet::constant(av * bv, d, ord);
        if ord >= 1 {
            for i in 0..d {
                r.first[i] = self.first[i] * bv + av * o.first[i];
            }
        }
        if ord >= 2 {
            for i in 0..d {
                for j in 0..d {
                    r.second[i2(d, i, j)] = self.second[i2(d, i, j)] * bv
                        + self.first[i] * o.first[j]
                        + self.first[j] * o.first[i]
                        + av * o.second[i2(d, i, j)];
                }
            }
        }
        if ord >= 3 {
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        r.third[i3(d, i, j, k)] = self.third[i3(d, i, j, k)] * bv
                            + self.second[i2(d, i, j)] * o.first[k]
                            + self.second[i2(d, i, k)] * o.first[j]
                            + self.second[i2(d, j, k)] * o.first[i]
                            + self.first[i] * o.second[i2(d, j, k)]
                            + self.first[j] * o.second[i2(d, i, k)]
                            + self.first[k] * o.second[i2(d, i, j)]
                            + av * o.third[i3(d, i, j, k)];
                    }
                }
            }
        }
        r
    }

    pub fn div(&self, o: &Jet) -> GeoResult<Jet> {
        if o.value == 0.0 {
            return Err(GeoError::Eval { op: "div", value: 0.0 });
        }
        let x = o.value;
        let inv = o.chain(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x), -6.0 / (x * x * x * x));
        Ok(self.mul(&inv))
    }

    pub fn recip(&self) -> GeoResult<Jet> {
        if self.value == 0.0 {
            return Err(GeoError::Eval { op: "recip", value: 0.0 });
        }
        let x = self.value;
        Ok(self.chain(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x), -6.0 / (x * x * x * x)))
    }

    /// Univariate composition u ∘ f given u and its first three derivatives
    /// at `self.value`.
    fn chain(&self, u0: f64, u1: f64, u2: f64, u3: f64) -> Jet {
        let d = self.dim;
        let ord = self.order;
        let mut r = Jet::constant(u0, d, ord);
        if ord >= 1 {
            for i in 0..d {
                r.first[i] = u1 * self.first[i];
            }
        }
        if ord >= 2 {
            for i in 0..d {
                for j in 0..d {
                    r.second[i2(d, i, j)] =
                        u2 * self.first[i] * self.first[j] + u1 * self.second[i2(d, i, j)];
                }
            }
        }
        if ord >= 3 {
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        r.third[i3(d, i, j, k)] = u3
                            * self.first[i]
                            * self.first[j]
                            * self.first[k]
                            + u2 * (self.second[i2(d, i, j)] * self.first[k]
                                + self.second[i2(d, i, k)] * self.first[j]
                                + self.second[i2(d, j, k)] * self.first[i])
                            + u1 * self.third[i3(d, i, j, k)];
                    }
                }
            }
        }
        r
    }

    pub fn exp(&self) -> Jet {
        let e = self.value.exp();
        self.chain(e, e, e, e)
    }

    pub fn ln(&self) -> GeoResult<Jet> {
        let x = self.value;
        if x <= 0.0 {
            return Err(GeoError::Eval { op: "ln", value: x });
        }
        Ok(self.chain(x.ln(), 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x)))
    }

    pub fn sqrt(&self) -> GeoResult<Jet> {
        let x = self.value;
        if x < 0.0 || (x == 0.0 && self.order > 0) {
            return Err(GeoError::Eval { op: "sqrt", value: x });
        }
        if x == 0.0 {
            return Ok(Jet::constant(0.0, self.dim, 0));
        }
        let s = x.sqrt();
        Ok(self.chain(
            s,
            0.5 / s,
            -0.25 / (x * s),
            0.375 / (x * x * s),
        ))
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s, -c)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c, s)
    }

    pub fn powi(&self, n: i32) -> GeoResult<Jet> {
        if n < 0 {
            return self.powi(-n)?.recip();
        }
        let mut r = Jet::constant(1.0, self.dim, self.order);
        for _ in 0..n {
            r = r.mul(self);
        }
        Ok(r)
    }

    pub fn powf(&self, p: f64) -> GeoResult<Jet> {
        if p.fract() == 0.0 && p.abs() < 64.0 {
            return self.powi(p as i32);
        }
        let x = self.value;
        if x <= 0.0 {
            return Err(GeoError::Eval { op: "powf", value: x });
        }
        let u0 = x.powf(p);
        Ok(self.chain(
            u0,
            p * x.powf(p - 1.0),
            p * (p - 1.0) * x.powf(p - 2.0),
            p * (p - 1.0) * (p - 2.0) * x.powf(p - 3.0),
        ))
    }
}

macro_rules! jet_binop {
    ($trait:ident, $m:ident) => {
        impl std::ops::$trait<&Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                Jet::$m(self, rhs)
            }
        }
        impl std::ops::$trait<Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                Jet::$m(&self, &rhs)
            }
        }
        impl std::ops::$trait<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                Jet::$m(&self, rhs)
            }
        }
    };
}

jet_binop!(Add, add);
jet_binop!(Sub, sub);
jet_binop!(Mul, mul);

impl std::ops::Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet::neg(self)
    }
}

/// Seed the coordinates of `point` as independent jets.
pub fn seed_independents(point: &[f64], order: usize) -> GeoResult<Vec<Jet>> {
    if point.is_empty() {
        return Err(GeoError::Dimension("cannot seed an empty point".into()));
    }
    let d = point.len();
    Ok((0..d)
        .map(|i| Jet::independent(point[i], i, d, order))
        .collect())
}

/// Apply a scalar chart function to jet arguments.
pub fn jet_apply<F>(f: F, args: &[Jet]) -> GeoResult<Jet>
where
    F: Fn(&[Jet]) -> GeoResult<Jet>,
{
    f(args)
}

/// Evaluate the Taylor polynomial of `outer` (seeded at the values of `args`)
/// on the jets `args`. The result carries the partials of the composed map
/// with respect to the independents of `args`, valid to
/// `min(outer.order, args order)`.
///
/// `outer` must have been produced by evaluating the target function on
/// independents seeded exactly at `args[i].value`; truncation of the outer
/// Taylor series beyond its order is then exact for the composed partials up
/// to that order.
pub fn compose(outer: &Jet, args: &[Jet]) -> Jet {
    let m = outer.dim();
    assert_eq!(m, args.len(), "compose arity mismatch");
    let d = args[0].dim();
    let inner_ord = args.iter().map(|a| a.order()).min().unwrap();
    let ord = outer.order().min(inner_ord);

    // Displacement jets: same derivatives as args, value forced to zero.
    let deltas: Vec<Jet> = args
        .iter()
        .map(|a| {
            let mut d = a.clone().truncated(ord);
            d.value = 0.0;
            d
        })
        .collect();

    let mut acc = Jet::constant(outer.value, d, ord);
    if outer.order() >= 1 {
        for a in 0..m {
            let c = outer.first[a];
            if c != 0.0 {
                acc = acc.add(&deltas[a].scale(c));
            }
        }
    }
    if outer.order() >= 2 && ord >= 1 {
        // pair products, exploiting symmetry
        for a in 0..m {
            for b in a..m {
                let c = outer.second[i2(m, a, b)];
                if c == 0.0 {
                    continue;
                }
                let w = if a == b { 0.5 } else { 1.0 };
                let p = deltas[a].mul(&deltas[b]);
                acc = acc.add(&p.scale(c * w));
            }
        }
    }
    if outer.order() >= 3 && ord >= 2 {
        for a in 0..m {
            for b in a..m {
                let pab = deltas[a].mul(&deltas[b]);
                for c in b..m {
                    let coef = outer.third[i3(m, a, b, c)];
                    if coef == 0.0 {
                        continue;
                    }
                    // multiplicity of the ordered index class (a <= b <= c)
                    let mult = if a == b && b == c {
                        1.0
                    } else if a == b || b == c || a == c {
                        3.0
                    } else {
                        6.0
                    };
                    let p = pab.mul(&deltas[c]);
                    acc = acc.add(&p.scale(coef * mult / 6.0));
                }
            }
        }
    }
    acc
}

/// Evaluate a jet-valued map on foreign jets via [`compose`]: the map is run
/// on independents seeded at the values of `args` to `outer_order`, then each
/// component is composed with `args`.
pub fn compose_map<F>(f: F, args: &[Jet], outer_order: usize) -> GeoResult<Vec<Jet>>
where
    F: Fn(&[Jet]) -> GeoResult<Vec<Jet>>,
{
    let point: Vec<f64> = args.iter().map(|a| a.value).collect();
    let seeds = seed_independents(&point, outer_order)?;
    let outer = f(&seeds)?;
    Ok(outer.iter().map(|o| compose(o, args)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() < tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn seeding_matches_definition() {
        let js = seed_independents(&[1.0, 2.0], 3).unwrap();
        assert_eq!(js[0].value, 1.0);
        assert_eq!(js[0].first, vec![1.0, 0.0]);
        assert_eq!(js[1].value, 2.0);
        assert_eq!(js[1].first, vec![0.0, 1.0]);

        let js = seed_independents(&[0.0], 3).unwrap();
        assert_eq!(js[0].value, 0.0);
        assert_eq!(js[0].first, vec![1.0]);

        assert!(seed_independents(&[], 2).is_err());
    }

    #[test]
    fn square_of_independent() {
        let x = Jet::independent(3.0, 0, 1, 3);
        let sq = x.mul(&x);
        assert_eq!(sq.value, 9.0);
        assert_eq!(sq.first[0], 6.0);
        assert_eq!(sq.second[0], 2.0);
        assert_eq!(sq.third[0], 0.0);
    }

    #[test]
    fn constant_has_zero_derivatives() {
        let c = Jet::constant(5.0, 2, 3);
        assert_eq!(c.value, 5.0);
        assert!(c.first.iter().all(|&x| x == 0.0));
        assert!(c.second.iter().all(|&x| x == 0.0));
        assert!(c.third.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn sine_taylor_at_zero() {
        let x = Jet::independent(0.0, 0, 1, 3);
        let s = x.sin();
        assert_close(s.value, 0.0, 1e-15);
        assert_close(s.first[0], 1.0, 1e-15);
        assert_close(s.second[0], 0.0, 1e-15);
        assert_close(s.third[0], -1.0, 1e-15);
    }

    #[test]
    fn bilinear_partials() {
        let js = seed_independents(&[2.0, 3.0], 3).unwrap();
        let p = js[0].mul(&js[1]);
        assert_eq!(p.first, vec![3.0, 2.0]);
        assert_eq!(p.partial_at(&[0, 1]).unwrap(), 1.0);
        assert_eq!(p.partial_at(&[0, 0]).unwrap(), 0.0);
        assert!(p.third.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn extract_partial_examples() {
        let x = Jet::independent(4.0, 0, 1, 3);
        assert_eq!(x.partial_at(&[0]).unwrap(), 1.0);

        let cube = Jet::independent(1.0, 0, 1, 3).powi(3).unwrap();
        assert_close(cube.partial_at(&[0, 0, 0]).unwrap(), 6.0, 1e-12);

        let js = seed_independents(&[1.0, 1.0], 3).unwrap();
        let f = js[0].mul(&js[0]).mul(&js[1]); // x²y
        assert_close(f.partial_at(&[0, 0, 1]).unwrap(), 2.0, 1e-12);
    }

    #[test]
    fn order_above_three_rejected() {
        let x = Jet::independent(1.0, 0, 1, 3);
        assert!(matches!(
            x.partial_at(&[0, 0, 0, 0]),
            Err(GeoError::UnsupportedOrder { .. })
        ));
    }

    #[test]
    fn mixed_partials_commute_exactly() {
        let js = seed_independents(&[0.7, -0.3, 1.1], 3).unwrap();
        let f = js[0].sin().mul(&js[1].exp()).add(&js[2].mul(&js[0]));
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(
                    f.partial_at(&[i, j]).unwrap(),
                    f.partial_at(&[j, i]).unwrap()
                );
                for k in 0..3 {
                    let a = f.partial_at(&[i, j, k]).unwrap();
                    let b = f.partial_at(&[k, j, i]).unwrap();
                    let c = f.partial_at(&[j, k, i]).unwrap();
                    assert_eq!(a, b);
                    assert_eq!(a, c);
                }
            }
        }
    }

    #[test]
    fn domain_errors_carry_offending_op() {
        let x = Jet::independent(-0.5, 0, 1, 2);
        match x.ln() {
            Err(GeoError::Eval { op, value }) => {
                assert_eq!(op, "ln");
                assert_eq!(value, -0.5);
            }
            other => panic!("expected eval error, got {other:?}"),
        }
        assert!(x.sqrt().is_err());
    }

    #[test]
    fn derivative_jet_shifts_orders() {
        let js = seed_independents(&[0.4, 1.3], 3).unwrap();
        let f = js[0].mul(&js[1]).sin();
        let fu = f.partial(0);
        assert_eq!(fu.order(), 2);
        assert_eq!(fu.value, f.first[0]);
        assert_eq!(fu.first[1], f.partial_at(&[0, 1]).unwrap());
        assert_eq!(
            fu.partial_at(&[1, 1]).unwrap(),
            f.partial_at(&[0, 1, 1]).unwrap()
        );
    }

    #[test]
    fn compose_reproduces_direct_evaluation() {
        // outer: f(a, b) = a·sin(b) + b², inner: a = u v, b = u + v²
        let f = |p: &[Jet]| -> GeoResult<Vec<Jet>> {
            Ok(vec![p[0].mul(&p[1].sin()).add(&p[1].mul(&p[1]))])
        };
        let uv = seed_independents(&[0.6, -0.4], 3).unwrap();
        let a = uv[0].mul(&uv[1]);
        let b = uv[0].add(&uv[1].mul(&uv[1]));
        let composed = compose_map(f, &[a.clone(), b.clone()], 3).unwrap();
        let direct = f(&[a, b]).unwrap();
        for (c, d) in composed[0].first.iter().zip(direct[0].first.iter()) {
            assert_close(*c, *d, 1e-13);
        }
        for (c, d) in composed[0].second.iter().zip(direct[0].second.iter()) {
            assert_close(*c, *d, 1e-12);
        }
        for (c, d) in composed[0].third.iter().zip(direct[0].third.iter()) {
            assert_close(*c, *d, 1e-11);
        }
    }
}
