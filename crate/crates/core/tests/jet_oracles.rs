//! Independent oracles for the jet arithmetic: symbolic differentiation of
//! random polynomials, and central-difference convergence on transcendental
//! compositions.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sasakigeo::jet::{jet_apply, seed_independents, Jet};
use sasakigeo::GeoResult;

/// Sparse multivariate polynomial with exact symbolic partials.
#[derive(Clone, Debug)]
struct Poly {
    dim: usize,
    terms: Vec<(f64, Vec<u32>)>,
}

impl Poly {
    fn random(rng: &mut ChaCha8Rng, dim: usize, max_deg: u32, nterms: usize) -> Poly {
        let mut terms = Vec::with_capacity(nterms);
        for _ in 0..nterms {
            let coef: f64 = rng.gen_range(-2.0..2.0);
            let mut exps = vec![0u32; dim];
            let mut budget = max_deg;
            for e in exps.iter_mut() {
                let take = rng.gen_range(0..=budget.min(3));
                *e = take;
                budget -= take;
            }
            terms.push((coef, exps));
        }
        Poly { dim, terms }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| c * e.iter().zip(x).map(|(&p, &v)| v.powi(p as i32)).product::<f64>())
            .sum()
    }

    /// Symbolic partial derivative along one axis.
    fn partial(&self, axis: usize) -> Poly {
        let terms = self
            .terms
            .iter()
            .filter(|(_, e)| e[axis] > 0)
            .map(|(c, e)| {
                let mut e2 = e.clone();
                e2[axis] -= 1;
                (c * e[axis] as f64, e2)
            })
            .collect();
        Poly {
            dim: self.dim,
            terms,
        }
    }

    fn eval_jets(&self, x: &[Jet]) -> Jet {
        let (d, o) = (x[0].dim(), x[0].order());
        let mut acc = Jet::constant(0.0, d, o);
        for (c, e) in &self.terms {
            let mut term = Jet::constant(*c, d, o);
            for (axis, &p) in e.iter().enumerate() {
                for _ in 0..p {
                    term = term.mul(&x[axis]);
                }
            }
            acc = acc.add(&term);
        }
        acc
    }
}

#[test]
fn polynomial_partials_match_symbolic_differentiation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..200 {
        let dim = rng.gen_range(1..=7usize);
        let nterms = rng.gen_range(1..=6);
        let poly = Poly::random(&mut rng, dim, 5, nterms);
        let point: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let jets = seed_independents(&point, 3).unwrap();
        let j = poly.eval_jets(&jets);

        assert!((j.value - poly.eval(&point)).abs() < 1e-12, "case {case}");
        for a in 0..dim {
            let pa = poly.partial(a);
            assert!((j.first[a] - pa.eval(&point)).abs() < 1e-12);
            for b in 0..dim {
                let pab = pa.partial(b);
                assert!(
                    (j.partial_at(&[a, b]).unwrap() - pab.eval(&point)).abs() < 1e-12,
                    "case {case} d2 ({a},{b})"
                );
                for c in 0..dim {
                    let pabc = pab.partial(c);
                    assert!(
                        (j.partial_at(&[a, b, c]).unwrap() - pabc.eval(&point)).abs() < 1e-12,
                        "case {case} d3 ({a},{b},{c})"
                    );
                }
            }
        }
    }
}

fn smooth_composition(x: &[Jet]) -> GeoResult<Jet> {
    // exp(sin(x·y)) + √(2 + x) · log(2 + y²)
    let xy = x[0].mul(&x[1]);
    let a = xy.sin().exp();
    let b = x[0].add_scalar(2.0).sqrt()?;
    let c = x[1].mul(&x[1]).add_scalar(2.0).ln()?;
    Ok(a.add(&b.mul(&c)))
}

fn eval_value(p: &[f64]) -> f64 {
    let jets: Vec<Jet> = p.iter().map(|&v| Jet::constant(v, 2, 0)).collect();
    smooth_composition(&jets).unwrap().value
}

#[test]
fn transcendental_partials_match_finite_differences_at_second_order() {
    let p = [0.4, -0.7];
    let jets = seed_independents(&p, 3).unwrap();
    let j = jet_apply(smooth_composition, &jets).unwrap();

    // first and second partials against central differences at three
    // halvings: errors must decrease at O(h²)
    for axis in 0..2 {
        let mut errs = Vec::new();
        for &h in &[1e-2, 5e-3, 2.5e-3] {
            let mut pp = p;
            pp[axis] += h;
            let mut pm = p;
            pm[axis] -= h;
            let fd = (eval_value(&pp) - eval_value(&pm)) / (2.0 * h);
            errs.push((fd - j.first[axis]).abs());
        }
        for w in errs.windows(2) {
            let ratio = w[0] / w[1].max(1e-16);
            assert!(ratio > 3.0, "first derivative not O(h²): {errs:?}");
        }
    }
    // mixed second partial
    let mut errs = Vec::new();
    for &h in &[1e-2, 5e-3, 2.5e-3] {
        let f = |du: f64, dv: f64| eval_value(&[p[0] + du, p[1] + dv]);
        let fd = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
        errs.push((fd - j.partial_at(&[0, 1]).unwrap()).abs());
    }
    for w in errs.windows(2) {
        assert!(w[0] / w[1].max(1e-16) > 3.0, "second derivative not O(h²): {errs:?}");
    }
}

#[test]
fn jet_apply_reports_domain_violations() {
    let jets = seed_independents(&[-3.0, 0.0], 2).unwrap();
    let err = jet_apply(smooth_composition, &jets).unwrap_err();
    match err {
        sasakigeo::GeoError::Eval { op, value } => {
            assert_eq!(op, "sqrt");
            assert!(value < 0.0);
        }
        other => panic!("expected eval error, got {other}"),
    }
}
