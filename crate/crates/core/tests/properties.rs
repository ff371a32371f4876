//! Property-based checks of the jet algebra.

use proptest::prelude::*;
use sasakigeo::jet::{compose, seed_independents, Jet};

fn small_f64() -> impl Strategy<Value = f64> {
    (-2.0..2.0f64).prop_filter("finite", |x| x.is_finite())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Product rule at every stored order: build two cubic polynomials in the
    /// independents and compare jet arithmetic against the identity
    /// (f·g)' = f'·g + f·g'.
    #[test]
    fn product_rule_holds(a in small_f64(), b in small_f64(), x in small_f64(), y in small_f64()) {
        let seeds = seed_independents(&[x, y], 3).unwrap();
        let f = seeds[0].mul(&seeds[1]).add(&seeds[0].scale(a));
        let g = seeds[1].mul(&seeds[1]).add(&seeds[0].mul(&seeds[1]).scale(b));
        let fg = f.mul(&g);
        for i in 0..2 {
            let lhs = fg.partial(i);
            let rhs = f.partial(i).mul(&g.clone().truncated(2))
                .add(&f.clone().truncated(2).mul(&g.partial(i)));
            prop_assert!((lhs.value - rhs.value).abs() < 1e-12);
            for k in 0..2 {
                prop_assert!((lhs.first[k] - rhs.first[k]).abs() < 1e-11);
                for l in 0..2 {
                    prop_assert!(
                        (lhs.partial_at(&[k, l]).unwrap() - rhs.partial_at(&[k, l]).unwrap()).abs()
                            < 1e-10
                    );
                }
            }
        }
    }

    /// Taylor composition agrees with direct evaluation of the outer map on
    /// the inner jets.
    #[test]
    fn compose_is_exact_to_third_order(x in small_f64(), y in small_f64(), c in small_f64()) {
        let uv = seed_independents(&[x, y], 3).unwrap();
        let inner1 = uv[0].mul(&uv[1]).add_scalar(c);
        let inner2 = uv[0].add(&uv[1].mul(&uv[1]));
        let outer_fn = |p: &[Jet]| p[0].mul(&p[0]).mul(&p[1]).add(&p[1].scale(0.5));

        let point = [inner1.value, inner2.value];
        let outer_seeds = seed_independents(&point, 3).unwrap();
        let outer = outer_fn(&outer_seeds);
        let composed = compose(&outer, &[inner1.clone(), inner2.clone()]);
        let direct = outer_fn(&[inner1, inner2]);

        prop_assert!((composed.value - direct.value).abs() < 1e-12);
        for k in 0..2 {
            prop_assert!((composed.first[k] - direct.first[k]).abs() < 1e-11);
        }
        for idx in [[0usize, 0], [0, 1], [1, 1]] {
            prop_assert!(
                (composed.partial_at(&idx).unwrap() - direct.partial_at(&idx).unwrap()).abs()
                    < 1e-10
            );
        }
        for idx in [[0usize, 0, 0], [0, 0, 1], [0, 1, 1], [1, 1, 1]] {
            prop_assert!(
                (composed.partial_at(&idx).unwrap() - direct.partial_at(&idx).unwrap()).abs()
                    < 1e-9
            );
        }
    }

    /// Chain rule through the transcendental kernels against derivative
    /// identities: (exp f)' = f'·exp f and (sin f)'' = f''cos f − (f')² sin f.
    #[test]
    fn transcendental_chain_rules(x in 0.1..1.5f64, y in -1.5..1.5f64) {
        let seeds = seed_independents(&[x, y], 3).unwrap();
        let f = seeds[0].mul(&seeds[1]).add(&seeds[1]);
        let ef = f.exp();
        for i in 0..2 {
            let lhs = ef.partial(i);
            let rhs = f.partial(i).mul(&ef.clone().truncated(2));
            prop_assert!((lhs.value - rhs.value).abs() < 1e-10 * (1.0 + rhs.value.abs()));
        }
        let sf = f.sin();
        for i in 0..2 {
            let d2 = sf.partial_at(&[i, i]).unwrap();
            let expect = f.partial_at(&[i, i]).unwrap() * f.value.cos()
                - f.first[i] * f.first[i] * f.value.sin();
            prop_assert!((d2 - expect).abs() < 1e-10);
        }
    }
}
