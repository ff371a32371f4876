//! Frenet synthesis/extraction round trips and Legendre diagnostics.

use std::sync::Arc;

use sasakigeo::curve::*;
use sasakigeo::flows::{FieldFn, FlowCurve};
use sasakigeo::jet::Jet;
use sasakigeo::metric::vector_at_jets;
use sasakigeo::models::*;

#[test]
fn great_circle_returns_after_full_period() {
    // start off center, directed so the circle avoids the antipodal point
    // excluded by the stereographic chart
    let model = make_model(ModelKind::StandardSphere, 1, ModelParams::default()).unwrap();
    let start = vec![0.45, 0.0, 0.0];
    let g0 = model.chart.metric_values(&start).unwrap();
    let frame = vec![vec![0.0, 1.0 / g0[1][1].sqrt(), 0.0]];
    let curve = synthesize_curve(
        &model.chart,
        &start,
        &frame,
        &[],
        2.0 * std::f64::consts::PI,
        7000,
    )
    .unwrap();
    let last = curve.positions.last().unwrap();
    let dev: f64 = last
        .iter()
        .zip(&start)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(dev < 1e-4, "great circle deviation {dev:.2e}");

    // a geodesic re-extracts with osculating order 1
    let ex = frenet_apparatus(&curve.positions, curve.step(), &model.chart, 1e-6).unwrap();
    assert_eq!(ex.osculating_order, 1);
    assert!(ex.curvatures.iter().all(|k| k.is_empty()));
}

#[test]
fn helix_round_trip_in_heisenberg() {
    let model = make_model(ModelKind::Heisenberg, 3, ModelParams::default()).unwrap();
    let start = vec![0.0; 7];
    let frame = legendre_start_frame(&model, &start, 4).unwrap();
    let curve =
        synthesize_curve(&model.chart, &start, &frame, &[2.0, 1.0, 0.5], 5.0, 5000).unwrap();
    let ex = frenet_apparatus(&curve.positions, curve.step(), &model.chart, 1e-6).unwrap();
    assert_eq!(ex.osculating_order, 4);
    let kappas = ex.mean_curvatures();
    for (k, expect) in kappas.iter().zip([2.0, 1.0, 0.5]) {
        assert!((k - expect).abs() < 1e-5, "kappa {k} vs {expect}");
    }
    // helices have constant curvatures along the curve
    for spread in ex.curvature_spread() {
        assert!(spread < 1e-6, "curvature spread {spread:.2e}");
    }
    // synthesized frames stay orthonormal
    for (p, legs) in curve.positions.iter().zip(curve.frame.iter()).step_by(500) {
        let g = model.chart.metric_values(p).unwrap();
        for (i, a) in legs.iter().enumerate() {
            for (j, b) in legs.iter().enumerate() {
                let t = if i == j { 1.0 } else { 0.0 };
                assert!((sasakigeo::metric::inner(&g, a, b) - t).abs() < 1e-7);
            }
        }
    }
    // unit speed
    for (p, legs) in curve.positions.iter().zip(curve.frame.iter()).step_by(997) {
        let g = model.chart.metric_values(p).unwrap();
        assert!((sasakigeo::metric::norm(&g, &legs[0]) - 1.0).abs() < 1e-6);
    }
}

#[test]
fn round_trip_all_models() {
    for kind in [
        ModelKind::StandardSphere,
        ModelKind::DeformedSphere,
        ModelKind::Heisenberg,
        ModelKind::BallTimesLine,
    ] {
        let params = match kind {
            ModelKind::DeformedSphere => ModelParams {
                a: Some(0.5),
                ..Default::default()
            },
            ModelKind::BallTimesLine => ModelParams {
                k: Some(-4.0),
                ..Default::default()
            },
            _ => ModelParams::default(),
        };
        let model = make_model(kind, 2, params).unwrap();
        let d = model.dim();
        let start = vec![0.0; d];
        let frame = legendre_start_frame(&model, &start, 3).unwrap();
        let kappas = [1.3, 0.7];
        let length = if kind == ModelKind::BallTimesLine {
            1.6
        } else {
            4.0
        };
        let steps = (length * 1000.0) as usize;
        let curve =
            synthesize_curve(&model.chart, &start, &frame, &kappas, length, steps).unwrap();
        let ex = frenet_apparatus(&curve.positions, curve.step(), &model.chart, 1e-6).unwrap();
        assert_eq!(ex.osculating_order, 3, "{}", kind.name());
        for (k, expect) in ex.mean_curvatures().iter().zip(kappas) {
            assert!(
                (k - expect).abs() < 1e-5,
                "{}: kappa {k} vs {expect}",
                kind.name()
            );
        }
    }
}

#[test]
fn random_tuple_round_trips() {
    // twenty random curvature tuples per model, r <= 4, kappa in [0.1, 3]
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2718);
    for kind in [
        ModelKind::StandardSphere,
        ModelKind::DeformedSphere,
        ModelKind::Heisenberg,
        ModelKind::BallTimesLine,
    ] {
        let params = match kind {
            ModelKind::DeformedSphere => ModelParams {
                a: Some(2.0),
                ..Default::default()
            },
            ModelKind::BallTimesLine => ModelParams {
                k: Some(-4.0),
                ..Default::default()
            },
            _ => ModelParams::default(),
        };
        let model = make_model(kind, 2, params).unwrap();
        let d = model.dim();
        let start = vec![0.0; d];
        // the ball chart covers a bounded metric radius; everywhere else the
        // stated length 5 applies
        let length = if kind == ModelKind::BallTimesLine {
            1.6
        } else {
            5.0
        };
        let steps = (length * 1000.0) as usize;
        for case in 0..20 {
            let r = rng.gen_range(2..=4usize);
            let kappas: Vec<f64> = (0..r - 1).map(|_| rng.gen_range(0.1..3.0)).collect();
            let frame = legendre_start_frame(&model, &start, r).unwrap();
            let curve = match synthesize_curve(&model.chart, &start, &frame, &kappas, length, steps)
            {
                Ok(c) => c,
                Err(sasakigeo::GeoError::ChartExit { .. }) => continue, // low-κ drift
                Err(e) => panic!("{}: {e}", kind.name()),
            };
            // frame orthonormality along the curve
            for (p, legs) in curve.positions.iter().zip(curve.frame.iter()).step_by(777) {
                let g = model.chart.metric_values(p).unwrap();
                for (i, a) in legs.iter().enumerate() {
                    for (j, b) in legs.iter().enumerate() {
                        let t = if i == j { 1.0 } else { 0.0 };
                        assert!(
                            (sasakigeo::metric::inner(&g, a, b) - t).abs() < 1e-7,
                            "{} case {case}: frame drift",
                            kind.name()
                        );
                    }
                }
                // arclength parametrization
                assert!((sasakigeo::metric::norm(&g, &legs[0]) - 1.0).abs() < 1e-6);
            }
            let ex =
                frenet_apparatus(&curve.positions, curve.step(), &model.chart, 1e-6).unwrap();
            assert_eq!(
                ex.osculating_order,
                r,
                "{} case {case}: kappas {kappas:?}",
                kind.name()
            );
            for (k, expect) in ex.mean_curvatures().iter().zip(&kappas) {
                assert!(
                    (k - expect).abs() < 1e-5,
                    "{} case {case}: {k} vs {expect} in {kappas:?}",
                    kind.name()
                );
            }
        }
    }
}

#[test]
fn legendre_curves_and_fiber_curves() {
    let model = make_model(ModelKind::Heisenberg, 3, ModelParams::default()).unwrap();
    let start = vec![0.0; 7];
    let frame = legendre_start_frame(&model, &start, 2).unwrap();
    let circle = synthesize_curve(&model.chart, &start, &frame, &[1.5], 5.0, 5000).unwrap();
    let res = legendre_residual(&circle, &model).unwrap();
    assert!(res < 1e-5, "Legendre circle residual {res:.2e}");

    // integral curve of ξ is maximally non-Legendre: η(γ') = 1
    let model1 = Arc::new(make_model(ModelKind::Heisenberg, 1, ModelParams::default()).unwrap());
    let xi_field: FieldFn = {
        let m = model1.clone();
        Arc::new(move |y: &[Jet]| vector_at_jets(&m.xi, y, y[0].order() + 1))
    };
    let fc = FlowCurve::build(xi_field, vec![0.1, 0.2, 0.0], 0.0, 2.0, 2000, None, None).unwrap();
    let sample = frenet_apparatus(&fc.states, fc.step, &model1.chart, 1e-6).unwrap();
    let res = legendre_residual(&sample, &model1).unwrap();
    assert!((res - 1.0).abs() < 1e-6, "fiber residual {res}");
}

#[test]
fn non_orthonormal_start_frame_rejected() {
    let model = make_model(ModelKind::Heisenberg, 1, ModelParams::default()).unwrap();
    let start = vec![0.0; 3];
    let bad = vec![vec![1.0, 0.0, 0.0], vec![1.0, 0.1, 0.0]];
    assert!(matches!(
        synthesize_curve(&model.chart, &start, &bad, &[1.0], 1.0, 1000),
        Err(sasakigeo::GeoError::Precondition { .. })
    ));
    assert!(matches!(
        synthesize_curve(&model.chart, &start, &bad[..1].to_vec(), &[-1.0], 1.0, 1000),
        Err(sasakigeo::GeoError::Parameter(_))
    ));
}

#[test]
fn chart_exit_is_reported_with_location() {
    let model = make_model(ModelKind::BallTimesLine, 1, ModelParams { k: Some(-4.0), ..Default::default() }).unwrap();
    let start = vec![0.0; 3];
    let frame = legendre_start_frame(&model, &start, 1).unwrap();
    // a long geodesic runs into the ball boundary
    match synthesize_curve(&model.chart, &start, &frame, &[], 6.0, 6000) {
        Err(sasakigeo::GeoError::ChartExit { s, .. }) => assert!(s > 0.0),
        Err(sasakigeo::GeoError::Domain { .. }) => {}
        Ok(_) => panic!("expected chart exit, curve stayed inside"),
        Err(other) => panic!("expected chart exit, got {other:?}"),
    }
}

#[test]
fn reparametrization_flagged_for_non_unit_speed() {
    // uniform samples of a non-unit-speed parametrization of a flat line
    let chart = sasakigeo::metric::euclidean_chart(2, 50.0);
    let n = 3000;
    let positions: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let t = i as f64 * 1e-3;
            // speed 1 + 0.3 sin t
            let s = t - 0.3 * (t.cos() - 1.0);
            vec![s, 0.0]
        })
        .collect();
    let ex = frenet_apparatus(&positions, 1e-3, &chart, 1e-6).unwrap();
    assert!(ex.reparametrized, "expected reparametrization flag");
    assert_eq!(ex.osculating_order, 1);
}
