use std::sync::Arc;

use otgeo::cost::{CostModel, LogCost, QuadraticCost};
use otgeo::dualistic::{metric_g, metric_g_from_divergence};
use otgeo::geodesic::integrate_primal_geodesic;
use otgeo::numeric::symmetric_eigenvalues;
use otgeo::pseudo::{metric_h, ProductPoint};
use otgeo::transport::{BrenierChart, BrenierGenerator, GraphChart, LogChart};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn log_chart() -> GraphChart {
    let map = LogChart::new(2, 1.0, 1.0 / 3.0, 0.0).unwrap();
    GraphChart::new(Arc::new(map.cost().unwrap()), Arc::new(map)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn quadratic_pseudo_metric_has_eigenvalues_plus_minus_half(
        p in proptest::collection::vec(-3.0f64..3.0, 3),
        q in proptest::collection::vec(-3.0f64..3.0, 3),
    ) {
        let h = metric_h(&QuadraticCost::new(3), &ProductPoint::new(p, q)).unwrap();
        let mut ev = symmetric_eigenvalues(&h.full).unwrap();
        ev.sort_by(f64::total_cmp);
        for (k, v) in ev.iter().enumerate() {
            let expected = if k < 3 { -0.5 } else { 0.5 };
            prop_assert!((v - expected).abs() <= 1e-12, "{ev:?}");
        }
    }

    #[test]
    fn log_pseudo_metric_is_neutral(seed in any::<u64>(), alpha in 0.25f64..3.0) {
        let cost = LogCost::new(3, alpha).unwrap();
        let (p, q) = cost.sample_point(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(metric_h(&cost, &ProductPoint::new(p, q)).unwrap().signature, (3, 3));
    }

    #[test]
    fn graph_metric_matches_divergence_hessian(seed in any::<u64>()) {
        let chart = log_chart();
        let xi = chart.sample(&mut ChaCha8Rng::seed_from_u64(seed));
        let analytic = metric_g(&chart, &xi).unwrap().primal;
        let fd = metric_g_from_divergence(&chart, &xi).unwrap();
        prop_assert!(analytic.max_abs_diff(&fd) <= 1e-5 * (1.0 + analytic.max_abs()));
    }

    #[test]
    fn flat_chart_geodesics_are_straight(
        x0 in proptest::collection::vec(-1.0f64..1.0, 2),
        v0 in proptest::collection::vec(-1.0f64..1.0, 2),
    ) {
        let map = BrenierChart::new(2, BrenierGenerator::Identity).unwrap();
        let chart = GraphChart::new(Arc::new(map.cost()), Arc::new(map)).unwrap();
        let path = integrate_primal_geodesic(&chart, &x0, &v0, 1.0, 32).unwrap();
        prop_assert!(path.completed());
        for s in &path.samples {
            for k in 0..2 {
                prop_assert!((s.xi[k] - (x0[k] + s.t * v0[k])).abs() <= 1e-12);
            }
        }
    }
}
