use std::sync::Arc;

use otgeo::cost::{fd_oracle_partial, ConvexCost, CoshSum, CostExt, CostModel, EntropicCost, EntropicProblem, LogCost};
use otgeo::transport::three_state_cost_matrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn log_first_and_mixed_partials_match_closed_form(
        alpha in 0.25f64..3.0,
        p in proptest::collection::vec(0.05f64..3.0, 2),
        q in proptest::collection::vec(0.05f64..3.0, 2),
    ) {
        let cost = LogCost::new(2, alpha).unwrap();
        let s = 1.0 + alpha * (p[0] * q[0] + p[1] * q[1]);
        for i in 0..2 {
            prop_assert!(close(cost.partial(&p, &q, &[i], &[]).unwrap(), q[i] / s, 1e-12));
            prop_assert!(close(cost.partial(&p, &q, &[], &[i]).unwrap(), p[i] / s, 1e-12));
            for j in 0..2 {
                let delta = if i == j { 1.0 } else { 0.0 };
                let expected = delta / s - alpha * q[i] * p[j] / (s * s);
                prop_assert!(close(cost.partial(&p, &q, &[i], &[j]).unwrap(), expected, 1e-12));
            }
        }
    }

    #[test]
    fn log_higher_partials_match_value_differences(
        seed in any::<u64>(),
        primal in proptest::collection::vec(0usize..2, 0..3),
        dual in proptest::collection::vec(0usize..2, 1..3),
    ) {
        prop_assume!(primal.len() + dual.len() <= 3);
        let cost = LogCost::new(2, 1.0).unwrap();
        let (p, q) = cost.sample_point(&mut ChaCha8Rng::seed_from_u64(seed));
        let exact = cost.partial(&p, &q, &primal, &dual).unwrap();
        let fd = fd_oracle_partial(&cost, &p, &q, &primal, &dual).unwrap();
        prop_assert!(close(exact, fd, 1e-5), "exact {exact} fd {fd}");
    }

    #[test]
    fn convex_partials_match_value_differences(
        seed in any::<u64>(),
        primal in proptest::collection::vec(0usize..2, 1..3),
        dual in proptest::collection::vec(0usize..2, 0..2),
    ) {
        let cost = ConvexCost::new(2, Arc::new(CoshSum));
        let (p, q) = cost.sample_point(&mut ChaCha8Rng::seed_from_u64(seed));
        let exact = cost.partial(&p, &q, &primal, &dual).unwrap();
        let fd = fd_oracle_partial(&cost, &p, &q, &primal, &dual).unwrap();
        prop_assert!(close(exact, fd, 1e-5), "exact {exact} fd {fd}");
    }
}

#[test]
fn entropic_second_partials_match_value_differences() {
    let cost = EntropicCost::new(EntropicProblem::new(three_state_cost_matrix(), 0.5).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..4 {
        let (p, q) = cost.sample_point(&mut rng);
        for (primal, dual) in [
            (vec![0], vec![0]),
            (vec![0], vec![1]),
            (vec![1], vec![]),
            (vec![0, 1], vec![]),
            (vec![], vec![1, 1]),
        ] {
            let exact = cost.partial(&p, &q, &primal, &dual).unwrap();
            let fd = fd_oracle_partial(&cost, &p, &q, &primal, &dual).unwrap();
            assert!(close(exact, fd, 1e-5), "{primal:?}/{dual:?}: exact {exact} fd {fd}");
        }
    }
}
