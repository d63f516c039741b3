use std::sync::Arc;

use otgeo::cost::{closed_form_shrinkage, shrinkage_map, sinkhorn_c_lambda, EntropicCost, EntropicProblem};
use otgeo::numeric::Matrix;
use otgeo::transport::{three_state_cost_matrix, EntropicChart, GraphChart};
use proptest::prelude::*;

fn simplex(raw: &[f64]) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

fn primal_objective(c: &Matrix, lambda: f64, pi: &Matrix) -> f64 {
    let mut total = 0.0;
    for i in 0..c.rows() {
        for j in 0..c.cols() {
            let x = pi[(i, j)];
            total += c[(i, j)] * x + lambda * x * x.ln();
        }
    }
    total
}

/// Minimizes the primal objective over 2x2 couplings with the given marginals,
/// parameterized by `t = π₀₀`, by golden-section search.
fn two_state_minimum(c: &Matrix, lambda: f64, p: &[f64], q: &[f64]) -> f64 {
    let f = |t: f64| {
        let pi = Matrix::from_rows(&[vec![t, p[0] - t], vec![q[0] - t, 1.0 - p[0] - q[0] + t]]);
        primal_objective(c, lambda, &pi)
    };
    let (mut lo, mut hi) = ((p[0] + q[0] - 1.0).max(0.0), p[0].min(q[0]));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let a = hi - ratio * (hi - lo);
        let b = lo + ratio * (hi - lo);
        if f(a) < f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    f(0.5 * (lo + hi))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn coupling_has_the_requested_marginals(
        p in proptest::collection::vec(0.05f64..1.0, 3),
        q in proptest::collection::vec(0.05f64..1.0, 3),
    ) {
        let prob = EntropicProblem::new(three_state_cost_matrix(), 0.5).unwrap();
        let (p, q) = (simplex(&p), simplex(&q));
        let sol = sinkhorn_c_lambda(&prob, &p, &q).unwrap();
        let pi = &sol.coupling.matrix;
        for k in 0..3 {
            let row: f64 = (0..3).map(|j| pi[(k, j)]).sum();
            let col: f64 = (0..3).map(|i| pi[(i, k)]).sum();
            prop_assert!((row - p[k]).abs() <= 1e-9);
            prop_assert!((col - q[k]).abs() <= 1e-8);
        }
        let primal = primal_objective(&three_state_cost_matrix(), 0.5, pi);
        prop_assert!((sol.value - primal).abs() <= 1e-8, "dual {} primal {primal}", sol.value);
    }

    #[test]
    fn two_state_value_is_the_constrained_minimum(
        c01 in 0.1f64..3.0,
        c10 in 0.1f64..3.0,
        lambda in 0.2f64..2.0,
        p0 in 0.05f64..0.95,
        q0 in 0.05f64..0.95,
    ) {
        let c = Matrix::from_rows(&[vec![0.0, c01], vec![c10, 0.0]]);
        let prob = EntropicProblem::new(c.clone(), lambda).unwrap();
        let (p, q) = (vec![p0, 1.0 - p0], vec![q0, 1.0 - q0]);
        let sol = sinkhorn_c_lambda(&prob, &p, &q).unwrap();
        let brute = two_state_minimum(&c, lambda, &p, &q);
        prop_assert!((sol.value - brute).abs() <= 1e-7, "sinkhorn {} search {brute}", sol.value);
    }

    #[test]
    fn mirror_descent_reaches_the_closed_form_shrinkage(p in proptest::collection::vec(0.05f64..1.0, 3)) {
        let prob = EntropicProblem::new(three_state_cost_matrix(), 0.5).unwrap();
        let p = simplex(&p);
        let closed = closed_form_shrinkage(&prob, &p);
        let iterated = shrinkage_map(&prob, &p).unwrap();
        let err = closed.iter().zip(&iterated).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-6, "closed {closed:?} iterated {iterated:?}");
    }

    #[test]
    fn regularized_divergence_is_nonnegative(
        a in proptest::collection::vec(0.05f64..1.0, 3),
        b in proptest::collection::vec(0.05f64..1.0, 3),
    ) {
        let cost = Arc::new(EntropicCost::new(EntropicProblem::new(three_state_cost_matrix(), 0.5).unwrap()));
        let chart = GraphChart::new(cost.clone(), Arc::new(EntropicChart::new(cost).unwrap())).unwrap();
        let (a, b) = (simplex(&a), simplex(&b));
        let d = chart.c_divergence(&a[..2], &b[..2]).unwrap();
        prop_assert!(d >= -1e-9, "{d}");
        prop_assert!(chart.c_divergence(&a[..2], &a[..2]).unwrap().abs() <= 1e-8);
    }
}

#[test]
fn small_iteration_cap_reports_non_convergence() {
    let mut prob = EntropicProblem::new(three_state_cost_matrix(), 0.5).unwrap();
    prob.max_iters = 1;
    assert!(sinkhorn_c_lambda(&prob, &[0.2, 0.3, 0.5], &[0.3, 0.3, 0.4]).is_err());
}
