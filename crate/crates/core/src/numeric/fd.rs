//! Central finite differences for mixed partial derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};

/// Step and Richardson depth for a nested central-difference stencil.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteDifferenceScheme {
    pub step: f64,
    pub richardson_levels: u8,
}

impl FiniteDifferenceScheme {
    pub fn new(step: f64, richardson_levels: u8) -> Self {
        assert!(step > 0.0, "finite-difference step must be positive");
        assert!(richardson_levels <= 2, "at most two Richardson levels");
        Self {
            step,
            richardson_levels,
        }
    }

    /// Default scheme for a derivative of the given total order.
    ///
    /// Order 1 uses 1e-5, order 2 uses 1e-4, order 3 uses 5e-3 with one
    /// Richardson level and order 4 uses 1e-2 with one Richardson level.
    pub fn for_order(order: usize) -> Self {
        match order {
            0 | 1 => Self::new(1e-5, 0),
            2 => Self::new(1e-4, 0),
            3 => Self::new(5e-3, 1),
            _ => Self::new(1e-2, 1),
        }
    }

    /// Largest coordinate offset the stencil touches.
    pub fn reach(&self, order: usize) -> f64 {
        self.step * order as f64
    }
}

/// Mixed partial `∂^k f / ∂x_{i1} … ∂x_{ik}` at `at` by nested central differences.
///
/// Repeated indices are allowed. Each Richardson level combines steps `h` and
/// `h/2` to cancel the leading `O(h²)` error term.
pub fn central_fd<F>(f: F, at: &[f64], indices: &[usize], scheme: FiniteDifferenceScheme) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    richardson(&f, at, indices, scheme.step, scheme.richardson_levels)
}

/// As [`central_fd`], but first checks that every stencil point lies in `domain`.
pub fn central_fd_checked<F, D>(
    f: F,
    at: &[f64],
    indices: &[usize],
    scheme: FiniteDifferenceScheme,
    domain: D,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
    D: Fn(&[f64]) -> bool,
{
    if indices.len() > 4 {
        return Err(GeomError::domain("finite differences support at most order 4"));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= at.len()) {
        return Err(GeomError::domain(format!("index {bad} out of range")));
    }
    let mut probe = at.to_vec();
    if !stencil_inside(&mut probe, indices, 0, scheme.step, &domain) {
        return Err(GeomError::domain("finite-difference stencil leaves the domain"));
    }
    Ok(central_fd(f, at, indices, scheme))
}

fn stencil_inside<D: Fn(&[f64]) -> bool>(
    x: &mut Vec<f64>,
    indices: &[usize],
    depth: usize,
    h: f64,
    domain: &D,
) -> bool {
    if depth == indices.len() {
        return domain(x);
    }
    let i = indices[depth];
    let orig = x[i];
    let mut ok = true;
    for sign in [1.0, -1.0] {
        x[i] = orig + sign * h;
        ok &= stencil_inside(x, indices, depth + 1, h, domain);
    }
    x[i] = orig;
    ok
}

fn richardson<F: Fn(&[f64]) -> f64>(f: &F, at: &[f64], indices: &[usize], h: f64, levels: u8) -> f64 {
    if levels == 0 {
        let mut x = at.to_vec();
        return nested(f, &mut x, indices, h);
    }
    let coarse = richardson(f, at, indices, h, levels - 1);
    let fine = richardson(f, at, indices, h / 2.0, levels - 1);
    let factor = 4f64.powi(levels as i32);
    (factor * fine - coarse) / (factor - 1.0)
}

fn nested<F: Fn(&[f64]) -> f64>(f: &F, x: &mut Vec<f64>, indices: &[usize], h: f64) -> f64 {
    match indices.split_first() {
        None => f(x),
        Some((&i, rest)) => {
            let orig = x[i];
            x[i] = orig + h;
            let plus = nested(f, x, rest, h);
            x[i] = orig - h;
            let minus = nested(f, x, rest, h);
            x[i] = orig;
            (plus - minus) / (2.0 * h)
        }
    }
}

/// Gradient by central differences with step `h`.
pub fn gradient<F: Fn(&[f64]) -> f64>(f: F, at: &[f64], h: f64) -> Vec<f64> {
    (0..at.len())
        .map(|i| central_fd(&f, at, &[i], FiniteDifferenceScheme::new(h, 0)))
        .collect()
}

/// Jacobian `J[a][i] = ∂F_a/∂x_i` of a vector map by central differences.
pub fn jacobian<F: Fn(&[f64]) -> Vec<f64>>(f: F, at: &[f64], h: f64) -> crate::numeric::Matrix {
    let n = at.len();
    let m = f(at).len();
    let mut jac = crate::numeric::Matrix::zeros(m, n);
    let mut x = at.to_vec();
    for i in 0..n {
        let orig = x[i];
        x[i] = orig + h;
        let plus = f(&x);
        x[i] = orig - h;
        let minus = f(&x);
        x[i] = orig;
        for a in 0..m {
            jac[(a, i)] = (plus[a] - minus[a]) / (2.0 * h);
        }
    }
    jac
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn second_derivative_of_square() {
        let d = central_fd(|x| x[0] * x[0], &[0.0], &[0, 0], FiniteDifferenceScheme::for_order(2));
        assert!((d - 2.0).abs() < 1e-8);
    }

    #[test]
    fn mixed_partial_of_product() {
        let d = central_fd(
            |x| x[0] * x[1],
            &[3.0, 7.0],
            &[0, 1],
            FiniteDifferenceScheme::for_order(2),
        );
        assert!((d - 1.0).abs() < 1e-7);
    }

    #[test]
    fn mixed_partial_of_log() {
        // ∂²/∂p∂q log(1+pq) = 1/(1+pq)², which is ¼ at (1,1).
        let f = |x: &[f64]| (1.0 + x[0] * x[1]).ln();
        let d = central_fd(f, &[1.0, 1.0], &[0, 1], FiniteDifferenceScheme::for_order(2));
        assert!((d - 0.25).abs() < 1e-8);
    }

    #[test]
    fn stencil_outside_domain_is_rejected() {
        let f = |x: &[f64]| x[0].ln();
        let res = central_fd_checked(f, &[1e-6], &[0], FiniteDifferenceScheme::for_order(1), |x| x[0] > 0.0);
        assert!(matches!(res, Err(GeomError::Domain(_))));
        let ok = central_fd_checked(f, &[1.0], &[0], FiniteDifferenceScheme::for_order(1), |x| x[0] > 0.0);
        assert!((ok.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fourth_order_mixed_polynomial() {
        // ∂⁴(x²y²)/∂x²∂y² = 4 everywhere.
        let f = |x: &[f64]| x[0] * x[0] * x[1] * x[1];
        let d = central_fd(f, &[0.3, -1.2], &[0, 0, 1, 1], FiniteDifferenceScheme::for_order(4));
        assert!((d - 4.0).abs() < 1e-5, "{d}");
        // ∂³(x³y)/∂x²∂y = 6x.
        let g = |x: &[f64]| x[0].powi(3) * x[1];
        let d3 = central_fd(g, &[0.7, 2.0], &[0, 0, 1], FiniteDifferenceScheme::for_order(3));
        assert!((d3 - 4.2).abs() < 1e-6, "{d3}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn polynomial_partials_match(
            a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0,
            x in -1.5f64..1.5, y in -1.5f64..1.5,
        ) {
            // f = a x³ + b x² y + c x y², exact partials by hand.
            let f = move |v: &[f64]| a * v[0].powi(3) + b * v[0] * v[0] * v[1] + c * v[0] * v[1] * v[1];
            let fx = central_fd(f, &[x, y], &[0], FiniteDifferenceScheme::for_order(1));
            prop_assert!((fx - (3.0 * a * x * x + 2.0 * b * x * y + c * y * y)).abs() < 1e-8);
            let fxy = central_fd(f, &[x, y], &[0, 1], FiniteDifferenceScheme::for_order(2));
            prop_assert!((fxy - (2.0 * b * x + 2.0 * c * y)).abs() < 1e-7);
            let fxxy = central_fd(f, &[x, y], &[0, 0, 1], FiniteDifferenceScheme::for_order(3));
            prop_assert!((fxxy - 2.0 * b).abs() < 1e-6, "{fxxy}");
            let fxxx = central_fd(f, &[x, y], &[0, 0, 0], FiniteDifferenceScheme::for_order(3));
            prop_assert!((fxxx - 6.0 * a).abs() < 1e-6);
        }
    }
}
