use crate::error::{GeomError, Result};
use crate::numeric::{norm, sub, Matrix};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShootingOptions {
    pub max_iterations: usize,
    pub jacobian_step: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            jacobian_step: 1e-7,
        }
    }
}

/// Initial velocity `v` with `endpoint(start, v) = target`, by damped Broyden
/// iteration. The Jacobian starts from forward differences and is rebuilt
/// whenever a line search fails. The first guess is the straight-line
/// velocity `target − start`.
pub fn shoot_bvp<E>(endpoint: E, start: &[f64], target: &[f64], tol: f64) -> Result<Vec<f64>>
where
    E: Fn(&[f64], &[f64]) -> Result<Vec<f64>>,
{
    shoot_bvp_with(endpoint, start, target, tol, ShootingOptions::default())
}

pub fn shoot_bvp_with<E>(
    endpoint: E,
    start: &[f64],
    target: &[f64],
    tol: f64,
    opts: ShootingOptions,
) -> Result<Vec<f64>>
where
    E: Fn(&[f64], &[f64]) -> Result<Vec<f64>>,
{
    let n = start.len();
    if target.len() != n {
        return Err(GeomError::domain("start and target dimensions differ"));
    }
    let residual = |v: &[f64]| -> Result<Vec<f64>> { Ok(sub(&endpoint(start, v)?, target)) };
    let fd_jacobian = |v: &[f64], r: &[f64]| -> Result<Matrix> {
        let mut jac = Matrix::zeros(n, n);
        for j in 0..n {
            let h = opts.jacobian_step * v[j].abs().max(1.0);
            let mut vp = v.to_vec();
            vp[j] += h;
            let rp = residual(&vp)?;
            for i in 0..n {
                jac[(i, j)] = (rp[i] - r[i]) / h;
            }
        }
        Ok(jac)
    };

    let mut v = sub(target, start);
    let mut r = residual(&v)?;
    let mut rn = norm(&r);
    let mut broyden: Option<Matrix> = None;
    for iteration in 0..opts.max_iterations {
        if rn <= tol {
            return Ok(v);
        }
        let fresh = broyden.is_none();
        let jac = match broyden.take() {
            Some(b) => b,
            None => fd_jacobian(&v, &r)?,
        };
        let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
        let dv = jac.solve(&rhs).map_err(|_| GeomError::Convergence {
            what: "shooting (singular Jacobian)",
            iterations: iteration,
            residual: rn,
        })?;

        let mut step = 1.0;
        loop {
            let trial: Vec<f64> = v.iter().zip(&dv).map(|(a, d)| a + step * d).collect();
            if let Ok(rt) = residual(&trial) {
                let tn = norm(&rt);
                if tn.is_finite() && tn < rn {
                    // rank-one update B += (Δr − B Δv) Δvᵀ / |Δv|²
                    let s = sub(&trial, &v);
                    let bs = jac.mul_vec(&s);
                    let ss: f64 = s.iter().map(|x| x * x).sum();
                    let mut next = jac.clone();
                    if ss > 0.0 {
                        for i in 0..n {
                            let y = rt[i] - r[i] - bs[i];
                            for j in 0..n {
                                next[(i, j)] += y * s[j] / ss;
                            }
                        }
                    }
                    broyden = Some(next);
                    v = trial;
                    r = rt;
                    rn = tn;
                    break;
                }
            }
            step *= 0.5;
            if step < 1e-6 {
                if fresh {
                    return Err(GeomError::Convergence {
                        what: "shooting (line search)",
                        iterations: iteration,
                        residual: rn,
                    });
                }
                break;
            }
        }
    }
    if rn <= tol {
        return Ok(v);
    }
    Err(GeomError::Convergence {
        what: "shooting",
        iterations: opts.max_iterations,
        residual: rn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::integrate_ode;

    fn flat(start: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        Ok(start.iter().zip(v).map(|(a, b)| a + b).collect())
    }

    #[test]
    fn flat_connection() {
        let v = shoot_bvp(flat, &[0.0], &[3.0], 1e-12).unwrap();
        assert!((v[0] - 3.0).abs() < 1e-12);
        let v = shoot_bvp(flat, &[1.5, -2.0], &[1.5, -2.0], 1e-12).unwrap();
        assert_eq!(v, vec![0.0, 0.0]);
    }

    #[test]
    fn nonlinear_geodesic_matches_analytic_velocity() {
        // p̈ = ṗ²/p has solutions p = p₀ e^{vt/p₀}; from 1 to 2 needs v = ln 2.
        let endpoint = |start: &[f64], v: &[f64]| -> Result<Vec<f64>> {
            let tr = integrate_ode(|_, s| vec![s[1], s[1] * s[1] / s[0]], &[start[0], v[0]], 0.0, 1.0, 200)?;
            Ok(vec![tr.last()[0]])
        };
        let v = shoot_bvp(endpoint, &[1.0], &[2.0], 1e-10).unwrap();
        assert!((v[0] - 2f64.ln()).abs() < 1e-8, "{}", v[0]);
        assert!((endpoint(&[1.0], &v).unwrap()[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn unreachable_target_reports_residual() {
        // Endpoint saturates below 1, so the target 5 cannot be reached.
        let endpoint = |_: &[f64], v: &[f64]| -> Result<Vec<f64>> { Ok(vec![v[0].tanh()]) };
        match shoot_bvp(endpoint, &[0.0], &[5.0], 1e-10) {
            Err(GeomError::Convergence { residual, .. }) => assert!(residual > 3.9),
            other => panic!("expected convergence failure, got {other:?}"),
        }
    }
}
