use crate::error::{GeomError, Result};

/// Sampled solution of an initial value problem.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Set when integration stopped early because the state left its domain.
    pub stopped_at: Option<f64>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn completed(&self) -> bool {
        self.stopped_at.is_none()
    }
}

pub const MIN_STEPS: usize = 16;

/// One classical fourth-order Runge–Kutta step.
pub fn rk4_step<F>(rhs: &F, t: f64, y: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let k1 = rhs(t, y);
    let y2: Vec<f64> = y.iter().zip(&k1).map(|(a, k)| a + 0.5 * h * k).collect();
    let k2 = rhs(t + 0.5 * h, &y2);
    let y3: Vec<f64> = y.iter().zip(&k2).map(|(a, k)| a + 0.5 * h * k).collect();
    let k3 = rhs(t + 0.5 * h, &y3);
    let y4: Vec<f64> = y.iter().zip(&k3).map(|(a, k)| a + h * k).collect();
    let k4 = rhs(t + h, &y4);
    (0..y.len())
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Fixed-step RK4 from `t0` to `t1`, storing every step.
pub fn integrate_ode<F>(rhs: F, y0: &[f64], t0: f64, t1: f64, steps: usize) -> Result<Trajectory>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    integrate_ode_within(rhs, y0, t0, t1, steps, |_| true)
}

/// As [`integrate_ode`], but stops and truncates when `inside` rejects a state.
pub fn integrate_ode_within<F, D>(rhs: F, y0: &[f64], t0: f64, t1: f64, steps: usize, inside: D) -> Result<Trajectory>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
    D: Fn(&[f64]) -> bool,
{
    if steps < MIN_STEPS {
        return Err(GeomError::domain(format!(
            "need at least {MIN_STEPS} steps, got {steps}"
        )));
    }
    if y0.is_empty() || y0.iter().any(|v| !v.is_finite()) {
        return Err(GeomError::domain("initial state must be non-empty and finite"));
    }
    let h = (t1 - t0) / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(t0);
    states.push(y0.to_vec());
    let mut y = y0.to_vec();
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        let next = rk4_step(&rhs, t, &y, h);
        let bad = next.iter().any(|v| !v.is_finite());
        if bad {
            // Intermediate stages may already sit outside the domain near its boundary.
            let euler: Vec<f64> = y.iter().zip(rhs(t, &y)).map(|(a, k)| a + h * k).collect();
            if euler.iter().all(|v| v.is_finite()) && !inside(&euler) {
                return Ok(Trajectory {
                    times,
                    states,
                    stopped_at: Some(t),
                });
            }
            return Err(GeomError::Integration { last_valid_time: t });
        }
        if !inside(&next) {
            return Ok(Trajectory {
                times,
                states,
                stopped_at: Some(t),
            });
        }
        y = next;
        times.push(if s + 1 == steps { t1 } else { t0 + (s + 1) as f64 * h });
        states.push(y.clone());
    }
    Ok(Trajectory {
        times,
        states,
        stopped_at: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_solution() {
        let tr = integrate_ode(|_, _| vec![0.0], &[1.0], 0.0, 1.0, 16).unwrap();
        assert!(tr.states.iter().all(|s| s[0] == 1.0));
        assert_eq!(tr.times.len(), 17);
    }

    #[test]
    fn exponential_growth() {
        let tr = integrate_ode(|_, y| vec![y[0]], &[1.0], 0.0, 1.0, 256).unwrap();
        assert!((tr.last()[0] - std::f64::consts::E).abs() < 1e-8);
    }

    #[test]
    fn straight_line_second_order() {
        // State (y, y'); ÿ = 0.
        let tr = integrate_ode(|_, s| vec![s[1], 0.0], &[0.0, 2.0], 0.0, 1.0, 32).unwrap();
        assert!((tr.last()[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn empirical_order_is_four() {
        let err = |steps| {
            let tr = integrate_ode(|_, y| vec![y[0]], &[1.0], 0.0, 1.0, steps).unwrap();
            (tr.last()[0] - std::f64::consts::E).abs()
        };
        let order = (err(16) / err(32)).log2();
        assert!(order >= 3.8, "order {order}");
    }

    #[test]
    fn blow_up_reports_last_valid_time() {
        // y' = y² from y(0)=1 blows up at t=1.
        let res = integrate_ode(|_, y| vec![y[0] * y[0]], &[1.0], 0.0, 2.0, 64);
        match res {
            Err(GeomError::Integration { last_valid_time }) => assert!(last_valid_time < 1.2),
            other => panic!("expected integration failure, got {other:?}"),
        }
    }

    #[test]
    fn domain_exit_truncates() {
        let tr = integrate_ode_within(|_, _| vec![-1.0], &[0.5], 0.0, 1.0, 20, |y| y[0] > 0.0).unwrap();
        assert!(!tr.completed());
        assert!(tr.last()[0] > 0.0);
    }

    #[test]
    fn too_few_steps_rejected() {
        assert!(integrate_ode(|_, y| y.to_vec(), &[1.0], 0.0, 1.0, 4).is_err());
    }
}
