use std::cell::RefCell;
use std::rc::Rc;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::{Rng, RngCore};

use super::CostModel;
use crate::error::{GeomError, Result};
use crate::numeric::{Lu, Matrix};

/// Marginal residual used when potentials feed derivative computations.
const DERIVATIVE_TOL: f64 = 1e-13;

/// Entropically regularized transport between finite state spaces of size `1 + n`.
#[derive(Clone, Debug)]
pub struct EntropicProblem {
    cost: Matrix,
    lambda: f64,
    pub sinkhorn_tol: f64,
    pub max_iters: usize,
}

impl EntropicProblem {
    pub fn new(cost: Matrix, lambda: f64) -> Result<Self> {
        if !cost.is_square() || cost.rows() < 2 {
            return Err(GeomError::Config(
                "cost matrix must be square with at least two states".into(),
            ));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(GeomError::Config(format!("lambda must be positive, got {lambda}")));
        }
        for i in 0..cost.rows() {
            if cost[(i, i)] != 0.0 {
                return Err(GeomError::Config(format!("cost matrix diagonal entry {i} is nonzero")));
            }
            for j in 0..cost.cols() {
                if !(cost[(i, j)] >= 0.0 && cost[(i, j)].is_finite()) {
                    return Err(GeomError::Config(format!(
                        "cost entry ({i},{j}) must be finite and nonnegative"
                    )));
                }
            }
        }
        Ok(Self {
            cost,
            lambda,
            sinkhorn_tol: 1e-10,
            max_iters: 10_000,
        })
    }

    pub fn states(&self) -> usize {
        self.cost.rows()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn cost_matrix(&self) -> &Matrix {
        &self.cost
    }

    /// `M[j][i] = K_ij / Σ_k K_ik` with `K = exp(−C/λ)`, computed in log space.
    fn shrinkage_matrix(&self) -> Matrix {
        let n = self.states();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            let logs: Vec<f64> = (0..n).map(|j| -self.cost[(i, j)] / self.lambda).collect();
            let lse = log_sum_exp(&logs);
            for j in 0..n {
                m[(j, i)] = (logs[j] - lse).exp();
            }
        }
        m
    }
}

/// Coupling matrix with its target marginals.
#[derive(Clone, Debug)]
pub struct Coupling {
    pub matrix: Matrix,
    pub row_marginal: Vec<f64>,
    pub col_marginal: Vec<f64>,
}

impl Coupling {
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.matrix.rows())
            .map(|i| self.matrix.row(i).iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.matrix.cols())
            .map(|j| (0..self.matrix.rows()).map(|i| self.matrix[(i, j)]).sum())
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct SinkhornSolution {
    /// `Σ C_ij π_ij − λ H(π)` at the optimum.
    pub value: f64,
    pub coupling: Coupling,
    /// Dual potentials with `π_ij = exp((f_i + g_j − C_ij)/λ)`.
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn check_simplex(v: &[f64], n: usize, what: &str) -> Result<()> {
    if v.len() != n {
        return Err(GeomError::domain(format!("{what} must have {n} entries")));
    }
    if v.iter().any(|&x| !(x > 0.0)) || (v.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(GeomError::domain(format!("{what} = {v:?} is not in the open simplex")));
    }
    Ok(())
}

/// Regularized cost `C_λ(p, q′)` and its optimal coupling by log-domain Sinkhorn.
pub fn sinkhorn_c_lambda(prob: &EntropicProblem, p: &[f64], q: &[f64]) -> Result<SinkhornSolution> {
    sinkhorn_with(prob, p, q, prob.sinkhorn_tol, None)
}

fn sinkhorn_with(
    prob: &EntropicProblem,
    p: &[f64],
    q: &[f64],
    tol: f64,
    warm_g: Option<&[f64]>,
) -> Result<SinkhornSolution> {
    let n = prob.states();
    check_simplex(p, n, "row marginal")?;
    check_simplex(q, n, "column marginal")?;
    let lam = prob.lambda;
    let c = &prob.cost;
    let mut f = vec![0.0; n];
    let mut g = warm_g.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut buf = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < prob.max_iters {
        iterations += 1;
        for i in 0..n {
            for j in 0..n {
                buf[j] = (g[j] - c[(i, j)]) / lam;
            }
            f[i] = lam * p[i].ln() - lam * log_sum_exp(&buf);
        }
        for j in 0..n {
            for i in 0..n {
                buf[i] = (f[i] - c[(i, j)]) / lam;
            }
            g[j] = lam * q[j].ln() - lam * log_sum_exp(&buf);
        }
        residual = (0..n)
            .map(|i| {
                let row: f64 = (0..n).map(|j| ((f[i] + g[j] - c[(i, j)]) / lam).exp()).sum();
                (row - p[i]).abs()
            })
            .sum();
        if residual <= tol {
            break;
        }
    }
    if residual > tol {
        return Err(GeomError::Convergence {
            what: "sinkhorn",
            iterations,
            residual,
        });
    }
    let matrix = Matrix::from_fn(n, n, |i, j| ((f[i] + g[j] - c[(i, j)]) / lam).exp());
    let value = f.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() + g.iter().zip(q).map(|(a, b)| a * b).sum::<f64>();
    Ok(SinkhornSolution {
        value,
        coupling: Coupling {
            matrix,
            row_marginal: p.to_vec(),
            col_marginal: q.to_vec(),
        },
        f,
        g,
        iterations,
        residual,
    })
}

/// Closed form of `argmin_{q′} C_λ(p, q′)`: `q′_j = Σ_i p_i K_ij / Σ_k K_ik`.
pub fn closed_form_shrinkage(prob: &EntropicProblem, p: &[f64]) -> Vec<f64> {
    prob.shrinkage_matrix().mul_vec(p)
}

/// Jacobian of the shrinkage map in first-`n`-coordinate charts. It is constant.
pub fn shrinkage_jacobian(prob: &EntropicProblem) -> Matrix {
    let m = prob.shrinkage_matrix();
    let n = prob.states() - 1;
    Matrix::from_fn(n, n, |j, k| m[(j, k)] - m[(j, n)])
}

/// `argmin_{q′} C_λ(p, q′)` by mirror descent with multiplicative updates,
/// stopping when the projected gradient is below `1e-7`. The step starts at
/// `1/λ` and is halved whenever it fails to decrease the objective.
pub fn shrinkage_map(prob: &EntropicProblem, p: &[f64]) -> Result<Vec<f64>> {
    const MAX_ITERS: usize = 5_000;
    let n = prob.states();
    check_simplex(p, n, "p")?;
    let mut q = vec![1.0 / n as f64; n];
    let mut sol = sinkhorn_with(prob, p, &q, 1e-12, None)?;
    let mut step = 1.0 / prob.lambda;
    let mut grad_norm = f64::INFINITY;
    for _ in 0..MAX_ITERS {
        let mean: f64 = sol.g.iter().zip(&q).map(|(g, w)| g * w).sum();
        grad_norm = sol.g.iter().map(|g| (g - mean).abs()).fold(0.0, f64::max);
        if grad_norm <= 1e-7 {
            return Ok(q);
        }
        loop {
            let logs: Vec<f64> = q.iter().zip(&sol.g).map(|(w, g)| w.ln() - step * (g - mean)).collect();
            let lse = log_sum_exp(&logs);
            let trial: Vec<f64> = logs.iter().map(|l| (l - lse).exp()).collect();
            let next = sinkhorn_with(prob, p, &trial, 1e-12, Some(&sol.g))?;
            if next.value <= sol.value || step < 1e-12 {
                q = trial;
                sol = next;
                break;
            }
            step *= 0.5;
        }
    }
    Err(GeomError::Convergence {
        what: "shrinkage mirror descent",
        iterations: MAX_ITERS,
        residual: grad_norm,
    })
}

/// Full simplex vector from its first `n` coordinates.
pub fn simplex_from_chart(x: &[f64]) -> Vec<f64> {
    let mut full = x.to_vec();
    full.push(1.0 - x.iter().sum::<f64>());
    full
}

/// `C_λ` as a cost on chart coordinates of two open simplices.
#[derive(Clone, Debug)]
pub struct EntropicCost {
    prob: Arc<EntropicProblem>,
    id: u64,
}

static NEXT_COST_ID: AtomicU64 = AtomicU64::new(0);

type JetKey = (u64, Vec<f64>, Vec<f64>);

thread_local! {
    static LAST_JET: RefCell<Option<(JetKey, Rc<LegendreJet>)>> = const { RefCell::new(None) };
}

impl EntropicCost {
    pub fn new(prob: EntropicProblem) -> Self {
        Self {
            prob: Arc::new(prob),
            id: NEXT_COST_ID.fetch_add(1, Ordering::Relaxed),
        }
    }

    pub fn problem(&self) -> &EntropicProblem {
        &self.prob
    }

    fn solve(&self, xi: &[f64], eta: &[f64]) -> Result<SinkhornSolution> {
        sinkhorn_with(
            &self.prob,
            &simplex_from_chart(xi),
            &simplex_from_chart(eta),
            DERIVATIVE_TOL,
            None,
        )
    }

    /// Per-thread cache of the most recent jet.
    fn jet(&self, xi: &[f64], eta: &[f64]) -> Result<Rc<LegendreJet>> {
        let hit = LAST_JET.with(|slot| {
            slot.borrow().as_ref().and_then(|((id, x, y), jet)| {
                (*id == self.id && x.as_slice() == xi && y.as_slice() == eta).then(|| jet.clone())
            })
        });
        if let Some(jet) = hit {
            return Ok(jet);
        }
        let jet = Rc::new(LegendreJet::new(&self.prob, self.solve(xi, eta)?)?);
        LAST_JET.with(|slot| {
            *slot.borrow_mut() = Some(((self.id, xi.to_vec(), eta.to_vec()), jet.clone()));
        });
        Ok(jet)
    }
}

/// Derivatives of `C_λ` up to fourth order at one point.
///
/// With the gauge `g_last = 0`, `C_λ − λ` is the Legendre transform of
/// `F(f, g) = λ Σ_ij π_ij`, `π_ij = exp((f_i + g_j − C_ij)/λ)`, in the variables
/// `z = (p, q_0..q_{n−1})`. Hence `∇²C = H⁻¹` with `H = ∇²F`, and the third and
/// fourth derivatives follow from those of `F`, which are weighted sums of `π`.
struct LegendreJet {
    lambda: f64,
    big: usize,
    pi: Matrix,
    h: Lu,
    f: Vec<f64>,
    g: Vec<f64>,
}

impl LegendreJet {
    fn new(prob: &EntropicProblem, sol: SinkhornSolution) -> Result<Self> {
        let big = prob.states();
        let n = big - 1;
        let lambda = prob.lambda;
        let pi = sol.coupling.matrix.clone();
        let rows = sol.coupling.row_sums();
        let cols = sol.coupling.col_sums();
        let size = 2 * big - 1;
        let mut h = Matrix::zeros(size, size);
        for i in 0..big {
            h[(i, i)] = rows[i] / lambda;
            for j in 0..n {
                h[(i, big + j)] = pi[(i, j)] / lambda;
                h[(big + j, i)] = pi[(i, j)] / lambda;
            }
        }
        for j in 0..n {
            h[(big + j, big + j)] = cols[j] / lambda;
        }
        Ok(Self {
            lambda,
            big,
            pi,
            h: Lu::factor(&h)?,
            f: sol.f,
            g: sol.g,
        })
    }

    fn size(&self) -> usize {
        2 * self.big - 1
    }

    /// `s_ij · w`, the component of `w` along `(f_i, g_j)`.
    fn along(&self, w: &[f64], i: usize, j: usize) -> f64 {
        w[i] + if j + 1 < self.big { w[self.big + j] } else { 0.0 }
    }

    /// `F⁽ᵏ⁾(w₁, …, w_k)`.
    fn f_form(&self, ws: &[&[f64]]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.big {
            for j in 0..self.big {
                s += self.pi[(i, j)] * ws.iter().map(|w| self.along(w, i, j)).product::<f64>();
            }
        }
        s * self.lambda.powi(1 - ws.len() as i32)
    }

    /// `F⁽³⁾(a, b, ·)` as a covector.
    fn f3_partial(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.size()];
        let scale = self.lambda.powi(-2);
        for i in 0..self.big {
            for j in 0..self.big {
                let w = scale * self.pi[(i, j)] * self.along(a, i, j) * self.along(b, i, j);
                out[i] += w;
                if j + 1 < self.big {
                    out[self.big + j] += w;
                }
            }
        }
        out
    }

    fn direction(&self, primal: bool, k: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.size()];
        if primal {
            v[k] += 1.0;
            v[self.big - 1] -= 1.0;
        } else {
            v[self.big + k] = 1.0;
        }
        v
    }

    fn partial(&self, primal: &[usize], dual: &[usize]) -> Option<f64> {
        let n = self.big - 1;
        let vs: Vec<Vec<f64>> = primal
            .iter()
            .map(|&k| self.direction(true, k))
            .chain(dual.iter().map(|&l| self.direction(false, l)))
            .collect();
        match vs.len() {
            1 => Some(if primal.len() == 1 {
                self.f[primal[0]] - self.f[n]
            } else {
                self.g[dual[0]] - self.g[n]
            }),
            2 => Some(crate::numeric::dot(&vs[0], &self.h.solve(&vs[1]))),
            3 => {
                let w: Vec<Vec<f64>> = vs.iter().map(|v| self.h.solve(v)).collect();
                Some(-self.f_form(&[&w[0], &w[1], &w[2]]))
            }
            4 => {
                let w: Vec<Vec<f64>> = vs.iter().map(|v| self.h.solve(v)).collect();
                let mut total = -self.f_form(&[&w[0], &w[1], &w[2], &w[3]]);
                for (a, b, c, d) in [(0, 3, 1, 2), (1, 3, 0, 2), (2, 3, 0, 1)] {
                    let t = self.h.solve(&self.f3_partial(&w[a], &w[b]));
                    total += self.f_form(&[&t, &w[c], &w[d]]);
                }
                Some(total)
            }
            _ => None,
        }
    }
}

impl CostModel for EntropicCost {
    fn dim(&self) -> usize {
        self.prob.states() - 1
    }

    fn label(&self) -> String {
        format!("entropic(states={}, lambda={})", self.prob.states(), self.prob.lambda)
    }

    fn in_domain(&self, xi: &[f64], eta: &[f64]) -> bool {
        let ok = |x: &[f64]| x.iter().all(|&v| v > 0.0) && x.iter().sum::<f64>() < 1.0;
        ok(xi) && ok(eta)
    }

    fn value(&self, xi: &[f64], eta: &[f64]) -> Result<f64> {
        Ok(self.solve(xi, eta)?.value)
    }

    fn exact_partial(&self, xi: &[f64], eta: &[f64], primal: &[usize], dual: &[usize]) -> Result<Option<f64>> {
        if primal.is_empty() && dual.is_empty() {
            return self.value(xi, eta).map(Some);
        }
        if primal.len() + dual.len() > 4 {
            return Ok(None);
        }
        Ok(self.jet(xi, eta)?.partial(primal, dual))
    }

    fn exact_mixed_block(&self, xi: &[f64], eta: &[f64]) -> Result<Option<Matrix>> {
        let jet = self.jet(xi, eta)?;
        let n = self.dim();
        Ok(Some(Matrix::from_fn(n, n, |k, l| {
            jet.partial(&[k], &[l]).unwrap_or(f64::NAN)
        })))
    }

    fn sample_point(&self, rng: &mut dyn RngCore) -> (Vec<f64>, Vec<f64>) {
        let big = self.prob.states();
        let mut draw = || {
            let w: Vec<f64> = (0..big).map(|_| rng.random_range(0.5..1.5)).collect();
            let total: f64 = w.iter().sum();
            w[..big - 1].iter().map(|v| v / total).collect::<Vec<f64>>()
        };
        let xi = draw();
        let eta = draw();
        (xi, eta)
    }
}
