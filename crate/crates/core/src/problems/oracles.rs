use serde::{Deserialize, Serialize};

use crate::dynamics::stationarity_residual;
use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, norm2, sub, LuFactor, Matrix};
use crate::model::{CompositeProblem, ProxOperator, State};
use crate::prox::L1Norm;

use super::LassoInstance;

/// A reference primal–dual solution with its certificate residuals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
    /// Fixed-point residual at the prox scale given by `residual_gamma`.
    pub fixed_point_residual: f64,
    pub feasibility: f64,
    pub residual_gamma: f64,
}

impl OracleSolution {
    pub fn state(&self) -> State {
        State::new(self.x.clone(), self.lambda.clone())
    }

    fn certify(x: Vec<f64>, lambda: Vec<f64>, prob: &CompositeProblem, gamma: f64, iterations: usize) -> Result<Self> {
        let z = State::new(x, lambda);
        let r = stationarity_residual(&z, prob, gamma)?;
        Ok(Self {
            cost: prob.objective(&z.x),
            x: z.x,
            lambda: z.lambda,
            iterations,
            fixed_point_residual: r.fixed_point,
            feasibility: r.feasibility,
            residual_gamma: gamma,
        })
    }

    fn residual(&self) -> f64 {
        self.fixed_point_residual.max(self.feasibility)
    }
}

fn kkt_matrix(h: &Matrix, a: &Matrix) -> Matrix {
    let (n, m) = (h.rows(), a.rows());
    let mut k = Matrix::zeros(n + m, n + m);
    k.set_block(0, 0, h);
    k.set_block(0, n, &a.transpose());
    k.set_block(n, 0, a);
    k
}

/// ADMM on the splitting `x = z`: the `x`-block carries `½xᵀWx` and `Ax = b`,
/// the `z`-block carries `α‖z‖₁`. The result is polished on the detected
/// support and certified with the fixed-point residual at `γ = 1/L`.
pub fn admm_oracle(inst: &LassoInstance, max_iter: usize, tol: f64) -> Result<OracleSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: tol,
            reason: "must be positive",
        });
    }
    let (n, m) = (inst.n, inst.m);
    let (prob, _) = inst.problem()?;
    let sigma = (inst.rho * inst.l).sqrt();
    let lu = LuFactor::new(&kkt_matrix(&(&inst.w + &Matrix::identity(n).scale(sigma)), &inst.a))?;
    let g = L1Norm { alpha: inst.alpha };

    let mut x = vec![0.0; n];
    let mut nu = vec![0.0; m];
    let mut z = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut rhs = vec![0.0; n + m];
    rhs[n..].copy_from_slice(&inst.b);
    let mut iterations = 0;
    let mut converged = false;
    let mut last = f64::INFINITY;
    while iterations < max_iter {
        iterations += 1;
        for i in 0..n {
            rhs[i] = sigma * (z[i] - u[i]);
        }
        let sol = lu.solve(&rhs);
        x.copy_from_slice(&sol[..n]);
        nu.copy_from_slice(&sol[n..]);
        let v: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + b).collect();
        let z_new = g.prox(1.0 / sigma, &v);
        let primal = norm2(&sub(&x, &z_new));
        let dual = sigma * norm2(&sub(&z_new, &z));
        z = z_new;
        for i in 0..n {
            u[i] += x[i] - z[i];
        }
        last = primal.max(dual);
        if primal <= tol && dual <= tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            solver: "admm",
            iterations,
            residual: last,
        });
    }

    let gamma = 1.0 / inst.l;
    let mut best = OracleSolution::certify(x, nu, &prob, gamma, iterations)?;
    if let Some((xp, lp)) = polish(inst, &z) {
        let cand = OracleSolution::certify(xp, lp, &prob, gamma, iterations)?;
        if cand.residual() <= best.residual() {
            best = cand;
        }
    }
    if best.residual() >= 10.0 * tol {
        return Err(Error::NoConvergence {
            solver: "admm (certificate)",
            iterations,
            residual: best.residual(),
        });
    }
    Ok(best)
}

/// Exact KKT solve with the support and signs of `z` held fixed.
fn polish(inst: &LassoInstance, z: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let support: Vec<usize> = (0..inst.n).filter(|&i| z[i] != 0.0).collect();
    let (k, m) = (support.len(), inst.m);
    if k < m {
        return None;
    }
    let ws = Matrix::from_fn(k, k, |i, j| inst.w[(support[i], support[j])]);
    let a_s = Matrix::from_fn(m, k, |i, j| inst.a[(i, support[j])]);
    let lu = LuFactor::new(&kkt_matrix(&ws, &a_s)).ok()?;
    let mut rhs: Vec<f64> = support.iter().map(|&i| -inst.alpha * z[i].signum()).collect();
    rhs.extend_from_slice(&inst.b);
    let sol = lu.solve(&rhs);
    let mut x = vec![0.0; inst.n];
    for (j, &i) in support.iter().enumerate() {
        if sol[j] != 0.0 && sol[j].signum() != z[i].signum() {
            return None;
        }
        x[i] = sol[j];
    }
    let lambda = sol[k..].to_vec();
    let grad: Vec<f64> = inst
        .w
        .matvec(&x)
        .iter()
        .zip(inst.a.matvec_transpose(&lambda))
        .map(|(a, b)| a + b)
        .collect();
    let consistent = (0..inst.n)
        .filter(|i| !support.contains(i))
        .all(|i| grad[i].abs() <= inst.alpha * (1.0 + 1e-9) + 1e-12);
    consistent.then_some((x, lambda))
}

const AL_TARGET: f64 = 1e-9;
const AL_PATIENCE: usize = 3;
const AL_ACCEPT: f64 = 1e-6;
const AL_MAX_INNER: usize = 20_000;
const AL_MU_MAX: f64 = 1e10;
/// Prox scale at which the returned residual is measured.
const AL_RESIDUAL_GAMMA: f64 = 1.0;

/// Augmented-Lagrangian method with a proximal-gradient inner solver.
pub fn augmented_lagrangian_oracle(prob: &CompositeProblem, x0: &[f64], iters: usize) -> Result<OracleSolution> {
    let (n, m) = (prob.n(), prob.m());
    check_len("initial point", n, x0.len())?;
    let mut x = x0.to_vec();
    let mut lambda = vec![0.0; m];
    let mut mu = 10.0;
    let mut step = 1.0;
    let mut prev_h = f64::INFINITY;
    let mut best: Option<OracleSolution> = None;
    let mut total = 0;
    let mut inner_tol: f64 = 1e-2;
    let mut stale = 0;

    for outer in 0..iters {
        // inner: min f + λᵀh + (μ/2)‖h‖² + g by backtracking proximal gradient
        let phi = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let h = prob.constraint_value(x)?;
            let shifted: Vec<f64> = lambda.iter().zip(&h).map(|(l, hi)| l + mu * hi).collect();
            let mut grad = prob.gradient(x)?;
            let jt = prob.constraint_jacobian(x)?.matvec_transpose(&shifted);
            for (gi, ji) in grad.iter_mut().zip(jt) {
                *gi += ji;
            }
            let value = prob.smooth.value(x) + dot(&lambda, &h) + 0.5 * mu * dot(&h, &h);
            Ok((value, grad))
        };
        let (mut val, mut grad) = phi(&x)?;
        for _ in 0..AL_MAX_INNER {
            total += 1;
            let next = loop {
                let trial: Vec<f64> = x.iter().zip(&grad).map(|(a, b)| a - step * b).collect();
                let xn = prob.prox(step, &trial);
                if let Ok(xn) = xn {
                    if let Ok((vn, gn)) = phi(&xn) {
                        let d = sub(&xn, &x);
                        let model = val + dot(&grad, &d) + dot(&d, &d) / (2.0 * step);
                        if vn.is_finite() && vn <= model + 1e-14 * val.abs().max(1.0) {
                            break Some((xn, vn, gn, norm2(&d) / step));
                        }
                    }
                }
                step *= 0.5;
                if step < 1e-18 {
                    break None;
                }
            };
            let Some((xn, vn, gn, mapping)) = next else {
                return Err(stall(best, outer, "line search failed"));
            };
            x = xn;
            val = vn;
            grad = gn;
            step *= 1.5;
            if mapping <= inner_tol {
                break;
            }
        }

        let h = prob.constraint_value(&x)?;
        for (l, hi) in lambda.iter_mut().zip(&h) {
            *l += mu * hi;
        }
        if !lambda.iter().all(|l| l.is_finite()) {
            return Err(stall(best, outer, "multipliers diverged"));
        }
        let cand = OracleSolution::certify(x.clone(), lambda.clone(), prob, AL_RESIDUAL_GAMMA, total)?;
        let done = cand.residual() <= AL_TARGET;
        inner_tol = (0.1 * cand.residual()).clamp(AL_TARGET * 1e-2, inner_tol);
        if best.as_ref().is_none_or(|b| cand.residual() < b.residual()) {
            best = Some(cand);
            stale = 0;
        } else {
            stale += 1;
        }
        if done || stale >= AL_PATIENCE {
            break;
        }
        let hn = norm2(&h);
        if hn > 0.25 * prev_h && hn > AL_TARGET {
            mu = (10.0 * mu).min(AL_MU_MAX);
        }
        prev_h = hn;
    }

    match best {
        Some(b) if b.residual() < AL_ACCEPT => Ok(b),
        other => Err(stall(other, iters, "residual above acceptance")),
    }
}

fn stall(best: Option<OracleSolution>, outer: usize, why: &str) -> Error {
    let residual = best.as_ref().map_or(f64::INFINITY, |b| b.residual());
    let at = best.map(|b| format!("{:?}", b.x)).unwrap_or_else(|| "none".into());
    Error::Evaluator {
        evaluator: "augmented lagrangian",
        detail: format!("{why} after {outer} outer iterations; best residual {residual:.3e} at x = {at}"),
    }
}
