//! Entropic optimal transport in vectorized form.
//!
//! Plans are vectorized column-major: `p[i + j·n] = P[i][j]`. The constraint
//! matrix stacks row sums over column sums and drops the final column-sum row.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamics::FieldEvaluation;
use crate::error::{check_len, check_positive, Error, Result};
use crate::integrate::Flow;
use crate::linalg::{norm2, Matrix};
use crate::model::{AffineConstraint, CompositeProblem, SmoothTerm, SolverParams, State};
use crate::prox::{relu, NonNegative};

/// Floor applied inside the entropy logarithm.
pub const LOG_CLAMP: f64 = 1e-12;

const SIMPLEX_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OtInstance {
    pub n: usize,
    pub m: usize,
    pub cost: Matrix,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub eps: f64,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub a_tilde: Matrix,
    pub d_tilde: Vec<f64>,
}

fn check_simplex(name: &'static str, v: &[f64]) -> Result<()> {
    let total: f64 = v.iter().sum();
    if v.iter().any(|x| !(*x >= 0.0)) || (total - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::Precondition(format!(
            "marginal {name} is not on the simplex (sum {total})"
        )));
    }
    Ok(())
}

/// Full `(n+m) × nm` marginal operator `[1ᵀ_m ⊗ I_n; I_m ⊗ 1ᵀ_n]`.
pub(crate) fn marginal_operator(n: usize, m: usize) -> Matrix {
    let mut a = Matrix::zeros(n + m, n * m);
    for j in 0..m {
        for i in 0..n {
            a[(i, i + j * n)] = 1.0;
            a[(n + j, i + j * n)] = 1.0;
        }
    }
    a
}

pub fn make_ot_instance(cost: Matrix, a: Vec<f64>, b: Vec<f64>, eps: f64) -> Result<OtInstance> {
    let (n, m) = (cost.rows(), cost.cols());
    check_len("source marginal", n, a.len())?;
    check_len("target marginal", m, b.len())?;
    check_positive("eps", eps)?;
    check_simplex("a", &a)?;
    check_simplex("b", &b)?;
    if cost.as_slice().iter().any(|c| !(*c >= 0.0 && c.is_finite())) {
        return Err(Error::Precondition("costs must be nonnegative and finite".into()));
    }
    let c: Vec<f64> = (0..n * m).map(|k| cost[(k % n, k / n)]).collect();
    let d: Vec<f64> = a.iter().chain(&b).copied().collect();
    let full = marginal_operator(n, m);
    let a_tilde = full.block(0, 0, n + m - 1, n * m);
    let d_tilde = d[..n + m - 1].to_vec();
    Ok(OtInstance {
        n,
        m,
        cost,
        a,
        b,
        eps,
        c,
        d,
        a_tilde,
        d_tilde,
    })
}

/// `pᵀc + ε Σ pᵢ log pᵢ`, with the gradient's logarithm clamped at [`LOG_CLAMP`].
#[derive(Clone, Debug)]
pub struct EntropicCost {
    pub c: Vec<f64>,
    pub eps: f64,
}

impl SmoothTerm for EntropicCost {
    fn value(&self, p: &[f64]) -> f64 {
        p.iter()
            .zip(&self.c)
            .map(|(&pi, ci)| pi * ci + if pi > 0.0 { self.eps * pi * pi.ln() } else { 0.0 })
            .sum()
    }

    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .zip(&self.c)
            .map(|(&pi, ci)| self.eps * pi.max(LOG_CLAMP).ln() + self.eps + ci)
            .collect()
    }

    fn hessian(&self, p: &[f64]) -> Option<Matrix> {
        Some(Matrix::from_diagonal(
            &p.iter().map(|pi| self.eps / pi.max(LOG_CLAMP)).collect::<Vec<_>>(),
        ))
    }
}

impl OtInstance {
    /// Dense composite form `(f_OT, ι_{≥0}, Ã, d̃)`.
    pub fn problem(&self) -> Result<(CompositeProblem, AffineConstraint)> {
        let con = AffineConstraint::new(self.a_tilde.clone(), self.d_tilde.clone())?;
        let prob = CompositeProblem::new(
            self.n * self.m,
            Arc::new(EntropicCost {
                c: self.c.clone(),
                eps: self.eps,
            }),
            Arc::new(NonNegative),
            Arc::new(con.clone()),
        )?;
        Ok((prob, con))
    }

    /// `Ãv` via row and column sums.
    pub fn apply_a_tilde(&self, v: &[f64]) -> Vec<f64> {
        let (n, m) = (self.n, self.m);
        let mut out = vec![0.0; n + m - 1];
        for j in 0..m {
            let col = &v[j * n..(j + 1) * n];
            for (o, x) in out[..n].iter_mut().zip(col) {
                *o += x;
            }
            if j + 1 < m {
                out[n + j] = col.iter().sum();
            }
        }
        out
    }

    /// `Ãᵀλ`
    pub fn apply_a_tilde_t(&self, lambda: &[f64]) -> Vec<f64> {
        let (n, m) = (self.n, self.m);
        (0..n * m)
            .map(|k| {
                let (i, j) = (k % n, k / n);
                lambda[i] + if j + 1 < m { lambda[n + j] } else { 0.0 }
            })
            .collect()
    }

    pub fn feasibility(&self, p: &[f64]) -> f64 {
        let ap = self.apply_a_tilde(p);
        norm2(&ap.iter().zip(&self.d_tilde).map(|(x, y)| x - y).collect::<Vec<_>>())
    }

    /// Row-sum and column-sum `ℓ₁` errors of a vectorized plan.
    pub fn marginal_errors(&self, p: &[f64]) -> (f64, f64) {
        let (n, m) = (self.n, self.m);
        let mut rows = vec![0.0; n];
        let mut cols = vec![0.0; m];
        for k in 0..n * m {
            rows[k % n] += p[k];
            cols[k / n] += p[k];
        }
        let ea = rows.iter().zip(&self.a).map(|(x, y)| (x - y).abs()).sum();
        let eb = cols.iter().zip(&self.b).map(|(x, y)| (x - y).abs()).sum();
        (ea, eb)
    }

    pub fn vectorize(&self, plan: &Matrix) -> Vec<f64> {
        (0..self.n * self.m).map(|k| plan[(k % self.n, k / self.n)]).collect()
    }

    pub fn unvectorize(&self, p: &[f64]) -> Matrix {
        Matrix::from_fn(self.n, self.m, |i, j| p[i + j * self.n])
    }
}

/// PI–PGD field on the transport problem with structured constraint products.
pub fn ot_field(p: &[f64], lambda: &[f64], inst: &OtInstance, params: &SolverParams) -> Result<FieldEvaluation> {
    let (n, m) = (inst.n, inst.m);
    check_len("plan", n * m, p.len())?;
    check_len("transport multipliers", n + m - 1, lambda.len())?;
    check_positive("gamma", params.gamma)?;
    if let Some(k) = p.iter().position(|&v| !(v >= -1e-12)) {
        return Err(Error::Precondition(format!("plan entry {k} is negative ({})", p[k])));
    }
    let at = inst.apply_a_tilde_t(lambda);
    let eps = inst.eps;
    let y: Vec<f64> = (0..n * m)
        .map(|k| {
            let grad = eps * p[k].max(LOG_CLAMP).ln() + eps + inst.c[k];
            relu(p[k] - params.gamma * (grad + at[k]))
        })
        .collect();
    let dp: Vec<f64> = y.iter().zip(p).map(|(a, b)| a - b).collect();
    let ap = inst.apply_a_tilde(p);
    let ay = inst.apply_a_tilde(&y);
    let dlambda = (0..n + m - 1)
        .map(|r| (params.ki - params.kp) * ap[r] + params.kp * ay[r] - params.ki * inst.d_tilde[r])
        .collect();
    Ok(FieldEvaluation::new(dp, dlambda, y))
}

pub struct OtFlow<'a> {
    pub inst: &'a OtInstance,
    pub params: &'a SolverParams,
}

impl Flow for OtFlow<'_> {
    fn dims(&self) -> (usize, usize) {
        (self.inst.n * self.inst.m, self.inst.n + self.inst.m - 1)
    }

    fn velocity(&self, z: &State) -> Result<State> {
        let f = ot_field(&z.x, &z.lambda, self.inst, self.params)?;
        Ok(State::new(f.dx, f.dlambda))
    }

    fn residual(&self, z: &State) -> Result<f64> {
        Ok(self.inst.feasibility(&z.x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SinkhornStatus {
    Converged,
    Stagnated,
    NonFinite,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinkhornResult {
    pub plan: Matrix,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub iterations: usize,
    /// `‖P1 − a‖₁ + ‖Pᵀ1 − b‖₁`
    pub marginal_error: f64,
    pub status: SinkhornStatus,
}

/// Scaling iterations `v ← b ⊘ Kᵀu`, `u ← a ⊘ Kv` on `K = exp(−C/ε)`.
pub fn sinkhorn(inst: &OtInstance, max_iter: usize, tol: f64) -> SinkhornResult {
    let (n, m) = (inst.n, inst.m);
    let k = Matrix::from_fn(n, m, |i, j| (-inst.cost[(i, j)] / inst.eps).exp());
    let mut u = vec![1.0; n];
    let mut v = vec![1.0; m];
    let plan_of = |u: &[f64], v: &[f64]| Matrix::from_fn(n, m, |i, j| u[i] * k[(i, j)] * v[j]);
    let error_of = |plan: &Matrix| {
        let p = inst.vectorize(plan);
        let (ea, eb) = inst.marginal_errors(&p);
        ea + eb
    };

    let mut status = SinkhornStatus::Stagnated;
    let mut iterations = 0;
    let mut err = f64::INFINITY;
    while iterations < max_iter {
        iterations += 1;
        let ktu = k.matvec_transpose(&u);
        for j in 0..m {
            v[j] = inst.b[j] / ktu[j];
        }
        let kv = k.matvec(&v);
        for i in 0..n {
            u[i] = inst.a[i] / kv[i];
        }
        if u.iter().chain(&v).any(|x| !x.is_finite()) {
            status = SinkhornStatus::NonFinite;
            break;
        }
        err = error_of(&plan_of(&u, &v));
        if !err.is_finite() {
            status = SinkhornStatus::NonFinite;
            break;
        }
        if err <= tol {
            status = SinkhornStatus::Converged;
            break;
        }
    }
    SinkhornResult {
        plan: plan_of(&u, &v),
        u,
        v,
        iterations,
        marginal_error: err,
        status,
    }
}

/// Multipliers for `Ã` recovered from the scalings, with the dual of the
/// dropped row fixed to zero.
pub fn sinkhorn_duals(res: &SinkhornResult, inst: &OtInstance) -> Vec<f64> {
    let eps = inst.eps;
    let shift = -eps * res.v[inst.m - 1].ln();
    let mut out: Vec<f64> = res.u.iter().map(|u| -eps * u.ln() - eps + shift).collect();
    out.extend(res.v[..inst.m - 1].iter().map(|v| -eps * v.ln() - shift));
    out
}

/// `Σ pᵢcᵢ + ε Σ pᵢ log pᵢ` with `0·log 0 = 0`.
pub fn transport_cost(p: &[f64], inst: &OtInstance) -> f64 {
    EntropicCost {
        c: inst.c.clone(),
        eps: inst.eps,
    }
    .value(p)
}
