//! PI proximal-gradient vector fields.
//!
//! With `y = prox_{γg}(x − γ(∇f(x) + Dh(x)ᵀλ))` the closed loop is
//!
//! ```text
//!     ẋ = −x + y
//!     λ̇ = k_p·Dh(x)·ẋ + k_i·h(x)
//! ```
//!
//! i.e. the forward–backward flow on `x` driven by a PI controller acting
//! on the constraint output `h(x)`.

use std::sync::Arc;

use crate::error::{check_len, check_positive, Result};
use crate::linalg::{self, Matrix};
use crate::model::{
    AffineConstraint, CompositeProblem, ConstraintMap, SmoothTerm, SolverParams, State,
};
use crate::prox::WithNonNegativeTail;

/// One evaluation of the vector field.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldEvaluation {
    /// `(ẋ, λ̇)` stacked.
    pub dz: Vec<f64>,
    pub dx: Vec<f64>,
    pub dlambda: Vec<f64>,
    /// `prox_{γg}` of the forward step, i.e. `x + ẋ`.
    pub prox_point: Vec<f64>,
}

impl FieldEvaluation {
    pub fn new(dx: Vec<f64>, dlambda: Vec<f64>, prox_point: Vec<f64>) -> Self {
        let mut dz = Vec::with_capacity(dx.len() + dlambda.len());
        dz.extend_from_slice(&dx);
        dz.extend_from_slice(&dlambda);
        Self {
            dz,
            dx,
            dlambda,
            prox_point,
        }
    }

    pub fn as_state(&self) -> State {
        State::new(self.dx.clone(), self.dlambda.clone())
    }
}

/// Forward step `x − γ(∇f(x) + Dh(x)ᵀλ)` of the primal update.
fn forward_point(x: &[f64], grad: &[f64], jt_lambda: &[f64], gamma: f64) -> Vec<f64> {
    x.iter()
        .zip(grad)
        .zip(jt_lambda)
        .map(|((xi, gi), ai)| xi - gamma * (gi + ai))
        .collect()
}

/// Field for a general (possibly nonlinear) equality constraint.
pub fn field_general(
    z: &State,
    prob: &CompositeProblem,
    params: &SolverParams,
) -> Result<FieldEvaluation> {
    prob.check_state(z)?;
    check_positive("gamma", params.gamma)?;
    let x = &z.x;
    let grad = prob.gradient(x)?;
    let jac = prob.constraint_jacobian(x)?;
    let h = prob.constraint_value(x)?;
    let arg = forward_point(x, &grad, &jac.matvec_transpose(&z.lambda), params.gamma);
    let prox_point = prob.prox(params.gamma, &arg)?;
    let dx = linalg::sub(&prox_point, x);
    // λ̇ reuses ẋ rather than differentiating the output again.
    let mut dlambda = jac.matvec(&dx);
    for (dl, hi) in dlambda.iter_mut().zip(&h) {
        *dl = params.kp * *dl + params.ki * hi;
    }
    Ok(FieldEvaluation::new(dx, dlambda, prox_point))
}

/// Field for `h(x) = Ax − b`:
/// `λ̇ = (k_i − k_p)Ax + k_p·A·y − k_i·b`.
pub fn field_affine(
    z: &State,
    prob: &CompositeProblem,
    con: &AffineConstraint,
    params: &SolverParams,
) -> Result<FieldEvaluation> {
    prob.check_state(z)?;
    let a = con.matrix();
    check_len("affine constraint rows", prob.m(), a.rows())?;
    check_len("affine constraint columns", prob.n(), a.cols())?;
    check_positive("gamma", params.gamma)?;
    let x = &z.x;
    let grad = prob.gradient(x)?;
    let arg = forward_point(x, &grad, &a.matvec_transpose(&z.lambda), params.gamma);
    let prox_point = prob.prox(params.gamma, &arg)?;
    let dx = linalg::sub(&prox_point, x);
    let ax = a.matvec(x);
    let ay = a.matvec(&prox_point);
    let dlambda = ax
        .iter()
        .zip(&ay)
        .zip(con.rhs())
        .map(|((axi, ayi), bi)| (params.ki - params.kp) * axi + params.kp * ayi - params.ki * bi)
        .collect();
    Ok(FieldEvaluation::new(dx, dlambda, prox_point))
}

/// Fixed-point and feasibility residuals of a candidate stationary point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StationarityResidual {
    /// `‖x − prox_{γg}(x − γ(∇f(x) + Dh(x)ᵀλ))‖₂`
    pub fixed_point: f64,
    /// `‖h(x)‖₂`
    pub feasibility: f64,
}

impl StationarityResidual {
    pub fn max(&self) -> f64 {
        self.fixed_point.max(self.feasibility)
    }
}

pub fn stationarity_residual(
    z: &State,
    prob: &CompositeProblem,
    gamma: f64,
) -> Result<StationarityResidual> {
    prob.check_state(z)?;
    check_positive("gamma", gamma)?;
    let x = &z.x;
    let grad = prob.gradient(x)?;
    let jac = prob.constraint_jacobian(x)?;
    let arg = forward_point(x, &grad, &jac.matvec_transpose(&z.lambda), gamma);
    let y = prob.prox(gamma, &arg)?;
    Ok(StationarityResidual {
        fixed_point: linalg::norm2(&linalg::sub(x, &y)),
        feasibility: linalg::norm2(&prob.constraint_value(x)?),
    })
}

/// State of the slack-augmented dynamics for `q(x) ≤ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SlackState {
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub lambda_h: Vec<f64>,
    pub lambda_q: Vec<f64>,
}

impl SlackState {
    /// Packs into `((x, s), (λ_h, λ_q))`.
    pub fn to_state(&self) -> State {
        let mut x = self.x.clone();
        x.extend_from_slice(&self.s);
        let mut lambda = self.lambda_h.clone();
        lambda.extend_from_slice(&self.lambda_q);
        State::new(x, lambda)
    }

    pub fn from_state(z: &State, n: usize, m: usize) -> Self {
        Self {
            x: z.x[..n].to_vec(),
            s: z.x[n..].to_vec(),
            lambda_h: z.lambda[..m].to_vec(),
            lambda_q: z.lambda[m..].to_vec(),
        }
    }
}

struct PaddedSmooth {
    inner: Arc<dyn SmoothTerm>,
    n: usize,
    r: usize,
}

impl SmoothTerm for PaddedSmooth {
    fn value(&self, xs: &[f64]) -> f64 {
        self.inner.value(&xs[..self.n])
    }

    fn gradient(&self, xs: &[f64]) -> Vec<f64> {
        let mut g = self.inner.gradient(&xs[..self.n]);
        g.resize(self.n + self.r, 0.0);
        g
    }

    fn hessian(&self, xs: &[f64]) -> Option<Matrix> {
        let b = self.inner.hessian(&xs[..self.n])?;
        let mut out = Matrix::zeros(self.n + self.r, self.n + self.r);
        out.set_block(0, 0, &b);
        Some(out)
    }
}

/// `h̃(x, s) = (h(x), q(x) + s)`.
struct SlackConstraint {
    h: Arc<dyn ConstraintMap>,
    q: Arc<dyn ConstraintMap>,
    n: usize,
}

impl ConstraintMap for SlackConstraint {
    fn num_constraints(&self) -> usize {
        self.h.num_constraints() + self.q.num_constraints()
    }

    fn value(&self, xs: &[f64]) -> Vec<f64> {
        let (x, s) = xs.split_at(self.n);
        let mut out = self.h.value(x);
        out.extend(self.q.value(x).iter().zip(s).map(|(qi, si)| qi + si));
        out
    }

    fn jacobian(&self, xs: &[f64]) -> Matrix {
        let x = &xs[..self.n];
        let (m, r) = (self.h.num_constraints(), self.q.num_constraints());
        let mut out = Matrix::zeros(m + r, self.n + r);
        out.set_block(0, 0, &self.h.jacobian(x));
        out.set_block(m, 0, &self.q.jacobian(x));
        out.set_block(m, self.n, &Matrix::identity(r));
        out
    }
}

/// Rewrites `min f + g s.t. h = 0, q ≤ 0` over `(x, s)` with
/// `g̃ = g + ι_{s ≥ 0}` and the constraint `h̃(x, s) = 0`.
pub fn slack_problem(prob: &CompositeProblem, ineq: Arc<dyn ConstraintMap>) -> Result<CompositeProblem> {
    let n = prob.n();
    let r = ineq.num_constraints();
    CompositeProblem::new(
        n + r,
        Arc::new(PaddedSmooth {
            inner: prob.smooth.clone(),
            n,
            r,
        }),
        Arc::new(WithNonNegativeTail {
            head: prob.prox.clone(),
            split: n,
        }),
        Arc::new(SlackConstraint {
            h: prob.constraint.clone(),
            q: ineq,
            n,
        }),
    )
}

/// Field of the slack-augmented dynamics; the result is laid out as
/// `(ẋ, ṡ, λ̇_h, λ̇_q)`.
pub fn field_slack(
    z: &SlackState,
    prob: &CompositeProblem,
    ineq: Arc<dyn ConstraintMap>,
    params: &SolverParams,
) -> Result<FieldEvaluation> {
    let r = ineq.num_constraints();
    check_len("slack variables", r, z.s.len())?;
    check_len("inequality multipliers", r, z.lambda_q.len())?;
    check_len("equality multipliers", prob.m(), z.lambda_h.len())?;
    check_len("primal block", prob.n(), z.x.len())?;
    let augmented = slack_problem(prob, ineq)?;
    field_general(&z.to_state(), &augmented, params)
}
