//! Problem definitions, solver parameters, states and the block metric.
//!
//! A [`CompositeProblem`] is a bundle of point evaluators for
//!
//! ```text
//!     minimize   f(x) + g(x)
//!     subject to h(x) = 0
//! ```
//!
//! with `f` smooth, `g` handled only through its proximal operator and `h`
//! a smooth map into `R^m`. Evaluators are shared behind `Arc` and must be
//! callable concurrently.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_len, check_positive, Error, Result};
use crate::linalg::{self, norm2, Matrix};

/// The smooth part `f` of the objective.
pub trait SmoothTerm: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// Exact Hessian, when the term can supply one.
    fn hessian(&self, _x: &[f64]) -> Option<Matrix> {
        None
    }
}

/// The nonsmooth part `g`, accessed through `prox_{γg}`.
///
/// Implementations must be single-valued and firmly nonexpansive, i.e. the
/// proximal map of a closed, convex, proper function.
pub trait ProxOperator: Send + Sync {
    /// `g(x)`; `f64::INFINITY` outside the domain.
    fn value(&self, x: &[f64]) -> f64;

    fn prox(&self, gamma: f64, v: &[f64]) -> Vec<f64>;

    /// Diagonal of a generalized derivative of `prox_{γg}` at `v`.
    ///
    /// Entries lie in `[0, 1]`; at kinks the convention is `0`.
    fn derivative_diag(&self, gamma: f64, v: &[f64]) -> Vec<f64>;
}

/// The equality constraint map `h: R^n -> R^m` with its Jacobian `Dh`.
pub trait ConstraintMap: Send + Sync {
    fn num_constraints(&self) -> usize;

    fn value(&self, x: &[f64]) -> Vec<f64>;

    /// `m x n` Jacobian.
    fn jacobian(&self, x: &[f64]) -> Matrix;
}

/// Smooth term built from a pair of closures.
pub struct SmoothFn<V, G> {
    value: V,
    gradient: G,
}

impl<V, G> SmoothFn<V, G>
where
    V: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    pub fn new(value: V, gradient: G) -> Self {
        Self { value, gradient }
    }
}

impl<V, G> SmoothTerm for SmoothFn<V, G>
where
    V: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.gradient)(x)
    }
}

/// Constraint map built from a pair of closures.
pub struct ConstraintFn<H, J> {
    m: usize,
    value: H,
    jacobian: J,
}

impl<H, J> ConstraintFn<H, J>
where
    H: Fn(&[f64]) -> Vec<f64> + Send + Sync,
    J: Fn(&[f64]) -> Matrix + Send + Sync,
{
    pub fn new(m: usize, value: H, jacobian: J) -> Self {
        Self { m, value, jacobian }
    }
}

impl<H, J> ConstraintMap for ConstraintFn<H, J>
where
    H: Fn(&[f64]) -> Vec<f64> + Send + Sync,
    J: Fn(&[f64]) -> Matrix + Send + Sync,
{
    fn num_constraints(&self) -> usize {
        self.m
    }

    fn value(&self, x: &[f64]) -> Vec<f64> {
        (self.value)(x)
    }

    fn jacobian(&self, x: &[f64]) -> Matrix {
        (self.jacobian)(x)
    }
}

/// `f(x) = ½ xᵀWx + cᵀx` with symmetric `W`.
#[derive(Clone, Debug)]
pub struct Quadratic {
    w: Matrix,
    c: Vec<f64>,
}

impl Quadratic {
    pub fn new(w: Matrix, c: Vec<f64>) -> Result<Self> {
        check_len("Quadratic: W columns", w.rows(), w.cols())?;
        check_len("Quadratic: linear term", w.rows(), c.len())?;
        if !w.is_symmetric(1e-12 * w.max_abs().max(1.0)) {
            return Err(Error::Precondition("quadratic weight matrix must be symmetric".into()));
        }
        Ok(Self { w, c })
    }

    pub fn weight(&self) -> &Matrix {
        &self.w
    }
}

impl SmoothTerm for Quadratic {
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * linalg::dot(x, &self.w.matvec(x)) + linalg::dot(&self.c, x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.w.matvec(x);
        linalg::axpy(1.0, &self.c, &mut g);
        g
    }

    fn hessian(&self, _x: &[f64]) -> Option<Matrix> {
        Some(self.w.clone())
    }
}

/// Affine constraint `h(x) = Ax - b` with a full-row-rank `A`.
#[derive(Clone, Debug, Serialize)]
pub struct AffineConstraint {
    a: Matrix,
    b: Vec<f64>,
    a_min: f64,
    a_max: f64,
}

impl AffineConstraint {
    /// Rank tolerance on the smallest eigenvalue of `AAᵀ`, relative to the largest.
    pub const RANK_TOL: f64 = 1e-12;

    pub fn new(a: Matrix, b: Vec<f64>) -> Result<Self> {
        check_len("AffineConstraint: b", a.rows(), b.len())?;
        if a.rows() == 0 || a.rows() > a.cols() {
            return Err(Error::Precondition(format!(
                "affine constraint needs 1 <= m <= n, got m = {}, n = {}",
                a.rows(),
                a.cols()
            )));
        }
        let gram = a.matmul(&a.transpose());
        let eig = linalg::symmetric_eigen(&gram)?;
        let (a_min, a_max) = (eig.min(), eig.max());
        if !(a_min > Self::RANK_TOL * a_max.max(f64::MIN_POSITIVE)) {
            return Err(Error::RankDeficient { min_eigenvalue: a_min });
        }
        Ok(Self { a, b, a_min, a_max })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    /// Smallest eigenvalue of `AAᵀ`.
    pub fn a_min(&self) -> f64 {
        self.a_min
    }

    /// Largest eigenvalue of `AAᵀ`.
    pub fn a_max(&self) -> f64 {
        self.a_max
    }

    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        linalg::sub(&self.a.matvec(x), &self.b)
    }
}

impl ConstraintMap for AffineConstraint {
    fn num_constraints(&self) -> usize {
        self.a.rows()
    }

    fn value(&self, x: &[f64]) -> Vec<f64> {
        self.residual(x)
    }

    fn jacobian(&self, _x: &[f64]) -> Matrix {
        self.a.clone()
    }
}

/// Evaluator bundle for `min f(x) + g(x) s.t. h(x) = 0`.
#[derive(Clone)]
pub struct CompositeProblem {
    n: usize,
    m: usize,
    pub smooth: Arc<dyn SmoothTerm>,
    pub prox: Arc<dyn ProxOperator>,
    pub constraint: Arc<dyn ConstraintMap>,
}

impl fmt::Debug for CompositeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompositeProblem")
            .field("n", &self.n)
            .field("m", &self.m)
            .finish_non_exhaustive()
    }
}

impl CompositeProblem {
    pub fn new(
        n: usize,
        smooth: Arc<dyn SmoothTerm>,
        prox: Arc<dyn ProxOperator>,
        constraint: Arc<dyn ConstraintMap>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("primal dimension must be positive".into()));
        }
        let m = constraint.num_constraints();
        if m == 0 {
            return Err(Error::Precondition("at least one equality constraint is required".into()));
        }
        Ok(Self {
            n,
            m,
            smooth,
            prox,
            constraint,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `f(x) + g(x)`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.smooth.value(x) + self.prox.value(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let g = self.smooth.gradient(x);
        check_evaluator("gradient", self.n, &g)?;
        Ok(g)
    }

    pub fn prox(&self, gamma: f64, v: &[f64]) -> Result<Vec<f64>> {
        let p = self.prox.prox(gamma, v);
        check_evaluator("prox", self.n, &p)?;
        Ok(p)
    }

    pub fn constraint_value(&self, x: &[f64]) -> Result<Vec<f64>> {
        let h = self.constraint.value(x);
        check_evaluator("constraint", self.m, &h)?;
        Ok(h)
    }

    pub fn constraint_jacobian(&self, x: &[f64]) -> Result<Matrix> {
        let j = self.constraint.jacobian(x);
        if j.rows() != self.m || j.cols() != self.n {
            return Err(Error::Evaluator {
                evaluator: "constraint jacobian",
                detail: format!(
                    "expected {}x{} matrix, got {}x{}",
                    self.m,
                    self.n,
                    j.rows(),
                    j.cols()
                ),
            });
        }
        check_evaluator("constraint jacobian", j.rows() * j.cols(), j.as_slice())?;
        Ok(j)
    }

    pub fn check_state(&self, z: &State) -> Result<()> {
        check_len("state primal block", self.n, z.x.len())?;
        check_len("state dual block", self.m, z.lambda.len())
    }
}

fn check_evaluator(evaluator: &'static str, expected: usize, values: &[f64]) -> Result<()> {
    if values.len() != expected {
        return Err(Error::Evaluator {
            evaluator,
            detail: format!("returned {} components, expected {expected}", values.len()),
        });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Evaluator {
            evaluator,
            detail: format!("non-finite output at component {i}"),
        });
    }
    Ok(())
}

/// Gains, prox scale, metric weight and integration settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub gamma: f64,
    pub kp: f64,
    pub ki: f64,
    pub p_weight: f64,
    pub dt: f64,
    pub t_end: f64,
    pub eq_tol: f64,
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        check_positive("gamma", self.gamma)?;
        check_positive("kp", self.kp)?;
        check_positive("ki", self.ki)?;
        check_positive("p_weight", self.p_weight)?;
        check_positive("dt", self.dt)?;
        check_positive("t_end", self.t_end)?;
        check_positive("eq_tol", self.eq_tol)
    }
}

/// Stacked primal–dual point `z = (x, λ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl State {
    pub fn new(x: Vec<f64>, lambda: Vec<f64>) -> Self {
        Self { x, lambda }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self::new(vec![0.0; n], vec![0.0; m])
    }

    pub fn from_stacked(n: usize, z: &[f64]) -> Result<Self> {
        if z.len() < n {
            return Err(Error::DimensionMismatch {
                context: "State::from_stacked",
                expected: n,
                found: z.len(),
            });
        }
        Ok(Self::new(z[..n].to_vec(), z[n..].to_vec()))
    }

    pub fn stacked(&self) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.dim());
        z.extend_from_slice(&self.x);
        z.extend_from_slice(&self.lambda);
        z
    }

    pub fn dim(&self) -> usize {
        self.x.len() + self.lambda.len()
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.lambda).all(|v| v.is_finite())
    }

    pub(crate) fn check_finite(&self, context: &'static str) -> Result<()> {
        check_finite(context, &self.x)?;
        check_finite(context, &self.lambda).map_err(|e| match e {
            Error::NonFinite { context, index } => Error::NonFinite {
                context,
                index: index + self.x.len(),
            },
            other => other,
        })
    }
}

/// How a simulation ended.
#[derive(Clone, Debug, PartialEq)]
pub enum RunStatus {
    Completed,
    /// The run stopped at `time`; the trajectory holds every sample before it.
    Aborted { time: f64, error: Error },
}

/// Recorded time series of a simulation.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// `‖h(x)‖₂` per sample.
    pub residuals: Vec<f64>,
    /// `‖ż‖_P` per sample.
    pub field_norms: Vec<f64>,
    pub status: RunStatus,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> Option<&State> {
        self.states.last()
    }

    pub fn completed(&self) -> bool {
        self.status == RunStatus::Completed
    }

    /// `‖z(t) − z*‖_P` for every recorded sample.
    pub fn distances_to(&self, target: &State, metric: &BlockMetric) -> Result<Vec<f64>> {
        self.states.iter().map(|z| metric.distance(z, target)).collect()
    }
}

/// `P = diag(p·I_n, I_m)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockMetric {
    p_weight: f64,
    n: usize,
    m: usize,
}

impl BlockMetric {
    pub fn new(p_weight: f64, n: usize, m: usize) -> Result<Self> {
        check_positive("p_weight", p_weight)?;
        Ok(Self { p_weight, n, m })
    }

    pub fn p_weight(&self) -> f64 {
        self.p_weight
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n, self.m)
    }

    /// `‖(dx, dλ)‖_P` for blocks given separately.
    pub fn norm_parts(&self, dx: &[f64], dlambda: &[f64]) -> f64 {
        (self.p_weight * linalg::dot(dx, dx) + linalg::dot(dlambda, dlambda)).sqrt()
    }

    pub fn norm(&self, z: &State) -> Result<f64> {
        self.check(z)?;
        Ok(self.norm_parts(&z.x, &z.lambda))
    }

    pub fn distance(&self, z1: &State, z2: &State) -> Result<f64> {
        self.check(z1)?;
        self.check(z2)?;
        let dx = linalg::sub(&z1.x, &z2.x);
        let dl = linalg::sub(&z1.lambda, &z2.lambda);
        Ok(self.norm_parts(&dx, &dl))
    }

    pub fn matrix(&self) -> Matrix {
        let diag: Vec<f64> = std::iter::repeat_n(self.p_weight, self.n)
            .chain(std::iter::repeat_n(1.0, self.m))
            .collect();
        Matrix::from_diagonal(&diag)
    }

    fn check(&self, z: &State) -> Result<()> {
        check_len("metric primal block", self.n, z.x.len())?;
        check_len("metric dual block", self.m, z.lambda.len())
    }
}

/// `sqrt(p‖x1−x2‖² + ‖λ1−λ2‖²)`.
pub fn metric_distance(z1: &State, z2: &State, metric: &BlockMetric) -> Result<f64> {
    metric.distance(z1, z2)
}

/// Euclidean norm of `h(x)`.
pub fn constraint_residual(prob: &CompositeProblem, x: &[f64]) -> Result<f64> {
    Ok(norm2(&prob.constraint_value(x)?))
}
