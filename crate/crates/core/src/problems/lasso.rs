use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::model::{AffineConstraint, CompositeProblem, Quadratic, SolverParams};
use crate::prox::L1Norm;
use crate::rng::SeededRng;

/// `min ½xᵀWx + α‖x‖₁ s.t. Ax = b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LassoInstance {
    pub n: usize,
    pub m: usize,
    pub w: Matrix,
    pub a: Matrix,
    pub b: Vec<f64>,
    pub alpha: f64,
    pub rho: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub seed: u64,
}

const MAX_RANK_RETRIES: usize = 16;

/// `W = 10I + W̃W̃ᵀ` with `W̃`, `A`, `b` standard normal.
pub fn make_constrained_lasso(n: usize, m: usize, alpha: f64, seed: u64) -> Result<LassoInstance> {
    if m == 0 || m > n {
        return Err(Error::Precondition(format!("need n >= m >= 1, got n = {n}, m = {m}")));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            reason: "must be nonnegative and finite",
        });
    }
    let mut rng = SeededRng::new(seed);
    let wt = Matrix::from_fn(n, n, |_, _| rng.normal());
    let w = (&Matrix::identity(n).scale(10.0) + &wt.matmul(&wt.transpose())).symmetric_part();
    let eig = symmetric_eigen(&w)?;

    let mut last = None;
    for _ in 0..MAX_RANK_RETRIES {
        let a = Matrix::from_fn(m, n, |_, _| rng.normal());
        match AffineConstraint::new(a.clone(), vec![0.0; m]) {
            Ok(_) => {
                let b = rng.normal_vec(m);
                return Ok(LassoInstance {
                    n,
                    m,
                    w,
                    a,
                    b,
                    alpha,
                    rho: eig.min(),
                    l: eig.max(),
                    seed,
                });
            }
            Err(e @ Error::RankDeficient { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap_or(Error::Precondition("no full-rank constraint matrix drawn".into())))
}

impl LassoInstance {
    pub fn constraint(&self) -> Result<AffineConstraint> {
        AffineConstraint::new(self.a.clone(), self.b.clone())
    }

    pub fn problem(&self) -> Result<(CompositeProblem, AffineConstraint)> {
        let con = self.constraint()?;
        let prob = CompositeProblem::new(
            self.n,
            Arc::new(Quadratic::new(self.w.clone(), vec![0.0; self.n])?),
            Arc::new(L1Norm { alpha: self.alpha }),
            Arc::new(con.clone()),
        )?;
        Ok((prob, con))
    }

    /// `min(1/L, 4ρ/L² − 10⁻⁴)`
    pub fn default_gamma(&self) -> f64 {
        (1.0 / self.l).min(4.0 * self.rho / (self.l * self.l) - 1e-4)
    }

    /// Euler settings of the reference run: `k_p = k_i = 20`, `p = k_p/γ`,
    /// `Δt = 0.01`, `T = 20`.
    pub fn default_params(&self) -> SolverParams {
        let gamma = self.default_gamma();
        SolverParams {
            gamma,
            kp: 20.0,
            ki: 20.0,
            p_weight: 20.0 / gamma,
            dt: 0.01,
            t_end: 20.0,
            eq_tol: 1e-6,
        }
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        0.5 * crate::linalg::dot(x, &self.w.matvec(x)) + self.alpha * x.iter().map(|v| v.abs()).sum::<f64>()
    }
}
