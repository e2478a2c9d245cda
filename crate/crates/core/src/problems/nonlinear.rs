use std::sync::Arc;

use crate::linalg::Matrix;
use crate::model::{CompositeProblem, ConstraintFn, SmoothTerm, SolverParams};
use crate::prox::L1Norm;

pub const NONLINEAR_ALPHA: f64 = 0.5;

const TARGET: [f64; 3] = [1.0, 2.0, -1.0];

/// `‖x − (1, 2, −1)‖²`
struct ShiftedSquares;

impl SmoothTerm for ShiftedSquares {
    fn value(&self, x: &[f64]) -> f64 {
        x.iter().zip(TARGET).map(|(xi, ti)| (xi - ti) * (xi - ti)).sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(TARGET).map(|(xi, ti)| 2.0 * (xi - ti)).collect()
    }

    fn hessian(&self, _x: &[f64]) -> Option<Matrix> {
        Some(Matrix::identity(3).scale(2.0))
    }
}

/// Three variables, `ℓ₁` weight 0.5, constraints
/// `x₁² + x₂ − 1 = 0` and `sin x₂ + x₃ − 0.5 = 0`.
pub fn nonlinear_lasso_instance() -> CompositeProblem {
    let h = ConstraintFn::new(
        2,
        |x: &[f64]| vec![x[0] * x[0] + x[1] - 1.0, x[1].sin() + x[2] - 0.5],
        |x: &[f64]| {
            Matrix::from_row_slice(2, 3, &[2.0 * x[0], 1.0, 0.0, 0.0, x[1].cos(), 1.0])
                .expect("static shape")
        },
    );
    CompositeProblem::new(
        3,
        Arc::new(ShiftedSquares),
        Arc::new(L1Norm {
            alpha: NONLINEAR_ALPHA,
        }),
        Arc::new(h),
    )
    .expect("static problem is well formed")
}

/// `γ = 0.5`, `k_i = 10`, `k_p = 15`, `T = 5`, `Δt = 10⁻³`.
pub fn nonlinear_params() -> SolverParams {
    SolverParams {
        gamma: 0.5,
        kp: 15.0,
        ki: 10.0,
        p_weight: 1.0,
        dt: 1e-3,
        t_end: 5.0,
        eq_tol: 1e-4,
    }
}
