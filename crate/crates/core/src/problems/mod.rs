//! Instance generators and reference solvers.

mod lasso;
mod nonlinear;
mod oracles;
mod ot;

pub use lasso::{make_constrained_lasso, LassoInstance};
pub use nonlinear::{nonlinear_lasso_instance, nonlinear_params, NONLINEAR_ALPHA};
pub use oracles::{admm_oracle, augmented_lagrangian_oracle, OracleSolution};
pub use ot::{
    make_ot_instance, ot_field, sinkhorn, sinkhorn_duals, transport_cost, EntropicCost, OtFlow,
    OtInstance, SinkhornResult, SinkhornStatus, LOG_CLAMP,
};
