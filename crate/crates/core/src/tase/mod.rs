//! TASE operators and the TASE-RK time steppers.

mod integrator;
mod operator;
mod tableau;

pub use integrator::{
    drive, integrate, step_count, tase_rk_step, BlowUp, ExplicitRkStepper, IntegrateOptions,
    IntegrationRun, JacobianMode, OneStep, RunStats, TaseRk, TaseStepper, OVERFLOW_GUARD,
};
pub use operator::{
    apply_tase, tase_weights, MatrixId, TaseFilter, TaseOperator, WorkStats, OMEGA_P2, OMEGA_P3,
    OMEGA_P4,
};
pub use tableau::ExplicitTableau;
