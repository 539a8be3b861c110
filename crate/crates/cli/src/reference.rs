//! Reference solutions for error tables.

use tase_core::linalg::Vector;
use tase_core::problems::linear_exact;
use tase_core::system::SplitProblem;
use tase_core::tase::{drive, ExplicitRkStepper, ExplicitTableau, IntegrateOptions};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceKind {
    /// Closed form, or the matrix exponential of a constant linear field.
    Exact,
    /// Classical RK4 with this step.
    Rk4 { k: f64 },
}

/// Reference state at `t_end`: exact for linear constant-coefficient fields,
/// RK4 at `k_min / 100` (shrunk to divide the interval) otherwise.
pub fn reference_state(
    problem: &SplitProblem,
    t_end: f64,
    k_min: f64,
) -> Result<(Vector, ReferenceKind), CliError> {
    if let Some(u) = problem.exact(t_end) {
        return Ok((u, ReferenceKind::Exact));
    }
    if let Some((j, g)) = problem.field().linear_part() {
        let exact = linear_exact(j, g, problem.u0(), problem.t0())?;
        return Ok((exact(t_end), ReferenceKind::Exact));
    }
    rk4_reference(problem, t_end, k_min / 100.0)
}

/// RK4 with the largest step not exceeding `k_target` that divides the interval.
pub fn rk4_reference(
    problem: &SplitProblem,
    t_end: f64,
    k_target: f64,
) -> Result<(Vector, ReferenceKind), CliError> {
    if !(k_target > 0.0) {
        return Err(CliError::Config(format!(
            "reference step {k_target} must be positive"
        )));
    }
    let span = t_end - problem.t0();
    let n = (span / k_target).ceil().max(1.0);
    let k = span / n;
    let mut stepper = ExplicitRkStepper::new(ExplicitTableau::rk4());
    let run = drive(
        &mut stepper,
        problem,
        k,
        t_end,
        IntegrateOptions {
            store_every: 0,
            ..Default::default()
        },
    )?;
    if let Some(b) = &run.blow_up {
        return Err(CliError::BlowUp(format!(
            "RK4 reference diverged at t = {}",
            b.time
        )));
    }
    Ok((run.final_state().clone(), ReferenceKind::Rk4 { k }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tase_core::problems;

    #[test]
    fn linear_problems_use_the_exact_solution() {
        let p = problems::example52();
        let (u, kind) = reference_state(&p, 1.0, 0.1).unwrap();
        assert_eq!(kind, ReferenceKind::Exact);
        assert!((u - p.exact(1.0).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn rk4_reference_is_self_consistent() {
        let p = problems::by_name("burgers", &[("M".into(), 32.0)]).unwrap();
        let (u1, kind) = reference_state(&p, 1.0, 0.05).unwrap();
        assert!(matches!(kind, ReferenceKind::Rk4 { k } if (k - 5e-4).abs() < 1e-15));
        let (u2, _) = rk4_reference(&p, 1.0, 2.5e-4).unwrap();
        assert!((&u1 - &u2).norm() <= 1e-10 * u2.norm());
    }
}
