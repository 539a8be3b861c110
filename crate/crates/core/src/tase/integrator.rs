use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::system::SplitProblem;

use super::operator::{MatrixId, TaseFilter, TaseOperator, WorkStats};
use super::tableau::ExplicitTableau;

/// States beyond this max-norm count as a blow-up.
pub const OVERFLOW_GUARD: f64 = 1e100;

/// Which matrix feeds the operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianMode {
    /// The problem's fixed matrix `A`, factored once per step size.
    Fixed,
    /// The exact Jacobian `J(t_n, u_n)`, refactored every step.
    Exact,
}

/// A one-step method that can be driven by [`drive`].
pub trait OneStep {
    fn step(&mut self, problem: &SplitProblem, t: f64, u: &Vector, k: f64) -> Result<Vector>;
    fn work(&self) -> WorkStats;
    fn label(&self) -> String;
}

/// A TASE-RK method: explicit tableau plus operator of the same order.
#[derive(Debug, Clone)]
pub struct TaseRk {
    pub tableau: ExplicitTableau,
    pub op: TaseOperator,
    pub jacobian: JacobianMode,
}

impl TaseRk {
    /// Shipped tableau and tabulated weights for order `p`.
    pub fn standard(p: usize) -> Result<Self> {
        Self::new(ExplicitTableau::for_order(p)?, TaseOperator::standard(p)?)
    }

    pub fn new(tableau: ExplicitTableau, op: TaseOperator) -> Result<Self> {
        if tableau.stages() != op.order() {
            return Err(Error::InvalidInput(format!(
                "tableau has {} stages but the operator has order {}",
                tableau.stages(),
                op.order()
            )));
        }
        Ok(Self {
            tableau,
            op,
            jacobian: JacobianMode::Fixed,
        })
    }

    pub fn with_jacobian(mut self, mode: JacobianMode) -> Self {
        self.jacobian = mode;
        self
    }

    pub fn order(&self) -> usize {
        self.op.order()
    }

    pub fn stepper(&self) -> TaseStepper {
        TaseStepper::new(self.clone())
    }
}

/// Stateful TASE-RK stepper owning the factorization cache.
#[derive(Debug, Clone)]
pub struct TaseStepper {
    method: TaseRk,
    filter: TaseFilter,
    rhs_evals: u64,
}

impl TaseStepper {
    pub fn new(method: TaseRk) -> Self {
        let filter = TaseFilter::new(method.op.clone());
        Self {
            method,
            filter,
            rhs_evals: 0,
        }
    }
}

impl OneStep for TaseStepper {
    fn step(&mut self, problem: &SplitProblem, t: f64, u: &Vector, k: f64) -> Result<Vector> {
        let n = problem.dim();
        if u.len() != n {
            return Err(Error::DimensionMismatch("state length".into()));
        }
        match self.method.jacobian {
            JacobianMode::Fixed => self.filter.prepare(problem.a(), problem.a_id(), k)?,
            JacobianMode::Exact => {
                let j: Matrix = problem.jacobian(t, u);
                self.filter.prepare(&j, MatrixId::fresh(), k)?
            }
        }
        let tab = &self.method.tableau;
        let s = tab.stages();
        let mut filtered: Vec<Vector> = Vec::with_capacity(s);
        let mut stage = u.clone();
        let mut fval = Vector::zeros(n);
        for i in 0..s {
            stage.copy_from(u);
            for (j, kj) in filtered.iter().enumerate() {
                let a = tab.alpha(i, j);
                if a != 0.0 {
                    stage.axpy(k * a, kj, 1.0);
                }
            }
            if stage.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteState { stage: i, t });
            }
            problem
                .field()
                .eval(t + tab.c()[i] * k, stage.as_slice(), fval.as_mut_slice());
            self.rhs_evals += 1;
            let mut kf = Vector::zeros(n);
            self.filter
                .apply(fval.as_slice(), kf.as_mut_slice())
                .map_err(|e| match e {
                    Error::SolveFailure(_) if fval.iter().any(|v| !v.is_finite()) => {
                        Error::NonFiniteState { stage: i, t }
                    }
                    other => other,
                })?;
            filtered.push(kf);
        }
        let mut next = u.clone();
        for (kj, b) in filtered.iter().zip(tab.b()) {
            next.axpy(k * b, kj, 1.0);
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { stage: s, t });
        }
        Ok(next)
    }

    fn work(&self) -> WorkStats {
        WorkStats {
            rhs_evals: self.rhs_evals,
            ..self.filter.stats()
        }
    }

    fn label(&self) -> String {
        let mode = match self.method.jacobian {
            JacobianMode::Fixed => "",
            JacobianMode::Exact => "-exact",
        };
        format!("trk{}{}", self.method.order(), mode)
    }
}

/// Plain explicit Runge-Kutta, used for reference solutions.
#[derive(Debug, Clone)]
pub struct ExplicitRkStepper {
    tableau: ExplicitTableau,
    rhs_evals: u64,
}

impl ExplicitRkStepper {
    pub fn new(tableau: ExplicitTableau) -> Self {
        Self {
            tableau,
            rhs_evals: 0,
        }
    }
}

impl OneStep for ExplicitRkStepper {
    fn step(&mut self, problem: &SplitProblem, t: f64, u: &Vector, k: f64) -> Result<Vector> {
        let n = problem.dim();
        let tab = &self.tableau;
        let mut ks: Vec<Vector> = Vec::with_capacity(tab.stages());
        let mut stage = u.clone();
        for i in 0..tab.stages() {
            stage.copy_from(u);
            for (j, kj) in ks.iter().enumerate() {
                let a = tab.alpha(i, j);
                if a != 0.0 {
                    stage.axpy(k * a, kj, 1.0);
                }
            }
            let mut f = Vector::zeros(n);
            problem
                .field()
                .eval(t + tab.c()[i] * k, stage.as_slice(), f.as_mut_slice());
            self.rhs_evals += 1;
            ks.push(f);
        }
        let mut next = u.clone();
        for (kj, b) in ks.iter().zip(tab.b()) {
            next.axpy(k * b, kj, 1.0);
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState {
                stage: tab.stages(),
                t,
            });
        }
        Ok(next)
    }

    fn work(&self) -> WorkStats {
        WorkStats {
            rhs_evals: self.rhs_evals,
            ..WorkStats::default()
        }
    }

    fn label(&self) -> String {
        format!("explicit-{}", self.tableau.name)
    }
}

/// Why a run stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowUp {
    pub step: usize,
    pub time: f64,
    pub max_norm: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RunStats {
    pub steps: usize,
    pub work: WorkStats,
    pub wall_time: Duration,
}

/// Output of a constant-step run on the grid `t_n = t0 + n k`.
#[derive(Debug, Clone)]
pub struct IntegrationRun {
    pub k: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    pub stats: RunStats,
    pub blow_up: Option<BlowUp>,
    /// Largest max-norm seen over all steps, stored or not.
    pub max_norm: f64,
}

impl IntegrationRun {
    pub fn final_state(&self) -> &Vector {
        self.states.last().expect("a run always stores u0")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("a run always stores t0")
    }

    pub fn blew_up(&self) -> bool {
        self.blow_up.is_some()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IntegrateOptions {
    /// Store every `n`-th state; 0 keeps only the endpoints.
    pub store_every: usize,
    pub overflow_guard: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            store_every: 1,
            overflow_guard: OVERFLOW_GUARD,
        }
    }
}

/// Number of steps `round((t_end - t0) / k)`.
pub fn step_count(t0: f64, t_end: f64, k: f64) -> Result<usize> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::InvalidInput(format!(
            "step size {k} must be positive"
        )));
    }
    if !(t_end >= t0) {
        return Err(Error::InvalidInput(format!(
            "end time {t_end} precedes {t0}"
        )));
    }
    let n = ((t_end - t0) / k).round();
    if n > 1e9 {
        return Err(Error::InvalidInput(format!("{n} steps requested")));
    }
    Ok(n as usize)
}

fn max_norm(u: &Vector) -> f64 {
    u.iter().fold(
        0.0_f64,
        |m, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) },
    )
}

/// Runs any one-step method with constant step `k` up to `t_end`.
pub fn drive<S: OneStep>(
    stepper: &mut S,
    problem: &SplitProblem,
    k: f64,
    t_end: f64,
    opts: IntegrateOptions,
) -> Result<IntegrationRun> {
    let t0 = problem.t0();
    let steps = step_count(t0, t_end, k)?;
    let start = Instant::now();
    let base = stepper.work();
    let mut u = problem.u0().clone();
    let mut run = IntegrationRun {
        k,
        times: vec![t0],
        states: vec![u.clone()],
        stats: RunStats::default(),
        blow_up: None,
        max_norm: max_norm(&u),
    };
    for n in 0..steps {
        let t = t0 + n as f64 * k;
        let next = match stepper.step(problem, t, &u, k) {
            Ok(v) => v,
            Err(Error::NonFiniteState { .. }) => {
                run.blow_up = Some(BlowUp {
                    step: n + 1,
                    time: t + k,
                    max_norm: f64::NAN,
                });
                run.max_norm = f64::INFINITY;
                break;
            }
            Err(e) => return Err(e),
        };
        u = next;
        run.stats.steps = n + 1;
        let t_next = t0 + (n + 1) as f64 * k;
        let norm = max_norm(&u);
        let exploded = !(norm <= opts.overflow_guard);
        run.max_norm = if norm.is_nan() {
            f64::INFINITY
        } else {
            run.max_norm.max(norm)
        };
        let last = n + 1 == steps;
        let keep = opts.store_every > 0 && (n + 1) % opts.store_every == 0;
        if keep || last || exploded {
            run.times.push(t_next);
            run.states.push(u.clone());
        }
        if exploded {
            run.blow_up = Some(BlowUp {
                step: n + 1,
                time: t_next,
                max_norm: norm,
            });
            break;
        }
    }
    let w = stepper.work();
    run.stats.work = WorkStats {
        factorizations: w.factorizations - base.factorizations,
        solves: w.solves - base.solves,
        rhs_evals: w.rhs_evals - base.rhs_evals,
    };
    run.stats.wall_time = start.elapsed();
    Ok(run)
}

/// One TASE-RK step from scratch.
pub fn tase_rk_step(
    problem: &SplitProblem,
    method: &TaseRk,
    t: f64,
    u: &Vector,
    k: f64,
) -> Result<Vector> {
    method.stepper().step(problem, t, u, k)
}

/// Integrates with a TASE-RK method, storing every state.
pub fn integrate(
    problem: &SplitProblem,
    method: &TaseRk,
    k: f64,
    t_end: f64,
) -> Result<IntegrationRun> {
    drive(
        &mut method.stepper(),
        problem,
        k,
        t_end,
        IntegrateOptions::default(),
    )
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use num_complex::Complex64;

    use super::*;
    use crate::system::{FnField, LinearField};

    fn scalar_linear(lambda: f64, a: f64) -> SplitProblem {
        let f = LinearField::new(Matrix::from_element(1, 1, lambda), Vector::zeros(1)).unwrap();
        SplitProblem::new(
            "lin",
            Arc::new(f),
            Matrix::from_element(1, 1, a),
            Vector::from_element(1, 1.0),
            0.0,
            1.0,
        )
        .unwrap()
    }

    /// Independent scalar evaluation of sum_q (T(z) z)^q / q!.
    fn rt_oracle(op: &TaseOperator, z: f64) -> f64 {
        let w = op.scalar(Complex64::new(z, 0.0)).unwrap().re * z;
        let mut term = 1.0;
        let mut acc = 1.0;
        for q in 1..=op.order() {
            term *= w / q as f64;
            acc += term;
        }
        acc
    }

    #[test]
    fn zero_field_keeps_state() {
        let f = FnField::new(2, |_, _, out| out.fill(0.0), |_, _| Matrix::zeros(2, 2));
        let p = SplitProblem::new(
            "zero",
            Arc::new(f),
            -Matrix::identity(2, 2),
            Vector::from_vec(vec![1.0, 2.0]),
            0.0,
            1.0,
        )
        .unwrap();
        let m = TaseRk::standard(3).unwrap();
        let u = tase_rk_step(&p, &m, 0.0, p.u0(), 0.3).unwrap();
        assert_eq!(u, *p.u0());
    }

    #[test]
    fn one_step_matches_stability_function() {
        for p in 2..=4 {
            let m = TaseRk::standard(p).unwrap();
            for &(lambda, k) in &[(-1.0, 0.1), (-50.0, 0.7), (-3.0, 2.0)] {
                let prob = scalar_linear(lambda, lambda);
                let u = tase_rk_step(&prob, &m, 0.0, prob.u0(), k).unwrap();
                let want = rt_oracle(&m.op, k * lambda);
                assert!(
                    (u[0] - want).abs() < 1e-13 * want.abs().max(1.0),
                    "p={p} {}",
                    u[0] - want
                );
            }
        }
    }

    #[test]
    fn split_scalar_step_matches_transformed_function() {
        // u' = (lambda + gamma) u with A = lambda: factor R_p(T(k l)(k l)(1 + mu))
        let (lambda, gamma, k) = (-4.0, 2.5, 0.3);
        let mu = gamma / lambda;
        for p in 2..=4 {
            let m = TaseRk::standard(p).unwrap();
            let prob = scalar_linear(lambda + gamma, lambda);
            let u = tase_rk_step(&prob, &m, 0.0, prob.u0(), k).unwrap();
            let z = m.op.hat_t(k * lambda).unwrap() * (1.0 + mu);
            let want: f64 = (0..=p)
                .map(|q| z.powi(q as i32) / (1..=q).product::<usize>() as f64)
                .sum();
            assert!((u[0] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_steps_keep_only_initial_state() {
        let prob = scalar_linear(-1.0, -1.0);
        let run = integrate(&prob, &TaseRk::standard(2).unwrap(), 1.0, 0.4).unwrap();
        assert_eq!(run.states.len(), 1);
        assert_eq!(run.times, vec![0.0]);
    }

    #[test]
    fn grid_is_homogeneous_and_factors_once() {
        let prob = scalar_linear(-1.0, -1.0);
        let run = integrate(&prob, &TaseRk::standard(3).unwrap(), 0.1, 1.0).unwrap();
        assert_eq!(run.times.len(), 11);
        for (n, t) in run.times.iter().enumerate() {
            assert!((t - 0.1 * n as f64).abs() < 1e-15);
        }
        assert_eq!(run.stats.work.factorizations, 3);
        assert_eq!(run.stats.work.solves, 10 * 3 * 3);
        assert_eq!(run.stats.work.rhs_evals, 30);
    }

    #[test]
    fn exact_mode_refactors_every_step() {
        let prob = scalar_linear(-1.0, -7.0);
        let m = TaseRk::standard(2)
            .unwrap()
            .with_jacobian(JacobianMode::Exact);
        let run = integrate(&prob, &m, 0.25, 1.0).unwrap();
        assert_eq!(run.stats.work.factorizations, 8);
        let want = rt_oracle(&m.op, -0.25).powi(4);
        assert!((run.final_state()[0] - want).abs() < 1e-14);
    }

    #[test]
    fn blow_up_is_flagged() {
        // strongly unstable explicit mode: A = 0 makes the method explicit
        let prob = scalar_linear(-1000.0, -1e-9).with_end_time(100.0);
        let run = integrate(&prob, &TaseRk::standard(2).unwrap(), 0.5, 100.0).unwrap();
        let b = run.blow_up.clone().expect("must blow up");
        assert!(b.step < 200);
        assert!(run.final_state().amax() > OVERFLOW_GUARD);
    }

    #[test]
    fn stride_keeps_endpoints() {
        let prob = scalar_linear(-1.0, -1.0);
        let mut s = TaseRk::standard(2).unwrap().stepper();
        let opts = IntegrateOptions {
            store_every: 3,
            ..Default::default()
        };
        let run = drive(&mut s, &prob, 0.1, 1.0, opts).unwrap();
        assert_eq!(run.times.len(), 5);
        assert!((run.final_time() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn explicit_rk4_is_accurate() {
        let prob = scalar_linear(-1.0, -1.0);
        let mut s = ExplicitRkStepper::new(ExplicitTableau::rk4());
        let run = drive(&mut s, &prob, 0.01, 1.0, IntegrateOptions::default()).unwrap();
        assert!((run.final_state()[0] - (-1.0_f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn mismatched_order_is_rejected() {
        assert!(TaseRk::new(ExplicitTableau::heun(), TaseOperator::standard(3).unwrap()).is_err());
    }
}
