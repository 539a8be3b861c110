//! Rosenbrock (ROW) baseline with pluggable coefficient sets.
//!
//! Stage equations, with `W = I - gamma_ii k J`:
//! `W k_i = k f(t + a_i k, u + sum_j alpha_ij k_j) + k J sum_j gamma_ij k_j + gamma_i k^2 f_t`,
//! and `u_next = u + sum_i b_i k_i`. The time derivative `f_t` is taken by a
//! central difference, so non-autonomous problems keep the classical order.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Factorization, Matrix, Vector};
use crate::system::SplitProblem;
use crate::tase::{OneStep, WorkStats};

/// Coefficients `{s, alpha, gamma, b, name}`; `alpha` strictly lower,
/// `gamma` lower triangular with a positive diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowTableau {
    pub s: usize,
    pub alpha: Vec<Vec<f64>>,
    pub gamma: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub name: String,
}

impl RowTableau {
    pub fn validate(&self) -> Result<()> {
        let s = self.s;
        let bad = |msg: String| {
            Err(Error::InvalidInput(format!(
                "tableau '{}': {msg}",
                self.name
            )))
        };
        if s == 0 {
            return bad("needs at least one stage".into());
        }
        if self.alpha.len() != s || self.gamma.len() != s || self.b.len() != s {
            return bad(format!("alpha, gamma and b must have {s} rows"));
        }
        for i in 0..s {
            if self.alpha[i].len() != s || self.gamma[i].len() != s {
                return bad(format!("row {i} must have {s} entries"));
            }
            for j in 0..s {
                let (a, g) = (self.alpha[i][j], self.gamma[i][j]);
                if !a.is_finite() || !g.is_finite() {
                    return bad("non-finite coefficient".into());
                }
                if j >= i && a != 0.0 {
                    return bad(format!("alpha[{i}][{j}] must vanish"));
                }
                if j > i && g != 0.0 {
                    return bad(format!("gamma[{i}][{j}] must vanish"));
                }
            }
            if !(self.gamma[i][i] > 0.0) {
                return bad(format!("gamma[{i}][{i}] must be positive"));
            }
        }
        if self.b.iter().any(|v| !v.is_finite()) {
            return bad("non-finite weight".into());
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: RowTableau = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        t.validate()?;
        Ok(t)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tableau serialization cannot fail")
    }

    /// Two-stage, order-two, L-stable scheme with `gamma = 1 + 1/sqrt(2)`.
    pub fn ros2() -> Self {
        let g = 1.0 + std::f64::consts::FRAC_1_SQRT_2;
        Self {
            s: 2,
            alpha: vec![vec![0.0, 0.0], vec![1.0, 0.0]],
            gamma: vec![vec![g, 0.0], vec![-2.0 * g, g]],
            b: vec![0.5, 0.5],
            name: "ros2".into(),
        }
    }

    /// Linearly implicit Euler: one stage, `gamma = 1`.
    pub fn linear_implicit_euler() -> Self {
        Self {
            s: 1,
            alpha: vec![vec![0.0]],
            gamma: vec![vec![1.0]],
            b: vec![1.0],
            name: "linear-implicit-euler".into(),
        }
    }

    fn node(&self, i: usize) -> f64 {
        self.alpha[i].iter().sum()
    }

    fn gamma_sum(&self, i: usize) -> f64 {
        self.gamma[i][..=i].iter().sum()
    }

    /// `R(z) = 1 + z b^T (I - z (alpha + gamma))^{-1} 1`.
    pub fn stability_function(&self, z: Complex64) -> Complex64 {
        let s = self.s;
        let m = CMatrix::from_fn(s, s, |i, j| {
            let beta = self.alpha[i][j] + self.gamma[i][j];
            let delta = if i == j { 1.0 } else { 0.0 };
            Complex64::new(delta, 0.0) - z * beta
        });
        // lower triangular: forward substitution
        let mut x = vec![Complex64::new(0.0, 0.0); s];
        for i in 0..s {
            let mut acc = Complex64::new(1.0, 0.0);
            for j in 0..i {
                acc -= m[(i, j)] * x[j];
            }
            x[i] = acc / m[(i, i)];
        }
        Complex64::new(1.0, 0.0)
            + z * self
                .b
                .iter()
                .zip(&x)
                .map(|(b, xi)| xi * *b)
                .sum::<Complex64>()
    }
}

/// Where the stage matrices get their Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowJacobian {
    /// `J(t_n, u_n)` every step.
    Exact,
    /// `J` of the first step, reused for the whole run.
    Frozen,
}

/// Stateful ROW stepper.
#[derive(Debug, Clone)]
pub struct RowStepper {
    tableau: RowTableau,
    mode: RowJacobian,
    frozen: Option<Matrix>,
    cache: HashMap<(u64, u64), Factorization>,
    stats: WorkStats,
}

impl RowStepper {
    pub fn new(tableau: RowTableau, mode: RowJacobian) -> Result<Self> {
        tableau.validate()?;
        Ok(Self {
            tableau,
            mode,
            frozen: None,
            cache: HashMap::new(),
            stats: WorkStats::default(),
        })
    }

    pub fn tableau(&self) -> &RowTableau {
        &self.tableau
    }

    fn factor(&mut self, j: &Matrix, k: f64, g: f64) -> Result<()> {
        let key = (k.to_bits(), g.to_bits());
        if self.cache.contains_key(&key) {
            return Ok(());
        }
        let n = j.nrows();
        let w = Matrix::identity(n, n) - j * (g * k);
        let f = Factorization::new(&w)
            .map_err(|e| Error::SolveFailure(format!("I - gamma k J: {e}")))?;
        self.stats.factorizations += 1;
        self.cache.insert(key, f);
        Ok(())
    }
}

/// One ROW step from scratch.
pub fn row_step(
    problem: &SplitProblem,
    tableau: &RowTableau,
    t: f64,
    u: &Vector,
    k: f64,
    mode: RowJacobian,
) -> Result<Vector> {
    RowStepper::new(tableau.clone(), mode)?.step(problem, t, u, k)
}

impl OneStep for RowStepper {
    fn step(&mut self, problem: &SplitProblem, t: f64, u: &Vector, k: f64) -> Result<Vector> {
        let n = problem.dim();
        if u.len() != n {
            return Err(Error::DimensionMismatch("state length".into()));
        }
        let j = match self.mode {
            RowJacobian::Exact => {
                self.cache.clear();
                problem.jacobian(t, u)
            }
            RowJacobian::Frozen => self
                .frozen
                .get_or_insert_with(|| problem.jacobian(t, u))
                .clone(),
        };
        let s = self.tableau.s;
        let eval = |time: f64, x: &Vector, evals: &mut u64| -> Vector {
            *evals += 1;
            problem.rhs(time, x)
        };
        let mut evals = 0u64;
        let dt = 1e-6 * (1.0 + t.abs());
        let ft = (eval(t + dt, u, &mut evals) - eval(t - dt, u, &mut evals)) / (2.0 * dt);
        let mut stages: Vec<Vector> = Vec::with_capacity(s);
        for i in 0..s {
            let tab = &self.tableau;
            let mut arg = u.clone();
            let mut coupling = Vector::zeros(n);
            for (jx, kj) in stages.iter().enumerate() {
                if tab.alpha[i][jx] != 0.0 {
                    arg.axpy(tab.alpha[i][jx], kj, 1.0);
                }
                if tab.gamma[i][jx] != 0.0 {
                    coupling.axpy(tab.gamma[i][jx], kj, 1.0);
                }
            }
            if arg.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteState { stage: i, t });
            }
            let mut rhs = eval(t + tab.node(i) * k, &arg, &mut evals) * k;
            if !stages.is_empty() {
                rhs += (&j * coupling) * k;
            }
            rhs.axpy(tab.gamma_sum(i) * k * k, &ft, 1.0);
            let g = tab.gamma[i][i];
            self.factor(&j, k, g)?;
            let f = &self.cache[&(k.to_bits(), g.to_bits())];
            let mut x: Vec<f64> = rhs.iter().copied().collect();
            f.solve_in_place(&mut x).map_err(|e| match e {
                Error::SolveFailure(_) if rhs.iter().any(|v| !v.is_finite()) => {
                    Error::NonFiniteState { stage: i, t }
                }
                other => other,
            })?;
            self.stats.solves += 1;
            stages.push(Vector::from_vec(x));
        }
        self.stats.rhs_evals += evals;
        let mut next = u.clone();
        for (kj, b) in stages.iter().zip(&self.tableau.b) {
            next.axpy(*b, kj, 1.0);
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { stage: s, t });
        }
        Ok(next)
    }

    fn work(&self) -> WorkStats {
        self.stats
    }

    fn label(&self) -> String {
        let mode = match self.mode {
            RowJacobian::Exact => "",
            RowJacobian::Frozen => "-frozen",
        };
        format!("row-{}{}", self.tableau.name, mode)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::system::{FnField, LinearField};
    use crate::tase::{drive, IntegrateOptions};

    fn scalar_linear(lambda: f64) -> SplitProblem {
        let f = LinearField::new(Matrix::from_element(1, 1, lambda), Vector::zeros(1)).unwrap();
        SplitProblem::new(
            "lin",
            Arc::new(f),
            Matrix::from_element(1, 1, -1.0),
            Vector::from_element(1, 1.0),
            0.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn linear_implicit_euler_growth_factor() {
        let (lambda, k) = (-3.0, 0.7);
        let p = scalar_linear(lambda);
        let u = row_step(
            &p,
            &RowTableau::linear_implicit_euler(),
            0.0,
            p.u0(),
            k,
            RowJacobian::Exact,
        )
        .unwrap();
        let z = k * lambda;
        assert!((u[0] - (1.0 + z / (1.0 - z))).abs() < 1e-14);
    }

    #[test]
    fn zero_field_leaves_state_unchanged() {
        let f = LinearField::new(Matrix::zeros(2, 2), Vector::zeros(2)).unwrap();
        let p = SplitProblem::new(
            "zero",
            Arc::new(f),
            -Matrix::identity(2, 2),
            Vector::from_vec(vec![1.0, -2.0]),
            0.0,
            1.0,
        )
        .unwrap();
        let u = row_step(
            &p,
            &RowTableau::ros2(),
            0.0,
            p.u0(),
            0.3,
            RowJacobian::Exact,
        )
        .unwrap();
        assert_eq!(u, *p.u0());
    }

    #[test]
    fn ros2_matches_its_stability_function() {
        let p = scalar_linear(-4.0);
        let t = RowTableau::ros2();
        let u = row_step(&p, &t, 0.0, p.u0(), 0.25, RowJacobian::Exact).unwrap();
        let r = t.stability_function(Complex64::new(-1.0, 0.0));
        assert!((u[0] - r.re).abs() < 1e-12);
        // L-stable: R(-inf) = 0
        assert!(t.stability_function(Complex64::new(-1e12, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn shipped_tableaus_are_a_stable() {
        for t in [RowTableau::ros2(), RowTableau::linear_implicit_euler()] {
            for re in [-1e4, -100.0, -10.0, -1.0, -0.1, -1e-3, 0.0] {
                for im in [-1e3, -10.0, -1.0, 0.0, 1.0, 10.0, 1e3] {
                    let r = t.stability_function(Complex64::new(re, im)).norm();
                    assert!(r <= 1.0 + 1e-12, "{} at {re}+{im}i: {r}", t.name);
                }
            }
        }
    }

    #[test]
    fn ros2_is_second_order_on_forced_nonlinear_scalar() {
        // u' = -u^2 + sin t, reference from a much finer ROS2 run
        let field = FnField::new(
            1,
            |t, u, out| out[0] = -u[0] * u[0] + t.sin(),
            |_, u| Matrix::from_element(1, 1, -2.0 * u[0]),
        );
        let p = SplitProblem::new(
            "riccati",
            Arc::new(field),
            Matrix::from_element(1, 1, -1.0),
            Vector::from_element(1, 1.0),
            0.0,
            1.0,
        )
        .unwrap();
        let run = |k: f64| {
            let mut st = RowStepper::new(RowTableau::ros2(), RowJacobian::Exact).unwrap();
            drive(
                &mut st,
                &p,
                k,
                1.0,
                IntegrateOptions {
                    store_every: 0,
                    ..Default::default()
                },
            )
            .unwrap()
            .final_state()[0]
        };
        let reference = run(1.0 / 4096.0);
        let e1 = (run(0.05) - reference).abs();
        let e2 = (run(0.025) - reference).abs();
        let order = (e1 / e2).log2();
        assert!((order - 2.0).abs() < 0.2, "order {order}");
    }

    #[test]
    fn frozen_mode_factors_once_per_step_size() {
        let p = scalar_linear(-2.0);
        let mut st = RowStepper::new(RowTableau::ros2(), RowJacobian::Frozen).unwrap();
        drive(&mut st, &p, 0.1, 1.0, IntegrateOptions::default()).unwrap();
        assert_eq!(st.work().factorizations, 1);
        assert_eq!(st.work().solves, 20);
        let mut ex = RowStepper::new(RowTableau::ros2(), RowJacobian::Exact).unwrap();
        drive(&mut ex, &p, 0.1, 1.0, IntegrateOptions::default()).unwrap();
        assert_eq!(ex.work().factorizations, 10);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let t = RowTableau::ros2();
        assert_eq!(RowTableau::from_json(&t.to_json()).unwrap(), t);
        let bad = r#"{"s":1,"alpha":[[0.0]],"gamma":[[0.0]],"b":[1.0],"name":"x"}"#;
        assert!(RowTableau::from_json(bad).is_err());
        assert!(matches!(RowTableau::from_json("{"), Err(Error::Format(_))));
    }
}
