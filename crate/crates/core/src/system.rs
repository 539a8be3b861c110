//! Vector fields and split problems `u' = f(t, u)` with a chosen matrix `A`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{ensure_square, Matrix, Vector, SYMMETRY_TOL};
use crate::splitting::Splitting;
use crate::tase::MatrixId;

/// Right-hand side of an ODE system with an analytic Jacobian.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `f(t, u)` into `out`.
    fn eval(&self, t: f64, u: &[f64], out: &mut [f64]);

    fn jacobian(&self, t: f64, u: &[f64]) -> Matrix;

    /// `(J, g)` when the field is `J u + g` with constant `J` and `g`.
    fn linear_part(&self) -> Option<(&Matrix, &Vector)> {
        None
    }
}

/// `f(t, u) = J u + g`.
#[derive(Debug, Clone)]
pub struct LinearField {
    pub j: Matrix,
    pub g: Vector,
}

impl LinearField {
    pub fn new(j: Matrix, g: Vector) -> Result<Self> {
        ensure_square(&j, "Jacobian")?;
        if g.len() != j.nrows() {
            return Err(Error::DimensionMismatch(
                "forcing length differs from J".into(),
            ));
        }
        Ok(Self { j, g })
    }
}

impl VectorField for LinearField {
    fn dim(&self) -> usize {
        self.g.len()
    }

    fn eval(&self, _t: f64, u: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut s = self.g[i];
            for j in 0..n {
                s += self.j[(i, j)] * u[j];
            }
            out[i] = s;
        }
    }

    fn jacobian(&self, _t: f64, _u: &[f64]) -> Matrix {
        self.j.clone()
    }

    fn linear_part(&self) -> Option<(&Matrix, &Vector)> {
        Some((&self.j, &self.g))
    }
}

type EvalFn = dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync;
type JacFn = dyn Fn(f64, &[f64]) -> Matrix + Send + Sync;

/// A vector field built from closures.
#[derive(Clone)]
pub struct FnField {
    dim: usize,
    f: Arc<EvalFn>,
    jac: Arc<JacFn>,
}

impl FnField {
    pub fn new(
        dim: usize,
        f: impl Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
        jac: impl Fn(f64, &[f64]) -> Matrix + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            f: Arc::new(f),
            jac: Arc::new(jac),
        }
    }
}

impl VectorField for FnField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, t: f64, u: &[f64], out: &mut [f64]) {
        (self.f)(t, u, out)
    }

    fn jacobian(&self, t: f64, u: &[f64]) -> Matrix {
        (self.jac)(t, u)
    }
}

type ExactFn = dyn Fn(f64) -> Vector + Send + Sync;

/// An initial value problem together with the matrix `A` used by the solver.
#[derive(Clone)]
pub struct SplitProblem {
    name: String,
    field: Arc<dyn VectorField>,
    a: Arc<Matrix>,
    a_id: MatrixId,
    u0: Vector,
    t0: f64,
    te: f64,
    params: Vec<(String, f64)>,
    exact: Option<Arc<ExactFn>>,
}

impl fmt::Debug for SplitProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SplitProblem")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("t0", &self.t0)
            .field("te", &self.te)
            .field("params", &self.params)
            .finish()
    }
}

impl SplitProblem {
    /// `a` must be square, of matching size and symmetric. Definiteness is
    /// checked by [`Splitting`], where the spectrum is computed anyway.
    pub fn new(
        name: &str,
        field: Arc<dyn VectorField>,
        a: Matrix,
        u0: Vector,
        t0: f64,
        te: f64,
    ) -> Result<Self> {
        let n = field.dim();
        ensure_square(&a, "A")?;
        if a.nrows() != n || u0.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "field has dimension {n}, A is {}x{}, u0 has length {}",
                a.nrows(),
                a.ncols(),
                u0.len()
            )));
        }
        let dev = crate::linalg::symmetry_deviation(&a);
        if dev > SYMMETRY_TOL {
            return Err(Error::NotSymmetric(dev));
        }
        if !(t0.is_finite() && te.is_finite()) {
            return Err(Error::InvalidInput("time span must be finite".into()));
        }
        Ok(Self {
            name: name.to_string(),
            field,
            a: Arc::new(a),
            a_id: MatrixId::fresh(),
            u0,
            t0,
            te,
            params: Vec::new(),
            exact: None,
        })
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.push((key.to_string(), value));
        self
    }

    pub fn with_exact(mut self, exact: impl Fn(f64) -> Vector + Send + Sync + 'static) -> Self {
        self.exact = Some(Arc::new(exact));
        self
    }

    pub fn with_end_time(mut self, te: f64) -> Self {
        self.te = te;
        self
    }

    pub fn with_initial_state(mut self, u0: Vector) -> Result<Self> {
        if u0.len() != self.dim() {
            return Err(Error::DimensionMismatch("initial state length".into()));
        }
        self.u0 = u0;
        Ok(self)
    }

    /// Same problem with another operator matrix, which may be nonsymmetric
    /// (for instance the exact Jacobian of a linear problem).
    pub fn with_operator_matrix(&self, a: Matrix) -> Result<Self> {
        if a.nrows() != self.dim() || a.ncols() != self.dim() {
            return Err(Error::DimensionMismatch("operator matrix size".into()));
        }
        let mut out = self.clone();
        out.a = Arc::new(a);
        out.a_id = MatrixId::fresh();
        Ok(out)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.u0.len()
    }

    pub fn field(&self) -> &dyn VectorField {
        self.field.as_ref()
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn a_id(&self) -> MatrixId {
        self.a_id
    }

    pub fn u0(&self) -> &Vector {
        &self.u0
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn te(&self) -> f64 {
        self.te
    }

    pub fn params(&self) -> &[(String, f64)] {
        &self.params
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn exact(&self, t: f64) -> Option<Vector> {
        self.exact.as_ref().map(|f| f(t))
    }

    pub fn rhs(&self, t: f64, u: &Vector) -> Vector {
        let mut out = Vector::zeros(self.dim());
        self.field.eval(t, u.as_slice(), out.as_mut_slice());
        out
    }

    pub fn jacobian(&self, t: f64, u: &Vector) -> Matrix {
        self.field.jacobian(t, u.as_slice())
    }

    /// `A` and `B = J(t0, u0) - A`.
    pub fn initial_splitting(&self) -> Result<Splitting> {
        let j = self.jacobian(self.t0, &self.u0);
        Splitting::new(self.a().clone(), j - self.a())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_field_evaluates_ju_plus_g() {
        let j = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let f = LinearField::new(j, Vector::from_vec(vec![1.0, -1.0])).unwrap();
        let mut out = [0.0; 2];
        f.eval(0.0, &[1.0, 1.0], &mut out);
        assert_eq!(out, [4.0, 6.0]);
    }

    #[test]
    fn problem_rejects_mismatched_sizes() {
        let f = Arc::new(LinearField::new(Matrix::zeros(2, 2), Vector::zeros(2)).unwrap());
        let err = SplitProblem::new(
            "x",
            f.clone(),
            Matrix::zeros(3, 3),
            Vector::zeros(2),
            0.0,
            1.0,
        );
        assert!(matches!(err, Err(Error::DimensionMismatch(_))));
        let asym = Matrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]);
        let err = SplitProblem::new("x", f, asym, Vector::zeros(2), 0.0, 1.0);
        assert!(matches!(err, Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn operator_swap_gets_new_identity() {
        let f = Arc::new(LinearField::new(-Matrix::identity(2, 2), Vector::zeros(2)).unwrap());
        let p = SplitProblem::new("x", f, -Matrix::identity(2, 2), Vector::zeros(2), 0.0, 1.0)
            .unwrap()
            .with_param("d", 0.5);
        let q = p
            .with_operator_matrix(-2.0 * Matrix::identity(2, 2))
            .unwrap();
        assert_ne!(p.a_id(), q.a_id());
        assert_eq!(q.param("d"), Some(0.5));
        assert_eq!(q.a()[(0, 0)], -2.0);
    }
}
