use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{Factorization, Matrix, Vector};

/// Standard weights for orders 2, 3 and 4.
pub const OMEGA_P2: [f64; 2] = [3.0, 1.5];
pub const OMEGA_P3: [f64; 3] = [2.3147, 1.8796, 1.5822];
pub const OMEGA_P4: [f64; 4] = [3.9396, 2.4506, 2.2271, 2.0612];

/// Minimum separation of the reciprocal weights.
const OMEGA_SEPARATION: f64 = 1e-12;

/// Coefficients `beta_j` of the operator `sum_j beta_j (I - w_j k A)^{-1}`.
///
/// `beta_j = (1/w_j)^{p-1} / prod_{l != j} (1/w_j - 1/w_l)`, which makes the
/// operator agree with the identity up to order `p`.
pub fn tase_weights(omega: &[f64]) -> Result<Vec<f64>> {
    if omega.is_empty() {
        return Err(Error::InvalidOmega(
            "at least one weight is required".into(),
        ));
    }
    if let Some(w) = omega.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
        return Err(Error::InvalidOmega(format!("weight {w} is not positive")));
    }
    let p = omega.len();
    let inv: Vec<f64> = omega.iter().map(|w| 1.0 / w).collect();
    for j in 0..p {
        for l in (j + 1)..p {
            if (inv[j] - inv[l]).abs() < OMEGA_SEPARATION {
                return Err(Error::DuplicateOmega(omega[j], omega[l]));
            }
        }
    }
    Ok((0..p)
        .map(|j| {
            let denom: f64 = (0..p)
                .filter(|&l| l != j)
                .map(|l| inv[j] - inv[l])
                .product();
            inv[j].powi(p as i32 - 1) / denom
        })
        .collect())
}

/// The operator `T_p(kA)` as a rational function of `kA`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaseOperator {
    omega: Vec<f64>,
    beta: Vec<f64>,
}

impl TaseOperator {
    pub fn new(omega: &[f64]) -> Result<Self> {
        let beta = tase_weights(omega)?;
        Ok(Self {
            omega: omega.to_vec(),
            beta,
        })
    }

    /// Operator with the tabulated weights for `p` in 2..=4.
    pub fn standard(p: usize) -> Result<Self> {
        match p {
            2 => Self::new(&OMEGA_P2),
            3 => Self::new(&OMEGA_P3),
            4 => Self::new(&OMEGA_P4),
            _ => Err(Error::UnsupportedOrder(p)),
        }
    }

    pub fn order(&self) -> usize {
        self.omega.len()
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// True when the weights are the tabulated ones for this order.
    pub fn is_standard(&self) -> bool {
        match self.order() {
            2 => self.omega == OMEGA_P2,
            3 => self.omega == OMEGA_P3,
            4 => self.omega == OMEGA_P4,
            _ => false,
        }
    }

    /// Scalar symbol `T_p(z)`.
    pub fn scalar(&self, z: Complex64) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (w, b) in self.omega.iter().zip(&self.beta) {
            let d = Complex64::new(1.0, 0.0) - z * w;
            if d.norm() == 0.0 {
                return Err(Error::PoleHit(z));
            }
            acc += b / d;
        }
        Ok(acc)
    }

    pub fn scalar_real(&self, y: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (w, b) in self.omega.iter().zip(&self.beta) {
            let d = 1.0 - w * y;
            if d == 0.0 {
                return Err(Error::PoleHit(Complex64::new(y, 0.0)));
            }
            acc += b / d;
        }
        Ok(acc)
    }

    /// `y T_p(y)` for `y < 0`.
    pub fn hat_t(&self, y: f64) -> Result<f64> {
        if !(y < 0.0) {
            return Err(Error::DomainError(y));
        }
        if y.is_infinite() {
            return Ok(self.hat_t_limit());
        }
        // y / (1 - w y) written to stay accurate for |y| huge
        Ok(self
            .omega
            .iter()
            .zip(&self.beta)
            .map(|(w, b)| b / (1.0 / y - w))
            .sum())
    }

    /// `lim_{y -> -inf} y T_p(y) = -sum_j beta_j / w_j`.
    pub fn hat_t_limit(&self) -> f64 {
        -self
            .omega
            .iter()
            .zip(&self.beta)
            .map(|(w, b)| b / w)
            .sum::<f64>()
    }

    /// One-shot `T_p(kA) v`; factors every shifted matrix afresh.
    pub fn apply(&self, a: &Matrix, k: f64, v: &Vector) -> Result<Vector> {
        let mut filter = TaseFilter::new(self.clone());
        filter.prepare(a, MatrixId::fresh(), k)?;
        let mut out = Vector::zeros(v.len());
        filter.apply(v.as_slice(), out.as_mut_slice())?;
        Ok(out)
    }

    /// Dense matrix `T_p(kA)`.
    pub fn matrix(&self, a: &Matrix, k: f64) -> Result<Matrix> {
        let n = a.nrows();
        let mut filter = TaseFilter::new(self.clone());
        filter.prepare(a, MatrixId::fresh(), k)?;
        let mut out = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            filter.apply(&e, &mut col)?;
            out.column_mut(j).copy_from_slice(&col);
        }
        Ok(out)
    }
}

/// Free-function form of [`TaseOperator::apply`].
pub fn apply_tase(op: &TaseOperator, a: &Matrix, k: f64, v: &Vector) -> Result<Vector> {
    op.apply(a, k, v)
}

/// Identity token for a matrix used as a cache key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MatrixId(u64);

impl MatrixId {
    pub fn fresh() -> Self {
        static NEXT: AtomicU64 = AtomicU64::new(1);
        MatrixId(NEXT.fetch_add(1, Ordering::Relaxed))
    }
}

/// Linear-algebra work counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WorkStats {
    pub factorizations: u64,
    pub solves: u64,
    pub rhs_evals: u64,
}

/// `T_p(kA)` with cached factorizations of `I - w_j k A`.
#[derive(Debug, Clone)]
pub struct TaseFilter {
    op: TaseOperator,
    key: Option<(MatrixId, u64)>,
    factors: Vec<Factorization>,
    scratch: Vec<f64>,
    stats: WorkStats,
}

impl TaseFilter {
    pub fn new(op: TaseOperator) -> Self {
        Self {
            op,
            key: None,
            factors: Vec::new(),
            scratch: Vec::new(),
            stats: WorkStats::default(),
        }
    }

    pub fn operator(&self) -> &TaseOperator {
        &self.op
    }

    pub fn stats(&self) -> WorkStats {
        self.stats
    }

    /// Factors `I - w_j k A` unless the same `(id, k)` is already cached.
    pub fn prepare(&mut self, a: &Matrix, id: MatrixId, k: f64) -> Result<()> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidInput(format!(
                "step size {k} must be positive"
            )));
        }
        if !a.is_square() {
            return Err(Error::DimensionMismatch(
                "operator matrix must be square".into(),
            ));
        }
        let key = (id, k.to_bits());
        if self.key == Some(key) {
            return Ok(());
        }
        self.key = None;
        self.factors.clear();
        let n = a.nrows();
        for &w in self.op.omega() {
            let shifted = Matrix::identity(n, n) - a * (w * k);
            self.factors.push(Factorization::new(&shifted)?);
            self.stats.factorizations += 1;
        }
        self.scratch = vec![0.0; n];
        self.key = Some(key);
        Ok(())
    }

    /// Drops the cached factors so the next `prepare` refactors.
    pub fn invalidate(&mut self) {
        self.key = None;
        self.factors.clear();
    }

    /// `out = sum_j beta_j (I - w_j k A)^{-1} v`.
    pub fn apply(&mut self, v: &[f64], out: &mut [f64]) -> Result<()> {
        if self.key.is_none() {
            return Err(Error::InvalidInput("filter used before prepare".into()));
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        for (f, &b) in self.factors.iter().zip(self.op.beta()) {
            self.scratch.copy_from_slice(v);
            f.solve_in_place(&mut self.scratch)?;
            self.stats.solves += 1;
            for (o, s) in out.iter_mut().zip(&self.scratch) {
                *o += b * s;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_two_weights() {
        let b = tase_weights(&OMEGA_P2).unwrap();
        assert!((b[0] + 1.0).abs() < 1e-15 && (b[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn order_one_weight() {
        assert_eq!(tase_weights(&[7.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn tabulated_weights_sum_to_one() {
        for p in 2..=4 {
            let op = TaseOperator::standard(p).unwrap();
            let s: f64 = op.beta().iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "p = {p}: {s}");
        }
    }

    #[test]
    fn order_three_weights_match_closed_form() {
        // independent evaluation of the defining formula, frozen
        let b = tase_weights(&OMEGA_P3).unwrap();
        let want = [9.331040, -28.302580, 19.971540];
        for (g, w) in b.iter().zip(want) {
            assert!((g - w).abs() < 5e-5 * w.abs(), "{g} vs {w}");
        }
    }

    #[test]
    fn duplicates_and_nonpositive_weights() {
        assert!(matches!(
            tase_weights(&[2.0, 2.0]),
            Err(Error::DuplicateOmega(_, _))
        ));
        assert!(matches!(
            tase_weights(&[2.0, -1.0]),
            Err(Error::InvalidOmega(_))
        ));
        assert!(matches!(tase_weights(&[]), Err(Error::InvalidOmega(_))));
    }

    #[test]
    fn scalar_symbol_at_minus_one() {
        let op = TaseOperator::standard(2).unwrap();
        let t = op.scalar_real(-1.0).unwrap();
        assert!((t - 0.55).abs() < 1e-15);
        let v = op
            .apply(
                &Matrix::from_element(1, 1, -1.0),
                1.0,
                &Vector::from_element(1, 1.0),
            )
            .unwrap();
        assert!((v[0] - 0.55).abs() < 1e-15);
    }

    #[test]
    fn zero_matrix_is_identity() {
        let op = TaseOperator::standard(3).unwrap();
        let v = Vector::from_vec(vec![1.0, -2.0, 3.5]);
        let out = op.apply(&Matrix::zeros(3, 3), 0.7, &v).unwrap();
        assert!((out - v).norm() < 1e-13);
    }

    #[test]
    fn hat_t_limits() {
        let two = TaseOperator::standard(2).unwrap();
        assert!((two.hat_t_limit() + 1.0).abs() < 1e-15);
        assert!(two.hat_t(-1e-300).unwrap().abs() < 1e-299);
        for p in 3..=4 {
            let op = TaseOperator::standard(p).unwrap();
            assert!((op.hat_t_limit() + 1.5961).abs() < 1e-3);
            assert!((op.hat_t(-1e12).unwrap() - op.hat_t_limit()).abs() < 1e-6);
        }
        assert!(matches!(two.hat_t(0.0), Err(Error::DomainError(_))));
        assert!(matches!(two.hat_t(1.0), Err(Error::DomainError(_))));
    }

    #[test]
    fn filter_reuses_factors() {
        let op = TaseOperator::standard(2).unwrap();
        let a = Matrix::from_diagonal(&Vector::from_vec(vec![-1.0, -4.0]));
        let id = MatrixId::fresh();
        let mut f = TaseFilter::new(op);
        let mut out = vec![0.0; 2];
        for _ in 0..3 {
            f.prepare(&a, id, 0.1).unwrap();
            f.apply(&[1.0, 1.0], &mut out).unwrap();
        }
        assert_eq!(f.stats().factorizations, 2);
        assert_eq!(f.stats().solves, 6);
        f.prepare(&a, id, 0.2).unwrap();
        assert_eq!(f.stats().factorizations, 4);
        f.prepare(&a, MatrixId::fresh(), 0.2).unwrap();
        assert_eq!(f.stats().factorizations, 6);
    }
}
