//! Dense matrix contracts used throughout the crate.
//!
//! Storage is dense (`nalgebra::DMatrix`). Linear solves go through
//! [`Factorization`], which exploits the envelope of banded matrices while
//! keeping the dense residual contract.

mod eigen;
mod factor;

pub use eigen::{
    eig_general, eig_symmetric, fractional_power_spd, EigenDecomposition, SymmetricEigen,
};
pub use factor::{EnvelopeCholesky, EnvelopeLu, Factorization};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;
pub type CMatrix = DMatrix<Complex64>;

/// Relative symmetry threshold in the max norm.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Largest absolute entry.
pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// `max |m_ij - m_ji| / max |m_ij|`, zero for the zero matrix.
pub fn symmetry_deviation(m: &Matrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let scale = max_abs(m);
    if scale == 0.0 {
        return 0.0;
    }
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for j in 0..n {
        for i in (j + 1)..n {
            dev = dev.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    dev / scale
}

pub fn is_symmetric(m: &Matrix) -> bool {
    symmetry_deviation(m) <= SYMMETRY_TOL
}

pub fn ensure_symmetric(m: &Matrix) -> Result<()> {
    let dev = symmetry_deviation(m);
    if dev <= SYMMETRY_TOL {
        Ok(())
    } else {
        Err(Error::NotSymmetric(dev))
    }
}

pub fn ensure_square(m: &Matrix, what: &str) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{what} is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )))
    }
}

/// Frobenius norm of `ab - ba`.
pub fn commutator_norm(a: &Matrix, b: &Matrix) -> f64 {
    (a * b - b * a).norm()
}

/// Solve `m x = rhs` for symmetric positive definite `m`.
pub fn solve_spd(m: &Matrix, rhs: &Vector) -> Result<Vector> {
    ensure_square(m, "matrix")?;
    ensure_symmetric(m)?;
    let f = Factorization::cholesky(m)?;
    f.solve(rhs)
}

/// A dense matrix read from the JSON interchange format.
#[derive(Debug, Clone, PartialEq)]
pub enum DenseMatrix {
    Real(Matrix),
    Complex(CMatrix),
}

impl DenseMatrix {
    pub fn into_real(self) -> Result<Matrix> {
        match self {
            DenseMatrix::Real(m) => Ok(m),
            DenseMatrix::Complex(m) => {
                if m.iter().all(|z| z.im == 0.0) {
                    Ok(m.map(|z| z.re))
                } else {
                    Err(Error::Format("expected a real matrix".into()))
                }
            }
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

#[derive(Debug, Serialize, Deserialize)]
struct MatrixFile {
    rows: usize,
    cols: usize,
    data: Vec<Entry>,
}

/// Parse `{"rows": n, "cols": m, "data": [...]}` with row-major entries,
/// each a number or an `[re, im]` pair.
pub fn parse_matrix_json(text: &str) -> Result<DenseMatrix> {
    let file: MatrixFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    if file.rows * file.cols != file.data.len() {
        return Err(Error::Format(format!(
            "{}x{} matrix needs {} entries, found {}",
            file.rows,
            file.cols,
            file.rows * file.cols,
            file.data.len()
        )));
    }
    let complex = file.data.iter().any(|e| matches!(e, Entry::Complex(_)));
    if complex {
        let vals: Vec<Complex64> = file
            .data
            .iter()
            .map(|e| match e {
                Entry::Real(r) => Complex64::new(*r, 0.0),
                Entry::Complex([re, im]) => Complex64::new(*re, *im),
            })
            .collect();
        Ok(DenseMatrix::Complex(CMatrix::from_row_slice(
            file.rows, file.cols, &vals,
        )))
    } else {
        let vals: Vec<f64> = file
            .data
            .iter()
            .map(|e| match e {
                Entry::Real(r) => *r,
                Entry::Complex(_) => unreachable!(),
            })
            .collect();
        Ok(DenseMatrix::Real(Matrix::from_row_slice(
            file.rows, file.cols, &vals,
        )))
    }
}

pub fn matrix_to_json(m: &Matrix) -> String {
    let mut data = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            data.push(Entry::Real(m[(i, j)]));
        }
    }
    let file = MatrixFile {
        rows: m.nrows(),
        cols: m.ncols(),
        data,
    };
    serde_json::to_string(&file).expect("matrix serialization cannot fail")
}

pub fn cmatrix_to_json(m: &CMatrix) -> String {
    let mut data = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            data.push(Entry::Complex([m[(i, j)].re, m[(i, j)].im]));
        }
    }
    let file = MatrixFile {
        rows: m.nrows(),
        cols: m.ncols(),
        data,
    };
    serde_json::to_string(&file).expect("matrix serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_solve_returns_rhs() {
        let x = solve_spd(
            &Matrix::identity(3, 3),
            &Vector::from_vec(vec![1.0, 2.0, 3.0]),
        )
        .unwrap();
        assert_eq!(x.as_slice(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn diagonal_solve() {
        let m = Matrix::from_diagonal(&Vector::from_vec(vec![2.0, 4.0]));
        let x = solve_spd(&m, &Vector::from_vec(vec![2.0, 4.0])).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let err = solve_spd(&m, &Vector::from_vec(vec![1.0, 1.0])).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { row: 1, .. }));
    }

    #[test]
    fn asymmetric_matrix_is_rejected() {
        let m = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        assert!(matches!(
            solve_spd(&m, &Vector::from_vec(vec![1.0, 1.0])),
            Err(Error::NotSymmetric(_))
        ));
    }

    #[test]
    fn symmetry_threshold_is_relative() {
        let mut m = Matrix::from_row_slice(2, 2, &[1e6, 3.0, 3.0, 1e6]);
        m[(0, 1)] += 1e-7;
        assert!(is_symmetric(&m));
        m[(0, 1)] += 1e-4;
        assert!(!is_symmetric(&m));
    }

    #[test]
    fn json_round_trip_real() {
        let m = Matrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, -6.5]);
        let back = parse_matrix_json(&matrix_to_json(&m)).unwrap();
        assert_eq!(back, DenseMatrix::Real(m));
    }

    #[test]
    fn json_complex_entries() {
        let text = r#"{"rows": 1, "cols": 2, "data": [1.5, [0.0, -2.0]]}"#;
        match parse_matrix_json(text).unwrap() {
            DenseMatrix::Complex(m) => {
                assert_eq!(m[(0, 0)], Complex64::new(1.5, 0.0));
                assert_eq!(m[(0, 1)], Complex64::new(0.0, -2.0));
                let again = parse_matrix_json(&cmatrix_to_json(&m)).unwrap();
                assert_eq!(again, DenseMatrix::Complex(m));
            }
            other => panic!("expected complex matrix, got {other:?}"),
        }
    }

    #[test]
    fn json_entry_count_is_checked() {
        let text = r#"{"rows": 2, "cols": 2, "data": [1, 2, 3]}"#;
        assert!(matches!(parse_matrix_json(text), Err(Error::Format(_))));
    }

    #[test]
    fn commutator_of_diagonals_vanishes() {
        let a = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 2.0]));
        let b = Matrix::from_diagonal(&Vector::from_vec(vec![3.0, -1.0]));
        assert_eq!(commutator_norm(&a, &b), 0.0);
    }
}
