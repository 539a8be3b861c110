use nalgebra::{Dyn, LU};

use super::{Matrix, Vector};
use crate::error::{Error, Result};

/// First structurally nonzero column of each row of the symmetrized pattern.
fn envelope(m: &Matrix) -> Vec<usize> {
    let n = m.nrows();
    (0..n)
        .map(|i| {
            (0..i)
                .find(|&j| m[(i, j)] != 0.0 || m[(j, i)] != 0.0)
                .unwrap_or(i)
        })
        .collect()
}

fn offsets(first: &[usize], extra: usize) -> Vec<usize> {
    let mut start = Vec::with_capacity(first.len() + 1);
    let mut acc = 0;
    start.push(0);
    for (i, &f) in first.iter().enumerate() {
        acc += i - f + extra;
        start.push(acc);
    }
    start
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cholesky factor stored by rows inside the envelope (profile) of the matrix.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn new(m: &Matrix) -> Result<Self> {
        let first = envelope(m);
        Self::with_envelope(m, first)
    }

    fn with_envelope(m: &Matrix, first: Vec<usize>) -> Result<Self> {
        let n = m.nrows();
        let start = offsets(&first, 1);
        let mut data = vec![0.0; start[n]];
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let lo = fi.max(fj);
                let (head, tail) = data.split_at_mut(start[i]);
                let row_i = &mut tail[..=i - fi];
                let s = m[(i, j)]
                    - if j == i {
                        dot(&row_i[lo - fi..j - fi], &row_i[lo - fi..j - fi])
                    } else {
                        let row_j = &head[start[j]..start[j + 1]];
                        dot(&row_i[lo - fi..j - fi], &row_j[lo - fj..j - fj])
                    };
                if j < i {
                    let diag_j = head[start[j + 1] - 1];
                    row_i[j - fi] = s / diag_j;
                } else {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite { row: i, pivot: s });
                    }
                    row_i[i - fi] = s.sqrt();
                }
            }
        }
        Ok(Self { first, start, data })
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            let s = b[i] - dot(&row[..i - fi], &b[fi..i]);
            b[i] = s / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            b[i] /= row[i - fi];
            let xi = b[i];
            for (bk, lk) in b[fi..i].iter_mut().zip(&row[..i - fi]) {
                *bk -= lk * xi;
            }
        }
    }
}

/// Doolittle LU without pivoting, stored inside the envelope.
///
/// `L` is kept by rows (unit diagonal implicit), `U` by columns.
#[derive(Debug, Clone)]
pub struct EnvelopeLu {
    first: Vec<usize>,
    l_start: Vec<usize>,
    l: Vec<f64>,
    u_start: Vec<usize>,
    u: Vec<f64>,
}

impl EnvelopeLu {
    /// Fails with `SolveFailure` when a pivot is negligible relative to its row.
    pub fn new(m: &Matrix) -> Result<Self> {
        let n = m.nrows();
        let first = envelope(m);
        let l_start = offsets(&first, 0);
        let u_start = offsets(&first, 1);
        let mut l = vec![0.0; l_start[n]];
        let mut u = vec![0.0; u_start[n]];
        for i in 0..n {
            let fi = first[i];
            // column i of U above the diagonal
            for r in fi..i {
                let fr = first[r];
                let lo = fi.max(fr);
                let l_row = &l[l_start[r]..l_start[r + 1]];
                let u_col = &u[u_start[i]..u_start[i + 1]];
                let s = m[(r, i)] - dot(&l_row[lo - fr..r - fr], &u_col[lo - fi..r - fi]);
                u[u_start[i] + r - fi] = s;
            }
            // row i of L
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let l_row = &l[l_start[i]..l_start[i + 1]];
                let u_col = &u[u_start[j]..u_start[j + 1]];
                let s = m[(i, j)] - dot(&l_row[lo - fi..j - fi], &u_col[lo - fj..j - fj]);
                let pivot = u[u_start[j + 1] - 1];
                l[l_start[i] + j - fi] = s / pivot;
            }
            let l_row = &l[l_start[i]..l_start[i + 1]];
            let u_col = &u[u_start[i]..u_start[i + 1]];
            let d = m[(i, i)] - dot(l_row, &u_col[..i - fi]);
            let row_scale = m.row(i).iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            if !d.is_finite() || d.abs() <= 1e-13 * row_scale.max(f64::MIN_POSITIVE) {
                return Err(Error::SolveFailure(format!(
                    "negligible pivot {d:e} at row {i}"
                )));
            }
            u[u_start[i + 1] - 1] = d;
        }
        Ok(Self {
            first,
            l_start,
            l,
            u_start,
            u,
        })
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.l[self.l_start[i]..self.l_start[i + 1]];
            b[i] -= dot(row, &b[fi..i]);
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let col = &self.u[self.u_start[i]..self.u_start[i + 1]];
            b[i] /= col[i - fi];
            let xi = b[i];
            for (br, ur) in b[fi..i].iter_mut().zip(&col[..i - fi]) {
                *br -= ur * xi;
            }
        }
    }
}

/// A reusable factorization of a square matrix.
#[derive(Debug, Clone)]
pub enum Factorization {
    Cholesky(EnvelopeCholesky),
    Lu(EnvelopeLu),
    Dense(LU<f64, Dyn, Dyn>),
}

impl Factorization {
    /// Cholesky only; the caller is responsible for symmetry.
    pub fn cholesky(m: &Matrix) -> Result<Self> {
        Ok(Factorization::Cholesky(EnvelopeCholesky::new(m)?))
    }

    /// Picks the cheapest factorization that applies.
    ///
    /// Exactly symmetric matrices try Cholesky first, so `I - w k A` with
    /// negative definite `A` never pays for pivoting. Sparse envelopes use
    /// unpivoted LU; anything else, or a collapsed pivot, goes dense.
    pub fn new(m: &Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "cannot factor a {}x{} matrix",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolveFailure("matrix has non-finite entries".into()));
        }
        let n = m.nrows();
        let first = envelope(m);
        let profile: usize = first.iter().enumerate().map(|(i, f)| i - f + 1).sum();
        let exactly_symmetric = (0..n).all(|j| (j + 1..n).all(|i| m[(i, j)] == m[(j, i)]));
        if exactly_symmetric {
            if let Ok(c) = EnvelopeCholesky::with_envelope(m, first) {
                return Ok(Factorization::Cholesky(c));
            }
        }
        if 4 * profile <= n * n + 4 * n {
            if let Ok(lu) = EnvelopeLu::new(m) {
                return Ok(Factorization::Lu(lu));
            }
        }
        let lu = LU::new(m.clone());
        if !lu.is_invertible() {
            return Err(Error::SolveFailure("matrix is singular".into()));
        }
        Ok(Factorization::Dense(lu))
    }

    pub fn dim(&self) -> usize {
        match self {
            Factorization::Cholesky(c) => c.dim(),
            Factorization::Lu(l) => l.dim(),
            Factorization::Dense(l) => l.l().nrows(),
        }
    }

    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<()> {
        if b.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side has length {}, expected {}",
                b.len(),
                self.dim()
            )));
        }
        match self {
            Factorization::Cholesky(c) => c.solve_in_place(b),
            Factorization::Lu(l) => l.solve_in_place(b),
            Factorization::Dense(lu) => {
                let mut v = Vector::from_column_slice(b);
                if !lu.solve_mut(&mut v) {
                    return Err(Error::SolveFailure("matrix is singular".into()));
                }
                b.copy_from_slice(v.as_slice());
            }
        }
        if b.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::SolveFailure("solution is not finite".into()))
        }
    }

    pub fn solve(&self, rhs: &Vector) -> Result<Vector> {
        let mut x = rhs.clone();
        self.solve_in_place(x.as_mut_slice())?;
        Ok(x)
    }
}
