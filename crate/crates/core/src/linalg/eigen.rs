use nalgebra::linalg::{Schur, SymmetricEigen as NaSymmetricEigen};
use num_complex::Complex64;

use super::{ensure_square, ensure_symmetric, CMatrix, Matrix};
use crate::error::{Error, Result};

const MAX_SWEEPS_PER_ROW: usize = 1000;

/// Eigenvalues (with multiplicity) and optional eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<Complex64>,
    pub eigenvectors: Option<CMatrix>,
    pub symmetric: bool,
}

/// Real symmetric decomposition `X = Q diag(values) Q^T`, values ascending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

/// Eigenvalues of a general real matrix, unordered.
pub fn eig_general(x: &Matrix) -> Result<EigenDecomposition> {
    ensure_square(x, "matrix")?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let n = x.nrows();
    if n == 0 {
        return Ok(EigenDecomposition {
            eigenvalues: vec![],
            eigenvectors: None,
            symmetric: false,
        });
    }
    let schur = Schur::try_new(x.clone(), f64::EPSILON, MAX_SWEEPS_PER_ROW * n)
        .ok_or_else(|| Error::NoConvergence(format!("real Schur form of a {n}x{n} matrix")))?;
    let eigenvalues = schur.complex_eigenvalues().iter().copied().collect();
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors: None,
        symmetric: false,
    })
}

/// Symmetric eigen-decomposition with a block-diagonal fast path.
///
/// Rows that are coupled through nonzero entries are grouped into connected
/// components and each component is decomposed on its own.
pub fn eig_symmetric(x: &Matrix) -> Result<SymmetricEigen> {
    ensure_square(x, "matrix")?;
    ensure_symmetric(x)?;
    let n = x.nrows();
    let components = connected_components(x);
    let mut pairs: Vec<(f64, Vec<(usize, f64)>)> = Vec::with_capacity(n);
    for comp in &components {
        let m = comp.len();
        let sub = Matrix::from_fn(m, m, |i, j| {
            0.5 * (x[(comp[i], comp[j])] + x[(comp[j], comp[i])])
        });
        let eig = if m == 1 {
            NaSymmetricEigen {
                eigenvalues: nalgebra::DVector::from_element(1, sub[(0, 0)]),
                eigenvectors: Matrix::identity(1, 1),
            }
        } else {
            NaSymmetricEigen::try_new(sub, f64::EPSILON, MAX_SWEEPS_PER_ROW * m)
                .ok_or_else(|| Error::NoConvergence(format!("symmetric eigen of size {m}")))?
        };
        for k in 0..m {
            let col = (0..m)
                .map(|i| (comp[i], eig.eigenvectors[(i, k)]))
                .collect();
            pairs.push((eig.eigenvalues[k], col));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut vectors = Matrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (k, (val, col)) in pairs.into_iter().enumerate() {
        values.push(val);
        for (i, v) in col {
            vectors[(i, k)] = v;
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

fn connected_components(x: &Matrix) -> Vec<Vec<usize>> {
    let n = x.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for j in 0..n {
        for i in (j + 1)..n {
            if x[(i, j)] != 0.0 || x[(j, i)] != 0.0 {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = find(&mut parent, i);
        groups[r].push(i);
    }
    groups.into_iter().filter(|g| !g.is_empty()).collect()
}

impl SymmetricEigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(f64::NAN)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::NAN)
    }

    /// `Q diag(f(values)) Q^T`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for (k, &v) in self.values.iter().enumerate() {
            let fv = f(v);
            scaled.column_mut(k).scale_mut(fv);
        }
        let mut out = Matrix::zeros(n, n);
        out.gemm(1.0, &scaled, &self.vectors.transpose(), 0.0);
        // symmetrize the rounding
        let t = out.transpose();
        (out + t) * 0.5
    }

    /// Real power of a positive definite decomposition.
    pub fn power(&self, r: f64) -> Result<Matrix> {
        let (lo, hi) = (self.min(), self.max());
        if !(lo > 0.0) {
            return Err(Error::NotPositiveDefinite { row: 0, pivot: lo });
        }
        if lo <= 1e-12 * hi {
            return Err(Error::IllConditioned(format!(
                "eigenvalue ratio {:e} below 1e-12",
                lo / hi
            )));
        }
        let extremes = [lo.powf(r), hi.powf(r)];
        if extremes.iter().any(|v| !v.is_finite() || *v == 0.0) {
            return Err(Error::IllConditioned(format!(
                "power {r} overflows or underflows"
            )));
        }
        if r == 0.0 {
            return Ok(Matrix::identity(self.dim(), self.dim()));
        }
        Ok(self.map(|v| v.powf(r)))
    }

    pub fn to_decomposition(&self) -> EigenDecomposition {
        EigenDecomposition {
            eigenvalues: self
                .values
                .iter()
                .map(|&v| Complex64::new(v, 0.0))
                .collect(),
            eigenvectors: Some(self.vectors.map(|v| Complex64::new(v, 0.0))),
            symmetric: true,
        }
    }
}

impl From<SymmetricEigen> for EigenDecomposition {
    fn from(s: SymmetricEigen) -> Self {
        s.to_decomposition()
    }
}

/// `M^r` for symmetric positive definite `M`.
pub fn fractional_power_spd(m: &Matrix, r: f64) -> Result<Matrix> {
    if r == 1.0 {
        ensure_square(m, "matrix")?;
        ensure_symmetric(m)?;
        return Ok(m.clone());
    }
    eig_symmetric(m)?.power(r)
}
