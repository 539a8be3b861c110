use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::linalg::SymmetricEigen as NaSymmetricEigen;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::diagram::fmt_e;
use crate::error::{Error, Result};
use crate::linalg::{ensure_square, CMatrix, Matrix};

/// Matrices up to this size use the dense Hermitian eigen-solver.
pub const DENSE_FOV_LIMIT: usize = 64;

/// Support points of a field of values `W(X)`.
///
/// For angle `theta`, `support[i] = max Re(e^{i theta} w)` over `W(X)` and
/// `points[i]` is a point of `W(X)` attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct FovBoundary {
    pub angles: Vec<f64>,
    pub points: Vec<Complex64>,
    pub support: Vec<f64>,
    pub max_real: f64,
}

impl FovBoundary {
    fn from_parts(angles: Vec<f64>, points: Vec<Complex64>, support: Vec<f64>) -> Self {
        let max_real = points
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        Self {
            angles,
            points,
            support,
            max_real,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest modulus of a support value, a scale for tolerances.
    pub fn scale(&self) -> f64 {
        self.points.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// True when `z` satisfies every supporting half-plane up to `tol`.
    pub fn contains(&self, z: Complex64, tol: f64) -> bool {
        self.angles
            .iter()
            .zip(&self.support)
            .all(|(t, s)| (Complex64::from_polar(1.0, *t) * z).re <= s + tol)
    }

    /// Largest violation of `Re(e^{i theta_i} p_j) <= support_i` over all pairs.
    pub fn support_violation(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for (t, s) in self.angles.iter().zip(&self.support) {
            let rot = Complex64::from_polar(1.0, *t);
            for p in &self.points {
                worst = worst.max((rot * p).re - s);
            }
        }
        worst
    }

    /// Deterministic points inside the convex hull of the support points.
    pub fn interior_samples(&self, count: usize) -> Vec<Complex64> {
        let m = self.points.len();
        if m == 0 || count == 0 {
            return Vec::new();
        }
        let centroid = self.points.iter().sum::<Complex64>() / m as f64;
        let mut out = vec![centroid];
        let mut i = 0;
        while out.len() < count {
            let a = (i * 37) % m;
            let b = (a + m / 2 + i % 5) % m;
            let t = ((i % 7) + 1) as f64 / 8.0;
            let chord = self.points[a] * (1.0 - t) + self.points[b] * t;
            let s = ((i % 3) + 1) as f64 / 4.0;
            out.push(centroid * s + chord * (1.0 - s));
            i += 1;
        }
        out
    }

    /// Image under `w -> shift + w / scale` with `scale > 0`.
    pub fn affine(&self, scale: f64, shift: Complex64) -> FovBoundary {
        let points: Vec<Complex64> = self.points.iter().map(|w| shift + w / scale).collect();
        let support = self
            .angles
            .iter()
            .zip(&self.support)
            .map(|(t, s)| (Complex64::from_polar(1.0, *t) * shift).re + s / scale)
            .collect();
        FovBoundary::from_parts(self.angles.clone(), points, support)
    }

    /// Image under `w -> -w`.
    pub fn negated(&self) -> Vec<Complex64> {
        self.points.iter().map(|w| -w).collect()
    }

    /// CSV with header `theta,re,im`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("theta,re,im\n");
        for (t, z) in self.angles.iter().zip(&self.points) {
            let _ = writeln!(s, "{},{},{}", fmt_e(*t), fmt_e(z.re), fmt_e(z.im));
        }
        s
    }
}

/// Johnson's support-point algorithm on `n_theta` angles in `[0, 2 pi)`.
///
/// `X` is real, so `H(2 pi - theta)` is the conjugate of `H(theta)` and only
/// the upper half of the angles is computed.
pub fn fov(x: &Matrix, n_theta: usize) -> Result<FovBoundary> {
    ensure_square(x, "matrix")?;
    if n_theta < 16 {
        return Err(Error::InvalidInput(format!(
            "n_theta = {n_theta} must be at least 16"
        )));
    }
    let n = x.nrows();
    if n == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    let herm = x.transpose();
    let sym = (x + &herm) * 0.5;
    let skew = (x - &herm) * 0.5;
    let mut solver = if n <= DENSE_FOV_LIMIT {
        Solver::Dense
    } else {
        Solver::Lanczos(Lanczos::new(n, row_sum_norm(&sym) + row_sum_norm(&skew)))
    };
    let half = n_theta / 2;
    let mut upper = Vec::with_capacity(half + 1);
    for i in 0..=half {
        let theta = 2.0 * PI * i as f64 / n_theta as f64;
        let v = match &mut solver {
            Solver::Dense => dense_top_vector(&sym, &skew, theta)?,
            Solver::Lanczos(l) => match l.top_vector(x, theta) {
                Ok(v) => v,
                Err(e) => {
                    log::warn!("{e}; falling back to the dense solver");
                    let v = dense_top_vector(&sym, &skew, theta)?;
                    l.warm = v.clone();
                    v
                }
            },
        };
        upper.push(support_point(x, &v, theta));
    }
    let mut angles = Vec::with_capacity(n_theta);
    let mut points = Vec::with_capacity(n_theta);
    let mut support = Vec::with_capacity(n_theta);
    for i in 0..n_theta {
        let theta = 2.0 * PI * i as f64 / n_theta as f64;
        let (p, s) = if i <= half {
            upper[i]
        } else {
            (upper[n_theta - i].0.conj(), upper[n_theta - i].1)
        };
        angles.push(theta);
        points.push(p);
        support.push(s);
    }
    Ok(FovBoundary::from_parts(angles, points, support))
}

enum Solver {
    Dense,
    Lanczos(Lanczos),
}

/// `(x^* X x, max Re(e^{i theta} x^* X x))` for a unit complex vector stored
/// as an `n x 2` real matrix of (re, im) columns.
fn support_point(x: &Matrix, v: &DMatrix<f64>, theta: f64) -> (Complex64, f64) {
    let xv = x * v;
    let (a, b) = (v.column(0), v.column(1));
    let (xa, xb) = (xv.column(0), xv.column(1));
    // conj(a + ib) . (xa + i xb)
    let p = Complex64::new(a.dot(&xa) + b.dot(&xb), a.dot(&xb) - b.dot(&xa));
    let s = (Complex64::from_polar(1.0, theta) * p).re;
    (p, s)
}

fn dense_top_vector(sym: &Matrix, skew: &Matrix, theta: f64) -> Result<DMatrix<f64>> {
    let n = sym.nrows();
    let (c, s) = (theta.cos(), theta.sin());
    let h = CMatrix::from_fn(n, n, |i, j| {
        Complex64::new(c * sym[(i, j)], s * skew[(i, j)])
    });
    let eig = NaSymmetricEigen::try_new(h, f64::EPSILON, 1000 * n)
        .ok_or_else(|| Error::NoConvergence("Hermitian eigen-solver".into()))?;
    let (imax, _) =
        eig.eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| {
                if *v > acc.1 {
                    (i, *v)
                } else {
                    acc
                }
            });
    let col = eig.eigenvectors.column(imax);
    Ok(DMatrix::from_fn(n, 2, |i, j| {
        if j == 0 {
            col[i].re
        } else {
            col[i].im
        }
    }))
}

fn cdot(u: &DMatrix<f64>, v: &DMatrix<f64>) -> Complex64 {
    let (ur, ui) = (u.column(0), u.column(1));
    let (vr, vi) = (v.column(0), v.column(1));
    Complex64::new(ur.dot(&vr) + ui.dot(&vi), ur.dot(&vi) - ui.dot(&vr))
}

/// `v -= c u` for complex `c`.
fn caxpy(v: &mut DMatrix<f64>, c: Complex64, u: &DMatrix<f64>) {
    let n = v.nrows();
    for i in 0..n {
        let (ur, ui) = (u[(i, 0)], u[(i, 1)]);
        v[(i, 0)] -= c.re * ur - c.im * ui;
        v[(i, 1)] -= c.re * ui + c.im * ur;
    }
}

/// Restarted Lanczos for the top eigenpair of `cos(t) S + i sin(t) K`,
/// warm-started from the previous angle's vector.
struct Lanczos {
    warm: DMatrix<f64>,
    krylov: usize,
    max_cycles: usize,
    /// Norm bound on `H(theta)` used for the tolerances.
    scale: f64,
}

impl Lanczos {
    fn new(n: usize, scale: f64) -> Self {
        // fixed, nonsymmetric pattern: avoids starting orthogonal to the target
        let warm = DMatrix::from_fn(n, 2, |i, j| {
            let x = (i as f64 + 1.0) * 0.618_033_988_749_895 + j as f64 * 0.414_213_562;
            (x.fract() - 0.5) + 0.1
        });
        let norm = warm.norm();
        Self {
            warm: warm / norm,
            krylov: n.min(100),
            max_cycles: 60,
            scale,
        }
    }

    /// `H(theta) v` from one pass over `X`: the symmetric and skew parts are
    /// half the sum and difference of `X v` and `X^T v`.
    fn apply(x: &Matrix, c: f64, s: f64, v: &DMatrix<f64>) -> DMatrix<f64> {
        let n = v.nrows();
        let data = x.as_slice();
        let (va, vb) = (v.column(0), v.column(1));
        let (va, vb) = (va.as_slice(), vb.as_slice());
        let mut xa = vec![0.0; n];
        let mut xb = vec![0.0; n];
        let mut ta = vec![0.0; n];
        let mut tb = vec![0.0; n];
        for j in 0..n {
            let col = &data[j * n..(j + 1) * n];
            let (pa, pb) = (va[j], vb[j]);
            let (mut da, mut db) = (0.0, 0.0);
            for i in 0..n {
                let xij = col[i];
                xa[i] += xij * pa;
                xb[i] += xij * pb;
                da += xij * va[i];
                db += xij * vb[i];
            }
            ta[j] = da;
            tb[j] = db;
        }
        DMatrix::from_fn(n, 2, |i, j| {
            let (sa, sb) = (0.5 * (xa[i] + ta[i]), 0.5 * (xb[i] + tb[i]));
            let (ka, kb) = (0.5 * (xa[i] - ta[i]), 0.5 * (xb[i] - tb[i]));
            if j == 0 {
                c * sa - s * kb
            } else {
                c * sb + s * ka
            }
        })
    }

    fn top_vector(&mut self, x: &Matrix, theta: f64) -> Result<DMatrix<f64>> {
        let (c, s) = (theta.cos(), theta.sin());
        let scale = self.scale;
        if scale == 0.0 {
            return Ok(self.warm.clone());
        }
        let tol = 1e-10 * scale;
        let mut start = self.warm.clone();
        let mut previous = f64::NEG_INFINITY;
        let mut stagnant = 0;
        for cycle in 0..self.max_cycles {
            let (value, vector, residual) = self.cycle(x, c, s, &start, tol);
            self.warm = vector.clone();
            log::trace!("theta {theta}: cycle {cycle}, residual {residual:e}, value {value}");
            if residual <= tol {
                return Ok(vector);
            }
            // the Ritz value converges quadratically faster than the vector
            if (value - previous).abs() <= 1e-12 * scale {
                stagnant += 1;
                if stagnant >= 2 {
                    return Ok(vector);
                }
            } else {
                stagnant = 0;
            }
            previous = value;
            start = vector;
        }
        Err(Error::NoConvergence(format!("Lanczos at theta = {theta}")))
    }

    /// One Lanczos cycle with full reorthogonalization; returns the top Ritz
    /// value, its unit vector, and the residual norm estimate. Stops early
    /// once the estimate drops below `tol`.
    fn cycle(
        &self,
        x: &Matrix,
        c: f64,
        s: f64,
        start: &DMatrix<f64>,
        tol: f64,
    ) -> (f64, DMatrix<f64>, f64) {
        let mut basis: Vec<DMatrix<f64>> = Vec::with_capacity(self.krylov + 1);
        let mut alpha = Vec::with_capacity(self.krylov);
        let mut beta: Vec<f64> = Vec::with_capacity(self.krylov);
        let norm = start.norm();
        basis.push(start / norm);
        let (value, y, residual) = loop {
            let j = alpha.len();
            let mut w = Self::apply(x, c, s, &basis[j]);
            let a = cdot(&basis[j], &w).re;
            alpha.push(a);
            // two passes of classical Gram-Schmidt against the whole basis
            for _ in 0..2 {
                for v in &basis {
                    let h = cdot(v, &w);
                    caxpy(&mut w, h, v);
                }
            }
            let b = w.norm();
            let exhausted = j + 1 == self.krylov || b <= 1e-14 * a.abs().max(1e-300);
            if exhausted || (j + 1) % CONVERGENCE_CHECK_EVERY == 0 {
                let (value, y) = top_ritz_pair(&alpha, &beta);
                let residual = (b * y[j]).abs();
                if exhausted || residual <= tol {
                    break (value, y, residual);
                }
            }
            beta.push(b);
            basis.push(w / b);
        };
        let mut top = DMatrix::zeros(start.nrows(), 2);
        for (i, v) in basis.iter().take(y.len()).enumerate() {
            top += v * y[i];
        }
        let norm = top.norm();
        (value, top / norm, residual)
    }
}

/// Lanczos steps between residual checks on the tridiagonal projection.
const CONVERGENCE_CHECK_EVERY: usize = 5;

/// Largest eigenvalue of the symmetric tridiagonal matrix and its eigenvector.
fn top_ritz_pair(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let m = alpha.len();
    let t = Matrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i == j + 1 {
            beta[j]
        } else if j == i + 1 {
            beta[i]
        } else {
            0.0
        }
    });
    let eig = NaSymmetricEigen::new(t);
    let (imax, value) =
        eig.eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| {
                if *v > acc.1 {
                    (i, *v)
                } else {
                    acc
                }
            });
    (
        value,
        eig.eigenvectors.column(imax).iter().copied().collect(),
    )
}

fn row_sum_norm(m: &Matrix) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
