//! Jacobian splittings `J = A + B` and their stability certificates.
//!
//! Commuting splittings are analysed through the generalized eigenvalues
//! `mu(A, B) = eig(A^{-1} B)`. Non-commuting ones use the weighted field of
//! values `W_q(-A, B) = W((-A)^{q/2-1} B (-A)^{-q/2})`: if `-W_q` sits inside
//! a diagram, so does every mode of every step.

mod fov;
mod verdict;

use std::sync::OnceLock;

use num_complex::Complex64;

pub use fov::{fov, FovBoundary, DENSE_FOV_LIMIT};
pub use verdict::{Condition, StabilityVerdict, VerdictParams, INCONCLUSIVE_MARGIN};

use crate::diagram::{membership_margin, rp, DiagramQuery};
use crate::error::{Error, Result};
use crate::linalg::{
    commutator_norm, eig_general, eig_symmetric, ensure_square, is_symmetric, symmetry_deviation,
    Factorization, Matrix, SymmetricEigen, SYMMETRY_TOL,
};
use crate::tase::TaseOperator;

/// Relative commutator threshold for simultaneous diagonalizability.
pub const COMMUTING_TOL: f64 = 1e-10;
/// Interior hull samples added to every field-of-values inclusion test.
pub const INTERIOR_SAMPLES: usize = 64;
/// Angle count used when none is supplied.
pub const DEFAULT_N_THETA: usize = 720;

/// `A` (symmetric) and `B = J - A`.
#[derive(Debug, Clone)]
pub struct Splitting {
    a: Matrix,
    b: Matrix,
    a_eig: OnceLock<std::result::Result<SymmetricEigen, Error>>,
    commutator: OnceLock<f64>,
}

impl Splitting {
    pub fn new(a: Matrix, b: Matrix) -> Result<Self> {
        ensure_square(&a, "A")?;
        ensure_square(&b, "B")?;
        if a.nrows() != b.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "A is {}x{} but B is {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "splitting has non-finite entries".into(),
            ));
        }
        let dev = symmetry_deviation(&a);
        if dev > SYMMETRY_TOL {
            return Err(Error::NotSymmetric(dev));
        }
        Ok(Self {
            a,
            b,
            a_eig: OnceLock::new(),
            commutator: OnceLock::new(),
        })
    }

    /// Splitting of a full Jacobian around the chosen `A`.
    pub fn from_jacobian(a: Matrix, j: &Matrix) -> Result<Self> {
        if a.shape() != j.shape() {
            return Err(Error::DimensionMismatch("A and J differ in size".into()));
        }
        let b = j - &a;
        Self::new(a, b)
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn j(&self) -> Matrix {
        &self.a + &self.b
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Cached eigen-decomposition of `A`; requires `A` negative definite.
    pub fn a_eigen(&self) -> Result<&SymmetricEigen> {
        let cached = self.a_eig.get_or_init(|| {
            let e = eig_symmetric(&self.a)?;
            if e.dim() > 0 && !(e.max() < 0.0) {
                return Err(Error::NotNegativeDefinite(e.max()));
            }
            Ok(e)
        });
        cached.as_ref().map_err(Clone::clone)
    }

    /// Most negative eigenvalue of `A`.
    pub fn lambda_min(&self) -> Result<f64> {
        Ok(self.a_eigen()?.min())
    }

    /// `||AB - BA||_F / (||A||_F ||B||_F)`, zero when either factor vanishes.
    pub fn commutator_ratio(&self) -> f64 {
        *self.commutator.get_or_init(|| {
            let scale = self.a.norm() * self.b.norm();
            if scale == 0.0 {
                0.0
            } else {
                commutator_norm(&self.a, &self.b) / scale
            }
        })
    }

    pub fn is_commuting(&self) -> bool {
        self.commutator_ratio() <= COMMUTING_TOL
    }

    fn require_commuting(&self) -> Result<()> {
        if self.is_commuting() {
            Ok(())
        } else {
            Err(Error::NotSimultaneouslyDiagonalizable(
                self.commutator_ratio(),
            ))
        }
    }

    /// Restriction to the rows and columns in `idx` (sub-block analysis).
    pub fn restrict(&self, idx: &[usize]) -> Result<Splitting> {
        let n = self.dim();
        if idx.is_empty() || idx.iter().any(|&i| i >= n) {
            return Err(Error::InvalidInput(format!(
                "sub-block indices must lie in 0..{n}"
            )));
        }
        let m = idx.len();
        let a = Matrix::from_fn(m, m, |i, j| self.a[(idx[i], idx[j])]);
        let b = Matrix::from_fn(m, m, |i, j| self.b[(idx[i], idx[j])]);
        Splitting::new(a, b)
    }

    /// Same `J` with `A` replaced by `kappa A`.
    pub fn rescaled(&self, kappa: f64) -> Result<Splitting> {
        if !(kappa > 0.0) {
            return Err(Error::InvalidInput(format!(
                "kappa = {kappa} must be positive"
            )));
        }
        Splitting::from_jacobian(&self.a * kappa, &self.j())
    }
}

/// One common eigenpair `(lambda_i, gamma_i)` and `mu_i = gamma_i / lambda_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub lambda: f64,
    pub gamma: Complex64,
    pub mu: Complex64,
}

/// Eigenvalues of `A^{-1} B` with multiplicity.
pub fn generalized_eigenvalues(s: &Splitting) -> Result<Vec<Complex64>> {
    let n = s.dim();
    if s.b.iter().all(|v| *v == 0.0) {
        return Ok(vec![Complex64::new(0.0, 0.0); n]);
    }
    if is_symmetric(&s.b) {
        // A^{-1} B is similar to -(-A)^{-1/2} B (-A)^{-1/2}, which is symmetric
        if let Ok(e) = s.a_eigen() {
            let c = e.vectors.transpose() * &s.b * &e.vectors;
            let d: Vec<f64> = e.values.iter().map(|l| 1.0 / (-l).sqrt()).collect();
            let x = Matrix::from_fn(n, n, |i, j| -d[i] * c[(i, j)] * d[j]);
            let x = (&x + x.transpose()) * 0.5;
            let vals = eig_symmetric(&x)?.values;
            return Ok(vals.into_iter().map(|v| Complex64::new(v, 0.0)).collect());
        }
    }
    let f = Factorization::new(&s.a).map_err(|_| Error::SingularA)?;
    let mut x = s.b.clone();
    for mut col in x.column_iter_mut() {
        let mut v: Vec<f64> = col.iter().copied().collect();
        f.solve_in_place(&mut v).map_err(|_| Error::SingularA)?;
        col.copy_from_slice(&v);
    }
    Ok(eig_general(&x)?.eigenvalues)
}

/// Pairs eigenvalues of `A` and `B` through a shared eigenbasis.
///
/// Each eigenspace of `A` is invariant under a commuting `B`; the spectrum of
/// `B` restricted to it supplies the partners.
pub fn paired_modes(s: &Splitting) -> Result<Vec<Mode>> {
    s.require_commuting()?;
    let e = s.a_eigen()?;
    let n = s.dim();
    let scale = e.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut modes = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (e.values[end] - e.values[start]).abs() <= 1e-10 * scale {
            end += 1;
        }
        let q = e.vectors.columns(start, end - start);
        let block = q.transpose() * &s.b * q;
        let lambda = e.values[start..end].iter().sum::<f64>() / (end - start) as f64;
        let gammas: Vec<Complex64> = if end - start == 1 {
            vec![Complex64::new(block[(0, 0)], 0.0)]
        } else {
            eig_general(&block)?.eigenvalues
        };
        for gamma in gammas {
            modes.push(Mode {
                lambda,
                gamma,
                mu: gamma / lambda,
            });
        }
        start = end;
    }
    Ok(modes)
}

fn params(op: &TaseOperator, k: Option<f64>, q: Option<f64>) -> VerdictParams {
    VerdictParams {
        p: op.order(),
        k,
        q,
        kappa: None,
    }
}

fn check_step(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "step size {k} must be positive"
        )))
    }
}

/// Per-mode membership `mu_i in D_{k lambda_i, p}`: necessary and sufficient
/// for commuting splittings.
pub fn check_prop41(s: &Splitting, op: &TaseOperator, k: f64) -> Result<StabilityVerdict> {
    check_step(k)?;
    let modes = paired_modes(s)?;
    let mut margins = Vec::with_capacity(modes.len());
    for m in modes {
        let q = DiagramQuery::finite(op, k * m.lambda)?;
        margins.push((m.mu, membership_margin(&q, m.mu)));
    }
    Ok(StabilityVerdict::from_margins(
        Condition::PairedModes,
        params(op, Some(k), None),
        margins,
    ))
}

/// Every generalized eigenvalue inside the diagram of the stiffest mode.
pub fn check_thm44(s: &Splitting, op: &TaseOperator, k: f64) -> Result<StabilityVerdict> {
    check_step(k)?;
    s.require_commuting()?;
    let q = DiagramQuery::finite(op, k * s.lambda_min()?)?;
    let mus = generalized_eigenvalues(s)?;
    Ok(StabilityVerdict::membership(
        Condition::StiffestMode,
        params(op, Some(k), None),
        &q,
        mus,
    ))
}

/// Every generalized eigenvalue inside the infinite diagram.
pub fn check_thm45_unconditional(s: &Splitting, op: &TaseOperator) -> Result<StabilityVerdict> {
    s.require_commuting()?;
    s.a_eigen()?;
    let q = DiagramQuery::infinite(op);
    let mus = generalized_eigenvalues(s)?;
    Ok(StabilityVerdict::membership(
        Condition::Unconditional,
        params(op, None, None),
        &q,
        mus,
    ))
}

/// `W_q(-A, B)` computed on the unitarily similar matrix
/// `Lambda^{q/2-1} (Q^T B Q) Lambda^{-q/2}` with `-A = Q Lambda Q^T`.
pub fn fov_q(s: &Splitting, q: f64, n_theta: usize) -> Result<FovBoundary> {
    fov(&weighted_matrix(s, q)?, n_theta)
}

/// The matrix whose field of values is `W_q(-A, B)`, in the eigenbasis of `A`.
pub fn weighted_matrix(s: &Splitting, q: f64) -> Result<Matrix> {
    if !q.is_finite() {
        return Err(Error::InvalidInput(format!("q = {q} must be finite")));
    }
    let e = s.a_eigen()?;
    let n = s.dim();
    let (lo, hi) = (-e.max(), -e.min());
    if lo <= 1e-12 * hi {
        return Err(Error::IllConditioned(format!(
            "eigenvalue ratio {:e} of -A",
            lo / hi
        )));
    }
    let left: Vec<f64> = e.values.iter().map(|l| (-l).powf(0.5 * q - 1.0)).collect();
    let right: Vec<f64> = e.values.iter().map(|l| (-l).powf(-0.5 * q)).collect();
    if left
        .iter()
        .chain(&right)
        .any(|v| !v.is_finite() || *v == 0.0)
    {
        return Err(Error::IllConditioned(format!("powers of -A for q = {q}")));
    }
    let c = e.vectors.transpose() * &s.b * &e.vectors;
    Ok(Matrix::from_fn(n, n, |i, j| left[i] * c[(i, j)] * right[j]))
}

/// Boundary support points plus interior hull samples of `W`, mapped to `mu = -w`.
fn fov_mus(w: &FovBoundary) -> Vec<Complex64> {
    let mut pts = w.negated();
    pts.extend(w.interior_samples(INTERIOR_SAMPLES).into_iter().map(|z| -z));
    pts
}

fn require_symmetric_negative(s: &Splitting) -> Result<()> {
    s.a_eigen().map(|_| ())
}

/// `-W_q(-A, B)` inside `D_{k lambda_1, p}` for one `q`.
pub fn check_thm53(
    s: &Splitting,
    op: &TaseOperator,
    k: f64,
    q: f64,
    n_theta: usize,
) -> Result<StabilityVerdict> {
    check_step(k)?;
    require_symmetric_negative(s)?;
    let w = fov_q(s, q, n_theta)?;
    check_thm53_with(s, op, k, q, &w)
}

/// Same as [`check_thm53`] with a precomputed `W_q(-A, B)`.
pub fn check_thm53_with(
    s: &Splitting,
    op: &TaseOperator,
    k: f64,
    q: f64,
    w: &FovBoundary,
) -> Result<StabilityVerdict> {
    check_step(k)?;
    let query = DiagramQuery::finite(op, k * s.lambda_min()?)?;
    Ok(StabilityVerdict::membership(
        Condition::FovStiffestMode,
        params(op, Some(k), Some(q)),
        &query,
        fov_mus(w),
    ))
}

/// Sufficient (field of values) and necessary (spectrum) conditions for
/// unconditional stability.
pub fn check_thm55(
    s: &Splitting,
    op: &TaseOperator,
    q: f64,
    n_theta: usize,
) -> Result<(StabilityVerdict, StabilityVerdict)> {
    require_symmetric_negative(s)?;
    let w = fov_q(s, q, n_theta)?;
    let mus = generalized_eigenvalues(s)?;
    Ok((
        check_thm55_sufficient_with(op, q, &w),
        check_thm55_necessary_with(op, &mus),
    ))
}

pub fn check_thm55_sufficient_with(op: &TaseOperator, q: f64, w: &FovBoundary) -> StabilityVerdict {
    let query = DiagramQuery::infinite(op);
    StabilityVerdict::membership(
        Condition::FovUnconditional,
        params(op, None, Some(q)),
        &query,
        fov_mus(w),
    )
}

pub fn check_thm55_necessary_with(op: &TaseOperator, mus: &[Complex64]) -> StabilityVerdict {
    let query = DiagramQuery::infinite(op);
    StabilityVerdict::membership(
        Condition::SpectrumUnconditional,
        params(op, None, None),
        &query,
        mus.iter().copied(),
    )
}

/// `mu(kappa A, J - kappa A) = -1 + mu(A, J) / kappa`.
pub fn kappa_transform_mu(mu_aj: &[Complex64], kappa: f64) -> Vec<Complex64> {
    mu_aj.iter().map(|m| m / kappa - 1.0).collect()
}

/// `W_q(-kappa A, J - kappa A) = 1 + W_q(-A, J) / kappa`.
pub fn kappa_transform_fov(w_aj: &FovBoundary, kappa: f64) -> FovBoundary {
    w_aj.affine(kappa, Complex64::new(1.0, 0.0))
}

/// `RT_p(kA, kB) = sum_{q <= p} Z^q / q!` with `Z = k T_p(kA) (A + B)`.
pub fn amplification_matrix(s: &Splitting, op: &TaseOperator, k: f64) -> Result<Matrix> {
    check_step(k)?;
    let n = s.dim();
    let t = op.matrix(&s.a, k)?;
    let z = t * s.j() * k;
    let mut out = Matrix::identity(n, n);
    let mut term = Matrix::identity(n, n);
    for q in 1..=op.order() {
        term = &term * &z / q as f64;
        out += &term;
    }
    Ok(out)
}

/// `rho(RT_p(kA, kB)) <= 1 + 1e-10`.
///
/// Defective unimodular eigenvalues would still grow linearly; a growth
/// probe on `||RT^256||` is logged but does not change the verdict.
pub fn spectral_radius_check(s: &Splitting, op: &TaseOperator, k: f64) -> Result<StabilityVerdict> {
    let rt = amplification_matrix(s, op, k)?;
    let eig = eig_general(&rt)?;
    let dominant = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(Complex64::new(0.0, 0.0), |a, z| {
            if z.norm() > a.norm() {
                z
            } else {
                a
            }
        });
    let rho = dominant.norm();
    let holds = rho <= 1.0 + 1e-10;
    if holds {
        let growth = power_growth(&rt, 8);
        if growth > 10.0 * (s.dim() as f64).sqrt() {
            log::warn!("spectral radius {rho} but ||RT^256|| = {growth:e}: not power bounded");
        } else {
            log::debug!("||RT^256|| = {growth:e}");
        }
    }
    let margin = 1.0 - rho;
    Ok(StabilityVerdict {
        condition: Condition::SpectralRadius,
        holds,
        margin,
        witness: (!holds).then_some([dominant.re, dominant.im]),
        params: params(op, Some(k), None),
        inconclusive: margin.abs() < INCONCLUSIVE_MARGIN,
        samples: eig.eigenvalues.len(),
        experimental: false,
    })
}

/// Spectral norm bound `||M^(2^squarings)||_F`.
pub fn power_growth(m: &Matrix, squarings: u32) -> f64 {
    let mut p = m.clone();
    for _ in 0..squarings {
        p = &p * &p;
        if !p.iter().all(|v| v.is_finite()) {
            return f64::INFINITY;
        }
    }
    p.norm()
}

/// Modulus of the per-mode amplification `R_p(That(k lambda)(1 + mu))`.
pub fn mode_amplification(op: &TaseOperator, k: f64, m: &Mode) -> Result<f64> {
    let t = op.hat_t(k * m.lambda)?;
    Ok(rp(op.order(), (m.mu + 1.0) * t).norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex41() -> Splitting {
        let a = Matrix::from_row_slice(
            3,
            3,
            &[-40.0, 30.0, 30.0, 30.0, -35.5, -34.5, 30.0, -34.5, -35.5],
        );
        let b = Matrix::from_row_slice(
            3,
            3,
            &[
                -74.0 / 3.0,
                38.0 / 3.0,
                38.0 / 3.0,
                38.0 / 3.0,
                -233.0 / 12.0,
                -215.0 / 12.0,
                38.0 / 3.0,
                -215.0 / 12.0,
                -233.0 / 12.0,
            ],
        );
        Splitting::new(a, b).unwrap()
    }

    fn ex52() -> Splitting {
        let a = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-10.0, -4.0, -30.0]));
        let b = Matrix::from_row_slice(3, 3, &[-3.0, 15.0, 0.0, -15.0, -3.0, 0.0, 0.0, 0.0, -15.0]);
        Splitting::new(a, b).unwrap()
    }

    fn op(p: usize) -> TaseOperator {
        TaseOperator::standard(p).unwrap()
    }

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn generalized_eigenvalues_commuting_example() {
        let mu = sorted(generalized_eigenvalues(&ex41()).unwrap());
        for (m, want) in mu.iter().zip([0.5, 1.2, 1.5]) {
            assert!((m.re - want).abs() < 1e-10 && m.im.abs() < 1e-10, "{m}");
        }
    }

    #[test]
    fn generalized_eigenvalues_block_example() {
        let mu = sorted(generalized_eigenvalues(&ex52()).unwrap());
        assert!((mu[0].re - 0.5).abs() < 1e-12);
        let im = (5.85_f64 - 0.525 * 0.525).sqrt();
        for m in &mu[1..] {
            assert!((m.re - 0.525).abs() < 1e-12);
            assert!((m.im.abs() - im).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_b_gives_zero_spectrum() {
        let s = Splitting::new(ex41().a().clone(), Matrix::zeros(3, 3)).unwrap();
        assert!(generalized_eigenvalues(&s)
            .unwrap()
            .iter()
            .all(|m| m.norm() == 0.0));
        for p in 2..=4 {
            assert!(check_prop41(&s, &op(p), 5.0).unwrap().holds);
            assert!(check_thm44(&s, &op(p), 5.0).unwrap().holds);
            assert!(check_thm45_unconditional(&s, &op(p)).unwrap().holds);
            assert!(check_thm53(&s, &op(p), 5.0, 1.0, 32).unwrap().holds);
        }
    }

    #[test]
    fn commuting_detection() {
        assert!(ex41().is_commuting());
        assert!(!ex52().is_commuting());
        assert!(matches!(
            check_prop41(&ex52(), &op(2), 0.1),
            Err(Error::NotSimultaneouslyDiagonalizable(_))
        ));
    }

    #[test]
    fn paired_modes_follow_shared_basis() {
        let mut modes = paired_modes(&ex41()).unwrap();
        modes.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        let want = [(-100.0, -50.0), (-10.0, -12.0), (-1.0, -1.5)];
        for (m, (l, g)) in modes.iter().zip(want) {
            assert!((m.lambda - l).abs() < 1e-10 && (m.gamma.re - g).abs() < 1e-10);
        }
    }

    #[test]
    fn paired_modes_at_the_critical_step() {
        let s = ex41();
        let k = 0.7839037085;
        let at = check_prop41(&s, &op(2), k).unwrap();
        assert!(at.holds && at.inconclusive);
        let above = check_prop41(&s, &op(2), 1.1 * k).unwrap();
        assert!(!above.holds);
        let w = above.witness_point().unwrap();
        assert!((w.re - 1.2).abs() < 1e-10);
    }

    #[test]
    fn stiffest_mode_bound_is_set_by_the_largest_ratio() {
        let s = ex41();
        // at a tenth of the paired-mode step, 6/5 sits on the boundary but 3/2 is outside
        let tenth = check_thm44(&s, &op(2), 0.07839037085).unwrap();
        assert!(!tenth.holds);
        assert!((tenth.witness.unwrap()[0] - 1.5).abs() < 1e-10);
        // frozen from an independent root solve of That(-100 k) (1 + 3/2) = -2
        let k = 0.03169352744028893;
        assert!(check_thm44(&s, &op(2), 0.999 * k).unwrap().holds);
        assert!(!check_thm44(&s, &op(2), 1.001 * k).unwrap().holds);
        let unc = check_thm45_unconditional(&s, &op(2)).unwrap();
        assert!(!unc.holds);
        assert!((unc.witness.unwrap()[0] - 1.5).abs() < 1e-10);
    }

    #[test]
    fn half_is_unconditionally_admissible() {
        let a = Matrix::from_element(1, 1, -30.0);
        let b = Matrix::from_element(1, 1, -15.0);
        let s = Splitting::new(a, b).unwrap();
        for p in 2..=4 {
            assert!(check_thm45_unconditional(&s, &op(p)).unwrap().holds);
        }
    }

    #[test]
    fn first_blocks_certified_at_paper_steps() {
        let s = ex52().restrict(&[0, 1]).unwrap();
        let v2 = check_thm53(&s, &op(2), 0.21, 1.0, DEFAULT_N_THETA).unwrap();
        let v3 = check_thm53(&s, &op(3), 0.145, 1.0, DEFAULT_N_THETA).unwrap();
        assert!(v2.holds && v3.holds, "{v2:?} {v3:?}");
        // frozen from the independent dense oracle
        assert!((v2.margin - 0.01297).abs() < 2e-4, "{}", v2.margin);
        assert!((v3.margin - 0.01809).abs() < 2e-4, "{}", v3.margin);
    }

    #[test]
    fn kappa_identities_on_block_example() {
        let base = ex52();
        let kappa = 2.0;
        let j = base.j();
        let s_one = Splitting::from_jacobian(base.a().clone(), &j).unwrap();
        let s_kappa = s_one.rescaled(kappa).unwrap();
        let aj = Splitting::new(base.a().clone(), j.clone()).unwrap();
        let direct = sorted(generalized_eigenvalues(&s_kappa).unwrap());
        let mapped = sorted(kappa_transform_mu(
            &generalized_eigenvalues(&aj).unwrap(),
            kappa,
        ));
        for (d, m) in direct.iter().zip(&mapped) {
            assert!((d - m).norm() < 1e-12);
        }
        let w_direct = fov_q(&s_kappa, 1.0, 64).unwrap();
        let w_mapped = kappa_transform_fov(&fov_q(&aj, 1.0, 64).unwrap(), kappa);
        for (a, b) in w_direct.support.iter().zip(&w_mapped.support) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn kappa_of_zero_jacobian_direction() {
        let m = kappa_transform_mu(&[Complex64::new(0.0, 0.0)], 1.0);
        assert_eq!(m, vec![Complex64::new(-1.0, 0.0)]);
    }

    #[test]
    fn identity_amplification_for_zero_jacobian() {
        let a = ex41().a().clone();
        let s = Splitting::new(a.clone(), -a).unwrap();
        let rt = amplification_matrix(&s, &op(3), 0.4).unwrap();
        assert!((rt - Matrix::identity(3, 3)).norm() < 1e-12);
        let v = spectral_radius_check(&s, &op(3), 0.4).unwrap();
        assert!(v.holds && v.margin.abs() < 1e-12);
    }

    #[test]
    fn spectral_radius_crosses_at_critical_step() {
        let s = ex41();
        assert!(spectral_radius_check(&s, &op(2), 0.7839).unwrap().holds);
        assert!(!spectral_radius_check(&s, &op(2), 0.7840).unwrap().holds);
        assert!(spectral_radius_check(&s, &op(3), 0.28427).unwrap().holds);
        assert!(!spectral_radius_check(&s, &op(3), 0.28429).unwrap().holds);
    }

    #[test]
    fn non_symmetric_or_indefinite_a_is_rejected() {
        let a = Matrix::from_row_slice(2, 2, &[-1.0, 0.5, 0.0, -1.0]);
        assert!(matches!(
            Splitting::new(a, Matrix::zeros(2, 2)),
            Err(Error::NotSymmetric(_))
        ));
        let s = Splitting::new(Matrix::identity(2, 2), Matrix::zeros(2, 2)).unwrap();
        assert!(matches!(
            fov_q(&s, 1.0, 16),
            Err(Error::NotNegativeDefinite(_))
        ));
    }
}
