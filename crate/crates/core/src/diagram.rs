//! Scalar stability functions and the stability diagrams `D_{y,p}`.
//!
//! With `That(y) = y T_p(y)`, one step on the split test equation multiplies
//! by `R_p(That(y) (1 + mu))`, where `R_p` is the degree-`p` truncated
//! exponential. The diagram is the set of `mu` with `Re mu >= -1` for which
//! that factor has modulus at most one.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::linalg::Schur;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::tase::TaseOperator;

/// Additive tolerance for membership tests.
pub const MEMBERSHIP_TOL: f64 = 1e-12;
/// Largest accepted residual `|R~T(mu) - e^{i theta}|` on a boundary point.
pub const BOUNDARY_RESIDUAL_TOL: f64 = 1e-8;

fn factorial(q: usize) -> f64 {
    (1..=q).map(|v| v as f64).product()
}

/// Truncated exponential `1 + z + ... + z^p / p!` (Horner form).
pub fn rp(p: usize, z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for q in (1..=p).rev() {
        acc = Complex64::new(1.0, 0.0) + acc * z / q as f64;
    }
    acc
}

/// `|R_p(z)| <= 1` with `Re z <= 0`, both up to [`MEMBERSHIP_TOL`].
pub fn in_rp(p: usize, z: Complex64) -> bool {
    z.re <= MEMBERSHIP_TOL && rp(p, z).norm() <= 1.0 + MEMBERSHIP_TOL
}

/// Stability function of the method with operator matrix equal to the
/// exact Jacobian: `R_p(T_p(z) z)`.
pub fn rt(op: &TaseOperator, z: Complex64) -> Result<Complex64> {
    let w = op.scalar(z)? * z;
    Ok(rp(op.order(), w))
}

/// `lim_{z -> -inf} R_p(T_p(z) z)` along the real axis.
pub fn rt_at_infinity(op: &TaseOperator) -> f64 {
    rp(op.order(), Complex64::new(op.hat_t_limit(), 0.0)).re
}

/// Real half-extent of the explicit RK region: `R_p(-c) = +-1`.
///
/// The values for `p = 3, 4` are the closed-form real roots.
pub fn real_extent(p: usize) -> Result<f64> {
    match p {
        1 | 2 => Ok(2.0),
        3 => {
            let c = (17f64.sqrt() - 4.0).cbrt();
            Ok(-(c - 1.0 - 1.0 / c))
        }
        4 => {
            let s = -43.0 + 9.0 * 29f64.sqrt();
            Ok(-(4f64.cbrt() * s.cbrt() - 4.0 - 10.0 * (2.0 / s).cbrt()) / 3.0)
        }
        _ => Err(Error::UnsupportedOrder(p)),
    }
}

/// Step-size parameter `y = k lambda` of a diagram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Depth {
    Finite(f64),
    Infinite,
}

/// A diagram `D_{y,p}` (or `D_{inf,p}`) for a given operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagramQuery {
    op: TaseOperator,
    depth: Depth,
    hat_t: f64,
}

impl DiagramQuery {
    pub fn new(op: &TaseOperator, depth: Depth) -> Result<Self> {
        let p = op.order();
        if !(1..=4).contains(&p) {
            return Err(Error::UnsupportedOrder(p));
        }
        let hat_t = match depth {
            Depth::Finite(y) => op.hat_t(y)?,
            Depth::Infinite => op.hat_t_limit(),
        };
        Ok(Self {
            op: op.clone(),
            depth,
            hat_t,
        })
    }

    pub fn finite(op: &TaseOperator, y: f64) -> Result<Self> {
        Self::new(op, Depth::Finite(y))
    }

    pub fn infinite(op: &TaseOperator) -> Self {
        Self::new(op, Depth::Infinite).expect("orders 1..=4 only reach here through TaseOperator")
    }

    pub fn order(&self) -> usize {
        self.op.order()
    }

    pub fn depth(&self) -> Depth {
        self.depth
    }

    pub fn operator(&self) -> &TaseOperator {
        &self.op
    }

    /// `That(y)`, or its limit for the infinite diagram.
    pub fn hat_t(&self) -> f64 {
        self.hat_t
    }
}

/// `R_p(That(y) (1 + mu))`.
pub fn rt_tilde(q: &DiagramQuery, mu: Complex64) -> Complex64 {
    rp(q.order(), (mu + 1.0) * q.hat_t)
}

pub fn in_diagram(q: &DiagramQuery, mu: Complex64) -> bool {
    mu.re >= -1.0 - MEMBERSHIP_TOL && rt_tilde(q, mu).norm() <= 1.0 + MEMBERSHIP_TOL
}

/// Signed slack `min(1 - |R~T|, Re mu + 1)`; nonnegative iff `mu` is a member
/// (up to tolerance).
pub fn membership_margin(q: &DiagramQuery, mu: Complex64) -> f64 {
    (1.0 - rt_tilde(q, mu).norm()).min(mu.re + 1.0)
}

/// Sampled points of the level curve `|R~T| = 1` inside `Re mu >= -1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCurve {
    pub thetas: Vec<f64>,
    pub points: Vec<Complex64>,
    pub residuals: Vec<f64>,
}

impl BoundaryCurve {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// CSV with header `theta,re_mu,im_mu,residual`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("theta,re_mu,im_mu,residual\n");
        for ((t, z), r) in self.thetas.iter().zip(&self.points).zip(&self.residuals) {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                fmt_e(*t),
                fmt_e(z.re),
                fmt_e(z.im),
                fmt_e(*r)
            );
        }
        s
    }
}

/// C-style `%.16e` formatting.
pub fn fmt_e(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let s = format!("{v:.16e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", exp.abs())
}

/// Roots of `sum_q coeffs[q] z^q` via the eigenvalues of the companion matrix.
fn poly_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let deg = coeffs.len() - 1;
    let lead = coeffs[deg];
    if deg == 1 {
        return Ok(vec![-coeffs[0] / lead]);
    }
    let mut m = CMatrix::zeros(deg, deg);
    for i in 1..deg {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..deg {
        m[(i, deg - 1)] = -coeffs[i] / lead;
    }
    let schur = Schur::try_new(m, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NoConvergence("companion matrix".into()))?;
    let (_, t) = schur.unpack();
    Ok(t.diagonal().iter().copied().collect())
}

/// Newton refinement of a root of `R_p(z) = target`.
fn polish(p: usize, target: Complex64, mut z: Complex64) -> Complex64 {
    for _ in 0..3 {
        let f = rp(p, z) - target;
        let df = rp(p - 1, z);
        if df.norm() == 0.0 {
            break;
        }
        let next = z - f / df;
        if !next.re.is_finite() || !next.im.is_finite() {
            break;
        }
        if (rp(p, next) - target).norm() > f.norm() {
            break;
        }
        z = next;
    }
    z
}

/// All admissible roots of `R~T(mu) = e^{i theta}` for one angle.
pub fn boundary_points_at(q: &DiagramQuery, theta: f64) -> Result<Vec<(Complex64, f64)>> {
    let p = q.order();
    let target = Complex64::from_polar(1.0, theta);
    let mut coeffs: Vec<Complex64> = (0..=p)
        .map(|k| Complex64::new(1.0 / factorial(k), 0.0))
        .collect();
    coeffs[0] -= target;
    let mut out = Vec::with_capacity(p);
    for root in poly_roots(&coeffs)? {
        let z = polish(p, target, root);
        let mu = Complex64::new(-1.0, 0.0) + z / q.hat_t;
        if mu.re < -1.0 - MEMBERSHIP_TOL {
            continue;
        }
        let res = (rt_tilde(q, mu) - target).norm();
        if res <= BOUNDARY_RESIDUAL_TOL {
            out.push((mu, res));
        }
    }
    if out.is_empty() {
        return Err(Error::RootFindingFailure(theta));
    }
    Ok(out)
}

/// Samples the boundary at `n_theta` equispaced angles in `[0, 2 pi)`.
pub fn boundary(q: &DiagramQuery, n_theta: usize) -> Result<BoundaryCurve> {
    if n_theta < 8 {
        return Err(Error::InvalidInput(format!(
            "n_theta = {n_theta} must be at least 8"
        )));
    }
    let mut curve = BoundaryCurve {
        thetas: vec![],
        points: vec![],
        residuals: vec![],
    };
    for i in 0..n_theta {
        let theta = 2.0 * PI * i as f64 / n_theta as f64;
        for (mu, res) in boundary_points_at(q, theta)? {
            curve.thetas.push(theta);
            curve.points.push(mu);
            curve.residuals.push(res);
        }
    }
    Ok(curve)
}

/// Real-axis intersections `(-1, mu_r)` of the diagram.
pub fn real_axis_endpoints(q: &DiagramQuery) -> Result<(f64, f64)> {
    let c = real_extent(q.order())?;
    Ok((-1.0, -1.0 - c / q.hat_t))
}

/// Right endpoint of the infinite diagram, `mu_p*`.
pub fn mu_star(op: &TaseOperator) -> Result<f64> {
    Ok(real_axis_endpoints(&DiagramQuery::infinite(op))?.1)
}

/// Largest step size keeping every real `mu_i` inside `D_{k lambda_i, p}`.
///
/// Returns `f64::INFINITY` when every `mu_i <= mu_p*`. For the tabulated
/// second-order weights the closed form is used; otherwise the monotone
/// equation `That(k lambda)(1 + mu) + c_p = 0` is bisected.
pub fn kstar_real(op: &TaseOperator, pairs: &[(f64, f64)]) -> Result<f64> {
    let p = op.order();
    let c = real_extent(p)?;
    let limit = mu_star(op)?;
    for &(lambda, mu) in pairs {
        if !(lambda < 0.0) {
            return Err(Error::InvalidInput(format!(
                "eigenvalue {lambda} must be negative"
            )));
        }
        if mu < -1.0 || !mu.is_finite() {
            return Err(Error::InvalidMu(mu));
        }
    }
    let mut best = f64::INFINITY;
    for &(lambda, mu) in pairs {
        if mu <= limit {
            continue;
        }
        let k = if p == 2 && op.is_standard() {
            (-8.0 + mu - (28.0 + 20.0 * mu + mu * mu).sqrt()) / (9.0 * lambda * (mu - 1.0))
        } else {
            kstar_bisect(op, c, lambda, mu)?
        };
        best = best.min(k);
    }
    Ok(best)
}

fn kstar_bisect(op: &TaseOperator, c: f64, lambda: f64, mu: f64) -> Result<f64> {
    let g = |k: f64| -> Result<f64> { Ok(op.hat_t(k * lambda)? * (1.0 + mu) + c) };
    let mut lo = 0.0;
    let mut hi = 1.0 / lambda.abs();
    let mut tries = 0;
    while g(hi)? > 0.0 {
        lo = hi;
        hi *= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(Error::NoConvergence(
                "no sign change for the step-size bound".into(),
            ));
        }
    }
    while hi - lo > 1e-15 * hi {
        let mid = 0.5 * (lo + hi);
        if g(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
