//! Method-of-lines discretizations: Fisher-Kolmogorov, Burgers, FitzHugh-Nagumo.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::system::{SplitProblem, VectorField};

/// Fourth-order periodic second derivative, offsets -2..=2, times `1/h^2`.
pub const LAPLACIAN_4TH: [f64; 5] = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
/// Fourth-order periodic first derivative, offsets -2..=2, times `1/h`.
pub const FIRST_DERIVATIVE_4TH: [f64; 5] = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];

/// Dense periodic matrix with `scale * stencil[o + 2]` at column `i + o (mod m)`.
pub fn circulant(m: usize, stencil: &[f64; 5], scale: f64) -> Matrix {
    let mut out = Matrix::zeros(m, m);
    for i in 0..m {
        for (s, c) in stencil.iter().enumerate() {
            let j = (i + m + s - 2) % m;
            out[(i, j)] += scale * c;
        }
    }
    out
}

#[inline]
fn wrap(i: usize, s: usize, m: usize) -> usize {
    (i + m + s - 2) % m
}

fn stencil_apply(stencil: &[f64; 5], scale: f64, u: &[f64], i: usize) -> f64 {
    let m = u.len();
    stencil
        .iter()
        .enumerate()
        .map(|(s, c)| c * u[wrap(i, s, m)])
        .sum::<f64>()
        * scale
}

fn check_grid(m: usize, min: usize) -> Result<()> {
    if m < min {
        return Err(Error::InvalidInput(format!(
            "grid count M = {m} must be at least {min}"
        )));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{name} = {v} must be positive"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkParams {
    pub m: usize,
    pub diffusion: f64,
    pub eps: f64,
}

impl Default for FkParams {
    fn default() -> Self {
        Self {
            m: 100,
            diffusion: 2e-2,
            eps: 1e-2,
        }
    }
}

struct FkField {
    n: usize,
    r: f64,
    eps: f64,
}

impl VectorField for FkField {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, _t: f64, u: &[f64], out: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let left = if i == 0 { 1.0 } else { u[i - 1] };
            let right = if i + 1 == n { 1.0 } else { u[i + 1] };
            out[i] = self.r * (left - 2.0 * u[i] + right) + self.eps * u[i] * (1.0 - u[i]);
        }
    }

    fn jacobian(&self, _t: f64, u: &[f64]) -> Matrix {
        let mut j = fk_operator(self.n, self.r);
        for i in 0..self.n {
            j[(i, i)] += self.eps * (1.0 - 2.0 * u[i]);
        }
        j
    }
}

fn fk_operator(n: usize, r: f64) -> Matrix {
    Matrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => -2.0 * r,
        1 => r,
        _ => 0.0,
    })
}

/// `u_t = D u_xx + eps u (1 - u)` on `(-1, 1)` with `u = 1` at both ends.
///
/// `M - 1` interior unknowns, `A = (D/h^2) tridiag(1, -2, 1)`, and the
/// boundary values enter `f` as a constant vector.
pub fn fisher_kolmogorov(params: FkParams) -> Result<SplitProblem> {
    let FkParams { m, diffusion, eps } = params;
    check_grid(m, 3)?;
    check_positive("D", diffusion)?;
    if !eps.is_finite() {
        return Err(Error::InvalidInput("eps must be finite".into()));
    }
    let h = 2.0 / m as f64;
    let r = diffusion / (h * h);
    let n = m - 1;
    let u0 = Vector::from_fn(n, |i, _| {
        let x = -1.0 + (i + 1) as f64 * h;
        1.0 + 0.5 * (-x).exp() * (PI * x).sin()
    });
    let field = Arc::new(FkField { n, r, eps });
    Ok(
        SplitProblem::new("fk", field, fk_operator(n, r), u0, 0.0, 20.0)?
            .with_param("M", m as f64)
            .with_param("h", h)
            .with_param("D", diffusion)
            .with_param("eps", eps),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurgersParams {
    pub m: usize,
    pub eps: f64,
    pub kappa: f64,
}

impl Default for BurgersParams {
    fn default() -> Self {
        Self {
            m: 1024,
            eps: 1e-1,
            kappa: 1.0,
        }
    }
}

struct BurgersField {
    m: usize,
    eps: f64,
    h: f64,
}

impl VectorField for BurgersField {
    fn dim(&self) -> usize {
        self.m
    }

    fn eval(&self, _t: f64, u: &[f64], out: &mut [f64]) {
        let sq: Vec<f64> = u.iter().map(|v| v * v).collect();
        let (d2, d1) = (self.eps / (self.h * self.h), 0.5 / self.h);
        for i in 0..self.m {
            out[i] = stencil_apply(&LAPLACIAN_4TH, d2, u, i)
                - stencil_apply(&FIRST_DERIVATIVE_4TH, d1, &sq, i);
        }
    }

    fn jacobian(&self, _t: f64, u: &[f64]) -> Matrix {
        let m = self.m;
        let (d2, d1) = (self.eps / (self.h * self.h), 1.0 / self.h);
        let mut j = Matrix::zeros(m, m);
        for i in 0..m {
            for s in 0..5 {
                let c = wrap(i, s, m);
                j[(i, c)] += d2 * LAPLACIAN_4TH[s] - d1 * FIRST_DERIVATIVE_4TH[s] * u[c];
            }
        }
        j
    }
}

/// Periodic viscous Burgers `u_t = eps u_xx - (u^2/2)_x` on `[0, 2 pi)`.
///
/// `A = kappa (eps L1 - 2 I)`; `u0 = (1 - cos x) / 2`; `te = 4`.
pub fn burgers(params: BurgersParams) -> Result<SplitProblem> {
    let BurgersParams { m, eps, kappa } = params;
    check_grid(m, 8)?;
    check_positive("eps", eps)?;
    check_positive("kappa", kappa)?;
    let h = 2.0 * PI / m as f64;
    let mut a = circulant(m, &LAPLACIAN_4TH, kappa * eps / (h * h));
    for i in 0..m {
        a[(i, i)] -= 2.0 * kappa;
    }
    let u0 = Vector::from_fn(m, |i, _| 0.5 * (1.0 - (i as f64 * h).cos()));
    let field = Arc::new(BurgersField { m, eps, h });
    Ok(SplitProblem::new("burgers", field, a, u0, 0.0, 4.0)?
        .with_param("M", m as f64)
        .with_param("h", h)
        .with_param("eps", eps)
        .with_param("kappa", kappa))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FhnParams {
    pub m: usize,
    pub diffusion: f64,
    pub a: f64,
    pub b: f64,
    pub tau: f64,
    pub kappa: f64,
}

impl Default for FhnParams {
    fn default() -> Self {
        Self {
            m: 1024,
            diffusion: 0.01,
            a: -0.7,
            b: 0.8,
            tau: 12.5,
            kappa: 1.2,
        }
    }
}

struct FhnField {
    m: usize,
    d2: f64,
    a: f64,
    b: f64,
    tau: f64,
}

impl VectorField for FhnField {
    fn dim(&self) -> usize {
        2 * self.m
    }

    fn eval(&self, _t: f64, u: &[f64], out: &mut [f64]) {
        let m = self.m;
        let (v, w) = u.split_at(m);
        let (dv, dw) = out.split_at_mut(m);
        for i in 0..m {
            dv[i] = stencil_apply(&LAPLACIAN_4TH, self.d2, v, i) + v[i] - v[i].powi(3) / 3.0 - w[i];
            dw[i] = (v[i] - self.a - self.b * w[i]) / self.tau;
        }
    }

    fn jacobian(&self, _t: f64, u: &[f64]) -> Matrix {
        let m = self.m;
        let mut j = Matrix::zeros(2 * m, 2 * m);
        for i in 0..m {
            for s in 0..5 {
                j[(i, wrap(i, s, m))] += self.d2 * LAPLACIAN_4TH[s];
            }
            j[(i, i)] += 1.0 - u[i] * u[i];
            j[(i, m + i)] = -1.0;
            j[(m + i, i)] = 1.0 / self.tau;
            j[(m + i, m + i)] = -self.b / self.tau;
        }
        j
    }
}

fn pulse(x: f64) -> f64 {
    1.0 + (-10.0 * PI * x.sinh()).exp()
}

/// Periodic FitzHugh-Nagumo on `[0, 10)`, state `(v, w)` of length `2M`.
///
/// `A = kappa blkdiag(D L1 - I, -(b/tau) I)`.
pub fn fitzhugh_nagumo(params: FhnParams) -> Result<SplitProblem> {
    let FhnParams {
        m,
        diffusion,
        a,
        b,
        tau,
        kappa,
    } = params;
    check_grid(m, 8)?;
    check_positive("D", diffusion)?;
    check_positive("b", b)?;
    check_positive("tau", tau)?;
    check_positive("kappa", kappa)?;
    if !a.is_finite() {
        return Err(Error::InvalidInput("a must be finite".into()));
    }
    let h = 10.0 / m as f64;
    let d2 = diffusion / (h * h);
    let mut op = Matrix::zeros(2 * m, 2 * m);
    op.view_mut((0, 0), (m, m))
        .copy_from(&circulant(m, &LAPLACIAN_4TH, kappa * d2));
    for i in 0..m {
        op[(i, i)] -= kappa;
        op[(m + i, m + i)] = -kappa * b / tau;
    }
    let u0 = Vector::from_fn(2 * m, |i, _| {
        let x = (i % m) as f64 * h;
        if i < m {
            -1.5 + 3.0 / pulse(x - 1.5) - 3.0 / pulse(x - 2.0)
        } else {
            -3.0 / (4.0 * pulse(x - 1.5))
        }
    });
    let field = Arc::new(FhnField { m, d2, a, b, tau });
    Ok(SplitProblem::new("fhn", field, op, u0, 0.0, 200.0)?
        .with_param("M", m as f64)
        .with_param("h", h)
        .with_param("D", diffusion)
        .with_param("a", a)
        .with_param("b", b)
        .with_param("tau", tau)
        .with_param("kappa", kappa))
}
