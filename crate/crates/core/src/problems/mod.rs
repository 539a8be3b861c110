//! Concrete split problems and a name-based registry.

mod nonlinear;
mod pde;

use std::sync::Arc;

pub use nonlinear::{
    fk_fov_bounds, fk_stability_check, safe_xi, scalar_logistic_chi, NonlinearBounds,
};
pub use pde::{
    burgers, circulant, fisher_kolmogorov, fitzhugh_nagumo, BurgersParams, FhnParams, FkParams,
    FIRST_DERIVATIVE_4TH, LAPLACIAN_4TH,
};

use crate::error::{Error, Result};
use crate::linalg::{eig_symmetric, is_symmetric, Factorization, Matrix, Vector};
use crate::system::{FnField, LinearField, SplitProblem};

/// Names accepted by [`by_name`].
pub const PROBLEM_NAMES: [&str; 6] = ["ex41", "ex52", "fk", "burgers", "fhn", "scalar"];

fn ex41_matrices() -> (Matrix, Matrix) {
    let a = Matrix::from_row_slice(
        3,
        3,
        &[
            -40.0,
            30.0,
            30.0,
            30.0,
            -71.0 / 2.0,
            -69.0 / 2.0,
            30.0,
            -69.0 / 2.0,
            -71.0 / 2.0,
        ],
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
    (a, b)
}

fn ex52_matrices() -> (Matrix, Matrix) {
    let a = Matrix::from_diagonal(&Vector::from_vec(vec![-10.0, -4.0, -30.0]));
    let b = Matrix::from_row_slice(3, 3, &[-3.0, 15.0, 0.0, -15.0, -3.0, 0.0, 0.0, 0.0, -15.0]);
    (a, b)
}

fn linear_example(name: &str, a: Matrix, b: Matrix, forcing: f64) -> Result<SplitProblem> {
    let j = &a + &b;
    let g = Vector::from_element(3, forcing);
    let u0 = Vector::from_vec(vec![200.0, 300.0, 100.0]);
    let exact = linear_exact(&j, &g, &u0, 0.0)?;
    let field = Arc::new(LinearField::new(j, g)?);
    Ok(SplitProblem::new(name, field, a, u0, 0.0, 30.0)?
        .with_param("forcing", forcing)
        .with_exact(exact))
}

/// Commuting linear example with `eig(A) = {-100, -10, -1}` and forcing `10 * 1`.
pub fn example41() -> SplitProblem {
    example41_with_forcing(10.0)
}

/// [`example41`] with a different constant forcing (0 for the homogeneous system).
pub fn example41_with_forcing(forcing: f64) -> SplitProblem {
    let (a, b) = ex41_matrices();
    linear_example("ex41", a, b, forcing).expect("fixed example is well formed")
}

/// Non-commuting linear example with `A = diag(-10, -4, -30)`.
pub fn example52() -> SplitProblem {
    example52_with_forcing(10.0)
}

pub fn example52_with_forcing(forcing: f64) -> SplitProblem {
    let (a, b) = ex52_matrices();
    linear_example("ex52", a, b, forcing).expect("fixed example is well formed")
}

/// Scalar `u' = lambda u + cos t`, `u(0) = 1`, with `A = lambda` (so `B = 0`).
pub fn scalar_forced(lambda: f64) -> Result<SplitProblem> {
    if !(lambda < 0.0) {
        return Err(Error::InvalidInput(format!(
            "lambda = {lambda} must be negative"
        )));
    }
    let field = FnField::new(
        1,
        move |t, u, out| out[0] = lambda * u[0] + t.cos(),
        move |_, _| Matrix::from_element(1, 1, lambda),
    );
    let den = 1.0 + lambda * lambda;
    let (ca, cb) = (-lambda / den, 1.0 / den);
    let c0 = 1.0 - ca;
    let a = Matrix::from_element(1, 1, lambda);
    Ok(SplitProblem::new(
        "scalar",
        Arc::new(field),
        a,
        Vector::from_element(1, 1.0),
        0.0,
        2.0,
    )?
    .with_param("lambda", lambda)
    .with_exact(move |t| {
        Vector::from_element(1, c0 * (lambda * t).exp() + ca * t.cos() + cb * t.sin())
    }))
}

/// `u(t) = e^{J (t - t0)} (u0 + J^{-1} g) - J^{-1} g` for constant `J` and `g`.
///
/// Symmetric `J` goes through its eigen-decomposition, anything else through
/// the scaling-and-squaring Pade exponential.
pub fn linear_exact(
    j: &Matrix,
    g: &Vector,
    u0: &Vector,
    t0: f64,
) -> Result<impl Fn(f64) -> Vector + Send + Sync + 'static> {
    let shift = if g.iter().all(|v| *v == 0.0) {
        Vector::zeros(g.len())
    } else {
        Factorization::new(j)
            .map_err(|_| Error::SingularA)?
            .solve(g)?
    };
    let w0 = u0 + &shift;
    let eig = if is_symmetric(j) {
        Some(eig_symmetric(j)?)
    } else {
        None
    };
    let j = j.clone();
    Ok(move |t: f64| {
        let tau = t - t0;
        let e = match &eig {
            Some(e) => e.map(|l| (l * tau).exp()),
            None => (&j * tau).exp(),
        };
        e * &w0 - &shift
    })
}

/// Builds a registered problem, applying `key = value` overrides.
///
/// Recognized keys: `M`, `D`, `eps`, `kappa`, `a`, `b`, `tau`, `te`,
/// `forcing`, `lambda`.
pub fn by_name(name: &str, overrides: &[(String, f64)]) -> Result<SplitProblem> {
    let get = |key: &str| {
        overrides
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| *v)
    };
    let allowed: &[&str] = match name {
        "ex41" | "ex52" => &["forcing", "te"],
        "scalar" => &["lambda", "te"],
        "fk" => &["M", "D", "eps", "te"],
        "burgers" => &["M", "eps", "kappa", "te"],
        "fhn" => &["M", "D", "a", "b", "tau", "kappa", "te"],
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown problem '{other}' (expected one of {})",
                PROBLEM_NAMES.join(", ")
            )))
        }
    };
    if let Some((k, _)) = overrides
        .iter()
        .find(|(k, _)| !allowed.contains(&k.as_str()))
    {
        return Err(Error::InvalidInput(format!(
            "problem '{name}' has no parameter '{k}'"
        )));
    }
    let grid = |default: usize| -> Result<usize> {
        match get("M") {
            None => Ok(default),
            Some(m) if m.fract() == 0.0 && m >= 1.0 => Ok(m as usize),
            Some(m) => Err(Error::InvalidInput(format!(
                "M = {m} must be a positive integer"
            ))),
        }
    };
    let problem = match name {
        "ex41" => example41_with_forcing(get("forcing").unwrap_or(10.0)),
        "ex52" => example52_with_forcing(get("forcing").unwrap_or(10.0)),
        "scalar" => scalar_forced(get("lambda").unwrap_or(-2.0))?,
        "fk" => {
            let d = FkParams::default();
            fisher_kolmogorov(FkParams {
                m: grid(d.m)?,
                diffusion: get("D").unwrap_or(d.diffusion),
                eps: get("eps").unwrap_or(d.eps),
            })?
        }
        "burgers" => {
            let d = BurgersParams::default();
            burgers(BurgersParams {
                m: grid(d.m)?,
                eps: get("eps").unwrap_or(d.eps),
                kappa: get("kappa").unwrap_or(d.kappa),
            })?
        }
        _ => {
            let d = FhnParams::default();
            fitzhugh_nagumo(FhnParams {
                m: grid(d.m)?,
                diffusion: get("D").unwrap_or(d.diffusion),
                a: get("a").unwrap_or(d.a),
                b: get("b").unwrap_or(d.b),
                tau: get("tau").unwrap_or(d.tau),
                kappa: get("kappa").unwrap_or(d.kappa),
            })?
        }
    };
    match get("te") {
        Some(te) if !(te >= problem.t0()) => {
            Err(Error::InvalidInput(format!("te = {te} precedes t0")))
        }
        Some(te) => Ok(problem.with_end_time(te)),
        None => Ok(problem),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eig_general;

    #[test]
    fn example41_spectra() {
        let p = example41();
        let s = p.initial_splitting().unwrap();
        let ea = eig_symmetric(s.a()).unwrap().values;
        let eb = eig_symmetric(s.b()).unwrap().values;
        for (v, want) in ea.iter().zip([-100.0, -10.0, -1.0]) {
            assert!((v - want).abs() < 1e-10);
        }
        for (v, want) in eb.iter().zip([-50.0, -12.0, -1.5]) {
            assert!((v - want).abs() < 1e-10);
        }
        assert!(s.commutator_ratio() <= 1e-10);
        assert_eq!(p.u0().as_slice(), &[200.0, 300.0, 100.0]);
        assert_eq!(p.te(), 30.0);
    }

    #[test]
    fn example52_does_not_commute() {
        let s = example52().initial_splitting().unwrap();
        assert!(s.commutator_ratio() > 1e-3);
        let mut ea: Vec<f64> = eig_general(s.a())
            .unwrap()
            .eigenvalues
            .iter()
            .map(|z| z.re)
            .collect();
        ea.sort_by(f64::total_cmp);
        assert_eq!(ea, vec![-30.0, -10.0, -4.0]);
    }

    #[test]
    fn exact_solutions_satisfy_the_ode() {
        for p in [example41(), example52(), scalar_forced(-2.0).unwrap()] {
            assert!((p.exact(0.0).unwrap() - p.u0()).norm() < 1e-9 * p.u0().norm());
            let (t, h) = (0.3, 1e-5);
            let du = (p.exact(t + h).unwrap() - p.exact(t - h).unwrap()) / (2.0 * h);
            let f = p.rhs(t, &p.exact(t).unwrap());
            assert!((du - &f).norm() <= 1e-6 * (1.0 + f.norm()), "{}", p.name());
        }
    }

    #[test]
    fn registry_applies_overrides() {
        let p = by_name("burgers", &[("M".into(), 32.0), ("kappa".into(), 3.0)]).unwrap();
        assert_eq!(p.dim(), 32);
        assert_eq!(p.param("kappa"), Some(3.0));
        let p = by_name("ex41", &[("te".into(), 1.0)]).unwrap();
        assert_eq!(p.te(), 1.0);
        assert!(by_name("heat", &[]).is_err());
        assert!(by_name("ex41", &[("kappa".into(), 2.0)]).is_err());
        assert!(by_name("fk", &[("M".into(), 10.5)]).is_err());
    }

    #[test]
    fn every_default_operator_is_negative_definite() {
        for name in PROBLEM_NAMES {
            let p = by_name(name, &[("M".into(), 64.0)])
                .or_else(|_| by_name(name, &[]))
                .unwrap();
            assert!(eig_symmetric(p.a()).unwrap().max() < 0.0, "{name}");
        }
    }
}
