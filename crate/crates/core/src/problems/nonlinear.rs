//! Mean-value bounds for reaction terms and the resulting stability checks.

use num_complex::Complex64;

use crate::diagram::real_extent;
use crate::error::{Error, Result};
use crate::splitting::{Condition, StabilityVerdict, VerdictParams};
use crate::system::SplitProblem;
use crate::tase::TaseOperator;

/// Bounds `lb <= xi_i <= ub` on the mean-value points of the reaction term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearBounds {
    pub upsilon_lb: f64,
    pub upsilon_ub: f64,
}

impl Default for NonlinearBounds {
    fn default() -> Self {
        Self {
            upsilon_lb: 0.0,
            upsilon_ub: 1.5,
        }
    }
}

impl NonlinearBounds {
    pub fn new(upsilon_lb: f64, upsilon_ub: f64) -> Result<Self> {
        if !(upsilon_lb <= upsilon_ub) || !upsilon_lb.is_finite() || !upsilon_ub.is_finite() {
            return Err(Error::InvalidInput(format!(
                "bounds [{upsilon_lb}, {upsilon_ub}] are not an interval"
            )));
        }
        Ok(Self {
            upsilon_lb,
            upsilon_ub,
        })
    }

    /// `(min, max)` of the logistic derivative `eps (1 - 2 xi)` over the bounds.
    pub fn logistic_derivative_range(&self, eps: f64) -> (f64, f64) {
        let at = |xi: f64| eps * (1.0 - 2.0 * xi);
        let (x, y) = (at(self.upsilon_lb), at(self.upsilon_ub));
        (x.min(y), x.max(y))
    }
}

fn required(problem: &SplitProblem, key: &str) -> Result<f64> {
    problem.param(key).ok_or_else(|| {
        Error::InvalidInput(format!(
            "problem '{}' lacks parameter '{key}'",
            problem.name()
        ))
    })
}

/// Extreme eigenvalues `(l_min, l_max)` of `-A` for the Fisher-Kolmogorov grid.
fn fk_laplacian_range(problem: &SplitProblem) -> Result<(f64, f64)> {
    let m = required(problem, "M")?;
    let h = required(problem, "h")?;
    let d = required(problem, "D")?;
    let r = 2.0 * d / (h * h);
    let lo = r * (1.0 + ((m - 1.0) * std::f64::consts::PI / m).cos());
    let hi = r * (1.0 + (std::f64::consts::PI / m).cos());
    Ok((lo, hi))
}

/// Real interval containing `W_1(-A, B(xi))` for every admissible `xi`.
///
/// `B(xi) = eps diag(1 - 2 xi)`, so the quotient `eps (1 - 2 xi) / l` is
/// bounded by its values at the extremes of `xi` and of `l in sigma(-A)`.
pub fn fk_fov_bounds(problem: &SplitProblem, bounds: &NonlinearBounds) -> Result<(f64, f64)> {
    let eps = required(problem, "eps")?;
    let (l_lo, l_hi) = fk_laplacian_range(problem)?;
    let (g_lo, g_hi) = bounds.logistic_derivative_range(eps);
    let candidates = [g_lo / l_lo, g_lo / l_hi, g_hi / l_lo, g_hi / l_hi];
    let lower = candidates.iter().copied().fold(f64::INFINITY, f64::min);
    let upper = candidates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((lower, upper))
}

/// `1 + c_p / That(k lambda_1) <= lower` and `upper <= 1`.
///
/// `k = None` uses the limit `That*` and certifies every step size.
pub fn fk_stability_check(
    problem: &SplitProblem,
    op: &TaseOperator,
    k: Option<f64>,
    bounds: &NonlinearBounds,
) -> Result<StabilityVerdict> {
    let (lower, upper) = fk_fov_bounds(problem, bounds)?;
    let c = real_extent(op.order())?;
    let hat = match k {
        None => op.hat_t_limit(),
        Some(k) if k > 0.0 => {
            let (_, l_hi) = fk_laplacian_range(problem)?;
            op.hat_t(-k * l_hi)?
        }
        Some(k) => {
            return Err(Error::InvalidInput(format!(
                "step size {k} must be positive"
            )))
        }
    };
    let floor = 1.0 + c / hat;
    let margins = [
        (Complex64::new(lower, 0.0), lower - floor),
        (Complex64::new(upper, 0.0), 1.0 - upper),
    ];
    let params = VerdictParams {
        p: op.order(),
        k,
        q: Some(1.0),
        kappa: None,
    };
    Ok(StabilityVerdict::from_margins(
        Condition::IntervalBounds,
        params,
        margins,
    ))
}

/// `chi(p, k, lambda) = -c_p / (k T_p(k lambda)) - lambda`: the smallest
/// reaction slope `g'` the scalar test `u' = lambda u + g(u)` tolerates.
pub fn scalar_logistic_chi(op: &TaseOperator, k: f64, lambda: f64) -> Result<f64> {
    if !(lambda < 0.0) || !(k > 0.0) {
        return Err(Error::InvalidInput(format!(
            "need lambda < 0 and k > 0, got {lambda}, {k}"
        )));
    }
    let c = real_extent(op.order())?;
    Ok(-c / (k * op.scalar_real(k * lambda)?) - lambda)
}

/// `argmin g'(xi)` over the bounds: coarse sampling, then golden-section refinement.
pub fn safe_xi(g_prime: impl Fn(f64) -> f64, bounds: &NonlinearBounds) -> f64 {
    let (lo, hi) = (bounds.upsilon_lb, bounds.upsilon_ub);
    if hi == lo {
        return lo;
    }
    const SAMPLES: usize = 2000;
    let x = |i: usize| lo + (hi - lo) * i as f64 / SAMPLES as f64;
    let best = (0..=SAMPLES)
        .min_by(|&i, &j| g_prime(x(i)).total_cmp(&g_prime(x(j))))
        .unwrap_or(0);
    let (mut a, mut b) = (x(best.saturating_sub(1)), x((best + 1).min(SAMPLES)));
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        if b - a <= 1e-14 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        let c = b - ratio * (b - a);
        let d = a + ratio * (b - a);
        if g_prime(c) <= g_prime(d) {
            b = d;
        } else {
            a = c;
        }
    }
    // keep whichever of the refined point and the sampled endpoint is lower
    let refined = 0.5 * (a + b);
    [refined, x(best)]
        .into_iter()
        .min_by(|u, v| g_prime(*u).total_cmp(&g_prime(*v)))
        .unwrap_or(refined)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{fisher_kolmogorov, FkParams};

    fn op(p: usize) -> TaseOperator {
        TaseOperator::standard(p).unwrap()
    }

    #[test]
    fn default_bounds_certify_every_order() {
        let fk = fisher_kolmogorov(FkParams::default()).unwrap();
        let (lower, upper) = fk_fov_bounds(&fk, &NonlinearBounds::default()).unwrap();
        assert!(lower < 0.0 && upper > 0.0 && upper <= 1.0);
        for p in 2..=4 {
            let v = fk_stability_check(&fk, &op(p), None, &NonlinearBounds::default()).unwrap();
            assert!(v.holds && v.margin > 0.0, "p = {p}: {v:?}");
        }
    }

    #[test]
    fn midpoint_bounds_give_a_zero_interval() {
        let fk = fisher_kolmogorov(FkParams::default()).unwrap();
        let half = NonlinearBounds::new(0.5, 0.5).unwrap();
        assert_eq!(fk_fov_bounds(&fk, &half).unwrap(), (0.0, 0.0));
        assert!(
            fk_stability_check(&fk, &op(2), Some(3.0), &half)
                .unwrap()
                .holds
        );
    }

    #[test]
    fn large_reaction_violates_upper_inequality() {
        let fk = fisher_kolmogorov(FkParams {
            eps: 10.0,
            ..FkParams::default()
        })
        .unwrap();
        let v = fk_stability_check(&fk, &op(3), None, &NonlinearBounds::new(-1.0, 0.0).unwrap())
            .unwrap();
        assert!(!v.holds);
    }

    #[test]
    fn bounds_must_be_ordered() {
        assert!(NonlinearBounds::new(1.0, 0.0).is_err());
    }

    #[test]
    fn safe_xi_for_logistic_term() {
        let eps = 1e-2;
        let xi = safe_xi(|x| eps * (1.0 - 2.0 * x), &NonlinearBounds::default());
        assert_eq!(xi, 1.5);
        let interior = safe_xi(
            |x| (x - 0.3).powi(2),
            &NonlinearBounds::new(-1.0, 2.0).unwrap(),
        );
        assert!((interior - 0.3).abs() < 1e-7);
    }

    #[test]
    fn chi_matches_closed_form_for_second_order() {
        // T_2(y) = -1/(1 - 3y) + 2/(1 - 1.5y)
        let (k, lambda) = (0.4, -5.0);
        let y: f64 = k * lambda;
        let t = -1.0 / (1.0 - 3.0 * y) + 2.0 / (1.0 - 1.5 * y);
        let chi = scalar_logistic_chi(&op(2), k, lambda).unwrap();
        assert!((chi - (-2.0 / (k * t) - lambda)).abs() < 1e-12);
        assert!(scalar_logistic_chi(&op(2), k, 1.0).is_err());
    }
}
