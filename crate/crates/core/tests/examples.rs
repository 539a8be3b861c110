//! Linear examples, nonlinear bounds and PDE setups checked against
//! published values or independent oracles written here.

use num_complex::Complex64;
use tase_core::diagram::{kstar_real, mu_star, real_axis_endpoints, rt_at_infinity, DiagramQuery};
use tase_core::linalg::{Matrix, Vector};
use tase_core::problems::{
    self, fisher_kolmogorov, fk_fov_bounds, fk_stability_check, FkParams, NonlinearBounds,
};
use tase_core::splitting::{
    check_thm53, check_thm55, fov_q, generalized_eigenvalues, kappa_transform_fov,
    kappa_transform_mu, paired_modes, Splitting, DEFAULT_N_THETA,
};
use tase_core::system::SplitProblem;
use tase_core::tase::{drive, IntegrateOptions, JacobianMode, TaseOperator, TaseRk};

fn op(p: usize) -> TaseOperator {
    TaseOperator::standard(p).unwrap()
}

/// Weights solving `sum beta_j omega_j^m = [m = 0]` for `m < p`, by plain
/// Gaussian elimination with partial pivoting.
fn weights_oracle(omega: &[f64]) -> Vec<f64> {
    let p = omega.len();
    let mut m: Vec<Vec<f64>> = (0..p)
        .map(|r| {
            let mut row: Vec<f64> = omega.iter().map(|w| w.powi(r as i32)).collect();
            row.push(if r == 0 { 1.0 } else { 0.0 });
            row
        })
        .collect();
    for c in 0..p {
        let piv = (c..p)
            .max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))
            .unwrap();
        m.swap(c, piv);
        for r in 0..p {
            if r != c {
                let f = m[r][c] / m[c][c];
                for j in c..=p {
                    m[r][j] -= f * m[c][j];
                }
            }
        }
    }
    (0..p).map(|r| m[r][p] / m[r][r]).collect()
}

fn truncated_exp(p: usize, z: f64) -> f64 {
    (0..=p)
        .map(|q| z.powi(q as i32) / (1..=q).product::<usize>() as f64)
        .sum()
}

/// Real extent `c` with `|R_p(-c)| = 1`, by bisection on a sign change.
fn extent_oracle(p: usize) -> f64 {
    let g = |c: f64| truncated_exp(p, -c).abs() - 1.0;
    let (mut lo, mut hi) = (1.0, 4.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[test]
fn rt_at_infinity_matches_published_values() {
    assert!((rt_at_infinity(&op(2)).abs() - 0.5).abs() < 1e-12);
    assert!(rt_at_infinity(&op(3)).abs() <= 1e-3);
    assert!((rt_at_infinity(&op(4)).abs() - 0.27).abs() <= 5e-3);
}

#[test]
fn hat_t_limits_match_published_values() {
    assert!((op(2).hat_t_limit() + 1.0).abs() < 1e-12);
    for p in [3, 4] {
        assert!((op(p).hat_t_limit() + 1.5961).abs() <= 1e-3);
        // independent oracle: -sum beta_j / omega_j
        let o = op(p);
        let beta = weights_oracle(o.omega());
        let limit: f64 = -beta.iter().zip(o.omega()).map(|(b, w)| b / w).sum::<f64>();
        assert!((o.hat_t_limit() - limit).abs() < 1e-12);
    }
}

#[test]
fn infinite_diagram_right_endpoints() {
    assert!((mu_star(&op(2)).unwrap() - 1.0).abs() < 1e-12);
    assert!((mu_star(&op(3)).unwrap() - 0.5743).abs() <= 1e-4);
    // oracle for p = 4: -1 - c_4 / That*, with c_4 and That* computed here
    let o = op(4);
    let beta = weights_oracle(o.omega());
    let t_star: f64 = -beta.iter().zip(o.omega()).map(|(b, w)| b / w).sum::<f64>();
    let expected = -1.0 - extent_oracle(4) / t_star;
    assert!((mu_star(&o).unwrap() - expected).abs() < 1e-9, "{expected}");
    assert!((expected - 0.745100).abs() < 1e-6);
    let (left, _) = real_axis_endpoints(&DiagramQuery::infinite(&o)).unwrap();
    assert_eq!(left, -1.0);
}

#[test]
fn example41_modes_and_kstar() {
    let s = problems::example41().initial_splitting().unwrap();
    assert!(s.is_commuting());
    let mut modes = paired_modes(&s).unwrap();
    modes.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let expected = [(-100.0, 0.5), (-10.0, 1.2), (-1.0, 1.5)];
    for (m, (l, mu)) in modes.iter().zip(expected) {
        assert!((m.lambda - l).abs() < 1e-10);
        assert!((m.mu - Complex64::new(mu, 0.0)).norm() < 1e-10);
    }
    let pairs: Vec<(f64, f64)> = modes.iter().map(|m| (m.lambda, m.mu.re)).collect();
    assert!((kstar_real(&op(2), &pairs).unwrap() - 7.8390e-01).abs() <= 1e-4);
    assert!((kstar_real(&op(3), &pairs).unwrap() - 2.8428e-01).abs() <= 1e-4);
}

fn relative_error(problem: &SplitProblem, p: usize, mode: JacobianMode, k: f64) -> f64 {
    let method = TaseRk::standard(p).unwrap().with_jacobian(mode);
    let run = drive(
        &mut method.stepper(),
        problem,
        k,
        problem.te(),
        IntegrateOptions {
            store_every: 0,
            ..Default::default()
        },
    )
    .unwrap();
    if run.blew_up() {
        return f64::INFINITY;
    }
    let exact = problem.exact(problem.te()).unwrap();
    (run.final_state() - &exact).norm() / exact.norm()
}

const PUBLISHED_STEPS: [f64; 4] = [1.8750, 9.3750e-01, 4.6875e-01, 2.3438e-01];

#[test]
fn inexact_jacobian_error_classification() {
    let problem = problems::example41();
    let fixed = JacobianMode::Fixed;
    assert!(relative_error(&problem, 2, fixed, PUBLISHED_STEPS[0]) > 1.0);
    assert!(relative_error(&problem, 2, fixed, PUBLISHED_STEPS[3]) <= 1e-10);
    for &k in &PUBLISHED_STEPS[..3] {
        assert!(relative_error(&problem, 3, fixed, k) > 1.0, "trk3 k = {k}");
    }
    assert!(relative_error(&problem, 3, fixed, PUBLISHED_STEPS[3]) <= 1e-10);
    for p in [2, 3] {
        for &k in &PUBLISHED_STEPS {
            assert!(
                relative_error(&problem, p, JacobianMode::Exact, k) < 1.0,
                "p = {p}, k = {k}"
            );
        }
    }
}

#[test]
fn inexact_jacobian_errors_match_published_digits() {
    let problem = problems::example41();
    // (p, exact Jacobian, k index, published error); roundoff-level entries omitted
    let published = [
        (2, true, 0, 8.1916e-03),
        (2, true, 1, 3.4523e-07),
        (2, false, 0, 2.6260e+03),
        (2, false, 1, 1.1609e+03),
        (2, false, 2, 2.5721e-01),
        (3, true, 0, 3.2074e-10),
        (3, false, 0, 1.1479e+10),
        (3, false, 1, 5.3503e+14),
        (3, false, 2, 1.3881e+16),
    ];
    for (p, exact, i, value) in published {
        let mode = if exact {
            JacobianMode::Exact
        } else {
            JacobianMode::Fixed
        };
        let err = relative_error(&problem, p, mode, PUBLISHED_STEPS[i]);
        assert!(
            (err / value - 1.0).abs() < 1e-2,
            "p = {p}, exact = {exact}, k = {}: {err:e}",
            PUBLISHED_STEPS[i]
        );
    }
}

#[test]
fn example52_is_not_commuting_and_has_published_mu() {
    let s = problems::example52().initial_splitting().unwrap();
    assert!(!s.is_commuting());
    let mut mus = generalized_eigenvalues(&s).unwrap();
    mus.sort_by(|a, b| a.im.total_cmp(&b.im));
    let im = (5.85f64 - 0.525 * 0.525).sqrt();
    assert!((mus[0] - Complex64::new(0.525, -im)).norm() < 1e-10);
    assert!((mus[1] - Complex64::new(0.5, 0.0)).norm() < 1e-10);
    assert!((mus[2] - Complex64::new(0.525, im)).norm() < 1e-10);
}

#[test]
fn example52_leading_block_is_certified_at_published_steps() {
    let s = problems::example52()
        .initial_splitting()
        .unwrap()
        .restrict(&[0, 1])
        .unwrap();
    assert_eq!(s.lambda_min().unwrap(), -10.0);
    assert!(
        check_thm53(&s, &op(2), 2.1e-01, 1.0, DEFAULT_N_THETA)
            .unwrap()
            .holds
    );
    assert!(
        check_thm53(&s, &op(3), 1.45e-01, 1.0, DEFAULT_N_THETA)
            .unwrap()
            .holds
    );
}

#[test]
fn fk_bounds_certify_all_orders() {
    let problem = fisher_kolmogorov(FkParams::default()).unwrap();
    assert_eq!(problem.dim(), 99);
    let bounds = NonlinearBounds::new(0.0, 1.5).unwrap();
    for p in 2..=4 {
        let v = fk_stability_check(&problem, &op(p), None, &bounds).unwrap();
        assert!(v.holds && v.margin > 0.0, "p = {p}: {v:?}");
    }
}

#[test]
fn fk_field_of_values_stays_in_the_bounding_interval() {
    let problem = fisher_kolmogorov(FkParams::default()).unwrap();
    let bounds = NonlinearBounds::new(0.0, 1.5).unwrap();
    let (lower, upper) = fk_fov_bounds(&problem, &bounds).unwrap();
    let eps = problem.param("eps").unwrap();
    let n = problem.dim();
    // deterministic scatter of xi over [0, 3/2], including both extremes
    for seed in 0..4u64 {
        let xi: Vec<f64> = (0..n)
            .map(|i| match (i as u64 + seed) % 11 {
                0 => 0.0,
                1 => 1.5,
                r => 1.5 * ((r as f64 * 0.618_033_988_75 + seed as f64 * 0.1).fract()),
            })
            .collect();
        let b = Matrix::from_diagonal(&Vector::from_iterator(
            n,
            xi.iter().map(|x| eps * (1.0 - 2.0 * x)),
        ));
        let s = Splitting::new(problem.a().clone(), b).unwrap();
        let w = fov_q(&s, 1.0, 180).unwrap();
        for z in &w.points {
            assert!(z.im.abs() <= 1e-10, "{z}");
            assert!(
                z.re >= lower - 1e-12 && z.re <= upper + 1e-12,
                "{z} outside [{lower}, {upper}]"
            );
        }
    }
}

#[test]
fn fk_trk3_at_half_step_stays_bounded() {
    let problem = fisher_kolmogorov(FkParams::default()).unwrap();
    let method = TaseRk::standard(3).unwrap();
    let run = drive(
        &mut method.stepper(),
        &problem,
        0.5,
        problem.te(),
        IntegrateOptions::default(),
    )
    .unwrap();
    assert!(!run.blew_up());
    assert!(run.max_norm <= 2.0, "{}", run.max_norm);
}

#[test]
fn kappa_rescaling_matches_direct_recomputation_on_small_burgers() {
    let base = problems::by_name("burgers", &[("M".into(), 48.0), ("eps".into(), 1e-2)]).unwrap();
    let j = base.jacobian(base.t0(), base.u0());
    // A as built carries kappa = 1, so it is the unscaled operator
    let one = Splitting::from_jacobian(base.a().clone(), &j).unwrap();
    let three = Splitting::from_jacobian(base.a() * 3.0, &j).unwrap();
    // mu(A, J) = 1 + mu(A, B)

    let mu_one = generalized_eigenvalues(&one).unwrap();
    let mut derived = kappa_transform_mu(&mu_one.iter().map(|m| m + 1.0).collect::<Vec<_>>(), 3.0);
    let mut direct = generalized_eigenvalues(&three).unwrap();
    let key = |a: &Complex64, b: &Complex64| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im));
    derived.sort_by(key);
    direct.sort_by(key);
    for (d, e) in derived.iter().zip(&direct) {
        assert!((d - e).norm() <= 1e-8 * (1.0 + e.norm()), "{d} vs {e}");
    }

    let w_one = fov_q(&one, 1.0, 360).unwrap();
    // W_q(-A, J) = W_q(-A, B) - 1 for q = 1, since A^{-1} A = I
    let w_aj = w_one.affine(1.0, Complex64::new(-1.0, 0.0));
    let derived_w = kappa_transform_fov(&w_aj, 3.0);
    let direct_w = fov_q(&three, 1.0, 360).unwrap();
    for (d, e) in derived_w.support.iter().zip(&direct_w.support) {
        assert!((d - e).abs() <= 1e-8, "{d} vs {e}");
    }
}

#[test]
fn burgers_small_grid_necessary_condition_reflects_kappa() {
    // coarse analogue of the M = 1024 experiment: kappa = 3 shifts mu towards -1
    let p1 = problems::by_name("burgers", &[("M".into(), 64.0), ("eps".into(), 1e-2)]).unwrap();
    let p3 = problems::by_name(
        "burgers",
        &[
            ("M".into(), 64.0),
            ("eps".into(), 1e-2),
            ("kappa".into(), 3.0),
        ],
    )
    .unwrap();
    let (_, nec1) = check_thm55(&p1.initial_splitting().unwrap(), &op(2), 1.0, 180).unwrap();
    let (_, nec3) = check_thm55(&p3.initial_splitting().unwrap(), &op(2), 1.0, 180).unwrap();
    assert!(nec3.margin > nec1.margin);
}
