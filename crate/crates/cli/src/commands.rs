//! Subcommand implementations. Each returns its outputs in memory; writing
//! them out is left to the caller.

use std::fmt::Write as _;
use std::time::Instant;

use serde_json::{json, Map, Value};
use tase_core::diagram::{boundary, fmt_e, kstar_real, Depth, DiagramQuery};
use tase_core::problems::{self, fk_stability_check};
use tase_core::splitting::{
    check_prop41, check_thm44, check_thm45_unconditional, check_thm53_with,
    check_thm55_necessary_with, check_thm55_sufficient_with, fov_q, generalized_eigenvalues,
    paired_modes, spectral_radius_check, Splitting, StabilityVerdict,
};
use tase_core::system::SplitProblem;
use tase_core::tase::{drive, IntegrateOptions, IntegrationRun, TaseOperator};

use crate::config::{Command, ExperimentConfig};
use crate::error::CliError;
use crate::methods::MethodSpec;
use crate::reference::{reference_state, ReferenceKind};

/// Largest dimension for which the dense amplification-matrix check runs.
pub const SPECTRAL_RADIUS_LIMIT: usize = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub name: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub outputs: Vec<Output>,
    pub exit_code: i32,
}

impl Outcome {
    fn ok(outputs: Vec<Output>) -> Self {
        Self {
            outputs,
            exit_code: 0,
        }
    }

    fn single(name: &str, content: String) -> Self {
        Self::ok(vec![Output {
            name: name.into(),
            content,
        }])
    }
}

pub fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    match cmd {
        Command::Integrate => cmd_integrate(cfg),
        Command::Certify => cmd_certify(cfg),
        Command::Kstar => cmd_kstar(cfg),
        Command::Diagram => cmd_diagram(cfg),
        Command::Fov => cmd_fov(cfg),
        Command::Convergence => cmd_table(cfg, "convergence.csv"),
        Command::Workprec => cmd_table(cfg, "workprec.csv"),
        Command::Hatt => cmd_hatt(cfg),
    }
}

fn accepts_kappa(name: &str) -> bool {
    matches!(name, "burgers" | "fhn")
}

/// Registry problem with parameters applied. `kappa` feeds the problem's own
/// parameter when it has one and otherwise scales `A`.
pub fn build_problem(cfg: &ExperimentConfig) -> Result<SplitProblem, CliError> {
    let name = cfg.problem_name()?;
    let mut params = cfg.params.clone();
    if let Some(te) = cfg.te {
        params.push(("te".into(), te));
    }
    if let (Some(kappa), true) = (cfg.kappa, accepts_kappa(name)) {
        params.push(("kappa".into(), kappa));
    }
    let problem = problems::by_name(name, &params).map_err(|e| CliError::Config(e.to_string()))?;
    match cfg.kappa {
        Some(kappa) if !accepts_kappa(name) => {
            Ok(problem.with_operator_matrix(problem.a() * kappa)?)
        }
        _ => Ok(problem),
    }
}

fn run_method(
    problem: &SplitProblem,
    method: &MethodSpec,
    k: f64,
    opts: IntegrateOptions,
) -> Result<IntegrationRun, CliError> {
    let mut stepper = method.stepper()?;
    Ok(drive(&mut stepper, problem, k, problem.te(), opts)?)
}

fn single_method(cfg: &ExperimentConfig) -> Result<&MethodSpec, CliError> {
    match cfg.methods.as_slice() {
        [m] => Ok(m),
        _ => Err(CliError::Config("exactly one method expected".into())),
    }
}

/// Trajectory CSV `t,u_0,...`; a `#blowup` footer and exit code 2 on divergence.
pub fn cmd_integrate(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let problem = build_problem(cfg)?;
    let method = single_method(cfg)?;
    let k = cfg.single_k()?;
    let opts = IntegrateOptions {
        store_every: cfg.stride_t,
        ..Default::default()
    };
    let run = run_method(&problem, method, k, opts)?;
    let cols: Vec<usize> = (0..problem.dim()).step_by(cfg.stride_x).collect();
    let mut csv = String::from("t");
    for c in &cols {
        let _ = write!(csv, ",u_{c}");
    }
    csv.push('\n');
    for (t, u) in run.times.iter().zip(&run.states) {
        csv.push_str(&fmt_e(*t));
        for &c in &cols {
            csv.push(',');
            csv.push_str(&fmt_e(u[c]));
        }
        csv.push('\n');
    }
    let exit_code = match &run.blow_up {
        Some(b) => {
            let _ = writeln!(
                csv,
                "#blowup,step={},t={},max_norm={}",
                b.step,
                fmt_e(b.time),
                fmt_e(b.max_norm)
            );
            2
        }
        None => 0,
    };
    Ok(Outcome {
        outputs: vec![Output {
            name: "trajectory.csv".into(),
            content: csv,
        }],
        exit_code,
    })
}

fn splitting_for(
    cfg: &ExperimentConfig,
    problem: &SplitProblem,
) -> Result<(Splitting, bool), CliError> {
    let s = problem.initial_splitting()?;
    match &cfg.subblock {
        Some(idx) => Ok((
            s.restrict(idx)
                .map_err(|e| CliError::Config(e.to_string()))?,
            true,
        )),
        None => Ok((s, false)),
    }
}

fn op(p: usize) -> Result<TaseOperator, CliError> {
    Ok(TaseOperator::standard(p)?)
}

/// Analytic `k*` from paired real modes, per order.
fn analytic_kstar(s: &Splitting, orders: &[usize]) -> Result<Option<Vec<(usize, f64)>>, CliError> {
    if !s.is_commuting() {
        return Ok(None);
    }
    let modes = paired_modes(s)?;
    if modes
        .iter()
        .any(|m| m.mu.im.abs() > 1e-12 * (1.0 + m.mu.re.abs()) || m.mu.re < -1.0)
    {
        return Ok(None);
    }
    let pairs: Vec<(f64, f64)> = modes.iter().map(|m| (m.lambda, m.mu.re)).collect();
    let mut out = Vec::new();
    for &p in orders {
        out.push((p, kstar_real(&op(p)?, &pairs)?));
    }
    Ok(Some(out))
}

fn json_number(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(fmt_e(v))
    }
}

/// Verdict JSON: commuting splittings take the generalized-eigenvalue path,
/// the rest the field-of-values path.
pub fn cmd_certify(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let problem = build_problem(cfg)?;
    let (s, experimental) = splitting_for(cfg, &problem)?;
    let commuting = s.is_commuting();
    let mut verdicts: Vec<StabilityVerdict> = Vec::new();
    let mut kstar = Map::new();
    if commuting {
        if let Some(list) = analytic_kstar(&s, &cfg.orders)? {
            for (p, k) in list {
                kstar.insert(p.to_string(), json_number(k));
            }
        }
        for &p in &cfg.orders {
            let op = op(p)?;
            for &k in &cfg.k {
                verdicts.push(check_prop41(&s, &op, k)?);
                verdicts.push(check_thm44(&s, &op, k)?);
            }
            verdicts.push(check_thm45_unconditional(&s, &op)?);
        }
    } else {
        let mus = generalized_eigenvalues(&s)?;
        let fovs = cfg
            .q
            .iter()
            .map(|q| fov_q(&s, q.value, cfg.n_theta).map(|w| (q.value, w)))
            .collect::<Result<Vec<_>, _>>()?;
        for &p in &cfg.orders {
            let op = op(p)?;
            for (q, w) in &fovs {
                for &k in &cfg.k {
                    verdicts.push(check_thm53_with(&s, &op, k, *q, w)?);
                }
                verdicts.push(check_thm55_sufficient_with(&op, *q, w));
            }
            verdicts.push(check_thm55_necessary_with(&op, &mus));
        }
    }
    if s.dim() <= SPECTRAL_RADIUS_LIMIT {
        for &p in &cfg.orders {
            for &k in &cfg.k {
                verdicts.push(spectral_radius_check(&s, &op(p)?, k)?);
            }
        }
    }
    if problem.name() == "fk" && !experimental {
        for &p in &cfg.orders {
            let op = op(p)?;
            verdicts.push(fk_stability_check(&problem, &op, None, &cfg.bounds)?);
            for &k in &cfg.k {
                verdicts.push(fk_stability_check(&problem, &op, Some(k), &cfg.bounds)?);
            }
        }
    }
    let verdicts: Vec<Value> = verdicts
        .into_iter()
        .map(|v| {
            let v = match cfg.kappa {
                Some(kappa) => v.with_kappa(kappa),
                None => v,
            };
            let v = if experimental {
                v.mark_experimental()
            } else {
                v
            };
            serde_json::to_value(&v).expect("verdicts serialize")
        })
        .collect();
    let params: Map<String, Value> = problem
        .params()
        .iter()
        .map(|(k, v)| (k.clone(), json_number(*v)))
        .collect();
    let report = json!({
        "problem": problem.name(),
        "dim": s.dim(),
        "params": params,
        "kappa": cfg.kappa,
        "seed": cfg.seed,
        "commuting": commuting,
        "commutator_ratio": s.commutator_ratio(),
        "path": if commuting { "commuting" } else { "non-commuting" },
        "kstar": kstar,
        "verdicts": verdicts,
    });
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    Ok(Outcome::single("certify.json", text))
}

/// Result of the empirical step-size search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EmpiricalKstar {
    Finite(f64),
    /// Stable up to a single step over the whole horizon.
    Unbounded,
}

/// Fewest steps the stability predicate integrates, whatever the horizon.
pub const KSTAR_MIN_STEPS: f64 = 1000.0;
/// The doubling search gives up (and reports unbounded) past this multiple of the horizon.
pub const KSTAR_MAX_SPAN_FACTOR: f64 = 1e4;

/// `||u_n||_inf <= 10 (1 + ||u_0||_inf)` for every step up to
/// `max(te, t0 + KSTAR_MIN_STEPS k)`.
pub fn is_stable(problem: &SplitProblem, method: &MethodSpec, k: f64) -> Result<bool, CliError> {
    let bound = 10.0 * (1.0 + problem.u0().amax());
    let opts = IntegrateOptions {
        store_every: 0,
        overflow_guard: bound,
    };
    let t_end = problem.te().max(problem.t0() + KSTAR_MIN_STEPS * k);
    let mut stepper = method.stepper()?;
    let run = drive(&mut stepper, problem, k, t_end, opts)?;
    Ok(run.blow_up.is_none() && run.max_norm <= bound)
}

/// Doubling bracket, then bisection to relative width `1e-3`.
pub fn empirical_kstar(
    problem: &SplitProblem,
    method: &MethodSpec,
) -> Result<EmpiricalKstar, CliError> {
    let span = problem.te() - problem.t0();
    if !(span > 0.0) {
        return Err(CliError::Config(
            "the horizon must have positive length".into(),
        ));
    }
    let mut k = span / 64.0;
    let (mut lo, mut hi);
    if is_stable(problem, method, k)? {
        loop {
            lo = k;
            k *= 2.0;
            if k > KSTAR_MAX_SPAN_FACTOR * span {
                return Ok(EmpiricalKstar::Unbounded);
            }
            if !is_stable(problem, method, k)? {
                hi = k;
                break;
            }
        }
    } else {
        loop {
            hi = k;
            k *= 0.5;
            if k < 1e-9 * span {
                return Err(CliError::BlowUp(
                    "no stable step size found (both bracket ends unstable)".into(),
                ));
            }
            if is_stable(problem, method, k)? {
                lo = k;
                break;
            }
        }
    }
    while hi - lo > 1e-3 * hi {
        let mid = 0.5 * (lo + hi);
        if is_stable(problem, method, mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(EmpiricalKstar::Finite(lo))
}

/// CSV `method,k_empirical,k_analytic`.
pub fn cmd_kstar(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let problem = build_problem(cfg)?;
    let analytic = match problem.initial_splitting() {
        Ok(s) => analytic_kstar(&s, &[2, 3, 4]).unwrap_or(None),
        Err(_) => None,
    };
    let mut csv = String::from("method,k_empirical,k_analytic\n");
    for method in &cfg.methods {
        let emp = match empirical_kstar(&problem, method)? {
            EmpiricalKstar::Finite(k) => fmt_e(k),
            EmpiricalKstar::Unbounded => fmt_e(f64::INFINITY),
        };
        let ana = match (method, &analytic) {
            (MethodSpec::Tase { p, exact: false }, Some(list)) => list
                .iter()
                .find(|(q, _)| q == p)
                .map(|(_, k)| fmt_e(*k))
                .unwrap_or_default(),
            _ => String::new(),
        };
        let _ = writeln!(csv, "{},{},{}", method.label(), emp, ana);
    }
    Ok(Outcome::single("kstar.csv", csv))
}

fn depth_label(d: Depth) -> String {
    match d {
        Depth::Finite(y) => format!("{y}"),
        Depth::Infinite => "inf".into(),
    }
}

/// One boundary CSV per `(p, y)`.
pub fn cmd_diagram(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let mut outputs = Vec::new();
    for &p in &cfg.orders {
        let op = op(p)?;
        for &d in &cfg.y {
            let q = DiagramQuery::new(&op, d)?;
            let curve = boundary(&q, cfg.n_theta)?;
            outputs.push(Output {
                name: format!("diagram_p{p}_y{}.csv", depth_label(d)),
                content: curve.to_csv(),
            });
        }
    }
    Ok(Outcome::ok(outputs))
}

/// One `W_q(-A, B)` CSV per `q`.
pub fn cmd_fov(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let problem = build_problem(cfg)?;
    let (s, _) = splitting_for(cfg, &problem)?;
    let mut outputs = Vec::new();
    for q in &cfg.q {
        let w = fov_q(&s, q.value, cfg.n_theta)?;
        outputs.push(Output {
            name: format!("fov_q{}.csv", q.label),
            content: w.to_csv(),
        });
    }
    Ok(Outcome::ok(outputs))
}

/// One row of a convergence or work-precision table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub method: String,
    pub k: f64,
    pub error: f64,
    pub wall_time: f64,
    pub n_solves: u64,
    pub n_factorizations: u64,
    pub order: Option<f64>,
}

/// Relative 2-norm error at `te` for every method and step size.
pub fn error_table(
    cfg: &ExperimentConfig,
    problem: &SplitProblem,
) -> Result<Vec<TableRow>, CliError> {
    if cfg.k.is_empty() {
        return Err(CliError::Config("--k needs a list of step sizes".into()));
    }
    let span = problem.te() - problem.t0();
    let mut ks: Vec<f64> = cfg
        .k
        .iter()
        .map(|&k| {
            let n = (span / k).round().max(1.0);
            span / n
        })
        .collect();
    ks.sort_by(|a, b| b.total_cmp(a));
    ks.dedup();
    let k_min = *ks.last().expect("non-empty");
    let (reference, kind) = reference_state(problem, problem.te(), k_min)?;
    if let ReferenceKind::Rk4 { k } = kind {
        log::info!("RK4 reference with k = {k:e}");
    }
    let ref_norm = reference.norm();
    let mut rows = Vec::new();
    for method in &cfg.methods {
        let mut prev: Option<(f64, f64)> = None;
        for &k in &ks {
            let start = Instant::now();
            let run = run_method(
                problem,
                method,
                k,
                IntegrateOptions {
                    store_every: 0,
                    ..Default::default()
                },
            )?;
            let wall = start.elapsed().as_secs_f64();
            let error = if run.blew_up() {
                f64::INFINITY
            } else {
                (run.final_state() - &reference).norm()
                    / if ref_norm > 0.0 { ref_norm } else { 1.0 }
            };
            let order = prev.and_then(|(pk, pe)| {
                let o = (pe / error).ln() / (pk / k).ln();
                o.is_finite().then_some(o)
            });
            prev = Some((k, error));
            rows.push(TableRow {
                method: method.label(),
                k,
                error,
                wall_time: if cfg.timing { wall } else { 0.0 },
                n_solves: run.stats.work.solves,
                n_factorizations: run.stats.work.factorizations,
                order,
            });
        }
    }
    Ok(rows)
}

pub fn table_csv(rows: &[TableRow]) -> String {
    let mut csv = String::from("method,k,error,wall_time,n_solves,n_factorizations,order\n");
    for r in rows {
        let order = r.order.map(fmt_e).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            r.method,
            fmt_e(r.k),
            fmt_e(r.error),
            fmt_e(r.wall_time),
            r.n_solves,
            r.n_factorizations,
            order
        );
    }
    csv
}

fn cmd_table(cfg: &ExperimentConfig, name: &str) -> Result<Outcome, CliError> {
    let problem = build_problem(cfg)?;
    let rows = error_table(cfg, &problem)?;
    Ok(Outcome::single(name, table_csv(&rows)))
}

/// `y,hat_t_p...` on `ntheta` points with `-y` log-spaced in `[1e-2, 1e3]`.
pub fn cmd_hatt(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let ops = cfg
        .orders
        .iter()
        .map(|&p| op(p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut csv = String::from("y");
    for p in &cfg.orders {
        let _ = write!(csv, ",hat_t_p{p}");
    }
    csv.push('\n');
    let n = cfg.n_theta;
    for i in 0..n {
        let y = -(10f64).powf(-2.0 + 5.0 * i as f64 / (n - 1) as f64);
        csv.push_str(&fmt_e(y));
        for op in &ops {
            csv.push(',');
            csv.push_str(&fmt_e(op.hat_t(y)?));
        }
        csv.push('\n');
    }
    Ok(Outcome::single("hatt.csv", csv))
}
