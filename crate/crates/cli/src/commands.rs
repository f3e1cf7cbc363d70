use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use distmatch::lqg::{gain_gap, leqr, mm_lqg_from, riccati_lqr, LinearGaussianPolicy, LqrSolution};
use distmatch::mm::{extract_deterministic, MajorizationReport};
use distmatch::pic::pic_policy_mc_with_errors;
use distmatch::random::{random_cost, random_policy, random_problem, RandomShape};
use distmatch::trajectory::policy_evaluation;
use distmatch::{
    backward_pass, dp_rsoc, dp_soc, exact_smoothing, exhaustive_policy_search, majorization_report,
    merl_identity_check, mm_iterate, pic_value_mc, Error, MMConfig, MmInit, MmMode, Objective,
    OracleSolution, ProjectionKind, TabularPolicy, ValueTables,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::CliError;
use crate::problem::{Discrete, DiscreteFile, Lqg, Problem, ProblemFile};

/// Agreement tolerance of the oracle checks.
pub const CHECK_TOL: f64 = 1e-6;

pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
        })
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

pub fn load(path: &Path) -> Result<Problem, CliError> {
    ProblemFile::load(path)?.build()
}

pub fn discrete(problem: Problem, command: &str) -> Result<Discrete, CliError> {
    match problem {
        Problem::Discrete(d) => Ok(d),
        Problem::Lqg(_) => Err(CliError::Usage(format!(
            "`{command}` needs a discrete problem; use `lqg` for linear-Gaussian files"
        ))),
    }
}

fn lqg(problem: Problem) -> Result<Lqg, CliError> {
    match problem {
        Problem::Lqg(l) => Ok(l),
        Problem::Discrete(_) => Err(CliError::Usage("`lqg` needs a problem of kind lqg".into())),
    }
}

fn policy_csv(policy: &TabularPolicy) -> String {
    let mut out = String::from("t,x,u,probability\n");
    for t in 0..policy.horizon() {
        for x in 0..policy.num_states() {
            for (u, p) in policy.row(t, x).iter().enumerate() {
                writeln!(out, "{t},{x},{u},{p}").unwrap();
            }
        }
    }
    out
}

fn values_csv(values: &ValueTables) -> String {
    let mut out = String::from("t,x,u,Q,V\n");
    let m = values.num_actions();
    for (t, q) in values.q.iter().enumerate() {
        for x in 0..values.v[t].len() {
            for u in 0..m {
                writeln!(out, "{t},{x},{u},{},{}", q[x * m + u], values.v[t][x]).unwrap();
            }
        }
    }
    out
}

pub enum KindArg {
    I,
    M,
    Renyi,
}

pub fn project(
    problem: Discrete,
    kind: KindArg,
    alpha: Option<f64>,
    out: &Output,
) -> Result<String, CliError> {
    let kind = match kind {
        KindArg::I => ProjectionKind::I,
        KindArg::M => ProjectionKind::M,
        KindArg::Renyi => {
            let alpha =
                alpha.ok_or_else(|| CliError::Usage("--kind renyi needs --alpha".into()))?;
            if alpha == 0.0 {
                return Err(CliError::Usage(
                    "Rényi order α = 0 is the I-projection limit; use --kind i".into(),
                ));
            }
            if alpha == 1.0 {
                return Err(CliError::Usage(
                    "Rényi order α = 1 is the M-projection limit; use --kind m".into(),
                ));
            }
            ProjectionKind::renyi(alpha)?
        }
    };
    let (values, policy) = backward_pass(&problem.problem, &problem.cost, &problem.prior, kind)?;
    out.write("policy.csv", &policy_csv(&policy))?;
    out.write("values.csv", &values_csv(&values))?;
    let v0: Vec<String> = values.v[0].iter().map(f64::to_string).collect();
    Ok(format!("{kind:?} projection; V_0 = [{}]\n", v0.join(", ")))
}

pub fn mm(
    problem: Discrete,
    mode: MmMode,
    iters: usize,
    tol: f64,
    from_prior: bool,
    out: &Output,
) -> Result<String, CliError> {
    let config = MMConfig {
        max_iters: iters,
        tol_policy: tol,
        init: if from_prior {
            MmInit::Custom(problem.prior.clone())
        } else {
            MmInit::Uniform
        },
        ..MMConfig::default()
    };
    let trace = mm_iterate(&problem.problem, &problem.cost, mode, &config)?;
    let mut csv = String::from("iter,objective_A,objective_B,policy_delta,residual_mass\n");
    for row in &trace.rows {
        let delta = row.policy_delta.map(|d| d.to_string()).unwrap_or_default();
        writeln!(
            csv,
            "{},{},{},{},{}",
            row.iter, row.objective_a, row.objective_b, delta, row.residual_mass
        )
        .unwrap();
    }
    out.write("trace.csv", &csv)?;
    out.write("policy.csv", &policy_csv(&trace.policy))?;
    let last = trace.rows.last().expect("trace has the initial row");
    Ok(format!(
        "{mode:?}: {} after {} iterations; A = {}, B = {}\n",
        if trace.converged {
            "converged"
        } else {
            "not converged"
        },
        trace.iterations,
        last.objective_a,
        last.objective_b
    ))
}

fn gains_rows(out: &mut String, label: &str, t: usize, m: &nalgebra::DMatrix<f64>) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            // + 0.0 folds -0 into 0
            writeln!(out, "{t},{label},{i},{j},{}", m[(i, j)] + 0.0).unwrap();
        }
    }
}

fn oracle_rows(out: &mut String, label: &str, solution: &LqrSolution) {
    for (t, (k, o)) in solution.gains.iter().zip(&solution.offsets).enumerate() {
        gains_rows(out, &format!("K_{label}"), t, k);
        gains_rows(
            out,
            &format!("k_{label}"),
            t,
            &nalgebra::DMatrix::from_column_slice(o.len(), 1, o.as_slice()),
        );
    }
}

pub fn lqg_command(
    problem: Problem,
    alpha: f64,
    iters: usize,
    tol: f64,
    out: &Output,
) -> Result<String, CliError> {
    let problem = lqg(problem)?;
    let config = MMConfig {
        max_iters: iters,
        tol_policy: tol,
        ..MMConfig::default()
    };
    let trace = mm_lqg_from(
        &problem.dynamics,
        &problem.cost,
        alpha,
        problem.prior.clone(),
        &config,
    )?;
    let lqr = riccati_lqr(&problem.dynamics, &problem.cost)?;
    let risk = leqr(&problem.dynamics, &problem.cost);
    let gap = |p: &LinearGaussianPolicy, s: Option<&LqrSolution>| {
        s.map(|s| gain_gap(p, s).to_string()).unwrap_or_default()
    };

    let mut csv = String::from("iter,gain_delta,max_sigma,gap_lqr,gap_leqr\n");
    for (k, policy) in trace.iterates.iter().enumerate() {
        let delta = if k == 0 {
            String::new()
        } else {
            trace.deltas[k - 1].to_string()
        };
        writeln!(
            csv,
            "{k},{delta},{},{},{}",
            policy.max_sigma(),
            gap(policy, Some(&lqr)),
            gap(policy, risk.as_ref().ok())
        )
        .unwrap();
    }
    out.write("trace.csv", &csv)?;

    let mut gains = String::from("t,block,row,col,value\n");
    for (t, step) in trace.policy.steps().iter().enumerate() {
        gains_rows(&mut gains, "K", t, &step.gain);
        gains_rows(
            &mut gains,
            "k",
            t,
            &nalgebra::DMatrix::from_column_slice(step.offset.len(), 1, step.offset.as_slice()),
        );
        gains_rows(&mut gains, "Sigma", t, &step.sigma);
    }
    oracle_rows(&mut gains, "lqr", &lqr);
    let leqr_note = match &risk {
        Ok(s) => {
            oracle_rows(&mut gains, "leqr", s);
            format!("gap to LEQR {}", gain_gap(&trace.policy, s))
        }
        Err(e) => format!("LEQR unavailable: {e}"),
    };
    out.write("gains.csv", &gains)?;
    Ok(format!(
        "α = {alpha}: {} after {} iterations; gap to LQR {}, {leqr_note}\n",
        if trace.converged {
            "converged"
        } else {
            "not converged"
        },
        trace.iterations,
        gain_gap(&trace.policy, &lqr),
    ))
}

pub fn pic(
    problem: Discrete,
    samples: usize,
    seed: u64,
    state: usize,
    time: usize,
    out: &Output,
) -> Result<String, CliError> {
    let Discrete {
        problem,
        cost,
        prior,
    } = problem;
    let value = pic_value_mc(&problem, &prior, &cost, state, time, samples, seed)?;
    let estimate = pic_policy_mc_with_errors(&problem, &prior, &cost, samples, seed)?;
    let (exact_values, exact) = backward_pass(&problem, &cost, &prior, ProjectionKind::M)?;
    let mut csv = String::from("quantity,t,x,u,estimate,std_err,exact\n");
    writeln!(
        csv,
        "value,{time},{state},,{},{},{}",
        value.value, value.std_err, exact_values.v[time][state]
    )
    .unwrap();
    let m = problem.num_actions();
    for t in 0..problem.horizon() {
        for x in 0..problem.num_states() {
            for u in 0..m {
                writeln!(
                    csv,
                    "policy,{t},{x},{u},{},{},{}",
                    estimate.policy.prob(t, x, u),
                    estimate.std_err[t][x * m + u],
                    exact.prob(t, x, u)
                )
                .unwrap();
            }
        }
    }
    out.write("pic.csv", &csv)?;
    Ok(format!(
        "V_{time}({state}) ≈ {} ± {} (exact {}), n = {samples}, seed = {seed}\n",
        value.value, value.std_err, exact_values.v[time][state]
    ))
}

pub fn smooth(problem: Discrete, out: &Output) -> Result<String, CliError> {
    let policy = exact_smoothing(&problem.problem, &problem.prior, &problem.cost)?;
    out.write("policy.csv", &policy_csv(&policy))?;
    Ok("smoothing policy written\n".into())
}

struct Report {
    text: String,
    failed: usize,
}

impl Report {
    fn line(&mut self, passed: Option<bool>, label: &str, detail: String) {
        let status = match passed {
            Some(true) => "PASS",
            Some(false) => {
                self.failed += 1;
                "FAIL"
            }
            None => "SKIP",
        };
        writeln!(self.text, "{status} {label}: {detail}").unwrap();
    }
}

fn max_gap(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| if x == y { 0.0 } else { (x - y).abs() })
        .fold(0.0, f64::max)
}

fn oracle_line(
    report: &mut Report,
    label: &str,
    dp: &OracleSolution,
    search: Result<OracleSolution, Error>,
) -> Result<(), CliError> {
    match search {
        Ok(s) => {
            let gap = (dp.objective - s.objective).abs();
            report.line(
                Some(gap <= 1e-12),
                label,
                format!("|Δ objective| = {gap:e}"),
            );
        }
        Err(Error::Capacity { requested, cap }) => report.line(
            None,
            label,
            format!("{requested} policies exceed the search cap {cap}"),
        ),
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

pub fn check(
    problem: Discrete,
    probes: usize,
    seed: u64,
    out: &Output,
) -> Result<String, CliError> {
    let Discrete {
        problem,
        cost,
        prior,
    } = problem;
    let mut report = Report {
        text: String::new(),
        failed: 0,
    };
    let soc = dp_soc(&problem, &cost)?;
    let rsoc = dp_rsoc(&problem, &cost)?;
    oracle_line(
        &mut report,
        "dp_soc vs exhaustive search (A)",
        &soc,
        exhaustive_policy_search(&problem, &cost, Objective::A),
    )?;
    oracle_line(
        &mut report,
        "dp_rsoc vs exhaustive search (B)",
        &rsoc,
        exhaustive_policy_search(&problem, &cost, Objective::B),
    )?;

    for (mode, oracle, label) in [
        (MmMode::Soc, &soc, "mm(soc) vs dp_soc"),
        (MmMode::Rsoc, &rsoc, "mm(rsoc) vs dp_rsoc"),
    ] {
        let trace = mm_iterate(&problem, &cost, mode, &MMConfig::default())?;
        let det = extract_deterministic(&trace.policy, 1.0);
        let values = policy_evaluation(
            &problem,
            &det.to_policy(problem.num_states(), problem.num_actions()),
            &cost,
        )?;
        let values = match mode {
            MmMode::Soc => values.expected,
            MmMode::Rsoc => values.exponential,
        };
        let gap = max_gap(&values, &oracle.values);
        report.line(
            Some(gap <= CHECK_TOL),
            label,
            format!(
                "max per-state value gap {gap:e} after {} iterations",
                trace.iterations
            ),
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probe_set: Vec<TabularPolicy> = (0..probes)
        .map(|_| {
            random_policy(
                &mut rng,
                problem.num_states(),
                problem.num_actions(),
                problem.horizon(),
            )
        })
        .collect();
    match majorization_report(&problem, &cost, &prior, &probe_set) {
        Ok(MajorizationReport { soc, rsoc }) => {
            report.line(
                Some(soc.passed()),
                "majorization (A)",
                format!(
                    "constant {}, deviation {:e}, domination excess {:e}, tangency gap {:e}",
                    soc.constant, soc.max_deviation, soc.max_domination_excess, soc.tangency_gap
                ),
            );
            report.line(
                Some(rsoc.passed()),
                "majorization (B)",
                format!(
                    "constant {}, deviation {:e}, domination excess {:e}, tangency gap {:e}",
                    rsoc.constant,
                    rsoc.max_deviation,
                    rsoc.max_domination_excess,
                    rsoc.tangency_gap
                ),
            );
        }
        Err(Error::Capacity { requested, cap }) => report.line(
            None,
            "majorization",
            format!("support {requested} exceeds {cap}"),
        ),
        Err(e) => return Err(e.into()),
    }
    match merl_identity_check(&problem, &cost, &probe_set) {
        Ok(c) => report.line(
            Some(c.passed()),
            "entropy-regularized identity",
            format!("constant {}, deviation {:e}", c.constant, c.max_deviation),
        ),
        Err(Error::Capacity { requested, cap }) => report.line(
            None,
            "entropy-regularized identity",
            format!("support {requested} exceeds {cap}"),
        ),
        Err(e) => return Err(e.into()),
    }

    let path = out.write("report.txt", &report.text)?;
    if report.failed > 0 {
        return Err(CliError::CheckFailed {
            failed: report.failed,
            report: path.display().to_string(),
        });
    }
    Ok(report.text)
}

pub fn generate(
    states: usize,
    actions: usize,
    horizon: usize,
    seed: u64,
    deterministic: bool,
) -> Result<String, CliError> {
    if states == 0 || actions == 0 || horizon == 0 {
        return Err(CliError::Usage("dimensions must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = RandomShape {
        num_states: states,
        num_actions: actions,
        horizon,
        deterministic,
    };
    let problem = random_problem(&mut rng, shape);
    let cost = random_cost(&mut rng, &problem);
    Ok(ProblemFile::Discrete(DiscreteFile::from_parts(&problem, &cost)).to_json())
}
