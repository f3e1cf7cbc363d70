//! Acceptance criteria 1-11. Prints one PASS/FAIL line per criterion and
//! exits nonzero when any fails.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use distmatch::lqg::{gain_gap, leqr, mm_lqg, random_lqg, riccati_lqr, scalar_benchmark};
use distmatch::random::{random_cost, random_policy, random_problem, RandomShape};
use distmatch::trajectory::{policy_evaluation, support_size};
use distmatch::{
    backward_pass, closed_loop_equivalence_check, dp_rsoc, dp_soc, exact_smoothing,
    extract_deterministic, fixtures, majorization_report, merl_identity_check, mm_iterate,
    pic_value_mc, CostModel, DiscreteProblem, MMConfig, MmMode, ProjectionKind, TabularPolicy,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ORACLE_TOL: f64 = 1e-6;
const DESCENT_SLACK: f64 = 1e-10;
const RENYI_LIMIT_TOL: f64 = 1e-3;
const COLLAPSE_TOL: f64 = 1e-10;
const DECOMPOSITION_TOL: f64 = 1e-9;
const TANGENCY_TOL: f64 = 1e-12;
const LQG_TOL: f64 = 1e-6;
const TV_TOL: f64 = 1e-9;
const SMOOTHING_TOL: f64 = 1e-10;
const CHAIN2_B: f64 = 0.379885;
const CHAIN2_POLICY: f64 = 0.731059;
const SIX_DIGITS: f64 = 5e-7;
const ENUMERABLE: usize = 1_000_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

struct Instance {
    problem: DiscreteProblem,
    cost: CostModel,
}

fn instance(seed: u64, deterministic: bool) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shape = RandomShape::sample(&mut rng, 5, 4, 5);
    shape.deterministic = deterministic;
    let problem = random_problem(&mut rng, shape);
    let cost = random_cost(&mut rng, &problem);
    Instance { problem, cost }
}

fn full_support_prior(problem: &DiscreteProblem, seed: u64) -> TabularPolicy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_policy(
        &mut rng,
        problem.num_states(),
        problem.num_actions(),
        problem.horizon(),
    )
}

fn max_gap(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| if x == y { 0.0 } else { (x - y).abs() })
        .fold(0.0, f64::max)
}

struct OracleRun {
    worst_gap: f64,
    failures: usize,
    descent_violations: usize,
    iterations: usize,
}

fn oracle_agreement(mode: MmMode, seed_base: u64) -> OracleRun {
    let config = MMConfig::default();
    let mut run = OracleRun {
        worst_gap: 0.0,
        failures: 0,
        descent_violations: 0,
        iterations: 0,
    };
    for i in 0..100 {
        let Instance { problem, cost } = instance(seed_base + i, false);
        let trace = mm_iterate(&problem, &cost, mode, &config).expect("mm runs");
        let det = extract_deterministic(&trace.policy, 1.0);
        let values = policy_evaluation(
            &problem,
            &det.to_policy(problem.num_states(), problem.num_actions()),
            &cost,
        )
        .expect("evaluation runs");
        let (ours, oracle) = match mode {
            MmMode::Soc => (values.expected, dp_soc(&problem, &cost).expect("dp").values),
            MmMode::Rsoc => (
                values.exponential,
                dp_rsoc(&problem, &cost).expect("dp").values,
            ),
        };
        let gap = max_gap(&ours, &oracle);
        run.worst_gap = run.worst_gap.max(gap);
        run.failures += usize::from(gap.is_nan() || gap > ORACLE_TOL);
        let monitored: Vec<f64> = trace.monitored().collect();
        run.descent_violations += monitored
            .windows(2)
            .filter(|w| w[1] > w[0] + DESCENT_SLACK)
            .count();
        run.iterations += trace.iterations;
    }
    run
}

fn criterion_4() -> Outcome {
    let grid: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
    let (mut worst_i, mut worst_m, mut monotone_breaks) = (0.0f64, 0.0f64, 0usize);
    for i in 0..50 {
        let Instance { problem, cost } = instance(4_000 + i, false);
        let prior = TabularPolicy::uniform_for(&problem);
        let q = |kind| {
            backward_pass(&problem, &cost, &prior, kind)
                .expect("pass")
                .0
        };
        let q_i = q(ProjectionKind::I);
        let q_m = q(ProjectionKind::M);
        worst_i = worst_i.max(q(ProjectionKind::Renyi(1e-4)).q_distance(&q_i));
        worst_m = worst_m.max(q(ProjectionKind::Renyi(1.0 - 1e-4)).q_distance(&q_m));
        let tables: Vec<_> = grid.iter().map(|a| q(ProjectionKind::Renyi(*a))).collect();
        for pair in tables.windows(2) {
            monotone_breaks += pair[1]
                .q
                .iter()
                .flatten()
                .zip(pair[0].q.iter().flatten())
                .filter(|(hi, lo)| **hi > **lo + 1e-12)
                .count();
        }
    }
    outcome(
        worst_i <= RENYI_LIMIT_TOL && worst_m <= RENYI_LIMIT_TOL && monotone_breaks == 0,
        format!(
            "max |Q(1e-4) - Q_I| = {worst_i:.3e}, max |Q(1-1e-4) - Q_M| = {worst_m:.3e}, \
             {monotone_breaks} monotonicity breaks over the 9-point grid"
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..50 {
        let Instance { problem, cost } = instance(5_000 + i, true);
        let prior = full_support_prior(&problem, 5_500 + i);
        let (_, p_i) = backward_pass(&problem, &cost, &prior, ProjectionKind::I).expect("pass");
        let (_, p_m) = backward_pass(&problem, &cost, &prior, ProjectionKind::M).expect("pass");
        worst = worst.max(p_i.sup_distance(&p_m));
    }
    outcome(
        worst <= COLLAPSE_TOL,
        format!("max |π_I - π_M| = {worst:.3e} over 50 deterministic problems"),
    )
}

fn decomposition_instances() -> Vec<(DiscreteProblem, CostModel, TabularPolicy)> {
    let (problem, cost) = fixtures::chain2();
    let prior = TabularPolicy::uniform_for(&problem);
    let mut all = vec![(problem, cost, prior)];
    for i in 0..10 {
        let Instance { problem, cost } = instance(6_000 + i, false);
        let prior = full_support_prior(&problem, 6_500 + i);
        all.push((problem, cost, prior));
    }
    all
}

fn probes(problem: &DiscreteProblem, seed: u64) -> Vec<TabularPolicy> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..50)
        .map(|_| {
            random_policy(
                &mut rng,
                problem.num_states(),
                problem.num_actions(),
                problem.horizon(),
            )
        })
        .collect()
}

fn criterion_6() -> Outcome {
    let (mut deviation, mut tangency, mut excess, mut skipped) = (0.0f64, 0.0f64, f64::MIN, 0);
    let mut chain2_constant = f64::NAN;
    for (i, (problem, cost, prior)) in decomposition_instances().into_iter().enumerate() {
        let report =
            majorization_report(&problem, &cost, &prior, &probes(&problem, 6_900 + i as u64))
                .expect("report");
        for check in [&report.soc, &report.rsoc] {
            deviation = deviation.max(check.max_deviation);
            tangency = tangency.max(check.tangency_gap);
            excess = excess.max(check.max_domination_excess);
            skipped += check.skipped;
        }
        if i == 0 {
            chain2_constant = report.soc.constant;
        }
    }
    outcome(
        deviation < DECOMPOSITION_TOL
            && tangency <= TANGENCY_TOL
            && excess <= DECOMPOSITION_TOL
            && (chain2_constant - CHAIN2_B).abs() < SIX_DIGITS,
        format!(
            "max deviation {deviation:.3e}, max tangency gap {tangency:.3e}, \
             max domination excess {excess:.3e}, {skipped} probes skipped, \
             chain-2 constant {chain2_constant:.6}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut deviation = 0.0f64;
    let mut skipped = 0;
    for (i, (problem, cost, _)) in decomposition_instances().into_iter().enumerate() {
        let check = merl_identity_check(&problem, &cost, &probes(&problem, 7_900 + i as u64))
            .expect("identity");
        deviation = deviation.max(check.max_deviation);
        skipped += check.skipped;
    }
    outcome(
        deviation < DECOMPOSITION_TOL,
        format!("max deviation {deviation:.3e} over 11 problems, {skipped} probes skipped"),
    )
}

fn criterion_8() -> Outcome {
    let config = MMConfig {
        max_iters: 50,
        tol_policy: 1e-12,
        ..MMConfig::default()
    };
    let mut cases = vec![scalar_benchmark(0.1, 1).expect("benchmark")];
    let mut rng = ChaCha8Rng::seed_from_u64(8_000);
    for _ in 0..20 {
        let n = rng.gen_range(1..=3);
        let m = rng.gen_range(1..=3);
        let horizon = rng.gen_range(1..=10);
        cases.push(random_lqg(&mut rng, n, m, horizon).expect("instance"));
    }
    let (mut worst_lqr, mut worst_leqr, mut failures) = (0.0f64, 0.0f64, 0);
    let mut scalar_gain = f64::NAN;
    for (i, (dynamics, cost)) in cases.iter().enumerate() {
        let soc = mm_lqg(dynamics, cost, 0.0, &config).expect("mm lqg");
        let rsoc = mm_lqg(dynamics, cost, 1.0, &config).expect("mm lqg");
        let gap_lqr = gain_gap(&soc.policy, &riccati_lqr(dynamics, cost).expect("riccati"));
        let gap_leqr = gain_gap(&rsoc.policy, &leqr(dynamics, cost).expect("leqr"));
        worst_lqr = worst_lqr.max(gap_lqr);
        worst_leqr = worst_leqr.max(gap_leqr);
        failures += usize::from(!(gap_lqr < LQG_TOL && gap_leqr < LQG_TOL));
        if i == 0 {
            scalar_gain = soc.policy.step(0).gain[(0, 0)];
        }
    }
    outcome(
        failures == 0 && (scalar_gain + 0.5).abs() < LQG_TOL,
        format!(
            "after 50 iterations: max gap to LQR {worst_lqr:.3e}, to LEQR {worst_leqr:.3e}, \
             {failures}/21 instances over {LQG_TOL:e}; scalar benchmark K = {scalar_gain:.6}"
        ),
    )
}

fn criterion_9() -> Outcome {
    let (mut worst_tv, mut worst_tv_det) = (0.0f64, 0.0f64);
    for (deterministic, worst) in [(false, &mut worst_tv), (true, &mut worst_tv_det)] {
        let enumerable = (9_000..)
            .map(|seed| (seed, instance(seed, deterministic)))
            .filter(|(_, inst)| support_size(&inst.problem) <= ENUMERABLE as u128)
            .take(20);
        for (seed, Instance { problem, cost }) in enumerable {
            let prior = full_support_prior(&problem, seed + 500);
            let tv = closed_loop_equivalence_check(&problem, &prior, &cost).expect("tv");
            *worst = worst.max(tv);
        }
    }

    let (problem, cost) = fixtures::chain2();
    let prior = TabularPolicy::uniform_for(&problem);
    let exact = -(0.5 + 0.5 * (-1.0f64).exp()).ln();
    let covered = (0..100)
        .filter(|seed| {
            let est = pic_value_mc(&problem, &prior, &cost, 0, 0, 100_000, *seed).expect("mc");
            (est.value - CHAIN2_B).abs() <= 3.0 * est.std_err
        })
        .count();

    let sizes = [100usize, 1_000, 10_000, 100_000];
    let points: Vec<(f64, f64)> = sizes
        .iter()
        .map(|n| {
            let mean_err = (0..20)
                .map(|seed| {
                    let est =
                        pic_value_mc(&problem, &prior, &cost, 0, 0, *n, 1_000 + seed).expect("mc");
                    (est.value - exact).abs()
                })
                .sum::<f64>()
                / 20.0;
            ((*n as f64).ln(), mean_err.ln())
        })
        .collect();
    let (mx, my) = (
        points.iter().map(|p| p.0).sum::<f64>() / 4.0,
        points.iter().map(|p| p.1).sum::<f64>() / 4.0,
    );
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();

    outcome(
        worst_tv < TV_TOL && covered >= 95 && (-0.65..=-0.35).contains(&slope),
        format!(
            "max TV {worst_tv:.3e} on 20 stochastic problems ({worst_tv_det:.3e} with \
             point-mass transitions); {covered}/100 seeds within 3 s.e. of {CHAIN2_B}; \
             log-error slope {slope:.3}"
        ),
    )
}

fn criterion_10() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..50 {
        let Instance { problem, cost } = instance(10_000 + i, false);
        let prior = full_support_prior(&problem, 10_500 + i);
        let smoothed = exact_smoothing(&problem, &prior, &cost).expect("smoothing");
        let (_, m) = backward_pass(&problem, &cost, &prior, ProjectionKind::M).expect("pass");
        worst = worst.max(smoothed.sup_distance(&m));
    }
    let (problem, cost) = fixtures::chain2();
    let smoothed =
        exact_smoothing(&problem, &TabularPolicy::uniform_for(&problem), &cost).expect("smoothing");
    let p = smoothed.prob(0, 0, 0);
    outcome(
        worst <= SMOOTHING_TOL && (p - CHAIN2_POLICY).abs() < SIX_DIGITS,
        format!("max |smoothing - π_M| = {worst:.3e} over 50 problems; chain-2 π_0(0|0) = {p:.6}"),
    )
}

fn problem_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("problems")
        .join(name)
}

fn cli_outputs(args: &[String], dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_distmatch"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(format!(
            "`{}` failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&status.stderr).trim()
        ));
    }
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|entry| {
            let path = entry.expect("entry").path();
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            (name, std::fs::read(&path).expect("readable"))
        })
        .collect();
    files.push(("stdout".into(), status.stdout));
    files.sort();
    Ok(files)
}

fn criterion_11() -> Outcome {
    let chain = problem_path("chain2.json").display().to_string();
    let stochastic = problem_path("stochastic_chain2.json").display().to_string();
    let random4 = problem_path("random4.json").display().to_string();
    let scalar = problem_path("scalar_lqg.json").display().to_string();
    let commands: Vec<Vec<String>> = [
        vec!["project", "--kind", "i", &stochastic],
        vec!["project", "--kind", "m", &random4],
        vec!["project", "--kind", "renyi", "--alpha", "0.5", &stochastic],
        vec!["mm", "--mode", "soc", &random4],
        vec!["mm", "--mode", "rsoc", "--init", "prior", &chain],
        vec!["lqg", "--alpha", "0", &scalar],
        vec!["lqg", "--alpha", "1", &scalar],
        vec!["pic", "--samples", "20000", "--seed", "7", &random4],
        vec!["smooth", &stochastic],
        vec!["check", &random4],
        vec!["generate", "--seed", "11", "--deterministic"],
    ]
    .iter()
    .map(|c| c.iter().map(|s| s.to_string()).collect())
    .collect();
    let mut mismatched = Vec::new();
    let mut files = 0;
    for args in &commands {
        let runs: Result<Vec<_>, String> = (0..2)
            .map(|_| {
                let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
                cli_outputs(args, dir.path())
            })
            .collect();
        match runs {
            Ok(runs) if runs[0] == runs[1] => files += runs[0].len(),
            Ok(_) => mismatched.push(args[0].clone()),
            Err(e) => return outcome(false, e),
        }
    }
    outcome(
        mismatched.is_empty(),
        format!(
            "{} commands, {files} outputs compared byte for byte; mismatches: {:?}",
            commands.len(),
            mismatched
        ),
    )
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: usize, o: Outcome| {
        println!(
            "criterion {n}: {} - {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    };

    let start = Instant::now();
    let soc = oracle_agreement(MmMode::Soc, 1_000);
    let elapsed = start.elapsed().as_secs_f64();
    let rsoc = oracle_agreement(MmMode::Rsoc, 2_000);
    report(
        1,
        outcome(
            soc.failures == 0 && elapsed < 60.0,
            format!(
                "{}/100 problems within {ORACLE_TOL:e} (worst {:.3e}), {} iterations, {elapsed:.2} s",
                100 - soc.failures,
                soc.worst_gap,
                soc.iterations
            ),
        ),
    );
    report(
        2,
        outcome(
            rsoc.failures == 0,
            format!(
                "{}/100 problems within {ORACLE_TOL:e} (worst {:.3e}), {} iterations",
                100 - rsoc.failures,
                rsoc.worst_gap,
                rsoc.iterations
            ),
        ),
    );
    let violations = soc.descent_violations + rsoc.descent_violations;
    report(
        3,
        outcome(
            violations == 0,
            format!(
                "{violations} descent violations over {} monitored steps",
                soc.iterations + rsoc.iterations
            ),
        ),
    );
    report(4, criterion_4());
    report(5, criterion_5());
    report(6, criterion_6());
    report(7, criterion_7());
    report(8, criterion_8());
    report(9, criterion_9());
    report(10, criterion_10());
    report(11, criterion_11());

    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
