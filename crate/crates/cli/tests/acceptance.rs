//! Acceptance suite: one line per criterion, each at its stated tolerance and
//! runtime budget. Runs as a plain binary (`harness = false`) so the report
//! prints in order; exits non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use prodcredit::banksim::{
    check_compliance, random_run, violating_record, BankLedger, BankSystem, ComplianceRule,
    RandomRunConfig,
};
use prodcredit::credit::{
    compute_repayment_plan, golden_motivation, settle_loan, EnterpriseModel, LoanTerms,
    RealizedPath,
};
use prodcredit::hjm::{
    drift_residual, evolve_map, implied_diffusion_from_growth, jump_kernel, jump_term, transforms,
    HjmCoefficients, HjmError, JumpQuadrature, Surface,
};
use prodcredit::sovereign::{
    implied_forward, price_bond, BondQuote, Convention, GrowthSurface, TaxProcess,
};
use prodcredit::stochastics::{
    path_rng, DiffusionSpec, JumpLaw, McConfig, McEstimate, ProcessModel, TimeGrid,
};
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    title: &'static str,
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn motivation_golden() -> Outcome {
    let r = golden_motivation().map_err(|e| e.to_string())?;
    let o = r.outcome;
    check(
        r.terms.principal == 10.0
            && o.total_repaid == 11.0
            && o.bank_loss == 0.0
            && o.bank_gain == 1.0,
        format!(
            "C={} E={} loss={} gain={}",
            r.terms.principal, o.total_repaid, o.bank_loss, o.bank_gain
        ),
    )
}

/// Productivity with accelerating output and an exponentially rising price,
/// both without noise, so the plan and the realization coincide.
fn deterministic_model() -> EnterpriseModel {
    let productivity = DiffusionSpec::new(
        0.0,
        std::sync::Arc::new(|t, _| 30.0 + 12.0 * t),
        vec![std::sync::Arc::new(|_, _| 0.0)],
    )
    .expect("valid spec");
    EnterpriseModel {
        productivity: ProcessModel::diffusion(productivity),
        price_ratio: ProcessModel::diffusion(DiffusionSpec::gbm(2.0, 0.04, 0.0)),
    }
}

fn plan_consistency() -> Outcome {
    let model = deterministic_model();
    let mut worst_a: f64 = 0.0;
    let mut worst_e: f64 = 0.0;
    for n in [1, 2, 4, 12] {
        let c = 180.0;
        let terms = LoanTerms::new(c, 2.0, n).with_interest(1.0, 3, 0.08);
        let mc = McConfig {
            n_paths: 4,
            seed: 11,
            steps_per_year: 60,
        };
        let plan = compute_repayment_plan(&terms, &model, &mc).map_err(|e| e.to_string())?;
        let end = terms.end();
        let grid =
            TimeGrid::new(0.0, end, (end * 60.0).ceil() as usize).map_err(|e| e.to_string())?;
        let pi = model
            .productivity
            .simulate(&grid, 1, 99)
            .map_err(|e| e.to_string())?;
        let px = model
            .price_ratio
            .simulate(&grid, 1, 98)
            .map_err(|e| e.to_string())?;
        let realized = RealizedPath::new(grid, pi.path(0).to_vec(), px.path(0).to_vec())
            .map_err(|e| e.to_string())?;
        let o = settle_loan(&terms, &plan, &realized).map_err(|e| e.to_string())?;
        worst_a = worst_a.max((o.market_value - c).abs() / c);
        worst_e =
            worst_e.max((o.total_repaid - (o.market_value + o.interest)).abs() / o.total_repaid);
    }
    check(
        worst_a <= 1e-12 && worst_e <= 1e-12,
        format!("max rel |A-C| = {worst_a:e}, max rel |E-(A+J)| = {worst_e:e}"),
    )
}

/// `(rpr, std_error, oracle)` per repayment window.
type PlanComparison = (Vec<f64>, Vec<f64>, Vec<f64>);

fn gbm_plan(n_paths: usize) -> Result<PlanComparison, String> {
    let (c, n, rate, sigma) = (10.0, 4, 10.0, 0.2);
    let terms = LoanTerms::new(c, 1.0, n);
    let model = EnterpriseModel {
        productivity: ProcessModel::diffusion(DiffusionSpec::linear(0.0, rate)),
        price_ratio: ProcessModel::diffusion(DiffusionSpec::gbm(1.0, 0.0, sigma)),
    };
    let mc = McConfig {
        n_paths,
        seed: 20240611,
        steps_per_year: 100,
    };
    let plan = compute_repayment_plan(&terms, &model, &mc).map_err(|e| e.to_string())?;
    // Lognormal oracle: E[1/S_t] = exp(σ² t) for S_0 = 1 and zero drift.
    let oracle = plan
        .repayment_instants()
        .windows(2)
        .map(|w| (c / n as f64) * (sigma * sigma * w[1]).exp() / (rate * (w[1] - w[0])))
        .collect();
    Ok((plan.rpr().to_vec(), plan.rpr_std_error().to_vec(), oracle))
}

fn gbm_repayment_plan() -> Outcome {
    let (rpr, se, oracle) = gbm_plan(100_000)?;
    let worst_z = rpr
        .iter()
        .zip(&se)
        .zip(&oracle)
        .map(|((r, s), o)| (r - o).abs() / s)
        .fold(0.0, f64::max);
    let (_, se4, _) = gbm_plan(400_000)?;
    let ratios: Vec<f64> = se4.iter().zip(&se).map(|(a, b)| a / b).collect();
    let ratio_ok = ratios.iter().all(|r| (0.4..=0.6).contains(r));
    check(
        worst_z <= 3.0 && ratio_ok,
        format!("max |rpr - oracle|/se = {worst_z:.3}, se ratio at 4x paths = {ratios:.3?}"),
    )
}

/// Largest interior `|implied − input|` over rows `t ∈ {0, 1}` on `[t, 3]`.
fn round_trip<F: Fn(f64, f64) -> f64 + Copy>(f: F, step: f64) -> Result<f64, String> {
    let ts = [0.0, 1.0];
    let s_max = 3.0;
    let surface = GrowthSurface::from_fn(&ts, s_max, step, f).map_err(|e| e.to_string())?;
    let tax = TaxProcess::Constant(250.0);
    let mut worst: f64 = 0.0;
    for &t in &ts {
        let n = ((s_max - t) / step).round() as usize;
        let quotes = (0..=n)
            .map(|k| {
                price_bond(
                    &tax,
                    &surface,
                    t,
                    t + k as f64 * step,
                    0.05,
                    Convention::AsPrinted,
                )
            })
            .collect::<Result<Vec<BondQuote>, _>>()
            .map_err(|e| e.to_string())?;
        let fwd = implied_forward(&quotes, Convention::AsPrinted).map_err(|e| e.to_string())?;
        for p in &fwd[1..fwd.len() - 1] {
            worst = worst.max((p.rate - f(t, p.maturity)).abs());
        }
    }
    Ok(worst)
}

fn bond_round_trip() -> Outcome {
    let constant = round_trip(|_, _| 0.025, 0.01)?;
    let linear = round_trip(|t, s| 0.01 + 0.015 * s - 0.005 * t, 0.01)?;
    // Constant and linear surfaces are reproduced to round-off, so the
    // convergence order is measured on a curved surface.
    let curved = |t: f64, s: f64| 0.02 + 0.03 * (s - t).powi(2) + 0.01 * (1.5 * s).cos();
    let e1 = round_trip(curved, 0.02)?;
    let e2 = round_trip(curved, 0.01)?;
    let ratio = e1 / e2;
    check(
        constant <= 1e-6 && linear <= 1e-6 && (3.0..=5.0).contains(&ratio),
        format!("constant {constant:e}, linear {linear:e}, curved ratio h→h/2 = {ratio:.3}"),
    )
}

fn hjm_drift_condition() -> Outcome {
    let grid = TimeGrid::new(0.0, 3.0, 120).map_err(|e| e.to_string())?;
    let quad = JumpQuadrature::default();
    let mut worst: f64 = 0.0;
    for sigma0 in [0.005, 0.01, 0.02] {
        let r = drift_residual(&HjmCoefficients::ho_lee(sigma0), &grid, &quad)
            .map_err(|e| e.to_string())?;
        worst = worst.max(r.max_abs);
    }
    let perturbed = drift_residual(
        &HjmCoefficients::ho_lee(0.01).with_drift_shift(1e-4),
        &grid,
        &quad,
    )
    .map_err(|e| e.to_string())?;
    check(
        worst <= 1e-10 && perturbed.max_abs >= 5e-5,
        format!(
            "Ho-Lee max |R| = {worst:e}, perturbed max |R| = {:e}",
            perturbed.max_abs
        ),
    )
}

fn martingale() -> Outcome {
    let sigma0 = 0.012;
    let grid = TimeGrid::new(0.0, 2.0, 40).map_err(|e| e.to_string())?;
    let f0: Vec<f64> = grid
        .points()
        .iter()
        .map(|u| 0.03 + 0.004 * u - 0.001 * u * u)
        .collect();
    // Oracle P(0, T*) = exp(−∫₀² f0), integrated in closed form.
    let p0 = (-(0.03 * 2.0 + 0.002 * 4.0 - 0.001 * 8.0 / 3.0_f64)).exp();
    let last = grid.n_points() - 1;
    let times = [0.25, 0.5, 1.0];
    let idx: Vec<usize> = times
        .iter()
        .map(|&t| (t / grid.step()).round() as usize)
        .collect();
    let samples = evolve_map(
        &HjmCoefficients::ho_lee(sigma0),
        &f0,
        &grid,
        10_000,
        31,
        |s| {
            idx.iter()
                .map(|&i| s.discount(i) * s.bond_price(i, last))
                .collect::<Vec<f64>>()
        },
    )
    .map_err(|e| e.to_string())?;
    let mut zs = Vec::new();
    for k in 0..times.len() {
        let col: Vec<f64> = samples.iter().map(|v| v[k]).collect();
        let est = McEstimate::from_samples(&col).map_err(|e| e.to_string())?;
        zs.push((est.mean - p0) / est.std_error);
    }
    check(
        zs.iter().all(|z| z.abs() <= 3.0),
        format!("(mean − P(0,T*))/se at t = {times:?}: {zs:.3?}"),
    )
}

fn feasibility() -> Outcome {
    let grid = TimeGrid::new(0.0, 2.0, 200).map_err(|e| e.to_string())?;
    let sigma0 = 0.015;
    let alpha_p = Surface::from_fn(grid, |t, u| -sigma0 * sigma0 * (u - t));
    let half = implied_diffusion_from_growth(&alpha_p, None).map_err(|e| e.to_string())?;
    let worst = half
        .iter()
        .map(|(i, j, v)| {
            (v - 0.5 * sigma0 * sigma0 * (grid.point(j) - grid.point(i)).powi(2)).abs()
        })
        .fold(0.0, f64::max);
    let positive = implied_diffusion_from_growth(&Surface::from_fn(grid, |_, _| 2e-3), None);
    let raised = matches!(positive, Err(HjmError::Infeasible { .. }));
    check(
        worst <= 1e-9 && raised,
        format!("max |½S² − ½σ₀²τ²| = {worst:e}, positive drift infeasible: {raised}"),
    )
}

/// Box–Muller, so the oracle does not share the library's sampler.
fn normal(rng: &mut impl Rng, mean: f64, std: f64) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    mean + std * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn jump_terms() -> Outcome {
    let mut rng = seeded_rng(5);
    let mut negatives = 0;
    for _ in 0..10_000 {
        let d =
            10f64.powf(rng.random_range(-9.0..1.5)) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        if jump_kernel(d) < 0.0 {
            negatives += 1;
        }
    }

    let (sigma0, lambda, delta0) = (0.01, 2.0, 0.05);
    let (mean, std) = (0.5, 0.3);
    let coeffs =
        HjmCoefficients::ho_lee_with_jumps(sigma0, lambda, JumpLaw::Normal { mean, std }, delta0);
    let grid = TimeGrid::new(0.0, 1.0, 80).map_err(|e| e.to_string())?;
    let quad = JumpQuadrature::MonteCarlo {
        n_samples: 20_000,
        seed: 17,
    };
    let report = drift_residual(&coeffs, &grid, &quad).map_err(|e| e.to_string())?;
    let lib_jump = jump_term(&coeffs, &grid, &quad).map_err(|e| e.to_string())?;
    let tr = transforms(&coeffs, &grid).map_err(|e| e.to_string())?;

    // Oracle jump integral: λ·E[e^D − 1 − D] with D = −δ₀xτ, averaged over
    // a Box–Muller sample twenty times larger than the one under test.
    let marks: Vec<f64> = (0..400_000).map(|_| normal(&mut rng, mean, std)).collect();
    let oracle_jump = |tau: f64| {
        lambda
            * marks
                .iter()
                .map(|x| jump_kernel(-delta0 * x * tau))
                .sum::<f64>()
            / marks.len() as f64
    };
    let oracle: Vec<f64> = (0..grid.n_points())
        .map(|k| oracle_jump(k as f64 * grid.step()))
        .collect();
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst: f64 = 0.0;
    for (i, j, r) in report.residual.iter() {
        let r_oracle = tr.a.get(i, j) + tr.half_s_squared(i, j) + oracle[j - i];
        let diff = (r - r_oracle).abs();
        worst = worst.max(diff);
        worst_excess = worst_excess.max(diff - lib_jump.bound.get(i, j));
    }
    let gl = drift_residual(&coeffs, &grid, &JumpQuadrature::GaussLegendre { nodes: 32 })
        .map_err(|e| e.to_string())?;
    let mut gl_vs_mc: f64 = 0.0;
    for (i, j, r) in report.residual.iter() {
        gl_vs_mc = gl_vs_mc.max((r - gl.residual.get(i, j)).abs());
    }
    check(
        negatives == 0 && worst_excess <= 0.0,
        format!(
            "kernel negatives {negatives}/10000; max |R − R_oracle| = {worst:e} within pointwise bound (max {:e}); GL vs MC {gl_vs_mc:e}",
            report.quadrature_bound
        ),
    )
}

fn seeded_rng(seed: u64) -> rand::rngs::StdRng {
    rand::rngs::StdRng::seed_from_u64(seed)
}

fn bank_system() -> BankSystem {
    BankSystem::new(
        vec![
            BankLedger::new("atlas", 900.0, 90.0),
            BankLedger::new("birch", 400.0, 30.0),
            BankLedger::new("cedar", 700.0, 55.0),
            BankLedger::new("dune", 250.0, 20.0),
            BankLedger::new("elm", 1_200.0, 140.0),
        ],
        1.0,
    )
}

fn bank_invariants() -> Outcome {
    let mut worst_drift: f64 = 0.0;
    let mut false_positives = 0;
    let mut seeded = 0;
    let mut detected = 0;
    let mut rng = seeded_rng(9);
    for seed in 0..10u64 {
        let mut sys = bank_system();
        let cfg = RandomRunConfig {
            n_events: 1_000,
            ..RandomRunConfig::default()
        };
        random_run(&mut sys, &cfg, &mut path_rng(seed, 0));
        worst_drift =
            worst_drift.max((sys.conserved_total() - sys.initial_total() - sys.injected()).abs());
        let clean = sys.history().to_vec();
        false_positives += check_compliance(&clean, sys.initial())
            .map_err(|e| e.to_string())?
            .violations
            .len();
        let ids: Vec<String> = sys.ledgers().iter().map(|l| l.id.clone()).collect();
        for rule in ComplianceRule::ALL {
            for _ in 0..10 {
                let at = rng.random_range(0..=clean.len());
                let time = if at == 0 { 0.0 } else { clean[at - 1].time };
                let b = rng.random_range(0..ids.len());
                let rec = violating_record(rule, &ids[b], &ids[(b + 2) % ids.len()], time, 2.5);
                let mut history = clean.clone();
                history.insert(at, rec);
                let report =
                    check_compliance(&history, sys.initial()).map_err(|e| e.to_string())?;
                seeded += 1;
                if report
                    .violations
                    .iter()
                    .any(|v| v.rule == rule && v.record_index == at)
                {
                    detected += 1;
                }
            }
        }
    }
    check(
        worst_drift <= 1e-9 && false_positives == 0 && detected == seeded,
        format!("max drift {worst_drift:e}, false positives {false_positives}, detected {detected}/{seeded}"),
    )
}

const SUBCOMMANDS: [&str; 9] = [
    "loan-plan",
    "loan-settle",
    "bond-price",
    "bond-forward",
    "gamma",
    "hjm-evolve",
    "hjm-check",
    "hjm-implied-vol",
    "bank-sim",
];

fn run_cli(args: &[&str], out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_prodcredit"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("PRODCREDIT_LOG")
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.success() {
        Ok(())
    } else {
        Err(format!(
            "{args:?} failed: {}",
            String::from_utf8_lossy(&status.stderr)
        ))
    }
}

fn dir_bytes(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| {
            let e = e.map_err(|e| e.to_string())?;
            let bytes = std::fs::read(e.path()).map_err(|e| e.to_string())?;
            Ok((e.file_name().to_string_lossy().into_owned(), bytes))
        })
        .collect::<Result<_, String>>()?;
    files.sort();
    Ok(files)
}

fn determinism() -> Outcome {
    let scenario = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/demo.toml");
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut mismatches = Vec::new();
    let mut n_files = 0;
    for cmd in SUBCOMMANDS.iter().copied().chain(["golden-motivation"]) {
        let mut outputs = Vec::new();
        for (run, threads) in [(0, "1"), (1, "1"), (2, "4")] {
            let out = root.path().join(format!("{cmd}-{run}"));
            let args: Vec<&str> = if cmd == "golden-motivation" {
                vec![cmd]
            } else {
                vec![
                    cmd,
                    "--scenario",
                    scenario,
                    "--threads",
                    threads,
                    "--paths",
                    "2000",
                ]
            };
            run_cli(&args, &out)?;
            outputs.push(dir_bytes(&out)?);
        }
        n_files += outputs[0].len();
        if outputs[0].is_empty() || outputs.iter().any(|o| o != &outputs[0]) {
            mismatches.push(cmd);
        }
    }
    check(
        mismatches.is_empty(),
        format!("{} subcommands, {n_files} files, identical across repeat and --threads 1/4; mismatches {mismatches:?}", SUBCOMMANDS.len() + 1),
    )
}

fn main() {
    // `cargo test -- --list` and filters are not meaningful here.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria = [
        Criterion {
            id: 1,
            title: "motivation golden",
            budget: Some(Duration::from_secs(1)),
            run: motivation_golden,
        },
        Criterion {
            id: 2,
            title: "plan/settlement consistency",
            budget: Some(Duration::from_secs(1)),
            run: plan_consistency,
        },
        Criterion {
            id: 3,
            title: "Monte Carlo repayment plan",
            budget: Some(Duration::from_secs(30)),
            run: gbm_repayment_plan,
        },
        Criterion {
            id: 4,
            title: "bond round trip",
            budget: Some(Duration::from_secs(5)),
            run: bond_round_trip,
        },
        Criterion {
            id: 5,
            title: "HJM drift condition",
            budget: Some(Duration::from_secs(5)),
            run: hjm_drift_condition,
        },
        Criterion {
            id: 6,
            title: "martingale check",
            budget: Some(Duration::from_secs(60)),
            run: martingale,
        },
        Criterion {
            id: 7,
            title: "growth-drift feasibility",
            budget: Some(Duration::from_secs(2)),
            run: feasibility,
        },
        Criterion {
            id: 8,
            title: "jump-term properties",
            budget: Some(Duration::from_secs(30)),
            run: jump_terms,
        },
        Criterion {
            id: 9,
            title: "bank invariants",
            budget: Some(Duration::from_secs(10)),
            run: bank_invariants,
        },
        Criterion {
            id: 10,
            title: "CLI determinism",
            budget: None,
            run: determinism,
        },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = (c.run)();
        let elapsed = start.elapsed();
        let over = c.budget.is_some_and(|b| elapsed > b);
        let (tag, detail) = match (&result, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => (
                "FAIL",
                format!("{d}; over the {:?} budget", c.budget.expect("budget")),
            ),
            (Err(d), _) => ("FAIL", d.clone()),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!(
            "{tag} criterion {:>2} {} [{:.2?}]: {detail}",
            c.id, c.title, elapsed
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
