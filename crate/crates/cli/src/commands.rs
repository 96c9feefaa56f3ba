use std::collections::BTreeMap;
use std::path::PathBuf;

use log::{info, warn};
use prodcredit::banksim::{
    check_compliance, random_run, violating_record, BankLedger, BankSystem, FundSource,
    RandomRunConfig, TransferKind,
};
use prodcredit::credit::{
    build_income_loan, compute_repayment_plan, golden_motivation, settle_income_loan, settle_loan,
    DefaultState, RealizedPath,
};
use prodcredit::hjm::{
    drift_residual, evolve_map_range, implied_diffusion_from_growth, integrate_growth_model,
    Surface,
};
use prodcredit::quadrature::trapezoid;
use prodcredit::sovereign::{
    gamma, gamma_rate, implied_forward, price_bond, BondQuote, GrowthSurface,
};
use prodcredit::stochastics::{derive_seed, path_rng, McConfig, McEstimate, TimeGrid};
use serde_json::json;

use crate::error::{CliError, Context, Result};
use crate::output::{num, write_json, Table};
use crate::scenario::{DriftDef, EventDef, LoanModel, Scenario, SourceDef};

/// Resolved command-line settings.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub seed: u64,
    pub paths: Option<usize>,
    /// Restrict to one named block.
    pub name: Option<String>,
}

/// What a subcommand produced: summary lines for stdout and files written.
#[derive(Debug, Default)]
pub struct Report {
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl Report {
    fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }
}

fn select<'a, T>(
    map: &'a BTreeMap<String, T>,
    name: Option<&str>,
    table: &str,
) -> Result<Vec<(&'a str, &'a T)>> {
    match name {
        Some(n) => map
            .get_key_value(n)
            .map(|(k, v)| vec![(k.as_str(), v)])
            .ok_or_else(|| CliError::Config(format!("no [{table}.{n}] block in the scenario"))),
        None if map.is_empty() => Err(CliError::Config(format!(
            "the scenario defines no [{table}.*] blocks"
        ))),
        None => Ok(map.iter().map(|(k, v)| (k.as_str(), v)).collect()),
    }
}

fn mc_config(sc: &Scenario, opts: &RunOptions) -> McConfig {
    McConfig {
        n_paths: opts.paths.unwrap_or(sc.monte_carlo.paths),
        seed: opts.seed,
        steps_per_year: sc.monte_carlo.steps_per_year,
    }
}

fn mc_grid(end: f64, mc: &McConfig) -> Result<TimeGrid> {
    let steps = (end * mc.steps_per_year as f64).ceil().max(1.0) as usize;
    TimeGrid::new(0.0, end, steps).context("simulation grid")
}

pub fn loan_plan(sc: &Scenario, opts: &RunOptions) -> Result<Report> {
    let mut report = Report::default();
    let mc = mc_config(sc, opts);
    for (name, def) in select(&sc.loans, opts.name.as_deref(), "loans")? {
        let terms = def.terms();
        let ctx = format!("loans.{name}");
        let plan = match sc.loan_model(name, def)? {
            LoanModel::Production(model) => {
                compute_repayment_plan(&terms, &model, &mc).context(&ctx)?
            }
            LoanModel::Income { income, fraction } => {
                build_income_loan(&terms, &income, fraction, &mc).context(&ctx)?
            }
        };
        let mut t = Table::create(
            &opts.out,
            &format!("loan-plan-{name}.csv"),
            &[
                "kind",
                "index",
                "start",
                "end",
                "share",
                "std_error",
                "expected_payment",
            ],
        )?;
        let windows = plan.repayment_instants().windows(2);
        let income = !plan.expected_payments().is_empty();
        for (m, w) in windows.enumerate() {
            let kind = if income { "income" } else { "repayment" };
            let expected = plan
                .expected_payments()
                .get(m)
                .map(|v| num(*v))
                .unwrap_or_default();
            t.row([
                kind.to_string(),
                (m + 1).to_string(),
                num(w[0]),
                num(w[1]),
                num(plan.rpr()[m]),
                num(plan.rpr_std_error()[m]),
                expected,
            ])?;
        }
        for (m, w) in plan.interest_instants().windows(2).enumerate() {
            t.row([
                "interest".to_string(),
                (m + 1).to_string(),
                num(w[0]),
                num(w[1]),
                num(plan.interest_fraction()[m]),
                String::new(),
                String::new(),
            ])?;
        }
        let path = t.finish()?;
        report.line(format!(
            "loan-plan {name}: {} repayment windows, {} interest windows, {} paths",
            plan.rpr().len(),
            plan.interest_fraction().len(),
            mc.n_paths
        ));
        report.files.push(path);
    }
    Ok(report)
}

pub fn loan_settle(sc: &Scenario, opts: &RunOptions) -> Result<Report> {
    let mut report = Report::default();
    let mc = mc_config(sc, opts);
    for (name, def) in select(&sc.loans, opts.name.as_deref(), "loans")? {
        let terms = def.terms();
        let ctx = format!("loans.{name}");
        let n = def.settle_paths;
        if n == 0 {
            return Err(CliError::Config(format!("{ctx}.settle_paths must be >= 1")));
        }
        let mut t = Table::create(
            &opts.out,
            &format!("loan-settle-{name}.csv"),
            &[
                "loan_id",
                "path",
                "A",
                "J",
                "E",
                "loss",
                "gain",
                "state",
                "pi_total",
                "coverage_error",
            ],
        )?;
        let mut outcomes = Vec::with_capacity(n);
        let mut states = Vec::with_capacity(n);
        match sc.loan_model(name, def)? {
            LoanModel::Production(model) => {
                let plan = compute_repayment_plan(&terms, &model, &mc).context(&ctx)?;
                let grid = mc_grid(plan.end(), &mc)?;
                let pi = model
                    .productivity
                    .simulate(&grid, n, derive_seed(opts.seed, 4))
                    .context(&ctx)?;
                let px = model
                    .price_ratio
                    .simulate(&grid, n, derive_seed(opts.seed, 5))
                    .context(&ctx)?;
                for i in 0..n {
                    let realized =
                        RealizedPath::new(grid, pi.path(i).to_vec(), px.path(i).to_vec())
                            .context(&ctx)?;
                    let out = settle_loan(&terms, &plan, &realized)
                        .context(format!("{ctx} realization {i}"))?;
                    outcomes.push(out);
                    states.push(DefaultState::Performing);
                }
            }
            LoanModel::Income { income, fraction } => {
                let plan = build_income_loan(&terms, &income, fraction, &mc).context(&ctx)?;
                let grid = mc_grid(plan.end(), &mc)?;
                let bundle = income
                    .simulate(&grid, n, derive_seed(opts.seed, 4))
                    .context(&ctx)?;
                for i in 0..n {
                    let s = settle_income_loan(
                        &terms,
                        &plan,
                        &grid,
                        bundle.path(i),
                        def.willful_breach,
                    )
                    .context(format!("{ctx} realization {i}"))?;
                    outcomes.push(s.outcome);
                    states.push(s.state);
                }
            }
        }
        for (i, (o, st)) in outcomes.iter().zip(&states).enumerate() {
            t.row([
                name.to_string(),
                i.to_string(),
                num(o.market_value),
                num(o.interest),
                num(o.total_repaid),
                num(o.bank_loss),
                num(o.bank_gain),
                st.as_str().to_string(),
                num(o.pi_total),
                num(o.coverage_error),
            ])?;
        }
        report.files.push(t.finish()?);
        let repaid: Vec<f64> = outcomes.iter().map(|o| o.total_repaid).collect();
        let est = McEstimate::from_samples(&repaid).context(&ctx)?;
        let losses = outcomes.iter().filter(|o| o.bank_loss > 0.0).count();
        report.line(format!(
            "loan-settle {name}: mean E = {} (se {}), loss in {losses}/{n} realizations",
            num(est.mean),
            num(est.std_error)
        ));
    }
    Ok(report)
}

fn bond_quotes(
    sc: &Scenario,
    name: &str,
    def: &crate::scenario::BondDef,
) -> Result<(GrowthSurface, Vec<Vec<BondQuote>>)> {
    let surface = sc.growth_surface(name, def)?;
    let tax = def.tax.build();
    let ctx = format!("bonds.{name}");
    let mut rows = Vec::new();
    for row in surface.rows() {
        let quotes = row
            .s
            .iter()
            .filter(|&&s| s >= row.t - 1e-12)
            .map(|&s| {
                price_bond(
                    &tax,
                    &surface,
                    row.t,
                    s.max(row.t),
                    def.share,
                    def.convention,
                )
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .context(&ctx)?;
        rows.push(quotes);
    }
    Ok((surface, rows))
}

pub fn bond_price(sc: &Scenario, opts: &RunOptions) -> Result<Report> {
    let mut report = Report::default();
    for (name, def) in select(&sc.bonds, opts.name.as_deref(), "bonds")? {
        let (_, rows) = bond_quotes(sc, name, def)?;
        let tax = def.tax.build();
        let mut t = Table::create(
            &opts.out,
            &format!("bond-price-{name}.csv"),
            &["t", "maturity", "share", "tax", "price"],
        )?;
        let mut count = 0;
        for q in rows.iter().flatten() {
            let tau = tax.at(q.t).context(format!("bonds.{name}.tax"))?;
            t.row([
                num(q.t),
                num(q.maturity),
                num(q.share),
                num(tau),
                num(q.price),
            ])?;
            count += 1;
        }
        report.files.push(t.finish()?);
        report.line(format!(
            "bond-price {name}: {count} quotes on {} valuation times",
            rows.len()
        ));
    }
    Ok(report)
}

pub fn bond_forward(sc: &Scenario, opts: &RunOptions) -> Result<Report> {
    let mut report = Report::default();
    for (name, def) in select(&sc.bonds, opts.name.as_deref(), "bonds")? {
        let (surface, rows) = bond_quotes(sc, name, def)?;
        let mut t = Table::create(
            &opts.out,
            &format!("bond-forward-{name}.csv"),
            &["t", "maturity", "implied_rate", "surface_rate", "abs_error"],
        )?;
        let mut interior_max: f64 = 0.0;
        for (row, quotes) in surface.rows().iter().zip(&rows) {
            let fwd = implied_forward(quotes, def.convention)
                .context(format!("bonds.{name} t={}", row.t))?;
            let offset = row.s.len() - quotes.len();
            for (k, p) in fwd.iter().enumerate() {
                let input = row.f[offset + k];
                let err = (p.rate - input).abs();
                if k > 0 && k + 1 < fwd.len() {
                    interior_max = interior_max.max(err);
                }
                t.row([num(p.t), num(p.maturity), num(p.rate), num(input), num(err)])?;
            }
        }
        report.files.push(t.finish()?);
        report.line(format!(
            "bond-forward {name}: max interior round-trip error {}",
            num(interior_max)
        ));
    }
    Ok(report)
}

pub fn gamma_cmd(sc: &Scenario, opts: &RunOptions) -> Result<Report> {
    let mut report = Report::default();
    let mc = mc_config(sc, opts);
    for (name, def) in select(&sc.gamma, opts.name.as_deref(), "gamma")? {
        let ctx = format!("gamma.{name}");
        let estimates = def
            .t
            .iter()
            .map(|&t| {
                gamma(
                    &def.beliefs.scaled((def.share_drift * t).exp()),
                    t,
                    def.maturity,
                    &mc,
                )
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .context(&ctx)?;
        let gammas: Vec<f64> = estimates.iter().map(|e| e.gamma).collect();
        let rates = gamma_rate(&def.t, &gammas).context(&ctx)?;
        let mut t = Table::create(
            &opts.out,
            &format!("gamma-{name}.csv"),
            &[
                "t",
                "maturity",
                "gamma",
                "std_error",
                "theta_mean",
                "gamma_rate",
            ],
        )?;
        for (e, r) in estimates.iter().zip(&rates) {
            t.row([
                num(e.t),
                num(e.maturity),
                num(e.gamma),
                num(e.std_error),
                num(e.theta.mean),
                num(*r),
            ])?;
        }
        report.files.push(t.finish()?);
        report.line(format!(
            "gamma {name}: Γ from {} to {} over {} times, {} samples each",
            num(gammas[0]),
            num(*gammas.last().expect("at least three times")),
            gammas.len(),
            mc.n_paths
        ));
    }
    Ok(report)
}

fn hjm_grid(horizon: f64, steps: usize, ctx: &str) -> Result<TimeGrid> {
    TimeGrid::new(0.0, horizon, steps).context(ctx)
}

pub fn hjm_check(sc: &Scenario, opts: &RunOptions) -> Result<Report> {
    let mut report = Report::default();
    let mut violation = None;
    for (name, def) in select(&sc.hjm, opts.name.as_deref(), "hjm")? {
        let ctx = format!("hjm.{name}");
        let grid = hjm_grid(def.horizon, def.steps, &ctx)?;
        let r = drift_residual(&def.coefficients(name)?, &grid, &def.quadrature).context(&ctx)?;
        let mut t = Table::create(
            &opts.out,
            &format!("hjm-check-{name}.csv"),
            &["t", "maturity", "residual"],
        )?;
        for (i, j, v) in r.residual.iter() {
            t.row([num(grid.point(i)), num(grid.point(j)), num(v)])?;
        }
        report.files.push(t.finish()?);
        let ok = r.satisfied(def.tolerance);
        report.files.push(write_json(
            &opts.out,
            &format!("hjm-check-{name}.json"),
            &json!({
                "name": name,
                "max_abs": r.max_abs,
                "argmax_t": r.argmax.0,
                "argmax_maturity": r.argmax.1,
                "step": r.step,
                "quadrature_bound": r.quadrature_bound,
                "accumulated_jump_max": r.accumulated_jump_max,
                "tolerance": def.tolerance,
                "satisfied": ok,
            }),
        )?);
        report.line(format!(
            "hjm-check {name}: max |R| = {} at (t={}, T={}), h = {}, bound {}, {}",
            num(r.max_abs),
            num(r.argmax.0),
            num(r.argmax.1),
            num(r.step),
            num(r.quadrature_bound),
            if ok { "satisfied" } else { "VIOLATED" }
        ));
        if !ok && violation.is_none() {
            violation = Some(CliError::DriftViolated {
                max_abs: r.max_abs,
                t: r.argmax.0,
                maturity: r.argmax.1,
                tolerance: def.tolerance + r.quadrature_bound,
            });
        }
    }
    match violation {
        Some(e) => {
            for l in &report.lines {
                println!("{l}");
            }
            Err(e)
        }
        None => Ok(report),
    }
}

/// Paths evolved per chunk; bounds memory for large ensembles.
const EVOLVE_CHUNK: usize = 512;

pub fn hjm_evolve(sc: &Scenario, opts: &RunOptions) -> Result<Report> {
    let mut report = Report::default();
    for (name, def) in select(&sc.hjm, opts.name.as_deref(), "hjm")? {
        let ctx = format!("hjm.{name}");
        let grid = hjm_grid(def.horizon, def.steps, &ctx)?;
        let coeffs = def.coefficients(name)?;
        let initial: Vec<f64> = grid.points().iter().map(|&u| def.initial.at(u)).collect();
        let n_paths = opts.paths.or(def.paths).unwrap_or(sc.monte_carlo.paths);
        if n_paths < 2 {
            return Err(CliError::Config(format!(
                "{ctx}: hjm-evolve needs >= 2 paths"
            )));
        }
        let n = grid.n_points();
        let last = n - 1;
        let reference = Surface::from_fn(grid, |_, u| def.initial.at(u));
        let cells = n * (n + 1) / 2;
        let p0 = (-trapezoid(&initial, grid.step())).exp();
        // Sums are of deviations from the initial curve and from P(0, T), which
        // keeps the variance free of cancellation.
        let mut sum = vec![0.0; cells];
        let mut sum_sq = vec![0.0; cells];
        let mut disc_sum = vec![0.0; n];
        let mut disc_sq = vec![0.0; n];
        let mut start = 0;
        while start < n_paths {
            let end = (start + EVOLVE_CHUNK).min(n_paths);
            let chunk = evolve_map_range(&coeffs, &initial, &grid, start..end, opts.seed, |s| {
                let dev: Vec<f64> = s.iter().map(|(i, j, v)| v - reference.get(i, j)).collect();
                let disc: Vec<f64> = (0..n)
                    .map(|i| s.discount(i) * s.bond_price(i, last))
                    .collect();
                (dev, disc)
            })
            .context(&ctx)?;
            for (dev, disc) in chunk {
                for (k, d) in dev.iter().enumerate() {
                    sum[k] += d;
                    sum_sq[k] += d * d;
                }
                for (k, d) in disc.iter().enumerate() {
                    let d = d - p0;
                    disc_sum[k] += d;
                    disc_sq[k] += d * d;
                }
            }
            start = end;
        }
        let m = n_paths as f64;
        let se = |s: f64, sq: f64| ((sq - s * s / m).max(0.0) / (m - 1.0) / m).sqrt();
        let mut t = Table::create(
            &opts.out,
            &format!("hjm-evolve-{name}.csv"),
            &["t", "maturity", "mean_forward", "std_error"],
        )?;
        for (k, (i, j, f0)) in reference.iter().enumerate() {
            t.row([
                num(grid.point(i)),
                num(grid.point(j)),
                num(f0 + sum[k] / m),
                num(se(sum[k], sum_sq[k])),
            ])?;
        }
        report.files.push(t.finish()?);
        let mut t = Table::create(
            &opts.out,
            &format!("hjm-evolve-{name}-martingale.csv"),
            &[
                "t",
                "maturity",
                "discounted_price",
                "std_error",
                "initial_price",
                "z_score",
            ],
        )?;
        let mut worst_z: f64 = 0.0;
        for i in 0..n {
            let excess = disc_sum[i] / m;
            let mean = p0 + excess;
            let e = se(disc_sum[i], disc_sq[i]);
            let z = if e > 0.0 { excess / e } else { 0.0 };
            worst_z = worst_z.max(z.abs());
            t.row([
                num(grid.point(i)),
                num(grid.point(last)),
                num(mean),
                num(e),
                num(p0),
                num(z),
            ])?;
        }
        report.files.push(t.finish()?);
        report.line(format!(
            "hjm-evolve {name}: {n_paths} paths, max |z| of discounted prices {:.3}",
            worst_z
        ));
    }
    Ok(report)
}

pub fn hjm_implied_vol(sc: &Scenario, opts: &RunOptions) -> Result<Report> {
    let mut report = Report::default();
    for (name, def) in select(&sc.implied, opts.name.as_deref(), "implied")? {
        let ctx = format!("implied.{name}");
        let grid = hjm_grid(def.horizon, def.steps, &ctx)?;
        let alpha_p = match def.drift {
            DriftDef::HoLee { sigma0 } => Surface::from_fn(grid, |t, u| -sigma0 * sigma0 * (u - t)),
            DriftDef::Constant { alpha } => Surface::from_fn(grid, |_, _| alpha),
            DriftDef::Decay { alpha0, rate } => {
                integrate_growth_model(&|_, _, a| -rate * a, &vec![alpha0; grid.n_points()], &grid)
                    .context(&ctx)?
            }
        };
        let half = implied_diffusion_from_growth(&alpha_p, None).context(&ctx)?;
        let mut t = Table::create(
            &opts.out,
            &format!("hjm-implied-vol-{name}.csv"),
            &["t", "maturity", "alpha_p", "half_s_squared", "s_norm"],
        )?;
        for (i, j, v) in half.iter() {
            t.row([
                num(grid.point(i)),
                num(grid.point(j)),
                num(alpha_p.get(i, j)),
                num(v),
                num((2.0 * v).sqrt()),
            ])?;
        }
        report.files.push(t.finish()?);
        report.line(format!(
            "hjm-implied-vol {name}: feasible, max ½|S|² = {}",
            num(half.max_abs())
        ));
    }
    Ok(report)
}

fn source(s: SourceDef) -> FundSource {
    match s {
        SourceDef::Deposits => FundSource::Deposits,
        SourceDef::Interbank => FundSource::Interbank,
    }
}

fn apply_event(sys: &mut BankSystem, e: &EventDef) -> std::result::Result<(), String> {
    let r = match e {
        EventDef::IssueLoan {
            at,
            bank,
            amount,
            source: s,
        } => sys.issue_loan(bank, *amount, source(*s), *at).map(drop),
        EventDef::InterbankLoan {
            at,
            lender,
            borrower,
            amount,
        } => sys.interbank_loan(lender, borrower, *amount, *at).map(drop),
        EventDef::Repay {
            at,
            borrower,
            lender,
            amount,
        } => sys
            .repay_interbank(borrower, lender, *amount, *at)
            .map(drop),
        EventDef::MoveDeposits {
            at,
            from,
            to,
            amount,
        } => sys.move_deposits(from, to, *amount, true, *at).map(drop),
        EventDef::Settle {
            at,
            bank,
            principal,
            repaid,
        } => sys.settle_loan(bank, *principal, *repaid, *at).map(drop),
        EventDef::Loss { at, bank, amount } => sys.absorb_loss(bank, *amount, *at).map(drop),
        EventDef::Snapshot { at } => {
            sys.snapshot(*at);
            Ok(())
        }
    };
    r.map_err(|e| e.to_string())
}

fn ledger_row(step: usize, time: f64, l: &BankLedger) -> [String; 11] {
    [
        step.to_string(),
        num(time),
        l.id.clone(),
        num(l.deposits),
        num(l.outstanding_credit),
        num(l.wealth),
        num(l.interbank_owed()),
        num(l.claims_total()),
        num(l.interbank_available),
        num(l.ratio()),
        l.collapsed.to_string(),
    ]
}

fn op_name(e: &EventDef) -> &'static str {
    match e {
        EventDef::IssueLoan { .. } => "issue_loan",
        EventDef::InterbankLoan { .. } => "interbank_loan",
        EventDef::Repay { .. } => "repay",
        EventDef::MoveDeposits { .. } => "move_deposits",
        EventDef::Settle { .. } => "settle",
        EventDef::Loss { .. } => "loss",
        EventDef::Snapshot { .. } => "snapshot",
    }
}

pub fn bank_sim(sc: &Scenario, opts: &RunOptions) -> Result<Report> {
    let mut report = Report::default();
    for (name, def) in select(&sc.bank, opts.name.as_deref(), "bank")? {
        let ledgers = def
            .banks
            .iter()
            .map(|b| BankLedger::new(b.id.clone(), b.deposits, b.wealth))
            .collect();
        let mut sys = BankSystem::new(ledgers, def.max_ratio);
        let mut series = Table::create(
            &opts.out,
            &format!("bank-sim-{name}-ledgers.csv"),
            &[
                "step",
                "time",
                "bank",
                "deposits",
                "outstanding_credit",
                "wealth",
                "interbank_owed",
                "interbank_claims",
                "credit_only_available",
                "ratio",
                "collapsed",
            ],
        )?;
        let mut events = Table::create(
            &opts.out,
            &format!("bank-sim-{name}-events.csv"),
            &["step", "time", "op", "outcome"],
        )?;
        let mut step = 0;
        for l in sys.ledgers() {
            series.row(ledger_row(step, 0.0, l))?;
        }
        let mut refused = 0;
        let mut last_time: f64 = 0.0;
        for e in &def.events {
            step += 1;
            let outcome = match apply_event(&mut sys, e) {
                Ok(()) => "applied".to_string(),
                Err(msg) => {
                    warn!("bank.{name} step {step}: {} refused: {msg}", op_name(e));
                    refused += 1;
                    format!("refused: {msg}")
                }
            };
            last_time = last_time.max(e.at());
            events.row([
                step.to_string(),
                num(e.at()),
                op_name(e).to_string(),
                outcome,
            ])?;
            for l in sys.ledgers() {
                series.row(ledger_row(step, e.at(), l))?;
            }
        }
        let mut applied_random = 0;
        if let Some(r) = &def.random {
            let mut rng = path_rng(derive_seed(opts.seed, 6), 0);
            let start = if def.events.is_empty() {
                0.0
            } else {
                last_time.floor() + 1.0
            };
            for k in 0..r.events {
                step += 1;
                let time = start + k as f64;
                let cfg = RandomRunConfig {
                    n_events: 1,
                    snapshot_every: 0,
                    max_fraction: r.max_fraction,
                    start_time: time,
                };
                let before = sys.history().len();
                let stats = random_run(&mut sys, &cfg, &mut rng);
                applied_random += stats.applied;
                if r.snapshot_every > 0 && (k + 1) % r.snapshot_every == 0 {
                    sys.snapshot(time);
                }
                let op = sys.history()[before..]
                    .first()
                    .map(|rec| rec.kind.name())
                    .unwrap_or("none");
                let outcome = if stats.applied > 0 {
                    "applied"
                } else {
                    "refused"
                };
                events.row([
                    step.to_string(),
                    num(time),
                    format!("random:{op}"),
                    outcome.to_string(),
                ])?;
                for l in sys.ledgers() {
                    series.row(ledger_row(step, time, l))?;
                }
            }
        }
        report.files.push(series.finish()?);
        report.files.push(events.finish()?);

        let mut history = sys.history().to_vec();
        let ids: Vec<String> = sys.ledgers().iter().map(|l| l.id.clone()).collect();
        let end_time = history.last().map_or(0.0, |r| r.time);
        for rule in &def.inject_violations {
            history.push(violating_record(*rule, &ids[0], &ids[1], end_time, 1.0));
        }
        let mut t = Table::create(
            &opts.out,
            &format!("bank-sim-{name}-history.csv"),
            &["index", "time", "kind", "from", "to", "amount", "source"],
        )?;
        for (k, rec) in history.iter().enumerate() {
            let src = match &rec.kind {
                TransferKind::LoanFunding {
                    source: FundSource::Deposits,
                    ..
                }
                | TransferKind::DepositMove {
                    funds: FundSource::Deposits,
                    ..
                } => "deposits",
                TransferKind::LoanFunding {
                    source: FundSource::Interbank,
                    ..
                }
                | TransferKind::DepositMove {
                    funds: FundSource::Interbank,
                    ..
                } => "interbank",
                _ => "",
            };
            t.row([
                k.to_string(),
                num(rec.time),
                rec.kind.name().to_string(),
                rec.from_label(),
                rec.to_label(),
                num(rec.amount),
                src.to_string(),
            ])?;
        }
        report.files.push(t.finish()?);
        let compliance =
            check_compliance(&history, sys.initial()).context(format!("bank.{name}"))?;
        let mut t = Table::create(
            &opts.out,
            &format!("bank-sim-{name}-compliance.csv"),
            &["record_index", "rule", "detail"],
        )?;
        for v in &compliance.violations {
            t.row([
                v.record_index.to_string(),
                v.rule.code().to_string(),
                v.detail.clone(),
            ])?;
        }
        report.files.push(t.finish()?);

        let drift = sys.conserved_total() - sys.initial_total() - sys.injected();
        let collapsed: Vec<&str> = sys
            .ledgers()
            .iter()
            .filter(|l| l.collapsed)
            .map(|l| l.id.as_str())
            .collect();
        let mut by_rule: BTreeMap<&str, usize> = BTreeMap::new();
        for v in &compliance.violations {
            *by_rule.entry(v.rule.code()).or_insert(0) += 1;
        }
        report.files.push(write_json(
            &opts.out,
            &format!("bank-sim-{name}.json"),
            &json!({
                "name": name,
                "records": history.len(),
                "scheduled_refused": refused,
                "random_applied": applied_random,
                "conservation_drift": drift,
                "injected": sys.injected(),
                "collapsed": collapsed,
                "violations": by_rule,
            }),
        )?);
        info!("bank.{name}: {} records, drift {drift:e}", history.len());
        report.line(format!(
            "bank-sim {name}: {} records, conservation drift {}, {} violations, {} collapsed",
            history.len(),
            num(drift),
            compliance.violations.len(),
            collapsed.len()
        ));
    }
    Ok(report)
}

pub fn golden(opts: &RunOptions) -> Result<Report> {
    let r = golden_motivation().context("golden-motivation")?;
    let o = r.outcome;
    let rows = [
        ("principal", r.terms.principal),
        ("repayment_share", r.plan.rpr()[0]),
        ("interest_share", r.plan.interest_fraction()[0]),
        ("market_value", o.market_value),
        ("interest", o.interest),
        ("total_repaid", o.total_repaid),
        ("bank_loss", o.bank_loss),
        ("bank_gain", o.bank_gain),
    ];
    let mut t = Table::create(&opts.out, "golden-motivation.csv", &["quantity", "value"])?;
    for (k, v) in rows {
        t.row([k.to_string(), num(v)])?;
    }
    let mut report = Report::default();
    report.files.push(t.finish()?);
    report.line(format!("C = {}", num(r.terms.principal)));
    report.line(format!("A = {}", num(o.market_value)));
    report.line(format!("J = {}", num(o.interest)));
    report.line(format!("E = {}", num(o.total_repaid)));
    report.line(format!("loss = {}", num(o.bank_loss)));
    report.line(format!("gain = {}", num(o.bank_gain)));
    Ok(report)
}
