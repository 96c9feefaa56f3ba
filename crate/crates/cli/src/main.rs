use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use prodcredit_cli::commands::{self, Report, RunOptions};
use prodcredit_cli::error::{CliError, Result};
use prodcredit_cli::scenario::Scenario;

#[derive(Parser, Debug)]
#[command(
    name = "prodcredit",
    version,
    about = "Production-backed credit, sovereign bond and HJM simulations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory; falls back to `[output] dir`, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the Monte Carlo path count.
    #[arg(long)]
    paths: Option<usize>,
    /// Run only the named block.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Repayment and interest shares of each loan.
    LoanPlan(Common),
    /// Settle loans on fresh realizations of their processes.
    LoanSettle(Common),
    /// Sovereign bond prices on the growth-surface nodes.
    BondPrice(Common),
    /// Forward rates implied by bond prices, against the input surface.
    BondForward(Common),
    /// Lender-belief factor and its rate of change.
    Gamma(Common),
    /// Monte Carlo evolution of the forward surface.
    HjmEvolve(Common),
    /// Drift-condition residual; exits 3 when violated.
    HjmCheck(Common),
    /// Volatility implied by a growth-model drift; exits 4 when infeasible.
    HjmImpliedVol(Common),
    /// Interbank ledger simulation with compliance checks.
    BankSim(Common),
    /// The fixed motivating loan example.
    GoldenMotivation {
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

type Runner = fn(&Scenario, &RunOptions) -> Result<Report>;

fn run(cli: Cli) -> Result<Report> {
    let (common, runner): (Common, Runner) = match cli.command {
        Command::GoldenMotivation { out } => {
            let opts = RunOptions {
                out,
                seed: 0,
                paths: None,
                name: None,
            };
            return commands::golden(&opts);
        }
        Command::LoanPlan(c) => (c, commands::loan_plan),
        Command::LoanSettle(c) => (c, commands::loan_settle),
        Command::BondPrice(c) => (c, commands::bond_price),
        Command::BondForward(c) => (c, commands::bond_forward),
        Command::Gamma(c) => (c, commands::gamma_cmd),
        Command::HjmEvolve(c) => (c, commands::hjm_evolve),
        Command::HjmCheck(c) => (c, commands::hjm_check),
        Command::HjmImpliedVol(c) => (c, commands::hjm_implied_vol),
        Command::BankSim(c) => (c, commands::bank_sim),
    };
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be >= 1".into()));
        }
        // Only fails if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    if common.paths == Some(0) {
        return Err(CliError::Config("--paths must be >= 1".into()));
    }
    let scenario = Scenario::load(&common.scenario)?;
    let out = common
        .out
        .or_else(|| {
            scenario
                .output
                .dir
                .as_ref()
                .map(|d| scenario.base_dir.join(d))
        })
        .unwrap_or_else(|| PathBuf::from("out"));
    let opts = RunOptions {
        out,
        seed: common.seed.unwrap_or(scenario.seed),
        paths: common.paths,
        name: common.name,
    };
    runner(&scenario, &opts)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PRODCREDIT_LOG", "warn"))
        .init();
    match run(Cli::parse()) {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let class = e.class();
            eprintln!("error ({class}): {e}");
            ExitCode::from(class.exit_code() as u8)
        }
    }
}
