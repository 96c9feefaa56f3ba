//! Scenario files: strict TOML, every key known, every name resolved.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use prodcredit::banksim::ComplianceRule;
use prodcredit::credit::{EnterpriseModel, LoanKind, LoanTerms};
use prodcredit::hjm::{HjmCoefficients, JumpQuadrature};
use prodcredit::sovereign::{Convention, GrowthSurface, LenderBeliefs, TaxProcess};
use prodcredit::stochastics::{DiffusionSpec, JumpLaw, JumpSpec, ProcessModel};
use serde::Deserialize;

use crate::error::{CliError, Context, Result};

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub monte_carlo: MonteCarloDef,
    #[serde(default)]
    pub processes: BTreeMap<String, ProcessDef>,
    #[serde(default)]
    pub loans: BTreeMap<String, LoanDef>,
    #[serde(default)]
    pub bonds: BTreeMap<String, BondDef>,
    #[serde(default)]
    pub gamma: BTreeMap<String, GammaDef>,
    #[serde(default)]
    pub hjm: BTreeMap<String, HjmDef>,
    #[serde(default)]
    pub implied: BTreeMap<String, ImpliedDef>,
    #[serde(default)]
    pub bank: BTreeMap<String, BankDef>,
    #[serde(default)]
    pub output: OutputDef,
    /// Directory of the scenario file; relative paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloDef {
    #[serde(default = "MonteCarloDef::default_paths")]
    pub paths: usize,
    #[serde(default = "MonteCarloDef::default_steps")]
    pub steps_per_year: usize,
}

impl MonteCarloDef {
    fn default_paths() -> usize {
        10_000
    }

    fn default_steps() -> usize {
        100
    }
}

impl Default for MonteCarloDef {
    fn default() -> Self {
        Self {
            paths: Self::default_paths(),
            steps_per_year: Self::default_steps(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputDef {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    /// `X ≡ x0`.
    Constant,
    /// `dX = rate dt`.
    Linear,
    /// `dX = mu dt + sigma dW`.
    Abm,
    /// `dX = mu X dt + sigma X dW`.
    Gbm,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessDef {
    pub kind: ProcessKind,
    pub x0: f64,
    pub rate: Option<f64>,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub jumps: Option<JumpDef>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpDef {
    pub intensity: f64,
    pub law: JumpLaw,
    #[serde(default = "yes")]
    pub compensated: bool,
    #[serde(default)]
    pub proportional: bool,
}

impl ProcessDef {
    pub fn build(&self, name: &str) -> Result<ProcessModel> {
        let need = |v: Option<f64>, field: &str| {
            v.ok_or_else(|| {
                config(format!(
                    "processes.{name}: kind {:?} requires '{field}'",
                    self.kind
                ))
            })
        };
        let forbid = |v: Option<f64>, field: &str| match v {
            Some(_) => Err(config(format!(
                "processes.{name}: '{field}' does not apply to kind {:?}",
                self.kind
            ))),
            None => Ok(()),
        };
        let diffusion = match self.kind {
            ProcessKind::Constant => {
                forbid(self.rate, "rate")?;
                forbid(self.mu, "mu")?;
                forbid(self.sigma, "sigma")?;
                DiffusionSpec::constant(self.x0)
            }
            ProcessKind::Linear => {
                forbid(self.mu, "mu")?;
                forbid(self.sigma, "sigma")?;
                DiffusionSpec::linear(self.x0, need(self.rate, "rate")?)
            }
            ProcessKind::Abm => {
                forbid(self.rate, "rate")?;
                let (mu, sigma) = (need(self.mu, "mu")?, need(self.sigma, "sigma")?);
                DiffusionSpec::new(
                    self.x0,
                    Arc::new(move |_, _| mu),
                    vec![Arc::new(move |_, _| sigma)],
                )
                .context(format!("processes.{name}"))?
            }
            ProcessKind::Gbm => {
                forbid(self.rate, "rate")?;
                DiffusionSpec::gbm(self.x0, need(self.mu, "mu")?, need(self.sigma, "sigma")?)
            }
        };
        if !self.x0.is_finite() {
            return Err(config(format!("processes.{name}.x0 must be finite")));
        }
        Ok(match &self.jumps {
            None => ProcessModel::diffusion(diffusion),
            Some(j) => {
                let mut spec = JumpSpec::new(j.intensity, j.law, j.compensated)
                    .context(format!("processes.{name}.jumps"))?;
                if j.proportional {
                    spec = spec.proportional();
                }
                ProcessModel::with_jumps(diffusion, spec)
            }
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoanDef {
    pub principal: f64,
    pub horizon: f64,
    pub n_repayments: usize,
    #[serde(default)]
    pub interest_period: f64,
    #[serde(default = "LoanDef::one")]
    pub n_interest_payments: usize,
    #[serde(default = "LoanDef::kappa")]
    pub interest_ratio: f64,
    #[serde(default = "LoanDef::material")]
    pub kind: LoanKind,
    #[serde(default)]
    pub start_offset: f64,
    /// Cumulative productivity process (production-share loans).
    pub productivity: Option<String>,
    /// Per-unit price process (production-share loans).
    pub price_ratio: Option<String>,
    /// Income-rate process (private-income loans).
    pub income: Option<String>,
    pub income_fraction: Option<f64>,
    /// Number of realizations settled by `loan-settle`.
    #[serde(default = "LoanDef::settle_paths")]
    pub settle_paths: usize,
    /// Income loans only: the debtor stops paying on purpose.
    #[serde(default)]
    pub willful_breach: bool,
}

impl LoanDef {
    fn one() -> usize {
        1
    }

    fn kappa() -> f64 {
        0.1
    }

    fn material() -> LoanKind {
        LoanKind::Material
    }

    fn settle_paths() -> usize {
        100
    }

    pub fn terms(&self) -> LoanTerms {
        LoanTerms {
            principal: self.principal,
            horizon: self.horizon,
            n_repayments: self.n_repayments,
            interest_period: self.interest_period,
            n_interest_payments: self.n_interest_payments,
            interest_ratio: self.interest_ratio,
            kind: self.kind,
            start_offset: self.start_offset,
        }
    }
}

/// A loan resolved against the process table.
pub enum LoanModel {
    Production(EnterpriseModel),
    Income { income: ProcessModel, fraction: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaxDef {
    Constant { value: f64 },
    Path { times: Vec<f64>, values: Vec<f64> },
}

impl TaxDef {
    pub fn build(&self) -> TaxProcess {
        match self {
            TaxDef::Constant { value } => TaxProcess::Constant(*value),
            TaxDef::Path { times, values } => TaxProcess::Path {
                times: times.clone(),
                values: values.clone(),
            },
        }
    }
}

/// Tax growth surface `f_p(t, s)`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GrowthDef {
    Constant {
        rate: f64,
    },
    /// `level + slope_s·s + slope_t·t`.
    Linear {
        level: f64,
        slope_s: f64,
        #[serde(default)]
        slope_t: f64,
    },
    /// `level + slope·(s − t) + curvature·(s − t)²`.
    Quadratic {
        level: f64,
        slope: f64,
        curvature: f64,
    },
    /// `(t, s, f_p)` rows from a CSV file.
    Csv {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BondDef {
    pub tax: TaxDef,
    pub growth: GrowthDef,
    #[serde(default)]
    pub convention: Convention,
    pub share: f64,
    /// Valuation times.
    #[serde(default = "BondDef::origin")]
    pub t: Vec<f64>,
    /// Last maturity of the generated surface (analytic kinds).
    pub maturity_max: Option<f64>,
    /// Maturity spacing of the generated surface (analytic kinds).
    #[serde(default = "BondDef::step")]
    pub step: f64,
}

impl BondDef {
    fn origin() -> Vec<f64> {
        vec![0.0]
    }

    fn step() -> f64 {
        0.01
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaDef {
    pub beliefs: LenderBeliefs,
    pub t: Vec<f64>,
    pub maturity: f64,
    /// Beliefs at time `t` are the base beliefs scaled by `exp(share_drift·t)`.
    #[serde(default)]
    pub share_drift: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HjmFamily {
    Zero,
    HoLee,
    HoLeeJumps,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveDef {
    Flat { rate: f64 },
    Linear { level: f64, slope: f64 },
}

impl Default for CurveDef {
    fn default() -> Self {
        CurveDef::Flat { rate: 0.0 }
    }
}

impl CurveDef {
    pub fn at(&self, maturity: f64) -> f64 {
        match *self {
            CurveDef::Flat { rate } => rate,
            CurveDef::Linear { level, slope } => level + slope * maturity,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HjmJumpDef {
    pub intensity: f64,
    pub law: JumpLaw,
    pub delta0: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HjmDef {
    pub family: HjmFamily,
    #[serde(default)]
    pub sigma0: f64,
    pub horizon: f64,
    pub steps: usize,
    #[serde(default)]
    pub initial: CurveDef,
    /// Added to the drift everywhere on the triangle.
    #[serde(default)]
    pub drift_shift: f64,
    pub jumps: Option<HjmJumpDef>,
    #[serde(default)]
    pub quadrature: JumpQuadrature,
    #[serde(default = "HjmDef::tolerance")]
    pub tolerance: f64,
    /// Paths for `hjm-evolve`; defaults to `monte_carlo.paths`.
    pub paths: Option<usize>,
}

impl HjmDef {
    fn tolerance() -> f64 {
        1e-10
    }

    pub fn coefficients(&self, name: &str) -> Result<HjmCoefficients> {
        let base = match (self.family, &self.jumps) {
            (HjmFamily::Zero, None) => HjmCoefficients::zero(),
            (HjmFamily::HoLee, None) => HjmCoefficients::ho_lee(self.sigma0),
            (HjmFamily::HoLeeJumps, Some(j)) => {
                j.law.validate().context(format!("hjm.{name}.jumps.law"))?;
                if !(j.intensity >= 0.0 && j.intensity.is_finite()) {
                    return Err(config(format!(
                        "hjm.{name}.jumps.intensity must be finite and >= 0"
                    )));
                }
                HjmCoefficients::ho_lee_with_jumps(self.sigma0, j.intensity, j.law, j.delta0)
            }
            (HjmFamily::HoLeeJumps, None) => {
                return Err(config(format!(
                    "hjm.{name}: family ho_lee_jumps requires a [jumps] table"
                )))
            }
            (_, Some(_)) => {
                return Err(config(format!(
                    "hjm.{name}: [jumps] only applies to family ho_lee_jumps"
                )))
            }
        };
        Ok(if self.drift_shift != 0.0 {
            base.with_drift_shift(self.drift_shift)
        } else {
            base
        })
    }
}

/// Growth-model drift `α_p(t, T)` for `hjm-implied-vol`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftDef {
    /// `α_p = −σ₀²(T − t)`.
    HoLee {
        sigma0: f64,
    },
    Constant {
        alpha: f64,
    },
    /// `∂_t α_p = −rate·α_p` from `α_p(0, T) = alpha0`.
    Decay {
        alpha0: f64,
        rate: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpliedDef {
    pub drift: DriftDef,
    pub horizon: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankInit {
    pub id: String,
    pub deposits: f64,
    pub wealth: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomDef {
    pub events: usize,
    #[serde(default = "RandomDef::snapshot_every")]
    pub snapshot_every: usize,
    #[serde(default = "RandomDef::max_fraction")]
    pub max_fraction: f64,
}

impl RandomDef {
    fn snapshot_every() -> usize {
        50
    }

    fn max_fraction() -> f64 {
        0.2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceDef {
    Deposits,
    Interbank,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventDef {
    IssueLoan {
        at: f64,
        bank: String,
        amount: f64,
        source: SourceDef,
    },
    InterbankLoan {
        at: f64,
        lender: String,
        borrower: String,
        amount: f64,
    },
    Repay {
        at: f64,
        borrower: String,
        lender: String,
        amount: f64,
    },
    MoveDeposits {
        at: f64,
        from: String,
        to: String,
        amount: f64,
    },
    Settle {
        at: f64,
        bank: String,
        principal: f64,
        repaid: f64,
    },
    Loss {
        at: f64,
        bank: String,
        amount: f64,
    },
    Snapshot {
        at: f64,
    },
}

impl EventDef {
    pub fn at(&self) -> f64 {
        match self {
            EventDef::IssueLoan { at, .. }
            | EventDef::InterbankLoan { at, .. }
            | EventDef::Repay { at, .. }
            | EventDef::MoveDeposits { at, .. }
            | EventDef::Settle { at, .. }
            | EventDef::Loss { at, .. }
            | EventDef::Snapshot { at } => *at,
        }
    }

    fn banks(&self) -> Vec<&str> {
        match self {
            EventDef::IssueLoan { bank, .. }
            | EventDef::Settle { bank, .. }
            | EventDef::Loss { bank, .. } => {
                vec![bank]
            }
            EventDef::InterbankLoan {
                lender, borrower, ..
            }
            | EventDef::Repay {
                lender, borrower, ..
            } => {
                vec![lender, borrower]
            }
            EventDef::MoveDeposits { from, to, .. } => vec![from, to],
            EventDef::Snapshot { .. } => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankDef {
    #[serde(default = "BankDef::max_ratio")]
    pub max_ratio: f64,
    pub banks: Vec<BankInit>,
    pub random: Option<RandomDef>,
    #[serde(default)]
    pub events: Vec<EventDef>,
    /// Rule classes to seed into a copy of the history before checking.
    #[serde(default)]
    pub inject_violations: Vec<ComplianceRule>,
}

impl BankDef {
    fn max_ratio() -> f64 {
        1.0
    }
}

impl Scenario {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let scenario: Scenario =
            toml::from_str(text).map_err(|e| config(format!("{origin}: {e}")))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut s = Self::parse(&text, &path.display().to_string())?;
        s.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(s)
    }

    fn process(&self, owner: &str, name: &str) -> Result<ProcessModel> {
        let def = self
            .processes
            .get(name)
            .ok_or_else(|| config(format!("{owner}: unknown process '{name}'")))?;
        def.build(name)
    }

    pub fn loan_model(&self, name: &str, def: &LoanDef) -> Result<LoanModel> {
        let owner = |field: &str| format!("loans.{name}.{field}");
        let missing = |field: &str| {
            config(format!(
                "loans.{name}: kind {:?} requires '{field}'",
                def.kind
            ))
        };
        match def.kind {
            LoanKind::PrivateIncome => {
                let income = def.income.as_deref().ok_or_else(|| missing("income"))?;
                let fraction = def
                    .income_fraction
                    .ok_or_else(|| missing("income_fraction"))?;
                Ok(LoanModel::Income {
                    income: self.process(&owner("income"), income)?,
                    fraction,
                })
            }
            LoanKind::Material | LoanKind::Service => {
                let p = def
                    .productivity
                    .as_deref()
                    .ok_or_else(|| missing("productivity"))?;
                let s = def
                    .price_ratio
                    .as_deref()
                    .ok_or_else(|| missing("price_ratio"))?;
                Ok(LoanModel::Production(EnterpriseModel {
                    productivity: self.process(&owner("productivity"), p)?,
                    price_ratio: self.process(&owner("price_ratio"), s)?,
                }))
            }
        }
    }

    pub fn growth_surface(&self, name: &str, def: &BondDef) -> Result<GrowthSurface> {
        let ctx = format!("bonds.{name}.growth");
        let analytic = |f: &dyn Fn(f64, f64) -> f64| -> Result<GrowthSurface> {
            let s_max = def.maturity_max.ok_or_else(|| {
                config(format!(
                    "bonds.{name}: analytic growth needs 'maturity_max'"
                ))
            })?;
            if def.t.iter().any(|&t| t >= s_max) {
                return Err(config(format!(
                    "bonds.{name}: every valuation time must lie below maturity_max"
                )));
            }
            GrowthSurface::from_fn(&def.t, s_max, def.step, f).context(ctx.clone())
        };
        match &def.growth {
            GrowthDef::Constant { rate } => analytic(&|_, _| *rate),
            GrowthDef::Linear {
                level,
                slope_s,
                slope_t,
            } => analytic(&|t, s| level + slope_s * s + slope_t * t),
            GrowthDef::Quadratic {
                level,
                slope,
                curvature,
            } => analytic(&|t, s| level + slope * (s - t) + curvature * (s - t) * (s - t)),
            GrowthDef::Csv { path } => {
                let full = self.base_dir.join(path);
                let triples = crate::output::read_triples(&full)?;
                GrowthSurface::from_triples(&triples).context(ctx)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if self.monte_carlo.paths == 0 || self.monte_carlo.steps_per_year == 0 {
            return Err(config("monte_carlo: paths and steps_per_year must be >= 1"));
        }
        for (name, p) in &self.processes {
            p.build(name)?;
        }
        for (name, l) in &self.loans {
            self.loan_model(name, l)?;
            l.terms().validate().context(format!("loans.{name}"))?;
        }
        for (name, b) in &self.bonds {
            b.tax
                .build()
                .validate()
                .context(format!("bonds.{name}.tax"))?;
            if b.t.is_empty() {
                return Err(config(format!(
                    "bonds.{name}.t must list at least one valuation time"
                )));
            }
            if matches!(b.growth, GrowthDef::Csv { .. }) && b.maturity_max.is_some() {
                return Err(config(format!(
                    "bonds.{name}: 'maturity_max' does not apply to csv growth"
                )));
            }
        }
        for (name, g) in &self.gamma {
            g.beliefs
                .validate()
                .context(format!("gamma.{name}.beliefs"))?;
            if g.t.len() < 3 {
                return Err(config(format!(
                    "gamma.{name}.t needs >= 3 times for the rate"
                )));
            }
        }
        for (name, h) in &self.hjm {
            h.coefficients(name)?;
            if !(h.horizon > 0.0) || h.steps == 0 {
                return Err(config(format!(
                    "hjm.{name}: horizon must be > 0 and steps >= 1"
                )));
            }
        }
        for (name, i) in &self.implied {
            if !(i.horizon > 0.0) || i.steps == 0 {
                return Err(config(format!(
                    "implied.{name}: horizon must be > 0 and steps >= 1"
                )));
            }
        }
        for (name, b) in &self.bank {
            let ids: Vec<&str> = b.banks.iter().map(|x| x.id.as_str()).collect();
            if ids.len() < 2 {
                return Err(config(format!("bank.{name}: need at least two banks")));
            }
            let mut sorted = ids.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != ids.len() {
                return Err(config(format!("bank.{name}: bank ids must be unique")));
            }
            for (k, e) in b.events.iter().enumerate() {
                for id in e.banks() {
                    if !ids.contains(&id) {
                        return Err(config(format!(
                            "bank.{name}.events[{k}]: unknown bank '{id}'"
                        )));
                    }
                }
            }
            if b.events.windows(2).any(|w| w[1].at() < w[0].at()) {
                return Err(config(format!(
                    "bank.{name}.events must be in chronological order"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo() -> Scenario {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/demo.toml");
        Scenario::load(&path).unwrap()
    }

    #[test]
    fn demo_scenario_loads_every_table() {
        let sc = demo();
        assert_eq!(sc.monte_carlo.paths, 10_000);
        assert!(
            !sc.loans.is_empty()
                && !sc.bonds.is_empty()
                && !sc.hjm.is_empty()
                && !sc.bank.is_empty()
        );
        for (name, def) in &sc.loans {
            sc.loan_model(name, def).unwrap();
        }
        for (name, def) in &sc.hjm {
            def.coefficients(name).unwrap();
        }
    }

    #[test]
    fn defaults_fill_optional_keys() {
        let sc = Scenario::parse("seed = 3\n", "inline").unwrap();
        assert_eq!(sc.monte_carlo.paths, 10_000);
        assert_eq!(sc.monte_carlo.steps_per_year, 100);
        assert!(sc.output.dir.is_none());
    }

    #[test]
    fn process_kinds_check_their_parameters() {
        let err = Scenario::parse(
            "seed = 1\n[processes.p]\nkind = \"gbm\"\nx0 = 1.0\nmu = 0.0\n",
            "inline",
        )
        .unwrap_err();
        assert!(err.to_string().contains("sigma"), "{err}");
        let text = "seed = 1\n[processes.p]\nkind = \"constant\"\nx0 = 1.0\nrate = 2.0\n";
        assert!(Scenario::parse(text, "inline").is_err());
    }

    #[test]
    fn bank_events_must_be_chronological() {
        let text = r#"
seed = 1
[bank.b]
banks = [{ id = "x", deposits = 10.0, wealth = 1.0 }]
events = [{ op = "snapshot", at = 2.0 }, { op = "snapshot", at = 1.0 }]
"#;
        assert!(Scenario::parse(text, "inline").is_err());
    }

    #[test]
    fn hjm_jump_table_requires_the_jump_family() {
        let text = r#"
seed = 1
[hjm.h]
family = "ho_lee"
horizon = 1.0
steps = 10
jumps = { intensity = 1.0, law = { kind = "constant", value = 1.0 }, delta0 = 0.1 }
"#;
        let built = Scenario::parse(text, "inline").and_then(|sc| sc.hjm["h"].coefficients("h"));
        assert!(built.is_err());
    }
}
