//! Productivity loans.
//!
//! A loan of principal `C` is repaid with a share of the enterprise's
//! production. The share per repayment instant (`rpr`) is fixed when the loan
//! is agreed from the configured production and price models:
//!
//! ```text
//! rpr_m = E[C/n · N/S at t_m] / E[Π(t_m) − Π(t_{m-1})]
//! ```
//!
//! Settlement then sells the promised production at realized prices. The
//! price risk sits with the bank: it books `C − E` as a loss or `E − C` as a
//! gain. Interest is a smaller share `rI = κ·rpr` of production over an extra
//! period after the repayment horizon.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stochastics::{
    derive_seed, integrate, interpolate, McConfig, McEstimate, ProcessModel, StochasticsError,
    TimeGrid,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CreditError {
    #[error("invalid loan terms: {0}")]
    InvalidTerms(String),
    #[error("expected production increment {expected} on the window ending at t={instant} is not positive")]
    NonPositiveProduction { instant: f64, expected: f64 },
    #[error("price ratio is not strictly positive on path {path} at t={instant}")]
    NonPositivePrice { path: usize, instant: f64 },
    #[error("productivity decreases at t={t} ({from} -> {to}); cumulative output cannot fall")]
    DecreasingProductivity { t: f64, from: f64, to: f64 },
    #[error("realized paths do not cover [0, {needed}]")]
    InsufficientCoverage { needed: f64 },
    #[error("income is negative ({value}) at t={t}")]
    NegativeIncome { t: f64, value: f64 },
    #[error("plan basis does not match the settlement routine: {0}")]
    WrongBasis(&'static str),
    #[error("cannot {action} a case in state {from:?}")]
    InvalidTransition {
        from: DefaultState,
        action: &'static str,
    },
    #[error("a private investor needs the approval of the local authorities")]
    ApprovalRequired,
    #[error(transparent)]
    Simulation(#[from] StochasticsError),
}

pub type Result<T> = std::result::Result<T, CreditError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoanKind {
    Material,
    /// Productivity measured as paid hours; nothing is salvaged on dismantling.
    Service,
    PrivateIncome,
}

/// Contract parameters of a productivity loan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoanTerms {
    pub principal: f64,
    /// Repayment horizon `T` in years.
    pub horizon: f64,
    pub n_repayments: usize,
    /// Length `I` of the interest period following the horizon (0 = none).
    pub interest_period: f64,
    pub n_interest_payments: usize,
    /// `κ = rI / rpr`.
    pub interest_ratio: f64,
    pub kind: LoanKind,
    /// Delay before the first repayment window opens (e.g. an education).
    pub start_offset: f64,
}

impl LoanTerms {
    pub fn new(principal: f64, horizon: f64, n_repayments: usize) -> Self {
        Self {
            principal,
            horizon,
            n_repayments,
            interest_period: 0.0,
            n_interest_payments: 1,
            interest_ratio: 0.1,
            kind: LoanKind::Material,
            start_offset: 0.0,
        }
    }

    pub fn with_interest(mut self, period: f64, payments: usize, ratio: f64) -> Self {
        self.interest_period = period;
        self.n_interest_payments = payments;
        self.interest_ratio = ratio;
        self
    }

    pub fn with_kind(mut self, kind: LoanKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CreditError::InvalidTerms(m));
        if !(self.principal.is_finite() && self.principal > 0.0) {
            return bad(format!("principal must be > 0, got {}", self.principal));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return bad(format!("horizon must be > 0, got {}", self.horizon));
        }
        if self.n_repayments == 0 {
            return bad("n_repayments must be >= 1".into());
        }
        if !(self.interest_period.is_finite() && self.interest_period >= 0.0) {
            return bad(format!(
                "interest_period must be >= 0, got {}",
                self.interest_period
            ));
        }
        if self.interest_period > 0.0 && self.n_interest_payments == 0 {
            return bad("n_interest_payments must be >= 1 when interest_period > 0".into());
        }
        if !(self.interest_ratio > 0.0 && self.interest_ratio < 1.0) {
            return bad(format!(
                "interest_ratio must lie in (0, 1), got {}",
                self.interest_ratio
            ));
        }
        if !(self.start_offset.is_finite() && self.start_offset >= 0.0) {
            return bad(format!(
                "start_offset must be >= 0, got {}",
                self.start_offset
            ));
        }
        Ok(())
    }

    /// Window boundaries `offset + m/n·T`, `m = 0..=n`.
    pub fn repayment_instants(&self) -> Vec<f64> {
        let n = self.n_repayments as f64;
        (0..=self.n_repayments)
            .map(|m| self.start_offset + self.horizon * (m as f64 / n))
            .collect()
    }

    /// Window boundaries `offset + T + m/n_I·I`; empty without interest period.
    pub fn interest_instants(&self) -> Vec<f64> {
        if self.interest_period == 0.0 {
            return Vec::new();
        }
        let n = self.n_interest_payments as f64;
        let start = self.start_offset + self.horizon;
        (0..=self.n_interest_payments)
            .map(|m| start + self.interest_period * (m as f64 / n))
            .collect()
    }

    pub fn end(&self) -> f64 {
        self.start_offset + self.horizon + self.interest_period
    }
}

/// Cumulative productivity `Π_t` and the per-unit price `S_t/N_t`.
#[derive(Debug, Clone)]
pub struct EnterpriseModel {
    pub productivity: ProcessModel,
    pub price_ratio: ProcessModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "basis", rename_all = "snake_case")]
pub enum PlanBasis {
    ProductionShare,
    IncomeFraction { fraction: f64 },
}

/// The schedule agreed at time 0. Fields are read-only; the only derived
/// plan is [`RepaymentPlan::extended`], which moves dates but keeps every
/// promised share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepaymentPlan {
    basis: PlanBasis,
    principal: f64,
    rpr: Vec<f64>,
    rpr_std_error: Vec<f64>,
    interest_fraction: Vec<f64>,
    repayment_instants: Vec<f64>,
    interest_instants: Vec<f64>,
    expected_payments: Vec<f64>,
}

impl RepaymentPlan {
    pub fn basis(&self) -> PlanBasis {
        self.basis
    }

    pub fn principal(&self) -> f64 {
        self.principal
    }

    pub fn rpr(&self) -> &[f64] {
        &self.rpr
    }

    /// Propagated Monte Carlo standard error of each `rpr` entry.
    pub fn rpr_std_error(&self) -> &[f64] {
        &self.rpr_std_error
    }

    /// `rI` per interest window.
    pub fn interest_fraction(&self) -> &[f64] {
        &self.interest_fraction
    }

    /// Repayment window boundaries (`n + 1` values).
    pub fn repayment_instants(&self) -> &[f64] {
        &self.repayment_instants
    }

    /// Interest window boundaries (`n_I + 1` values, or empty).
    pub fn interest_instants(&self) -> &[f64] {
        &self.interest_instants
    }

    /// Expected payment per window for income-fraction plans.
    pub fn expected_payments(&self) -> &[f64] {
        &self.expected_payments
    }

    pub fn end(&self) -> f64 {
        self.interest_instants
            .last()
            .or(self.repayment_instants.last())
            .copied()
            .unwrap_or(0.0)
    }

    /// The plan after a negotiated extension of the repayment horizon.
    ///
    /// Boundaries after `as_of` are stretched so the last repayment falls
    /// on `new_horizon_end`; interest windows shift by the same amount. All
    /// shares are kept as agreed.
    pub fn extended(&self, as_of: f64, new_horizon_end: f64) -> Result<Self> {
        let old_end = *self.repayment_instants.last().expect("plan has instants");
        if !(new_horizon_end > old_end) || !(as_of < old_end) {
            return Err(CreditError::InvalidTerms(format!(
                "extension must move the horizon end {old_end} later than the current {as_of}, got {new_horizon_end}"
            )));
        }
        let scale = (new_horizon_end - as_of) / (old_end - as_of);
        let stretch = |t: f64| {
            if t <= as_of {
                t
            } else {
                as_of + (t - as_of) * scale
            }
        };
        let shift = new_horizon_end - old_end;
        let mut plan = self.clone();
        plan.repayment_instants = self
            .repayment_instants
            .iter()
            .map(|&t| stretch(t))
            .collect();
        plan.interest_instants = self.interest_instants.iter().map(|&t| t + shift).collect();
        Ok(plan)
    }
}

/// Index of the repayment window whose relative position matches interest
/// window `m` (both 1-based): `ceil(m·n / n_I)`.
fn matching_repayment(m: usize, n: usize, n_interest: usize) -> usize {
    (m * n).div_ceil(n_interest).clamp(1, n)
}

fn mc_grid(end: f64, mc: &McConfig) -> Result<TimeGrid> {
    let steps = ((end * mc.steps_per_year as f64).ceil() as usize).max(1);
    Ok(TimeGrid::new(0.0, end, steps)?)
}

/// Compute the time-0 repayment schedule by Monte Carlo on `model`.
///
/// The ratio of expectations is taken literally: numerator and denominator
/// are estimated separately (on independent streams) and divided.
pub fn compute_repayment_plan(
    terms: &LoanTerms,
    model: &EnterpriseModel,
    mc: &McConfig,
) -> Result<RepaymentPlan> {
    terms.validate()?;
    let grid = mc_grid(terms.end(), mc)?;
    let production = model
        .productivity
        .simulate(&grid, mc.n_paths, derive_seed(mc.seed, 1))?;
    let prices = model
        .price_ratio
        .simulate(&grid, mc.n_paths, derive_seed(mc.seed, 2))?;

    let instants = terms.repayment_instants();
    let per_period = terms.principal / terms.n_repayments as f64;
    let mut rpr = Vec::with_capacity(terms.n_repayments);
    let mut rpr_se = Vec::with_capacity(terms.n_repayments);
    for w in instants.windows(2) {
        let (a, b) = (w[0], w[1]);
        let increments: Vec<f64> = (0..production.n_paths())
            .into_par_iter()
            .map(|i| production.value_at(i, b) - production.value_at(i, a))
            .collect();
        let dpi = McEstimate::from_samples(&increments)?;
        if !(dpi.mean > 0.0) {
            return Err(CreditError::NonPositiveProduction {
                instant: b,
                expected: dpi.mean,
            });
        }
        let reciprocal: Vec<f64> = (0..prices.n_paths())
            .into_par_iter()
            .map(|i| prices.value_at(i, b))
            .collect();
        if let Some(path) = reciprocal.iter().position(|&p| !(p > 0.0)) {
            return Err(CreditError::NonPositivePrice { path, instant: b });
        }
        let reciprocal: Vec<f64> = reciprocal.iter().map(|p| per_period / p).collect();
        let value = McEstimate::from_samples(&reciprocal)?;
        let r = value.mean / dpi.mean;
        // Delta method for the ratio of two independent estimates.
        let se = ((value.std_error / dpi.mean).powi(2)
            + (value.mean * dpi.std_error / (dpi.mean * dpi.mean)).powi(2))
        .sqrt();
        rpr.push(r);
        rpr_se.push(se);
    }

    let interest_instants = terms.interest_instants();
    let interest_fraction = (1..interest_instants.len())
        .map(|m| {
            let k = matching_repayment(m, terms.n_repayments, terms.n_interest_payments);
            terms.interest_ratio * rpr[k - 1]
        })
        .collect();

    Ok(RepaymentPlan {
        basis: PlanBasis::ProductionShare,
        principal: terms.principal,
        rpr,
        rpr_std_error: rpr_se,
        interest_fraction,
        repayment_instants: instants,
        interest_instants,
        expected_payments: Vec::new(),
    })
}

/// One realized pair of productivity and price-ratio paths on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizedPath {
    grid: TimeGrid,
    productivity: Vec<f64>,
    price_ratio: Vec<f64>,
}

impl RealizedPath {
    pub fn new(grid: TimeGrid, productivity: Vec<f64>, price_ratio: Vec<f64>) -> Result<Self> {
        let n = grid.n_points();
        if productivity.len() != n || price_ratio.len() != n {
            return Err(CreditError::InvalidTerms(format!(
                "realized paths need {n} points, got {} and {}",
                productivity.len(),
                price_ratio.len()
            )));
        }
        Ok(Self {
            grid,
            productivity,
            price_ratio,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn productivity_at(&self, t: f64) -> f64 {
        interpolate(&self.grid, &self.productivity, t)
    }

    fn price_at(&self, t: f64) -> f64 {
        interpolate(&self.grid, &self.price_ratio, t)
    }

    fn check_monotone(&self) -> Result<()> {
        for (i, w) in self.productivity.windows(2).enumerate() {
            if w[1] < w[0] {
                return Err(CreditError::DecreasingProductivity {
                    t: self.grid.point(i + 1),
                    from: w[0],
                    to: w[1],
                });
            }
        }
        Ok(())
    }
}

/// Realized settlement of a loan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoanOutcome {
    /// Production accrued to repayment, in production units.
    pub pi_total: f64,
    /// `A`: market value of the repayment production.
    pub market_value: f64,
    /// `J`: market value of the interest production.
    pub interest: f64,
    /// `E = A + J`.
    pub total_repaid: f64,
    pub bank_loss: f64,
    pub bank_gain: f64,
    /// `A − C`; zero when prices and production meet their expectations.
    pub coverage_error: f64,
}

impl LoanOutcome {
    fn new(principal: f64, pi_total: f64, market_value: f64, interest: f64) -> Self {
        let total_repaid = market_value + interest;
        Self {
            pi_total,
            market_value,
            interest,
            total_repaid,
            bank_loss: (principal - total_repaid).max(0.0),
            bank_gain: (total_repaid - principal).max(0.0),
            coverage_error: market_value - principal,
        }
    }
}

/// Settle a production-share plan against one realized path pair.
pub fn settle_loan(
    terms: &LoanTerms,
    plan: &RepaymentPlan,
    realized: &RealizedPath,
) -> Result<LoanOutcome> {
    if plan.basis != PlanBasis::ProductionShare {
        return Err(CreditError::WrongBasis(
            "income plans settle with settle_income_loan",
        ));
    }
    let end = plan.end();
    if !realized.grid.contains(0.0) || !realized.grid.contains(end) {
        return Err(CreditError::InsufficientCoverage { needed: end });
    }
    realized.check_monotone()?;

    let mut pi_total = 0.0;
    let mut market_value = 0.0;
    for (w, share) in plan.repayment_instants.windows(2).zip(&plan.rpr) {
        let produced = share * (realized.productivity_at(w[1]) - realized.productivity_at(w[0]));
        pi_total += produced;
        market_value += produced * realized.price_at(w[1]);
    }
    let mut interest = 0.0;
    for (w, share) in plan
        .interest_instants
        .windows(2)
        .zip(&plan.interest_fraction)
    {
        let produced = share * (realized.productivity_at(w[1]) - realized.productivity_at(w[0]));
        interest += produced * realized.price_at(w[1]);
    }
    Ok(LoanOutcome::new(
        terms.principal,
        pi_total,
        market_value,
        interest,
    ))
}

// ---------------------------------------------------------------------------
// Default resolution
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefaultState {
    Performing,
    ProductionStopped,
    Misconduct,
    ResolvedLocalContinuation,
    ResolvedPrivateInvestor,
    ResolvedDismantled,
}

impl DefaultState {
    pub fn is_failure(self) -> bool {
        matches!(
            self,
            DefaultState::ProductionStopped | DefaultState::Misconduct
        )
    }

    pub fn is_terminal(self) -> bool {
        matches!(
            self,
            DefaultState::ResolvedLocalContinuation
                | DefaultState::ResolvedPrivateInvestor
                | DefaultState::ResolvedDismantled
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DefaultState::Performing => "performing",
            DefaultState::ProductionStopped => "production_stopped",
            DefaultState::Misconduct => "misconduct",
            DefaultState::ResolvedLocalContinuation => "resolved_local_continuation",
            DefaultState::ResolvedPrivateInvestor => "resolved_private_investor",
            DefaultState::ResolvedDismantled => "resolved_dismantled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Failure {
    ProductionStopped,
    Misconduct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "decision", rename_all = "snake_case")]
pub enum Resolution {
    /// Continue locally, optionally extending the horizon end to the given time.
    LocalContinuation {
        extension: Option<f64>,
    },
    PrivateInvestor {
        approved: bool,
    },
    Dismantle,
}

/// Effect of a resolution on the lending bank.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LedgerEffect {
    pub wealth_delta: f64,
    pub new_horizon_end: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefaultCase {
    state: DefaultState,
    pub kind: LoanKind,
    pub salvage_value: f64,
    pub dismantle_cost: f64,
}

impl DefaultCase {
    pub fn new(kind: LoanKind, salvage_value: f64, dismantle_cost: f64) -> Result<Self> {
        if !(salvage_value >= 0.0 && dismantle_cost >= 0.0) {
            return Err(CreditError::InvalidTerms(format!(
                "salvage {salvage_value} and dismantle cost {dismantle_cost} must be >= 0"
            )));
        }
        Ok(Self {
            state: DefaultState::Performing,
            kind,
            salvage_value,
            dismantle_cost,
        })
    }

    pub fn state(&self) -> DefaultState {
        self.state
    }

    /// Failed service enterprises yield nothing on dismantling.
    pub fn effective_salvage(&self) -> f64 {
        match self.kind {
            LoanKind::Service => 0.0,
            _ => self.salvage_value,
        }
    }

    pub fn report_failure(&mut self, failure: Failure) -> Result<()> {
        if self.state != DefaultState::Performing {
            return Err(CreditError::InvalidTransition {
                from: self.state,
                action: "report a failure on",
            });
        }
        self.state = match failure {
            Failure::ProductionStopped => DefaultState::ProductionStopped,
            Failure::Misconduct => DefaultState::Misconduct,
        };
        Ok(())
    }
}

/// Move a failed case to exactly one resolved state. On error the case is
/// left untouched.
pub fn resolve_default(case: &mut DefaultCase, decision: Resolution) -> Result<LedgerEffect> {
    if !case.state.is_failure() {
        return Err(CreditError::InvalidTransition {
            from: case.state,
            action: "resolve",
        });
    }
    let (next, effect) = match decision {
        Resolution::LocalContinuation { extension } => (
            DefaultState::ResolvedLocalContinuation,
            LedgerEffect {
                wealth_delta: 0.0,
                new_horizon_end: extension,
            },
        ),
        Resolution::PrivateInvestor { approved: false } => {
            return Err(CreditError::ApprovalRequired)
        }
        Resolution::PrivateInvestor { approved: true } => (
            DefaultState::ResolvedPrivateInvestor,
            LedgerEffect::default(),
        ),
        Resolution::Dismantle => (
            DefaultState::ResolvedDismantled,
            LedgerEffect {
                wealth_delta: case.effective_salvage() - case.dismantle_cost,
                new_horizon_end: None,
            },
        ),
    };
    case.state = next;
    Ok(effect)
}

// ---------------------------------------------------------------------------
// Income-fraction loans for private persons
// ---------------------------------------------------------------------------

/// Plan for a private-income loan: the bank receives `fraction` of the
/// borrower's realized income over each repayment window, and nothing else.
pub fn build_income_loan(
    terms: &LoanTerms,
    income: &ProcessModel,
    fraction: f64,
    mc: &McConfig,
) -> Result<RepaymentPlan> {
    terms.validate()?;
    if terms.kind != LoanKind::PrivateIncome {
        return Err(CreditError::InvalidTerms(format!(
            "income loans need kind private_income, got {:?}",
            terms.kind
        )));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(CreditError::InvalidTerms(format!(
            "income fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let instants = terms.repayment_instants();
    let end = *instants.last().expect("at least one window");
    let grid = mc_grid(end, mc)?;
    let bundle = income.simulate(&grid, mc.n_paths, derive_seed(mc.seed, 3))?;
    if let Some(k) = bundle.values().iter().position(|&v| v < 0.0) {
        let n = grid.n_points();
        return Err(CreditError::NegativeIncome {
            t: grid.point(k % n),
            value: bundle.values()[k],
        });
    }
    let mut expected_payments = Vec::with_capacity(terms.n_repayments);
    for w in instants.windows(2) {
        let samples: Vec<f64> = bundle
            .paths()
            .map(|p| fraction * integrate(&grid, p, w[0], w[1]))
            .collect();
        expected_payments.push(McEstimate::from_samples(&samples)?.mean);
    }
    Ok(RepaymentPlan {
        basis: PlanBasis::IncomeFraction { fraction },
        principal: terms.principal,
        rpr: vec![fraction; terms.n_repayments],
        rpr_std_error: vec![0.0; terms.n_repayments],
        interest_fraction: Vec::new(),
        repayment_instants: instants,
        interest_instants: Vec::new(),
        expected_payments,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncomeSettlement {
    pub payments: Vec<f64>,
    pub outcome: LoanOutcome,
    pub state: DefaultState,
}

/// Settle an income-fraction plan against a realized income-rate path.
///
/// A window with zero income pays zero and is not a default; only a willful
/// breach moves the loan to misconduct.
pub fn settle_income_loan(
    terms: &LoanTerms,
    plan: &RepaymentPlan,
    grid: &TimeGrid,
    income: &[f64],
    willful_breach: bool,
) -> Result<IncomeSettlement> {
    let PlanBasis::IncomeFraction { fraction } = plan.basis else {
        return Err(CreditError::WrongBasis(
            "production-share plans settle with settle_loan",
        ));
    };
    if income.len() != grid.n_points() {
        return Err(CreditError::InvalidTerms(format!(
            "income path needs {} points, got {}",
            grid.n_points(),
            income.len()
        )));
    }
    if !grid.contains(plan.end()) {
        return Err(CreditError::InsufficientCoverage { needed: plan.end() });
    }
    if let Some(i) = income.iter().position(|&v| v < 0.0) {
        return Err(CreditError::NegativeIncome {
            t: grid.point(i),
            value: income[i],
        });
    }
    let payments: Vec<f64> = plan
        .repayment_instants
        .windows(2)
        .map(|w| fraction * integrate(grid, income, w[0], w[1]))
        .collect();
    let paid: f64 = payments.iter().sum();
    let state = if willful_breach {
        DefaultState::Misconduct
    } else {
        DefaultState::Performing
    };
    Ok(IncomeSettlement {
        payments,
        outcome: LoanOutcome::new(terms.principal, paid, paid, 0.0),
        state,
    })
}

// ---------------------------------------------------------------------------
// Motivation scenario
// ---------------------------------------------------------------------------

/// The historical productivity loan: 10 units lent, repaid with goods worth
/// 10 plus goods worth 1 as interest.
pub fn motivation_scenario() -> (LoanTerms, EnterpriseModel) {
    use crate::stochastics::DiffusionSpec;
    let terms = LoanTerms::new(10.0, 1.0, 1).with_interest(1.0, 1, 0.1);
    let model = EnterpriseModel {
        productivity: ProcessModel::diffusion(DiffusionSpec::linear(0.0, 10.0)),
        price_ratio: ProcessModel::diffusion(DiffusionSpec::constant(1.0)),
    };
    (terms, model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotivationReport {
    pub terms: LoanTerms,
    pub plan: RepaymentPlan,
    pub outcome: LoanOutcome,
}

pub fn golden_motivation() -> Result<MotivationReport> {
    let (terms, model) = motivation_scenario();
    // One step per year keeps every instant on the grid with exact sums.
    let mc = McConfig {
        n_paths: 1,
        seed: 0,
        steps_per_year: 1,
    };
    let plan = compute_repayment_plan(&terms, &model, &mc)?;
    let grid = mc_grid(terms.end(), &mc)?;
    let pi = model.productivity.simulate(&grid, 1, 0)?;
    let px = model.price_ratio.simulate(&grid, 1, 0)?;
    let realized = RealizedPath::new(grid, pi.path(0).to_vec(), px.path(0).to_vec())?;
    let outcome = settle_loan(&terms, &plan, &realized)?;
    Ok(MotivationReport {
        terms,
        plan,
        outcome,
    })
}
