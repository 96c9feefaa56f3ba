//! Bank ledgers with provenance-tagged interbank funds.
//!
//! Money borrowed from another bank is tagged `credit_only`: it may fund
//! projects directly but never enters the deposit base that loans are
//! levered on. Every issuance appends a public credit-to-deposit ratio
//! disclosure. Deposits move only with the holder's consent and never fund
//! loans at another institute. A bank whose wealth turns negative collapses,
//! and its interbank lenders cover the shortfall pro-rata up to what each
//! lent.
//!
//! Accounting identity: per ledger let
//! `Q = deposits + wealth + interbank_owed − interbank_claims`. Summed over
//! all ledgers, `Q` changes only by settlement gains/losses and resolution
//! effects booked through [`BankSystem::settle_loan`],
//! [`BankSystem::absorb_loss`] and [`BankSystem::apply_effect`].

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BankError {
    #[error("unknown bank {0}")]
    UnknownBank(String),
    #[error("amount must be finite and > 0, got {0}")]
    InvalidAmount(f64),
    #[error("bank {bank}: issuing would raise the credit/deposit ratio to {ratio} > {max_ratio}")]
    RatioBreach {
        bank: String,
        ratio: f64,
        max_ratio: f64,
    },
    #[error("bank {bank}: only {available} of credit-only interbank funds available, {requested} requested")]
    Provenance {
        bank: String,
        available: f64,
        requested: f64,
    },
    #[error("bank {bank}: insufficient {what} ({available} < {requested})")]
    Insufficient {
        bank: String,
        what: &'static str,
        available: f64,
        requested: f64,
    },
    #[error("bank {0} has collapsed")]
    Collapsed(String),
    #[error("deposits may only move with the holder's direct consent")]
    ConsentRequired,
    #[error("a bank cannot lend to itself")]
    SelfLoan,
    #[error("history is not chronological at record {0}")]
    Unordered(usize),
}

pub type Result<T> = std::result::Result<T, BankError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FundSource {
    Deposits,
    Interbank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FundTag {
    CreditOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterbankEntry {
    pub lender: String,
    pub amount: f64,
    /// Principal not yet repaid or covered.
    pub outstanding: f64,
    pub tag: FundTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioDisclosure {
    pub time: f64,
    pub outstanding_credit: f64,
    pub deposits: f64,
    pub ratio: f64,
}

fn credit_ratio(credit: f64, deposits: f64) -> f64 {
    if credit == 0.0 {
        0.0
    } else if deposits <= 0.0 {
        f64::INFINITY
    } else {
        credit / deposits
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankLedger {
    pub id: String,
    pub deposits: f64,
    pub outstanding_credit: f64,
    pub wealth: f64,
    pub interbank_received: Vec<InterbankEntry>,
    /// Unspent credit-only funds.
    pub interbank_available: f64,
    /// Outstanding claims on other banks, by borrower.
    pub interbank_claims: BTreeMap<String, f64>,
    pub ratio_disclosures: Vec<RatioDisclosure>,
    pub collapsed: bool,
}

impl BankLedger {
    pub fn new(id: impl Into<String>, deposits: f64, wealth: f64) -> Self {
        Self {
            id: id.into(),
            deposits,
            outstanding_credit: 0.0,
            wealth,
            interbank_received: Vec::new(),
            interbank_available: 0.0,
            interbank_claims: BTreeMap::new(),
            ratio_disclosures: Vec::new(),
            collapsed: false,
        }
    }

    pub fn ratio(&self) -> f64 {
        credit_ratio(self.outstanding_credit, self.deposits)
    }

    pub fn interbank_owed(&self) -> f64 {
        self.interbank_received.iter().map(|e| e.outstanding).sum()
    }

    pub fn claims_total(&self) -> f64 {
        self.interbank_claims.values().sum()
    }

    /// This ledger's term of the accounting identity.
    pub fn net_position(&self) -> f64 {
        self.deposits + self.wealth + self.interbank_owed() - self.claims_total()
    }

    pub fn disclose(&mut self, time: f64) -> RatioDisclosure {
        let d = RatioDisclosure {
            time,
            outstanding_credit: self.outstanding_credit,
            deposits: self.deposits,
            ratio: self.ratio(),
        };
        self.ratio_disclosures.push(d);
        d
    }

    fn ensure_open(&self) -> Result<()> {
        if self.collapsed {
            Err(BankError::Collapsed(self.id.clone()))
        } else {
            Ok(())
        }
    }

    fn check_ratio(&self, amount: f64, max_ratio: f64) -> Result<f64> {
        let ratio = credit_ratio(self.outstanding_credit + amount, self.deposits);
        if ratio > max_ratio {
            return Err(BankError::RatioBreach {
                bank: self.id.clone(),
                ratio,
                max_ratio,
            });
        }
        Ok(ratio)
    }
}

/// Cover amounts at or below this are treated as settled.
const COVER_EPS: f64 = 1e-12;

fn check_amount(amount: f64) -> Result<()> {
    if amount.is_finite() && amount > 0.0 {
        Ok(())
    } else {
        Err(BankError::InvalidAmount(amount))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum Party {
    Bank(String),
    External(String),
}

impl Party {
    fn bank(&self) -> Option<&str> {
        match self {
            Party::Bank(b) => Some(b),
            Party::External(_) => None,
        }
    }

    fn label(&self) -> String {
        match self {
            Party::Bank(b) => b.clone(),
            Party::External(e) => format!("ext:{e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TransferKind {
    /// Customer deposits moving between banks. `funds` names what actually
    /// moved; interbank money arriving as deposits is a violation.
    DepositMove {
        consented: bool,
        funds: FundSource,
    },
    InterbankLoan,
    InterbankRepayment,
    /// A loan paid out by `issuer` from the funds of the `from` bank.
    LoanFunding {
        source: FundSource,
        issuer: String,
        /// Deposit base the issuer used for its ratio.
        deposit_base: f64,
        disclosed_ratio: Option<f64>,
    },
    /// A settlement: `amount` is the principal retired, `repaid` what came back.
    LoanSettlement {
        repaid: f64,
    },
    LossAbsorption,
    /// A lender covering part of a collapsed borrower's shortfall.
    CollapseCover,
    ResolutionEffect {
        wealth_delta: f64,
    },
}

impl TransferKind {
    pub fn name(&self) -> &'static str {
        match self {
            TransferKind::DepositMove { .. } => "deposit_move",
            TransferKind::InterbankLoan => "interbank_loan",
            TransferKind::InterbankRepayment => "interbank_repayment",
            TransferKind::LoanFunding { .. } => "loan_funding",
            TransferKind::LoanSettlement { .. } => "loan_settlement",
            TransferKind::LossAbsorption => "loss_absorption",
            TransferKind::CollapseCover => "collapse_cover",
            TransferKind::ResolutionEffect { .. } => "resolution_effect",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferRecord {
    pub time: f64,
    pub from: Party,
    pub to: Party,
    pub amount: f64,
    pub kind: TransferKind,
}

impl TransferRecord {
    pub fn from_label(&self) -> String {
        self.from.label()
    }

    pub fn to_label(&self) -> String {
        self.to.label()
    }
}

/// Issue a loan from `ledger`'s deposits or its credit-only funds.
pub fn issue_loan(
    ledger: &mut BankLedger,
    amount: f64,
    source: FundSource,
    max_ratio: f64,
    time: f64,
) -> Result<TransferRecord> {
    check_amount(amount)?;
    ledger.ensure_open()?;
    if source == FundSource::Interbank && amount > ledger.interbank_available + 1e-12 {
        return Err(BankError::Provenance {
            bank: ledger.id.clone(),
            available: ledger.interbank_available,
            requested: amount,
        });
    }
    ledger.check_ratio(amount, max_ratio)?;
    ledger.outstanding_credit += amount;
    if source == FundSource::Interbank {
        ledger.interbank_available = (ledger.interbank_available - amount).max(0.0);
    }
    let disclosure = ledger.disclose(time);
    Ok(TransferRecord {
        time,
        from: Party::Bank(ledger.id.clone()),
        to: Party::External(format!("{}-borrower", ledger.id)),
        amount,
        kind: TransferKind::LoanFunding {
            source,
            issuer: ledger.id.clone(),
            deposit_base: ledger.deposits,
            disclosed_ratio: Some(disclosure.ratio),
        },
    })
}

/// Lend `amount` from `lender` to `borrower` as credit-only funds.
pub fn interbank_loan(
    lender: &mut BankLedger,
    borrower: &mut BankLedger,
    amount: f64,
    max_ratio: f64,
    time: f64,
) -> Result<TransferRecord> {
    check_amount(amount)?;
    if lender.id == borrower.id {
        return Err(BankError::SelfLoan);
    }
    lender.ensure_open()?;
    borrower.ensure_open()?;
    let capacity = lender.wealth.max(0.0) + lender.deposits;
    if amount > capacity {
        return Err(BankError::Insufficient {
            bank: lender.id.clone(),
            what: "wealth and deposits",
            available: capacity,
            requested: amount,
        });
    }
    lender.check_ratio(amount, max_ratio)?;
    lender.outstanding_credit += amount;
    *lender
        .interbank_claims
        .entry(borrower.id.clone())
        .or_insert(0.0) += amount;
    lender.disclose(time);
    borrower.interbank_received.push(InterbankEntry {
        lender: lender.id.clone(),
        amount,
        outstanding: amount,
        tag: FundTag::CreditOnly,
    });
    borrower.interbank_available += amount;
    Ok(TransferRecord {
        time,
        from: Party::Bank(lender.id.clone()),
        to: Party::Bank(borrower.id.clone()),
        amount,
        kind: TransferKind::InterbankLoan,
    })
}

/// Reduce the borrower's debt to `lender` by `amount` (oldest entries first).
fn reduce_debt(borrower: &mut BankLedger, lender: &str, mut amount: f64) {
    for e in borrower
        .interbank_received
        .iter_mut()
        .filter(|e| e.lender == lender)
    {
        let take = e.outstanding.min(amount);
        e.outstanding -= take;
        amount -= take;
        if amount <= 0.0 {
            break;
        }
    }
}

fn reduce_claim(lender: &mut BankLedger, borrower: &str, amount: f64) {
    if let Some(c) = lender.interbank_claims.get_mut(borrower) {
        *c -= amount;
        if c.abs() < 1e-12 {
            lender.interbank_claims.remove(borrower);
        }
    }
}

/// Outcome of booking a loss.
#[derive(Debug, Clone, PartialEq)]
pub struct LossOutcome {
    pub collapsed: bool,
    /// `max(−wealth, 0)` after the loss.
    pub shortfall: f64,
    /// Pro-rata cover owed by each interbank lender.
    pub cover: Vec<(String, f64)>,
}

/// Book `loss` against `ledger.wealth` and work out the lenders' cover.
///
/// The collapsed bank's shortfall is covered by its interbank lenders up
/// to the total unrepaid interbank debt, split pro-rata by outstanding
/// amount. The cover is applied by [`BankSystem::absorb_loss`].
pub fn absorb_loss(ledger: &mut BankLedger, loss: f64) -> Result<LossOutcome> {
    if !(loss.is_finite() && loss >= 0.0) {
        return Err(BankError::InvalidAmount(loss));
    }
    ledger.wealth -= loss;
    Ok(collapse_cover(ledger))
}

fn collapse_cover(ledger: &mut BankLedger) -> LossOutcome {
    if ledger.wealth >= 0.0 {
        return LossOutcome {
            collapsed: ledger.collapsed,
            shortfall: 0.0,
            cover: Vec::new(),
        };
    }
    ledger.collapsed = true;
    let shortfall = -ledger.wealth;
    let mut by_lender: BTreeMap<String, f64> = BTreeMap::new();
    for e in &ledger.interbank_received {
        if e.outstanding > 0.0 {
            *by_lender.entry(e.lender.clone()).or_insert(0.0) += e.outstanding;
        }
    }
    let owed: f64 = by_lender.values().sum();
    let total = shortfall.min(owed);
    let cover = if total > 0.0 {
        by_lender
            .into_iter()
            .map(|(l, out)| (l, total * out / owed))
            .collect()
    } else {
        Vec::new()
    };
    LossOutcome {
        collapsed: true,
        shortfall,
        cover,
    }
}

/// A compliance rule class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplianceRule {
    /// Interbank funds entering a deposit base.
    InterbankAsDeposit,
    /// Deposits moved without the holder's consent.
    UnconsentedDepositMove,
    /// Loan issued without a ratio disclosure.
    MissingDisclosure,
    /// Deposits used to issue a loan at another institute.
    ForeignDepositLending,
}

impl ComplianceRule {
    pub const ALL: [ComplianceRule; 4] = [
        ComplianceRule::InterbankAsDeposit,
        ComplianceRule::UnconsentedDepositMove,
        ComplianceRule::MissingDisclosure,
        ComplianceRule::ForeignDepositLending,
    ];

    pub fn code(self) -> &'static str {
        match self {
            ComplianceRule::InterbankAsDeposit => "a",
            ComplianceRule::UnconsentedDepositMove => "b",
            ComplianceRule::MissingDisclosure => "c",
            ComplianceRule::ForeignDepositLending => "d",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub record_index: usize,
    pub rule: ComplianceRule,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ComplianceReport {
    pub violations: Vec<Violation>,
}

impl ComplianceReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Replay `history` from the `initial` ledgers and report rule violations.
pub fn check_compliance(
    history: &[TransferRecord],
    initial: &[BankLedger],
) -> Result<ComplianceReport> {
    if let Some(k) = history.windows(2).position(|w| w[1].time < w[0].time) {
        return Err(BankError::Unordered(k + 1));
    }
    let mut deposits: BTreeMap<&str, f64> = initial
        .iter()
        .map(|l| (l.id.as_str(), l.deposits))
        .collect();
    let mut report = ComplianceReport::default();
    let mut flag = |index: usize, rule: ComplianceRule, detail: String| {
        report.violations.push(Violation {
            record_index: index,
            rule,
            detail,
        });
    };
    for (index, rec) in history.iter().enumerate() {
        match &rec.kind {
            TransferKind::DepositMove { consented, funds } => {
                if !consented {
                    flag(
                        index,
                        ComplianceRule::UnconsentedDepositMove,
                        format!(
                            "{} moved from {} to {} without consent",
                            rec.amount,
                            rec.from_label(),
                            rec.to_label()
                        ),
                    );
                }
                if *funds == FundSource::Interbank {
                    flag(
                        index,
                        ComplianceRule::InterbankAsDeposit,
                        format!(
                            "credit-only funds of {} credited as deposits at {}",
                            rec.from_label(),
                            rec.to_label()
                        ),
                    );
                } else if *consented {
                    // Only lawful moves change the deposit base.
                    if let Some(b) = rec.from.bank() {
                        *deposits.entry(b).or_insert(0.0) -= rec.amount;
                    }
                    if let Some(b) = rec.to.bank() {
                        *deposits.entry(b).or_insert(0.0) += rec.amount;
                    }
                }
            }
            TransferKind::LoanFunding {
                source,
                issuer,
                deposit_base,
                disclosed_ratio,
            } => {
                if disclosed_ratio.is_none() {
                    flag(
                        index,
                        ComplianceRule::MissingDisclosure,
                        format!("loan at {issuer} without disclosure"),
                    );
                }
                if *source == FundSource::Deposits {
                    if rec.from.bank() != Some(issuer.as_str()) {
                        flag(
                            index,
                            ComplianceRule::ForeignDepositLending,
                            format!(
                                "deposits of {} fund a loan issued by {issuer}",
                                rec.from_label()
                            ),
                        );
                    }
                    let actual = deposits.get(issuer.as_str()).copied().unwrap_or(0.0);
                    if *deposit_base > actual + 1e-9 * actual.abs().max(1.0) {
                        flag(index, ComplianceRule::InterbankAsDeposit, format!(
                            "{issuer} levered on a deposit base of {deposit_base} but holds {actual} in deposits"
                        ));
                    }
                }
            }
            _ => {}
        }
    }
    Ok(report)
}

/// Several ledgers with their shared journal.
#[derive(Debug, Clone, PartialEq)]
pub struct BankSystem {
    ledgers: Vec<BankLedger>,
    initial: Vec<BankLedger>,
    history: Vec<TransferRecord>,
    injected: f64,
    pub max_ratio: f64,
}

impl BankSystem {
    /// Ledgers are kept sorted by id; that order is also the lock order for
    /// two-bank operations.
    pub fn new(mut ledgers: Vec<BankLedger>, max_ratio: f64) -> Self {
        ledgers.sort_by(|a, b| a.id.cmp(&b.id));
        Self {
            initial: ledgers.clone(),
            ledgers,
            history: Vec::new(),
            injected: 0.0,
            max_ratio,
        }
    }

    pub fn ledgers(&self) -> &[BankLedger] {
        &self.ledgers
    }

    pub fn initial(&self) -> &[BankLedger] {
        &self.initial
    }

    pub fn history(&self) -> &[TransferRecord] {
        &self.history
    }

    pub fn ledger(&self, id: &str) -> Result<&BankLedger> {
        self.index(id).map(|i| &self.ledgers[i])
    }

    /// Net settlement gains minus losses booked so far.
    pub fn injected(&self) -> f64 {
        self.injected
    }

    pub fn conserved_total(&self) -> f64 {
        self.ledgers.iter().map(BankLedger::net_position).sum()
    }

    pub fn initial_total(&self) -> f64 {
        self.initial.iter().map(BankLedger::net_position).sum()
    }

    fn index(&self, id: &str) -> Result<usize> {
        self.ledgers
            .binary_search_by(|l| l.id.as_str().cmp(id))
            .map_err(|_| BankError::UnknownBank(id.to_string()))
    }

    fn pair(&mut self, a: &str, b: &str) -> Result<(&mut BankLedger, &mut BankLedger)> {
        let (ia, ib) = (self.index(a)?, self.index(b)?);
        if ia == ib {
            return Err(BankError::SelfLoan);
        }
        if ia < ib {
            let (lo, hi) = self.ledgers.split_at_mut(ib);
            Ok((&mut lo[ia], &mut hi[0]))
        } else {
            let (lo, hi) = self.ledgers.split_at_mut(ia);
            Ok((&mut hi[0], &mut lo[ib]))
        }
    }

    fn push(&mut self, rec: TransferRecord) -> TransferRecord {
        self.history.push(rec.clone());
        rec
    }

    pub fn issue_loan(
        &mut self,
        bank: &str,
        amount: f64,
        source: FundSource,
        time: f64,
    ) -> Result<TransferRecord> {
        let i = self.index(bank)?;
        let max_ratio = self.max_ratio;
        let rec = issue_loan(&mut self.ledgers[i], amount, source, max_ratio, time)?;
        Ok(self.push(rec))
    }

    pub fn interbank_loan(
        &mut self,
        lender: &str,
        borrower: &str,
        amount: f64,
        time: f64,
    ) -> Result<TransferRecord> {
        let max_ratio = self.max_ratio;
        let (l, b) = self.pair(lender, borrower)?;
        let rec = interbank_loan(l, b, amount, max_ratio, time)?;
        Ok(self.push(rec))
    }

    /// Move customer deposits; refused without consent.
    pub fn move_deposits(
        &mut self,
        from: &str,
        to: &str,
        amount: f64,
        consented: bool,
        time: f64,
    ) -> Result<TransferRecord> {
        check_amount(amount)?;
        if !consented {
            return Err(BankError::ConsentRequired);
        }
        let (a, b) = self.pair(from, to)?;
        if amount > a.deposits {
            return Err(BankError::Insufficient {
                bank: a.id.clone(),
                what: "deposits",
                available: a.deposits,
                requested: amount,
            });
        }
        a.deposits -= amount;
        b.deposits += amount;
        let rec = TransferRecord {
            time,
            from: Party::Bank(from.into()),
            to: Party::Bank(to.into()),
            amount,
            kind: TransferKind::DepositMove {
                consented,
                funds: FundSource::Deposits,
            },
        };
        Ok(self.push(rec))
    }

    /// Repay interbank principal out of the borrower's wealth. The lender
    /// receives ordinary wealth.
    pub fn repay_interbank(
        &mut self,
        borrower: &str,
        lender: &str,
        amount: f64,
        time: f64,
    ) -> Result<TransferRecord> {
        check_amount(amount)?;
        let (b, l) = self.pair(borrower, lender)?;
        b.ensure_open()?;
        let owed: f64 = b
            .interbank_received
            .iter()
            .filter(|e| e.lender == lender)
            .map(|e| e.outstanding)
            .sum();
        if amount > owed + 1e-12 {
            return Err(BankError::Insufficient {
                bank: b.id.clone(),
                what: "interbank debt",
                available: owed,
                requested: amount,
            });
        }
        if amount > b.wealth {
            return Err(BankError::Insufficient {
                bank: b.id.clone(),
                what: "wealth",
                available: b.wealth,
                requested: amount,
            });
        }
        b.wealth -= amount;
        reduce_debt(b, lender, amount);
        l.wealth += amount;
        l.outstanding_credit = (l.outstanding_credit - amount).max(0.0);
        reduce_claim(l, borrower, amount);
        let rec = TransferRecord {
            time,
            from: Party::Bank(borrower.into()),
            to: Party::Bank(lender.into()),
            amount,
            kind: TransferKind::InterbankRepayment,
        };
        Ok(self.push(rec))
    }

    /// Retire `principal` of enterprise credit against `repaid` received;
    /// the difference is booked to wealth (losses may collapse the bank).
    pub fn settle_loan(
        &mut self,
        bank: &str,
        principal: f64,
        repaid: f64,
        time: f64,
    ) -> Result<LossOutcome> {
        check_amount(principal)?;
        if !(repaid.is_finite() && repaid >= 0.0) {
            return Err(BankError::InvalidAmount(repaid));
        }
        let i = self.index(bank)?;
        let l = &mut self.ledgers[i];
        let enterprise_credit = l.outstanding_credit - l.claims_total();
        if principal > enterprise_credit + 1e-9 {
            return Err(BankError::Insufficient {
                bank: l.id.clone(),
                what: "enterprise credit",
                available: enterprise_credit,
                requested: principal,
            });
        }
        l.outstanding_credit = (l.outstanding_credit - principal).max(0.0);
        l.wealth += repaid - principal;
        self.injected += repaid - principal;
        self.history.push(TransferRecord {
            time,
            from: Party::External(format!("{bank}-borrower")),
            to: Party::Bank(bank.into()),
            amount: principal,
            kind: TransferKind::LoanSettlement { repaid },
        });
        let outcome = collapse_cover(&mut self.ledgers[i]);
        self.apply_cover(bank, &outcome, time)?;
        Ok(outcome)
    }

    /// Book an external loss against `bank` and propagate any collapse.
    pub fn absorb_loss(&mut self, bank: &str, loss: f64, time: f64) -> Result<LossOutcome> {
        let i = self.index(bank)?;
        let outcome = absorb_loss(&mut self.ledgers[i], loss)?;
        self.injected -= loss;
        if loss > 0.0 {
            self.history.push(TransferRecord {
                time,
                from: Party::Bank(bank.into()),
                to: Party::External("loss".into()),
                amount: loss,
                kind: TransferKind::LossAbsorption,
            });
        }
        self.apply_cover(bank, &outcome, time)?;
        Ok(outcome)
    }

    /// Apply a default-resolution effect (salvage minus dismantling cost).
    pub fn apply_effect(
        &mut self,
        bank: &str,
        wealth_delta: f64,
        time: f64,
    ) -> Result<LossOutcome> {
        if !wealth_delta.is_finite() {
            return Err(BankError::InvalidAmount(wealth_delta));
        }
        let i = self.index(bank)?;
        self.ledgers[i].wealth += wealth_delta;
        self.injected += wealth_delta;
        if wealth_delta != 0.0 {
            self.history.push(TransferRecord {
                time,
                from: Party::External("resolution".into()),
                to: Party::Bank(bank.into()),
                amount: wealth_delta.abs(),
                kind: TransferKind::ResolutionEffect { wealth_delta },
            });
        }
        let outcome = collapse_cover(&mut self.ledgers[i]);
        self.apply_cover(bank, &outcome, time)?;
        Ok(outcome)
    }

    /// Lenders pay their cover into the collapsed bank; their claims and its
    /// debt shrink by the same amount. Lenders pushed below zero collapse in
    /// turn: banks are swept in id order until no cover above round-off is
    /// left. Mutual lending makes the sweep converge geometrically, so the
    /// number of rounds is capped.
    fn apply_cover(&mut self, bank: &str, outcome: &LossOutcome, time: f64) -> Result<()> {
        const MAX_ROUNDS: usize = 256;
        self.pay_cover(bank, &outcome.cover, time)?;
        for _ in 0..MAX_ROUNDS {
            let mut paid = false;
            for i in 0..self.ledgers.len() {
                if self.ledgers[i].wealth >= 0.0 {
                    continue;
                }
                let next = collapse_cover(&mut self.ledgers[i]);
                if next.cover.iter().any(|c| c.1 > COVER_EPS) {
                    let id = self.ledgers[i].id.clone();
                    self.pay_cover(&id, &next.cover, time)?;
                    paid = true;
                }
            }
            if !paid {
                break;
            }
        }
        Ok(())
    }

    fn pay_cover(&mut self, borrower: &str, cover: &[(String, f64)], time: f64) -> Result<()> {
        for (lender, share) in cover {
            let share = *share;
            if share <= COVER_EPS {
                continue;
            }
            let (b, l) = self.pair(borrower, lender)?;
            b.wealth += share;
            reduce_debt(b, lender, share);
            l.wealth -= share;
            reduce_claim(l, borrower, share);
            l.outstanding_credit = (l.outstanding_credit - share).max(0.0);
            self.history.push(TransferRecord {
                time,
                from: Party::Bank(lender.clone()),
                to: Party::Bank(borrower.into()),
                amount: share,
                kind: TransferKind::CollapseCover,
            });
        }
        Ok(())
    }

    /// Periodic disclosure snapshot for every open bank.
    pub fn snapshot(&mut self, time: f64) {
        for l in self.ledgers.iter_mut().filter(|l| !l.collapsed) {
            l.disclose(time);
        }
    }

    pub fn check_compliance(&self) -> Result<ComplianceReport> {
        check_compliance(&self.history, &self.initial)
    }
}

/// A record breaking exactly `rule`, for exercising the checker. `bank`
/// and `other` must be distinct.
pub fn violating_record(
    rule: ComplianceRule,
    bank: &str,
    other: &str,
    time: f64,
    amount: f64,
) -> TransferRecord {
    let loan = |from: &str, disclosed_ratio| TransferRecord {
        time,
        from: Party::Bank(from.into()),
        to: Party::External(format!("{bank}-borrower")),
        amount,
        kind: TransferKind::LoanFunding {
            source: FundSource::Deposits,
            issuer: bank.into(),
            deposit_base: 0.0,
            disclosed_ratio,
        },
    };
    let moved = |consented, funds| TransferRecord {
        time,
        from: Party::Bank(other.into()),
        to: Party::Bank(bank.into()),
        amount,
        kind: TransferKind::DepositMove { consented, funds },
    };
    match rule {
        ComplianceRule::InterbankAsDeposit => moved(true, FundSource::Interbank),
        ComplianceRule::UnconsentedDepositMove => moved(false, FundSource::Deposits),
        ComplianceRule::MissingDisclosure => loan(bank, None),
        ComplianceRule::ForeignDepositLending => loan(other, Some(0.0)),
    }
}

/// Parameters for randomized event runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomRunConfig {
    pub n_events: usize,
    pub snapshot_every: usize,
    /// Largest single transfer as a fraction of the acting bank's deposits.
    pub max_fraction: f64,
    /// Event `k` is stamped `start_time + k`.
    pub start_time: f64,
}

impl Default for RandomRunConfig {
    fn default() -> Self {
        Self {
            n_events: 1000,
            snapshot_every: 50,
            max_fraction: 0.2,
            start_time: 0.0,
        }
    }
}

/// Counts of an event run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RunStats {
    pub attempted: usize,
    pub applied: usize,
    pub refused: usize,
}

/// Drive `system` with `config.n_events` random lawful operations.
/// Refusals (ratio breaches, missing funds, collapsed banks) are counted and
/// leave no record.
pub fn random_run<R: Rng>(
    system: &mut BankSystem,
    config: &RandomRunConfig,
    rng: &mut R,
) -> RunStats {
    let ids: Vec<String> = system.ledgers().iter().map(|l| l.id.clone()).collect();
    let mut stats = RunStats::default();
    if ids.len() < 2 {
        return stats;
    }
    for step in 0..config.n_events {
        let time = config.start_time + step as f64;
        let a = &ids[rng.random_range(0..ids.len())];
        let mut b = &ids[rng.random_range(0..ids.len())];
        if a == b {
            b = &ids[(ids.iter().position(|x| x == a).expect("id exists") + 1) % ids.len()];
        }
        let base = system.ledger(a).map(|l| l.deposits.max(1.0)).unwrap_or(1.0);
        let amount = (base * config.max_fraction * rng.random::<f64>()).max(1e-6);
        stats.attempted += 1;
        let applied = match rng.random_range(0..6u8) {
            0 => system.move_deposits(a, b, amount, true, time).is_ok(),
            1 => system
                .issue_loan(a, amount, FundSource::Deposits, time)
                .is_ok(),
            2 => {
                let avail = system
                    .ledger(a)
                    .map(|l| l.interbank_available)
                    .unwrap_or(0.0);
                avail > 0.0
                    && system
                        .issue_loan(
                            a,
                            avail * rng.random::<f64>().max(1e-3),
                            FundSource::Interbank,
                            time,
                        )
                        .is_ok()
            }
            3 => system.interbank_loan(a, b, amount, time).is_ok(),
            4 => {
                let owed = system
                    .ledger(a)
                    .map(|l| {
                        l.interbank_received
                            .iter()
                            .filter(|e| &e.lender == b)
                            .map(|e| e.outstanding)
                            .sum::<f64>()
                    })
                    .unwrap_or(0.0);
                owed > 1e-9
                    && system
                        .repay_interbank(a, b, owed * rng.random::<f64>().max(1e-3), time)
                        .is_ok()
            }
            _ => {
                let credit = system
                    .ledger(a)
                    .map(|l| l.outstanding_credit - l.claims_total())
                    .unwrap_or(0.0);
                if credit > 1e-9 {
                    let principal = credit * rng.random::<f64>().max(1e-3);
                    // Price risk: between 70% and 120% of the principal comes back.
                    let repaid = principal * (0.7 + 0.5 * rng.random::<f64>());
                    system.settle_loan(a, principal, repaid, time).is_ok()
                } else {
                    false
                }
            }
        };
        if applied {
            stats.applied += 1;
        } else {
            stats.refused += 1;
        }
        if config.snapshot_every > 0 && (step + 1) % config.snapshot_every == 0 {
            system.snapshot(time);
        }
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn issue_within_ratio_disclosed() {
        let mut l = BankLedger::new("A", 100.0, 10.0);
        let rec = issue_loan(&mut l, 50.0, FundSource::Deposits, 1.0, 0.0).unwrap();
        assert_eq!(l.ratio_disclosures.last().unwrap().ratio, 0.5);
        assert_eq!(l.outstanding_credit, 50.0);
        assert!(
            matches!(rec.kind, TransferKind::LoanFunding { disclosed_ratio: Some(r), .. } if r == 0.5)
        );
    }

    #[test]
    fn interbank_funding_is_bounded_by_tagged_funds() {
        let mut l = BankLedger::new("B", 100.0, 10.0);
        l.interbank_available = 30.0;
        assert!(matches!(
            issue_loan(&mut l, 40.0, FundSource::Interbank, 1.0, 0.0),
            Err(BankError::Provenance { available, .. }) if available == 30.0
        ));
        assert!(l.ratio_disclosures.is_empty());
    }

    #[test]
    fn ratio_breach_refuses() {
        let mut l = BankLedger::new("A", 100.0, 10.0);
        l.outstanding_credit = 95.0;
        match issue_loan(&mut l, 10.0, FundSource::Deposits, 1.0, 0.0) {
            Err(BankError::RatioBreach { ratio, .. }) => assert!((ratio - 1.05).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        assert_eq!(l.outstanding_credit, 95.0);
    }

    #[test]
    fn interbank_loan_tags_funds() {
        let mut a = BankLedger::new("A", 100.0, 50.0);
        let mut b = BankLedger::new("B", 100.0, 5.0);
        interbank_loan(&mut a, &mut b, 20.0, 1.0, 0.0).unwrap();
        assert_eq!(b.interbank_received.len(), 1);
        let e = &b.interbank_received[0];
        assert_eq!(
            (e.lender.as_str(), e.amount, e.tag),
            ("A", 20.0, FundTag::CreditOnly)
        );
        assert_eq!(b.deposits, 100.0);
        assert_eq!(a.outstanding_credit, 20.0);
    }

    #[test]
    fn loss_boundaries() {
        let mut l = BankLedger::new("A", 0.0, 10.0);
        assert!(!absorb_loss(&mut l, 4.0).unwrap().collapsed);
        assert_eq!(l.wealth, 6.0);
        let mut l = BankLedger::new("A", 0.0, 10.0);
        let out = absorb_loss(&mut l, 10.0).unwrap();
        assert!(!out.collapsed && l.wealth == 0.0);
        assert!(absorb_loss(&mut l, -1.0).is_err());
    }

    #[test]
    fn collapse_cover_is_pro_rata() {
        let mut sys = BankSystem::new(
            vec![
                BankLedger::new("A", 100.0, 50.0),
                BankLedger::new("B", 100.0, 10.0),
                BankLedger::new("C", 100.0, 50.0),
            ],
            1.0,
        );
        sys.interbank_loan("A", "B", 3.0, 0.0).unwrap();
        sys.interbank_loan("C", "B", 1.0, 0.0).unwrap();
        let out = sys.absorb_loss("B", 12.0, 1.0).unwrap();
        assert!(out.collapsed);
        assert_eq!(out.shortfall, 2.0);
        assert_eq!(
            out.cover,
            vec![("A".to_string(), 1.5), ("C".to_string(), 0.5)]
        );
        assert_eq!(sys.ledger("A").unwrap().wealth, 48.5);
        assert_eq!(sys.ledger("C").unwrap().wealth, 49.5);
        assert_eq!(sys.ledger("B").unwrap().wealth, 0.0);
        assert!(sys.ledger("B").unwrap().collapsed);
    }

    #[test]
    fn lender_fully_liable_for_unrepaid_debt() {
        let mut sys = BankSystem::new(
            vec![
                BankLedger::new("A", 100.0, 50.0),
                BankLedger::new("B", 100.0, 10.0),
            ],
            1.0,
        );
        sys.interbank_loan("A", "B", 20.0, 0.0).unwrap();
        sys.repay_interbank("B", "A", 5.0, 1.0).unwrap();
        // 15 unrepaid; B's shortfall after the loss is larger.
        let out = sys.absorb_loss("B", 40.0, 2.0).unwrap();
        let total: f64 = out.cover.iter().map(|c| c.1).sum();
        assert_eq!(total, 15.0);
        assert_eq!(sys.ledger("A").unwrap().wealth, 50.0 + 5.0 - 15.0);
    }

    #[test]
    fn counting_interbank_funds_as_deposits_is_detected() {
        let mut sys = BankSystem::new(
            vec![
                BankLedger::new("A", 100.0, 50.0),
                BankLedger::new("B", 100.0, 10.0),
            ],
            1.0,
        );
        sys.interbank_loan("A", "B", 20.0, 0.0).unwrap();
        let b = sys.ledger("B").unwrap().clone();
        let mut history = sys.history().to_vec();
        history.push(TransferRecord {
            time: 1.0,
            from: Party::Bank("B".into()),
            to: Party::External("x".into()),
            amount: 110.0,
            kind: TransferKind::LoanFunding {
                source: FundSource::Deposits,
                issuer: "B".into(),
                deposit_base: b.deposits + 20.0,
                disclosed_ratio: Some(110.0 / 120.0),
            },
        });
        let report = check_compliance(&history, sys.initial()).unwrap();
        assert_eq!(report.violations.len(), 1);
        assert_eq!(
            report.violations[0].rule,
            ComplianceRule::InterbankAsDeposit
        );
        assert_eq!(report.violations[0].record_index, 1);
    }

    #[test]
    fn unordered_history_is_rejected() {
        let mut sys = BankSystem::new(
            vec![
                BankLedger::new("A", 100.0, 50.0),
                BankLedger::new("B", 100.0, 10.0),
            ],
            1.0,
        );
        sys.issue_loan("A", 1.0, FundSource::Deposits, 5.0).unwrap();
        sys.issue_loan("A", 1.0, FundSource::Deposits, 3.0).unwrap();
        assert_eq!(sys.check_compliance(), Err(BankError::Unordered(1)));
    }

    #[test]
    fn unconsented_move_is_refused_and_detected() {
        let mut sys = BankSystem::new(
            vec![
                BankLedger::new("A", 100.0, 50.0),
                BankLedger::new("B", 100.0, 10.0),
            ],
            1.0,
        );
        assert_eq!(
            sys.move_deposits("A", "B", 5.0, false, 0.0),
            Err(BankError::ConsentRequired)
        );
        let rec = violating_record(ComplianceRule::UnconsentedDepositMove, "A", "B", 0.0, 5.0);
        let report = check_compliance(&[rec], sys.initial()).unwrap();
        assert_eq!(
            report.violations[0].rule,
            ComplianceRule::UnconsentedDepositMove
        );
        assert_eq!(report.violations[0].record_index, 0);
    }

    #[test]
    fn foreign_deposit_lending_is_detected() {
        let sys = BankSystem::new(
            vec![
                BankLedger::new("A", 100.0, 50.0),
                BankLedger::new("B", 100.0, 10.0),
            ],
            1.0,
        );
        let rec = violating_record(ComplianceRule::ForeignDepositLending, "B", "A", 0.0, 5.0);
        let report = check_compliance(&[rec], sys.initial()).unwrap();
        assert_eq!(report.violations.len(), 1);
        assert_eq!(
            report.violations[0].rule,
            ComplianceRule::ForeignDepositLending
        );
    }
}
