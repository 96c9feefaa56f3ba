//! Government bonds on a share of future tax revenue.
//!
//! A bond paying `share` of the tax intake over `[t, T]` is priced as
//! `share · τ(t) · exp(±∫_t^T f_p(t,s) ds)` from the tax process `τ` and the
//! tax growth surface `f_p`. The exponent sign is set by [`Convention`].
//! The implied forward rate is the maturity log-derivative of the price,
//! and the lenders-demand measure `Γ` is the reciprocal of the lenders'
//! expected demanded share.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hjm::Surface;
use crate::quadrature::{log_derivative, trapezoid_nonuniform};
use crate::stochastics::{path_rng, McConfig, McEstimate, StochasticsError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SovereignError {
    #[error("({t}, {maturity}) is outside the growth surface coverage")]
    OutOfRange { t: f64, maturity: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Estimate(#[from] StochasticsError),
}

pub type Result<T> = std::result::Result<T, SovereignError>;

/// Sign convention for the growth exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// `B = share·τ·exp(+∫f)` and `f = +∂_T log B`.
    #[default]
    AsPrinted,
    /// Classical discount-bond signs: `B = share·τ·exp(−∫f)`, `f = −∂_T log B`.
    Discount,
}

impl Convention {
    fn sign(self) -> f64 {
        match self {
            Convention::AsPrinted => 1.0,
            Convention::Discount => -1.0,
        }
    }
}

/// State tax income τ(t), currency per year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TaxProcess {
    Constant(f64),
    /// Piecewise-linear through `(times[i], values[i])`, `times` increasing.
    Path {
        times: Vec<f64>,
        values: Vec<f64>,
    },
}

impl TaxProcess {
    pub fn validate(&self) -> Result<()> {
        match self {
            TaxProcess::Constant(v) if v.is_finite() && *v >= 0.0 => Ok(()),
            TaxProcess::Constant(v) => Err(SovereignError::Domain(format!(
                "tax income must be >= 0, got {v}"
            ))),
            TaxProcess::Path { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return Err(SovereignError::Invalid(
                        "tax path needs matching non-empty columns".into(),
                    ));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(SovereignError::Invalid(
                        "tax path times must increase strictly".into(),
                    ));
                }
                if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                    return Err(SovereignError::Domain(format!(
                        "tax income must be finite and >= 0, got {v}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn at(&self, t: f64) -> Result<f64> {
        match self {
            TaxProcess::Constant(v) => Ok(*v),
            TaxProcess::Path { times, values } => {
                let first = times[0];
                let last = *times.last().expect("validated non-empty");
                if t < first - 1e-12 || t > last + 1e-12 {
                    return Err(SovereignError::OutOfRange { t, maturity: t });
                }
                let k = times
                    .partition_point(|&x| x <= t)
                    .clamp(1, times.len().max(2) - 1);
                if times.len() == 1 {
                    return Ok(values[0]);
                }
                let (t0, t1) = (times[k - 1], times[k]);
                let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
                Ok(values[k - 1] * (1.0 - w) + values[k] * w)
            }
        }
    }
}

/// One calendar-time row `f_p(t, ·)` of the growth surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub t: f64,
    pub s: Vec<f64>,
    pub f: Vec<f64>,
}

/// The tax growth rate `f_p(t, s)` sampled on rows of fixed `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthSurface {
    rows: Vec<GrowthRow>,
}

const ROW_TOL: f64 = 1e-9;

impl GrowthSurface {
    pub fn new(mut rows: Vec<GrowthRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(SovereignError::Invalid("growth surface has no rows".into()));
        }
        rows.sort_by(|a, b| a.t.total_cmp(&b.t));
        for row in &rows {
            if row.s.len() < 2 || row.s.len() != row.f.len() {
                return Err(SovereignError::Invalid(format!(
                    "row t={} needs >= 2 matching (s, f_p) nodes",
                    row.t
                )));
            }
            if row.s.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(SovereignError::Invalid(format!(
                    "row t={} maturities must increase strictly",
                    row.t
                )));
            }
            if let Some(k) = row.f.iter().position(|v| !v.is_finite()) {
                return Err(SovereignError::Invalid(format!(
                    "f_p({}, {}) is not finite",
                    row.t, row.s[k]
                )));
            }
        }
        Ok(Self { rows })
    }

    /// Rows of an HJM forward surface, so a simulated `f_p(t, ·)` can stand
    /// in for a static growth input. The last calendar time has a single
    /// maturity and is dropped.
    pub fn from_forward_surface(surface: &Surface) -> Result<Self> {
        let grid = surface.grid();
        let n = grid.n_points();
        let rows = (0..n.saturating_sub(1))
            .map(|i| GrowthRow {
                t: grid.point(i),
                s: (i..n).map(|j| grid.point(j)).collect(),
                f: surface.row(i).to_vec(),
            })
            .collect();
        Self::new(rows)
    }

    /// Sample `f(t, s)` for every `t` in `ts` on `s = t, t+step, …, s_max`.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(
        ts: &[f64],
        s_max: f64,
        step: f64,
        f: F,
    ) -> Result<Self> {
        if !(step > 0.0) {
            return Err(SovereignError::Invalid(format!(
                "step must be > 0, got {step}"
            )));
        }
        let rows = ts
            .iter()
            .map(|&t| {
                let n = ((s_max - t) / step).round().max(1.0) as usize;
                let s: Vec<f64> = (0..=n)
                    .map(|k| t + (s_max - t) * (k as f64 / n as f64))
                    .collect();
                let vals = s.iter().map(|&u| f(t, u)).collect();
                GrowthRow { t, s, f: vals }
            })
            .collect();
        Self::new(rows)
    }

    /// Build from `(t, s, f_p)` triples, e.g. CSV rows.
    pub fn from_triples(triples: &[(f64, f64, f64)]) -> Result<Self> {
        let mut sorted = triples.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut rows: Vec<GrowthRow> = Vec::new();
        for (t, s, f) in sorted {
            match rows.last_mut() {
                Some(row) if (row.t - t).abs() <= ROW_TOL => {
                    row.s.push(s);
                    row.f.push(f);
                }
                _ => rows.push(GrowthRow {
                    t,
                    s: vec![s],
                    f: vec![f],
                }),
            }
        }
        Self::new(rows)
    }

    pub fn rows(&self) -> &[GrowthRow] {
        &self.rows
    }

    fn row(&self, t: f64) -> Option<&GrowthRow> {
        self.rows
            .iter()
            .find(|r| (r.t - t).abs() <= ROW_TOL * t.abs().max(1.0))
    }

    /// Trapezoid integral of `f_p(t, ·)` over `[t, maturity]`; partial cells
    /// use the linear interpolant.
    pub fn integral(&self, t: f64, maturity: f64) -> Result<f64> {
        let out = SovereignError::OutOfRange { t, maturity };
        if maturity < t {
            return Err(out);
        }
        let row = self.row(t).ok_or(out.clone())?;
        let tol = ROW_TOL * maturity.abs().max(1.0);
        if row.s[0] > t + tol || *row.s.last().expect("row has nodes") < maturity - tol {
            return Err(out);
        }
        let at = |x: f64| {
            let k = row.s.partition_point(|&u| u <= x).clamp(1, row.s.len() - 1);
            let (a, b) = (row.s[k - 1], row.s[k]);
            let w = ((x - a) / (b - a)).clamp(0.0, 1.0);
            row.f[k - 1] * (1.0 - w) + row.f[k] * w
        };
        let mut xs = vec![t];
        let mut ys = vec![at(t)];
        for (&s, &f) in row.s.iter().zip(&row.f) {
            if s > t + tol && s < maturity - tol {
                xs.push(s);
                ys.push(f);
            }
        }
        if maturity > t {
            xs.push(maturity);
            ys.push(at(maturity));
        }
        Ok(trapezoid_nonuniform(&xs, &ys))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BondQuote {
    pub t: f64,
    pub maturity: f64,
    pub share: f64,
    pub price: f64,
}

pub fn price_bond(
    tax: &TaxProcess,
    growth: &GrowthSurface,
    t: f64,
    maturity: f64,
    share: f64,
    convention: Convention,
) -> Result<BondQuote> {
    if !(share > 0.0 && share.is_finite()) {
        return Err(SovereignError::Domain(format!(
            "share must be > 0, got {share}"
        )));
    }
    let tau = tax.at(t)?;
    if !(tau >= 0.0) {
        return Err(SovereignError::Domain(format!(
            "tax income at t={t} is negative: {tau}"
        )));
    }
    let exponent = convention.sign() * growth.integral(t, maturity)?;
    Ok(BondQuote {
        t,
        maturity,
        share,
        price: share * tau * exponent.exp(),
    })
}

/// One point of an implied forward curve at fixed `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForwardPoint {
    pub t: f64,
    pub maturity: f64,
    pub rate: f64,
}

/// Recover `f_p(t, T)` from quotes over maturities by differentiating
/// `log B_p` in `T`.
pub fn implied_forward(quotes: &[BondQuote], convention: Convention) -> Result<Vec<ForwardPoint>> {
    if quotes.len() < 3 {
        return Err(SovereignError::Invalid(format!(
            "need >= 3 maturities, got {}",
            quotes.len()
        )));
    }
    let t = quotes[0].t;
    if quotes.iter().any(|q| (q.t - t).abs() > ROW_TOL) {
        return Err(SovereignError::Invalid(
            "quotes must share the same valuation time".into(),
        ));
    }
    if quotes.windows(2).any(|w| !(w[1].maturity > w[0].maturity)) {
        return Err(SovereignError::Invalid(
            "maturities must increase strictly".into(),
        ));
    }
    if let Some(q) = quotes.iter().find(|q| !(q.price > 0.0)) {
        return Err(SovereignError::Domain(format!(
            "non-positive price {} at maturity {}",
            q.price, q.maturity
        )));
    }
    let xs: Vec<f64> = quotes.iter().map(|q| q.maturity).collect();
    let ys: Vec<f64> = quotes.iter().map(|q| q.price).collect();
    Ok(log_derivative(&xs, &ys)
        .into_iter()
        .zip(&xs)
        .map(|(d, &maturity)| ForwardPoint {
            t,
            maturity,
            rate: convention.sign() * d,
        })
        .collect())
}

/// Lenders' beliefs about the demanded share θ(t, T).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LenderBeliefs {
    PointMass { theta: f64 },
    Uniform { low: f64, high: f64 },
    LogNormal { median: f64, sigma: f64 },
}

impl LenderBeliefs {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            LenderBeliefs::PointMass { theta } => theta > 0.0 && theta.is_finite(),
            LenderBeliefs::Uniform { low, high } => low > 0.0 && high >= low && high.is_finite(),
            LenderBeliefs::LogNormal { median, sigma } => {
                median > 0.0 && median.is_finite() && sigma >= 0.0 && sigma.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(SovereignError::Domain(format!(
                "beliefs must have positive support: {self:?}"
            )))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            LenderBeliefs::PointMass { theta } => theta,
            LenderBeliefs::Uniform { low, high } => 0.5 * (low + high),
            LenderBeliefs::LogNormal { median, sigma } => median * (0.5 * sigma * sigma).exp(),
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        match *self {
            LenderBeliefs::PointMass { theta } => LenderBeliefs::PointMass { theta: k * theta },
            LenderBeliefs::Uniform { low, high } => LenderBeliefs::Uniform {
                low: k * low,
                high: k * high,
            },
            LenderBeliefs::LogNormal { median, sigma } => LenderBeliefs::LogNormal {
                median: k * median,
                sigma,
            },
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            LenderBeliefs::PointMass { theta } => theta,
            LenderBeliefs::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            LenderBeliefs::LogNormal { median, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                median * (sigma * z).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub t: f64,
    pub maturity: f64,
    pub gamma: f64,
    /// Delta-method error `se(θ̄) / θ̄²`.
    pub std_error: f64,
    pub theta: McEstimate,
}

/// `Γ(t, T) = 1 / E_Lenders[θ(t, T)]` by Monte Carlo over lender beliefs.
pub fn gamma(
    beliefs: &LenderBeliefs,
    t: f64,
    maturity: f64,
    mc: &McConfig,
) -> Result<GammaEstimate> {
    beliefs.validate()?;
    if maturity < t {
        return Err(SovereignError::OutOfRange { t, maturity });
    }
    let samples: Vec<f64> = (0..mc.n_paths as u64)
        .into_par_iter()
        .map(|i| beliefs.sample(&mut path_rng(mc.seed, i)))
        .collect();
    if let Some(v) = samples.iter().find(|v| !(**v > 0.0)) {
        return Err(SovereignError::Domain(format!(
            "belief sample {v} is not positive"
        )));
    }
    let theta = McEstimate::from_samples(&samples)?;
    if !(theta.mean > 0.0) {
        return Err(SovereignError::Domain(format!(
            "mean demanded share {} is not positive",
            theta.mean
        )));
    }
    Ok(GammaEstimate {
        t,
        maturity,
        gamma: 1.0 / theta.mean,
        std_error: theta.std_error / (theta.mean * theta.mean),
        theta,
    })
}

/// `f_Γ = d/dt log Γ(t, T)` at fixed `T` on the given time points.
pub fn gamma_rate(times: &[f64], gammas: &[f64]) -> Result<Vec<f64>> {
    if times.len() < 3 || times.len() != gammas.len() {
        return Err(SovereignError::Invalid(
            "need >= 3 matching (t, Γ) points".into(),
        ));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SovereignError::Invalid(
            "times must increase strictly".into(),
        ));
    }
    if let Some(g) = gammas.iter().find(|g| !(**g > 0.0)) {
        return Err(SovereignError::Domain(format!(
            "Γ must be positive, got {g}"
        )));
    }
    Ok(log_derivative(times, gammas))
}
