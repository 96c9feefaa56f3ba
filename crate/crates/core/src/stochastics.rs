//! Discretized diffusion and jump-diffusion paths, and Monte Carlo estimates
//! over them.
//!
//! Every path owns its own ChaCha8 stream: the stream is selected by the path
//! index on a generator seeded from the master seed. Path `i` therefore
//! depends only on `(seed, i)`, bundles are prefix-stable when `n_paths`
//! grows, and parallel generation reproduces sequential generation bit for
//! bit.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::gauss_legendre;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StochasticsError {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("invalid process definition: {0}")]
    InvalidSpec(String),
    #[error("non-finite coefficient or state on path {path} at t={t}, x={x}")]
    NonFinite { path: usize, t: f64, x: f64 },
    #[error("cannot estimate over an empty sample")]
    EmptySample,
    #[error("functional value is not finite on path {0}")]
    NonFiniteFunctional(usize),
    #[error("bundle shape mismatch: {0}")]
    Shape(String),
}

pub type Result<T> = std::result::Result<T, StochasticsError>;

/// Equally spaced grid on `[t_start, t_end]` with `n_steps` intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite()) || t_end <= t_start {
            return Err(StochasticsError::InvalidGrid(format!(
                "need finite t_end > t_start, got [{t_start}, {t_end}]"
            )));
        }
        if n_steps == 0 {
            return Err(StochasticsError::InvalidGrid("n_steps must be >= 1".into()));
        }
        Ok(Self {
            t_start,
            t_end,
            n_steps,
        })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_points(&self) -> usize {
        self.n_steps + 1
    }

    pub fn step(&self) -> f64 {
        (self.t_end - self.t_start) / self.n_steps as f64
    }

    /// Grid point `i`; the last point is exactly `t_end`.
    pub fn point(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.t_end
        } else {
            self.t_start + (self.t_end - self.t_start) * (i as f64 / self.n_steps as f64)
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points()).map(|i| self.point(i)).collect()
    }

    /// Interval index and linear weight for `t`, clamped to the grid.
    pub fn locate(&self, t: f64) -> (usize, f64) {
        let u = (t - self.t_start) / self.step();
        if u <= 0.0 {
            return (0, 0.0);
        }
        let k = u.floor() as usize;
        if k >= self.n_steps {
            return (self.n_steps - 1, 1.0);
        }
        let w = u - k as f64;
        // Snap round-off so grid instants read their exact values.
        if w < 1e-9 {
            (k, 0.0)
        } else if w > 1.0 - 1e-9 {
            (k, 1.0)
        } else {
            (k, w)
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        let tol = 1e-9 * (self.t_end - self.t_start);
        t >= self.t_start - tol && t <= self.t_end + tol
    }
}

/// Coefficient function of `(t, x)`.
pub type Coefficient = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// `dX = drift(t, X) dt + Σ_k vol_k(t, X) dW_k`.
#[derive(Clone)]
pub struct DiffusionSpec {
    pub x0: f64,
    drift: Coefficient,
    volatility: Vec<Coefficient>,
}

impl fmt::Debug for DiffusionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffusionSpec")
            .field("x0", &self.x0)
            .field("n_factors", &self.volatility.len())
            .finish()
    }
}

impl DiffusionSpec {
    pub fn new(x0: f64, drift: Coefficient, volatility: Vec<Coefficient>) -> Result<Self> {
        if !x0.is_finite() {
            return Err(StochasticsError::InvalidSpec(format!(
                "x0 must be finite, got {x0}"
            )));
        }
        if volatility.is_empty() {
            return Err(StochasticsError::InvalidSpec(
                "need at least one Brownian factor".into(),
            ));
        }
        Ok(Self {
            x0,
            drift,
            volatility,
        })
    }

    /// Deterministic constant process.
    pub fn constant(x0: f64) -> Self {
        Self {
            x0,
            drift: Arc::new(|_, _| 0.0),
            volatility: vec![Arc::new(|_, _| 0.0)],
        }
    }

    /// Deterministic linear growth `dX = rate dt`.
    pub fn linear(x0: f64, rate: f64) -> Self {
        Self {
            x0,
            drift: Arc::new(move |_, _| rate),
            volatility: vec![Arc::new(|_, _| 0.0)],
        }
    }

    /// Geometric Brownian motion `dX = mu X dt + sigma X dW`.
    pub fn gbm(x0: f64, mu: f64, sigma: f64) -> Self {
        Self {
            x0,
            drift: Arc::new(move |_, x| mu * x),
            volatility: vec![Arc::new(move |_, x| sigma * x)],
        }
    }

    pub fn n_factors(&self) -> usize {
        self.volatility.len()
    }

    pub fn drift(&self, t: f64, x: f64) -> f64 {
        (self.drift)(t, x)
    }

    pub fn volatility(&self, factor: usize, t: f64, x: f64) -> f64 {
        (self.volatility[factor])(t, x)
    }
}

/// Scalar jump-size distribution with closed-form moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpLaw {
    Constant { value: f64 },
    Normal { mean: f64, std: f64 },
    Uniform { low: f64, high: f64 },
}

/// Truncation of the normal law for quadrature, in standard deviations.
const NORMAL_TRUNCATION: f64 = 10.0;

impl JumpLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            JumpLaw::Constant { value } => value.is_finite(),
            JumpLaw::Normal { mean, std } => mean.is_finite() && std.is_finite() && std >= 0.0,
            JumpLaw::Uniform { low, high } => low.is_finite() && high.is_finite() && low <= high,
        };
        if ok {
            Ok(())
        } else {
            Err(StochasticsError::InvalidSpec(format!(
                "invalid jump law {self:?}"
            )))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            JumpLaw::Constant { value } => value,
            JumpLaw::Normal { mean, .. } => mean,
            JumpLaw::Uniform { low, high } => 0.5 * (low + high),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            JumpLaw::Constant { value } => value,
            JumpLaw::Normal { mean, std } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + std * z
            }
            JumpLaw::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
        }
    }

    /// Quadrature nodes and probability weights for `E[f(X)]`.
    ///
    /// Point masses are exact; the uniform law uses Gauss–Legendre on its
    /// support; the normal law uses Gauss–Legendre against the density on
    /// `mean ± 10 std`.
    pub fn quadrature(&self, n: usize) -> Vec<(f64, f64)> {
        match *self {
            JumpLaw::Constant { value } => vec![(value, 1.0)],
            JumpLaw::Normal { std: 0.0, mean } => vec![(mean, 1.0)],
            JumpLaw::Uniform { low, high } if low == high => vec![(low, 1.0)],
            JumpLaw::Uniform { low, high } => {
                let (xs, ws) = gauss_legendre(n);
                let half = 0.5 * (high - low);
                let mid = 0.5 * (high + low);
                xs.iter()
                    .zip(&ws)
                    .map(|(x, w)| (mid + half * x, 0.5 * w))
                    .collect()
            }
            JumpLaw::Normal { mean, std } => {
                let (xs, ws) = gauss_legendre(n);
                let half = NORMAL_TRUNCATION * std;
                let norm = 1.0 / (std * (2.0 * std::f64::consts::PI).sqrt());
                xs.iter()
                    .zip(&ws)
                    .map(|(x, w)| {
                        let y = mean + half * x;
                        let z = (y - mean) / std;
                        (y, w * half * norm * (-0.5 * z * z).exp())
                    })
                    .collect()
            }
        }
    }

    /// `E[f(X)]` by the law's quadrature rule.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F, n: usize) -> f64 {
        self.quadrature(n).into_iter().map(|(x, w)| w * f(x)).sum()
    }

    pub fn scaled(&self, k: f64) -> Self {
        match *self {
            JumpLaw::Constant { value } => JumpLaw::Constant { value: k * value },
            JumpLaw::Normal { mean, std } => JumpLaw::Normal {
                mean: k * mean,
                std: k.abs() * std,
            },
            JumpLaw::Uniform { low, high } => {
                let (a, b) = (k * low, k * high);
                JumpLaw::Uniform {
                    low: a.min(b),
                    high: a.max(b),
                }
            }
        }
    }
}

/// Jump intensity λ(t), jumps per year.
#[derive(Clone)]
pub enum Intensity {
    Constant(f64),
    TimeVarying(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Intensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Intensity::Constant(l) => write!(f, "Constant({l})"),
            Intensity::TimeVarying(_) => write!(f, "TimeVarying(..)"),
        }
    }
}

impl Intensity {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Intensity::Constant(l) => *l,
            Intensity::TimeVarying(f) => f(t),
        }
    }
}

/// Compound-Poisson jump component.
///
/// With `proportional` set, a jump of size `J` moves the state by `x·J`
/// instead of `J`, which keeps price-like processes on their own scale.
#[derive(Debug, Clone)]
pub struct JumpSpec {
    pub intensity: Intensity,
    pub law: JumpLaw,
    pub compensated: bool,
    pub proportional: bool,
}

impl JumpSpec {
    pub fn new(intensity: f64, law: JumpLaw, compensated: bool) -> Result<Self> {
        let spec = Self {
            intensity: Intensity::Constant(intensity),
            law,
            compensated,
            proportional: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn proportional(mut self) -> Self {
        self.proportional = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.law.validate()?;
        if let Intensity::Constant(l) = self.intensity {
            if !(l.is_finite() && l >= 0.0) {
                return Err(StochasticsError::InvalidSpec(format!(
                    "jump intensity must be finite and >= 0, got {l}"
                )));
            }
        }
        Ok(())
    }
}

/// A diffusion with an optional jump component; the unit the scenario and
/// credit layers pass around.
#[derive(Debug, Clone)]
pub struct ProcessModel {
    pub diffusion: DiffusionSpec,
    pub jumps: Option<JumpSpec>,
}

impl ProcessModel {
    pub fn diffusion(diffusion: DiffusionSpec) -> Self {
        Self {
            diffusion,
            jumps: None,
        }
    }

    pub fn with_jumps(diffusion: DiffusionSpec, jumps: JumpSpec) -> Self {
        Self {
            diffusion,
            jumps: Some(jumps),
        }
    }

    pub fn simulate(&self, grid: &TimeGrid, n_paths: usize, seed: u64) -> Result<PathBundle> {
        match &self.jumps {
            Some(j) => simulate_jump_diffusion(&self.diffusion, j, grid, n_paths, seed),
            None => simulate_diffusion(&self.diffusion, grid, n_paths, seed),
        }
    }
}

/// Monte Carlo sizing shared by the modules that estimate expectations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_paths: usize,
    pub seed: u64,
    /// Target time steps per year; grids are refined to at least this density.
    pub steps_per_year: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_paths: 10_000,
            seed: 0,
            steps_per_year: 100,
        }
    }
}

/// The generator for path `index` under `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derive an independent master seed for a named sub-simulation.
///
/// SplitMix64 finalizer over `seed ^ salt`; used so that e.g. the
/// productivity and price bundles of one loan never share streams.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `n_paths × n_points` row-major path values.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    grid: TimeGrid,
    n_paths: usize,
    seed: u64,
    values: Vec<f64>,
}

impl PathBundle {
    pub fn from_values(
        grid: TimeGrid,
        n_paths: usize,
        seed: u64,
        values: Vec<f64>,
    ) -> Result<Self> {
        if n_paths == 0 {
            return Err(StochasticsError::Shape(
                "bundle needs at least one path".into(),
            ));
        }
        if values.len() != n_paths * grid.n_points() {
            return Err(StochasticsError::Shape(format!(
                "expected {} values, got {}",
                n_paths * grid.n_points(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            let n = grid.n_points();
            return Err(StochasticsError::NonFinite {
                path: k / n,
                t: grid.point(k % n),
                x: values[k],
            });
        }
        Ok(Self {
            grid,
            n_paths,
            seed,
            values,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn path(&self, i: usize) -> &[f64] {
        let n = self.grid.n_points();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn paths(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.grid.n_points())
    }

    pub fn terminal(&self, i: usize) -> f64 {
        *self.path(i).last().expect("paths are non-empty")
    }

    /// Linear interpolation of path `i` at time `t` (exact on grid points).
    pub fn value_at(&self, i: usize, t: f64) -> f64 {
        interpolate(&self.grid, self.path(i), t)
    }
}

/// Linear interpolation of grid-sampled `values` at `t`.
pub fn interpolate(grid: &TimeGrid, values: &[f64], t: f64) -> f64 {
    let (k, w) = grid.locate(t);
    if w == 0.0 {
        values[k]
    } else if w == 1.0 {
        values[k + 1]
    } else {
        values[k] * (1.0 - w) + values[k + 1] * w
    }
}

/// Exact integral over `[a, b]` of the piecewise-linear interpolant of
/// grid-sampled `values`.
pub fn integrate(grid: &TimeGrid, values: &[f64], a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut xs = vec![a];
    let mut ys = vec![interpolate(grid, values, a)];
    for (i, &v) in values.iter().enumerate() {
        let t = grid.point(i);
        if t > a && t < b {
            xs.push(t);
            ys.push(v);
        }
    }
    xs.push(b);
    ys.push(interpolate(grid, values, b));
    crate::quadrature::trapezoid_nonuniform(&xs, &ys)
}

/// Euler–Maruyama paths of `spec`.
pub fn simulate_diffusion(
    spec: &DiffusionSpec,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<PathBundle> {
    simulate(spec, None, grid, n_paths, seed)
}

/// Euler–Maruyama paths with compound-Poisson jumps applied once per step.
///
/// The number of jumps in `[t, t+h)` is Poisson with mean `λ(t)·h`. No
/// randomness is consumed for steps with zero intensity, so `λ ≡ 0`
/// reproduces [`simulate_diffusion`] exactly.
pub fn simulate_jump_diffusion(
    spec: &DiffusionSpec,
    jumps: &JumpSpec,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<PathBundle> {
    jumps.validate()?;
    simulate(spec, Some(jumps), grid, n_paths, seed)
}

fn simulate(
    spec: &DiffusionSpec,
    jumps: Option<&JumpSpec>,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<PathBundle> {
    if n_paths == 0 {
        return Err(StochasticsError::Shape("n_paths must be >= 1".into()));
    }
    let n = grid.n_points();
    let mut values = vec![0.0; n_paths * n];
    let failures: Vec<StochasticsError> = values
        .par_chunks_mut(n)
        .enumerate()
        .filter_map(|(i, out)| fill_path(spec, jumps, grid, seed, i, out).err())
        .collect();
    // The collected order follows path index regardless of scheduling.
    if let Some(e) = failures.into_iter().next() {
        return Err(e);
    }
    Ok(PathBundle {
        grid: *grid,
        n_paths,
        seed,
        values,
    })
}

fn fill_path(
    spec: &DiffusionSpec,
    jumps: Option<&JumpSpec>,
    grid: &TimeGrid,
    seed: u64,
    path: usize,
    out: &mut [f64],
) -> Result<()> {
    let mut rng = path_rng(seed, path as u64);
    let h = grid.step();
    let sqrt_h = h.sqrt();
    let mut x = spec.x0;
    out[0] = x;
    for step in 0..grid.n_steps() {
        let t = grid.point(step);
        let mut dx = spec.drift(t, x) * h;
        for k in 0..spec.n_factors() {
            let z: f64 = StandardNormal.sample(&mut rng);
            dx += spec.volatility(k, t, x) * sqrt_h * z;
        }
        if let Some(j) = jumps {
            let rate = j.intensity.at(t);
            if !(rate.is_finite() && rate >= 0.0) {
                return Err(StochasticsError::NonFinite { path, t, x: rate });
            }
            let mut jump_sum = 0.0;
            if rate > 0.0 {
                let count = Poisson::new(rate * h)
                    .map_err(|e| StochasticsError::InvalidSpec(e.to_string()))?
                    .sample(&mut rng) as u64;
                for _ in 0..count {
                    jump_sum += j.law.sample(&mut rng);
                }
            }
            if j.compensated {
                jump_sum -= rate * j.law.mean() * h;
            }
            dx += if j.proportional {
                x * jump_sum
            } else {
                jump_sum
            };
        }
        x += dx;
        if !x.is_finite() {
            return Err(StochasticsError::NonFinite { path, t, x });
        }
        out[step + 1] = x;
    }
    Ok(())
}

/// Sample mean with standard error `s / sqrt(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

impl McEstimate {
    /// Two-pass mean and unbiased variance, summed in index order.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(StochasticsError::EmptySample);
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(StochasticsError::NonFiniteFunctional(i));
        }
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let ss: f64 = samples.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            mean,
            std_error,
            n_samples: n,
        })
    }

    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn within(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error
    }
}

/// Evaluate `functional` on every path (in parallel) and summarize.
pub fn estimate<F>(bundle: &PathBundle, functional: F) -> Result<McEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let samples: Vec<f64> = (0..bundle.n_paths())
        .into_par_iter()
        .map(|i| functional(bundle.path(i)))
        .collect();
    McEstimate::from_samples(&samples)
}
