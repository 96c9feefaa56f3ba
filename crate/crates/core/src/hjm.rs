//! Jump-diffusion Heath–Jarrow–Morton forward surfaces on a finite grid.
//!
//! The forward rate `f(t, T)` lives on the triangle `0 ≤ t ≤ T ≤ T*`,
//! discretized with the same step `h` in both axes. Its dynamics are
//!
//! ```text
//! df(t,T) = α(t,T) dt + σ(t,T)ᵀ dW_t + ∫ δ(t,x,T) (μ − ν)(dt,dx),   ν(dt,dx) = λ(t)·law(dx) dt
//! ```
//!
//! With `A = −∫_t^T α`, `S = −∫_t^T σ` and `D = −∫_t^T δ`, the measure is a
//! martingale measure when
//!
//! ```text
//! A(t,T) + ½|S(t,T)|² + ∫ (e^D − 1 − D) λ(t) law(dx) = 0
//! ```
//!
//! and the accumulated jump term `∫_0^t ∫ (e^D − 1 − D) F(s,dx) ds` is
//! finite. [`drift_residual`] evaluates both on the grid. Coefficient fields
//! are deterministic functions of `(t, T)` and vanish off the triangle.

use std::fmt;
use std::sync::Arc;

use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stochastics::{path_rng, Intensity, JumpLaw, McEstimate, StochasticsError, TimeGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HjmError {
    #[error("{field} is not finite at t={t}, T={maturity}")]
    NonFinite {
        field: &'static str,
        t: f64,
        maturity: f64,
    },
    #[error("jump integral diverges at t={t}, T={maturity}: integrability condition fails")]
    Integrability { t: f64, maturity: f64 },
    #[error("e^D - 1 - D evaluated negative ({value}) at D={d}")]
    NegativeKernel { d: f64, value: f64 },
    #[error(
        "growth drift is incompatible with the drift condition: ½|S|² < 0 on {count} grid points, \
         first at t={t}, T={maturity} (value {value}), region t∈[{t_min}, {t_max}], T∈[{maturity_min}, {maturity_max}]"
    )]
    Infeasible {
        count: usize,
        t: f64,
        maturity: f64,
        value: f64,
        t_min: f64,
        t_max: f64,
        maturity_min: f64,
        maturity_max: f64,
    },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Simulation(#[from] StochasticsError),
}

pub type Result<T> = std::result::Result<T, HjmError>;

/// Values on the discretized triangle `{(t_i, T_j) : i ≤ j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    grid: TimeGrid,
    data: Vec<f64>,
}

/// The forward surface `f(t, T)`; its diagonal is the short rate.
pub type ForwardSurface = Surface;

impl Surface {
    pub fn zeros(grid: TimeGrid) -> Self {
        let n = grid.n_points();
        Self {
            grid,
            data: vec![0.0; n * (n + 1) / 2],
        }
    }

    /// Sample `f(t, T)` on every triangle node.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: TimeGrid, f: F) -> Self {
        let mut s = Self::zeros(grid);
        for i in 0..grid.n_points() {
            for j in i..grid.n_points() {
                s.set(i, j, f(grid.point(i), grid.point(j)));
            }
        }
        s
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_points(&self) -> usize {
        self.grid.n_points()
    }

    fn offset(&self, i: usize) -> usize {
        let n = self.n_points();
        i * n - i * i.saturating_sub(1) / 2
    }

    /// Value at `(t_i, T_j)`; zero off the triangle.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j < i {
            0.0
        } else {
            self.data[self.offset(i) + (j - i)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(j >= i);
        let k = self.offset(i) + (j - i);
        self.data[k] = v;
    }

    /// Row `i`: values at `T_j` for `j = i..=N`.
    pub fn row(&self, i: usize) -> &[f64] {
        let start = self.offset(i);
        &self.data[start..start + self.n_points() - i]
    }

    fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let start = self.offset(i);
        let len = self.n_points() - i;
        &mut self.data[start..start + len]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Iterate `(i, j, value)` over the triangle.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_points()).flat_map(move |i| {
            self.row(i)
                .iter()
                .enumerate()
                .map(move |(k, &v)| (i, i + k, v))
        })
    }

    pub fn short_rate(&self, i: usize) -> f64 {
        self.get(i, i)
    }

    /// `exp(−∫_{t_i}^{T_j} f(t_i, u) du)`, trapezoid in maturity.
    pub fn bond_price(&self, i: usize, j: usize) -> f64 {
        let h = self.grid.step();
        (-crate::quadrature::trapezoid(&self.row(i)[..=(j - i)], h)).exp()
    }

    /// Money-market discount `exp(−Σ_{k<i} f(t_k, t_k)·h)`.
    pub fn discount(&self, i: usize) -> f64 {
        let h = self.grid.step();
        (-(0..i).map(|k| self.short_rate(k)).sum::<f64>() * h).exp()
    }

    fn from_rows(grid: TimeGrid, rows: Vec<Vec<f64>>) -> Self {
        Self {
            grid,
            data: rows.into_iter().flatten().collect(),
        }
    }
}

pub type Field = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type JumpField = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Compound-Poisson jump part: `F(t, dx) = λ(t)·law(dx)`, marks `x ∈ ℝ`.
#[derive(Clone)]
pub struct HjmJumps {
    pub intensity: Intensity,
    pub law: JumpLaw,
    /// `δ(t, x, T)`.
    pub delta: JumpField,
}

impl fmt::Debug for HjmJumps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HjmJumps")
            .field("intensity", &self.intensity)
            .field("law", &self.law)
            .finish()
    }
}

/// Drift, volatility and jump coefficients.
#[derive(Clone)]
pub struct HjmCoefficients {
    alpha: Field,
    sigma: Vec<Field>,
    jumps: Option<HjmJumps>,
}

impl fmt::Debug for HjmCoefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HjmCoefficients")
            .field("n_factors", &self.sigma.len())
            .field("jumps", &self.jumps)
            .finish()
    }
}

/// Quadrature nodes used for the compensator `E[δ]` during evolution.
const COMPENSATOR_NODES: usize = 48;

/// `E[x·(1 − e^{−a·x})]` under `law`, by quadrature.
fn ho_lee_jump_drift(law: &JumpLaw, a: f64) -> f64 {
    law.expect(|x| x * -(-a * x).exp_m1(), COMPENSATOR_NODES)
}

impl HjmCoefficients {
    pub fn new(alpha: Field, sigma: Vec<Field>, jumps: Option<HjmJumps>) -> Self {
        Self {
            alpha,
            sigma,
            jumps,
        }
    }

    pub fn zero() -> Self {
        Self::new(Arc::new(|_, _| 0.0), Vec::new(), None)
    }

    /// Ho–Lee: constant volatility `σ₀` and drift `σ₀²(T − t)`.
    pub fn ho_lee(sigma0: f64) -> Self {
        Self::new(
            Arc::new(move |t, big_t| sigma0 * sigma0 * (big_t - t)),
            vec![Arc::new(move |_, _| sigma0)],
            None,
        )
    }

    /// Ho–Lee with jumps `δ(t, x, T) = δ₀·x` at constant intensity `λ`; the
    /// drift gains `λ·δ₀·E[x(1 − e^{−δ₀ x (T−t)})]` so the drift condition
    /// holds in continuous time.
    pub fn ho_lee_with_jumps(sigma0: f64, intensity: f64, law: JumpLaw, delta0: f64) -> Self {
        Self::new(
            Arc::new(move |t, big_t| {
                let tau = big_t - t;
                sigma0 * sigma0 * tau + intensity * delta0 * ho_lee_jump_drift(&law, delta0 * tau)
            }),
            vec![Arc::new(move |_, _| sigma0)],
            Some(HjmJumps {
                intensity: Intensity::Constant(intensity),
                law,
                delta: Arc::new(move |_, x, _| delta0 * x),
            }),
        )
    }

    /// The same coefficients with `eps` added to the drift on the triangle.
    pub fn with_drift_shift(&self, eps: f64) -> Self {
        let alpha = self.alpha.clone();
        Self {
            alpha: Arc::new(move |t, big_t| alpha(t, big_t) + eps),
            ..self.clone()
        }
    }

    pub fn n_factors(&self) -> usize {
        self.sigma.len()
    }

    pub fn jumps(&self) -> Option<&HjmJumps> {
        self.jumps.as_ref()
    }

    pub fn alpha(&self, t: f64, maturity: f64) -> f64 {
        if maturity < t {
            0.0
        } else {
            (self.alpha)(t, maturity)
        }
    }

    pub fn sigma(&self, factor: usize, t: f64, maturity: f64) -> f64 {
        if maturity < t {
            0.0
        } else {
            (self.sigma[factor])(t, maturity)
        }
    }

    pub fn delta(&self, t: f64, x: f64, maturity: f64) -> f64 {
        match &self.jumps {
            Some(j) if maturity >= t => (j.delta)(t, x, maturity),
            _ => 0.0,
        }
    }
}

/// `A(t,T)` and the per-factor `S_k(t,T)` on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralTransforms {
    pub a: Surface,
    pub s: Vec<Surface>,
}

impl IntegralTransforms {
    /// `½|S(t,T)|²` summed over factors.
    pub fn half_s_squared(&self, i: usize, j: usize) -> f64 {
        0.5 * self.s.iter().map(|s| s.get(i, j).powi(2)).sum::<f64>()
    }
}

/// `−∫_{t_i}^{T_j} g(t_i, u) du` for `j = i..=N`, cumulative trapezoid.
fn negative_cumulative_row<G: Fn(f64) -> f64>(
    grid: &TimeGrid,
    i: usize,
    field: &'static str,
    g: G,
) -> Result<Vec<f64>> {
    let h = grid.step();
    let t = grid.point(i);
    let mut out = Vec::with_capacity(grid.n_points() - i);
    let mut prev = g(grid.point(i));
    if !prev.is_finite() {
        return Err(HjmError::NonFinite {
            field,
            t,
            maturity: t,
        });
    }
    let mut acc = 0.0;
    out.push(0.0);
    for j in (i + 1)..grid.n_points() {
        let maturity = grid.point(j);
        let v = g(maturity);
        if !v.is_finite() {
            return Err(HjmError::NonFinite { field, t, maturity });
        }
        acc -= 0.5 * h * (prev + v);
        out.push(acc);
        prev = v;
    }
    Ok(out)
}

/// Compute `A` and `S` by the trapezoid rule in the maturity variable.
pub fn transforms(coeffs: &HjmCoefficients, grid: &TimeGrid) -> Result<IntegralTransforms> {
    let rows = |f: &(dyn Fn(f64, f64) -> f64 + Sync), name: &'static str| -> Result<Surface> {
        let rows: Vec<Vec<f64>> = (0..grid.n_points())
            .into_par_iter()
            .map(|i| negative_cumulative_row(grid, i, name, |u| f(grid.point(i), u)))
            .collect::<Result<_>>()?;
        Ok(Surface::from_rows(*grid, rows))
    };
    let a = rows(&|t, u| coeffs.alpha(t, u), "alpha")?;
    let s = (0..coeffs.n_factors())
        .map(|k| rows(&|t, u| coeffs.sigma(k, t, u), "sigma"))
        .collect::<Result<_>>()?;
    Ok(IntegralTransforms { a, s })
}

/// `D(t_i, x, T_j)` for `j = i..=N`.
pub fn jump_transform_row(
    coeffs: &HjmCoefficients,
    grid: &TimeGrid,
    i: usize,
    x: f64,
) -> Result<Vec<f64>> {
    let t = grid.point(i);
    negative_cumulative_row(grid, i, "delta", |u| coeffs.delta(t, x, u))
}

/// `e^d − 1 − d`, accurate near zero; non-negative for every real `d`.
pub fn jump_kernel(d: f64) -> f64 {
    if d.abs() < 1e-3 {
        let d2 = d * d;
        d2 * (0.5 + d * (1.0 / 6.0 + d * (1.0 / 24.0 + d / 120.0)))
    } else {
        d.exp_m1() - d
    }
}

fn checked_kernel(d: f64) -> Result<f64> {
    let v = jump_kernel(d);
    if v < 0.0 {
        return Err(HjmError::NegativeKernel { d, value: v });
    }
    Ok(v)
}

/// How to integrate the jump term over the mark law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpQuadrature {
    /// Gauss–Legendre against the closed-form law; the error bound is the
    /// difference to the rule with twice the nodes.
    GaussLegendre { nodes: usize },
    /// Sample mean over `n_samples` marks; the bound is three standard errors.
    MonteCarlo { n_samples: usize, seed: u64 },
}

impl Default for JumpQuadrature {
    fn default() -> Self {
        JumpQuadrature::GaussLegendre { nodes: 32 }
    }
}

/// The jump term `λ(t)·E[e^D − 1 − D]` on the triangle with its error bound.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpTerm {
    pub value: Surface,
    pub bound: Surface,
}

fn weighted_kernel_row(
    coeffs: &HjmCoefficients,
    grid: &TimeGrid,
    i: usize,
    nodes: &[(f64, f64)],
) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; grid.n_points() - i];
    for &(x, w) in nodes {
        let d = jump_transform_row(coeffs, grid, i, x)?;
        for (a, dv) in acc.iter_mut().zip(d) {
            *a += w * checked_kernel(dv)?;
        }
    }
    Ok(acc)
}

/// Evaluate the jump term of the drift condition on every grid node.
pub fn jump_term(
    coeffs: &HjmCoefficients,
    grid: &TimeGrid,
    quad: &JumpQuadrature,
) -> Result<JumpTerm> {
    let Some(jumps) = coeffs.jumps() else {
        return Ok(JumpTerm {
            value: Surface::zeros(*grid),
            bound: Surface::zeros(*grid),
        });
    };
    jumps.law.validate()?;
    let marks: Option<Vec<f64>> = match *quad {
        JumpQuadrature::MonteCarlo { n_samples, seed } => {
            if n_samples < 2 {
                return Err(HjmError::Invalid(
                    "Monte Carlo jump quadrature needs >= 2 samples".into(),
                ));
            }
            Some(
                (0..n_samples as u64)
                    .map(|k| jumps.law.sample(&mut path_rng(seed, k)))
                    .collect(),
            )
        }
        JumpQuadrature::GaussLegendre { nodes: 0 } => {
            return Err(HjmError::Invalid("Gauss-Legendre needs >= 1 node".into()))
        }
        JumpQuadrature::GaussLegendre { .. } => None,
    };
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..grid.n_points())
        .into_par_iter()
        .map(|i| {
            let t = grid.point(i);
            let lambda = jumps.intensity.at(t);
            if !(lambda.is_finite() && lambda >= 0.0) {
                return Err(HjmError::NonFinite {
                    field: "intensity",
                    t,
                    maturity: t,
                });
            }
            match (quad, &marks) {
                (JumpQuadrature::GaussLegendre { nodes }, _) => {
                    let coarse =
                        weighted_kernel_row(coeffs, grid, i, &jumps.law.quadrature(*nodes))?;
                    let fine =
                        weighted_kernel_row(coeffs, grid, i, &jumps.law.quadrature(2 * nodes))?;
                    let value = fine.iter().map(|v| lambda * v).collect();
                    let bound = coarse
                        .iter()
                        .zip(&fine)
                        .map(|(c, f)| lambda * (c - f).abs())
                        .collect();
                    Ok((value, bound))
                }
                (JumpQuadrature::MonteCarlo { .. }, Some(xs)) => {
                    let per_mark: Vec<Vec<f64>> = xs
                        .iter()
                        .map(|&x| {
                            jump_transform_row(coeffs, grid, i, x)?
                                .into_iter()
                                .map(checked_kernel)
                                .collect()
                        })
                        .collect::<Result<_>>()?;
                    let len = grid.n_points() - i;
                    let mut value = Vec::with_capacity(len);
                    let mut bound = Vec::with_capacity(len);
                    for j in 0..len {
                        let col: Vec<f64> = per_mark.iter().map(|r| r[j]).collect();
                        match McEstimate::from_samples(&col) {
                            Ok(est) => {
                                value.push(lambda * est.mean);
                                bound.push(3.0 * lambda * est.std_error);
                            }
                            Err(_) => {
                                return Err(HjmError::Integrability {
                                    t,
                                    maturity: grid.point(i + j),
                                })
                            }
                        }
                    }
                    Ok((value, bound))
                }
                (JumpQuadrature::MonteCarlo { .. }, None) => unreachable!("marks drawn above"),
            }
        })
        .collect::<Result<_>>()?;
    let (values, bounds): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let value = Surface::from_rows(*grid, values);
    for (i, j, v) in value.iter() {
        if !v.is_finite() {
            return Err(HjmError::Integrability {
                t: grid.point(i),
                maturity: grid.point(j),
            });
        }
    }
    Ok(JumpTerm {
        value,
        bound: Surface::from_rows(*grid, bounds),
    })
}

/// Outcome of the drift-condition check.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftResidualReport {
    /// `R = A + ½|S|² + jump term`.
    pub residual: Surface,
    pub max_abs: f64,
    /// `(t, T)` where `|R|` is largest.
    pub argmax: (f64, f64),
    pub step: f64,
    /// Largest jump-quadrature error bound over the grid.
    pub quadrature_bound: f64,
    /// Largest accumulated `∫_0^t λ E[e^D − 1 − D] ds` (first condition).
    pub accumulated_jump_max: f64,
}

impl DriftResidualReport {
    pub fn satisfied(&self, tolerance: f64) -> bool {
        self.max_abs <= tolerance + self.quadrature_bound
    }
}

/// Evaluate both martingale-measure conditions on the grid.
pub fn drift_residual(
    coeffs: &HjmCoefficients,
    grid: &TimeGrid,
    quad: &JumpQuadrature,
) -> Result<DriftResidualReport> {
    let tr = transforms(coeffs, grid)?;
    let jt = jump_term(coeffs, grid, quad)?;
    let h = grid.step();
    let n = grid.n_points();

    // First condition: trapezoid in s of the jump term down each maturity column.
    let mut accumulated_jump_max: f64 = 0.0;
    for j in 0..n {
        let mut acc = 0.0;
        for i in 1..=j {
            acc += 0.5 * h * (jt.value.get(i - 1, j) + jt.value.get(i, j));
            if !acc.is_finite() {
                return Err(HjmError::Integrability {
                    t: grid.point(i),
                    maturity: grid.point(j),
                });
            }
            accumulated_jump_max = accumulated_jump_max.max(acc);
        }
    }

    let mut residual = Surface::zeros(*grid);
    let mut max_abs: f64 = 0.0;
    let mut argmax = (0.0, 0.0);
    for i in 0..n {
        for j in i..n {
            let r = tr.a.get(i, j) + tr.half_s_squared(i, j) + jt.value.get(i, j);
            if !r.is_finite() {
                return Err(HjmError::NonFinite {
                    field: "residual",
                    t: grid.point(i),
                    maturity: grid.point(j),
                });
            }
            if r.abs() > max_abs {
                max_abs = r.abs();
                argmax = (grid.point(i), grid.point(j));
            }
            residual.set(i, j, r);
        }
    }
    Ok(DriftResidualReport {
        residual,
        max_abs,
        argmax,
        step: h,
        quadrature_bound: jt.bound.max_abs(),
        accumulated_jump_max,
    })
}

/// Deterministic per-node coefficient tables used by the Euler stepper.
struct StepTables {
    alpha: Surface,
    sigma: Vec<Surface>,
    compensator: Surface,
}

fn step_tables(coeffs: &HjmCoefficients, grid: &TimeGrid) -> Result<StepTables> {
    let check = |s: Surface, field: &'static str| -> Result<Surface> {
        let bad = s
            .iter()
            .find(|(_, _, v)| !v.is_finite())
            .map(|(i, j, _)| (i, j));
        match bad {
            Some((i, j)) => Err(HjmError::NonFinite {
                field,
                t: grid.point(i),
                maturity: grid.point(j),
            }),
            None => Ok(s),
        }
    };
    let alpha = check(Surface::from_fn(*grid, |t, u| coeffs.alpha(t, u)), "alpha")?;
    let sigma = (0..coeffs.n_factors())
        .map(|k| {
            check(
                Surface::from_fn(*grid, |t, u| coeffs.sigma(k, t, u)),
                "sigma",
            )
        })
        .collect::<Result<_>>()?;
    let compensator = match coeffs.jumps() {
        Some(j) => check(
            Surface::from_fn(*grid, |t, u| {
                j.intensity.at(t) * j.law.expect(|x| coeffs.delta(t, x, u), COMPENSATOR_NODES)
            }),
            "compensator",
        )?,
        None => Surface::zeros(*grid),
    };
    Ok(StepTables {
        alpha,
        sigma,
        compensator,
    })
}

fn evolve_with_tables(
    coeffs: &HjmCoefficients,
    tables: &StepTables,
    initial: &[f64],
    grid: &TimeGrid,
    seed: u64,
    path: usize,
) -> Result<ForwardSurface> {
    let n = grid.n_points();
    let h = grid.step();
    let sqrt_h = h.sqrt();
    let mut rng = path_rng(seed, path as u64);
    let mut surface = Surface::zeros(*grid);
    surface.row_mut(0).copy_from_slice(initial);
    let mut dw = vec![0.0; coeffs.n_factors()];
    let mut marks: Vec<f64> = Vec::new();
    for i in 0..n - 1 {
        let t = grid.point(i);
        for z in dw.iter_mut() {
            let g: f64 = StandardNormal.sample(&mut rng);
            *z = sqrt_h * g;
        }
        marks.clear();
        if let Some(j) = coeffs.jumps() {
            let rate = j.intensity.at(t) * h;
            if rate > 0.0 {
                let count = Poisson::new(rate)
                    .map_err(|e| HjmError::Invalid(e.to_string()))?
                    .sample(&mut rng) as u64;
                for _ in 0..count {
                    marks.push(j.law.sample(&mut rng));
                }
            }
        }
        for jm in (i + 1)..n {
            let maturity = grid.point(jm);
            let mut df = tables.alpha.get(i, jm) * h - tables.compensator.get(i, jm) * h;
            for (k, z) in dw.iter().enumerate() {
                df += tables.sigma[k].get(i, jm) * z;
            }
            for &x in &marks {
                df += coeffs.delta(t, x, maturity);
            }
            let v = surface.get(i, jm) + df;
            if !v.is_finite() {
                return Err(HjmError::NonFinite {
                    field: "forward rate",
                    t: grid.point(i + 1),
                    maturity,
                });
            }
            surface.set(i + 1, jm, v);
        }
    }
    Ok(surface)
}

fn check_initial(initial: &[f64], grid: &TimeGrid) -> Result<()> {
    if initial.len() != grid.n_points() {
        return Err(HjmError::Invalid(format!(
            "initial curve needs {} points, got {}",
            grid.n_points(),
            initial.len()
        )));
    }
    if let Some(j) = initial.iter().position(|v| !v.is_finite()) {
        return Err(HjmError::NonFinite {
            field: "initial curve",
            t: 0.0,
            maturity: grid.point(j),
        });
    }
    Ok(())
}

/// One Euler realization of the surface. All maturities share the Brownian
/// increments and jump marks of each step.
pub fn evolve_path(
    coeffs: &HjmCoefficients,
    initial: &[f64],
    grid: &TimeGrid,
    seed: u64,
    path: usize,
) -> Result<ForwardSurface> {
    check_initial(initial, grid)?;
    let tables = step_tables(coeffs, grid)?;
    evolve_with_tables(coeffs, &tables, initial, grid, seed, path)
}

/// `n_paths` realizations, path `i` driven by stream `(seed, i)`.
pub fn evolve_surface(
    coeffs: &HjmCoefficients,
    initial: &[f64],
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<ForwardSurface>> {
    evolve_map(coeffs, initial, grid, n_paths, seed, |s| s.clone())
}

/// Evolve `n_paths` surfaces and map each through `f` without keeping the
/// ensemble in memory. Results are in path order.
pub fn evolve_map<T, F>(
    coeffs: &HjmCoefficients,
    initial: &[f64],
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&ForwardSurface) -> T + Sync,
{
    if n_paths == 0 {
        return Err(HjmError::Invalid("n_paths must be >= 1".into()));
    }
    evolve_map_range(coeffs, initial, grid, 0..n_paths, seed, f)
}

/// [`evolve_map`] over the path indices in `paths`, so large ensembles can
/// be processed in chunks with the same streams.
pub fn evolve_map_range<T, F>(
    coeffs: &HjmCoefficients,
    initial: &[f64],
    grid: &TimeGrid,
    paths: std::ops::Range<usize>,
    seed: u64,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&ForwardSurface) -> T + Sync,
{
    check_initial(initial, grid)?;
    let tables = step_tables(coeffs, grid)?;
    paths
        .into_par_iter()
        .map(|p| evolve_with_tables(coeffs, &tables, initial, grid, seed, p).map(|s| f(&s)))
        .collect()
}

/// `½|S(t,T)|² = −∫_t^T α_p(t,s) ds − jump term` from a growth-model drift.
///
/// Fails with [`HjmError::Infeasible`] where the result is negative beyond
/// round-off: no real volatility reproduces that drift.
pub fn implied_diffusion_from_growth(
    alpha_p: &Surface,
    jump_part: Option<&Surface>,
) -> Result<Surface> {
    let grid = *alpha_p.grid();
    if let Some(j) = jump_part {
        if j.grid() != &grid {
            return Err(HjmError::Invalid(
                "jump term grid differs from the drift grid".into(),
            ));
        }
    }
    let h = grid.step();
    let n = grid.n_points();
    let mut out = Surface::zeros(grid);
    let mut bad: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..n {
        let row = alpha_p.row(i);
        let mut integral = 0.0;
        for k in 0..row.len() {
            let j = i + k;
            if k > 0 {
                integral += 0.5 * h * (row[k - 1] + row[k]);
            }
            if !row[k].is_finite() {
                return Err(HjmError::NonFinite {
                    field: "alpha_p",
                    t: grid.point(i),
                    maturity: grid.point(j),
                });
            }
            let jump = jump_part.map_or(0.0, |s| s.get(i, j));
            let v = -integral - jump;
            let tol = 1e-13 * (integral.abs() + jump.abs()).max(1e-3);
            if v < -tol {
                bad.push((i, j, v));
            }
            out.set(i, j, v.max(0.0));
        }
    }
    if let Some(&(i, j, value)) = bad.first() {
        let t_of = |k: usize| grid.point(k);
        return Err(HjmError::Infeasible {
            count: bad.len(),
            t: t_of(i),
            maturity: t_of(j),
            value,
            t_min: t_of(bad.iter().map(|b| b.0).min().expect("non-empty")),
            t_max: t_of(bad.iter().map(|b| b.0).max().expect("non-empty")),
            maturity_min: t_of(bad.iter().map(|b| b.1).min().expect("non-empty")),
            maturity_max: t_of(bad.iter().map(|b| b.1).max().expect("non-empty")),
        });
    }
    Ok(out)
}

/// The drift `α_p(t, ·)` at one calendar time.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftSlice {
    pub t: f64,
    pub maturities: Vec<f64>,
    pub values: Vec<f64>,
}

/// Explicit Euler step `α_p ← α_p + g(t, T, α_p)·h`. Maturities that fall
/// behind the new calendar time leave the triangle and are dropped.
pub fn growth_model_step<G>(g: &G, slice: &DriftSlice, h: f64) -> Result<DriftSlice>
where
    G: Fn(f64, f64, f64) -> f64 + ?Sized,
{
    if !(h > 0.0) {
        return Err(HjmError::Invalid(format!("step must be > 0, got {h}")));
    }
    let next_t = slice.t + h;
    let tol = 1e-9 * h;
    let mut maturities = Vec::with_capacity(slice.maturities.len());
    let mut values = Vec::with_capacity(slice.values.len());
    for (&maturity, &a) in slice.maturities.iter().zip(&slice.values) {
        let inc = g(slice.t, maturity, a);
        if !inc.is_finite() {
            return Err(HjmError::NonFinite {
                field: "growth increment",
                t: slice.t,
                maturity,
            });
        }
        if maturity >= next_t - tol {
            maturities.push(maturity);
            values.push(a + inc * h);
        }
    }
    Ok(DriftSlice {
        t: next_t,
        maturities,
        values,
    })
}

/// Fill the triangle with `α_p(t_i, T_j)` by stepping the growth model from
/// the initial slice `α_p(0, T_j)`.
pub fn integrate_growth_model<G>(g: &G, initial: &[f64], grid: &TimeGrid) -> Result<Surface>
where
    G: Fn(f64, f64, f64) -> f64 + ?Sized,
{
    check_initial(initial, grid)?;
    let mut out = Surface::zeros(*grid);
    let mut slice = DriftSlice {
        t: 0.0,
        maturities: grid.points(),
        values: initial.to_vec(),
    };
    out.row_mut(0).copy_from_slice(initial);
    for i in 1..grid.n_points() {
        slice = growth_model_step(g, &slice, grid.step())?;
        // Snap calendar time to the grid to avoid drift in the row lookup.
        slice.t = grid.point(i);
        let row = out.row_mut(i);
        debug_assert_eq!(row.len(), slice.values.len());
        row.copy_from_slice(&slice.values);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TimeGrid {
        TimeGrid::new(0.0, 2.0, 40).unwrap()
    }

    #[test]
    fn triangle_indexing_round_trips() {
        let g = TimeGrid::new(0.0, 1.0, 5).unwrap();
        let s = Surface::from_fn(g, |t, u| 10.0 * t + u);
        for i in 0..6 {
            for j in i..6 {
                assert_eq!(s.get(i, j), 10.0 * g.point(i) + g.point(j));
            }
            assert_eq!(s.row(i).len(), 6 - i);
        }
        assert_eq!(s.get(3, 1), 0.0);
    }

    #[test]
    fn constant_drift_transform_is_exact() {
        let c = 0.7;
        let coeffs =
            HjmCoefficients::new(Arc::new(move |_, _| c), vec![Arc::new(|_, _| 0.3)], None);
        let tr = transforms(&coeffs, &grid()).unwrap();
        let g = grid();
        for (i, j, a) in tr.a.iter() {
            let tau = g.point(j) - g.point(i);
            assert!((a + c * tau).abs() < 1e-14);
            assert!((tr.half_s_squared(i, j) - 0.5 * 0.09 * tau * tau).abs() < 1e-14);
        }
        for i in 0..g.n_points() {
            assert_eq!(tr.a.get(i, i), 0.0);
            assert_eq!(tr.s[0].get(i, i), 0.0);
        }
    }

    #[test]
    fn ho_lee_residual_vanishes() {
        let r = drift_residual(
            &HjmCoefficients::ho_lee(0.01),
            &grid(),
            &JumpQuadrature::default(),
        )
        .unwrap();
        assert!(r.max_abs <= 1e-10, "{}", r.max_abs);
    }

    #[test]
    fn missing_drift_leaves_half_s_squared() {
        let s0 = 0.02;
        let coeffs =
            HjmCoefficients::new(Arc::new(|_, _| 0.0), vec![Arc::new(move |_, _| s0)], None);
        let g = grid();
        let r = drift_residual(&coeffs, &g, &JumpQuadrature::default()).unwrap();
        for (i, j, v) in r.residual.iter() {
            let tau = g.point(j) - g.point(i);
            assert!((v - 0.5 * s0 * s0 * tau * tau).abs() < 1e-15);
        }
        assert_eq!(r.argmax, (0.0, 2.0));
    }

    #[test]
    fn zero_coefficients_give_zero_residual() {
        let r = drift_residual(
            &HjmCoefficients::zero(),
            &grid(),
            &JumpQuadrature::default(),
        )
        .unwrap();
        assert_eq!(r.max_abs, 0.0);
    }

    #[test]
    fn kernel_is_non_negative_and_accurate() {
        for d in [-50.0, -1.0, -1e-4, 0.0, 1e-8, 1e-3, 0.5, 20.0] {
            let v = jump_kernel(d);
            assert!(v >= 0.0);
            let reference = if d.abs() > 1e-2 {
                d.exp() - 1.0 - d
            } else {
                0.5 * d * d
                    + d.powi(3) / 6.0
                    + d.powi(4) / 24.0
                    + d.powi(5) / 120.0
                    + d.powi(6) / 720.0
            };
            assert!(
                (v - reference).abs() <= 1e-11 * reference.abs() + 1e-300,
                "{d}"
            );
        }
    }

    #[test]
    fn divergent_jump_integral_is_reported() {
        let coeffs = HjmCoefficients::new(
            Arc::new(|_, _| 0.0),
            Vec::new(),
            Some(HjmJumps {
                intensity: Intensity::Constant(1.0),
                law: JumpLaw::Constant { value: 1.0 },
                delta: Arc::new(|_, _, _| -1e6),
            }),
        );
        assert!(matches!(
            drift_residual(&coeffs, &grid(), &JumpQuadrature::default()),
            Err(HjmError::Integrability { .. })
        ));
    }

    #[test]
    fn zero_coefficients_keep_surface_constant() {
        let g = grid();
        let init: Vec<f64> = g.points().iter().map(|t| 0.03 + 0.01 * t).collect();
        let s = evolve_path(&HjmCoefficients::zero(), &init, &g, 1, 0).unwrap();
        for (_, j, v) in s.iter() {
            assert_eq!(v, init[j]);
        }
    }

    #[test]
    fn evolution_is_deterministic_per_path() {
        let g = grid();
        let init = vec![0.03; g.n_points()];
        let c = HjmCoefficients::ho_lee_with_jumps(
            0.01,
            2.0,
            JumpLaw::Normal {
                mean: 0.0,
                std: 0.01,
            },
            1.0,
        );
        let a = evolve_surface(&c, &init, &g, 4, 9).unwrap();
        let b = evolve_surface(&c, &init, &g, 6, 9).unwrap();
        assert_eq!(a[..], b[..4]);
    }

    #[test]
    fn implied_diffusion_cases() {
        let g = grid();
        let c = 0.05;
        let neg = Surface::from_fn(g, |_, _| -c);
        let s = implied_diffusion_from_growth(&neg, None).unwrap();
        for (i, j, v) in s.iter() {
            assert!((v - c * (g.point(j) - g.point(i))).abs() < 1e-14);
        }
        let zero = implied_diffusion_from_growth(&Surface::zeros(g), None).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
        match implied_diffusion_from_growth(&Surface::from_fn(g, |_, _| c), None) {
            Err(HjmError::Infeasible { count, .. }) => {
                let n = g.n_points();
                assert_eq!(count, n * (n - 1) / 2);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn growth_step_cases() {
        let slice = DriftSlice {
            t: 0.0,
            maturities: vec![0.0, 0.5, 1.0],
            values: vec![0.1, 0.2, 0.3],
        };
        let same = growth_model_step(&|_, _, _| 0.0, &slice, 0.5).unwrap();
        assert_eq!(same.values, vec![0.2, 0.3]);
        let lin = growth_model_step(&|_, _, _| 2.0, &slice, 0.5).unwrap();
        assert_eq!(lin.values, vec![1.2, 1.3]);
        assert!(growth_model_step(&|_, _, _| f64::NAN, &slice, 0.5).is_err());
    }
}
