//! Discounted least-squares adaptation of the mixing weights.
//!
//! After observing `ẑ`, the one-step residual of variable `i` is
//! `ε(α) = E[X_i | history; α_i = α] - ẑ`. With a fully observed history,
//! `α_i` enters exactly one uninstantiated node linearly, so the expectation
//! is affine in `α` and `ε(α) = a + b·α` with
//!
//! ```text
//! a = E(0) - ẑ,    b = E(1) - E(0).
//! ```
//!
//! Minimising `Σ θ^(T-t) (a_t + b_t α)²` over `α ∈ [0, 1]` only needs the two
//! running sums `A = Σ θ^(T-t) a_t b_t` and `B = Σ θ^(T-t) b_t²`, giving
//! `α = clamp(-A / B, 0, 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::expected_value;
use crate::inference::InferenceMethod;
use crate::model::{unroll, Dnm, HistoryWindow};

pub const DEFAULT_THETA: f64 = 0.65;
pub const DEFAULT_ALPHA: f64 = 0.5;

/// Below this `B` the objective is treated as flat and α is left alone.
const FLAT_OBJECTIVE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualCoeffs {
    pub a: f64,
    pub b: f64,
}

impl ResidualCoeffs {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    pub fn residual(&self, alpha: f64) -> f64 {
        self.a + self.b * alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaEntry {
    pub a_sum: f64,
    pub b_sum: f64,
    pub alpha: f64,
}

impl AlphaEntry {
    pub fn fresh(alpha: f64) -> Self {
        Self {
            a_sum: 0.0,
            b_sum: 0.0,
            alpha,
        }
    }
}

/// Discounted sums and current α for every variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaState {
    entries: Vec<AlphaEntry>,
    theta: f64,
}

impl AlphaState {
    pub fn new(n_vars: usize, theta: f64) -> Result<Self> {
        Self::from_entries(vec![AlphaEntry::fresh(DEFAULT_ALPHA); n_vars], theta)
    }

    /// Fresh sums seeded with the model's current weights.
    pub fn for_model(dnm: &Dnm, theta: f64) -> Result<Self> {
        Self::from_entries(dnm.alphas().into_iter().map(AlphaEntry::fresh).collect(), theta)
    }

    pub fn from_entries(entries: Vec<AlphaEntry>, theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::InvalidArgument(format!("discount {theta} outside (0, 1]")));
        }
        if let Some(e) = entries
            .iter()
            .find(|e| !(0.0..=1.0).contains(&e.alpha) || e.b_sum < 0.0)
        {
            return Err(Error::InvalidArgument(format!("invalid alpha state {e:?}")));
        }
        Ok(Self { entries, theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, var: usize) -> &AlphaEntry {
        &self.entries[var]
    }

    pub fn entries(&self) -> &[AlphaEntry] {
        &self.entries
    }

    pub fn alpha(&self, var: usize) -> f64 {
        self.entries[var].alpha
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.alpha).collect()
    }

    /// Folds one residual into the sums of `var` and re-solves for α.
    pub fn update(&mut self, var: usize, rc: ResidualCoeffs) {
        let theta = self.theta;
        let e = &mut self.entries[var];
        e.a_sum = theta * e.a_sum + rc.a * rc.b;
        e.b_sum = theta * e.b_sum + rc.b * rc.b;
        if e.b_sum > FLAT_OBJECTIVE {
            e.alpha = (-e.a_sum / e.b_sum).clamp(0.0, 1.0);
        }
    }

    /// Overrides α without touching the sums (grid-search fallback).
    pub fn set_alpha(&mut self, var: usize, alpha: f64) {
        self.entries[var].alpha = alpha.clamp(0.0, 1.0);
    }

    /// The model with these weights installed.
    pub fn apply(&self, dnm: &Dnm) -> Dnm {
        dnm.with_alphas(&self.alphas())
    }
}

/// Functional form of [`AlphaState::update`].
pub fn update_alpha(state: &AlphaState, var: usize, rc: ResidualCoeffs) -> AlphaState {
    let mut next = state.clone();
    next.update(var, rc);
    next
}

/// Recomputes `(A, B)` from scratch with explicit weights `θ^(T-t)`.
pub fn discounted_sums(history: &[ResidualCoeffs], theta: f64) -> (f64, f64) {
    let last = history.len();
    history.iter().enumerate().fold((0.0, 0.0), |(a, b), (t, rc)| {
        let w = theta.powi((last - 1 - t) as i32);
        (a + w * rc.a * rc.b, b + w * rc.b * rc.b)
    })
}

/// Expected one-step value of `var` under `dnm`.
pub(crate) fn leading_expectation(
    dnm: &Dnm,
    var: usize,
    window: &HistoryWindow,
    method: InferenceMethod,
) -> Result<f64> {
    let u = unroll(dnm, window)?;
    let node = u.leading(var);
    let m = method.marginals(&u.network, &u.evidence, &[node])?;
    Ok(expected_value(m.get(node), dnm.representative_values(var)))
}

/// Residual coefficients of `var` for the observation `observed` that
/// followed `window`. Other variables keep their current α.
pub fn residual_coefficients(
    dnm: &Dnm,
    var: usize,
    window: &HistoryWindow,
    observed: f64,
    method: InferenceMethod,
) -> Result<ResidualCoeffs> {
    let l = dnm.window_len();
    if window.len() < l {
        return Err(Error::WindowTooShort {
            needed: l,
            got: window.len(),
        });
    }
    for (slice, states) in window.tail(l).iter().enumerate() {
        if let Some(v) = states.iter().position(Option::is_none) {
            return Err(Error::MissingHistory {
                variable: dnm.variables()[v].name.clone(),
                slice,
            });
        }
    }
    let e0 = leading_expectation(&dnm.with_alpha(var, 0.0), var, window, method)?;
    let e1 = leading_expectation(&dnm.with_alpha(var, 1.0), var, window, method)?;
    Ok(ResidualCoeffs::new(e0 - observed, e1 - e0))
}

/// One past observation for the forecast-driven grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSample {
    pub window: HistoryWindow,
    pub observed: f64,
}

/// Grid points `0, r, 2r, ..., 1`.
fn grid(resolution: f64) -> Result<Vec<f64>> {
    if !(resolution > 0.0) || resolution > 1.0 {
        return Err(Error::InvalidArgument(format!("grid resolution {resolution} outside (0, 1]")));
    }
    let steps = (1.0 / resolution).round() as usize;
    Ok((0..=steps).map(|k| (k as f64 * resolution).min(1.0)).collect())
}

/// Argmin over the grid, keeping the smaller α on ties.
fn argmin_on_grid(resolution: f64, mut objective: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    let mut best = (f64::INFINITY, 0.0);
    for alpha in grid(resolution)? {
        let value = objective(alpha)?;
        if value < best.0 {
            best = (value, alpha);
        }
    }
    Ok(best.1)
}

/// Minimises the discounted squared one-step error of `var` over a grid of α
/// by forecasting every sample directly. Works with missing history.
pub fn grid_search_alpha(
    dnm: &Dnm,
    var: usize,
    history: &[ResidualSample],
    theta: f64,
    resolution: f64,
    method: InferenceMethod,
) -> Result<f64> {
    let last = history.len();
    argmin_on_grid(resolution, |alpha| {
        let model = dnm.with_alpha(var, alpha);
        let mut total = 0.0;
        for (t, sample) in history.iter().enumerate() {
            let e = leading_expectation(&model, var, &sample.window, method)? - sample.observed;
            total += theta.powi((last - 1 - t) as i32) * e * e;
        }
        Ok(total)
    })
}

/// Grid minimiser of the discounted objective built from residual coefficients.
pub fn grid_search_coefficients(history: &[ResidualCoeffs], theta: f64, resolution: f64) -> Result<f64> {
    let last = history.len();
    argmin_on_grid(resolution, |alpha| {
        Ok(history
            .iter()
            .enumerate()
            .map(|(t, rc)| theta.powi((last - 1 - t) as i32) * rc.residual(alpha).powi(2))
            .sum())
    })
}
