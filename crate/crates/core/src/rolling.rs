//! Rolling-origin evaluation.
//!
//! The origin walks through an evaluation range. At each origin the model
//! forecasts `k` steps ahead with its current weights; then, if adaptation is
//! on, the next observation is revealed and every α is updated before the
//! origin advances. Expected values are scored against raw observations.

use std::collections::VecDeque;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::adaptation::{grid_search_alpha, residual_coefficients, AlphaState, ResidualSample};
use crate::error::{Error, Result};
use crate::forecast::k_step_forecast;
use crate::inference::InferenceMethod;
use crate::metrics::{accuracy, prediction_metrics};
use crate::model::Dnm;
use crate::network::VariableKind;
use crate::preprocess::{ColumnData, DiscreteSeries, TimeSeriesTable};

/// Samples kept per variable for the grid-search fallback.
const FALLBACK_BUFFER: usize = 32;
const FALLBACK_RESOLUTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    #[default]
    Dls,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMethod {
    /// Closed-form discounted least squares.
    Dls,
    /// History had gaps; α came from a grid search over recent samples.
    GridSearch,
    /// Nothing observed to learn from.
    Skipped,
    Off,
}

/// One α update (or non-update) at one origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub t: usize,
    pub variable: String,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub alpha_before: f64,
    pub alpha_after: f64,
    pub method: UpdateMethod,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRow {
    pub t: usize,
    pub step: usize,
    pub variable: String,
    pub expected: f64,
    pub distribution: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum VariableMetrics {
    Continuous {
        /// `None` when every observation was zero.
        mpe: Option<f64>,
        mape: Option<f64>,
        ppe: Vec<Option<f64>>,
        skipped_zero: usize,
        n: usize,
    },
    Categorical {
        accuracy: Option<f64>,
        n: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableReport {
    pub variable: String,
    pub step: usize,
    pub metrics: VariableMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub train_end: usize,
    pub eval_start: usize,
    pub eval_end: usize,
    pub horizon: usize,
    pub update: UpdateMode,
    pub theta: f64,
    pub reports: Vec<VariableReport>,
}

impl MetricsReport {
    pub fn get(&self, variable: &str, step: usize) -> Option<&VariableMetrics> {
        self.reports
            .iter()
            .find(|r| r.variable == variable && r.step == step)
            .map(|r| &r.metrics)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RollingOptions {
    pub train_end: usize,
    /// Origins, half-open. Origin `t` has observed history up to `t`.
    pub range: Range<usize>,
    pub horizon: usize,
    pub update: UpdateMode,
    pub method: InferenceMethod,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RollingResult {
    pub report: MetricsReport,
    pub forecasts: Vec<ForecastRow>,
    pub audit: Vec<AuditEntry>,
    /// One-step expected minus observed, per origin and variable.
    pub one_step_errors: Vec<Vec<Option<f64>>>,
    pub final_state: AlphaState,
}

/// Real-valued observations per time step: raw values for discretized
/// variables, state indices for categorical ones.
pub fn observation_values(table: &TimeSeriesTable, series: &DiscreteSeries) -> Result<Vec<Vec<Option<f64>>>> {
    let columns = series
        .variables()
        .iter()
        .enumerate()
        .map(|(v, var)| {
            let col = table
                .column(&var.name)
                .ok_or_else(|| Error::UnknownColumn(var.name.clone()))?;
            Ok(match (&col.data, var.kind) {
                (ColumnData::Continuous(x), VariableKind::Discretized) => x.clone(),
                _ => (0..series.len()).map(|t| series.state(t, v).map(|s| s as f64)).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((0..series.len())
        .map(|t| columns.iter().map(|c| c[t]).collect())
        .collect())
}

/// Observations are taken as the representative value of each observed state.
pub fn representative_observations(dnm: &Dnm, series: &DiscreteSeries) -> Vec<Vec<Option<f64>>> {
    series
        .rows()
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(v, s)| s.map(|s| dnm.representative_values(v)[s]))
                .collect()
        })
        .collect()
}

/// Observed values, expected values, observed states and modal states.
type Pairs = (Vec<f64>, Vec<f64>, Vec<usize>, Vec<usize>);

pub fn rolling_forecast_evaluate(
    dnm: &Dnm,
    series: &DiscreteSeries,
    values: &[Vec<Option<f64>>],
    state: AlphaState,
    opts: &RollingOptions,
) -> Result<RollingResult> {
    let n = dnm.n_vars();
    let l = dnm.window_len();
    let k = opts.horizon;
    if k == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    if opts.range.start < opts.train_end || opts.range.end > series.len() || opts.range.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "evaluation range {:?} must be non-empty, start at or after {} and end by {}",
            opts.range,
            opts.train_end,
            series.len()
        )));
    }
    if values.len() != series.len() || state.len() != n || series.variables().len() != n {
        return Err(Error::InvalidArgument("series, values and model disagree in shape".into()));
    }
    if opts.range.start + 1 < l {
        return Err(Error::WindowTooShort {
            needed: l,
            got: opts.range.start + 1,
        });
    }

    let mut state = state;
    let mut forecasts = Vec::with_capacity(opts.range.len() * k * n);
    let mut audit = Vec::new();
    let mut one_step_errors = Vec::with_capacity(opts.range.len());
    // per (step, var): (observed, expected, observed state, modal state)
    let mut pairs: Vec<Vec<Pairs>> =
        vec![vec![Default::default(); n]; k];
    let mut buffers: Vec<VecDeque<ResidualSample>> = vec![VecDeque::new(); n];

    for t in opts.range.clone() {
        let model = state.apply(dnm);
        let window = series.window(t, l)?;
        let fc = k_step_forecast(&model, &window, k, opts.method)?;

        for set in &fc.steps {
            for v in 0..n {
                forecasts.push(ForecastRow {
                    t,
                    step: set.step,
                    variable: dnm.variables()[v].name.clone(),
                    expected: set.expected[v],
                    distribution: set.distributions[v].clone(),
                });
                let target = t + set.step;
                if target >= series.len() {
                    continue;
                }
                let acc = &mut pairs[set.step - 1][v];
                if let Some(o) = values[target][v] {
                    acc.0.push(o);
                    acc.1.push(set.expected[v]);
                }
                if let Some(s) = series.state(target, v) {
                    acc.2.push(s);
                    acc.3.push(set.mode(v));
                }
            }
        }
        one_step_errors.push(
            (0..n)
                .map(|v| {
                    values
                        .get(t + 1)
                        .and_then(|row| row[v])
                        .map(|o| fc.steps[0].expected[v] - o)
                })
                .collect(),
        );

        if t + 1 >= series.len() {
            continue;
        }
        let before = state.alphas();
        for v in 0..n {
            let name = dnm.variables()[v].name.clone();
            let entry = |a, b, after, method| AuditEntry {
                t,
                variable: name.clone(),
                a,
                b,
                alpha_before: before[v],
                alpha_after: after,
                method,
            };
            if opts.update == UpdateMode::Off {
                audit.push(entry(None, None, before[v], UpdateMethod::Off));
                continue;
            }
            let Some(observed) = values[t + 1][v] else {
                audit.push(entry(None, None, before[v], UpdateMethod::Skipped));
                continue;
            };
            let buffer = &mut buffers[v];
            if buffer.len() == FALLBACK_BUFFER {
                buffer.pop_front();
            }
            buffer.push_back(ResidualSample {
                window: window.clone(),
                observed,
            });

            match residual_coefficients(&model, v, &window, observed, opts.method) {
                Ok(rc) => {
                    state.update(v, rc);
                    audit.push(entry(Some(rc.a), Some(rc.b), state.alpha(v), UpdateMethod::Dls));
                }
                Err(Error::MissingHistory { .. }) => {
                    let samples: Vec<ResidualSample> = buffer.iter().cloned().collect();
                    let alpha = grid_search_alpha(&model, v, &samples, state.theta(), FALLBACK_RESOLUTION, opts.method)?;
                    state.set_alpha(v, alpha);
                    audit.push(entry(None, None, alpha, UpdateMethod::GridSearch));
                }
                Err(e) => return Err(e),
            }
        }
    }

    let mut reports = Vec::with_capacity(k * n);
    for (h, per_var) in pairs.into_iter().enumerate() {
        for (v, (obs, pred, obs_states, modes)) in per_var.into_iter().enumerate() {
            let var = &dnm.variables()[v];
            let metrics = match var.kind {
                VariableKind::Categorical => VariableMetrics::Categorical {
                    accuracy: accuracy(&obs_states, &modes).ok(),
                    n: obs_states.len(),
                },
                VariableKind::Discretized => match prediction_metrics(&obs, &pred) {
                    Ok(m) => VariableMetrics::Continuous {
                        mpe: Some(m.mpe),
                        mape: Some(m.mape),
                        ppe: m.ppe,
                        skipped_zero: m.skipped_zero,
                        n: m.n,
                    },
                    Err(_) => {
                        log::warn!("{} step {}: percentage errors undefined", var.name, h + 1);
                        VariableMetrics::Continuous {
                            mpe: None,
                            mape: None,
                            ppe: vec![None; obs.len()],
                            skipped_zero: obs.len(),
                            n: 0,
                        }
                    }
                },
            };
            reports.push(VariableReport {
                variable: var.name.clone(),
                step: h + 1,
                metrics,
            });
        }
    }

    Ok(RollingResult {
        report: MetricsReport {
            train_end: opts.train_end,
            eval_start: opts.range.start,
            eval_end: opts.range.end,
            horizon: k,
            update: opts.update,
            theta: state.theta(),
            reports,
        },
        forecasts,
        audit,
        one_step_errors,
        final_state: state,
    })
}

/// Writes forecast rows as `t,step,variable,expected,p0,p1,...`, padding
/// probabilities with empty cells up to the largest cardinality.
pub fn write_forecast_csv<W: std::io::Write>(rows: &[ForecastRow], out: W) -> Result<()> {
    let width = rows.iter().map(|r| r.distribution.len()).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_owned(), "step".into(), "variable".into(), "expected".into()];
    header.extend((0..width).map(|i| format!("p{i}")));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.t.to_string(), r.step.to_string(), r.variable.clone(), r.expected.to_string()];
        rec.extend(r.distribution.iter().map(f64::to_string));
        rec.resize(4 + width, String::new());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<forecast csv>", e))?;
    Ok(())
}
