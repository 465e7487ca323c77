//! Forecasting multivariate time series with dynamic network models.
//!
//! A dynamic network model (DNM) is a discrete belief network over a sliding
//! window of time slices. Every variable mixes a same-slice conditional
//! distribution with a lagged one through a weight `α`, and those weights are
//! re-fitted online by discounted least squares as observations arrive.
//!
//! The usual pipeline:
//!
//! 1. [`load_csv`] a table and [`fit_codings`] to discretize it;
//! 2. [`build_windows`], [`learn_structure`] and [`estimate_cpds`] to get a [`Dnm`];
//! 3. [`k_step_forecast`] from any history window;
//! 4. [`rolling_forecast_evaluate`] to score forecasts while adapting `α`.
//!
//! ```
//! use dnm::{k_step_forecast, ConvexCpd, Cpt, Dnm, DnmStructure, HistoryWindow, InferenceMethod, LagRef, Variable};
//!
//! // One binary variable that stays put with probability 0.9.
//! let structure = DnmStructure::new(
//!     vec![Variable::discretized("X", 2)],
//!     1,
//!     vec![vec![]],
//!     vec![vec![LagRef::new(0, 1)]],
//! )?;
//! let stay = Cpt::from_rows(2, vec![2], &[vec![0.9, 0.1], vec![0.1, 0.9]])?;
//! let cpd = ConvexCpd::new(Cpt::prior(vec![0.5, 0.5])?, stay, 1.0)?;
//! let dnm = Dnm::new(structure, vec![cpd], vec![vec![0.5, 0.5]], vec![vec![0.0, 1.0]])?;
//!
//! let window = HistoryWindow::observed(vec![vec![0]]);
//! let fc = k_step_forecast(&dnm, &window, 2, InferenceMethod::Exact)?;
//! assert!((fc.steps[1].distributions[0][0] - 0.82).abs() < 1e-12);
//! # Ok::<(), dnm::Error>(())
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptation;
pub mod error;
pub mod forecast;
pub mod inference;
pub mod learning;
pub mod metrics;
pub mod model;
pub mod network;
pub mod persist;
pub mod preprocess;
pub mod rolling;

pub use adaptation::{
    discounted_sums, grid_search_alpha, grid_search_coefficients, residual_coefficients, update_alpha, AlphaEntry,
    AlphaState, ResidualCoeffs, ResidualSample, DEFAULT_ALPHA, DEFAULT_THETA,
};
pub use error::{Error, Result};
pub use forecast::{expected_value, k_step_forecast, one_step_forecast, ForecastSet, KStepForecast};
pub use inference::{
    approximate_marginals, approximate_posterior, brute_force_posterior, brute_force_posterior_with_cap,
    exact_marginals, exact_posterior, InferenceMethod, MarginalSet, DEFAULT_ENUMERATION_CAP,
};
pub use learning::{
    build_windows, estimate_cpds, k2_score, learn_structure, ScoreCache, WindowRecord, Windows, DEFAULT_SMOOTHING,
};
pub use metrics::{accuracy, prediction_metrics, PredictionMetrics};
pub use model::{
    unroll, ConvexCpd, Dnm, DnmStructure, HistoryWindow, LagRef, NodeRole, UnrolledNetwork,
};
pub use network::{
    joint_probability, topological_order, validate_network, Assignment, BeliefNetwork, Cpt, Node, ValidationReport,
    Variable, VariableKind, Violation, ViolationKind,
};
pub use persist::{load_model, save_model, SavedModel, StructureSpec, SCHEMA_VERSION};
pub use preprocess::{
    discretize, encode, fit_codings, load_csv, load_csv_path, representative_values, BinMethod, BinSpec,
    ColumnCoding, ColumnKind, ColumnSchema, DiscreteSeries, Schema, TimeSeriesTable, DEFAULT_BINS,
};
pub use rolling::{
    rolling_forecast_evaluate, MetricsReport, RollingOptions, RollingResult, UpdateMode, VariableMetrics,
};
