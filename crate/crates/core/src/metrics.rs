//! Percentage forecast errors.
//!
//! For observations `O_t` and predictions `P_t`, the percent prediction error
//! is `PPE_t = 100 · (O_t - P_t) / O_t`. MPE averages the signed ratio and
//! measures bias; MAPE averages `|O_t - P_t| / |O_t|` and measures dispersion.
//! Steps with `O_t = 0` are left out of both averages.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionMetrics {
    pub mpe: f64,
    pub mape: f64,
    /// One entry per input step; `None` where the observation was zero.
    pub ppe: Vec<Option<f64>>,
    pub skipped_zero: usize,
    /// Steps that entered the averages.
    pub n: usize,
}

/// MPE, MAPE and the PPE series of `predicted` against `observed`.
///
/// ```
/// let m = dnm::prediction_metrics(&[100.0, 200.0], &[90.0, 220.0]).unwrap();
/// assert_eq!(m.mpe, 0.0);
/// assert!((m.mape - 0.1).abs() < 1e-15);
/// ```
pub fn prediction_metrics(observed: &[f64], predicted: &[f64]) -> Result<PredictionMetrics> {
    if observed.len() != predicted.len() || observed.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "need equal, non-zero lengths, got {} observations and {} predictions",
            observed.len(),
            predicted.len()
        )));
    }
    let mut signed = 0.0;
    let mut absolute = 0.0;
    let mut n = 0;
    let ppe = observed
        .iter()
        .zip(predicted)
        .map(|(&o, &p)| {
            if o == 0.0 {
                return None;
            }
            let ratio = (o - p) / o;
            signed += ratio;
            absolute += ratio.abs();
            n += 1;
            Some(100.0 * ratio)
        })
        .collect();
    if n == 0 {
        return Err(Error::AllZeroObservations);
    }
    Ok(PredictionMetrics {
        mpe: signed / n as f64,
        mape: absolute / n as f64,
        ppe,
        skipped_zero: observed.len() - n,
        n,
    })
}

/// Fraction of positions where the two state sequences agree.
pub fn accuracy(observed: &[usize], predicted: &[usize]) -> Result<f64> {
    if observed.len() != predicted.len() || observed.is_empty() {
        return Err(Error::InvalidArgument("need equal, non-zero lengths".into()));
    }
    let hits = observed.iter().zip(predicted).filter(|(o, p)| o == p).count();
    Ok(hits as f64 / observed.len() as f64)
}
