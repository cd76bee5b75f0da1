//! Capacity estimators: discrete Newtonian capacity and branching capacity by
//! Monte Carlo, and Riesz capacity of point clouds by energy minimization.

mod branching;
mod newtonian;
mod riesz;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use branching::{bcap_escape, bcap_hitting, EscapeParams, EscapeRegions, HittingParams};
pub use newtonian::{newtonian_cap, NewtonianParams};
pub use riesz::{
    brownian_path, bscap_surrogate, default_diagonal_kappa, refine_path, riesz_cap, RieszParams, RieszSolution,
    SnakeSurrogate,
};

use crate::stats::{batch_mean, linear_fit};

/// Estimate of a value at one scale (far distance or guard scale).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleValue {
    pub scale: f64,
    pub value: f64,
    pub stderr: f64,
}

/// Output of a Monte Carlo capacity estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub method: String,
    /// Description of the set the capacity refers to.
    pub set: String,
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
    pub params: BTreeMap<String, serde_json::Value>,
    pub truncated_fraction: f64,
    /// Per-batch values of the final estimate.
    pub batches: Vec<f64>,
    /// Unextrapolated values at each scale.
    pub scales: Vec<ScaleValue>,
    pub warnings: Vec<String>,
}

impl CapacityEstimate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("estimate serializes")
    }
}

/// Fit `v(ρ) = a + b·ρ^{-p}` and return `a`. With a single scale, `v` itself.
pub fn extrapolate(scales: &[f64], values: &[f64], p: f64) -> f64 {
    assert_eq!(scales.len(), values.len());
    if scales.len() == 1 {
        return values[0];
    }
    let x: Vec<f64> = scales.iter().map(|s| s.powf(-p)).collect();
    linear_fit(&x, values, None).intercept
}

/// Per-batch extrapolation followed by batch means.
pub(crate) fn extrapolate_batches(scales: &[f64], per_batch: &[Vec<f64>], p: f64) -> (f64, f64, Vec<f64>) {
    let batch_values: Vec<f64> = per_batch.iter().map(|v| extrapolate(scales, v, p)).collect();
    let (m, se) = batch_mean(&batch_values);
    (m, se, batch_values)
}

/// Run `count` independent tasks in parallel and return results in task order.
pub(crate) fn par_collect<T: Send>(count: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extrapolation_recovers_intercept() {
        let s = [4.0, 8.0, 16.0];
        let v: Vec<f64> = s.iter().map(|r| 2.0 + 3.0 / r).collect();
        assert!((extrapolate(&s, &v, 1.0) - 2.0).abs() < 1e-12);
        assert_eq!(extrapolate(&[5.0], &[1.5], 1.0), 1.5);
    }
}
