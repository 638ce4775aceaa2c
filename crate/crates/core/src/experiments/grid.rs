//! Penalty rate and path-length cap over a grid of `(k, zeta)` guarantees.

use serde::{Deserialize, Serialize};

use crate::economics::Timing;
use crate::error::Result;
use crate::penalty::PenaltyParams;

/// The 27 `(k, zeta)` pairs of the reference grid: for each `k`, a
/// guarantee allowing 20 hops, one allowing 10 and one allowing 2.
pub const GUARANTEE_GRID: [(f64, f64); 27] = [
    (0.005, 0.00025),
    (0.005, 0.0005),
    (0.005, 0.0025),
    (0.01, 0.0005),
    (0.01, 0.001),
    (0.01, 0.005),
    (0.05, 0.0025),
    (0.05, 0.005),
    (0.05, 0.025),
    (0.1, 0.005),
    (0.1, 0.01),
    (0.1, 0.05),
    (0.25, 0.0125),
    (0.25, 0.025),
    (0.25, 0.1125),
    (0.5, 0.025),
    (0.5, 0.05),
    (0.5, 0.2),
    (0.75, 0.0375),
    (0.75, 0.075),
    (0.75, 0.3),
    (1.0, 0.05),
    (1.0, 0.1),
    (1.0, 0.5),
    (2.0, 0.1),
    (2.0, 0.2),
    (2.0, 0.95),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeRow {
    pub k: f64,
    pub zeta: f64,
    pub gamma: f64,
    pub n_max: usize,
}

/// Evaluates the rate and the path cap for every pair.
pub fn guarantee_grid(timing: Timing, pairs: &[(f64, f64)]) -> Result<Vec<GuaranteeRow>> {
    pairs
        .iter()
        .map(|&(k, zeta)| {
            let p = PenaltyParams::from_guarantee(k, zeta, timing)?;
            Ok(GuaranteeRow {
                k,
                zeta,
                gamma: p.gamma,
                n_max: p.max_len,
            })
        })
        .collect()
}
