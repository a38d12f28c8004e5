//! Observed convergence orders from refinement studies.

use serde::{Deserialize, Serialize};

/// Least-squares slope of `log(err)` against `log(h)`.
///
/// Needs at least two levels with positive finite `h` and `err`; returns
/// `None` otherwise.
pub fn observed_order(levels: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = levels
        .iter()
        .filter(|(h, e)| h.is_finite() && e.is_finite() && *h > 0.0 && *e > 0.0)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 || pts.len() != levels.len() {
        return None;
    }
    let m = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (mx / m, my / m);
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// Ratios `err(k) / err(k + 1)` between consecutive levels.
pub fn reduction_factors(levels: &[(f64, f64)]) -> Vec<f64> {
    levels.windows(2).map(|w| w[0].1 / w[1].1).collect()
}

/// One row of a refinement study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementLevel {
    pub n: usize,
    pub ds: f64,
    pub dt: f64,
    pub error: f64,
}

/// A refinement study and its fitted order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub quantity: String,
    pub levels: Vec<RefinementLevel>,
    pub order: Option<f64>,
}

impl ConvergenceTable {
    pub fn new(quantity: impl Into<String>, levels: Vec<RefinementLevel>) -> Self {
        let pairs: Vec<(f64, f64)> = levels.iter().map(|l| (l.ds, l.error)).collect();
        let order = observed_order(&pairs);
        Self {
            quantity: quantity.into(),
            levels,
            order,
        }
    }

    /// True when the fitted order lies within `band` of `target`.
    pub fn order_within(&self, target: f64, band: f64) -> bool {
        self.order.is_some_and(|p| (p - target).abs() <= band)
    }
}
