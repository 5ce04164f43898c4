//! Group performance and the variance-based disparity score.

use crate::diffusion::InfluenceEstimate;

/// Overall score `q_total` and one score per group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPerformance {
    pub q_total: f64,
    pub q_by_group: Vec<f64>,
    pub group_sizes: Vec<usize>,
}

/// Population variance of the per-group scores (divides by the number of
/// groups). Zero exactly when all groups score the same.
pub fn disparity(perf: &GroupPerformance) -> f64 {
    let q = &perf.q_by_group;
    if q.is_empty() {
        return 0.0;
    }
    // shifted by the first score so equal scores give exactly zero
    let c = q.len() as f64;
    let d: Vec<f64> = q.iter().map(|x| x - q[0]).collect();
    let mean = d.iter().sum::<f64>() / c;
    d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / c
}

pub fn influence_fractions(estimate: &InfluenceEstimate) -> GroupPerformance {
    GroupPerformance {
        q_total: estimate.total_fraction,
        q_by_group: estimate.per_group_fraction.clone(),
        group_sizes: estimate.group_sizes.clone(),
    }
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
