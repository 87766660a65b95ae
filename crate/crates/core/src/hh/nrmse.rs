//! Replay against an exact oracle.

use std::collections::HashMap;

use super::FrequencyEstimator;
use crate::error::{Error, Result};

/// Error summary of one replay. Each packet's estimate is read right after
/// the packet is applied and compared to the exact prefix total.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ReplayReport {
    pub packets: u64,
    pub total_weight: u64,
    /// `sqrt(Σ err² / N) / N` with `N` the packet count.
    pub nrmse: f64,
    pub max_error: u64,
    pub underestimates: u64,
    pub overestimates: u64,
}

pub fn replay<E, I>(stream: I, estimator: &mut E) -> Result<ReplayReport>
where
    E: FrequencyEstimator + ?Sized,
    I: IntoIterator<Item = (u64, u64)>,
{
    let mut truth: HashMap<u64, u64> = HashMap::new();
    let mut report = ReplayReport::default();
    let mut sq = 0.0f64;
    for (id, val) in stream {
        estimator.update(id, val)?;
        let f = truth.entry(id).or_insert(0);
        *f += val;
        let est = estimator.estimate(id);
        let err = est.abs_diff(*f);
        match est.cmp(f) {
            std::cmp::Ordering::Less => report.underestimates += 1,
            std::cmp::Ordering::Greater => report.overestimates += 1,
            std::cmp::Ordering::Equal => {}
        }
        report.max_error = report.max_error.max(err);
        sq += (err as f64) * (err as f64);
        report.packets += 1;
        report.total_weight += val;
    }
    if report.packets == 0 {
        return Err(Error::EmptyStream);
    }
    let n = report.packets as f64;
    report.nrmse = (sq / n).sqrt() / n;
    Ok(report)
}

/// NRMSE of `estimator` over `stream`.
pub fn nrmse<E, I>(stream: I, estimator: &mut E) -> Result<f64>
where
    E: FrequencyEstimator + ?Sized,
    I: IntoIterator<Item = (u64, u64)>,
{
    replay(stream, estimator).map(|r| r.nrmse)
}
