//! Sampled pivot selection.
//!
//! A store of `q(1+γ)` values is cleared by picking a pivot that is smaller
//! than at least `q` values (so the top-q survive) and larger than at least
//! `qγη` values (so the maintenance frees a useful amount of room). The pivot
//! is the `k`-th smallest of `Z` values drawn uniformly with replacement.
//! Verified maintenance repeats the draw until the partition lands inside the
//! window and falls back to exact selection after a fixed number of misses.

use rand::Rng;

use crate::error::{Error, Result};

/// Number of failed sampled pivots tolerated before exact selection.
pub const DEFAULT_MAX_ATTEMPTS: usize = 2;

/// Rounds up, ignoring float noise below one part in 10^9.
pub(crate) fn ceil_tol(x: f64) -> usize {
    let slack = 1e-9 * x.abs().max(1.0);
    (x - slack).ceil().max(0.0) as usize
}

/// Sampling parameters derived from `(q, γ, α, δ)`.
///
/// `k` and `z` are kept unrounded; [`rank`](Self::rank) and
/// [`sample_size`](Self::sample_size) give the integers used at run time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquidParams {
    pub q: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub delta: f64,
    pub k: f64,
    pub z: f64,
    pub eta: f64,
}

impl SquidParams {
    /// `k = 2α·ln(2/δ)/(1−α)²`, `Z = k(1+γ)/(γα)` and
    /// `η = ((α+1)² + (α−1)·√(α²+14α+1))/4`.
    pub fn derive(q: usize, gamma: f64, alpha: f64, delta: f64) -> Result<Self> {
        if q == 0 {
            return Err(Error::param("q", "must be at least 1"));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::param("gamma", format!("{gamma} is not a positive real")));
        }
        if !(alpha > 0.5 && alpha < 1.0) {
            return Err(Error::param("alpha", format!("{alpha} is outside (1/2, 1)")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::param("delta", format!("{delta} is outside (0, 1)")));
        }
        let k = 2.0 * alpha * (2.0 / delta).ln() / (1.0 - alpha).powi(2);
        let z = k * (1.0 + gamma) / (gamma * alpha);
        let eta = 0.25
            * ((alpha + 1.0).powi(2) + (alpha - 1.0) * (alpha * alpha + 14.0 * alpha + 1.0).sqrt());
        Ok(Self {
            q,
            gamma,
            alpha,
            delta,
            k,
            z,
            eta,
        })
    }

    /// Order statistic index of the pivot within the sample (1-based).
    pub fn rank(&self) -> usize {
        ceil_tol(self.k).max(1)
    }

    /// Number of values drawn per pivot attempt.
    pub fn sample_size(&self) -> usize {
        ceil_tol(self.z).max(self.rank())
    }

    /// Room beyond `q`: `⌈qγ⌉` slots, at least one.
    pub fn slack(&self) -> usize {
        ceil_tol(self.q as f64 * self.gamma).max(1)
    }

    /// Store size `q + ⌈qγ⌉`.
    pub fn capacity(&self) -> usize {
        self.q + self.slack()
    }

    /// Accepted range of strictly-below counts for a store of `len` values.
    pub fn window_for(&self, len: usize) -> (usize, usize) {
        let upper = len.saturating_sub(self.q);
        let lower = ceil_tol(self.q as f64 * self.gamma * self.eta).max(1);
        (lower.min(upper), upper)
    }

    /// Accepted range of strictly-below counts for a full store.
    pub fn clearance_window(&self) -> (usize, usize) {
        self.window_for(self.capacity())
    }
}

/// Result of one maintenance pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PivotOutcome<T> {
    pub pivot: T,
    /// Values strictly below `pivot` in the whole store.
    pub count_below: usize,
    /// Slots released at the end of the store.
    pub evicted: usize,
    /// Sampled pivots drawn (the exact fallback is not counted).
    pub attempts: usize,
    pub used_exact_fallback: bool,
}

/// The `rank`-th smallest of `samples` draws (with replacement) from
/// `value_at(0..len)`. `buf` is scratch space.
pub fn sample_order_statistic_by<T, F, R>(
    len: usize,
    value_at: F,
    rank: usize,
    samples: usize,
    rng: &mut R,
    buf: &mut Vec<T>,
) -> T
where
    T: Ord + Copy,
    F: Fn(usize) -> T,
    R: Rng + ?Sized,
{
    assert!(len > 0, "cannot sample from an empty store");
    assert!(
        rank >= 1 && rank <= samples,
        "rank {rank} outside 1..={samples}"
    );
    buf.clear();
    buf.extend((0..samples).map(|_| value_at(rng.random_range(0..len))));
    *buf.select_nth_unstable(rank - 1).1
}

/// The `rank`-th smallest of `samples` uniform draws from `values`.
pub fn sample_order_statistic<T: Ord + Copy, R: Rng + ?Sized>(
    values: &[T],
    rank: usize,
    samples: usize,
    rng: &mut R,
) -> T {
    let mut buf = Vec::with_capacity(samples);
    sample_order_statistic_by(values.len(), |i| values[i], rank, samples, rng, &mut buf)
}

/// Draws a pivot from `values` using the rank and sample size of `params`.
pub fn sample_pivot<T: Ord + Copy, R: Rng + ?Sized>(
    values: &[T],
    params: &SquidParams,
    rng: &mut R,
) -> T {
    sample_order_statistic(values, params.rank(), params.sample_size(), rng)
}

/// Moves every value `>= pivot` to the front and returns how many values are
/// strictly below it (they end up in the suffix).
pub fn partition_by_pivot<T: Ord + Copy>(array: &mut [T], pivot: T) -> usize {
    let mut lo = 0;
    let mut hi = array.len();
    loop {
        while lo < hi && array[lo] >= pivot {
            lo += 1;
        }
        while lo < hi && array[hi - 1] < pivot {
            hi -= 1;
        }
        if lo + 1 >= hi {
            break;
        }
        array.swap(lo, hi - 1);
        lo += 1;
        hi -= 1;
    }
    array.len() - lo
}

/// The `rank`-th smallest value (1-based). Reorders `values`.
pub fn select_exact<T: Ord + Copy>(values: &mut [T], rank: usize) -> Result<T> {
    if rank == 0 || rank > values.len() {
        return Err(Error::RankOutOfRange {
            rank,
            len: values.len(),
        });
    }
    Ok(*values.select_nth_unstable(rank - 1).1)
}

/// Arranges `store` so its first `keep` positions hold the `keep` largest
/// values. Returns the boundary value (the `keep`-th largest).
pub(crate) fn keep_largest<T: Ord + Copy>(store: &mut [T], keep: usize) -> T {
    debug_assert!(keep >= 1 && keep <= store.len());
    *store.select_nth_unstable_by(keep - 1, |a, b| b.cmp(a)).1
}

/// Verified maintenance over a full store; see [`run_maintenance_with`].
pub fn run_maintenance<T: Ord + Copy, R: Rng + ?Sized>(
    store: &mut [T],
    params: &SquidParams,
    max_attempts: usize,
    rng: &mut R,
) -> PivotOutcome<T> {
    let mut buf = Vec::with_capacity(params.sample_size());
    run_maintenance_with(store, params, max_attempts, rng, &mut buf)
}

/// Samples, partitions and checks until the strictly-below count falls in
/// the clearance window; after `max_attempts` misses the exact `q`-th largest
/// value is used instead. On return `store[..store.len() - evicted]` contains
/// the `q` largest values of the store.
pub fn run_maintenance_with<T: Ord + Copy, R: Rng + ?Sized>(
    store: &mut [T],
    params: &SquidParams,
    max_attempts: usize,
    rng: &mut R,
    buf: &mut Vec<T>,
) -> PivotOutcome<T> {
    let len = store.len();
    assert!(
        len > params.q,
        "maintenance needs more than q = {} values, got {len}",
        params.q
    );
    let (lower, upper) = params.window_for(len);
    let (rank, samples) = (params.rank(), params.sample_size());

    let mut attempts = 0;
    while attempts < max_attempts.max(1) {
        attempts += 1;
        let pivot = sample_order_statistic_by(len, |i| store[i], rank, samples, rng, buf);
        let below = partition_by_pivot(store, pivot);
        if (lower..=upper).contains(&below) {
            return PivotOutcome {
                pivot,
                count_below: below,
                evicted: below,
                attempts,
                used_exact_fallback: false,
            };
        }
    }

    // Exact fallback. Ties at the boundary may leave no strictly-smaller
    // values; the suffix beyond `q` is released regardless.
    let pivot = keep_largest(store, params.q);
    let count_below = store[params.q..].iter().filter(|&&v| v < pivot).count();
    PivotOutcome {
        pivot,
        count_below,
        evicted: len - params.q,
        attempts,
        used_exact_fallback: true,
    }
}

/// Outcome of repeated single pivot draws against the clearance window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowCheck {
    pub trials: u64,
    /// Pivots leaving fewer than the lower window bound below them.
    pub too_low: u64,
    /// Pivots leaving fewer than `q` values at or above them.
    pub too_high: u64,
}

impl WindowCheck {
    pub fn failures(&self) -> u64 {
        self.too_low + self.too_high
    }

    pub fn rate(&self) -> f64 {
        self.failures() as f64 / self.trials as f64
    }
}

/// Draws one pivot per trial from a fresh array of `capacity()` random
/// 64-bit values and checks the strictly-below count against the window.
pub fn window_check<R: Rng + ?Sized>(params: &SquidParams, trials: u64, rng: &mut R) -> WindowCheck {
    let len = params.capacity();
    let (lower, upper) = params.clearance_window();
    let mut values = vec![0u64; len];
    let mut buf = Vec::with_capacity(params.sample_size());
    let mut out = WindowCheck {
        trials,
        too_low: 0,
        too_high: 0,
    };
    for _ in 0..trials {
        values.iter_mut().for_each(|v| *v = rng.random());
        let pivot = sample_order_statistic_by(len, |i| values[i], params.rank(), params.sample_size(), rng, &mut buf);
        let below = values.iter().filter(|&&v| v < pivot).count();
        if below < lower {
            out.too_low += 1;
        } else if below > upper {
            out.too_high += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::Rng;

    #[test]
    fn golden_parameters() {
        let p = SquidParams::derive(1_000_000, 1.0, 0.8, 0.1).unwrap();
        assert_eq!(p.rank(), 120);
        assert_eq!(p.sample_size(), 300);
        assert!((p.eta - 0.631).abs() < 1e-3);

        let p = SquidParams::derive(1_000_000, 1.0, 0.8, 0.001).unwrap();
        assert!((p.k - 304.036).abs() < 1e-3);
        assert_eq!(p.rank(), 305);
        assert_eq!(p.sample_size(), 761);

        // Reference values from evaluating the closed forms independently.
        let p = SquidParams::derive(10, 0.5, 0.6, 0.05).unwrap();
        assert!((p.k - 27.666_595_905_854_514).abs() < 1e-9);
        assert!((p.z - 138.332_979_529_272_6).abs() < 1e-9);
        assert!((p.eta - 0.327_590_012_963_733_9).abs() < 1e-12);
        assert_eq!(p.rank(), 28);
    }

    #[test]
    fn eta_bounds() {
        for i in 1..100 {
            let alpha = 0.5 + 0.5 * i as f64 / 100.0;
            let p = SquidParams::derive(10, 1.0, alpha, 0.1).unwrap();
            assert!(p.eta >= 2.0 * alpha - 1.0 - 1e-12, "alpha {alpha}");
            assert!(p.eta < alpha);
            assert!(p.eta > 0.0);
        }
    }

    #[test]
    fn parameter_errors_name_the_culprit() {
        let name = |r: Result<SquidParams>| match r {
            Err(Error::Param { name, .. }) => name,
            other => panic!("expected a parameter error, got {other:?}"),
        };
        assert_eq!(name(SquidParams::derive(0, 1.0, 0.8, 0.1)), "q");
        assert_eq!(name(SquidParams::derive(1, 0.0, 0.8, 0.1)), "gamma");
        assert_eq!(name(SquidParams::derive(1, 1.0, 0.5, 0.1)), "alpha");
        assert_eq!(name(SquidParams::derive(1, 1.0, 1.0, 0.1)), "alpha");
        assert_eq!(name(SquidParams::derive(1, 1.0, 0.8, 1.0)), "delta");
        assert_eq!(name(SquidParams::derive(1, 1.0, 0.8, 0.0)), "delta");
    }

    #[test]
    fn sample_size_monotone() {
        let deltas = [0.5, 0.2, 0.1, 0.01, 0.001];
        for w in deltas.windows(2) {
            let a = SquidParams::derive(100, 1.0, 0.8, w[0]).unwrap();
            let b = SquidParams::derive(100, 1.0, 0.8, w[1]).unwrap();
            assert!(a.z < b.z && a.k < b.k);
        }
        let gammas = [0.1, 0.25, 0.5, 1.0];
        for w in gammas.windows(2) {
            let a = SquidParams::derive(100, w[0], 0.8, 0.1).unwrap();
            let b = SquidParams::derive(100, w[1], 0.8, 0.1).unwrap();
            assert!(a.z > b.z);
        }
    }

    #[test]
    fn capacity_and_window() {
        let p = SquidParams::derive(100, 0.25, 0.83, 0.1).unwrap();
        assert_eq!(p.capacity(), 125);
        let (lo, hi) = p.clearance_window();
        assert_eq!(hi, 25);
        assert_eq!(lo, (25.0 * p.eta).ceil() as usize);
    }

    #[test]
    fn pivot_matches_sorted_draws() {
        let values: Vec<u64> = (1..=200).collect();
        let mut rng = rng::stream(99, 0);
        let mut replay = rng.clone();
        let pivot = sample_order_statistic(&values, 8, 20, &mut rng);
        let mut drawn: Vec<u64> = (0..20)
            .map(|_| values[replay.random_range(0..values.len())])
            .collect();
        drawn.sort_unstable();
        assert_eq!(pivot, drawn[7]);
    }

    #[test]
    fn pivot_edge_cases() {
        let mut rng = rng::stream(1, 0);
        assert_eq!(sample_order_statistic(&[7u64; 50], 3, 9, &mut rng), 7);

        let values: Vec<u64> = (1..=10).collect();
        let mut replay = rng.clone();
        let pivot = sample_order_statistic(&values, 1, 10, &mut rng);
        let min = (0..10)
            .map(|_| values[replay.random_range(0..10)])
            .min()
            .unwrap();
        assert_eq!(pivot, min);
    }

    #[test]
    fn partition_examples() {
        let mut a = [5u64, 1, 9, 3, 7];
        assert_eq!(partition_by_pivot(&mut a, 5), 2);
        let mut head = a[..3].to_vec();
        head.sort_unstable();
        assert_eq!(head, vec![5, 7, 9]);

        let mut b = [3i64, -2, 8];
        assert_eq!(partition_by_pivot(&mut b, i64::MIN), 0);

        let mut c = [4u64, 4, 4];
        assert_eq!(partition_by_pivot(&mut c, 4), 0);

        let mut empty: [u64; 0] = [];
        assert_eq!(partition_by_pivot(&mut empty, 1), 0);
    }

    #[test]
    fn select_examples() {
        assert_eq!(select_exact(&mut [9u64, 2, 5, 7], 2).unwrap(), 5);
        assert_eq!(select_exact(&mut [9u64, 2, 5, 7], 1).unwrap(), 2);
        assert_eq!(select_exact(&mut [9u64, 2, 5, 7], 4).unwrap(), 9);
        assert!(matches!(
            select_exact(&mut [1u64], 0),
            Err(Error::RankOutOfRange { rank: 0, len: 1 })
        ));
        assert!(select_exact(&mut [1u64], 2).is_err());
    }

    fn top_q_sorted(values: &[u64], q: usize) -> Vec<u64> {
        let mut v = values.to_vec();
        v.sort_unstable_by(|a, b| b.cmp(a));
        v.truncate(q);
        v.sort_unstable();
        v
    }

    #[test]
    fn maintenance_keeps_top_q_of_shuffled_range() {
        let q = 500;
        let params = SquidParams::derive(q, 1.0, 0.8, 0.1).unwrap();
        let mut rng = rng::stream(3, 0);
        for _ in 0..50 {
            let mut store: Vec<u64> = (0..2 * q as u64).collect();
            store.shuffle(&mut rng);
            let out = run_maintenance(&mut store, &params, DEFAULT_MAX_ATTEMPTS, &mut rng);
            let kept = &store[..store.len() - out.evicted];
            assert!(kept.len() >= q);
            for v in q as u64..2 * q as u64 {
                assert!(kept.contains(&v));
            }
        }
    }

    #[test]
    fn all_ties_force_exact_fallback() {
        let params = SquidParams::derive(10, 1.0, 0.8, 0.1).unwrap();
        let mut store = vec![42u64; params.capacity()];
        let mut rng = rng::stream(5, 0);
        let out = run_maintenance(&mut store, &params, 2, &mut rng);
        assert!(out.used_exact_fallback);
        assert_eq!(out.count_below, 0);
        assert_eq!(out.attempts, 2);
        assert_eq!(out.evicted, params.slack());
    }

    #[test]
    fn first_attempt_failure_rate() {
        let q = 1000;
        let params = SquidParams::derive(q, 1.0, 0.8, 0.1).unwrap();
        let (lo, hi) = params.clearance_window();
        let mut rng = rng::stream(11, 0);
        let values: Vec<u64> = (0..params.capacity() as u64).collect();
        let trials = 10_000;
        let failures = (0..trials)
            .filter(|_| {
                // With distinct values 0..n the pivot equals its strictly-below count.
                let below = sample_pivot(&values, &params, &mut rng) as usize;
                !(lo..=hi).contains(&below)
            })
            .count();
        assert!((failures as f64 / trials as f64) <= 0.1);
    }

    #[test]
    fn window_check_counts_both_sides() {
        let params = SquidParams::derive(200, 1.0, 0.8, 0.1).unwrap();
        let c = window_check(&params, 2000, &mut rng::stream(3, 0));
        assert_eq!(c.trials, 2000);
        assert!(c.rate() <= 0.1);
        // a far too small sample misses often
        let loose = SquidParams { k: 1.0, z: 2.0, ..params };
        let c = window_check(&loose, 2000, &mut rng::stream(3, 0));
        assert!(c.too_low > 0 && c.too_high > 0, "{c:?}");
    }

    #[test]
    fn identical_seeds_identical_outcomes() {
        let params = SquidParams::derive(100, 0.5, 0.75, 0.2).unwrap();
        let make = || {
            let mut rng = rng::stream(77, 0);
            let mut store: Vec<u64> = (0..params.capacity() as u64).map(|x| x * 7919 % 1013).collect();
            run_maintenance(&mut store, &params, 2, &mut rng)
        };
        assert_eq!(make(), make());
    }

    proptest! {
        #[test]
        fn partition_conserves_and_counts(mut values in prop::collection::vec(0u64..50, 0..200), pivot in 0u64..55) {
            let mut before = values.clone();
            let expected = values.iter().filter(|&&v| v < pivot).count();
            let below = partition_by_pivot(&mut values, pivot);
            prop_assert_eq!(below, expected);
            let split = values.len() - below;
            prop_assert!(values[..split].iter().all(|&v| v >= pivot));
            prop_assert!(values[split..].iter().all(|&v| v < pivot));
            before.sort_unstable();
            values.sort_unstable();
            prop_assert_eq!(before, values);
        }

        #[test]
        fn maintenance_is_exact(seed in any::<u64>(), q in 1usize..60, gamma in 0.1f64..1.0, dup in 1u64..1000) {
            let params = SquidParams::derive(q, gamma, 0.8, 0.2).unwrap();
            let mut rng = rng::stream(seed, 0);
            let mut store: Vec<u64> = (0..params.capacity()).map(|_| rng.random_range(0..dup)).collect();
            let expected = top_q_sorted(&store, q);
            let out = run_maintenance(&mut store, &params, 2, &mut rng);
            let kept = &store[..store.len() - out.evicted];
            prop_assert!(out.evicted >= 1);
            prop_assert_eq!(top_q_sorted(kept, q), expected);
        }
    }
}
