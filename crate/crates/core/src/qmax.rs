//! Top-q containers.
//!
//! All engines store every inserted value and answer with the q largest.
//! [`SquidStore`] and [`ExactStore`] append into a `q(1+γ)` array and run a
//! bulk maintenance when it fills; [`HeapStore`] keeps a q-entry min-heap.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rng::{self, SquidRng};
use crate::sampling::{self, SquidParams, DEFAULT_MAX_ATTEMPTS};

/// A stream item. Ordered by value, then id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Entry {
    pub id: u64,
    pub value: u64,
}

impl Entry {
    pub fn new(id: u64, value: u64) -> Self {
        Self { id, value }
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .cmp(&other.value)
            .then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Maintenance counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub maintenances: u64,
    /// Sampled pivots drawn.
    pub attempts: u64,
    pub fallbacks: u64,
    /// Values drawn for pivots; always `attempts * Z`.
    pub samples: u64,
    /// Element visits spent in maintenance (samples, partition and selection passes).
    pub work: u64,
}

/// Common interface over the engines.
pub trait QMax<T> {
    fn insert(&mut self, item: T);
    /// The `q` largest items inserted so far (fewer if fewer were inserted), in no particular order.
    fn top_q(&self) -> Vec<T>;
    /// A value such that every current top-q item is at least as large.
    /// `None` until the container first discards anything.
    fn threshold(&self) -> Option<T>;
    fn q(&self) -> usize;
    /// Items currently held.
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn stats(&self) -> Stats;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Engine {
    Squid,
    Exact,
    Heap,
}

impl Engine {
    pub const ALL: [Engine; 3] = [Engine::Squid, Engine::Exact, Engine::Heap];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Squid => "squid",
            Engine::Exact => "exact",
            Engine::Heap => "heap",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squid" => Ok(Engine::Squid),
            "exact" => Ok(Engine::Exact),
            "heap" => Ok(Engine::Heap),
            other => Err(Error::param("engine", format!("unknown engine {other:?}"))),
        }
    }
}

/// Builds a boxed container. The heap engine ignores `gamma`, `alpha` and `delta`.
pub fn new_qmax<T: Ord + Copy + 'static>(
    engine: Engine,
    q: usize,
    gamma: f64,
    alpha: f64,
    delta: f64,
    seed: u64,
) -> Result<Box<dyn QMax<T>>> {
    Ok(match engine {
        Engine::Squid => Box::new(SquidStore::new(q, gamma, alpha, delta, seed)?),
        Engine::Exact => Box::new(ExactStore::new(q, gamma)?),
        Engine::Heap => Box::new(HeapStore::new(q)?),
    })
}

/// Sampled-pivot engine.
#[derive(Debug, Clone)]
pub struct SquidStore<T> {
    slots: Vec<T>,
    capacity: usize,
    /// End of the survivor prefix left by the last maintenance.
    guard: usize,
    params: SquidParams,
    max_attempts: usize,
    rng: SquidRng,
    sample_buf: Vec<T>,
    last_pivot: Option<T>,
    stats: Stats,
}

impl<T: Ord + Copy> SquidStore<T> {
    pub fn new(q: usize, gamma: f64, alpha: f64, delta: f64, seed: u64) -> Result<Self> {
        let params = SquidParams::derive(q, gamma, alpha, delta)?;
        Ok(Self::with_params(params, seed))
    }

    pub fn with_params(params: SquidParams, seed: u64) -> Self {
        let capacity = params.capacity();
        Self {
            slots: Vec::with_capacity(capacity),
            capacity,
            guard: 0,
            params,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            rng: rng::stream(seed, rng::STREAM_STORE),
            sample_buf: Vec::with_capacity(params.sample_size()),
            last_pivot: None,
            stats: Stats::default(),
        }
    }

    /// Sets how many sampled pivots may fail before exact selection (at least 1).
    pub fn with_max_attempts(mut self, max_attempts: usize) -> Self {
        self.max_attempts = max_attempts.max(1);
        self
    }

    pub fn params(&self) -> &SquidParams {
        &self.params
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Insertion cursor (number of occupied slots).
    pub fn cursor(&self) -> usize {
        self.slots.len()
    }

    pub fn guard(&self) -> usize {
        self.guard
    }

    pub fn slots(&self) -> &[T] {
        &self.slots
    }

    fn maintain(&mut self) {
        let outcome = sampling::run_maintenance_with(
            &mut self.slots,
            &self.params,
            self.max_attempts,
            &mut self.rng,
            &mut self.sample_buf,
        );
        let z = self.params.sample_size() as u64;
        let len = self.slots.len() as u64;
        let attempts = outcome.attempts as u64;
        self.stats.maintenances += 1;
        self.stats.attempts += attempts;
        self.stats.samples += attempts * z;
        self.stats.work += attempts * (z + len);
        if outcome.used_exact_fallback {
            self.stats.fallbacks += 1;
            self.stats.work += len;
        }
        let keep = self.slots.len() - outcome.evicted;
        self.slots.truncate(keep);
        self.guard = keep;
        self.last_pivot = Some(outcome.pivot);
    }
}

impl<T: Ord + Copy> QMax<T> for SquidStore<T> {
    #[inline]
    fn insert(&mut self, item: T) {
        self.slots.push(item);
        if self.slots.len() == self.capacity {
            self.maintain();
        }
    }

    fn top_q(&self) -> Vec<T> {
        top_of(&self.slots, self.params.q)
    }

    fn threshold(&self) -> Option<T> {
        self.last_pivot
    }

    fn q(&self) -> usize {
        self.params.q
    }

    fn len(&self) -> usize {
        self.slots.len()
    }

    fn stats(&self) -> Stats {
        self.stats
    }
}

/// Exact-selection engine: each maintenance keeps exactly the q largest.
#[derive(Debug, Clone)]
pub struct ExactStore<T> {
    slots: Vec<T>,
    q: usize,
    capacity: usize,
    boundary: Option<T>,
    stats: Stats,
}

impl<T: Ord + Copy> ExactStore<T> {
    pub fn new(q: usize, gamma: f64) -> Result<Self> {
        if q == 0 {
            return Err(Error::param("q", "must be at least 1"));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::param("gamma", format!("{gamma} is not a positive real")));
        }
        let capacity = q + sampling::ceil_tol(q as f64 * gamma).max(1);
        Ok(Self {
            slots: Vec::with_capacity(capacity),
            q,
            capacity,
            boundary: None,
            stats: Stats::default(),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }
}

impl<T: Ord + Copy> QMax<T> for ExactStore<T> {
    #[inline]
    fn insert(&mut self, item: T) {
        self.slots.push(item);
        if self.slots.len() == self.capacity {
            let boundary = sampling::keep_largest(&mut self.slots, self.q);
            self.stats.maintenances += 1;
            self.stats.work += self.capacity as u64;
            self.slots.truncate(self.q);
            self.boundary = Some(boundary);
        }
    }

    fn top_q(&self) -> Vec<T> {
        top_of(&self.slots, self.q)
    }

    fn threshold(&self) -> Option<T> {
        self.boundary
    }

    fn q(&self) -> usize {
        self.q
    }

    fn len(&self) -> usize {
        self.slots.len()
    }

    fn stats(&self) -> Stats {
        self.stats
    }
}

/// Min-heap of the q largest.
#[derive(Debug, Clone)]
pub struct HeapStore<T> {
    heap: BinaryHeap<Reverse<T>>,
    q: usize,
    stats: Stats,
}

impl<T: Ord + Copy> HeapStore<T> {
    pub fn new(q: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::param("q", "must be at least 1"));
        }
        Ok(Self {
            heap: BinaryHeap::with_capacity(q),
            q,
            stats: Stats::default(),
        })
    }
}

impl<T: Ord + Copy> QMax<T> for HeapStore<T> {
    #[inline]
    fn insert(&mut self, item: T) {
        if self.heap.len() < self.q {
            self.heap.push(Reverse(item));
        } else if let Some(mut min) = self.heap.peek_mut() {
            if item > min.0 {
                *min = Reverse(item);
            }
        }
    }

    fn top_q(&self) -> Vec<T> {
        self.heap.iter().map(|r| r.0).collect()
    }

    fn threshold(&self) -> Option<T> {
        if self.heap.len() == self.q {
            self.heap.peek().map(|r| r.0)
        } else {
            None
        }
    }

    fn q(&self) -> usize {
        self.q
    }

    fn len(&self) -> usize {
        self.heap.len()
    }

    fn stats(&self) -> Stats {
        self.stats
    }
}

fn top_of<T: Ord + Copy>(items: &[T], q: usize) -> Vec<T> {
    let mut out = items.to_vec();
    if out.len() > q {
        sampling::keep_largest(&mut out, q);
        out.truncate(q);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn sorted_values<T: Ord + Copy>(mut v: Vec<T>) -> Vec<T> {
        v.sort_unstable();
        v
    }

    fn oracle(values: &[u64], q: usize) -> Vec<u64> {
        let mut v = values.to_vec();
        v.sort_unstable_by(|a, b| b.cmp(a));
        v.truncate(q);
        sorted_values(v)
    }

    #[test]
    fn construction_sizes() {
        let s = SquidStore::<u64>::new(100, 0.25, 0.83, 0.1, 1).unwrap();
        assert_eq!(s.capacity(), 125);
        let e = ExactStore::<u64>::new(100, 0.25).unwrap();
        assert_eq!(e.capacity(), 125);
        let h = HeapStore::<u64>::new(10).unwrap();
        assert_eq!(h.q(), 10);
        assert!(h.is_empty());
        assert!(new_qmax::<u64>(Engine::Heap, 0, 1.0, 0.8, 0.1, 0).is_err());
    }

    #[test]
    fn one_maintenance_after_two_q_inserts() {
        let q = 64;
        let mut s = SquidStore::new(q, 1.0, 0.8, 0.1, 3).unwrap();
        for v in 0..2 * q as u64 {
            s.insert(v);
        }
        assert_eq!(s.stats().maintenances, 1);
        assert!(s.guard() <= s.cursor() && s.cursor() <= s.capacity());
    }

    #[test]
    fn full_heap_ignores_small_values() {
        let mut h = HeapStore::new(3).unwrap();
        for v in [10u64, 20, 30] {
            h.insert(v);
        }
        h.insert(5);
        assert_eq!(sorted_values(h.top_q()), vec![10, 20, 30]);
        assert_eq!(h.threshold(), Some(10));
    }

    #[test]
    fn small_examples() {
        for engine in Engine::ALL {
            let mut c = new_qmax::<u64>(engine, 3, 1.0, 0.8, 0.1, 9).unwrap();
            for v in 1..=10 {
                c.insert(v);
            }
            assert_eq!(sorted_values(c.top_q()), vec![8, 9, 10], "{engine}");

            let mut c = new_qmax::<Entry>(engine, 2, 1.0, 0.8, 0.1, 9).unwrap();
            for id in 0..4 {
                c.insert(Entry::new(id, 5));
            }
            let top = c.top_q();
            assert_eq!(top.len(), 2);
            assert!(top.iter().all(|e| e.value == 5), "{engine}");
        }
    }

    #[test]
    fn matches_sort_oracle_at_scale() {
        let q = 1000;
        let mut rng = rng::stream(17, 0);
        let values: Vec<u64> = (0..100_000).map(|_| rng.random()).collect();
        let expected = oracle(&values, q);
        for engine in Engine::ALL {
            let mut c = new_qmax::<u64>(engine, q, 0.5, 0.8, 0.1, 4).unwrap();
            values.iter().for_each(|&v| c.insert(v));
            assert_eq!(sorted_values(c.top_q()), expected, "{engine}");
        }
    }

    #[test]
    fn samples_equal_attempts_times_z() {
        let mut s = SquidStore::new(500, 0.25, 0.8, 0.1, 5).unwrap();
        let mut rng = rng::stream(5, 9);
        for _ in 0..200_000 {
            s.insert(rng.random_range(0..1000u64));
        }
        let st = s.stats();
        assert!(st.maintenances > 100);
        assert_eq!(st.samples, st.attempts * s.params().sample_size() as u64);
        assert!(st.attempts >= st.maintenances);
    }

    #[test]
    fn threshold_bounds_top_q() {
        let mut s = SquidStore::new(200, 0.5, 0.8, 0.1, 8).unwrap();
        let mut rng = rng::stream(8, 9);
        for _ in 0..50_000 {
            s.insert(rng.random::<u32>() as u64);
            if let Some(t) = s.threshold() {
                if s.len() >= 200 {
                    assert!(s.top_q().iter().all(|&v| v >= t));
                }
            }
        }
    }

    #[test]
    fn engine_names_round_trip() {
        for e in Engine::ALL {
            assert_eq!(e.name().parse::<Engine>().unwrap(), e);
        }
        assert!("quick".parse::<Engine>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn engines_agree(values in prop::collection::vec(0u64..200, 0..3000), q in 1usize..40, seed in any::<u64>()) {
            let expected = oracle(&values, q);
            for engine in Engine::ALL {
                let mut c = new_qmax::<u64>(engine, q, 0.3, 0.75, 0.2, seed).unwrap();
                values.iter().for_each(|&v| c.insert(v));
                prop_assert_eq!(sorted_values(c.top_q()), expected.clone());
            }
        }
    }
}
