//! Sampled-median Misra-Gries baseline.
//!
//! When a new flow arrives at a full table, the median of a small counter
//! sample is subtracted from every counter and the non-positive ones are
//! dropped. The subtraction pass touches the whole table.

use std::collections::HashMap;

use rand::Rng;

use super::FrequencyEstimator;
use crate::error::{Error, Result};
use crate::rng::{self, SquidRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmedSampling {
    /// The first counters of the array.
    FirstElements,
    /// Counters drawn uniformly with replacement.
    Random,
}

#[derive(Debug, Clone)]
pub struct Smed {
    counters: Vec<(u64, u64)>,
    index: HashMap<u64, usize>,
    capacity: usize,
    sample_size: usize,
    sampling: SmedSampling,
    rng: SquidRng,
    buf: Vec<u64>,
    decrements: u64,
}

impl Smed {
    /// `C/ε` counters; samples of about `2·log2(n_hint/δ)` counters (odd).
    pub fn new(
        epsilon: f64,
        c_factor: f64,
        delta: f64,
        n_hint: u64,
        sampling: SmedSampling,
        seed: u64,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::param("epsilon", format!("{epsilon} is outside (0, 1)")));
        }
        if !(c_factor > 2.0 && c_factor.is_finite()) {
            return Err(Error::param("c_factor", format!("{c_factor} must exceed 2")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::param("delta", format!("{delta} is outside (0, 1)")));
        }
        let capacity = crate::sampling::ceil_tol(c_factor / epsilon);
        let raw = (2.0 * (n_hint.max(2) as f64 / delta).log2()).ceil() as usize;
        let sample_size = (raw | 1).min(capacity | 1);
        Ok(Self::with_capacity(capacity, sample_size, sampling, seed))
    }

    pub fn with_capacity(capacity: usize, sample_size: usize, sampling: SmedSampling, seed: u64) -> Self {
        Self {
            counters: Vec::with_capacity(capacity),
            index: HashMap::with_capacity(capacity),
            capacity: capacity.max(1),
            sample_size: sample_size.max(1),
            sampling,
            rng: rng::stream(seed, rng::STREAM_BASELINE),
            buf: Vec::with_capacity(sample_size),
            decrements: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    pub fn len(&self) -> usize {
        self.counters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counters.is_empty()
    }

    /// Number of median subtractions so far.
    pub fn decrements(&self) -> u64 {
        self.decrements
    }

    fn sample_median(&mut self) -> u64 {
        let n = self.counters.len();
        let s = self.sample_size.min(n);
        self.buf.clear();
        match self.sampling {
            SmedSampling::FirstElements => self.buf.extend(self.counters[..s].iter().map(|c| c.1)),
            SmedSampling::Random => {
                for _ in 0..s {
                    let i = self.rng.random_range(0..n);
                    self.buf.push(self.counters[i].1);
                }
            }
        }
        let mid = (self.buf.len() - 1) / 2;
        *self.buf.select_nth_unstable(mid).1
    }

    /// Subtracts `m` from every counter and drops the ones that reach zero.
    pub fn subtract(&mut self, m: u64) {
        self.decrements += 1;
        let mut i = 0;
        while i < self.counters.len() {
            let (id, count) = self.counters[i];
            if count <= m {
                self.index.remove(&id);
                self.counters.swap_remove(i);
                if i < self.counters.len() {
                    self.index.insert(self.counters[i].0, i);
                }
            } else {
                self.counters[i].1 = count - m;
                i += 1;
            }
        }
    }

    pub fn counters(&self) -> &[(u64, u64)] {
        &self.counters
    }
}

impl FrequencyEstimator for Smed {
    fn update(&mut self, id: u64, val: u64) -> Result<()> {
        if let Some(&i) = self.index.get(&id) {
            self.counters[i].1 += val;
            return Ok(());
        }
        if self.counters.len() == self.capacity {
            let m = self.sample_median();
            self.subtract(m);
        }
        self.index.insert(id, self.counters.len());
        self.counters.push((id, val));
        Ok(())
    }

    fn estimate(&self, id: u64) -> u64 {
        self.index.get(&id).map_or(0, |&i| self.counters[i].1)
    }

    fn name(&self) -> &'static str {
        match self.sampling {
            SmedSampling::FirstElements => "smed",
            SmedSampling::Random => "smed-random",
        }
    }
}
