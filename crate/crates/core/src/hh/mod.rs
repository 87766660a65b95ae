//! Weighted heavy hitters.
//!
//! [`SquidHH`] keeps flow counters in a [`WaterLevelTable`]. A new flow
//! starts at `val + W`, so every counter overestimates its flow; maintenance
//! raises `W` to a sampled order statistic of all slot counters without
//! verifying it, and failure budgets come from a [`PhaseScheduler`].

mod nrmse;
mod smed;

use std::collections::HashMap;

pub use nrmse::{nrmse, replay, ReplayReport};
pub use smed::{Smed, SmedSampling};

use crate::cuckoo::{TableStats, WaterLevelTable, DEFAULT_KICK_BUDGET};
use crate::error::{Error, Result};
use crate::phase::PhaseScheduler;
use crate::sampling::{ceil_tol, SquidParams};

/// Anything that ingests weighted updates and answers point queries.
pub trait FrequencyEstimator {
    fn update(&mut self, id: u64, val: u64) -> Result<()>;
    fn estimate(&self, id: u64) -> u64;
    fn name(&self) -> &'static str;
}

/// Safe cuckoo load for bucket width `w`.
pub fn load_factor(w: usize) -> Option<f64> {
    match w {
        2 => Some(0.5),
        4 => Some(0.9),
        _ => None,
    }
}

/// Sizing and sampling controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HHParams {
    pub epsilon: f64,
    pub c_space: f64,
    pub w: usize,
    pub load: f64,
    pub d: usize,
    pub alpha: f64,
    pub delta: f64,
    pub m0: u64,
    pub gamma_eff: f64,
    pub kick_budget: usize,
}

impl HHParams {
    pub fn new(epsilon: f64, c_space: f64, w: usize) -> Result<Self> {
        let load = load_factor(w)
            .ok_or_else(|| Error::param("w", format!("no load factor known for width {w}; use 2 or 4")))?;
        Self::with_load(epsilon, c_space, w, load)
    }

    pub fn with_load(epsilon: f64, c_space: f64, w: usize, load: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::param("epsilon", format!("{epsilon} is outside (0, 1)")));
        }
        if !(c_space >= 1.0 && c_space.is_finite()) {
            return Err(Error::param("c_space", format!("{c_space} is below 1")));
        }
        if w == 0 {
            return Err(Error::param("w", "must be at least 1"));
        }
        if !(load > 0.0 && load <= 1.0) {
            return Err(Error::param("load", format!("{load} is outside (0, 1]")));
        }
        let gamma_eff = c_space / load - 1.0;
        if gamma_eff <= 0.0 {
            return Err(Error::param(
                "c_space",
                format!("c_space {c_space} must exceed the load factor {load}"),
            ));
        }
        let d = ceil_tol(c_space / (w as f64 * load * epsilon)).max(2);
        Ok(Self {
            epsilon,
            c_space,
            w,
            load,
            d,
            alpha: 0.8,
            delta: 0.01,
            m0: 1,
            gamma_eff,
            kick_budget: DEFAULT_KICK_BUDGET,
        })
    }

    pub fn sampling(mut self, alpha: f64, delta: f64, m0: u64) -> Self {
        self.alpha = alpha;
        self.delta = delta;
        self.m0 = m0;
        self
    }

    pub fn slots(&self) -> usize {
        self.w * self.d
    }

    /// Counters to protect, `⌈1/ε⌉`.
    pub fn q(&self) -> usize {
        ceil_tol(1.0 / self.epsilon)
    }

    /// Live-slot count that triggers maintenance, `⌊L·w·d⌋`.
    pub fn trigger(&self) -> usize {
        ((self.load * self.slots() as f64) + 1e-9).floor() as usize
    }
}

/// Counters of the maintenances run by [`SquidHH`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HHStats {
    pub maintenances: u64,
    pub emergency_maintenances: u64,
    pub samples: u64,
}

/// Water-level weighted heavy hitters.
#[derive(Debug, Clone)]
pub struct SquidHH {
    params: HHParams,
    table: WaterLevelTable<u64, ()>,
    scheduler: PhaseScheduler,
    trigger: usize,
    total_weight: u64,
    stats: HHStats,
    last_delta: Option<f64>,
}

impl SquidHH {
    pub fn new(params: HHParams, seed: u64) -> Result<Self> {
        // Validates alpha/delta early.
        SquidParams::derive(params.q(), params.gamma_eff, params.alpha, params.delta)?;
        let scheduler = PhaseScheduler::new(params.delta, params.m0, params.gamma_eff, params.alpha)?;
        let table = WaterLevelTable::new(params.w, params.d, seed)?.with_kick_budget(params.kick_budget);
        Ok(Self {
            trigger: params.trigger().max(1),
            params,
            table,
            scheduler,
            total_weight: 0,
            stats: HHStats::default(),
            last_delta: None,
        })
    }

    pub fn params(&self) -> &HHParams {
        &self.params
    }

    pub fn water_level(&self) -> u64 {
        self.table.water_level()
    }

    pub fn table(&self) -> &WaterLevelTable<u64, ()> {
        &self.table
    }

    pub fn table_stats(&self) -> TableStats {
        self.table.stats()
    }

    pub fn stats(&self) -> HHStats {
        self.stats
    }

    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    /// Failure budget used by the latest maintenance.
    pub fn last_delta(&self) -> Option<f64> {
        self.last_delta
    }

    /// Counter of a tracked flow, if it still holds a slot.
    pub fn counter(&self, id: u64) -> Option<u64> {
        self.table.find(id).map(|s| self.table.score(s))
    }

    /// Tracked flows with their counters (live and dead).
    pub fn counters(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.table.iter().map(|(k, s, _)| (k, s))
    }

    fn maintain(&mut self) {
        let delta_i = self.scheduler.next_failure_prob();
        self.last_delta = Some(delta_i);
        let p = SquidParams::derive(self.params.q(), self.params.gamma_eff, self.params.alpha, delta_i)
            .expect("failure budgets stay inside (0, 1)");
        let samples = p.sample_size();
        self.table.raise_water_level(p.rank(), samples);
        self.stats.maintenances += 1;
        self.stats.samples += samples as u64;
    }

    fn admit(&mut self, id: u64, val: u64) -> Result<()> {
        let score = val.saturating_add(self.table.water_level());
        match self.table.insert(id, score, ()) {
            Ok(_) => Ok(()),
            Err(Error::Overfull { .. }) => {
                self.stats.emergency_maintenances += 1;
                self.maintain();
                let score = val.saturating_add(self.table.water_level());
                self.table.insert(id, score, ()).map(|_| ())
            }
            Err(e) => Err(e),
        }
    }
}

impl FrequencyEstimator for SquidHH {
    fn update(&mut self, id: u64, val: u64) -> Result<()> {
        self.total_weight += val;
        match self.table.find(id) {
            Some(slot) => {
                let score = self.table.score(slot).saturating_add(val);
                self.table.set_score(slot, score);
            }
            None => self.admit(id, val)?,
        }
        if self.table.occupancy() >= self.trigger {
            self.maintain();
        }
        Ok(())
    }

    fn estimate(&self, id: u64) -> u64 {
        self.counter(id).unwrap_or_else(|| self.table.water_level())
    }

    fn name(&self) -> &'static str {
        "squid-hh"
    }
}

/// Exact per-flow totals.
#[derive(Debug, Clone, Default)]
pub struct ExactCounter {
    counts: HashMap<u64, u64>,
}

impl ExactCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.iter().map(|(&k, &v)| (k, v))
    }
}

impl FrequencyEstimator for ExactCounter {
    fn update(&mut self, id: u64, val: u64) -> Result<()> {
        *self.counts.entry(id).or_insert(0) += val;
        Ok(())
    }

    fn estimate(&self, id: u64) -> u64 {
        self.counts.get(&id).copied().unwrap_or(0)
    }

    fn name(&self) -> &'static str {
        "exact"
    }
}
