//! Discrete-event model of a switch-resident cache.
//!
//! The data plane holds `c_sub` subarrays of `r` slots with integer
//! approximate-LRFU scores. A key lives only in its hashed subarray. Misses go
//! to a backend and the response admits the key into an empty or below-water
//! slot of that subarray, or is dropped. When a `load` fraction of all slots
//! is live, the data plane ships `Z` sampled scores to the control plane, which
//! answers with a new water level after two link delays and its queueing and
//! service time. Time is virtual, in nanoseconds.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::hash::mix64;
use crate::lrfu::{self, CacheEngine, LrfuScorer, ScoreCache};
use crate::rng::{self, SquidRng};
use crate::sampling::{self, ceil_tol};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P4Config {
    /// Slots per subarray.
    pub r: usize,
    /// Subarray count, a power of two.
    pub c_sub: usize,
    /// Scores shipped to the control plane per maintenance.
    pub z_cp: usize,
    pub a: f64,
    pub c_lrfu: f64,
    pub gamma: f64,
    pub alpha: f64,
    /// Fraction of slots that must hold live items to start a maintenance.
    pub load: f64,
    pub dp_cp_delay_ns: u64,
    pub backend_rtt_ns: u64,
    /// Control-plane operations per second.
    pub cp_rate: f64,
    /// Control-plane operations charged per maintenance.
    pub cp_ops_per_maintenance: f64,
    pub interarrival_ns: u64,
    /// Requests per timeline epoch.
    pub epoch: u64,
    pub seed: u64,
}

impl Default for P4Config {
    fn default() -> Self {
        Self {
            r: 4,
            c_sub: 1 << 12,
            z_cp: 1000,
            a: 10.0,
            c_lrfu: 0.75,
            gamma: 2.0,
            alpha: 0.8,
            load: 0.9,
            dp_cp_delay_ns: 5_000,
            backend_rtt_ns: 50_000,
            cp_rate: 100_000.0,
            cp_ops_per_maintenance: 1.0,
            interarrival_ns: 100,
            epoch: 1_000_000,
            seed: 1,
        }
    }
}

impl P4Config {
    pub fn new(r: usize, c_sub: usize) -> Self {
        Self {
            r,
            c_sub,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 {
            return Err(Error::param("r", "must be at least 1"));
        }
        if self.c_sub == 0 || !self.c_sub.is_power_of_two() {
            return Err(Error::param("c", format!("{} is not a power of two", self.c_sub)));
        }
        if self.z_cp == 0 {
            return Err(Error::param("z", "must be at least 1"));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::param("gamma", format!("{} is not positive", self.gamma)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::param("alpha", format!("{} is outside (0, 1)", self.alpha)));
        }
        if !(self.load > 0.0 && self.load <= 1.0) {
            return Err(Error::param("load", format!("{} is outside (0, 1]", self.load)));
        }
        if !(self.cp_rate > 0.0) {
            return Err(Error::param("cp_rate", "must be positive"));
        }
        if self.interarrival_ns == 0 || self.epoch == 0 {
            return Err(Error::param("interarrival", "must be positive"));
        }
        LrfuScorer::new(self.c_lrfu, self.a)?;
        Ok(())
    }

    pub fn slots(&self) -> usize {
        self.r * self.c_sub
    }

    /// `q = r·c/(1+γ)`.
    pub fn q(&self) -> usize {
        (self.slots() as f64 / (1.0 + self.gamma)).floor().max(1.0) as usize
    }

    /// Order statistic used as the level: `⌈Z·γα/(1+γ)⌉`.
    pub fn rank(&self) -> usize {
        ceil_tol(self.z_cp as f64 * self.gamma * self.alpha / (1.0 + self.gamma)).clamp(1, self.z_cp)
    }

    /// Live-slot count that starts a maintenance.
    pub fn trigger(&self) -> usize {
        ceil_tol(self.load * self.slots() as f64).max(1)
    }

    /// Control-plane service time of one maintenance.
    pub fn cp_service_ns(&self) -> u64 {
        (self.cp_ops_per_maintenance / self.cp_rate * 1e9).round() as u64
    }
}

/// Events of the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SimEvent {
    /// Backend answer for `key`, requested at request index `request`.
    Response { key: u64, request: u64 },
    /// Samples reach the control plane.
    SamplesArrive { maintenance: u64 },
    /// A new water level takes effect.
    Install { maintenance: u64, level: i64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EpochStats {
    pub requests: u64,
    pub hits: u64,
    pub misses: u64,
    pub maintenances: u64,
    pub water_level: i64,
}

/// One control-plane round trip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaintenanceRecord {
    pub trigger_ns: u64,
    pub cp_start_ns: u64,
    pub install_ns: u64,
    pub level: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub requests: u64,
    pub hits: u64,
    pub misses: u64,
    pub hit_ratio: f64,
    pub maintenances: u64,
    /// Sample packets plus one installation message per maintenance.
    pub control_packets: u64,
    /// `control_packets / (requests + misses)`.
    pub traffic_overhead: f64,
    pub dropped_admissions: u64,
    pub water_level: i64,
    pub timeline: Vec<EpochStats>,
    pub maintenance_log: Vec<MaintenanceRecord>,
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    key: u64,
    score: i64,
    occupied: bool,
}

const EMPTY: Slot = Slot {
    key: 0,
    score: i64::MIN,
    occupied: false,
};

struct Switch {
    cfg: P4Config,
    scorer: LrfuScorer,
    slots: Vec<Slot>,
    salt: u64,
    water: i64,
    live: usize,
    dropped: u64,
}

impl Switch {
    fn subarray(&self, key: u64) -> std::ops::Range<usize> {
        let b = (mix64(key, self.salt) as usize) & (self.cfg.c_sub - 1);
        b * self.cfg.r..(b + 1) * self.cfg.r
    }

    fn lookup(&self, key: u64) -> Option<usize> {
        self.subarray(key)
            .find(|&i| self.slots[i].occupied && self.slots[i].key == key)
    }

    fn hit(&mut self, slot: usize, i: u64) {
        let s = &mut self.slots[slot];
        let new = self.scorer.approx_update(s.score, i);
        if s.score < self.water && new >= self.water {
            self.live += 1;
        }
        s.score = new;
    }

    fn admit(&mut self, key: u64, request: u64) {
        if self.lookup(key).is_some() {
            return;
        }
        let range = self.subarray(key);
        let mut target = None;
        for i in range {
            let s = &self.slots[i];
            if !s.occupied {
                target = Some(i);
                break;
            }
            if s.score < self.water && target.is_none_or(|t: usize| s.score < self.slots[t].score) {
                target = Some(i);
            }
        }
        let Some(t) = target else {
            self.dropped += 1;
            return;
        };
        let score = self.scorer.approx_admit_score(request);
        self.slots[t] = Slot {
            key,
            score,
            occupied: true,
        };
        if score >= self.water {
            self.live += 1;
        }
    }

    fn sample_level(&self, rng: &mut SquidRng) -> i64 {
        let n = self.slots.len();
        let mut buf = Vec::with_capacity(self.cfg.z_cp);
        sampling::sample_order_statistic_by(
            n,
            |i| self.slots[i].score,
            self.cfg.rank(),
            self.cfg.z_cp,
            rng,
            &mut buf,
        )
    }

    fn install(&mut self, level: i64) {
        self.water = self.water.max(level);
        self.live = self
            .slots
            .iter()
            .filter(|s| s.occupied && s.score >= self.water)
            .count();
    }
}

/// Replays `trace` through the switch model.
pub fn sim_run<I>(cfg: &P4Config, trace: I) -> Result<SimReport>
where
    I: IntoIterator<Item = u64>,
{
    cfg.validate()?;
    let mut rng = rng::stream(cfg.seed, rng::STREAM_SIM);
    let mut sw = Switch {
        cfg: *cfg,
        scorer: LrfuScorer::new(cfg.c_lrfu, cfg.a)?,
        slots: vec![EMPTY; cfg.slots()],
        salt: rng.random(),
        water: i64::MIN,
        live: 0,
        dropped: 0,
    };
    let trigger = cfg.trigger();
    let service = cfg.cp_service_ns();

    let mut events: BinaryHeap<Reverse<(u64, u64, SimEvent)>> = BinaryHeap::new();
    let mut seq = 0u64;
    let mut push = |events: &mut BinaryHeap<_>, t: u64, e: SimEvent| {
        seq += 1;
        events.push(Reverse((t, seq, e)));
    };

    let mut report = SimReport {
        requests: 0,
        hits: 0,
        misses: 0,
        hit_ratio: 0.0,
        maintenances: 0,
        control_packets: 0,
        traffic_overhead: 0.0,
        dropped_admissions: 0,
        water_level: i64::MIN,
        timeline: Vec::new(),
        maintenance_log: Vec::new(),
    };
    let mut outstanding = false;
    let mut cp_free_at = 0u64;
    let mut pending_levels: Vec<i64> = Vec::new();
    let mut epoch = EpochStats::default();

    for (n, key) in trace.into_iter().enumerate() {
        let i = n as u64 + 1;
        let now = n as u64 * cfg.interarrival_ns;

        while let Some(Reverse((t, _, _))) = events.peek() {
            if *t > now {
                break;
            }
            let Reverse((t, _, e)) = events.pop().expect("peeked");
            match e {
                SimEvent::Response { key, request } => sw.admit(key, request),
                SimEvent::SamplesArrive { maintenance } => {
                    let start = t.max(cp_free_at);
                    cp_free_at = start + service;
                    let idx = maintenance as usize - 1;
                    report.maintenance_log[idx].cp_start_ns = start;
                    let install = cp_free_at + cfg.dp_cp_delay_ns;
                    report.maintenance_log[idx].install_ns = install;
                    let level = pending_levels[idx];
                    push(&mut events, install, SimEvent::Install { maintenance, level });
                }
                SimEvent::Install { level, .. } => {
                    sw.install(level);
                    outstanding = false;
                }
            }
        }

        match sw.lookup(key) {
            Some(slot) => {
                sw.hit(slot, i);
                report.hits += 1;
                epoch.hits += 1;
            }
            None => {
                report.misses += 1;
                epoch.misses += 1;
                push(
                    &mut events,
                    now + cfg.backend_rtt_ns,
                    SimEvent::Response { key, request: i },
                );
            }
        }

        if !outstanding && sw.live >= trigger {
            outstanding = true;
            report.maintenances += 1;
            epoch.maintenances += 1;
            // The samples are taken now; the level they imply arrives later.
            pending_levels.push(sw.sample_level(&mut rng));
            report.maintenance_log.push(MaintenanceRecord {
                trigger_ns: now,
                cp_start_ns: 0,
                install_ns: 0,
                level: *pending_levels.last().expect("pushed"),
            });
            push(
                &mut events,
                now + cfg.dp_cp_delay_ns,
                SimEvent::SamplesArrive {
                    maintenance: report.maintenances,
                },
            );
        }

        report.requests += 1;
        epoch.requests += 1;
        if epoch.requests == cfg.epoch {
            epoch.water_level = sw.water;
            report.timeline.push(epoch);
            epoch = EpochStats::default();
        }
    }
    if report.requests == 0 {
        return Err(Error::EmptyStream);
    }
    if epoch.requests > 0 {
        epoch.water_level = sw.water;
        report.timeline.push(epoch);
    }
    // Maintenances still in flight at the end of the trace are not logged as installed.
    report.maintenance_log.retain(|m| m.install_ns > 0);
    report.hit_ratio = report.hits as f64 / report.requests as f64;
    report.control_packets = report.maintenances * (cfg.z_cp as u64 + 1);
    report.traffic_overhead = report.control_packets as f64 / (report.requests + report.misses) as f64;
    report.dropped_admissions = sw.dropped;
    report.water_level = sw.water;
    Ok(report)
}

/// Hit ratios of the switch model and CPU caches of matching size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    /// Heap LRFU holding `r·c` entries.
    pub cpu_exact_lrfu: f64,
    /// Water-level cache with `q = r·c/(1+γ)`.
    pub cpu_squid_lrfu: f64,
    /// Exact-selection cache with `q = r·c/(1+γ)`.
    pub cpu_qmax_lrfu: f64,
    pub p4: f64,
    pub p4_report_overhead: f64,
}

/// Runs one trace through the switch model and three CPU caches with the
/// same slot count.
pub fn sim_compare(cfg: &P4Config, trace: &[u64]) -> Result<Comparison> {
    cfg.validate()?;
    let scorer = LrfuScorer::new(cfg.c_lrfu, cfg.a)?;
    let p4 = sim_run(cfg, trace.iter().copied())?;
    let q = cfg.q();
    let delta = 0.01;
    let run = |engine: CacheEngine, size: usize| -> Result<f64> {
        let mut c: Box<dyn ScoreCache> = lrfu::new_cache(engine, size, cfg.gamma, cfg.alpha, delta, scorer, cfg.seed)?;
        lrfu::replay_hit_ratio(c.as_mut(), trace.iter().copied())
    };
    Ok(Comparison {
        cpu_exact_lrfu: run(CacheEngine::HeapLrfu, cfg.slots())?,
        cpu_squid_lrfu: run(CacheEngine::Squid, q)?,
        cpu_qmax_lrfu: run(CacheEngine::QmaxExact, q)?,
        p4: p4.hit_ratio,
        p4_report_overhead: p4.traffic_overhead,
    })
}
