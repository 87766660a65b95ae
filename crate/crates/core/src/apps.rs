//! Measurement applications over the top-q container.
//!
//! - [`PrioritySampler`]: each item gets priority `w/u`, the q highest stay.
//! - [`SiteSampler`] and [`nwhh_merge`]: per-site samples of the q largest
//!   keyed hashes, merged into one network-wide sample.
//! - [`PbaSampler`]: per-id aggregation where new ids compete on `w/u`.
//!
//! Positive `f64` priorities are stored as their IEEE bit patterns, which order
//! the same way as the reals.

use std::collections::{HashMap, HashSet};

use rand::Rng;

use crate::error::{Error, Result};
use crate::hash::{mix64, unit_interval};
use crate::qmax::{new_qmax, Engine, Entry, QMax, Stats};
use crate::rng::{self, SquidRng};

/// Container settings shared by the applications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppConfig {
    pub engine: Engine,
    pub q: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub delta: f64,
    pub seed: u64,
}

impl AppConfig {
    /// Squid engine with α = 0.8 and δ = 0.01.
    pub fn new(q: usize, gamma: f64) -> Self {
        Self {
            engine: Engine::Squid,
            q,
            gamma,
            alpha: 0.8,
            delta: 0.01,
            seed: 1,
        }
    }

    pub fn engine(mut self, engine: Engine) -> Self {
        self.engine = engine;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn build<T: Ord + Copy + 'static>(&self) -> Result<Box<dyn QMax<T>>> {
        new_qmax(self.engine, self.q, self.gamma, self.alpha, self.delta, self.seed)
    }
}

fn priority(weight: u64, u: f64) -> u64 {
    (weight as f64 / u).to_bits()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Prioritized {
    priority: u64,
    id: u64,
    weight: u64,
}

/// One retained item of a priority sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampled {
    pub id: u64,
    pub weight: u64,
    pub priority: f64,
}

/// Streaming priority sampler.
pub struct PrioritySampler {
    store: Box<dyn QMax<Prioritized>>,
    rng: SquidRng,
}

impl PrioritySampler {
    pub fn new(cfg: AppConfig) -> Result<Self> {
        Ok(Self {
            store: cfg.build()?,
            rng: rng::stream(cfg.seed, rng::STREAM_APP),
        })
    }

    /// Offers one item. Zero weights are ignored.
    pub fn insert(&mut self, id: u64, weight: u64) {
        if weight == 0 {
            return;
        }
        let u = unit_interval(self.rng.random());
        self.store.insert(Prioritized {
            priority: priority(weight, u),
            id,
            weight,
        });
    }

    /// The sample, highest priority first.
    pub fn sample(&self) -> Vec<Sampled> {
        let mut top = self.store.top_q();
        top.sort_unstable_by(|a, b| b.cmp(a));
        top.into_iter()
            .map(|p| Sampled {
                id: p.id,
                weight: p.weight,
                priority: f64::from_bits(p.priority),
            })
            .collect()
    }

    pub fn stats(&self) -> Stats {
        self.store.stats()
    }
}

/// Priority sample of a whole stream.
pub fn priority_sample<I>(stream: I, cfg: AppConfig) -> Result<Vec<Sampled>>
where
    I: IntoIterator<Item = (u64, u64)>,
{
    let mut s = PrioritySampler::new(cfg)?;
    for (id, w) in stream {
        s.insert(id, w);
    }
    Ok(s.sample())
}

/// The sample a site ships for merging.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteSample {
    pub site_id: u32,
    pub salt: u64,
    /// `(id, hash)` pairs, largest hash first.
    pub entries: Vec<Entry>,
}

/// Per-site sampler of the q distinct ids with the largest keyed hash.
pub struct SiteSampler {
    site_id: u32,
    salt: u64,
    store: Box<dyn QMax<Entry>>,
    /// Ids that may still be in the container.
    held: HashSet<u64>,
    prune_at: usize,
}

impl SiteSampler {
    /// All sites of one deployment must share `salt`.
    pub fn new(site_id: u32, salt: u64, cfg: AppConfig) -> Result<Self> {
        let store = cfg.build()?;
        let prune_at = 2 * (cfg.q + (cfg.q as f64 * cfg.gamma).ceil() as usize).max(16);
        Ok(Self {
            site_id,
            salt,
            store,
            held: HashSet::new(),
            prune_at,
        })
    }

    pub fn hash(&self, id: u64) -> u64 {
        mix64(id, self.salt)
    }

    pub fn update(&mut self, id: u64) {
        let e = Entry::new(id, self.hash(id));
        let threshold = self.store.threshold();
        // The threshold only rises, so an id below it can never come back.
        if threshold.is_some_and(|t| e <= t) || self.held.contains(&id) {
            return;
        }
        self.store.insert(e);
        self.held.insert(id);
        if self.held.len() > self.prune_at {
            if let Some(t) = self.store.threshold() {
                let salt = self.salt;
                self.held.retain(|&id| Entry::new(id, mix64(id, salt)) >= t);
            }
        }
    }

    pub fn snapshot(&self) -> SiteSample {
        let mut entries = self.store.top_q();
        entries.sort_unstable_by(|a, b| b.cmp(a));
        SiteSample {
            site_id: self.site_id,
            salt: self.salt,
            entries,
        }
    }

    pub fn stats(&self) -> Stats {
        self.store.stats()
    }
}

/// Union of site samples, deduplicated by id, keeping the `q` largest hashes.
pub fn nwhh_merge(samples: &[SiteSample], q: usize) -> Result<Vec<Entry>> {
    let Some(first) = samples.first() else {
        return Ok(Vec::new());
    };
    let mut seen: HashMap<u64, u64> = HashMap::new();
    for s in samples {
        if s.salt != first.salt {
            return Err(Error::HashMismatch {
                expected: first.salt,
                found: s.salt,
            });
        }
        for e in &s.entries {
            if let Some(&h) = seen.get(&e.id) {
                if h != e.value {
                    // same salt yet a different hash: the sites disagree on the function
                    return Err(Error::HashMismatch {
                        expected: h,
                        found: e.value,
                    });
                }
            }
            seen.insert(e.id, e.value);
        }
    }
    let mut all: Vec<Entry> = seen.into_iter().map(|(id, v)| Entry::new(id, v)).collect();
    all.sort_unstable_by(|a, b| b.cmp(a));
    all.truncate(q);
    Ok(all)
}

/// Priority-based aggregation. A tracked id adds to its aggregate; an
/// untracked one competes for a slot with priority `w/u`.
pub struct PbaSampler {
    store: Box<dyn QMax<Entry>>,
    rng: SquidRng,
    /// id → (aggregate, admission entry)
    tracked: HashMap<u64, (u64, Entry)>,
    prune_at: usize,
    q: usize,
}

impl PbaSampler {
    pub fn new(cfg: AppConfig) -> Result<Self> {
        let prune_at = 2 * (cfg.q + (cfg.q as f64 * cfg.gamma).ceil() as usize).max(16);
        Ok(Self {
            store: cfg.build()?,
            rng: rng::stream(cfg.seed, rng::STREAM_APP),
            tracked: HashMap::new(),
            prune_at,
            q: cfg.q,
        })
    }

    pub fn update(&mut self, id: u64, weight: u64) {
        if weight == 0 {
            return;
        }
        let threshold = self.store.threshold();
        if let Some((agg, e)) = self.tracked.get_mut(&id) {
            if threshold.is_none_or(|t| *e >= t) {
                *agg += weight;
                return;
            }
            // evicted since admission; its aggregate goes with it
            self.tracked.remove(&id);
        }
        let e = Entry::new(id, priority(weight, unit_interval(self.rng.random())));
        if threshold.is_some_and(|t| e <= t) {
            return;
        }
        self.store.insert(e);
        self.tracked.insert(id, (weight, e));
        if self.tracked.len() > self.prune_at {
            if let Some(t) = self.store.threshold() {
                self.tracked.retain(|_, (_, e)| *e >= t);
            }
        }
    }

    /// Sampled ids with their aggregates, highest admission priority first.
    pub fn sample(&self) -> Vec<(u64, u64)> {
        let mut top = self.store.top_q();
        top.sort_unstable_by(|a, b| b.cmp(a));
        top.into_iter()
            .filter_map(|e| match self.tracked.get(&e.id) {
                Some(&(agg, admitted)) if admitted == e => Some((e.id, agg)),
                _ => None,
            })
            .take(self.q)
            .collect()
    }

    pub fn stats(&self) -> Stats {
        self.store.stats()
    }
}
