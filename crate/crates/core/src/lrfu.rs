//! LRFU scoring and score-ordered caches.
//!
//! Request `i` carries the base score `nsᵢ = −i·ln c`. A cached item's score
//! follows `s ← nsᵢ + ln(e^(s−nsᵢ) + 1)` on each hit and starts at `nsᵢ` on
//! admission. The switch-friendly variant works on integers scaled by `A`:
//! `s ← round(max(−A·i·ln c, s + A·ln 2))`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::cuckoo::{Level, WaterLevelTable};
use crate::error::{Error, Result};
use crate::phase::PhaseScheduler;
use crate::sampling::{self, SquidParams};

/// A real-valued score with a total order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Crf(pub f64);

impl PartialEq for Crf {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Crf {}

impl Ord for Crf {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl PartialOrd for Crf {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Level for Crf {
    const FLOOR: Self = Crf(f64::NEG_INFINITY);
}

/// `ln(e^a + e^b)` without overflow.
fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// LRFU parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrfuScorer {
    c: f64,
    a: f64,
    neg_ln_c: f64,
}

impl LrfuScorer {
    /// `c` in `[0.5, 1]`; `a >= 1` scales the integer variant.
    pub fn new(c: f64, a: f64) -> Result<Self> {
        if !(0.5..=1.0).contains(&c) {
            return Err(Error::param("c", format!("{c} is outside [0.5, 1]")));
        }
        if !(a >= 1.0 && a.is_finite()) {
            return Err(Error::param("A", format!("{a} is below 1")));
        }
        Ok(Self {
            c,
            a,
            neg_ln_c: -c.ln(),
        })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn scale(&self) -> f64 {
        self.a
    }

    /// `nsᵢ = −i·ln c`.
    #[inline]
    pub fn ns(&self, i: u64) -> f64 {
        i as f64 * self.neg_ln_c
    }

    /// Score of an item first seen at request `i`.
    #[inline]
    pub fn admit_score(&self, i: u64) -> f64 {
        self.ns(i)
    }

    /// `nsᵢ + ln(e^(s−nsᵢ) + 1)`; `s = −∞` gives `nsᵢ`.
    #[inline]
    pub fn update(&self, s: f64, i: u64) -> f64 {
        log_add_exp(s, self.ns(i))
    }

    /// `A`-scaled base score `−A·i·ln c`.
    #[inline]
    pub fn ns_scaled(&self, i: u64) -> f64 {
        self.a * self.ns(i)
    }

    /// Integer admission score `round(−A·i·ln c)`.
    #[inline]
    pub fn approx_admit_score(&self, i: u64) -> i64 {
        self.ns_scaled(i).round() as i64
    }

    /// `round(max(−A·i·ln c, s + A·ln 2))`.
    #[inline]
    pub fn approx_update(&self, s: i64, i: u64) -> i64 {
        self.ns_scaled(i)
            .max(s as f64 + self.a * std::f64::consts::LN_2)
            .round() as i64
    }

    /// The exact rule on `A`-scaled scores: `nsᴬ + A·ln(e^((s−nsᴬ)/A) + 1)`.
    pub fn exact_scaled_update(&self, s: f64, i: u64) -> f64 {
        let ns = self.ns_scaled(i);
        ns + self.a * log_add_exp((s - ns) / self.a, 0.0)
    }
}

/// Hit/miss counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub maintenances: u64,
    pub samples: u64,
}

impl CacheStats {
    pub fn hit_ratio(&self) -> f64 {
        let total = self.hits + self.misses;
        if total == 0 {
            0.0
        } else {
            self.hits as f64 / total as f64
        }
    }
}

/// A cache ordered by LRFU score. `i` is the global request index supplied
/// by the caller and must increase between calls.
pub trait ScoreCache {
    /// Looks `key` up; on a hit the score is updated and the value returned.
    fn get(&mut self, key: u64, i: u64) -> Option<u64>;
    /// Admits an absent key.
    fn admit(&mut self, key: u64, value: u64, i: u64) -> Result<()>;
    fn contains(&self, key: u64) -> bool;
    fn stats(&self) -> CacheStats;
    /// Entries currently stored (live or not).
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn name(&self) -> &'static str;
}

/// One request: lookup, admitting on a miss. Returns whether it hit.
pub fn access<C: ScoreCache + ?Sized>(cache: &mut C, key: u64, i: u64) -> Result<bool> {
    if cache.get(key, i).is_some() {
        return Ok(true);
    }
    cache.admit(key, key, i)?;
    Ok(false)
}

/// Replays `keys` (request indices 1, 2, ...) and returns the hit ratio.
pub fn replay_hit_ratio<C, I>(cache: &mut C, keys: I) -> Result<f64>
where
    C: ScoreCache + ?Sized,
    I: IntoIterator<Item = u64>,
{
    let (mut hits, mut n) = (0u64, 0u64);
    for key in keys {
        n += 1;
        hits += access(cache, key, n)? as u64;
    }
    Ok(if n == 0 { 0.0 } else { hits as f64 / n as f64 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CacheEngine {
    Squid,
    QmaxExact,
    HeapLrfu,
}

impl CacheEngine {
    pub const ALL: [CacheEngine; 3] = [CacheEngine::Squid, CacheEngine::QmaxExact, CacheEngine::HeapLrfu];

    pub fn name(self) -> &'static str {
        match self {
            CacheEngine::Squid => "squid",
            CacheEngine::QmaxExact => "qmax_exact",
            CacheEngine::HeapLrfu => "heap_lrfu",
        }
    }
}

impl fmt::Display for CacheEngine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CacheEngine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squid" => Ok(CacheEngine::Squid),
            "qmax_exact" | "qmax" => Ok(CacheEngine::QmaxExact),
            "heap_lrfu" | "heap" => Ok(CacheEngine::HeapLrfu),
            other => Err(Error::param("engine", format!("unknown cache engine {other:?}"))),
        }
    }
}

/// Builds a cache. The heap engine holds exactly `q` entries and ignores
/// `gamma`, `alpha` and `delta`.
pub fn new_cache(
    engine: CacheEngine,
    q: usize,
    gamma: f64,
    alpha: f64,
    delta: f64,
    scorer: LrfuScorer,
    seed: u64,
) -> Result<Box<dyn ScoreCache>> {
    Ok(match engine {
        CacheEngine::Squid => Box::new(SquidLrfu::new(q, gamma, alpha, delta, scorer, seed)?),
        CacheEngine::QmaxExact => Box::new(QMaxLrfu::new(q, gamma, scorer)?),
        CacheEngine::HeapLrfu => Box::new(HeapLrfu::new(q, scorer)?),
    })
}

#[derive(Debug, Clone, Copy)]
struct HeapEntry {
    score: Crf,
    key: u64,
    value: u64,
}

/// Exact LRFU: an indexed min-heap of `q` entries.
#[derive(Debug, Clone)]
pub struct HeapLrfu {
    heap: Vec<HeapEntry>,
    pos: HashMap<u64, usize>,
    q: usize,
    scorer: LrfuScorer,
    stats: CacheStats,
}

impl HeapLrfu {
    pub fn new(q: usize, scorer: LrfuScorer) -> Result<Self> {
        if q == 0 {
            return Err(Error::param("q", "must be at least 1"));
        }
        Ok(Self {
            heap: Vec::with_capacity(q),
            pos: HashMap::with_capacity(q),
            q,
            scorer,
            stats: CacheStats::default(),
        })
    }

    pub fn score_of(&self, key: u64) -> Option<f64> {
        self.pos.get(&key).map(|&p| self.heap[p].score.0)
    }

    /// Cached keys with their scores.
    pub fn entries(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.heap.iter().map(|e| (e.key, e.score.0))
    }

    fn swap(&mut self, a: usize, b: usize) {
        self.heap.swap(a, b);
        self.pos.insert(self.heap[a].key, a);
        self.pos.insert(self.heap[b].key, b);
    }

    fn sift_up(&mut self, mut i: usize) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if self.heap[i].score >= self.heap[parent].score {
                break;
            }
            self.swap(i, parent);
            i = parent;
        }
    }

    fn sift_down(&mut self, mut i: usize) {
        let n = self.heap.len();
        loop {
            let (l, r) = (2 * i + 1, 2 * i + 2);
            let mut smallest = i;
            if l < n && self.heap[l].score < self.heap[smallest].score {
                smallest = l;
            }
            if r < n && self.heap[r].score < self.heap[smallest].score {
                smallest = r;
            }
            if smallest == i {
                break;
            }
            self.swap(i, smallest);
            i = smallest;
        }
    }
}

impl ScoreCache for HeapLrfu {
    fn get(&mut self, key: u64, i: u64) -> Option<u64> {
        match self.pos.get(&key) {
            Some(&p) => {
                self.stats.hits += 1;
                let e = &mut self.heap[p];
                e.score = Crf(self.scorer.update(e.score.0, i));
                let value = e.value;
                self.sift_down(p);
                Some(value)
            }
            None => {
                self.stats.misses += 1;
                None
            }
        }
    }

    fn admit(&mut self, key: u64, value: u64, i: u64) -> Result<()> {
        debug_assert!(!self.pos.contains_key(&key));
        let entry = HeapEntry {
            score: Crf(self.scorer.admit_score(i)),
            key,
            value,
        };
        if self.heap.len() < self.q {
            self.heap.push(entry);
            let at = self.heap.len() - 1;
            self.pos.insert(key, at);
            self.sift_up(at);
        } else {
            let old = std::mem::replace(&mut self.heap[0], entry);
            self.pos.remove(&old.key);
            self.pos.insert(key, 0);
            self.sift_down(0);
        }
        Ok(())
    }

    fn contains(&self, key: u64) -> bool {
        self.pos.contains_key(&key)
    }

    fn stats(&self) -> CacheStats {
        self.stats
    }

    fn len(&self) -> usize {
        self.heap.len()
    }

    fn name(&self) -> &'static str {
        "heap_lrfu"
    }
}

/// Exact-selection cache: `q(1+γ)` slots; when full, everything but the `q`
/// best scores is dropped at once.
#[derive(Debug, Clone)]
pub struct QMaxLrfu {
    slots: Vec<HeapEntry>,
    index: HashMap<u64, usize>,
    q: usize,
    capacity: usize,
    scorer: LrfuScorer,
    stats: CacheStats,
}

impl QMaxLrfu {
    pub fn new(q: usize, gamma: f64, scorer: LrfuScorer) -> Result<Self> {
        if q == 0 {
            return Err(Error::param("q", "must be at least 1"));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::param("gamma", format!("{gamma} is not a positive real")));
        }
        let capacity = q + sampling::ceil_tol(q as f64 * gamma).max(1);
        Ok(Self {
            slots: Vec::with_capacity(capacity),
            index: HashMap::with_capacity(capacity),
            q,
            capacity,
            scorer,
            stats: CacheStats::default(),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    fn evict(&mut self) {
        self.slots
            .select_nth_unstable_by(self.q - 1, |a, b| b.score.cmp(&a.score));
        for e in &self.slots[self.q..] {
            self.index.remove(&e.key);
        }
        self.slots.truncate(self.q);
        for (i, e) in self.slots.iter().enumerate() {
            self.index.insert(e.key, i);
        }
        self.stats.maintenances += 1;
    }
}

impl ScoreCache for QMaxLrfu {
    fn get(&mut self, key: u64, i: u64) -> Option<u64> {
        match self.index.get(&key) {
            Some(&p) => {
                self.stats.hits += 1;
                let e = &mut self.slots[p];
                e.score = Crf(self.scorer.update(e.score.0, i));
                Some(e.value)
            }
            None => {
                self.stats.misses += 1;
                None
            }
        }
    }

    fn admit(&mut self, key: u64, value: u64, i: u64) -> Result<()> {
        if self.slots.len() == self.capacity {
            self.evict();
        }
        self.index.insert(key, self.slots.len());
        self.slots.push(HeapEntry {
            score: Crf(self.scorer.admit_score(i)),
            key,
            value,
        });
        Ok(())
    }

    fn contains(&self, key: u64) -> bool {
        self.index.contains_key(&key)
    }

    fn stats(&self) -> CacheStats {
        self.stats
    }

    fn len(&self) -> usize {
        self.slots.len()
    }

    fn name(&self) -> &'static str {
        "qmax_exact"
    }
}

/// Bucket width and load of the cache table.
const SQUID_WIDTH: usize = 4;
const SQUID_LOAD: f64 = 0.9;

/// Water-level cache over a cuckoo table of about `q(1+γ)` slots.
/// Entries below the level still hit until overwritten.
#[derive(Debug, Clone)]
pub struct SquidLrfu {
    table: WaterLevelTable<Crf, u64>,
    scheduler: PhaseScheduler,
    q: usize,
    gamma_eff: f64,
    alpha: f64,
    trigger: usize,
    scorer: LrfuScorer,
    stats: CacheStats,
}

impl SquidLrfu {
    pub fn new(q: usize, gamma: f64, alpha: f64, delta: f64, scorer: LrfuScorer, seed: u64) -> Result<Self> {
        SquidParams::derive(q, gamma, alpha, delta)?;
        let buckets = sampling::ceil_tol(q as f64 * (1.0 + gamma) / SQUID_WIDTH as f64).max(2);
        let table = WaterLevelTable::new(SQUID_WIDTH, buckets, seed)?;
        let slots = table.total_slots();
        let gamma_eff = slots as f64 / q as f64 - 1.0;
        let trigger = ((SQUID_LOAD * slots as f64) + 1e-9).floor() as usize;
        if trigger <= q {
            return Err(Error::param(
                "gamma",
                format!("{gamma} leaves no room above q at load {SQUID_LOAD}"),
            ));
        }
        Ok(Self {
            table,
            scheduler: PhaseScheduler::new(delta, 1, gamma_eff, alpha)?,
            q,
            gamma_eff,
            alpha,
            trigger,
            scorer,
            stats: CacheStats::default(),
        })
    }

    pub fn total_slots(&self) -> usize {
        self.table.total_slots()
    }

    pub fn water_level(&self) -> f64 {
        self.table.water_level().0
    }

    pub fn table(&self) -> &WaterLevelTable<Crf, u64> {
        &self.table
    }

    pub fn score_of(&self, key: u64) -> Option<f64> {
        self.table.find(key).map(|s| self.table.score(s).0)
    }

    fn maintain(&mut self) {
        let delta_i = self.scheduler.next_failure_prob();
        let p = SquidParams::derive(self.q, self.gamma_eff, self.alpha, delta_i)
            .expect("failure budgets stay inside (0, 1)");
        self.table.raise_water_level(p.rank(), p.sample_size());
        self.stats.maintenances += 1;
        self.stats.samples += p.sample_size() as u64;
    }

    /// Admits and reports the overwritten entry, if any, as `(key, score)`.
    pub fn admit_with_victim(&mut self, key: u64, value: u64, i: u64) -> Result<Option<(u64, f64)>> {
        let score = Crf(self.scorer.admit_score(i));
        let victim = match self.table.insert(key, score, value) {
            Ok(v) => v,
            Err(Error::Overfull { .. }) => {
                self.maintain();
                self.table.insert(key, score, value)?
            }
            Err(e) => return Err(e),
        };
        if self.table.occupancy() >= self.trigger {
            self.maintain();
        }
        Ok(victim.map(|v| (v.key, v.score.0)))
    }
}

impl ScoreCache for SquidLrfu {
    fn get(&mut self, key: u64, i: u64) -> Option<u64> {
        match self.table.find(key) {
            Some(slot) => {
                self.stats.hits += 1;
                let score = self.scorer.update(self.table.score(slot).0, i);
                self.table.set_score(slot, Crf(score));
                if self.table.occupancy() >= self.trigger {
                    self.maintain();
                }
                Some(*self.table.value(slot))
            }
            None => {
                self.stats.misses += 1;
                None
            }
        }
    }

    fn admit(&mut self, key: u64, value: u64, i: u64) -> Result<()> {
        self.admit_with_victim(key, value, i).map(|_| ())
    }

    fn contains(&self, key: u64) -> bool {
        self.table.find(key).is_some()
    }

    fn stats(&self) -> CacheStats {
        self.stats
    }

    fn len(&self) -> usize {
        self.table.len_occupied()
    }

    fn name(&self) -> &'static str {
        "squid"
    }
}
