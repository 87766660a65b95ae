//! Two-choice bucketed hash table with a water level.
//!
//! Slots whose score is below the water level `W` are logically deleted:
//! lookups still find them, but admissions may overwrite them. Raising `W`
//! is the whole maintenance; no slot is touched.

use std::fmt::Debug;

use rand::Rng;

use crate::error::{Error, Result};
use crate::hash::BucketHasher;
use crate::rng::{self, SquidRng};
use crate::sampling;

/// Default displacement budget for one admission.
pub const DEFAULT_KICK_BUDGET: usize = 500;

/// A totally ordered score with a bottom value used for empty slots.
pub trait Level: Copy + Ord + Debug {
    const FLOOR: Self;
}

impl Level for u64 {
    const FLOOR: Self = 0;
}

impl Level for i64 {
    const FLOOR: Self = i64::MIN;
}

#[derive(Debug, Clone, Default)]
struct Slot<S, V> {
    key: u64,
    score: S,
    value: V,
    occupied: bool,
}

/// What an admission displaced.
#[derive(Debug, Clone, PartialEq)]
pub struct Evicted<S, V> {
    pub key: u64,
    pub score: S,
    pub value: V,
}

/// Result of raising the water level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelOutcome<S> {
    pub pivot: S,
    pub water_level: S,
    /// Samples strictly below the new level.
    pub samples_below: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TableStats {
    pub admissions: u64,
    pub overwrites: u64,
    pub kicks: u64,
    pub failed_admissions: u64,
    pub maintenances: u64,
    pub samples: u64,
}

/// `d` buckets of `w` slots, two candidate buckets per key.
#[derive(Debug, Clone)]
pub struct WaterLevelTable<S, V> {
    slots: Vec<Slot<S, V>>,
    width: usize,
    hasher: BucketHasher,
    water: S,
    occupancy: usize,
    kick_budget: usize,
    rng: SquidRng,
    sample_buf: Vec<S>,
    stats: TableStats,
}

impl<S: Level, V: Default> WaterLevelTable<S, V> {
    pub fn new(width: usize, buckets: usize, seed: u64) -> Result<Self> {
        if width == 0 {
            return Err(Error::param("w", "bucket width must be at least 1"));
        }
        if buckets < 2 {
            return Err(Error::param("d", "need at least two buckets"));
        }
        let slots = (0..width * buckets)
            .map(|_| Slot {
                key: 0,
                score: S::FLOOR,
                value: V::default(),
                occupied: false,
            })
            .collect();
        Ok(Self {
            slots,
            width,
            hasher: BucketHasher::new(seed, buckets),
            water: S::FLOOR,
            occupancy: 0,
            kick_budget: DEFAULT_KICK_BUDGET,
            rng: rng::stream(seed, rng::STREAM_TABLE),
            sample_buf: Vec::new(),
            stats: TableStats::default(),
        })
    }

    pub fn with_kick_budget(mut self, budget: usize) -> Self {
        self.kick_budget = budget;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn buckets(&self) -> usize {
        self.slots.len() / self.width
    }

    pub fn total_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn water_level(&self) -> S {
        self.water
    }

    /// Estimated number of live slots (score at or above the water level).
    pub fn occupancy(&self) -> usize {
        self.occupancy
    }

    pub fn stats(&self) -> TableStats {
        self.stats
    }

    /// Exact live count; a full scan, meant for tests and diagnostics.
    pub fn live_count_exact(&self) -> usize {
        self.slots
            .iter()
            .filter(|s| s.occupied && s.score >= self.water)
            .count()
    }

    pub fn len_occupied(&self) -> usize {
        self.slots.iter().filter(|s| s.occupied).count()
    }

    fn bucket_range(&self, bucket: usize) -> std::ops::Range<usize> {
        let start = bucket * self.width;
        start..start + self.width
    }

    /// Slot index holding `key`, live or not.
    #[inline]
    pub fn find(&self, key: u64) -> Option<usize> {
        let b1 = self.hasher.first(key);
        if let Some(i) = self.scan(b1, key) {
            return Some(i);
        }
        self.scan(self.hasher.second(key), key)
    }

    #[inline]
    fn scan(&self, bucket: usize, key: u64) -> Option<usize> {
        self.bucket_range(bucket)
            .find(|&i| self.slots[i].occupied && self.slots[i].key == key)
    }

    pub fn score(&self, slot: usize) -> S {
        self.slots[slot].score
    }

    pub fn value(&self, slot: usize) -> &V {
        &self.slots[slot].value
    }

    pub fn value_mut(&mut self, slot: usize) -> &mut V {
        &mut self.slots[slot].value
    }

    pub fn is_live(&self, slot: usize) -> bool {
        self.slots[slot].score >= self.water
    }

    /// Overwrites the score of an occupied slot, counting a revival when it
    /// crosses the water level upward.
    pub fn set_score(&mut self, slot: usize, score: S) {
        let s = &mut self.slots[slot];
        debug_assert!(s.occupied);
        if s.score < self.water && score >= self.water {
            self.occupancy += 1;
        }
        s.score = score;
    }

    /// Occupied slots as `(key, score, value)`.
    pub fn iter(&self) -> impl Iterator<Item = (u64, S, &V)> + '_ {
        self.slots
            .iter()
            .filter(|s| s.occupied)
            .map(|s| (s.key, s.score, &s.value))
    }

    /// Free or overwritable slot in `bucket`: an empty one first, else the
    /// lowest-scored dead one.
    fn admissible(&self, bucket: usize) -> Option<usize> {
        let mut dead: Option<usize> = None;
        for i in self.bucket_range(bucket) {
            let s = &self.slots[i];
            if !s.occupied {
                return Some(i);
            }
            if s.score < self.water && dead.is_none_or(|d| s.score < self.slots[d].score) {
                dead = Some(i);
            }
        }
        dead
    }

    fn better_target(&self, a: Option<usize>, b: Option<usize>) -> Option<usize> {
        match (a, b) {
            (Some(x), Some(y)) => {
                let (sx, sy) = (&self.slots[x], &self.slots[y]);
                if !sx.occupied {
                    Some(x)
                } else if !sy.occupied || sy.score < sx.score {
                    Some(y)
                } else {
                    Some(x)
                }
            }
            (x, None) => x,
            (None, y) => y,
        }
    }

    /// Places `slot` content into `target`, returning what was overwritten.
    fn place(&mut self, target: usize, key: u64, score: S, value: V) -> Option<Evicted<S, V>> {
        let old = std::mem::replace(
            &mut self.slots[target],
            Slot {
                key,
                score,
                value,
                occupied: true,
            },
        );
        old.occupied.then(|| {
            self.stats.overwrites += 1;
            Evicted {
                key: old.key,
                score: old.score,
                value: old.value,
            }
        })
    }

    /// Admits a key that is not present. Returns the overwritten dead entry,
    /// if any. On `Err(Overfull)` the table is unchanged.
    pub fn insert(&mut self, key: u64, score: S, value: V) -> Result<Option<Evicted<S, V>>> {
        debug_assert!(self.find(key).is_none(), "key {key} already present");
        let b1 = self.hasher.first(key);
        let b2 = self.hasher.second(key);
        let live = score >= self.water;
        let direct = {
            let a = self.admissible(b1);
            let b = self.admissible(b2);
            self.better_target(a, b)
        };
        if let Some(target) = direct {
            self.stats.admissions += 1;
            if live {
                self.occupancy += 1;
            }
            return Ok(self.place(target, key, score, value));
        }

        // Random walk over live entries.
        let mut carried = Slot {
            key,
            score,
            value,
            occupied: true,
        };
        let mut path: Vec<usize> = Vec::new();
        let mut bucket = if self.rng.random::<bool>() { b1 } else { b2 };
        for _ in 0..self.kick_budget {
            let idx = self.bucket_range(bucket).start + self.rng.random_range(0..self.width);
            std::mem::swap(&mut carried, &mut self.slots[idx]);
            path.push(idx);
            self.stats.kicks += 1;
            bucket = self.hasher.alternate(carried.key, bucket);
            if let Some(target) = self.admissible(bucket) {
                self.stats.admissions += 1;
                if live {
                    self.occupancy += 1;
                }
                let Slot {
                    key, score, value, ..
                } = carried;
                return Ok(self.place(target, key, score, value));
            }
        }
        for &idx in path.iter().rev() {
            std::mem::swap(&mut carried, &mut self.slots[idx]);
        }
        self.stats.failed_admissions += 1;
        Err(Error::Overfull {
            kicks: self.kick_budget,
        })
    }

    /// Raises the water level to the `rank`-th smallest of `samples` uniformly
    /// drawn slot scores (empty slots read as the floor). The level never drops.
    pub fn raise_water_level(&mut self, rank: usize, samples: usize) -> LevelOutcome<S> {
        let mut buf = std::mem::take(&mut self.sample_buf);
        let slots = &self.slots;
        let pivot = sampling::sample_order_statistic_by(
            slots.len(),
            |i| {
                let s = &slots[i];
                if s.occupied {
                    s.score
                } else {
                    S::FLOOR
                }
            },
            rank,
            samples,
            &mut self.rng,
            &mut buf,
        );
        self.water = self.water.max(pivot);
        let below = buf.iter().filter(|&&s| s < self.water).count();
        self.sample_buf = buf;

        let total = self.slots.len();
        let estimate = total - total * below / samples;
        self.occupancy = self.occupancy.min(estimate);
        self.stats.maintenances += 1;
        self.stats.samples += samples as u64;
        LevelOutcome {
            pivot,
            water_level: self.water,
            samples_below: below,
            samples,
        }
    }

    /// Sets the water level directly (ignored if lower than the current one)
    /// and recounts live slots.
    pub fn set_water_level(&mut self, level: S) {
        self.water = self.water.max(level);
        self.occupancy = self.live_count_exact();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn insert_find_and_overwrite_dead() {
        let mut t: WaterLevelTable<u64, ()> = WaterLevelTable::new(2, 4, 1).unwrap();
        assert!(t.insert(7, 5, ()).unwrap().is_none());
        let slot = t.find(7).unwrap();
        assert_eq!(t.score(slot), 5);
        assert_eq!(t.occupancy(), 1);
        assert!(t.find(8).is_none());

        t.set_water_level(10);
        assert!(!t.is_live(slot));
        assert_eq!(t.occupancy(), 0);
        // Still readable below water.
        assert_eq!(t.find(7), Some(slot));
        t.set_score(slot, 12);
        assert_eq!(t.occupancy(), 1);
        t.set_water_level(5);
        assert_eq!(t.water_level(), 10);
    }

    #[test]
    fn dead_slots_are_reused_lowest_first() {
        let mut t: WaterLevelTable<u64, u32> = WaterLevelTable::new(4, 2, 3).unwrap();
        for k in 0..8 {
            t.insert(k, 100 + k, k as u32).unwrap();
        }
        assert_eq!(t.len_occupied(), 8);
        t.set_water_level(104);
        let (b1, b2) = (t.hasher.first(99), t.hasher.second(99));
        let lowest_dead = t
            .bucket_range(b1)
            .chain(t.bucket_range(b2))
            .map(|i| t.slots[i].score)
            .filter(|&s| s < 104)
            .min()
            .unwrap();
        let victim = t.insert(99, 200, 0).unwrap().expect("must overwrite a dead entry");
        assert_eq!(victim.score, lowest_dead);
        assert!(t.find(99).is_some());
        assert!(t.find(victim.key).is_none());
    }

    #[test]
    fn overfull_leaves_table_unchanged() {
        let mut t: WaterLevelTable<u64, ()> = WaterLevelTable::new(1, 2, 9).unwrap();
        t.insert(1, 10, ()).unwrap();
        t.insert(2, 10, ()).unwrap_or(None);
        let before: Vec<_> = t.iter().map(|(k, s, _)| (k, s)).collect();
        let mut extra = 3;
        let err = loop {
            match t.insert(extra, 10, ()) {
                Err(e) => break e,
                Ok(_) => extra += 1,
            }
        };
        assert!(matches!(err, Error::Overfull { .. }));
        let after: Vec<_> = t.iter().map(|(k, s, _)| (k, s)).collect();
        assert!(after.len() >= before.len());
        assert!(t.find(extra).is_none());
        assert_eq!(t.stats().failed_admissions, 1);
    }

    #[test]
    fn fills_to_ninety_percent_with_width_four() {
        let (w, d) = (4, 1024);
        let mut t: WaterLevelTable<u64, ()> = WaterLevelTable::new(w, d, 5).unwrap();
        let target = (0.9 * (w * d) as f64) as u64;
        for k in 0..target {
            t.insert(k.wrapping_mul(0x9e37_79b9_7f4a_7c15), 1, ()).unwrap();
        }
        assert_eq!(t.occupancy(), target as usize);
        assert_eq!(t.live_count_exact(), target as usize);
        for k in 0..target {
            assert!(t.find(k.wrapping_mul(0x9e37_79b9_7f4a_7c15)).is_some());
        }
    }

    #[test]
    fn water_level_is_monotone_and_estimate_tracks() {
        let mut t: WaterLevelTable<u64, ()> = WaterLevelTable::new(4, 256, 11).unwrap();
        let mut truth = HashMap::new();
        for k in 0..900u64 {
            let score = (k * 7919) % 1000;
            t.insert(k, score, ()).unwrap();
            truth.insert(k, score);
        }
        let mut last = 0;
        for _ in 0..5 {
            let out = t.raise_water_level(50, 200);
            assert!(out.water_level >= last);
            last = out.water_level;
            assert!(t.occupancy() <= 1024);
        }
        let exact = t.live_count_exact();
        let est = t.occupancy() as f64;
        assert!((est - exact as f64).abs() < 0.15 * 1024.0, "est {est} exact {exact}");
    }
}
