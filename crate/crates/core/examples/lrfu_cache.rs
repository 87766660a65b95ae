//! LRFU caching with lazy (water-level), eager (exact selection) and heap eviction.

use squid::lrfu::{new_cache, replay_hit_ratio, CacheEngine, LrfuScorer};
use squid::workload::zipf_stream;

fn main() -> squid::Result<()> {
    let keys: Vec<u64> = zipf_stream(0.9, 1_000_000, 1_000_000, 1)?.collect();
    let scorer = LrfuScorer::new(0.75, 10.0)?;
    for q in [1 << 12, 1 << 14] {
        for engine in CacheEngine::ALL {
            let mut cache = new_cache(engine, q, 0.2, 0.8, 0.01, scorer, 1)?;
            let t = std::time::Instant::now();
            let hit = replay_hit_ratio(cache.as_mut(), keys.iter().copied())?;
            println!(
                "q={q:6} {engine:>10}: hit ratio {hit:.4}  {:5.1} Mops  maintenances {}",
                keys.len() as f64 / t.elapsed().as_secs_f64() / 1e6,
                cache.stats().maintenances
            );
        }
    }
    Ok(())
}
