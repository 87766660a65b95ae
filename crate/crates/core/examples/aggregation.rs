//! Priority-based aggregation: per-id sums for ids that stay in the sample.

use std::collections::HashMap;

use squid::apps::{AppConfig, PbaSampler};
use squid::workload::weighted_zipf_stream;

fn main() -> squid::Result<()> {
    let packets: Vec<(u64, u64)> = weighted_zipf_stream(0.99, 1_000_000, 100_000, 4)?.collect();
    let mut pba = PbaSampler::new(AppConfig::new(500, 0.5).seed(4))?;
    let mut exact: HashMap<u64, u64> = HashMap::new();
    for &(id, w) in &packets {
        pba.update(id, w);
        *exact.entry(id).or_insert(0) += w;
    }
    let mut sample = pba.sample();
    sample.sort_unstable_by_key(|s| std::cmp::Reverse(s.1));
    println!("{} ids tracked, {} maintenances", sample.len(), pba.stats().maintenances);
    for (id, agg) in sample.iter().take(8) {
        println!("  id {id:>6}: aggregated {agg:>9} of {:>9} ({:.1}%)", exact[id], 100.0 * *agg as f64 / exact[id] as f64);
    }
    Ok(())
}
