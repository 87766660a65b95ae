//! Each site keeps the ids with the q largest hashes it has seen; merging the
//! site samples gives the same sample as one site watching all traffic.

use squid::apps::{nwhh_merge, AppConfig, SiteSampler};
use squid::workload::zipf_stream;

fn main() -> squid::Result<()> {
    let q = 1000;
    let salt = 0x0051_571d;
    let keys: Vec<u64> = zipf_stream(0.9, 1_000_000, 200_000, 2)?.collect();
    let mut sites: Vec<SiteSampler> = (0..4)
        .map(|i| SiteSampler::new(i, salt, AppConfig::new(q, 0.25).seed(10 + i as u64)))
        .collect::<squid::Result<_>>()?;
    // each key's packets are spread over all sites
    for (i, &k) in keys.iter().enumerate() {
        sites[i % 4].update(k);
    }
    let snapshots: Vec<_> = sites.iter().map(|s| s.snapshot()).collect();
    let merged = nwhh_merge(&snapshots, q)?;

    // distinct-count estimate from the q-th largest hash
    let kth = merged.last().map_or(0, |e| e.value);
    let frac = 1.0 - kth as f64 / u64::MAX as f64;
    let mut distinct = keys.clone();
    distinct.sort_unstable();
    distinct.dedup();
    println!(
        "{} sites, merged sample of {}: distinct ids ≈ {:.0} (true {})",
        sites.len(),
        merged.len(),
        (q as f64 - 1.0) / frac,
        distinct.len()
    );
    Ok(())
}
