//! Priority sampling: estimate subset sums from a fixed-size weighted sample.

use squid::apps::{priority_sample, AppConfig};
use squid::workload::weighted_zipf_stream;

fn main() -> squid::Result<()> {
    let packets: Vec<(u64, u64)> = weighted_zipf_stream(0.99, 500_000, 1_000_000, 3)?.collect();
    let truth: u64 = packets.iter().filter(|p| p.0 % 10 == 0).map(|p| p.1).sum();

    let sample = priority_sample(packets.iter().copied(), AppConfig::new(2000, 0.25).seed(3))?;
    // the smallest kept priority is the threshold τ; each item stands for max(w, τ)
    let tau = sample.iter().map(|s| s.priority).fold(f64::INFINITY, f64::min);
    let est: f64 = sample
        .iter()
        .filter(|s| s.id % 10 == 0)
        .map(|s| (s.weight as f64).max(tau))
        .sum();
    println!(
        "{} of {} packets kept; bytes from ids ≡ 0 mod 10: true {truth}, estimate {est:.0} ({:+.1}%)",
        sample.len(),
        packets.len(),
        100.0 * (est / truth as f64 - 1.0)
    );
    Ok(())
}
