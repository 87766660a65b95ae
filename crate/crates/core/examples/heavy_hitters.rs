//! Weighted heavy hitters: water-level table against the sampled-median baseline.

use squid::hh::{replay, FrequencyEstimator, HHParams, Smed, SmedSampling, SquidHH};
use squid::workload::weighted_zipf_stream;

fn main() -> squid::Result<()> {
    let eps = 0.001;
    let packets: Vec<(u64, u64)> = weighted_zipf_stream(0.99, 1_000_000, 50_000, 1)?.collect();

    let params = HHParams::new(eps, 2.7, 4)?;
    let mut hh = SquidHH::new(params, 1)?;
    let r = replay(packets.iter().copied(), &mut hh)?;
    println!(
        "squid-hh {} slots: nrmse={:.4} max_error={} (εN={:.0}) underestimates={} maintenances={}",
        params.slots(),
        r.nrmse,
        r.max_error,
        eps * r.total_weight as f64,
        r.underestimates,
        hh.stats().maintenances
    );

    for mode in [SmedSampling::FirstElements, SmedSampling::Random] {
        let mut smed = Smed::new(eps, params.slots() as f64 * eps, 0.01, packets.len() as u64, mode, 1)?;
        let r = replay(packets.iter().copied(), &mut smed)?;
        println!("{:>11} {} counters: nrmse={:.4} max_error={}", smed.name(), smed.capacity(), r.nrmse, r.max_error);
    }

    let mut top: Vec<(u64, u64)> = hh.counters().collect();
    top.sort_unstable_by_key(|t| std::cmp::Reverse(t.1));
    println!("water level {}; heaviest flows:", hh.water_level());
    for (id, est) in top.iter().take(5) {
        println!("  flow {id:>6}  ≈ {est}");
    }
    Ok(())
}
