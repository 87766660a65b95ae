//! Discrete-event model of an in-switch cache with a control-plane water level.

use squid::switch_sim::{sim_run, P4Config};
use squid::workload::zipf_stream;

fn main() -> squid::Result<()> {
    let trace: Vec<u64> = zipf_stream(0.99, 2_000_000, 1_600_000, 1)?.collect();
    let cfg = P4Config::new(4, 1 << 12);
    println!("{} slots, q={}, order statistic {} of {} samples", cfg.slots(), cfg.q(), cfg.rank(), cfg.z_cp);

    let rep = sim_run(&cfg, trace.iter().copied())?;
    println!(
        "hit ratio {:.4}, {} maintenances, {} control packets = {:.2}% overhead, {} admissions dropped",
        rep.hit_ratio,
        rep.maintenances,
        rep.control_packets,
        100.0 * rep.traffic_overhead,
        rep.dropped_admissions
    );
    for (i, e) in rep.timeline.iter().enumerate() {
        println!("  epoch {i:>3}: {} requests, hit {:.3}, water level {}", e.requests, e.hits as f64 / e.requests.max(1) as f64, e.water_level);
    }
    if let Some(m) = rep.maintenance_log.first() {
        println!(
            "first maintenance: triggered {} µs, installed {} µs later",
            m.trigger_ns / 1000,
            (m.install_ns - m.trigger_ns) / 1000
        );
    }
    Ok(())
}
