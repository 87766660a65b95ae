//! Generate Zipf traces, write them out, and read them back.

use squid::workload::{load_key_trace, load_packet_csv, weighted_zipf_stream, write_key_trace, write_packet_csv, zipf_mass, WorkloadSpec};

fn main() -> squid::Result<()> {
    let dir = std::env::temp_dir().join("squid-workloads");
    std::fs::create_dir_all(&dir)?;

    let spec = WorkloadSpec::zipf(0.99, 1_000_000, 50_000, 1);
    let keys: Vec<u64> = spec.keys()?.collect::<squid::Result<_>>()?;
    let top = keys.iter().filter(|&&k| k == 1).count() as f64 / keys.len() as f64;
    println!("{}: key 1 share {top:.4} (analytic {:.4})", spec.label(), zipf_mass(1, 0.99, 50_000));

    let trace = dir.join("keys.txt");
    write_key_trace(&trace, keys.iter().copied())?;
    let back = load_key_trace(&trace)?.collect::<squid::Result<Vec<_>>>()?;
    println!("key trace {}: {} keys, round trip {}", trace.display(), back.len(), back == keys);

    let packets: Vec<(u64, u64)> = weighted_zipf_stream(0.99, 100_000, 50_000, 1)?.collect();
    let csv = dir.join("packets.csv");
    write_packet_csv(&csv, packets.iter().copied(), true)?;
    let back = load_packet_csv(&csv)?.collect::<squid::Result<Vec<_>>>()?;
    let bytes: u64 = packets.iter().map(|p| p.1).sum();
    println!("packet csv {}: {} packets, {bytes} bytes, round trip {}", csv.display(), back.len(), back == packets);
    Ok(())
}
