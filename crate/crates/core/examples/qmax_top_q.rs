//! Keep the largest q of a stream with each engine and check them against a sort.
//!
//! Random values mostly fall below the threshold once the container is full,
//! so the cost that separates engines is maintenance, which grows with q/γ.

use rand::Rng;
use squid::qmax::{new_qmax, Engine};
use squid::rng;

fn main() -> squid::Result<()> {
    for (q, gamma, n) in [(10_000, 0.25, 2_000_000), (1_000_000, 0.01, 6_000_000)] {
        let mut r = rng::stream(7, rng::STREAM_WORKLOAD);
        let values: Vec<u64> = (0..n).map(|_| r.random()).collect();
        let mut want = values.clone();
        want.sort_unstable_by(|a, b| b.cmp(a));
        want.truncate(q);

        println!("q={q} γ={gamma} n={n}");
        for engine in Engine::ALL {
            let mut store = new_qmax::<u64>(engine, q, gamma, 0.8, 0.01, 7)?;
            let t = std::time::Instant::now();
            values.iter().for_each(|&v| store.insert(v));
            let spent = t.elapsed();
            let mut got = store.top_q();
            got.sort_unstable_by(|a, b| b.cmp(a));
            let s = store.stats();
            println!(
                "  {engine:>5}: {:6.1} Mops  maintenances={:5} samples={:9} exact={}",
                n as f64 / spent.as_secs_f64() / 1e6,
                s.maintenances,
                s.samples,
                got == want
            );
        }
    }
    Ok(())
}
