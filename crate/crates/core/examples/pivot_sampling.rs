//! Derive sampling parameters and run one maintenance on a full array by hand.

use rand::Rng;
use squid::rng;
use squid::sampling::{run_maintenance, SquidParams};

fn main() -> squid::Result<()> {
    for delta in [0.1, 0.01, 0.001] {
        let p = SquidParams::derive(1_000_000, 1.0, 0.8, delta)?;
        println!("q=10⁶ γ=1 α=0.8 δ={delta}: Z={} k={} η={:.3}", p.sample_size(), p.rank(), p.eta);
    }

    let p = SquidParams::derive(1000, 1.0, 0.8, 0.01)?;
    let mut r = rng::stream(3, rng::STREAM_STORE);
    let mut store: Vec<u64> = (0..p.capacity()).map(|_| r.random()).collect();
    let (lo, hi) = p.window_for(store.len());
    let out = run_maintenance(&mut store, &p, 2, &mut r);
    println!(
        "array of {}: {} values below the pivot (window {lo}..={hi}), {} attempt(s), fallback {}",
        store.len(),
        out.count_below,
        out.attempts,
        out.used_exact_fallback
    );
    // evicted values were moved to the tail
    let kept = &store[..store.len() - out.evicted];
    assert!(kept.iter().all(|&v| v >= out.pivot));
    println!("kept {} values, all at or above the pivot", kept.len());
    Ok(())
}
