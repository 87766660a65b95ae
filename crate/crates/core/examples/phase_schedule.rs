//! Per-maintenance failure budgets and the resulting sample bill.

use squid::phase::{sample_bound, PhaseScheduler};

fn main() -> squid::Result<()> {
    let mut s = PhaseScheduler::new(0.1, 1, 1.0, 0.8)?;
    println!("c_unit = {:.1} samples per bit of confidence", s.c_unit());
    let mut spent = 0.0;
    for m in 1..=1024u64 {
        let (d, _) = s.step();
        spent += d;
        if m.is_power_of_two() {
            let ideal = s.c_unit() * m as f64 * (m as f64 / 0.1).log2();
            println!(
                "M={m:5}  δ_M={d:.3e}  Σδ={spent:.6}  samples={:8}  bound={:10.0}  vs known-M optimum {:.2}×",
                s.samples_total(),
                sample_bound(m, 1, 0.1, s.c_unit())?,
                s.samples_total() as f64 / ideal
            );
        }
    }
    Ok(())
}
