use squid::lrfu::{access, new_cache, replay_hit_ratio, CacheEngine, HeapLrfu, LrfuScorer, ScoreCache, SquidLrfu};
use squid::switch_sim::{sim_compare, sim_run, P4Config};
use squid::workload::zipf_stream;

fn trace(n: u64, universe: u64, seed: u64) -> Vec<u64> {
    zipf_stream(0.9, n, universe, seed).unwrap().collect()
}

#[test]
fn lazy_eviction_beats_eager_eviction() {
    let keys = trace(300_000, 200_000, 1);
    let scorer = LrfuScorer::new(0.75, 10.0).unwrap();
    let hit = |engine| {
        let mut c = new_cache(engine, 4096, 0.5, 0.8, 0.01, scorer, 1).unwrap();
        replay_hit_ratio(c.as_mut(), keys.iter().copied()).unwrap()
    };
    let (squid, qmax, heap) = (hit(CacheEngine::Squid), hit(CacheEngine::QmaxExact), hit(CacheEngine::HeapLrfu));
    assert!(squid >= qmax, "squid {squid} qmax {qmax}");
    assert!((squid - heap).abs() < 0.05, "squid {squid} heap {heap}");
}

#[test]
fn squid_cache_keeps_what_the_heap_keeps() {
    // the q best scores survive in the squid cache at every step
    let keys = trace(50_000, 20_000, 2);
    let scorer = LrfuScorer::new(0.75, 10.0).unwrap();
    let mut squid = SquidLrfu::new(256, 1.0, 0.8, 0.01, scorer, 2).unwrap();
    let mut heap = HeapLrfu::new(256, scorer).unwrap();
    for (i, &k) in keys.iter().enumerate() {
        let i = i as u64 + 1;
        access(&mut squid, k, i).unwrap();
        access(&mut heap, k, i).unwrap();
        if i.is_multiple_of(1000) {
            let missing = heap.entries().filter(|&(key, _)| !squid.contains(key)).count();
            // heap scores are exact, squid's are the switch-friendly rule, so
            // allow a small disagreement near the boundary
            assert!(missing <= 256 / 10, "step {i}: {missing} of the heap's keys missing");
        }
    }
}

#[test]
fn stats_add_up() {
    let keys = trace(20_000, 5_000, 3);
    let scorer = LrfuScorer::new(0.75, 10.0).unwrap();
    for engine in CacheEngine::ALL {
        let mut c = new_cache(engine, 500, 1.0, 0.8, 0.01, scorer, 3).unwrap();
        let ratio = replay_hit_ratio(c.as_mut(), keys.iter().copied()).unwrap();
        let s = c.stats();
        assert_eq!(s.hits + s.misses, keys.len() as u64, "{engine}");
        assert!((s.hit_ratio() - ratio).abs() < 1e-12);
        assert_eq!(c.name(), engine.name());
    }
}

#[test]
fn switch_tracks_the_cpu_cache() {
    let keys: Vec<u64> = zipf_stream(0.99, 500_000, 200_000, 4).unwrap().collect();
    let cfg = P4Config::new(4, 1 << 10);
    let cmp = sim_compare(&cfg, &keys).unwrap();
    assert!((cmp.p4 - cmp.cpu_squid_lrfu).abs() < 0.02, "{cmp:?}");
    assert!(cmp.cpu_squid_lrfu > cmp.cpu_qmax_lrfu);
    let rep = sim_run(&cfg, keys.iter().copied()).unwrap();
    assert_eq!(rep.hit_ratio, cmp.p4);
    assert_eq!(rep.hits + rep.misses, keys.len() as u64);
    assert_eq!(rep.control_packets, rep.maintenances * (cfg.z_cp as u64 + 1));
}

#[test]
fn bigger_switch_needs_less_control_traffic() {
    let keys: Vec<u64> = zipf_stream(0.99, 1_000_000, 400_000, 5).unwrap().collect();
    let small = sim_run(&P4Config::new(4, 1 << 10), keys.iter().copied()).unwrap();
    let big = sim_run(&P4Config::new(4, 1 << 12), keys.iter().copied()).unwrap();
    assert!(big.traffic_overhead < small.traffic_overhead);
    assert!(big.hit_ratio > small.hit_ratio);
}
