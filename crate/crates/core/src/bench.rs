//! The `squid-bench` command line.
//!
//! Every subcommand writes CSV rows with the [`CSV_HEADER`] columns to
//! `--out` (stdout by default); human-readable notes go to stderr. Exit codes:
//! 0 success, 1 a verification or check failed, 2 bad usage.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::apps::{nwhh_merge, AppConfig, PbaSampler, PrioritySampler, SiteSampler};
use crate::error::{Error, Result};
use crate::hash::mix64;
use crate::hh::{self, ExactCounter, FrequencyEstimator, HHParams, Smed, SmedSampling, SquidHH};
use crate::lrfu::{self, CacheEngine, LrfuScorer};
use crate::qmax::{new_qmax, Engine, Entry, QMax, Stats};
use crate::rng;
use crate::sampling::{window_check, SquidParams};
use crate::switch_sim::{sim_compare, sim_run, P4Config};
use crate::tuning;
use crate::workload::{WorkloadKind, WorkloadSpec};

pub const CSV_HEADER: &str = "scenario,engine,q,gamma,alpha,delta,epsilon,workload,seed,throughput_mops,nrmse,hit_ratio,overhead,maintenances,samples,fallbacks,wall_ms";

/// One CSV row. Metrics a scenario does not produce stay empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub engine: String,
    pub q: Option<u64>,
    pub gamma: Option<f64>,
    pub alpha: Option<f64>,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub workload: String,
    pub seed: u64,
    pub throughput_mops: Option<f64>,
    pub nrmse: Option<f64>,
    pub hit_ratio: Option<f64>,
    pub overhead: Option<f64>,
    pub maintenances: Option<u64>,
    pub samples: Option<u64>,
    pub fallbacks: Option<u64>,
    pub wall_ms: f64,
}

pub fn write_reports<W: Write>(out: W, rows: &[RunReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn mops(ops: u64, d: Duration) -> f64 {
    ops as f64 / d.as_secs_f64().max(1e-9) / 1e6
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Accepts plain integers and forms like `1e6` or `1.5e8`.
fn parse_count(s: &str) -> std::result::Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(f) if f >= 0.0 && f.fract() == 0.0 && f < 1.8e19 => Ok(f as u64),
        _ => Err(format!("{s:?} is not a non-negative integer")),
    }
}

fn parse_engine(s: &str) -> std::result::Result<Engine, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_cache_engine(s: &str) -> std::result::Result<CacheEngine, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "squid-bench", version, about = "Benchmarks and checks for sampled top-q maintenance")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Top-q container throughput, optionally through an application.
    QmaxBench(QmaxArgs),
    /// Heavy-hitter accuracy (NRMSE) and throughput.
    HhBench(HhArgs),
    /// LRFU cache hit ratio and throughput.
    LrfuBench(LrfuArgs),
    /// Switch cache simulation: hit ratio and control traffic.
    P4Sim(P4Args),
    /// Best α for a fixed sample budget.
    TuneAlpha(TuneArgs),
    /// Monte-Carlo pivot failure rates against δ.
    TheoremCheck(TheoremArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum App {
    /// Priority sampling.
    Ps,
    /// Network-wide heavy hitters.
    Nwhh,
    /// Priority-based aggregation.
    Pba,
}

#[derive(Debug, Args)]
pub struct QmaxArgs {
    #[arg(long, default_value = "squid", value_parser = parse_engine)]
    pub engine: Engine,
    #[arg(long, default_value = "1000000", value_parser = parse_count)]
    pub q: u64,
    #[arg(long, default_value_t = 0.25)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.8)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    #[arg(long, default_value = "10000000", value_parser = parse_count)]
    pub n: u64,
    /// Packet CSV (`id,val`); values come from the `val` column.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub app: Option<App>,
    /// Zipf skew of application streams.
    #[arg(long, default_value_t = 0.99)]
    pub zipf: f64,
    #[arg(long, default_value = "1000000", value_parser = parse_count)]
    pub universe: u64,
    /// Sites for `--app nwhh`.
    #[arg(long, default_value_t = 4)]
    pub sites: u32,
    /// Check the result against an oracle (n ≤ 10⁷).
    #[arg(long)]
    pub verify: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum HhAlgo {
    SquidHh,
    Smed,
    SmedRandom,
    Exact,
}

#[derive(Debug, Args)]
pub struct HhArgs {
    #[arg(long, value_enum, default_value = "squid-hh")]
    pub algo: HhAlgo,
    #[arg(long, default_value_t = 0.001)]
    pub epsilon: f64,
    /// Counter budget; overrides `--c-space` and `--smed-c`.
    #[arg(long, value_parser = parse_count)]
    pub counters: Option<u64>,
    /// Table slots per 1/ε before the load factor.
    #[arg(long, default_value_t = 2.7)]
    pub c_space: f64,
    #[arg(long, default_value_t = 4)]
    pub w: usize,
    #[arg(long, default_value_t = 3.0)]
    pub smed_c: f64,
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.8)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.99)]
    pub zipf: f64,
    #[arg(long, default_value = "50000", value_parser = parse_count)]
    pub universe: u64,
    #[arg(long, default_value = "1000000", value_parser = parse_count)]
    pub n: u64,
    /// Packet CSV (`id,val`) instead of the Zipf generator.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct LrfuArgs {
    /// `squid`, `qmax_exact`, `heap_lrfu` or `all`.
    #[arg(long, default_value = "all")]
    pub engine: String,
    #[arg(long, default_value = "16384", value_parser = parse_count)]
    pub q: u64,
    #[arg(long, default_value_t = 0.2)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.8)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    /// LRFU decay `c`.
    #[arg(long = "lrfu-c", default_value_t = 0.75)]
    pub lrfu_c: f64,
    /// Integer score scale `A`.
    #[arg(long = "lrfu-a", default_value_t = 10.0)]
    pub lrfu_a: f64,
    #[arg(long, default_value_t = 0.9)]
    pub zipf: f64,
    #[arg(long, default_value = "1000000", value_parser = parse_count)]
    pub universe: u64,
    #[arg(long, default_value = "1000000", value_parser = parse_count)]
    pub n: u64,
    /// Key trace (one key per line) instead of the Zipf generator.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct P4Args {
    #[arg(long, default_value_t = 4)]
    pub r: usize,
    /// Subarray count (power of two).
    #[arg(long, default_value = "4096", value_parser = parse_count)]
    pub c: u64,
    #[arg(long, default_value_t = 1000)]
    pub z: usize,
    #[arg(long, default_value_t = 2.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.8)]
    pub alpha: f64,
    /// Live fraction that triggers a maintenance.
    #[arg(long, default_value_t = 0.9)]
    pub load: f64,
    #[arg(long, default_value_t = 0.99)]
    pub zipf: f64,
    #[arg(long, default_value = "1600000", value_parser = parse_count)]
    pub universe: u64,
    #[arg(long, default_value = "5000000", value_parser = parse_count)]
    pub n: u64,
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Also run the CPU caches on the same trace.
    #[arg(long)]
    pub compare: bool,
    /// Run the 4×2¹², 4×2¹⁴, 4×2¹⁵, 4×2¹⁶ ladder instead of one size.
    #[arg(long)]
    pub ladder: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    /// Sample budget.
    #[arg(long = "Z", visible_alias = "z", default_value_t = 760.0)]
    pub z: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Also report the conditioned pivot mean for this order statistic.
    #[arg(long)]
    pub k: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct TheoremArgs {
    #[arg(long, default_value = "1000", value_parser = parse_count)]
    pub q: u64,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub gamma: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.8")]
    pub alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.1")]
    pub delta: Vec<f64>,
    #[arg(long, default_value = "10000", value_parser = parse_count)]
    pub trials: u64,
    /// γ ∈ {0.25, 1} × α ∈ {0.7, 0.8, 0.9} × δ ∈ {0.1, 0.01}.
    #[arg(long)]
    pub grid: bool,
    #[command(flatten)]
    pub common: Common,
}

/// Result of a subcommand: rows plus whether every check held.
struct Outcome {
    rows: Vec<RunReport>,
    ok: bool,
}

/// Caps rayon's pool at `SQUID_THREADS` when set.
pub fn init_threads() {
    if let Some(n) = std::env::var("SQUID_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // A second call finds the pool already built, which is fine.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_threads();
    let out = match &cli.command {
        Command::QmaxBench(a) => &a.common.out,
        Command::HhBench(a) => &a.common.out,
        Command::LrfuBench(a) => &a.common.out,
        Command::P4Sim(a) => &a.common.out,
        Command::TuneAlpha(a) => &a.common.out,
        Command::TheoremCheck(a) => &a.common.out,
    }
    .clone();
    let result = match cli.command {
        Command::QmaxBench(a) => cmd_qmax_bench(&a),
        Command::HhBench(a) => cmd_hh_bench(&a),
        Command::LrfuBench(a) => cmd_lrfu_bench(&a),
        Command::P4Sim(a) => cmd_p4_sim(&a),
        Command::TuneAlpha(a) => cmd_tune_alpha(&a),
        Command::TheoremCheck(a) => cmd_theorem_check(&a),
    };
    let outcome = match result {
        Ok(o) => o,
        Err(e @ Error::Param { .. }) => {
            eprintln!("error: {e}");
            return 2;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let written = match out {
        Some(p) => File::create(&p).map_err(Error::from).and_then(|f| write_reports(f, &outcome.rows)),
        None => write_reports(io::stdout().lock(), &outcome.rows),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return 1;
    }
    if outcome.ok {
        0
    } else {
        1
    }
}

/// Inserts `n` random 64-bit values (generated in untimed chunks) and
/// returns the time spent inserting.
pub fn qmax_throughput(store: &mut dyn QMax<u64>, n: u64, seed: u64) -> Duration {
    const CHUNK: usize = 1 << 20;
    let mut r = rng::stream(seed, rng::STREAM_WORKLOAD);
    let mut buf = vec![0u64; CHUNK];
    let mut spent = Duration::ZERO;
    let mut left = n;
    while left > 0 {
        let m = left.min(CHUNK as u64) as usize;
        buf[..m].iter_mut().for_each(|v| *v = r.random());
        let t = Instant::now();
        for &v in &buf[..m] {
            store.insert(v);
        }
        spent += t.elapsed();
        left -= m as u64;
    }
    spent
}

fn same_multiset<T: Ord>(mut a: Vec<T>, mut b: Vec<T>) -> bool {
    a.sort_unstable();
    b.sort_unstable();
    a == b
}

fn qmax_row(a: &QmaxArgs, scenario: &str, workload: String, ops: u64, spent: Duration, stats: Stats) -> RunReport {
    RunReport {
        scenario: scenario.into(),
        engine: a.engine.name().into(),
        q: Some(a.q),
        gamma: Some(a.gamma),
        alpha: Some(a.alpha),
        delta: Some(a.delta),
        workload,
        seed: a.common.seed,
        throughput_mops: Some(mops(ops, spent)),
        maintenances: Some(stats.maintenances),
        samples: Some(stats.samples),
        fallbacks: Some(stats.fallbacks),
        wall_ms: ms(spent),
        ..Default::default()
    }
}

fn cmd_qmax_bench(a: &QmaxArgs) -> Result<Outcome> {
    SquidParams::derive(a.q as usize, a.gamma, a.alpha, a.delta)?;
    if let Some(app) = a.app {
        return app_bench(a, app);
    }
    let q = a.q as usize;
    let seed = a.common.seed;
    let build = || new_qmax::<u64>(a.engine, q, a.gamma, a.alpha, a.delta, seed);
    let (spent, store, workload, values) = match &a.input {
        Some(path) => {
            let values: Vec<u64> = crate::workload::load_packet_csv(path)?
                .take(a.n as usize)
                .map(|r| r.map(|(_, v)| v))
                .collect::<Result<_>>()?;
            let mut warm = build()?;
            values.iter().take(values.len() / 10).for_each(|&v| warm.insert(v));
            let mut store = build()?;
            let t = Instant::now();
            values.iter().for_each(|&v| store.insert(v));
            (t.elapsed(), store, path.display().to_string(), Some(values))
        }
        None => {
            let mut warm = build()?;
            qmax_throughput(warm.as_mut(), (a.n / 10).min(1 << 22), seed ^ 0x5eed);
            let mut store = build()?;
            let spent = qmax_throughput(store.as_mut(), a.n, seed);
            (spent, store, "uniform-u64".to_string(), None)
        }
    };
    let n = values.as_ref().map_or(a.n, |v| v.len() as u64);
    let mut ok = true;
    if a.verify {
        if n > 10_000_000 {
            return Err(Error::param("verify", "only supported for n ≤ 10⁷"));
        }
        let mut all = match values {
            Some(v) => v,
            None => {
                let mut r = rng::stream(seed, rng::STREAM_WORKLOAD);
                (0..n).map(|_| r.random()).collect()
            }
        };
        all.sort_unstable_by(|x, y| y.cmp(x));
        all.truncate(q);
        ok = same_multiset(store.top_q(), all);
        eprintln!("verify: {}", if ok { "PASS" } else { "FAIL" });
    }
    Ok(Outcome {
        rows: vec![qmax_row(a, "qmax-bench", workload, n, spent, store.stats())],
        ok,
    })
}

fn app_packets(a: &QmaxArgs) -> Result<(String, Vec<(u64, u64)>)> {
    let spec = match &a.input {
        Some(p) => WorkloadSpec {
            kind: WorkloadKind::PacketCsv(p.clone()),
            n: a.n,
            seed: a.common.seed,
        },
        None => WorkloadSpec::zipf(a.zipf, a.n, a.universe, a.common.seed),
    };
    Ok((spec.label(), spec.packets()?.collect::<Result<_>>()?))
}

fn app_bench(a: &QmaxArgs, app: App) -> Result<Outcome> {
    let (workload, packets) = app_packets(a)?;
    let cfg = AppConfig {
        engine: a.engine,
        q: a.q as usize,
        gamma: a.gamma,
        alpha: a.alpha,
        delta: a.delta,
        seed: a.common.seed,
    };
    let warm_n = packets.len() / 10;
    let mut ok = true;
    let (name, spent, stats) = match app {
        App::Ps => {
            let run = |items: &[(u64, u64)]| -> Result<(Duration, PrioritySampler)> {
                let mut s = PrioritySampler::new(cfg)?;
                let t = Instant::now();
                items.iter().for_each(|&(id, w)| s.insert(id, w));
                Ok((t.elapsed(), s))
            };
            run(&packets[..warm_n])?;
            let (spent, s) = run(&packets)?;
            if a.verify {
                let mut oracle = PrioritySampler::new(cfg.engine(Engine::Heap))?;
                packets.iter().for_each(|&(id, w)| oracle.insert(id, w));
                ok = s.sample() == oracle.sample();
            }
            ("ps", spent, s.stats())
        }
        App::Nwhh => {
            let salt = mix64(a.common.seed, 0x6e77);
            let sites = a.sites.max(1);
            let run = |items: &[(u64, u64)]| -> Result<(Duration, Vec<SiteSampler>)> {
                let mut s: Vec<SiteSampler> = (0..sites)
                    .map(|i| SiteSampler::new(i, salt, cfg.seed(a.common.seed + i as u64)))
                    .collect::<Result<_>>()?;
                let t = Instant::now();
                for (i, &(id, _)) in items.iter().enumerate() {
                    s[i % sites as usize].update(id);
                }
                Ok((t.elapsed(), s))
            };
            run(&packets[..warm_n])?;
            let (spent, s) = run(&packets)?;
            let samples: Vec<_> = s.iter().map(|x| x.snapshot()).collect();
            let merged = nwhh_merge(&samples, cfg.q)?;
            if a.verify {
                let mut ids: Vec<u64> = packets.iter().map(|p| p.0).collect();
                ids.sort_unstable();
                ids.dedup();
                let mut want: Vec<Entry> = ids.into_iter().map(|id| Entry::new(id, mix64(id, salt))).collect();
                want.sort_unstable_by(|x, y| y.cmp(x));
                want.truncate(cfg.q);
                ok = merged == want;
            }
            let stats = s.iter().map(|x| x.stats()).fold(Stats::default(), |acc, st| Stats {
                maintenances: acc.maintenances + st.maintenances,
                attempts: acc.attempts + st.attempts,
                fallbacks: acc.fallbacks + st.fallbacks,
                samples: acc.samples + st.samples,
                work: acc.work + st.work,
            });
            ("nwhh", spent, stats)
        }
        App::Pba => {
            let run = |items: &[(u64, u64)]| -> Result<(Duration, PbaSampler)> {
                let mut s = PbaSampler::new(cfg)?;
                let t = Instant::now();
                items.iter().for_each(|&(id, w)| s.update(id, w));
                Ok((t.elapsed(), s))
            };
            run(&packets[..warm_n])?;
            let (spent, s) = run(&packets)?;
            if a.verify {
                // Aggregates are partial sums of the true totals.
                let mut exact: HashMap<u64, u64> = HashMap::new();
                packets.iter().for_each(|&(id, w)| *exact.entry(id).or_insert(0) += w);
                let sample = s.sample();
                ok = sample.len() <= cfg.q && sample.iter().all(|&(id, agg)| agg <= exact[&id]);
            }
            ("pba", spent, s.stats())
        }
    };
    if a.verify {
        eprintln!("verify: {}", if ok { "PASS" } else { "FAIL" });
    }
    Ok(Outcome {
        rows: vec![qmax_row(a, name, workload, packets.len() as u64, spent, stats)],
        ok,
    })
}

fn cmd_hh_bench(a: &HhArgs) -> Result<Outcome> {
    let spec = match &a.input {
        Some(p) => WorkloadSpec {
            kind: WorkloadKind::PacketCsv(p.clone()),
            n: a.n,
            seed: a.common.seed,
        },
        None => WorkloadSpec::zipf(a.zipf, a.n, a.universe, a.common.seed),
    };
    let packets: Vec<(u64, u64)> = spec.packets()?.collect::<Result<_>>()?;
    let seed = a.common.seed;
    let hh_params = || -> Result<HHParams> {
        let p = match a.counters {
            Some(c) => {
                let load = hh::load_factor(a.w)
                    .ok_or_else(|| Error::param("w", format!("no load factor known for width {}", a.w)))?;
                HHParams::new(a.epsilon, c as f64 * load * a.epsilon, a.w)?
            }
            None => HHParams::new(a.epsilon, a.c_space, a.w)?,
        };
        Ok(p.sampling(a.alpha, a.delta, 1))
    };
    let smed_c = a.counters.map_or(a.smed_c, |c| c as f64 * a.epsilon);
    let n_hint = packets.len() as u64;
    let make = || -> Result<Box<dyn FrequencyEstimator>> {
        Ok(match a.algo {
            HhAlgo::SquidHh => Box::new(SquidHH::new(hh_params()?, seed)?),
            HhAlgo::Smed => Box::new(Smed::new(a.epsilon, smed_c, a.delta, n_hint, SmedSampling::FirstElements, seed)?),
            HhAlgo::SmedRandom => Box::new(Smed::new(a.epsilon, smed_c, a.delta, n_hint, SmedSampling::Random, seed)?),
            HhAlgo::Exact => Box::new(ExactCounter::new()),
        })
    };
    let time = |items: &[(u64, u64)]| -> Result<Duration> {
        let mut est = make()?;
        let t = Instant::now();
        for &(id, w) in items {
            est.update(id, w)?;
        }
        Ok(t.elapsed())
    };
    time(&packets[..packets.len() / 10])?;
    let spent = time(&packets)?;
    let mut est = make()?;
    let report = hh::replay(packets.iter().copied(), est.as_mut())?;
    let mut maint = None;
    let mut samples = None;
    let counters = match a.algo {
        HhAlgo::SquidHh => {
            let mut s = SquidHH::new(hh_params()?, seed)?;
            packets.iter().try_for_each(|&(id, w)| s.update(id, w))?;
            maint = Some(s.stats().maintenances);
            samples = Some(s.stats().samples);
            s.params().slots()
        }
        HhAlgo::Smed | HhAlgo::SmedRandom => crate::sampling::ceil_tol(smed_c / a.epsilon),
        HhAlgo::Exact => 0,
    };
    eprintln!(
        "{}: counters={counters} nrmse={:.3e} max_error={} underestimates={}",
        est.name(),
        report.nrmse,
        report.max_error,
        report.underestimates
    );
    Ok(Outcome {
        rows: vec![RunReport {
            scenario: "hh-bench".into(),
            engine: est.name().into(),
            q: Some(counters as u64),
            alpha: matches!(a.algo, HhAlgo::SquidHh).then_some(a.alpha),
            delta: Some(a.delta),
            epsilon: Some(a.epsilon),
            workload: spec.label(),
            seed,
            throughput_mops: Some(mops(packets.len() as u64, spent)),
            nrmse: Some(report.nrmse),
            maintenances: maint,
            samples,
            wall_ms: ms(spent),
            ..Default::default()
        }],
        ok: true,
    })
}

fn cmd_lrfu_bench(a: &LrfuArgs) -> Result<Outcome> {
    let engines: Vec<CacheEngine> = if a.engine == "all" {
        CacheEngine::ALL.to_vec()
    } else {
        vec![parse_cache_engine(&a.engine).map_err(|e| Error::param("engine", e))?]
    };
    let scorer = LrfuScorer::new(a.lrfu_c, a.lrfu_a)?;
    let spec = match &a.input {
        Some(p) => WorkloadSpec {
            kind: WorkloadKind::KeyTrace(p.clone()),
            n: a.n,
            seed: a.common.seed,
        },
        None => WorkloadSpec::zipf(a.zipf, a.n, a.universe, a.common.seed),
    };
    let keys: Vec<u64> = spec.keys()?.collect::<Result<_>>()?;
    let q = a.q as usize;
    let seed = a.common.seed;
    let mut rows = Vec::new();
    for engine in engines {
        let run = |keys: &[u64]| -> Result<(Duration, lrfu::CacheStats)> {
            let mut c = lrfu::new_cache(engine, q, a.gamma, a.alpha, a.delta, scorer, seed)?;
            let t = Instant::now();
            for (i, &k) in keys.iter().enumerate() {
                lrfu::access(c.as_mut(), k, i as u64 + 1)?;
            }
            Ok((t.elapsed(), c.stats()))
        };
        run(&keys[..keys.len() / 10])?;
        let (spent, st) = run(&keys)?;
        let squidish = engine != CacheEngine::HeapLrfu;
        rows.push(RunReport {
            scenario: "lrfu-bench".into(),
            engine: engine.name().into(),
            q: Some(a.q),
            gamma: squidish.then_some(a.gamma),
            alpha: (engine == CacheEngine::Squid).then_some(a.alpha),
            delta: (engine == CacheEngine::Squid).then_some(a.delta),
            workload: spec.label(),
            seed,
            throughput_mops: Some(mops(keys.len() as u64, spent)),
            hit_ratio: Some(st.hit_ratio()),
            maintenances: squidish.then_some(st.maintenances),
            samples: (engine == CacheEngine::Squid).then_some(st.samples),
            wall_ms: ms(spent),
            ..Default::default()
        });
    }
    Ok(Outcome { rows, ok: true })
}

fn cmd_p4_sim(a: &P4Args) -> Result<Outcome> {
    let spec = match &a.input {
        Some(p) => WorkloadSpec {
            kind: WorkloadKind::KeyTrace(p.clone()),
            n: a.n,
            seed: a.common.seed,
        },
        None => WorkloadSpec::zipf(a.zipf, a.n, a.universe, a.common.seed),
    };
    let trace: Vec<u64> = spec.keys()?.collect::<Result<_>>()?;
    let sizes: Vec<(usize, usize)> = if a.ladder {
        vec![(4, 1 << 12), (4, 1 << 14), (4, 1 << 15), (4, 1 << 16)]
    } else {
        vec![(a.r, a.c as usize)]
    };
    let configs: Vec<P4Config> = sizes
        .into_iter()
        .map(|(r, c)| P4Config {
            z_cp: a.z,
            gamma: a.gamma,
            alpha: a.alpha,
            load: a.load,
            seed: a.common.seed,
            ..P4Config::new(r, c)
        })
        .collect();
    let results: Vec<Result<Vec<RunReport>>> = configs
        .par_iter()
        .map(|cfg| {
            let t = Instant::now();
            let rep = sim_run(cfg, trace.iter().copied())?;
            let label = format!("{}x{}", cfg.r, cfg.c_sub);
            let base = RunReport {
                scenario: format!("p4-sim-{label}"),
                gamma: Some(cfg.gamma),
                alpha: Some(cfg.alpha),
                workload: spec.label(),
                seed: cfg.seed,
                ..Default::default()
            };
            let mut rows = vec![RunReport {
                engine: "p4".into(),
                q: Some(cfg.q() as u64),
                hit_ratio: Some(rep.hit_ratio),
                overhead: Some(rep.traffic_overhead),
                maintenances: Some(rep.maintenances),
                samples: Some(rep.maintenances * cfg.z_cp as u64),
                wall_ms: ms(t.elapsed()),
                ..base.clone()
            }];
            eprintln!(
                "{label}: hit={:.4} overhead={:.4}% maintenances={} dropped={}",
                rep.hit_ratio,
                100.0 * rep.traffic_overhead,
                rep.maintenances,
                rep.dropped_admissions
            );
            if a.compare {
                let t = Instant::now();
                let cmp = sim_compare(cfg, &trace)?;
                let wall = ms(t.elapsed());
                for (engine, q, hit) in [
                    (CacheEngine::HeapLrfu, cfg.slots(), cmp.cpu_exact_lrfu),
                    (CacheEngine::Squid, cfg.q(), cmp.cpu_squid_lrfu),
                    (CacheEngine::QmaxExact, cfg.q(), cmp.cpu_qmax_lrfu),
                ] {
                    rows.push(RunReport {
                        engine: engine.name().into(),
                        q: Some(q as u64),
                        hit_ratio: Some(hit),
                        wall_ms: wall,
                        ..base.clone()
                    });
                }
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(Outcome { rows, ok: true })
}

fn cmd_tune_alpha(a: &TuneArgs) -> Result<Outcome> {
    let t = Instant::now();
    let r = tuning::optimize_alpha(a.z, a.gamma, a.tol)?;
    eprintln!("alpha*={:.4} objective={:.4} (per q·γ)", r.alpha_star, r.objective_value);
    if let Some(k) = a.k {
        let e = tuning::conditioned_pivot_expectation(k, a.z.round() as usize, a.gamma)?;
        eprintln!("E[W_k | W_k <= γ/(1+γ)] = {e:.6} for k={k}");
    }
    Ok(Outcome {
        rows: vec![RunReport {
            scenario: "tune-alpha".into(),
            engine: "squid".into(),
            gamma: Some(a.gamma),
            alpha: Some(r.alpha_star),
            workload: "analytic".into(),
            seed: a.common.seed,
            samples: Some(a.z.round() as u64),
            wall_ms: ms(t.elapsed()),
            ..Default::default()
        }],
        ok: true,
    })
}

/// One theorem-check cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellResult {
    pub gamma: f64,
    pub alpha: f64,
    pub delta: f64,
    pub trials: u64,
    pub failures: u64,
    /// `δ + 3·√(δ/trials)`.
    pub bound: f64,
}

impl CellResult {
    pub fn rate(&self) -> f64 {
        self.failures as f64 / self.trials as f64
    }

    pub fn pass(&self) -> bool {
        self.rate() <= self.bound
    }
}

/// Monte-Carlo pivot failure rates for every `(γ, α, δ)` combination, cells
/// in parallel.
pub fn theorem_grid(q: usize, gammas: &[f64], alphas: &[f64], deltas: &[f64], trials: u64, seed: u64) -> Result<Vec<CellResult>> {
    let mut cells = Vec::new();
    for &g in gammas {
        for &al in alphas {
            for &d in deltas {
                cells.push(SquidParams::derive(q, g, al, d)?);
            }
        }
    }
    Ok(cells
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut r = rng::stream(seed.wrapping_add(i as u64), rng::STREAM_BASELINE);
            let c = window_check(p, trials, &mut r);
            CellResult {
                gamma: p.gamma,
                alpha: p.alpha,
                delta: p.delta,
                trials,
                failures: c.failures(),
                bound: p.delta + 3.0 * (p.delta / trials as f64).sqrt(),
            }
        })
        .collect())
}

fn cmd_theorem_check(a: &TheoremArgs) -> Result<Outcome> {
    if a.trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let (g, al, d) = if a.grid {
        (vec![0.25, 1.0], vec![0.7, 0.8, 0.9], vec![0.1, 0.01])
    } else {
        (a.gamma.clone(), a.alpha.clone(), a.delta.clone())
    };
    let t = Instant::now();
    let cells = theorem_grid(a.q as usize, &g, &al, &d, a.trials, a.common.seed)?;
    let wall = ms(t.elapsed());
    let mut ok = true;
    let mut rows = Vec::new();
    for c in cells {
        ok &= c.pass();
        eprintln!(
            "{} gamma={} alpha={} delta={} failures={}/{} rate={:.5} bound={:.5}",
            if c.pass() { "PASS" } else { "FAIL" },
            c.gamma,
            c.alpha,
            c.delta,
            c.failures,
            c.trials,
            c.rate(),
            c.bound
        );
        let z = SquidParams::derive(a.q as usize, c.gamma, c.alpha, c.delta)?.sample_size() as u64;
        rows.push(RunReport {
            scenario: "theorem-check".into(),
            engine: "squid".into(),
            q: Some(a.q),
            gamma: Some(c.gamma),
            alpha: Some(c.alpha),
            delta: Some(c.delta),
            workload: "uniform-u64".into(),
            seed: a.common.seed,
            samples: Some(c.trials * z),
            // failed first draws, each of which would cost a retry
            fallbacks: Some(c.failures),
            wall_ms: wall,
            ..Default::default()
        });
    }
    Ok(Outcome { rows, ok })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_of(rows: &[RunReport]) -> String {
        let mut buf = Vec::new();
        write_reports(&mut buf, rows).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn header_is_stable() {
        let s = csv_of(&[RunReport::default()]);
        assert_eq!(s.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(csv_of(&[]).trim_end(), CSV_HEADER);
        // absent metrics are empty, not zero
        assert!(s.lines().nth(1).unwrap().starts_with(",,,,,,,,0,,,,,,,,0"));
    }

    #[test]
    fn counts_accept_scientific_notation() {
        assert_eq!(parse_count("150000000"), Ok(150_000_000));
        assert_eq!(parse_count("1.5e8"), Ok(150_000_000));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(main_with_args(["squid-bench", "qmax-bench", "--bogus"]), 2);
        assert_eq!(main_with_args(["squid-bench"]), 2);
        assert_eq!(main_with_args(["squid-bench", "qmax-bench", "--engine", "nope"]), 2);
        assert_eq!(main_with_args(["squid-bench", "--help"]), 0);
        // parameter validation after parsing
        assert_eq!(main_with_args(["squid-bench", "tune-alpha", "--tol", "0"]), 2);
    }

    #[test]
    fn theorem_grid_passes_small() {
        let cells = theorem_grid(200, &[1.0], &[0.8], &[0.1], 500, 1).unwrap();
        assert_eq!(cells.len(), 1);
        assert!(cells[0].pass());
    }
}
