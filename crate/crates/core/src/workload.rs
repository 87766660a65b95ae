//! Synthetic streams and trace files.
//!
//! Zipf keys come from `rand_distr`'s rejection-inversion sampler driven by a
//! ChaCha8 stream, so a seed pins the sequence for a given lockfile. Trace
//! readers stream line by line and accept gzip input transparently.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use rand::Rng;
use rand_distr::{Distribution, Zipf};

use crate::error::{Error, Result};
use crate::hash::{hash_bytes, TOKEN_SALT};
use crate::rng::{self, SquidRng};

/// Smallest and largest synthetic packet size (bytes).
pub const PACKET_MIN: u64 = 40;
pub const PACKET_MAX: u64 = 1500;

/// Boxed `(id, val)` stream; items fail on malformed input lines.
pub type PacketIter = Box<dyn Iterator<Item = Result<(u64, u64)>>>;

#[derive(Debug, Clone, PartialEq)]
pub enum WorkloadKind {
    Zipf { skew: f64, universe: u64 },
    PacketCsv(PathBuf),
    KeyTrace(PathBuf),
}

/// Where a benchmark's requests come from.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadSpec {
    pub kind: WorkloadKind,
    /// Request count; for files, an upper limit.
    pub n: u64,
    pub seed: u64,
}

impl WorkloadSpec {
    pub fn zipf(skew: f64, n: u64, universe: u64, seed: u64) -> Self {
        Self {
            kind: WorkloadKind::Zipf { skew, universe },
            n,
            seed,
        }
    }

    /// Short label for reports.
    pub fn label(&self) -> String {
        match &self.kind {
            WorkloadKind::Zipf { skew, universe } => format!("zipf{skew}-u{universe}"),
            WorkloadKind::PacketCsv(p) | WorkloadKind::KeyTrace(p) => p.display().to_string(),
        }
    }

    /// Keys only; packet files yield their ids.
    pub fn keys(&self) -> Result<Box<dyn Iterator<Item = Result<u64>>>> {
        let n = self.n as usize;
        Ok(match &self.kind {
            WorkloadKind::Zipf { skew, universe } => {
                Box::new(zipf_stream(*skew, self.n, *universe, self.seed)?.map(Ok))
            }
            WorkloadKind::PacketCsv(p) => Box::new(load_packet_csv(p)?.map(|r| r.map(|(id, _)| id)).take(n)),
            WorkloadKind::KeyTrace(p) => Box::new(load_key_trace(p)?.take(n)),
        })
    }

    /// `(id, weight)` pairs; Zipf streams get uniform packet sizes and key
    /// traces unit weights.
    pub fn packets(&self) -> Result<PacketIter> {
        let n = self.n as usize;
        Ok(match &self.kind {
            WorkloadKind::Zipf { skew, universe } => {
                Box::new(weighted_zipf_stream(*skew, self.n, *universe, self.seed)?.map(Ok))
            }
            WorkloadKind::PacketCsv(p) => Box::new(load_packet_csv(p)?.take(n)),
            WorkloadKind::KeyTrace(p) => Box::new(load_key_trace(p)?.map(|r| r.map(|k| (k, 1))).take(n)),
        })
    }
}

/// Zipf-distributed ranks in `1..=universe`; the key is the rank.
#[derive(Debug, Clone)]
pub struct ZipfStream {
    rng: SquidRng,
    dist: Zipf<f64>,
    remaining: u64,
}

pub fn zipf_stream(skew: f64, n: u64, universe: u64, seed: u64) -> Result<ZipfStream> {
    if !(skew > 0.0 && skew.is_finite()) {
        return Err(Error::param("skew", format!("{skew} is not positive")));
    }
    if universe == 0 {
        return Err(Error::param("universe", "must be at least 1"));
    }
    let dist = Zipf::new(universe as f64, skew).map_err(|e| Error::param("skew", e.to_string()))?;
    Ok(ZipfStream {
        rng: rng::stream(seed, rng::STREAM_WORKLOAD),
        dist,
        remaining: n,
    })
}

impl Iterator for ZipfStream {
    type Item = u64;

    #[inline]
    fn next(&mut self) -> Option<u64> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        Some(self.dist.sample(&mut self.rng) as u64)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.remaining as usize;
        (n, Some(n))
    }
}

/// Zipf keys with weights uniform in `PACKET_MIN..=PACKET_MAX`.
#[derive(Debug, Clone)]
pub struct WeightedZipfStream {
    keys: ZipfStream,
    sizes: SquidRng,
}

pub fn weighted_zipf_stream(skew: f64, n: u64, universe: u64, seed: u64) -> Result<WeightedZipfStream> {
    Ok(WeightedZipfStream {
        keys: zipf_stream(skew, n, universe, seed)?,
        sizes: rng::stream(seed, rng::STREAM_WORKLOAD + 100),
    })
}

impl Iterator for WeightedZipfStream {
    type Item = (u64, u64);

    #[inline]
    fn next(&mut self) -> Option<(u64, u64)> {
        let key = self.keys.next()?;
        Some((key, self.sizes.random_range(PACKET_MIN..=PACKET_MAX)))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.keys.size_hint()
    }
}

/// Probability of rank `k` under Zipf(`skew`) over `universe` ranks.
pub fn zipf_mass(k: u64, skew: f64, universe: u64) -> f64 {
    let h: f64 = (1..=universe).map(|r| (r as f64).powf(-skew)).sum();
    (k as f64).powf(-skew) / h
}

/// Opens a file, decompressing if it starts with the gzip magic bytes.
pub fn open_maybe_gzip(path: &Path) -> Result<Box<dyn BufRead>> {
    let mut reader = BufReader::new(File::open(path)?);
    let magic = reader.fill_buf()?;
    if magic.starts_with(&[0x1f, 0x8b]) {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(reader))))
    } else {
        Ok(Box::new(reader))
    }
}

/// Streaming reader of `id,val` lines.
pub struct PacketCsvReader<R> {
    lines: io::Lines<R>,
    line: usize,
}

pub fn load_packet_csv(path: impl AsRef<Path>) -> Result<PacketCsvReader<Box<dyn BufRead>>> {
    Ok(PacketCsvReader::new(open_maybe_gzip(path.as_ref())?))
}

impl<R: BufRead> PacketCsvReader<R> {
    pub fn new(reader: R) -> Self {
        Self {
            lines: reader.lines(),
            line: 0,
        }
    }
}

fn parse_packet(text: &str) -> Option<(u64, u64)> {
    let (id, val) = text.split_once(',')?;
    Some((id.trim().parse().ok()?, val.trim().parse().ok()?))
}

impl<R: BufRead> Iterator for PacketCsvReader<R> {
    type Item = Result<(u64, u64)>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let text = match self.lines.next()? {
                Ok(t) => t,
                Err(e) => return Some(Err(e.into())),
            };
            self.line += 1;
            let trimmed = text.trim();
            if trimmed.is_empty() {
                continue;
            }
            if self.line == 1 && trimmed.replace(' ', "").eq_ignore_ascii_case("id,val") {
                continue;
            }
            return Some(parse_packet(trimmed).ok_or(Error::Parse {
                line: self.line,
                text,
            }));
        }
    }
}

/// Streaming reader of one key per line. Decimal tokens are taken as is;
/// anything else is hashed.
pub struct KeyTraceReader<R> {
    lines: io::Lines<R>,
}

pub fn load_key_trace(path: impl AsRef<Path>) -> Result<KeyTraceReader<Box<dyn BufRead>>> {
    Ok(KeyTraceReader::new(open_maybe_gzip(path.as_ref())?))
}

impl<R: BufRead> KeyTraceReader<R> {
    pub fn new(reader: R) -> Self {
        Self {
            lines: reader.lines(),
        }
    }
}

/// 64-bit key of a trace token.
pub fn token_key(token: &str) -> u64 {
    token
        .parse::<u64>()
        .unwrap_or_else(|_| hash_bytes(token.as_bytes(), TOKEN_SALT))
}

impl<R: BufRead> Iterator for KeyTraceReader<R> {
    type Item = Result<u64>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            match self.lines.next()? {
                Ok(t) => {
                    let token = t.trim();
                    if !token.is_empty() {
                        return Some(Ok(token_key(token)));
                    }
                }
                Err(e) => return Some(Err(e.into())),
            }
        }
    }
}

pub fn write_packet_csv<I>(path: impl AsRef<Path>, packets: I, header: bool) -> Result<()>
where
    I: IntoIterator<Item = (u64, u64)>,
{
    let mut w = BufWriter::new(File::create(path)?);
    if header {
        writeln!(w, "id,val")?;
    }
    for (id, val) in packets {
        writeln!(w, "{id},{val}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_key_trace<I>(path: impl AsRef<Path>, keys: I) -> Result<()>
where
    I: IntoIterator<Item = u64>,
{
    let mut w = BufWriter::new(File::create(path)?);
    for k in keys {
        writeln!(w, "{k}")?;
    }
    w.flush()?;
    Ok(())
}
