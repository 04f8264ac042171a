//! Rate, load ratio and common-randomness figures, closed form and measured
//! from transcripts. Everything is exact.

use std::collections::BTreeMap;
use std::fmt;
use std::io;

use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::error::{config_err, Result};
use crate::model::{pad_keys, ChunkKey, ServerId, SystemConfig, Transcript};
use crate::scheme::{segments_for, Lambda, SchemeKind};

pub type Q = Ratio<u64>;

/// Download from one dedicated server over download from the central
/// server; infinite when the central server is not queried.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Load {
    Finite(Q),
    Infinite,
}

impl Load {
    fn parts(&self) -> (u64, u64) {
        match self {
            Load::Finite(r) => (*r.numer(), *r.denom()),
            Load::Infinite => (1, 0),
        }
    }
}

impl fmt::Display for Load {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Load::Finite(r) => write!(f, "{r}"),
            Load::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeMetrics {
    pub rate: Q,
    pub load: Load,
    pub cr_symbols: u64,
    /// The common randomness figure is the quoted requirement of the
    /// baseline, not what the construction here consumes.
    pub cr_quoted: bool,
    /// Downloaded symbols per server (measured only).
    pub downloads: BTreeMap<ServerId, u64>,
    /// Downloaded linear combinations, i.e. answer rows (measured only).
    pub rows: usize,
    pub lambda: Option<Lambda>,
}

fn q(n: u64) -> Q {
    Q::from_integer(n)
}

/// `R(lambda) = 1 / (K(1 + lambda) + (1 - lambda))`.
pub fn timeshare_rate(k: usize, lambda: Lambda) -> Q {
    let k = q(k as u64);
    let one = Q::one();
    (k * (one + lambda) + (one - lambda)).recip()
}

/// `l(lambda) = 1/(KD) + 2 lambda / (D (1 - lambda))`.
pub fn timeshare_load(k: usize, d: usize, lambda: Lambda) -> Load {
    let one = Q::one();
    if lambda >= one {
        return Load::Infinite;
    }
    let (k, d) = (q(k as u64), q(d as u64));
    Load::Finite((k * d).recip() + q(2) * lambda / (d * (one - lambda)))
}

/// Rate of time-sharing at load ratio `l`:
/// `1 / (K + (l K^2 D + K) / (l K D + 2K - 1))`.
pub fn tradeoff_rate(k: usize, d: usize, load: Q) -> Q {
    let (k, d) = (q(k as u64), q(d as u64));
    let frac = (load * k * k * d + k) / (load * k * d + q(2) * k - Q::one());
    (k + frac).recip()
}

/// Time-sharing parameter at which the load ratio is 2/3 with D = 3.
pub fn matching_lambda(k: usize) -> Lambda {
    let k = k as u64;
    Lambda::new(2 * k - 1, 4 * k - 1)
}

/// Whether `2/(3K)` beats time-sharing at the same load ratio.
pub fn d3_beats_timeshare(k: usize) -> bool {
    let lhs = Q::new(2, 3 * k as u64);
    let rhs = Q::new(4 * k as u64 - 1, 6 * (k * k) as u64);
    lhs > rhs && timeshare_rate(k, matching_lambda(k)) == rhs
}

/// Common randomness the baseline construction actually consumes: per pair
/// of dedicated servers, `2K - 1` distinct groups of `L / (D(D-1)/2)`
/// symbols.
pub fn baseline_cr_used(k: usize, l: usize) -> u64 {
    ((2 * k - 1) * l) as u64
}

/// Closed-form figures for a scheme with alphabet size `k`, `d` dedicated
/// servers and messages of `l` symbols.
pub fn closed_form(kind: SchemeKind, k: usize, d: usize, l: usize) -> Result<SchemeMetrics> {
    if k < 2 || d < 1 {
        return Err(config_err("closed forms need K >= 2 and D >= 1"));
    }
    let (kk, lu) = (k as u64, l as u64);
    let base = |rate, load, cr, quoted, lambda| SchemeMetrics {
        rate,
        load,
        cr_symbols: cr,
        cr_quoted: quoted,
        downloads: BTreeMap::new(),
        rows: 0,
        lambda,
    };
    Ok(match kind {
        SchemeKind::HetDapac => base(
            Q::new(1, kk + 1),
            Load::Finite(Q::new(1, kk * d as u64)),
            kk * lu,
            false,
            None,
        ),
        SchemeKind::Dapac => base(Q::new(1, 2 * kk), Load::Infinite, kk * kk * lu, true, None),
        SchemeKind::D3 => {
            if d != 3 {
                return Err(config_err("the D=3 scheme needs D = 3"));
            }
            if (kk * kk * lu) % 2 != 0 {
                return Err(config_err("K^2 L / 2 is not an integer"));
            }
            base(Q::new(2, 3 * kk), Load::Finite(Q::new(2, 3)), kk * kk * lu / 2, false, None)
        }
        SchemeKind::TimeShare(lambda) => {
            if lambda > Q::one() {
                return Err(config_err("lambda exceeds 1"));
            }
            // baseline part quoted at K^2 per symbol, central part at K
            let cr = lambda * q(kk * kk * lu) + (Q::one() - lambda) * q(kk * lu);
            if !cr.is_integer() {
                return Err(config_err("lambda * L is not an integer"));
            }
            base(
                timeshare_rate(k, lambda),
                timeshare_load(k, d, lambda),
                cr.to_integer(),
                !lambda.is_zero(),
                Some(lambda),
            )
        }
    })
}

/// Counts everything from a transcript: downloads per server, rate
/// `L / total`, load ratio and the distinct pad chunks the answers used.
pub fn measure(t: &Transcript) -> Result<SchemeMetrics> {
    let cfg = &t.cfg;
    let segments = segments_for(cfg, t.scheme)?;
    let mut downloads = BTreeMap::new();
    let mut chunks: BTreeMap<ChunkKey, usize> = BTreeMap::new();
    let mut rows = 0;
    for e in &t.exchanges {
        downloads.insert(e.server, e.answer.symbols() as u64);
        rows += e.answer.rows.len();
        for g in &e.query.groups {
            let width = segments
                .iter()
                .find(|s| s.component == g.component)
                .ok_or_else(|| config_err("query group for a segment the scheme does not use"))?
                .subpacket_len();
            let keys: Vec<_> = g.members.iter().map(|m| m.key.clone()).collect();
            for c in pad_keys(g.component, cfg.is_central(e.server), cfg.k, &keys)? {
                chunks.insert(c, width);
            }
        }
    }
    let total: u64 = downloads.values().sum();
    if total == 0 {
        return Err(config_err("transcript has no downloads"));
    }
    let central = downloads.get(&cfg.central()).copied().unwrap_or(0);
    let dedicated = cfg
        .dedicated()
        .map(|s| downloads.get(&s).copied().unwrap_or(0))
        .max()
        .unwrap_or(0);
    let load = if central == 0 {
        Load::Infinite
    } else {
        Load::Finite(Q::new(dedicated, central))
    };
    Ok(SchemeMetrics {
        rate: Q::new(cfg.l as u64, total),
        load,
        cr_symbols: chunks.values().map(|&w| w as u64).sum(),
        cr_quoted: false,
        downloads,
        rows,
        lambda: t.scheme.lambda(),
    })
}

/// One line of the metrics table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricsRow {
    pub scheme: SchemeKind,
    pub cfg_n: usize,
    pub cfg_d: usize,
    pub cfg_k: usize,
    pub q: u16,
    pub l: usize,
    pub metrics: SchemeMetrics,
}

impl MetricsRow {
    pub fn new(scheme: SchemeKind, cfg: &SystemConfig, metrics: SchemeMetrics) -> Self {
        MetricsRow {
            scheme,
            cfg_n: cfg.n,
            cfg_d: cfg.d,
            cfg_k: cfg.k,
            q: cfg.field.q(),
            l: cfg.l,
            metrics,
        }
    }

    fn record(&self, cfg_central: ServerId) -> Vec<String> {
        let m = &self.metrics;
        let (load_num, load_den) = m.load.parts();
        let dedicated: u64 = m
            .downloads
            .iter()
            .filter(|(s, _)| **s != cfg_central)
            .map(|(_, v)| v)
            .sum();
        let central = m.downloads.get(&cfg_central).copied().unwrap_or(0);
        vec![
            self.scheme.name().to_string(),
            self.cfg_n.to_string(),
            self.cfg_d.to_string(),
            self.cfg_k.to_string(),
            self.q.to_string(),
            self.l.to_string(),
            m.lambda.map(|l| l.to_string()).unwrap_or_default(),
            m.rate.numer().to_string(),
            m.rate.denom().to_string(),
            load_num.to_string(),
            load_den.to_string(),
            m.cr_symbols.to_string(),
            dedicated.to_string(),
            central.to_string(),
        ]
    }
}

pub const CSV_HEADER: [&str; 14] = [
    "scheme",
    "N",
    "D",
    "K",
    "q",
    "L",
    "lambda",
    "rate_num",
    "rate_den",
    "load_num",
    "load_den",
    "cr_symbols",
    "downloads_dedicated",
    "downloads_central",
];

/// Writes the rows as CSV. An infinite load ratio is written as `1/0`.
pub fn write_csv<W: io::Write>(rows: &[MetricsRow], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(r.record(ServerId(r.cfg_d + 1)))?;
    }
    w.flush()
}
