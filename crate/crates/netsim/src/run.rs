//! In-process experiments: one session, its dump, its metrics row and
//! optional audits.

use std::fs;
use std::path::{Path, PathBuf};

use dapac_core::auditor::{
    audit_attribute_privacy, audit_correctness, audit_database_secrecy, audit_query_message_independence,
    render_independence, session_queries, AnswerFault, PadMode, Verdict, DEFAULT_BOUND,
};
use dapac_core::field::FieldPrime;
use dapac_core::metrics::{closed_form, measure, write_csv, MetricsRow};
use dapac_core::model::{
    verify_attributes, AttributeVector, Claims, MessageStore, RandomnessPool, SeededCoins, ServerId, SystemConfig,
    Transcript,
};
use dapac_core::scheme::{pool_seed, retrieve, segments_for, SchemeKind};
use dapac_core::Lambda;

use crate::config::ExperimentConfig;
use crate::dump::TranscriptDump;
use crate::frames::{inspect, session_frames, LoggedFrame};
use crate::NetError;

/// One audit's outcome as text plus its verdict.
#[derive(Debug, Clone)]
pub struct AuditEntry {
    pub name: String,
    pub verdict: Verdict,
    pub text: String,
}

impl AuditEntry {
    fn failed(name: &str, why: impl std::fmt::Display) -> Self {
        AuditEntry {
            name: name.into(),
            verdict: Verdict::Fail,
            text: format!("audit: {name}\nverdict: FAIL\nerror: {why}\n"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AuditOptions {
    /// Field size for the enumerating audits.
    pub q: u32,
    /// Seeds for the correctness sweep.
    pub seeds: Vec<u64>,
    pub bound: u128,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            q: 2,
            seeds: (0..100).collect(),
            bound: DEFAULT_BOUND,
        }
    }
}

/// The configuration the enumerating audits use: the field shrunk to `q` and
/// the message cut to the shortest length the scheme accepts.
pub fn audit_config(cfg: &SystemConfig, scheme: SchemeKind, q: u32) -> Result<SystemConfig, NetError> {
    let field = FieldPrime::new(q).map_err(|e| NetError::Config(e.to_string()))?;
    for l in 1..=cfg.l.max(64) {
        let c = SystemConfig { field, l, ..cfg.clone() };
        if segments_for(&c, scheme).is_ok() {
            return Ok(c);
        }
    }
    Err(NetError::Config(format!("no message length up to {} suits {scheme}", cfg.l.max(64))))
}

/// Correctness over `opts.seeds`, query independence, attribute privacy at
/// every server and database secrecy for `vstar`. Distances must be zero
/// except the D3 attribute-privacy distance, which is reported.
pub fn run_audits(
    scheme: SchemeKind,
    cfg: &SystemConfig,
    vstar: &AttributeVector,
    opts: &AuditOptions,
) -> Vec<AuditEntry> {
    let mut out = Vec::new();
    let entry = |name: &str, t: dapac_core::auditor::AuditText| AuditEntry {
        name: name.into(),
        verdict: t.verdict,
        text: t.to_string(),
    };
    out.push(match audit_correctness(scheme, cfg, &opts.seeds, AnswerFault::None) {
        Ok(r) => entry("correctness", r.render(cfg)),
        Err(e) => AuditEntry::failed("correctness", e),
    });
    out.push(
        match audit_query_message_independence(cfg, |s| session_queries(scheme, cfg, vstar, s)) {
            Ok(b) => entry("query-independence", render_independence(scheme, cfg, b)),
            Err(e) => AuditEntry::failed("query-independence", e),
        },
    );
    let small = match audit_config(cfg, scheme, opts.q) {
        Ok(c) => c,
        Err(e) => {
            out.push(AuditEntry::failed("attribute-privacy", &e));
            out.push(AuditEntry::failed("database-secrecy", e));
            return out;
        }
    };
    let expect_zero = scheme != SchemeKind::D3;
    for s in 1..=small.d + 1 {
        let name = format!("attribute-privacy-server{s}");
        out.push(match audit_attribute_privacy(scheme, &small, ServerId(s), opts.bound) {
            Ok(r) => entry(&name, r.render(&small, expect_zero)),
            Err(e) => AuditEntry::failed(&name, e),
        });
    }
    let one = [vstar.clone()];
    out.push(
        match audit_database_secrecy(scheme, &small, Some(&one), &[small.seed], PadMode::Honest, opts.bound) {
            Ok(r) => entry("database-secrecy", r.render(&small, true)),
            Err(e) => AuditEntry::failed("database-secrecy", e),
        },
    );
    out
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config: PathBuf,
    pub scheme: Option<SchemeKind>,
    pub seed: Option<u64>,
    /// Attribute labels the user asserts; defaults to the registered ones.
    pub vstar: Option<Vec<String>>,
    pub out: PathBuf,
    pub audit: Option<AuditOptions>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub transcript: Transcript,
    pub decoded_ok: bool,
    pub metrics: MetricsRow,
    /// Whether the measured metrics equal the closed forms.
    pub closed_form_ok: bool,
    pub inspector: Vec<String>,
    pub audits: Vec<AuditEntry>,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn success(&self) -> bool {
        self.decoded_ok
            && self.closed_form_ok
            && self.inspector.is_empty()
            && self.audits.iter().all(|a| a.verdict != Verdict::Fail)
    }
}

/// An honest in-process session with the seeds the service mode uses by
/// default: store and coins from the config seed, pool from `pool_seed`.
pub fn simulate_session(
    cfg: &SystemConfig,
    scheme: SchemeKind,
    user: &str,
    vstar: &AttributeVector,
    claims: &Claims,
    registry: &dapac_core::model::Registry,
    pool: u64,
) -> Result<(Transcript, Vec<LoggedFrame>), NetError> {
    let outcome = verify_attributes(cfg, user, claims, registry)?;
    let store = MessageStore::generate(cfg, cfg.seed);
    let t = retrieve(
        scheme,
        cfg,
        vstar,
        &outcome,
        &store,
        &RandomnessPool::new(pool, cfg.field),
        &SeededCoins::new(cfg.seed, cfg.field),
        &mut |_, _| {},
    )?;
    let frames = session_frames(cfg, user, claims, &outcome, &t);
    Ok((t, frames))
}

fn metrics_matches_closed_form(t: &Transcript, m: &dapac_core::metrics::SchemeMetrics) -> Result<bool, NetError> {
    let c = closed_form(t.scheme, t.cfg.k, t.cfg.d, t.cfg.l)?;
    let cr_ok = c.cr_quoted || c.cr_symbols == m.cr_symbols;
    Ok(c.rate == m.rate && c.load == m.load && cr_ok)
}

pub fn run_experiment(opts: &RunOptions) -> Result<RunOutcome, NetError> {
    let mut exp = ExperimentConfig::load(&opts.config)?;
    if let Some(s) = opts.scheme {
        exp.scheme = s;
    }
    if let Some(seed) = opts.seed {
        exp.system.seed = seed;
    }
    let cfg = &exp.system;
    let vstar = match &opts.vstar {
        Some(labels) => cfg.parse_labels(labels)?,
        None => exp.true_vstar().clone(),
    };
    let claims = Claims::honest(cfg, &vstar);
    let pool = pool_seed(cfg.seed);
    let (t, frames) = simulate_session(cfg, exp.scheme, &exp.user, &vstar, &claims, &exp.registry, pool)?;
    let store = MessageStore::generate(cfg, cfg.seed);
    let decoded_ok = store.get(&vstar).is_some_and(|m| m == t.decoded.as_slice());
    let m = measure(&t)?;
    let closed_form_ok = metrics_matches_closed_form(&t, &m)?;
    let row = MetricsRow::new(exp.scheme, cfg, m);

    fs::create_dir_all(&opts.out)?;
    let mut files = Vec::new();
    let dump_path = opts.out.join("transcript.toml");
    TranscriptDump::new(&t, &exp.user, cfg.seed, pool, &frames).write(&dump_path)?;
    files.push(dump_path);
    let csv_path = opts.out.join("metrics.csv");
    write_csv(std::slice::from_ref(&row), fs::File::create(&csv_path)?)?;
    files.push(csv_path);

    let audits = match &opts.audit {
        Some(a) => run_audits(exp.scheme, cfg, &vstar, a),
        None => Vec::new(),
    };
    files.extend(write_audits(&opts.out, &audits)?);
    Ok(RunOutcome {
        inspector: inspect(cfg, &frames),
        transcript: t,
        decoded_ok,
        metrics: row,
        closed_form_ok,
        audits,
        files,
    })
}

/// Measured metrics for a fixed sweep: each scheme on small systems, and the
/// time-share curve on (3,2,2).
pub fn metrics_table(q: u32, seed: u64) -> Result<Vec<MetricsRow>, NetError> {
    let field = FieldPrime::new(q).map_err(|e| NetError::Config(e.to_string()))?;
    let mut jobs: Vec<(SchemeKind, usize, usize, usize, usize)> = Vec::new();
    for (n, d) in [(3, 2), (3, 3), (4, 3)] {
        let p = d * (d - 1) / 2;
        jobs.push((SchemeKind::Dapac, n, d, 2, p));
    }
    for k in 2..=4 {
        for d in 2..=3 {
            jobs.push((SchemeKind::HetDapac, d + 1, d, k, d));
        }
    }
    for k in 2..=3 {
        jobs.push((SchemeKind::D3, 4, 3, k, 6));
    }
    for (a, b) in [(0, 1), (1, 4), (1, 2), (3, 4)] {
        jobs.push((SchemeKind::TimeShare(Lambda::new(a, b)), 3, 2, 2, 8));
    }
    let mut rows = Vec::new();
    for (scheme, n, d, k, l) in jobs {
        let cfg = SystemConfig::with_default_alphabets(n, d, k, field, l, seed)?;
        let vstar = AttributeVector::new(vec![0; n]);
        let (t, _) = dapac_core::scheme::simulate(scheme, &cfg, &vstar)?;
        rows.push(MetricsRow::new(scheme, &cfg, measure(&t)?));
    }
    Ok(rows)
}

pub fn write_audits(dir: &Path, audits: &[AuditEntry]) -> Result<Vec<PathBuf>, NetError> {
    fs::create_dir_all(dir)?;
    audits
        .iter()
        .map(|a| {
            let p = dir.join(format!("audit-{}.txt", a.name));
            fs::write(&p, &a.text)?;
            Ok(p)
        })
        .collect()
}
