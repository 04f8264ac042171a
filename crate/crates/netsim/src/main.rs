use std::collections::BTreeMap;
use std::net::{SocketAddr, TcpListener};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dapac_core::auditor::Verdict;
use dapac_core::metrics::write_csv;
use dapac_core::model::{Claims, MessageStore, SeededCoins, ServerId};
use dapac_core::scheme::{parse_lambda, pool_seed, SchemeKind};
use dapac_netsim::config::ExperimentConfig;
use dapac_netsim::dump::TranscriptDump;
use dapac_netsim::frames::inspect;
use dapac_netsim::run::{metrics_table, run_audits, run_experiment, write_audits, AuditOptions, RunOptions};
use dapac_netsim::service::{pool_seed_from_env, run_client, serve, ServerSetup, POOL_SEED_ENV};

#[derive(Parser)]
#[command(name = "dapac", version, about = "Attribute-based private retrieval: simulate, audit and serve")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one in-process session and write its dump and metrics.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also run the audits and write their reports.
        #[arg(long)]
        audit: bool,
        #[command(flatten)]
        audit_opts: AuditArgs,
    },
    /// Run the audits only.
    Audit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        audit_opts: AuditArgs,
    },
    /// Measured metrics for a fixed sweep of systems, as CSV.
    MetricsTable {
        #[arg(long, default_value_t = 257)]
        q: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one server. The pool seed comes from the DAPAC_POOL_SEED variable.
    Serve {
        #[command(flatten)]
        common: Common,
        /// Server index, 1..=D+1.
        #[arg(long)]
        id: usize,
        #[arg(long)]
        listen: SocketAddr,
        /// Dedicated server addresses in order (central server only).
        #[arg(long, value_delimiter = ',')]
        dedicated: Vec<SocketAddr>,
    },
    /// Run one user session against live servers.
    Client {
        #[command(flatten)]
        common: Common,
        /// All server addresses in order 1..=D+1.
        #[arg(long, value_delimiter = ',', required = true)]
        servers: Vec<SocketAddr>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// dapac, hetdapac, d3 or timeshare; overrides the config.
    #[arg(long)]
    scheme: Option<String>,
    /// Time-share fraction a/b.
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Attribute labels the user asserts, comma separated.
    #[arg(long, value_delimiter = ',')]
    vstar: Option<Vec<String>>,
}

#[derive(Args)]
struct AuditArgs {
    /// Field size for the enumerating audits.
    #[arg(long, default_value_t = 2)]
    audit_q: u32,
    /// Number of seeds in the correctness sweep.
    #[arg(long, default_value_t = 100)]
    audit_seeds: u64,
}

impl AuditArgs {
    fn options(&self) -> AuditOptions {
        AuditOptions {
            q: self.audit_q,
            seeds: (0..self.audit_seeds).collect(),
            ..AuditOptions::default()
        }
    }
}

impl Common {
    fn scheme(&self) -> Result<Option<SchemeKind>> {
        let lambda = self.lambda.as_deref().map(parse_lambda).transpose()?;
        match (&self.scheme, lambda) {
            (Some(s), l) => {
                if l.is_some() && s != "timeshare" {
                    bail!("--lambda only applies to --scheme timeshare");
                }
                Ok(Some(SchemeKind::parse(s, l)?))
            }
            (None, Some(l)) => Ok(Some(SchemeKind::TimeShare(l))),
            (None, None) => Ok(None),
        }
    }

    fn load(&self) -> Result<ExperimentConfig> {
        let mut exp = ExperimentConfig::load(&self.config)?;
        if let Some(s) = self.scheme()? {
            exp.scheme = s;
        }
        if let Some(seed) = self.seed {
            exp.system.seed = seed;
        }
        Ok(exp)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn print_audits(audits: &[dapac_netsim::run::AuditEntry]) -> bool {
    for a in audits {
        println!("{}", a.text);
    }
    audits.iter().all(|a| a.verdict != Verdict::Fail)
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Run {
            common,
            out,
            audit,
            audit_opts,
        } => {
            let outcome = run_experiment(&RunOptions {
                config: common.config.clone(),
                scheme: common.scheme()?,
                seed: common.seed,
                vstar: common.vstar.clone(),
                out,
                audit: audit.then(|| audit_opts.options()),
            })?;
            let t = &outcome.transcript;
            let m = &outcome.metrics.metrics;
            println!("scheme: {}", t.scheme);
            println!("vstar: {}", t.cfg.label(&t.vstar));
            println!("downloaded_symbols: {}", t.total_downloads());
            println!("rate: {}", m.rate);
            println!("load_ratio: {}", m.load);
            println!("cr_symbols: {}", m.cr_symbols);
            println!("decoded_matches: {}", outcome.decoded_ok);
            println!("closed_form_matches: {}", outcome.closed_form_ok);
            for v in &outcome.inspector {
                println!("inspector: {v}");
            }
            print_audits(&outcome.audits);
            for f in &outcome.files {
                println!("wrote: {}", f.display());
            }
            Ok(outcome.success())
        }
        Cmd::Audit {
            common,
            out,
            audit_opts,
        } => {
            let exp = common.load()?;
            let vstar = match &common.vstar {
                Some(l) => exp.system.parse_labels(l)?,
                None => exp.true_vstar().clone(),
            };
            let audits = run_audits(exp.scheme, &exp.system, &vstar, &audit_opts.options());
            if let Some(dir) = out {
                write_audits(&dir, &audits)?;
            }
            Ok(print_audits(&audits))
        }
        Cmd::MetricsTable { q, seed, out } => {
            let rows = metrics_table(q, seed)?;
            match out {
                Some(p) => write_csv(&rows, std::fs::File::create(&p).with_context(|| p.display().to_string())?)?,
                None => write_csv(&rows, std::io::stdout())?,
            }
            Ok(true)
        }
        Cmd::Serve {
            common,
            id,
            listen,
            dedicated,
        } => {
            let exp = common.load()?;
            if std::env::var(POOL_SEED_ENV).is_err() {
                log::warn!("{POOL_SEED_ENV} unset; using the pool seed derived from the config seed");
            }
            let setup = ServerSetup {
                id: ServerId(id),
                pool_seed: pool_seed_from_env(pool_seed(exp.system.seed))?,
                dedicated: dedicated.into_iter().enumerate().map(|(i, a)| (ServerId(i + 1), a)).collect(),
                cfg: exp.system,
                scheme: exp.scheme,
                registry: exp.registry,
                relay_timeout: std::time::Duration::from_secs(30),
            };
            let listener = TcpListener::bind(listen)?;
            eprintln!("server {id} listening on {}", listener.local_addr()?);
            serve(listener, setup)?;
            Ok(true)
        }
        Cmd::Client { common, servers, out } => {
            let exp = common.load()?;
            let cfg = &exp.system;
            if servers.len() != cfg.d + 1 {
                bail!("expected {} server addresses, got {}", cfg.d + 1, servers.len());
            }
            let addrs: BTreeMap<_, _> = servers.into_iter().enumerate().map(|(i, a)| (ServerId(i + 1), a)).collect();
            let vstar = match &common.vstar {
                Some(l) => cfg.parse_labels(l)?,
                None => exp.true_vstar().clone(),
            };
            let claims = Claims::honest(cfg, &vstar);
            let coins = SeededCoins::new(cfg.seed, cfg.field);
            let outcome = run_client(cfg, exp.scheme, &exp.user, &vstar, &claims, &addrs, &coins)?;
            let t = &outcome.transcript;
            // the store is public test data, so the client can check itself
            let ok = MessageStore::generate(cfg, cfg.seed).get(&vstar) == Some(t.decoded.as_slice());
            std::fs::create_dir_all(&out)?;
            let path = out.join("transcript.toml");
            let pool = pool_seed_from_env(pool_seed(cfg.seed))?;
            TranscriptDump::new(t, &exp.user, cfg.seed, pool, &outcome.frames).write(&path)?;
            let violations = inspect(cfg, &outcome.frames);
            for v in &violations {
                println!("inspector: {v}");
            }
            println!("downloaded_symbols: {}", t.total_downloads());
            println!("decoded_matches: {ok}");
            println!("wrote: {}", path.display());
            Ok(ok && violations.is_empty())
        }
    }
}
