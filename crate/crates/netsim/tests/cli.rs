use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dapac_netsim::dump::TranscriptDump;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn dapac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dapac")).args(args).output().unwrap()
}

fn run(cfg: &str, extra: &[&str]) -> (Output, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let c = config(cfg);
    let mut args = vec!["run", "--config", c.to_str().unwrap(), "--out", dir.path().to_str().unwrap()];
    args.extend_from_slice(extra);
    (dapac(&args), dir)
}

fn csv_row(dir: &Path) -> Vec<(String, String)> {
    let text = std::fs::read_to_string(dir.join("metrics.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    header.into_iter().zip(lines.next().unwrap().split(',').map(String::from)).collect()
}

fn field(row: &[(String, String)], key: &str) -> String {
    row.iter().find(|(k, _)| k == key).unwrap().1.clone()
}

#[test]
fn hetdapac_run_writes_rate_one_third() {
    let (out, dir) = run("ex322.toml", &["--scheme", "hetdapac"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let row = csv_row(dir.path());
    assert_eq!((field(&row, "rate_num"), field(&row, "rate_den")), ("1".into(), "3".into()));
    let dump = TranscriptDump::read(&dir.path().join("transcript.toml")).unwrap();
    let t = dump.transcript().unwrap();
    assert_eq!(t.total_downloads(), 6);
    assert_eq!(dump.vstar, "a2y");
    assert_eq!(dump.decoded, t.decoded.iter().map(|e| e.value()).collect::<Vec<_>>());
}

#[test]
fn baseline_run_downloads_twelve_symbols() {
    let (out, dir) = run("ex32.toml", &["--scheme", "dapac"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("downloaded_symbols: 12"), "{stdout}");
    let row = csv_row(dir.path());
    assert_eq!(field(&row, "downloads_dedicated"), "12");
}

#[test]
fn d3_run_downloads_eighteen_subpackets() {
    let (out, dir) = run("ex432.toml", &["--scheme", "d3"]);
    assert!(out.status.success());
    let t = TranscriptDump::read(&dir.path().join("transcript.toml")).unwrap().transcript().unwrap();
    let rows: usize = t.exchanges.iter().map(|x| x.answer.rows.len()).sum();
    assert_eq!(rows, 18);
}

#[test]
fn timeshare_and_audit_reports() {
    // L = 8 so that both halves split evenly
    let text = std::fs::read_to_string(config("ex322.toml")).unwrap().replace("L = 2", "L = 8");
    let cfg_dir = tempfile::tempdir().unwrap();
    std::fs::write(cfg_dir.path().join("ts.toml"), text.replace("registry.toml", config("registry.toml").to_str().unwrap())).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cfg = cfg_dir.path().join("ts.toml");
    let out = dapac(&[
        "run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(),
        "--scheme", "timeshare", "--lambda", "1/2", "--seed", "3", "--audit", "--audit-seeds", "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(field(&csv_row(dir.path()), "lambda"), "1/2");
    let secrecy = std::fs::read_to_string(dir.path().join("audit-database-secrecy.txt")).unwrap();
    assert!(secrecy.contains("verdict: PASS"));
    assert!(dir.path().join("audit-attribute-privacy-server3.txt").exists());
}

#[test]
fn failures_give_nonzero_exit() {
    // a vector the registry does not back fails verification
    let (out, _d) = run("ex322.toml", &["--vstar", "b,2,y"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("verification failed"));
    let (out, _d) = run("ex322.toml", &["--scheme", "d3"]);
    assert_eq!(out.status.code(), Some(2));
    let (out, _d) = run("ex322.toml", &["--lambda", "1/3"]);
    assert_eq!(out.status.code(), Some(2));
    let out = dapac(&["run", "--config", "/nonexistent.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn metrics_table_lists_every_scheme() {
    let out = dapac(&["metrics-table"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("scheme,N,D,K,q,L,lambda,"));
    for s in ["dapac,", "hetdapac,", "d3,", "timeshare,"] {
        assert!(text.lines().any(|l| l.starts_with(s)), "{s}");
    }
    assert!(text.contains("hetdapac,3,2,2,257,2,,1,3,1,4,4,2,4"));
}

#[test]
fn serve_and_client_binaries_talk() {
    use std::net::TcpListener;
    let c = config("ex322.toml");
    let ports: Vec<u16> = (0..3)
        .map(|_| TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port())
        .collect();
    let addr = |i: usize| format!("127.0.0.1:{}", ports[i]);
    let mut servers = Vec::new();
    for id in 1..=3 {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_dapac"));
        cmd.args(["serve", "--config", c.to_str().unwrap(), "--id", &id.to_string(), "--listen", &addr(id - 1)])
            .env("DAPAC_POOL_SEED", "99")
            .stderr(std::process::Stdio::null());
        if id == 3 {
            cmd.args(["--dedicated", &format!("{},{}", addr(0), addr(1))]);
        }
        servers.push(cmd.spawn().unwrap());
    }
    // wait for the listeners
    for i in 0..3 {
        let deadline = std::time::Instant::now() + std::time::Duration::from_secs(20);
        while std::net::TcpStream::connect(addr(i)).is_err() {
            assert!(std::time::Instant::now() < deadline, "server {i} did not start");
            std::thread::sleep(std::time::Duration::from_millis(20));
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_dapac"))
        .args(["client", "--config", c.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .args(["--servers", &format!("{},{},{}", addr(0), addr(1), addr(2))])
        .env("DAPAC_POOL_SEED", "99")
        .output()
        .unwrap();
    for mut s in servers {
        let _ = s.kill();
        let _ = s.wait();
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("decoded_matches: true"));
    let dump = TranscriptDump::read(&dir.path().join("transcript.toml")).unwrap();
    assert_eq!(dump.pool_seed, 99);
    assert_eq!(dump.frames.iter().filter(|f| f.tag == "QUERY").count(), 3);
}
