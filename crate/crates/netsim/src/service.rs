//! Service mode: one TCP listener per server, one thread per connection.
//!
//! Each connection is a small state machine. A user connection must verify
//! before it may query. The central server relays the verified tail to
//! every dedicated server and waits for each acknowledgement before it
//! replies `VERIFY_OK`. A dedicated server holds a `QUERY` until the relay
//! for that user has arrived.

use std::collections::{BTreeMap, HashMap};
use std::io::BufReader;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use dapac_core::model::{
    check_claims, Answer, Claims, Exchange, Knowledge, MessageStore, RandomnessPool, Registry, Segment,
    ServerId, ServerNode, SystemConfig, Transcript,
};
use dapac_core::scheme::{build_queries, decode, segments_for, SchemeKind};

use crate::frames::{LoggedFrame, Node};
use crate::wire::{
    decode_answer, decode_query, decode_relay, decode_text, decode_verify_req, encode_answer, encode_query,
    encode_relay, encode_text, encode_verify_req, Frame, Tag, WireError,
};
use crate::NetError;

const IO_TIMEOUT: Duration = Duration::from_secs(30);

/// Environment variable holding the pool seed in `serve`.
pub const POOL_SEED_ENV: &str = "DAPAC_POOL_SEED";

#[derive(Debug, Clone)]
pub struct ServerSetup {
    pub id: ServerId,
    pub cfg: SystemConfig,
    pub scheme: SchemeKind,
    pub registry: Registry,
    pub pool_seed: u64,
    /// Dedicated server addresses, used by the central server only.
    pub dedicated: BTreeMap<ServerId, SocketAddr>,
    pub relay_timeout: Duration,
}

struct Shared {
    setup: ServerSetup,
    segments: Vec<Segment>,
    store: MessageStore,
    pool: RandomnessPool,
    relays: Mutex<HashMap<String, Vec<(usize, u16)>>>,
    relay_arrived: Condvar,
    /// Tags of every frame received, in arrival order.
    events: Mutex<Vec<Tag>>,
}

impl Shared {
    fn central(&self) -> bool {
        self.setup.cfg.is_central(self.setup.id)
    }

    fn wait_relay(&self, user: &str) -> Option<Vec<(usize, u16)>> {
        let relays = self.relays.lock().expect("relay lock");
        let (relays, _) = self
            .relay_arrived
            .wait_timeout_while(relays, self.setup.relay_timeout, |r| !r.contains_key(user))
            .expect("relay lock");
        relays.get(user).cloned()
    }
}

pub struct ServerHandle {
    pub id: ServerId,
    pub addr: SocketAddr,
    shared: Arc<Shared>,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn events(&self) -> Vec<Tag> {
        self.shared.events.lock().expect("event lock").clone()
    }

    pub fn shutdown(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn prepare(setup: ServerSetup) -> Result<Arc<Shared>, NetError> {
    let segments = segments_for(&setup.cfg, setup.scheme)?;
    if setup.cfg.is_central(setup.id) && setup.dedicated.len() != setup.cfg.d {
        return Err(NetError::Config(format!(
            "central server needs {} dedicated addresses, got {}",
            setup.cfg.d,
            setup.dedicated.len()
        )));
    }
    if setup.id.0 == 0 || setup.id.0 > setup.cfg.d + 1 {
        return Err(NetError::Config(format!("server id {} out of range", setup.id)));
    }
    Ok(Arc::new(Shared {
        store: MessageStore::generate(&setup.cfg, setup.cfg.seed),
        pool: RandomnessPool::new(setup.pool_seed, setup.cfg.field),
        segments,
        setup,
        relays: Mutex::new(HashMap::new()),
        relay_arrived: Condvar::new(),
        events: Mutex::new(Vec::new()),
    }))
}

fn accept_loop(listener: TcpListener, shared: Arc<Shared>, stop: Arc<AtomicBool>) {
    for stream in listener.incoming() {
        if stop.load(Ordering::SeqCst) {
            break;
        }
        let Ok(stream) = stream else { continue };
        let shared = Arc::clone(&shared);
        thread::spawn(move || {
            if let Err(e) = handle(&shared, stream) {
                log::warn!("server {}: {e}", shared.setup.id);
            }
        });
    }
}

/// Serves on a background thread until the handle is shut down or dropped.
pub fn spawn_server(listener: TcpListener, setup: ServerSetup) -> Result<ServerHandle, NetError> {
    let shared = prepare(setup)?;
    let addr = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let thread = {
        let (shared, stop) = (Arc::clone(&shared), Arc::clone(&stop));
        thread::spawn(move || accept_loop(listener, shared, stop))
    };
    Ok(ServerHandle {
        id: shared.setup.id,
        addr,
        shared,
        stop,
        thread: Some(thread),
    })
}

/// Serves on the calling thread forever.
pub fn serve(listener: TcpListener, setup: ServerSetup) -> Result<(), NetError> {
    let shared = prepare(setup)?;
    accept_loop(listener, shared, Arc::new(AtomicBool::new(false)));
    Ok(())
}

fn send(w: &mut TcpStream, tag: Tag, payload: Vec<u8>) -> Result<(), NetError> {
    Frame::new(tag, payload).write_to(w)?;
    Ok(())
}

fn handle(shared: &Shared, stream: TcpStream) -> Result<(), NetError> {
    stream.set_read_timeout(Some(IO_TIMEOUT))?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut w = stream;
    let cfg = &shared.setup.cfg;
    let id = shared.setup.id;
    let mut verified: Option<(String, Knowledge)> = None;
    loop {
        let frame = match Frame::read_from(&mut reader) {
            Ok(f) => f,
            Err(WireError::Frame(_)) => return Ok(()),
            Err(e) => return Err(e.into()),
        };
        shared.events.lock().expect("event lock").push(frame.tag);
        match frame.tag {
            Tag::VerifyReq => {
                let (user, claims) = match decode_verify_req(&frame.payload) {
                    Ok(x) => x,
                    Err(e) => return send(&mut w, Tag::Error, encode_text(&e.to_string())),
                };
                let known = match check_claims(cfg, id, &user, &claims, &shared.setup.registry) {
                    Ok(k) => k,
                    Err(e) => return send(&mut w, Tag::VerifyFail, encode_text(&e.to_string())),
                };
                if shared.central() {
                    if let Err(e) = relay(shared, &user, &claims) {
                        return send(&mut w, Tag::Error, encode_text(&format!("relay failed: {e}")));
                    }
                }
                verified = Some((user, known));
                send(&mut w, Tag::VerifyOk, vec![])?;
            }
            Tag::AttrRelay if !shared.central() => {
                let (user, relayed) = decode_relay(&frame.payload)?;
                shared.relays.lock().expect("relay lock").insert(user, relayed);
                shared.relay_arrived.notify_all();
                send(&mut w, Tag::VerifyOk, vec![])?;
            }
            Tag::Query => {
                let Some((user, known)) = &verified else {
                    return send(&mut w, Tag::Error, encode_text("query before verification"));
                };
                let mut known = known.clone();
                if !shared.central() {
                    match shared.wait_relay(user) {
                        Some(r) => known.extend(r),
                        None => return send(&mut w, Tag::Error, encode_text("no relay from the central server")),
                    }
                }
                let reply = decode_query(&frame.payload, cfg.field)
                    .map_err(NetError::from)
                    .and_then(|q| {
                        let node = ServerNode::new(cfg, id, &known, &shared.segments, &shared.store, &shared.pool);
                        Ok(node.answer(&q)?)
                    });
                match reply {
                    Ok(a) => send(&mut w, Tag::Answer, encode_answer(&a))?,
                    Err(e) => return send(&mut w, Tag::Error, encode_text(&e.to_string())),
                }
            }
            other => {
                return send(&mut w, Tag::Error, encode_text(&format!("unexpected {}", other.name())));
            }
        }
    }
}

fn relay(shared: &Shared, user: &str, tail: &[(usize, u16)]) -> Result<(), NetError> {
    for (s, addr) in &shared.setup.dedicated {
        let mut stream = TcpStream::connect_timeout(addr, IO_TIMEOUT)?;
        stream.set_read_timeout(Some(IO_TIMEOUT))?;
        send(&mut stream, Tag::AttrRelay, encode_relay(user, tail))?;
        let ack = Frame::read_from(&mut stream)?;
        if ack.tag != Tag::VerifyOk {
            return Err(NetError::Config(format!("server {s} answered the relay with {}", ack.tag.name())));
        }
    }
    Ok(())
}

/// All `D + 1` servers on loopback ports, for tests and demos.
pub struct Cluster {
    pub servers: Vec<ServerHandle>,
}

impl Cluster {
    pub fn spawn(cfg: &SystemConfig, scheme: SchemeKind, registry: &Registry, pool_seed: u64) -> Result<Self, NetError> {
        let mut listeners = BTreeMap::new();
        for s in 1..=cfg.d + 1 {
            listeners.insert(ServerId(s), TcpListener::bind("127.0.0.1:0")?);
        }
        let mut dedicated = BTreeMap::new();
        for s in cfg.dedicated() {
            dedicated.insert(s, listeners[&s].local_addr()?);
        }
        let mut servers = Vec::new();
        for (id, listener) in listeners {
            let setup = ServerSetup {
                id,
                cfg: cfg.clone(),
                scheme,
                registry: registry.clone(),
                pool_seed,
                dedicated: if cfg.is_central(id) { dedicated.clone() } else { BTreeMap::new() },
                relay_timeout: IO_TIMEOUT,
            };
            servers.push(spawn_server(listener, setup)?);
        }
        Ok(Cluster { servers })
    }

    pub fn addrs(&self) -> BTreeMap<ServerId, SocketAddr> {
        self.servers.iter().map(|s| (s.id, s.addr)).collect()
    }

    pub fn server(&self, id: ServerId) -> &ServerHandle {
        self.servers.iter().find(|s| s.id == id).expect("server in cluster")
    }
}

#[derive(Debug, Clone)]
pub struct ClientOutcome {
    pub transcript: Transcript,
    /// Every frame the user sent or received.
    pub frames: Vec<LoggedFrame>,
}

struct Conn {
    id: ServerId,
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

struct ClientLog {
    frames: Vec<LoggedFrame>,
    exchanges: Vec<Exchange>,
}

impl ClientLog {
    fn fail(self, reason: impl Into<String>) -> NetError {
        NetError::Session {
            reason: reason.into(),
            frames: self.frames,
            exchanges: self.exchanges,
        }
    }

    fn send(&mut self, c: &mut Conn, tag: Tag, payload: Vec<u8>) -> Result<(), String> {
        let f = LoggedFrame::new(Node::User, Node::Server(c.id), tag, payload);
        f.frame.write_to(&mut c.writer).map_err(|e| format!("send to server {}: {e}", c.id))?;
        self.frames.push(f);
        Ok(())
    }

    fn recv(&mut self, c: &mut Conn) -> Result<Frame, String> {
        let f = Frame::read_from(&mut c.reader).map_err(|e| format!("receive from server {}: {e}", c.id))?;
        self.frames.push(LoggedFrame {
            from: Node::Server(c.id),
            to: Node::User,
            frame: f.clone(),
        });
        Ok(f)
    }
}

fn connect(id: ServerId, addr: SocketAddr) -> Result<Conn, NetError> {
    let s = TcpStream::connect_timeout(&addr, IO_TIMEOUT)?;
    s.set_read_timeout(Some(IO_TIMEOUT))?;
    Ok(Conn {
        id,
        reader: BufReader::new(s.try_clone()?),
        writer: s,
    })
}

/// One user session against live servers: verification with every server
/// (central first), then every query, then every answer. The coins come from
/// `coins`; decoding happens locally.
pub fn run_client(
    cfg: &SystemConfig,
    scheme: SchemeKind,
    user: &str,
    vstar: &dapac_core::model::AttributeVector,
    claims: &Claims,
    addrs: &BTreeMap<ServerId, SocketAddr>,
    coins: &dyn dapac_core::model::CoinSource,
) -> Result<ClientOutcome, NetError> {
    let mut order = vec![cfg.central()];
    order.extend(cfg.dedicated());
    let mut conns = Vec::new();
    for &s in &order {
        let addr = addrs
            .get(&s)
            .ok_or_else(|| NetError::Config(format!("no address for server {s}")))?;
        conns.push(connect(s, *addr)?);
    }
    let mut log = ClientLog {
        frames: Vec::new(),
        exchanges: Vec::new(),
    };
    for c in conns.iter_mut() {
        let payload = encode_verify_req(user, claims.for_server(c.id));
        if let Err(e) = log.send(c, Tag::VerifyReq, payload) {
            return Err(log.fail(e));
        }
    }
    for c in conns.iter_mut() {
        let f = match log.recv(c) {
            Ok(f) => f,
            Err(e) => return Err(log.fail(e)),
        };
        match f.tag {
            Tag::VerifyOk => {}
            Tag::VerifyFail => {
                return Err(NetError::Rejected {
                    server: c.id,
                    reason: decode_text(&f.payload).unwrap_or_default(),
                    frames: log.frames,
                })
            }
            other => {
                let why = decode_text(&f.payload).unwrap_or_default();
                return Err(log.fail(format!("server {} sent {} during verification: {why}", c.id, other.name())));
            }
        }
    }

    let (plan, realized, queries) = build_queries(scheme, cfg, vstar, coins)?;
    conns.sort_by_key(|c| c.id);
    let mut queried: Vec<(&mut Conn, dapac_core::model::Query)> = Vec::new();
    for c in conns.iter_mut() {
        if let Some(q) = queries.get(&c.id) {
            queried.push((c, q.clone()));
        }
    }
    for (c, q) in queried.iter_mut() {
        if let Err(e) = log.send(c, Tag::Query, encode_query(q)) {
            return Err(log.fail(e));
        }
    }
    let mut answers: BTreeMap<ServerId, Answer> = BTreeMap::new();
    for (c, q) in queried {
        let f = match log.recv(c) {
            Ok(f) => f,
            Err(e) => return Err(log.fail(e)),
        };
        if f.tag != Tag::Answer {
            let why = decode_text(&f.payload).unwrap_or_default();
            return Err(log.fail(format!("server {} sent {}: {why}", c.id, f.tag.name())));
        }
        let answer = match decode_answer(&f.payload, cfg.field) {
            Ok(a) => a,
            Err(e) => return Err(log.fail(format!("server {}: {e}", c.id))),
        };
        answers.insert(c.id, answer.clone());
        log.exchanges.push(Exchange {
            server: c.id,
            query: q,
            answer,
        });
    }
    let decoded = match decode(&plan, &realized, &answers, cfg.l) {
        Ok(d) => d,
        Err(e) => return Err(log.fail(e.to_string())),
    };
    Ok(ClientOutcome {
        transcript: Transcript {
            scheme,
            cfg: cfg.clone(),
            vstar: vstar.clone(),
            exchanges: log.exchanges,
            decoded,
        },
        frames: log.frames,
    })
}

/// Pool seed from the environment, falling back to `fallback`.
pub fn pool_seed_from_env(fallback: u64) -> Result<u64, NetError> {
    match std::env::var(POOL_SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| NetError::Config(format!("{POOL_SEED_ENV}={v:?} is not a u64"))),
        Err(_) => Ok(fallback),
    }
}
