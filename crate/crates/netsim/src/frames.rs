//! Frame logs of a session and the wire-level inspector.

use std::fmt;

use dapac_core::model::{Claims, ServerId, SystemConfig, Transcript, VerificationOutcome};

use crate::wire::{
    decode_relay, decode_verify_req, encode_answer, encode_query, encode_relay, encode_verify_req, Frame, Tag,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    User,
    Server(ServerId),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::User => f.write_str("user"),
            Node::Server(s) => write!(f, "server{}", s.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoggedFrame {
    pub from: Node,
    pub to: Node,
    pub frame: Frame,
}

impl LoggedFrame {
    pub fn new(from: Node, to: Node, tag: Tag, payload: Vec<u8>) -> Self {
        LoggedFrame {
            from,
            to,
            frame: Frame::new(tag, payload),
        }
    }

    pub fn touches_user(&self) -> bool {
        self.from == Node::User || self.to == Node::User
    }
}

/// The frames an honest session exchanges, in protocol order: verification
/// requests (central first), relays and their acknowledgements, the
/// verification replies, then one query and answer per queried server.
pub fn session_frames(
    cfg: &SystemConfig,
    user: &str,
    claims: &Claims,
    outcome: &VerificationOutcome,
    t: &Transcript,
) -> Vec<LoggedFrame> {
    let central = Node::Server(cfg.central());
    let mut servers = vec![cfg.central()];
    servers.extend(cfg.dedicated());
    let mut out = Vec::new();
    for &s in &servers {
        let payload = encode_verify_req(user, claims.for_server(s));
        out.push(LoggedFrame::new(Node::User, Node::Server(s), Tag::VerifyReq, payload));
    }
    for s in cfg.dedicated() {
        let relay = encode_relay(user, &outcome.relayed);
        out.push(LoggedFrame::new(central, Node::Server(s), Tag::AttrRelay, relay));
        out.push(LoggedFrame::new(Node::Server(s), central, Tag::VerifyOk, vec![]));
    }
    for &s in &servers {
        out.push(LoggedFrame::new(Node::Server(s), Node::User, Tag::VerifyOk, vec![]));
    }
    for x in &t.exchanges {
        out.push(LoggedFrame::new(Node::User, Node::Server(x.server), Tag::Query, encode_query(&x.query)));
    }
    for x in &t.exchanges {
        out.push(LoggedFrame::new(Node::Server(x.server), Node::User, Tag::Answer, encode_answer(&x.answer)));
    }
    out
}

/// Returns one line per violation: a frame from the user to a dedicated
/// server that names an attribute other than the server's own, a user
/// frame to the central server naming a dedicated attribute, or a relay
/// originating anywhere but the central server.
pub fn inspect(cfg: &SystemConfig, frames: &[LoggedFrame]) -> Vec<String> {
    let mut bad = Vec::new();
    for (i, f) in frames.iter().enumerate() {
        match (f.from, f.to, f.frame.tag) {
            (Node::User, Node::Server(s), Tag::VerifyReq) => match decode_verify_req(&f.frame.payload) {
                Ok((_, claims)) => {
                    for (pos, _) in claims {
                        let allowed = if cfg.is_central(s) { pos >= cfg.d } else { pos + 1 == s.0 };
                        if !allowed {
                            bad.push(format!("frame {i}: user sent attribute {} to server {s}", pos + 1));
                        }
                    }
                }
                Err(e) => bad.push(format!("frame {i}: unreadable VERIFY_REQ: {e}")),
            },
            (Node::User, _, Tag::AttrRelay) => bad.push(format!("frame {i}: ATTR_RELAY sent by the user")),
            (Node::Server(s), _, Tag::AttrRelay) if !cfg.is_central(s) => {
                bad.push(format!("frame {i}: ATTR_RELAY sent by dedicated server {s}"))
            }
            (Node::Server(_), Node::Server(to), Tag::AttrRelay) => {
                if let Ok((_, relayed)) = decode_relay(&f.frame.payload) {
                    if relayed.iter().any(|&(pos, _)| pos < cfg.d) {
                        bad.push(format!("frame {i}: relay to server {to} carries a dedicated attribute"));
                    }
                }
            }
            _ => {}
        }
    }
    bad
}
