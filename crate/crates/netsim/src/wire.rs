//! Binary encoding of protocol objects and frames.
//!
//! All integers are big-endian. Field elements are `u16`, vectors carry a
//! `u32` element count. A frame is `u32 length | u8 tag | payload` where the
//! length counts the tag and the payload.

use std::io::{self, Read, Write};

use dapac_core::field::{FieldElement, FieldPrime};
use dapac_core::model::{
    Answer, AttributeVector, Component, Exchange, Knowledge, Member, Query, QueryGroup, ServerId,
    SystemConfig, Transcript, VerificationOutcome,
};
use dapac_core::scheme::{Lambda, SchemeKind};
use thiserror::Error;

pub const PROTOCOL_VERSION: u8 = 1;
pub const TRANSCRIPT_MAGIC: &[u8; 4] = b"DPTR";
pub const TRANSCRIPT_VERSION: u8 = 1;
/// Frames above this size are rejected before allocation.
pub const MAX_FRAME: u32 = 1 << 28;

#[derive(Debug, Error)]
pub enum WireError {
    #[error("truncated or oversized frame: {0}")]
    Frame(String),
    #[error("version mismatch: expected {expected}, got {got}")]
    Version { expected: u8, got: u8 },
    #[error("malformed payload: {0}")]
    Decode(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type WireResult<T> = Result<T, WireError>;

fn bad(msg: impl Into<String>) -> WireError {
    WireError::Decode(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Tag {
    VerifyReq = 0x01,
    VerifyOk = 0x02,
    VerifyFail = 0x03,
    AttrRelay = 0x04,
    Query = 0x05,
    Answer = 0x06,
    Error = 0x07,
}

impl Tag {
    pub fn from_u8(b: u8) -> WireResult<Self> {
        Ok(match b {
            0x01 => Tag::VerifyReq,
            0x02 => Tag::VerifyOk,
            0x03 => Tag::VerifyFail,
            0x04 => Tag::AttrRelay,
            0x05 => Tag::Query,
            0x06 => Tag::Answer,
            0x07 => Tag::Error,
            other => return Err(bad(format!("unknown frame tag {other:#04x}"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Tag::VerifyReq => "VERIFY_REQ",
            Tag::VerifyOk => "VERIFY_OK",
            Tag::VerifyFail => "VERIFY_FAIL",
            Tag::AttrRelay => "ATTR_RELAY",
            Tag::Query => "QUERY",
            Tag::Answer => "ANSWER",
            Tag::Error => "ERROR",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub tag: Tag,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(tag: Tag, payload: Vec<u8>) -> Self {
        Frame { tag, payload }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(5 + self.payload.len());
        out.extend_from_slice(&(self.payload.len() as u32 + 1).to_be_bytes());
        out.push(self.tag as u8);
        out.extend_from_slice(&self.payload);
        out
    }

    /// Parses one frame from the front of `buf`, returning the rest.
    pub fn from_bytes(buf: &[u8]) -> WireResult<(Frame, &[u8])> {
        if buf.len() < 4 {
            return Err(WireError::Frame("missing length".into()));
        }
        let len = u32::from_be_bytes(buf[..4].try_into().unwrap());
        if len == 0 || len > MAX_FRAME {
            return Err(WireError::Frame(format!("bad length {len}")));
        }
        let body = buf
            .get(4..4 + len as usize)
            .ok_or_else(|| WireError::Frame(format!("need {len} bytes, have {}", buf.len() - 4)))?;
        let frame = Frame::new(Tag::from_u8(body[0])?, body[1..].to_vec());
        Ok((frame, &buf[4 + len as usize..]))
    }

    pub fn write_to(&self, w: &mut impl Write) -> io::Result<()> {
        w.write_all(&self.to_bytes())?;
        w.flush()
    }

    pub fn read_from(r: &mut impl Read) -> WireResult<Frame> {
        let mut len = [0u8; 4];
        r.read_exact(&mut len).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => WireError::Frame("connection closed".into()),
            _ => WireError::Io(e),
        })?;
        let len = u32::from_be_bytes(len);
        if len == 0 || len > MAX_FRAME {
            return Err(WireError::Frame(format!("bad length {len}")));
        }
        let mut body = vec![0u8; len as usize];
        r.read_exact(&mut body)
            .map_err(|_| WireError::Frame(format!("truncated frame of {len} bytes")))?;
        Ok(Frame::new(Tag::from_u8(body[0])?, body[1..].to_vec()))
    }
}

/// Append-only encoder.
#[derive(Debug, Default)]
pub struct Enc(pub Vec<u8>);

impl Enc {
    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.0.push(v);
        self
    }
    pub fn u16(&mut self, v: u16) -> &mut Self {
        self.0.extend_from_slice(&v.to_be_bytes());
        self
    }
    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.0.extend_from_slice(&v.to_be_bytes());
        self
    }
    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.0.extend_from_slice(&v.to_be_bytes());
        self
    }
    pub fn len(&mut self, n: usize) -> &mut Self {
        self.u32(n as u32)
    }
    pub fn str(&mut self, s: &str) -> &mut Self {
        self.len(s.len());
        self.0.extend_from_slice(s.as_bytes());
        self
    }
    pub fn elements(&mut self, v: &[FieldElement]) -> &mut Self {
        self.len(v.len());
        for e in v {
            self.u16(e.value());
        }
        self
    }
    pub fn key(&mut self, k: &AttributeVector) -> &mut Self {
        self.len(k.len());
        for &c in k.coords() {
            self.u16(c);
        }
        self
    }
    pub fn pairs(&mut self, p: &[(usize, u16)]) -> &mut Self {
        self.len(p.len());
        for &(pos, v) in p {
            self.u32(pos as u32).u16(v);
        }
        self
    }
}

/// Cursor decoder; every read checks the remaining length.
pub struct Dec<'a>(pub &'a [u8]);

impl<'a> Dec<'a> {
    fn take(&mut self, n: usize) -> WireResult<&'a [u8]> {
        if self.0.len() < n {
            return Err(bad(format!("payload truncated: need {n} bytes, have {}", self.0.len())));
        }
        let (a, b) = self.0.split_at(n);
        self.0 = b;
        Ok(a)
    }
    pub fn u8(&mut self) -> WireResult<u8> {
        Ok(self.take(1)?[0])
    }
    pub fn u16(&mut self) -> WireResult<u16> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }
    pub fn u32(&mut self) -> WireResult<u32> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }
    pub fn u64(&mut self) -> WireResult<u64> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }
    /// A count, checked against the bytes left so a hostile prefix cannot
    /// force a huge allocation.
    pub fn len(&mut self, min_item: usize) -> WireResult<usize> {
        let n = self.u32()? as usize;
        if n.saturating_mul(min_item) > self.0.len() {
            return Err(bad(format!("count {n} exceeds remaining payload")));
        }
        Ok(n)
    }
    pub fn str(&mut self) -> WireResult<String> {
        let n = self.len(1)?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| bad("invalid utf-8"))
    }
    pub fn elements(&mut self, field: FieldPrime) -> WireResult<Vec<FieldElement>> {
        let n = self.len(2)?;
        (0..n)
            .map(|_| {
                let v = self.u16()?;
                field.element(v as u32).map_err(|e| bad(e.to_string()))
            })
            .collect()
    }
    pub fn key(&mut self) -> WireResult<AttributeVector> {
        let n = self.len(2)?;
        Ok(AttributeVector::new((0..n).map(|_| self.u16()).collect::<WireResult<_>>()?))
    }
    pub fn pairs(&mut self) -> WireResult<Vec<(usize, u16)>> {
        let n = self.len(6)?;
        (0..n).map(|_| Ok((self.u32()? as usize, self.u16()?))).collect()
    }
    pub fn finish(&self) -> WireResult<()> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(bad(format!("{} trailing bytes", self.0.len())))
        }
    }
}

pub fn encode_query(q: &Query) -> Vec<u8> {
    let mut e = Enc::default();
    e.len(q.groups.len());
    for g in &q.groups {
        e.u8(g.component as u8).len(g.members.len());
        for m in &g.members {
            e.key(&m.key).u32(m.subpacket);
        }
        e.elements(&g.coeffs);
    }
    e.0
}

fn read_query(d: &mut Dec<'_>, field: FieldPrime) -> WireResult<Query> {
    let n = d.len(9)?;
    let mut groups = Vec::with_capacity(n);
    for _ in 0..n {
        let component = Component::from_u8(d.u8()?).ok_or_else(|| bad("unknown component"))?;
        let m = d.len(8)?;
        let members = (0..m)
            .map(|_| {
                Ok(Member {
                    key: d.key()?,
                    subpacket: d.u32()?,
                })
            })
            .collect::<WireResult<_>>()?;
        groups.push(QueryGroup {
            component,
            members,
            coeffs: d.elements(field)?,
        });
    }
    Ok(Query { groups })
}

pub fn decode_query(buf: &[u8], field: FieldPrime) -> WireResult<Query> {
    let mut d = Dec(buf);
    let q = read_query(&mut d, field)?;
    d.finish()?;
    Ok(q)
}

pub fn encode_answer(a: &Answer) -> Vec<u8> {
    let mut e = Enc::default();
    e.len(a.rows.len());
    for r in &a.rows {
        e.elements(r);
    }
    e.0
}

fn read_answer(d: &mut Dec<'_>, field: FieldPrime) -> WireResult<Answer> {
    let n = d.len(4)?;
    Ok(Answer {
        rows: (0..n).map(|_| d.elements(field)).collect::<WireResult<_>>()?,
    })
}

pub fn decode_answer(buf: &[u8], field: FieldPrime) -> WireResult<Answer> {
    let mut d = Dec(buf);
    let a = read_answer(&mut d, field)?;
    d.finish()?;
    Ok(a)
}

pub fn encode_outcome(o: &VerificationOutcome) -> Vec<u8> {
    let mut e = Enc::default();
    e.len(o.knowledge.len());
    for (s, k) in &o.knowledge {
        let pairs: Vec<(usize, u16)> = k.iter().map(|(&p, &v)| (p, v)).collect();
        e.u32(s.0 as u32).pairs(&pairs);
    }
    e.pairs(&o.relayed);
    e.0
}

pub fn decode_outcome(buf: &[u8]) -> WireResult<VerificationOutcome> {
    let mut d = Dec(buf);
    let n = d.len(8)?;
    let mut knowledge = std::collections::BTreeMap::new();
    for _ in 0..n {
        let s = ServerId(d.u32()? as usize);
        let k: Knowledge = d.pairs()?.into_iter().collect();
        knowledge.insert(s, k);
    }
    let relayed = d.pairs()?;
    d.finish()?;
    Ok(VerificationOutcome { knowledge, relayed })
}

fn scheme_tag(kind: SchemeKind) -> (u8, u64, u64) {
    match kind {
        SchemeKind::Dapac => (0, 0, 1),
        SchemeKind::HetDapac => (1, 0, 1),
        SchemeKind::D3 => (2, 0, 1),
        SchemeKind::TimeShare(l) => (3, *l.numer(), *l.denom()),
    }
}

fn read_scheme(d: &mut Dec<'_>) -> WireResult<SchemeKind> {
    let (tag, num, den) = (d.u8()?, d.u64()?, d.u64()?);
    Ok(match tag {
        0 => SchemeKind::Dapac,
        1 => SchemeKind::HetDapac,
        2 => SchemeKind::D3,
        3 if den != 0 => SchemeKind::TimeShare(Lambda::new(num, den)),
        _ => return Err(bad("unknown scheme")),
    })
}

pub fn encode_config(e: &mut Enc, cfg: &SystemConfig) {
    e.u32(cfg.n as u32)
        .u32(cfg.d as u32)
        .u32(cfg.k as u32)
        .u16(cfg.field.q())
        .u32(cfg.l as u32)
        .u64(cfg.seed)
        .len(cfg.alphabets.len());
    for a in &cfg.alphabets {
        e.len(a.len());
        for label in a {
            e.str(label);
        }
    }
}

pub fn read_config(d: &mut Dec<'_>) -> WireResult<SystemConfig> {
    let (n, dd, k) = (d.u32()? as usize, d.u32()? as usize, d.u32()? as usize);
    let field = FieldPrime::new(d.u16()? as u32).map_err(|e| bad(e.to_string()))?;
    let (l, seed) = (d.u32()? as usize, d.u64()?);
    let na = d.len(4)?;
    let mut alphabets = Vec::with_capacity(na);
    for _ in 0..na {
        let m = d.len(4)?;
        alphabets.push((0..m).map(|_| d.str()).collect::<WireResult<Vec<_>>>()?);
    }
    SystemConfig::new(n, dd, k, field, l, alphabets, seed).map_err(|e| bad(e.to_string()))
}

/// `magic | version | scheme | config | vstar | exchanges | decoded`.
pub fn encode_transcript(t: &Transcript) -> Vec<u8> {
    let mut e = Enc::default();
    e.0.extend_from_slice(TRANSCRIPT_MAGIC);
    e.u8(TRANSCRIPT_VERSION);
    let (tag, num, den) = scheme_tag(t.scheme);
    e.u8(tag).u64(num).u64(den);
    encode_config(&mut e, &t.cfg);
    e.key(&t.vstar).len(t.exchanges.len());
    for x in &t.exchanges {
        e.u32(x.server.0 as u32);
        let q = encode_query(&x.query);
        let a = encode_answer(&x.answer);
        e.0.extend(q);
        e.0.extend(a);
    }
    e.elements(&t.decoded);
    e.0
}

pub fn decode_transcript(buf: &[u8]) -> WireResult<Transcript> {
    let mut d = Dec(buf);
    if d.take(4).map_err(|_| bad("missing magic"))? != TRANSCRIPT_MAGIC {
        return Err(bad("not a transcript"));
    }
    let version = d.u8()?;
    if version != TRANSCRIPT_VERSION {
        return Err(WireError::Version {
            expected: TRANSCRIPT_VERSION,
            got: version,
        });
    }
    let scheme = read_scheme(&mut d)?;
    let cfg = read_config(&mut d)?;
    let vstar = d.key()?;
    let n = d.len(12)?;
    let mut exchanges = Vec::with_capacity(n);
    for _ in 0..n {
        let server = ServerId(d.u32()? as usize);
        let query = read_query(&mut d, cfg.field)?;
        let answer = read_answer(&mut d, cfg.field)?;
        exchanges.push(Exchange { server, query, answer });
    }
    let decoded = d.elements(cfg.field)?;
    d.finish()?;
    Ok(Transcript {
        scheme,
        cfg,
        vstar,
        exchanges,
        decoded,
    })
}

/// `VERIFY_REQ` payload: protocol version, user name, claimed attributes.
pub fn encode_verify_req(user: &str, claims: &[(usize, u16)]) -> Vec<u8> {
    let mut e = Enc::default();
    e.u8(PROTOCOL_VERSION).str(user).pairs(claims);
    e.0
}

pub fn decode_verify_req(buf: &[u8]) -> WireResult<(String, Vec<(usize, u16)>)> {
    let mut d = Dec(buf);
    let v = d.u8()?;
    if v != PROTOCOL_VERSION {
        return Err(WireError::Version {
            expected: PROTOCOL_VERSION,
            got: v,
        });
    }
    let user = d.str()?;
    let claims = d.pairs()?;
    d.finish()?;
    Ok((user, claims))
}

/// `ATTR_RELAY` payload: user name and the verified tail attributes.
pub fn encode_relay(user: &str, relayed: &[(usize, u16)]) -> Vec<u8> {
    let mut e = Enc::default();
    e.str(user).pairs(relayed);
    e.0
}

pub fn decode_relay(buf: &[u8]) -> WireResult<(String, Vec<(usize, u16)>)> {
    let mut d = Dec(buf);
    let user = d.str()?;
    let relayed = d.pairs()?;
    d.finish()?;
    Ok((user, relayed))
}

pub fn encode_text(s: &str) -> Vec<u8> {
    let mut e = Enc::default();
    e.str(s);
    e.0
}

pub fn decode_text(buf: &[u8]) -> WireResult<String> {
    let mut d = Dec(buf);
    let s = d.str()?;
    d.finish()?;
    Ok(s)
}
