#![allow(dead_code)]

use std::collections::BTreeMap;

use dapac_core::field::{FieldElement, FieldPrime};
use dapac_core::model::{
    Answer, AttributeVector, Component, Exchange, Knowledge, Member, Query, QueryGroup, SeededCoins, ServerId,
    SystemConfig, Transcript, VerificationOutcome,
};
use dapac_core::scheme::{build_queries, SchemeKind};
use dapac_core::Lambda;
use proptest::prelude::*;

pub const PRIMES: [u32; 5] = [2, 3, 7, 257, 65521];

pub fn field() -> impl Strategy<Value = FieldPrime> {
    prop::sample::select(PRIMES.to_vec()).prop_map(|q| FieldPrime::new(q).unwrap())
}

pub fn elements(f: FieldPrime, max: usize) -> impl Strategy<Value = Vec<FieldElement>> {
    prop::collection::vec(0..f.q() as u32, 0..max).prop_map(move |v| v.into_iter().map(|x| f.element(x).unwrap()).collect())
}

fn key() -> impl Strategy<Value = AttributeVector> {
    prop::collection::vec(any::<u16>(), 0..6).prop_map(AttributeVector::new)
}

fn component() -> impl Strategy<Value = Component> {
    (0u8..3).prop_map(|b| Component::from_u8(b).unwrap())
}

pub fn query(f: FieldPrime) -> impl Strategy<Value = Query> {
    let group = (component(), prop::collection::vec((key(), any::<u32>()), 0..5), elements(f, 5)).prop_map(
        |(component, members, coeffs)| QueryGroup {
            component,
            members: members.into_iter().map(|(key, subpacket)| Member { key, subpacket }).collect(),
            coeffs,
        },
    );
    prop::collection::vec(group, 0..5).prop_map(|groups| Query { groups })
}

pub fn answer(f: FieldPrime) -> impl Strategy<Value = Answer> {
    prop::collection::vec(elements(f, 6), 0..5).prop_map(|rows| Answer { rows })
}

fn pairs() -> impl Strategy<Value = Vec<(usize, u16)>> {
    prop::collection::vec((0usize..1000, any::<u16>()), 0..5)
}

pub fn outcome() -> impl Strategy<Value = VerificationOutcome> {
    (prop::collection::btree_map(1usize..10, pairs(), 0..5), pairs()).prop_map(|(k, relayed)| VerificationOutcome {
        knowledge: k
            .into_iter()
            .map(|(s, p)| (ServerId(s), p.into_iter().collect::<Knowledge>()))
            .collect::<BTreeMap<_, _>>(),
        relayed,
    })
}

pub fn scheme() -> impl Strategy<Value = SchemeKind> {
    prop_oneof![
        Just(SchemeKind::Dapac),
        Just(SchemeKind::HetDapac),
        Just(SchemeKind::D3),
        (0u64..8, 1u64..8).prop_map(|(a, b)| SchemeKind::TimeShare(Lambda::new(a.min(b), b))),
    ]
}

pub fn system() -> impl Strategy<Value = SystemConfig> {
    (1usize..5, 2usize..4, field(), 1usize..8, any::<u64>()).prop_flat_map(|(n, k, f, l, seed)| {
        (1..=n).prop_map(move |d| SystemConfig::with_default_alphabets(n, d, k, f, l, seed).unwrap())
    })
}

/// Random transcripts; exchanges are random objects, not a real session.
pub fn transcript() -> impl Strategy<Value = Transcript> {
    (system(), scheme()).prop_flat_map(|(cfg, scheme)| {
        let f = cfg.field;
        let n = cfg.n;
        let k = cfg.k as u16;
        (
            prop::collection::vec(0..k, n),
            prop::collection::vec((1usize..6, query(f), answer(f)), 0..4),
            elements(f, 8),
        )
            .prop_map(move |(v, xs, decoded)| Transcript {
                scheme,
                cfg: cfg.clone(),
                vstar: AttributeVector::new(v),
                exchanges: xs
                    .into_iter()
                    .map(|(s, query, answer)| Exchange {
                        server: ServerId(s),
                        query,
                        answer,
                    })
                    .collect(),
                decoded,
            })
    })
}

/// A central-server query of the two-dedicated-server scheme on (3,2,2),
/// for a random designated vector and coin seed.
pub fn central_query() -> impl Strategy<Value = (FieldPrime, Query)> {
    (prop::collection::vec(0u16..2, 3), any::<u64>()).prop_map(|(v, seed)| {
        let f = FieldPrime::new(257).unwrap();
        let cfg = SystemConfig::with_default_alphabets(3, 2, 2, f, 2, 0).unwrap();
        let (_, _, qs) =
            build_queries(SchemeKind::HetDapac, &cfg, &AttributeVector::new(v), &SeededCoins::new(seed, f)).unwrap();
        (f, qs[&ServerId(3)].clone())
    })
}

/// Whichever object a round-trip case exercises.
#[derive(Debug, Clone)]
pub enum WireObject {
    Query(FieldPrime, Query),
    Answer(FieldPrime, Answer),
    Outcome(VerificationOutcome),
    Transcript(Transcript),
    Frame(u8, Vec<u8>),
}

pub fn wire_object() -> impl Strategy<Value = WireObject> {
    prop_oneof![
        field().prop_flat_map(|f| query(f).prop_map(move |q| WireObject::Query(f, q))),
        central_query().prop_map(|(f, q)| WireObject::Query(f, q)),
        field().prop_flat_map(|f| answer(f).prop_map(move |a| WireObject::Answer(f, a))),
        outcome().prop_map(WireObject::Outcome),
        transcript().prop_map(WireObject::Transcript),
        (1u8..8, prop::collection::vec(any::<u8>(), 0..64)).prop_map(|(t, p)| WireObject::Frame(t, p)),
    ]
}

/// Encodes, decodes and compares; also checks that re-encoding is
/// byte-identical.
pub fn round_trip(o: &WireObject) -> Result<(), String> {
    use dapac_netsim::wire::*;
    let same = |a: Vec<u8>, b: Vec<u8>| if a == b { Ok(()) } else { Err("re-encoding differs".to_string()) };
    match o {
        WireObject::Query(f, q) => {
            let bytes = encode_query(q);
            let back = decode_query(&bytes, *f).map_err(|e| e.to_string())?;
            if &back != q {
                return Err(format!("query mismatch: {q:?}"));
            }
            same(bytes, encode_query(&back))
        }
        WireObject::Answer(f, a) => {
            let bytes = encode_answer(a);
            let back = decode_answer(&bytes, *f).map_err(|e| e.to_string())?;
            if &back != a {
                return Err(format!("answer mismatch: {a:?}"));
            }
            same(bytes, encode_answer(&back))
        }
        WireObject::Outcome(v) => {
            let bytes = encode_outcome(v);
            let back = decode_outcome(&bytes).map_err(|e| e.to_string())?;
            if &back != v {
                return Err(format!("outcome mismatch: {v:?}"));
            }
            same(bytes, encode_outcome(&back))
        }
        WireObject::Transcript(t) => {
            let bytes = encode_transcript(t);
            let back = decode_transcript(&bytes).map_err(|e| e.to_string())?;
            if &back != t {
                return Err("transcript mismatch".into());
            }
            same(bytes, encode_transcript(&back))
        }
        WireObject::Frame(tag, payload) => {
            let f = Frame::new(Tag::from_u8(*tag).map_err(|e| e.to_string())?, payload.clone());
            let bytes = f.to_bytes();
            let (back, rest) = Frame::from_bytes(&bytes).map_err(|e| e.to_string())?;
            if back != f || !rest.is_empty() {
                return Err("frame mismatch".into());
            }
            let mut r: &[u8] = &bytes;
            if Frame::read_from(&mut r).map_err(|e| e.to_string())? != f {
                return Err("stream frame mismatch".into());
            }
            Ok(())
        }
    }
}
