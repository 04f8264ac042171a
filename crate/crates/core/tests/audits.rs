use dapac_core::auditor::{
    audit_attribute_privacy, audit_correctness, audit_database_secrecy,
    audit_query_message_independence, session_queries, AnswerFault, PadMode, Verdict, DEFAULT_BOUND,
};
use dapac_core::field::FieldPrime;
use dapac_core::metrics::Q;
use dapac_core::model::{AttributeVector, ServerId, SystemConfig};
use dapac_core::scheme::SchemeKind;
use dapac_core::Error;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

fn cfg(n: usize, d: usize, k: usize, q: u32, l: usize) -> SystemConfig {
    SystemConfig::with_default_alphabets(n, d, k, FieldPrime::new(q).unwrap(), l, 0).unwrap()
}

#[test]
fn central_scheme_is_attribute_private_at_every_server() {
    let c = cfg(3, 2, 2, 2, 2);
    for s in 1..=3 {
        let r = audit_attribute_privacy(SchemeKind::HetDapac, &c, ServerId(s), DEFAULT_BOUND).unwrap();
        assert!(r.tv.is_zero(), "server {s}: {}", r.tv);
        assert_eq!(r.mi_bits, 0.0);
        assert_eq!(r.render(&c, true).verdict, Verdict::Pass);
    }
    let r = audit_attribute_privacy(SchemeKind::HetDapac, &c, ServerId(3), DEFAULT_BOUND).unwrap();
    assert_eq!(r.hypotheses, 4);
    let r = audit_attribute_privacy(SchemeKind::HetDapac, &c, ServerId(1), DEFAULT_BOUND).unwrap();
    assert_eq!(r.hypotheses, 2);
}

#[test]
fn baseline_is_attribute_private_at_every_server() {
    let c = cfg(3, 3, 2, 2, 3);
    for s in 1..=4 {
        let r = audit_attribute_privacy(SchemeKind::Dapac, &c, ServerId(s), DEFAULT_BOUND).unwrap();
        assert!(r.tv.is_zero(), "server {s}: {}", r.tv);
    }
}

#[test]
fn timeshare_is_attribute_private() {
    let c = cfg(3, 2, 2, 2, 4);
    for s in 1..=3 {
        let r = audit_attribute_privacy(SchemeKind::TimeShare(Q::new(1, 2)), &c, ServerId(s), DEFAULT_BOUND).unwrap();
        assert!(r.tv.is_zero(), "server {s}: {}", r.tv);
    }
}

#[test]
fn d3_leak_at_q2_is_measured() {
    // at q = 2 the forced nonzero coefficient of the shared subsets is always 1
    let c = cfg(3, 3, 2, 2, 6);
    let r = audit_attribute_privacy(SchemeKind::D3, &c, ServerId(1), DEFAULT_BOUND).unwrap();
    assert!(!r.tv.is_zero());
    assert!(r.mi_bits > 0.0);
    assert_eq!(r.render(&c, false).verdict, Verdict::Reported);
    // two shared subsets move between hypotheses at a dedicated server, three
    // at the central one; each is nonzero-conditioned at one coordinate
    for q in [2u64, 3] {
        let c = cfg(3, 3, 2, q as u32, 6);
        let stay = BigRational::new(BigInt::from(q - 1), BigInt::from(q));
        let one = BigRational::from_integer(BigInt::from(1));
        let dedicated = audit_attribute_privacy(SchemeKind::D3, &c, ServerId(2), DEFAULT_BOUND).unwrap();
        assert_eq!(dedicated.tv, &one - &stay * &stay);
        let central = audit_attribute_privacy(SchemeKind::D3, &c, ServerId(4), DEFAULT_BOUND).unwrap();
        assert_eq!(central.tv, &one - &stay * &stay * &stay);
    }
}

#[test]
fn secrecy_holds_and_pad_removal_breaks_it() {
    let c = cfg(3, 2, 2, 2, 2);
    let r = audit_database_secrecy(SchemeKind::HetDapac, &c, None, &[0, 1], PadMode::Honest, DEFAULT_BOUND).unwrap();
    assert!(r.tv.is_zero());
    assert_eq!(r.pool_symbols, 4);
    assert_eq!(r.pool_states, 16);
    let r = audit_database_secrecy(SchemeKind::HetDapac, &c, None, &[0], PadMode::Removed, DEFAULT_BOUND).unwrap();
    assert!(!r.tv.is_zero());

    let c = cfg(3, 3, 2, 2, 3);
    let r = audit_database_secrecy(SchemeKind::Dapac, &c, None, &[0], PadMode::Honest, DEFAULT_BOUND).unwrap();
    assert!(r.tv.is_zero());
    assert_eq!(r.pool_states, 512);
}

#[test]
fn secrecy_reports_domain_too_large() {
    let c = cfg(3, 3, 2, 2, 3);
    let err = audit_database_secrecy(SchemeKind::Dapac, &c, None, &[0], PadMode::Honest, 100).unwrap_err();
    assert!(matches!(err, Error::DomainTooLarge { .. }));
}

#[test]
fn correctness_and_fault_injection() {
    let c = cfg(3, 2, 2, 257, 2);
    let seeds: Vec<u64> = (0..10).collect();
    let r = audit_correctness(SchemeKind::HetDapac, &c, &seeds, AnswerFault::None).unwrap();
    assert_eq!(r.runs, 80);
    assert!(r.failures.is_empty());
    let r = audit_correctness(SchemeKind::HetDapac, &c, &seeds, AnswerFault::Corrupt).unwrap();
    assert!(!r.failures.is_empty());
    assert_eq!(r.render(&c).verdict, Verdict::Fail);
}

#[test]
fn queries_ignore_message_contents() {
    let c = cfg(4, 3, 2, 257, 6);
    let vstar = AttributeVector::new(vec![0, 1, 0, 1]);
    for kind in [SchemeKind::HetDapac, SchemeKind::D3] {
        assert!(audit_query_message_independence(&c, |s| session_queries(kind, &c, &vstar, s)).unwrap());
    }
    let c3 = cfg(3, 3, 2, 257, 3);
    assert!(audit_query_message_independence(&c3, |s| session_queries(SchemeKind::Dapac, &c3, &vstar_of(&c3), s)).unwrap());
    // a construction that peeks at the store
    let leaky = audit_query_message_independence(&c, |s| {
        let mut q = session_queries(SchemeKind::HetDapac, &c, &vstar, s)?;
        q[0].1.groups[0].coeffs[0] = s.get(&vstar).unwrap()[0];
        Ok(q)
    })
    .unwrap();
    assert!(!leaky);
}

fn vstar_of(c: &SystemConfig) -> AttributeVector {
    AttributeVector::new(vec![1; c.n])
}
