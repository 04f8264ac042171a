mod common;

use dapac_core::field::FieldPrime;
use dapac_netsim::wire::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn every_object_round_trips(o in common::wire_object()) {
        prop_assert_eq!(common::round_trip(&o), Ok(()));
    }

    #[test]
    fn central_queries_round_trip((f, q) in common::central_query()) {
        prop_assert_eq!(decode_query(&encode_query(&q), f).unwrap(), q);
    }

    #[test]
    fn truncation_is_always_detected(t in common::transcript(), cut in any::<prop::sample::Index>()) {
        let bytes = encode_transcript(&t);
        let at = cut.index(bytes.len());
        prop_assert!(decode_transcript(&bytes[..at]).is_err());
        let frame = Frame::new(Tag::Answer, bytes).to_bytes();
        let at = cut.index(frame.len());
        prop_assert!(Frame::from_bytes(&frame[..at]).is_err());
    }

    #[test]
    fn garbage_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..200)) {
        let f = FieldPrime::new(257).unwrap();
        let _ = decode_query(&bytes, f);
        let _ = decode_answer(&bytes, f);
        let _ = decode_outcome(&bytes);
        let _ = decode_transcript(&bytes);
        let _ = Frame::from_bytes(&bytes);
    }
}

#[test]
fn field_range_is_enforced_on_decode() {
    let f = FieldPrime::new(7).unwrap();
    let a = dapac_core::model::Answer {
        rows: vec![vec![FieldPrime::new(257).unwrap().element(9).unwrap()]],
    };
    assert!(matches!(decode_answer(&encode_answer(&a), f), Err(WireError::Decode(_))));
}

#[test]
fn unknown_tags_and_trailing_bytes_are_rejected() {
    assert!(matches!(Tag::from_u8(0), Err(WireError::Decode(_))));
    assert!(matches!(Tag::from_u8(8), Err(WireError::Decode(_))));
    let f = FieldPrime::new(3).unwrap();
    let mut bytes = encode_answer(&Default::default());
    bytes.push(0);
    assert!(decode_answer(&bytes, f).is_err());
}
