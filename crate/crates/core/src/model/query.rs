use super::config::AttributeVector;
use super::plan::Component;
use crate::field::FieldElement;

/// One requested sub-packet: message key and the (permuted) sub-packet
/// position within that message's segment.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Member {
    pub key: AttributeVector,
    pub subpacket: u32,
}

/// A message group and the coefficients that combine it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QueryGroup {
    pub component: Component,
    pub members: Vec<Member>,
    pub coeffs: Vec<FieldElement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Query {
    pub groups: Vec<QueryGroup>,
}

/// One answer row per query group, each a sub-packet-length vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Answer {
    pub rows: Vec<Vec<FieldElement>>,
}

impl Answer {
    pub fn symbols(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}
