//! System model: configuration, attributes, messages, database views,
//! verification, common randomness, user coins, query plans and servers.

mod coins;
mod config;
mod plan;
mod pool;
mod query;
mod server;
mod store;
mod transcript;
mod views;

pub use coins::{CoinId, CoinSource, CoinSpec, SeededCoins};
pub use config::{canonical_order, AttributeVector, Pattern, ServerId, SystemConfig};
pub use plan::{
    realize, CoeffExpr, Component, GroupPlan, QueryPlan, RealizedCoins, Segment, SegmentPlan,
    SubPacketPlan,
};
pub use pool::{pad_keys, ChunkKey, ExplicitPool, PadSource, RandomnessPool};
pub use query::{Answer, Member, Query, QueryGroup};
pub use server::ServerNode;
pub use store::{derive_rng, Message, MessageStore};
pub use transcript::{Exchange, Transcript};
pub use views::{
    build_views, check_claims, responsibility, verify_attributes, Claims, DatabaseView, Knowledge,
    Registry, VerificationOutcome,
};
