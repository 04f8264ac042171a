//! Private retrieval from attribute-indexed databases with access control.
//!
//! Messages are indexed by attribute vectors. Each dedicated server holds
//! the messages matching one verified attribute of the user, the central
//! server the messages matching the remaining attributes. The user retrieves
//! its message without any server learning the attributes it was not shown,
//! and learns nothing about other messages beyond its own.

pub mod auditor;
pub mod error;
pub mod field;
pub mod model;
pub mod metrics;
pub mod scheme;

pub use error::{Error, Result};
pub use field::{FieldElement, FieldError, FieldPrime};
pub use scheme::{SchemeKind, Lambda};
