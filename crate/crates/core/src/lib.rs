//! Regenerating codes built from a fixed encoding matrix applied to a
//! structured message matrix, for distributed storage at the two optimal
//! corners of the storage/repair-bandwidth tradeoff:
//!
//! - [`mbr`]: minimum repair bandwidth, all `k <= d <= n-1`;
//! - [`msr`]: minimum storage, all `d >= 2k-2`;
//! - [`miser`]: minimum storage on the boundary geometry `n = d+1`,
//!   `d >= 2k-1`.
//!
//! Reconstruction contacts any `k` nodes; repair downloads exactly one
//! symbol from each of `d` helpers, and each helper computes its symbol
//! from its own share and the failed node's identity alone. [`stripe`]
//! maps byte payloads onto stripes and a bit-exact share file format, and
//! [`sim`] drives failure/repair schedules deterministically.

pub mod codec;
pub mod error;
pub mod ffield;
pub mod matfq;
pub mod mbr;
pub mod miser;
pub mod msr;
pub mod params;
pub mod sim;
pub mod stripe;
pub mod systematic;

pub use codec::{build_codec, NodeId, RegeneratingCodec};
pub use error::CodeError;
pub use ffield::{FieldCtx, FieldElement, FieldError};
pub use matfq::{MatError, MatrixFq};
pub use params::{cutset_bound, cutset_terms, CodeKind, CodeParams};
