//! The contract every code family implements: encode a stripe, hand a single
//! symbol to a repair, regenerate a node, reconstruct the message.
//!
//! A helper computes its repair symbol from its own share and the identity of
//! the failed node alone; it never learns which other nodes are helping.

use crate::error::CodeError;
use crate::ffield::FieldElement;
use crate::matfq::MatrixFq;
use crate::params::{CodeKind, CodeParams};

/// 1-based node index, matching share headers and operator-facing output.
pub type NodeId = usize;

pub trait RegeneratingCodec: Send + Sync {
    fn params(&self) -> &CodeParams;

    /// Encodes one stripe of `B` message symbols into the `n x alpha`
    /// codeword matrix; row `i-1` is node `i`'s share.
    fn encode(&self, message: &[FieldElement]) -> Result<MatrixFq, CodeError>;

    /// The fixed vector a helper dots its stored row with when `failed`
    /// is being regenerated. Length `alpha`; depends only on `failed`.
    fn repair_vector(&self, failed: NodeId) -> Result<Vec<FieldElement>, CodeError>;

    /// One symbol of repair traffic: the inner product of the helper's
    /// stored row with the repair vector of the failed node.
    fn helper_symbol(
        &self,
        helper: NodeId,
        stored: &[FieldElement],
        failed: NodeId,
    ) -> Result<FieldElement, CodeError> {
        let params = self.params();
        check_node(helper, params.n)?;
        check_node(failed, params.n)?;
        if helper == failed {
            return Err(CodeError::SelfHelp);
        }
        if stored.len() != params.alpha {
            return Err(CodeError::WrongLength {
                expected: params.alpha,
                got: stored.len(),
            });
        }
        let mu = self.repair_vector(failed)?;
        dot(stored, &mu)
    }

    /// Regenerates the exact row of `failed` from `d` helper symbols,
    /// aligned with `helper_ids`.
    fn repair(
        &self,
        failed: NodeId,
        helper_ids: &[NodeId],
        symbols: &[FieldElement],
    ) -> Result<Vec<FieldElement>, CodeError>;

    /// Recovers the `B` message symbols from the rows stored by any `k`
    /// distinct nodes, aligned with `node_ids`.
    fn reconstruct(
        &self,
        node_ids: &[NodeId],
        rows: &[Vec<FieldElement>],
    ) -> Result<Vec<FieldElement>, CodeError>;
}

impl<T: RegeneratingCodec + ?Sized> RegeneratingCodec for Box<T> {
    fn params(&self) -> &CodeParams {
        (**self).params()
    }

    fn encode(&self, message: &[FieldElement]) -> Result<MatrixFq, CodeError> {
        (**self).encode(message)
    }

    fn repair_vector(&self, failed: NodeId) -> Result<Vec<FieldElement>, CodeError> {
        (**self).repair_vector(failed)
    }

    fn helper_symbol(
        &self,
        helper: NodeId,
        stored: &[FieldElement],
        failed: NodeId,
    ) -> Result<FieldElement, CodeError> {
        (**self).helper_symbol(helper, stored, failed)
    }

    fn repair(
        &self,
        failed: NodeId,
        helper_ids: &[NodeId],
        symbols: &[FieldElement],
    ) -> Result<Vec<FieldElement>, CodeError> {
        (**self).repair(failed, helper_ids, symbols)
    }

    fn reconstruct(
        &self,
        node_ids: &[NodeId],
        rows: &[Vec<FieldElement>],
    ) -> Result<Vec<FieldElement>, CodeError> {
        (**self).reconstruct(node_ids, rows)
    }
}

/// Canonical codec for a parameter set; this is the construction share
/// headers refer to.
pub fn build_codec(
    kind: CodeKind,
    n: usize,
    k: usize,
    d: usize,
    q_override: Option<u64>,
) -> Result<Box<dyn RegeneratingCodec>, CodeError> {
    let params = CodeParams::derive(kind, n, k, d, q_override)?;
    Ok(match kind {
        CodeKind::Mbr => Box::new(crate::mbr::MbrCodec::new(params)?),
        CodeKind::Msr => Box::new(crate::msr::MsrCodec::new(params)?),
        CodeKind::Miser => Box::new(crate::miser::MiserCodec::new(params)?),
    })
}

pub(crate) fn dot(a: &[FieldElement], b: &[FieldElement]) -> Result<FieldElement, CodeError> {
    debug_assert_eq!(a.len(), b.len());
    let Some(first) = a.first() else {
        return Err(CodeError::Corrupt("dot product of empty vectors".into()));
    };
    let mut acc = first.ctx().zero();
    for (x, y) in a.iter().zip(b) {
        acc = acc.try_add(x.try_mul(*y)?)?;
    }
    Ok(acc)
}

pub(crate) fn check_node(node: NodeId, n: usize) -> Result<(), CodeError> {
    if node == 0 || node > n {
        Err(CodeError::NodeOutOfRange { node, n })
    } else {
        Ok(())
    }
}

/// Validates a helper set: `expected` distinct in-range ids, none equal to
/// `failed`, with one symbol each.
pub(crate) fn check_helpers(
    failed: NodeId,
    helper_ids: &[NodeId],
    symbols: usize,
    expected: usize,
    n: usize,
) -> Result<(), CodeError> {
    check_node(failed, n)?;
    if helper_ids.contains(&failed) {
        return Err(CodeError::SelfHelp);
    }
    let mut seen = vec![false; n + 1];
    for &h in helper_ids {
        check_node(h, n)?;
        if std::mem::replace(&mut seen[h], true) {
            return Err(CodeError::BadHelperCount {
                expected,
                got: helper_ids.len(),
            });
        }
    }
    if helper_ids.len() != expected || symbols != expected {
        return Err(CodeError::BadHelperCount {
            expected,
            got: helper_ids.len().min(symbols),
        });
    }
    Ok(())
}

/// Validates a reconstruction set: `expected` distinct in-range ids with one
/// stored row each.
pub(crate) fn check_collectors(
    node_ids: &[NodeId],
    rows: &[Vec<FieldElement>],
    expected: usize,
    n: usize,
    alpha: usize,
) -> Result<(), CodeError> {
    let mut seen = vec![false; n + 1];
    for &id in node_ids {
        check_node(id, n)?;
        if std::mem::replace(&mut seen[id], true) {
            return Err(CodeError::BadNodeCount {
                expected,
                got: node_ids.len(),
            });
        }
    }
    if node_ids.len() != expected || rows.len() != expected {
        return Err(CodeError::BadNodeCount {
            expected,
            got: node_ids.len().min(rows.len()),
        });
    }
    for row in rows {
        if row.len() != alpha {
            return Err(CodeError::WrongLength {
                expected: alpha,
                got: row.len(),
            });
        }
    }
    Ok(())
}

/// Shared desk-scale policy: constructors verify their encoding matrix
/// exhaustively up to this many nodes and trust the structured construction
/// above it.
pub(crate) const VERIFY_NODE_LIMIT: usize = 12;
