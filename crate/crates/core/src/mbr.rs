//! Bandwidth-optimal codec: each node stores `d` symbols, a failed node is
//! rebuilt from one symbol each of any `d` survivors, and any `k` nodes
//! recover the message.
//!
//! The message lives in a symmetric `d x d` matrix `M = [[S, T], [T^t, 0]]`;
//! node `i` stores `psi_i^t M`. Symmetry of `M` is what turns the recovered
//! column `M psi_f` into the failed node's row.

use crate::codec::{
    check_collectors, check_helpers, check_node, NodeId, RegeneratingCodec, VERIFY_NODE_LIMIT,
};
use crate::error::CodeError;
use crate::ffield::{FieldCtx, FieldElement};
use crate::matfq::{cauchy, vandermonde, verify_mbr_psi, MatrixFq};
use crate::params::{CodeKind, CodeParams};

/// Symmetric message matrix `[[S, T], [T^t, 0]]`.
///
/// Placement is canonical so that share files interoperate: the upper
/// triangle of `S` is filled row-major first, then `T` row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MbrMessageMatrix {
    m: MatrixFq,
    k: usize,
    d: usize,
}

impl MbrMessageMatrix {
    pub fn pack(
        ctx: FieldCtx,
        k: usize,
        d: usize,
        message: &[FieldElement],
    ) -> Result<Self, CodeError> {
        let b = k * d - k * (k - 1) / 2;
        if message.len() != b {
            return Err(CodeError::WrongLength {
                expected: b,
                got: message.len(),
            });
        }
        let mut m = MatrixFq::zeros(ctx, d, d);
        let mut next = message.iter();
        for i in 0..k {
            for j in i..k {
                let u = *next.next().expect("length checked");
                m.set(i, j, u)?;
                m.set(j, i, u)?;
            }
        }
        for i in 0..k {
            for j in k..d {
                let u = *next.next().expect("length checked");
                m.set(i, j, u)?;
                m.set(j, i, u)?;
            }
        }
        Ok(MbrMessageMatrix { m, k, d })
    }

    /// Reads the message symbols back out of the canonical placement.
    pub fn unpack(&self) -> Vec<FieldElement> {
        let mut out = Vec::with_capacity(self.k * self.d - self.k * (self.k - 1) / 2);
        for i in 0..self.k {
            for j in i..self.k {
                out.push(self.m.get(i, j));
            }
        }
        for i in 0..self.k {
            for j in self.k..self.d {
                out.push(self.m.get(i, j));
            }
        }
        out
    }

    pub fn matrix(&self) -> &MatrixFq {
        &self.m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MbrVariant {
    /// Rows of powers on the points `1..=n`.
    Vandermonde,
    /// `[[I_k, 0], [C]]` with `C` Cauchy; the first `k` nodes store the
    /// message symbols uncoded.
    SystematicCauchy,
}

pub struct MbrCodec {
    params: CodeParams,
    ctx: FieldCtx,
    psi: MatrixFq,
    variant: MbrVariant,
}

impl MbrCodec {
    /// Default construction on evaluation points `1..=n`.
    pub fn new(params: CodeParams) -> Result<Self, CodeError> {
        assert_eq!(params.kind, CodeKind::Mbr, "wrong kind for this codec");
        let ctx = FieldCtx::new(params.q)?;
        if (params.q - 1) < params.n as u64 {
            return Err(CodeError::FieldTooSmall(format!(
                "need {} distinct nonzero evaluation points in F_{}",
                params.n, params.q
            )));
        }
        let points: Vec<FieldElement> = (1..=params.n as u64).map(|v| ctx.elem(v)).collect();
        let psi = vandermonde(ctx, &points, params.d)?;
        let codec = MbrCodec {
            params,
            ctx,
            psi,
            variant: MbrVariant::Vandermonde,
        };
        codec.verify_construction()?;
        Ok(codec)
    }

    /// Automatically systematic variant: nodes `1..=k` store `[S T]` rows
    /// verbatim. Needs `n-k+d` distinct nonzero points for the Cauchy block.
    pub fn new_systematic(params: CodeParams) -> Result<Self, CodeError> {
        assert_eq!(params.kind, CodeKind::Mbr, "wrong kind for this codec");
        let ctx = FieldCtx::new(params.q)?;
        let needed = (params.n - params.k) + params.d;
        if (params.q - 1) < needed as u64 {
            return Err(CodeError::FieldTooSmall(format!(
                "systematic variant needs {} distinct nonzero points in F_{}",
                needed, params.q
            )));
        }
        let xs: Vec<FieldElement> = (1..=(params.n - params.k) as u64)
            .map(|v| ctx.elem(v))
            .collect();
        let ys: Vec<FieldElement> = ((params.n - params.k) as u64 + 1..=needed as u64)
            .map(|v| ctx.elem(v))
            .collect();
        let bottom = cauchy(ctx, &xs, &ys)?;
        let top = MatrixFq::identity(ctx, params.k).hstack(&MatrixFq::zeros(
            ctx,
            params.k,
            params.d - params.k,
        ))?;
        let psi = top.vstack(&bottom)?;
        let codec = MbrCodec {
            params,
            ctx,
            psi,
            variant: MbrVariant::SystematicCauchy,
        };
        codec.verify_construction()?;
        Ok(codec)
    }

    fn verify_construction(&self) -> Result<(), CodeError> {
        if self.params.n > VERIFY_NODE_LIMIT {
            log::info!(
                "skipping exhaustive rank verification for n={} (limit {}); \
                 the structured construction guarantees the conditions",
                self.params.n,
                VERIFY_NODE_LIMIT
            );
            return Ok(());
        }
        let report = verify_mbr_psi(&self.psi, self.params.k);
        if report.ok {
            Ok(())
        } else {
            Err(CodeError::Corrupt(format!(
                "encoding matrix failed verification: {:?}",
                report.failures
            )))
        }
    }

    pub fn variant(&self) -> MbrVariant {
        self.variant
    }

    pub fn psi(&self) -> &MatrixFq {
        &self.psi
    }

    pub fn ctx(&self) -> FieldCtx {
        self.ctx
    }

    pub fn pack(&self, message: &[FieldElement]) -> Result<MbrMessageMatrix, CodeError> {
        MbrMessageMatrix::pack(self.ctx, self.params.k, self.params.d, message)
    }

    pub fn encode_matrix(&self, m: &MbrMessageMatrix) -> Result<MatrixFq, CodeError> {
        Ok(self.psi.matmul(m.matrix())?)
    }
}

impl RegeneratingCodec for MbrCodec {
    fn params(&self) -> &CodeParams {
        &self.params
    }

    fn encode(&self, message: &[FieldElement]) -> Result<MatrixFq, CodeError> {
        self.encode_matrix(&self.pack(message)?)
    }

    fn repair_vector(&self, failed: NodeId) -> Result<Vec<FieldElement>, CodeError> {
        check_node(failed, self.params.n)?;
        Ok(self.psi.row(failed - 1))
    }

    fn repair(
        &self,
        failed: NodeId,
        helper_ids: &[NodeId],
        symbols: &[FieldElement],
    ) -> Result<Vec<FieldElement>, CodeError> {
        check_helpers(
            failed,
            helper_ids,
            symbols.len(),
            self.params.d,
            self.params.n,
        )?;
        let rows: Vec<usize> = helper_ids.iter().map(|&h| h - 1).collect();
        let psi_repair = self.psi.select_rows(&rows)?;
        let inv = psi_repair
            .invert()
            .map_err(|_| CodeError::SingularRepairMatrix)?;
        let rhs = MatrixFq::from_col_vec(self.ctx, symbols)?;
        // M psi_f, transposed by symmetry into the stored row.
        let m_psi_f = inv.matmul(&rhs)?;
        Ok(m_psi_f.col(0))
    }

    fn reconstruct(
        &self,
        node_ids: &[NodeId],
        rows: &[Vec<FieldElement>],
    ) -> Result<Vec<FieldElement>, CodeError> {
        let (k, d) = (self.params.k, self.params.d);
        check_collectors(node_ids, rows, k, self.params.n, self.params.alpha)?;
        let row_ids: Vec<usize> = node_ids.iter().map(|&i| i - 1).collect();
        let psi_dc = self.psi.select_rows(&row_ids)?;
        let phi_dc = psi_dc.select_cols(&(0..k).collect::<Vec<_>>())?;
        let delta_dc = psi_dc.select_cols(&(k..d).collect::<Vec<_>>())?;
        let phi_inv = phi_dc
            .invert()
            .map_err(|_| CodeError::SingularRepairMatrix)?;

        let mut received = MatrixFq::zeros(self.ctx, k, d);
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                received.set(i, j, *v)?;
            }
        }
        // Received = [ Phi S + Delta T^t | Phi T ].
        let left = received.select_cols(&(0..k).collect::<Vec<_>>())?;
        let right = received.select_cols(&(k..d).collect::<Vec<_>>())?;
        let t = phi_inv.matmul(&right)?;
        let s = phi_inv.matmul(&left.sub(&delta_dc.matmul(&t.transpose())?)?)?;

        let mut m = MatrixFq::zeros(self.ctx, d, d);
        for i in 0..k {
            for j in 0..k {
                m.set(i, j, s.get(i, j))?;
            }
            for j in k..d {
                m.set(i, j, t.get(i, j - k))?;
                m.set(j, i, t.get(i, j - k))?;
            }
        }
        Ok(MbrMessageMatrix { m, k, d }.unpack())
    }
}
