//! Storage-optimal codec: each node stores `alpha = d - k + 1` symbols and a
//! failed node is rebuilt from one symbol each of any `d` survivors.
//!
//! The base construction requires `d = 2k - 2`; the message lives in two
//! symmetric `alpha x alpha` matrices stacked as `M = [S1; S2]`, and node `i`
//! stores `phi_i^t S1 + lambda_i phi_i^t S2`. Larger `d` is served by
//! shortening: build the `[n+i, k+i, d+i]` parent with `d' = 2k' - 2` in
//! systematic form, pin its first `i` systematic rows to zero, and puncture
//! those rows.

use crate::codec::{
    check_collectors, check_helpers, check_node, NodeId, RegeneratingCodec, VERIFY_NODE_LIMIT,
};
use crate::error::CodeError;
use crate::ffield::{FieldCtx, FieldElement};
use crate::matfq::{vandermonde, verify_msr_psi, MatrixFq};
use crate::params::{CodeKind, CodeParams};

/// Message matrix `[S1; S2]` with both blocks symmetric.
///
/// Packing order: the upper triangle of `S1` row-major, then the upper
/// triangle of `S2` row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MsrMessageMatrix {
    s1: MatrixFq,
    s2: MatrixFq,
}

impl MsrMessageMatrix {
    pub fn pack(ctx: FieldCtx, alpha: usize, message: &[FieldElement]) -> Result<Self, CodeError> {
        let b = alpha * (alpha + 1);
        if message.len() != b {
            return Err(CodeError::WrongLength {
                expected: b,
                got: message.len(),
            });
        }
        let half = b / 2;
        Ok(MsrMessageMatrix {
            s1: pack_symmetric(ctx, alpha, &message[..half])?,
            s2: pack_symmetric(ctx, alpha, &message[half..])?,
        })
    }

    pub fn unpack(&self) -> Vec<FieldElement> {
        let mut out = unpack_symmetric(&self.s1);
        out.extend(unpack_symmetric(&self.s2));
        out
    }

    pub fn s1(&self) -> &MatrixFq {
        &self.s1
    }

    pub fn s2(&self) -> &MatrixFq {
        &self.s2
    }

    /// The `d x alpha` stack `[S1; S2]`.
    pub fn stacked(&self) -> MatrixFq {
        self.s1.vstack(&self.s2).expect("blocks share shape")
    }
}

fn pack_symmetric(
    ctx: FieldCtx,
    alpha: usize,
    symbols: &[FieldElement],
) -> Result<MatrixFq, CodeError> {
    let mut s = MatrixFq::zeros(ctx, alpha, alpha);
    let mut it = symbols.iter();
    for i in 0..alpha {
        for j in i..alpha {
            let u = *it.next().expect("length checked by caller");
            s.set(i, j, u)?;
            s.set(j, i, u)?;
        }
    }
    Ok(s)
}

fn unpack_symmetric(s: &MatrixFq) -> Vec<FieldElement> {
    let alpha = s.rows();
    let mut out = Vec::with_capacity(alpha * (alpha + 1) / 2);
    for i in 0..alpha {
        for j in i..alpha {
            out.push(s.get(i, j));
        }
    }
    out
}

/// The `d = 2k - 2` product-matrix core. For shortened codecs this holds the
/// parent instance.
#[derive(Clone)]
struct MsrCore {
    params: CodeParams,
    ctx: FieldCtx,
    psi: MatrixFq,
    phi: MatrixFq,
    lambda: Vec<FieldElement>,
}

impl MsrCore {
    fn build(params: CodeParams) -> Result<Self, CodeError> {
        debug_assert_eq!(params.d, 2 * params.k - 2);
        let ctx = FieldCtx::new(params.q)?;
        let alpha = params.alpha;
        // Greedy scan over x = 1, 2, ... keeps a point iff x^alpha is a new
        // diagonal value; deterministic and reproducible.
        let mut points = Vec::with_capacity(params.n);
        let mut lambda = Vec::with_capacity(params.n);
        let mut seen = std::collections::HashSet::new();
        for x in 1..params.q {
            let candidate = ctx.elem(x).pow(alpha as u64);
            if seen.insert(candidate.value()) {
                points.push(ctx.elem(x));
                lambda.push(candidate);
                if points.len() == params.n {
                    break;
                }
            }
        }
        if points.len() < params.n {
            return Err(CodeError::FieldTooSmall(format!(
                "only {} of {} evaluation points in F_{} yield distinct diagonal values",
                points.len(),
                params.n,
                params.q
            )));
        }
        let psi = vandermonde(ctx, &points, params.d)?;
        let phi = psi.select_cols(&(0..alpha).collect::<Vec<_>>())?;
        let core = MsrCore {
            params,
            ctx,
            psi,
            phi,
            lambda,
        };
        core.verify_construction()?;
        Ok(core)
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
        let report = verify_msr_psi(&self.phi, &self.lambda, self.params.d);
        if report.ok {
            Ok(())
        } else {
            Err(CodeError::Corrupt(format!(
                "encoding matrix failed verification: {:?}",
                report.failures
            )))
        }
    }

    fn encode_m(&self, m: &MsrMessageMatrix) -> Result<MatrixFq, CodeError> {
        Ok(self.psi.matmul(&m.stacked())?)
    }

    /// Row stored by 0-based node `row0` under message matrix `m`.
    fn stored_row(
        &self,
        row0: usize,
        m: &MsrMessageMatrix,
    ) -> Result<Vec<FieldElement>, CodeError> {
        let psi_row = self.psi.select_rows(&[row0])?;
        Ok(psi_row.matmul(&m.stacked())?.row(0))
    }

    /// Inverts the repair system and splits the recovered column `M phi_f`
    /// into `(S1 phi_f, S2 phi_f)`.
    fn repair_intermediates(
        &self,
        helper_rows0: &[usize],
        symbols: &[FieldElement],
    ) -> Result<(Vec<FieldElement>, Vec<FieldElement>), CodeError> {
        let alpha = self.params.alpha;
        let psi_repair = self.psi.select_rows(helper_rows0)?;
        let inv = psi_repair
            .invert()
            .map_err(|_| CodeError::SingularRepairMatrix)?;
        let rhs = MatrixFq::from_col_vec(self.ctx, symbols)?;
        let m_phi_f = inv.matmul(&rhs)?;
        let col = m_phi_f.col(0);
        Ok((col[..alpha].to_vec(), col[alpha..].to_vec()))
    }

    /// `phi_f^t S1 + lambda_f phi_f^t S2`, assembled by transposing the
    /// symmetric intermediates.
    fn row_from_intermediates(
        &self,
        failed_row0: usize,
        s1_phi: &[FieldElement],
        s2_phi: &[FieldElement],
    ) -> Vec<FieldElement> {
        let lf = self.lambda[failed_row0];
        s1_phi
            .iter()
            .zip(s2_phi)
            .map(|(a, b)| *a + lf * *b)
            .collect()
    }

    /// Recovers `M` from the rows held by any `k = alpha + 1` nodes
    /// (0-based `rows0`).
    fn solve_message(
        &self,
        rows0: &[usize],
        rows: &[Vec<FieldElement>],
    ) -> Result<MsrMessageMatrix, CodeError> {
        let alpha = self.params.alpha;
        let kp = alpha + 1;
        debug_assert_eq!(rows0.len(), kp);
        debug_assert_eq!(rows.len(), kp);
        let phi_dc = self.phi.select_rows(rows0)?;
        let lambda_dc: Vec<FieldElement> = rows0.iter().map(|&r| self.lambda[r]).collect();
        let mut received = MatrixFq::zeros(self.ctx, kp, alpha);
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                received.set(i, j, *v)?;
            }
        }
        // Post-multiplying by phi_dc^t yields P + diag(lambda) Q with P and Q
        // symmetric; distinct lambdas let each off-diagonal pair be solved
        // from its mirrored counterpart. Diagonal entries are never read.
        let r = received.matmul(&phi_dc.transpose())?;
        let mut p = MatrixFq::zeros(self.ctx, kp, kp);
        let mut q = MatrixFq::zeros(self.ctx, kp, kp);
        for i in 0..kp {
            for j in i + 1..kp {
                let (li, lj) = (lambda_dc[i], lambda_dc[j]);
                if li == lj {
                    return Err(CodeError::Corrupt(
                        "duplicate diagonal value; codec state is invalid".into(),
                    ));
                }
                let qij = (r.get(i, j) - r.get(j, i)) * (li - lj).inv()?;
                let pij = r.get(i, j) - li * qij;
                debug_assert_eq!(pij, r.get(j, i) - lj * qij, "P must come out symmetric");
                p.set(i, j, pij)?;
                p.set(j, i, pij)?;
                q.set(i, j, qij)?;
                q.set(j, i, qij)?;
            }
        }
        let s1 = self.solve_symmetric_block(&phi_dc, &p)?;
        let s2 = self.solve_symmetric_block(&phi_dc, &q)?;
        debug_assert_eq!(s1, s1.transpose());
        debug_assert_eq!(s2, s2.transpose());
        Ok(MsrMessageMatrix { s1, s2 })
    }

    /// Given `X = Phi_DC S Phi_DC^t` off-diagonals for a symmetric `S`,
    /// recovers `S`.
    fn solve_symmetric_block(
        &self,
        phi_dc: &MatrixFq,
        x: &MatrixFq,
    ) -> Result<MatrixFq, CodeError> {
        let alpha = self.params.alpha;
        let kp = alpha + 1;
        // Row i off-diagonals equal phi_i^t S [phi_j]_{j != i}; the column
        // matrix is invertible, giving the functional phi_i^t S.
        let mut row_functionals = MatrixFq::zeros(self.ctx, kp, alpha);
        for i in 0..kp {
            let others: Vec<usize> = (0..kp).filter(|&j| j != i).collect();
            let cols = phi_dc.select_rows(&others)?.transpose();
            let cols_inv = cols.invert().map_err(|_| CodeError::SingularRepairMatrix)?;
            let vals: Vec<FieldElement> = others.iter().map(|&j| x.get(i, j)).collect();
            let functional = MatrixFq::from_row_vec(self.ctx, &vals)?.matmul(&cols_inv)?;
            for j in 0..alpha {
                row_functionals.set(i, j, functional.get(0, j))?;
            }
        }
        // The first alpha functionals stack into Phi_first S.
        let first: Vec<usize> = (0..alpha).collect();
        let phi_first = phi_dc.select_rows(&first)?;
        let stacked = row_functionals.select_rows(&first)?;
        let inv = phi_first
            .invert()
            .map_err(|_| CodeError::SingularRepairMatrix)?;
        Ok(inv.matmul(&stacked)?)
    }
}

/// Interference-alignment witness: scalars that express one helper's repair
/// symbol through the failed node's row and the first `k-1` helpers' symbols.
#[derive(Debug, Clone)]
pub struct IaWitness {
    pub failed: NodeId,
    pub helper: NodeId,
    pub basis: Vec<NodeId>,
    /// One scalar per basis node.
    pub align_scalars: Vec<FieldElement>,
    /// The `alpha`-length vector applied to the failed node's row.
    pub passthrough: Vec<FieldElement>,
}

impl IaWitness {
    /// Evaluates the witness identity against a concrete message.
    pub fn holds_for(&self, codec: &MsrCodec, message: &[FieldElement]) -> Result<bool, CodeError> {
        if codec.depth != 0 {
            return Err(CodeError::Unsupported(
                "alignment witnesses apply to unshortened codecs only".into(),
            ));
        }
        let core = &codec.core;
        let m = codec.message_matrix(message)?.stacked();
        let row = |node: NodeId| core.psi.select_rows(&[node - 1]);
        let phi_col = |node: NodeId| -> Result<MatrixFq, CodeError> {
            Ok(core.phi.select_rows(&[node - 1])?.transpose())
        };
        let scalar = |a: &MatrixFq| a.get(0, 0);

        let lhs = scalar(
            &row(self.helper)?
                .matmul(&m)?
                .matmul(&phi_col(self.failed)?)?,
        );
        let b = MatrixFq::from_col_vec(core.ctx, &self.passthrough)?;
        let mut rhs = scalar(&row(self.failed)?.matmul(&m)?.matmul(&b)?);
        for (a, &i) in self.align_scalars.iter().zip(&self.basis) {
            let term = scalar(&row(i)?.matmul(&m)?.matmul(&phi_col(self.failed)?)?);
            rhs = rhs + *a * term;
        }
        Ok(lhs == rhs)
    }
}

pub struct MsrCodec {
    params: CodeParams,
    core: MsrCore,
    /// Shortening depth `i = d - 2k + 2`; zero for the base construction.
    depth: usize,
    /// User-facing nodes that store the message verbatim, when remapped.
    systematic_ids: Option<Vec<NodeId>>,
}

impl MsrCodec {
    pub fn new(params: CodeParams) -> Result<Self, CodeError> {
        assert_eq!(params.kind, CodeKind::Msr, "wrong kind for this codec");
        let depth = params.d - (2 * params.k - 2);
        let core = if depth == 0 {
            MsrCore::build(params)?
        } else {
            let parent = CodeParams::derive(
                CodeKind::Msr,
                params.n + depth,
                params.k + depth,
                params.d + depth,
                Some(params.q),
            )
            .map_err(|e| match e {
                CodeError::BadFieldOverride(msg) => CodeError::FieldTooSmall(msg),
                other => other,
            })?;
            debug_assert_eq!(parent.alpha, params.alpha);
            MsrCore::build(parent)?
        };
        Ok(MsrCodec {
            params,
            core,
            depth,
            systematic_ids: None,
        })
    }

    pub fn shortening_depth(&self) -> usize {
        self.depth
    }

    pub fn systematic_ids(&self) -> Option<&[NodeId]> {
        self.systematic_ids.as_deref()
    }

    /// Remaps the message so the chosen `k` nodes store it verbatim. The
    /// codeword set is unchanged, so repair is unaffected.
    pub fn systematic_remap(&self, ids: &[NodeId]) -> Result<MsrCodec, CodeError> {
        let mut seen = vec![false; self.params.n + 1];
        for &id in ids {
            check_node(id, self.params.n)?;
            if std::mem::replace(&mut seen[id], true) {
                return Err(CodeError::BadNodeCount {
                    expected: self.params.k,
                    got: ids.len(),
                });
            }
        }
        if ids.len() != self.params.k {
            return Err(CodeError::BadNodeCount {
                expected: self.params.k,
                got: ids.len(),
            });
        }
        Ok(MsrCodec {
            params: self.params,
            core: self.core.clone(),
            depth: self.depth,
            systematic_ids: Some(ids.to_vec()),
        })
    }

    /// Encoding matrix of the underlying full-length construction (the
    /// parent's, for shortened codecs).
    pub fn full_psi(&self) -> &MatrixFq {
        &self.core.psi
    }

    pub fn full_phi(&self) -> &MatrixFq {
        &self.core.phi
    }

    pub fn lambdas(&self) -> &[FieldElement] {
        &self.core.lambda
    }

    pub fn ctx(&self) -> FieldCtx {
        self.core.ctx
    }

    /// Parent-row systematic positions: `depth` virtual all-zero rows, then
    /// the user-facing systematic choice shifted past them.
    fn effective_parent_ids(&self) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = (1..=self.depth).collect();
        match &self.systematic_ids {
            Some(user) => ids.extend(user.iter().map(|&i| i + self.depth)),
            None => ids.extend((1..=self.params.k).map(|i| i + self.depth)),
        }
        ids
    }

    /// The message matrix a given user message encodes through.
    pub fn message_matrix(&self, message: &[FieldElement]) -> Result<MsrMessageMatrix, CodeError> {
        if message.len() != self.params.message_len {
            return Err(CodeError::WrongLength {
                expected: self.params.message_len,
                got: message.len(),
            });
        }
        let alpha = self.params.alpha;
        if self.depth == 0 && self.systematic_ids.is_none() {
            return MsrMessageMatrix::pack(self.core.ctx, alpha, message);
        }
        let ids = self.effective_parent_ids();
        let rows0: Vec<usize> = ids.iter().map(|&i| i - 1).collect();
        let mut rows: Vec<Vec<FieldElement>> = vec![vec![self.core.ctx.zero(); alpha]; self.depth];
        rows.extend(message.chunks(alpha).map(|c| c.to_vec()));
        self.core.solve_message(&rows0, &rows)
    }

    /// The repair intermediates `(S1 phi_f, S2 phi_f)` of the underlying
    /// construction, exposed for verification.
    pub fn repair_intermediates(
        &self,
        failed: NodeId,
        helper_ids: &[NodeId],
        symbols: &[FieldElement],
    ) -> Result<(Vec<FieldElement>, Vec<FieldElement>), CodeError> {
        check_helpers(
            failed,
            helper_ids,
            symbols.len(),
            self.params.d,
            self.params.n,
        )?;
        let (rows0, syms) = self.parent_repair_inputs(helper_ids, symbols);
        self.core.repair_intermediates(&rows0, &syms)
    }

    /// Virtual helpers contribute the constant zero: their stored rows are
    /// pinned to zero, and the repair symbol is linear in the stored row.
    fn parent_repair_inputs(
        &self,
        helper_ids: &[NodeId],
        symbols: &[FieldElement],
    ) -> (Vec<usize>, Vec<FieldElement>) {
        let mut rows0: Vec<usize> = (0..self.depth).collect();
        rows0.extend(helper_ids.iter().map(|&h| h - 1 + self.depth));
        let mut syms = vec![self.core.ctx.zero(); self.depth];
        syms.extend_from_slice(symbols);
        (rows0, syms)
    }

    /// Builds the alignment witness for helper `helper` against `basis`,
    /// with the identity checked numerically before returning.
    pub fn ia_witness(
        &self,
        failed: NodeId,
        helper: NodeId,
        basis: &[NodeId],
    ) -> Result<IaWitness, CodeError> {
        if self.depth != 0 {
            return Err(CodeError::Unsupported(
                "alignment witnesses apply to unshortened codecs only".into(),
            ));
        }
        let n = self.params.n;
        check_node(failed, n)?;
        check_node(helper, n)?;
        for &b in basis {
            check_node(b, n)?;
        }
        if basis.contains(&failed) || basis.contains(&helper) || failed == helper {
            return Err(CodeError::InfeasibleParameters(
                "failed node, helper and basis must be distinct".into(),
            ));
        }
        if basis.len() != self.params.k - 1 {
            return Err(CodeError::BadNodeCount {
                expected: self.params.k - 1,
                got: basis.len(),
            });
        }
        let phi_rows: Vec<Vec<FieldElement>> =
            basis.iter().map(|&i| self.core.phi.row(i - 1)).collect();
        let lambdas: Vec<FieldElement> = basis.iter().map(|&i| self.core.lambda[i - 1]).collect();
        let (align_scalars, passthrough) = ia_witness_from_parts(
            self.core.ctx,
            &phi_rows,
            &lambdas,
            &self.core.phi.row(helper - 1),
            self.core.lambda[helper - 1],
            &self.core.phi.row(failed - 1),
            self.core.lambda[failed - 1],
        )?;
        let witness = IaWitness {
            failed,
            helper,
            basis: basis.to_vec(),
            align_scalars,
            passthrough,
        };
        // Spot-check the identity on deterministic pseudo-random messages.
        let mut state = 0x5851F42D4C957F2Du64 ^ ((failed as u64) << 32 | helper as u64);
        for _ in 0..8 {
            let message: Vec<FieldElement> = (0..self.params.message_len)
                .map(|_| {
                    state = state
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(1442695040888963407);
                    self.core.ctx.elem(state >> 16)
                })
                .collect();
            if !witness.holds_for(self, &message)? {
                return Err(CodeError::Corrupt(
                    "alignment identity failed verification".into(),
                ));
            }
        }
        Ok(witness)
    }
}

/// Core witness math, taking raw vectors so invariant violations can be
/// exercised directly.
fn ia_witness_from_parts(
    ctx: FieldCtx,
    basis_phis: &[Vec<FieldElement>],
    basis_lambdas: &[FieldElement],
    helper_phi: &[FieldElement],
    helper_lambda: FieldElement,
    failed_phi: &[FieldElement],
    failed_lambda: FieldElement,
) -> Result<(Vec<FieldElement>, Vec<FieldElement>), CodeError> {
    let alpha = failed_phi.len();
    if basis_lambdas.contains(&failed_lambda) || helper_lambda == failed_lambda {
        return Err(CodeError::Corrupt(
            "diagonal values must be distinct from the failed node's".into(),
        ));
    }
    // Express the helper's phi vector in the basis.
    let mut cols = Vec::with_capacity(alpha * alpha);
    for i in 0..alpha {
        for phi in basis_phis {
            cols.push(phi[i]);
        }
    }
    let basis_matrix = MatrixFq::from_elems(ctx, alpha, alpha, &cols)?;
    if basis_matrix.rank() < alpha {
        return Err(CodeError::DependentBasis);
    }
    let rhs = MatrixFq::from_col_vec(ctx, helper_phi)?;
    let tilde = basis_matrix.solve(&rhs)?.col(0);

    let gap = helper_lambda - failed_lambda;
    let mut align_scalars = Vec::with_capacity(basis_phis.len());
    let mut passthrough: Vec<FieldElement> = helper_phi.to_vec();
    for (idx, (&a_tilde, &lambda_i)) in tilde.iter().zip(basis_lambdas).enumerate() {
        let denom = (lambda_i - failed_lambda).inv()?;
        align_scalars.push(a_tilde * gap * denom);
        let coeff = gap * a_tilde * denom;
        for (p, &phi_v) in passthrough.iter_mut().zip(&basis_phis[idx]) {
            *p = *p - coeff * phi_v;
        }
    }
    Ok((align_scalars, passthrough))
}

impl RegeneratingCodec for MsrCodec {
    fn params(&self) -> &CodeParams {
        &self.params
    }

    fn encode(&self, message: &[FieldElement]) -> Result<MatrixFq, CodeError> {
        let m = self.message_matrix(message)?;
        let c = self.core.encode_m(&m)?;
        if self.depth == 0 {
            Ok(c)
        } else {
            let keep: Vec<usize> = (self.depth..self.core.params.n).collect();
            Ok(c.select_rows(&keep)?)
        }
    }

    fn repair_vector(&self, failed: NodeId) -> Result<Vec<FieldElement>, CodeError> {
        check_node(failed, self.params.n)?;
        Ok(self.core.phi.row(failed - 1 + self.depth))
    }

    fn repair(
        &self,
        failed: NodeId,
        helper_ids: &[NodeId],
        symbols: &[FieldElement],
    ) -> Result<Vec<FieldElement>, CodeError> {
        let (s1_phi, s2_phi) = self.repair_intermediates(failed, helper_ids, symbols)?;
        Ok(self
            .core
            .row_from_intermediates(failed - 1 + self.depth, &s1_phi, &s2_phi))
    }

    fn reconstruct(
        &self,
        node_ids: &[NodeId],
        rows: &[Vec<FieldElement>],
    ) -> Result<Vec<FieldElement>, CodeError> {
        check_collectors(
            node_ids,
            rows,
            self.params.k,
            self.params.n,
            self.params.alpha,
        )?;
        let mut rows0: Vec<usize> = (0..self.depth).collect();
        rows0.extend(node_ids.iter().map(|&i| i - 1 + self.depth));
        let mut parent_rows: Vec<Vec<FieldElement>> =
            vec![vec![self.core.ctx.zero(); self.params.alpha]; self.depth];
        parent_rows.extend(rows.iter().cloned());
        let m = self.core.solve_message(&rows0, &parent_rows)?;

        if self.depth == 0 && self.systematic_ids.is_none() {
            return Ok(m.unpack());
        }
        // Read the message back through its systematic embedding; the
        // virtual rows must come out zero for a well-formed codeword.
        let mut out = Vec::with_capacity(self.params.message_len);
        for (idx, &p) in self.effective_parent_ids().iter().enumerate() {
            let row = self.core.stored_row(p - 1, &m)?;
            if idx < self.depth {
                if row.iter().any(|v| !v.is_zero()) {
                    return Err(CodeError::Corrupt(
                        "punctured rows of the parent codeword are nonzero".into(),
                    ));
                }
            } else {
                out.extend(row);
            }
        }
        Ok(out)
    }
}
