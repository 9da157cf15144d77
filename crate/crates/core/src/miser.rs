//! Storage-optimal codec for the boundary geometry `n = d + 1`,
//! `d >= 2k - 1`: the first `k` nodes store the message matrix `S` uncoded
//! and the remaining nodes store rows of `Phi (S + rho S^t)` for a Cauchy
//! matrix `Phi` and a scalar `rho` with `rho != 0`, `rho^2 != 1`.
//!
//! Repair uses all `n - 1` survivors and takes different (but fixed) linear
//! systems for systematic and parity nodes. Larger `d` is served by the same
//! shortening mechanism as the general storage-optimal codec.
//!
//! The message matrix here has `d + 1` rows (`M = [S; S^t]`), one more than
//! the `d`-row matrices of the other two families; nothing in the shared
//! contract assumes a `d`-row message matrix.

use itertools::Itertools;

use crate::codec::{
    check_collectors, check_helpers, check_node, NodeId, RegeneratingCodec, VERIFY_NODE_LIMIT,
};
use crate::error::CodeError;
use crate::ffield::{FieldCtx, FieldElement};
use crate::matfq::{cauchy, MatrixFq};
use crate::params::{CodeKind, CodeParams};

/// Construction report for the Cauchy block and scalar conditions.
#[derive(Debug, Clone)]
pub struct MiserReport {
    pub ok: bool,
    pub failures: Vec<String>,
}

#[derive(Clone)]
struct MiserCore {
    params: CodeParams,
    ctx: FieldCtx,
    /// `k x k` Cauchy matrix; every square submatrix is invertible.
    phi: MatrixFq,
    rho: FieldElement,
}

impl MiserCore {
    fn build(params: CodeParams, rho_override: Option<u64>) -> Result<Self, CodeError> {
        debug_assert_eq!(params.d, 2 * params.k - 1);
        debug_assert_eq!(params.n, params.d + 1);
        let ctx = FieldCtx::new(params.q)?;
        let k = params.k;
        if (params.q - 1) < 2 * k as u64 {
            return Err(CodeError::FieldTooSmall(format!(
                "need {} distinct nonzero Cauchy points in F_{}",
                2 * k,
                params.q
            )));
        }
        let rho = match rho_override {
            Some(v) => {
                let r = ctx.elem(v);
                if r.is_zero() || r.pow(2) == ctx.one() {
                    return Err(CodeError::InfeasibleParameters(format!(
                        "rho = {v} violates rho != 0, rho^2 != 1 in F_{}",
                        params.q
                    )));
                }
                r
            }
            None => {
                // Smallest valid scalar; rho = 2 whenever q > 3.
                (2..params.q)
                    .map(|v| ctx.elem(v))
                    .find(|r| !r.is_zero() && r.pow(2) != ctx.one())
                    .ok_or_else(|| {
                        CodeError::FieldTooSmall(format!(
                            "F_{} has no scalar with rho != 0, rho^2 != 1",
                            params.q
                        ))
                    })?
            }
        };
        let xs: Vec<FieldElement> = (1..=k as u64).map(|v| ctx.elem(v)).collect();
        let ys: Vec<FieldElement> = (k as u64 + 1..=2 * k as u64).map(|v| ctx.elem(v)).collect();
        let phi = cauchy(ctx, &xs, &ys)?;
        let core = MiserCore {
            params,
            ctx,
            phi,
            rho,
        };
        if params.n <= VERIFY_NODE_LIMIT {
            let report = core.verify();
            if !report.ok {
                return Err(CodeError::Corrupt(format!(
                    "construction failed verification: {:?}",
                    report.failures
                )));
            }
        } else {
            log::info!(
                "skipping exhaustive submatrix verification for n={} (limit {})",
                params.n,
                VERIFY_NODE_LIMIT
            );
        }
        Ok(core)
    }

    fn verify(&self) -> MiserReport {
        let mut failures = Vec::new();
        if self.rho.is_zero() || self.rho.pow(2) == self.ctx.one() {
            failures.push(format!("invalid rho = {}", self.rho));
        }
        let k = self.params.k;
        for size in 1..=k {
            for rsel in (0..k).combinations(size) {
                for csel in (0..k).combinations(size) {
                    let sub = self.phi.submatrix(&rsel, &csel).expect("in range");
                    if sub.invert().is_err() {
                        failures.push(format!(
                            "singular {size}x{size} submatrix at rows {rsel:?} cols {csel:?}"
                        ));
                    }
                }
            }
        }
        MiserReport {
            ok: failures.is_empty(),
            failures,
        }
    }

    /// `[S; Phi (S + rho S^t)]`.
    fn encode_s(&self, s: &MatrixFq) -> Result<MatrixFq, CodeError> {
        let mixed = s.add(&s.transpose().scale(self.rho)?)?;
        Ok(s.vstack(&self.phi.matmul(&mixed)?)?)
    }

    /// Rebuilds row `i0` of `S` (0-based systematic index) from inner
    /// products with the unit vector `e_{i0}`: `k - 1` from the surviving
    /// systematic nodes and `k` from the parity nodes.
    fn repair_systematic(
        &self,
        i0: usize,
        sys_symbols: &[FieldElement],
        par_symbols: &[FieldElement],
    ) -> Result<Vec<FieldElement>, CodeError> {
        let k = self.params.k;
        debug_assert_eq!(sys_symbols.len(), k - 1);
        debug_assert_eq!(par_symbols.len(), k);
        let ctx = self.ctx;
        let mut a = MatrixFq::zeros(ctx, 2 * k, 2 * k);
        let mut b = Vec::with_capacity(2 * k);
        let mut row = 0;
        // Identity rows for the surviving systematic nodes.
        for (j, &sym) in (0..k).filter(|&j| j != i0).zip(sys_symbols) {
            a.set(row, j, ctx.one())?;
            b.push(sym);
            row += 1;
        }
        // [Phi | rho Phi] rows for the parity nodes.
        #[allow(clippy::needless_range_loop)]
        for g in 0..k {
            for j in 0..k {
                a.set(row, j, self.phi.get(g, j))?;
                a.set(row, k + j, self.rho * self.phi.get(g, j))?;
            }
            b.push(par_symbols[g]);
            row += 1;
        }
        // Derived functional [rho e_i | e_i]: its value is entry i0 of
        // Phi^{-1} applied to the parity symbols.
        let w = self
            .phi
            .invert()
            .map_err(|_| CodeError::SingularRepairMatrix)?
            .matmul(&MatrixFq::from_col_vec(ctx, par_symbols)?)?;
        a.set(row, i0, self.rho)?;
        a.set(row, k + i0, ctx.one())?;
        b.push(w.get(i0, 0));

        let z = a
            .invert()
            .map_err(|_| CodeError::SingularRepairMatrix)?
            .matmul(&MatrixFq::from_col_vec(ctx, &b)?)?;
        // z = [S e_i; S^t e_i]; the lower half is the lost row of S.
        Ok((k..2 * k).map(|t| z.get(t, 0)).collect())
    }

    /// Rebuilds the row of parity node with Cauchy row `f0` from inner
    /// products with `phi_f`.
    fn repair_parity(
        &self,
        f0: usize,
        sys_symbols: &[FieldElement],
        par_symbols: &[FieldElement],
    ) -> Result<Vec<FieldElement>, CodeError> {
        let k = self.params.k;
        debug_assert_eq!(sys_symbols.len(), k);
        debug_assert_eq!(par_symbols.len(), k - 1);
        let ctx = self.ctx;
        let phi_f = self.phi.row(f0);
        let mut a = MatrixFq::zeros(ctx, 2 * k, 2 * k);
        let mut b = Vec::with_capacity(2 * k);
        let mut row = 0;
        // Full identity block: the systematic symbols are S phi_f itself.
        for (j, &sym) in sys_symbols.iter().enumerate() {
            a.set(row, j, ctx.one())?;
            b.push(sym);
            row += 1;
        }
        for (g, &sym) in (0..k).filter(|&g| g != f0).zip(par_symbols) {
            for j in 0..k {
                a.set(row, j, self.phi.get(g, j))?;
                a.set(row, k + j, self.rho * self.phi.get(g, j))?;
            }
            b.push(sym);
            row += 1;
        }
        // (S phi_f)^t phi_f = phi_f^t S^t phi_f gives one more equation,
        // the [0 | phi_f^t] row.
        let mut scalar = ctx.zero();
        for (j, &sym) in sys_symbols.iter().enumerate() {
            scalar = scalar + sym * phi_f[j];
        }
        for (j, &v) in phi_f.iter().enumerate() {
            a.set(row, k + j, v)?;
        }
        b.push(scalar);

        let z = a
            .invert()
            .map_err(|_| CodeError::SingularRepairMatrix)?
            .matmul(&MatrixFq::from_col_vec(ctx, &b)?)?;
        // z = [S phi_f; S^t phi_f]; the stored row is
        // phi_f^t S + rho phi_f^t S^t = (S^t phi_f)^t + rho (S phi_f)^t.
        Ok((0..k)
            .map(|t| z.get(k + t, 0) + self.rho * z.get(t, 0))
            .collect())
    }

    /// Recovers `S` from any `k` rows of the codeword (0-based node rows).
    fn reconstruct_s(
        &self,
        rows0: &[usize],
        rows: &[Vec<FieldElement>],
    ) -> Result<MatrixFq, CodeError> {
        let k = self.params.k;
        let ctx = self.ctx;
        // Partition into systematic rows (P, known rows of S) and parity
        // rows (Q, rows of Phi (S + rho S^t)), both in ascending order.
        let mut sys: Vec<(usize, &Vec<FieldElement>)> = Vec::new();
        let mut par: Vec<(usize, &Vec<FieldElement>)> = Vec::new();
        for (&r0, row) in rows0.iter().zip(rows) {
            if r0 < k {
                sys.push((r0, row));
            } else {
                par.push((r0 - k, row));
            }
        }
        sys.sort_by_key(|e| e.0);
        par.sort_by_key(|e| e.0);
        let p_ids: Vec<usize> = sys.iter().map(|e| e.0).collect();
        let q_ids: Vec<usize> = par.iter().map(|e| e.0).collect();
        let t_ids: Vec<usize> = (0..k).filter(|i| !p_ids.contains(i)).collect();

        let mut s = MatrixFq::zeros(ctx, k, k);
        for (r0, row) in &sys {
            for (j, v) in row.iter().enumerate() {
                s.set(*r0, j, *v)?;
            }
        }
        if t_ids.is_empty() {
            return Ok(s);
        }
        // From here on |Q| = |T| > 0 and the Cauchy submatrices on (Q, T)
        // are invertible.
        let mut w = MatrixFq::zeros(ctx, q_ids.len(), k);
        for (i, (_, row)) in par.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                w.set(i, j, *v)?;
            }
        }
        let phi_q = self.phi.select_rows(&q_ids)?;
        let phi_qt = phi_q.select_cols(&t_ids)?;
        let phi_qt_inv = phi_qt
            .invert()
            .map_err(|_| CodeError::SingularRepairMatrix)?;

        if !p_ids.is_empty() {
            // Peel the known columns: w_(:,P) - rho Phi_Q S_(P,:)^t equals
            // Phi_(Q,P) S_(P,P) + Phi_(Q,T) S_(T,P).
            let sp = s.select_rows(&p_ids)?;
            let z = w
                .select_cols(&p_ids)?
                .sub(&phi_q.matmul(&sp.transpose())?.scale(self.rho)?)?;
            let known = self
                .phi
                .submatrix(&q_ids, &p_ids)?
                .matmul(&sp.select_cols(&p_ids)?)?;
            let s_tp = phi_qt_inv.matmul(&z.sub(&known)?)?;
            for (ti, &t) in t_ids.iter().enumerate() {
                for (pi, &p) in p_ids.iter().enumerate() {
                    s.set(t, p, s_tp.get(ti, pi))?;
                }
            }
        }
        // Recover the mixed block (S + rho S^t)_(T,T) and split it using
        // rho^2 != 1.
        let mut mixed_pt = MatrixFq::zeros(ctx, p_ids.len(), t_ids.len());
        for (pi, &p) in p_ids.iter().enumerate() {
            for (ti, &t) in t_ids.iter().enumerate() {
                mixed_pt.set(pi, ti, s.get(p, t) + self.rho * s.get(t, p))?;
            }
        }
        let rhs = w
            .select_cols(&t_ids)?
            .sub(&self.phi.submatrix(&q_ids, &p_ids)?.matmul(&mixed_pt)?)?;
        let y = phi_qt_inv.matmul(&rhs)?;
        let one = ctx.one();
        let diag_inv = (one + self.rho).inv()?;
        let det_inv = (one - self.rho * self.rho).inv()?;
        for (ai, &ta) in t_ids.iter().enumerate() {
            s.set(ta, ta, y.get(ai, ai) * diag_inv)?;
            for (bi, &tb) in t_ids.iter().enumerate().skip(ai + 1) {
                let y1 = y.get(ai, bi); // S_ab + rho S_ba
                let y2 = y.get(bi, ai); // S_ba + rho S_ab
                s.set(ta, tb, (y1 - self.rho * y2) * det_inv)?;
                s.set(tb, ta, (y2 - self.rho * y1) * det_inv)?;
            }
        }
        Ok(s)
    }
}

pub struct MiserCodec {
    params: CodeParams,
    core: MiserCore,
    /// Shortening depth `i = d - (2k - 1)`; zero for the base geometry.
    depth: usize,
}

impl MiserCodec {
    pub fn new(params: CodeParams) -> Result<Self, CodeError> {
        Self::build(params, None)
    }

    /// Same construction with an explicit mixing scalar.
    pub fn with_rho(params: CodeParams, rho: u64) -> Result<Self, CodeError> {
        Self::build(params, Some(rho))
    }

    fn build(params: CodeParams, rho_override: Option<u64>) -> Result<Self, CodeError> {
        assert_eq!(params.kind, CodeKind::Miser, "wrong kind for this codec");
        let depth = params.d - (2 * params.k - 1);
        let core_params = if depth == 0 {
            params
        } else {
            CodeParams::derive(
                CodeKind::Miser,
                params.n + depth,
                params.k + depth,
                params.d + depth,
                Some(params.q),
            )
            .map_err(|e| match e {
                CodeError::BadFieldOverride(msg) => CodeError::FieldTooSmall(msg),
                other => other,
            })?
        };
        debug_assert_eq!(core_params.alpha, params.alpha);
        Ok(MiserCodec {
            params,
            core: MiserCore::build(core_params, rho_override)?,
            depth,
        })
    }

    pub fn shortening_depth(&self) -> usize {
        self.depth
    }

    pub fn rho(&self) -> FieldElement {
        self.core.rho
    }

    /// The Cauchy block of the underlying full-length construction.
    pub fn full_phi(&self) -> &MatrixFq {
        &self.core.phi
    }

    pub fn ctx(&self) -> FieldCtx {
        self.core.ctx
    }

    pub fn verify_construction(&self) -> MiserReport {
        self.core.verify()
    }

    /// The (possibly zero-padded) message square the codeword encodes.
    fn message_square(&self, message: &[FieldElement]) -> Result<MatrixFq, CodeError> {
        if message.len() != self.params.message_len {
            return Err(CodeError::WrongLength {
                expected: self.params.message_len,
                got: message.len(),
            });
        }
        let kp = self.core.params.k;
        let mut s = MatrixFq::zeros(self.core.ctx, kp, kp);
        for (idx, v) in message.iter().enumerate() {
            let i = self.depth + idx / kp;
            s.set(i, idx % kp, *v)?;
        }
        Ok(s)
    }

    /// Repair of a node that stores a row of `S` uncoded.
    pub fn repair_systematic(
        &self,
        failed: NodeId,
        helper_ids: &[NodeId],
        symbols: &[FieldElement],
    ) -> Result<Vec<FieldElement>, CodeError> {
        check_node(failed, self.params.n)?;
        if failed > self.params.k {
            return Err(CodeError::WrongBranch(failed));
        }
        self.repair(failed, helper_ids, symbols)
    }

    /// Repair of a node that stores a row of `Phi (S + rho S^t)`.
    pub fn repair_parity(
        &self,
        failed: NodeId,
        helper_ids: &[NodeId],
        symbols: &[FieldElement],
    ) -> Result<Vec<FieldElement>, CodeError> {
        check_node(failed, self.params.n)?;
        if failed <= self.params.k {
            return Err(CodeError::WrongBranch(failed));
        }
        self.repair(failed, helper_ids, symbols)
    }

    /// Splits helper symbols into parent systematic/parity groups, adding
    /// the virtual all-zero helpers for shortened instances.
    fn partition_helpers(
        &self,
        helper_ids: &[NodeId],
        symbols: &[FieldElement],
        parent_failed: NodeId,
    ) -> (Vec<FieldElement>, Vec<FieldElement>) {
        let kp = self.core.params.k;
        let mut pairs: Vec<(NodeId, FieldElement)> = (1..=self.depth)
            .map(|v| (v, self.core.ctx.zero()))
            .collect();
        pairs.extend(
            helper_ids
                .iter()
                .zip(symbols)
                .map(|(&h, &s)| (h + self.depth, s)),
        );
        pairs.sort_by_key(|e| e.0);
        let mut sys = Vec::new();
        let mut par = Vec::new();
        for (id, sym) in pairs {
            debug_assert_ne!(id, parent_failed);
            if id <= kp {
                sys.push(sym);
            } else {
                par.push(sym);
            }
        }
        (sys, par)
    }
}

impl RegeneratingCodec for MiserCodec {
    fn params(&self) -> &CodeParams {
        &self.params
    }

    fn encode(&self, message: &[FieldElement]) -> Result<MatrixFq, CodeError> {
        let s = self.message_square(message)?;
        let c = self.core.encode_s(&s)?;
        if self.depth == 0 {
            Ok(c)
        } else {
            let keep: Vec<usize> = (self.depth..self.core.params.n).collect();
            Ok(c.select_rows(&keep)?)
        }
    }

    fn repair_vector(&self, failed: NodeId) -> Result<Vec<FieldElement>, CodeError> {
        check_node(failed, self.params.n)?;
        let kp = self.core.params.k;
        let parent_failed = failed + self.depth;
        if parent_failed <= kp {
            let mut e = vec![self.core.ctx.zero(); kp];
            e[parent_failed - 1] = self.core.ctx.one();
            Ok(e)
        } else {
            Ok(self.core.phi.row(parent_failed - kp - 1))
        }
    }

    fn repair(
        &self,
        failed: NodeId,
        helper_ids: &[NodeId],
        symbols: &[FieldElement],
    ) -> Result<Vec<FieldElement>, CodeError> {
        // This family repairs from all n-1 survivors (d = n - 1).
        check_helpers(
            failed,
            helper_ids,
            symbols.len(),
            self.params.d,
            self.params.n,
        )?;
        let kp = self.core.params.k;
        let parent_failed = failed + self.depth;
        let (sys, par) = self.partition_helpers(helper_ids, symbols, parent_failed);
        if parent_failed <= kp {
            self.core.repair_systematic(parent_failed - 1, &sys, &par)
        } else {
            self.core.repair_parity(parent_failed - kp - 1, &sys, &par)
        }
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
        let kp = self.core.params.k;
        let mut rows0: Vec<usize> = (0..self.depth).collect();
        rows0.extend(node_ids.iter().map(|&i| i - 1 + self.depth));
        let mut parent_rows: Vec<Vec<FieldElement>> =
            vec![vec![self.core.ctx.zero(); kp]; self.depth];
        parent_rows.extend(rows.iter().cloned());
        let s = self.core.reconstruct_s(&rows0, &parent_rows)?;
        for i in 0..self.depth {
            if s.row(i).iter().any(|v| !v.is_zero()) {
                return Err(CodeError::Corrupt(
                    "punctured rows of the parent message are nonzero".into(),
                ));
            }
        }
        let mut out = Vec::with_capacity(self.params.message_len);
        for i in self.depth..kp {
            out.extend(s.row(i));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;

    fn codec(n: usize, k: usize, d: usize, q: u64) -> MiserCodec {
        let params = CodeParams::derive(CodeKind::Miser, n, k, d, Some(q)).unwrap();
        MiserCodec::new(params).unwrap()
    }

    fn pseudo_message(ctx: FieldCtx, len: usize, seed: u64) -> Vec<FieldElement> {
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(13);
        (0..len)
            .map(|_| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ctx.elem(state >> 16)
            })
            .collect()
    }

    fn all_helpers(
        c: &MatrixFq,
        codec: &MiserCodec,
        failed: usize,
    ) -> (Vec<usize>, Vec<FieldElement>) {
        let n = codec.params().n;
        let helpers: Vec<usize> = (1..=n).filter(|&i| i != failed).collect();
        let symbols = helpers
            .iter()
            .map(|&h| codec.helper_symbol(h, &c.row(h - 1), failed).unwrap())
            .collect();
        (helpers, symbols)
    }

    #[test]
    fn encode_is_systematic_with_cauchy_parity() {
        let codec = codec(4, 2, 3, 7);
        let ctx = codec.ctx();
        let u: Vec<FieldElement> = [1u64, 2, 3, 4].iter().map(|&v| ctx.elem(v)).collect();
        let c = codec.encode(&u).unwrap();
        assert_eq!(c.row(0), u[0..2].to_vec());
        assert_eq!(c.row(1), u[2..4].to_vec());
        // Parity rows recomputed independently.
        let s = MatrixFq::from_rows(ctx, &[&[1, 2], &[3, 4]]).unwrap();
        let mixed = s.add(&s.transpose().scale(codec.rho()).unwrap()).unwrap();
        let parity = codec.full_phi().matmul(&mixed).unwrap();
        assert_eq!(c.row(2), parity.row(0));
        assert_eq!(c.row(3), parity.row(1));
        let zeros = vec![ctx.zero(); 4];
        assert!(codec.encode(&zeros).unwrap().is_zero());
    }

    #[test]
    fn explicit_rho_is_honoured_and_validated() {
        let params = CodeParams::derive(CodeKind::Miser, 4, 2, 3, Some(7)).unwrap();
        let with3 = MiserCodec::with_rho(params, 3).unwrap();
        assert_eq!(with3.rho().value(), 3);
        // Systematic rows are independent of rho.
        let ctx = with3.ctx();
        let u: Vec<FieldElement> = [1u64, 2, 3, 4].iter().map(|&v| ctx.elem(v)).collect();
        let c = with3.encode(&u).unwrap();
        assert_eq!(c.row(0), u[0..2].to_vec());
        assert!(MiserCodec::with_rho(params, 0).is_err());
        assert!(MiserCodec::with_rho(params, 1).is_err());
        assert!(MiserCodec::with_rho(params, 6).is_err()); // 6 = -1 mod 7
        let default = MiserCodec::new(params).unwrap();
        assert_eq!(default.rho().value(), 2);
    }

    #[test]
    fn repairs_are_exact_for_every_node_small_instances() {
        for (n, k, d, q) in [(4usize, 2usize, 3usize, 257u64), (6, 3, 5, 257)] {
            let codec = codec(n, k, d, q);
            let u = pseudo_message(codec.ctx(), codec.params().message_len, 42);
            let c = codec.encode(&u).unwrap();
            for failed in 1..=n {
                let (helpers, symbols) = all_helpers(&c, &codec, failed);
                let repaired = codec.repair(failed, &helpers, &symbols).unwrap();
                assert_eq!(
                    repaired,
                    c.row(failed - 1),
                    "node {failed} of [{n},{k},{d}]"
                );
                // Branch-specific entry points agree with the dispatcher.
                if failed <= k {
                    assert_eq!(
                        codec.repair_systematic(failed, &helpers, &symbols).unwrap(),
                        repaired
                    );
                    assert!(matches!(
                        codec.repair_parity(failed, &helpers, &symbols),
                        Err(CodeError::WrongBranch(_))
                    ));
                } else {
                    assert_eq!(
                        codec.repair_parity(failed, &helpers, &symbols).unwrap(),
                        repaired
                    );
                    assert!(matches!(
                        codec.repair_systematic(failed, &helpers, &symbols),
                        Err(CodeError::WrongBranch(_))
                    ));
                }
            }
        }
    }

    #[test]
    fn repair_requires_all_survivors() {
        let codec = codec(4, 2, 3, 257);
        let u = pseudo_message(codec.ctx(), 4, 1);
        let c = codec.encode(&u).unwrap();
        let (helpers, symbols) = all_helpers(&c, &codec, 1);
        assert!(matches!(
            codec.repair(1, &helpers[..2], &symbols[..2]),
            Err(CodeError::BadHelperCount { .. })
        ));
    }

    #[test]
    fn reconstruct_from_every_subset_including_all_parity() {
        for (n, k, d) in [(4usize, 2usize, 3usize), (6, 3, 5)] {
            let codec = codec(n, k, d, 257);
            let u = pseudo_message(codec.ctx(), codec.params().message_len, 9);
            let c = codec.encode(&u).unwrap();
            for ids in (1..=n).combinations(k) {
                let rows: Vec<Vec<FieldElement>> = ids.iter().map(|&i| c.row(i - 1)).collect();
                assert_eq!(
                    codec.reconstruct(&ids, &rows).unwrap(),
                    u,
                    "subset {ids:?} of [{n},{k},{d}]"
                );
            }
        }
    }

    #[test]
    fn zero_message_repairs_to_zero() {
        let codec = codec(4, 2, 3, 257);
        let u = vec![codec.ctx().zero(); 4];
        let c = codec.encode(&u).unwrap();
        let (helpers, symbols) = all_helpers(&c, &codec, 3);
        let repaired = codec.repair(3, &helpers, &symbols).unwrap();
        assert!(repaired.iter().all(|v| v.is_zero()));
    }

    #[test]
    fn extended_geometry_uses_shortening() {
        let params = CodeParams::derive(CodeKind::Miser, 6, 2, 5, Some(257)).unwrap();
        let codec = MiserCodec::new(params).unwrap();
        assert_eq!(codec.shortening_depth(), 2);
        assert_eq!(codec.core.params.n, 8);
        assert_eq!(codec.core.params.k, 4);
        let u = pseudo_message(codec.ctx(), codec.params().message_len, 5);
        let c = codec.encode(&u).unwrap();
        assert_eq!(c.rows(), 6);
        for failed in 1..=6usize {
            let (helpers, symbols) = all_helpers(&c, &codec, failed);
            assert_eq!(
                codec.repair(failed, &helpers, &symbols).unwrap(),
                c.row(failed - 1)
            );
        }
        for ids in (1..=6usize).combinations(2) {
            let rows: Vec<Vec<FieldElement>> = ids.iter().map(|&i| c.row(i - 1)).collect();
            assert_eq!(codec.reconstruct(&ids, &rows).unwrap(), u);
        }
    }

    #[test]
    fn construction_report_is_clean() {
        let codec = codec(6, 3, 5, 257);
        let report = codec.verify_construction();
        assert!(report.ok, "{:?}", report.failures);
    }
}
