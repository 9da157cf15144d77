//! Generator-matrix machinery shared by every codec: extraction of the
//! block generator, conversion to systematic form by message remapping, and
//! an equivalence check between codes.
//!
//! The remapping never touches codewords, so repair behaviour is inherited
//! unchanged; only the message-to-codeword bijection moves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codec::{check_node, NodeId, RegeneratingCodec};
use crate::error::CodeError;
use crate::ffield::FieldElement;
use crate::matfq::MatrixFq;
use crate::params::CodeParams;

/// Block generator: `B x (n * alpha)`, column `(i-1) * alpha + j` holding the
/// coefficients of node `i`'s `j`-th stored symbol in the message symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorMatrix {
    matrix: MatrixFq,
    n: usize,
    alpha: usize,
}

impl GeneratorMatrix {
    /// Wraps an explicit `B x (n * alpha)` matrix, e.g. a transformed copy
    /// of an extracted generator.
    pub fn from_parts(matrix: MatrixFq, n: usize, alpha: usize) -> Result<Self, CodeError> {
        if matrix.cols() != n * alpha {
            return Err(CodeError::ShapeMismatch(format!(
                "{} columns cannot split into {n} blocks of {alpha}",
                matrix.cols()
            )));
        }
        Ok(GeneratorMatrix { matrix, n, alpha })
    }

    pub fn matrix(&self) -> &MatrixFq {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn message_len(&self) -> usize {
        self.matrix.rows()
    }

    /// The `B x alpha` block of one node.
    pub fn block(&self, node: NodeId) -> Result<MatrixFq, CodeError> {
        check_node(node, self.n)?;
        let start = (node - 1) * self.alpha;
        Ok(self
            .matrix
            .select_cols(&(start..start + self.alpha).collect::<Vec<_>>())?)
    }
}

/// Reads the generator off a codec by encoding each unit message vector.
pub fn extract_generator(codec: &dyn RegeneratingCodec) -> Result<GeneratorMatrix, CodeError> {
    let params: &CodeParams = codec.params();
    let ctx = crate::ffield::FieldCtx::new(params.q)?;
    let b = params.message_len;
    let mut g = MatrixFq::zeros(ctx, b, params.n * params.alpha);
    for m in 0..b {
        let mut unit = vec![ctx.zero(); b];
        unit[m] = ctx.one();
        let c = codec.encode(&unit)?;
        for i in 0..params.n {
            for j in 0..params.alpha {
                g.set(m, i * params.alpha + j, c.get(i, j))?;
            }
        }
    }
    Ok(GeneratorMatrix {
        matrix: g,
        n: params.n,
        alpha: params.alpha,
    })
}

/// A message remapping that makes the chosen nodes systematic.
#[derive(Debug, Clone)]
pub struct SystematicRemap {
    /// `B x B`: encode feeds `u * forward` to the original code.
    pub forward: MatrixFq,
    /// Its inverse, applied after ordinary reconstruction.
    pub inverse: MatrixFq,
    /// For each message symbol, the `(node, symbol index)` where it is
    /// stored verbatim.
    pub positions: Vec<(NodeId, usize)>,
}

/// Greedy left-to-right scan over the chosen nodes' generator columns,
/// keeping each column that enlarges the span. The kept columns are
/// invertible as a `B x B` matrix by the reconstruction property.
pub fn make_systematic(
    codec: &dyn RegeneratingCodec,
    systematic_ids: &[NodeId],
) -> Result<SystematicRemap, CodeError> {
    let params = codec.params();
    if systematic_ids.len() != params.k {
        return Err(CodeError::BadNodeCount {
            expected: params.k,
            got: systematic_ids.len(),
        });
    }
    let generator = extract_generator(codec)?;
    let b = generator.message_len();
    let ctx = generator.matrix().ctx();

    let mut kept = MatrixFq::zeros(ctx, b, 0);
    let mut positions = Vec::with_capacity(b);
    for &node in systematic_ids {
        let block = generator.block(node)?;
        for j in 0..generator.alpha() {
            if positions.len() == b {
                break;
            }
            let col = block.select_cols(&[j])?;
            let candidate = kept.hstack(&col)?;
            if candidate.rank() > kept.rank() {
                kept = candidate;
                positions.push((node, j));
            }
        }
    }
    if positions.len() < b {
        return Err(CodeError::RankDeficient);
    }
    let inverse = kept;
    let forward = inverse.invert().map_err(|_| CodeError::RankDeficient)?;
    Ok(SystematicRemap {
        forward,
        inverse,
        positions,
    })
}

/// A codec composed with a message remapping.
pub struct RemappedCodec<C> {
    base: C,
    remap: SystematicRemap,
    systematic_ids: Vec<NodeId>,
}

impl<C: RegeneratingCodec> RemappedCodec<C> {
    pub fn new(base: C, systematic_ids: &[NodeId]) -> Result<Self, CodeError> {
        let remap = make_systematic(&base, systematic_ids)?;
        Ok(RemappedCodec {
            base,
            remap,
            systematic_ids: systematic_ids.to_vec(),
        })
    }

    pub fn remap(&self) -> &SystematicRemap {
        &self.remap
    }

    pub fn systematic_ids(&self) -> &[NodeId] {
        &self.systematic_ids
    }

    pub fn base(&self) -> &C {
        &self.base
    }

    fn apply(&self, matrix: &MatrixFq, u: &[FieldElement]) -> Result<Vec<FieldElement>, CodeError> {
        let ctx = matrix.ctx();
        let row = MatrixFq::from_row_vec(ctx, u)?;
        Ok(row.matmul(matrix)?.row(0))
    }
}

impl<C: RegeneratingCodec> RegeneratingCodec for RemappedCodec<C> {
    fn params(&self) -> &CodeParams {
        self.base.params()
    }

    fn encode(&self, message: &[FieldElement]) -> Result<MatrixFq, CodeError> {
        let fed = self.apply(&self.remap.forward, message)?;
        self.base.encode(&fed)
    }

    fn repair_vector(&self, failed: NodeId) -> Result<Vec<FieldElement>, CodeError> {
        self.base.repair_vector(failed)
    }

    fn repair(
        &self,
        failed: NodeId,
        helper_ids: &[NodeId],
        symbols: &[FieldElement],
    ) -> Result<Vec<FieldElement>, CodeError> {
        self.base.repair(failed, helper_ids, symbols)
    }

    fn reconstruct(
        &self,
        node_ids: &[NodeId],
        rows: &[Vec<FieldElement>],
    ) -> Result<Vec<FieldElement>, CodeError> {
        let w = self.base.reconstruct(node_ids, rows)?;
        self.apply(&self.remap.inverse, &w)
    }
}

/// Decides whether two generators describe equivalent codes: identical
/// per-node symbol spaces up to a change of message basis and per-node
/// mixing of stored symbols.
///
/// Per-node mixing alone is settled by comparing reduced column echelon
/// forms. The message-basis freedom needs more: we solve the linear system
/// `X G_i^a = G_i^b Z_i` for all blocks jointly and look for a solution with
/// `X` invertible by sampling the solution space.
pub fn check_equivalence(a: &GeneratorMatrix, b: &GeneratorMatrix) -> Result<bool, CodeError> {
    if a.n() != b.n() || a.alpha() != b.alpha() || a.message_len() != b.message_len() {
        return Err(CodeError::ShapeMismatch(format!(
            "(n, alpha, B) = ({}, {}, {}) vs ({}, {}, {})",
            a.n(),
            a.alpha(),
            a.message_len(),
            b.n(),
            b.alpha(),
            b.message_len()
        )));
    }
    if a.matrix().ctx() != b.matrix().ctx() {
        return Err(CodeError::ShapeMismatch("different fields".into()));
    }
    let (n, alpha, bb) = (a.n(), a.alpha(), a.message_len());
    let ctx = a.matrix().ctx();

    // Necessary condition, and the cheap reject for mutated blocks.
    for node in 1..=n {
        if a.block(node)?.rank() != b.block(node)?.rank() {
            return Ok(false);
        }
    }
    // Fast path: identical message basis.
    if (1..=n).try_fold(true, |acc, node| {
        Ok::<bool, CodeError>(acc && a.block(node)?.rcef() == b.block(node)?.rcef())
    })? {
        return Ok(true);
    }

    // Unknowns: X (B x B) then Z_1..Z_n (alpha x alpha each).
    let unknowns = bb * bb + n * alpha * alpha;
    let mut eqs = MatrixFq::zeros(ctx, n * bb * alpha, unknowns);
    let mut row = 0;
    for node in 1..=n {
        let ga = a.block(node)?;
        let gb = b.block(node)?;
        for r in 0..bb {
            for c in 0..alpha {
                for m in 0..bb {
                    eqs.set(row, r * bb + m, ga.get(m, c))?;
                }
                for t in 0..alpha {
                    let z_off = bb * bb + (node - 1) * alpha * alpha;
                    eqs.set(row, z_off + t * alpha + c, -gb.get(r, t))?;
                }
                row += 1;
            }
        }
    }
    let basis = eqs.null_space();
    if basis.cols() == 0 {
        return Ok(false);
    }
    // If an invertible X exists, almost every sample of the solution space
    // has one; a batch of failures means none exists.
    let mut rng = ChaCha8Rng::seed_from_u64(0x1A11_57A7E);
    for _ in 0..32 {
        let coeffs: Vec<FieldElement> = (0..basis.cols())
            .map(|_| ctx.elem(rng.gen::<u64>()))
            .collect();
        let sample = basis.matmul(&MatrixFq::from_col_vec(ctx, &coeffs)?)?;
        let mut x = MatrixFq::zeros(ctx, bb, bb);
        for r in 0..bb {
            for m in 0..bb {
                x.set(r, m, sample.get(r * bb + m, 0))?;
            }
        }
        if x.rank() == bb {
            return Ok(true);
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mbr::MbrCodec;
    use crate::msr::MsrCodec;
    use crate::params::{CodeKind, CodeParams};
    use itertools::Itertools;

    fn mbr(q: u64) -> MbrCodec {
        MbrCodec::new(CodeParams::derive(CodeKind::Mbr, 6, 3, 4, Some(q)).unwrap()).unwrap()
    }

    fn pseudo_message(ctx: crate::ffield::FieldCtx, len: usize, seed: u64) -> Vec<FieldElement> {
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(3);
        (0..len)
            .map(|_| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ctx.elem(state >> 16)
            })
            .collect()
    }

    fn random_invertible(ctx: crate::ffield::FieldCtx, n: usize, rng: &mut ChaCha8Rng) -> MatrixFq {
        loop {
            let mut m = MatrixFq::zeros(ctx, n, n);
            for i in 0..n {
                for j in 0..n {
                    m.set(i, j, ctx.elem(rng.gen::<u64>())).unwrap();
                }
            }
            if m.rank() == n {
                return m;
            }
        }
    }

    #[test]
    fn generator_blocks_span_the_message_space() {
        let codec = mbr(257);
        let g = extract_generator(&codec).unwrap();
        assert_eq!(g.message_len(), 9);
        for ids in (1..=6usize).combinations(3) {
            let mut joint = g.block(ids[0]).unwrap();
            for &i in &ids[1..] {
                joint = joint.hstack(&g.block(i).unwrap()).unwrap();
            }
            assert_eq!(joint.rank(), 9, "blocks {ids:?}");
        }
    }

    #[test]
    fn generator_agrees_with_encode_linearly() {
        let codec = mbr(257);
        let g = extract_generator(&codec).unwrap();
        let ctx = g.matrix().ctx();
        for seed in 0..5 {
            let u = pseudo_message(ctx, 9, seed);
            let via_g = MatrixFq::from_row_vec(ctx, &u)
                .unwrap()
                .matmul(g.matrix())
                .unwrap();
            let c = codec.encode(&u).unwrap();
            for i in 0..6 {
                for j in 0..4 {
                    assert_eq!(via_g.get(0, i * 4 + j), c.get(i, j));
                }
            }
        }
    }

    #[test]
    fn systematic_blocks_of_a_systematic_codec_contain_unit_columns() {
        let params = CodeParams::derive(CodeKind::Mbr, 6, 3, 4, Some(257)).unwrap();
        let codec = MbrCodec::new_systematic(params).unwrap();
        let remap = make_systematic(&codec, &[1, 2, 3]).unwrap();
        // Already systematic: the remapping is a permutation matrix.
        let ctx = remap.forward.ctx();
        for i in 0..9 {
            let row_ones: Vec<u64> = (0..9).map(|j| remap.forward.get(i, j).value()).collect();
            assert_eq!(row_ones.iter().filter(|&&v| v != 0).count(), 1);
            assert!(row_ones.contains(&1));
        }
        assert_eq!(
            remap.forward.matmul(&remap.inverse).unwrap(),
            MatrixFq::identity(ctx, 9)
        );
    }

    #[test]
    fn remapped_codec_stores_message_at_reported_positions() {
        let codec = mbr(257);
        let remapped = RemappedCodec::new(codec, &[1, 2, 3]).unwrap();
        let ctx = remapped.remap().forward.ctx();
        let u = pseudo_message(ctx, 9, 77);
        let c = remapped.encode(&u).unwrap();
        for (m, &(node, j)) in remapped.remap().positions.iter().enumerate() {
            assert_eq!(c.get(node - 1, j), u[m]);
        }
        // Reconstruction and repair still behave, from arbitrary subsets.
        for ids in (1..=6usize).combinations(3) {
            let rows: Vec<Vec<FieldElement>> = ids.iter().map(|&i| c.row(i - 1)).collect();
            assert_eq!(remapped.reconstruct(&ids, &rows).unwrap(), u);
        }
        for failed in 1..=6usize {
            let helpers: Vec<usize> = (1..=6).filter(|&i| i != failed).take(4).collect();
            let symbols: Vec<FieldElement> = helpers
                .iter()
                .map(|&h| remapped.helper_symbol(h, &c.row(h - 1), failed).unwrap())
                .collect();
            assert_eq!(
                remapped.repair(failed, &helpers, &symbols).unwrap(),
                c.row(failed - 1)
            );
        }
    }

    #[test]
    fn make_systematic_validates_id_count() {
        let codec = mbr(257);
        assert!(matches!(
            make_systematic(&codec, &[1, 2]),
            Err(CodeError::BadNodeCount { .. })
        ));
    }

    #[test]
    fn equivalence_accepts_basis_changes_and_rejects_mutants() {
        let codec = mbr(257);
        let g = extract_generator(&codec).unwrap();
        let ctx = g.matrix().ctx();
        assert!(check_equivalence(&g, &g).unwrap());

        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let x = random_invertible(ctx, 9, &mut rng);
        let mut transformed = x.matmul(g.matrix()).unwrap();
        let mut blocks = Vec::new();
        for node in 1..=6usize {
            let y = random_invertible(ctx, 4, &mut rng);
            let cols: Vec<usize> = ((node - 1) * 4..node * 4).collect();
            blocks.push(transformed.select_cols(&cols).unwrap().matmul(&y).unwrap());
        }
        transformed = blocks
            .iter()
            .skip(1)
            .fold(blocks[0].clone(), |acc, b| acc.hstack(b).unwrap());
        let gb = GeneratorMatrix {
            matrix: transformed,
            n: 6,
            alpha: 4,
        };
        assert!(check_equivalence(&g, &gb).unwrap());

        // Zeroing one block breaks equivalence.
        let mut zeroed = g.matrix().clone();
        for r in 0..9 {
            for c in 8..12 {
                zeroed.set(r, c, ctx.zero()).unwrap();
            }
        }
        let gz = GeneratorMatrix {
            matrix: zeroed,
            n: 6,
            alpha: 4,
        };
        assert!(!check_equivalence(&g, &gz).unwrap());
    }

    #[test]
    fn equivalence_is_an_equivalence_relation_on_sampled_transforms() {
        let msr =
            MsrCodec::new(CodeParams::derive(CodeKind::Msr, 6, 3, 4, Some(257)).unwrap()).unwrap();
        let g = extract_generator(&msr).unwrap();
        let ctx = g.matrix().ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let transform = |src: &GeneratorMatrix, rng: &mut ChaCha8Rng| {
            let x = random_invertible(ctx, src.message_len(), rng);
            let xg = x.matmul(src.matrix()).unwrap();
            let mut blocks = Vec::new();
            for node in 1..=src.n() {
                let cols: Vec<usize> = ((node - 1) * src.alpha()..node * src.alpha()).collect();
                let y = random_invertible(ctx, src.alpha(), rng);
                blocks.push(xg.select_cols(&cols).unwrap().matmul(&y).unwrap());
            }
            let matrix = blocks
                .iter()
                .skip(1)
                .fold(blocks[0].clone(), |acc, b| acc.hstack(b).unwrap());
            GeneratorMatrix::from_parts(matrix, src.n(), src.alpha()).unwrap()
        };
        let t1 = transform(&g, &mut rng);
        let t2 = transform(&t1, &mut rng);
        // Reflexive, symmetric, transitive on the sampled chain.
        assert!(check_equivalence(&g, &g).unwrap());
        assert!(check_equivalence(&g, &t1).unwrap());
        assert!(check_equivalence(&t1, &g).unwrap());
        assert!(check_equivalence(&t1, &t2).unwrap());
        assert!(check_equivalence(&g, &t2).unwrap());
    }

    #[test]
    fn equivalence_rejects_shape_mismatch() {
        let g1 = extract_generator(&mbr(257)).unwrap();
        let msr =
            MsrCodec::new(CodeParams::derive(CodeKind::Msr, 6, 3, 4, Some(257)).unwrap()).unwrap();
        let g2 = extract_generator(&msr).unwrap();
        assert!(matches!(
            check_equivalence(&g1, &g2),
            Err(CodeError::ShapeMismatch(_))
        ));
    }
}
