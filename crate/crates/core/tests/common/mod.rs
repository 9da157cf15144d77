//! Helpers shared by the integration suites: deterministic inputs, an
//! independent matrix-product oracle, and the exhaustive repair /
//! reconstruction sweep.
#![allow(dead_code)] // each test target uses its own subset

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pmrc_core::{FieldCtx, FieldElement, MatrixFq, RegeneratingCodec};

pub fn seeded_message(ctx: FieldCtx, len: usize, seed: u64) -> Vec<FieldElement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| ctx.elem(rng.gen())).collect()
}

pub fn seeded_bytes(len: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.gen()).collect()
}

/// Triple-loop product over raw residues, independent of `MatrixFq::matmul`.
pub fn matmul_oracle(a: &MatrixFq, b: &MatrixFq) -> MatrixFq {
    assert_eq!(a.cols(), b.rows());
    let ctx = a.ctx();
    let q = ctx.modulus() as u128;
    let mut out = MatrixFq::zeros(ctx, a.rows(), b.cols());
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let mut acc: u128 = 0;
            for t in 0..a.cols() {
                acc = (acc + a.get(i, t).value() as u128 * b.get(t, j).value() as u128) % q;
            }
            out.set(i, j, ctx.elem(acc as u64)).unwrap();
        }
    }
    out
}

/// For each of `messages` deterministic random messages: every k-subset
/// reconstruction must return the message exactly, and every
/// (failed node, d-subset of survivors) repair must return the stored row
/// exactly after downloading exactly d symbols.
pub fn exhaustive_suite(codec: &dyn RegeneratingCodec, messages: u64, seed: u64) {
    let params = *codec.params();
    let ctx = FieldCtx::new(params.q).unwrap();
    let (n, k, d) = (params.n, params.k, params.d);
    for m in 0..messages {
        let u = seeded_message(ctx, params.message_len, seed.wrapping_add(m));
        let c = codec.encode(&u).unwrap();
        for ids in (1..=n).combinations(k) {
            let rows: Vec<Vec<FieldElement>> = ids.iter().map(|&i| c.row(i - 1)).collect();
            assert_eq!(
                codec.reconstruct(&ids, &rows).unwrap(),
                u,
                "reconstruction from {ids:?} on [{n},{k},{d}]"
            );
        }
        for failed in 1..=n {
            let survivors: Vec<usize> = (1..=n).filter(|&i| i != failed).collect();
            for helpers in survivors.into_iter().combinations(d) {
                let symbols: Vec<FieldElement> = helpers
                    .iter()
                    .map(|&h| codec.helper_symbol(h, &c.row(h - 1), failed).unwrap())
                    .collect();
                // Repair bandwidth: one symbol per helper, d in total.
                assert_eq!(symbols.len(), d);
                assert_eq!(
                    codec.repair(failed, &helpers, &symbols).unwrap(),
                    c.row(failed - 1),
                    "repair of {failed} from {helpers:?} on [{n},{k},{d}]"
                );
            }
        }
    }
}
