//! Property tests for the matrix layer and symbol packing.

mod common;

use common::matmul_oracle;
use pmrc_core::matfq::{cauchy, vandermonde};
use pmrc_core::mbr::MbrMessageMatrix;
use pmrc_core::msr::MsrMessageMatrix;
use pmrc_core::{FieldCtx, FieldElement, MatrixFq};
use proptest::prelude::*;

const MODULI: [u64; 3] = [7, 13, 257];

fn matrix_strategy(rows: usize, cols: usize) -> impl Strategy<Value = (u64, Vec<Vec<u64>>)> {
    (
        0..MODULI.len(),
        proptest::collection::vec(proptest::collection::vec(any::<u64>(), cols), rows),
    )
        .prop_map(|(qi, vals)| (MODULI[qi], vals))
}

fn build(ctx: FieldCtx, vals: &[Vec<u64>]) -> MatrixFq {
    let rows: Vec<&[u64]> = vals.iter().map(|r| r.as_slice()).collect();
    MatrixFq::from_rows(ctx, &rows).unwrap()
}

proptest! {
    #[test]
    fn matmul_is_associative_and_matches_oracle(
        (q, a_vals) in matrix_strategy(3, 4),
        b_vals in proptest::collection::vec(proptest::collection::vec(any::<u64>(), 2), 4),
        c_vals in proptest::collection::vec(proptest::collection::vec(any::<u64>(), 3), 2),
    ) {
        let ctx = FieldCtx::new(q).unwrap();
        let a = build(ctx, &a_vals);
        let b = build(ctx, &b_vals);
        let c = build(ctx, &c_vals);
        let ab_c = a.matmul(&b).unwrap().matmul(&c).unwrap();
        let a_bc = a.matmul(&b.matmul(&c).unwrap()).unwrap();
        prop_assert_eq!(&ab_c, &a_bc);
        prop_assert_eq!(&ab_c, &matmul_oracle(&a, &b.matmul(&c).unwrap()));
        // (AB)^t = B^t A^t
        let ab = a.matmul(&b).unwrap();
        prop_assert_eq!(
            ab.transpose(),
            b.transpose().matmul(&a.transpose()).unwrap()
        );
    }

    #[test]
    fn inversion_round_trips_or_rank_is_deficient((q, vals) in matrix_strategy(4, 4)) {
        let ctx = FieldCtx::new(q).unwrap();
        let m = build(ctx, &vals);
        match m.invert() {
            Ok(inv) => {
                prop_assert_eq!(m.rank(), 4);
                prop_assert_eq!(m.matmul(&inv).unwrap(), MatrixFq::identity(ctx, 4));
                prop_assert_eq!(inv.matmul(&m).unwrap(), MatrixFq::identity(ctx, 4));
            }
            Err(_) => prop_assert!(m.rank() < 4),
        }
    }

    #[test]
    fn vandermonde_rows_have_full_rank(point_count in 1usize..=6, width in 1usize..=6) {
        let ctx = FieldCtx::new(257).unwrap();
        let points: Vec<FieldElement> = (1..=point_count as u64).map(|v| ctx.elem(v)).collect();
        let m = vandermonde(ctx, &points, width).unwrap();
        prop_assert_eq!(m.rank(), point_count.min(width));
    }

    #[test]
    fn cauchy_square_submatrices_are_invertible(
        rsel in proptest::sample::subsequence(vec![0usize, 1, 2, 3], 1..=4),
        csel in proptest::sample::subsequence(vec![0usize, 1, 2, 3], 1..=4),
    ) {
        let ctx = FieldCtx::new(257).unwrap();
        let xs: Vec<FieldElement> = (1..=4u64).map(|v| ctx.elem(v)).collect();
        let ys: Vec<FieldElement> = (5..=8u64).map(|v| ctx.elem(v)).collect();
        let m = cauchy(ctx, &xs, &ys).unwrap();
        let size = rsel.len().min(csel.len());
        let sub = m.submatrix(&rsel[..size], &csel[..size]).unwrap();
        prop_assert!(sub.invert().is_ok());
    }

    #[test]
    fn message_packing_round_trips(
        vals in proptest::collection::vec(any::<u64>(), 9),
        k in 1usize..=3,
    ) {
        let ctx = FieldCtx::new(257).unwrap();
        // Bandwidth-optimal layout for (k, d) with B = kd - C(k,2) = 9.
        let d = (9 + k * (k - 1) / 2) / k;
        if k * d - k * (k - 1) / 2 == 9 {
            let u: Vec<FieldElement> = vals.iter().map(|&v| ctx.elem(v)).collect();
            let m = MbrMessageMatrix::pack(ctx, k, d, &u).unwrap();
            prop_assert_eq!(m.matrix().transpose(), m.matrix().clone());
            prop_assert_eq!(m.unpack(), u);
        }
    }

    #[test]
    fn storage_optimal_packing_round_trips(
        vals in proptest::collection::vec(any::<u64>(), 12),
        alpha in 1usize..=3,
    ) {
        let ctx = FieldCtx::new(257).unwrap();
        let b = alpha * (alpha + 1);
        let u: Vec<FieldElement> = vals[..b].iter().map(|&v| ctx.elem(v)).collect();
        let m = MsrMessageMatrix::pack(ctx, alpha, &u).unwrap();
        prop_assert_eq!(m.s1().transpose(), m.s1().clone());
        prop_assert_eq!(m.s2().transpose(), m.s2().clone());
        prop_assert_eq!(m.unpack(), u);
    }
}
