//! Acceptance suite: one test per acceptance criterion, each printing a
//! PASS/FAIL line. All checks are exact; run with `--nocapture` to see the
//! per-criterion lines.

mod common;

use common::{exhaustive_suite, seeded_bytes, seeded_message};
use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pmrc_core::codec::build_codec;
use pmrc_core::matfq::{vandermonde, verify_mbr_psi, verify_msr_psi};
use pmrc_core::mbr::MbrCodec;
use pmrc_core::miser::MiserCodec;
use pmrc_core::msr::MsrCodec;
use pmrc_core::params::default_modulus;
use pmrc_core::sim::{sim_run, PayloadSpec, SimConfig};
use pmrc_core::stripe::{decode_payload, encode_payload, repair_share, Share};
use pmrc_core::systematic::{check_equivalence, extract_generator, GeneratorMatrix, RemappedCodec};
use pmrc_core::{
    cutset_bound, CodeKind, CodeParams, FieldCtx, FieldElement, MatrixFq, RegeneratingCodec,
};

fn criterion<F: FnOnce() + std::panic::UnwindSafe>(number: u32, name: &str, body: F) {
    match std::panic::catch_unwind(body) {
        Ok(()) => println!("criterion {number:02} ({name}): PASS"),
        Err(cause) => {
            println!("criterion {number:02} ({name}): FAIL");
            std::panic::resume_unwind(cause);
        }
    }
}

const MBR_SUITE: [(usize, usize, usize); 4] = [(5, 2, 3), (6, 3, 4), (6, 3, 5), (7, 4, 4)];
const MSR_SUITE: [(usize, usize, usize); 3] = [(6, 3, 4), (7, 3, 5), (8, 3, 6)];
const MISER_SUITE: [(usize, usize, usize); 2] = [(4, 2, 3), (6, 3, 5)];
const MESSAGES: u64 = 50;

#[test]
fn criterion_01_parameter_reproduction() {
    criterion(1, "parameter reproduction", || {
        let mbr = CodeParams::derive(CodeKind::Mbr, 6, 3, 4, None).unwrap();
        assert_eq!(mbr.alpha, 4);
        assert_eq!(mbr.message_len, 9);
        let msr = CodeParams::derive(CodeKind::Msr, 6, 3, 4, None).unwrap();
        assert_eq!(msr.alpha, 2);
        assert_eq!(msr.message_len, 6);
    });
}

#[test]
fn criterion_02_golden_example_reproduction() {
    criterion(2, "golden example reproduction", || {
        let ctx7 = FieldCtx::new(7).unwrap();
        let psi7 = vandermonde(
            ctx7,
            &(1..=6u64).map(|v| ctx7.elem(v)).collect::<Vec<_>>(),
            4,
        )
        .unwrap();
        let expected7: [[u64; 4]; 6] = [
            [1, 1, 1, 1],
            [1, 2, 4, 1],
            [1, 3, 2, 6],
            [1, 4, 2, 1],
            [1, 5, 4, 6],
            [1, 6, 1, 6],
        ];
        for (i, row) in expected7.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(psi7.get(i, j).value(), v, "mbr psi entry ({i},{j})");
            }
        }
        let mbr =
            MbrCodec::new(CodeParams::derive(CodeKind::Mbr, 6, 3, 4, Some(7)).unwrap()).unwrap();
        assert_eq!(mbr.psi(), &psi7);

        let msr =
            MsrCodec::new(CodeParams::derive(CodeKind::Msr, 6, 3, 4, Some(13)).unwrap()).unwrap();
        let ctx13 = msr.ctx();
        let expected13: [[u64; 4]; 6] = [
            [1, 1, 1, 1],
            [1, 2, 4, 8],
            [1, 3, 9, 1],
            [1, 4, 3, 12],
            [1, 5, 12, 8],
            [1, 6, 10, 8],
        ];
        for (i, row) in expected13.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(
                    msr.full_psi().get(i, j).value(),
                    v,
                    "msr psi entry ({i},{j})"
                );
            }
            assert_eq!(msr.full_phi().get(i, 0).value(), 1);
            assert_eq!(msr.full_phi().get(i, 1).value(), (i + 1) as u64);
        }
        let lambda: Vec<u64> = msr.lambdas().iter().map(|l| l.value()).collect();
        assert_eq!(lambda, vec![1, 4, 9, 3, 12, 10]);

        // Repair of node 1 from helpers {2,4,5,6} recovers the displayed
        // intermediates for arbitrary message instantiations.
        for seed in 0..20u64 {
            let u = seeded_message(ctx13, 6, 7000 + seed);
            let c = msr.encode(&u).unwrap();
            let helpers = [2usize, 4, 5, 6];
            let symbols: Vec<FieldElement> = helpers
                .iter()
                .map(|&h| msr.helper_symbol(h, &c.row(h - 1), 1).unwrap())
                .collect();
            let (s1_phi, s2_phi) = msr.repair_intermediates(1, &helpers, &symbols).unwrap();
            assert_eq!(s1_phi, vec![u[0] + u[1], u[1] + u[2]]);
            assert_eq!(s2_phi, vec![u[3] + u[4], u[4] + u[5]]);
        }
    });
}

/// Stripe-level check that repairing one share downloads exactly
/// `d * stripe_count` symbols.
fn assert_repair_download(codec: &dyn RegeneratingCodec, seed: u64) {
    let params = *codec.params();
    let payload = seeded_bytes(4 * 1024, seed);
    let shares = encode_payload(codec, &payload).unwrap();
    let helpers: Vec<&Share> = shares[1..=params.d].iter().collect();
    let (repaired, traffic) = repair_share(codec, 1, &helpers).unwrap();
    assert_eq!(repaired, shares[0]);
    assert_eq!(traffic.symbols, params.d as u64 * shares[0].meta.stripe_count);
    assert_eq!(
        traffic.bytes,
        traffic.symbols * shares[0].meta.symbol_width() as u64
    );
}

#[test]
fn criterion_03_exhaustive_mbr_suite() {
    criterion(3, "exhaustive mbr suite", || {
        for (n, k, d) in MBR_SUITE {
            let codec = build_codec(CodeKind::Mbr, n, k, d, None).unwrap();
            exhaustive_suite(codec.as_ref(), MESSAGES, 0xB0A0 + n as u64);
            assert_repair_download(codec.as_ref(), 0xB0B + n as u64);
        }
    });
}

#[test]
fn criterion_04_exhaustive_msr_suite() {
    criterion(4, "exhaustive msr suite", || {
        for (n, k, d) in MSR_SUITE {
            let codec =
                MsrCodec::new(CodeParams::derive(CodeKind::Msr, n, k, d, None).unwrap()).unwrap();
            exhaustive_suite(&codec, MESSAGES, 0x50A0 + n as u64);
            assert_repair_download(&codec, 0x50B + n as u64);
            let depth = codec.shortening_depth();
            assert_eq!(depth, d + 2 - 2 * k);
            if depth > 0 {
                // Shortened codewords, prepended with zero rows, must be
                // codewords of an independently built parent.
                let parent = MsrCodec::new(
                    CodeParams::derive(CodeKind::Msr, n + depth, k + depth, d + depth, None)
                        .unwrap(),
                )
                .unwrap();
                let ctx = codec.ctx();
                for seed in 0..5u64 {
                    let u = seeded_message(ctx, codec.params().message_len, 0xC0DE + seed);
                    let c = codec.encode(&u).unwrap();
                    let mut full_rows: Vec<Vec<FieldElement>> =
                        vec![vec![ctx.zero(); codec.params().alpha]; depth];
                    for i in 0..n {
                        full_rows.push(c.row(i));
                    }
                    let parent_n = n + depth;
                    let parent_k = k + depth;
                    for ids in (1..=parent_n).combinations(parent_k).step_by(7) {
                        let rows: Vec<Vec<FieldElement>> =
                            ids.iter().map(|&i| full_rows[i - 1].clone()).collect();
                        let w = parent.reconstruct(&ids, &rows).unwrap();
                        let reencoded = parent.encode(&w).unwrap();
                        for (i, row) in full_rows.iter().enumerate() {
                            assert_eq!(&reencoded.row(i), row, "parent row {i} from {ids:?}");
                        }
                    }
                }
            }
        }
    });
}

#[test]
fn criterion_05_miser_suite() {
    criterion(5, "miser suite", || {
        for (n, k, d) in MISER_SUITE {
            let codec = build_codec(CodeKind::Miser, n, k, d, None).unwrap();
            // d = n - 1: repair always uses all survivors.
            exhaustive_suite(codec.as_ref(), MESSAGES, 0x401 + n as u64);
            // The all-parity reconstruction exercises the scalar-splitting
            // branch on the full message square.
            let ctx = FieldCtx::new(codec.params().q).unwrap();
            let u = seeded_message(ctx, codec.params().message_len, 0xFEED);
            let c = codec.encode(&u).unwrap();
            let all_parity: Vec<usize> = (k + 1..=2 * k).collect();
            let rows: Vec<Vec<FieldElement>> = all_parity.iter().map(|&i| c.row(i - 1)).collect();
            assert_eq!(codec.reconstruct(&all_parity, &rows).unwrap(), u);
        }
    });
}

#[test]
fn criterion_06_systematizer() {
    criterion(6, "systematizer", || {
        // Remapped codecs must pass the same exhaustive suites with the
        // chosen nodes storing the message verbatim.
        for (n, k, d) in MBR_SUITE {
            let base =
                MbrCodec::new(CodeParams::derive(CodeKind::Mbr, n, k, d, None).unwrap()).unwrap();
            let ids: Vec<usize> = (1..=k).collect();
            let remapped = RemappedCodec::new(base, &ids).unwrap();
            exhaustive_suite(&remapped, 10, 0x5E5 + n as u64);
            verify_verbatim(&remapped);
        }
        for (n, k, d) in MSR_SUITE {
            let base =
                MsrCodec::new(CodeParams::derive(CodeKind::Msr, n, k, d, None).unwrap()).unwrap();
            let ids: Vec<usize> = (1..=k).collect();
            let remapped = RemappedCodec::new(base, &ids).unwrap();
            exhaustive_suite(&remapped, 10, 0x5E6 + n as u64);
            verify_verbatim(&remapped);
        }

        // Equivalence: 20 accepted transforms, 20 rejected mutants.
        let mbr_gen = extract_generator(
            &MbrCodec::new(CodeParams::derive(CodeKind::Mbr, 6, 3, 4, None).unwrap()).unwrap(),
        )
        .unwrap();
        let msr_gen = extract_generator(
            &MsrCodec::new(CodeParams::derive(CodeKind::Msr, 6, 3, 4, None).unwrap()).unwrap(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0xE0_15E7);
        for trial in 0..20u64 {
            let g = if trial % 2 == 0 { &mbr_gen } else { &msr_gen };
            let transformed = random_transform(g, &mut rng);
            assert!(
                check_equivalence(g, &transformed).unwrap(),
                "transform trial {trial} wrongly rejected"
            );
        }
        for trial in 0..20u64 {
            let g = if trial % 2 == 0 { &mbr_gen } else { &msr_gen };
            let node = 1 + (trial as usize % g.n());
            let mutant = zero_block(g, node);
            assert!(
                !check_equivalence(g, &mutant).unwrap(),
                "mutant trial {trial} wrongly accepted"
            );
        }
    });
}

fn verify_verbatim<C: RegeneratingCodec>(remapped: &RemappedCodec<C>) {
    let params = *remapped.params();
    let ctx = FieldCtx::new(params.q).unwrap();
    let u = seeded_message(ctx, params.message_len, 0xABCD);
    let c = remapped.encode(&u).unwrap();
    for (m, &(node, j)) in remapped.remap().positions.iter().enumerate() {
        assert_eq!(c.get(node - 1, j), u[m], "symbol {m} at node {node}");
    }
}

fn random_matrix_invertible(ctx: FieldCtx, size: usize, rng: &mut ChaCha8Rng) -> MatrixFq {
    loop {
        let mut m = MatrixFq::zeros(ctx, size, size);
        for i in 0..size {
            for j in 0..size {
                m.set(i, j, ctx.elem(rng.gen())).unwrap();
            }
        }
        if m.rank() == size {
            return m;
        }
    }
}

fn random_transform(g: &GeneratorMatrix, rng: &mut ChaCha8Rng) -> GeneratorMatrix {
    let ctx = g.matrix().ctx();
    let x = random_matrix_invertible(ctx, g.message_len(), rng);
    let xg = x.matmul(g.matrix()).unwrap();
    let mut blocks = Vec::new();
    for node in 1..=g.n() {
        let cols: Vec<usize> = ((node - 1) * g.alpha()..node * g.alpha()).collect();
        let y = random_matrix_invertible(ctx, g.alpha(), rng);
        blocks.push(xg.select_cols(&cols).unwrap().matmul(&y).unwrap());
    }
    let matrix = blocks
        .iter()
        .skip(1)
        .fold(blocks[0].clone(), |acc, b| acc.hstack(b).unwrap());
    GeneratorMatrix::from_parts(matrix, g.n(), g.alpha()).unwrap()
}

fn zero_block(g: &GeneratorMatrix, node: usize) -> GeneratorMatrix {
    let ctx = g.matrix().ctx();
    let mut matrix = g.matrix().clone();
    for r in 0..g.message_len() {
        for c in (node - 1) * g.alpha()..node * g.alpha() {
            matrix.set(r, c, ctx.zero()).unwrap();
        }
    }
    GeneratorMatrix::from_parts(matrix, g.n(), g.alpha()).unwrap()
}

#[test]
fn criterion_07_alignment_identity() {
    criterion(7, "interference alignment identity", || {
        let codec =
            MsrCodec::new(CodeParams::derive(CodeKind::Msr, 6, 3, 4, Some(13)).unwrap()).unwrap();
        let params = *codec.params();
        let basis: Vec<usize> = (1..params.k).collect();
        let ctx = codec.ctx();
        let mut pairs = 0;
        for helper in params.k..=params.d {
            for failed in 1..=params.n {
                if failed == helper || basis.contains(&failed) {
                    continue;
                }
                let witness = codec.ia_witness(failed, helper, &basis).unwrap();
                for seed in 0..100u64 {
                    let u = seeded_message(ctx, params.message_len, seed * 31 + failed as u64);
                    assert!(
                        witness.holds_for(&codec, &u).unwrap(),
                        "identity failed for f={failed} l={helper} seed={seed}"
                    );
                }
                pairs += 1;
            }
        }
        assert_eq!(pairs, 6);
    });
}

#[test]
fn criterion_08_cutset_optimality() {
    criterion(8, "flow-bound optimality", || {
        let mut constructed = 0;
        for n in 2..=10usize {
            for k in 1..n {
                for d in k..n {
                    for kind in [CodeKind::Mbr, CodeKind::Msr, CodeKind::Miser] {
                        let Ok(p) = CodeParams::derive(kind, n, k, d, None) else {
                            continue;
                        };
                        assert_eq!(p.message_len, cutset_bound(p.k, p.d, p.alpha, p.beta));
                        assert!(p.message_len > cutset_bound(p.k, p.d, p.alpha - 1, p.beta));
                        assert!(p.message_len > cutset_bound(p.k, p.d, p.alpha, p.beta - 1));
                        constructed += 1;
                    }
                }
            }
        }
        assert!(
            constructed > 100,
            "grid produced only {constructed} parameter sets"
        );
    });
}

#[test]
fn criterion_09_file_round_trip_and_determinism() {
    criterion(9, "file round trip and simulator determinism", || {
        let payload = seeded_bytes(64 * 1024, 0x64B);
        let codec = build_codec(CodeKind::Mbr, 6, 3, 4, None).unwrap();

        // Direct path: fail nodes 1 and 2 in sequence, repair each from
        // surviving shares, then reconstruct using both repaired shares.
        let shares = encode_payload(codec.as_ref(), &payload).unwrap();
        let helpers1: Vec<&Share> = [3usize, 4, 5, 6].iter().map(|&i| &shares[i - 1]).collect();
        let (repaired1, t1) = repair_share(codec.as_ref(), 1, &helpers1).unwrap();
        assert_eq!(repaired1, shares[0]);
        let helpers2: Vec<&Share> = vec![&repaired1, &shares[3], &shares[4], &shares[5]];
        let (repaired2, t2) = repair_share(codec.as_ref(), 2, &helpers2).unwrap();
        assert_eq!(repaired2, shares[1]);
        assert_eq!(t1.symbols, 4 * shares[0].meta.stripe_count);
        assert_eq!(t2.symbols, t1.symbols);
        let picked = vec![&repaired1, &repaired2, &shares[2]];
        assert_eq!(decode_payload(codec.as_ref(), &picked).unwrap(), payload);

        // Simulator path over the same file, twice, comparing report hashes.
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("payload.bin");
        std::fs::write(&file, &payload).unwrap();
        let config = SimConfig {
            kind: CodeKind::Mbr,
            n: 6,
            k: 3,
            d: 4,
            q: None,
            seed: 7,
            payload: PayloadSpec::File(file),
            events: vec![
                pmrc_core::sim::EventSpec::Fail(1),
                pmrc_core::sim::EventSpec::Repair(1, pmrc_core::sim::HelperPolicy::LowestId),
                pmrc_core::sim::EventSpec::Fail(2),
                pmrc_core::sim::EventSpec::Repair(2, pmrc_core::sim::HelperPolicy::Random),
                pmrc_core::sim::EventSpec::Collect(vec![1, 2, 3]),
            ],
            spill: None,
        };
        let a = sim_run(&config).unwrap();
        let b = sim_run(&config).unwrap();
        assert!(!a.any_blocked());
        assert!(a
            .events
            .iter()
            .find(|e| e.label == "collect")
            .unwrap()
            .detail
            .contains("match=true"));
        assert_eq!(a.report_hash(), b.report_hash());
        assert_eq!(a.final_sha256, Some(a.original_sha256.clone()));
    });
}

#[test]
fn criterion_10_field_policy() {
    criterion(10, "field policy and construction verification", || {
        for (n, k, d) in MBR_SUITE {
            let p = CodeParams::derive(CodeKind::Mbr, n, k, d, None).unwrap();
            assert_eq!(p.q, default_modulus(CodeKind::Mbr, n).unwrap());
            assert!(p.q >= 2 * n as u64 && p.q >= 257);
            let codec = MbrCodec::new(p).unwrap();
            assert!(verify_mbr_psi(codec.psi(), k).ok);
        }
        for (n, k, d) in MSR_SUITE {
            let p = CodeParams::derive(CodeKind::Msr, n, k, d, None).unwrap();
            assert!(p.q >= (n * n) as u64 && p.q >= 257);
            let codec = MsrCodec::new(p).unwrap();
            let d_parent = d + codec.shortening_depth();
            assert!(verify_msr_psi(codec.full_phi(), codec.lambdas(), d_parent).ok);
        }
        for (n, k, d) in MISER_SUITE {
            let p = CodeParams::derive(CodeKind::Miser, n, k, d, None).unwrap();
            assert!(p.q >= (n * n) as u64 && p.q >= 257);
            let codec = MiserCodec::new(p).unwrap();
            assert!(codec.verify_construction().ok);
        }
    });
}
