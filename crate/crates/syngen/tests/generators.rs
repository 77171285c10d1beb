use std::collections::HashSet;
use std::path::PathBuf;
use std::sync::OnceLock;

use mmprove_core::database::Database;
use mmprove_core::ProofFormat;
use mmprove_syngen::arith::{prove_task, sample_task, ArithKind, ArithTask};
use mmprove_syngen::ring::DEFAULT_WEIGHTS;
use mmprove_syngen::{build_augmented, gen_arith, gen_ring, gen_test_statements, Category, RingTask, TheoremSampler};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn library() -> &'static Database {
    static DB: OnceLock<Database> = OnceLock::new();
    DB.get_or_init(|| {
        let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/fragment.mm");
        Database::from_file(&path).expect("fragment.mm parses")
    })
}

fn task(kind: ArithKind, lhs: i128, rhs: i128) -> ArithTask {
    ArithTask { kind, ndigits: 2, lhs, rhs }
}

#[test]
fn eleven_times_twenty_two() {
    let db = library();
    let p = prove_task(db, "mul-ex", &task(ArithKind::Mul, 11, 22)).unwrap();
    assert_eq!(db.render_expr(&p.statement), "|- ( ; 1 1 x. ; 2 2 ) = ; ; 2 4 2");
    p.verify(db).unwrap();
}

#[test]
fn zero_plus_zero_is_one_step() {
    let db = library();
    let p = prove_task(db, "add-zero", &task(ArithKind::Add, 0, 0)).unwrap();
    assert_eq!(db.render_expr(&p.statement), "|- ( 0 + 0 ) = 0");
    assert_eq!(p.proofsteps, 1);
    p.verify(db).unwrap();
}

#[test]
fn five_hundred_samples_verify() {
    let db = library();
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let mut checked = 0;
    for kind in [ArithKind::Add, ArithKind::Mul, ArithKind::Div, ArithKind::Mod, ArithKind::Exp] {
        for i in 0..90 {
            let n = [3, 9, 18][i % 3];
            let p = gen_arith(db, &format!("s{i}"), kind, n, &mut rng).unwrap();
            p.verify(db).unwrap_or_else(|e| panic!("{}: {e}", p.goal_text(db)));
            checked += 1;
        }
    }
    for i in 0..60 {
        let p = gen_ring(db, &format!("r{i}"), &RingTask::new(1 + i % 3, i % 7), &mut rng).unwrap();
        p.verify(db).unwrap_or_else(|e| panic!("{}: {e}", p.goal_text(db)));
        checked += 1;
    }
    assert!(checked >= 500);
}

#[test]
fn mean_proof_size_grows_with_digits() {
    let db = library();
    for kind in ArithKind::TABLE {
        let means: Vec<f64> = [3, 9, 18]
            .iter()
            .map(|&n| {
                let mut rng = ChaCha8Rng::seed_from_u64(9);
                let total: usize = (0..150).map(|i| gen_arith(db, &format!("m{i}"), kind, n, &mut rng).unwrap().proofsteps).sum();
                total as f64 / 150.0
            })
            .collect();
        assert!(means[0] < means[1] && means[1] < means[2], "{kind}: {means:?}");
    }
}

#[test]
fn ring_seed_case_is_reflexivity() {
    let db = library();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let p = gen_ring(db, "ring-seed", &RingTask::new(1, 0), &mut rng).unwrap();
    assert_eq!(db.render_expr(&p.statement), "|- ( ph -> A = A )");
    assert_eq!(p.proofsteps, 1);
    assert!(!p.short);
    p.verify(db).unwrap();
}

#[test]
fn ring_walks_reach_their_depth() {
    let db = library();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for i in 0..30 {
        let p = gen_ring(db, &format!("d{i}"), &RingTask::new(2, 6), &mut rng).unwrap();
        assert!(!p.short);
        p.verify(db).unwrap();
    }
    assert!(gen_ring(db, "bad", &RingTask::new(0, 1), &mut rng).is_err());
}

#[test]
fn theorem_sampler_matches_weights() {
    let sampler = TheoremSampler::new(&RingTask::new(2, 6).weights).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draws = 10_000;
    let mut counts = vec![0usize; DEFAULT_WEIGHTS.len()];
    for _ in 0..draws {
        counts[sampler.sample_index(&mut rng)] += 1;
    }
    let probs = sampler.probabilities();
    let stat: f64 = counts
        .iter()
        .zip(&probs)
        .map(|(&c, &p)| {
            let e = p * draws as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    let p = 1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat);
    assert!(p > 0.01, "chi-square {stat:.2}, p = {p:.4}");
}

#[test]
fn identical_seeds_reproduce_identical_output() {
    let db = library();
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut out = String::new();
        for kind in ArithKind::TABLE {
            out += &gen_arith(db, "det", kind, 9, &mut rng).unwrap().to_mm(db, ProofFormat::Compressed).unwrap();
        }
        out + &gen_ring(db, "det", &RingTask::new(3, 6), &mut rng).unwrap().to_mm(db, ProofFormat::Normal).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn augmented_blocks_have_the_listed_sizes() {
    let db = library();
    let aug = build_augmented(db, 1).unwrap();
    assert_eq!(aug.proofs.len(), 400);
    for t in aug.totals() {
        assert_eq!(t.proofs, t.category.count());
        assert!(t.proofsteps > t.proofs);
    }
    let labels: HashSet<&str> = aug.proofs.iter().map(|(_, p)| p.label.as_str()).collect();
    assert_eq!(labels.len(), 400);
    let (merged, share) = aug.merge(db, &[]);
    assert_eq!(merged.len(), aug.records(db).len());
    assert_eq!(share, 1.0);
}

#[test]
fn generated_fragment_appends_to_the_library() {
    let db = library();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let proofs: Vec<_> = (0..4)
        .map(|i| match i {
            0 => gen_ring(db, "frag-ring", &RingTask::new(2, 4), &mut rng).unwrap(),
            _ => gen_arith(db, &format!("frag-{i}"), ArithKind::TABLE[i], 3, &mut rng).unwrap(),
        })
        .collect();
    let text = mmprove_syngen::augmented::mm_fragment(db, &proofs, ProofFormat::Compressed).unwrap();
    let source = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/fragment.mm")).unwrap();
    let extended = Database::parse(&format!("{source}\n{text}")).unwrap();
    let report = mmprove_core::verify::verify_database(&extended, &mmprove_core::verify::VerifyOptions { check_grammar: true, threads: 1 });
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    assert_eq!(report.verified, report.theorems);
}

#[test]
fn test_statements_are_disjoint_from_training_draws() {
    let db = library();
    assert!(gen_test_statements(db, Category::Add, 0, 1).unwrap().is_empty());
    let aug = build_augmented(db, 2).unwrap();
    let train: HashSet<String> = aug.proofs.iter().map(|(_, p)| p.goal_text(db)).collect();
    for c in [Category::Add, Category::Ring2] {
        let tests = gen_test_statements(db, c, 100, 2).unwrap();
        assert_eq!(tests.len(), 100);
        for t in &tests {
            assert!(!train.contains(&t.goal_text(db)));
            t.verify(db).unwrap();
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sums_and_products_verify(a in -10i128.pow(12)..10i128.pow(12), b in -10i128.pow(12)..10i128.pow(12)) {
        let db = library();
        for kind in [ArithKind::Add, ArithKind::Mul] {
            let t = task(kind, a, b);
            let p = prove_task(db, "prop", &t).unwrap();
            prop_assert_eq!(db.render_expr(&p.statement), t.statement());
            prop_assert!(p.verify(db).is_ok());
        }
    }

    #[test]
    fn quotients_and_remainders_verify(q in -10i128.pow(8)..10i128.pow(8), d in 1i128..10i128.pow(8), neg in any::<bool>()) {
        prop_assume!(q != 0);
        let db = library();
        let d = if neg { -d } else { d };
        let div = prove_task(db, "prop-div", &task(ArithKind::Div, q * d, d)).unwrap();
        prop_assert!(div.verify(db).is_ok());
        let m = prove_task(db, "prop-mod", &task(ArithKind::Mod, q, d.abs())).unwrap();
        prop_assert!(m.verify(db).is_ok());
    }

    #[test]
    fn sampled_tasks_stay_in_range(seed in any::<u64>(), n in 1u32..=18) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = 10i128.pow(n);
        for kind in ArithKind::TABLE {
            let t = sample_task(kind, n, &mut rng);
            prop_assert!(t.lhs.abs() <= b && t.rhs.abs() <= b, "{:?}", t);
            match kind {
                ArithKind::Div => prop_assert!(t.rhs != 0 && t.lhs % t.rhs == 0),
                ArithKind::Mod => prop_assert!(t.rhs > 0),
                ArithKind::Exp => prop_assert!(t.lhs >= 0 && t.rhs <= 3 && t.result() < b.max(2)),
                _ => {}
            }
        }
    }
}
