use std::path::PathBuf;
use std::sync::OnceLock;

use mmprove_core::database::{Database, ProofSource};
use mmprove_core::fixture::{build_tree, parse_fixture};
use mmprove_core::proof::{proof_text, ProofFormat, ProofTree};
use mmprove_core::proofdata::{check_replay, extract_proof_steps, proofstep_count, tree_records};
use mmprove_core::term::{apply_substitution, parse_term, substitute_tokens, Substitution};
use mmprove_core::verify::{replay, resolve_proof, verify_database, ProofContext, VerifyOptions};
use mmprove_core::Expr;
use proptest::prelude::*;

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn library() -> &'static Database {
    static DB: OnceLock<Database> = OnceLock::new();
    DB.get_or_init(|| Database::from_file(&data_dir().join("fragment.mm")).expect("fragment.mm parses"))
}

fn fixture_labels() -> Vec<String> {
    let mut out: Vec<String> = std::fs::read_dir(data_dir().join("fixtures"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .map(|p| p.file_stem().unwrap().to_string_lossy().into_owned())
        .collect();
    out.sort();
    out
}

fn tree_of(db: &Database, label: &str) -> (ProofContext, ProofTree) {
    let a = db.assertion_by_label(label).unwrap();
    let r = mmprove_core::verify_proof(db, a).unwrap();
    let ctx = ProofContext::for_assertion(db, a);
    let tree = ProofTree::from_replay(db, &ctx, &r);
    (ctx, tree)
}

fn accepts(db: &Database, ctx: &ProofContext, text: &str) -> Option<ProofTree> {
    let source = ProofSource::from_text(text).ok()?;
    let steps = resolve_proof(db, ctx, &source).ok()?;
    let r = replay(db, ctx, &steps).ok()?;
    Some(ProofTree::from_replay(db, ctx, &r))
}

#[test]
fn library_verifies_with_unambiguous_grammar() {
    let db = library();
    let report = verify_database(db, &VerifyOptions { check_grammar: true, threads: 2 });
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    assert_eq!(report.verified, report.theorems);
    assert!(report.theorems >= 28);
}

#[test]
fn fixtures_rebuild_the_stored_proofs() {
    let db = library();
    for label in fixture_labels() {
        let a = db.assertion_by_label(&label).unwrap_or_else(|| panic!("{label} missing"));
        let ctx = ProofContext::for_assertion(db, a);
        let text = std::fs::read_to_string(data_dir().join("fixtures").join(format!("{label}.txt"))).unwrap();
        let tree = build_tree(db, &ctx, &parse_fixture(&text).unwrap()).unwrap();
        let (_, stored) = tree_of(db, &label);
        assert_eq!(tree.step_count(), stored.step_count(), "{label}");
        let hyps: Vec<Expr> = db.essential_hyps(a).map(|h| h.expr.clone()).collect();
        let mut a_recs = tree_records(db, &label, &hyps, &tree);
        let mut b_recs = tree_records(db, &label, &hyps, &stored);
        a_recs.sort_by(|x, y| x.proof_step_hash.cmp(&y.proof_step_hash));
        b_recs.sort_by(|x, y| x.proof_step_hash.cmp(&y.proof_step_hash));
        assert_eq!(a_recs, b_recs, "{label}");
    }
}

#[test]
fn worked_examples_have_the_listed_sizes() {
    let db = library();
    for (label, steps) in [("nn0onn0ex", 22), ("uznn0sub", 12), ("pm4.78", 13)] {
        let (_, tree) = tree_of(db, label);
        assert_eq!(tree.step_count(), steps, "{label}");
    }
}

#[test]
fn every_proof_exports_in_both_formats() {
    let db = library();
    for a in db.theorems() {
        let (ctx, tree) = tree_of(db, &a.label);
        for format in [ProofFormat::Normal, ProofFormat::Compressed] {
            let text = proof_text(db, &ctx, &tree, format).unwrap();
            let back = accepts(db, &ctx, &text).unwrap_or_else(|| panic!("{} {format:?} rejected", a.label));
            assert_eq!(back.step_count(), tree.step_count());
        }
    }
}

#[test]
fn extracted_records_replay() {
    let db = library();
    let (records, errors) = extract_proof_steps(db, 2);
    assert!(errors.is_empty(), "{errors:?}");
    assert!(proofstep_count(&records) > 100);
    for r in &records {
        assert_eq!(r.proof_step_hash.len(), 12);
        assert!(r.parent_hash.len() <= 1);
    }
    let all: Vec<usize> = (0..records.len()).collect();
    assert_eq!(check_replay(db, &records, &all).unwrap(), records.len());
    let roots = records.iter().filter(|r| r.parent_hash.is_empty()).count();
    assert_eq!(roots, db.theorems().filter(|a| db.is_logical(a)).count());
}

fn class_text() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("A".to_string()),
        Just("B".to_string()),
        Just("C".to_string()),
        (0u8..10).prop_map(|d| d.to_string()),
        Just("NN0".to_string()),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), prop_oneof![Just("+"), Just("x."), Just("-"), Just("/"), Just("u.")], inner.clone())
                .prop_map(|(a, op, b)| format!("( {a} {op} {b} )")),
            inner.clone().prop_map(|a| format!("-u {a}")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("; {a} {b}")),
            inner.clone().prop_map(|a| format!("dom {a}")),
            inner.prop_map(|a| format!("( ZZ>= ` {a} )")),
        ]
    })
}

fn wff_text() -> impl Strategy<Value = String> {
    let atom = prop_oneof![
        Just("ph".to_string()),
        Just("ps".to_string()),
        (class_text(), class_text()).prop_map(|(a, b)| format!("{a} = {b}")),
        (class_text(), class_text()).prop_map(|(a, b)| format!("{a} e. {b}")),
        (class_text(), class_text()).prop_map(|(a, b)| format!("{a} <_ {b}")),
    ];
    atom.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("( {a} -> {b} )")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("( {a} /\\ {b} )")),
            inner.clone().prop_map(|a| format!("-. {a}")),
            (class_text(), inner).prop_map(|(a, p)| format!("E. x e. {a} {p}")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn render_parse_roundtrip(text in wff_text()) {
        let db = library();
        let toks = db.symbols_of(&text).unwrap();
        let wff = db.sym("wff").unwrap();
        let term = parse_term(db, wff, &toks).unwrap();
        prop_assert_eq!(term.render(db), text);
    }

    #[test]
    fn token_and_tree_substitution_agree(text in wff_text(), a in class_text(), b in class_text(), ph in wff_text()) {
        let db = library();
        let wff = db.sym("wff").unwrap();
        let class = db.sym("class").unwrap();
        let term = parse_term(db, wff, &db.symbols_of(&text).unwrap()).unwrap();
        let images = [
            (db.sym("A").unwrap(), db.symbols_of(&a).unwrap(), class),
            (db.sym("B").unwrap(), db.symbols_of(&b).unwrap(), class),
            (db.sym("ph").unwrap(), db.symbols_of(&ph).unwrap(), wff),
        ];
        let mut subst = Substitution::new();
        for (v, toks, tc) in &images {
            subst.insert(*v, parse_term(db, *tc, toks).unwrap());
        }
        let by_tree = apply_substitution(db, &term, &subst).unwrap().tokens(db);
        let by_tokens = substitute_tokens(&term.tokens(db), |s| {
            images.iter().find(|(v, _, _)| *v == s).map(|(_, t, _)| t.as_slice())
        });
        prop_assert_eq!(by_tree, by_tokens);
    }

    #[test]
    fn mutated_proofs_are_never_falsely_accepted(pick in any::<prop::sample::Index>(), kind in 0u8..4, i in any::<prop::sample::Index>(), j in any::<prop::sample::Index>()) {
        let db = library();
        let theorems: Vec<String> = db.theorems().map(|a| a.label.clone()).collect();
        let label = pick.get(&theorems).clone();
        let (ctx, tree) = tree_of(db, &label);
        let text = proof_text(db, &ctx, &tree, ProofFormat::Normal).unwrap();
        let mut toks: Vec<String> = text.split_whitespace().map(str::to_string).collect();
        let n = toks.len();
        let (x, y) = (i.index(n), j.index(n));
        let pool: Vec<String> = db.assertions()[..ctx.ceiling].iter().map(|a| a.label.clone()).chain(ctx.hyp_labels.clone()).collect();
        match kind {
            0 => toks[x] = j.get(&pool).clone(),
            1 => { toks.remove(x); }
            2 => toks.swap(x, y),
            _ => { let t = toks[x].clone(); toks.insert(y, t); }
        }
        let mutated = toks.join(" ");
        if let Some(found) = accepts(db, &ctx, &mutated) {
            let a = db.assertion_by_label(&label).unwrap();
            let hyps: Vec<Expr> = db.essential_hyps(a).map(|h| h.expr.clone()).collect();
            match &found {
                ProofTree::Step(s) => prop_assert_eq!(&s.expr, &ctx.conclusion),
                ProofTree::Hyp(k) => prop_assert_eq!(&hyps[*k], &ctx.conclusion),
            }
            let recs = tree_records(db, &label, &hyps, &found);
            let all: Vec<usize> = (0..recs.len()).collect();
            prop_assert!(check_replay(db, &recs, &all).is_ok(), "accepted an unsound proof: {}", mutated);
        }
    }
}
