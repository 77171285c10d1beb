use std::collections::HashSet;
use std::path::PathBuf;
use std::sync::OnceLock;

use mmprove_core::database::Database;
use mmprove_core::proofdata::{extract_proof_steps, ProofStepRecord};
use mmprove_core::tactic::{apply_tactic, parse_tactic};
use mmprove_core::Goal;
use mmprove_prover::policy::BaselineConfig;
use mmprove_prover::{run_search, Problem, SearchParams, UnificationBaseline, UsageStats};

fn library() -> &'static Database {
    static DB: OnceLock<Database> = OnceLock::new();
    DB.get_or_init(|| {
        let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/fragment.mm");
        Database::from_file(&path).expect("fragment.mm parses")
    })
}

fn records() -> &'static [ProofStepRecord] {
    static RECORDS: OnceLock<Vec<ProofStepRecord>> = OnceLock::new();
    RECORDS.get_or_init(|| extract_proof_steps(library(), 1).0)
}

fn baseline() -> UnificationBaseline<'static> {
    let db = library();
    UnificationBaseline::new(db, &UsageStats::from_records(db, records().iter()), BaselineConfig::default())
}

fn ceiling(label: &str) -> Option<usize> {
    library().assertion_by_label(label).map(|a| a.index)
}

#[test]
fn closing_theorem_and_symmetry_are_offered() {
    let db = library();
    let goal = Goal::parse(db, "[[ ]] |- ( 4 + 1 ) = 5").unwrap();
    let texts: Vec<String> = baseline().candidates(&goal, None).into_iter().map(|c| c.text).collect();
    assert!(texts.iter().any(|t| t == "[[ ]] |- ( 4 + 1 ) = 5"), "{texts:?}");
    assert!(texts.iter().any(|t| t.starts_with("[[ |- A = B ]] |- B = A {{")), "{texts:?}");
}

#[test]
fn transitivity_is_offered_for_an_equation() {
    let db = library();
    let goal = Goal::parse(db, "[[ ]] |- ( 3 + 2 ) = 5").unwrap();
    let cands = baseline().candidates(&goal, ceiling("3p2e5"));
    assert!(cands.iter().any(|c| c.text.starts_with("[[ |- A = B |- B = C ]] |- A = C")));
    let total: f64 = cands.iter().map(|c| c.logprob.exp()).sum();
    assert!((total - 1.0).abs() < 1e-9);
    assert!(cands.windows(2).all(|w| w[0].logprob >= w[1].logprob));
}

#[test]
fn every_candidate_applies() {
    let db = library();
    let b = baseline();
    let goals: HashSet<&str> = records().iter().map(|r| r.goal.as_str()).collect();
    let mut checked = 0;
    for text in goals.into_iter().take(200) {
        let goal = Goal::parse(db, text).unwrap();
        for c in b.candidates(&goal, None) {
            let t = parse_tactic(db, &c.text, None).unwrap();
            apply_tactic(db, &goal, &t).unwrap();
            checked += 1;
        }
    }
    assert!(checked > 100);
}

#[test]
fn fully_determined_recorded_steps_are_found() {
    let db = library();
    let b = baseline();
    let mut forced = 0;
    for r in records() {
        let root = db.assertion_by_label(&r.proof_label).unwrap();
        let mut goal = Goal::parse(db, &r.goal).unwrap();
        goal.dv = Goal::of_assertion(db, root).dv;
        let limit = Some(root.index);
        let t = parse_tactic(db, &r.proof_step, limit).unwrap();
        let a = db.assertion(t.assertion);
        let bound: HashSet<_> = a.expr.body.iter().copied().filter(|s| db.is_variable(*s)).collect();
        if !db.mandatory_vars(a).iter().all(|(v, _)| bound.contains(v)) {
            continue;
        }
        forced += 1;
        let texts: Vec<String> = b.candidates(&goal, limit).into_iter().map(|c| c.text).collect();
        assert!(texts.contains(&r.proof_step), "{} missing for {}", r.proof_step, r.goal);
    }
    assert!(forced > 50, "{forced} of {}", records().len());
}

#[test]
fn baseline_closes_a_one_step_statement() {
    let db = library();
    let problem = Problem::from_text(db, "sym", "[[ ]] |- 5 = ( 4 + 1 )").unwrap();
    let r = run_search(db, &problem, &baseline(), None, &SearchParams::default(), 0).unwrap();
    assert!(r.proved);
}

