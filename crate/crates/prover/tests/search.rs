use std::collections::HashSet;
use std::path::PathBuf;
use std::sync::OnceLock;

use mmprove_core::database::Database;
use mmprove_core::proof::{proof_text, splice_proof};
use mmprove_core::proofdata::{extract_proof_steps, extract_theorem, ProofStepRecord};
use mmprove_core::tactic::{apply_tactic, parse_tactic};
use mmprove_core::{verify_database, Goal, ProofFormat};
use mmprove_prover::policy::{BaselineConfig, PolicyError, SuggestRequest};
use mmprove_prover::search::SearchTree;
use mmprove_prover::{
    run_attempts, run_search, NeutralScorer, NoisySuggester, PerfectOutcomeOracle, PriorityMode, Problem, ReplayOracle, ScoredTactic,
    SearchParams, Suggester, UnificationBaseline, UsageStats,
};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn source_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/fragment.mm")
}

fn library() -> &'static Database {
    static DB: OnceLock<Database> = OnceLock::new();
    DB.get_or_init(|| Database::from_file(&source_path()).expect("fragment.mm parses"))
}

fn records() -> &'static [ProofStepRecord] {
    static RECORDS: OnceLock<Vec<ProofStepRecord>> = OnceLock::new();
    RECORDS.get_or_init(|| {
        let (records, errors) = extract_proof_steps(library(), 1);
        assert!(errors.is_empty(), "{errors:?}");
        records
    })
}

fn theorem(label: &str) -> Problem {
    let db = library();
    Problem::from_assertion(db.assertion_by_label(label).expect("label exists"), db)
}

fn params(max_expansions: usize) -> SearchParams {
    SearchParams {
        attempts: 1,
        samples: 8,
        max_expansions,
        ..SearchParams::default()
    }
}

const EQTR4I_STEP: &str = "[[ |- A = B |- C = B ]] |- A = C {{ A : ( 3 + 2 ) }} {{ B : ( 4 + 1 ) }} {{ C : 5 }}";

/// Returns a fixed list of tactics for every goal.
struct Fixed(Vec<ScoredTactic>);

impl Suggester for Fixed {
    fn suggest(&self, _req: &SuggestRequest<'_>, _rng: &mut dyn RngCore) -> Result<Vec<ScoredTactic>, PolicyError> {
        Ok(self.0.clone())
    }
}

/// Returns `count` distinct unparsable strings.
struct Garbage;

impl Suggester for Garbage {
    fn suggest(&self, req: &SuggestRequest<'_>, rng: &mut dyn RngCore) -> Result<Vec<ScoredTactic>, PolicyError> {
        Ok((0..req.count).map(|i| ScoredTactic::new(format!("}} junk {i} {}", rng.next_u32()), -1.0)).collect())
    }
}

#[test]
fn worked_step_yields_two_subgoals_with_equal_priority() {
    let db = library();
    let goal = Goal::parse(db, "[[ ]] |- ( 3 + 2 ) = 5").unwrap();
    let t = parse_tactic(db, EQTR4I_STEP, None).unwrap();
    let children: Vec<String> = apply_tactic(db, &goal, &t).unwrap().iter().map(|e| db.render_expr(e)).collect();
    assert_eq!(children, ["|- ( 3 + 2 ) = ( 4 + 1 )", "|- 5 = ( 4 + 1 )"]);

    let problem = Problem::from_goal("worked", goal.clone());
    let mut tree = SearchTree::new(db, &goal, PriorityMode::Logprob);
    let root = tree.pop().unwrap();
    let suggester = Fixed(vec![ScoredTactic::new(EQTR4I_STEP, -0.5)]);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut stats = Default::default();
    tree.expand(db, root, &suggester, None, &params(8), &problem, 0, &mut rng, &mut stats).unwrap();
    let kids = &tree.tactics[tree.goals[root].tactics[0]].children;
    assert_eq!(kids.len(), 2);
    assert_eq!(tree.goals[kids[0]].text, "[[ ]] |- ( 3 + 2 ) = ( 4 + 1 )");
    assert_eq!(tree.priority(kids[0]), tree.priority(kids[1]));
    assert_eq!(tree.priority(kids[0]), 0.5);
}

#[test]
fn definition_closes_its_instance_without_subgoals() {
    let db = library();
    let goal = Goal::parse(db, "[[ ]] |- 5 = ( 4 + 1 )").unwrap();
    let t = parse_tactic(db, "[[ ]] |- 5 = ( 4 + 1 )", None).unwrap();
    assert!(apply_tactic(db, &goal, &t).unwrap().is_empty());
    let problem = Problem::from_goal("df5", goal);
    let suggester = Fixed(vec![ScoredTactic::new("[[ ]] |- 5 = ( 4 + 1 )", 0.0)]);
    let r = run_search(db, &problem, &suggester, None, &params(4), 1).unwrap();
    assert!(r.proved);
    assert_eq!(r.expansions, 1);
}

#[test]
fn duplicate_suggestions_are_counted_once() {
    let db = library();
    let problem = Problem::from_text(db, "dup", "[[ ]] |- 5 = ( 4 + 1 )").unwrap();
    let junk = ScoredTactic::new("junk", -0.1);
    let t = ScoredTactic::new("[[ ]] |- 5 = ( 4 + 1 )", -0.1);
    let suggester = Fixed(vec![junk.clone(), junk.clone(), junk, t]);
    let r = run_search(db, &problem, &suggester, None, &params(4), 1).unwrap();
    assert!(r.proved);
    assert_eq!(r.stats.sampled, 4);
    assert_eq!(r.stats.duplicates, 2);
    assert_eq!(r.stats.invalid_total(), 1);
    assert_eq!(r.stats.valid, 1);
}

#[test]
fn goal_equal_to_a_hypothesis_needs_no_expansion() {
    let db = library();
    let problem = Problem::from_text(db, "hyp", "[[ |- A = B ]] |- A = B").unwrap();
    let r = run_search(db, &problem, &Garbage, None, &params(4), 1).unwrap();
    assert!(r.proved);
    assert_eq!(r.expansions, 0);
}

#[test]
fn replaying_a_recorded_proof_expands_each_distinct_goal_once() {
    let db = library();
    let a = db.assertion_by_label("3p2e5").unwrap();
    let recorded = extract_theorem(db, a).unwrap();
    let distinct: HashSet<&str> = recorded.iter().map(|r| r.goal.as_str()).collect();
    let oracle = ReplayOracle::new(recorded.iter());
    let r = run_search(db, &theorem("3p2e5"), &oracle, None, &params(64), 3).unwrap();
    assert!(r.proved);
    assert_eq!(r.expansions, distinct.len());
    assert_eq!(r.stats.invalid_total(), 0);
}

#[test]
fn garbage_policy_fails_within_the_invalid_bound() {
    let db = library();
    let p = SearchParams {
        attempts: 3,
        samples: 5,
        max_expansions: 7,
        ..SearchParams::default()
    };
    let attempts = run_attempts(db, &theorem("3p2e5"), &Garbage, None, &p).unwrap();
    assert!(!attempts.proved());
    assert_eq!(attempts.runs.len(), 3);
    let invalid: usize = attempts.runs.iter().map(|r| r.stats.invalid_total()).sum();
    assert!(invalid > 0);
    assert!(invalid <= p.attempts * p.samples * p.max_expansions);
    for r in &attempts.runs {
        assert_eq!(r.stats.invalid.get("parse").copied().unwrap_or(0), r.stats.invalid_total());
    }
}

#[test]
fn replay_oracle_proves_every_library_theorem_and_exports_verify() {
    let db = library();
    let oracle = ReplayOracle::new(records().iter());
    let source = std::fs::read_to_string(source_path()).unwrap();
    let mut spliced = source.clone();
    let theorems: Vec<_> = db.theorems().collect();
    assert!(!theorems.is_empty());
    for a in theorems {
        let problem = Problem::from_assertion(a, db);
        let r = run_search(db, &problem, &oracle, None, &params(10_000), 5).unwrap();
        assert!(r.proved, "{} not proved", a.label);
        let proof = r.proof.unwrap();
        let ctx = problem.context(db).unwrap();
        let text = proof_text(db, &ctx, &proof, ProofFormat::Compressed).unwrap();
        spliced = splice_proof(&spliced, &a.label, &text).unwrap();
    }
    assert_ne!(spliced, source);
    let rebuilt = Database::parse(&spliced).unwrap();
    let report = verify_database(&rebuilt, &Default::default());
    assert!(report.failures.is_empty(), "{:?}", report.failures);
}

#[test]
fn replayed_root_gets_its_recorded_step() {
    let db = library();
    let oracle = ReplayOracle::new(records().iter());
    let problem = theorem("unidmrn");
    let root_text = problem.goal.text(db);
    let recorded = records().iter().find(|r| r.proof_label == "unidmrn" && r.goal == root_text).unwrap();
    let p = SearchParams {
        transcript: true,
        ..params(10_000)
    };
    let r = run_search(db, &problem, &oracle, None, &p, 11).unwrap();
    assert!(r.proved);
    assert_eq!(r.transcript[0].goal, root_text);
    assert_eq!(r.transcript[0].tactics[0].text, recorded.proof_step);
}

#[test]
fn value_guidance_expands_only_goals_on_the_proof() {
    let db = library();
    let problem = theorem("3p2e5");
    let recorded = extract_theorem(db, db.assertion_by_label("3p2e5").unwrap()).unwrap();
    let distinct: HashSet<&str> = recorded.iter().map(|r| r.goal.as_str()).collect();
    let usage = UsageStats::from_records(db, records().iter());
    let noisy = NoisySuggester {
        oracle: ReplayOracle::new(recorded.iter()),
        decoys: UnificationBaseline::new(db, &usage, BaselineConfig::default()),
        decoy_count: 6,
        noise: 4.0,
    };
    let oracle = PerfectOutcomeOracle::new(recorded.iter());
    let value = SearchParams {
        priority: PriorityMode::Value,
        ..params(256)
    };
    let v = run_search(db, &problem, &noisy, Some(&oracle), &value, 21).unwrap();
    assert!(v.proved);
    assert_eq!(v.expansions, distinct.len());
    let l = run_search(db, &problem, &noisy, None, &params(256), 21).unwrap();
    assert!(!l.proved || l.expansions >= v.expansions);
}

#[test]
fn value_mode_without_scorer_is_rejected() {
    let db = library();
    let value = SearchParams {
        priority: PriorityMode::Value,
        ..params(4)
    };
    assert!(run_search(db, &theorem("3p2e5"), &Garbage, None, &value, 0).is_err());
    assert!(run_search(db, &theorem("3p2e5"), &Garbage, Some(&NeutralScorer), &value, 0).is_ok());
}

#[test]
fn identical_seeds_give_identical_searches() {
    let db = library();
    let usage = UsageStats::from_records(db, records().iter());
    let baseline = UnificationBaseline::new(db, &usage, BaselineConfig::default());
    let p = SearchParams {
        transcript: true,
        ..params(16)
    };
    let a = run_search(db, &theorem("3p2e5"), &baseline, None, &p, 9).unwrap();
    let b = run_search(db, &theorem("3p2e5"), &baseline, None, &p, 9).unwrap();
    assert_eq!(serde_json::to_string(&a.transcript).unwrap(), serde_json::to_string(&b.transcript).unwrap());
    assert_eq!(a.expansions, b.expansions);
}
