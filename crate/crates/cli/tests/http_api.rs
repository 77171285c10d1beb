mod common;

use std::time::{Duration, Instant};

use common::{fragment, spawn_service};
use mmprove_cli::config::PolicyKind;
use mmprove_cli::server::{JobStatus, JobView, SuggestResponse, TheoremList};
use mmprove_cli::session::{NodeStatus, TreeView};
use mmprove_core::proofdata::ProofStepRecord;
use mmprove_core::verify::{verify_database, VerifyOptions};
use mmprove_core::Database;
use reqwest::blocking::{Client, Response};
use reqwest::StatusCode;
use serde_json::{json, Value};

const WORKED_GOAL: &str = "|- ( 3 + 2 ) = 5";
const WORKED_STEP: &str = "[[ |- A = B |- C = B ]] |- A = C {{ A : ( 3 + 2 ) }} {{ B : ( 4 + 1 ) }} {{ C : 5 }}";

struct Api {
    base: String,
    http: Client,
}

impl Api {
    fn new(base: String) -> Api {
        Api {
            base,
            http: Client::new(),
        }
    }

    fn post(&self, path: &str, body: Value) -> Response {
        self.http.post(format!("{}{path}", self.base)).json(&body).send().unwrap()
    }

    fn get(&self, path: &str) -> Response {
        self.http.get(format!("{}{path}", self.base)).send().unwrap()
    }

    fn create(&self, goal: &str) -> TreeView {
        let r = self.post("/sessions", json!({ "goal": goal }));
        assert_eq!(r.status(), StatusCode::CREATED);
        r.json().unwrap()
    }

    fn apply(&self, id: &str, goal: Option<usize>, tactic: &str) -> Response {
        self.post(&format!("/sessions/{id}/apply"), json!({ "tactic_text": tactic, "goal": goal }))
    }

    fn tree(&self, id: &str) -> TreeView {
        self.get(&format!("/sessions/{id}")).json().unwrap()
    }
}

fn error_kind(r: Response) -> (StatusCode, String) {
    let status = r.status();
    let body: Value = r.json().unwrap();
    (status, body["error"]["kind"].as_str().unwrap_or_default().to_string())
}

fn verifies_appended(block: &str) -> bool {
    let db = Database::parse(&format!("{}\n{block}", fragment().source)).expect("appended block parses");
    let report = verify_database(&db, &VerifyOptions::default());
    report.failures.is_empty() && report.verified == report.theorems
}

#[test]
fn suggestions_for_the_worked_goal_include_transitivity() {
    let api = Api::new(spawn_service(PolicyKind::Baseline, |_| {}));
    let tree = api.create(WORKED_GOAL);
    assert_eq!(tree.nodes.len(), 1);
    assert_eq!(tree.nodes[0].goal, "[[ ]] |- ( 3 + 2 ) = 5");
    let r = api.post(&format!("/sessions/{}/suggest", tree.id), json!({ "count": 64 }));
    assert_eq!(r.status(), StatusCode::OK);
    let s: SuggestResponse = r.json().unwrap();
    assert!(!s.suggestions.is_empty());
    assert!(s.suggestions.iter().all(|x| x.parses && x.valid));
    assert!(
        s.suggestions.iter().any(|x| x.text.starts_with("[[ |- A = B |- B = C ]] |- A = C")),
        "{:?}",
        s.suggestions.iter().map(|x| &x.text).collect::<Vec<_>>()
    );
    assert!(s.suggestions.windows(2).all(|w| w[0].logprob >= w[1].logprob));
}

#[test]
fn worked_example_apply_undo_redo_search_export() {
    let api = Api::new(spawn_service(PolicyKind::Replay, |_| {}));
    let root = api.create(WORKED_GOAL);
    let id = root.id.clone();

    let r = api.apply(&id, None, WORKED_STEP);
    assert_eq!(r.status(), StatusCode::OK);
    let split: TreeView = r.json().unwrap();
    let goals: Vec<&str> = split.nodes.iter().map(|n| n.goal.as_str()).collect();
    assert_eq!(goals, ["[[ ]] |- ( 3 + 2 ) = 5", "[[ ]] |- ( 3 + 2 ) = ( 4 + 1 )", "[[ ]] |- 5 = ( 4 + 1 )"]);
    assert_eq!(split.nodes[0].status, NodeStatus::Pending);

    let closed: TreeView = api.apply(&id, Some(2), "[[ ]] |- 5 = ( 4 + 1 )").json().unwrap();
    assert_eq!(closed.nodes[2].status, NodeStatus::Proved);

    let undone: TreeView = api.post(&format!("/sessions/{id}/undo"), json!({})).json().unwrap();
    assert!(undone.can_redo);
    assert_eq!(undone.nodes, split.nodes);
    let redone: TreeView = api.post(&format!("/sessions/{id}/redo"), json!({})).json().unwrap();
    assert_eq!(redone, closed);
    assert_eq!(api.tree(&id), redone);

    let (status, kind) = error_kind(api.get(&format!("/sessions/{id}/export?format=mm")));
    assert_eq!((status, kind.as_str()), (StatusCode::CONFLICT, "not_proved"));

    let r = api.post(&format!("/sessions/{id}/search"), json!({ "goal": 1, "max_expansions": 64 }));
    assert_eq!(r.status(), StatusCode::ACCEPTED);
    let job: JobView = r.json().unwrap();
    let deadline = Instant::now() + Duration::from_secs(60);
    let done = loop {
        let v: JobView = api.get(&format!("/jobs/{}", job.id)).json().unwrap();
        if v.status != JobStatus::Running {
            break v;
        }
        assert!(Instant::now() < deadline, "search job did not finish");
        std::thread::sleep(Duration::from_millis(20));
    };
    assert_eq!(done.status, JobStatus::Done);
    let result = done.result.unwrap();
    assert!(result.proved);
    for step in &result.steps {
        let tree = api.tree(&id);
        let node = tree
            .nodes
            .iter()
            .find(|n| n.goal == step.goal && n.status == NodeStatus::Open)
            .unwrap_or_else(|| panic!("no open goal {}", step.goal));
        assert_eq!(api.apply(&id, Some(node.id), &step.tactic).status(), StatusCode::OK);
    }
    let finished = api.tree(&id);
    assert!(finished.proved);

    let r = api.get(&format!("/sessions/{id}/export?format=mm&label=ui-3p2e5"));
    assert_eq!(r.status(), StatusCode::OK);
    let block = r.text().unwrap();
    assert!(block.contains("ui-3p2e5 $p |- ( 3 + 2 ) = 5 $="));
    assert!(verifies_appended(&block));

    let lines = api.get(&format!("/sessions/{id}/export?format=jsonl")).text().unwrap();
    let records: Vec<ProofStepRecord> = lines.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records[0].goal, "[[ ]] |- ( 3 + 2 ) = 5");
    assert_eq!(records[0].proof_step, WORKED_STEP);
}

#[test]
fn dv_violation_is_rejected_with_details() {
    let api = Api::new(spawn_service(PolicyKind::Baseline, |_| {}));
    let tree = api.create("[[ |- ( x = x -> ( ph <-> ph ) ) ]] |- ( ( x e. B /\\ ph ) -> E. x e. B ph )");
    let tactic = "[[ |- ( x = A -> ( ph <-> ps ) ) ]] |- ( ( A e. B /\\ ps ) -> E. x e. B ph ) \
                  {{ x : x }} {{ A : x }} {{ B : B }} {{ ph : ph }} {{ ps : ph }}";
    let r = api.apply(&tree.id, None, tactic);
    assert_eq!(r.status(), StatusCode::UNPROCESSABLE_ENTITY);
    let body: Value = r.json().unwrap();
    assert_eq!(body["error"]["kind"], "tactic_dv");
    assert!(body["error"]["message"].as_str().unwrap().contains('x'));
    assert_eq!(api.tree(&tree.id), tree);
}

#[test]
fn request_errors_are_structured() {
    let api = Api::new(spawn_service(PolicyKind::Baseline, |_| {}));
    assert_eq!(error_kind(api.get("/sessions/nope")), (StatusCode::NOT_FOUND, "not_found".into()));
    let tree = api.create("[[ ]] |- 5 = ( 4 + 1 )");
    let id = &tree.id;
    assert_eq!(error_kind(api.apply(id, None, "[[ ]] |- 5 = 5 {{")), (StatusCode::UNPROCESSABLE_ENTITY, "tactic_parse".into()));
    assert_eq!(error_kind(api.apply(id, None, "[[ ]] |- 1 = 1")).1, "tactic_unknown");
    assert_eq!(error_kind(api.apply(id, None, "[[ ]] |- ( 4 + 1 ) = 5")).1, "tactic_mismatch");
    assert_eq!(error_kind(api.apply(id, Some(7), "[[ ]] |- 5 = ( 4 + 1 )")).1, "unknown_goal");
    assert_eq!(error_kind(api.post(&format!("/sessions/{id}/undo"), json!({}))).1, "nothing_to_undo");
    assert_eq!(error_kind(api.post(&format!("/sessions/{id}/redo"), json!({}))).1, "nothing_to_redo");
    assert_eq!(error_kind(api.get(&format!("/sessions/{id}/export?format=pdf"))).1, "bad_request");
    assert_eq!(error_kind(api.post("/sessions", json!({}))).1, "bad_request");
    assert_eq!(error_kind(api.post("/sessions", json!({ "theorem": "nope" }))).1, "not_found");
    assert_eq!(api.tree(id), tree);

    assert_eq!(api.apply(id, None, "[[ ]] |- 5 = ( 4 + 1 )").status(), StatusCode::OK);
    assert_eq!(error_kind(api.apply(id, None, "[[ ]] |- 5 = ( 4 + 1 )")).1, "no_open_goal");
    let r = api.get(&format!("/sessions/{id}/export?format=mm"));
    assert_eq!(r.status(), StatusCode::OK);
    assert!(verifies_appended(&r.text().unwrap()));
}

#[test]
fn theorem_sessions_respect_the_library_ceiling() {
    let api = Api::new(spawn_service(PolicyKind::Baseline, |_| {}));
    let r = api.post("/sessions", json!({ "theorem": "3p2e5" }));
    assert_eq!(r.status(), StatusCode::CREATED);
    let tree: TreeView = r.json().unwrap();
    assert_eq!(tree.label, "3p2e5");
    assert_eq!(error_kind(api.apply(&tree.id, None, "[[ ]] |- ( 3 + 2 ) = 5")).1, "tactic_ceiling");
}

#[test]
fn theorem_search_matches_labels_and_statements() {
    let api = Api::new(spawn_service(PolicyKind::Baseline, |_| {}));
    let by_label: TheoremList = api.get("/theorems?query=3p2e5").json().unwrap();
    assert!(by_label.theorems.iter().any(|t| t.label == "3p2e5" && t.statement == "[[ ]] |- ( 3 + 2 ) = 5"));
    let by_text: TheoremList = api.get("/theorems?query=%28%204%20%2B%201%20%29%20%3D%205").json().unwrap();
    assert!(by_text.theorems.iter().any(|t| t.label == "4p1e5"));
    assert!(by_text.theorems.iter().all(|t| t.label.contains("( 4 + 1 ) = 5") || t.statement.contains("( 4 + 1 ) = 5")));
    let limited: TheoremList = api.get("/theorems?limit=3").json().unwrap();
    assert_eq!(limited.theorems.len(), 3);
}

#[test]
fn job_limit_and_cancellation() {
    let full = Api::new(spawn_service(PolicyKind::Baseline, |c| c.max_jobs = 0));
    let tree = full.create(WORKED_GOAL);
    assert_eq!(error_kind(full.post(&format!("/sessions/{}/search", tree.id), json!({}))).1, "too_many_jobs");

    let api = Api::new(spawn_service(PolicyKind::Baseline, |_| {}));
    let tree = api.create("|- ( 3 + 3 ) = ( 4 + 2 )");
    let job: JobView = api
        .post(&format!("/sessions/{}/search", tree.id), json!({ "max_expansions": 100000, "samples": 8 }))
        .json()
        .unwrap();
    let r = api.http.delete(format!("{}/jobs/{}", api.base, job.id)).send().unwrap();
    assert_eq!(r.status(), StatusCode::OK);
    let deadline = Instant::now() + Duration::from_secs(60);
    loop {
        let v: JobView = api.get(&format!("/jobs/{}", job.id)).json().unwrap();
        if v.status != JobStatus::Running {
            assert!(matches!(v.status, JobStatus::Cancelled | JobStatus::Done));
            break;
        }
        assert!(Instant::now() < deadline, "cancelled job kept running");
        std::thread::sleep(Duration::from_millis(20));
    }
    assert_eq!(error_kind(api.get("/jobs/nope")).1, "not_found");
}

#[test]
fn idle_sessions_expire() {
    let api = Api::new(spawn_service(PolicyKind::Baseline, |c| c.session_ttl_secs = 0));
    let tree = api.create(WORKED_GOAL);
    std::thread::sleep(Duration::from_millis(2100));
    assert_eq!(error_kind(api.get(&format!("/sessions/{}", tree.id))).1, "not_found");
}
