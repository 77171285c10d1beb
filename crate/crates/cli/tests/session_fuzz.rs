mod common;

use std::sync::OnceLock;

use common::{fragment, spawn_service};
use mmprove_cli::config::PolicyKind;
use mmprove_cli::server::SuggestResponse;
use mmprove_cli::session::{NodeStatus, TreeView};
use mmprove_core::verify::{verify_database, VerifyOptions};
use mmprove_core::Database;
use proptest::prelude::*;
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};

const ROOTS: [&str; 4] = ["3p2e5", "syl", "mpd", "eqtr2i"];

const JUNK: [&str; 5] = [
    "[[ ]] |- 5 = ( 4 + 1 )",
    "[[ ]] |- 1 = 1",
    "[[ |- A = B ]] |- B = A {{ A : 5 }} {{ B : ( 4 + 1 ) }}",
    "[[ ]] |- ( 3 + 2 ) = 5",
    "garbage {{",
];

#[derive(Clone, Debug)]
enum Op {
    /// The policy's first suggestion on the k-th open goal.
    Suggested(usize),
    Junk(usize, usize),
    Undo,
    Redo,
    Export,
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        4 => (0usize..8).prop_map(Op::Suggested),
        2 => (0usize..8, 0usize..JUNK.len()).prop_map(|(g, j)| Op::Junk(g, j)),
        2 => Just(Op::Undo),
        1 => Just(Op::Redo),
        1 => Just(Op::Export),
    ]
}

fn base() -> &'static str {
    static BASE: OnceLock<String> = OnceLock::new();
    BASE.get_or_init(|| spawn_service(PolicyKind::Replay, |_| {}))
}

fn get_tree(http: &Client, id: &str) -> TreeView {
    http.get(format!("{}/sessions/{id}", base())).send().unwrap().json().unwrap()
}

fn open_goals(t: &TreeView) -> Vec<usize> {
    t.nodes.iter().filter(|n| n.status == NodeStatus::Open).map(|n| n.id).collect()
}

fn verifies_appended(block: &str) -> bool {
    let db = Database::parse(&format!("{}\n{block}", fragment().source)).unwrap();
    let r = verify_database(&db, &VerifyOptions::default());
    r.failures.is_empty() && r.verified == r.theorems
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn no_call_sequence_breaks_the_session(root in 0usize..ROOTS.len(), ops in prop::collection::vec(op(), 1..24)) {
        let http = Client::new();
        let created = http.post(format!("{}/sessions", base())).json(&json!({ "theorem": ROOTS[root] })).send().unwrap();
        prop_assert_eq!(created.status(), StatusCode::CREATED);
        let mut tree: TreeView = created.json().unwrap();
        let id = tree.id.clone();
        let mut history: Vec<TreeView> = Vec::new();
        for op in ops {
            let open = open_goals(&tree);
            let (path, body) = match &op {
                Op::Suggested(k) | Op::Junk(k, _) if open.is_empty() => {
                    let _ = k;
                    continue;
                }
                Op::Suggested(k) => {
                    let g = open[k % open.len()];
                    let s: SuggestResponse = http
                        .post(format!("{}/sessions/{id}/suggest", base()))
                        .json(&json!({ "count": 1, "goal": g }))
                        .send().unwrap().json().unwrap();
                    let Some(first) = s.suggestions.first() else { continue };
                    prop_assert!(first.valid, "recorded step rejected: {:?}", first);
                    ("apply", json!({ "tactic_text": first.text, "goal": g }))
                }
                Op::Junk(k, j) => ("apply", json!({ "tactic_text": JUNK[*j], "goal": open[k % open.len()] })),
                Op::Undo => ("undo", json!({})),
                Op::Redo => ("redo", json!({})),
                Op::Export => {
                    let r = http.get(format!("{}/sessions/{id}/export?format=mm&label=fuzz", base())).send().unwrap();
                    if tree.proved {
                        prop_assert_eq!(r.status(), StatusCode::OK);
                        prop_assert!(verifies_appended(&r.text().unwrap()));
                    } else {
                        prop_assert_eq!(r.status(), StatusCode::CONFLICT);
                    }
                    prop_assert_eq!(&get_tree(&http, &id), &tree);
                    continue;
                }
            };
            let r = http.post(format!("{}/sessions/{id}/{path}", base())).json(&body).send().unwrap();
            let status = r.status();
            if status == StatusCode::OK {
                let next: TreeView = r.json().unwrap();
                prop_assert_eq!(&get_tree(&http, &id), &next);
                match op {
                    Op::Undo => {
                        let prev = history.pop().expect("undo only succeeds after an apply");
                        prop_assert_eq!(&prev.nodes, &next.nodes);
                    }
                    _ => history.push(tree.clone()),
                }
                tree = next;
            } else {
                let body: Value = r.json().unwrap();
                prop_assert!(body["error"]["kind"].is_string());
                prop_assert!(status.is_client_error(), "{} {}", status, body);
                prop_assert_eq!(&get_tree(&http, &id), &tree);
            }
            if tree.proved {
                let r = http.get(format!("{}/sessions/{id}/export?format=mm&label=fuzz", base())).send().unwrap();
                prop_assert_eq!(r.status(), StatusCode::OK);
                prop_assert!(verifies_appended(&r.text().unwrap()));
            }
        }
    }
}
