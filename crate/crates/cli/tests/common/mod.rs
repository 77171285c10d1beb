#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::{mpsc, Arc, OnceLock};

use mmprove_cli::backend::Backend;
use mmprove_cli::config::{PolicyConfig, PolicyKind, ServiceConfig};
use mmprove_cli::library::{extract_all, Library};
use mmprove_cli::server::{router, AppState};
use mmprove_core::proofdata::ProofStepRecord;
use mmprove_core::Database;
use mmprove_prover::{Scorer, Suggester};

pub fn data_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

pub fn fragment() -> &'static Library {
    static LIB: OnceLock<Library> = OnceLock::new();
    LIB.get_or_init(|| Library::load(&data_path("fragment.mm"), &[]).expect("fragment.mm loads"))
}

pub fn records() -> &'static [ProofStepRecord] {
    static RECORDS: OnceLock<Vec<ProofStepRecord>> = OnceLock::new();
    RECORDS.get_or_init(|| extract_all(&fragment().db, 1).expect("fragment extracts"))
}

/// Starts the service on an ephemeral port and returns its base URL.
pub fn spawn_service(kind: PolicyKind, tweak: impl FnOnce(&mut ServiceConfig)) -> String {
    let db: &'static Database = &fragment().db;
    let mut config = ServiceConfig {
        policy: PolicyConfig {
            kind,
            ..PolicyConfig::default()
        },
        ..ServiceConfig::default()
    };
    tweak(&mut config);
    let backend = Backend::build(db, &config.policy, records()).expect("backend builds");
    let suggester: Arc<dyn Suggester> = Arc::from(backend.suggester);
    let scorer: Option<Arc<dyn Scorer>> = backend.scorer.map(Arc::from);
    let state = Arc::new(AppState::new(db, suggester, scorer, config));
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, router(state)).await.unwrap();
        });
    });
    format!("http://{}", rx.recv().expect("service starts"))
}
