use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use mmprove_cli::backend::Backend;
use mmprove_cli::config::{PolicyKind, ServiceConfig};
use mmprove_cli::library::{extract_all, Dataset, Library};
use mmprove_cli::server::{router, serve, stub_lm_router, AppState};
use mmprove_cli::shorten::{shorten, splice_accepted};
use mmprove_core::proofdata::ProofStepRecord;
use mmprove_core::verify::{verify_database, VerifyOptions};
use mmprove_core::{Database, ProofFormat};
use mmprove_prover::iteration::{positives, read_iteration, run_iteration, to_jsonl, write_iteration, IterationInput, IterationStatus};
use mmprove_prover::search::ResultRow;
use mmprove_prover::{evaluate, run_attempts, PriorityMode, Problem, Scorer, SearchParams, Suggester};
use mmprove_syngen::{build_augmented, gen_arith, gen_ring, ArithKind, RingTask};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Process exit codes.
mod code {
    pub const NOT_PROVED: u8 = 1;
    pub const INPUT: u8 = 3;
    pub const VERIFY: u8 = 4;
    pub const POLICY: u8 = 5;
    pub const SEARCH: u8 = 6;
    pub const IO: u8 = 7;
    pub const SERVER: u8 = 8;
}

struct Failure {
    code: u8,
    err: anyhow::Error,
}

trait Coded<T> {
    fn code(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Coded<T> for Result<T, E> {
    fn code(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure { code, err: e.into() })
    }
}

type Outcome = Result<u8, Failure>;

#[derive(Parser)]
#[command(name = "mmprove", version, about = "Metamath proof search, data generation and proving service")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every proof of a library.
    Verify {
        #[command(flatten)]
        db: DbArgs,
        /// Also require each statement to parse uniquely.
        #[arg(long)]
        grammar: bool,
        #[arg(long, default_value_t = default_threads())]
        threads: usize,
    },
    /// Write the proof-step dataset and its label split.
    Extract {
        #[command(flatten)]
        db: DbArgs,
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = default_threads())]
        threads: usize,
    },
    /// Search for a proof of one theorem or goal.
    Search {
        #[command(flatten)]
        db: DbArgs,
        #[command(flatten)]
        policy: PolicyArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        split: SplitArgs,
        /// A library theorem, searched under its library ceiling.
        #[arg(long, conflicts_with = "goal", required_unless_present = "goal")]
        theorem: Option<String>,
        /// A goal `[[ hyps ]] |- ...` or `|- ...`.
        #[arg(long)]
        goal: Option<String>,
        /// Write the expansion transcript as JSON lines.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Measure the share of a split's statements proved.
    Evaluate {
        #[command(flatten)]
        db: DbArgs,
        #[command(flatten)]
        policy: PolicyArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        splits: SplitArgs,
        /// Benchmark split: train, valid or test.
        #[arg(long, default_value = "valid")]
        split: String,
        /// Per-statement rows as JSON lines.
        #[arg(long)]
        rows: Option<PathBuf>,
        #[arg(long, default_value_t = default_threads())]
        threads: usize,
    },
    /// Generate arithmetic theorems with proofs.
    GenArith {
        #[command(flatten)]
        db: DbArgs,
        #[arg(long)]
        kind: ArithKind,
        #[arg(long, default_value_t = 2)]
        ndigits: u32,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: GenOut,
    },
    /// Generate ring-identity theorems with proofs.
    GenRing {
        #[command(flatten)]
        db: DbArgs,
        #[arg(long, default_value_t = 2)]
        nbvar: usize,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: GenOut,
    },
    /// Build the synthetic training blocks of every category.
    GenAugmented {
        #[command(flatten)]
        db: DbArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for `augmented.mm`, `proofsteps.jsonl` and `totals.json`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run expert-iteration rounds over the training split.
    Iterate {
        #[command(flatten)]
        db: DbArgs,
        #[command(flatten)]
        policy: PolicyArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        split: SplitArgs,
        /// Root directory holding `iterations/<k>`.
        #[arg(long)]
        root: PathBuf,
        /// Rounds to run after the last one present.
        #[arg(long, default_value_t = 1)]
        rounds: usize,
        #[arg(long, default_value_t = default_threads())]
        threads: usize,
    },
    /// Search for shorter proofs of library theorems.
    Shorten {
        #[command(flatten)]
        db: DbArgs,
        #[command(flatten)]
        policy: PolicyArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        split: SplitArgs,
        /// Theorems to shorten; every theorem when empty.
        theorems: Vec<String>,
        /// Write the library with accepted proofs spliced in.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the interactive session API.
    Serve {
        /// TOML service configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Library `.mm` file; overrides the configuration.
        #[arg(long)]
        db: Option<PathBuf>,
        /// Extra `.mm` files appended to the library.
        #[arg(long)]
        append: Vec<PathBuf>,
        /// Listen address; overrides the configuration.
        #[arg(long)]
        bind: Option<String>,
        /// Suggestion policy; overrides the configuration.
        #[arg(long)]
        policy: Option<PolicyKind>,
    },
    /// Serve a completion endpoint that replays the library's proof steps.
    StubLm {
        #[command(flatten)]
        db: DbArgs,
        /// Listen address.
        #[arg(long, default_value = "127.0.0.1:8081")]
        bind: String,
    },
}

#[derive(Args)]
struct DbArgs {
    /// Library `.mm` file.
    #[arg(long, env = "MMPROVE_DB", default_value = "data/fragment.mm")]
    db: PathBuf,
    /// Extra `.mm` files appended to the library.
    #[arg(long)]
    append: Vec<PathBuf>,
}

impl DbArgs {
    fn load(&self) -> Result<Library, Failure> {
        Library::load(&self.db, &self.append).code(code::INPUT)
    }
}

#[derive(Args)]
struct PolicyArgs {
    #[arg(long, env = "MMPROVE_POLICY", default_value = "baseline")]
    policy: PolicyKind,
    /// Completion endpoint for the `lm` policy.
    #[arg(long, env = "MMPROVE_LM_ENDPOINT")]
    lm_endpoint: Option<String>,
    /// TOML file whose `[policy]` table configures the backends.
    #[arg(long)]
    policy_config: Option<PathBuf>,
}

impl PolicyArgs {
    fn backend<'db>(&self, db: &'db Database, training: &[ProofStepRecord]) -> Result<Backend<'db>, Failure> {
        let mut config = ServiceConfig::load(self.policy_config.as_deref()).code(code::INPUT)?.policy;
        config.kind = self.policy;
        if let Some(e) = &self.lm_endpoint {
            config.lm.endpoint = e.clone();
        }
        Backend::build(db, &config, training).code(code::POLICY)
    }
}

#[derive(Args)]
struct SearchArgs {
    /// Attempts per statement.
    #[arg(short = 'a', long = "a", visible_alias = "attempts", default_value_t = 1)]
    attempts: usize,
    /// Tactics sampled per expansion.
    #[arg(short = 'e', long = "e", visible_alias = "samples", default_value_t = 16)]
    samples: usize,
    /// Expansions per attempt.
    #[arg(short = 'd', long = "d", visible_alias = "max-expansions", default_value_t = 128)]
    max_expansions: usize,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    #[arg(long, default_value = "logprob")]
    priority: PriorityMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SearchArgs {
    fn params(&self) -> Result<SearchParams, Failure> {
        let p = SearchParams {
            attempts: self.attempts,
            samples: self.samples,
            max_expansions: self.max_expansions,
            temperature: self.temperature,
            priority: self.priority,
            seed: self.seed,
            transcript: false,
        };
        p.validate().code(code::INPUT)?;
        Ok(p)
    }
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
    #[arg(long, default_value_t = 5)]
    valid_size: usize,
    #[arg(long, default_value_t = 5)]
    test_size: usize,
    /// Sample at most this many statements of the benchmark split.
    #[arg(long)]
    limit: Option<usize>,
    /// Policies learn from this split's records (`all` for every theorem).
    #[arg(long, default_value = "train")]
    train_on: String,
}

impl SplitArgs {
    fn dataset(&self, db: &Database, threads: usize) -> Result<Dataset, Failure> {
        Dataset::build(db, self.split_seed, self.valid_size, self.test_size, threads).code(code::INPUT)
    }

    fn training(&self, data: &Dataset) -> Result<Vec<ProofStepRecord>, Failure> {
        if self.train_on == "all" {
            return Ok(data.records.clone());
        }
        data.records_of(&self.train_on).code(code::INPUT)
    }
}

#[derive(Args)]
struct GenOut {
    /// `mm` theorem blocks or `jsonl` proof-step records.
    #[arg(long, default_value = "mm")]
    format: String,
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Fails when the policy answered no request at all.
fn policy_reachable(rows: &[ResultRow]) -> Result<(), Failure> {
    let errors: usize = rows.iter().map(|r| r.stats.transport_errors).sum();
    let answered: usize = rows.iter().map(|r| r.stats.sampled).sum();
    if errors > 0 && answered == 0 {
        return Err(anyhow!("policy unreachable: {errors} failed requests")).code(code::POLICY);
    }
    Ok(())
}

/// Moves wall-clock times from the rows to the log so stdout and written
/// files depend only on inputs and seeds.
fn strip_timing(rows: &mut [ResultRow]) {
    for r in rows {
        log::info!("{}: {} ms", r.label, r.wall_ms);
        r.wall_ms = 0;
    }
}

fn write_file(path: &Path, body: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).code(code::IO)?;
    }
    fs::write(path, body).with_context(|| format!("writing {}", path.display())).code(code::IO)
}

fn print_json(v: &impl serde::Serialize) -> Result<(), Failure> {
    let line = serde_json::to_string(v).code(code::IO)?;
    writeln!(std::io::stdout(), "{line}").code(code::IO)
}

fn cmd_verify(db: &DbArgs, grammar: bool, threads: usize) -> Outcome {
    let lib = db.load()?;
    let report = verify_database(
        &lib.db,
        &VerifyOptions {
            check_grammar: grammar,
            threads,
        },
    );
    let failures: Vec<String> = report.failures.iter().map(|f| f.to_string()).collect();
    print_json(&serde_json::json!({
        "theorems": report.theorems,
        "verified": report.verified,
        "failures": failures,
    }))?;
    Ok(if failures.is_empty() { 0 } else { code::VERIFY })
}

fn cmd_extract(db: &DbArgs, split: &SplitArgs, out: &Path, threads: usize) -> Outcome {
    let lib = db.load()?;
    let data = Dataset::build(&lib.db, split.split_seed, split.valid_size, split.test_size, threads).code(code::VERIFY)?;
    write_file(&out.join("proofsteps.jsonl"), &to_jsonl(&data.records))?;
    let split_json = serde_json::to_string_pretty(&data.split).code(code::IO)? + "\n";
    write_file(&out.join("split.json"), &split_json)?;
    print_json(&serde_json::json!({
        "records": data.records.len(),
        "train": data.split.train.len(),
        "valid": data.split.valid.len(),
        "test": data.split.test.len(),
    }))?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_search(
    db: &DbArgs,
    policy: &PolicyArgs,
    search: &SearchArgs,
    split: &SplitArgs,
    theorem: Option<&str>,
    goal: Option<&str>,
    transcript: Option<&Path>,
) -> Outcome {
    let lib = db.load()?;
    let db = &lib.db;
    let data = split.dataset(db, default_threads())?;
    let training = split.training(&data)?;
    let backend = policy.backend(db, &training)?;
    let mut params = search.params()?;
    params.transcript = transcript.is_some();
    let problem = match (theorem, goal) {
        (Some(label), _) => {
            let a = db
                .assertion_by_label(label)
                .filter(|a| db.is_logical(a))
                .ok_or_else(|| anyhow!("unknown theorem `{label}`"))
                .code(code::INPUT)?;
            Problem::from_assertion(a, db)
        }
        (None, Some(text)) => {
            let text = if text.trim_start().starts_with("[[") { text.to_string() } else { format!("[[ ]] {text}") };
            Problem::from_text(db, "goal", &text).code(code::INPUT)?
        }
        (None, None) => return Err(anyhow!("give --theorem or --goal")).code(code::INPUT),
    };
    let attempts = run_attempts(db, &problem, backend.suggester.as_ref(), backend.scorer(), &params).code(code::SEARCH)?;
    policy_reachable(std::slice::from_ref(&attempts.row(db, &problem)))?;
    if let Some(path) = transcript {
        let events: Vec<_> = attempts.runs.iter().flat_map(|r| r.transcript.iter().cloned()).collect();
        write_file(path, &to_jsonl(&events))?;
    }
    let mut row = attempts.row(db, &problem);
    strip_timing(std::slice::from_mut(&mut row));
    print_json(&row)?;
    Ok(if row.proved { 0 } else { code::NOT_PROVED })
}

fn cmd_evaluate(
    db: &DbArgs,
    policy: &PolicyArgs,
    search: &SearchArgs,
    split: &SplitArgs,
    on: &str,
    rows: Option<&Path>,
    threads: usize,
) -> Outcome {
    let lib = db.load()?;
    let db = &lib.db;
    let data = split.dataset(db, threads)?;
    let training = split.training(&data)?;
    let backend = policy.backend(db, &training)?;
    let params = search.params()?;
    let problems = data.problems(db, on, split.limit, split.split_seed).code(code::INPUT)?;
    let mut eval = evaluate(db, &problems, backend.suggester.as_ref(), backend.scorer(), &params, threads).code(code::SEARCH)?;
    strip_timing(&mut eval.rows);
    policy_reachable(&eval.rows)?;
    if let Some(path) = rows {
        write_file(path, &to_jsonl(&eval.rows))?;
    }
    print_json(&serde_json::json!({
        "split": on,
        "policy": backend.name,
        "a": params.attempts,
        "e": params.samples,
        "d": params.max_expansions,
        "priority": params.priority,
        "seed": params.seed,
        "proved": eval.proved,
        "total": eval.total,
        "perf": eval.perf,
    }))?;
    Ok(0)
}

fn emit_generated(db: &Database, proofs: &[mmprove_syngen::GeneratedProof], format: &str) -> Outcome {
    let mut out = String::new();
    for p in proofs {
        match format {
            "mm" => {
                out.push_str(&p.to_mm(db, ProofFormat::Compressed).code(code::VERIFY)?);
                out.push('\n');
            }
            "jsonl" => out.push_str(&to_jsonl(&p.records(db))),
            other => return Err(anyhow!("unknown format `{other}` (expected mm or jsonl)")).code(code::INPUT),
        }
    }
    write!(std::io::stdout(), "{out}").code(code::IO)?;
    Ok(0)
}

fn cmd_gen_arith(db: &DbArgs, kind: ArithKind, ndigits: u32, count: usize, seed: u64, out: &GenOut) -> Outcome {
    let lib = db.load()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let proofs = (0..count)
        .map(|i| gen_arith(&lib.db, &format!("gen-{kind}-{i:04}"), kind, ndigits, &mut rng))
        .collect::<Result<Vec<_>, _>>()
        .code(code::INPUT)?;
    emit_generated(&lib.db, &proofs, &out.format)
}

fn cmd_gen_ring(db: &DbArgs, nbvar: usize, depth: usize, count: usize, seed: u64, out: &GenOut) -> Outcome {
    let lib = db.load()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let task = RingTask::new(nbvar, depth);
    let proofs = (0..count)
        .map(|i| gen_ring(&lib.db, &format!("gen-ring-{i:04}"), &task, &mut rng))
        .collect::<Result<Vec<_>, _>>()
        .code(code::INPUT)?;
    emit_generated(&lib.db, &proofs, &out.format)
}

fn cmd_gen_augmented(db: &DbArgs, seed: u64, out: &Path) -> Outcome {
    let lib = db.load()?;
    let db = &lib.db;
    let aug = build_augmented(db, seed).code(code::INPUT)?;
    write_file(&out.join("augmented.mm"), &aug.to_mm(db, ProofFormat::Compressed).code(code::VERIFY)?)?;
    write_file(&out.join("proofsteps.jsonl"), &to_jsonl(&aug.records(db)))?;
    let totals = serde_json::to_string_pretty(&aug.totals()).code(code::IO)? + "\n";
    write_file(&out.join("totals.json"), &totals)?;
    print_json(&aug.totals())?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_iterate(
    db: &DbArgs,
    policy: &PolicyArgs,
    search: &SearchArgs,
    split: &SplitArgs,
    root: &Path,
    rounds: usize,
    threads: usize,
) -> Outcome {
    let lib = db.load()?;
    let db = &lib.db;
    let data = split.dataset(db, threads)?;
    let params = search.params()?;
    let problems = data.problems(db, "train", split.limit, split.split_seed).code(code::INPUT)?;
    let mut last = (0..)
        .take_while(|k| mmprove_prover::iteration::iteration_dir(root, *k).join("manifest.json").exists())
        .last();
    if last.is_none() {
        let proofsteps = split.training(&data)?;
        let outcomes = positives(&proofsteps, 0);
        let seed_out = run_seed_iteration(proofsteps, outcomes, &params, policy.policy.name());
        write_iteration(root, &seed_out, mmprove_core::proofdata::DEFAULT_EOT).code(code::IO)?;
        last = Some(0);
    }
    let mut status = 0;
    for _ in 0..rounds {
        let k = last.expect("seeded") + 1;
        let (proofsteps, outcomes) = read_iteration(root, k - 1).code(code::IO)?;
        let backend = policy.backend(db, &proofsteps)?;
        let input = IterationInput {
            iteration: k,
            policy: backend.name.to_string(),
            params: params.clone(),
            problems: problems.clone(),
            proofsteps,
            outcomes,
        };
        let mut out = run_iteration(db, &input, backend.suggester.as_ref(), backend.scorer(), threads);
        strip_timing(&mut out.manifest.results);
        write_iteration(root, &out, mmprove_core::proofdata::DEFAULT_EOT).code(code::IO)?;
        print_json(&serde_json::json!({
            "iteration": k,
            "status": out.manifest.status,
            "new_proofs": out.manifest.new_proofs,
            "proofsteps": out.proofsteps.len(),
            "outcomes": out.outcomes.len(),
        }))?;
        if out.manifest.status == IterationStatus::Failed {
            status = code::SEARCH;
            break;
        }
        last = Some(k);
    }
    Ok(status)
}

/// Iteration 0: the extracted training data with every goal marked positive.
fn run_seed_iteration(
    proofsteps: Vec<ProofStepRecord>,
    outcomes: Vec<mmprove_prover::iteration::OutcomeRecord>,
    params: &SearchParams,
    policy: &str,
) -> mmprove_prover::iteration::IterationOutput {
    use mmprove_prover::iteration::{DatasetHashes, IterationManifest, IterationOutput};
    let hashes = DatasetHashes::of(&proofsteps, &outcomes);
    IterationOutput {
        manifest: IterationManifest {
            iteration: 0,
            status: IterationStatus::Ok,
            error: None,
            policy: policy.to_string(),
            params: params.clone(),
            statements: Vec::new(),
            inputs: hashes.clone(),
            outputs: Some(hashes),
            new_proofs: 0,
            results: Vec::new(),
        },
        proofsteps,
        outcomes,
    }
}

fn cmd_shorten(
    db: &DbArgs,
    policy: &PolicyArgs,
    search: &SearchArgs,
    split: &SplitArgs,
    theorems: &[String],
    out: Option<&Path>,
) -> Outcome {
    let lib = db.load()?;
    let db = &lib.db;
    let data = split.dataset(db, default_threads())?;
    let training = split.training(&data)?;
    let backend = policy.backend(db, &training)?;
    let params = search.params()?;
    let labels: Vec<String> = if theorems.is_empty() {
        db.theorems().filter(|a| db.is_logical(a)).map(|a| a.label.clone()).collect()
    } else {
        theorems.to_vec()
    };
    let reports = shorten(db, &labels, backend.suggester.as_ref(), backend.scorer(), &params).code(code::SEARCH)?;
    for r in &reports {
        print_json(r)?;
    }
    if let Some(path) = out {
        let spliced = splice_accepted(&lib.source, &reports).code(code::VERIFY)?;
        let rebuilt = Library::from_source(spliced.clone()).code(code::VERIFY)?;
        let report = verify_database(&rebuilt.db, &VerifyOptions::default());
        if !report.failures.is_empty() {
            return Err(anyhow!("spliced library fails verification: {}", report.failures[0])).code(code::VERIFY);
        }
        write_file(path, &spliced)?;
    }
    Ok(0)
}

fn runtime() -> Result<tokio::runtime::Runtime, Failure> {
    tokio::runtime::Builder::new_multi_thread().enable_all().build().code(code::SERVER)
}

fn cmd_serve(config: Option<&Path>, db: Option<PathBuf>, append: Vec<PathBuf>, bind: Option<String>, policy: Option<PolicyKind>) -> Outcome {
    let mut cfg = ServiceConfig::load(config).code(code::INPUT)?;
    cfg.apply_env(|k| std::env::var(k).ok()).code(code::INPUT)?;
    if let Some(d) = db {
        cfg.db = d;
    }
    if !append.is_empty() {
        cfg.append = append;
    }
    if let Some(b) = bind {
        cfg.bind = b;
    }
    if let Some(p) = policy {
        cfg.policy.kind = p;
    }
    let lib = Library::load(&cfg.db, &cfg.append).code(code::INPUT)?;
    let db: &'static Database = Box::leak(Box::new(lib.db));
    let training = extract_all(db, default_threads()).code(code::VERIFY)?;
    let backend = Backend::build(db, &cfg.policy, &training).code(code::POLICY)?;
    let suggester: Arc<dyn Suggester> = Arc::from(backend.suggester);
    let scorer: Option<Arc<dyn Scorer>> = backend.scorer.map(Arc::from);
    let bind = cfg.bind.clone();
    let state = Arc::new(AppState::new(db, suggester, scorer, cfg));
    runtime()?.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&bind).await.code(code::SERVER)?;
        log::info!("listening on {}", listener.local_addr().code(code::SERVER)?);
        serve(router(state), listener).await.code(code::SERVER)
    })?;
    Ok(0)
}

fn cmd_stub_lm(db: &DbArgs, bind: &str) -> Outcome {
    let lib = db.load()?;
    let records = extract_all(&lib.db, default_threads()).code(code::VERIFY)?;
    let app = stub_lm_router(&records);
    runtime()?.block_on(async move {
        let listener = tokio::net::TcpListener::bind(bind).await.code(code::SERVER)?;
        log::info!("stub completion endpoint on {}", listener.local_addr().code(code::SERVER)?);
        serve(app, listener).await.code(code::SERVER)
    })?;
    Ok(0)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Verify { db, grammar, threads } => cmd_verify(&db, grammar, threads),
        Command::Extract { db, split, out, threads } => cmd_extract(&db, &split, &out, threads),
        Command::Search {
            db,
            policy,
            search,
            split,
            theorem,
            goal,
            transcript,
        } => cmd_search(&db, &policy, &search, &split, theorem.as_deref(), goal.as_deref(), transcript.as_deref()),
        Command::Evaluate {
            db,
            policy,
            search,
            splits,
            split,
            rows,
            threads,
        } => cmd_evaluate(&db, &policy, &search, &splits, &split, rows.as_deref(), threads),
        Command::GenArith {
            db,
            kind,
            ndigits,
            count,
            seed,
            out,
        } => cmd_gen_arith(&db, kind, ndigits, count, seed, &out),
        Command::GenRing {
            db,
            nbvar,
            depth,
            count,
            seed,
            out,
        } => cmd_gen_ring(&db, nbvar, depth, count, seed, &out),
        Command::GenAugmented { db, seed, out } => cmd_gen_augmented(&db, seed, &out),
        Command::Iterate {
            db,
            policy,
            search,
            split,
            root,
            rounds,
            threads,
        } => cmd_iterate(&db, &policy, &search, &split, &root, rounds, threads),
        Command::Shorten {
            db,
            policy,
            search,
            split,
            theorems,
            out,
        } => cmd_shorten(&db, &policy, &search, &split, &theorems, out.as_deref()),
        Command::Serve {
            config,
            db,
            append,
            bind,
            policy,
        } => cmd_serve(config.as_deref(), db, append, bind, policy),
        Command::StubLm { db, bind } => cmd_stub_lm(&db, &bind),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure { code, err }) => {
            eprintln!("error: {err:#}");
            ExitCode::from(code)
        }
    }
}
