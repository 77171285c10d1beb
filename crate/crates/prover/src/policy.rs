//! Tactic suggesters and goal scorers.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use mmprove_core::database::{AssertionId, Database, Sym};
use mmprove_core::proofdata::{ProofStepRecord, DEFAULT_EOT};
use mmprove_core::tactic::{apply_tactic, Goal, Tactic};
use mmprove_core::term::{match_term, parse_term, Term};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A suggested tactic text and its log-probability in nats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredTactic {
    pub text: String,
    pub logprob: f64,
}

impl ScoredTactic {
    pub fn new(text: impl Into<String>, logprob: f64) -> ScoredTactic {
        ScoredTactic {
            text: text.into(),
            logprob,
        }
    }
}

/// What a suggester is asked for one expansion.
#[derive(Clone, Copy, Debug)]
pub struct SuggestRequest<'a> {
    /// Text of the attempt's root goal.
    pub root: &'a str,
    pub goal: &'a Goal,
    pub goal_text: &'a str,
    pub count: usize,
    pub temperature: f64,
    /// Only assertions with a smaller library index may be cited.
    pub ceiling: Option<usize>,
    pub attempt_seed: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolicyError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("protocol: {0}")]
    Protocol(String),
}

pub trait Suggester: Send + Sync {
    fn suggest(&self, req: &SuggestRequest<'_>, rng: &mut dyn RngCore) -> Result<Vec<ScoredTactic>, PolicyError>;
}

/// Estimates the probability that a goal can be proved.
pub trait Scorer: Send + Sync {
    fn score(&self, goal_text: &str) -> Result<f64, PolicyError>;
}

/// 64-bit FNV-1a, used to derive per-statement seeds.
pub fn fnv1a(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Returns the recorded proof steps of every known goal.
#[derive(Clone, Debug, Default)]
pub struct ReplayOracle {
    steps: HashMap<String, Vec<String>>,
}

impl ReplayOracle {
    /// Keeps every distinct step per goal in first-recorded order.
    pub fn new<'a>(records: impl IntoIterator<Item = &'a ProofStepRecord>) -> ReplayOracle {
        let mut steps: HashMap<String, Vec<String>> = HashMap::new();
        for r in records {
            let known = steps.entry(r.goal.clone()).or_default();
            if !known.contains(&r.proof_step) {
                known.push(r.proof_step.clone());
            }
        }
        ReplayOracle { steps }
    }

    /// The first recorded step for the goal.
    pub fn step(&self, goal_text: &str) -> Option<&str> {
        self.steps.get(goal_text).and_then(|s| s.first()).map(String::as_str)
    }

    pub fn steps(&self, goal_text: &str) -> &[String] {
        self.steps.get(goal_text).map(Vec::as_slice).unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

impl Suggester for ReplayOracle {
    /// Alternatives rank below the first recorded step.
    fn suggest(&self, req: &SuggestRequest<'_>, _rng: &mut dyn RngCore) -> Result<Vec<ScoredTactic>, PolicyError> {
        Ok(self
            .steps(req.goal_text)
            .iter()
            .take(req.count.max(1))
            .enumerate()
            .map(|(i, s)| ScoredTactic::new(s, -(i as f64)))
            .collect())
    }
}

/// Theorem application counts from a training split.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct UsageStats {
    pub counts: BTreeMap<String, usize>,
}

impl UsageStats {
    /// Counts by theorem label; steps whose statement is unknown are skipped.
    pub fn from_records<'a>(db: &Database, records: impl IntoIterator<Item = &'a ProofStepRecord>) -> UsageStats {
        let mut counts = BTreeMap::new();
        for r in records {
            let statement = r.proof_step.split(" {{ ").next().unwrap_or_default();
            if let Some(id) = db.lookup_statement(statement).first() {
                *counts.entry(db.assertion(*id).label.clone()).or_insert(0) += 1;
            }
        }
        UsageStats { counts }
    }

    fn total(&self) -> usize {
        self.counts.values().sum()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    /// Extra terms offered for variables the conclusion does not bind.
    pub constants: Vec<String>,
    /// Goal subterms kept per typecode.
    pub max_pool: usize,
    /// Theorems with more unbound variables than this are skipped.
    pub max_free: usize,
    /// Instantiations tried per matching theorem.
    pub max_combos: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            constants: ["0", "1", "2", "3", "4", "5", "6", "7", "8", "9", "10", "(/)"]
                .into_iter()
                .map(String::from)
                .collect(),
            max_pool: 24,
            max_free: 2,
            max_combos: 256,
        }
    }
}

struct Indexed {
    id: AssertionId,
    concl: Term,
    /// Mandatory variables with their syntax typecodes.
    vars: Vec<(Sym, Sym)>,
    log_prior: f64,
}

/// Mechanical suggester: theorems whose conclusion matches the goal, with
/// unbound variables filled from goal subterms and a constant list, ranked
/// by smoothed usage frequency.
pub struct UnificationBaseline<'db> {
    db: &'db Database,
    theorems: Vec<Indexed>,
    by_head: HashMap<Option<AssertionId>, Vec<usize>>,
    constants: Vec<(Sym, Term)>,
    config: BaselineConfig,
}

fn head(t: &Term) -> Option<AssertionId> {
    match t {
        Term::Var(_) => None,
        Term::App(l, _) => Some(*l),
    }
}

impl<'db> UnificationBaseline<'db> {
    pub fn new(db: &'db Database, usage: &UsageStats, config: BaselineConfig) -> UnificationBaseline<'db> {
        let logical: Vec<_> = db.assertions().iter().filter(|a| db.is_logical(a)).collect();
        let denom = (usage.total() + logical.len()).max(1) as f64;
        let mut theorems = Vec::new();
        let mut by_head: HashMap<Option<AssertionId>, Vec<usize>> = HashMap::new();
        for a in logical {
            let Ok(concl) = parse_term(db, db.parse_typecode(a.expr.typecode), &a.expr.body) else {
                continue;
            };
            let count = usage.counts.get(&a.label).copied().unwrap_or(0);
            by_head.entry(head(&concl)).or_default().push(theorems.len());
            theorems.push(Indexed {
                id: AssertionId(a.index as u32),
                concl,
                vars: db.mandatory_vars(a),
                log_prior: ((count + 1) as f64 / denom).ln(),
            });
        }
        let mut constants = Vec::new();
        for text in &config.constants {
            let Ok(syms) = db.symbols_of(text) else { continue };
            for tc in db.syntax_typecodes() {
                if let Ok(t) = parse_term(db, *tc, &syms) {
                    constants.push((*tc, t));
                }
            }
        }
        UnificationBaseline {
            db,
            theorems,
            by_head,
            constants,
            config,
        }
    }

    fn pool(&self, goal: &Goal) -> HashMap<Sym, Vec<Term>> {
        let db = self.db;
        let mut pool: HashMap<Sym, Vec<Term>> = HashMap::new();
        let mut seen = HashSet::new();
        for e in std::iter::once(&goal.concl).chain(&goal.hyps) {
            let Ok(t) = parse_term(db, db.parse_typecode(e.typecode), &e.body) else {
                continue;
            };
            t.visit(&mut |s: &Term| {
                if let Some(tc) = s.typecode(db) {
                    let slot = pool.entry(tc).or_default();
                    if slot.len() < self.config.max_pool && seen.insert(s.clone()) {
                        slot.push(s.clone());
                    }
                }
            });
        }
        for (tc, t) in &self.constants {
            if seen.insert(t.clone()) {
                pool.entry(*tc).or_default().push(t.clone());
            }
        }
        pool
    }

    /// Every valid candidate before truncation, best first.
    pub fn candidates(&self, goal: &Goal, ceiling: Option<usize>) -> Vec<ScoredTactic> {
        let db = self.db;
        let Ok(target) = parse_term(db, db.parse_typecode(goal.concl.typecode), &goal.concl.body) else {
            return Vec::new();
        };
        let pool = self.pool(goal);
        let limit = ceiling.unwrap_or(usize::MAX);
        let mut scored: Vec<(f64, String)> = Vec::new();
        let mut texts = HashSet::new();
        let heads = [head(&target), None];
        let slots = heads.iter().take(if heads[0].is_none() { 1 } else { 2 });
        for h in slots {
            for &i in self.by_head.get(h).map(Vec::as_slice).unwrap_or_default() {
                let th = &self.theorems[i];
                if th.id.index() >= limit || db.assertion(th.id).expr.typecode != goal.concl.typecode {
                    continue;
                }
                let mut binds = BTreeMap::new();
                if !match_term(&th.concl, &target, &mut binds) {
                    continue;
                }
                let free: Vec<(Sym, Sym)> = th.vars.iter().copied().filter(|(v, _)| !binds.contains_key(v)).collect();
                if free.len() > self.config.max_free {
                    continue;
                }
                let choices: Vec<&[Term]> = free
                    .iter()
                    .map(|(_, tc)| pool.get(tc).map(Vec::as_slice).unwrap_or_default())
                    .collect();
                if choices.iter().any(|c| c.is_empty()) {
                    continue;
                }
                let mut index = vec![0usize; free.len()];
                for _ in 0..self.config.max_combos {
                    let subst: Vec<(Sym, Vec<Sym>)> = th
                        .vars
                        .iter()
                        .map(|(v, _)| {
                            let t = match free.iter().position(|(f, _)| f == v) {
                                Some(k) => &choices[k][index[k]],
                                None => binds[v],
                            };
                            (*v, t.tokens(db))
                        })
                        .collect();
                    let tactic = Tactic {
                        assertion: th.id,
                        subst,
                    };
                    if apply_tactic(db, goal, &tactic).is_ok() {
                        let text = tactic.text(db);
                        if texts.insert(text.clone()) {
                            scored.push((th.log_prior, text));
                        }
                    }
                    if !advance(&mut index, &choices) {
                        break;
                    }
                }
            }
        }
        let norm = log_sum_exp(scored.iter().map(|(s, _)| *s));
        let mut out: Vec<ScoredTactic> = scored.into_iter().map(|(s, t)| ScoredTactic::new(t, s - norm)).collect();
        out.sort_by(|a, b| b.logprob.total_cmp(&a.logprob).then_with(|| a.text.cmp(&b.text)));
        out
    }
}

fn advance(index: &mut [usize], choices: &[&[Term]]) -> bool {
    for k in (0..index.len()).rev() {
        index[k] += 1;
        if index[k] < choices[k].len() {
            return true;
        }
        index[k] = 0;
    }
    false
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return 0.0;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl Suggester for UnificationBaseline<'_> {
    fn suggest(&self, req: &SuggestRequest<'_>, _rng: &mut dyn RngCore) -> Result<Vec<ScoredTactic>, PolicyError> {
        let mut out = self.candidates(req.goal, req.ceiling);
        out.truncate(req.count);
        Ok(out)
    }
}

/// Scores goals on a known proof 1 and every other goal `epsilon`.
#[derive(Clone, Debug)]
pub struct PerfectOutcomeOracle {
    on_path: HashSet<String>,
    pub epsilon: f64,
}

impl PerfectOutcomeOracle {
    pub const DEFAULT_EPSILON: f64 = 1e-3;

    pub fn new<'a>(records: impl IntoIterator<Item = &'a ProofStepRecord>) -> PerfectOutcomeOracle {
        PerfectOutcomeOracle {
            on_path: records.into_iter().map(|r| r.goal.clone()).collect(),
            epsilon: Self::DEFAULT_EPSILON,
        }
    }
}

impl Scorer for PerfectOutcomeOracle {
    fn score(&self, goal_text: &str) -> Result<f64, PolicyError> {
        Ok(if self.on_path.contains(goal_text) { 1.0 } else { self.epsilon })
    }
}

/// Scores every goal 1, which reduces value mode to breadth-first order.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeutralScorer;

impl Scorer for NeutralScorer {
    fn score(&self, _goal_text: &str) -> Result<f64, PolicyError> {
        Ok(1.0)
    }
}

/// The recorded step mixed with valid decoys, all under random
/// log-probabilities drawn uniformly from `[-noise, 0]`.
pub struct NoisySuggester<'db> {
    pub oracle: ReplayOracle,
    pub decoys: UnificationBaseline<'db>,
    pub decoy_count: usize,
    pub noise: f64,
}

impl Suggester for NoisySuggester<'_> {
    fn suggest(&self, req: &SuggestRequest<'_>, rng: &mut dyn RngCore) -> Result<Vec<ScoredTactic>, PolicyError> {
        let truth = self.oracle.step(req.goal_text);
        let mut out: Vec<ScoredTactic> = self
            .decoys
            .candidates(req.goal, req.ceiling)
            .into_iter()
            .filter(|c| Some(c.text.as_str()) != truth)
            .take(self.decoy_count)
            .collect();
        if let Some(t) = truth {
            out.push(ScoredTactic::new(t, 0.0));
        }
        for c in &mut out {
            c.logprob = -rng.gen::<f64>() * self.noise;
        }
        out.truncate(req.count.max(1));
        Ok(out)
    }
}

/// Succeeds on a whole attempt with probability `p`: the attempt either
/// replays the recorded steps or sees only garbage.
#[derive(Clone, Debug)]
pub struct StochasticStub {
    pub oracle: ReplayOracle,
    pub p: f64,
}

impl StochasticStub {
    pub fn attempt_succeeds(&self, root: &str, attempt_seed: u64) -> bool {
        ChaCha8Rng::seed_from_u64(attempt_seed ^ fnv1a(root)).gen_bool(self.p)
    }
}

impl Suggester for StochasticStub {
    fn suggest(&self, req: &SuggestRequest<'_>, rng: &mut dyn RngCore) -> Result<Vec<ScoredTactic>, PolicyError> {
        if self.attempt_succeeds(req.root, req.attempt_seed) {
            return self.oracle.suggest(req, rng);
        }
        Ok(vec![ScoredTactic::new("garbage }} {{", -1.0)])
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct LmConfig {
    /// Base URL; requests go to `<endpoint>/generate` and `<endpoint>/score`.
    pub endpoint: String,
    pub retries: usize,
    pub backoff_ms: u64,
    pub timeout_ms: u64,
    pub max_in_flight: usize,
    pub eot: String,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            endpoint: "http://127.0.0.1:8088".into(),
            retries: 3,
            backoff_ms: 100,
            timeout_ms: 30_000,
            max_in_flight: 8,
            eot: DEFAULT_EOT.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub n: usize,
    pub temperature: f64,
    pub stop: Vec<String>,
    pub logprobs: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Choice {
    pub text: String,
    pub total_logprob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub choices: Vec<Choice>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub next_token_probs: BTreeMap<String, f64>,
}

struct Gate {
    used: Mutex<usize>,
    freed: Condvar,
    cap: usize,
}

impl Gate {
    fn run<T>(&self, f: impl FnOnce() -> T) -> T {
        let mut used = self.used.lock().expect("gate lock");
        while *used >= self.cap {
            used = self.freed.wait(used).expect("gate lock");
        }
        *used += 1;
        drop(used);
        let out = f();
        *self.used.lock().expect("gate lock") -= 1;
        self.freed.notify_one();
        out
    }
}

/// Suggester and scorer backed by a text-completion endpoint.
pub struct LmClient {
    config: LmConfig,
    http: reqwest::blocking::Client,
    gate: Gate,
}

impl LmClient {
    pub fn new(config: LmConfig) -> Result<LmClient, PolicyError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| PolicyError::Transport(e.to_string()))?;
        let cap = config.max_in_flight.max(1);
        Ok(LmClient {
            config,
            http,
            gate: Gate {
                used: Mutex::new(0),
                freed: Condvar::new(),
                cap,
            },
        })
    }

    fn post<T: serde::de::DeserializeOwned>(&self, path: &str, body: &CompletionRequest) -> Result<T, PolicyError> {
        let url = format!("{}/{path}", self.config.endpoint.trim_end_matches('/'));
        let mut last = PolicyError::Transport("no attempt made".into());
        for attempt in 0..self.config.retries.max(1) {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(self.config.backoff_ms << (attempt - 1)));
            }
            let sent = self.gate.run(|| self.http.post(&url).json(body).send());
            match sent {
                Ok(resp) if resp.status().is_success() => {
                    return resp.json::<T>().map_err(|e| PolicyError::Protocol(e.to_string()));
                }
                Ok(resp) => last = PolicyError::Transport(format!("HTTP {}", resp.status())),
                Err(e) => last = PolicyError::Transport(e.to_string()),
            }
            log::warn!("{url}: attempt {} failed: {last}", attempt + 1);
        }
        Err(last)
    }

    fn request(&self, prompt: String, n: usize, temperature: f64) -> CompletionRequest {
        CompletionRequest {
            prompt,
            n,
            temperature,
            stop: vec![self.config.eot.clone()],
            logprobs: true,
        }
    }
}

impl Suggester for LmClient {
    fn suggest(&self, req: &SuggestRequest<'_>, _rng: &mut dyn RngCore) -> Result<Vec<ScoredTactic>, PolicyError> {
        let body = self.request(format!("GOAL {} PROOFSTEP", req.goal_text), req.count, req.temperature);
        let resp: CompletionResponse = self.post("generate", &body)?;
        Ok(resp
            .choices
            .into_iter()
            .map(|c| {
                let text = c.text.split(self.config.eot.as_str()).next().unwrap_or_default();
                let logprob = if c.total_logprob.is_finite() { c.total_logprob.min(0.0) } else { f64::MIN };
                ScoredTactic::new(mmprove_core::text::normalize(text), logprob)
            })
            .collect())
    }
}

impl Scorer for LmClient {
    fn score(&self, goal_text: &str) -> Result<f64, PolicyError> {
        let body = self.request(format!("GOAL {goal_text} OUTCOME"), 1, 0.0);
        let resp: ScoreResponse = self.post("score", &body)?;
        outcome_probability(&resp.next_token_probs)
    }
}

/// `p(P)`, or `1 - p(N)` when only `N` is reported, clamped to `[0, 1]`.
pub fn outcome_probability(probs: &BTreeMap<String, f64>) -> Result<f64, PolicyError> {
    let p = match (probs.get("P"), probs.get("N")) {
        (Some(p), _) => *p,
        (None, Some(n)) => 1.0 - n,
        (None, None) => return Err(PolicyError::Protocol("neither `P` nor `N` in next-token probabilities".into())),
    };
    if p.is_nan() {
        return Err(PolicyError::Protocol("probability is NaN".into()));
    }
    Ok(p.clamp(0.0, 1.0))
}
