//! Best-first backward proof search over a tree of goals and tactics.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use mmprove_core::database::{Assertion, AssertionId, Database, Expr};
use mmprove_core::proof::{tree_to_steps, ProofTree};
use mmprove_core::proofdata::hash_goal_step;
use mmprove_core::tactic::{apply_tactic, parse_tactic, Goal, Tactic, TacticError};
use mmprove_core::verify::{replay, ProofContext};
use mmprove_core::{ExportError, ProofFormat, VerifyError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policy::{fnv1a, PolicyError, Scorer, SuggestRequest, Suggester};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorityMode {
    /// Highest cumulative tactic log-probability first.
    Logprob,
    /// Highest product of sibling outcome probabilities along the path first.
    Value,
}

impl FromStr for PriorityMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "logprob" => Ok(PriorityMode::Logprob),
            "value" => Ok(PriorityMode::Value),
            other => Err(format!("unknown priority mode `{other}`")),
        }
    }
}

impl fmt::Display for PriorityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PriorityMode::Logprob => "logprob",
            PriorityMode::Value => "value",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    /// Independent attempts per statement (a).
    pub attempts: usize,
    /// Tactics sampled per expansion (e).
    pub samples: usize,
    /// Expansion budget per attempt (d).
    pub max_expansions: usize,
    pub temperature: f64,
    pub priority: PriorityMode,
    pub seed: u64,
    /// Record expansion events in the result.
    pub transcript: bool,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            attempts: 4,
            samples: 32,
            max_expansions: 128,
            temperature: 1.0,
            priority: PriorityMode::Logprob,
            seed: 0,
            transcript: false,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |msg: &str| Err(SearchError::Params(msg.to_string()));
        if self.attempts == 0 {
            return bad("attempts must be at least 1");
        }
        if self.samples == 0 {
            return bad("samples per expansion must be at least 1");
        }
        if self.max_expansions == 0 {
            return bad("expansion budget must be at least 1");
        }
        if !(self.temperature > 0.0) {
            return bad("temperature must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid search parameters: {0}")]
    Params(String),
    #[error("value mode needs an outcome scorer")]
    NoScorer,
    #[error("scorer failed: {0}")]
    Scorer(PolicyError),
    #[error("no statements to evaluate")]
    Empty,
    #[error("statement: {0}")]
    Statement(#[from] TacticError),
    #[error("found proof does not export: {0}")]
    Export(#[from] ExportError),
    #[error("found proof was rejected by the kernel: {0}")]
    Unsound(#[from] VerifyError),
}

/// A statement to prove, with the library ceiling its tactics must respect.
#[derive(Clone, Debug)]
pub struct Problem {
    pub label: String,
    pub goal: Goal,
    pub ceiling: Option<usize>,
    source: Option<AssertionId>,
}

impl Problem {
    /// A library theorem in benchmark mode: only earlier assertions may be cited.
    pub fn from_assertion(a: &Assertion, db: &Database) -> Problem {
        Problem {
            label: a.label.clone(),
            goal: Goal::of_assertion(db, a),
            ceiling: Some(a.index),
            source: Some(AssertionId(a.index as u32)),
        }
    }

    /// A statement given as `[[ hyps ]] |- concl` text.
    pub fn from_text(db: &Database, label: &str, text: &str) -> Result<Problem, TacticError> {
        Ok(Problem::from_goal(label, Goal::parse(db, text)?))
    }

    pub fn from_goal(label: &str, goal: Goal) -> Problem {
        Problem {
            label: label.to_string(),
            goal,
            ceiling: None,
            source: None,
        }
    }

    /// The context a found proof is checked in.
    pub fn context(&self, db: &Database) -> Result<ProofContext, ExportError> {
        match self.source {
            Some(id) => Ok(ProofContext::for_assertion(db, db.assertion(id))),
            None => ProofContext::fresh(db, &self.label, &self.goal.hyps, &self.goal.concl, &self.goal.dv),
        }
    }

    /// Exports `tree` and replays it through the kernel.
    pub fn check(&self, db: &Database, tree: &ProofTree) -> Result<(), SearchError> {
        let ctx = self.context(db)?;
        let steps = tree_to_steps(db, &ctx, tree, true)?;
        replay(db, &ctx, &steps)?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoalStatus {
    Open,
    Proved,
    Failed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Closure {
    /// Equal to the root's essential hypothesis with this index.
    Hyp(usize),
    Tactic(usize),
}

#[derive(Clone, Debug)]
pub struct GoalNode {
    pub goal: Goal,
    pub text: String,
    /// The tactic that produced this goal; none for the root.
    pub parent: Option<usize>,
    /// Sum of the log-probabilities of the tactics from the root, in nats.
    pub cum_logprob: f64,
    /// Sum of `-ln V` over the tactic levels from the root.
    pub value_cost: f64,
    pub depth: usize,
    pub status: GoalStatus,
    pub expanded: bool,
    pub tactics: Vec<usize>,
    pub closed_by: Option<Closure>,
}

#[derive(Clone, Debug)]
pub struct TacticNode {
    pub tactic: Tactic,
    pub text: String,
    pub logprob: f64,
    pub goal: usize,
    pub children: Vec<usize>,
    /// Product of the children's outcome scores (1 outside value mode).
    pub value: f64,
}

#[derive(Clone, Copy, Debug)]
struct QueueEntry {
    priority: f64,
    seq: u64,
    goal: usize,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueueEntry {}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueueEntry {
    /// Reversed so the max-heap pops the lowest priority, then the oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .priority
            .total_cmp(&self.priority)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Counters for one attempt.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub sampled: usize,
    pub duplicates: usize,
    pub valid: usize,
    /// Invalid suggestions by reason.
    pub invalid: BTreeMap<String, usize>,
    /// Tactics dropped because a child repeats an ancestor goal.
    pub cycles: usize,
    pub transport_errors: usize,
}

impl SearchStats {
    pub fn invalid_total(&self) -> usize {
        self.invalid.values().sum()
    }

    fn add(&mut self, other: &SearchStats) {
        self.sampled += other.sampled;
        self.duplicates += other.duplicates;
        self.valid += other.valid;
        self.cycles += other.cycles;
        self.transport_errors += other.transport_errors;
        for (k, v) in &other.invalid {
            *self.invalid.entry(k.clone()).or_insert(0) += v;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptTactic {
    pub text: String,
    pub logprob: f64,
    pub children: Vec<String>,
}

/// One expansion, enough to replay the search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionEvent {
    pub goal_hash: String,
    pub goal: String,
    pub priority: f64,
    pub tactics: Vec<TranscriptTactic>,
}

fn goal_hash(text: &str) -> String {
    hash_goal_step(text, "")
}

/// The search state of one attempt.
pub struct SearchTree {
    pub goals: Vec<GoalNode>,
    pub tactics: Vec<TacticNode>,
    queue: BinaryHeap<QueueEntry>,
    seq: u64,
    mode: PriorityMode,
    failed: HashSet<String>,
}

impl SearchTree {
    pub fn new(db: &Database, root: &Goal, mode: PriorityMode) -> SearchTree {
        let mut tree = SearchTree {
            goals: Vec::new(),
            tactics: Vec::new(),
            queue: BinaryHeap::new(),
            seq: 0,
            mode,
            failed: HashSet::new(),
        };
        tree.insert(db, root.clone(), None, 0.0, 0.0, 0);
        tree
    }

    pub fn root(&self) -> &GoalNode {
        &self.goals[0]
    }

    pub fn root_proved(&self) -> bool {
        self.goals[0].status == GoalStatus::Proved
    }

    pub fn priority(&self, g: usize) -> f64 {
        let n = &self.goals[g];
        match self.mode {
            PriorityMode::Logprob => -n.cum_logprob,
            PriorityMode::Value => n.value_cost,
        }
    }

    pub fn open_len(&self) -> usize {
        self.queue.len()
    }

    fn insert(&mut self, db: &Database, goal: Goal, parent: Option<usize>, cum: f64, cost: f64, depth: usize) -> usize {
        let id = self.goals.len();
        let text = goal.text(db);
        let hyp = goal.hyp_index(&goal.concl);
        let status = if hyp.is_some() {
            GoalStatus::Proved
        } else if self.failed.contains(&text) {
            GoalStatus::Failed
        } else {
            GoalStatus::Open
        };
        self.goals.push(GoalNode {
            goal,
            text,
            parent,
            cum_logprob: cum,
            value_cost: cost,
            depth,
            status,
            expanded: false,
            tactics: Vec::new(),
            closed_by: hyp.map(Closure::Hyp),
        });
        if status == GoalStatus::Open {
            self.queue.push(QueueEntry {
                priority: self.priority(id),
                seq: self.seq,
                goal: id,
            });
            self.seq += 1;
        }
        id
    }

    fn parent_goal(&self, g: usize) -> Option<usize> {
        self.goals[g].parent.map(|t| self.tactics[t].goal)
    }

    /// Whether expanding `g` can still matter: it is open and no ancestor is
    /// already settled.
    fn is_live(&self, g: usize) -> bool {
        let mut cur = Some(g);
        while let Some(c) = cur {
            if self.goals[c].status != GoalStatus::Open {
                return false;
            }
            if self.goals[c].parent.is_some_and(|t| self.tactic_dead(t)) {
                return false;
            }
            cur = self.parent_goal(c);
        }
        true
    }

    /// Pops the best live goal.
    pub fn pop(&mut self) -> Option<usize> {
        while let Some(e) = self.queue.pop() {
            if !self.goals[e.goal].expanded && self.is_live(e.goal) {
                return Some(e.goal);
            }
        }
        None
    }

    fn repeats_ancestor(&self, g: usize, concl: &Expr) -> bool {
        let mut cur = Some(g);
        while let Some(c) = cur {
            if self.goals[c].goal.concl == *concl {
                return true;
            }
            cur = self.parent_goal(c);
        }
        false
    }

    fn tactic_dead(&self, t: usize) -> bool {
        self.tactics[t]
            .children
            .iter()
            .any(|c| self.goals[*c].status == GoalStatus::Failed)
    }

    fn tactic_done(&self, t: usize) -> bool {
        self.tactics[t]
            .children
            .iter()
            .all(|c| self.goals[*c].status == GoalStatus::Proved)
    }

    fn propagate_proved(&mut self, mut t: usize) {
        loop {
            if !self.tactic_done(t) {
                return;
            }
            let g = self.tactics[t].goal;
            if self.goals[g].status == GoalStatus::Proved {
                return;
            }
            self.goals[g].status = GoalStatus::Proved;
            self.goals[g].closed_by = Some(Closure::Tactic(t));
            match self.goals[g].parent {
                Some(p) => t = p,
                None => return,
            }
        }
    }

    fn fail(&mut self, mut g: usize) {
        loop {
            if self.goals[g].status != GoalStatus::Open {
                return;
            }
            self.goals[g].status = GoalStatus::Failed;
            self.failed.insert(self.goals[g].text.clone());
            let Some(p) = self.parent_goal(g) else { return };
            if !self.goals[p].expanded || !self.goals[p].tactics.iter().all(|t| self.tactic_dead(*t)) {
                return;
            }
            g = p;
        }
    }

    /// Adds a validated tactic under `g`. Returns `None` when a child
    /// repeats an ancestor.
    fn add_tactic(
        &mut self,
        db: &Database,
        g: usize,
        tactic: Tactic,
        text: String,
        logprob: f64,
        children: Vec<Expr>,
        scorer: Option<&dyn Scorer>,
    ) -> Result<Option<usize>, SearchError> {
        if children.iter().any(|c| self.repeats_ancestor(g, c)) {
            return Ok(None);
        }
        let parent = &self.goals[g];
        let goals: Vec<Goal> = children.into_iter().map(|c| parent.goal.with_conclusion(c)).collect();
        let mut value = 1.0;
        if self.mode == PriorityMode::Value {
            let scorer = scorer.ok_or(SearchError::NoScorer)?;
            for c in &goals {
                if c.hyp_index(&c.concl).is_none() {
                    value *= scorer.score(&c.text(db)).map_err(SearchError::Scorer)?.clamp(0.0, 1.0);
                }
            }
        }
        let cum = parent.cum_logprob + logprob;
        let cost = parent.value_cost - value.max(f64::MIN_POSITIVE).ln();
        let depth = parent.depth + 1;
        let t = self.tactics.len();
        self.tactics.push(TacticNode {
            tactic,
            text,
            logprob,
            goal: g,
            children: Vec::new(),
            value,
        });
        self.goals[g].tactics.push(t);
        for (i, c) in goals.iter().enumerate() {
            let id = match goals[..i].iter().position(|s| s.concl == c.concl) {
                Some(k) => self.tactics[t].children[k],
                None => self.insert(db, c.clone(), Some(t), cum, cost, depth),
            };
            self.tactics[t].children.push(id);
        }
        self.propagate_proved(t);
        Ok(Some(t))
    }

    /// Proof of a proved goal, following each goal's first closing tactic.
    pub fn extract(&self, g: usize) -> Option<ProofTree> {
        let n = &self.goals[g];
        match n.closed_by? {
            Closure::Hyp(k) => Some(ProofTree::Hyp(k)),
            Closure::Tactic(t) => {
                let tac = &self.tactics[t];
                let children = tac.children.iter().map(|c| self.extract(*c)).collect::<Option<Vec<_>>>()?;
                Some(ProofTree::step(tac.tactic.assertion, tac.tactic.subst.clone(), children, n.goal.concl.clone()))
            }
        }
    }

    /// Expands `g`: samples suggestions, deduplicates them, and adds every
    /// valid tactic.
    #[allow(clippy::too_many_arguments)]
    pub fn expand(
        &mut self,
        db: &Database,
        g: usize,
        suggester: &dyn Suggester,
        scorer: Option<&dyn Scorer>,
        params: &SearchParams,
        problem: &Problem,
        attempt_seed: u64,
        rng: &mut ChaCha8Rng,
        stats: &mut SearchStats,
    ) -> Result<Option<ExpansionEvent>, SearchError> {
        self.goals[g].expanded = true;
        let priority = self.priority(g);
        let root_text = self.goals[0].text.clone();
        let goal = self.goals[g].goal.clone();
        let goal_text = self.goals[g].text.clone();
        let req = SuggestRequest {
            root: &root_text,
            goal: &goal,
            goal_text: &goal_text,
            count: params.samples,
            temperature: params.temperature,
            ceiling: problem.ceiling,
            attempt_seed,
        };
        let suggestions = match suggester.suggest(&req, rng) {
            Ok(s) => s,
            Err(e) => {
                log::warn!("suggester failed on `{goal_text}`: {e}");
                stats.transport_errors += 1;
                Vec::new()
            }
        };
        let mut event = params.transcript.then(|| ExpansionEvent {
            goal_hash: goal_hash(&goal_text),
            goal: goal_text.clone(),
            priority,
            tactics: Vec::new(),
        });
        let mut seen = HashSet::new();
        for s in suggestions.into_iter().take(params.samples) {
            stats.sampled += 1;
            if !seen.insert(s.text.clone()) {
                stats.duplicates += 1;
                continue;
            }
            if s.logprob.is_nan() {
                *stats.invalid.entry("logprob".into()).or_insert(0) += 1;
                continue;
            }
            let logprob = s.logprob.min(0.0);
            let applied = parse_tactic(db, &s.text, problem.ceiling).and_then(|t| apply_tactic(db, &goal, &t).map(|ch| (t, ch)));
            let (tactic, children) = match applied {
                Ok(x) => x,
                Err(e) => {
                    *stats.invalid.entry(e.kind().into()).or_insert(0) += 1;
                    continue;
                }
            };
            let text = tactic.text(db);
            match self.add_tactic(db, g, tactic, text.clone(), logprob, children, scorer)? {
                None => stats.cycles += 1,
                Some(t) => {
                    stats.valid += 1;
                    if let Some(ev) = event.as_mut() {
                        ev.tactics.push(TranscriptTactic {
                            text,
                            logprob,
                            children: self.tactics[t].children.iter().map(|c| goal_hash(&self.goals[*c].text)).collect(),
                        });
                    }
                }
            }
            if self.goals[g].status == GoalStatus::Proved {
                break;
            }
        }
        if self.goals[g].status == GoalStatus::Open && self.goals[g].tactics.iter().all(|t| self.tactic_dead(*t)) {
            self.fail(g);
        }
        Ok(event)
    }

    /// Every goal in the tree with whether it reached proved status.
    pub fn visited(&self) -> Vec<VisitedGoal> {
        self.goals
            .iter()
            .map(|n| VisitedGoal {
                text: n.text.clone(),
                proved: n.status == GoalStatus::Proved,
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisitedGoal {
    pub text: String,
    pub proved: bool,
}

/// Outcome of one attempt.
#[derive(Clone, Debug)]
pub struct SearchResult {
    pub label: String,
    pub proved: bool,
    pub proof: Option<ProofTree>,
    pub expansions: usize,
    pub stats: SearchStats,
    pub wall_ms: u128,
    pub seed: u64,
    pub goals: Vec<VisitedGoal>,
    pub transcript: Vec<ExpansionEvent>,
}

/// Runs one attempt with its own tree and random stream.
pub fn run_search(
    db: &Database,
    problem: &Problem,
    suggester: &dyn Suggester,
    scorer: Option<&dyn Scorer>,
    params: &SearchParams,
    attempt_seed: u64,
) -> Result<SearchResult, SearchError> {
    params.validate()?;
    if params.priority == PriorityMode::Value && scorer.is_none() {
        return Err(SearchError::NoScorer);
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(attempt_seed);
    let mut tree = SearchTree::new(db, &problem.goal, params.priority);
    let mut stats = SearchStats::default();
    let mut transcript = Vec::new();
    let mut expansions = 0;
    while !tree.root_proved() && expansions < params.max_expansions {
        let Some(g) = tree.pop() else { break };
        let ev = tree.expand(db, g, suggester, scorer, params, problem, attempt_seed, &mut rng, &mut stats)?;
        transcript.extend(ev);
        expansions += 1;
    }
    let proof = if tree.root_proved() { tree.extract(0) } else { None };
    if let Some(p) = &proof {
        problem.check(db, p)?;
    }
    Ok(SearchResult {
        label: problem.label.clone(),
        proved: proof.is_some(),
        proof,
        expansions,
        stats,
        wall_ms: start.elapsed().as_millis(),
        seed: attempt_seed,
        goals: tree.visited(),
        transcript,
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of attempt `i` on `label`.
pub fn attempt_seed(seed: u64, label: &str, i: usize) -> u64 {
    splitmix64(seed ^ fnv1a(label) ^ splitmix64(i as u64))
}

/// All attempts made on one statement.
#[derive(Clone, Debug)]
pub struct Attempts {
    pub runs: Vec<SearchResult>,
}

impl Attempts {
    /// The first success, or the last failure.
    pub fn best(&self) -> &SearchResult {
        self.runs.iter().find(|r| r.proved).unwrap_or_else(|| self.runs.last().expect("at least one attempt"))
    }

    pub fn proved(&self) -> bool {
        self.best().proved
    }

    pub fn row(&self, db: &Database, problem: &Problem) -> ResultRow {
        let best = self.best();
        let mut stats = SearchStats::default();
        for r in &self.runs {
            stats.add(&r.stats);
        }
        ResultRow {
            label: problem.label.clone(),
            statement: problem.goal.text(db),
            proved: best.proved,
            attempts: self.runs.len(),
            expansions: self.runs.iter().map(|r| r.expansions).sum(),
            seeds: self.runs.iter().map(|r| r.seed).collect(),
            wall_ms: self.runs.iter().map(|r| r.wall_ms).sum(),
            proof_steps: best.proof.as_ref().map(|p| p.step_count()),
            proof: best.proof.as_ref().and_then(|p| {
                let ctx = problem.context(db).ok()?;
                mmprove_core::proof::proof_text(db, &ctx, p, ProofFormat::Normal).ok()
            }),
            stats,
        }
    }
}

/// Up to `a` independent attempts; stops at the first success.
pub fn run_attempts(
    db: &Database,
    problem: &Problem,
    suggester: &dyn Suggester,
    scorer: Option<&dyn Scorer>,
    params: &SearchParams,
) -> Result<Attempts, SearchError> {
    params.validate()?;
    let mut runs = Vec::new();
    for i in 0..params.attempts {
        let r = run_search(db, problem, suggester, scorer, params, attempt_seed(params.seed, &problem.label, i))?;
        let done = r.proved;
        runs.push(r);
        if done {
            break;
        }
    }
    Ok(Attempts { runs })
}

/// One persisted evaluation row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub label: String,
    pub statement: String,
    pub proved: bool,
    pub attempts: usize,
    pub expansions: usize,
    pub seeds: Vec<u64>,
    pub wall_ms: u128,
    pub proof_steps: Option<usize>,
    /// Normal-format proof text when proved.
    pub proof: Option<String>,
    pub stats: SearchStats,
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub perf: f64,
    pub proved: usize,
    pub total: usize,
    pub attempts: Vec<Attempts>,
    pub rows: Vec<ResultRow>,
}

/// Runs `run_attempts` on every problem across `threads` workers; results
/// keep the input order.
pub fn evaluate(
    db: &Database,
    problems: &[Problem],
    suggester: &dyn Suggester,
    scorer: Option<&dyn Scorer>,
    params: &SearchParams,
    threads: usize,
) -> Result<Evaluation, SearchError> {
    if problems.is_empty() {
        return Err(SearchError::Empty);
    }
    params.validate()?;
    let run = |chunk: &[Problem]| -> Result<Vec<Attempts>, SearchError> {
        chunk.iter().map(|p| run_attempts(db, p, suggester, scorer, params)).collect()
    };
    let attempts: Vec<Attempts> = if threads <= 1 {
        run(problems)?
    } else {
        let size = problems.len().div_ceil(threads);
        std::thread::scope(|s| {
            let handles: Vec<_> = problems.chunks(size).map(|c| s.spawn(move || run(c))).collect();
            let mut out = Vec::new();
            for h in handles {
                out.extend(h.join().expect("search worker panicked")?);
            }
            Ok::<_, SearchError>(out)
        })?
    };
    let rows: Vec<ResultRow> = attempts.iter().zip(problems).map(|(a, p)| a.row(db, p)).collect();
    let proved = rows.iter().filter(|r| r.proved).count();
    Ok(Evaluation {
        perf: proved as f64 / problems.len() as f64,
        proved,
        total: problems.len(),
        attempts,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn queue_pops_lowest_priority_then_oldest() {
        let mut q = BinaryHeap::new();
        for (priority, seq, goal) in [(1.0, 0, 0), (0.5, 1, 1), (0.5, 2, 2), (2.0, 3, 3)] {
            q.push(QueueEntry { priority, seq, goal });
        }
        let order: Vec<usize> = std::iter::from_fn(|| q.pop().map(|e| e.goal)).collect();
        assert_eq!(order, vec![1, 2, 0, 3]);
    }

    #[test]
    fn params_are_validated() {
        assert!(SearchParams::default().validate().is_ok());
        for bad in [
            SearchParams { attempts: 0, ..Default::default() },
            SearchParams { samples: 0, ..Default::default() },
            SearchParams { max_expansions: 0, ..Default::default() },
            SearchParams { temperature: 0.0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
        assert_eq!("value".parse::<PriorityMode>().unwrap(), PriorityMode::Value);
    }

    #[test]
    fn attempt_seeds_differ() {
        let s: HashSet<u64> = (0..100).map(|i| attempt_seed(7, "thm", i)).collect();
        assert_eq!(s.len(), 100);
        assert_ne!(attempt_seed(7, "a", 0), attempt_seed(7, "b", 0));
    }
}
