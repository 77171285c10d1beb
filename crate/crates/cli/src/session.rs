//! Human-driven proof trees: tactics are applied explicitly to open goals
//! and every change can be undone.

use std::time::{SystemTime, UNIX_EPOCH};

use mmprove_core::database::Database;
use mmprove_core::proof::{theorem_block, tree_to_steps};
use mmprove_core::proofdata::tree_records;
use mmprove_core::tactic::{apply_tactic, parse_tactic};
use mmprove_core::verify::{replay, ProofContext};
use mmprove_core::{ExportError, Goal, ProofFormat, ProofTree, Tactic, TacticError, VerifyError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("no goal {0} in this session")]
    UnknownGoal(usize),
    #[error("goal {0} is not open")]
    NotOpen(usize),
    #[error("every goal is closed")]
    NoOpenGoal,
    #[error(transparent)]
    Tactic(#[from] TacticError),
    #[error("nothing to undo")]
    NothingToUndo,
    #[error("nothing to redo")]
    NothingToRedo,
    #[error("the root goal is not proved")]
    NotProved,
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error("exported proof does not verify: {0}")]
    Verify(#[from] VerifyError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeStatus {
    Open,
    /// A tactic is applied but some subgoal is still open.
    Pending,
    Proved,
}

#[derive(Clone, Debug)]
struct Applied {
    tactic: Tactic,
    text: String,
    children: Vec<usize>,
}

#[derive(Clone, Debug)]
struct Node {
    goal: Goal,
    text: String,
    parent: Option<usize>,
    /// Root hypothesis closing this goal.
    hyp: Option<usize>,
    applied: Option<Applied>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Mm,
    Jsonl,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mm" => Ok(ExportFormat::Mm),
            "jsonl" => Ok(ExportFormat::Jsonl),
            other => Err(format!("unknown export format `{other}` (expected mm or jsonl)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeView {
    pub id: usize,
    pub goal: String,
    pub parent: Option<usize>,
    pub status: NodeStatus,
    pub hyp: Option<usize>,
    pub tactic: Option<String>,
    pub children: Vec<usize>,
}

/// The wire form of a session's tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeView {
    pub version: u32,
    pub id: String,
    pub label: String,
    pub proved: bool,
    pub can_undo: bool,
    pub can_redo: bool,
    pub nodes: Vec<NodeView>,
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

#[derive(Clone, Debug)]
pub struct Session {
    pub id: String,
    pub label: String,
    /// Library ceiling for cited theorems when the goal is a library theorem.
    pub ceiling: Option<usize>,
    pub created: u64,
    pub touched: u64,
    root: Goal,
    nodes: Vec<Node>,
    /// Goals whose tactic was applied, most recent last.
    undo: Vec<usize>,
    redo: Vec<(usize, String)>,
}

impl Session {
    pub fn new(db: &Database, id: &str, label: &str, root: Goal, ceiling: Option<usize>) -> Session {
        let now = unix_now();
        let mut s = Session {
            id: id.to_string(),
            label: label.to_string(),
            ceiling,
            created: now,
            touched: now,
            root: root.clone(),
            nodes: Vec::new(),
            undo: Vec::new(),
            redo: Vec::new(),
        };
        s.push_node(db, root.concl.clone(), None);
        s
    }

    fn push_node(&mut self, db: &Database, concl: mmprove_core::Expr, parent: Option<usize>) -> usize {
        let goal = self.root.with_conclusion(concl);
        let hyp = goal.hyp_index(&goal.concl);
        self.nodes.push(Node {
            text: goal.text(db),
            goal,
            parent,
            hyp,
            applied: None,
        });
        self.nodes.len() - 1
    }

    pub fn root(&self) -> &Goal {
        &self.root
    }

    pub fn status(&self, id: usize) -> NodeStatus {
        let n = &self.nodes[id];
        if n.hyp.is_some() {
            return NodeStatus::Proved;
        }
        match &n.applied {
            None => NodeStatus::Open,
            Some(a) if a.children.iter().all(|c| self.status(*c) == NodeStatus::Proved) => NodeStatus::Proved,
            Some(_) => NodeStatus::Pending,
        }
    }

    pub fn proved(&self) -> bool {
        self.status(0) == NodeStatus::Proved
    }

    /// `id`, or the first open goal when absent; the goal must be open.
    pub fn open_goal(&self, id: Option<usize>) -> Result<usize, SessionError> {
        match id {
            Some(g) => {
                if g >= self.nodes.len() {
                    return Err(SessionError::UnknownGoal(g));
                }
                if self.status(g) != NodeStatus::Open {
                    return Err(SessionError::NotOpen(g));
                }
                Ok(g)
            }
            None => (0..self.nodes.len())
                .find(|g| self.status(*g) == NodeStatus::Open)
                .ok_or(SessionError::NoOpenGoal),
        }
    }

    pub fn goal(&self, id: usize) -> Result<(&Goal, &str), SessionError> {
        self.nodes
            .get(id)
            .map(|n| (&n.goal, n.text.as_str()))
            .ok_or(SessionError::UnknownGoal(id))
    }

    /// Parses and checks `text` against goal `id` through the kernel.
    pub fn check(&self, db: &Database, id: usize, text: &str) -> Result<(Tactic, Vec<mmprove_core::Expr>), SessionError> {
        let goal = &self.nodes[id].goal;
        let tactic = parse_tactic(db, text, self.ceiling)?;
        let children = apply_tactic(db, goal, &tactic)?;
        Ok((tactic, children))
    }

    /// Applies `text` to goal `id` (or the first open goal) and returns the
    /// goal it was applied to.
    pub fn apply(&mut self, db: &Database, id: Option<usize>, text: &str) -> Result<usize, SessionError> {
        let g = self.open_goal(id)?;
        self.apply_checked(db, g, text)?;
        self.redo.clear();
        Ok(g)
    }

    fn apply_checked(&mut self, db: &Database, g: usize, text: &str) -> Result<(), SessionError> {
        let (tactic, children) = self.check(db, g, text)?;
        let text = tactic.text(db);
        let ids = children.into_iter().map(|c| self.push_node(db, c, Some(g))).collect();
        self.nodes[g].applied = Some(Applied {
            tactic,
            text,
            children: ids,
        });
        self.undo.push(g);
        self.touched = unix_now();
        Ok(())
    }

    /// Removes the most recent tactic and its subgoals.
    pub fn undo(&mut self) -> Result<usize, SessionError> {
        let g = self.undo.pop().ok_or(SessionError::NothingToUndo)?;
        let applied = self.nodes[g].applied.take().expect("undo entries have a tactic");
        let first = applied.children.iter().copied().min().unwrap_or(self.nodes.len());
        self.nodes.truncate(first.min(self.nodes.len()));
        self.redo.push((g, applied.text));
        self.touched = unix_now();
        Ok(g)
    }

    /// Reapplies the most recently undone tactic.
    pub fn redo(&mut self, db: &Database) -> Result<usize, SessionError> {
        let (g, text) = self.redo.pop().ok_or(SessionError::NothingToRedo)?;
        self.apply_checked(db, g, &text)?;
        Ok(g)
    }

    pub fn view(&self) -> TreeView {
        TreeView {
            version: SCHEMA_VERSION,
            id: self.id.clone(),
            label: self.label.clone(),
            proved: self.proved(),
            can_undo: !self.undo.is_empty(),
            can_redo: !self.redo.is_empty(),
            nodes: self
                .nodes
                .iter()
                .enumerate()
                .map(|(i, n)| NodeView {
                    id: i,
                    goal: n.text.clone(),
                    parent: n.parent,
                    status: self.status(i),
                    hyp: n.hyp,
                    tactic: n.applied.as_ref().map(|a| a.text.clone()),
                    children: n.applied.as_ref().map(|a| a.children.clone()).unwrap_or_default(),
                })
                .collect(),
        }
    }

    fn subtree(&self, db: &Database, id: usize) -> Option<ProofTree> {
        let n = &self.nodes[id];
        if let Some(h) = n.hyp {
            return Some(ProofTree::Hyp(h));
        }
        let a = n.applied.as_ref()?;
        let children = a.children.iter().map(|c| self.subtree(db, *c)).collect::<Option<Vec<_>>>()?;
        Some(ProofTree::step(a.tactic.assertion, a.tactic.subst.clone(), children, a.tactic.conclusion(db)))
    }

    /// The finished proof, when the root is proved.
    pub fn proof(&self, db: &Database) -> Option<ProofTree> {
        self.subtree(db, 0)
    }

    pub fn context(&self, db: &Database, label: &str) -> Result<ProofContext, ExportError> {
        ProofContext::fresh(db, label, &self.root.hyps, &self.root.concl, &self.root.dv)
    }

    /// Exports the finished proof after replaying it through the kernel.
    pub fn export(&self, db: &Database, format: ExportFormat, label: Option<&str>) -> Result<String, SessionError> {
        let tree = self.proof(db).ok_or(SessionError::NotProved)?;
        let label = label.unwrap_or(&self.label);
        let ctx = self.context(db, label)?;
        replay(db, &ctx, &tree_to_steps(db, &ctx, &tree, true)?)?;
        Ok(match format {
            ExportFormat::Mm => theorem_block(db, &ctx, &tree, ProofFormat::Compressed)?,
            ExportFormat::Jsonl => {
                let mut out = String::new();
                for r in tree_records(db, label, &self.root.hyps, &tree) {
                    out.push_str(&serde_json::to_string(&r).expect("records serialize"));
                    out.push('\n');
                }
                out
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SRC: &str = "$c ( ) = + wff class |- 1 2 $. $v A B C $.\n\
        cA $f class A $. cB $f class B $. cC $f class C $.\n\
        c1 $a class 1 $. c2 $a class 2 $. cadd $a class ( A + B ) $. weq $a wff A = B $.\n\
        ${ tr.1 $e |- A = B $. tr.2 $e |- B = C $. tr $a |- A = C $. $}\n\
        df-2 $a |- 2 = ( 1 + 1 ) $.\n\
        refl $a |- A = A $.\n";

    fn session(db: &Database) -> Session {
        Session::new(db, "s1", "t", Goal::parse(db, "[[ ]] |- 2 = ( 1 + 1 )").unwrap(), None)
    }

    #[test]
    fn apply_undo_redo_round_trip() {
        let db = Database::parse(SRC).unwrap();
        let mut s = session(&db);
        let before = s.view();
        s.apply(&db, None, "[[ |- A = B |- B = C ]] |- A = C {{ A : 2 }} {{ B : 2 }} {{ C : ( 1 + 1 ) }}")
            .unwrap();
        assert_eq!(s.view().nodes.len(), 3);
        assert_eq!(s.status(0), NodeStatus::Pending);
        let after = s.view();
        s.undo().unwrap();
        let mut undone = s.view();
        assert!(undone.can_redo);
        undone.can_redo = false;
        assert_eq!(undone, before);
        s.redo(&db).unwrap();
        assert_eq!(s.view(), after);
        assert!(matches!(s.apply(&db, Some(0), "[[ ]] |- A = A {{ A : 2 }}"), Err(SessionError::NotOpen(0))));
    }

    #[test]
    fn finished_proof_exports_and_verifies() {
        let db = Database::parse(SRC).unwrap();
        let mut s = session(&db);
        assert!(matches!(s.export(&db, ExportFormat::Mm, None), Err(SessionError::NotProved)));
        s.apply(&db, None, "[[ |- A = B |- B = C ]] |- A = C {{ A : 2 }} {{ B : 2 }} {{ C : ( 1 + 1 ) }}")
            .unwrap();
        s.apply(&db, None, "[[ ]] |- A = A {{ A : 2 }}").unwrap();
        s.apply(&db, None, "[[ ]] |- 2 = ( 1 + 1 )").unwrap();
        assert!(s.proved());
        let block = s.export(&db, ExportFormat::Mm, Some("two")).unwrap();
        let rebuilt = Database::parse(&format!("{SRC}{block}")).unwrap();
        assert_eq!(mmprove_core::verify_database(&rebuilt, &Default::default()).verified, 1);
        assert_eq!(s.export(&db, ExportFormat::Jsonl, None).unwrap().lines().count(), 3);
    }
}
