//! Applies library assertions with explicit substitutions, checking each
//! child against the hypothesis it is meant to prove.

use std::collections::HashMap;

use mmprove_core::database::{AssertionId, Database, Expr, Sym};
use mmprove_core::term::substitute_tokens;
use mmprove_core::ProofTree;

use crate::GenError;

pub struct ProofBuilder<'a> {
    db: &'a Database,
    hyps: Vec<Expr>,
    memo: HashMap<String, ProofTree>,
}

impl<'a> ProofBuilder<'a> {
    pub fn new(db: &'a Database) -> Self {
        ProofBuilder {
            db,
            hyps: Vec::new(),
            memo: HashMap::new(),
        }
    }

    pub fn db(&self) -> &'a Database {
        self.db
    }

    /// Sets the essential hypotheses of the statement under construction.
    pub fn set_hyps(&mut self, hyps: Vec<Expr>) {
        self.hyps = hyps;
        self.memo.clear();
    }

    pub fn hyps(&self) -> &[Expr] {
        &self.hyps
    }

    pub fn expr(&self, text: &str) -> Result<Expr, GenError> {
        let syms = self.db.symbols_of(text).map_err(|msg| GenError::Step {
            label: "<statement>".into(),
            msg,
        })?;
        let (tc, body) = syms.split_first().ok_or_else(|| GenError::Step {
            label: "<statement>".into(),
            msg: "empty statement".into(),
        })?;
        Ok(Expr::new(*tc, body.to_vec()))
    }

    pub fn conclusion<'t>(&'t self, t: &'t ProofTree) -> &'t Expr {
        match t {
            ProofTree::Hyp(k) => &self.hyps[*k],
            ProofTree::Step(s) => &s.expr,
        }
    }

    pub fn render(&self, t: &ProofTree) -> String {
        self.db.render_expr(self.conclusion(t))
    }

    /// A previously built proof of `statement`, if any.
    pub fn cached(&self, statement: &str) -> Option<ProofTree> {
        self.memo.get(statement).cloned()
    }

    /// Applies `label` with `images` (variable name, term text) to proofs of
    /// its essential hypotheses, in order.
    pub fn apply(&mut self, label: &str, images: &[(&str, &str)], children: Vec<ProofTree>) -> Result<ProofTree, GenError> {
        let db = self.db;
        let a = db
            .assertion_by_label(label)
            .ok_or_else(|| GenError::UnknownLabel(label.to_string()))?;
        let err = |msg: String| GenError::Step {
            label: label.to_string(),
            msg,
        };
        let mut subst: Vec<(Sym, Vec<Sym>)> = Vec::new();
        for (v, _) in db.mandatory_vars(a) {
            let name = db.sym_text(v);
            let (_, text) = images
                .iter()
                .find(|(n, _)| *n == name)
                .ok_or_else(|| err(format!("no image for `{name}`")))?;
            subst.push((v, db.symbols_of(text).map_err(err)?));
        }
        let image = |s: Sym| subst.iter().find(|(v, _)| *v == s).map(|(_, b)| b.as_slice());
        let hyps: Vec<Expr> = db
            .essential_hyps(a)
            .map(|h| Expr::new(h.expr.typecode, substitute_tokens(&h.expr.body, image)))
            .collect();
        if hyps.len() != children.len() {
            return Err(err(format!("expects {} children, got {}", hyps.len(), children.len())));
        }
        for (h, c) in hyps.iter().zip(&children) {
            if h != self.conclusion(c) {
                return Err(err(format!(
                    "child proves `{}` where `{}` is needed",
                    self.render(c),
                    db.render_expr(h)
                )));
            }
        }
        let expr = Expr::new(a.expr.typecode, substitute_tokens(&a.expr.body, image));
        let key = db.render_expr(&expr);
        let tree = ProofTree::step(AssertionId(a.index as u32), subst, children, expr);
        self.memo.entry(key).or_insert_with(|| tree.clone());
        Ok(tree)
    }
}
