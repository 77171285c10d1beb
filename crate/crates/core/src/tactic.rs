//! Goals and tactics in their canonical text form, and applying a tactic to
//! a goal through the kernel.

use std::fmt;

use thiserror::Error;

use crate::database::{dv_pair, Assertion, AssertionId, Database, Expr, Sym};
use crate::term::{check_dv, substitute_tokens};
use crate::text::{self, goal_text, tactic_text};

/// A statement under proof: essential hypotheses, conclusion, and the
/// disjoint-variable pairs its context provides.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Goal {
    pub hyps: Vec<Expr>,
    pub concl: Expr,
    pub dv: Vec<(Sym, Sym)>,
}

impl Goal {
    pub fn new(hyps: Vec<Expr>, concl: Expr) -> Goal {
        Goal {
            hyps,
            concl,
            dv: Vec::new(),
        }
    }

    /// The goal stated by a database assertion.
    pub fn of_assertion(db: &Database, a: &Assertion) -> Goal {
        Goal {
            hyps: db.essential_hyps(a).map(|h| h.expr.clone()).collect(),
            concl: a.expr.clone(),
            dv: a.frame.scope_dv.as_ref().clone(),
        }
    }

    /// A subgoal in the same context.
    pub fn with_conclusion(&self, concl: Expr) -> Goal {
        Goal {
            hyps: self.hyps.clone(),
            concl,
            dv: self.dv.clone(),
        }
    }

    pub fn text(&self, db: &Database) -> String {
        let hyps: Vec<String> = self.hyps.iter().map(|h| db.render_expr(h)).collect();
        goal_text(&hyps, &db.render_expr(&self.concl))
    }

    /// Parses `[[ |- h ... ]] |- concl`, checking every expression against
    /// the grammar.
    pub fn parse(db: &Database, s: &str) -> Result<Goal, TacticError> {
        let tp = db
            .provable_typecode()
            .ok_or_else(|| TacticError::Syntax("database has no `|-` typecode".into()))?;
        let st = text::parse_statement(s, db.sym_text(tp)).map_err(|e| TacticError::Syntax(e.to_string()))?;
        let mut exprs = Vec::new();
        for toks in st.hyps.iter().chain(std::iter::once(&st.concl)) {
            let syms: Vec<Sym> = toks
                .iter()
                .map(|t| db.sym(t).ok_or_else(|| TacticError::Syntax(format!("unknown token `{t}`"))))
                .collect::<Result<_, _>>()?;
            let e = Expr::new(syms[0], syms[1..].to_vec());
            db.grammar()
                .parse(db, e.typecode, &e.body)
                .map_err(|err| TacticError::Type {
                    var: String::new(),
                    msg: err.to_string(),
                })?;
            exprs.push(e);
        }
        let concl = exprs.pop().expect("statement has a conclusion");
        Ok(Goal::new(exprs, concl))
    }

    /// Index of the hypothesis equal to `e`, if any.
    pub fn hyp_index(&self, e: &Expr) -> Option<usize> {
        self.hyps.iter().position(|h| h == e)
    }
}

/// A theorem and an image for each of its mandatory variables, in frame order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Tactic {
    pub assertion: AssertionId,
    pub subst: Vec<(Sym, Vec<Sym>)>,
}

impl Tactic {
    pub fn image(&self, v: Sym) -> Option<&[Sym]> {
        self.subst.iter().find(|(w, _)| *w == v).map(|(_, b)| b.as_slice())
    }

    pub fn text(&self, db: &Database) -> String {
        let a = db.assertion(self.assertion);
        let pairs: Vec<(String, String)> = self
            .subst
            .iter()
            .map(|(v, b)| (db.sym_text(*v).to_string(), db.render(b)))
            .collect();
        tactic_text(&db.statement_text(a), &pairs)
    }

    /// The substituted essential hypotheses: the subgoals this tactic leaves.
    pub fn children(&self, db: &Database) -> Vec<Expr> {
        let a = db.assertion(self.assertion);
        db.essential_hyps(a)
            .map(|h| Expr::new(h.expr.typecode, substitute_tokens(&h.expr.body, |v| self.image(v))))
            .collect()
    }

    /// The substituted conclusion.
    pub fn conclusion(&self, db: &Database) -> Expr {
        let a = db.assertion(self.assertion);
        Expr::new(a.expr.typecode, substitute_tokens(&a.expr.body, |v| self.image(v)))
    }
}

/// Why a tactic was rejected. Each variant feeds a separate counter.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TacticError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("no theorem has statement `{0}`")]
    UnknownStatement(String),
    #[error("`{label}` is not before the library ceiling")]
    Ceiling { label: String },
    #[error("substitution for `{var}`: {msg}")]
    Type { var: String, msg: String },
    #[error("conclusion `{found}` does not match goal `{expected}`")]
    Mismatch { expected: String, found: String },
    #[error("distinct variable violation: {0}")]
    Dv(String),
}

impl TacticError {
    /// Stable short name used for counters.
    pub fn kind(&self) -> &'static str {
        match self {
            TacticError::Syntax(_) => "parse",
            TacticError::UnknownStatement(_) => "unknown",
            TacticError::Ceiling { .. } => "ceiling",
            TacticError::Type { .. } => "type",
            TacticError::Mismatch { .. } => "mismatch",
            TacticError::Dv(_) => "dv",
        }
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} hyps, conclusion of {} tokens", self.hyps.len(), self.concl.body.len())
    }
}

/// Resolves a statement text to the earliest assertion below `ceiling`.
pub fn lookup(db: &Database, statement: &str, ceiling: Option<usize>) -> Result<AssertionId, TacticError> {
    let ids = db.lookup_statement(statement);
    if ids.is_empty() {
        return Err(TacticError::UnknownStatement(statement.to_string()));
    }
    let limit = ceiling.unwrap_or(usize::MAX);
    ids.iter()
        .copied()
        .filter(|id| id.index() < limit)
        .min()
        .ok_or_else(|| TacticError::Ceiling {
            label: db.assertion(ids[0]).label.clone(),
        })
}

/// Parses tactic text: looks the statement up and grammar-checks every
/// substitution term at its variable's typecode.
pub fn parse_tactic(db: &Database, s: &str, ceiling: Option<usize>) -> Result<Tactic, TacticError> {
    let tp = db
        .provable_typecode()
        .ok_or_else(|| TacticError::Syntax("database has no `|-` typecode".into()))?;
    let parsed = text::parse_tactic_text(s, db.sym_text(tp)).map_err(|e| TacticError::Syntax(e.to_string()))?;
    let id = lookup(db, &parsed.statement.canonical(), ceiling)?;
    let a = db.assertion(id);
    let mandatory = db.mandatory_vars(a);
    let mut subst: Vec<Option<Vec<Sym>>> = vec![None; mandatory.len()];
    for (var, toks) in &parsed.subst {
        let pos = mandatory
            .iter()
            .position(|(v, _)| db.sym_text(*v) == *var)
            .ok_or_else(|| TacticError::Type {
                var: var.to_string(),
                msg: format!("not a variable of `{}`", a.label),
            })?;
        if subst[pos].is_some() {
            return Err(TacticError::Syntax(format!("`{var}` bound twice")));
        }
        let body: Vec<Sym> = toks
            .iter()
            .map(|t| db.sym(t).ok_or_else(|| TacticError::Syntax(format!("unknown token `{t}`"))))
            .collect::<Result<_, _>>()?;
        db.grammar()
            .parse(db, mandatory[pos].1, &body)
            .map_err(|e| TacticError::Type {
                var: var.to_string(),
                msg: e.to_string(),
            })?;
        subst[pos] = Some(body);
    }
    let mut out = Vec::with_capacity(mandatory.len());
    for ((v, _), b) in mandatory.iter().zip(subst) {
        let b = b.ok_or_else(|| TacticError::Type {
            var: db.sym_text(*v).to_string(),
            msg: "unbound".into(),
        })?;
        out.push((*v, b));
    }
    Ok(Tactic {
        assertion: id,
        subst: out,
    })
}

/// Checks a tactic against a goal and returns the subgoal expressions.
pub fn apply_tactic(db: &Database, goal: &Goal, t: &Tactic) -> Result<Vec<Expr>, TacticError> {
    let concl = t.conclusion(db);
    if concl != goal.concl {
        return Err(TacticError::Mismatch {
            expected: db.render_expr(&goal.concl),
            found: db.render_expr(&concl),
        });
    }
    let a = db.assertion(t.assertion);
    let violations = check_dv(db, &a.frame.dv, |v| t.image(v), &goal.dv);
    if !violations.is_empty() {
        return Err(TacticError::Dv(
            violations.iter().map(|v| v.describe(db)).collect::<Vec<_>>().join("; "),
        ));
    }
    Ok(t.children(db))
}

/// Normalizes a goal's disjoint-variable list.
pub fn normalize_dv(pairs: &[(Sym, Sym)]) -> Vec<(Sym, Sym)> {
    let mut v: Vec<_> = pairs.iter().map(|(a, b)| dv_pair(*a, *b)).collect();
    v.sort();
    v.dedup();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    const SRC: &str = "$c wff class |- ( ) + = 1 2 3 4 5 $. $v A B C $.\n\
        cA $f class A $. cB $f class B $. cC $f class C $.\n\
        c1 $a class 1 $. c2 $a class 2 $. c3 $a class 3 $. c4 $a class 4 $. c5 $a class 5 $.\n\
        cadd $a class ( A + B ) $. weq $a wff A = B $.\n\
        df-5 $a |- 5 = ( 4 + 1 ) $.\n\
        ${ eqtr4i.1 $e |- A = B $. eqtr4i.2 $e |- C = B $. eqtr4i $a |- A = C $. $}\n";

    #[test]
    fn transitivity_step_yields_two_children() {
        let db = Database::parse(SRC).unwrap();
        let goal = Goal::parse(&db, "[[ ]] |- ( 3 + 2 ) = 5").unwrap();
        let t = parse_tactic(
            &db,
            "[[ |- A = B |- C = B ]] |- A = C {{ A : ( 3 + 2 ) }} {{ B : ( 4 + 1 ) }} {{ C : 5 }}",
            None,
        )
        .unwrap();
        let kids = apply_tactic(&db, &goal, &t).unwrap();
        let texts: Vec<_> = kids.iter().map(|e| db.render_expr(e)).collect();
        assert_eq!(texts, ["|- ( 3 + 2 ) = ( 4 + 1 )", "|- 5 = ( 4 + 1 )"]);
        assert_eq!(
            t.text(&db),
            "[[ |- A = B |- C = B ]] |- A = C {{ A : ( 3 + 2 ) }} {{ B : ( 4 + 1 ) }} {{ C : 5 }}"
        );
    }

    #[test]
    fn closing_step_has_no_children() {
        let db = Database::parse(SRC).unwrap();
        let goal = Goal::parse(&db, "[[ ]] |- 5 = ( 4 + 1 )").unwrap();
        let t = parse_tactic(&db, "[[ ]] |- 5 = ( 4 + 1 )", None).unwrap();
        assert!(apply_tactic(&db, &goal, &t).unwrap().is_empty());
    }

    #[test]
    fn error_kinds() {
        let db = Database::parse(SRC).unwrap();
        let goal = Goal::parse(&db, "[[ ]] |- ( 3 + 2 ) = 5").unwrap();
        assert_eq!(parse_tactic(&db, "[[ ]] |- 1 = 1", None).unwrap_err().kind(), "unknown");
        assert_eq!(parse_tactic(&db, "[[ ]] |- 5 = ( 4 + 1 ) {{", None).unwrap_err().kind(), "parse");
        assert_eq!(parse_tactic(&db, "[[ ]] |- 5 = ( 4 + 1 )", Some(0)).unwrap_err().kind(), "ceiling");
        let bad = "[[ |- A = B |- C = B ]] |- A = C {{ A : ( 3 + ) }} {{ B : 4 }} {{ C : 5 }}";
        assert_eq!(parse_tactic(&db, bad, None).unwrap_err().kind(), "type");
        let wrong = "[[ |- A = B |- C = B ]] |- A = C {{ A : 3 }} {{ B : 4 }} {{ C : 5 }}";
        let t = parse_tactic(&db, wrong, None).unwrap();
        assert_eq!(apply_tactic(&db, &goal, &t).unwrap_err().kind(), "mismatch");
    }
}
