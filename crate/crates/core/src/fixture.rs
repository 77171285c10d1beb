//! Hand-transcribed proofs: one line per step, `+ label | statement`, read
//! bottom-up. A step's children are the lines one level deeper directly
//! above it, in hypothesis order. Substitutions are inferred by matching.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::database::{Assertion, AssertionId, Database, Expr, Sym};
use crate::proof::ProofTree;
use crate::term::{match_term, parse_term, Term};
use crate::verify::ProofContext;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureLine {
    pub depth: usize,
    pub label: String,
    pub statement: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FixtureError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("`{label}`: {msg}")]
    Statement { label: String, msg: String },
    #[error("`{label}` does not match its goal or children")]
    NoMatch { label: String },
    #[error("`{label}`: variable `{var}` is not determined by the goal and children")]
    Unbound { label: String, var: String },
    #[error("`{label}` expects {expected} children, found {found}")]
    Arity { label: String, expected: usize, found: usize },
    #[error("expected a single root, found {0}")]
    Roots(usize),
}

/// Reads a transcription. Blank lines and lines starting with `#` are
/// skipped; depth is the number of spaces before `+`.
pub fn parse_fixture(text: &str) -> Result<Vec<FixtureLine>, FixtureError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let trimmed = raw.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let depth = raw.len() - trimmed.len();
        let err = |msg: &str| FixtureError::Syntax {
            line: i + 1,
            msg: msg.to_string(),
        };
        let rest = trimmed.strip_prefix('+').ok_or_else(|| err("expected `+`"))?;
        let (label, statement) = rest.split_once('|').ok_or_else(|| err("expected `|`"))?;
        let label = label.trim();
        if label.is_empty() {
            return Err(err("empty label"));
        }
        out.push(FixtureLine {
            depth,
            label: label.to_string(),
            statement: crate::text::normalize(statement),
        });
    }
    Ok(out)
}

/// Builds the proof tree of `ctx`'s conclusion from a transcription.
pub fn build_tree(db: &Database, ctx: &ProofContext, lines: &[FixtureLine]) -> Result<ProofTree, FixtureError> {
    let essentials = ctx.essential_indices(db);
    let mut stack: Vec<(usize, ProofTree, Expr)> = Vec::new();
    for line in lines {
        let expr = statement_expr(db, &line.label, &line.statement)?;
        let mut children = Vec::new();
        while matches!(stack.last(), Some((d, _, _)) if *d == line.depth + 1) {
            children.push(stack.pop().unwrap());
        }
        children.reverse();
        let hyp = ctx
            .hyp_labels
            .iter()
            .position(|l| *l == line.label)
            .and_then(|i| essentials.iter().position(|e| *e == i));
        let tree = match hyp {
            Some(k) => {
                if !children.is_empty() {
                    return Err(FixtureError::Arity {
                        label: line.label.clone(),
                        expected: 0,
                        found: children.len(),
                    });
                }
                if ctx.hyps[essentials[k]] != expr {
                    return Err(FixtureError::NoMatch {
                        label: line.label.clone(),
                    });
                }
                ProofTree::Hyp(k)
            }
            None => {
                let a = db
                    .assertion_by_label(&line.label)
                    .ok_or_else(|| FixtureError::UnknownLabel(line.label.clone()))?;
                let child_exprs: Vec<Expr> = children.iter().map(|c| c.2.clone()).collect();
                let subst = infer_substitution(db, a, &expr, &child_exprs)?;
                ProofTree::step(AssertionId(a.index as u32), subst, children.into_iter().map(|c| c.1).collect(), expr.clone())
            }
        };
        stack.push((line.depth, tree, expr));
    }
    if stack.len() != 1 {
        return Err(FixtureError::Roots(stack.len()));
    }
    let (_, tree, expr) = stack.pop().unwrap();
    if expr != ctx.conclusion {
        return Err(FixtureError::NoMatch {
            label: lines.last().map(|l| l.label.clone()).unwrap_or_default(),
        });
    }
    Ok(tree)
}

fn statement_expr(db: &Database, label: &str, text: &str) -> Result<Expr, FixtureError> {
    let err = |msg: String| FixtureError::Statement {
        label: label.to_string(),
        msg,
    };
    let syms = db.symbols_of(text).map_err(err)?;
    let (tc, body) = syms.split_first().ok_or_else(|| err("empty statement".into()))?;
    Ok(Expr::new(*tc, body.to_vec()))
}

fn parse_expr(db: &Database, label: &str, e: &Expr) -> Result<Term, FixtureError> {
    parse_term(db, db.parse_typecode(e.typecode), &e.body).map_err(|x| FixtureError::Statement {
        label: label.to_string(),
        msg: x.to_string(),
    })
}

/// Matches an assertion's hypotheses and conclusion against concrete
/// expressions, returning the mandatory-variable images in frame order.
pub fn infer_substitution(
    db: &Database,
    a: &Assertion,
    goal: &Expr,
    children: &[Expr],
) -> Result<Vec<(Sym, Vec<Sym>)>, FixtureError> {
    let hyps: Vec<&Expr> = db.essential_hyps(a).map(|h| &h.expr).collect();
    if hyps.len() != children.len() {
        return Err(FixtureError::Arity {
            label: a.label.clone(),
            expected: hyps.len(),
            found: children.len(),
        });
    }
    let mut pairs = vec![(&a.expr, goal)];
    pairs.extend(hyps.into_iter().zip(children));
    let mut targets = Vec::new();
    let mut patterns = Vec::new();
    for (p, t) in &pairs {
        if p.typecode != t.typecode {
            return Err(FixtureError::NoMatch {
                label: a.label.clone(),
            });
        }
        patterns.push(parse_expr(db, &a.label, p)?);
        targets.push(parse_expr(db, &a.label, t)?);
    }
    let mut binds = BTreeMap::new();
    for (p, t) in patterns.iter().zip(&targets) {
        if !match_term(p, t, &mut binds) {
            return Err(FixtureError::NoMatch {
                label: a.label.clone(),
            });
        }
    }
    db.mandatory_vars(a)
        .into_iter()
        .map(|(v, _)| {
            binds
                .get(&v)
                .map(|t| (v, t.tokens(db)))
                .ok_or_else(|| FixtureError::Unbound {
                    label: a.label.clone(),
                    var: db.sym_text(v).to_string(),
                })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proof::{proof_text, ProofFormat};
    use crate::verify::replay;

    const SRC: &str = "$c ( ) -> wff |- $. $v ph ps ch $.\n\
        wph $f wff ph $. wps $f wff ps $. wch $f wff ch $.\n\
        wi $a wff ( ph -> ps ) $.\n\
        ${ min $e |- ph $. maj $e |- ( ph -> ps ) $. ax-mp $a |- ps $. $}\n\
        ax-1 $a |- ( ph -> ( ps -> ph ) ) $.\n\
        ${ a1i.1 $e |- ph $. a1i $p |- ( ps -> ph ) $= ? $. $}\n";

    #[test]
    fn builds_a1i_from_its_transcription() {
        let db = Database::parse(SRC).unwrap();
        let text = " + a1i.1 | |- ph\n + ax-1 | |- ( ph -> ( ps -> ph ) )\n+ ax-mp | |- ( ps -> ph )\n";
        let lines = parse_fixture(text).unwrap();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0].depth, 1);
        let a = db.assertion_by_label("a1i").unwrap();
        let ctx = ProofContext::for_assertion(&db, a);
        let tree = build_tree(&db, &ctx, &lines).unwrap();
        assert_eq!(tree.step_count(), 2);
        let text = proof_text(&db, &ctx, &tree, ProofFormat::Normal).unwrap();
        assert_eq!(
            text.split_whitespace().collect::<Vec<_>>(),
            ["wph", "wps", "wph", "wi", "a1i.1", "wph", "wps", "ax-1", "ax-mp"]
        );
        let source = crate::database::ProofSource::from_text(&text).unwrap();
        let steps = crate::verify::resolve_proof(&db, &ctx, &source).unwrap();
        replay(&db, &ctx, &steps).unwrap();
    }

    #[test]
    fn rejects_unbound_and_mismatched_steps() {
        let db = Database::parse(SRC).unwrap();
        let a = db.assertion_by_label("a1i").unwrap();
        let ctx = ProofContext::for_assertion(&db, a);
        let bad = parse_fixture(" + a1i.1 | |- ph\n+ ax-mp | |- ( ps -> ph )\n").unwrap();
        assert!(matches!(build_tree(&db, &ctx, &bad), Err(FixtureError::Arity { .. })));
        let wrong = parse_fixture(" + a1i.1 | |- ph\n + ax-1 | |- ( ph -> ( ps -> ps ) )\n+ ax-mp | |- ( ps -> ph )\n").unwrap();
        assert!(matches!(build_tree(&db, &ctx, &wrong), Err(FixtureError::NoMatch { .. })));
        assert!(parse_fixture("ax-1 | |- ph").is_err());
    }
}
