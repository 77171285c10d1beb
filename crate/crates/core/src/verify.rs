//! Stack-machine proof replay.

use crate::compressed::{self, RawStep};
use crate::database::{dv_pair, Assertion, AssertionId, Database, Expr, HypId, HypKind, LabelRef, ProofSource, Sym};
use std::collections::BTreeSet;

use crate::error::{ExportError, VerifyError};
use crate::term::{check_dv, substitute_tokens, vars_of};

/// A resolved proof step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProofStep {
    /// Index into the context's mandatory hypotheses.
    Hyp(usize),
    /// A floating hypothesis outside the mandatory frame (dummy variable).
    Float(HypId),
    Assert(AssertionId),
    /// Recall of the k-th saved step.
    Saved(usize),
    Save,
    Unknown,
}

/// What a proof is checked against.
#[derive(Clone, Debug)]
pub struct ProofContext {
    pub label: String,
    /// Mandatory hypotheses, in frame order.
    pub hyps: Vec<Expr>,
    pub hyp_labels: Vec<String>,
    /// Database ids of the mandatory hypotheses, when they come from the database.
    pub hyp_ids: Vec<Option<HypId>>,
    pub conclusion: Expr,
    /// Only assertions with a smaller index may be cited.
    pub ceiling: usize,
    /// Disjoint-variable pairs available to the proof.
    pub dv: Vec<(Sym, Sym)>,
    /// Statement sequence used to resolve optional floating hypotheses.
    pub seq: usize,
}

impl ProofContext {
    pub fn for_assertion(db: &Database, a: &Assertion) -> ProofContext {
        ProofContext {
            label: a.label.clone(),
            hyps: a.frame.hyps.iter().map(|h| db.hyp(*h).expr.clone()).collect(),
            hyp_labels: a.frame.hyps.iter().map(|h| db.hyp(*h).label.clone()).collect(),
            hyp_ids: a.frame.hyps.iter().map(|h| Some(*h)).collect(),
            conclusion: a.expr.clone(),
            ceiling: a.index,
            dv: a.frame.scope_dv.as_ref().clone(),
            seq: a.seq,
        }
    }

    /// Context for a statement that is not in the database, proved after
    /// every existing assertion. Hypotheses are labeled `label.1`, `label.2`, ...
    pub fn fresh(
        db: &Database,
        label: &str,
        hyps: &[Expr],
        conclusion: &Expr,
        dv: &[(Sym, Sym)],
    ) -> Result<ProofContext, ExportError> {
        let mut vars = BTreeSet::new();
        for e in hyps.iter().chain(std::iter::once(conclusion)) {
            vars.extend(vars_of(db, &e.body));
        }
        let mut floats = Vec::new();
        for v in vars {
            floats.push(db.global_float(v).ok_or_else(|| ExportError::NoFloat(db.sym_text(v).to_string()))?);
        }
        floats.sort();
        let mut ctx = ProofContext {
            label: label.to_string(),
            hyps: floats.iter().map(|h| db.hyp(*h).expr.clone()).collect(),
            hyp_labels: floats.iter().map(|h| db.hyp(*h).label.clone()).collect(),
            hyp_ids: floats.iter().map(|h| Some(*h)).collect(),
            conclusion: conclusion.clone(),
            ceiling: db.assertions().len(),
            dv: dv.iter().map(|(a, b)| dv_pair(*a, *b)).collect(),
            seq: usize::MAX - 1,
        };
        for (i, h) in hyps.iter().enumerate() {
            ctx.hyps.push(h.clone());
            ctx.hyp_labels.push(format!("{label}.{}", i + 1));
            ctx.hyp_ids.push(None);
        }
        Ok(ctx)
    }

    /// Indices into `hyps` of the essential (non-syntax) hypotheses.
    pub fn essential_indices(&self, db: &Database) -> Vec<usize> {
        (0..self.hyps.len())
            .filter(|i| !db.is_syntax_typecode(self.hyps[*i].typecode))
            .collect()
    }

    /// Floating hypothesis step for a variable: a mandatory hypothesis when
    /// the frame has one, an optional float otherwise.
    pub fn float_step(&self, db: &Database, var: Sym) -> Option<ProofStep> {
        for (i, h) in self.hyp_ids.iter().enumerate() {
            if let Some(h) = h {
                if db.hyp(*h).variable() == Some(var) {
                    return Some(ProofStep::Hyp(i));
                }
            }
        }
        db.float_for(var, self.seq).map(ProofStep::Float)
    }
}

pub type NodeId = u32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Hyp(usize),
    Float(HypId),
    Assert { id: AssertionId, args: Vec<NodeId> },
    Unknown,
}

#[derive(Clone, Debug)]
pub struct Node {
    pub expr: Expr,
    pub kind: NodeKind,
}

/// Every stack entry created while replaying a proof. Saved steps share
/// nodes, so this is a DAG.
#[derive(Clone, Debug)]
pub struct Replay {
    pub nodes: Vec<Node>,
    pub root: NodeId,
}

/// Resolves proof text labels against a context. Hypotheses of a fresh
/// context resolve by their context labels.
pub fn resolve_proof(db: &Database, ctx: &ProofContext, proof: &ProofSource) -> Result<Vec<ProofStep>, VerifyError> {
    let resolve = |step: usize, label: &str| -> Result<ProofStep, VerifyError> {
        let unknown = || VerifyError::UnknownLabel {
            label: ctx.label.clone(),
            step,
            reference: label.to_string(),
        };
        if let Some(i) = (0..ctx.hyps.len()).find(|i| ctx.hyp_ids[*i].is_none() && ctx.hyp_labels[*i] == label) {
            return Ok(ProofStep::Hyp(i));
        }
        match db.label(label).ok_or_else(unknown)? {
            LabelRef::Hyp(h) => {
                if let Some(i) = ctx.hyp_ids.iter().position(|x| *x == Some(h)) {
                    return Ok(ProofStep::Hyp(i));
                }
                let hyp = db.hyp(h);
                if hyp.kind == HypKind::Floating && hyp.in_scope_at(ctx.seq) {
                    Ok(ProofStep::Float(h))
                } else {
                    Err(unknown())
                }
            }
            LabelRef::Assertion(a) => Ok(ProofStep::Assert(a)),
        }
    };
    match proof {
        ProofSource::Normal(labels) => labels
            .iter()
            .enumerate()
            .map(|(i, l)| if l == "?" { Ok(ProofStep::Unknown) } else { resolve(i, l) })
            .collect(),
        ProofSource::Compressed { labels, letters } => {
            let listed: Vec<ProofStep> = labels
                .iter()
                .map(|l| match resolve(0, l)? {
                    ProofStep::Hyp(_) => Err(VerifyError::Compressed {
                        label: ctx.label.clone(),
                        step: 0,
                        msg: format!("mandatory hypothesis `{l}` in label list"),
                    }),
                    s => Ok(s),
                })
                .collect::<Result<_, _>>()?;
            let raw = compressed::decompress(ctx.hyps.len(), listed.len(), letters).map_err(|e| {
                VerifyError::Compressed {
                    label: ctx.label.clone(),
                    step: e.step,
                    msg: e.msg,
                }
            })?;
            Ok(raw
                .into_iter()
                .map(|r| match r {
                    RawStep::Mandatory(i) => ProofStep::Hyp(i),
                    RawStep::Listed(j) => listed[j],
                    RawStep::Saved(k) => ProofStep::Saved(k),
                    RawStep::Save => ProofStep::Save,
                    RawStep::Unknown => ProofStep::Unknown,
                })
                .collect())
        }
    }
}

/// Decodes a stored proof into resolved steps.
pub fn proof_steps(db: &Database, a: &Assertion) -> Result<Vec<ProofStep>, VerifyError> {
    let proof = a.proof.as_ref().ok_or_else(|| VerifyError::NoProof { label: a.label.clone() })?;
    resolve_proof(db, &ProofContext::for_assertion(db, a), proof)
}

/// Verifies a stored `$p` proof.
pub fn verify_proof(db: &Database, a: &Assertion) -> Result<Replay, VerifyError> {
    let ctx = ProofContext::for_assertion(db, a);
    let proof = a.proof.as_ref().ok_or_else(|| VerifyError::NoProof { label: a.label.clone() })?;
    let steps = resolve_proof(db, &ctx, proof)?;
    replay(db, &ctx, &steps)
}

/// Replays `steps` against `ctx`, checking the final conclusion.
pub fn replay(db: &Database, ctx: &ProofContext, steps: &[ProofStep]) -> Result<Replay, VerifyError> {
    let mut nodes: Vec<Node> = Vec::with_capacity(steps.len());
    let mut stack: Vec<NodeId> = Vec::new();
    let mut saved: Vec<NodeId> = Vec::new();
    let label = || ctx.label.clone();
    for (i, step) in steps.iter().enumerate() {
        match *step {
            ProofStep::Hyp(h) => {
                let expr = ctx.hyps.get(h).cloned().ok_or_else(|| VerifyError::UnknownLabel {
                    label: label(),
                    step: i,
                    reference: format!("#{h}"),
                })?;
                nodes.push(Node {
                    expr,
                    kind: NodeKind::Hyp(h),
                });
                stack.push(nodes.len() as NodeId - 1);
            }
            ProofStep::Float(h) => {
                nodes.push(Node {
                    expr: db.hyp(h).expr.clone(),
                    kind: NodeKind::Float(h),
                });
                stack.push(nodes.len() as NodeId - 1);
            }
            ProofStep::Saved(k) => {
                let n = *saved.get(k).ok_or_else(|| VerifyError::Compressed {
                    label: label(),
                    step: i,
                    msg: format!("no saved step {}", k + 1),
                })?;
                stack.push(n);
            }
            ProofStep::Save => {
                let top = *stack.last().ok_or(VerifyError::StackUnderflow { label: label(), step: i })?;
                saved.push(top);
            }
            ProofStep::Unknown => {
                return Err(VerifyError::Incomplete { label: label(), step: i });
            }
            ProofStep::Assert(id) => {
                let a = db.assertion(id);
                if a.index >= ctx.ceiling {
                    return Err(VerifyError::ForwardReference {
                        label: label(),
                        step: i,
                        reference: a.label.clone(),
                    });
                }
                let k = a.frame.hyps.len();
                if stack.len() < k {
                    return Err(VerifyError::StackUnderflow { label: label(), step: i });
                }
                let args: Vec<NodeId> = stack.split_off(stack.len() - k);
                let expr = apply_assertion(db, ctx, a, &args, &nodes, i)?;
                nodes.push(Node {
                    expr,
                    kind: NodeKind::Assert { id, args },
                });
                stack.push(nodes.len() as NodeId - 1);
            }
        }
    }
    if stack.len() != 1 {
        return Err(VerifyError::StackNotSingleton {
            label: label(),
            count: stack.len(),
        });
    }
    let root = stack[0];
    if nodes[root as usize].expr != ctx.conclusion {
        return Err(VerifyError::WrongConclusion {
            label: label(),
            expected: db.render_expr(&ctx.conclusion),
            found: db.render_expr(&nodes[root as usize].expr),
        });
    }
    Ok(Replay { nodes, root })
}

fn apply_assertion(
    db: &Database,
    ctx: &ProofContext,
    a: &Assertion,
    args: &[NodeId],
    nodes: &[Node],
    step: usize,
) -> Result<Expr, VerifyError> {
    let mut binds: Vec<(Sym, &[Sym])> = Vec::new();
    let mismatch = |msg: String| VerifyError::Unification {
        label: ctx.label.clone(),
        step,
        reference: a.label.clone(),
        msg,
    };
    for (h, arg) in a.frame.hyps.iter().zip(args) {
        let hyp = db.hyp(*h);
        if let Some(v) = hyp.variable() {
            let e = &nodes[*arg as usize].expr;
            if e.typecode != hyp.expr.typecode {
                return Err(mismatch(format!(
                    "`{}` needs typecode `{}`, stack has `{}`",
                    hyp.label,
                    db.sym_text(hyp.expr.typecode),
                    db.render_expr(e)
                )));
            }
            binds.push((v, &e.body));
        }
    }
    let image = |s: Sym| binds.iter().find(|(v, _)| *v == s).map(|(_, b)| *b);
    for (h, arg) in a.frame.hyps.iter().zip(args) {
        let hyp = db.hyp(*h);
        if hyp.kind == HypKind::Essential {
            let want = substitute_tokens(&hyp.expr.body, image);
            let have = &nodes[*arg as usize].expr;
            if have.typecode != hyp.expr.typecode || have.body != want {
                return Err(mismatch(format!(
                    "`{}` expects `{} {}`, stack has `{}`",
                    hyp.label,
                    db.sym_text(hyp.expr.typecode),
                    db.render(&want),
                    db.render_expr(have)
                )));
            }
        }
    }
    let violations = check_dv(db, &a.frame.dv, image, &ctx.dv);
    if !violations.is_empty() {
        return Err(VerifyError::DistinctVariable {
            label: ctx.label.clone(),
            step,
            reference: a.label.clone(),
            pairs: violations
                .iter()
                .map(|v| v.describe(db))
                .collect::<Vec<_>>()
                .join("; "),
        });
    }
    Ok(Expr::new(a.expr.typecode, substitute_tokens(&a.expr.body, image)))
}

#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    /// Also require every statement to have exactly one parse tree.
    pub check_grammar: bool,
    /// Worker threads; 0 or 1 runs inline.
    pub threads: usize,
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub theorems: usize,
    pub verified: usize,
    pub failures: Vec<VerifyError>,
}

/// Checks that every hypothesis and conclusion of `a` parses uniquely.
pub fn check_statement_grammar(db: &Database, a: &Assertion) -> Result<(), VerifyError> {
    if !db.is_logical(a) {
        return Ok(());
    }
    let mut exprs: Vec<&Expr> = db.essential_hyps(a).map(|h| &h.expr).collect();
    exprs.push(&a.expr);
    for e in exprs {
        db.grammar()
            .parse(db, e.typecode, &e.body)
            .map_err(|err| VerifyError::Grammar {
                label: a.label.clone(),
                msg: err.to_string(),
            })?;
    }
    Ok(())
}

fn verify_one(db: &Database, a: &Assertion, opts: &VerifyOptions) -> Result<(), VerifyError> {
    if opts.check_grammar {
        check_statement_grammar(db, a)?;
    }
    verify_proof(db, a).map(|_| ())
}

/// Verifies every `$p` statement.
pub fn verify_database(db: &Database, opts: &VerifyOptions) -> VerifyReport {
    let theorems: Vec<&Assertion> = db.theorems().collect();
    let mut report = VerifyReport {
        theorems: theorems.len(),
        ..VerifyReport::default()
    };
    let threads = opts.threads.max(1);
    let results: Vec<Result<(), VerifyError>> = if threads == 1 {
        theorems.iter().map(|a| verify_one(db, a, opts)).collect()
    } else {
        let chunk = theorems.len().div_ceil(threads).max(1);
        std::thread::scope(|s| {
            let handles: Vec<_> = theorems
                .chunks(chunk)
                .map(|c| s.spawn(move || c.iter().map(|a| verify_one(db, a, opts)).collect::<Vec<_>>()))
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("verifier thread panicked"))
                .collect()
        })
    };
    if opts.check_grammar {
        for a in db.assertions() {
            if a.proof.is_none() {
                if let Err(e) = check_statement_grammar(db, a) {
                    report.failures.push(e);
                }
            }
        }
    }
    for r in results {
        match r {
            Ok(()) => report.verified += 1,
            Err(e) => report.failures.push(e),
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const PROP: &str = "$c ( ) -> wff |- $. $v ph ps ch $.\n\
        wph $f wff ph $. wps $f wff ps $. wch $f wff ch $.\n\
        wi $a wff ( ph -> ps ) $.\n\
        ${ min $e |- ph $. maj $e |- ( ph -> ps ) $. ax-mp $a |- ps $. $}\n\
        ax-1 $a |- ( ph -> ( ps -> ph ) ) $.\n\
        ax-2 $a |- ( ( ph -> ( ps -> ch ) ) -> ( ( ph -> ps ) -> ( ph -> ch ) ) ) $.\n\
        id $p |- ( ph -> ph ) $= wph wph wph wi wi wph wph wi wph wph ax-1 \
        wph wph wph wi wph wi wi wph wph wph wi wi wph wph wi wi wph wph wph wi ax-1 \
        wph wph wph wi wph ax-2 ax-mp ax-mp $.\n";

    #[test]
    fn normal_proof_verifies() {
        let db = Database::parse(PROP).unwrap();
        verify_proof(&db, db.assertion_by_label("id").unwrap()).unwrap();
    }

    #[test]
    fn deleting_a_label_breaks_the_proof() {
        let db = Database::parse(PROP).unwrap();
        let a = db.assertion_by_label("id").unwrap();
        let ctx = ProofContext::for_assertion(&db, a);
        let steps = proof_steps(&db, a).unwrap();
        for i in 0..steps.len() {
            let mut s = steps.clone();
            s.remove(i);
            assert!(replay(&db, &ctx, &s).is_err(), "deleting step {i} accepted");
        }
    }

    #[test]
    fn forward_reference_is_rejected() {
        let src = PROP.replace("ax-1 $a", "ax-1x $a") + "ax-1 $a |- ( ph -> ( ps -> ph ) ) $.\n";
        let db = Database::parse(&src).unwrap();
        let err = verify_proof(&db, db.assertion_by_label("id").unwrap()).unwrap_err();
        assert!(matches!(err, VerifyError::ForwardReference { .. }), "{err}");
    }

    #[test]
    fn database_report_counts() {
        let db = Database::parse(PROP).unwrap();
        let r = verify_database(&db, &VerifyOptions { check_grammar: true, threads: 2 });
        assert_eq!(r.theorems, 1);
        assert!(r.failures.is_empty(), "{:?}", r.failures);
        assert_eq!(r.verified, 1);
    }
}
