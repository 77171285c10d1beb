//! Logical proof trees: built from a replay or by search, exported back to
//! `.mm` proof text.

use std::collections::HashMap;
use std::sync::Arc;

use crate::compressed::{self, RawStep};
use crate::database::{AssertionId, Database, Expr, HypKind, Sym};
use crate::error::ExportError;
use crate::term::Term;
use crate::verify::{NodeId, NodeKind, ProofContext, ProofStep, Replay};

/// A proof of a goal from the root statement's essential hypotheses.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ProofTree {
    /// The i-th essential hypothesis of the root statement.
    Hyp(usize),
    Step(Arc<TreeStep>),
}

/// One theorem application. `subst` lists the theorem's mandatory
/// variables in frame order; `children` proves its essential hypotheses.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TreeStep {
    pub assertion: AssertionId,
    pub subst: Vec<(Sym, Vec<Sym>)>,
    pub children: Vec<ProofTree>,
    pub expr: Expr,
}

impl ProofTree {
    pub fn step(assertion: AssertionId, subst: Vec<(Sym, Vec<Sym>)>, children: Vec<ProofTree>, expr: Expr) -> Self {
        ProofTree::Step(Arc::new(TreeStep {
            assertion,
            subst,
            children,
            expr,
        }))
    }

    /// Number of theorem applications, counting shared subtrees once per use.
    pub fn step_count(&self) -> usize {
        match self {
            ProofTree::Hyp(_) => 0,
            ProofTree::Step(s) => 1 + s.children.iter().map(ProofTree::step_count).sum::<usize>(),
        }
    }

    /// Calls `f` on every step, parents first, following every use.
    pub fn for_each_step(&self, f: &mut impl FnMut(&TreeStep)) {
        if let ProofTree::Step(s) = self {
            f(s);
            for c in &s.children {
                c.for_each_step(f);
            }
        }
    }

    /// Builds the logical tree of a replayed proof. Syntax steps are folded
    /// into the substitutions; shared replay nodes stay shared.
    pub fn from_replay(db: &Database, ctx: &ProofContext, replay: &Replay) -> ProofTree {
        let essentials = ctx.essential_indices(db);
        let mut memo: HashMap<NodeId, ProofTree> = HashMap::new();
        build(db, &essentials, replay, replay.root, &mut memo)
    }
}

fn build(
    db: &Database,
    essentials: &[usize],
    replay: &Replay,
    id: NodeId,
    memo: &mut HashMap<NodeId, ProofTree>,
) -> ProofTree {
    if let Some(t) = memo.get(&id) {
        return t.clone();
    }
    let node = &replay.nodes[id as usize];
    let tree = match &node.kind {
        NodeKind::Hyp(h) => ProofTree::Hyp(
            essentials
                .iter()
                .position(|e| e == h)
                .expect("logical node refers to an essential hypothesis"),
        ),
        NodeKind::Assert { id: aid, args } => {
            let a = db.assertion(*aid);
            let mut subst = Vec::new();
            let mut children = Vec::new();
            for (h, arg) in a.frame.hyps.iter().zip(args) {
                let hyp = db.hyp(*h);
                match hyp.kind {
                    HypKind::Floating => subst.push((
                        hyp.variable().expect("floating hypothesis has a variable"),
                        replay.nodes[*arg as usize].expr.body.clone(),
                    )),
                    HypKind::Essential => children.push(build(db, essentials, replay, *arg, memo)),
                }
            }
            ProofTree::step(*aid, subst, children, node.expr.clone())
        }
        NodeKind::Float(_) | NodeKind::Unknown => unreachable!("logical proofs end in hypotheses or assertions"),
    };
    memo.insert(id, tree.clone());
    tree
}

/// Hash-consed RPN DAG used for emission.
struct Rpn {
    nodes: Vec<(ProofStep, Vec<usize>)>,
    index: HashMap<(ProofStep, Vec<usize>), usize>,
    syntax: HashMap<(Sym, Vec<Sym>), usize>,
    trees: HashMap<*const TreeStep, usize>,
}

impl Rpn {
    fn new() -> Self {
        Rpn {
            nodes: Vec::new(),
            index: HashMap::new(),
            syntax: HashMap::new(),
            trees: HashMap::new(),
        }
    }

    fn intern(&mut self, step: ProofStep, children: Vec<usize>) -> usize {
        let key = (step, children);
        if let Some(i) = self.index.get(&key) {
            return *i;
        }
        self.nodes.push(key.clone());
        self.index.insert(key, self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    fn term(&mut self, db: &Database, ctx: &ProofContext, t: &Term) -> Result<usize, ExportError> {
        match t {
            Term::Var(v) => {
                let s = ctx
                    .float_step(db, *v)
                    .ok_or_else(|| ExportError::NoFloat(db.sym_text(*v).to_string()))?;
                Ok(self.intern(s, vec![]))
            }
            Term::App(l, ch) => {
                let ids = ch
                    .iter()
                    .map(|c| self.term(db, ctx, c))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(self.intern(ProofStep::Assert(*l), ids))
            }
        }
    }

    fn syntax(&mut self, db: &Database, ctx: &ProofContext, tc: Sym, body: &[Sym]) -> Result<usize, ExportError> {
        if let Some(i) = self.syntax.get(&(tc, body.to_vec())) {
            return Ok(*i);
        }
        let t = db.grammar().parse(db, tc, body)?;
        let id = self.term(db, ctx, &t)?;
        self.syntax.insert((tc, body.to_vec()), id);
        Ok(id)
    }

    fn tree(&mut self, db: &Database, ctx: &ProofContext, essentials: &[usize], t: &ProofTree) -> Result<usize, ExportError> {
        match t {
            ProofTree::Hyp(i) => {
                let h = *essentials.get(*i).ok_or(ExportError::BadHypothesis(*i))?;
                Ok(self.intern(ProofStep::Hyp(h), vec![]))
            }
            ProofTree::Step(s) => {
                let key = Arc::as_ptr(s);
                if let Some(i) = self.trees.get(&key) {
                    return Ok(*i);
                }
                let a = db.assertion(s.assertion);
                let mut children = s.children.iter();
                let mut ids = Vec::with_capacity(a.frame.hyps.len());
                for h in &a.frame.hyps {
                    let hyp = db.hyp(*h);
                    match hyp.variable() {
                        Some(v) => {
                            let body = s
                                .subst
                                .iter()
                                .find(|(w, _)| *w == v)
                                .map(|(_, b)| b.as_slice())
                                .ok_or_else(|| ExportError::OpenGoal(format!("`{}` leaves `{}` unbound", a.label, db.sym_text(v))))?;
                            ids.push(self.syntax(db, ctx, hyp.expr.typecode, body)?);
                        }
                        None => {
                            let c = children
                                .next()
                                .ok_or_else(|| ExportError::OpenGoal(format!("`{}` is missing a subproof", a.label)))?;
                            ids.push(self.tree(db, ctx, essentials, c)?);
                        }
                    }
                }
                let id = self.intern(ProofStep::Assert(s.assertion), ids);
                self.trees.insert(key, id);
                Ok(id)
            }
        }
    }

    fn expand(&self, id: usize, out: &mut Vec<ProofStep>) {
        let (step, ch) = &self.nodes[id];
        for c in ch {
            self.expand(*c, out);
        }
        out.push(*step);
    }

    fn emit_shared(&self, id: usize, uses: &[usize], saved: &mut HashMap<usize, usize>, out: &mut Vec<ProofStep>) {
        if let Some(k) = saved.get(&id) {
            out.push(ProofStep::Saved(*k));
            return;
        }
        let (step, ch) = &self.nodes[id];
        for c in ch {
            self.emit_shared(*c, uses, saved, out);
        }
        out.push(*step);
        if uses[id] > 1 && !ch.is_empty() {
            let k = saved.len();
            saved.insert(id, k);
            out.push(ProofStep::Save);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProofFormat {
    Normal,
    Compressed,
}

impl std::str::FromStr for ProofFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "normal" => Ok(ProofFormat::Normal),
            "compressed" => Ok(ProofFormat::Compressed),
            other => Err(format!("unknown proof format `{other}`")),
        }
    }
}

/// Full RPN step list (syntax included) proving `tree` in `ctx`. With
/// `share`, repeated subproofs are saved once and recalled.
pub fn tree_to_steps(db: &Database, ctx: &ProofContext, tree: &ProofTree, share: bool) -> Result<Vec<ProofStep>, ExportError> {
    let essentials = ctx.essential_indices(db);
    let mut rpn = Rpn::new();
    let root = rpn.tree(db, ctx, &essentials, tree)?;
    let mut out = Vec::new();
    if share {
        let mut uses = vec![0usize; rpn.nodes.len()];
        uses[root] = 1;
        for (_, ch) in &rpn.nodes {
            for c in ch {
                uses[*c] += 1;
            }
        }
        rpn.emit_shared(root, &uses, &mut HashMap::new(), &mut out);
    } else {
        rpn.expand(root, &mut out);
    }
    Ok(out)
}

fn step_label(db: &Database, ctx: &ProofContext, s: ProofStep) -> String {
    match s {
        ProofStep::Hyp(i) => ctx.hyp_labels[i].clone(),
        ProofStep::Float(h) => db.hyp(h).label.clone(),
        ProofStep::Assert(a) => db.assertion(a).label.clone(),
        ProofStep::Unknown => "?".into(),
        ProofStep::Saved(_) | ProofStep::Save => unreachable!("normal proofs have no back-references"),
    }
}

fn wrap_words(words: &[String], indent: &str, width: usize) -> String {
    let mut out = String::new();
    let mut line = String::from(indent);
    for w in words {
        if line.len() > indent.len() && line.len() + 1 + w.len() > width {
            out.push_str(&line);
            out.push('\n');
            line = String::from(indent);
        }
        if line.len() > indent.len() {
            line.push(' ');
        }
        line.push_str(w);
    }
    out.push_str(&line);
    out
}

/// Renders the text that goes between `$=` and `$.`.
pub fn proof_text(db: &Database, ctx: &ProofContext, tree: &ProofTree, format: ProofFormat) -> Result<String, ExportError> {
    let indent = "      ";
    match format {
        ProofFormat::Normal => {
            let steps = tree_to_steps(db, ctx, tree, false)?;
            let words: Vec<String> = steps.iter().map(|s| step_label(db, ctx, *s)).collect();
            Ok(wrap_words(&words, indent, 79))
        }
        ProofFormat::Compressed => {
            let steps = tree_to_steps(db, ctx, tree, true)?;
            let mut listed: Vec<ProofStep> = Vec::new();
            let mut raw = Vec::with_capacity(steps.len());
            for s in &steps {
                raw.push(match *s {
                    ProofStep::Hyp(i) => RawStep::Mandatory(i),
                    ProofStep::Saved(k) => RawStep::Saved(k),
                    ProofStep::Save => RawStep::Save,
                    ProofStep::Unknown => RawStep::Unknown,
                    other => {
                        let j = match listed.iter().position(|x| *x == other) {
                            Some(j) => j,
                            None => {
                                listed.push(other);
                                listed.len() - 1
                            }
                        };
                        RawStep::Listed(j)
                    }
                });
            }
            let letters = compressed::compress(ctx.hyps.len(), listed.len(), &raw);
            let mut words = vec!["(".to_string()];
            words.extend(listed.iter().map(|s| step_label(db, ctx, *s)));
            words.push(")".into());
            let mut out = wrap_words(&words, indent, 79);
            for chunk in compressed::wrap_letters(&letters, 79 - indent.len()) {
                out.push('\n');
                out.push_str(indent);
                out.push_str(chunk);
            }
            Ok(out)
        }
    }
}

/// A `${ ... $}` block declaring a new theorem with its hypotheses and proof.
pub fn theorem_block(db: &Database, ctx: &ProofContext, tree: &ProofTree, format: ProofFormat) -> Result<String, ExportError> {
    let proof = proof_text(db, ctx, tree, format)?;
    let mut out = String::from("${\n");
    if !ctx.dv.is_empty() {
        for (a, b) in &ctx.dv {
            out.push_str(&format!("  $d {} {} $.\n", db.sym_text(*a), db.sym_text(*b)));
        }
    }
    for (i, e) in ctx.hyps.iter().enumerate() {
        if ctx.hyp_ids[i].is_none() {
            out.push_str(&format!("  {} $e {} $.\n", ctx.hyp_labels[i], db.render_expr(e)));
        }
    }
    out.push_str(&format!(
        "  {} $p {} $=\n{} $.\n$}}\n",
        ctx.label,
        db.render_expr(&ctx.conclusion),
        proof
    ));
    Ok(out)
}

/// Byte offsets of every token outside comments.
fn token_spans(src: &str) -> Vec<(usize, usize)> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut in_comment = false;
    while i < bytes.len() {
        if bytes[i].is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        let tok = &src[start..i];
        if in_comment {
            in_comment = tok != "$)";
        } else if tok == "$(" {
            in_comment = true;
        } else {
            out.push((start, i));
        }
    }
    out
}

/// Replaces the proof of `$p` statement `label` in `source` with `proof`.
pub fn splice_proof(source: &str, label: &str, proof: &str) -> Result<String, ExportError> {
    let spans = token_spans(source);
    let tok = |k: usize| &source[spans[k].0..spans[k].1];
    let start = (0..spans.len().saturating_sub(1))
        .find(|k| tok(*k) == label && tok(k + 1) == "$p")
        .ok_or_else(|| ExportError::UnknownTheorem(label.to_string()))?;
    let eq = (start..spans.len())
        .find(|k| tok(*k) == "$=")
        .ok_or_else(|| ExportError::UnknownTheorem(label.to_string()))?;
    let end = (eq..spans.len())
        .find(|k| tok(*k) == "$.")
        .ok_or_else(|| ExportError::UnknownTheorem(label.to_string()))?;
    let mut out = String::with_capacity(source.len() + proof.len());
    out.push_str(&source[..spans[eq].1]);
    out.push('\n');
    out.push_str(proof);
    out.push(' ');
    out.push_str(&source[spans[end].0..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::database::Database;
    use crate::verify::{replay, verify_proof};

    const PROP: &str = "$c ( ) -> wff |- $. $v ph ps ch $.\n\
        wph $f wff ph $. wps $f wff ps $. wch $f wff ch $.\n\
        wi $a wff ( ph -> ps ) $.\n\
        ${ min $e |- ph $. maj $e |- ( ph -> ps ) $. ax-mp $a |- ps $. $}\n\
        ax-1 $a |- ( ph -> ( ps -> ph ) ) $.\n\
        ax-2 $a |- ( ( ph -> ( ps -> ch ) ) -> ( ( ph -> ps ) -> ( ph -> ch ) ) ) $.\n\
        id $p |- ( ph -> ph ) $= wph wph wph wi wi wph wph wi wph wph ax-1 \
        wph wph wph wi wph wi wi wph wph wph wi wi wph wph wi wi wph wph wph wi ax-1 \
        wph wph wph wi wph ax-2 ax-mp ax-mp $.\n\
        ${ a1i.1 $e |- ph $. a1i $p |- ( ps -> ph ) $= wph wps wph wi a1i.1 wph wps ax-1 ax-mp $. $}\n";

    fn roundtrip(label: &str, format: ProofFormat) {
        let db = Database::parse(PROP).unwrap();
        let a = db.assertion_by_label(label).unwrap();
        let ctx = ProofContext::for_assertion(&db, a);
        let r = verify_proof(&db, a).unwrap();
        let tree = ProofTree::from_replay(&db, &ctx, &r);
        let text = proof_text(&db, &ctx, &tree, format).unwrap();
        let spliced = splice_proof(PROP, label, &text).unwrap();
        let db2 = Database::parse(&spliced).unwrap();
        verify_proof(&db2, db2.assertion_by_label(label).unwrap()).unwrap();
        let steps = tree_to_steps(&db, &ctx, &tree, format == ProofFormat::Compressed).unwrap();
        replay(&db, &ctx, &steps).unwrap();
    }

    #[test]
    fn normal_export_reverifies() {
        roundtrip("id", ProofFormat::Normal);
        roundtrip("a1i", ProofFormat::Normal);
    }

    #[test]
    fn compressed_export_reverifies() {
        roundtrip("id", ProofFormat::Compressed);
        roundtrip("a1i", ProofFormat::Compressed);
    }

    #[test]
    fn compressed_export_shares_repeated_terms() {
        let db = Database::parse(PROP).unwrap();
        let a = db.assertion_by_label("id").unwrap();
        let ctx = ProofContext::for_assertion(&db, a);
        let tree = ProofTree::from_replay(&db, &ctx, &verify_proof(&db, a).unwrap());
        let shared = tree_to_steps(&db, &ctx, &tree, true).unwrap();
        let full = tree_to_steps(&db, &ctx, &tree, false).unwrap();
        assert!(shared.contains(&ProofStep::Save));
        assert!(shared.len() < full.len());
    }

    #[test]
    fn fresh_statement_block_verifies() {
        let db = Database::parse(PROP).unwrap();
        let id = db.assertion_by_label("id").unwrap();
        let ph = db.sym("ph").unwrap();
        let wff = |s: &str| Expr::new(db.sym("|-").unwrap(), db.symbols_of(s).unwrap());
        let concl = wff("( ( ph -> ph ) -> ( ph -> ph ) )");
        let ctx = ProofContext::fresh(&db, "idd", &[], &concl, &[]).unwrap();
        let phph = db.symbols_of("( ph -> ph )").unwrap();
        let tree = ProofTree::step(
            AssertionId(id.index as u32),
            vec![(ph, phph.clone())],
            vec![],
            concl.clone(),
        );
        let block = theorem_block(&db, &ctx, &tree, ProofFormat::Compressed).unwrap();
        let db2 = Database::parse(&format!("{PROP}\n{block}")).unwrap();
        verify_proof(&db2, db2.assertion_by_label("idd").unwrap()).unwrap();
        let _ = phph;
    }

    #[test]
    fn splice_rejects_unknown_labels() {
        assert!(matches!(splice_proof(PROP, "nope", "x"), Err(ExportError::UnknownTheorem(_))));
    }
}
