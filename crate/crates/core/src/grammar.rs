//! Term grammar built from the database's syntax axioms.
//!
//! Parsing is a memoized top-down chart over (nonterminal, position) that
//! keeps every reachable end position. Two derivations reaching the same end
//! are recorded as ambiguous instead of being resolved.

use std::collections::HashMap;

use crate::database::{AssertionId, AssertionKind, Database, HypKind, Sym};
use crate::error::GrammarError;
use crate::term::Term;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Const(Sym),
    /// Index into the production's argument list.
    Arg(usize),
}

/// One syntax axiom viewed as a production `lhs -> rhs`.
#[derive(Clone, Debug)]
pub struct Production {
    pub label: AssertionId,
    pub lhs: Sym,
    pub rhs: Vec<Slot>,
    /// Argument typecodes, in the axiom's mandatory-hypothesis order.
    pub args: Vec<Sym>,
    /// Argument variables, same order as `args`.
    pub arg_vars: Vec<Sym>,
}

#[derive(Clone, Debug, Default)]
pub struct Grammar {
    productions: Vec<Production>,
    by_lhs: HashMap<Sym, Vec<usize>>,
    by_label: HashMap<AssertionId, usize>,
    var_types: HashMap<Sym, Sym>,
    nonterminals: Vec<Sym>,
    left_recursion: Option<String>,
}

impl Grammar {
    pub fn build(db: &Database) -> Grammar {
        let mut g = Grammar {
            nonterminals: db.syntax_typecodes().to_vec(),
            ..Grammar::default()
        };
        for i in 0..db.symbol_count() {
            let s = Sym(i as u32);
            if db.is_variable(s) {
                if let Some(tc) = db.var_typecode(s) {
                    g.var_types.insert(s, tc);
                }
            }
        }
        for a in db.assertions() {
            if a.kind != AssertionKind::Axiom || !db.is_syntax_typecode(a.expr.typecode) {
                continue;
            }
            let hyps: Vec<_> = a.frame.hyps.iter().map(|h| db.hyp(*h)).collect();
            if hyps.iter().any(|h| h.kind == HypKind::Essential) {
                continue;
            }
            let arg_vars: Vec<Sym> = hyps.iter().filter_map(|h| h.variable()).collect();
            let args: Vec<Sym> = hyps.iter().map(|h| h.expr.typecode).collect();
            let rhs = a
                .expr
                .body
                .iter()
                .map(|s| match arg_vars.iter().position(|v| v == s) {
                    Some(i) => Slot::Arg(i),
                    None => Slot::Const(*s),
                })
                .collect();
            let idx = g.productions.len();
            g.productions.push(Production {
                label: AssertionId(a.index as u32),
                lhs: a.expr.typecode,
                rhs,
                args,
                arg_vars,
            });
            g.by_lhs.entry(a.expr.typecode).or_default().push(idx);
            g.by_label.insert(AssertionId(a.index as u32), idx);
        }
        g.left_recursion = g.find_left_recursion(db);
        g
    }

    fn find_left_recursion(&self, db: &Database) -> Option<String> {
        // Edges nt -> nt' for productions whose first slot is an argument.
        let mut edges: HashMap<Sym, Vec<(Sym, AssertionId)>> = HashMap::new();
        for p in &self.productions {
            if let Some(Slot::Arg(i)) = p.rhs.first() {
                edges.entry(p.lhs).or_default().push((p.args[*i], p.label));
            }
        }
        fn visit(
            nt: Sym,
            edges: &HashMap<Sym, Vec<(Sym, AssertionId)>>,
            state: &mut HashMap<Sym, u8>,
        ) -> Option<AssertionId> {
            state.insert(nt, 1);
            for (next, label) in edges.get(&nt).into_iter().flatten() {
                match state.get(next).copied().unwrap_or(0) {
                    1 => return Some(*label),
                    0 => {
                        if let Some(l) = visit(*next, edges, state) {
                            return Some(l);
                        }
                    }
                    _ => {}
                }
            }
            state.insert(nt, 2);
            None
        }
        let mut state = HashMap::new();
        for nt in &self.nonterminals {
            if !state.contains_key(nt) {
                if let Some(l) = visit(*nt, &edges, &mut state) {
                    return Some(db.assertion(l).label.clone());
                }
            }
        }
        None
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn production(&self, label: AssertionId) -> Option<&Production> {
        self.by_label.get(&label).map(|i| &self.productions[*i])
    }

    pub fn var_type(&self, var: Sym) -> Option<Sym> {
        self.var_types.get(&var).copied()
    }

    /// Parses `tokens` at `typecode` (a logical typecode parses as its
    /// syntax counterpart) and returns the unique tree.
    pub fn parse(&self, db: &Database, typecode: Sym, tokens: &[Sym]) -> Result<Term, GrammarError> {
        let nt = db.parse_typecode(typecode);
        let render = || db.render(tokens);
        let Some(nt_idx) = self.nonterminals.iter().position(|n| *n == nt) else {
            return Err(GrammarError::UnknownTypecode(db.sym_text(typecode).to_string()));
        };
        if let Some(l) = &self.left_recursion {
            return Err(GrammarError::LeftRecursive(l.clone()));
        }
        let mut chart = Chart {
            g: self,
            toks: tokens,
            memo: vec![None; self.nonterminals.len() * (tokens.len() + 1)],
            nodes: Vec::new(),
        };
        let results = chart.parse_nt(nt_idx, 0);
        let mut found = None;
        for (end, out) in results.iter() {
            if *end == tokens.len() {
                found = Some(*out);
            }
        }
        match found {
            None => Err(GrammarError::NoParse {
                typecode: db.sym_text(nt).to_string(),
                tokens: render(),
            }),
            Some(Outcome::Many) => Err(GrammarError::Ambiguous {
                typecode: db.sym_text(nt).to_string(),
                tokens: render(),
            }),
            Some(Outcome::One(n)) => Ok(chart.materialize(n)),
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Outcome {
    One(u32),
    Many,
}

#[derive(Clone, Debug)]
enum PNode {
    Var(Sym),
    App(usize, Vec<u32>),
}

struct Chart<'g, 't> {
    g: &'g Grammar,
    toks: &'t [Sym],
    memo: Vec<Option<std::rc::Rc<Vec<(usize, Outcome)>>>>,
    nodes: Vec<PNode>,
}

fn merge(list: &mut Vec<(usize, Outcome)>, end: usize, out: Outcome) {
    match list.iter_mut().find(|(e, _)| *e == end) {
        Some(slot) => slot.1 = Outcome::Many,
        None => list.push((end, out)),
    }
}

/// Partial match of a production: position reached and the argument nodes
/// bound so far (`None` once two derivations reached the same position).
type State = (usize, Option<Vec<Option<u32>>>);

impl Chart<'_, '_> {
    fn parse_nt(&mut self, nt_idx: usize, pos: usize) -> std::rc::Rc<Vec<(usize, Outcome)>> {
        let key = nt_idx * (self.toks.len() + 1) + pos;
        if let Some(r) = &self.memo[key] {
            return r.clone();
        }
        // Left recursion is rejected up front, so re-entry cannot happen.
        let nt = self.g.nonterminals[nt_idx];
        let mut results: Vec<(usize, Outcome)> = Vec::new();
        if let Some(&tok) = self.toks.get(pos) {
            if self.g.var_types.get(&tok) == Some(&nt) {
                self.nodes.push(PNode::Var(tok));
                merge(&mut results, pos + 1, Outcome::One(self.nodes.len() as u32 - 1));
            }
        }
        let prods = self.g.by_lhs.get(&nt).cloned().unwrap_or_default();
        for pi in prods {
            let prod = &self.g.productions[pi];
            if let Some(Slot::Const(c)) = prod.rhs.first() {
                if self.toks.get(pos) != Some(c) {
                    continue;
                }
            }
            let nargs = prod.args.len();
            let rhs = prod.rhs.clone();
            let args = prod.args.clone();
            let mut states: Vec<State> = vec![(pos, Some(vec![None; nargs]))];
            for slot in rhs {
                let mut next: Vec<State> = Vec::new();
                let push = |next: &mut Vec<State>, p: usize, c: Option<Vec<Option<u32>>>| {
                    match next.iter_mut().find(|(q, _)| *q == p) {
                        Some(s) => s.1 = None,
                        None => next.push((p, c)),
                    }
                };
                for (p, children) in states {
                    match slot {
                        Slot::Const(c) => {
                            if self.toks.get(p) == Some(&c) {
                                push(&mut next, p + 1, children);
                            }
                        }
                        Slot::Arg(i) => {
                            if p >= self.toks.len() {
                                continue;
                            }
                            let sub_nt = match self.g.nonterminals.iter().position(|n| *n == args[i]) {
                                Some(x) => x,
                                None => continue,
                            };
                            let subs = self.parse_nt(sub_nt, p);
                            for (end, out) in subs.iter() {
                                let c = match (&children, out) {
                                    (Some(ch), Outcome::One(n)) => match ch[i] {
                                        Some(prev) if !self.same(prev, *n) => continue,
                                        _ => {
                                            let mut ch = ch.clone();
                                            ch[i] = Some(*n);
                                            Some(ch)
                                        }
                                    },
                                    _ => None,
                                };
                                push(&mut next, *end, c);
                            }
                        }
                    }
                }
                states = next;
                if states.is_empty() {
                    break;
                }
            }
            for (end, children) in states {
                let out = match children {
                    Some(ch) if ch.iter().all(Option::is_some) => {
                        self.nodes
                            .push(PNode::App(pi, ch.into_iter().map(Option::unwrap).collect()));
                        Outcome::One(self.nodes.len() as u32 - 1)
                    }
                    Some(_) => continue,
                    None => Outcome::Many,
                };
                match results.iter_mut().find(|(e, _)| *e == end) {
                    Some(slot) => slot.1 = Outcome::Many,
                    None => results.push((end, out)),
                }
            }
        }
        let rc = std::rc::Rc::new(results);
        self.memo[key] = Some(rc.clone());
        rc
    }

    fn same(&self, a: u32, b: u32) -> bool {
        if a == b {
            return true;
        }
        match (&self.nodes[a as usize], &self.nodes[b as usize]) {
            (PNode::Var(x), PNode::Var(y)) => x == y,
            (PNode::App(p, xs), PNode::App(q, ys)) => {
                p == q && xs.iter().zip(ys).all(|(x, y)| self.same(*x, *y))
            }
            _ => false,
        }
    }

    fn materialize(&self, n: u32) -> Term {
        match &self.nodes[n as usize] {
            PNode::Var(v) => Term::Var(*v),
            PNode::App(pi, ch) => Term::App(
                self.g.productions[*pi].label,
                ch.iter().map(|c| self.materialize(*c)).collect(),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn db(src: &str) -> Database {
        Database::parse(src).unwrap()
    }

    const ARITH: &str = "$c wff class setvar |- ( ) + = 2 3 5 $. $v A B x $.\n\
        cA $f class A $. cB $f class B $. vx $f setvar x $.\n\
        cv $a class x $. c2 $a class 2 $. c3 $a class 3 $. c5 $a class 5 $.\n\
        cadd $a class ( A + B ) $. weq $a wff A = B $.\n";

    #[test]
    fn parses_nested_terms() {
        let d = db(ARITH);
        let class = d.sym("class").unwrap();
        let toks = d.symbols_of("( 3 + 2 )").unwrap();
        let t = d.grammar().parse(&d, class, &toks).unwrap();
        let cadd = d.assertion_by_label("cadd").unwrap().index;
        match &t {
            Term::App(l, ch) => {
                assert_eq!(l.index(), cadd);
                assert_eq!(ch.len(), 2);
            }
            _ => panic!("expected application"),
        }
        assert_eq!(t.tokens(&d), toks);
    }

    #[test]
    fn setvar_parses_through_cv() {
        let d = db(ARITH);
        let class = d.sym("class").unwrap();
        let t = d.grammar().parse(&d, class, &d.symbols_of("x").unwrap()).unwrap();
        let cv = AssertionId(d.assertion_by_label("cv").unwrap().index as u32);
        assert_eq!(t, Term::App(cv, vec![Term::Var(d.sym("x").unwrap())]));
    }

    #[test]
    fn provable_typecode_parses_as_wff() {
        let d = db(ARITH);
        let tp = d.sym("|-").unwrap();
        let toks = d.symbols_of("( 3 + 2 ) = 5").unwrap();
        let t = d.grammar().parse(&d, tp, &toks).unwrap();
        let weq = d.assertion_by_label("weq").unwrap().index;
        assert!(matches!(t, Term::App(l, _) if l.index() == weq));
    }

    #[test]
    fn rejects_ungrammatical_strings() {
        let d = db(ARITH);
        let class = d.sym("class").unwrap();
        let err = d.grammar().parse(&d, class, &d.symbols_of("( 3 + )").unwrap()).unwrap_err();
        assert!(matches!(err, GrammarError::NoParse { .. }));
    }

    #[test]
    fn left_recursion_is_rejected() {
        let d = db("$c class + 1 $. $v A B $. cA $f class A $. cB $f class B $.\n\
            c1 $a class 1 $. cadd $a class A + B $.");
        let class = d.sym("class").unwrap();
        let err = d
            .grammar()
            .parse(&d, class, &d.symbols_of("1 + 1 + 1").unwrap())
            .unwrap_err();
        assert!(matches!(err, GrammarError::LeftRecursive(_)));
    }

    #[test]
    fn ambiguity_without_left_recursion() {
        let d = db("$c class + 1 [ $. $v A B $. cA $f class A $. cB $f class B $.\n\
            c1 $a class 1 $. cp $a class [ A $. cadd $a class [ A + B $.");
        let class = d.sym("class").unwrap();
        let ok = d.grammar().parse(&d, class, &d.symbols_of("[ 1 + 1").unwrap());
        assert!(ok.is_ok());
        let err = d
            .grammar()
            .parse(&d, class, &d.symbols_of("[ [ 1 + 1").unwrap())
            .unwrap_err();
        assert!(matches!(err, GrammarError::Ambiguous { .. }), "{err}");
    }
}
