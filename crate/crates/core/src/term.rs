//! Parse trees, substitution, and distinct-variable checks.

use std::collections::{BTreeMap, BTreeSet};

use crate::database::{dv_pair, AssertionId, Database, Sym};
use crate::error::{GrammarError, SubstError};
use crate::grammar::Slot;

/// A parse tree: a variable leaf or a syntax axiom applied to argument trees
/// (arguments in the axiom's mandatory-hypothesis order).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Sym),
    App(AssertionId, Vec<Term>),
}

impl Term {
    /// The syntax typecode this tree derives.
    pub fn typecode(&self, db: &Database) -> Option<Sym> {
        match self {
            Term::Var(v) => db.grammar().var_type(*v),
            Term::App(l, _) => Some(db.assertion(*l).expr.typecode),
        }
    }

    pub fn render_into(&self, db: &Database, out: &mut Vec<Sym>) {
        match self {
            Term::Var(v) => out.push(*v),
            Term::App(l, ch) => {
                let prod = db
                    .grammar()
                    .production(*l)
                    .expect("tree built from grammar productions");
                for slot in &prod.rhs {
                    match slot {
                        Slot::Const(c) => out.push(*c),
                        Slot::Arg(i) => ch[*i].render_into(db, out),
                    }
                }
            }
        }
    }

    pub fn tokens(&self, db: &Database) -> Vec<Sym> {
        let mut out = Vec::new();
        self.render_into(db, &mut out);
        out
    }

    pub fn render(&self, db: &Database) -> String {
        db.render(&self.tokens(db))
    }

    pub fn vars(&self, out: &mut BTreeSet<Sym>) {
        match self {
            Term::Var(v) => {
                out.insert(*v);
            }
            Term::App(_, ch) => ch.iter().for_each(|c| c.vars(out)),
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(_, ch) => ch.iter().all(Term::is_ground),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(_, ch) => 1 + ch.iter().map(Term::size).sum::<usize>(),
        }
    }

    /// Calls `f` on every subtree, parents before children.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        f(self);
        if let Term::App(_, ch) = self {
            ch.iter().for_each(|c| c.visit(f));
        }
    }
}

/// Parses a token string at a typecode against the database grammar.
pub fn parse_term(db: &Database, typecode: Sym, tokens: &[Sym]) -> Result<Term, GrammarError> {
    db.grammar().parse(db, typecode, tokens)
}

/// Variable-to-tree map.
pub type Substitution = BTreeMap<Sym, Term>;

/// Simultaneous replacement of mapped variables; unmapped ones stay.
pub fn apply_substitution(db: &Database, t: &Term, s: &Substitution) -> Result<Term, SubstError> {
    for (v, img) in s {
        let expected = db.grammar().var_type(*v);
        let found = img.typecode(db);
        if expected != found {
            return Err(SubstError::TypeMismatch {
                var: db.sym_text(*v).to_string(),
                expected: expected.map(|e| db.sym_text(e).to_string()).unwrap_or_default(),
                found: found.map(|e| db.sym_text(e).to_string()).unwrap_or_default(),
            });
        }
    }
    Ok(substitute_tree(t, s))
}

fn substitute_tree(t: &Term, s: &Substitution) -> Term {
    match t {
        Term::Var(v) => s.get(v).cloned().unwrap_or_else(|| t.clone()),
        Term::App(l, ch) => Term::App(*l, ch.iter().map(|c| substitute_tree(c, s)).collect()),
    }
}

/// Token-level substitution: every symbol with an image is replaced by it.
pub fn substitute_tokens<'a>(body: &[Sym], image: impl Fn(Sym) -> Option<&'a [Sym]>) -> Vec<Sym> {
    let mut out = Vec::with_capacity(body.len());
    for s in body {
        match image(*s) {
            Some(img) => out.extend_from_slice(img),
            None => out.push(*s),
        }
    }
    out
}

/// Variables occurring in a token string.
pub fn vars_of(db: &Database, toks: &[Sym]) -> BTreeSet<Sym> {
    toks.iter().copied().filter(|s| db.is_variable(*s)).collect()
}

/// One failed distinct-variable requirement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DvViolation {
    /// The theorem's pair whose images clash.
    pub required: (Sym, Sym),
    /// The offending pair of variables in the images.
    pub pair: (Sym, Sym),
    /// True when the two images share `pair.0`.
    pub shared: bool,
}

impl DvViolation {
    pub fn describe(&self, db: &Database) -> String {
        let (a, b) = self.pair;
        if self.shared {
            format!(
                "`{}` occurs in both images of $d {} {}",
                db.sym_text(a),
                db.sym_text(self.required.0),
                db.sym_text(self.required.1)
            )
        } else {
            format!(
                "missing $d {} {} (required by $d {} {})",
                db.sym_text(a),
                db.sym_text(b),
                db.sym_text(self.required.0),
                db.sym_text(self.required.1)
            )
        }
    }
}

/// Checks a theorem's disjoint-variable pairs under a substitution given as
/// token images. `frame_dv` holds the pairs available in the goal's context.
pub fn check_dv<'a>(
    db: &Database,
    theorem_dv: &[(Sym, Sym)],
    image: impl Fn(Sym) -> Option<&'a [Sym]>,
    frame_dv: &[(Sym, Sym)],
) -> Vec<DvViolation> {
    let mut out = Vec::new();
    for &(x, y) in theorem_dv {
        let (Some(ix), Some(iy)) = (image(x), image(y)) else {
            continue;
        };
        let vx = vars_of(db, ix);
        let vy = vars_of(db, iy);
        for a in &vx {
            for b in &vy {
                if a == b {
                    out.push(DvViolation {
                        required: (x, y),
                        pair: (*a, *b),
                        shared: true,
                    });
                } else if !frame_dv.contains(&dv_pair(*a, *b)) {
                    out.push(DvViolation {
                        required: (x, y),
                        pair: dv_pair(*a, *b),
                        shared: false,
                    });
                }
            }
        }
    }
    out
}

/// One-sided matching: binds variables of `pattern` so that it equals
/// `target`. Bindings already present in `binds` must agree.
pub fn match_term<'t>(pattern: &Term, target: &'t Term, binds: &mut BTreeMap<Sym, &'t Term>) -> bool {
    match pattern {
        Term::Var(v) => match binds.get(v) {
            Some(prev) => *prev == target,
            None => {
                binds.insert(*v, target);
                true
            }
        },
        Term::App(l, ch) => match target {
            Term::App(m, tch) if l == m && ch.len() == tch.len() => {
                ch.iter().zip(tch).all(|(p, t)| match_term(p, t, binds))
            }
            _ => false,
        },
    }
}
