//! The parsed Metamath library: symbols, scoped hypotheses, assertions and
//! their frames.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Location, ParseError};
use crate::grammar::Grammar;
use crate::lexer::{self, Token};

/// Interned math symbol.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Sym(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SymbolKind {
    Constant,
    Variable,
}

#[derive(Clone, Debug)]
pub struct SymbolInfo {
    pub text: String,
    pub kind: SymbolKind,
}

/// A typecode followed by a symbol string, e.g. `|- ( ph -> ph )`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Expr {
    pub typecode: Sym,
    pub body: Vec<Sym>,
}

impl Expr {
    pub fn new(typecode: Sym, body: Vec<Sym>) -> Self {
        Expr { typecode, body }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct HypId(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct AssertionId(pub u32);

impl AssertionId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum HypKind {
    Floating,
    Essential,
}

#[derive(Clone, Debug)]
pub struct Hypothesis {
    pub label: String,
    pub kind: HypKind,
    pub expr: Expr,
    pub loc: Location,
    /// Statement sequence number of the declaration.
    pub seq: usize,
    /// Sequence number of the `$}` closing its scope (`usize::MAX` at top level).
    pub scope_end: usize,
}

impl Hypothesis {
    /// For a floating hypothesis, the variable it types.
    pub fn variable(&self) -> Option<Sym> {
        match self.kind {
            HypKind::Floating => self.expr.body.first().copied(),
            HypKind::Essential => None,
        }
    }

    pub fn in_scope_at(&self, seq: usize) -> bool {
        self.seq < seq && seq < self.scope_end
    }
}

/// The mandatory hypotheses and disjoint-variable conditions of an assertion.
#[derive(Clone, Debug, Default)]
pub struct Frame {
    /// Mandatory hypotheses in declaration order.
    pub hyps: Vec<HypId>,
    /// Mandatory disjoint-variable pairs, each stored with the smaller symbol first.
    pub dv: Vec<(Sym, Sym)>,
    /// Every disjoint-variable pair in scope, mandatory or not.
    pub scope_dv: Arc<Vec<(Sym, Sym)>>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AssertionKind {
    Axiom,
    Theorem,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProofSource {
    Normal(Vec<String>),
    Compressed { labels: Vec<String>, letters: String },
}

impl ProofSource {
    /// Reads the text between `$=` and `$.`.
    pub fn from_text(text: &str) -> Result<ProofSource, String> {
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.first() != Some(&"(") {
            return Ok(ProofSource::Normal(toks.iter().map(|t| t.to_string()).collect()));
        }
        let close = toks
            .iter()
            .position(|t| *t == ")")
            .ok_or("compressed proof label list is not closed")?;
        let mut letters = String::new();
        for t in &toks[close + 1..] {
            if !t.bytes().all(|b| b.is_ascii_uppercase() || b == b'?') {
                return Err(format!("invalid compressed proof chunk `{t}`"));
            }
            letters.push_str(t);
        }
        Ok(ProofSource::Compressed {
            labels: toks[1..close].iter().map(|t| t.to_string()).collect(),
            letters,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Assertion {
    pub label: String,
    pub kind: AssertionKind,
    pub expr: Expr,
    pub frame: Frame,
    pub proof: Option<ProofSource>,
    pub loc: Location,
    /// Ordinal among all `$a`/`$p` statements; a proof may only cite smaller indices.
    pub index: usize,
    pub seq: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LabelRef {
    Hyp(HypId),
    Assertion(AssertionId),
}

pub fn dv_pair(a: Sym, b: Sym) -> (Sym, Sym) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// An immutable, parsed database.
#[derive(Debug)]
pub struct Database {
    symbols: Vec<SymbolInfo>,
    symbol_ids: HashMap<String, Sym>,
    hyps: Vec<Hypothesis>,
    assertions: Vec<Assertion>,
    labels: HashMap<String, LabelRef>,
    floats_by_var: HashMap<Sym, Vec<HypId>>,
    syntax_typecodes: Vec<Sym>,
    provable: Option<Sym>,
    statement_index: HashMap<String, Vec<AssertionId>>,
    grammar: Grammar,
}

impl Database {
    /// Reads a database from a file, resolving `$[ $]` includes first.
    pub fn from_file(path: &Path) -> Result<Database, ParseError> {
        let text = lexer::resolve_includes(path)?;
        Database::parse(&text)
    }

    /// Parses a complete database source.
    pub fn parse(src: &str) -> Result<Database, ParseError> {
        let tokens = lexer::tokenize(src)?;
        let mut p = Parser::new(&tokens);
        p.run()?;
        let Parser {
            symbols,
            symbol_ids,
            hyps,
            assertions,
            labels,
            floats_by_var,
            ..
        } = p;
        let provable = symbol_ids.get("|-").copied();
        let mut syntax_typecodes: Vec<Sym> = Vec::new();
        let floats = hyps
            .iter()
            .filter(|h| h.kind == HypKind::Floating)
            .map(|h| h.expr.typecode);
        for tc in floats.chain(assertions.iter().map(|a| a.expr.typecode)) {
            if Some(tc) != provable && !syntax_typecodes.contains(&tc) {
                syntax_typecodes.push(tc);
            }
        }
        let mut db = Database {
            symbols,
            symbol_ids,
            hyps,
            assertions,
            labels,
            floats_by_var,
            syntax_typecodes,
            provable,
            statement_index: HashMap::new(),
            grammar: Grammar::default(),
        };
        db.grammar = Grammar::build(&db);
        let mut index: HashMap<String, Vec<AssertionId>> = HashMap::new();
        for a in &db.assertions {
            if db.is_logical(a) {
                index
                    .entry(db.statement_text(a))
                    .or_default()
                    .push(AssertionId(a.index as u32));
            }
        }
        db.statement_index = index;
        Ok(db)
    }

    pub fn sym(&self, text: &str) -> Option<Sym> {
        self.symbol_ids.get(text).copied()
    }

    pub fn sym_text(&self, s: Sym) -> &str {
        &self.symbols[s.0 as usize].text
    }

    pub fn symbol(&self, s: Sym) -> &SymbolInfo {
        &self.symbols[s.0 as usize]
    }

    pub fn is_variable(&self, s: Sym) -> bool {
        self.symbols[s.0 as usize].kind == SymbolKind::Variable
    }

    pub fn symbol_count(&self) -> usize {
        self.symbols.len()
    }

    pub fn hyp(&self, id: HypId) -> &Hypothesis {
        &self.hyps[id.0 as usize]
    }

    pub fn assertion(&self, id: AssertionId) -> &Assertion {
        &self.assertions[id.0 as usize]
    }

    pub fn assertions(&self) -> &[Assertion] {
        &self.assertions
    }

    /// `$p` statements, in library order.
    pub fn theorems(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions
            .iter()
            .filter(|a| a.kind == AssertionKind::Theorem)
    }

    pub fn label(&self, label: &str) -> Option<LabelRef> {
        self.labels.get(label).copied()
    }

    pub fn assertion_by_label(&self, label: &str) -> Option<&Assertion> {
        match self.labels.get(label)? {
            LabelRef::Assertion(id) => Some(self.assertion(*id)),
            LabelRef::Hyp(_) => None,
        }
    }

    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    /// The provability typecode (`|-`), if declared.
    pub fn provable_typecode(&self) -> Option<Sym> {
        self.provable
    }

    /// Typecodes that type variables (`wff`, `class`, `setvar` in set.mm).
    pub fn syntax_typecodes(&self) -> &[Sym] {
        &self.syntax_typecodes
    }

    pub fn is_syntax_typecode(&self, tc: Sym) -> bool {
        self.syntax_typecodes.contains(&tc)
    }

    /// An assertion whose conclusion is a logical claim rather than a
    /// grammar production.
    pub fn is_logical(&self, a: &Assertion) -> bool {
        !self.is_syntax_typecode(a.expr.typecode)
    }

    /// The typecode a logical typecode is parsed as (`|-` parses as `wff`).
    pub fn parse_typecode(&self, tc: Sym) -> Sym {
        if Some(tc) == self.provable {
            if let Some(wff) = self.sym("wff") {
                if self.is_syntax_typecode(wff) {
                    return wff;
                }
            }
        }
        tc
    }

    /// The floating hypothesis typing `var` that is in scope at statement `seq`.
    pub fn float_for(&self, var: Sym, seq: usize) -> Option<HypId> {
        self.floats_by_var
            .get(&var)?
            .iter()
            .rev()
            .copied()
            .find(|h| self.hyp(*h).in_scope_at(seq))
    }

    /// The float used for `var` outside any particular theorem: the last
    /// top-level declaration, falling back to the last declaration.
    pub fn global_float(&self, var: Sym) -> Option<HypId> {
        let list = self.floats_by_var.get(&var)?;
        list.iter()
            .rev()
            .copied()
            .find(|h| self.hyp(*h).scope_end == usize::MAX)
            .or_else(|| list.last().copied())
    }

    pub fn var_typecode(&self, var: Sym) -> Option<Sym> {
        self.global_float(var).map(|h| self.hyp(h).expr.typecode)
    }

    pub fn render(&self, syms: &[Sym]) -> String {
        let mut out = String::new();
        for (i, s) in syms.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(self.sym_text(*s));
        }
        out
    }

    pub fn render_expr(&self, e: &Expr) -> String {
        if e.body.is_empty() {
            self.sym_text(e.typecode).to_string()
        } else {
            format!("{} {}", self.sym_text(e.typecode), self.render(&e.body))
        }
    }

    /// Tokenizes whitespace-separated math text into symbols.
    pub fn symbols_of(&self, text: &str) -> Result<Vec<Sym>, String> {
        text.split_ascii_whitespace()
            .map(|t| self.sym(t).ok_or_else(|| t.to_string()))
            .collect()
    }

    /// Essential hypotheses of an assertion, in frame order.
    pub fn essential_hyps<'a>(&'a self, a: &'a Assertion) -> impl Iterator<Item = &'a Hypothesis> + 'a {
        a.frame
            .hyps
            .iter()
            .map(|h| self.hyp(*h))
            .filter(|h| h.kind == HypKind::Essential)
    }

    /// Mandatory variables with their typecodes, in frame order.
    pub fn mandatory_vars(&self, a: &Assertion) -> Vec<(Sym, Sym)> {
        a.frame
            .hyps
            .iter()
            .map(|h| self.hyp(*h))
            .filter_map(|h| h.variable().map(|v| (v, h.expr.typecode)))
            .collect()
    }

    /// Canonical statement text `[[ |- h1 |- h2 ]] |- concl`.
    pub fn statement_text(&self, a: &Assertion) -> String {
        let hyps: Vec<String> = self
            .essential_hyps(a)
            .map(|h| self.render_expr(&h.expr))
            .collect();
        crate::text::goal_text(&hyps, &self.render_expr(&a.expr))
    }

    /// Assertions whose canonical statement text is exactly `text`.
    pub fn lookup_statement(&self, text: &str) -> &[AssertionId] {
        self.statement_index
            .get(text)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn statement_texts(&self) -> impl Iterator<Item = (&str, &[AssertionId])> {
        self.statement_index
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

impl fmt::Display for Database {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} symbols, {} assertions ({} provable)",
            self.symbols.len(),
            self.assertions.len(),
            self.theorems().count()
        )
    }
}

struct ScopeMark {
    hyps_len: usize,
    dv_len: usize,
    vars: Vec<Sym>,
    open: Location,
}

struct Parser<'a, 'b> {
    toks: &'b [Token<'a>],
    pos: usize,
    seq: usize,
    symbols: Vec<SymbolInfo>,
    symbol_ids: HashMap<String, Sym>,
    hyps: Vec<Hypothesis>,
    assertions: Vec<Assertion>,
    labels: HashMap<String, LabelRef>,
    floats_by_var: HashMap<Sym, Vec<HypId>>,
    active_var: Vec<bool>,
    active_float: HashMap<Sym, HypId>,
    active_hyps: Vec<HypId>,
    dv: Vec<(Sym, Sym)>,
    dv_snapshot: Option<Arc<Vec<(Sym, Sym)>>>,
    scopes: Vec<ScopeMark>,
}

impl<'a, 'b> Parser<'a, 'b> {
    fn new(toks: &'b [Token<'a>]) -> Self {
        Parser {
            toks,
            pos: 0,
            seq: 0,
            symbols: Vec::new(),
            symbol_ids: HashMap::new(),
            hyps: Vec::new(),
            assertions: Vec::new(),
            labels: HashMap::new(),
            floats_by_var: HashMap::new(),
            active_var: Vec::new(),
            active_float: HashMap::new(),
            active_hyps: Vec::new(),
            dv: Vec::new(),
            dv_snapshot: None,
            scopes: Vec::new(),
        }
    }

    fn next(&mut self) -> Option<Token<'a>> {
        let t = self.toks.get(self.pos).copied();
        self.pos += 1;
        t
    }

    fn last_loc(&self) -> Location {
        self.toks
            .last()
            .map(|t| t.location())
            .unwrap_or_else(|| Location::new(1, 1))
    }

    /// Collects tokens until `$.` (or `$=` when `allow_proof`), returning the
    /// math tokens and the terminator seen.
    fn statement_body(&mut self, start: &Token<'a>, label: Option<&str>) -> Result<(Vec<Token<'a>>, &'a str), ParseError> {
        let mut body = Vec::new();
        loop {
            let Some(t) = self.next() else {
                let mut loc = start.location();
                if let Some(l) = label {
                    loc = loc.with_label(l);
                }
                return Err(ParseError::Scope {
                    loc,
                    msg: format!("`{}` statement is not terminated", start.text),
                });
            };
            match t.text {
                "$." | "$=" => return Ok((body, t.text)),
                s if s.starts_with('$') => {
                    let mut loc = t.location();
                    if let Some(l) = label {
                        loc = loc.with_label(l);
                    }
                    return Err(ParseError::Scope {
                        loc,
                        msg: format!("unexpected `{s}` inside `{}` statement", start.text),
                    });
                }
                _ => body.push(t),
            }
        }
    }

    fn run(&mut self) -> Result<(), ParseError> {
        while let Some(t) = self.next() {
            self.seq += 1;
            match t.text {
                "${" => self.scopes.push(ScopeMark {
                    hyps_len: self.active_hyps.len(),
                    dv_len: self.dv.len(),
                    vars: Vec::new(),
                    open: t.location(),
                }),
                "$}" => self.close_scope(&t)?,
                "$c" => self.constants(&t)?,
                "$v" => self.variables(&t)?,
                "$d" => self.disjoint(&t)?,
                "$[" | "$]" => {
                    return Err(ParseError::Malformed {
                        loc: t.location(),
                        msg: "include directives must be resolved before parsing".into(),
                    })
                }
                s if s.starts_with('$') => {
                    return Err(ParseError::Lexical {
                        loc: t.location(),
                        msg: format!("unexpected keyword `{s}`"),
                    })
                }
                label => {
                    if !label
                        .bytes()
                        .all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_' || b == b'.')
                    {
                        return Err(ParseError::Lexical {
                            loc: t.location(),
                            msg: format!("invalid label `{label}`"),
                        });
                    }
                    let kw = self.next().ok_or_else(|| ParseError::Scope {
                        loc: t.location().with_label(label),
                        msg: "label without statement".into(),
                    })?;
                    match kw.text {
                        "$f" => self.floating(&t, &kw)?,
                        "$e" => self.essential(&t, &kw)?,
                        "$a" => self.assertion(&t, &kw, AssertionKind::Axiom)?,
                        "$p" => self.assertion(&t, &kw, AssertionKind::Theorem)?,
                        other => {
                            return Err(ParseError::Malformed {
                                loc: kw.location().with_label(label),
                                msg: format!("expected a labeled statement keyword, found `{other}`"),
                            })
                        }
                    }
                }
            }
        }
        if let Some(open) = self.scopes.last() {
            return Err(ParseError::Scope {
                loc: open.open.clone(),
                msg: "unclosed `${`".into(),
            });
        }
        let _ = self.last_loc();
        Ok(())
    }

    fn close_scope(&mut self, t: &Token<'a>) -> Result<(), ParseError> {
        let mark = self.scopes.pop().ok_or_else(|| ParseError::Scope {
            loc: t.location(),
            msg: "`$}` without matching `${`".into(),
        })?;
        for h in self.active_hyps.drain(mark.hyps_len..) {
            let hyp = &mut self.hyps[h.0 as usize];
            hyp.scope_end = self.seq;
            if let Some(v) = hyp.variable() {
                if self.active_float.get(&v) == Some(&h) {
                    self.active_float.remove(&v);
                }
            }
        }
        if self.dv.len() != mark.dv_len {
            self.dv.truncate(mark.dv_len);
            self.dv_snapshot = None;
        }
        for v in mark.vars {
            self.active_var[v.0 as usize] = false;
        }
        Ok(())
    }

    fn intern(&mut self, tok: &Token<'a>, kind: SymbolKind) -> Result<Sym, ParseError> {
        if tok.text.contains('$') {
            return Err(ParseError::Lexical {
                loc: tok.location(),
                msg: format!("math symbol `{}` contains `$`", tok.text),
            });
        }
        if let Some(&s) = self.symbol_ids.get(tok.text) {
            let info = &self.symbols[s.0 as usize];
            if info.kind != kind || kind == SymbolKind::Constant {
                return Err(ParseError::Malformed {
                    loc: tok.location(),
                    msg: format!("symbol `{}` redeclared", tok.text),
                });
            }
            return Ok(s);
        }
        let s = Sym(self.symbols.len() as u32);
        self.symbols.push(SymbolInfo {
            text: tok.text.to_string(),
            kind,
        });
        self.symbol_ids.insert(tok.text.to_string(), s);
        self.active_var.push(false);
        Ok(s)
    }

    fn constants(&mut self, start: &Token<'a>) -> Result<(), ParseError> {
        if !self.scopes.is_empty() {
            return Err(ParseError::Scope {
                loc: start.location(),
                msg: "`$c` is only allowed in the outermost scope".into(),
            });
        }
        let (body, term) = self.statement_body(start, None)?;
        if term != "$." || body.is_empty() {
            return Err(ParseError::Malformed {
                loc: start.location(),
                msg: "empty or malformed `$c` statement".into(),
            });
        }
        for tok in body {
            self.intern(&tok, SymbolKind::Constant)?;
        }
        Ok(())
    }

    fn variables(&mut self, start: &Token<'a>) -> Result<(), ParseError> {
        let (body, term) = self.statement_body(start, None)?;
        if term != "$." || body.is_empty() {
            return Err(ParseError::Malformed {
                loc: start.location(),
                msg: "empty or malformed `$v` statement".into(),
            });
        }
        for tok in body {
            let s = self.intern(&tok, SymbolKind::Variable)?;
            if self.active_var[s.0 as usize] {
                return Err(ParseError::Malformed {
                    loc: tok.location(),
                    msg: format!("variable `{}` is already active", tok.text),
                });
            }
            self.active_var[s.0 as usize] = true;
            if let Some(scope) = self.scopes.last_mut() {
                scope.vars.push(s);
            }
        }
        Ok(())
    }

    fn lookup_math(&self, tok: &Token<'a>, label: Option<&str>) -> Result<Sym, ParseError> {
        let undeclared = || {
            let mut loc = tok.location();
            if let Some(l) = label {
                loc = loc.with_label(l);
            }
            ParseError::UndeclaredSymbol {
                loc,
                symbol: tok.text.to_string(),
            }
        };
        let s = *self.symbol_ids.get(tok.text).ok_or_else(undeclared)?;
        if self.symbols[s.0 as usize].kind == SymbolKind::Variable && !self.active_var[s.0 as usize] {
            return Err(undeclared());
        }
        Ok(s)
    }

    fn active_variable(&self, tok: &Token<'a>, label: Option<&str>) -> Result<Sym, ParseError> {
        let s = self.lookup_math(tok, label)?;
        if self.symbols[s.0 as usize].kind != SymbolKind::Variable {
            let mut loc = tok.location();
            if let Some(l) = label {
                loc = loc.with_label(l);
            }
            return Err(ParseError::Malformed {
                loc,
                msg: format!("`{}` is not a variable", tok.text),
            });
        }
        Ok(s)
    }

    fn disjoint(&mut self, start: &Token<'a>) -> Result<(), ParseError> {
        let (body, term) = self.statement_body(start, None)?;
        if term != "$." {
            return Err(ParseError::Malformed {
                loc: start.location(),
                msg: "malformed `$d` statement".into(),
            });
        }
        let mut vars = Vec::with_capacity(body.len());
        for tok in &body {
            let v = self.active_variable(tok, None)?;
            if vars.contains(&v) {
                return Err(ParseError::Malformed {
                    loc: tok.location(),
                    msg: format!("variable `{}` repeated in `$d`", tok.text),
                });
            }
            vars.push(v);
        }
        for i in 0..vars.len() {
            for j in i + 1..vars.len() {
                let p = dv_pair(vars[i], vars[j]);
                if !self.dv.contains(&p) {
                    self.dv.push(p);
                    self.dv_snapshot = None;
                }
            }
        }
        Ok(())
    }

    fn define_label(&mut self, tok: &Token<'a>, r: LabelRef) -> Result<(), ParseError> {
        if self.labels.contains_key(tok.text) {
            return Err(ParseError::DuplicateLabel {
                loc: tok.location(),
                label: tok.text.to_string(),
            });
        }
        self.labels.insert(tok.text.to_string(), r);
        Ok(())
    }

    fn math_expr(&self, body: &[Token<'a>], label: &str, start: &Token<'a>) -> Result<Expr, ParseError> {
        let Some((first, rest)) = body.split_first() else {
            return Err(ParseError::Malformed {
                loc: start.location().with_label(label),
                msg: "missing typecode".into(),
            });
        };
        let tc = self.lookup_math(first, Some(label))?;
        if self.symbols[tc.0 as usize].kind != SymbolKind::Constant {
            return Err(ParseError::Malformed {
                loc: first.location().with_label(label),
                msg: format!("typecode `{}` is not a constant", first.text),
            });
        }
        let body = rest
            .iter()
            .map(|t| self.lookup_math(t, Some(label)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Expr::new(tc, body))
    }

    fn floating(&mut self, label: &Token<'a>, kw: &Token<'a>) -> Result<(), ParseError> {
        let (body, term) = self.statement_body(kw, Some(label.text))?;
        if term != "$." || body.len() != 2 {
            return Err(ParseError::Malformed {
                loc: kw.location().with_label(label.text),
                msg: "`$f` takes a typecode and a variable".into(),
            });
        }
        let expr = self.math_expr(&body, label.text, kw)?;
        let var = self.active_variable(&body[1], Some(label.text))?;
        if self.active_float.contains_key(&var) {
            return Err(ParseError::Malformed {
                loc: body[1].location().with_label(label.text),
                msg: format!("variable `{}` already has an active `$f`", body[1].text),
            });
        }
        let id = HypId(self.hyps.len() as u32);
        self.define_label(label, LabelRef::Hyp(id))?;
        self.hyps.push(Hypothesis {
            label: label.text.to_string(),
            kind: HypKind::Floating,
            expr,
            loc: label.location().with_label(label.text),
            seq: self.seq,
            scope_end: usize::MAX,
        });
        self.active_float.insert(var, id);
        self.floats_by_var.entry(var).or_default().push(id);
        self.active_hyps.push(id);
        Ok(())
    }

    fn essential(&mut self, label: &Token<'a>, kw: &Token<'a>) -> Result<(), ParseError> {
        let (body, term) = self.statement_body(kw, Some(label.text))?;
        if term != "$." {
            return Err(ParseError::Malformed {
                loc: kw.location().with_label(label.text),
                msg: "`$e` cannot have a proof".into(),
            });
        }
        let expr = self.math_expr(&body, label.text, kw)?;
        let id = HypId(self.hyps.len() as u32);
        self.define_label(label, LabelRef::Hyp(id))?;
        self.hyps.push(Hypothesis {
            label: label.text.to_string(),
            kind: HypKind::Essential,
            expr,
            loc: label.location().with_label(label.text),
            seq: self.seq,
            scope_end: usize::MAX,
        });
        self.active_hyps.push(id);
        Ok(())
    }

    fn assertion(&mut self, label: &Token<'a>, kw: &Token<'a>, kind: AssertionKind) -> Result<(), ParseError> {
        let (body, term) = self.statement_body(kw, Some(label.text))?;
        let expr = self.math_expr(&body, label.text, kw)?;
        let proof = match (kind, term) {
            (AssertionKind::Axiom, "$.") => None,
            (AssertionKind::Axiom, _) => {
                return Err(ParseError::Malformed {
                    loc: kw.location().with_label(label.text),
                    msg: "`$a` cannot have a proof".into(),
                })
            }
            (AssertionKind::Theorem, "$=") => Some(self.proof(label)?),
            (AssertionKind::Theorem, _) => {
                return Err(ParseError::Scope {
                    loc: kw.location().with_label(label.text),
                    msg: "`$p` statement lacks `$=`".into(),
                })
            }
        };

        let mut mand = vec![false; self.symbols.len()];
        let mark = |e: &Expr, mand: &mut Vec<bool>, syms: &[SymbolInfo]| {
            for s in &e.body {
                if syms[s.0 as usize].kind == SymbolKind::Variable {
                    mand[s.0 as usize] = true;
                }
            }
        };
        mark(&expr, &mut mand, &self.symbols);
        for h in &self.active_hyps {
            let hyp = &self.hyps[h.0 as usize];
            if hyp.kind == HypKind::Essential {
                mark(&hyp.expr, &mut mand, &self.symbols);
            }
        }
        let mut hyps = Vec::new();
        let mut typed = vec![false; self.symbols.len()];
        for h in &self.active_hyps {
            let hyp = &self.hyps[h.0 as usize];
            match hyp.variable() {
                Some(v) if mand[v.0 as usize] => {
                    typed[v.0 as usize] = true;
                    hyps.push(*h);
                }
                Some(_) => {}
                None => hyps.push(*h),
            }
        }
        for (i, m) in mand.iter().enumerate() {
            if *m && !typed[i] {
                return Err(ParseError::Malformed {
                    loc: label.location().with_label(label.text),
                    msg: format!("variable `{}` has no active `$f`", self.symbols[i].text),
                });
            }
        }
        let dv: Vec<(Sym, Sym)> = self
            .dv
            .iter()
            .copied()
            .filter(|(a, b)| mand[a.0 as usize] && mand[b.0 as usize])
            .collect();
        let scope_dv = match &self.dv_snapshot {
            Some(s) => s.clone(),
            None => {
                let s = Arc::new(self.dv.clone());
                self.dv_snapshot = Some(s.clone());
                s
            }
        };
        let id = AssertionId(self.assertions.len() as u32);
        self.define_label(label, LabelRef::Assertion(id))?;
        self.assertions.push(Assertion {
            label: label.text.to_string(),
            kind,
            expr,
            frame: Frame { hyps, dv, scope_dv },
            proof,
            loc: label.location().with_label(label.text),
            index: id.index(),
            seq: self.seq,
        });
        Ok(())
    }

    fn proof(&mut self, label: &Token<'a>) -> Result<ProofSource, ParseError> {
        let mut toks = Vec::new();
        loop {
            let t = self.next().ok_or_else(|| ParseError::Scope {
                loc: label.location().with_label(label.text),
                msg: "proof is not terminated by `$.`".into(),
            })?;
            match t.text {
                "$." => break,
                s if s.starts_with('$') => {
                    return Err(ParseError::Scope {
                        loc: t.location().with_label(label.text),
                        msg: format!("unexpected `{s}` inside proof"),
                    })
                }
                _ => toks.push(t),
            }
        }
        if toks.first().map(|t| t.text) == Some("(") {
            let close = toks.iter().position(|t| t.text == ")").ok_or_else(|| ParseError::Malformed {
                loc: label.location().with_label(label.text),
                msg: "compressed proof label list is not closed".into(),
            })?;
            let labels = toks[1..close].iter().map(|t| t.text.to_string()).collect();
            let mut letters = String::new();
            for t in &toks[close + 1..] {
                if !t.text.bytes().all(|b| b.is_ascii_uppercase() || b == b'?') {
                    return Err(ParseError::Lexical {
                        loc: t.location().with_label(label.text),
                        msg: format!("invalid compressed proof chunk `{}`", t.text),
                    });
                }
                letters.push_str(t.text);
            }
            Ok(ProofSource::Compressed { labels, letters })
        } else {
            Ok(ProofSource::Normal(toks.iter().map(|t| t.text.to_string()).collect()))
        }
    }
}
