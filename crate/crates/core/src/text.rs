//! Canonical statement and tactic text.
//!
//! A goal reads `[[ |- h1 |- h2 ]] |- concl`; a tactic appends
//! `{{ var : term }}` blocks, sorted by variable name, to the theorem's
//! statement text.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TextError {
    #[error("expected `{expected}` at token {at}")]
    Expected { expected: &'static str, at: usize },
    #[error("unexpected trailing text at token {0}")]
    Trailing(usize),
    #[error("empty statement")]
    Empty,
}

/// Collapses every run of whitespace to one space and trims the ends.
pub fn normalize(s: &str) -> String {
    s.split_ascii_whitespace().collect::<Vec<_>>().join(" ")
}

/// Renders `[[ h1 h2 ]] concl` from already rendered expressions.
pub fn goal_text<S: AsRef<str>>(hyps: &[S], concl: &str) -> String {
    let mut out = String::from("[[ ");
    for h in hyps {
        out.push_str(h.as_ref());
        out.push(' ');
    }
    out.push_str("]] ");
    out.push_str(concl);
    out
}

/// Renders a tactic: statement text plus sorted substitution blocks.
pub fn tactic_text<S: AsRef<str>>(statement: &str, subst: &[(S, S)]) -> String {
    let mut pairs: Vec<(&str, &str)> = subst.iter().map(|(v, t)| (v.as_ref(), t.as_ref())).collect();
    pairs.sort();
    let mut out = statement.to_string();
    for (v, t) in pairs {
        out.push_str(" {{ ");
        out.push_str(v);
        out.push_str(" : ");
        out.push_str(t);
        out.push_str(" }}");
    }
    out
}

/// A statement split into token groups: each hypothesis and the conclusion
/// begin with their typecode token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatementTokens<'a> {
    pub hyps: Vec<Vec<&'a str>>,
    pub concl: Vec<&'a str>,
}

/// A parsed tactic: the statement part and its `{{ var : term }}` blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TacticTokens<'a> {
    pub statement: StatementTokens<'a>,
    pub subst: Vec<(&'a str, Vec<&'a str>)>,
}

impl StatementTokens<'_> {
    /// Canonical text of the statement part.
    pub fn canonical(&self) -> String {
        let hyps: Vec<String> = self.hyps.iter().map(|h| h.join(" ")).collect();
        goal_text(&hyps, &self.concl.join(" "))
    }
}

fn split_hyps<'a>(toks: &[&'a str], typecode: &str) -> Vec<Vec<&'a str>> {
    let mut out: Vec<Vec<&'a str>> = Vec::new();
    for t in toks {
        if *t == typecode || out.is_empty() {
            out.push(vec![*t]);
        } else {
            out.last_mut().unwrap().push(*t);
        }
    }
    out
}

fn statement<'a>(toks: &[&'a str], typecode: &str) -> Result<(StatementTokens<'a>, usize), TextError> {
    if toks.first() != Some(&"[[") {
        return Err(TextError::Expected { expected: "[[", at: 0 });
    }
    let close = toks
        .iter()
        .position(|t| *t == "]]")
        .ok_or(TextError::Expected { expected: "]]", at: toks.len() })?;
    let hyps = split_hyps(&toks[1..close], typecode);
    if hyps.iter().any(|h| h[0] != typecode) {
        return Err(TextError::Expected { expected: "hypothesis typecode", at: 1 });
    }
    let mut end = close + 1;
    while end < toks.len() && toks[end] != "{{" {
        end += 1;
    }
    let concl = toks[close + 1..end].to_vec();
    if concl.is_empty() {
        return Err(TextError::Empty);
    }
    Ok((StatementTokens { hyps, concl }, end))
}

/// Parses `[[ hyps ]] concl`. Hypotheses are split at `typecode`.
pub fn parse_statement<'a>(text: &'a str, typecode: &str) -> Result<StatementTokens<'a>, TextError> {
    let toks: Vec<&str> = text.split_ascii_whitespace().collect();
    let (st, end) = statement(&toks, typecode)?;
    if end != toks.len() {
        return Err(TextError::Trailing(end));
    }
    Ok(st)
}

/// Parses `[[ hyps ]] concl {{ v : t }}...`.
pub fn parse_tactic_text<'a>(text: &'a str, typecode: &str) -> Result<TacticTokens<'a>, TextError> {
    let toks: Vec<&str> = text.split_ascii_whitespace().collect();
    let (statement, mut i) = statement(&toks, typecode)?;
    let mut subst = Vec::new();
    while i < toks.len() {
        if toks[i] != "{{" {
            return Err(TextError::Expected { expected: "{{", at: i });
        }
        let var = *toks.get(i + 1).ok_or(TextError::Expected { expected: "variable", at: i + 1 })?;
        if toks.get(i + 2) != Some(&":") {
            return Err(TextError::Expected { expected: ":", at: i + 2 });
        }
        let start = i + 3;
        let close = toks[start..]
            .iter()
            .position(|t| *t == "}}")
            .map(|p| p + start)
            .ok_or(TextError::Expected { expected: "}}", at: toks.len() })?;
        if toks[start..close].iter().any(|t| *t == "{{" || *t == ":") {
            return Err(TextError::Expected { expected: "}}", at: start });
        }
        subst.push((var, toks[start..close].to_vec()));
        i = close + 1;
    }
    Ok(TacticTokens { statement, subst })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_hypotheses_render_with_one_space() {
        assert_eq!(goal_text::<&str>(&[], "|- x"), "[[ ]] |- x");
    }

    #[test]
    fn tactic_blocks_are_sorted_by_variable() {
        let t = tactic_text("[[ ]] |- A = A", &[("ps", "b"), ("ch", "c"), ("ph", "a")]);
        assert_eq!(t, "[[ ]] |- A = A {{ ch : c }} {{ ph : a }} {{ ps : b }}");
    }

    #[test]
    fn parses_the_transitivity_step() {
        let text = "[[ |- A = B |- C = B ]] |- A = C {{ A : ( 3 + 2 ) }} {{ B : ( 4 + 1 ) }} {{ C : 5 }}";
        let t = parse_tactic_text(text, "|-").unwrap();
        assert_eq!(t.statement.hyps.len(), 2);
        assert_eq!(t.statement.hyps[1], ["|-", "C", "=", "B"]);
        assert_eq!(t.statement.concl, ["|-", "A", "=", "C"]);
        assert_eq!(t.subst[1], ("B", vec!["(", "4", "+", "1", ")"]));
        assert_eq!(t.statement.canonical(), "[[ |- A = B |- C = B ]] |- A = C");
    }

    #[test]
    fn truncated_tactic_is_an_error() {
        assert!(parse_tactic_text("[[ ]] |- A = A {{ A :", "|-").is_err());
        assert!(parse_tactic_text("[[ |- A ", "|-").is_err());
        assert!(parse_tactic_text("garbage", "|-").is_err());
    }

    #[test]
    fn whitespace_is_normalized() {
        assert_eq!(normalize("  [[   ]]\n|-  x "), "[[ ]] |- x");
    }
}
