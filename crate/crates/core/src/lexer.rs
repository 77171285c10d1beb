//! Tokenizer for the `.mm` format and the `$[ $]` include pre-pass.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Location, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    pub line: usize,
    pub column: usize,
}

impl Token<'_> {
    pub fn location(&self) -> Location {
        Location::new(self.line, self.column)
    }
}

fn is_mm_whitespace(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r' | 0x0c)
}

/// Splits a source into whitespace-separated tokens, dropping `$( ... $)`
/// comments. Comments do not nest.
pub fn tokenize(src: &str) -> Result<Vec<Token<'_>>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::with_capacity(src.len() / 4);
    let mut i = 0;
    let mut line = 1;
    let mut line_start = 0;
    let mut in_comment: Option<Location> = None;
    while i < bytes.len() {
        let b = bytes[i];
        if is_mm_whitespace(b) {
            if b == b'\n' {
                line += 1;
                line_start = i + 1;
            }
            i += 1;
            continue;
        }
        let start = i;
        while i < bytes.len() && !is_mm_whitespace(bytes[i]) {
            i += 1;
        }
        let text = &src[start..i];
        let column = start - line_start + 1;
        if !text.is_ascii() || text.bytes().any(|c| c < 0x21 || c > 0x7e) {
            if in_comment.is_none() {
                return Err(ParseError::Lexical {
                    loc: Location::new(line, column),
                    msg: format!("non-printable or non-ASCII token `{text}`"),
                });
            }
            continue;
        }
        if let Some(open) = &in_comment {
            if text == "$)" {
                in_comment = None;
            } else if text == "$(" {
                return Err(ParseError::Lexical {
                    loc: Location::new(line, column),
                    msg: format!("nested comment (outer comment opened at {open})"),
                });
            } else if text.contains("$(") || text.contains("$)") {
                return Err(ParseError::Lexical {
                    loc: Location::new(line, column),
                    msg: format!("comment delimiter embedded in `{text}`"),
                });
            }
            continue;
        }
        if text == "$(" {
            in_comment = Some(Location::new(line, column));
            continue;
        }
        out.push(Token { text, line, column });
    }
    if let Some(open) = in_comment {
        return Err(ParseError::Lexical {
            loc: open,
            msg: "unterminated comment".into(),
        });
    }
    Ok(out)
}

/// Reads `path` and splices every `$[ file $]` directive with the referenced
/// file's contents. Each file is included at most once; paths are relative to
/// the including file.
pub fn resolve_includes(path: &Path) -> Result<String, ParseError> {
    let mut seen = HashSet::new();
    let mut out = String::new();
    include_into(path, &mut seen, &mut out)?;
    Ok(out)
}

fn include_into(path: &Path, seen: &mut HashSet<PathBuf>, out: &mut String) -> Result<(), ParseError> {
    let canon = fs::canonicalize(path)
        .map_err(|e| ParseError::Include(format!("{}: {e}", path.display())))?;
    if !seen.insert(canon.clone()) {
        return Ok(());
    }
    let src = fs::read_to_string(&canon)
        .map_err(|e| ParseError::Include(format!("{}: {e}", path.display())))?;
    let dir = canon.parent().map(Path::to_path_buf).unwrap_or_default();
    splice_includes(&src, &dir, seen, out)
}

fn splice_includes(
    src: &str,
    dir: &Path,
    seen: &mut HashSet<PathBuf>,
    out: &mut String,
) -> Result<(), ParseError> {
    let bytes = src.as_bytes();
    let mut i = 0;
    let mut copied = 0;
    let mut in_comment = false;
    while i < bytes.len() {
        if is_mm_whitespace(bytes[i]) {
            i += 1;
            continue;
        }
        let start = i;
        while i < bytes.len() && !is_mm_whitespace(bytes[i]) {
            i += 1;
        }
        let tok = &src[start..i];
        if in_comment {
            if tok == "$)" {
                in_comment = false;
            }
            continue;
        }
        match tok {
            "$(" => in_comment = true,
            "$[" => {
                let rest = &src[i..];
                let close = rest
                    .find("$]")
                    .ok_or_else(|| ParseError::Include("unterminated `$[`".into()))?;
                let name = rest[..close].trim();
                if name.is_empty() || name.split_ascii_whitespace().count() != 1 {
                    return Err(ParseError::Include(format!("bad include file name `{name}`")));
                }
                out.push_str(&src[copied..start]);
                include_into(&dir.join(name), seen, out)?;
                out.push('\n');
                i += close + 2;
                copied = i;
            }
            _ => {}
        }
    }
    out.push_str(&src[copied..]);
    Ok(())
}
