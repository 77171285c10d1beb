//! The letter encoding used by compressed proofs.
//!
//! Numbers are written with `U`-`Y` as leading base-5 digits and a final
//! `A`-`T` base-20 digit. `1..=m` are the mandatory hypotheses, the next `n`
//! are the parenthesized labels, and later numbers recall steps tagged `Z`.

/// A decoded compressed-proof step, before label resolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RawStep {
    Mandatory(usize),
    Listed(usize),
    Saved(usize),
    /// `Z`: remember the top of the stack.
    Save,
    /// `?`: an unproved step.
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("step {step}: {msg}")]
pub struct DecodeError {
    pub step: usize,
    pub msg: String,
}

/// Decodes the letter block of a compressed proof.
pub fn decompress(mandatory: usize, listed: usize, letters: &str) -> Result<Vec<RawStep>, DecodeError> {
    let mut out = Vec::with_capacity(letters.len());
    let mut num: usize = 0;
    let mut pending = false;
    let mut saved = 0usize;
    for c in letters.bytes() {
        let step = out.len();
        match c {
            b'U'..=b'Y' => {
                num = num
                    .checked_mul(5)
                    .and_then(|n| n.checked_add((c - b'U' + 1) as usize))
                    .ok_or_else(|| DecodeError {
                        step,
                        msg: "number overflow".into(),
                    })?;
                pending = true;
            }
            b'A'..=b'T' => {
                let n = num * 20 + (c - b'A' + 1) as usize;
                num = 0;
                pending = false;
                let s = if n <= mandatory {
                    RawStep::Mandatory(n - 1)
                } else if n <= mandatory + listed {
                    RawStep::Listed(n - mandatory - 1)
                } else {
                    let k = n - mandatory - listed - 1;
                    if k >= saved {
                        return Err(DecodeError {
                            step,
                            msg: format!("back-reference {n} to unsaved step {}", k + 1),
                        });
                    }
                    RawStep::Saved(k)
                };
                out.push(s);
            }
            b'Z' => {
                if pending {
                    return Err(DecodeError {
                        step,
                        msg: "`Z` inside a number".into(),
                    });
                }
                if !matches!(out.last(), Some(s) if *s != RawStep::Save) {
                    return Err(DecodeError {
                        step,
                        msg: "`Z` without a preceding step".into(),
                    });
                }
                saved += 1;
                out.push(RawStep::Save);
            }
            b'?' => {
                if pending {
                    return Err(DecodeError {
                        step,
                        msg: "`?` inside a number".into(),
                    });
                }
                out.push(RawStep::Unknown);
            }
            other => {
                return Err(DecodeError {
                    step,
                    msg: format!("invalid character `{}`", other as char),
                })
            }
        }
    }
    if pending {
        return Err(DecodeError {
            step: out.len(),
            msg: "proof ends inside a number".into(),
        });
    }
    Ok(out)
}

/// Writes the letters for one step number (1-based).
pub fn encode_number(mut n: usize, out: &mut String) {
    debug_assert!(n >= 1);
    let mut digits = vec![(b'A' + ((n - 1) % 20) as u8) as char];
    n = (n - 1) / 20;
    while n > 0 {
        digits.push((b'U' + ((n - 1) % 5) as u8) as char);
        n = (n - 1) / 5;
    }
    out.extend(digits.iter().rev());
}

/// Encodes a step sequence; the inverse of [`decompress`].
pub fn compress(mandatory: usize, listed: usize, steps: &[RawStep]) -> String {
    let mut out = String::new();
    for s in steps {
        match *s {
            RawStep::Mandatory(i) => encode_number(i + 1, &mut out),
            RawStep::Listed(j) => encode_number(mandatory + j + 1, &mut out),
            RawStep::Saved(k) => encode_number(mandatory + listed + k + 1, &mut out),
            RawStep::Save => out.push('Z'),
            RawStep::Unknown => out.push('?'),
        }
    }
    out
}

/// Breaks a letter block into lines of at most `width` characters.
pub fn wrap_letters(letters: &str, width: usize) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = letters;
    while rest.len() > width {
        let (a, b) = rest.split_at(width);
        out.push(a);
        rest = b;
    }
    if !rest.is_empty() {
        out.push(rest);
    }
    out
}
