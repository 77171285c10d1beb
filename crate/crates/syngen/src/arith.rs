//! n-digit arithmetic statements and their decimal proofs.

use std::fmt;
use std::str::FromStr;

use mmprove_core::database::Database;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::builder::ProofBuilder;
use crate::decimal::{signed, Decimal};
use crate::{GenError, GeneratedProof};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArithKind {
    Add,
    Mul,
    Div,
    Mod,
    Exp,
}

impl ArithKind {
    pub const TABLE: [ArithKind; 4] = [ArithKind::Add, ArithKind::Div, ArithKind::Mod, ArithKind::Exp];

    pub fn name(self) -> &'static str {
        match self {
            ArithKind::Add => "add",
            ArithKind::Mul => "mul",
            ArithKind::Div => "div",
            ArithKind::Mod => "mod",
            ArithKind::Exp => "exp",
        }
    }
}

impl fmt::Display for ArithKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ArithKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "add" => Ok(ArithKind::Add),
            "mul" => Ok(ArithKind::Mul),
            "div" => Ok(ArithKind::Div),
            "mod" => Ok(ArithKind::Mod),
            "exp" => Ok(ArithKind::Exp),
            other => Err(format!("unknown arithmetic kind `{other}`")),
        }
    }
}

/// A sampled arithmetic problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArithTask {
    pub kind: ArithKind,
    pub ndigits: u32,
    pub lhs: i128,
    pub rhs: i128,
}

impl ArithTask {
    pub fn result(&self) -> i128 {
        match self.kind {
            ArithKind::Add => self.lhs + self.rhs,
            ArithKind::Mul => self.lhs * self.rhs,
            ArithKind::Div => self.lhs / self.rhs,
            ArithKind::Mod => self.lhs.rem_euclid(self.rhs),
            ArithKind::Exp => self.lhs.pow(self.rhs as u32),
        }
    }

    pub fn statement(&self) -> String {
        let op = match self.kind {
            ArithKind::Add => "+",
            ArithKind::Mul => "x.",
            ArithKind::Div => "/",
            ArithKind::Mod => "mod",
            ArithKind::Exp => "^",
        };
        format!("|- ( {} {op} {} ) = {}", signed(self.lhs), signed(self.rhs), signed(self.result()))
    }
}

fn bound(ndigits: u32) -> i128 {
    10i128.pow(ndigits)
}

fn uniform(rng: &mut impl Rng, ndigits: u32) -> i128 {
    let b = bound(ndigits);
    rng.gen_range(-b..=b)
}

fn sign(rng: &mut impl Rng) -> i128 {
    if rng.gen_bool(0.5) {
        1
    } else {
        -1
    }
}

/// Samples operands for `kind` with `|operand| <= 10^n`.
///
/// Sums and products draw both operands uniformly. A division draws a
/// divisor of `k` digits (`k` uniform in `1..=n`) and a quotient filling at
/// least half of the remaining digit budget, so the dividend stays within
/// range. A modulus has `n - n/9 ..= n` digits. An exponent base has a
/// uniform digit count and the exponent is uniform up to the largest power
/// (at most 2, or 3 with probability 0.3) that stays below `10^n`.
pub fn sample_task(kind: ArithKind, ndigits: u32, rng: &mut impl Rng) -> ArithTask {
    let n = ndigits.clamp(1, 18);
    let (lhs, rhs) = match kind {
        ArithKind::Add | ArithKind::Mul => (uniform(rng, n), uniform(rng, n)),
        ArithKind::Div => {
            let k = rng.gen_range(1..=n);
            let divisor = rng.gen_range(1..=bound(k));
            let rest = n - k;
            let quotient = if rest == 0 {
                rng.gen_range(1..=(bound(n) / divisor).max(1))
            } else {
                let j = rng.gen_range(rest.div_ceil(2)..=rest);
                rng.gen_range(1..=bound(j))
            };
            (sign(rng) * divisor * quotient, sign(rng) * divisor)
        }
        ArithKind::Mod => {
            let dividend = uniform(rng, n);
            let k = rng.gen_range(n - n / 9..=n);
            (dividend, rng.gen_range(1..=bound(k)))
        }
        ArithKind::Exp => {
            let k = rng.gen_range(1..=n);
            let base = rng.gen_range(0..=bound(k));
            let cap = if rng.gen_bool(0.3) { 3 } else { 2 };
            let mut top = 0u32;
            while top < cap && base.pow(top + 1) < bound(n) {
                top += 1;
            }
            (base, rng.gen_range(0..=top) as i128)
        }
    };
    ArithTask { kind, ndigits: n, lhs, rhs }
}

/// Proves the statement of `task`.
pub fn prove_task(db: &Database, label: &str, task: &ArithTask) -> Result<GeneratedProof, GenError> {
    let mut b = ProofBuilder::new(db);
    let mut d = Decimal::new(&mut b);
    let tree = match task.kind {
        ArithKind::Add => d.signed_add(task.lhs, task.rhs)?,
        ArithKind::Mul => d.signed_mul(task.lhs, task.rhs)?,
        ArithKind::Div => d.signed_div(task.lhs, task.rhs)?,
        ArithKind::Mod => d.modulo(task.lhs, task.rhs as u128)?,
        ArithKind::Exp => d.pow(task.lhs as u128, task.rhs as u32)?,
    };
    Ok(GeneratedProof::new(db, label, Vec::new(), tree))
}

/// Samples an `ndigits` problem of `kind` and proves it.
pub fn gen_arith(db: &Database, label: &str, kind: ArithKind, ndigits: u32, rng: &mut impl Rng) -> Result<GeneratedProof, GenError> {
    let task = sample_task(kind, ndigits, rng);
    prove_task(db, label, &task)
}
