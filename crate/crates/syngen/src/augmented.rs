//! The augmented dataset: fixed-size blocks of arithmetic and ring proofs,
//! plus held-out statements drawn from separate random streams.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use mmprove_core::database::Database;
use mmprove_core::proofdata::{proofstep_count, ProofStepRecord};
use mmprove_core::ProofFormat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{gen_arith, ArithKind};
use crate::ring::{gen_ring, RingTask};
use crate::{GenError, GeneratedProof};

const NDIGITS: u32 = 9;
const RING_DEPTH: usize = 6;
const TEST_STREAM: u64 = 1 << 32;
const MAX_REDRAWS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Add,
    Div,
    Mod,
    Exp,
    Ring2,
    Ring3,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::Add,
        Category::Div,
        Category::Mod,
        Category::Exp,
        Category::Ring2,
        Category::Ring3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Add => "add",
            Category::Div => "div",
            Category::Mod => "mod",
            Category::Exp => "exp",
            Category::Ring2 => "ring2",
            Category::Ring3 => "ring3",
        }
    }

    /// Proofs of this category in the augmented dataset.
    pub fn count(self) -> usize {
        match self {
            Category::Add | Category::Div => 100,
            _ => 50,
        }
    }

    fn index(self) -> u64 {
        Category::ALL.iter().position(|c| *c == self).expect("listed category") as u64
    }

    pub fn generate(self, db: &Database, label: &str, rng: &mut ChaCha8Rng) -> Result<GeneratedProof, GenError> {
        let arith = |kind, rng: &mut ChaCha8Rng| gen_arith(db, label, kind, NDIGITS, rng);
        match self {
            Category::Add => arith(ArithKind::Add, rng),
            Category::Div => arith(ArithKind::Div, rng),
            Category::Mod => arith(ArithKind::Mod, rng),
            Category::Exp => arith(ArithKind::Exp, rng),
            Category::Ring2 => gen_ring(db, label, &RingTask::new(2, RING_DEPTH), rng),
            Category::Ring3 => gen_ring(db, label, &RingTask::new(3, RING_DEPTH), rng),
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown category `{s}`"))
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn training_block(db: &Database, category: Category, seed: u64) -> Result<Vec<GeneratedProof>, GenError> {
    let mut rng = stream_rng(seed, category.index());
    (0..category.count())
        .map(|i| category.generate(db, &format!("aug-{category}-{i:03}"), &mut rng))
        .collect()
}

#[derive(Clone, Debug)]
pub struct Augmented {
    pub proofs: Vec<(Category, GeneratedProof)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryTotals {
    pub category: Category,
    pub proofs: usize,
    pub proofsteps: usize,
}

impl Augmented {
    pub fn totals(&self) -> Vec<CategoryTotals> {
        Category::ALL
            .iter()
            .map(|c| {
                let block: Vec<&GeneratedProof> = self.proofs.iter().filter(|(k, _)| k == c).map(|(_, p)| p).collect();
                CategoryTotals {
                    category: *c,
                    proofs: block.len(),
                    proofsteps: block.iter().map(|p| p.proofsteps).sum(),
                }
            })
            .collect()
    }

    pub fn records(&self, db: &Database) -> Vec<ProofStepRecord> {
        self.proofs.iter().flat_map(|(_, p)| p.records(db)).collect()
    }

    /// Appends the synthetic records to `base`; returns the merged set and
    /// the synthetic share of its distinct proof steps.
    pub fn merge(&self, db: &Database, base: &[ProofStepRecord]) -> (Vec<ProofStepRecord>, f64) {
        let extra = self.records(db);
        let added = proofstep_count(&extra) as f64;
        let mut merged = base.to_vec();
        merged.extend(extra);
        let total = proofstep_count(base) as f64 + added;
        (merged, if total == 0.0 { 0.0 } else { added / total })
    }

    /// All proofs as `${ ... $}` blocks appendable to the library.
    pub fn to_mm(&self, db: &Database, format: ProofFormat) -> Result<String, GenError> {
        mm_fragment(db, self.proofs.iter().map(|(_, p)| p), format)
    }
}

pub fn mm_fragment<'a>(
    db: &Database,
    proofs: impl IntoIterator<Item = &'a GeneratedProof>,
    format: ProofFormat,
) -> Result<String, GenError> {
    let mut out = String::new();
    for p in proofs {
        out.push_str(&p.to_mm(db, format)?);
        out.push('\n');
    }
    Ok(out)
}

/// Generates every category block; each block draws from its own stream.
pub fn build_augmented(db: &Database, seed: u64) -> Result<Augmented, GenError> {
    let mut proofs = Vec::new();
    for c in Category::ALL {
        proofs.extend(training_block(db, c, seed)?.into_iter().map(|p| (c, p)));
    }
    Ok(Augmented { proofs })
}

/// `n` held-out statements of `category`, drawn from a stream disjoint from
/// the training block and excluding any statement the block contains. Each
/// carries the generator's proof for use as an oracle.
pub fn gen_test_statements(db: &Database, category: Category, n: usize, seed: u64) -> Result<Vec<GeneratedProof>, GenError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut seen: HashSet<String> = training_block(db, category, seed)?
        .iter()
        .map(|p| p.goal_text(db))
        .collect();
    let mut rng = stream_rng(seed, TEST_STREAM + category.index());
    let mut out = Vec::with_capacity(n);
    let mut draws = 0;
    while out.len() < n {
        if draws == MAX_REDRAWS + n {
            return Err(GenError::Exhausted(draws));
        }
        draws += 1;
        let p = category.generate(db, &format!("test-{category}-{:03}", out.len()), &mut rng)?;
        if seen.insert(p.goal_text(db)) {
            out.push(p);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn categories_round_trip_and_sum_to_four_hundred() {
        for c in Category::ALL {
            assert_eq!(c.name().parse::<Category>().unwrap(), c);
        }
        assert_eq!(Category::ALL.iter().map(|c| c.count()).sum::<usize>(), 400);
        assert!("ring4".parse::<Category>().is_err());
    }
}
