//! Ring equalities: start from `t = t` and rewrite either side with
//! weighted algebraic identities.

use mmprove_core::database::Database;
use mmprove_core::ProofTree;
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::builder::ProofBuilder;
use crate::{GenError, GeneratedProof};

/// Default theorem weights.
pub const DEFAULT_WEIGHTS: [(&str, f64); 9] = [
    ("eqcomd", 1.0),
    ("int-addcomd", 1.0),
    ("int-addassocd", 1.0),
    ("int-mulcomd", 1.0),
    ("int-mulassocd", 1.0),
    ("int-leftdistd", 3.0),
    ("int-rightdistd", 3.0),
    ("int-sqdefd", 5.0),
    ("muladdd2", 5.0),
];

const VAR_NAMES: [&str; 8] = ["A", "B", "C", "D", "E", "G", "H", "K"];

const SEED_GROWTH: usize = 3;

/// Draws at most this many theorems per transformation before giving up.
const MAX_DRAWS: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RingTask {
    pub nbvar: usize,
    pub depth: usize,
    /// Seed leaves beyond one per variable, at most this many per depth step.
    pub seed_growth: usize,
    pub weights: Vec<(String, f64)>,
}

impl RingTask {
    pub fn new(nbvar: usize, depth: usize) -> RingTask {
        RingTask {
            nbvar,
            depth,
            seed_growth: SEED_GROWTH,
            weights: DEFAULT_WEIGHTS.iter().map(|(l, w)| (l.to_string(), *w)).collect(),
        }
    }
}

/// Weighted choice among rewrite theorems.
#[derive(Clone, Debug)]
pub struct TheoremSampler {
    labels: Vec<String>,
    weights: Vec<f64>,
    dist: WeightedIndex<f64>,
}

impl TheoremSampler {
    pub fn new(weights: &[(String, f64)]) -> Result<TheoremSampler, GenError> {
        for (l, _) in weights {
            if rule(l).is_none() && l != "eqcomd" {
                return Err(GenError::UnknownLabel(l.clone()));
            }
        }
        let w: Vec<f64> = weights.iter().map(|(_, w)| *w).collect();
        let dist = WeightedIndex::new(&w).map_err(|e| GenError::Step {
            label: "weights".into(),
            msg: e.to_string(),
        })?;
        Ok(TheoremSampler {
            labels: weights.iter().map(|(l, _)| l.clone()).collect(),
            weights: w,
            dist,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Normalized weights, in label order.
    pub fn probabilities(&self) -> Vec<f64> {
        let total: f64 = self.weights.iter().sum();
        self.weights.iter().map(|w| w / total).collect()
    }

    pub fn sample_index(&self, rng: &mut impl Rng) -> usize {
        self.dist.sample(rng)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> &str {
        &self.labels[self.sample_index(rng)]
    }
}

/// A real-valued term over the statement's variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RTerm {
    Var(usize),
    Add(Box<RTerm>, Box<RTerm>),
    Mul(Box<RTerm>, Box<RTerm>),
    Sq(Box<RTerm>),
}

use RTerm::{Add, Mul, Sq, Var};

fn add(a: RTerm, b: RTerm) -> RTerm {
    Add(Box::new(a), Box::new(b))
}

fn mul(a: RTerm, b: RTerm) -> RTerm {
    Mul(Box::new(a), Box::new(b))
}

impl RTerm {
    pub fn render(&self) -> String {
        match self {
            Var(i) => VAR_NAMES[*i].to_string(),
            Add(a, b) => format!("( {} + {} )", a.render(), b.render()),
            Mul(a, b) => format!("( {} x. {} )", a.render(), b.render()),
            Sq(a) => format!("( {} ^ 2 )", a.render()),
        }
    }

    fn children(&self) -> Vec<&RTerm> {
        match self {
            Var(_) => vec![],
            Add(a, b) | Mul(a, b) => vec![a, b],
            Sq(a) => vec![a],
        }
    }

    /// Paths to every subterm, root first.
    fn paths(&self) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for (i, c) in self.children().into_iter().enumerate() {
            for mut p in c.paths() {
                p.insert(0, i);
                out.push(p);
            }
        }
        out
    }

    fn at(&self, path: &[usize]) -> &RTerm {
        match path.split_first() {
            None => self,
            Some((i, rest)) => self.children()[*i].at(rest),
        }
    }

    fn replace(&self, path: &[usize], new: RTerm) -> RTerm {
        let Some((i, rest)) = path.split_first() else {
            return new;
        };
        match (self, i) {
            (Add(a, b), 0) => add(a.replace(rest, new), (**b).clone()),
            (Add(a, b), _) => add((**a).clone(), b.replace(rest, new)),
            (Mul(a, b), 0) => mul(a.replace(rest, new), (**b).clone()),
            (Mul(a, b), _) => mul((**a).clone(), b.replace(rest, new)),
            (Sq(a), _) => Sq(Box::new(a.replace(rest, new))),
            (Var(_), _) => unreachable!("path leads below a variable"),
        }
    }
}

/// Pattern terms: `Var(i)` is the i-th rule variable (A, B, C, D).
fn pv(i: usize) -> RTerm {
    Var(i)
}

/// Left and right sides of a rewrite theorem and whether it is symmetric.
fn rule(label: &str) -> Option<(RTerm, RTerm, bool)> {
    let (a, b, c, d) = (pv(0), pv(1), pv(2), pv(3));
    Some(match label {
        "int-addcomd" => (add(a.clone(), b.clone()), add(b, a), true),
        "int-addassocd" => (add(add(a.clone(), b.clone()), c.clone()), add(a, add(b, c)), false),
        "int-mulcomd" => (mul(a.clone(), b.clone()), mul(b, a), true),
        "int-mulassocd" => (mul(mul(a.clone(), b.clone()), c.clone()), mul(a, mul(b, c)), false),
        "int-leftdistd" => (
            mul(c.clone(), add(a.clone(), b.clone())),
            add(mul(c.clone(), a), mul(c, b)),
            false,
        ),
        "int-rightdistd" => (
            mul(add(a.clone(), b.clone()), c.clone()),
            add(mul(a, c.clone()), mul(b, c)),
            false,
        ),
        "int-sqdefd" => (mul(a.clone(), a.clone()), Sq(Box::new(a)), false),
        "muladdd2" => (
            mul(add(a.clone(), b.clone()), add(c.clone(), d.clone())),
            add(
                add(mul(a.clone(), c.clone()), mul(a.clone(), d.clone())),
                add(mul(b.clone(), c), mul(b, d)),
            ),
            false,
        ),
        _ => return None,
    })
}

fn matches(pattern: &RTerm, t: &RTerm, binds: &mut Vec<Option<RTerm>>) -> bool {
    match (pattern, t) {
        (Var(i), _) => match &binds[*i] {
            Some(b) => b == t,
            None => {
                binds[*i] = Some(t.clone());
                true
            }
        },
        (Add(p, q), Add(x, y)) | (Mul(p, q), Mul(x, y)) => matches(p, x, binds) && matches(q, y, binds),
        (Sq(p), Sq(x)) => matches(p, x, binds),
        _ => false,
    }
}

fn instantiate(pattern: &RTerm, binds: &[Option<RTerm>]) -> RTerm {
    match pattern {
        Var(i) => binds[*i].clone().expect("rule sides share variables"),
        Add(a, b) => add(instantiate(a, binds), instantiate(b, binds)),
        Mul(a, b) => mul(instantiate(a, binds), instantiate(b, binds)),
        Sq(a) => Sq(Box::new(instantiate(a, binds))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

struct Site {
    side: Side,
    path: Vec<usize>,
    reverse: bool,
    binds: Vec<Option<RTerm>>,
}

fn sites(label: &str, lhs: &RTerm, rhs: &RTerm) -> Vec<Site> {
    let Some((from, to, symmetric)) = rule(label) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for (side, term) in [(Side::Left, lhs), (Side::Right, rhs)] {
        for path in term.paths() {
            let sub = term.at(&path);
            for (reverse, pat) in [(false, &from), (true, &to)] {
                if reverse && symmetric {
                    continue;
                }
                let mut binds = vec![None; 4];
                if matches(pat, sub, &mut binds) {
                    out.push(Site {
                        side,
                        path: path.clone(),
                        reverse,
                        binds,
                    });
                }
            }
        }
    }
    out
}

struct RingProver<'p, 'a> {
    b: &'p mut ProofBuilder<'a>,
}

impl RingProver<'_, '_> {
    /// `|- ( ph -> t e. RR )`
    fn real(&mut self, t: &RTerm) -> Result<ProofTree, GenError> {
        let stmt = format!("|- ( ph -> {} e. RR )", t.render());
        if let Some(p) = self.b.cached(&stmt) {
            return Ok(p);
        }
        match t {
            Var(i) => Ok(ProofTree::Hyp(*i)),
            Add(x, y) | Mul(x, y) => {
                let label = if matches!(t, Add(..)) { "readdcld" } else { "remulcld" };
                let kids = vec![self.real(x)?, self.real(y)?];
                self.b.apply(label, &[("ph", "ph"), ("A", &x.render()), ("B", &y.render())], kids)
            }
            Sq(x) => {
                let kid = self.real(x)?;
                self.b.apply("resqcld", &[("ph", "ph"), ("A", &x.render())], vec![kid])
            }
        }
    }

    /// `|- ( ph -> old = new )` for one rule instance.
    fn rewrite(&mut self, label: &str, site: &Site) -> Result<(ProofTree, RTerm), GenError> {
        let (from, to, _) = rule(label).ok_or_else(|| GenError::UnknownLabel(label.to_string()))?;
        let used = 1 + site.binds.iter().rposition(Option::is_some).unwrap_or(0);
        let texts: Vec<String> = site.binds[..used].iter().map(|b| b.as_ref().map(RTerm::render).unwrap_or_default()).collect();
        let mut images: Vec<(&str, &str)> = vec![("ph", "ph")];
        let mut kids = Vec::new();
        for (i, t) in texts.iter().enumerate() {
            images.push((VAR_NAMES[i], t));
            kids.push(self.real(site.binds[i].as_ref().expect("bound rule variable"))?);
        }
        let step = self.b.apply(label, &images, kids)?;
        let (old, new) = (instantiate(&from, &site.binds), instantiate(&to, &site.binds));
        if !site.reverse {
            return Ok((step, new));
        }
        let flipped = self.b.apply("eqcomd", &[("ph", "ph"), ("A", &old.render()), ("B", &new.render())], vec![step])?;
        Ok((flipped, old))
    }

    /// Lifts `|- ( ph -> s = s' )` at `path` to the whole of `term`.
    fn lift(&mut self, term: &RTerm, path: &[usize], eq: ProofTree, new_sub: &RTerm) -> Result<(ProofTree, RTerm), GenError> {
        let Some((i, rest)) = path.split_first() else {
            return Ok((eq, new_sub.clone()));
        };
        let child = term.children()[*i];
        let (inner, new_child) = self.lift(child, rest, eq, new_sub)?;
        let (old_c, new_c) = (child.render(), new_child.render());
        let (label, op, other) = match (term, i) {
            (Add(_, b), 0) => ("oveq1d", "+", b.render()),
            (Add(a, _), _) => ("oveq2d", "+", a.render()),
            (Mul(_, b), 0) => ("oveq1d", "x.", b.render()),
            (Mul(a, _), _) => ("oveq2d", "x.", a.render()),
            (Sq(_), _) => ("oveq1d", "^", "2".to_string()),
            (Var(_), _) => unreachable!("path leads below a variable"),
        };
        let proof = self.b.apply(
            label,
            &[("ph", "ph"), ("A", &old_c), ("B", &new_c), ("C", &other), ("F", op)],
            vec![inner],
        )?;
        Ok((proof, term.replace(&[*i], new_child)))
    }
}

fn seed_term(nbvar: usize, extra: usize, rng: &mut impl Rng) -> RTerm {
    let mut leaves: Vec<RTerm> = (0..nbvar).map(Var).collect();
    let more = rng.gen_range(0..=extra);
    leaves.extend((0..more).map(|_| Var(rng.gen_range(0..nbvar))));
    while leaves.len() > 1 {
        let i = rng.gen_range(0..leaves.len());
        let a = leaves.swap_remove(i);
        let j = rng.gen_range(0..leaves.len());
        let b = leaves.swap_remove(j);
        leaves.push(if rng.gen_bool(0.5) { add(a, b) } else { mul(a, b) });
    }
    leaves.pop().expect("at least one variable")
}

/// Generates a ring equality by `task.depth` weighted rewrites of `t = t`.
pub fn gen_ring(db: &Database, label: &str, task: &RingTask, rng: &mut impl Rng) -> Result<GeneratedProof, GenError> {
    if task.nbvar == 0 || task.nbvar > VAR_NAMES.len() {
        return Err(GenError::Step {
            label: label.to_string(),
            msg: format!("nbvar must be in 1..={}", VAR_NAMES.len()),
        });
    }
    let sampler = TheoremSampler::new(&task.weights)?;
    let mut b = ProofBuilder::new(db);
    let hyps = (0..task.nbvar)
        .map(|i| b.expr(&format!("|- ( ph -> {} e. RR )", VAR_NAMES[i])))
        .collect::<Result<Vec<_>, _>>()?;
    b.set_hyps(hyps.clone());
    let seed = seed_term(task.nbvar, task.seed_growth * task.depth, rng);
    let mut p = RingProver { b: &mut b };
    let mut proof = p.b.apply("eqidd", &[("ph", "ph"), ("A", &seed.render())], vec![])?;
    let (mut lhs, mut rhs) = (seed.clone(), seed);
    let mut short = false;
    for _ in 0..task.depth {
        let mut done = false;
        for _ in 0..MAX_DRAWS {
            let theorem = sampler.sample(rng).to_string();
            if theorem == "eqcomd" {
                proof = p.b.apply("eqcomd", &[("ph", "ph"), ("A", &lhs.render()), ("B", &rhs.render())], vec![proof])?;
                std::mem::swap(&mut lhs, &mut rhs);
                done = true;
                break;
            }
            let options = sites(&theorem, &lhs, &rhs);
            let Some(site) = options.choose(rng) else { continue };
            let (eq, new_sub) = p.rewrite(&theorem, site)?;
            let side = if site.side == Side::Left { &lhs } else { &rhs };
            let (lifted, new_side) = p.lift(side, &site.path, eq, &new_sub)?;
            let (l, r) = (lhs.render(), rhs.render());
            let n = new_side.render();
            proof = match site.side {
                Side::Right => p.b.apply("eqtrd", &[("ph", "ph"), ("A", &l), ("B", &r), ("C", &n)], vec![proof, lifted])?,
                Side::Left => p.b.apply("eqtr3d", &[("ph", "ph"), ("A", &l), ("B", &n), ("C", &r)], vec![lifted, proof])?,
            };
            match site.side {
                Side::Left => lhs = new_side,
                Side::Right => rhs = new_side,
            }
            done = true;
            break;
        }
        if !done {
            short = true;
            break;
        }
    }
    let mut out = GeneratedProof::new(db, label, hyps, proof);
    out.short = short;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rules_rewrite_matching_shapes() {
        let t = mul(add(Var(0), Var(1)), add(Var(0), Var(1)));
        let found = sites("muladdd2", &t, &Var(0));
        assert_eq!(found.len(), 1);
        assert!(!found[0].reverse);
        assert_eq!(sites("int-sqdefd", &t, &Var(0)).len(), 1);
        assert!(sites("int-mulassocd", &t, &Var(0)).is_empty());
        let sq = Sq(Box::new(Var(1)));
        let s = sites("int-sqdefd", &sq, &sq);
        assert_eq!(s.len(), 2);
        assert!(s.iter().all(|x| x.reverse));
    }

    #[test]
    fn paths_cover_every_subterm() {
        let t = add(mul(Var(0), Var(1)), Sq(Box::new(Var(2))));
        assert_eq!(t.paths().len(), 6);
        assert_eq!(t.at(&[1, 0]), &Var(2));
        assert_eq!(t.replace(&[0, 1], Var(3)).render(), "( ( A x. D ) + ( C ^ 2 ) )");
    }

    #[test]
    fn sampler_rejects_unknown_theorems() {
        assert!(TheoremSampler::new(&[("ax-mp".into(), 1.0)]).is_err());
        let s = TheoremSampler::new(&RingTask::new(1, 0).weights).unwrap();
        let p = s.probabilities();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((p[7] - 5.0 / 21.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(s.labels().contains(&s.sample(&mut rng).to_string()));
    }
}
