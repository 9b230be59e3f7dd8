//! Bernoulli negative sampling.
//!
//! For relation r, let tph be the mean number of tails per distinct head and
//! hpt the mean number of heads per distinct tail. The head is corrupted with
//! probability tph / (tph + hpt), otherwise the tail. Replacements are uniform
//! over all entities and are redrawn while the corrupted triple is a known
//! training triple, up to 100 times.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::IdTriple;

const MAX_RETRIES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Head,
    Tail,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NegativeSample {
    pub original: IdTriple,
    pub corrupted: IdTriple,
    pub slot: Slot,
}

#[derive(Clone, Debug)]
pub struct BernoulliSampler {
    head_prob: Vec<f64>,
    n_entities: u32,
    known: HashSet<IdTriple>,
}

impl BernoulliSampler {
    pub fn new(train: &[IdTriple], n_entities: usize, n_relations: usize) -> Self {
        let mut tails_of: HashMap<(u32, u32), usize> = HashMap::new();
        let mut heads_of: HashMap<(u32, u32), usize> = HashMap::new();
        let mut known = HashSet::with_capacity(train.len());
        for t in train {
            if known.insert(*t) {
                *tails_of.entry((t[1], t[0])).or_default() += 1;
                *heads_of.entry((t[1], t[2])).or_default() += 1;
            }
        }
        let mean = |m: &HashMap<(u32, u32), usize>| {
            let mut acc = vec![(0usize, 0usize); n_relations];
            for (&(r, _), &c) in m {
                acc[r as usize].0 += c;
                acc[r as usize].1 += 1;
            }
            acc.into_iter().map(|(s, n)| if n == 0 { 0.0 } else { s as f64 / n as f64 }).collect::<Vec<f64>>()
        };
        let tph = mean(&tails_of);
        let hpt = mean(&heads_of);
        let head_prob = tph
            .iter()
            .zip(&hpt)
            .map(|(a, b)| if a + b == 0.0 { 0.5 } else { a / (a + b) })
            .collect();
        BernoulliSampler { head_prob, n_entities: n_entities as u32, known }
    }

    pub fn head_probability(&self, relation: u32) -> f64 {
        self.head_prob.get(relation as usize).copied().unwrap_or(0.5)
    }

    pub fn is_known(&self, t: &IdTriple) -> bool {
        self.known.contains(t)
    }

    pub fn corrupt(&self, t: &IdTriple, rng: &mut impl Rng) -> NegativeSample {
        let slot = if rng.random_bool(self.head_probability(t[1]).clamp(0.0, 1.0)) { Slot::Head } else { Slot::Tail };
        let idx = if slot == Slot::Head { 0 } else { 2 };
        let mut c = *t;
        for _ in 0..=MAX_RETRIES {
            c[idx] = rng.random_range(0..self.n_entities);
            if !self.known.contains(&c) {
                break;
            }
        }
        NegativeSample { original: *t, corrupted: c, slot }
    }

    pub fn sample(&self, t: &IdTriple, npp: usize, rng: &mut impl Rng) -> Vec<NegativeSample> {
        (0..npp).map(|_| self.corrupt(t, rng)).collect()
    }
}
