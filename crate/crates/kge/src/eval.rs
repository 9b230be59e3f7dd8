//! Link-prediction evaluation with realistic ranks.
//!
//! A candidate ranks ahead of the true entity when it scores strictly
//! higher; ties share the average position, so the rank is
//! `better + (equal_including_self + 1) / 2`.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{CandidateSets, IdTriple};
use crate::sampling::Slot;
use crate::state::EmbeddingState;
use crate::view::NamedTriple;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// Every entity is a candidate.
    Raw,
    /// Candidates are the instances of the relation's domain (head) or range
    /// (tail).
    RangeFiltered,
    /// Every entity except those forming another known true triple.
    Filtered,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sides {
    Head,
    Tail,
    Both,
}

impl Sides {
    fn includes(self, s: Slot) -> bool {
        matches!((self, s), (Sides::Both, _) | (Sides::Head, Slot::Head) | (Sides::Tail, Slot::Tail))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SideMetrics {
    pub hits1: f64,
    pub hits3: f64,
    pub hits10: f64,
    pub mean_rank: f64,
    pub mrr: f64,
    pub n: usize,
}

impl SideMetrics {
    pub fn from_ranks(ranks: &[f64]) -> Self {
        if ranks.is_empty() {
            return SideMetrics::default();
        }
        let n = ranks.len() as f64;
        let hits = |k: f64| ranks.iter().filter(|&&r| r <= k).count() as f64 / n;
        SideMetrics {
            hits1: hits(1.0),
            hits3: hits(3.0),
            hits10: hits(10.0),
            mean_rank: ranks.iter().sum::<f64>() / n,
            mrr: ranks.iter().map(|r| 1.0 / r).sum::<f64>() / n,
            n: ranks.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: EvalMode,
    pub head: Option<SideMetrics>,
    pub tail: Option<SideMetrics>,
    /// Test triples skipped because some term was not embedded.
    pub skipped: usize,
}

/// Side information needed by the non-raw modes.
#[derive(Clone, Copy, Debug, Default)]
pub struct EvalContext<'a> {
    pub candidates: Option<&'a CandidateSets>,
    pub known: Option<&'a HashSet<IdTriple>>,
}

pub fn realistic_rank(scores: &[f64], target: usize) -> f64 {
    let s = scores[target];
    let better = scores.iter().filter(|&&x| x > s).count();
    let equal = scores.iter().filter(|&&x| x == s).count();
    better as f64 + (equal as f64 + 1.0) / 2.0
}

/// Realistic rank of the true entity of `t` on one side.
pub fn rank_of(state: &EmbeddingState, t: &IdTriple, side: Slot, mode: EvalMode, ctx: &EvalContext) -> f64 {
    let idx = if side == Slot::Head { 0 } else { 2 };
    let truth = t[idx];
    let target = state.score_ids(t);
    let mut better = 0usize;
    let mut equal = 1usize;
    let mut probe = *t;
    let mut visit = |c: u32| {
        if c == truth {
            return;
        }
        probe[idx] = c;
        if mode == EvalMode::Filtered && ctx.known.is_some_and(|k| k.contains(&probe)) {
            return;
        }
        let s = state.score_ids(&probe);
        if s > target {
            better += 1;
        } else if s == target {
            equal += 1;
        }
    };
    match mode {
        EvalMode::RangeFiltered => {
            let sets = ctx.candidates.expect("range-filtered evaluation needs candidate sets");
            let pool = if side == Slot::Head { &sets.head } else { &sets.tail };
            for &c in &pool[t[1] as usize] {
                visit(c);
            }
        }
        EvalMode::Raw | EvalMode::Filtered => {
            for c in 0..state.entities.len() as u32 {
                visit(c);
            }
        }
    }
    better as f64 + (equal as f64 + 1.0) / 2.0
}

pub fn evaluate(state: &EmbeddingState, test: &[IdTriple], mode: EvalMode, sides: Sides, ctx: &EvalContext) -> EvalReport {
    let n_ent = state.entities.len() as u32;
    let n_rel = state.relations.len() as u32;
    let ok = |t: &&IdTriple| t[0] < n_ent && t[2] < n_ent && t[1] < n_rel;
    let usable: Vec<IdTriple> = test.iter().filter(ok).copied().collect();
    let ranks: Vec<(Option<f64>, Option<f64>)> = usable
        .par_iter()
        .map(|t| {
            let h = sides.includes(Slot::Head).then(|| rank_of(state, t, Slot::Head, mode, ctx));
            let tl = sides.includes(Slot::Tail).then(|| rank_of(state, t, Slot::Tail, mode, ctx));
            (h, tl)
        })
        .collect();
    let heads: Vec<f64> = ranks.iter().filter_map(|r| r.0).collect();
    let tails: Vec<f64> = ranks.iter().filter_map(|r| r.1).collect();
    EvalReport {
        mode,
        head: sides.includes(Slot::Head).then(|| SideMetrics::from_ranks(&heads)),
        tail: sides.includes(Slot::Tail).then(|| SideMetrics::from_ranks(&tails)),
        skipped: test.len() - usable.len(),
    }
}

/// Evaluates named triples, skipping any with an unembedded term.
pub fn evaluate_named(
    state: &EmbeddingState,
    test: &[NamedTriple],
    mode: EvalMode,
    sides: Sides,
    ctx: &EvalContext,
) -> EvalReport {
    let ids: Vec<IdTriple> = test.iter().filter_map(|[h, r, t]| state.ids(h, r, t).ok()).collect();
    let mut rep = evaluate(state, &ids, mode, sides, ctx);
    rep.skipped += test.len() - ids.len();
    rep
}

/// Tail Hits@k in raw mode, the validation signal for early stopping.
pub fn tail_hits(state: &EmbeddingState, triples: &[IdTriple], k: f64) -> f64 {
    if triples.is_empty() {
        return 0.0;
    }
    let hits: usize = triples
        .par_iter()
        .map(|t| usize::from(rank_of(state, t, Slot::Tail, EvalMode::Raw, &EvalContext::default()) <= k))
        .sum();
    hits as f64 / triples.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tie_formula() {
        assert_eq!(realistic_rank(&[0.9, 0.9, 0.5], 0), 1.5);
        assert_eq!(realistic_rank(&[0.1, 0.9, 0.5], 1), 1.0);
        assert_eq!(realistic_rank(&[0.2; 7], 3), 4.0);
        assert_eq!(realistic_rank(&[0.1, 0.9, 0.5], 0), 3.0);
    }

    #[test]
    fn metrics_from_ranks() {
        let m = SideMetrics::from_ranks(&[1.0, 1.5, 4.0, 20.0]);
        assert_eq!(m.hits1, 0.25);
        assert_eq!(m.hits3, 0.5);
        assert_eq!(m.hits10, 0.75);
        assert!((m.mean_rank - 6.625).abs() < 1e-12);
        assert!(m.hits1 <= m.hits3 && m.hits3 <= m.hits10);
    }
}
