//! Margin ranking loss and its gradient.
//!
//! `L = Σ_neg max(0, m − f(pos) + f(neg))` with `f` the model score.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{IdTriple, Interner};
use crate::model::{ModelConfig, ModelKind};
use crate::state::EmbeddingState;
use crate::view::EmbeddingView;

/// Loss from precomputed scores.
pub fn mrl(pos_score: f64, neg_scores: &[f64], margin: f64) -> f64 {
    neg_scores.iter().map(|n| (margin - pos_score + n).max(0.0)).sum()
}

pub fn mrl_loss(state: &EmbeddingState, pos: &IdTriple, negs: &[IdTriple]) -> f64 {
    let p = state.score_ids(pos);
    let n: Vec<f64> = negs.iter().map(|t| state.score_ids(t)).collect();
    mrl(p, &n, state.config.margin)
}

/// Sparse gradient accumulator over entity and relation rows.
#[derive(Debug, Default)]
pub struct GradBuf {
    ent: Vec<f64>,
    rel: Vec<f64>,
    ent_seen: Vec<bool>,
    rel_seen: Vec<bool>,
    pub touched_ent: Vec<u32>,
    pub touched_rel: Vec<u32>,
    scratch: [Vec<f64>; 3],
}

impl GradBuf {
    pub fn new(state: &EmbeddingState) -> Self {
        let mut g = GradBuf::default();
        g.resize(state);
        g
    }

    pub fn resize(&mut self, state: &EmbeddingState) {
        self.ent.resize(state.ent.len(), 0.0);
        self.rel.resize(state.rel.len(), 0.0);
        self.ent_seen.resize(state.entities.len(), false);
        self.rel_seen.resize(state.relations.len(), false);
        self.scratch = [vec![0.0; state.ew()], vec![0.0; state.rw()], vec![0.0; state.ew()]];
    }

    /// Adds `coef * ∂f(t)`.
    pub fn add_score_grad(&mut self, state: &EmbeddingState, t: &IdTriple, coef: f64) {
        let (ew, rw) = (state.ew(), state.rw());
        let [gh, gr, gt] = &mut self.scratch;
        gh.iter_mut().for_each(|x| *x = 0.0);
        gr.iter_mut().for_each(|x| *x = 0.0);
        gt.iter_mut().for_each(|x| *x = 0.0);
        state.config.model.accumulate_grad(
            state.config.norm,
            state.config.dim,
            state.entity(t[0]),
            state.relation(t[1]),
            state.entity(t[2]),
            coef,
            gh,
            gr,
            gt,
        );
        for (id, g) in [(t[0], 0usize), (t[2], 2)] {
            if !self.ent_seen[id as usize] {
                self.ent_seen[id as usize] = true;
                self.touched_ent.push(id);
            }
            let row = &mut self.ent[id as usize * ew..(id as usize + 1) * ew];
            row.iter_mut().zip(&self.scratch[g]).for_each(|(a, b)| *a += b);
        }
        let r = t[1] as usize;
        if !self.rel_seen[r] {
            self.rel_seen[r] = true;
            self.touched_rel.push(t[1]);
        }
        self.rel[r * rw..(r + 1) * rw].iter_mut().zip(&self.scratch[1]).for_each(|(a, b)| *a += b);
    }

    /// Adds the gradient of the loss for one positive and its negatives and
    /// returns the loss.
    pub fn add_mrl(&mut self, state: &EmbeddingState, pos: &IdTriple, negs: &[IdTriple]) -> f64 {
        let p = state.score_ids(pos);
        let m = state.config.margin;
        let mut loss = 0.0;
        let mut active = 0usize;
        for n in negs {
            let l = m - p + state.score_ids(n);
            if l > 0.0 {
                loss += l;
                active += 1;
                self.add_score_grad(state, n, 1.0);
            }
        }
        if active > 0 {
            self.add_score_grad(state, pos, -(active as f64));
        }
        loss
    }

    /// Takes an SGD step on every touched row and clears the buffer. A row's
    /// step is scaled down to norm [`MAX_STEP`] when longer. Returns the
    /// touched entity ids.
    pub fn apply(&mut self, state: &mut EmbeddingState, lr: f64) -> Vec<u32> {
        let (ew, rw) = (state.ew(), state.rw());
        for &id in &self.touched_ent {
            let i = id as usize;
            step(&mut state.ent[i * ew..(i + 1) * ew], &mut self.ent[i * ew..(i + 1) * ew], lr);
            self.ent_seen[i] = false;
        }
        for &id in &self.touched_rel {
            let i = id as usize;
            step(&mut state.rel[i * rw..(i + 1) * rw], &mut self.rel[i * rw..(i + 1) * rw], lr);
            self.rel_seen[i] = false;
            state.normalize_relation(id);
        }
        self.touched_rel.clear();
        std::mem::take(&mut self.touched_ent)
    }

    /// Dense copy of the accumulated gradient (entity part, relation part).
    pub fn dense(&self) -> (Vec<f64>, Vec<f64>) {
        (self.ent.clone(), self.rel.clone())
    }
}

/// Longest parameter-row update allowed in one step.
pub const MAX_STEP: f64 = 1.0;

fn step(params: &mut [f64], grad: &mut [f64], lr: f64) {
    let len = lr * norm2(grad);
    let scale = if len > MAX_STEP { lr * MAX_STEP / len } else { lr };
    for (p, g) in params.iter_mut().zip(grad.iter_mut()) {
        *p -= scale * *g;
        *g = 0.0;
    }
}

/// Largest relative error, over `points` random parameter draws, between the
/// analytic loss gradient and central finite differences with step 1e-6.
/// Draws where some hinge is within 1e-3 of its kink are redrawn.
pub fn gradient_check(model: ModelKind, norm: u8, points: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = ModelConfig { model, dim: 3, norm, margin: 1.0, ..Default::default() };
    let mut entities = Interner::default();
    for i in 0..4 {
        entities.intern(&format!("e{i}"));
    }
    let mut relations = Interner::default();
    relations.intern("r0");
    relations.intern("r1");
    let pos: IdTriple = [0, 0, 1];
    let negs: [IdTriple; 3] = [[2, 0, 1], [0, 0, 3], [3, 0, 1]];
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < points {
        let mut s = EmbeddingState::init(cfg.clone(), EmbeddingView::default(), entities.clone(), relations.clone(), Vec::new(), &mut rng);
        for x in s.ent.iter_mut().chain(s.rel.iter_mut()) {
            *x = rng.random_range(-1.0..1.0);
        }
        let p = s.score_ids(&pos);
        if negs.iter().any(|n| (cfg.margin - p + s.score_ids(n)).abs() < 1e-3) {
            continue;
        }
        let mut buf = GradBuf::new(&s);
        buf.add_mrl(&s, &pos, &negs);
        let (ge, gr) = buf.dense();
        let analytic: Vec<f64> = ge.into_iter().chain(gr).collect();
        let n_ent = s.ent.len();
        let h = 1e-6;
        let mut numeric = Vec::with_capacity(analytic.len());
        for k in 0..analytic.len() {
            let orig = *param_mut(&mut s, k, n_ent);
            *param_mut(&mut s, k, n_ent) = orig + h;
            let up = mrl_loss(&s, &pos, &negs);
            *param_mut(&mut s, k, n_ent) = orig - h;
            let down = mrl_loss(&s, &pos, &negs);
            *param_mut(&mut s, k, n_ent) = orig;
            numeric.push((up - down) / (2.0 * h));
        }
        let diff = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = norm2(&analytic).max(norm2(&numeric)).max(1e-12);
        worst = worst.max(diff / scale);
        done += 1;
    }
    worst
}

fn param_mut(s: &mut EmbeddingState, k: usize, n_ent: usize) -> &mut f64 {
    if k < n_ent {
        &mut s.ent[k]
    } else {
        &mut s.rel[k - n_ent]
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
