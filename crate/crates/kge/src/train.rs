//! Mini-batch SGD with early stopping, and incremental fine-tuning.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{IdTriple, Interner, KgData};
use crate::eval::tail_hits;
use crate::loss::GradBuf;
use crate::model::ModelConfig;
use crate::sampling::BernoulliSampler;
use crate::state::EmbeddingState;
use crate::view::{EmbeddingView, NamedTriple};
use crate::KgeError;

/// Validation every `every` epochs; stop after `patience` evaluations in a
/// row without strict improvement of tail Hits@3.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EarlyStopConfig {
    pub enabled: bool,
    pub every: usize,
    pub patience: usize,
}

impl Default for EarlyStopConfig {
    fn default() -> Self {
        EarlyStopConfig { enabled: true, every: 15, patience: 2 }
    }
}

impl EarlyStopConfig {
    /// Validation is still recorded but never stops training.
    pub fn monitor_only(every: usize) -> Self {
        EarlyStopConfig { enabled: false, every, patience: usize::MAX }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Summed loss of each epoch.
    pub losses: Vec<f64>,
    /// (epoch, validation tail Hits@3).
    pub evals: Vec<(usize, f64)>,
    pub best_epoch: usize,
    pub stopped_epoch: usize,
}

impl TrainHistory {
    /// `epoch,loss,valid_hits3` rows; the last column is empty on epochs
    /// without validation.
    pub fn to_csv(&self) -> String {
        let evals: HashMap<usize, f64> = self.evals.iter().copied().collect();
        let mut out = String::from("epoch,loss,valid_hits3\n");
        for (i, l) in self.losses.iter().enumerate() {
            let e = i + 1;
            let v = evals.get(&e).map(|h| h.to_string()).unwrap_or_default();
            out.push_str(&format!("{e},{l},{v}\n"));
        }
        out
    }

    pub fn validation_trace(&self) -> Vec<f64> {
        self.evals.iter().map(|e| e.1).collect()
    }
}

/// Patience bookkeeping over a stream of validation scores.
#[derive(Clone, Debug)]
pub struct EarlyStopper {
    cfg: EarlyStopConfig,
    best: Option<f64>,
    bad: usize,
}

impl EarlyStopper {
    pub fn new(cfg: EarlyStopConfig) -> Self {
        EarlyStopper { cfg, best: None, bad: 0 }
    }

    /// Whether `epoch` is a validation epoch.
    pub fn due(&self, epoch: usize) -> bool {
        self.cfg.every > 0 && epoch % self.cfg.every == 0
    }

    /// Records a score. Returns (improved, stop).
    pub fn observe(&mut self, score: f64) -> (bool, bool) {
        if self.best.is_none_or(|b| score > b) {
            self.best = Some(score);
            self.bad = 0;
            (true, false)
        } else {
            self.bad += 1;
            (false, self.cfg.enabled && self.bad >= self.cfg.patience)
        }
    }
}

/// One pass over `positives`; returns the summed loss and the entities
/// whose parameters moved.
fn run_epoch(
    state: &mut EmbeddingState,
    positives: &[IdTriple],
    sampler: &BernoulliSampler,
    lr: f64,
    rng: &mut ChaCha8Rng,
    buf: &mut GradBuf,
) -> (f64, HashSet<u32>) {
    let cfg = state.config.clone();
    let mut total = 0.0;
    let mut moved = HashSet::new();
    let mut negs = Vec::with_capacity(cfg.npp);
    for batch in positives.chunks(cfg.batch_size) {
        for pos in batch {
            negs.clear();
            negs.extend((0..cfg.npp).map(|_| sampler.corrupt(pos, rng).corrupted));
            total += buf.add_mrl(state, pos, &negs);
        }
        moved.extend(buf.apply(state, lr));
    }
    (total, moved)
}

pub fn train_data(data: &KgData, cfg: &ModelConfig, stop: &EarlyStopConfig) -> Result<(EmbeddingState, TrainHistory), KgeError> {
    train(&data.view, &data.entities, &data.relations, &data.train, &data.valid, cfg, stop)
}

/// Trains from scratch and returns the best-validation state.
pub fn train(
    view: &EmbeddingView,
    entities: &Interner,
    relations: &Interner,
    train: &[IdTriple],
    valid: &[IdTriple],
    cfg: &ModelConfig,
    stop: &EarlyStopConfig,
) -> Result<(EmbeddingState, TrainHistory), KgeError> {
    cfg.validate().map_err(KgeError::Config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state =
        EmbeddingState::init(cfg.clone(), view.clone(), entities.clone(), relations.clone(), train.to_vec(), &mut rng);
    let sampler = BernoulliSampler::new(train, entities.len(), relations.len());
    let mut buf = GradBuf::new(&state);
    let mut order = train.to_vec();
    let mut hist = TrainHistory::default();
    let mut best: Option<EmbeddingState> = None;
    let mut stopper = EarlyStopper::new(*stop);

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let (loss, _) = run_epoch(&mut state, &order, &sampler, cfg.lr, &mut rng, &mut buf);
        if !loss.is_finite() || state.ent.iter().chain(&state.rel).any(|x| !x.is_finite()) {
            return Err(KgeError::Diverged { epoch, lr: cfg.lr });
        }
        state.project_all();
        hist.losses.push(loss);
        hist.stopped_epoch = epoch;

        if stopper.due(epoch) && !valid.is_empty() {
            let h = tail_hits(&state, valid, 3.0);
            hist.evals.push((epoch, h));
            let (improved, halt) = stopper.observe(h);
            if improved {
                best = Some(state.clone());
                hist.best_epoch = epoch;
            }
            if halt {
                break;
            }
        }
    }
    match best {
        Some(s) => Ok((s, hist)),
        None => {
            hist.best_epoch = hist.stopped_epoch;
            Ok((state, hist))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FineTuneConfig {
    pub epochs: usize,
    /// Old triples replayed per new triple in every epoch.
    pub rehearsal: usize,
    /// Learning rate; the training rate when unset.
    pub lr: Option<f64>,
    pub seed: u64,
}

impl Default for FineTuneConfig {
    fn default() -> Self {
        FineTuneConfig { epochs: 20, rehearsal: 4, lr: None, seed: 0 }
    }
}

/// Most peers averaged when initializing a new entity.
const MAX_PEERS: usize = 50;

/// Adds `new` triples to a trained state and updates it.
///
/// An unseen entity starts at the mean of its `peers` entry when one is
/// given, otherwise at the mean of structural peers: known entities that
/// stand in the same relation to the same known neighbour. With no peers it
/// is random. Each epoch trains on the new triples plus `rehearsal` times as
/// many old triples drawn uniformly.
pub fn fine_tune(
    state: &EmbeddingState,
    new: &[NamedTriple],
    ft: &FineTuneConfig,
    peers: &BTreeMap<String, Vec<String>>,
) -> Result<EmbeddingState, KgeError> {
    let mut s = state.clone();
    if new.is_empty() {
        return Ok(s);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ft.seed);
    let known_ents = s.entities.len() as u32;

    // Neighbourhood lookups over the old training triples.
    let mut heads_by: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
    let mut tails_by: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
    for t in &s.train {
        heads_by.entry((t[1], t[2])).or_default().push(t[0]);
        tails_by.entry((t[0], t[1])).or_default().push(t[2]);
    }

    let mut pending: Vec<String> = Vec::new();
    for [h, _, t] in new {
        for e in [h, t] {
            if s.entities.get(e).is_none() && !pending.contains(e) {
                pending.push(e.clone());
            }
        }
    }
    for e in &pending {
        let mut ids: Vec<u32> = match peers.get(e) {
            Some(list) => list.iter().filter_map(|p| s.entities.get(p)).filter(|&id| id < known_ents).collect(),
            None => Vec::new(),
        };
        if ids.is_empty() {
            for [h, r, t] in new {
                let Some(rid) = s.relations.get(r) else { continue };
                if h == e {
                    if let Some(tid) = s.entities.get(t).filter(|&id| id < known_ents) {
                        ids.extend(heads_by.get(&(rid, tid)).into_iter().flatten().take(MAX_PEERS));
                    }
                } else if t == e {
                    if let Some(hid) = s.entities.get(h).filter(|&id| id < known_ents) {
                        ids.extend(tails_by.get(&(hid, rid)).into_iter().flatten().take(MAX_PEERS));
                    }
                }
            }
        }
        let vec = if ids.is_empty() {
            s.random_entity(&mut rng)
        } else {
            let mut m = vec![0.0; s.ew()];
            for &id in &ids {
                m.iter_mut().zip(s.entity(id)).for_each(|(a, b)| *a += b / ids.len() as f64);
            }
            m
        };
        s.add_entity(e, vec);
    }
    for [_, r, _] in new {
        s.add_relation(r, &mut rng);
    }

    let new_ids: Vec<IdTriple> = new.iter().map(|[h, r, t]| s.ids(h, r, t)).collect::<Result<_, _>>()?;
    let old = s.train.clone();
    let mut all = old.clone();
    all.extend(&new_ids);
    let sampler = BernoulliSampler::new(&all, s.entities.len(), s.relations.len());
    let mut buf = GradBuf::new(&s);
    let lr = ft.lr.unwrap_or(s.config.lr);
    for epoch in 1..=ft.epochs {
        let mut batch = new_ids.clone();
        if !old.is_empty() {
            batch.extend((0..ft.rehearsal * new_ids.len()).map(|_| old[rng.random_range(0..old.len())]));
        }
        batch.shuffle(&mut rng);
        let (loss, moved) = run_epoch(&mut s, &batch, &sampler, lr, &mut rng, &mut buf);
        if !loss.is_finite() {
            return Err(KgeError::Diverged { epoch, lr });
        }
        for id in moved {
            s.project_entity(id);
        }
    }
    let seen: HashSet<IdTriple> = old.iter().copied().collect();
    s.train.extend(new_ids.into_iter().filter(|t| !seen.contains(t)));
    Ok(s)
}
