//! Grid search and Tree-structured Parzen Estimator search.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::KgData;
use crate::eval::{evaluate, tail_hits, EvalContext, EvalMode, EvalReport, Sides};
use crate::model::{ModelConfig, ModelKind};
use crate::train::{train_data, EarlyStopConfig};
use crate::KgeError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub models: Vec<ModelKind>,
    pub dims: Vec<usize>,
    pub lrs: Vec<f64>,
    pub npps: Vec<usize>,
}

impl SearchSpace {
    pub fn validate(&self) -> Result<(), String> {
        if self.models.is_empty() || self.dims.is_empty() || self.lrs.is_empty() || self.npps.is_empty() {
            return Err("every grid must be nonempty".into());
        }
        Ok(())
    }

    /// Cross product in model, dim, lr, npp order.
    pub fn configs(&self, base: &ModelConfig) -> Vec<ModelConfig> {
        let mut out = Vec::new();
        for &model in &self.models {
            for &dim in &self.dims {
                for &lr in &self.lrs {
                    for &npp in &self.npps {
                        out.push(ModelConfig { model, dim, lr, npp, ..base.clone() });
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub config: ModelConfig,
    pub valid_hits3: Option<f64>,
    pub epochs: usize,
    /// Test reports in raw and range-filtered mode.
    pub reports: Vec<EvalReport>,
    pub error: Option<String>,
}

impl GridRow {
    pub fn test_tail_hits3(&self, mode: EvalMode) -> Option<f64> {
        self.reports.iter().find(|r| r.mode == mode).and_then(|r| r.tail).map(|t| t.hits3)
    }
}

fn data_fingerprint(data: &KgData) -> String {
    let mut h = Sha256::new();
    for part in [&data.train, &data.valid, &data.test] {
        h.update((part.len() as u64).to_le_bytes());
        for t in part.iter() {
            for id in t {
                h.update(id.to_le_bytes());
            }
        }
    }
    for n in data.entities.names() {
        h.update(n.as_bytes());
        h.update([0]);
    }
    hex(&h.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Cache key for a grid cell.
pub fn cell_key(cfg: &ModelConfig, stop: &EarlyStopConfig, data_fp: &str) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(&(cfg, stop)).expect("config serializes"));
    h.update(data_fp.as_bytes());
    hex(&h.finalize())[..16].to_string()
}

pub fn run_cell(data: &KgData, cfg: &ModelConfig, stop: &EarlyStopConfig) -> GridRow {
    match train_data(data, cfg, stop) {
        Ok((state, hist)) => {
            let ctx = EvalContext { candidates: Some(&data.candidates), known: None };
            let reports = [EvalMode::Raw, EvalMode::RangeFiltered]
                .into_iter()
                .map(|m| evaluate(&state, &data.test, m, Sides::Both, &ctx))
                .collect();
            GridRow {
                config: cfg.clone(),
                valid_hits3: Some(tail_hits(&state, &data.valid, 3.0)),
                epochs: hist.stopped_epoch,
                reports,
                error: None,
            }
        }
        Err(e) => GridRow { config: cfg.clone(), valid_hits3: None, epochs: 0, reports: Vec::new(), error: Some(e.to_string()) },
    }
}

/// Trains every configuration of the space. With a cache directory, finished
/// cells are stored as JSON and reused on the next run.
pub fn grid_search(
    data: &KgData,
    base: &ModelConfig,
    space: &SearchSpace,
    stop: &EarlyStopConfig,
    cache_dir: Option<&Path>,
) -> Result<Vec<GridRow>, KgeError> {
    space.validate().map_err(KgeError::Config)?;
    if let Some(dir) = cache_dir {
        fs::create_dir_all(dir)?;
    }
    let fp = data_fingerprint(data);
    let rows = space
        .configs(base)
        .par_iter()
        .map(|cfg| {
            let path = cache_dir.map(|d| d.join(format!("{}.json", cell_key(cfg, stop, &fp))));
            if let Some(p) = &path {
                if let Ok(text) = fs::read_to_string(p) {
                    if let Ok(row) = serde_json::from_str::<GridRow>(&text) {
                        return Ok(row);
                    }
                }
            }
            let row = run_cell(data, cfg, stop);
            if let Some(p) = &path {
                fs::write(p, serde_json::to_string(&row).expect("row serializes"))?;
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>, std::io::Error>>()?;
    Ok(rows)
}

pub fn grid_csv(rows: &[GridRow]) -> String {
    let mut out = String::from(
        "model,dim,lr,npp,epochs,valid_tail_hits3,test_tail_hits3,test_head_hits3,test_tail_mrr,range_tail_hits3,error\n",
    );
    let f = |x: Option<f64>| x.map(|v| format!("{v:.4}")).unwrap_or_default();
    for r in rows {
        let raw = r.reports.iter().find(|x| x.mode == EvalMode::Raw);
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.config.model,
            r.config.dim,
            r.config.lr,
            r.config.npp,
            r.epochs,
            f(r.valid_hits3),
            f(raw.and_then(|x| x.tail).map(|t| t.hits3)),
            f(raw.and_then(|x| x.head).map(|t| t.hits3)),
            f(raw.and_then(|x| x.tail).map(|t| t.mrr)),
            f(r.test_tail_hits3(EvalMode::RangeFiltered)),
            r.error.as_deref().unwrap_or("").replace(',', ";"),
        ));
    }
    out
}

/// Continuous box for TPE; every dimension is searched on a log scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TpeSpace {
    pub model: ModelKind,
    pub dim: (usize, usize),
    pub lr: (f64, f64),
    pub npp: (usize, usize),
}

impl TpeSpace {
    fn bounds(&self) -> [(f64, f64); 3] {
        [
            ((self.dim.0 as f64).ln(), (self.dim.1 as f64).ln()),
            (self.lr.0.ln(), self.lr.1.ln()),
            ((self.npp.0 as f64).ln(), (self.npp.1 as f64).ln()),
        ]
    }

    /// Maps a point of the unit cube to a configuration.
    pub fn decode(&self, u: &[f64; 3], base: &ModelConfig) -> ModelConfig {
        let b = self.bounds();
        let x = |i: usize| (b[i].0 + u[i] * (b[i].1 - b[i].0)).exp();
        ModelConfig {
            model: self.model,
            dim: (x(0).round() as usize).clamp(self.dim.0.max(2), self.dim.1),
            lr: x(1),
            npp: (x(2).round() as usize).clamp(self.npp.0.max(1), self.npp.1),
            ..base.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub config: ModelConfig,
    pub objective: f64,
    pub wall_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub trials: Vec<Trial>,
}

impl SearchTrace {
    /// Best trial; the earliest one wins ties.
    pub fn best(&self) -> Option<&Trial> {
        self.trials.iter().fold(None, |acc: Option<&Trial>, t| match acc {
            Some(b) if b.objective >= t.objective => Some(b),
            _ => Some(t),
        })
    }

    pub fn running_best(&self) -> Vec<f64> {
        let mut best = f64::NEG_INFINITY;
        self.trials
            .iter()
            .map(|t| {
                best = best.max(t.objective);
                best
            })
            .collect()
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        self.trials.iter().map(|t| serde_json::to_string(t).expect("trial serializes") + "\n").collect()
    }
}

pub const TPE_STARTUP: usize = 10;
pub const TPE_GAMMA: f64 = 0.25;
pub const TPE_CANDIDATES: usize = 24;

fn run_trial<F>(cfg: ModelConfig, objective: &mut F) -> Trial
where
    F: FnMut(&ModelConfig) -> Result<f64, KgeError>,
{
    let start = Instant::now();
    let (objective, error) = match objective(&cfg) {
        Ok(v) => (v, None),
        Err(e) => (0.0, Some(e.to_string())),
    };
    Trial { config: cfg, objective, wall_ms: start.elapsed().as_millis() as u64, error }
}

/// `n` uniform draws from the space, in the same order as TPE's startup.
pub fn random_search<F>(space: &TpeSpace, base: &ModelConfig, n: usize, seed: u64, mut objective: F) -> SearchTrace
where
    F: FnMut(&ModelConfig) -> Result<f64, KgeError>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trials = (0..n)
        .map(|_| {
            let u: [f64; 3] = std::array::from_fn(|_| rng.random::<f64>());
            run_trial(space.decode(&u, base), &mut objective)
        })
        .collect();
    SearchTrace { trials }
}

/// Gaussian kernel density over one unit-interval coordinate, mixed with a
/// uniform prior that counts as one extra point.
struct Kde {
    points: Vec<f64>,
    bw: f64,
}

impl Kde {
    fn new(points: Vec<f64>) -> Self {
        let n = points.len() as f64;
        let mean = points.iter().sum::<f64>() / n;
        let sd = (points.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n).sqrt();
        // Silverman's rule, floored so a collapsed sample still has spread.
        let bw = (1.06 * sd * n.powf(-0.2)).max(0.05);
        Kde { points, bw }
    }

    fn log_density(&self, x: f64) -> f64 {
        let norm = self.bw * (2.0 * std::f64::consts::PI).sqrt();
        let s: f64 = self.points.iter().map(|p| (-0.5 * ((x - p) / self.bw).powi(2)).exp() / norm).sum();
        ((s + 1.0) / (self.points.len() as f64 + 1.0)).ln()
    }
}

/// Sequential model-based search: random startup trials, then each new
/// configuration maximizes l(x)/g(x), where l is fitted on the best quarter
/// of trials and g on the rest.
pub fn tpe_search<F>(
    space: &TpeSpace,
    base: &ModelConfig,
    n_iter: usize,
    seed: u64,
    mut objective: F,
) -> Result<SearchTrace, KgeError>
where
    F: FnMut(&ModelConfig) -> Result<f64, KgeError>,
{
    if n_iter < TPE_STARTUP {
        return Err(KgeError::Config(format!("n_iter must be at least {TPE_STARTUP}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<[f64; 3]> = Vec::new();
    let mut trace = SearchTrace::default();
    for i in 0..n_iter {
        let u: [f64; 3] = if i < TPE_STARTUP {
            std::array::from_fn(|_| rng.random::<f64>())
        } else {
            propose(&points, &trace, &mut rng)
        };
        points.push(u);
        trace.trials.push(run_trial(space.decode(&u, base), &mut objective));
    }
    Ok(trace)
}

fn propose(points: &[[f64; 3]], trace: &SearchTrace, rng: &mut ChaCha8Rng) -> [f64; 3] {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| trace.trials[b].objective.total_cmp(&trace.trials[a].objective).then(a.cmp(&b)));
    let n_good = ((TPE_GAMMA * points.len() as f64).ceil() as usize).clamp(1, points.len() - 1);
    let (good, bad) = order.split_at(n_good);
    let l: Vec<Kde> = (0..3).map(|d| Kde::new(good.iter().map(|&i| points[i][d]).collect())).collect();
    let g: Vec<Kde> = (0..3).map(|d| Kde::new(bad.iter().map(|&i| points[i][d]).collect())).collect();

    let mut best = ([0.0; 3], f64::NEG_INFINITY);
    for _ in 0..TPE_CANDIDATES {
        // Draw from l: a kernel around a good point, or the prior.
        let pick = rng.random_range(0..=good.len());
        let x: [f64; 3] = if pick == good.len() {
            std::array::from_fn(|_| rng.random::<f64>())
        } else {
            let anchor = points[good[pick]];
            std::array::from_fn(|d| {
                let n = Normal::new(anchor[d], l[d].bw).expect("positive bandwidth");
                // Truncated kernel: redraw outside the unit interval.
                (0..100).map(|_| n.sample(rng)).find(|v| (0.0..=1.0).contains(v)).unwrap_or(anchor[d])
            })
        };
        let ratio: f64 = (0..3).map(|d| l[d].log_density(x[d]) - g[d].log_density(x[d])).sum();
        if ratio > best.1 {
            best = (x, ratio);
        }
    }
    best.0
}

/// Objective used by both searches: validation tail Hits@3 of the trained
/// model.
pub fn validation_objective<'a>(
    data: &'a KgData,
    stop: &'a EarlyStopConfig,
) -> impl FnMut(&ModelConfig) -> Result<f64, KgeError> + 'a {
    move |cfg| {
        let (state, _) = train_data(data, cfg, stop)?;
        Ok(tail_hits(&state, &data.valid, 3.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space() -> TpeSpace {
        TpeSpace { model: ModelKind::TransE, dim: (2, 64), lr: (1e-4, 1e-1), npp: (1, 50) }
    }

    // A smooth synthetic objective peaking at dim≈32, lr≈0.01, npp≈10.
    fn bowl(c: &ModelConfig) -> Result<f64, KgeError> {
        let d = ((c.dim as f64).ln() - 32f64.ln()).powi(2) + (c.lr.ln() - 0.01f64.ln()).powi(2) + ((c.npp as f64).ln() - 10f64.ln()).powi(2);
        Ok((-d / 4.0).exp())
    }

    #[test]
    fn startup_matches_random_search() {
        let base = ModelConfig::default();
        let t = tpe_search(&space(), &base, 12, 5, bowl).unwrap();
        let r = random_search(&space(), &base, 10, 5, bowl);
        for (a, b) in t.trials.iter().zip(&r.trials) {
            assert_eq!(a.config, b.config);
        }
    }

    #[test]
    fn tpe_beats_random_on_a_bowl() {
        let base = ModelConfig::default();
        let (mut tpe, mut rnd) = (0.0, 0.0);
        for seed in 0..6 {
            let t = tpe_search(&space(), &base, 60, seed, bowl).unwrap();
            tpe += t.best().unwrap().objective;
            rnd += random_search(&space(), &base, 60, seed, bowl).best().unwrap().objective;
            assert!(t.running_best().windows(2).all(|w| w[0] <= w[1]));
        }
        assert!(tpe > rnd, "{tpe} vs {rnd}");
    }

    #[test]
    fn decode_respects_bounds() {
        let s = space();
        let lo = s.decode(&[0.0; 3], &ModelConfig::default());
        let hi = s.decode(&[1.0; 3], &ModelConfig::default());
        assert_eq!((lo.dim, lo.npp), (2, 1));
        assert_eq!((hi.dim, hi.npp), (64, 50));
        assert!((lo.lr - 1e-4).abs() < 1e-12 && (hi.lr - 0.1).abs() < 1e-12);
    }

    #[test]
    fn grid_cardinality() {
        let sp = SearchSpace {
            models: vec![ModelKind::TransE, ModelKind::DistMult],
            dims: vec![4, 8],
            lrs: vec![0.01],
            npps: vec![2],
        };
        assert_eq!(sp.configs(&ModelConfig::default()).len(), 4);
    }
}
