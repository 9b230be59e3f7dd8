//! Embedding parameters together with the vocabulary they index.

use std::f64::consts::PI;

use dakg_core::Triple;
use rand::Rng;

use crate::data::{IdTriple, Interner};
use crate::model::{ModelConfig, ModelKind};
use crate::view::EmbeddingView;
use crate::KgeError;

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingState {
    pub config: ModelConfig,
    pub view: EmbeddingView,
    pub entities: Interner,
    pub relations: Interner,
    /// Row-major entity parameters, `entity_width` per entity.
    pub ent: Vec<f64>,
    /// Row-major relation parameters, `relation_width` per relation.
    pub rel: Vec<f64>,
    /// Triples the state was trained on; used for rehearsal and sampling
    /// statistics when fine-tuning.
    pub train: Vec<IdTriple>,
}

impl EmbeddingState {
    /// Random initialization, uniform in ±6/√dim, followed by projection.
    pub fn init(
        config: ModelConfig,
        view: EmbeddingView,
        entities: Interner,
        relations: Interner,
        train: Vec<IdTriple>,
        rng: &mut impl Rng,
    ) -> Self {
        let mut s = EmbeddingState { config, view, entities, relations, ent: Vec::new(), rel: Vec::new(), train };
        for _ in 0..s.entities.len() {
            let v = s.random_entity(rng);
            s.ent.extend(v);
        }
        for _ in 0..s.relations.len() {
            let v = s.random_relation(rng);
            s.rel.extend(v);
        }
        s.project_all();
        s
    }

    fn bound(&self) -> f64 {
        6.0 / (self.config.dim as f64).sqrt()
    }

    pub fn random_entity(&self, rng: &mut impl Rng) -> Vec<f64> {
        let b = self.bound();
        (0..self.config.entity_width()).map(|_| rng.random_range(-b..b)).collect()
    }

    pub fn random_relation(&self, rng: &mut impl Rng) -> Vec<f64> {
        let d = self.config.dim;
        let b = self.bound();
        match self.config.model {
            ModelKind::RotatE => (0..d).map(|_| rng.random_range(-PI..PI)).collect(),
            ModelKind::TransR => {
                let mut v: Vec<f64> = (0..d).map(|_| rng.random_range(-b..b)).collect();
                v.extend((0..d * d).map(|k| if k / d == k % d { 1.0 } else { 0.0 }));
                v
            }
            _ => {
                let mut v: Vec<f64> = (0..self.config.relation_width()).map(|_| rng.random_range(-b..b)).collect();
                if self.config.model == ModelKind::TransH {
                    normalize(&mut v[d..]);
                }
                v
            }
        }
    }

    pub fn ew(&self) -> usize {
        self.config.entity_width()
    }

    pub fn rw(&self) -> usize {
        self.config.relation_width()
    }

    pub fn entity(&self, id: u32) -> &[f64] {
        let w = self.ew();
        &self.ent[id as usize * w..(id as usize + 1) * w]
    }

    pub fn relation(&self, id: u32) -> &[f64] {
        let w = self.rw();
        &self.rel[id as usize * w..(id as usize + 1) * w]
    }

    pub fn score_ids(&self, t: &IdTriple) -> f64 {
        self.config.model.score(
            self.config.norm,
            self.config.dim,
            self.entity(t[0]),
            self.relation(t[1]),
            self.entity(t[2]),
        )
    }

    pub fn ids(&self, h: &str, r: &str, t: &str) -> Result<IdTriple, KgeError> {
        let e = |n: &str| self.entities.get(n).ok_or_else(|| KgeError::Unembedded(n.to_string()));
        let rel = self.relations.get(r).ok_or_else(|| KgeError::Unembedded(r.to_string()))?;
        Ok([e(h)?, rel, e(t)?])
    }

    pub fn score_names(&self, h: &str, r: &str, t: &str) -> Result<f64, KgeError> {
        Ok(self.score_ids(&self.ids(h, r, t)?))
    }

    /// Scores a store triple, mapping literals through the view.
    pub fn score_triple(&self, t: &Triple) -> Result<f64, KgeError> {
        let [h, r, o] = self.view.map_triple(t);
        self.score_names(&h, &r, &o)
    }

    /// Appends an entity with the given vector and returns its id.
    pub fn add_entity(&mut self, name: &str, vec: Vec<f64>) -> u32 {
        assert_eq!(vec.len(), self.ew());
        if let Some(id) = self.entities.get(name) {
            return id;
        }
        let id = self.entities.intern(name);
        self.ent.extend(vec);
        self.project_entity(id);
        id
    }

    pub fn add_relation(&mut self, name: &str, rng: &mut impl Rng) -> u32 {
        if let Some(id) = self.relations.get(name) {
            return id;
        }
        let v = self.random_relation(rng);
        let id = self.relations.intern(name);
        self.rel.extend(v);
        id
    }

    /// Caps an entity's norm at 1.
    pub fn project_entity(&mut self, id: u32) {
        let w = self.ew();
        let v = &mut self.ent[id as usize * w..(id as usize + 1) * w];
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1.0 {
            v.iter_mut().for_each(|x| *x /= n);
        }
    }

    /// Restores relation-level constraints (unit TransH normals).
    pub fn normalize_relation(&mut self, id: u32) {
        if self.config.model == ModelKind::TransH {
            let (d, w) = (self.config.dim, self.rw());
            normalize(&mut self.rel[id as usize * w + d..(id as usize + 1) * w]);
        }
    }

    pub fn project_all(&mut self) {
        for id in 0..self.entities.len() as u32 {
            self.project_entity(id);
        }
        for id in 0..self.relations.len() as u32 {
            self.normalize_relation(id);
        }
    }

    /// Checks the norm constraints that hold after every epoch.
    pub fn check_invariants(&self) -> Result<(), String> {
        for id in 0..self.entities.len() as u32 {
            let n = norm(self.entity(id));
            if n > 1.0 + 1e-9 {
                return Err(format!("entity {} has norm {n}", self.entities.name(id)));
            }
        }
        if self.config.model == ModelKind::TransH {
            for id in 0..self.relations.len() as u32 {
                let n = norm(&self.relation(id)[self.config.dim..]);
                if (n - 1.0).abs() > 1e-9 {
                    return Err(format!("normal of {} has norm {n}", self.relations.name(id)));
                }
            }
        }
        if self.ent.iter().chain(&self.rel).any(|x| !x.is_finite()) {
            return Err("non-finite parameter".into());
        }
        Ok(())
    }

    /// Entities closest to `id` by cosine similarity, best first.
    pub fn nearest(&self, id: u32, k: usize) -> Vec<(u32, f64)> {
        let a = self.entity(id);
        let na = norm(a);
        let mut v: Vec<(u32, f64)> = (0..self.entities.len() as u32)
            .filter(|&j| j != id)
            .map(|j| {
                let b = self.entity(j);
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                (j, dot / (na * norm(b)).max(1e-12))
            })
            .collect();
        v.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
        v.truncate(k);
        v
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}
