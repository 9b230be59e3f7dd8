//! Scoring functions and their analytic gradients.
//!
//! All parameters live in flat `f64` slices. Per-model layouts, with `d` the
//! configured dimension:
//!
//! | model    | entity        | relation                         |
//! |----------|---------------|----------------------------------|
//! | transe   | `d`           | `d`                              |
//! | transh   | `d`           | `d` translation, then `d` normal |
//! | transr   | `d`           | `d` translation, then `d×d` M    |
//! | rotate   | `d` re, `d` im| `d` phases                       |
//! | distmult | `d`           | `d`                              |
//! | complex  | `d` re, `d` im| `d` re, `d` im                   |
//!
//! Higher scores mean more plausible triples.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    TransE,
    TransH,
    TransR,
    RotatE,
    DistMult,
    ComplEx,
}

pub const ALL_MODELS: [ModelKind; 6] =
    [ModelKind::TransE, ModelKind::TransH, ModelKind::TransR, ModelKind::RotatE, ModelKind::DistMult, ModelKind::ComplEx];

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::TransE => "transe",
            ModelKind::TransH => "transh",
            ModelKind::TransR => "transr",
            ModelKind::RotatE => "rotate",
            ModelKind::DistMult => "distmult",
            ModelKind::ComplEx => "complex",
        }
    }

    pub fn entity_width(self, dim: usize) -> usize {
        match self {
            ModelKind::RotatE | ModelKind::ComplEx => 2 * dim,
            _ => dim,
        }
    }

    pub fn relation_width(self, dim: usize) -> usize {
        match self {
            ModelKind::TransH | ModelKind::ComplEx => 2 * dim,
            ModelKind::TransR => dim + dim * dim,
            _ => dim,
        }
    }

    /// Score of `(h, r, t)`. `norm` only matters for TransE.
    pub fn score(self, norm: u8, dim: usize, h: &[f64], r: &[f64], t: &[f64]) -> f64 {
        match self {
            ModelKind::TransE => {
                let it = (0..dim).map(|i| h[i] + r[i] - t[i]);
                if norm == 1 {
                    -it.map(f64::abs).sum::<f64>()
                } else {
                    -it.map(|e| e * e).sum::<f64>().sqrt()
                }
            }
            ModelKind::TransH => {
                let (d, w) = r.split_at(dim);
                let a = dot_diff(w, h, t);
                -(0..dim).map(|i| (h[i] - t[i] - a * w[i] + d[i]).powi(2)).sum::<f64>()
            }
            ModelKind::TransR => {
                let (rv, m) = r.split_at(dim);
                let mut s = 0.0;
                for i in 0..dim {
                    let row = &m[i * dim..(i + 1) * dim];
                    let e = dot_diff(row, h, t) + rv[i];
                    s += e * e;
                }
                -s
            }
            ModelKind::RotatE => {
                let (hr, hi) = h.split_at(dim);
                let (tr, ti) = t.split_at(dim);
                let mut s = 0.0;
                for i in 0..dim {
                    let (sn, c) = r[i].sin_cos();
                    let er = hr[i] * c - hi[i] * sn - tr[i];
                    let ei = hr[i] * sn + hi[i] * c - ti[i];
                    s += er.hypot(ei);
                }
                -s
            }
            ModelKind::DistMult => (0..dim).map(|i| h[i] * r[i] * t[i]).sum(),
            ModelKind::ComplEx => {
                let (a, b) = h.split_at(dim);
                let (c, d) = r.split_at(dim);
                let (e, f) = t.split_at(dim);
                (0..dim).map(|i| (a[i] * c[i] - b[i] * d[i]) * e[i] + (a[i] * d[i] + b[i] * c[i]) * f[i]).sum()
            }
        }
    }

    /// Adds `coef * ∂score/∂(h, r, t)` into the gradient buffers.
    #[allow(clippy::too_many_arguments)]
    pub fn accumulate_grad(
        self,
        norm: u8,
        dim: usize,
        h: &[f64],
        r: &[f64],
        t: &[f64],
        coef: f64,
        gh: &mut [f64],
        gr: &mut [f64],
        gt: &mut [f64],
    ) {
        match self {
            ModelKind::TransE => {
                let e: Vec<f64> = (0..dim).map(|i| h[i] + r[i] - t[i]).collect();
                if norm == 1 {
                    for i in 0..dim {
                        let g = -coef * sign(e[i]);
                        gh[i] += g;
                        gr[i] += g;
                        gt[i] -= g;
                    }
                } else {
                    let n = e.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if n == 0.0 {
                        return;
                    }
                    for i in 0..dim {
                        let g = -coef * e[i] / n;
                        gh[i] += g;
                        gr[i] += g;
                        gt[i] -= g;
                    }
                }
            }
            ModelKind::TransH => {
                let (d, w) = r.split_at(dim);
                let a = dot_diff(w, h, t);
                let e: Vec<f64> = (0..dim).map(|i| h[i] - t[i] - a * w[i] + d[i]).collect();
                let we: f64 = (0..dim).map(|i| w[i] * e[i]).sum();
                let (gd, gw) = gr.split_at_mut(dim);
                for i in 0..dim {
                    let gu = -2.0 * (e[i] - we * w[i]);
                    gh[i] += coef * gu;
                    gt[i] -= coef * gu;
                    gd[i] += coef * -2.0 * e[i];
                    gw[i] += coef * 2.0 * (we * (h[i] - t[i]) + a * e[i]);
                }
            }
            ModelKind::TransR => {
                let (rv, m) = r.split_at(dim);
                let (grv, gm) = gr.split_at_mut(dim);
                for i in 0..dim {
                    let row = &m[i * dim..(i + 1) * dim];
                    let e = dot_diff(row, h, t) + rv[i];
                    let g = -2.0 * coef * e;
                    grv[i] += g;
                    for j in 0..dim {
                        gh[j] += g * row[j];
                        gt[j] -= g * row[j];
                        gm[i * dim + j] += g * (h[j] - t[j]);
                    }
                }
            }
            ModelKind::RotatE => {
                let (hr, hi) = h.split_at(dim);
                let (tr, ti) = t.split_at(dim);
                let (ghr, ghi) = gh.split_at_mut(dim);
                let (gtr, gti) = gt.split_at_mut(dim);
                for i in 0..dim {
                    let (sn, c) = r[i].sin_cos();
                    let rot_r = hr[i] * c - hi[i] * sn;
                    let rot_i = hr[i] * sn + hi[i] * c;
                    let er = rot_r - tr[i];
                    let ei = rot_i - ti[i];
                    let m = er.hypot(ei);
                    if m == 0.0 {
                        continue;
                    }
                    let gre = -coef * er / m;
                    let gim = -coef * ei / m;
                    ghr[i] += gre * c + gim * sn;
                    ghi[i] += -gre * sn + gim * c;
                    gtr[i] -= gre;
                    gti[i] -= gim;
                    gr[i] += -gre * rot_i + gim * rot_r;
                }
            }
            ModelKind::DistMult => {
                for i in 0..dim {
                    gh[i] += coef * r[i] * t[i];
                    gr[i] += coef * h[i] * t[i];
                    gt[i] += coef * h[i] * r[i];
                }
            }
            ModelKind::ComplEx => {
                let (a, b) = h.split_at(dim);
                let (c, d) = r.split_at(dim);
                let (e, f) = t.split_at(dim);
                let (ga, gb) = gh.split_at_mut(dim);
                let (gc, gd) = gr.split_at_mut(dim);
                let (ge, gf) = gt.split_at_mut(dim);
                for i in 0..dim {
                    ga[i] += coef * (c[i] * e[i] + d[i] * f[i]);
                    gb[i] += coef * (c[i] * f[i] - d[i] * e[i]);
                    gc[i] += coef * (a[i] * e[i] + b[i] * f[i]);
                    gd[i] += coef * (a[i] * f[i] - b[i] * e[i]);
                    ge[i] += coef * (a[i] * c[i] - b[i] * d[i]);
                    gf[i] += coef * (a[i] * d[i] + b[i] * c[i]);
                }
            }
        }
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `w · (h - t)`.
fn dot_diff(w: &[f64], h: &[f64], t: &[f64]) -> f64 {
    w.iter().zip(h.iter().zip(t)).map(|(w, (h, t))| w * (h - t)).sum()
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        ALL_MODELS
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown model {s:?}; expected one of transe, transh, transr, rotate, distmult, complex"))
    }
}

/// Training hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub model: ModelKind,
    pub dim: usize,
    pub lr: f64,
    /// Negatives per positive.
    pub npp: usize,
    pub margin: f64,
    /// Distance norm for TransE (1 or 2).
    pub norm: u8,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            model: ModelKind::TransH,
            dim: 42,
            lr: 0.0012,
            npp: 50,
            margin: 1.0,
            norm: 2,
            batch_size: 128,
            max_epochs: 300,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.dim < 2 {
            return Err("dim must be at least 2".into());
        }
        if self.npp == 0 {
            return Err("npp must be at least 1".into());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err("lr must be positive".into());
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return Err("margin must be positive".into());
        }
        if self.norm != 1 && self.norm != 2 {
            return Err("norm must be 1 or 2".into());
        }
        if self.batch_size == 0 {
            return Err("batch_size must be positive".into());
        }
        Ok(())
    }

    pub fn entity_width(&self) -> usize {
        self.model.entity_width(self.dim)
    }

    pub fn relation_width(&self) -> usize {
        self.model.relation_width(self.dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_names() {
        for m in ALL_MODELS {
            assert_eq!(m.name().parse::<ModelKind>(), Ok(m));
        }
        assert_eq!("TransH".parse::<ModelKind>(), Ok(ModelKind::TransH));
        assert!("conve".parse::<ModelKind>().is_err());
    }

    #[test]
    fn config_json_uses_lowercase_names() {
        let c: ModelConfig = serde_json::from_str(r#"{"model": "rotate", "dim": 8}"#).unwrap();
        assert_eq!(c.model, ModelKind::RotatE);
        assert_eq!(c.npp, 50);
        assert!(c.validate().is_ok());
        assert!(ModelConfig { dim: 1, ..c }.validate().is_err());
    }
}
