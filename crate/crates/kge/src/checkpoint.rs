//! Binary checkpoint files. The layout is described in `docs/checkpoint.md`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Interner;
use crate::model::ModelConfig;
use crate::state::EmbeddingState;
use crate::view::EmbeddingView;
use crate::KgeError;

pub const MAGIC: &[u8; 8] = b"DAKGEMB1";

#[derive(Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    view: EmbeddingView,
    entities: Interner,
    relations: Interner,
    entity_width: usize,
    relation_width: usize,
    n_train: usize,
}

pub fn to_bytes(s: &EmbeddingState) -> Vec<u8> {
    let header = Header {
        config: s.config.clone(),
        view: s.view.clone(),
        entities: s.entities.clone(),
        relations: s.relations.clone(),
        entity_width: s.ew(),
        relation_width: s.rw(),
        n_train: s.train.len(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(16 + json.len() + 8 * (s.ent.len() + s.rel.len()) + 12 * s.train.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for x in s.ent.iter().chain(&s.rel) {
        out.extend_from_slice(&x.to_le_bytes());
    }
    for t in &s.train {
        for id in t {
            out.extend_from_slice(&id.to_le_bytes());
        }
    }
    out
}

fn bad(msg: impl Into<String>) -> KgeError {
    KgeError::Checkpoint(msg.into())
}

pub fn from_bytes(bytes: &[u8]) -> Result<EmbeddingState, KgeError> {
    let mut r = bytes;
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| bad("truncated magic"))?;
    if &magic != MAGIC {
        return Err(bad("not a checkpoint file (bad magic)"));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len).map_err(|_| bad("truncated header length"))?;
    let len = u64::from_le_bytes(len) as usize;
    if r.len() < len {
        return Err(bad("truncated header"));
    }
    let header: Header = serde_json::from_slice(&r[..len]).map_err(|e| bad(format!("header: {e}")))?;
    r = &r[len..];
    if header.entity_width != header.config.entity_width() || header.relation_width != header.config.relation_width() {
        return Err(bad("row widths disagree with the model configuration"));
    }
    let n_ent = header.entities.len() * header.entity_width;
    let n_rel = header.relations.len() * header.relation_width;
    let need = 8 * (n_ent + n_rel) + 12 * header.n_train;
    if r.len() != need {
        return Err(bad(format!("expected {need} payload bytes, found {}", r.len())));
    }
    let (floats, ids) = r.split_at(8 * (n_ent + n_rel));
    let vals: Vec<f64> = floats.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let ids: Vec<u32> = ids.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
    let train = ids.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    Ok(EmbeddingState {
        config: header.config,
        view: header.view,
        entities: header.entities,
        relations: header.relations,
        ent: vals[..n_ent].to_vec(),
        rel: vals[n_ent..].to_vec(),
        train,
    })
}

pub fn save(s: &EmbeddingState, path: impl AsRef<Path>) -> Result<(), KgeError> {
    let mut f = fs::File::create(path)?;
    f.write_all(&to_bytes(s))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<EmbeddingState, KgeError> {
    from_bytes(&fs::read(path)?)
}
