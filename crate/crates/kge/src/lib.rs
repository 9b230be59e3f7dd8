//! Knowledge-graph embeddings for link prediction: six scoring models trained
//! with a margin ranking loss and Bernoulli negative sampling, realistic-rank
//! evaluation, and grid or TPE hyperparameter search.

pub mod checkpoint;
pub mod data;
pub mod eval;
pub mod fixtures;
pub mod loss;
pub mod model;
pub mod sampling;
pub mod search;
pub mod state;
pub mod train;
pub mod view;

use thiserror::Error;

pub use data::{split, CandidateSets, IdTriple, Interner, KgData, Split, SplitReport, SplitSpec};
pub use eval::{evaluate, evaluate_named, realistic_rank, EvalContext, EvalMode, EvalReport, SideMetrics, Sides};
pub use model::{ModelConfig, ModelKind, ALL_MODELS};
pub use sampling::{BernoulliSampler, NegativeSample, Slot};
pub use state::EmbeddingState;
pub use train::{fine_tune, train, train_data, EarlyStopConfig, EarlyStopper, FineTuneConfig, TrainHistory};
pub use view::{EmbeddingView, NamedTriple, SHORTCUT_RELATION};

#[derive(Debug, Error)]
pub enum KgeError {
    #[error("{0} has no embedding")]
    Unembedded(String),
    #[error("training diverged at epoch {epoch} (lr {lr}): loss is not finite")]
    Diverged { epoch: usize, lr: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
