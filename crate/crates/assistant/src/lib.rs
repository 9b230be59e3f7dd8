//! The assistant around the knowledge graph: anticipating a user's next
//! input, recording interactions, and the HTTP service.

pub mod anticipate;
pub mod interaction;
pub mod service;

pub use anticipate::{
    anticipate, candidates_for, lp_relation, recommend, AnticipateError, AnticipateOptions, Method, Recommendation,
    ScoredItem, Sources,
};
pub use interaction::{
    annotate_interaction, stub_execute, ConstraintAction, ConstraintSpec, Feedback, InteractionError, InteractionRecord,
    ModelEvaluation, Submission,
};
pub use service::{router, AppState, ServiceConfig};
