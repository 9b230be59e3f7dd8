//! Knowledge-graph core for a data-analytics assistant: a typed triple store,
//! the curated data-analytics schema, dataset profiling, synthetic interaction
//! corpora and query-template recommendations.

pub mod profile;
pub mod schema;
pub mod ladder;
pub mod store;
pub mod synth;
pub mod term;
pub mod vocab;

pub use store::{Atom, Binding, Comparator, Filter, Graph, Node, Pattern, PatternError};
pub use term::{Datatype, Term, TermError, Triple};
pub use schema::{bootstrap_schema, Schema, Violation};
pub use profile::{annotate, profile_file, profile_reader, DatasetProfile, ProfileOptions, TargetType};
pub use synth::{source_breakdown, synth_dataset_profiles, synthesize, SynthConfig};
pub use ladder::{recommend_by_query, Ladder, LadderError, LadderFilters, LadderResult, Target, TaskContext};
