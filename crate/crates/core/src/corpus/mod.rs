//! Corpus ingestion and estimation of the interaction models' distributions.

mod dialogues;
mod model;
pub mod qrfa;
mod ratings;

pub use dialogues::{
    load_dialogues, AnnotatedDialogue, AnnotatedDialogueCorpus, AnnotatedTurn, EntityMention,
};
pub use model::{
    build_agenda, estimate_cir6, estimate_cir6_with, estimate_qrfa, estimate_qrfa_with,
    sample_initial_agenda, ConditionalTable, Dynamics, ModelKind, Row, TransitionModel,
    DEFAULT_SMOOTHING, ROW_TOLERANCE,
};
pub use qrfa::{coarse_map, QrfaClass};
pub use ratings::{load_ratings, Catalog, CatalogItem, Rating, RatingsCorpus, MAX_RATING, MIN_RATING};
