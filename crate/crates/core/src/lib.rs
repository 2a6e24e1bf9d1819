//! Agenda-based user simulation for evaluating conversational recommender
//! agents as black boxes.
//!
//! A simulated user holds a stack of pending dialogue acts (the agenda),
//! talks to an agent over a line-delimited JSON protocol, recognises the
//! agent's reply, and pulls or replaces agenda entries depending on whether
//! the reply was appropriate. Interaction dynamics come from annotated
//! dialogues (QRFA or CIR6 models), preferences from historical ratings
//! (single-item or personal knowledge graph). Transcripts feed a metrics
//! suite (AvgTurns, UserActRatio, DS-KL, Reward, Success Rate).

pub mod corpus;
pub mod domain;
pub mod engine;
mod error;
pub mod evaluation;
pub mod harness;
pub mod interaction;
pub mod nlg;
pub mod nlu;
pub mod preference;
pub mod sampling;

pub use error::{Error, Result};
