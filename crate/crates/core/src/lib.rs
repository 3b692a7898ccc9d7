//! Core library for measuring how "structured" speaker-labeled interview
//! corpora are, and for comparing two corpora against each other.
//!
//! The pipeline stages, bottom to top:
//!
//! * [`corpus`] — transcript data model, parsing, and corpus loading.
//! * [`segment`] — Q/A pairing with short-pair merging, plus k-way
//!   chronological partitioning by pair count or by cumulative words.
//! * [`stats`] — per-segment dialogic metrics and Welch two-sample tests.
//! * [`qtype`] — seven-way question typing (rule baseline + LLM adapter).
//! * [`topics`] — two-stage LLM topic extraction and coverage scoring.
//! * [`gateway`] — provider-agnostic completion client with disk cache,
//!   retry, rate limiting, and a scriptable deterministic mock.
//! * [`synth`] — seeded synthetic corpus generator with ground truth,
//!   used to validate every analysis end to end.
//! * [`offline`] — deterministic built-in responder covering the three
//!   prompt families, for fully offline runs.
//!
//! The numerical routines in [`stats`] are generic over the scalar type
//! through [`num::Real`]; the rest of the pipeline works in [`Scalar`].

pub mod corpus;
pub mod gateway;
pub mod num;
pub mod offline;
pub mod prompt;
pub mod qtype;
pub mod segment;
pub mod stats;
pub mod synth;
pub mod topics;

/// Concrete scalar used by the pipeline types.
pub type Scalar = f64;

/// Welch test result at the pipeline scalar type.
pub type TTest = stats::TTestResult<Scalar>;
