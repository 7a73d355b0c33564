//! Causal-driven column ordering and causal-aware reweighting for tabular anomaly
//! detection.
//!
//! The pipeline runs in stages, each usable on its own:
//!
//! 1. [`table`]: load mixed-type tables and serialize rows as `name is value` text.
//! 2. [`factor`]: ingest factor definitions, the factor-to-column mapping, and the
//!    annotated factor values.
//! 3. [`discovery`] / [`graph`]: learn a weighted causal graph over factors, or import one.
//! 4. [`ordering`]: project the graph onto a column preference matrix, solve the linear
//!    ordering problem exactly, and enumerate the top-k near-optimal orderings.
//! 5. [`scoring`]: fit an autoregressive column model under those orderings and score
//!    samples by factor-count-weighted column NLL, or bring NLLs from an external model.
//! 6. [`eval`]: contamination-free splits, AUC-ROC / F1, and the ordering x weighting grid.
//!
//! [`pipeline`] wires the stages to files for the `colorder` binary.

pub mod discovery;
pub mod error;
pub mod eval;
pub mod factor;
pub mod graph;
pub mod ordering;
pub mod pipeline;
pub mod scoring;
pub mod synth;
pub mod table;

pub use error::{Error, ErrorClass, Result};
