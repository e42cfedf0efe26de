//! Intermediate representations for semantic-parsing programs.
//!
//! Three program formalisms are supported:
//!
//! * [`sparql`]: CFQ-style SPARQL conjunct sets.
//! * [`sql`]: canonicalized SQL with `<TABLE>alias<N>` table aliases.
//! * [`scan`]: SCAN navigation commands and their action sequences.
//!
//! Each formalism has a reversible IR (with an exact inverse) and a lossy IR.
//! [`pipeline`] stages datasets for one- and two-stage seq2seq training and
//! turns model predictions back into executable programs; [`metrics`] scores
//! the results.

pub mod metrics;
pub mod pipeline;
pub mod scan;
pub mod sparql;
pub mod sql;

pub use pipeline::{ExampleRecord, Formalism, PipelineConfig, PipelineMode};
