//! Reuse-distance analysis and early-stage multi-level cache sizing.
//!
//! The pipeline is: load or generate a trace ([`trace`]), compute its
//! reuse-distance histogram once ([`reuse`]), derive per-level miss counts for
//! any inclusive or exclusive hierarchy from that histogram ([`estimate`]), and
//! scan the power-of-two size grid for the cheapest, lowest-power or fastest
//! hierarchy ([`optimize`]). [`analytic`] solves the step-histogram model in
//! closed form, and [`simulate`] is the reference simulator the estimates are
//! checked against ([`compare`]).
//!
//! Runnable walkthroughs live in `examples/`; `cargo run --example <name>`.

pub mod analytic;
pub mod compare;
pub mod error;
pub mod estimate;
mod fenwick;
pub mod manifest;
pub mod optimize;
pub mod reuse;
pub mod simulate;
pub mod trace;

pub use error::{Error, Result};
