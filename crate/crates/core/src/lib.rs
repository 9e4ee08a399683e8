//! Spectral invariants of pattern-invariant operators on aperiodic graphs,
//! computed by finite sections over Følner windows.
//!
//! * [`graph`]: lazily evaluated infinite graphs, windows, balls, boundaries.
//! * [`pattern`]: canonical codes of rooted balls and pattern frequencies.
//! * [`operator`]: the pattern-invariant operator algebra and finite sections.
//! * [`exactla`]: exact rational kernels, characteristic polynomials, `|det|₁`.
//! * [`spectra`]: eigenvalues, spectral staircases and the convergence runs.

pub mod error;
pub mod exactla;
pub mod graph;
pub mod operator;
pub mod pattern;
pub mod rational;
pub mod rng;
pub mod spectra;

pub use error::{Error, Result};
pub use graph::{GraphDescriptor, InfiniteGraph, RootedBall, VertexId, Window};
pub use operator::{finite_section, FiniteSection, PatternOperator, RuleSpec};
pub use pattern::{canonical_code, canonical_form, PatternCode};
pub use rational::Rational;

/// Library version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
