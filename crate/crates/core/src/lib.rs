//! Typeclass instance resolution with coherence checking.
//!
//! Classes and instances are declared in a small text format and loaded
//! into a [`registry::Registry`]. The [`resolver`] chains instances to
//! answer goals such as `module Nat (fn ι (add_hom A B))`, the [`kernel`]
//! decides whether two resolutions build definitionally equal operations,
//! and [`eval`] checks axioms and propositional equality by exhaustive
//! evaluation over finite carriers. [`diamond`] combines the three.

pub mod bundled;
pub mod config;
pub mod diamond;
pub mod eval;
pub mod exec;
pub mod kernel;
pub mod parser;
pub mod registry;
pub mod resolver;

pub use config::Limits;
pub use exec::Exec;
