//! Type expressions, unification, terms and definitional equality.

pub mod normalize;
pub mod term;
pub mod types;

pub use normalize::{convertible, defeq, eta_collapse, normalize, KernelError, Normalizer, DEFAULT_FUEL};
pub use term::{Binder, InstanceRef, Prim, Term};
pub use types::{unify, unify_all, unify_constraints, Constraint, Substitution, TypeExpr, UnifyError};
