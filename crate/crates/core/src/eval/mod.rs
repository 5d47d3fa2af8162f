//! Finite-model semantics: carriers, term evaluation and exhaustive axiom
//! checking.

mod axioms;
mod carrier;
mod value;

pub use axioms::{
    check_axioms, check_of_module_correspondence, check_statement, AxiomReport, Correspondence, Counterexample,
    OfModuleReport, Status,
};
pub use carrier::{
    build_add_hom_carrier, build_function_carrier, build_opposite_carrier, CarrierError, FiniteCarrier, OpTable,
    Structure,
};
pub use value::{Domain, Env, EvalContext, EvalError, Value};
