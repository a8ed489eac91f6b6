//! Modulus of averagedness of nonexpansive linear operators.
//!
//! The crate computes the exact modulus kappa(M) of a nonexpansive matrix,
//! principal/Dixmier/Friedrichs angles between subspaces, and the closed-form
//! modulus of compositions of a relaxed reflector with a projection, and
//! cross-validates the numeric and closed-form routes against each other and
//! against the Ogura-Yamada composition bound.

pub mod averaged;
pub mod closed_form;
pub mod error;
pub mod linalg;
pub mod matrix;
pub mod random;
pub mod report;
pub mod subspace;
pub mod tolerance;

pub use averaged::{
    is_kappa_averaged, is_nonexpansive, kappa_bisection, kappa_exact, kappa_quotient_sample,
    kappa_relaxed, kappa_scalar, smallest_gamma, Certificate, ModulusReport, Route,
};
pub use closed_form::{
    build_composition, kappa_closed_form, kappa_projection_composition, ogura_yamada_bound,
    q_envelope, q_maximizer_t, q_quotient, CompositionSpec, QEval,
};
pub use error::{Error, Result};
pub use linalg::{is_psd, orthonormalize, singular_cosines, sym_eigen, PsdReport, SymEigen};
pub use matrix::DenseMatrix;
pub use subspace::{
    angles, complement, intersection, projector, reflector, AngleReport, Subspace, SubspaceWire,
};
pub use tolerance::ToleranceConfig;
