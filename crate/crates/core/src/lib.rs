//! Permutation symmetry of feedforward networks: transforms, canonical
//! forms, equivalence checks, covering-number bounds, empirical covering
//! experiments and basin-of-attraction studies.

pub mod activation;
pub mod basin;
pub mod bigmath;
pub mod bounds;
pub mod canonical;
pub mod empirical;
pub mod equivalence;
pub mod error;
pub mod nn;
pub mod quadrature;
pub mod rng;
pub mod transforms;
pub mod verify;

pub use activation::Activation;
pub use canonical::{canonicalize, symmetry_profile, CanonicalForm, SymmetryProfile};
pub use error::{Error, Result};
pub use nn::{forward, Architecture, Layer, Matrix, Network, NetworkParams};
pub use transforms::{apply_permutation, PermutationSpec};
