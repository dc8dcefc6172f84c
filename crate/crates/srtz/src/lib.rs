//! Superregular lower-triangular Toeplitz matrices over GF(2^p).
//!
//! The crate has three layers:
//!
//! * [`galois`] and [`toeplitz`] hold the mechanics: field tables, the
//!   Toeplitz constructions, selectors, determinants.
//! * [`regularity`] and [`search`] decide and find superregularity, for
//!   single matrices and for pairs whose stack (and optionally product)
//!   must stay superregular.
//! * [`codec`] and [`wire`] apply the matrices as a rate-1/m erasure code
//!   with recoding support, plus a packet format for moving coded rows
//!   around.

pub mod codec;
pub mod galois;
pub mod regularity;
pub mod search;
pub mod toeplitz;
pub mod wire;

pub use galois::{FieldElement, FieldSpec, GaloisError};
