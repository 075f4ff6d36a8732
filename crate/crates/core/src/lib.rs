//! Widths of weighted Besov embeddings at sequence level.
//!
//! Approximation, Gelfand and Kolmogorov numbers of
//! `l_q1(2^{j delta} l_p1(w)) -> l_q2(l_p2)`, computed through the dyadic
//! block decomposition, exact diagonal-operator formulas, and Gluskin-type
//! templates for finite identities.

pub mod allocator;
pub mod error;
pub mod lattice;
pub mod numeric;
pub mod params;
pub mod rates;
pub mod swidths;
pub mod weights;

pub use error::{Error, ErrorClass, Result};
pub use params::{EmbeddingParams, Exponent};
pub use swidths::{Certainty, WidthCurve, WidthKind};
pub use weights::{VIndices, WeightKind, WeightSpec};
