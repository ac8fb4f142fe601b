//! Exact dyadic harmonic analysis on finite product grids.
//!
//! Functions on `[0,1)^{d_1} x ... x [0,1)^{d_t}` are step functions on the
//! finest dyadic cells, with values in the ring `Q + Q sqrt(2)`. On top of the
//! tensor Haar basis the crate provides dyadic shifts, paraproducts, a product
//! BMO estimator, iterated commutators with their exact decomposition into
//! shifted paraproducts, and a floating-point Riesz transform lab.

pub mod commutator;
pub mod dyadic;
pub mod error;
pub mod haar;
pub mod linalg;
pub mod paraproduct;
pub mod random;
pub mod riesz;
pub mod scalar;
pub mod shift;

pub use dyadic::{DyadicCube, DyadicRectangle, GridSpec, Signature, VectorSignature};
pub use error::{DyadicError, Result};
pub use haar::{HaarExpansion, StepFunction};
pub use scalar::{Rational, Scalar};
