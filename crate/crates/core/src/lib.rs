//! Numerical laboratory for Korevaar-Schoen energies on discretized compact
//! metric measure spaces.
//!
//! Every integral against the reference measure is a weighted sum over the
//! points of a [`MeasuredPointCloud`]. On top of that the crate provides
//! multiscale energies ([`energy`]), covering nets and mollifiers
//! ([`smoothing`]), Poincare and maximal-function diagnostics ([`poincare`]),
//! reference conductance networks ([`graphform`]) and Mosco-limit probes
//! ([`convergence`]).

// NaN-rejecting guards are written as negated comparisons on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod error;
pub mod field;
pub mod scales;
pub mod space;
pub mod stats;
pub mod energy;
pub mod smoothing;
pub mod graphform;
pub mod poincare;
pub mod convergence;

pub use error::{Error, Result};
pub use field::ScalarField;
pub use scales::ScaleGrid;
pub use space::{Ball, MeasuredPointCloud, SpaceSpec};
