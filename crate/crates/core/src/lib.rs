//! Explicit ReLU network constructions for approximating smooth functions.
//!
//! Every construction here produces a concrete [`Network`] with stored
//! weights, so the parameter supremum, width and depth of the realization can
//! be audited directly. The crate is `no_std` and needs only `alloc`.
//!
//! Layout:
//!
//! * [`net`] and [`matrix`]: the network type, evaluation and profiling.
//! * [`algebra`]: serial/parallel composition, identity channels, min/max/mid
//!   networks and the depth-for-width rewiring.
//! * [`interp`]: exact piecewise-linear interpolators on equidistant and
//!   inequidistant grids, with one and two hidden layers.
//! * [`primitives`]: step functions, bit extraction, point fitting, squaring,
//!   products and monomials.
//! * [`assembly`]: the local Taylor approximator, the median extension across
//!   the trifling region and the full approximator.
//! * [`shallow`]: the single-hidden-layer smooth-activation networks and the
//!   audit of their coefficient growth.
//! * [`fit`]: grid sup-errors and least-squares rate fits.
#![no_std]
#![forbid(unsafe_code)]
#![warn(missing_docs)]

extern crate alloc;

pub mod algebra;
pub mod assembly;
mod error;
pub mod fit;
pub mod interp;
pub mod matrix;
pub(crate) mod math;
pub mod net;
pub mod primitives;
pub mod shallow;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use net::{Activation, AffineLayer, Network, NetworkProfile};
