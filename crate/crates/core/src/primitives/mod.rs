//! Building blocks for the deep approximator: step functions, bit
//! extraction, point fitting, squaring, products and monomials.

mod bits;
mod fitter;
mod product;
mod square;
mod step;

pub use bits::{build_bit_lookup, build_bit_sum, build_pow2_multiplier, BitMatrix};
#[cfg(any(test, feature = "test-unmodified"))]
pub use bits::build_bit_sum_unmodified;
pub use fitter::{build_point_fitter, fitter_bits};
pub use product::{
    build_monomial, build_multi_product, build_product_general, build_product_unit, MultiIndex,
};
pub use square::{build_square, sawtooth, square_k};
pub use step::{build_step_function, staircase, StepSpec};
