//! An independent, deliberately naive re-derivation of the period pipeline.
//!
//! Everything here is recomputed from the raw tensors of a model with dense
//! elimination, order by order and monomial by monomial, without touching
//! the engine's solvers. [`compare`] then checks the engine's output
//! against it quantity by quantity.

pub mod linear;
pub mod reference;
pub mod ring;

pub use reference::{compare, cup_product_a0, reference, Reference};
