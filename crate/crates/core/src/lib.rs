//! Exact computation of quantum periods and Frobenius-manifold data from
//! dgBV-type deformation packages.

pub mod algebra;
pub mod dgla;
pub mod error;
pub mod models;
pub mod report;
pub mod semihodge;
pub mod verify;
pub mod ximodule;

pub use error::{Error, Result};
