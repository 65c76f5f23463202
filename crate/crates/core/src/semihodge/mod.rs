//! Semi-infinite subspaces, normalized periods and their identities.

pub mod checks;
pub mod filtration;
pub mod frame;
pub mod periods;
pub mod pipeline;
