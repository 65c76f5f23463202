pub mod graded;
pub mod linalg;
pub mod matrix;
pub mod rational;
pub mod series;
pub mod hbar;
pub mod operator;
pub mod compose;
