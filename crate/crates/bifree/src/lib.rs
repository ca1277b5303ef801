pub mod bnc;
pub mod checks;
pub mod cumulants;
pub mod descriptor;
pub mod error;
pub mod fock;
pub mod matrix;
pub mod mobius;
pub mod models;
pub mod specified;
pub mod transforms;

pub use error::{Error, Result};
pub use matrix::{BMatrix, C64};
