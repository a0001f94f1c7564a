pub mod circuit;
pub mod error;
pub mod fabric;
pub mod fcidump;
pub mod gates;
pub mod gradients;
pub mod hamiltonian;
pub mod objective;
pub mod optimize;
pub mod sim;
pub mod symmetry;
pub mod vqe;

pub use error::{Error, Result};
