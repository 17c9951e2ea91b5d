//! Single-photon propagation through networks of quantum systems described
//! by scattering, coupling and Hamiltonian data.

pub mod cli;
pub mod error;
pub mod grid;
pub mod io;
pub mod operator;
pub mod oracles;
pub mod pulse;
pub mod slh;
pub mod transfer;

pub use error::{Error, Result};
pub use grid::UniformGrid;
pub use operator::Operator;
pub use pulse::{Pulse, PulseShape};
pub use slh::SlhModel;
pub use transfer::PhotonTransfer;
