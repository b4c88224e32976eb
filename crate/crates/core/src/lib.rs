//! Learn the item-by-attribute Q-matrix of cognitive diagnosis models from
//! binary response data by training an L1-penalized restricted Boltzmann
//! machine with contrastive divergence.
//!
//! The crate provides the model and its exact small-instance oracles
//! ([`rbm`]), the penalized CD-1 training loop ([`trainer`]), response
//! simulators for DINA/ACDM/GDINA/DINO and mixtures ([`sim`]), Q-matrix
//! extraction and error metrics ([`eval`]), the debiased cross-validation
//! selector ([`cv`]), latent attribute classification ([`classify`]), and
//! the delimited file formats shared with the command-line tool ([`io`]).

pub mod assignment;
pub mod classify;
pub mod cv;
pub mod error;
pub mod eval;
pub mod io;
pub mod rbm;
pub mod seed;
pub mod sim;
pub mod trainer;
pub mod types;

pub use error::{Error, Result};
pub use rbm::RbmParams;
pub use types::{AttributeMatrix, QMatrix, ResponseMatrix};
