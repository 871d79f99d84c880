//! Simulator for stream-based active learning over an online ensemble of
//! machine translation systems.

pub mod cli;
pub mod config;
pub mod datamodel;
pub mod ensemble;
pub mod error;
pub mod feedback;
pub mod metrics;
pub mod onception;
pub mod output;
pub mod rng;
pub mod sim;
pub mod strategies;
pub mod synthetic;
pub mod textsim;

pub use error::{Error, Result};
