//! Simulation and spectral analysis of random probabilistic cellular automata
//! viewed as discrete single-particle quantum systems.

pub mod automaton;
pub mod blocks;
pub mod coarse;
pub mod error;
pub mod linalg;
pub mod model;
pub mod report;
pub mod spectral;
pub mod wave;

pub use error::{Error, Result};
