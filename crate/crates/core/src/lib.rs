//! Values of stochastic tug-of-war games on graphs, the long-term advantage
//! `c_f`, and the discrete infinity Laplace equation with empty terminal set.

pub mod continuum;
pub mod engine;
pub mod error;
pub mod graph;
pub mod io;
pub mod report;
pub mod sim;
pub mod solver;

pub use error::{Error, Result};
