//! Spot/contract coordination for truckload procurement: pricing oracles,
//! contract packing and assignment, the Load Bifurcation baseline, the Dual
//! Frank-Wolfe shadow-price algorithm, and Monte Carlo evaluation.

pub mod contracts;
pub mod dfw;
pub mod error;
pub mod eval;
pub mod flow;
pub mod instance;
pub mod lba;
pub mod lp;
pub mod pricing;
pub mod rng;

pub use error::{Error, Result};
