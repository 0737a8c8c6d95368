//! Numerical toolkit for the neutral silicon-vacancy center in diamond under
//! hydrostatic strain: product Jahn-Teller vibronic spectra, double-well
//! tunneling, potential-surface fits, and optical, hyperfine and
//! charge-stability observables.

pub mod apes;
pub mod cli;
pub mod ctl;
pub mod error;
pub mod lsq;
pub mod schrodinger;
pub mod spectro;
pub mod units;
pub mod vibronic;

pub use error::{Error, Result};
