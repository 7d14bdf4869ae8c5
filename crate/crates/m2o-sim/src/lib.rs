//! Modeling and design library for a ¹⁷¹Yb³⁺:YVO₄ microwave-to-optical
//! transducer: spin-Hamiltonian level structure, polarization selection
//! rules, transduction spectra and double-resonance maps, cavity-efficiency
//! algebra, ensemble pulse dynamics, and the calibration and fitting chains
//! used to characterize the device.

pub mod calibration;
pub mod constants;
pub mod error;
pub mod fit;
pub mod lineshape;
pub mod spectra;
pub mod spin;
pub mod transitions;

pub use error::{Error, Result};
