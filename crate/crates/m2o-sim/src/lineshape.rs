//! Normalized inhomogeneous lineshapes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineshapeKind {
    Gaussian,
    Lorentzian,
}

impl std::str::FromStr for LineshapeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(LineshapeKind::Gaussian),
            "lorentzian" => Ok(LineshapeKind::Lorentzian),
            other => Err(Error::InvalidInput(format!(
                "unknown lineshape '{other}', expected gaussian or lorentzian"
            ))),
        }
    }
}

/// A unit-area lineshape with a given full width at half maximum. The
/// density carries units of 1/x for whatever frequency unit x is in.
#[derive(Debug, Clone, Copy)]
pub struct Lineshape {
    pub kind: LineshapeKind,
    pub fwhm: f64,
}

/// 2 √(2 ln 2): converts a Gaussian FWHM to σ via σ = FWHM / this.
pub const GAUSSIAN_FWHM_TO_SIGMA: f64 = 2.354_820_045_030_949;

impl Lineshape {
    pub fn new(kind: LineshapeKind, fwhm: f64) -> Result<Self> {
        if fwhm <= 0.0 || !fwhm.is_finite() {
            return Err(Error::InvalidInput(format!(
                "lineshape width must be positive and finite, got {fwhm}"
            )));
        }
        Ok(Lineshape { kind, fwhm })
    }

    pub fn sigma(&self) -> f64 {
        self.fwhm / GAUSSIAN_FWHM_TO_SIGMA
    }

    /// Unit-area density at detuning `x` from line center.
    pub fn density(&self, x: f64) -> f64 {
        match self.kind {
            LineshapeKind::Gaussian => {
                let s = self.sigma();
                (-0.5 * (x / s) * (x / s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
            }
            LineshapeKind::Lorentzian => {
                let hw = 0.5 * self.fwhm;
                hw / (std::f64::consts::PI * (x * x + hw * hw))
            }
        }
    }

    pub fn peak_density(&self) -> f64 {
        self.density(0.0)
    }
}
