//! Physical constants (2018 CODATA / exact SI values).
//!
//! Level energies are handled in GHz throughout the crate; conversions to
//! joules happen only inside operations that consume these constants.

/// Planck constant in J·s (exact).
pub const PLANCK_H: f64 = 6.626_070_15e-34;

/// Reduced Planck constant in J·s.
pub const REDUCED_PLANCK: f64 = PLANCK_H / (2.0 * std::f64::consts::PI);

/// Bohr magneton in J/T.
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;

/// Bohr magneton expressed as a frequency-per-field slope, GHz/T.
pub const BOHR_MAGNETON_GHZ_PER_T: f64 = BOHR_MAGNETON / PLANCK_H * 1e-9;

/// Boltzmann constant in J/K (exact).
pub const BOLTZMANN_K: f64 = 1.380_649e-23;

/// Vacuum permeability in H/m.
pub const VACUUM_PERMEABILITY: f64 = 1.256_637_062_12e-6;

/// Vacuum permittivity in F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

/// Speed of light in m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// kT expressed in GHz for a temperature in kelvin.
pub fn thermal_ghz(temperature_k: f64) -> f64 {
    BOLTZMANN_K * temperature_k / PLANCK_H * 1e-9
}
