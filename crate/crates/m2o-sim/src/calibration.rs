//! Photon-number-efficiency calibration chain and the device-temperature
//! extraction from transmission spectra.

use serde::{Deserialize, Serialize};

use crate::constants::{thermal_ghz, PLANCK_H};
use crate::error::{Error, Result};
use crate::fit::{curvature_uncertainty, golden_section_min};
use crate::spectra::{absorption_spectrum, transmission_spectrum, EnsembleModel, SpectrumTrace};
use crate::transitions::TransitionTable;

/// dBm → watts.
pub fn dbm_to_watts(p_dbm: f64) -> f64 {
    1e-3 * 10f64.powf(p_dbm / 10.0)
}

/// watts → dBm.
pub fn watts_to_dbm(p_w: f64) -> f64 {
    10.0 * (p_w / 1e-3).log10()
}

/// Photon flux of a power at a carrier frequency. `f_ghz` must be positive.
pub fn photons_per_second(p_w: f64, f_ghz: f64) -> f64 {
    assert!(f_ghz > 0.0, "carrier frequency must be positive");
    p_w / (PLANCK_H * f_ghz * 1e9)
}

/// Heterodyne calibration anchor: the electrical reading that a known
/// optical signal power produced, at a recorded amplifier gain setting.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HeterodyneAnchor {
    pub electrical_dbm: f64,
    pub optical_w: f64,
    pub bandwidth_khz: f64,
}

/// Input coupling efficiency at one microwave frequency, with its optional
/// factor breakdown (launch × path).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InputEfficiency {
    pub eta_input: f64,
    pub eta_launch: Option<f64>,
    pub eta_mw_path: Option<f64>,
}

/// The measured detection/coupling chain of the device.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationChain {
    pub eta_output: f64,
    pub eta_coupling: Option<f64>,
    pub eta_optical_path: Option<f64>,
    /// (microwave frequency GHz, input efficiency), sorted by frequency.
    pub eta_input_by_freq: Vec<(f64, InputEfficiency)>,
    pub responsivity_a_per_w: f64,
    pub electrical_gain_db: f64,
    pub anchor: Option<HeterodyneAnchor>,
}

impl CalibrationChain {
    /// The measured chain of the characterized device.
    pub fn device_default() -> Self {
        CalibrationChain {
            eta_output: 0.09,
            eta_coupling: Some(0.22),
            eta_optical_path: Some(0.40),
            eta_input_by_freq: vec![
                (
                    0.674,
                    InputEfficiency {
                        eta_input: 0.45,
                        eta_launch: Some(0.88),
                        eta_mw_path: Some(0.51),
                    },
                ),
                (
                    3.369,
                    InputEfficiency {
                        eta_input: 0.15,
                        eta_launch: Some(0.74),
                        eta_mw_path: Some(0.20),
                    },
                ),
            ],
            responsivity_a_per_w: 0.18,
            electrical_gain_db: 39.3,
            anchor: Some(HeterodyneAnchor {
                electrical_dbm: -71.62,
                optical_w: 280e-15,
                bandwidth_khz: 3.0,
            }),
        }
    }

    /// Check the chain invariants: every efficiency in (0, 1], and each
    /// composite efficiency consistent with its factor product to 1e-2.
    pub fn validate(&self) -> Result<()> {
        let ok = |e: f64| e > 0.0 && e <= 1.0;
        if !ok(self.eta_output) {
            return Err(Error::InvalidInput(format!(
                "eta_output must be in (0, 1], got {}",
                self.eta_output
            )));
        }
        if let (Some(c), Some(p)) = (self.eta_coupling, self.eta_optical_path) {
            if (c * p - self.eta_output).abs() > 1e-2 {
                return Err(Error::InvalidInput(format!(
                    "eta_output {} inconsistent with coupling x path = {}",
                    self.eta_output,
                    c * p
                )));
            }
        }
        for (f, input) in &self.eta_input_by_freq {
            if !ok(input.eta_input) {
                return Err(Error::InvalidInput(format!(
                    "eta_input({f} GHz) must be in (0, 1]"
                )));
            }
            if let (Some(l), Some(p)) = (input.eta_launch, input.eta_mw_path) {
                if (l * p - input.eta_input).abs() > 1e-2 {
                    return Err(Error::InvalidInput(format!(
                        "eta_input({f} GHz) = {} inconsistent with launch x path = {}",
                        input.eta_input,
                        l * p
                    )));
                }
            }
        }
        if self.responsivity_a_per_w <= 0.0 {
            return Err(Error::InvalidInput("responsivity must be positive".into()));
        }
        Ok(())
    }

    /// Input coupling efficiency at a microwave frequency (±1 MHz match).
    pub fn input_efficiency(&self, f_ghz: f64) -> Result<f64> {
        self.eta_input_by_freq
            .iter()
            .find(|(f, _)| (f - f_ghz).abs() < 1e-3)
            .map(|(_, e)| e.eta_input)
            .ok_or(Error::UnknownFrequency(f_ghz))
    }

    /// Convert a heterodyne electrical reading to signal optical power via
    /// the anchor point. Heterodyne beat power is linear in the signal
    /// optical power, so 10 dB electrical is a factor of 10 optical.
    pub fn heterodyne_optical_power(&self, electrical_dbm: f64) -> Result<f64> {
        let anchor = self.anchor.ok_or(Error::MissingAnchor)?;
        Ok(anchor.optical_w * 10f64.powf((electrical_dbm - anchor.electrical_dbm) / 10.0))
    }

    /// Flag use of the anchor at a gain setting it was not calibrated at.
    pub fn check_gain_setting(&self, actual_gain_db: f64) -> Result<()> {
        if (actual_gain_db - self.electrical_gain_db).abs() > 0.05 {
            return Err(Error::AnchorMismatch {
                actual_db: actual_gain_db,
                anchor_db: self.electrical_gain_db,
            });
        }
        Ok(())
    }
}

/// How the transduced output was observed.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum DetectedSignal {
    OpticalWatts(f64),
    PhotonRate(f64),
    ElectricalDbm(f64),
}

/// Breakdown of a photon-number-efficiency computation.
#[derive(Debug, Clone, Serialize)]
pub struct EfficiencyChainReport {
    pub input_rate_per_s: f64,
    pub device_input_rate_per_s: f64,
    pub detected_rate_per_s: f64,
    pub device_output_rate_per_s: f64,
    pub eta_device: f64,
}

/// Device photon-number efficiency from a microwave input and a detected
/// optical output: η = (detected_rate / η_output) / (input_rate · η_input).
pub fn device_photon_efficiency(
    mw_power_dbm: f64,
    mw_freq_ghz: f64,
    detected: DetectedSignal,
    output_freq_ghz: f64,
    chain: &CalibrationChain,
) -> Result<EfficiencyChainReport> {
    let eta_input = chain.input_efficiency(mw_freq_ghz)?;
    let input_rate = photons_per_second(dbm_to_watts(mw_power_dbm), mw_freq_ghz);
    let detected_rate = match detected {
        DetectedSignal::PhotonRate(r) => r,
        DetectedSignal::OpticalWatts(w) => photons_per_second(w, output_freq_ghz),
        DetectedSignal::ElectricalDbm(dbm) => {
            photons_per_second(chain.heterodyne_optical_power(dbm)?, output_freq_ghz)
        }
    };
    let device_input_rate = input_rate * eta_input;
    let device_output_rate = detected_rate / chain.eta_output;
    Ok(EfficiencyChainReport {
        input_rate_per_s: input_rate,
        device_input_rate_per_s: device_input_rate,
        detected_rate_per_s: detected_rate,
        device_output_rate_per_s: device_output_rate,
        eta_device: if device_input_rate > 0.0 {
            device_output_rate / device_input_rate
        } else {
            0.0
        },
    })
}

/// Thermal-equilibrium populations of four levels (energies in GHz) at a
/// temperature in kelvin. Energies are referenced to their minimum before
/// exponentiation, so widely split levels stay numerically safe.
pub fn boltzmann_populations(energies_ghz: &[f64; 4], temperature_k: f64) -> [f64; 4] {
    assert!(temperature_k > 0.0, "temperature must be positive");
    let kt_ghz = thermal_ghz(temperature_k);
    let e_min = energies_ghz.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut weights = [0.0; 4];
    let mut z = 0.0;
    for (i, &e) in energies_ghz.iter().enumerate() {
        weights[i] = (-(e - e_min) / kt_ghz).exp();
        z += weights[i];
    }
    for w in weights.iter_mut() {
        *w /= z;
    }
    weights
}

/// Configuration for the temperature fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TemperatureFitConfig {
    /// Waveguide path length in meters.
    pub length_m: f64,
    /// Fit the background-leakage fraction alongside T.
    pub fit_beta: bool,
    /// Fixed leakage when `fit_beta` is false, initial value otherwise.
    pub beta: f64,
    pub t_min_k: f64,
    pub t_max_k: f64,
}

impl Default for TemperatureFitConfig {
    fn default() -> Self {
        TemperatureFitConfig {
            length_m: 60e-6,
            fit_beta: true,
            beta: 0.0,
            t_min_k: 1e-3,
            t_max_k: 100.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TemperatureFitResult {
    pub temperature_k: f64,
    pub uncertainty_k: f64,
    pub beta: f64,
    /// Even-isotope line weight used by the forward model (fixed input).
    pub even_isotope_strength: f64,
    pub residual_ss: f64,
    pub n_points: usize,
}

/// Number of distinct model lines that fall inside the measured grid.
fn lines_in_range(table: &TransitionTable, ens: &EnsembleModel, axis: &[f64]) -> usize {
    let (lo, hi) = (axis[0], *axis.last().unwrap());
    let mut centers: Vec<f64> = table
        .optical
        .iter()
        .filter(|t| t.amp.norm_sqr() > 1e-9)
        .map(|t| table.offset_ghz(t))
        .filter(|&c| c >= lo && c <= hi)
        .collect();
    if ens.even_isotope_strength > 0.0
        && ens.even_isotope_offset_ghz >= lo
        && ens.even_isotope_offset_ghz <= hi
    {
        centers.push(ens.even_isotope_offset_ghz);
    }
    centers.sort_by(|a, b| a.partial_cmp(b).unwrap());
    centers.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    centers.len()
}

/// Fit the ensemble temperature (and optionally the leakage floor) to a
/// measured transmission spectrum.
///
/// The relative depths of the zero-field lines encode the ground-level
/// population ratios. The transmission model is linear in β at fixed T, so β
/// is solved in closed form inside a golden-section search over log T. The
/// quoted uncertainty comes from the curvature of the residual surface.
pub fn fit_temperature(
    measured: &SpectrumTrace,
    table: &TransitionTable,
    ens_base: &EnsembleModel,
    cfg: &TemperatureFitConfig,
) -> Result<TemperatureFitResult> {
    measured.validate()?;
    if measured.axis_ghz.len() < 8 {
        return Err(Error::InvalidInput("spectrum has too few points".into()));
    }
    let n_lines = lines_in_range(table, ens_base, &measured.axis_ghz);
    if n_lines < 2 {
        return Err(Error::InsufficientLines(n_lines));
    }

    let attenuation_at = |t_k: f64| -> Result<Vec<f64>> {
        let mut ens = ens_base.clone();
        ens.temperature_k = t_k;
        let alpha = absorption_spectrum(table, &ens, &measured.axis_ghz)?;
        Ok(alpha
            .values
            .iter()
            .map(|&a| (-a * cfg.length_m).exp())
            .collect())
    };

    // T(f) = m(f) + β (1 − m(f)) with m = exp(−αL): β is linear.
    let best_beta = |m: &[f64]| -> f64 {
        if !cfg.fit_beta {
            return cfg.beta;
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for (mi, yi) in m.iter().zip(measured.values.iter()) {
            let g = 1.0 - mi;
            num += g * (yi - mi);
            den += g * g;
        }
        if den > 0.0 {
            (num / den).clamp(0.0, 0.999)
        } else {
            cfg.beta
        }
    };

    let ss_at = |t_k: f64| -> f64 {
        let Ok(m) = attenuation_at(t_k) else {
            return f64::INFINITY;
        };
        let beta = best_beta(&m);
        m.iter()
            .zip(measured.values.iter())
            .map(|(mi, yi)| {
                let model = mi + beta * (1.0 - mi);
                (model - yi).powi(2)
            })
            .sum()
    };

    let ln_t = golden_section_min(
        &|x: f64| ss_at(x.exp()),
        cfg.t_min_k.ln(),
        cfg.t_max_k.ln(),
        1e-10,
    );
    let t_fit = ln_t.exp();
    let m = attenuation_at(t_fit)?;
    let beta_fit = best_beta(&m);
    let ss = ss_at(t_fit);

    let n_params = if cfg.fit_beta { 2 } else { 1 };
    let step = (0.02 * t_fit).max(1e-5);
    let uncertainty = curvature_uncertainty(&ss_at, t_fit, step, measured.values.len(), n_params);

    Ok(TemperatureFitResult {
        temperature_k: t_fit,
        uncertainty_k: uncertainty,
        beta: beta_fit,
        even_isotope_strength: ens_base.even_isotope_strength,
        residual_ss: ss,
        n_points: measured.values.len(),
    })
}
