//! Forward models for the spectroscopic observables: absorption and
//! transmission spectra, double-resonance transduction maps, the four-level
//! zero-field map, and the zero-field interference structure.
//!
//! All map models are perturbative dipole-product models: a cell value is a
//! population × dipole-product × lineshape weight, linear in each pump
//! amplitude. The interference map extends this to complex amplitudes whose
//! relative sign comes from the closed S_x matrix-element products.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::boltzmann_populations;
use crate::error::{Error, Result};
use crate::lineshape::{Lineshape, LineshapeKind};
use crate::spin::{FieldVector, ManifoldTag, SpinManifoldParams};
use crate::transitions::{
    optical_amplitudes, transition_table, v_lambda_systems, MicrowavePolarization, OpticalLabel,
    OpticalPolarization, SystemKind, ThreeLevelSystem, TransitionTable,
};

/// Inhomogeneous-ensemble description shared by the spectral forward models.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleModel {
    /// Optical inhomogeneous FWHM in MHz.
    pub gamma_ih_optical_mhz: f64,
    /// Spin inhomogeneous FWHM in kHz (excited-state pair).
    pub gamma_ih_spin_khz: f64,
    /// Ground-pair spin FWHM in kHz; falls back to `gamma_ih_spin_khz`.
    pub gamma_ih_spin_ground_khz: Option<f64>,
    pub lineshape: LineshapeKind,
    /// Optical shift per spin shift across the ensemble (MHz/MHz).
    pub correlation_slope: f64,
    /// Ion number density in m⁻³ at full spin polarization.
    pub ion_density_rho_m3: f64,
    pub temperature_k: f64,
    /// Even-isotope impurity line: center offset from the anchor (GHz) and
    /// relative weight on the same scale as the population × |amp|² weights.
    pub even_isotope_offset_ghz: f64,
    pub even_isotope_strength: f64,
    /// Fraction of detected light that bypasses the waveguide.
    pub background_leakage_beta: f64,
    /// Converts the dimensionless weighted lineshape sum to an absorption
    /// coefficient: α = scale × Σ pop·|amp|²·L(f), in m⁻¹·GHz.
    pub alpha_scale_m_inv_ghz: f64,
}

impl Default for EnsembleModel {
    fn default() -> Self {
        EnsembleModel {
            gamma_ih_optical_mhz: 200.0,
            gamma_ih_spin_khz: 130.0,
            gamma_ih_spin_ground_khz: None,
            lineshape: LineshapeKind::Gaussian,
            correlation_slope: -120.0,
            ion_density_rho_m3: 1.08e24,
            temperature_k: 1.0,
            even_isotope_offset_ghz: 4.44,
            even_isotope_strength: 0.3,
            background_leakage_beta: 0.0,
            alpha_scale_m_inv_ghz: 1.0e4,
        }
    }
}

impl EnsembleModel {
    pub fn validate(&self) -> Result<()> {
        if self.gamma_ih_optical_mhz <= 0.0 || self.gamma_ih_spin_khz <= 0.0 {
            return Err(Error::InvalidInput("linewidths must be positive".into()));
        }
        if let Some(g) = self.gamma_ih_spin_ground_khz {
            if g <= 0.0 {
                return Err(Error::InvalidInput("ground spin width must be positive".into()));
            }
        }
        if !(0.0..1.0).contains(&self.background_leakage_beta) {
            return Err(Error::InvalidInput(format!(
                "leakage beta must be in [0, 1), got {}",
                self.background_leakage_beta
            )));
        }
        if self.ion_density_rho_m3 < 0.0 || self.even_isotope_strength < 0.0 {
            return Err(Error::InvalidInput(
                "density and isotope strength must be nonnegative".into(),
            ));
        }
        if self.temperature_k <= 0.0 {
            return Err(Error::InvalidInput("temperature must be positive".into()));
        }
        Ok(())
    }

    pub fn optical_lineshape(&self) -> Result<Lineshape> {
        Lineshape::new(self.lineshape, self.gamma_ih_optical_mhz * 1e-3)
    }

    /// Spin lineshape (GHz FWHM) for the pair living in the given manifold.
    pub fn spin_lineshape(&self, manifold: ManifoldTag) -> Result<Lineshape> {
        let khz = match manifold {
            ManifoldTag::Excited => self.gamma_ih_spin_khz,
            ManifoldTag::Ground => self
                .gamma_ih_spin_ground_khz
                .unwrap_or(self.gamma_ih_spin_khz),
        };
        Lineshape::new(self.lineshape, khz * 1e-6)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    AbsorptionCoefficient,
    Transmission,
    RelativeSignal,
}

/// A sampled spectrum over a strictly increasing frequency grid. The axis is
/// in GHz offset from the zero-field anchor (transition A) unless stated
/// otherwise by the producing operation.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumTrace {
    pub axis_ghz: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: SpectrumKind,
}

impl SpectrumTrace {
    pub fn validate(&self) -> Result<()> {
        if self.axis_ghz.len() != self.values.len() {
            return Err(Error::InvalidInput("axis/value length mismatch".into()));
        }
        if !self.axis_ghz.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::InvalidInput("axis must be strictly increasing".into()));
        }
        if self.kind == SpectrumKind::Transmission
            && !self
                .values
                .iter()
                .all(|&v| (0.0..=1.0 + 1e-9).contains(&v))
        {
            return Err(Error::InvalidInput("transmission outside [0, 1]".into()));
        }
        Ok(())
    }
}

/// One axis of a resonance map.
#[derive(Debug, Clone, Serialize)]
pub struct MapAxis {
    pub name: String,
    pub values: Vec<f64>,
}

/// A two-dimensional complex-valued resonance map, row-major in `values`.
#[derive(Debug, Clone, Serialize)]
pub struct ResonanceMap {
    pub row: MapAxis,
    pub col: MapAxis,
    pub values: Vec<C64>,
    pub field_mt: f64,
}

impl ResonanceMap {
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.values[i * self.col.values.len() + j]
    }

    pub fn abs_max(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Indices of the cell with the largest magnitude.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut best_v = -1.0;
        for i in 0..self.row.values.len() {
            for j in 0..self.col.values.len() {
                let v = self.at(i, j).norm();
                if v > best_v {
                    best_v = v;
                    best = (i, j);
                }
            }
        }
        best
    }
}

/// Evenly spaced grid helper (inclusive of both endpoints).
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "grid needs at least two points");
    let step = (hi - lo) / (n as f64 - 1.0);
    (0..n).map(|i| lo + i as f64 * step).collect()
}

/// Thermal populations of the four ground levels of a transition table.
pub fn ground_populations(table: &TransitionTable, ens: &EnsembleModel) -> [f64; 4] {
    boltzmann_populations(&table.ground_levels.energies, ens.temperature_k)
}

/// Absorption coefficient α(f) over a grid of offsets from the anchor.
///
/// α(f) = scale · [Σ_t pop(lower_t) |amp_t|² L(f − f_t) + even-isotope line],
/// with L the unit-area inhomogeneous lineshape and Boltzmann populations at
/// the ensemble temperature over the four ground levels.
pub fn absorption_spectrum(
    table: &TransitionTable,
    ens: &EnsembleModel,
    grid_offsets_ghz: &[f64],
) -> Result<SpectrumTrace> {
    ens.validate()?;
    let line = ens.optical_lineshape()?;
    let pops = ground_populations(table, ens);
    let values: Vec<f64> = grid_offsets_ghz
        .iter()
        .map(|&f| {
            let mut total = 0.0;
            for t in &table.optical {
                let w = pops[t.ground - 1] * t.amp.norm_sqr();
                if w > 0.0 {
                    total += w * line.density(f - table.offset_ghz(t));
                }
            }
            total += ens.even_isotope_strength * line.density(f - ens.even_isotope_offset_ghz);
            ens.alpha_scale_m_inv_ghz * total
        })
        .collect();
    let trace = SpectrumTrace {
        axis_ghz: grid_offsets_ghz.to_vec(),
        values,
        kind: SpectrumKind::AbsorptionCoefficient,
    };
    trace.validate()?;
    Ok(trace)
}

/// Waveguide transmission from an absorption-coefficient trace:
/// T(f) = (1 − β) exp(−α(f) L) + β.
pub fn transmission_spectrum(
    absorption: &SpectrumTrace,
    length_m: f64,
    beta: f64,
) -> Result<SpectrumTrace> {
    if absorption.kind != SpectrumKind::AbsorptionCoefficient {
        return Err(Error::InvalidInput(
            "transmission model needs an absorption-coefficient trace".into(),
        ));
    }
    if !(0.0..1.0).contains(&beta) || length_m < 0.0 {
        return Err(Error::InvalidInput(
            "need 0 <= beta < 1 and nonnegative length".into(),
        ));
    }
    let values = absorption
        .values
        .iter()
        .map(|&a| (1.0 - beta) * (-a * length_m).exp() + beta)
        .collect();
    let trace = SpectrumTrace {
        axis_ghz: absorption.axis_ghz.clone(),
        values,
        kind: SpectrumKind::Transmission,
    };
    trace.validate()?;
    Ok(trace)
}

/// Absorption traces over a field scan; one trace per field point.
pub fn absorption_field_scan(
    ground: &SpinManifoldParams,
    excited: &SpinManifoldParams,
    anchor_ghz: f64,
    pol: OpticalPolarization,
    ens: &EnsembleModel,
    fields_mt: &[f64],
    grid_offsets_ghz: &[f64],
) -> Result<Vec<(f64, SpectrumTrace)>> {
    fields_mt
        .par_iter()
        .map(|&b| {
            let table = transition_table(
                ground,
                excited,
                FieldVector::along_c(b),
                anchor_ghz,
                pol,
                MicrowavePolarization::BacParallelC,
            )?;
            Ok((b, absorption_spectrum(&table, ens, grid_offsets_ghz)?))
        })
        .collect()
}

/// Pump strengths for the three-level map (relative units; the model is
/// linear in each).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThreeLevelPumps {
    pub omega_optical_mhz: f64,
    pub omega_microwave_mhz: f64,
}

/// Joint inhomogeneous weight for a channel detuned by `d_opt` on the pump
/// and `d_spin` on the microwave leg. The ion's optical detuning is slaved to
/// its spin detuning through the correlation slope; what remains of the
/// optical inhomogeneity is evaluated at the residual.
fn correlated_weight(
    optical: &Lineshape,
    spin: &Lineshape,
    slope: f64,
    d_opt_ghz: f64,
    d_spin_ghz: f64,
) -> f64 {
    spin.density(d_spin_ghz) * optical.density(d_opt_ghz - slope * d_spin_ghz)
}

/// Every (pump leg, output leg) assignment of a three-level system behaves as
/// an independent transduction channel; the populated level is the pump leg's
/// ground level.
struct Channel {
    pump_offset_ghz: f64,
    mw_freq_ghz: f64,
    weight: f64,
    mw_manifold: ManifoldTag,
}

fn channels(systems: &[ThreeLevelSystem], table: &TransitionTable, pops: &[f64; 4]) -> Vec<Channel> {
    let mut out = Vec::with_capacity(systems.len() * 2);
    for sys in systems {
        for (pump, output) in [(0, 1), (1, 0)] {
            let pump_leg = &sys.legs[pump];
            let out_leg = &sys.legs[output];
            let weight = pops[pump_leg.ground - 1]
                * pump_leg.amp.norm()
                * out_leg.amp.norm()
                * sys.microwave.dipole_ghz_per_t;
            out.push(Channel {
                pump_offset_ghz: table.offset_ghz(pump_leg),
                mw_freq_ghz: sys.microwave.freq_ghz,
                weight,
                mw_manifold: sys.microwave.manifold,
            });
        }
    }
    out
}

/// Relative transduced magnitude versus (Δ_optical, f_M) for the three-level
/// systems of a transition table. Zero systems produce an identically zero
/// map, which is what happens at zero field with E ∥ c.
pub fn three_level_map(
    table: &TransitionTable,
    ens: &EnsembleModel,
    pumps: ThreeLevelPumps,
    optical_offsets_ghz: &[f64],
    microwave_ghz: &[f64],
) -> Result<ResonanceMap> {
    ens.validate()?;
    let systems = v_lambda_systems(table);
    let pops = ground_populations(table, ens);
    let chans = channels(&systems, table, &pops);
    let line_o = ens.optical_lineshape()?;
    let line_se = ens.spin_lineshape(ManifoldTag::Excited)?;
    let line_sg = ens.spin_lineshape(ManifoldTag::Ground)?;
    let drive = pumps.omega_optical_mhz * pumps.omega_microwave_mhz;

    let ncol = microwave_ghz.len();
    let values: Vec<C64> = (0..optical_offsets_ghz.len() * ncol)
        .into_par_iter()
        .map(|idx| {
            let d_opt = optical_offsets_ghz[idx / ncol];
            let f_mw = microwave_ghz[idx % ncol];
            let mut total = 0.0;
            for ch in &chans {
                let spin_line = match ch.mw_manifold {
                    ManifoldTag::Excited => &line_se,
                    ManifoldTag::Ground => &line_sg,
                };
                total += ch.weight
                    * correlated_weight(
                        &line_o,
                        spin_line,
                        ens.correlation_slope,
                        d_opt - ch.pump_offset_ghz,
                        f_mw - ch.mw_freq_ghz,
                    );
            }
            C64::new(drive * total, 0.0)
        })
        .collect();

    Ok(ResonanceMap {
        row: MapAxis {
            name: "optical_GHz".into(),
            values: optical_offsets_ghz.to_vec(),
        },
        col: MapAxis {
            name: "microwave_GHz".into(),
            values: microwave_ghz.to_vec(),
        },
        values,
        field_mt: table.field.b_mt,
    })
}

/// Pump strengths for the four-level zero-field scheme.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FourLevelPumps {
    pub omega_optical_mhz: f64,
    pub omega_mw_ground_mhz: f64,
}

/// Four-level map versus the two microwave inputs (f_M on the excited pair,
/// f_MG on the ground pair), with the optical pump fixed on its transition.
///
/// The signal chain pumps the ground spin pair, pumps the optical leg on
/// transition A, converts on the excited spin pair, and emits on transition
/// E. The model is a separable dipole product peaked at the two zero-field
/// spin gaps, with widths set by the two spin lineshapes; it is nonzero at
/// zero applied field, where the three-level map vanishes.
pub fn four_level_map(
    table: &TransitionTable,
    ens: &EnsembleModel,
    pumps: FourLevelPumps,
    microwave_e_ghz: &[f64],
    microwave_g_ghz: &[f64],
) -> Result<ResonanceMap> {
    ens.validate()?;
    let pump_leg = table
        .optical_by_label(OpticalLabel::A)
        .ok_or_else(|| Error::InvalidInput("transition A missing from table".into()))?;
    let out_leg = table
        .optical_by_label(OpticalLabel::E)
        .ok_or_else(|| Error::InvalidInput("transition E missing from table".into()))?;
    let mw_e = table
        .microwave_by_levels(ManifoldTag::Excited, 1, 2)
        .ok_or_else(|| Error::InvalidInput("excited spin pair missing".into()))?;
    // The ground microwave pump drives the pair feeding the optical pump's
    // lower level.
    let g_pump_lower = out_leg.ground.min(pump_leg.ground);
    let g_pump_upper = out_leg.ground.max(pump_leg.ground);
    let mw_g = table
        .microwave_by_levels(ManifoldTag::Ground, g_pump_lower, g_pump_upper)
        .ok_or_else(|| Error::InvalidInput("ground spin pair missing".into()))?;

    let pops = ground_populations(table, ens);
    let line_e = ens.spin_lineshape(ManifoldTag::Excited)?;
    let line_g = ens.spin_lineshape(ManifoldTag::Ground)?;
    let strength = pumps.omega_optical_mhz
        * pumps.omega_mw_ground_mhz
        * pops[g_pump_lower - 1]
        * mw_g.dipole_ghz_per_t
        * pump_leg.amp.norm()
        * mw_e.dipole_ghz_per_t
        * out_leg.amp.norm();

    let ncol = microwave_g_ghz.len();
    let values: Vec<C64> = (0..microwave_e_ghz.len() * ncol)
        .into_par_iter()
        .map(|idx| {
            let f_m = microwave_e_ghz[idx / ncol];
            let f_mg = microwave_g_ghz[idx % ncol];
            let v = strength
                * line_e.density(f_m - mw_e.freq_ghz)
                * line_g.density(f_mg - mw_g.freq_ghz);
            C64::new(v, 0.0)
        })
        .collect();

    Ok(ResonanceMap {
        row: MapAxis {
            name: "microwave_fm_GHz".into(),
            values: microwave_e_ghz.to_vec(),
        },
        col: MapAxis {
            name: "microwave_fmg_GHz".into(),
            values: microwave_g_ghz.to_vec(),
        },
        values,
        field_mt: table.field.b_mt,
    })
}

/// The two closed S_x matrix-element products that set the relative phase of
/// the two zero-field V systems:
/// ⟨1g|Sx|1e⟩⟨2e|Sx|1g⟩ and ⟨2g|Sx|1e⟩⟨2e|Sx|2g⟩.
#[derive(Debug, Clone, Copy)]
pub struct SxProducts {
    pub product_1: C64,
    pub product_2: C64,
}

impl SxProducts {
    /// Signs of the real parts under the crate's deterministic eigenvector
    /// phase convention. Individually these are gauge dependent.
    pub fn sign_pair(&self) -> (f64, f64) {
        (self.product_1.re.signum(), self.product_2.re.signum())
    }

    /// Gauge-invariant relative sign of the two products; −1 means the two
    /// output fields are π out of phase and interfere destructively when
    /// degenerate.
    pub fn relative_sign(&self) -> f64 {
        (self.product_1 * self.product_2.conj()).re.signum()
    }
}

/// Compute the S_x products for the ground-doublet V systems.
pub fn sx_product_signs(
    ground: &crate::spin::LevelSolution,
    excited: &crate::spin::LevelSolution,
) -> Result<SxProducts> {
    let amps = optical_amplitudes(ground, excited, OpticalPolarization::EPerpC)?;
    // amp[(i, j)] = ⟨g_{i+1}|Sx|e_{j+1}⟩; ⟨2e|Sx|kg⟩ = conj(⟨kg|Sx|2e⟩).
    Ok(SxProducts {
        product_1: amps[(0, 0)] * amps[(0, 1)].conj(),
        product_2: amps[(1, 0)] * amps[(1, 1)].conj(),
    })
}

/// Complex interference map over (B, f_M) for the two V systems sharing the
/// excited spin transition, pumped at a fixed laser offset with E ⊥ c.
///
/// Each system contributes a signed amplitude whose lineshape weight slaves
/// the optical detuning to the spin detuning through the correlation slope.
/// At B = 0 the two systems are degenerate with opposite signs and the map
/// cancels exactly; at large field the ground-doublet Zeeman splitting pulls
/// the two microwave resonances apart.
pub fn interference_map(
    ground: &SpinManifoldParams,
    excited: &SpinManifoldParams,
    anchor_ghz: f64,
    ens: &EnsembleModel,
    fields_mt: &[f64],
    microwave_ghz: &[f64],
    delta_optical_fixed_ghz: f64,
) -> Result<ResonanceMap> {
    ens.validate()?;
    let line_o = ens.optical_lineshape()?;
    let line_s = ens.spin_lineshape(ManifoldTag::Excited)?;

    let rows: Vec<Vec<C64>> = fields_mt
        .par_iter()
        .map(|&b| {
            let table = transition_table(
                ground,
                excited,
                FieldVector::along_c(b),
                anchor_ghz,
                OpticalPolarization::EPerpC,
                MicrowavePolarization::BacParallelC,
            )?;
            let products =
                sx_product_signs(&table.ground_levels, &table.excited_levels)?;
            let pops = ground_populations(&table, ens);
            let mw = table
                .microwave_by_levels(ManifoldTag::Excited, 1, 2)
                .unwrap();
            let c1 = table.optical_by_levels(1, 1).unwrap();
            let c2 = table.optical_by_levels(2, 1).unwrap();
            let contributions = [
                (products.product_1, pops[0], table.offset_ghz(c1)),
                (products.product_2, pops[1], table.offset_ghz(c2)),
            ];
            let row: Vec<C64> = microwave_ghz
                .iter()
                .map(|&f| {
                    let mut cell = C64::new(0.0, 0.0);
                    for (product, pop, pump_offset) in contributions {
                        let d_spin = f - mw.freq_ghz;
                        let w = correlated_weight(
                            &line_o,
                            &line_s,
                            ens.correlation_slope,
                            delta_optical_fixed_ghz - pump_offset,
                            d_spin,
                        );
                        cell += product * C64::new(pop * mw.dipole_ghz_per_t * w, 0.0);
                    }
                    cell
                })
                .collect();
            Ok(row)
        })
        .collect::<Result<_>>()?;

    Ok(ResonanceMap {
        row: MapAxis {
            name: "B_mT".into(),
            values: fields_mt.to_vec(),
        },
        col: MapAxis {
            name: "microwave_GHz".into(),
            values: microwave_ghz.to_vec(),
        },
        values: rows.into_iter().flatten().collect(),
        field_mt: f64::NAN,
    })
}

/// Phase of one field row of an interference map, versus microwave frequency.
pub fn phase_trace(map: &ResonanceMap, row_index: usize) -> (Vec<f64>, Vec<f64>) {
    let phases = map
        .col
        .values
        .iter()
        .enumerate()
        .map(|(j, _)| map.at(row_index, j).arg())
        .collect();
    (map.col.values.clone(), phases)
}
