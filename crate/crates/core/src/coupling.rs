//! Spin–photon coupling coefficients.
//!
//! The filling factor and mode volume are magnetic-energy-weighted integrals
//! over the cavity field; an external field solver exports `|H|²` samples and
//! this module reduces them. The Einstein B coefficient then sets the
//! stimulated transition rate per thermal photon between the coupled pair of
//! levels.

use thiserror::Error;

use crate::constants::{units, PhysicalConstants};
use crate::model::CavityMode;

/// Inputs to the Einstein B coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    /// Gyromagnetic ratio of the transition (rad·s⁻¹·T⁻¹).
    pub gamma_gyro: f64,
    /// Inhomogeneous dephasing time T₂* (s).
    pub t2_star: f64,
    /// Normalized transition probability matrix element ⟨σ²⟩.
    pub sigma_sq: f64,
    /// Fraction of the mode's magnetic energy overlapping the excited sample.
    pub eta_fill: f64,
    /// Magnetic-energy-weighted mode volume (m³).
    pub v_mode: f64,
}

impl Default for CouplingParams {
    fn default() -> Self {
        Self {
            gamma_gyro: std::f64::consts::TAU * 28e9,
            t2_star: units::us_to_s(3.0),
            sigma_sq: 0.5,
            eta_fill: 0.018,
            v_mode: units::cm3_to_m3(0.084),
        }
    }
}

/// One exported field sample: |H|² value, the volume of its cell, and whether
/// the cell lies inside the optically excited sample volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldCell {
    /// |H|² sample (A²·m⁻²).
    pub h2: f64,
    /// Cell volume (m³).
    pub volume: f64,
    /// True if the cell is inside the excited sample region.
    pub in_excited_sample: bool,
}

/// Flat list of field samples; any mesh exporter can produce one.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMap {
    pub cells: Vec<FieldCell>,
}

#[derive(Debug, Error, PartialEq)]
pub enum CouplingError {
    #[error("field map must contain at least one cell")]
    EmptyFieldMap,
    #[error("field map cell {index}: {message}")]
    InvalidCell { index: usize, message: String },
    #[error("degenerate field: {0}")]
    DegenerateField(String),
    #[error("field map table line {line}: {message}")]
    TableParse { line: usize, message: String },
}

impl FieldMap {
    pub fn new(cells: Vec<FieldCell>) -> Result<Self, CouplingError> {
        if cells.is_empty() {
            return Err(CouplingError::EmptyFieldMap);
        }
        for (index, c) in cells.iter().enumerate() {
            if !(c.h2.is_finite() && c.h2 >= 0.0) {
                return Err(CouplingError::InvalidCell {
                    index,
                    message: format!("|H|^2 must be finite and >= 0 (got {})", c.h2),
                });
            }
            if !(c.volume.is_finite() && c.volume > 0.0) {
                return Err(CouplingError::InvalidCell {
                    index,
                    message: format!("cell volume must be positive (got {})", c.volume),
                });
            }
        }
        Ok(Self { cells })
    }

    /// Parses the three-column text form `h2_value cell_volume_m3 excited_flag`
    /// with `#` comments and blank lines skipped. The flag is 0 or 1.
    pub fn parse(text: &str) -> Result<Self, CouplingError> {
        let mut cells = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(CouplingError::TableParse {
                    line: idx + 1,
                    message: format!("expected 3 columns, found {}", toks.len()),
                });
            }
            let parse_f = |tok: &str, what: &str| -> Result<f64, CouplingError> {
                tok.parse::<f64>().map_err(|e| CouplingError::TableParse {
                    line: idx + 1,
                    message: format!("bad {what}: {e}"),
                })
            };
            let h2 = parse_f(toks[0], "h2_value")?;
            let volume = parse_f(toks[1], "cell_volume_m3")?;
            let in_excited_sample = match toks[2] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(CouplingError::TableParse {
                        line: idx + 1,
                        message: format!("excited_flag must be 0 or 1 (got {other})"),
                    })
                }
            };
            cells.push(FieldCell {
                h2,
                volume,
                in_excited_sample,
            });
        }
        Self::new(cells)
    }
}

/// Compensated (Neumaier) sum: deterministic and robust to cancellation, so
/// cell order does not visibly change the reductions.
fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut compensation = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}

/// Filling factor: magnetic energy inside the excited sample over total
/// magnetic energy of the mode. Always in `[0, 1]`.
pub fn filling_factor(map: &FieldMap) -> Result<f64, CouplingError> {
    let total = neumaier_sum(map.cells.iter().map(|c| c.h2 * c.volume));
    if total <= 0.0 {
        return Err(CouplingError::DegenerateField(
            "total |H|^2 integral is zero".to_string(),
        ));
    }
    let excited = neumaier_sum(
        map.cells
            .iter()
            .filter(|c| c.in_excited_sample)
            .map(|c| c.h2 * c.volume),
    );
    Ok((excited / total).clamp(0.0, 1.0))
}

/// Mode volume: total magnetic energy over the peak energy density.
pub fn mode_volume(map: &FieldMap) -> Result<f64, CouplingError> {
    let peak = map.cells.iter().map(|c| c.h2).fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(CouplingError::DegenerateField(
            "peak |H|^2 is zero".to_string(),
        ));
    }
    let total = neumaier_sum(map.cells.iter().map(|c| c.h2 * c.volume));
    Ok(total / peak)
}

/// Einstein B coefficient for the coupled transition: the stimulated rate per
/// thermal photon, `B = μ₀·γ²·h·f·T₂*·⟨σ²⟩·η_fill / (2·V_mode)` (s⁻¹/photon).
pub fn einstein_b(cp: &CouplingParams, mode: &CavityMode, constants: &PhysicalConstants) -> f64 {
    constants.mu_0
        * cp.gamma_gyro
        * cp.gamma_gyro
        * constants.h
        * mode.f_mode
        * cp.t2_star
        * cp.sigma_sq
        * cp.eta_fill
        / (2.0 * cp.v_mode)
}

/// Stimulated transition rate W₀₂ = B·q (s⁻¹) for `q` thermal photons.
pub fn stimulated_rate(b: f64, q: f64) -> f64 {
    b * q
}
