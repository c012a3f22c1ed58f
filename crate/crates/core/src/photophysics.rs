//! Optical absorption analysis and the optical pumping rate ξ(t).
//!
//! Covers the Fresnel-corrected Beer–Lambert relation between measured
//! absorbance and the absorption coefficient α, the concentration estimate
//! α/σ, and the pumping parameter
//!
//! ```text
//! ξ = [λ·σ / (h·c·A·l·α)] · (1 − exp(−l·α)) · (1 − R) · P
//! ```
//!
//! which is the per-center optical excitation rate for instantaneous pump
//! power `P`. All functions are pure and thread-safe.

use thiserror::Error;

use crate::constants::PhysicalConstants;

/// Optical properties of the absorbing sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalSample {
    /// Absorbance path length L (m).
    pub path_length_l: f64,
    /// Refractive index of the sample.
    pub n_sample: f64,
    /// Refractive index of the surrounding medium.
    pub n_ambient: f64,
    /// Absorption coefficient at the pump wavelength (m⁻¹).
    pub alpha_pump: f64,
}

impl Default for OpticalSample {
    fn default() -> Self {
        Self {
            path_length_l: 0.0015,
            n_sample: 2.42,
            n_ambient: 1.0,
            alpha_pump: 2.3e3,
        }
    }
}

/// One constant-power interval of the pump laser; power is in watts and the
/// interval is `[start, end)` in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSegment {
    pub start: f64,
    pub end: f64,
    pub power: f64,
}

/// Piecewise-constant laser power profile P(t). Zero outside all segments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PowerProfile {
    /// Non-overlapping, time-ordered segments.
    pub segments: Vec<PowerSegment>,
}

impl PowerProfile {
    /// Profile that is identically zero.
    pub fn off() -> Self {
        Self::default()
    }

    /// Single square pulse of the given width and power starting at `start`.
    pub fn square_pulse(start: f64, width: f64, power: f64) -> Self {
        Self {
            segments: vec![PowerSegment {
                start,
                end: start + width,
                power,
            }],
        }
    }

    /// Instantaneous power at time `t`. Right-continuous: at a segment
    /// boundary the new value applies.
    pub fn power_at(&self, t: f64) -> f64 {
        for seg in &self.segments {
            if t >= seg.start && t < seg.end {
                return seg.power;
            }
        }
        0.0
    }

    /// All segment boundaries, for drivers that split integration at
    /// discontinuities.
    pub fn edges(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self
            .segments
            .iter()
            .flat_map(|s| [s.start, s.end])
            .collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e.dedup();
        e
    }
}

/// Laser and sample parameters defining the pumping rate ξ(t).
#[derive(Debug, Clone, PartialEq)]
pub struct PumpConfig {
    /// Pump wavelength λ (m).
    pub wavelength: f64,
    /// Absorption cross-section at the pump wavelength (m²).
    pub cross_section: f64,
    /// Cross-sectional area of the beam at the sample (m²).
    pub beam_area: f64,
    /// Crystal thickness traversed by the beam (m).
    pub path_length_l: f64,
    pub sample: OpticalSample,
    pub profile: PowerProfile,
}

impl Default for PumpConfig {
    fn default() -> Self {
        Self {
            wavelength: 532e-9,
            cross_section: 3.1e-21,
            beam_area: 1.76e-6,
            path_length_l: 0.0015,
            sample: OpticalSample::default(),
            profile: PowerProfile::off(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PhotophysicsError {
    #[error("refractive index must be >= 1 (got {0})")]
    RefractiveIndexBelowUnity(f64),
    #[error("path length must be positive (got {0})")]
    NonPositivePathLength(f64),
    #[error("reflectance must be in [0, 1) (got {0})")]
    InvalidReflectance(f64),
    #[error("absorbance {absorbance} is below the pure-reflection floor {floor}; implied alpha would be negative")]
    AbsorbanceBelowReflectionFloor { absorbance: f64, floor: f64 },
    #[error("absorption cross-section must be positive (got {0})")]
    NonPositiveCrossSection(f64),
    #[error("absorption coefficient must be >= 0 (got {0})")]
    NegativeAlpha(f64),
    #[error("pump power must be >= 0 (got {0})")]
    NegativePower(f64),
    #[error("spectrum table line {line}: {message}")]
    SpectrumParse { line: usize, message: String },
}

/// Normal-incidence Fresnel power reflectance between two media.
///
/// Symmetric in its arguments and always in `[0, 1)` for valid indices.
pub fn fresnel_reflectance(n1: f64, n2: f64) -> Result<f64, PhotophysicsError> {
    if !(n1.is_finite() && n1 >= 1.0) {
        return Err(PhotophysicsError::RefractiveIndexBelowUnity(n1));
    }
    if !(n2.is_finite() && n2 >= 1.0) {
        return Err(PhotophysicsError::RefractiveIndexBelowUnity(n2));
    }
    let r = (n1 - n2) / (n1 + n2);
    Ok(r * r)
}

/// Inverts the reflection-corrected Beer–Lambert law
/// `10^(−A) = (1−R)²·exp(−αL)` for the absorption coefficient α (m⁻¹).
pub fn absorbance_to_alpha(
    absorbance: f64,
    path_length: f64,
    reflectance: f64,
) -> Result<f64, PhotophysicsError> {
    if !(path_length.is_finite() && path_length > 0.0) {
        return Err(PhotophysicsError::NonPositivePathLength(path_length));
    }
    if !(reflectance.is_finite() && (0.0..1.0).contains(&reflectance)) {
        return Err(PhotophysicsError::InvalidReflectance(reflectance));
    }
    let attenuation = absorbance * std::f64::consts::LN_10;
    let reflection_loss = 2.0 * (1.0 - reflectance).ln();
    let alpha = (attenuation + reflection_loss) / path_length;
    if alpha < 0.0 {
        // rounding noise of the cancellation, not a genuine negative
        let noise = 1e-12 * (attenuation.abs() + reflection_loss.abs()) / path_length;
        if alpha >= -noise {
            return Ok(0.0);
        }
        let floor = -2.0 * (1.0 - reflectance).log10();
        return Err(PhotophysicsError::AbsorbanceBelowReflectionFloor { absorbance, floor });
    }
    Ok(alpha)
}

/// Number density of absorbers (m⁻³) from the absorption coefficient and the
/// per-center cross-section: α/σ.
pub fn concentration_from_alpha(alpha: f64, sigma: f64) -> Result<f64, PhotophysicsError> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(PhotophysicsError::NonPositiveCrossSection(sigma));
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(PhotophysicsError::NegativeAlpha(alpha));
    }
    Ok(alpha / sigma)
}

/// Pumping rate per watt of instantaneous laser power (s⁻¹/W).
///
/// `pump_parameter` is exactly this value times P, so callers integrating a
/// piecewise-constant profile can cache it.
pub fn pump_rate_per_watt(
    cfg: &PumpConfig,
    constants: &PhysicalConstants,
) -> Result<f64, PhotophysicsError> {
    let r = fresnel_reflectance(cfg.sample.n_ambient, cfg.sample.n_sample)?;
    let u = cfg.path_length_l * cfg.sample.alpha_pump;
    // (1 - exp(-u))/u -> 1 as u -> 0; series keeps the alpha -> 0 sweep finite.
    let depth_average = if u < 1e-6 {
        1.0 - u / 2.0 + u * u / 6.0
    } else {
        -f64::exp_m1(-u) / u
    };
    let prefactor =
        cfg.wavelength * cfg.cross_section / (constants.h * constants.c * cfg.beam_area);
    Ok(prefactor * depth_average * (1.0 - r))
}

/// Optical pumping rate ξ (s⁻¹) for instantaneous pump power `power` (W).
///
/// Linear in power; the α → 0 limit is handled analytically.
pub fn pump_parameter(
    power: f64,
    cfg: &PumpConfig,
    constants: &PhysicalConstants,
) -> Result<f64, PhotophysicsError> {
    if !(power.is_finite() && power >= 0.0) {
        return Err(PhotophysicsError::NegativePower(power));
    }
    Ok(pump_rate_per_watt(cfg, constants)? * power)
}

/// Batch-converts a two-column text table `(wavelength_nm, absorbance)` into
/// `(wavelength_nm, alpha_per_m)` pairs using the sample's path length and
/// Fresnel reflectance. Lines starting with `#` and blank lines are skipped.
pub fn convert_absorbance_table(
    text: &str,
    sample: &OpticalSample,
) -> Result<Vec<(f64, f64)>, PhotophysicsError> {
    let r = fresnel_reflectance(sample.n_ambient, sample.n_sample)?;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split_whitespace();
        let parse = |tok: Option<&str>, what: &str| -> Result<f64, PhotophysicsError> {
            tok.ok_or_else(|| PhotophysicsError::SpectrumParse {
                line: idx + 1,
                message: format!("missing {what} column"),
            })?
            .parse::<f64>()
            .map_err(|e| PhotophysicsError::SpectrumParse {
                line: idx + 1,
                message: format!("bad {what}: {e}"),
            })
        };
        let wavelength = parse(cols.next(), "wavelength")?;
        let absorbance = parse(cols.next(), "absorbance")?;
        if cols.next().is_some() {
            return Err(PhotophysicsError::SpectrumParse {
                line: idx + 1,
                message: "expected exactly two columns".to_string(),
            });
        }
        let alpha = absorbance_to_alpha(absorbance, sample.path_length_l, r)?;
        out.push((wavelength, alpha));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const CONSTS: PhysicalConstants = PhysicalConstants::codata();

    /// Forward Beer-Lambert: absorbance from alpha. Oracle for the inversion.
    fn forward_absorbance(alpha: f64, l: f64, r: f64) -> f64 {
        -((1.0 - r) * (1.0 - r) * (-alpha * l).exp()).log10()
    }

    #[test]
    fn fresnel_matched_media_is_zero() {
        assert_eq!(fresnel_reflectance(1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn fresnel_air_diamond() {
        // ((1 - 2.42)/(1 + 2.42))^2 evaluated independently
        let expected = (1.42f64 / 3.42).powi(2);
        let r = fresnel_reflectance(1.0, 2.42).unwrap();
        assert_eq!(r, expected);
        assert_relative_eq!(r, 0.1723949249341677, max_relative = 1e-12);
    }

    #[test]
    fn fresnel_rejects_sub_unity_index() {
        assert!(fresnel_reflectance(0.5, 1.0).is_err());
        assert!(fresnel_reflectance(1.0, f64::NAN).is_err());
    }

    #[test]
    fn alpha_at_reflection_floor_is_zero() {
        let r: f64 = 0.17239492493416766;
        let floor = -2.0 * (1.0 - r).log10();
        let alpha = absorbance_to_alpha(floor, 0.0015, r).unwrap();
        assert!(alpha.abs() < 1e-9, "alpha = {alpha}");
    }

    #[test]
    fn pure_beer_lambert_unit_absorbance() {
        let alpha = absorbance_to_alpha(1.0, 1.0, 0.0).unwrap();
        assert_relative_eq!(alpha, std::f64::consts::LN_10, max_relative = 1e-15);
    }

    #[test]
    fn absorbance_round_trip_at_paper_values() {
        let r = fresnel_reflectance(1.0, 2.42).unwrap();
        let a = forward_absorbance(2.3e3, 0.0015, r);
        let alpha = absorbance_to_alpha(a, 0.0015, r).unwrap();
        assert_relative_eq!(alpha, 2.3e3, max_relative = 1e-9);
    }

    #[test]
    fn below_floor_reports_the_floor() {
        let err = absorbance_to_alpha(0.0, 0.0015, 0.1723949249341677).unwrap_err();
        match err {
            PhotophysicsError::AbsorbanceBelowReflectionFloor { floor, .. } => {
                assert_relative_eq!(
                    floor,
                    -2.0 * (1.0f64 - 0.1723949249341677).log10(),
                    max_relative = 1e-12
                );
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn concentration_matches_quoted_estimate() {
        // 24 cm^-1 / 4e-17 cm^2 = 6e17 cm^-3, all in SI here
        let n = concentration_from_alpha(2.4e3, 4e-21).unwrap();
        assert_relative_eq!(n, 6e23, max_relative = 1e-12);
        assert_eq!(concentration_from_alpha(0.0, 4e-21).unwrap(), 0.0);
        let doubled = concentration_from_alpha(4.8e3, 4e-21).unwrap();
        assert_relative_eq!(doubled, 2.0 * n, max_relative = 1e-15);
        assert!(concentration_from_alpha(1.0, 0.0).is_err());
    }

    #[test]
    fn pump_parameter_at_two_watts() {
        let cfg = PumpConfig::default();
        // Independent arithmetic route: flux * cross-section * depth average * (1 - R)
        let r: f64 = (1.42f64 / 3.42).powi(2);
        let u: f64 = 0.0015 * 2.3e3;
        let photons_per_joule = 532e-9 / (CONSTS.h * CONSTS.c);
        let oracle =
            photons_per_joule / 1.76e-6 * 3.1e-21 * ((1.0 - (-u).exp()) / u) * (1.0 - r) * 2.0;
        let xi = pump_parameter(2.0, &cfg, &CONSTS).unwrap();
        assert_relative_eq!(xi, oracle, max_relative = 1e-12);
        assert_relative_eq!(xi, 2.1913282351754e3, max_relative = 1e-10);
        // headline value quoted to three figures
        assert_relative_eq!(xi, 2.19e3, max_relative = 1e-3);
    }

    #[test]
    fn pump_parameter_zero_power() {
        let cfg = PumpConfig::default();
        assert_eq!(pump_parameter(0.0, &cfg, &CONSTS).unwrap(), 0.0);
        assert!(pump_parameter(-1.0, &cfg, &CONSTS).is_err());
    }

    #[test]
    fn pump_parameter_linear_in_power() {
        let cfg = PumpConfig::default();
        let one = pump_parameter(1.0, &cfg, &CONSTS).unwrap();
        let two = pump_parameter(2.0, &cfg, &CONSTS).unwrap();
        assert_eq!(two, 2.0 * one);
    }

    #[test]
    fn pump_parameter_alpha_zero_limit() {
        let mut cfg = PumpConfig::default();
        cfg.sample.alpha_pump = 0.0;
        let xi0 = pump_parameter(2.0, &cfg, &CONSTS).unwrap();
        cfg.sample.alpha_pump = 1e-9;
        let xi_eps = pump_parameter(2.0, &cfg, &CONSTS).unwrap();
        assert_relative_eq!(xi0, xi_eps, max_relative = 1e-8);
        assert!(xi0 > 0.0);
    }

    #[test]
    fn power_profile_square_pulse() {
        let p = PowerProfile::square_pulse(0.0, 2e-3, 2.0);
        assert_eq!(p.power_at(1e-3), 2.0);
        assert_eq!(p.power_at(3e-3), 0.0);
        assert_eq!(p.power_at(0.0), 2.0); // right-continuous at the start edge
        assert_eq!(p.power_at(2e-3), 0.0); // and at the end edge
        assert_eq!(PowerProfile::off().power_at(0.5), 0.0);
        assert_eq!(p.edges(), vec![0.0, 2e-3]);
    }

    #[test]
    fn spectrum_table_conversion() {
        let sample = OpticalSample::default();
        let r = fresnel_reflectance(1.0, 2.42).unwrap();
        let a532 = forward_absorbance(2.3e3, sample.path_length_l, r);
        let text = format!(
            "# wavelength_nm absorbance\n\n532.0 {a532}\n638.0 {}\n",
            forward_absorbance(2.4e3, sample.path_length_l, r)
        );
        let rows = convert_absorbance_table(&text, &sample).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].0, 532.0);
        assert_relative_eq!(rows[0].1, 2.3e3, max_relative = 1e-9);
        assert_relative_eq!(rows[1].1, 2.4e3, max_relative = 1e-9);
    }

    #[test]
    fn spectrum_table_errors_carry_line_numbers() {
        let sample = OpticalSample::default();
        let err = convert_absorbance_table("# ok\n532.0 not_a_number\n", &sample).unwrap_err();
        match err {
            PhotophysicsError::SpectrumParse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let err = convert_absorbance_table("532.0\n", &sample).unwrap_err();
        assert!(matches!(
            err,
            PhotophysicsError::SpectrumParse { line: 1, .. }
        ));
    }

    proptest! {
        #[test]
        fn fresnel_symmetric_and_bounded(n1 in 1.0..5.0f64, n2 in 1.0..5.0f64) {
            let a = fresnel_reflectance(n1, n2).unwrap();
            let b = fresnel_reflectance(n2, n1).unwrap();
            prop_assert_eq!(a, b);
            prop_assert!((0.0..1.0).contains(&a));
        }

        #[test]
        fn beer_lambert_round_trip(alpha in 0.0..1e5f64, l in 1e-5..5e-3f64, r in 0.0..0.9f64) {
            // alpha * l stays below ~500 so the forward transmittance is representable
            let a = forward_absorbance(alpha, l, r);
            let back = absorbance_to_alpha(a, l, r).unwrap();
            // absolute floor covers alpha ~ 0 where relative error is meaningless
            prop_assert!((back - alpha).abs() <= 1e-9 * alpha.max(1.0));
        }

        #[test]
        fn pump_rate_monotone_in_cross_section(scale in 1.0..10.0f64) {
            let base = PumpConfig::default();
            let mut bigger = base.clone();
            bigger.cross_section *= scale;
            let lo = pump_rate_per_watt(&base, &CONSTS).unwrap();
            let hi = pump_rate_per_watt(&bigger, &CONSTS).unwrap();
            prop_assert!(hi >= lo);
            prop_assert!(lo >= 0.0);
        }
    }
}
