//! Physical constants and unit conversions.
//!
//! Everything downstream works in strict SI (Hz, s, K, m, J). Quantities that
//! are conventionally quoted in mixed units (cm³, µs, nm, cm⁻¹) are converted
//! once, at construction, through the helpers in [`units`].

/// Fundamental constants (CODATA, SI-2019 exact values where defined).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Planck constant (J·s).
    pub h: f64,
    /// Boltzmann constant (J/K).
    pub k_b: f64,
    /// Speed of light in vacuum (m/s).
    pub c: f64,
    /// Vacuum permeability (H/m).
    pub mu_0: f64,
}

impl PhysicalConstants {
    /// The fixed CODATA values. `h`, `k_b` and `c` are exact by the SI-2019
    /// definition; `mu_0` is the CODATA-2018 measured value.
    pub const fn codata() -> Self {
        Self {
            h: 6.626_070_15e-34,
            k_b: 1.380_649e-23,
            c: 2.997_924_58e8,
            mu_0: 1.256_637_062_12e-6,
        }
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::codata()
    }
}

/// Conversions between SI and the mixed units used in data sheets.
pub mod units {
    /// cm³ → m³.
    pub fn cm3_to_m3(v: f64) -> f64 {
        v * 1e-6
    }

    /// m³ → cm³.
    pub fn m3_to_cm3(v: f64) -> f64 {
        v * 1e6
    }

    /// cm⁻¹ → m⁻¹ (absorption coefficients).
    pub fn per_cm_to_per_m(v: f64) -> f64 {
        v * 1e2
    }

    /// m⁻¹ → cm⁻¹.
    pub fn per_m_to_per_cm(v: f64) -> f64 {
        v * 1e-2
    }

    /// cm² → m² (cross-sections).
    pub fn cm2_to_m2(v: f64) -> f64 {
        v * 1e-4
    }

    /// m² → cm².
    pub fn m2_to_cm2(v: f64) -> f64 {
        v * 1e4
    }

    /// µs → s.
    pub fn us_to_s(v: f64) -> f64 {
        v * 1e-6
    }

    /// s → µs.
    pub fn s_to_us(v: f64) -> f64 {
        v * 1e6
    }

    /// nm → m.
    pub fn nm_to_m(v: f64) -> f64 {
        v * 1e-9
    }

    /// m → nm.
    pub fn m_to_nm(v: f64) -> f64 {
        v * 1e9
    }
}

#[cfg(test)]
mod tests {
    use super::units::*;
    use super::*;

    #[test]
    fn codata_values() {
        let c = PhysicalConstants::codata();
        assert_eq!(c.h, 6.62607015e-34);
        assert_eq!(c.k_b, 1.380649e-23);
        assert_eq!(c.c, 2.99792458e8);
        assert!((c.mu_0 - 4.0e-7 * std::f64::consts::PI).abs() / c.mu_0 < 1e-9);
    }

    #[test]
    fn unit_round_trips() {
        for v in [1.0, 0.084, 2.3e3, 3.0, 532.0] {
            assert!((m3_to_cm3(cm3_to_m3(v)) - v).abs() <= f64::EPSILON * v);
            assert!((per_m_to_per_cm(per_cm_to_per_m(v)) - v).abs() <= f64::EPSILON * v);
            assert!((m2_to_cm2(cm2_to_m2(v)) - v).abs() <= f64::EPSILON * v);
            assert!((s_to_us(us_to_s(v)) - v).abs() <= f64::EPSILON * v);
            assert!((m_to_nm(nm_to_m(v)) - v).abs() <= f64::EPSILON * v);
        }
    }

    #[test]
    fn table_values_convert_to_si() {
        assert!((cm3_to_m3(0.084) - 8.4e-8).abs() < 1e-22);
        assert!((us_to_s(3.0) - 3e-6).abs() < 1e-20);
        assert!((per_cm_to_per_m(24.0) - 2.4e3).abs() < 1e-10);
        assert!((cm2_to_m2(4e-17) - 4e-21).abs() < 1e-34);
    }
}
