//! Thermal photon/temperature conversions and the superheterodyne receiver
//! noise model.
//!
//! The forward map takes a mode temperature to the receiver-referred noise
//! power change ΔP (dB) relative to the unpumped baseline; the numerical
//! inverse recovers the mode temperature from a measured ΔP. The cavity
//! reflection coefficient seen by the LNA is Γc = T_mode/T₀ − 1, real-valued,
//! but it meets the complex optimum-source coefficient Γ_opt inside the noise
//! expression, so the moduli are evaluated in complex arithmetic.

use num_complex::Complex64;
use thiserror::Error;

use crate::constants::PhysicalConstants;
use crate::signal::Trace;

/// Receiver chain constants for the noise power expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseChainParams {
    /// Linear power gain of the first LNA.
    pub g_lna: f64,
    /// LNA minimum noise temperature (K).
    pub t_min: f64,
    /// LNA noise resistance (Ω).
    pub r_n: f64,
    /// Optimum source reflection coefficient.
    pub gamma_opt: Complex64,
    /// Image noise temperature (K).
    pub t_image: f64,
    /// Noise temperature of the rest of the receiver (K).
    pub t_rec: f64,
    /// Normalization impedance (Ω).
    pub z0: f64,
    /// Ambient temperature (K).
    pub t0: f64,
    /// Mode temperature of the unpumped baseline (K).
    pub t_mode_initial: f64,
    /// Cavity reflection coefficient of the baseline (0 when critically
    /// coupled).
    pub gamma_c_initial: Complex64,
}

impl Default for NoiseChainParams {
    fn default() -> Self {
        Self {
            g_lna: 32.5,
            t_min: 17.4,
            r_n: 1.1,
            gamma_opt: Complex64::new(-0.131, 0.189),
            t_image: 25.5,
            t_rec: 43.0,
            z0: 50.0,
            t0: 290.0,
            t_mode_initial: 290.0,
            gamma_c_initial: Complex64::new(0.0, 0.0),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum NoiseError {
    #[error("delta_p {value} dB outside the attainable interval [{min}, {max}] dB")]
    OutOfRange { value: f64, min: f64, max: f64 },
    #[error("trace sample {index} ({value} dB) below the attainable floor {floor} dB")]
    SampleBelowFloor {
        index: usize,
        value: f64,
        floor: f64,
    },
}

/// Thermal photon occupation of a mode at frequency `f` and temperature `t`:
/// `q = 1/(exp(h·f/(k_B·T)) − 1)`, extended continuously to 0 at T = 0.
pub fn photons_from_temperature(t: f64, f: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let c = PhysicalConstants::codata();
    1.0 / f64::exp_m1(c.h * f / (c.k_b * t))
}

/// Exact inverse of [`photons_from_temperature`]:
/// `T = h·f/(k_B·ln(1 + 1/q))`, extended to 0 at q = 0.
pub fn temperature_from_photons(q: f64, f: f64) -> f64 {
    if q == 0.0 {
        return 0.0;
    }
    let c = PhysicalConstants::codata();
    c.h * f / (c.k_b * f64::ln_1p(1.0 / q))
}

/// Cavity reflection coefficient seen by the amplifier: Γc = T_mode/T₀ − 1.
pub fn cavity_reflection(t_mode: f64, t0: f64) -> f64 {
    t_mode / t0 - 1.0
}

/// Receiver-referred noise (arbitrary linear units) for a given mode
/// temperature and cavity reflection coefficient.
fn receiver_noise(t_mode: f64, gamma_c: Complex64, p: &NoiseChainParams) -> f64 {
    let one = Complex64::new(1.0, 0.0);
    let matched = (p.t_min + t_mode) * (1.0 - gamma_c.norm_sqr());
    let mismatch = 4.0 * p.t0 * p.r_n * (gamma_c - p.gamma_opt).norm_sqr()
        / (p.z0 * (one + p.gamma_opt).norm_sqr());
    p.g_lna * (matched + mismatch + p.t_image) + p.t_rec
}

/// Noise power change ΔP (dB) of the receiver output when the mode sits at
/// `t_mode`, relative to the unpumped baseline.
pub fn noise_power_reduction(t_mode: f64, p: &NoiseChainParams) -> f64 {
    let gamma_c = Complex64::new(cavity_reflection(t_mode, p.t0), 0.0);
    let current = receiver_noise(t_mode, gamma_c, p);
    let baseline = receiver_noise(p.t_mode_initial, p.gamma_c_initial, p);
    10.0 * (current / baseline).log10()
}

/// Numerical inverse of [`noise_power_reduction`] on `[0, T₀]` by bisection,
/// converged to well below 1 µK.
///
/// The attainable interval is `[ΔP(0), 0]`. The forward map dips slightly
/// below ΔP(0) for mode temperatures under ~6 K (the mismatch term grows
/// faster than the matched term shrinks), so targets inside the declared
/// interval have exactly one preimage; see the monotonicity tests.
pub fn invert_noise_power_reduction(delta_p: f64, p: &NoiseChainParams) -> Result<f64, NoiseError> {
    let floor = noise_power_reduction(0.0, p);
    if !(delta_p >= floor && delta_p <= 0.0) {
        return Err(NoiseError::OutOfRange {
            value: delta_p,
            min: floor,
            max: 0.0,
        });
    }
    let mut lo = 0.0;
    let mut hi = p.t0;
    // g(lo) <= 0 <= g(hi) with g(t) = dP(t) - delta_p
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if noise_power_reduction(mid, p) < delta_p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-9 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Pointwise inversion of a ΔP trace to a mode-temperature trace.
///
/// Samples marginally above 0 dB (baseline measurement noise) are clamped to
/// 0 dB; the clamp count is returned alongside the converted trace. Samples
/// below the attainable floor are an error.
pub fn apply_inversion_to_trace(
    trace: &Trace,
    p: &NoiseChainParams,
) -> Result<(Trace, usize), NoiseError> {
    let floor = noise_power_reduction(0.0, p);
    let mut clamped = 0;
    let mut values = Vec::with_capacity(trace.values.len());
    for (index, &v) in trace.values.iter().enumerate() {
        let dp = if v > 0.0 {
            clamped += 1;
            0.0
        } else {
            v
        };
        if dp < floor {
            return Err(NoiseError::SampleBelowFloor {
                index,
                value: v,
                floor,
            });
        }
        values.push(invert_noise_power_reduction(dp, p)?);
    }
    Ok((
        Trace {
            t0: trace.t0,
            dt: trace.dt,
            values,
            label: "t_mode_K".to_string(),
        },
        clamped,
    ))
}
