//! Simulator and analysis toolkit for microwave mode cooling by optically
//! hyperpolarized NV⁻ centers in diamond.
//!
//! The crate integrates the seven-level spin + cavity-photon rate equations of
//! the NV⁻ system under optical pumping, computes the physical coupling
//! coefficients from first principles (Fresnel/Beer–Lambert photophysics,
//! filling factor, mode volume, Einstein B coefficient), and maps mode
//! temperatures through a superheterodyne receiver noise model in both
//! directions.
//!
//! Layout:
//! - [`constants`] / [`model`] — physical constants, domain types, validation
//! - [`photophysics`] — absorption analysis and the optical pumping rate ξ(t)
//! - [`coupling`] — spin–photon coupling coefficients
//! - [`integrator`] — stiff-capable adaptive Rosenbrock IVP solver
//! - [`dynamics`] — assembly and integration of the rate equations
//! - [`noise`] — photon/temperature conversions and the receiver noise model
//! - [`signal`] — trace post-processing (median filter, dB, decay fits)
//! - [`config`] / [`scenario`] — scenario configs, CSV/manifest output
//! - [`acceptance`] — the end-to-end acceptance harness

pub mod acceptance;
pub mod config;
pub mod constants;
pub mod coupling;
pub mod dynamics;
pub mod integrator;
pub mod model;
pub mod noise;
pub mod photophysics;
pub mod scenario;
pub mod signal;

pub use constants::PhysicalConstants;
pub use coupling::CouplingParams;
pub use dynamics::{simulate, SimulationResult};
pub use model::{
    validate_setup, CavityMode, ModelParameters, RateConstants, SimulationSetup, SpinPhotonState,
};
pub use noise::NoiseChainParams;
pub use photophysics::{PowerProfile, PumpConfig};
pub use signal::Trace;
