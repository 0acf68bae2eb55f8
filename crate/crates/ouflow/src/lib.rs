//! # ouflow
//!
//! A pseudo-spectral laboratory for the 2D Navier-Stokes vorticity equation
//! on the unit torus, stirred by an Ornstein-Uhlenbeck transport flow, and
//! co-evolved against the deterministic limit equation that carries the extra
//! viscosity the stirring generates.
//!
//! The crate is organized around five layers:
//!
//! * [`spectral`] — truncated Fourier fields on `T^2`, derivatives,
//!   Biot-Savart inversion, homogeneous Sobolev norms, dealiased transport
//!   terms, and a brute-force convolution oracle;
//! * [`noise`] — radial coefficient families `theta`, exact-in-law
//!   Ornstein-Uhlenbeck ensembles, assembly of the real divergence-free
//!   stirring field `b`, and the statistics/identities the field must satisfy;
//! * [`dynamics`] — integrating-factor time steppers for the stochastic
//!   equation and for its enhanced-viscosity limit, coupled and restarted run
//!   drivers;
//! * [`diagnostics`] — decay-rate fits, negative-Sobolev mixing statistics,
//!   time-increment statistics, Monte Carlo aggregation;
//! * [`experiments`] — named presets binding the above into reproducible,
//!   report-emitting studies, also exposed through the `ouflow` binary.
//!
//! Runnable walkthroughs live in `examples/`; start with
//! `cargo run --release --example ou_covariance`.

pub mod config;
pub mod diagnostics;
pub mod dynamics;
pub mod experiments;
pub mod noise;
pub mod report;
pub mod spectral;

pub use config::ConfigFile;
pub use diagnostics::{fit_decay, increment_statistic, mixing_statistic, DecayFit, MCEstimate};
pub use dynamics::{
    initial_bar_state, initial_single_mode, initial_twelve_mode, run_coupled, run_restarted,
    Integrator, PathState, RecordOptions, RunRecord, Scheme, SimConfig,
};
pub use noise::{
    assemble_b, isotropy_identity_check, make_theta, theta_stats, NoiseStats, OuEnsemble,
    ThetaFamily, ThetaSpec,
};
pub use spectral::{
    advect, convolution_oracle, AdvectionWorkspace, SobolevWeights, SpectralError, SpectralField,
    VelocityField, Wavevector,
};
