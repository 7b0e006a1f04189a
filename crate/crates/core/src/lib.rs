//! Sensing SNR models for radar with very large uniform linear arrays.
//!
//! When an array's aperture is comparable to the target range, the usual
//! plane-wave approximation breaks down: each element sees the target at a
//! noticeably different distance, so both phase and amplitude vary across the
//! array. This crate models that regime end to end:
//!
//! * [`geometry`]: exact per-element distances and scenario validation;
//! * [`response`]: steering vectors with amplitude decay and closed-form norms;
//! * [`snr_laws`]: closed-form SNR laws for MIMO and phased operation under
//!   both the spherical-wavefront and plane-wave models;
//! * [`oracle`]: brute-force element-sum references, power allocations, and
//!   beamforming mismatch scans;
//! * [`simkit`]: Monte Carlo simulation of the full waveform / matched-filter
//!   / beamforming chain;
//! * [`sweep`]: parameter sweeps, figure presets, CSV emission, and the sweep
//!   config format used by the CLI.
//!
//! The closed forms are approximations; the oracle and simulation modules
//! exist to quantify exactly how good they are, and the crate's tests hold
//! them to the documented tolerances.

pub mod error;
pub mod geometry;
pub mod numeric;
pub mod oracle;
pub mod response;
pub mod simkit;
pub mod snr_laws;
pub mod sweep;

pub use error::Error;
