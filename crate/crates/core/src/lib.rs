//! Wideband terahertz sensing with controllable beam squint.
//!
//! A phase-shifter plus true-time-delay array spreads its subcarrier beams
//! across an angular sector, so one OFDM probe lights up every direction at
//! once. The echo power spectrum then maps subcarriers to target angles, and
//! the phases of the subcarriers around each peak encode target range.
//!
//! The crate is organized bottom-up:
//!
//! - [`scene`]: array geometry, band plans, targets and sweep plans.
//! - [`channel`]: far-field echo channel matrices plus an exact near-field oracle.
//! - [`beamformer`]: PS/TTD weight design and the subcarrier-to-angle squint map.
//! - [`echo`]: received echo spectra (closed form and quadratic form) and noise.
//! - [`estimator`]: peak detection, YOLO and MYOLO angle/range estimation.
//! - [`baseline`]: the conventional narrowband time-division beam sweep.
//! - [`ambiguity`]: unambiguous distance and multi-group range resolution.
//! - [`pipeline`]: end-to-end localization over all ambiguity groups.
//! - [`harness`]: Monte-Carlo RMSE experiments.
//! - [`config`] and [`io`]: the TOML scene schema and delimited text files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ambiguity;
pub mod baseline;
pub mod beamformer;
pub mod channel;
pub mod config;
pub mod echo;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod io;
pub mod pipeline;
pub mod scene;
pub mod search;

pub use num_complex::Complex64;

pub use ambiguity::{AmbiguitySolution, GroupResolution};
pub use beamformer::{SquintDesign, SquintMap};
pub use echo::{EchoSpectrum, NoiseModel, SnrReference};
pub use error::{Error, Result};
pub use estimator::{Localization, Peak, PeakSet, RangeEstimate, Track, TrackSet};
pub use harness::{ExperimentSpec, RmseReport};
pub use pipeline::{Acquisition, Estimator, LocatorSettings, Resolution, TargetEstimate};
pub use scene::{AmbiguityPlan, ArrayConfig, BandPlan, MyoloPlan, SweepPlan, Target};

/// Propagation speed used throughout, in m/s.
///
/// The exact value 3e8 reproduces the reported unambiguous distances
/// (153.6 m for W = 4 GHz, M = 4096) to machine precision.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;
