//! Channel emulation engine for wireless digital twins.
//!
//! The pipeline turns site-specific multipath into something a radio stack
//! can run against in real time:
//!
//! 1. [`propagation`] traces line-of-sight and specular reflection paths for
//!    each position of a mobility trace, giving one [`DelayProfile`] per
//!    snapshot.
//! 2. [`cir`] band-limits each profile into a discrete tap vector at the
//!    radio's sampling rate and selects the strongest taps.
//! 3. [`emulator`] convolves streaming IQ slots with the active snapshot,
//!    applying signal gain and additive noise.
//! 4. [`kpi`] evaluates peak and effective NR throughput and the OFDM
//!    feasibility chain for the same configuration.
//!
//! Independent per-snapshot and per-chunk work runs on rayon when the
//! `parallel` feature is enabled (the default); see [`Execution`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cir;
pub mod emulator;
pub mod error;
pub mod geometry;
pub mod io;
pub mod kpi;
pub mod materials;
pub mod noise;
pub mod par;
pub mod propagation;
pub mod scenario;

pub use cir::{discretize, path_gain_total, sort_truncate, CirConfig, DiscreteCir, SortedCir};
pub use emulator::{
    calibrate_signal_gain, Emulator, EmulatorConfig, HistoryMode, IqSlot, RunSummary, SlotFormat,
};
pub use error::{Error, Result};
pub use geometry::Vec3;
pub use materials::{complex_permittivity, evaluate_material, EmProperties, MaterialSpec};
pub use par::Execution;
pub use propagation::{
    reflection_coefficient, trace_snapshot, trace_timeline, DelayProfile, Facet, MobilityTrace,
    Polarization, Scene,
};
pub use scenario::{build_scenario, build_timeline, report, CirTimeline, ReportRow};
