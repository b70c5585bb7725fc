//! Scenario assembly: scene + mobility trace -> CIR timeline -> report.

use std::path::Path;

use crate::cir::{discretize, path_gain_total, sort_truncate, CirConfig, DiscreteCir, SortedCir};
use crate::error::{Error, Result};
use crate::io::{read_scene, read_trace};
use crate::kpi::cir_rms_delay_spread;
use crate::par::Execution;
use crate::propagation::{trace_timeline, MobilityTrace, Scene};

/// PDP cells with zero power are written at this level.
pub const PDP_FLOOR_DB: f64 = -200.0;

/// Uniformly spaced CIR snapshots sharing one configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct CirTimeline {
    pub config: CirConfig,
    /// Snapshot interval in seconds.
    pub t_int: f64,
    pub snapshots: Vec<DiscreteCir>,
}

impl CirTimeline {
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if !(self.t_int > 0.0 && self.t_int.is_finite()) {
            return Err(Error::invalid(format!(
                "snapshot interval must be positive, got {}",
                self.t_int
            )));
        }
        let l_max = self.config.l_max();
        for (i, s) in self.snapshots.iter().enumerate() {
            if s.taps.len() != l_max {
                return Err(Error::invalid(format!(
                    "snapshot {i} has {} taps, expected {l_max}",
                    s.taps.len()
                )));
            }
            if s.f_samp != self.config.f_samp {
                return Err(Error::invalid(format!(
                    "snapshot {i} has a different sampling rate"
                )));
            }
            if s.snapshot_time != i as f64 * self.t_int {
                return Err(Error::invalid(format!(
                    "snapshot {i} time {} is not {i} x {}",
                    s.snapshot_time, self.t_int
                )));
            }
            if s.taps
                .iter()
                .any(|t| !(t.re.is_finite() && t.im.is_finite()))
            {
                return Err(Error::invalid(format!("snapshot {i} has non-finite taps")));
            }
        }
        Ok(())
    }

    /// Covered time span, `count x t_int`.
    pub fn duration(&self) -> f64 {
        self.snapshots.len() as f64 * self.t_int
    }

    pub fn sorted(&self, l_sel: usize) -> Result<Vec<SortedCir>> {
        self.snapshots
            .iter()
            .map(|c| sort_truncate(c, l_sel))
            .collect()
    }
}

pub fn build_timeline(
    scene: &Scene,
    trace: &MobilityTrace,
    config: &CirConfig,
    exec: Execution,
) -> Result<CirTimeline> {
    let profiles = trace_timeline(scene, trace, exec)?;
    let snapshots = exec.try_map(&profiles, |i, p| {
        discretize(p, config).map_err(|e| e.at_snapshot(i))
    })?;
    let timeline = CirTimeline {
        config: *config,
        t_int: trace.interval,
        snapshots,
    };
    timeline.validate()?;
    Ok(timeline)
}

/// Loads a scene and trace from disk and builds the timeline.
pub fn build_scenario(
    scene_path: impl AsRef<Path>,
    trace_path: impl AsRef<Path>,
    config: &CirConfig,
    exec: Execution,
) -> Result<CirTimeline> {
    let scene = read_scene(scene_path)?;
    let trace = read_trace(trace_path)?;
    build_timeline(&scene, &trace, config, exec)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub time: f64,
    pub path_gain_db: f64,
    pub strongest_tap_index: Option<usize>,
    pub rms_delay_spread: Option<f64>,
    pub retained_power_fraction: f64,
}

pub fn report(timeline: &CirTimeline, l_sel: usize, exec: Execution) -> Result<Vec<ReportRow>> {
    if timeline.snapshots.is_empty() {
        return Err(Error::invalid("cannot report on an empty timeline"));
    }
    exec.try_map(&timeline.snapshots, |_, cir| {
        Ok(ReportRow {
            time: cir.snapshot_time,
            path_gain_db: path_gain_total(cir),
            strongest_tap_index: cir.strongest_tap(),
            rms_delay_spread: cir_rms_delay_spread(cir).ok(),
            retained_power_fraction: sort_truncate(cir, l_sel)?.retained_fraction(),
        })
    })
}

/// `|h[k]|^2` in dB per tap, zero power mapped to [`PDP_FLOOR_DB`].
pub fn pdp_db(cir: &DiscreteCir) -> Vec<f64> {
    cir.taps
        .iter()
        .map(|t| {
            let p = t.norm_sqr();
            if p > 0.0 {
                (10.0 * p.log10()).max(PDP_FLOOR_DB)
            } else {
                PDP_FLOOR_DB
            }
        })
        .collect()
}
