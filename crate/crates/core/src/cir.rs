//! Band-limited discrete channel impulse responses.
//!
//! A delay profile `{a_p, tau_p}` is sampled through an ideal sinc filter at
//! `f_samp`: `h[k] = sum_p a_p sinc(k - f_samp tau_p)` for `k = 0..L_max`.
//! Negative-index sinc tails are dropped rather than folded into `k = 0`.

use std::cmp::Ordering;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::propagation::DelayProfile;

/// Sinc guard taps added past the maximum delay spread.
pub const L_GUARD: usize = 6;

/// Default sampling rate, 46.08 Msps.
pub const DEFAULT_F_SAMP: f64 = 46.08e6;

/// Default maximum delay spread, 3 us.
pub const DEFAULT_MAX_DELAY_SPREAD: f64 = 3e-6;

/// Default number of taps kept by [`sort_truncate`].
pub const DEFAULT_L_SEL: usize = 28;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CirConfig {
    pub f_samp: f64,
    pub max_delay_spread: f64,
    pub l_guard: usize,
}

impl Default for CirConfig {
    fn default() -> Self {
        Self {
            f_samp: DEFAULT_F_SAMP,
            max_delay_spread: DEFAULT_MAX_DELAY_SPREAD,
            l_guard: L_GUARD,
        }
    }
}

impl CirConfig {
    pub fn new(f_samp: f64, max_delay_spread: f64) -> Result<Self> {
        let cfg = Self {
            f_samp,
            max_delay_spread,
            l_guard: L_GUARD,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_samp > 0.0 && self.f_samp.is_finite()) {
            return Err(Error::invalid(format!(
                "f_samp must be positive, got {}",
                self.f_samp
            )));
        }
        if !(self.max_delay_spread > 0.0 && self.max_delay_spread.is_finite()) {
            return Err(Error::invalid(format!(
                "max delay spread must be positive, got {}",
                self.max_delay_spread
            )));
        }
        Ok(())
    }

    /// Largest tap index, `ceil(max_delay_spread * f_samp) + l_guard`.
    pub fn k_max(&self) -> usize {
        // Guard against 138.24000000000001-style rounding pushing ceil up by one.
        let x = self.max_delay_spread * self.f_samp;
        let r = x.round();
        let whole = if (x - r).abs() < 1e-9 * x.max(1.0) {
            r
        } else {
            x.ceil()
        };
        whole as usize + self.l_guard
    }

    /// Number of taps per snapshot.
    pub fn l_max(&self) -> usize {
        self.k_max() + 1
    }

    /// Rebuilds a config from a stored tap count.
    pub fn from_tap_count(f_samp: f64, l_max: usize) -> Result<Self> {
        if l_max <= L_GUARD + 1 {
            return Err(Error::invalid(format!(
                "tap count {l_max} leaves no room for the sinc guard"
            )));
        }
        let cfg = Self {
            f_samp,
            max_delay_spread: (l_max - 1 - L_GUARD) as f64 / f_samp,
            l_guard: L_GUARD,
        };
        cfg.validate()?;
        debug_assert_eq!(cfg.l_max(), l_max);
        Ok(cfg)
    }
}

/// Normalized sinc, `sin(pi x) / (pi x)`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-9 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteCir {
    pub taps: Vec<Complex64>,
    pub f_samp: f64,
    pub snapshot_time: f64,
}

impl DiscreteCir {
    pub fn zeros(cfg: &CirConfig, snapshot_time: f64) -> Self {
        Self {
            taps: vec![Complex64::new(0.0, 0.0); cfg.l_max()],
            f_samp: cfg.f_samp,
            snapshot_time,
        }
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn total_power(&self) -> f64 {
        self.taps.iter().map(|t| t.norm_sqr()).sum()
    }

    /// Index of the highest-power tap (smallest index on ties), if any tap is nonzero.
    pub fn strongest_tap(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (k, t) in self.taps.iter().enumerate() {
            let p = t.norm_sqr();
            if p > 0.0 && best.is_none_or(|(_, bp)| p > bp) {
                best = Some((k, p));
            }
        }
        best.map(|(k, _)| k)
    }
}

pub fn discretize(profile: &DelayProfile, cfg: &CirConfig) -> Result<DiscreteCir> {
    cfg.validate()?;
    for (i, p) in profile.paths.iter().enumerate() {
        if !(p.delay >= 0.0 && p.delay <= cfg.max_delay_spread) {
            return Err(Error::DelayOutOfRange {
                path: i,
                delay_s: p.delay,
                max_delay_s: cfg.max_delay_spread,
            });
        }
    }
    let mut cir = DiscreteCir::zeros(cfg, profile.snapshot_time);
    for p in &profile.paths {
        let centre = cfg.f_samp * p.delay;
        for (k, tap) in cir.taps.iter_mut().enumerate() {
            *tap += p.amplitude * sinc(k as f64 - centre);
        }
    }
    Ok(cir)
}

/// Power-sorted top-`l_sel` selection of a CIR's taps.
#[derive(Clone, Debug, PartialEq)]
pub struct SortedCir {
    /// Original tap positions, in descending power order.
    pub indices: Vec<usize>,
    pub amps: Vec<Complex64>,
    /// Tap count `L_max` of the source CIR.
    pub tap_count: usize,
    pub total_power: f64,
    pub retained_power: f64,
}

impl SortedCir {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Fraction of tap power kept; 1 for an all-zero CIR.
    pub fn retained_fraction(&self) -> f64 {
        if self.total_power > 0.0 {
            (self.retained_power / self.total_power).min(1.0)
        } else {
            1.0
        }
    }

    /// Dense tap vector of length `tap_count` holding only the kept taps.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.tap_count];
        for (&k, &a) in self.indices.iter().zip(&self.amps) {
            out[k] = a;
        }
        out
    }
}

pub fn sort_truncate(cir: &DiscreteCir, l_sel: usize) -> Result<SortedCir> {
    if l_sel == 0 {
        return Err(Error::invalid("l_sel must be at least 1"));
    }
    let mut order: Vec<(usize, f64)> = cir
        .taps
        .iter()
        .enumerate()
        .map(|(k, t)| (k, t.norm_sqr()))
        .filter(|&(_, p)| p > 0.0)
        .collect();
    order.sort_by(|a, b| match b.1.partial_cmp(&a.1) {
        Some(Ordering::Equal) | None => a.0.cmp(&b.0),
        Some(o) => o,
    });
    order.truncate(l_sel);
    let indices: Vec<usize> = order.iter().map(|&(k, _)| k).collect();
    let amps: Vec<Complex64> = indices.iter().map(|&k| cir.taps[k]).collect();
    Ok(SortedCir {
        retained_power: order.iter().map(|&(_, p)| p).sum(),
        total_power: cir.total_power(),
        tap_count: cir.len(),
        indices,
        amps,
    })
}

/// Coherent path gain `10 log10 |sum_k h[k]|^2`, `-inf` when the sum vanishes.
pub fn path_gain_total(cir: &DiscreteCir) -> f64 {
    let p = cir.taps.iter().sum::<Complex64>().norm_sqr();
    if p > 0.0 {
        10.0 * p.log10()
    } else {
        f64::NEG_INFINITY
    }
}
