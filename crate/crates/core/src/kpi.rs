//! 5G NR link KPIs: peak bitrate, TDD occupancy, BLER-scaled effective
//! throughput, RMS delay spread and the OFDM feasibility chain
//! `sigma_tau << T_GI << T_OFDM << T_f`.

use std::fmt;
use std::str::FromStr;

use crate::cir::DiscreteCir;
use crate::error::{Error, Result};
use crate::propagation::{DelayProfile, SPEED_OF_LIGHT};

/// OFDM symbols per slot (normal cyclic prefix).
pub const SYMBOLS_PER_SLOT: u32 = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Dl,
    Ul,
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dl" => Ok(Direction::Dl),
            "ul" => Ok(Direction::Ul),
            _ => Err(Error::invalid(format!(
                "direction must be dl or ul, got {s:?}"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlotKind {
    Downlink,
    Special,
    Uplink,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TddPattern {
    pub slots: Vec<SlotKind>,
    /// `(dl, guard, ul)` symbols in a special slot.
    pub special: (u32, u32, u32),
}

impl TddPattern {
    pub fn new(slots: Vec<SlotKind>, special: (u32, u32, u32)) -> Result<Self> {
        if slots.is_empty() {
            return Err(Error::invalid("TDD pattern is empty"));
        }
        let (d, g, u) = special;
        if d + g + u != SYMBOLS_PER_SLOT {
            return Err(Error::invalid(format!(
                "special slot {d}+{g}+{u} does not sum to {SYMBOLS_PER_SLOT}"
            )));
        }
        Ok(Self { slots, special })
    }

    /// Parses a pattern string such as `DDDSU`.
    pub fn parse(pattern: &str, special: (u32, u32, u32)) -> Result<Self> {
        let slots = pattern
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'D' => Ok(SlotKind::Downlink),
                'S' => Ok(SlotKind::Special),
                'U' => Ok(SlotKind::Uplink),
                other => Err(Error::invalid(format!("unknown slot symbol {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(slots, special)
    }

    /// `DDDSU` with a 6D+4G+4U special slot.
    pub fn dddsu() -> Self {
        Self::parse("DDDSU", (6, 4, 4)).expect("valid pattern")
    }

    fn count(&self, kind: SlotKind) -> u32 {
        self.slots.iter().filter(|&&s| s == kind).count() as u32
    }
}

/// Exact symbol accounting of a TDD pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Occupancy {
    pub dl_symbols: u32,
    pub ul_symbols: u32,
    pub guard_symbols: u32,
    pub total_symbols: u32,
}

impl Occupancy {
    pub fn alpha_dl(&self) -> f64 {
        f64::from(self.dl_symbols) / f64::from(self.total_symbols)
    }

    pub fn alpha_ul(&self) -> f64 {
        f64::from(self.ul_symbols) / f64::from(self.total_symbols)
    }

    pub fn guard_fraction(&self) -> f64 {
        f64::from(self.guard_symbols) / f64::from(self.total_symbols)
    }

    pub fn alpha(&self, dir: Direction) -> f64 {
        match dir {
            Direction::Dl => self.alpha_dl(),
            Direction::Ul => self.alpha_ul(),
        }
    }
}

pub fn tdd_occupancy(tdd: &TddPattern) -> Occupancy {
    let specials = tdd.count(SlotKind::Special);
    let (sd, sg, su) = tdd.special;
    Occupancy {
        dl_symbols: SYMBOLS_PER_SLOT * tdd.count(SlotKind::Downlink) + specials * sd,
        ul_symbols: SYMBOLS_PER_SLOT * tdd.count(SlotKind::Uplink) + specials * su,
        guard_symbols: specials * sg,
        total_symbols: SYMBOLS_PER_SLOT * tdd.slots.len() as u32,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinkConfig {
    pub numerology_mu: u32,
    /// Channel bandwidth in Hz.
    pub bandwidth: f64,
    pub n_prb: u32,
    pub overhead_dl: f64,
    pub overhead_ul: f64,
    pub tdd: TddPattern,
    pub fft_size: usize,
    pub f_samp: f64,
    pub carrier_freq: f64,
}

impl LinkConfig {
    /// n77, 40 MHz, 30 kHz SCS, 106 PRBs, 1536-point FFT at 46.08 Msps,
    /// DDDSU with 6D+4G+4U, control overhead 0.14 DL / 0.08 UL.
    pub fn reference() -> Self {
        Self {
            numerology_mu: 1,
            bandwidth: 40e6,
            n_prb: 106,
            overhead_dl: 0.14,
            overhead_ul: 0.08,
            tdd: TddPattern::dddsu(),
            fft_size: 1536,
            f_samp: 46.08e6,
            carrier_freq: 4.019_16e9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, oh) in [("DL", self.overhead_dl), ("UL", self.overhead_ul)] {
            if !(0.0..1.0).contains(&oh) {
                return Err(Error::invalid(format!(
                    "{name} overhead {oh} not in [0, 1)"
                )));
            }
        }
        if self.n_prb == 0 {
            return Err(Error::invalid("n_prb must be positive"));
        }
        if self.numerology_mu > 6 {
            return Err(Error::invalid(format!(
                "numerology {} too large",
                self.numerology_mu
            )));
        }
        if !(self.f_samp > 0.0) || self.fft_size == 0 {
            return Err(Error::invalid(
                "sampling rate and fft size must be positive",
            ));
        }
        Ok(())
    }

    pub fn overhead(&self, dir: Direction) -> f64 {
        match dir {
            Direction::Dl => self.overhead_dl,
            Direction::Ul => self.overhead_ul,
        }
    }

    /// Average OFDM symbol duration in a subframe, `1 ms / (14 * 2^mu)`.
    pub fn symbol_duration(&self) -> f64 {
        1e-3 / (f64::from(SYMBOLS_PER_SLOT) * f64::from(1u32 << self.numerology_mu))
    }

    pub fn cyclic_prefix(&self) -> CyclicPrefix {
        cyclic_prefix_samples(self.fft_size, self.numerology_mu)
    }

    /// `R_b / eta` in Mbps for one direction.
    pub fn bitrate_coefficient(&self, dir: Direction) -> f64 {
        1e-6 * 12.0 * f64::from(self.n_prb) / self.symbol_duration() * (1.0 - self.overhead(dir))
    }

    /// `alpha * R_b / eta` in Mbps.
    pub fn throughput_coefficient(&self, dir: Direction) -> f64 {
        tdd_occupancy(&self.tdd).alpha(dir) * self.bitrate_coefficient(dir)
    }
}

/// Cyclic prefix lengths in samples at the configured FFT size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CyclicPrefix {
    /// First symbol of each half subframe.
    pub long: usize,
    pub short: usize,
}

/// Normal-CP lengths for `fft_size` at numerology `mu`.
///
/// The 1536-point, 30 kHz configuration is pinned to the 132/106 sample
/// split measured on the reference gNB rather than the nominal 132/108.
pub fn cyclic_prefix_samples(fft_size: usize, mu: u32) -> CyclicPrefix {
    if fft_size == 1536 && mu == 1 {
        return CyclicPrefix {
            long: 132,
            short: 106,
        };
    }
    let short = 144 * fft_size / 2048;
    let long = (144 + 16 * (1usize << mu)) * fft_size / 2048;
    CyclicPrefix { long, short }
}

/// One row of the 256QAM MCS table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McsEntry {
    pub index: u8,
    /// Modulation order, bits per symbol.
    pub q_m: u8,
    /// Target code rate x 1024.
    pub code_rate_x1024: f64,
    /// Spectral efficiency as tabulated (4 decimals).
    pub spectral_eff: f64,
}

// 3GPP TS 38.214 Table 5.1.3.1-2 (PDSCH, 256QAM), indices 0..=27.
const MCS_256QAM: [(u8, f64, f64); 28] = [
    (2, 120.0, 0.2344),
    (2, 193.0, 0.3770),
    (2, 308.0, 0.6016),
    (2, 449.0, 0.8770),
    (2, 602.0, 1.1758),
    (4, 378.0, 1.4766),
    (4, 434.0, 1.6953),
    (4, 490.0, 1.9141),
    (4, 553.0, 2.1602),
    (4, 616.0, 2.4063),
    (4, 658.0, 2.5703),
    (6, 466.0, 2.7305),
    (6, 517.0, 3.0293),
    (6, 567.0, 3.3223),
    (6, 616.0, 3.6094),
    (6, 666.0, 3.9023),
    (6, 719.0, 4.2129),
    (6, 772.0, 4.5234),
    (6, 822.0, 4.8164),
    (6, 873.0, 5.1152),
    (8, 682.5, 5.3320),
    (8, 711.0, 5.5547),
    (8, 754.0, 5.8906),
    (8, 797.0, 6.2266),
    (8, 841.0, 6.5703),
    (8, 885.0, 6.9141),
    (8, 916.5, 7.1602),
    (8, 948.0, 7.4063),
];

pub const MAX_MCS_INDEX: u8 = 27;

pub fn mcs_lookup(index: u8) -> Result<McsEntry> {
    let &(q_m, code_rate_x1024, spectral_eff) = MCS_256QAM
        .get(usize::from(index))
        .ok_or_else(|| Error::invalid(format!("MCS index {index} outside 0..={MAX_MCS_INDEX}")))?;
    Ok(McsEntry {
        index,
        q_m,
        code_rate_x1024,
        spectral_eff,
    })
}

/// Peak single-layer bitrate in Mbps.
pub fn max_bitrate(cfg: &LinkConfig, mcs: &McsEntry, dir: Direction) -> Result<f64> {
    cfg.validate()?;
    Ok(mcs.spectral_eff * cfg.bitrate_coefficient(dir))
}

/// `(1 - bler) * alpha * R_b` in Mbps.
pub fn effective_throughput(
    cfg: &LinkConfig,
    mcs: &McsEntry,
    bler: f64,
    dir: Direction,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&bler) {
        return Err(Error::invalid(format!("BLER {bler} not in [0, 1]")));
    }
    let rb = max_bitrate(cfg, mcs, dir)?;
    Ok((1.0 - bler) * tdd_occupancy(&cfg.tdd).alpha(dir) * rb)
}

fn power_weighted_spread(points: impl Iterator<Item = (f64, f64)>) -> Result<f64> {
    let (mut p0, mut p1, mut p2) = (0.0, 0.0, 0.0);
    let mut any = false;
    for (power, tau) in points {
        any = true;
        p0 += power;
        p1 += power * tau;
        p2 += power * tau * tau;
    }
    if !any {
        return Err(Error::Undefined(
            "RMS delay spread of an empty profile".into(),
        ));
    }
    if !(p0 > 0.0) {
        return Err(Error::Undefined(
            "RMS delay spread of a zero-power profile".into(),
        ));
    }
    let mean = p1 / p0;
    Ok((p2 / p0 - mean * mean).max(0.0).sqrt())
}

/// Power-weighted RMS delay spread in seconds.
pub fn rms_delay_spread(profile: &DelayProfile) -> Result<f64> {
    power_weighted_spread(
        profile
            .paths
            .iter()
            .map(|p| (p.amplitude.norm_sqr(), p.delay)),
    )
}

/// RMS delay spread of a discrete CIR, taking tap `k` at delay `k / f_samp`.
pub fn cir_rms_delay_spread(cir: &DiscreteCir) -> Result<f64> {
    power_weighted_spread(
        cir.taps
            .iter()
            .enumerate()
            .map(|(k, t)| (t.norm_sqr(), k as f64 / cir.f_samp)),
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OfdmFeasibility {
    /// `sigma_tau` in seconds, when known.
    pub rms_delay_spread: Option<f64>,
    /// Short cyclic prefix duration.
    pub guard_interval: f64,
    /// Long cyclic prefix duration.
    pub long_guard_interval: f64,
    /// Useful symbol duration `fft_size / f_samp`.
    pub symbol_duration: f64,
    /// `1 / f_D`; infinite when stationary.
    pub fading_period: f64,
    pub doppler_freq: f64,
    pub margin: f64,
    /// `sigma_tau << T_GI`; `None` without a delay spread.
    pub delay_within_guard: Option<bool>,
    /// `T_GI << T_OFDM`.
    pub guard_within_symbol: bool,
    /// `T_OFDM << T_f`.
    pub symbol_within_fading: bool,
}

impl OfdmFeasibility {
    pub fn feasible(&self) -> bool {
        self.delay_within_guard.unwrap_or(true)
            && self.guard_within_symbol
            && self.symbol_within_fading
    }
}

impl fmt::Display for OfdmFeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = |b: Option<bool>| match b {
            Some(true) => "holds",
            Some(false) => "violated",
            None => "unknown",
        };
        match self.rms_delay_spread {
            Some(s) => writeln!(f, "sigma_tau_us\t{:.6}", s * 1e6)?,
            None => writeln!(f, "sigma_tau_us\tunknown")?,
        }
        writeln!(f, "t_gi_us\t{:.6}", self.guard_interval * 1e6)?;
        writeln!(f, "t_gi_long_us\t{:.6}", self.long_guard_interval * 1e6)?;
        writeln!(f, "t_ofdm_us\t{:.6}", self.symbol_duration * 1e6)?;
        writeln!(f, "doppler_hz\t{:.6}", self.doppler_freq)?;
        writeln!(f, "t_f_ms\t{:.6}", self.fading_period * 1e3)?;
        writeln!(f, "margin\t{}", self.margin)?;
        writeln!(f, "sigma_tau<<t_gi\t{}", verdict(self.delay_within_guard))?;
        writeln!(
            f,
            "t_gi<<t_ofdm\t{}",
            verdict(Some(self.guard_within_symbol))
        )?;
        writeln!(
            f,
            "t_ofdm<<t_f\t{}",
            verdict(Some(self.symbol_within_fading))
        )?;
        write!(f, "feasible\t{}", self.feasible())
    }
}

/// Evaluates the chain with `a << b` read as `a * margin <= b`.
pub fn ofdm_feasibility(
    cfg: &LinkConfig,
    sigma_tau: Option<f64>,
    speed: f64,
    margin: f64,
) -> Result<OfdmFeasibility> {
    cfg.validate()?;
    if !(speed >= 0.0 && speed.is_finite()) {
        return Err(Error::invalid(format!(
            "speed must be non-negative, got {speed}"
        )));
    }
    if !(margin > 0.0) {
        return Err(Error::invalid("margin must be positive"));
    }
    if let Some(s) = sigma_tau {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::invalid(format!(
                "sigma_tau must be non-negative, got {s}"
            )));
        }
    }
    let cp = cfg.cyclic_prefix();
    let guard_interval = cp.short as f64 / cfg.f_samp;
    let symbol_duration = cfg.fft_size as f64 / cfg.f_samp;
    let doppler_freq = cfg.carrier_freq * speed / SPEED_OF_LIGHT;
    let fading_period = if doppler_freq > 0.0 {
        1.0 / doppler_freq
    } else {
        f64::INFINITY
    };
    let much_less = |a: f64, b: f64| a * margin <= b;
    Ok(OfdmFeasibility {
        rms_delay_spread: sigma_tau,
        guard_interval,
        long_guard_interval: cp.long as f64 / cfg.f_samp,
        symbol_duration,
        fading_period,
        doppler_freq,
        margin,
        delay_within_guard: sigma_tau.map(|s| much_less(s, guard_interval)),
        guard_within_symbol: much_less(guard_interval, symbol_duration),
        symbol_within_fading: much_less(symbol_duration, fading_period),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsiCheck {
    pub ok: bool,
    /// Significant taps beyond the short cyclic prefix.
    pub offending: Vec<usize>,
}

/// Flags taps past the short CP whose power is within `power_floor_db` of the strongest tap.
pub fn cir_isi_check(cir: &DiscreteCir, cfg: &LinkConfig, power_floor_db: f64) -> IsiCheck {
    let limit = cfg.cyclic_prefix().short;
    let peak = cir.taps.iter().map(|t| t.norm_sqr()).fold(0.0, f64::max);
    if peak <= 0.0 {
        return IsiCheck {
            ok: true,
            offending: Vec::new(),
        };
    }
    let threshold = peak * 10f64.powf(power_floor_db / 10.0);
    let offending: Vec<usize> = cir
        .taps
        .iter()
        .enumerate()
        .filter(|&(k, t)| k > limit && t.norm_sqr() > 0.0 && t.norm_sqr() >= threshold)
        .map(|(k, _)| k)
        .collect();
    IsiCheck {
        ok: offending.is_empty(),
        offending,
    }
}
