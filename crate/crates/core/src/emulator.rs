//! Slot-based streaming convolution of baseband IQ with the active CIR.
//!
//! For slot samples `x[n]` the output is
//! `y[n] = s * sum_i amps[i] x[n - indices[i]] + sigma w[n]`,
//! where the active snapshot is `slot_index / slots_per_snapshot` and
//! `x[m < 0]` reads the previous slot's tail (carry) or zero.

use std::time::{Duration, Instant};

use num_complex::Complex64;

use crate::bench::LatencyStats;
use crate::cir::{path_gain_total, DiscreteCir, SortedCir};
use crate::error::{Error, Result};
use crate::noise::CounterGaussian;
use crate::par::Execution;

/// Subframe length in seconds.
const SUBFRAME: f64 = 1e-3;

/// Output samples handled per work item.
const CHUNK: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlotFormat {
    pub fft_size: usize,
    /// `N_s = fft_size * 15`.
    pub samples_per_slot: usize,
    /// Seconds.
    pub slot_duration: f64,
}

impl SlotFormat {
    pub fn new(fft_size: usize, f_samp: f64, slot_duration: f64) -> Result<Self> {
        if fft_size == 0 {
            return Err(Error::invalid("fft size must be positive"));
        }
        if !(slot_duration > 0.0 && f_samp > 0.0) {
            return Err(Error::invalid(
                "slot duration and sampling rate must be positive",
            ));
        }
        let samples_per_slot = fft_size * 15;
        let expected = (f_samp * slot_duration).round();
        if expected != samples_per_slot as f64 {
            return Err(Error::invalid(format!(
                "fft size {fft_size} gives {samples_per_slot} samples per slot but \
                 {f_samp} Sps x {slot_duration} s = {expected}"
            )));
        }
        Ok(Self {
            fft_size,
            samples_per_slot,
            slot_duration,
        })
    }

    /// Slot format for NR numerology `mu` (slot = 1 ms / 2^mu).
    pub fn nr(fft_size: usize, f_samp: f64, mu: u32) -> Result<Self> {
        Self::new(fft_size, f_samp, SUBFRAME / f64::from(1u32 << mu))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IqSlot {
    pub slot_index: u64,
    pub samples: Vec<Complex64>,
}

impl IqSlot {
    pub fn new(slot_index: u64, samples: Vec<Complex64>) -> Self {
        Self {
            slot_index,
            samples,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum HistoryMode {
    /// The previous slot's tail feeds the delay line.
    #[default]
    Carry,
    /// Each slot is convolved in isolation.
    Zero,
}

#[derive(Clone, Debug)]
pub struct EmulatorConfig {
    pub sorted_timeline: Vec<SortedCir>,
    /// Snapshot interval in seconds.
    pub t_int: f64,
    pub slot_format: SlotFormat,
    /// `s^2` in dB.
    pub signal_gain_db: f64,
    /// `sigma^2` in dB; `-inf` disables noise.
    pub noise_power_db: f64,
    pub rng_seed: u64,
    pub history_mode: HistoryMode,
}

impl EmulatorConfig {
    pub fn slots_per_snapshot(&self) -> Result<u64> {
        let ratio = self.t_int / self.slot_format.slot_duration;
        let rounded = ratio.round();
        if !(rounded >= 1.0) || (ratio - rounded).abs() > 1e-6 * ratio.max(1.0) {
            return Err(Error::invalid(format!(
                "snapshot interval {} s is not a positive multiple of the {} s slot",
                self.t_int, self.slot_format.slot_duration
            )));
        }
        Ok(rounded as u64)
    }

    pub fn signal_amplitude(&self) -> f64 {
        10f64.powf(self.signal_gain_db / 20.0)
    }

    pub fn noise_amplitude(&self) -> f64 {
        10f64.powf(self.noise_power_db / 20.0)
    }

    /// Number of taps `L_max` shared by the timeline.
    pub fn tap_count(&self) -> usize {
        self.sorted_timeline.first().map_or(1, |s| s.tap_count)
    }

    /// Total number of slots the timeline covers.
    pub fn total_slots(&self) -> Result<u64> {
        Ok(self.slots_per_snapshot()? * self.sorted_timeline.len() as u64)
    }
}

/// Returns `headroom_db - max_t path_gain_total(t)`.
pub fn calibrate_signal_gain(timeline: &[DiscreteCir], headroom_db: f64) -> Result<f64> {
    let max = timeline
        .iter()
        .map(path_gain_total)
        .filter(|g| g.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if max.is_finite() {
        Ok(headroom_db - max)
    } else {
        Err(Error::NoReference)
    }
}

/// Scaled taps of one snapshot, laid out for the kernel.
#[derive(Clone, Debug)]
struct Kernel {
    re: Vec<f64>,
    im: Vec<f64>,
    delay: Vec<usize>,
}

impl Kernel {
    fn new(sorted: &SortedCir, s: f64) -> Self {
        Self {
            re: sorted.amps.iter().map(|a| a.re * s).collect(),
            im: sorted.amps.iter().map(|a| a.im * s).collect(),
            delay: sorted.indices.clone(),
        }
    }
}

/// Streaming channel emulator; one instance per link direction.
pub struct Emulator {
    cfg: EmulatorConfig,
    kernels: Vec<Kernel>,
    slots_per_snapshot: u64,
    sigma: f64,
    noise: CounterGaussian,
    history: usize,
    // [history | current slot] as split real/imaginary planes.
    ext_re: Vec<f64>,
    ext_im: Vec<f64>,
    out_re: Vec<f64>,
    out_im: Vec<f64>,
    next_slot_index: u64,
    exec: Execution,
}

impl Emulator {
    pub fn new(cfg: EmulatorConfig) -> Result<Self> {
        Self::with_execution(cfg, Execution::default())
    }

    pub fn with_execution(cfg: EmulatorConfig, exec: Execution) -> Result<Self> {
        let slots_per_snapshot = cfg.slots_per_snapshot()?;
        let tap_count = cfg.tap_count();
        if let Some(i) = cfg
            .sorted_timeline
            .iter()
            .position(|s| s.tap_count != tap_count || s.indices.iter().any(|&k| k >= tap_count))
        {
            return Err(Error::invalid(format!(
                "snapshot {i} does not match the timeline tap count {tap_count}"
            )));
        }
        if cfg.signal_gain_db.is_nan() || cfg.noise_power_db.is_nan() {
            return Err(Error::invalid("gain must not be NaN"));
        }
        let s = cfg.signal_amplitude();
        let sigma = cfg.noise_amplitude();
        if !s.is_finite() || !sigma.is_finite() {
            return Err(Error::invalid("gain out of range"));
        }
        let kernels = cfg
            .sorted_timeline
            .iter()
            .map(|c| Kernel::new(c, s))
            .collect();
        let history = tap_count - 1;
        let n = cfg.slot_format.samples_per_slot;
        Ok(Self {
            kernels,
            slots_per_snapshot,
            sigma,
            noise: CounterGaussian::new(cfg.rng_seed),
            history,
            ext_re: vec![0.0; history + n],
            ext_im: vec![0.0; history + n],
            out_re: vec![0.0; n],
            out_im: vec![0.0; n],
            next_slot_index: 0,
            exec,
            cfg,
        })
    }

    pub fn config(&self) -> &EmulatorConfig {
        &self.cfg
    }

    pub fn next_slot_index(&self) -> u64 {
        self.next_slot_index
    }

    /// Starts the stream at `index` instead of 0; clears the history.
    pub fn seek(&mut self, index: u64) {
        self.next_slot_index = index;
        self.ext_re[..self.history].fill(0.0);
        self.ext_im[..self.history].fill(0.0);
    }

    pub fn total_slots(&self) -> u64 {
        self.slots_per_snapshot * self.kernels.len() as u64
    }

    pub fn is_exhausted(&self) -> bool {
        self.next_slot_index >= self.total_slots()
    }

    /// Snapshot driving `slot_index`.
    pub fn snapshot_for(&self, slot_index: u64) -> u64 {
        slot_index / self.slots_per_snapshot
    }

    pub fn convolve_slot(&mut self, slot: &IqSlot) -> Result<IqSlot> {
        let mut out = vec![Complex64::new(0.0, 0.0); slot.samples.len()];
        self.convolve_slot_into(slot, &mut out)?;
        Ok(IqSlot::new(slot.slot_index, out))
    }

    /// Same as [`Emulator::convolve_slot`] but writes into a caller buffer.
    pub fn convolve_slot_into(&mut self, slot: &IqSlot, out: &mut [Complex64]) -> Result<()> {
        if slot.slot_index != self.next_slot_index {
            return Err(Error::Sequencing {
                expected: self.next_slot_index,
                got: slot.slot_index,
            });
        }
        let n = self.cfg.slot_format.samples_per_slot;
        if slot.samples.len() != n || out.len() != n {
            return Err(Error::Framing(format!(
                "slot {} has {} samples, expected {n}",
                slot.slot_index,
                slot.samples.len()
            )));
        }
        let snapshot = self.snapshot_for(slot.slot_index);
        if snapshot >= self.kernels.len() as u64 {
            return Err(Error::EndOfScenario {
                slot_index: slot.slot_index,
            });
        }

        let h = self.history;
        // The slot region of ext is scratch until the history shift below.
        let mut finite = true;
        for ((r, i), x) in self.ext_re[h..]
            .iter_mut()
            .zip(self.ext_im[h..].iter_mut())
            .zip(&slot.samples)
        {
            *r = x.re;
            *i = x.im;
            finite &= x.re.is_finite() & x.im.is_finite();
        }
        if !finite {
            return Err(Error::invalid(format!(
                "slot {} contains non-finite samples",
                slot.slot_index
            )));
        }
        if self.cfg.history_mode == HistoryMode::Zero {
            self.ext_re[..h].fill(0.0);
            self.ext_im[..h].fill(0.0);
        }

        let kernel = &self.kernels[snapshot as usize];
        let sigma = self.sigma;
        let slot_noise = self.noise.slot(slot.slot_index);
        let (ext_re, ext_im) = (&self.ext_re[..], &self.ext_im[..]);
        let out_re = &mut self.out_re[..];
        let out_im = &mut self.out_im[..];

        // Group the output planes and the caller buffer so each worker owns one chunk of each.
        let mut parts: Vec<(&mut [f64], &mut [f64], &mut [Complex64])> = out_re
            .chunks_mut(CHUNK)
            .zip(out_im.chunks_mut(CHUNK))
            .zip(out.chunks_mut(CHUNK))
            .map(|((r, i), o)| (r, i, o))
            .collect();
        self.exec.for_each_chunk_mut(&mut parts, 1, |c, part| {
            let (yr, yi, o) = &mut part[0];
            let n0 = c * CHUNK;
            yr.fill(0.0);
            yi.fill(0.0);
            accumulate(kernel, ext_re, ext_im, h + n0, yr, yi);
            if sigma > 0.0 {
                slot_noise.add_scaled(n0 as u64, sigma, yr, yi);
            }
            for ((o, &r), &i) in o.iter_mut().zip(yr.iter()).zip(yi.iter()) {
                *o = Complex64::new(r, i);
            }
        });

        // Keep the last L_max - 1 inputs for the next slot.
        self.ext_re.copy_within(n.., 0);
        self.ext_im.copy_within(n.., 0);
        self.next_slot_index += 1;
        Ok(())
    }

    /// Feeds `input` through the emulator, handing each output to `sink`.
    ///
    /// Stops cleanly when the timeline is exhausted; the summary records
    /// whether input was left over.
    pub fn run_scenario<I, F>(&mut self, input: I, mut sink: F) -> Result<RunSummary>
    where
        I: IntoIterator<Item = Result<IqSlot>>,
        F: FnMut(IqSlot) -> Result<()>,
    {
        let mut latencies = Vec::new();
        let mut out = vec![Complex64::new(0.0, 0.0); self.cfg.slot_format.samples_per_slot];
        let mut ended = false;
        for slot in input {
            let slot = slot?;
            let start = Instant::now();
            match self.convolve_slot_into(&slot, &mut out) {
                Ok(()) => {}
                Err(Error::EndOfScenario { .. }) => {
                    ended = true;
                    break;
                }
                Err(e) => return Err(e),
            }
            latencies.push(start.elapsed());
            sink(IqSlot::new(slot.slot_index, out.clone()))?;
        }
        Ok(RunSummary {
            slots: latencies.len() as u64,
            ended,
            latency: LatencyStats::from_durations(&latencies),
            latencies,
        })
    }
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub slots: u64,
    /// True when input continued past the last snapshot.
    pub ended: bool,
    pub latency: Option<LatencyStats>,
    pub latencies: Vec<Duration>,
}

fn accumulate(
    kernel: &Kernel,
    xr: &[f64],
    xi: &[f64],
    base: usize,
    yr: &mut [f64],
    yi: &mut [f64],
) {
    #[cfg(target_arch = "x86_64")]
    {
        if std::is_x86_feature_detected!("avx512f") {
            // SAFETY: the required CPU feature was detected above.
            unsafe { accumulate_avx512(kernel, xr, xi, base, yr, yi) };
            return;
        }
        if std::is_x86_feature_detected!("avx2") && std::is_x86_feature_detected!("fma") {
            // SAFETY: the required CPU features were detected above.
            unsafe { accumulate_avx2(kernel, xr, xi, base, yr, yi) };
            return;
        }
    }
    accumulate_portable(kernel, xr, xi, base, yr, yi);
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f")]
unsafe fn accumulate_avx512(
    kernel: &Kernel,
    xr: &[f64],
    xi: &[f64],
    base: usize,
    yr: &mut [f64],
    yi: &mut [f64],
) {
    accumulate_impl::<true>(kernel, xr, xi, base, yr, yi)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn accumulate_avx2(
    kernel: &Kernel,
    xr: &[f64],
    xi: &[f64],
    base: usize,
    yr: &mut [f64],
    yi: &mut [f64],
) {
    accumulate_impl::<true>(kernel, xr, xi, base, yr, yi)
}

fn accumulate_portable(
    kernel: &Kernel,
    xr: &[f64],
    xi: &[f64],
    base: usize,
    yr: &mut [f64],
    yi: &mut [f64],
) {
    accumulate_impl::<false>(kernel, xr, xi, base, yr, yi)
}

#[inline(always)]
fn madd<const FMA: bool>(a: f64, b: f64, c: f64) -> f64 {
    if FMA {
        a.mul_add(b, c)
    } else {
        a * b + c
    }
}

/// Accumulates the sparse tap sum into `y`, four taps per pass over the chunk.
#[inline(always)]
fn accumulate_impl<const FMA: bool>(
    kernel: &Kernel,
    xr: &[f64],
    xi: &[f64],
    base: usize,
    yr: &mut [f64],
    yi: &mut [f64],
) {
    let len = yr.len();
    let yi = &mut yi[..len];
    let window = |d: usize| {
        let off = base - d;
        (&xr[off..off + len], &xi[off..off + len])
    };
    let mut t = 0;
    let taps = kernel.delay.len();
    while t + 4 <= taps {
        let (a0r, a0i, (x0r, x0i)) = (kernel.re[t], kernel.im[t], window(kernel.delay[t]));
        let (a1r, a1i, (x1r, x1i)) = (
            kernel.re[t + 1],
            kernel.im[t + 1],
            window(kernel.delay[t + 1]),
        );
        let (a2r, a2i, (x2r, x2i)) = (
            kernel.re[t + 2],
            kernel.im[t + 2],
            window(kernel.delay[t + 2]),
        );
        let (a3r, a3i, (x3r, x3i)) = (
            kernel.re[t + 3],
            kernel.im[t + 3],
            window(kernel.delay[t + 3]),
        );
        for j in 0..len {
            let mut r = yr[j];
            let mut i = yi[j];
            r = madd::<FMA>(a0r, x0r[j], r);
            r = madd::<FMA>(-a0i, x0i[j], r);
            i = madd::<FMA>(a0r, x0i[j], i);
            i = madd::<FMA>(a0i, x0r[j], i);
            r = madd::<FMA>(a1r, x1r[j], r);
            r = madd::<FMA>(-a1i, x1i[j], r);
            i = madd::<FMA>(a1r, x1i[j], i);
            i = madd::<FMA>(a1i, x1r[j], i);
            r = madd::<FMA>(a2r, x2r[j], r);
            r = madd::<FMA>(-a2i, x2i[j], r);
            i = madd::<FMA>(a2r, x2i[j], i);
            i = madd::<FMA>(a2i, x2r[j], i);
            r = madd::<FMA>(a3r, x3r[j], r);
            r = madd::<FMA>(-a3i, x3i[j], r);
            i = madd::<FMA>(a3r, x3i[j], i);
            i = madd::<FMA>(a3i, x3r[j], i);
            yr[j] = r;
            yi[j] = i;
        }
        t += 4;
    }
    while t < taps {
        let (ar, ai) = (kernel.re[t], kernel.im[t]);
        let (x_r, x_i) = window(kernel.delay[t]);
        for j in 0..len {
            yr[j] = madd::<FMA>(-ai, x_i[j], madd::<FMA>(ar, x_r[j], yr[j]));
            yi[j] = madd::<FMA>(ai, x_r[j], madd::<FMA>(ar, x_i[j], yi[j]));
        }
        t += 1;
    }
}
