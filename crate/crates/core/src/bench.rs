//! Per-slot latency measurement for the convolution path.

use std::time::{Duration, Instant};

use num_complex::Complex64;

use crate::cir::{sort_truncate, CirConfig, DiscreteCir, DEFAULT_MAX_DELAY_SPREAD};
use crate::emulator::{Emulator, EmulatorConfig, HistoryMode, IqSlot, SlotFormat};
use crate::error::{Error, Result};
use crate::noise::CounterGaussian;
use crate::par::Execution;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatencyStats {
    pub count: usize,
    pub min: Duration,
    pub median: Duration,
    pub p99: Duration,
    pub max: Duration,
    pub mean: Duration,
}

impl LatencyStats {
    pub fn from_durations(samples: &[Duration]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut sorted = samples.to_vec();
        sorted.sort_unstable();
        let n = sorted.len();
        let rank = |q: f64| sorted[((q * n as f64).ceil() as usize).clamp(1, n) - 1];
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2
        };
        Some(Self {
            count: n,
            min: sorted[0],
            median,
            p99: rank(0.99),
            max: sorted[n - 1],
            mean: sorted.iter().sum::<Duration>() / n as u32,
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BenchOptions {
    /// Noise power in dB; `-inf` benchmarks the convolution alone.
    pub noise_power_db: f64,
    pub execution: Execution,
    /// Distinct random input slots cycled through the run.
    pub distinct_slots: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            noise_power_db: -100.0,
            execution: Execution::default(),
            distinct_slots: 4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub l_sel: usize,
    pub tap_count: usize,
    pub samples_per_slot: usize,
    pub budget: Duration,
    pub stats: LatencyStats,
}

impl BenchReport {
    /// Median slot time fits within one slot period.
    pub fn passes(&self) -> bool {
        self.stats.median < self.budget
    }

    /// Budget left over at the median, as a fraction of the slot period.
    pub fn headroom(&self) -> f64 {
        1.0 - self.stats.median.as_secs_f64() / self.budget.as_secs_f64()
    }
}

/// Times `convolve_slot` on synthetic random slots and a random dense CIR.
pub fn bench(
    slot_count: usize,
    l_sel: usize,
    slot_format: SlotFormat,
    seed: u64,
    opts: BenchOptions,
) -> Result<BenchReport> {
    if slot_count == 0 {
        return Err(Error::invalid("slot count must be at least 1"));
    }
    let f_samp = slot_format.samples_per_slot as f64 / slot_format.slot_duration;
    let cir_cfg = CirConfig::new(f_samp, DEFAULT_MAX_DELAY_SPREAD)?;
    let rng = CounterGaussian::new(seed);
    let cir = DiscreteCir {
        taps: (0..cir_cfg.l_max() as u64)
            .map(|k| rng.sample(u64::MAX, k) * 0.1)
            .collect(),
        f_samp,
        snapshot_time: 0.0,
    };
    let sorted = sort_truncate(&cir, l_sel)?;
    let cfg = EmulatorConfig {
        sorted_timeline: vec![sorted],
        t_int: slot_format.slot_duration * slot_count as f64,
        slot_format,
        signal_gain_db: 0.0,
        noise_power_db: opts.noise_power_db,
        rng_seed: seed,
        history_mode: HistoryMode::Carry,
    };
    let mut emu = Emulator::with_execution(cfg, opts.execution)?;
    let n = slot_format.samples_per_slot;
    let inputs: Vec<Vec<Complex64>> = (0..opts.distinct_slots.max(1) as u64)
        .map(|s| {
            (0..n as u64)
                .map(|k| rng.sample(u64::MAX - 1 - s, k) * 1000.0)
                .collect()
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let mut times = Vec::with_capacity(slot_count);
    let mut slot = IqSlot::new(0, Vec::new());
    for i in 0..slot_count {
        slot.slot_index = i as u64;
        slot.samples.clone_from(&inputs[i % inputs.len()]);
        let start = Instant::now();
        emu.convolve_slot_into(&slot, &mut out)?;
        times.push(start.elapsed());
    }
    Ok(BenchReport {
        l_sel,
        tap_count: cir_cfg.l_max(),
        samples_per_slot: n,
        budget: Duration::from_secs_f64(slot_format.slot_duration),
        stats: LatencyStats::from_durations(&times).expect("slot_count >= 1"),
    })
}
