#![allow(dead_code)]

use num_complex::Complex64;
use owdt_core::cir::{sort_truncate, DiscreteCir};
use owdt_core::{EmulatorConfig, HistoryMode, SlotFormat};

pub const SMALL_FSAMP: f64 = 480_000.0;

/// 16-point FFT, 240 samples per 0.5 ms slot.
pub fn small_format() -> SlotFormat {
    SlotFormat::new(16, SMALL_FSAMP, 0.5e-3).unwrap()
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn dense_cir(taps: Vec<Complex64>, f_samp: f64) -> DiscreteCir {
    DiscreteCir {
        taps,
        f_samp,
        snapshot_time: 0.0,
    }
}

pub fn emulator_config(
    cirs: &[DiscreteCir],
    l_sel: usize,
    slots_per_snapshot: u64,
) -> EmulatorConfig {
    let format = small_format();
    EmulatorConfig {
        sorted_timeline: cirs
            .iter()
            .map(|c| sort_truncate(c, l_sel).unwrap())
            .collect(),
        t_int: format.slot_duration * slots_per_snapshot as f64,
        slot_format: format,
        signal_gain_db: 0.0,
        noise_power_db: f64::NEG_INFINITY,
        rng_seed: 1,
        history_mode: HistoryMode::Carry,
    }
}

/// Direct `y[n] = s * sum_k h_{snap(n)}[k] x[n - k]` over the whole stream.
pub fn reference_convolution(
    x: &[Complex64],
    taps_per_snapshot: &[Vec<Complex64>],
    samples_per_snapshot: usize,
    s: f64,
) -> Vec<Complex64> {
    (0..x.len())
        .map(|n| {
            let h = &taps_per_snapshot[n / samples_per_snapshot];
            let mut acc = c(0.0, 0.0);
            for (k, &hk) in h.iter().enumerate() {
                if k <= n {
                    acc += hk * x[n - k];
                }
            }
            acc * s
        })
        .collect()
}

pub fn relative_l2(got: &[Complex64], want: &[Complex64]) -> f64 {
    let err: f64 = got.iter().zip(want).map(|(a, b)| (a - b).norm_sqr()).sum();
    let norm: f64 = want.iter().map(|b| b.norm_sqr()).sum();
    if norm == 0.0 {
        err.sqrt()
    } else {
        (err / norm).sqrt()
    }
}
