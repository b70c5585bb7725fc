mod common;

use common::*;
use num_complex::Complex64;
use owdt_core::{Emulator, Execution, HistoryMode, IqSlot};
use proptest::prelude::*;

fn complex_vec(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), len)
        .prop_map(|v| v.into_iter().map(|(r, i)| c(r, i)).collect())
}

fn stream(slots: usize, n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    complex_vec(slots * n..=slots * n)
}

fn run(emu: &mut Emulator, x: &[Complex64], n: usize) -> Vec<Complex64> {
    x.chunks(n)
        .enumerate()
        .flat_map(|(i, chunk)| {
            emu.convolve_slot(&IqSlot::new(i as u64, chunk.to_vec()))
                .unwrap()
                .samples
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn carry_mode_matches_reference(taps in complex_vec(2..=64), x in stream(4, 240)) {
        let cir = dense_cir(taps.clone(), SMALL_FSAMP);
        let mut emu = Emulator::new(emulator_config(&[cir], taps.len(), 4)).unwrap();
        let got = run(&mut emu, &x, 240);
        let want = reference_convolution(&x, &[taps], x.len(), 1.0);
        prop_assert!(relative_l2(&got, &want) < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn snapshot_switch_matches_reference(
        a in complex_vec(16..=16),
        b in complex_vec(16..=16),
        x in stream(4, 240),
        gain_db in -20.0..20.0f64,
    ) {
        let cirs = [dense_cir(a.clone(), SMALL_FSAMP), dense_cir(b.clone(), SMALL_FSAMP)];
        let mut cfg = emulator_config(&cirs, 16, 2);
        cfg.signal_gain_db = gain_db;
        let mut emu = Emulator::new(cfg).unwrap();
        let got = run(&mut emu, &x, 240);
        let s = 10f64.powf(gain_db / 20.0);
        let want = reference_convolution(&x, &[a, b], 480, s);
        prop_assert!(relative_l2(&got, &want) < 1e-6);
    }

    #[test]
    fn linear_in_input(
        taps in complex_vec(2..=32),
        x1 in stream(2, 240),
        x2 in stream(2, 240),
        alpha in -3.0..3.0f64,
        beta in -3.0..3.0f64,
    ) {
        let cfg = emulator_config(&[dense_cir(taps, SMALL_FSAMP)], 32, 4);
        let mix: Vec<Complex64> = x1.iter().zip(&x2).map(|(p, q)| p * alpha + q * beta).collect();
        let y1 = run(&mut Emulator::new(cfg.clone()).unwrap(), &x1, 240);
        let y2 = run(&mut Emulator::new(cfg.clone()).unwrap(), &x2, 240);
        let y = run(&mut Emulator::new(cfg).unwrap(), &mix, 240);
        let want: Vec<Complex64> = y1.iter().zip(&y2).map(|(p, q)| p * alpha + q * beta).collect();
        prop_assert!(relative_l2(&y, &want) < 1e-9);
    }

    #[test]
    fn one_slot_shift_shifts_output(taps in complex_vec(2..=32), x in stream(3, 240)) {
        let cfg = emulator_config(&[dense_cir(taps, SMALL_FSAMP)], 32, 8);
        let y = run(&mut Emulator::new(cfg.clone()).unwrap(), &x, 240);
        let mut shifted = vec![c(0.0, 0.0); 240];
        shifted.extend_from_slice(&x);
        let ys = run(&mut Emulator::new(cfg).unwrap(), &shifted, 240);
        prop_assert!(ys[..240].iter().all(|v| v.norm() == 0.0));
        prop_assert!(relative_l2(&ys[240..], &y) < 1e-12);
    }

    #[test]
    fn deterministic_across_runs_and_execution(
        taps in complex_vec(2..=64),
        x in stream(2, 240),
        seed in any::<u64>(),
    ) {
        let mut cfg = emulator_config(&[dense_cir(taps, SMALL_FSAMP)], 64, 2);
        cfg.noise_power_db = -30.0;
        cfg.rng_seed = seed;
        let a = run(&mut Emulator::with_execution(cfg.clone(), Execution::Sequential).unwrap(), &x, 240);
        let b = run(&mut Emulator::with_execution(cfg.clone(), Execution::Parallel).unwrap(), &x, 240);
        let again = run(&mut Emulator::with_execution(cfg, Execution::Sequential).unwrap(), &x, 240);
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(&a, &again);
    }

    #[test]
    fn zero_mode_isolates_slots(taps in complex_vec(2..=32), x in stream(3, 240)) {
        let mut cfg = emulator_config(&[dense_cir(taps.clone(), SMALL_FSAMP)], 32, 8);
        cfg.history_mode = HistoryMode::Zero;
        let y = run(&mut Emulator::new(cfg).unwrap(), &x, 240);
        for (slot, chunk) in x.chunks(240).enumerate() {
            let want = reference_convolution(chunk, std::slice::from_ref(&taps), 240, 1.0);
            prop_assert!(relative_l2(&y[slot * 240..(slot + 1) * 240], &want) < 1e-6);
        }
    }
}

#[test]
fn noise_power_and_independence() {
    let taps = vec![c(1.0, 0.0)];
    let mut cfg = emulator_config(&[dense_cir(taps, SMALL_FSAMP)], 1, 10_000);
    cfg.signal_gain_db = f64::NEG_INFINITY;
    cfg.noise_power_db = -100.0;
    cfg.rng_seed = 77;
    let mut emu = Emulator::new(cfg).unwrap();
    let zeros = vec![c(0.0, 0.0); 240];
    let (mut power, mut cross, mut count) = (0.0, 0.0, 0usize);
    let mut out = vec![c(0.0, 0.0); 240];
    let mut slot = IqSlot::new(0, zeros);
    while count < 1_000_000 {
        slot.slot_index = emu.next_slot_index();
        emu.convolve_slot_into(&slot, &mut out).unwrap();
        for y in &out {
            power += y.norm_sqr();
            cross += y.re * y.im;
        }
        count += out.len();
    }
    let n = count as f64;
    let sigma2 = 1e-10;
    assert!((power / n / sigma2 - 1.0).abs() < 0.01, "{}", power / n);
    // Standard error of the mean of re*im is (sigma^2 / 2) / sqrt(n).
    let se = sigma2 / 2.0 / n.sqrt();
    assert!((cross / n).abs() < 3.0 * se, "{} vs {}", cross / n, se);
}
