//! Acceptance suite. Runs every criterion in order and prints one line each;
//! exits non-zero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use num_complex::Complex64;
use owdt_core::bench::{bench, BenchOptions};
use owdt_core::io::tables::write_report_csv;
use owdt_core::kpi::{
    cyclic_prefix_samples, effective_throughput, mcs_lookup, ofdm_feasibility, tdd_occupancy,
    Direction, LinkConfig,
};
use owdt_core::materials::MaterialSpec;
use owdt_core::propagation::Path;
use owdt_core::{
    build_timeline, discretize, evaluate_material, report, sort_truncate, CirConfig, DelayProfile,
    Emulator, Execution, Facet, IqSlot, MobilityTrace, Scene, SlotFormat, Vec3,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn round_to(x: f64, places: i32) -> f64 {
    let s = 10f64.powi(places);
    (x * s).round() / s
}

fn kpi_exactness() -> Outcome {
    let cfg = LinkConfig::reference();
    let occ = tdd_occupancy(&cfg.tdd);
    let checks = [
        (
            "R_b/eta DL",
            cfg.bitrate_coefficient(Direction::Dl),
            30.62976,
        ),
        (
            "R_b/eta UL",
            cfg.bitrate_coefficient(Direction::Ul),
            32.76672,
        ),
        ("alpha DL", occ.alpha_dl(), 48.0 / 70.0),
        ("alpha UL", occ.alpha_ul(), 18.0 / 70.0),
        (
            "alpha*R_b/eta DL",
            cfg.throughput_coefficient(Direction::Dl),
            21.003264,
        ),
        (
            "alpha*R_b/eta UL",
            cfg.throughput_coefficient(Direction::Ul),
            8.425728,
        ),
    ];
    for (name, got, want) in checks {
        ensure(round_to(got, 6) == round_to(want, 6), || {
            format!("{name} = {got}, expected {want}")
        })?;
    }
    let dl = effective_throughput(
        &cfg,
        &mcs_lookup(27).map_err(|e| e.to_string())?,
        0.001656,
        Direction::Dl,
    )
    .map_err(|e| e.to_string())?;
    let ul = effective_throughput(
        &cfg,
        &mcs_lookup(10).map_err(|e| e.to_string())?,
        0.163917,
        Direction::Ul,
    )
    .map_err(|e| e.to_string())?;
    ensure((dl - 155.2989).abs() <= 0.001, || format!("DL T_eff {dl}"))?;
    ensure((ul - 18.106756).abs() <= 0.001, || format!("UL T_eff {ul}"))?;
    Ok(format!(
        "DL {dl:.6} Mbps, UL {ul:.6} Mbps, occupancy 48/70 and 18/70"
    ))
}

fn tap_bound() -> Outcome {
    let cfg = CirConfig::default();
    ensure(
        cfg.f_samp == 46.08e6 && cfg.max_delay_spread == 3e-6,
        || "unexpected defaults".into(),
    )?;
    ensure(cfg.l_max() == 146 && cfg.k_max() == 145, || {
        format!("L_max {} k_max {}", cfg.l_max(), cfg.k_max())
    })?;
    let profile = DelayProfile::new(
        vec![Path {
            amplitude: Complex64::new(1.0, 0.0),
            delay: 3e-6,
        }],
        0.0,
    )
    .map_err(|e| e.to_string())?;
    let cir = discretize(&profile, &cfg).map_err(|e| e.to_string())?;
    ensure(cir.len() == 146, || format!("{} taps", cir.len()))?;
    let sorted = sort_truncate(&cir, 146).map_err(|e| e.to_string())?;
    ensure(sorted.indices.iter().all(|&k| k <= 145), || {
        "index beyond 145".into()
    })?;
    Ok("L_max = 146, indices 0..145".into())
}

fn ofdm_anchors() -> Outcome {
    let cfg = LinkConfig::reference();
    let f = ofdm_feasibility(&cfg, None, 11.78, 10.0).map_err(|e| e.to_string())?;
    let t_f_ms = f.fading_period * 1e3;
    ensure((t_f_ms - 6.332).abs() <= 0.001, || {
        format!("T_f = {t_f_ms} ms")
    })?;
    ensure((f.doppler_freq - 158.0).abs() <= 1.0, || {
        format!("f_D = {} Hz", f.doppler_freq)
    })?;
    let cp = cyclic_prefix_samples(1536, 1);
    ensure(cp.long == 132 && cp.short == 106, || format!("{cp:?}"))?;
    let long_us = round_to(cp.long as f64 / cfg.f_samp * 1e6, 2);
    let short_us = round_to(cp.short as f64 / cfg.f_samp * 1e6, 2);
    ensure(long_us == 2.86 && short_us == 2.30, || {
        format!("CP {long_us} / {short_us} us")
    })?;
    ensure(
        f.long_guard_interval == 132.0 / 46.08e6 && f.guard_interval == 106.0 / 46.08e6,
        || "guard intervals do not use the pinned CP".into(),
    )?;
    Ok(format!(
        "T_f {t_f_ms:.4} ms, f_D {:.2} Hz, CP {long_us:.2}/{short_us:.2} us",
        f.doppler_freq
    ))
}

fn materials() -> Outcome {
    let f = 4.019_16e9;
    let rows = [
        (MaterialSpec::concrete(), 0.1372),
        (MaterialSpec::glass(), 0.0232),
        (MaterialSpec::metal(), 1e7),
        (MaterialSpec::vacuum(), 0.0),
    ];
    let mut shown = Vec::new();
    for (m, want) in rows {
        let p = evaluate_material(&m, f).map_err(|e| e.to_string())?;
        ensure(round_to(p.sigma_c, 4) == want, || {
            format!("{} sigma_c {}", m.name, p.sigma_c)
        })?;
        shown.push(format!("{} {}", m.name, round_to(p.sigma_c, 4)));
    }
    Ok(shown.join(", "))
}

fn convolution_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let l = rng.gen_range(2..=64);
        let taps: Vec<Complex64> = (0..l)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let x: Vec<Complex64> = (0..4 * 240)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut emu = Emulator::new(emulator_config(
            &[dense_cir(taps.clone(), SMALL_FSAMP)],
            l,
            4,
        ))
        .map_err(|e| e.to_string())?;
        let mut got = Vec::with_capacity(x.len());
        for (i, chunk) in x.chunks(240).enumerate() {
            let y = emu
                .convolve_slot(&IqSlot::new(i as u64, chunk.to_vec()))
                .map_err(|e| e.to_string())?;
            got.extend(y.samples);
        }
        let err = relative_l2(&got, &reference_convolution(&x, &[taps], x.len(), 1.0));
        worst = worst.max(err);
        ensure(err < 1e-6, || format!("case {case}: relative L2 {err:e}"))?;
    }
    for case in 0..100 {
        let l = rng.gen_range(2..=12);
        let l_sel = rng.gen_range(1..=l);
        let taps: Vec<Complex64> = (0..l)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let sorted =
            sort_truncate(&dense_cir(taps.clone(), 46.08e6), l_sel).map_err(|e| e.to_string())?;
        let best = (0u32..1 << l)
            .filter(|m| m.count_ones() as usize == l_sel)
            .map(|m| {
                (0..l)
                    .filter(|k| m & (1 << k) != 0)
                    .map(|k| taps[k].norm_sqr())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        ensure((sorted.retained_power - best).abs() <= 1e-12, || {
            format!(
                "subset case {case}: kept {} best {best}",
                sorted.retained_power
            )
        })?;
    }
    Ok(format!(
        "100 streams, worst relative L2 {worst:.1e}; 100 best-subset cases exact"
    ))
}

fn realtime_budget() -> Outcome {
    let fmt = SlotFormat::nr(1536, 46.08e6, 1).map_err(|e| e.to_string())?;
    let opts = BenchOptions {
        execution: Execution::Sequential,
        ..BenchOptions::default()
    };
    let run = |l_sel| bench(10_000, l_sel, fmt, 1, opts).map_err(|e| e.to_string());
    let r28 = run(28)?;
    let r1 = run(1)?;
    let r146 = run(146)?;
    let us = |d: std::time::Duration| d.as_secs_f64() * 1e6;
    let full = if r146.passes() {
        format!("L_sel=146 fits with headroom {:.2}x", r146.headroom())
    } else {
        format!("L_sel=146 exceeds budget ({:.1} us)", us(r146.stats.median))
    };
    ensure(r28.passes(), || {
        format!(
            "L_sel=28 median {:.1} us over {:.1} us; {full}",
            us(r28.stats.median),
            us(r28.budget)
        )
    })?;
    ensure(r1.stats.median < r28.stats.median, || {
        "L_sel=1 not faster than L_sel=28".into()
    })?;
    Ok(format!(
        "N_s=23040 L_sel=28 median {:.1} us (p99 {:.1}) vs 500 us; L_sel=1 {:.1} us; {full}",
        us(r28.stats.median),
        us(r28.stats.p99),
        us(r1.stats.median),
    ))
}

/// Street canyon along x with an occluding block at x = 60 and a far wall
/// that still reaches the shadowed stretch over the block.
fn street_canyon() -> Scene {
    let concrete = MaterialSpec::concrete();
    let facets = vec![
        Facet::ground(0.0, concrete.clone()),
        Facet::wall((-100.0, 30.0), (250.0, 30.0), (0.0, 30.0), concrete.clone()),
        Facet::wall(
            (-100.0, -30.0),
            (250.0, -30.0),
            (0.0, 30.0),
            MaterialSpec::glass(),
        ),
        Facet::wall((60.0, -30.0), (60.0, 30.0), (0.0, 12.0), concrete.clone()),
        Facet::wall((250.0, -30.0), (250.0, 30.0), (0.0, 40.0), concrete),
    ];
    Scene::new(facets, Vec3::new(0.0, 0.0, 25.0), 4.019_16e9, 2)
}

struct Segments {
    approach: std::ops::Range<usize>,
    stop: std::ops::Range<usize>,
    recede: std::ops::Range<usize>,
    shadow: std::ops::Range<usize>,
}

fn canyon_trace() -> (MobilityTrace, Segments) {
    let mut pos = Vec::new();
    let at = |x: f64| Vec3::new(x, -4.0, 1.5);
    let approach_start = pos.len();
    let mut x = -60.0;
    while x < 0.0 {
        pos.push(at(x));
        x += 3.0;
    }
    let stop_start = pos.len();
    for _ in 0..10 {
        pos.push(at(0.0));
    }
    let recede_start = pos.len();
    let mut x = 3.0;
    while x < 60.0 {
        pos.push(at(x));
        x += 3.0;
    }
    let shadow_start = pos.len();
    let mut x = 63.0;
    while x <= 90.0 {
        pos.push(at(x));
        x += 3.0;
    }
    let end = pos.len();
    let segments = Segments {
        approach: approach_start..stop_start,
        stop: stop_start..recede_start,
        recede: recede_start..shadow_start,
        shadow: shadow_start..end,
    };
    (MobilityTrace::new(0.1, pos).expect("valid trace"), segments)
}

fn scenario_structure() -> Outcome {
    let (trace, seg) = canyon_trace();
    let timeline = build_timeline(
        &street_canyon(),
        &trace,
        &CirConfig::default(),
        Execution::default(),
    )
    .map_err(|e| e.to_string())?;
    let rows = report(&timeline, 28, Execution::default()).map_err(|e| e.to_string())?;
    let mut csv_bytes = Vec::new();
    write_report_csv(&rows, &mut csv_bytes).map_err(|e| e.to_string())?;

    // Everything below reads the CSV, not the in-memory rows.
    let mut gain = Vec::new();
    let mut tap = Vec::new();
    let mut rdr = csv::Reader::from_reader(&csv_bytes[..]);
    for rec in rdr.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        gain.push(rec[1].parse::<f64>().map_err(|e| e.to_string())?);
        tap.push(rec[2].parse::<usize>().map_err(|e| e.to_string())?);
    }
    ensure(gain.len() == trace.positions.len(), || {
        "row count mismatch".into()
    })?;

    let plateau = &gain[seg.stop.clone()];
    ensure(plateau.iter().all(|&g| g == plateau[0]), || {
        format!("stop segment not flat: {plateau:?}")
    })?;

    let visible = seg.approach.start..seg.recede.end;
    let delays = &tap[visible];
    let turn = delays
        .iter()
        .enumerate()
        .min_by_key(|&(i, &k)| (k, i))
        .map(|(i, _)| i)
        .unwrap_or(0);
    ensure(turn > 0 && turn < delays.len() - 1, || {
        "no interior minimum".into()
    })?;
    ensure(delays[..=turn].windows(2).all(|w| w[0] >= w[1]), || {
        format!("approach delays not decreasing: {:?}", &delays[..=turn])
    })?;
    ensure(delays[turn..].windows(2).all(|w| w[0] <= w[1]), || {
        format!("recede delays not increasing: {:?}", &delays[turn..])
    })?;
    ensure(
        delays[0] > delays[turn] && *delays.last().unwrap() > delays[turn],
        || "flat V".into(),
    )?;

    let median = |v: &[f64]| {
        let mut v = v.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[v.len() / 2]
    };
    let drop = gain[seg.recede.end - 1] - gain[seg.shadow.start];
    ensure(drop >= 20.0, || format!("occlusion drop {drop:.1} dB"))?;
    let tail = median(&gain[seg.recede.end - 5..seg.recede.end]);
    let shadow = median(&gain[seg.shadow.clone()]);
    ensure(tail - shadow >= 20.0, || {
        format!("median shadow loss {:.1} dB", tail - shadow)
    })?;
    Ok(format!(
        "plateau {:.2} dB over {} snapshots, V-shape taps {}..{}..{}, occlusion drop {drop:.1} dB (median {:.1} dB)",
        plateau[0],
        plateau.len(),
        delays[0],
        delays[turn],
        delays.last().unwrap(),
        tail - shadow
    ))
}

fn noise_calibration() -> Outcome {
    let fmt = SlotFormat::nr(1536, 46.08e6, 1).map_err(|e| e.to_string())?;
    let mut cfg = emulator_config(&[dense_cir(vec![c(1.0, 0.0)], 46.08e6)], 1, 1000);
    cfg.slot_format = fmt;
    cfg.t_int = fmt.slot_duration * 1000.0;
    cfg.signal_gain_db = f64::NEG_INFINITY;
    cfg.noise_power_db = -100.0;
    cfg.rng_seed = 2024;
    let mut emu = Emulator::new(cfg).map_err(|e| e.to_string())?;
    let mut slot = IqSlot::new(0, vec![c(0.25, -0.5); fmt.samples_per_slot]);
    let mut out = vec![c(0.0, 0.0); fmt.samples_per_slot];
    let (mut sum, mut count) = (0.0, 0usize);
    while count < 1_000_000 {
        slot.slot_index = emu.next_slot_index();
        emu.convolve_slot_into(&slot, &mut out)
            .map_err(|e| e.to_string())?;
        sum += out.iter().map(|y| y.norm_sqr()).sum::<f64>();
        count += out.len();
    }
    let mean = sum / count as f64;
    ensure((mean / 1e-10 - 1.0).abs() < 0.01, || {
        format!("mean power {mean:e}")
    })?;
    Ok(format!("mean power {mean:.4e} over {count} samples"))
}

fn snapshot_scheduling() -> Outcome {
    let fmt = SlotFormat::nr(1536, 46.08e6, 1).map_err(|e| e.to_string())?;
    let cfg_cir = CirConfig::default();
    let mut first = vec![c(0.0, 0.0); cfg_cir.l_max()];
    let mut second = first.clone();
    first[0] = c(1.0, 0.0);
    second[7] = c(1.0, 0.0);
    let mut cfg = emulator_config(
        &[
            dense_cir(first, cfg_cir.f_samp),
            dense_cir(second, cfg_cir.f_samp),
        ],
        28,
        1,
    );
    cfg.slot_format = fmt;
    cfg.t_int = 0.1;
    let mut emu = Emulator::new(cfg).map_err(|e| e.to_string())?;
    ensure(emu.total_slots() == 400, || {
        format!("{} slots", emu.total_slots())
    })?;

    let n = fmt.samples_per_slot;
    let period = 1024;
    let mut samples = vec![c(0.0, 0.0); n];
    for k in (0..n).step_by(period) {
        samples[k] = c(1.0, 0.0);
    }
    let mut slot = IqSlot::new(0, samples);
    let mut out = vec![c(0.0, 0.0); n];
    let mut lags = Vec::with_capacity(400);
    for i in 0..400u64 {
        slot.slot_index = i;
        emu.convolve_slot_into(&slot, &mut out)
            .map_err(|e| e.to_string())?;
        let lag = out
            .iter()
            .position(|y| y.norm() > 0.5)
            .unwrap_or(usize::MAX);
        lags.push(lag);
    }
    let switch = lags.windows(2).position(|w| w[0] != w[1]).map(|i| i + 1);
    ensure(switch == Some(200), || format!("tap change at {switch:?}"))?;
    ensure(
        lags[..200].iter().all(|&l| l == 0) && lags[200..].iter().all(|&l| l == 7),
        || "unexpected lags".into(),
    )?;
    let past_end = emu.convolve_slot_into(&IqSlot::new(400, slot.samples.clone()), &mut out);
    ensure(past_end.is_err(), || "slot 400 accepted".into())?;
    Ok("impulse lag 0 for slots 0..199, 7 from slot 200".into())
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("KPI exactness", kpi_exactness),
        ("tap bound", tap_bound),
        ("OFDM feasibility anchors", ofdm_anchors),
        ("material conductivities", materials),
        ("convolution oracle equivalence", convolution_oracle),
        ("real-time budget", realtime_budget),
        ("scenario structure", scenario_structure),
        ("noise calibration", noise_calibration),
        ("snapshot scheduling", snapshot_scheduling),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name} ({detail}) [{secs:.2}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({detail}) [{secs:.2}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
