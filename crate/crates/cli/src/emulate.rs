use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use num_complex::Complex64;
use owdt_core::cir::DEFAULT_L_SEL;
use owdt_core::io::iqframe::write_frame;
use owdt_core::io::{read_timeline, FrameReader, SampleFormat};
use owdt_core::{
    calibrate_signal_gain, Emulator, EmulatorConfig, Error, Execution, HistoryMode, IqSlot,
    SlotFormat,
};

use crate::EXIT_END_OF_SCENARIO;

/// Headroom below int16 full scale used by `--signal-gain-db auto`.
const AUTO_HEADROOM_DB: f64 = 5.0;

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum History {
    Carry,
    Zero,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum OutFormat {
    /// Same sample format as each input frame.
    Input,
    I16,
    F32,
}

#[derive(Args, Debug)]
pub struct EmulateArgs {
    #[arg(long)]
    timeline: PathBuf,
    #[arg(long, default_value_t = DEFAULT_L_SEL)]
    taps: usize,
    /// Signal gain in dB, or `auto` to normalise the strongest snapshot.
    #[arg(long, default_value = "auto", allow_negative_numbers = true)]
    signal_gain_db: String,
    /// Noise power in dB; `-inf` disables noise.
    #[arg(long, default_value_t = f64::NEG_INFINITY, allow_negative_numbers = true)]
    noise_db: f64,
    #[arg(long, env = "OWDT_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = History::Carry)]
    history: History,
    /// Input stream, `-` for stdin.
    #[arg(long = "in", default_value = "-")]
    input: String,
    /// Output stream, `-` for stdout.
    #[arg(long, default_value = "-")]
    out: String,
    /// Accept one TCP connection and use it for both directions instead of --in/--out.
    #[arg(long)]
    listen: Option<String>,
    /// Per-slot latency and clip counts as CSV.
    #[arg(long)]
    stats: Option<PathBuf>,
    #[arg(long, default_value_t = 1536)]
    fft: usize,
    #[arg(long, default_value_t = 1)]
    mu: u32,
    #[arg(long, value_enum, default_value_t = OutFormat::Input)]
    out_format: OutFormat,
    /// Multiplier applied before encoding output samples.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Index of the first slot in the stream.
    #[arg(long, default_value_t = 0)]
    start_slot: u64,
}

fn open_input(path: &str) -> Result<Box<dyn Read>> {
    Ok(if path == "-" {
        Box::new(io::stdin().lock())
    } else {
        Box::new(BufReader::new(
            File::open(path).with_context(|| format!("opening {path}"))?,
        ))
    })
}

fn open_output(path: &str) -> Result<Box<dyn Write>> {
    Ok(if path == "-" {
        Box::new(BufWriter::new(io::stdout().lock()))
    } else {
        Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {path}"))?,
        ))
    })
}

pub fn run(a: EmulateArgs) -> Result<ExitCode> {
    let timeline =
        read_timeline(&a.timeline).with_context(|| format!("reading {}", a.timeline.display()))?;
    let signal_gain_db = match a.signal_gain_db.as_str() {
        "auto" => calibrate_signal_gain(&timeline.snapshots, AUTO_HEADROOM_DB)?,
        g => g
            .parse::<f64>()
            .map_err(|_| Error::InvalidInput(format!("bad --signal-gain-db {g:?}")))?,
    };
    let cfg = EmulatorConfig {
        sorted_timeline: timeline.sorted(a.taps)?,
        t_int: timeline.t_int,
        slot_format: SlotFormat::nr(a.fft, timeline.config.f_samp, a.mu)?,
        signal_gain_db,
        noise_power_db: a.noise_db,
        rng_seed: a.seed,
        history_mode: match a.history {
            History::Carry => HistoryMode::Carry,
            History::Zero => HistoryMode::Zero,
        },
    };
    let mut emu = Emulator::with_execution(cfg, Execution::default())?;
    emu.seek(a.start_slot);
    eprintln!(
        "emulating {} slots, signal gain {signal_gain_db:.2} dB",
        emu.total_slots()
    );

    let (input, output): (Box<dyn Read>, Box<dyn Write>) = match &a.listen {
        Some(addr) => {
            let listener = TcpListener::bind(addr).with_context(|| format!("binding {addr}"))?;
            eprintln!("listening on {}", listener.local_addr()?);
            let (stream, peer) = listener.accept()?;
            eprintln!("connected to {peer}");
            stream.set_nodelay(true)?;
            (Box::new(stream.try_clone()?), Box::new(stream))
        }
        None => (open_input(&a.input)?, open_output(&a.out)?),
    };
    let mut stats = match &a.stats {
        Some(path) => {
            let mut w = csv::Writer::from_path(path)
                .with_context(|| format!("creating {}", path.display()))?;
            w.write_record(["slot_index", "snapshot", "latency_us", "clipped"])?;
            Some(w)
        }
        None => None,
    };

    let mut output = output;
    let mut buf = vec![Complex64::new(0.0, 0.0); emu.config().slot_format.samples_per_slot];
    let mut ended = None;
    let mut count = 0u64;
    for frame in FrameReader::new(input) {
        let frame = frame?;
        let start = Instant::now();
        match emu.convolve_slot_into(&frame.slot, &mut buf) {
            Ok(()) => {}
            Err(Error::EndOfScenario { slot_index }) => {
                ended = Some(slot_index);
                break;
            }
            Err(e) => return Err(e.into()),
        }
        let latency = start.elapsed();
        let format = match a.out_format {
            OutFormat::Input => frame.format,
            OutFormat::I16 => SampleFormat::I16,
            OutFormat::F32 => SampleFormat::F32,
        };
        let slot = IqSlot::new(frame.slot.slot_index, std::mem::take(&mut buf));
        let clipped = write_frame(&mut output, &slot, format, a.scale)?;
        output.flush()?;
        buf = slot.samples;
        if let Some(w) = stats.as_mut() {
            w.write_record([
                slot.slot_index.to_string(),
                emu.snapshot_for(slot.slot_index).to_string(),
                format!("{:.3}", latency.as_secs_f64() * 1e6),
                clipped.to_string(),
            ])?;
        }
        count += 1;
    }
    output.flush()?;
    if let Some(w) = stats.as_mut() {
        w.flush()?;
    }
    match ended {
        Some(slot) => {
            eprintln!("end of scenario at slot {slot} after {count} slots");
            Ok(ExitCode::from(EXIT_END_OF_SCENARIO))
        }
        None => {
            eprintln!("processed {count} slots");
            Ok(ExitCode::SUCCESS)
        }
    }
}
