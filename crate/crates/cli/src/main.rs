use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use owdt_core::bench::{bench, BenchOptions};
use owdt_core::cir::{DEFAULT_F_SAMP, DEFAULT_MAX_DELAY_SPREAD};
use owdt_core::io::tables::{read_profiles, write_path_gain_csv, write_pdp_csv, write_report_csv};
use owdt_core::io::{
    read_scene, read_timeline, read_trace, write_timeline, CIRT_VERSION, IQ_VERSION,
};
use owdt_core::kpi::{
    effective_throughput, max_bitrate, mcs_lookup, ofdm_feasibility, tdd_occupancy, Direction,
    LinkConfig, TddPattern,
};
use owdt_core::materials::MaterialSpec;
use owdt_core::{
    build_timeline, discretize, evaluate_material, report, CirConfig, CirTimeline, Error,
    Execution, SlotFormat,
};

mod emulate;

const EXIT_OTHER: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_PRECONDITION: u8 = 3;
const EXIT_END_OF_SCENARIO: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "owdt",
    about = "Ray-traced channel emulation for wireless digital twins"
)]
struct Cli {
    /// Run per-snapshot work on one thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print permittivity and conductivity of a material at a frequency.
    Materials(MaterialsArgs),
    /// Ray-trace a mobility trace through a scene into a CIR timeline.
    Trace(TraceArgs),
    /// Discretize delay profiles from CSV into a CIR timeline.
    Cir(CirArgs),
    /// Convolve a framed IQ stream with a CIR timeline in real time.
    Emulate(emulate::EmulateArgs),
    /// Peak and effective NR throughput.
    Kpi(KpiArgs),
    /// Evaluate the OFDM feasibility chain.
    CheckOfdm(CheckOfdmArgs),
    /// Per-snapshot path gain, delay spread and power delay profile tables.
    Report(ReportArgs),
    /// Measure per-slot convolution latency against the slot budget.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct MaterialsArgs {
    /// Built-in material; all of them when omitted.
    #[arg(long)]
    material: Option<String>,
    #[arg(long, default_value_t = 4.019_16e9)]
    freq_hz: f64,
}

#[derive(Args, Debug)]
struct TraceArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the scene's reflection depth.
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_F_SAMP)]
    fsamp: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_DELAY_SPREAD)]
    max_delay: f64,
}

#[derive(Args, Debug)]
struct CirArgs {
    /// Rows `re,im,delay_s`, optionally prefixed by a `snapshot` column.
    #[arg(long)]
    profile: PathBuf,
    #[arg(long, default_value_t = DEFAULT_F_SAMP)]
    fsamp: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_DELAY_SPREAD)]
    max_delay: f64,
    /// Snapshot interval in seconds.
    #[arg(long, default_value_t = 0.1)]
    t_int: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Dir {
    Dl,
    Ul,
}

impl From<Dir> for Direction {
    fn from(d: Dir) -> Self {
        match d {
            Dir::Dl => Direction::Dl,
            Dir::Ul => Direction::Ul,
        }
    }
}

#[derive(Args, Debug)]
struct KpiArgs {
    #[arg(long)]
    mcs: u8,
    #[arg(long)]
    bler: f64,
    #[arg(long, value_enum)]
    dir: Dir,
    #[arg(long, default_value = "DDDSU")]
    pattern: String,
    /// Special slot split `dl,guard,ul` in symbols.
    #[arg(long, default_value = "6,4,4", value_delimiter = ',', num_args = 3)]
    special: Vec<u32>,
    #[arg(long, default_value_t = 106)]
    nprb: u32,
    #[arg(long, default_value_t = 1)]
    mu: u32,
    #[arg(long, default_value_t = 0.14)]
    oh_dl: f64,
    #[arg(long, default_value_t = 0.08)]
    oh_ul: f64,
}

#[derive(Args, Debug)]
struct CheckOfdmArgs {
    /// UE speed in m/s.
    #[arg(long)]
    speed: f64,
    #[arg(long, default_value_t = 4.019_16e9)]
    freq_hz: f64,
    #[arg(long, default_value_t = 1)]
    mu: u32,
    #[arg(long, default_value_t = 1536)]
    fft: usize,
    #[arg(long, default_value_t = DEFAULT_F_SAMP)]
    fsamp: f64,
    /// RMS delay spread in seconds.
    #[arg(long)]
    sigma_tau: Option<f64>,
    /// Ratio that `a << b` requires.
    #[arg(long, default_value_t = 10.0)]
    margin: f64,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long)]
    timeline: PathBuf,
    #[arg(long, default_value_t = 28)]
    taps: usize,
    /// Report CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Power delay profile matrix CSV.
    #[arg(long)]
    pdp: Option<PathBuf>,
    /// Path gain vs time CSV.
    #[arg(long)]
    path_gain: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value_t = 10_000)]
    slots: usize,
    #[arg(long, default_value = "28", value_delimiter = ',')]
    taps: Vec<usize>,
    #[arg(long, default_value_t = 1536)]
    fft: usize,
    #[arg(long, default_value_t = DEFAULT_F_SAMP)]
    fsamp: f64,
    #[arg(long, default_value_t = 1)]
    mu: u32,
    #[arg(long, env = "OWDT_SEED", default_value_t = 0)]
    seed: u64,
    /// Noise power in dB; `-inf` times the convolution alone.
    #[arg(long, default_value_t = -100.0, allow_negative_numbers = true)]
    noise_db: f64,
}

fn main() -> ExitCode {
    let version = format!(
        "{} (CIRT format v{CIRT_VERSION}, OWIQ format v{IQ_VERSION})",
        env!("CARGO_PKG_VERSION")
    );
    let matches = Cli::command().version(version).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match run(cli.command, exec) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("owdt: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let Some(core) = err.chain().find_map(|e| e.downcast_ref::<Error>()) else {
        return EXIT_OTHER;
    };
    let mut core = core;
    while let Error::Snapshot { source, .. } = core {
        core = source;
    }
    match core {
        Error::Parse { .. } | Error::Format { .. } | Error::Framing(_) => EXIT_PARSE,
        Error::EndOfScenario { .. } => EXIT_END_OF_SCENARIO,
        Error::Io(_) => EXIT_OTHER,
        _ => EXIT_PRECONDITION,
    }
}

fn run(command: Command, exec: Execution) -> Result<ExitCode> {
    match command {
        Command::Materials(a) => materials(a),
        Command::Trace(a) => trace(a, exec),
        Command::Cir(a) => cir(a, exec),
        Command::Emulate(a) => return emulate::run(a),
        Command::Kpi(a) => kpi(a),
        Command::CheckOfdm(a) => check_ofdm(a),
        Command::Report(a) => report_cmd(a, exec),
        Command::Bench(a) => bench_cmd(a),
    }?;
    Ok(ExitCode::SUCCESS)
}

fn materials(a: MaterialsArgs) -> Result<()> {
    let specs = match &a.material {
        Some(name) => vec![MaterialSpec::builtin_by_name(name)
            .ok_or_else(|| Error::InvalidInput(format!("unknown material {name:?}")))?],
        None => MaterialSpec::builtins(),
    };
    let mut out = io::stdout().lock();
    writeln!(out, "material\teps_r\tsigma_c")?;
    for spec in specs {
        let p = evaluate_material(&spec, a.freq_hz)?;
        writeln!(out, "{}\t{}\t{}", spec.name, p.eps_r, p.sigma_c)?;
    }
    Ok(())
}

fn trace(a: TraceArgs, exec: Execution) -> Result<()> {
    let mut scene =
        read_scene(&a.scene).with_context(|| format!("reading {}", a.scene.display()))?;
    if let Some(depth) = a.max_depth {
        scene.max_depth = depth;
    }
    let trace = read_trace(&a.trace).with_context(|| format!("reading {}", a.trace.display()))?;
    let cfg = CirConfig::new(a.fsamp, a.max_delay)?;
    let timeline = build_timeline(&scene, &trace, &cfg, exec)?;
    write_timeline(&timeline, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    eprintln!(
        "{} snapshots x {} taps, {:.1} s -> {}",
        timeline.snapshots.len(),
        cfg.l_max(),
        timeline.duration(),
        a.out.display()
    );
    Ok(())
}

fn cir(a: CirArgs, exec: Execution) -> Result<()> {
    let file =
        File::open(&a.profile).with_context(|| format!("opening {}", a.profile.display()))?;
    let profiles = read_profiles(file, &a.profile.display().to_string(), a.t_int)?;
    let cfg = CirConfig::new(a.fsamp, a.max_delay)?;
    let snapshots = exec.try_map(&profiles, |i, p| {
        discretize(p, &cfg).map_err(|e| e.at_snapshot(i))
    })?;
    let timeline = CirTimeline {
        config: cfg,
        t_int: a.t_int,
        snapshots,
    };
    timeline.validate()?;
    write_timeline(&timeline, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    eprintln!(
        "{} snapshots x {} taps -> {}",
        timeline.snapshots.len(),
        cfg.l_max(),
        a.out.display()
    );
    Ok(())
}

fn kpi(a: KpiArgs) -> Result<()> {
    let special = (a.special[0], a.special[1], a.special[2]);
    let cfg = LinkConfig {
        numerology_mu: a.mu,
        n_prb: a.nprb,
        overhead_dl: a.oh_dl,
        overhead_ul: a.oh_ul,
        tdd: TddPattern::parse(&a.pattern, special)?,
        ..LinkConfig::reference()
    };
    let dir = Direction::from(a.dir);
    let mcs = mcs_lookup(a.mcs)?;
    let rb = max_bitrate(&cfg, &mcs, dir)?;
    let alpha = tdd_occupancy(&cfg.tdd).alpha(dir);
    let t_eff = effective_throughput(&cfg, &mcs, a.bler, dir)?;
    let mut out = io::stdout().lock();
    writeln!(out, "spectral_eff\t{}", mcs.spectral_eff)?;
    writeln!(out, "r_b_mbps\t{rb:.6}")?;
    writeln!(out, "alpha\t{alpha:.6}")?;
    writeln!(out, "t_eff_mbps\t{t_eff:.6}")?;
    Ok(())
}

fn check_ofdm(a: CheckOfdmArgs) -> Result<()> {
    let cfg = LinkConfig {
        numerology_mu: a.mu,
        fft_size: a.fft,
        f_samp: a.fsamp,
        carrier_freq: a.freq_hz,
        ..LinkConfig::reference()
    };
    let f = ofdm_feasibility(&cfg, a.sigma_tau, a.speed, a.margin)?;
    println!("{f}");
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn report_cmd(a: ReportArgs, exec: Execution) -> Result<()> {
    let timeline =
        read_timeline(&a.timeline).with_context(|| format!("reading {}", a.timeline.display()))?;
    let rows = report(&timeline, a.taps, exec)?;
    match &a.out {
        Some(path) => write_report_csv(&rows, create(path)?)?,
        None => write_report_csv(&rows, io::stdout().lock())?,
    }
    if let Some(path) = &a.pdp {
        write_pdp_csv(&timeline, create(path)?)?;
    }
    if let Some(path) = &a.path_gain {
        write_path_gain_csv(&rows, create(path)?)?;
    }
    Ok(())
}

fn bench_cmd(a: BenchArgs) -> Result<()> {
    if a.taps.is_empty() {
        bail!(Error::InvalidInput("no tap counts given".into()));
    }
    let format = SlotFormat::nr(a.fft, a.fsamp, a.mu)?;
    let opts = BenchOptions {
        noise_power_db: a.noise_db,
        execution: Execution::Sequential,
        ..BenchOptions::default()
    };
    let us = |d: std::time::Duration| d.as_secs_f64() * 1e6;
    let mut out = io::stdout().lock();
    writeln!(
        out,
        "l_sel\tslots\tsamples\tmin_us\tmedian_us\tp99_us\tmax_us\tbudget_us\theadroom\tverdict"
    )?;
    for &l_sel in &a.taps {
        let r = bench(a.slots, l_sel, format, a.seed, opts)?;
        let s = r.stats;
        writeln!(
            out,
            "{l_sel}\t{}\t{}\t{:.1}\t{:.1}\t{:.1}\t{:.1}\t{:.1}\t{:.2}\t{}",
            s.count,
            r.samples_per_slot,
            us(s.min),
            us(s.median),
            us(s.p99),
            us(s.max),
            us(r.budget),
            r.headroom(),
            if r.passes() { "pass" } else { "over-budget" }
        )?;
    }
    Ok(())
}
