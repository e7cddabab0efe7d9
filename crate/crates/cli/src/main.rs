use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use angus_batch::{
    dbfs_to_rms, load_wav, normalize_rms, run_analysis, run_angus_sweep, run_control_sweep, save_wav, summarize,
    trim_center, Manifest, SampleFormat, SweepGrid, SweepOptions,
};
use angus_core::engine::{AngusParams, DEFAULT_FCUT_MULTIPLIER};
use angus_core::pipeline::{transform, DEFAULT_BLOCK_SIZE};
use angus_rt::{protocol, serve_control, start_stream, StreamConfig};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "angus", version, about = "Vocal roughness transform, jitter/shimmer analysis and pulse resynthesis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transform one file.
    Process(ProcessArgs),
    /// Transform every input at every (alpha, k) of a grid.
    Sweep(SweepArgs),
    /// Pulse-model resynthesis at one or more alpha_c levels.
    Control(ControlArgs),
    /// Jitter/shimmer of each input as CSV.
    Analyze(AnalyzeArgs),
    /// RMS-normalize inputs into a directory.
    Normalize(NormalizeArgs),
    /// Stream a file through the live engine with a control socket.
    Serve(ServeArgs),
}

#[derive(Args)]
struct ProcessArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 0.75)]
    alpha: f64,
    #[arg(long, default_value_t = 3)]
    k: u32,
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    #[arg(long, default_value_t = DEFAULT_FCUT_MULTIPLIER)]
    fcut_mult: f64,
    #[arg(long, default_value_t = DEFAULT_BLOCK_SIZE)]
    block: usize,
    /// f32 or pcm16
    #[arg(long, default_value = "f32")]
    format: SampleFormat,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long)]
    out_dir: PathBuf,
    /// Manifest path, default `<out-dir>/manifest.jsonl`.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, default_value = "f32")]
    format: SampleFormat,
    /// Normalize every output to this RMS level.
    #[arg(long, allow_hyphen_values = true)]
    normalize_dbfs: Option<f64>,
    /// Keep only the middle this-many seconds of each input.
    #[arg(long)]
    trim_center: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    /// `alpha=..;k=..;h=..` lists, or `default`.
    #[arg(long, default_value = "default")]
    grid: String,
    #[arg(long, default_value_t = DEFAULT_FCUT_MULTIPLIER)]
    fcut_mult: f64,
    #[command(flatten)]
    out: OutputArgs,
    /// WAV files or directories of them.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

#[derive(Args)]
struct ControlArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 0.75, 1.0])]
    alpha_c: Vec<f64>,
    /// Impose this recording's perturbation profile on every input.
    #[arg(long)]
    profile_from: Option<PathBuf>,
    #[command(flatten)]
    out: OutputArgs,
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Write rows here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Per-parameter-point means as CSV.
    #[arg(long)]
    summary: Option<PathBuf>,
    inputs: Vec<PathBuf>,
}

#[derive(Args)]
struct NormalizeArgs {
    #[arg(long, default_value_t = -20.0, allow_hyphen_values = true)]
    target_dbfs: f64,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    trim_center: Option<f64>,
    #[arg(long, default_value = "f32")]
    format: SampleFormat,
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    /// Control socket port on localhost; 0 picks a free one.
    #[arg(long)]
    port: Option<u16>,
    #[arg(long = "in")]
    input: String,
    #[arg(long = "out")]
    output: String,
    #[arg(long, default_value_t = DEFAULT_BLOCK_SIZE)]
    block: usize,
    /// Directory of static files for the browser panel.
    #[arg(long)]
    ui: Option<PathBuf>,
    /// Enable the lookahead limiter at this ceiling.
    #[arg(long, allow_hyphen_values = true)]
    limiter: Option<f64>,
    /// Pace processing at this multiple of real time instead of running flat out.
    #[arg(long)]
    pace: Option<f64>,
    #[arg(long, default_value = "paper-default")]
    preset: String,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    fcut_mult: Option<f64>,
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// `Ok(false)` means some files failed and were already listed on stderr.
fn run(command: Command) -> Result<bool> {
    match command {
        Command::Process(a) => process(a).map(|_| true),
        Command::Sweep(a) => sweep(a),
        Command::Control(a) => control(a),
        Command::Analyze(a) => analyze(a),
        Command::Normalize(a) => normalize(a),
        Command::Serve(a) => serve(a).map(|_| true),
    }
}

fn process(a: ProcessArgs) -> Result<()> {
    let mut params = AngusParams::single(a.alpha, a.k, a.h);
    params.fcut_multiplier = a.fcut_mult;
    let input = load_wav(&a.input)?;
    let out = transform(&input, &params, a.block)?;
    save_wav(&out, &a.output, a.format)?;
    Ok(())
}

/// Directories expand to the `.wav` files directly inside them, sorted.
fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .with_context(|| format!("reading {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

fn sweep_options(out: &OutputArgs) -> SweepOptions {
    let mut opts = SweepOptions::new(&out.out_dir);
    opts.format = out.format;
    opts.normalize_dbfs = out.normalize_dbfs;
    opts.trim_center = out.trim_center;
    opts
}

fn finish_manifest(manifest: Manifest, out: &OutputArgs) -> Result<bool> {
    let path = out.manifest.clone().unwrap_or_else(|| out.out_dir.join("manifest.jsonl"));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    manifest.save(&path)?;
    let failed: Vec<_> = manifest.failures().collect();
    println!("{} outputs, {} failures, manifest {}", manifest.outputs().count(), failed.len(), path.display());
    for r in &failed {
        eprintln!("failed: {}: {}", r.source, r.error.as_deref().unwrap_or("unknown error"));
    }
    Ok(failed.is_empty())
}

fn sweep(a: SweepArgs) -> Result<bool> {
    let grid = SweepGrid::parse(&a.grid)?;
    let mut opts = sweep_options(&a.out);
    opts.fcut_multiplier = a.fcut_mult;
    let manifest = run_angus_sweep(&expand_inputs(&a.inputs)?, &grid, &opts)?;
    finish_manifest(manifest, &a.out)
}

fn control(a: ControlArgs) -> Result<bool> {
    let opts = sweep_options(&a.out);
    let manifest = run_control_sweep(&expand_inputs(&a.inputs)?, &a.alpha_c, a.profile_from.as_deref(), &opts)?;
    finish_manifest(manifest, &a.out)
}

fn analyze(a: AnalyzeArgs) -> Result<bool> {
    let report = run_analysis(&expand_inputs(&a.inputs)?);
    match &a.csv {
        Some(path) => report.write_csv(create(path)?)?,
        None => report.write_csv(std::io::stdout().lock())?,
    }
    if let Some(path) = &a.summary {
        let mut w = create(path)?;
        use std::io::Write;
        writeln!(w, "algorithm,alpha,k,alpha_c,files,mean_jitter_pct,mean_shimmer_pct")?;
        for s in summarize(&report.rows) {
            let opt = |v: Option<String>| v.unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                opt(s.algorithm.map(|a| a.to_string())),
                opt(s.alpha.map(|v| v.to_string())),
                opt(s.k.map(|v| v.to_string())),
                opt(s.alpha_c.map(|v| v.to_string())),
                s.files,
                s.mean_jitter_pct,
                s.mean_shimmer_pct
            )?;
        }
    }
    for (file, err) in &report.failures {
        eprintln!("failed: {file}: {err}");
    }
    Ok(report.failures.is_empty())
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(std::io::BufWriter::new(f))
}

fn normalize(a: NormalizeArgs) -> Result<bool> {
    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let target = dbfs_to_rms(a.target_dbfs);
    let mut ok = true;
    for input in expand_inputs(&a.inputs)? {
        let result = (|| -> Result<PathBuf> {
            let block = load_wav(&input)?;
            let block = match a.trim_center {
                Some(s) => trim_center(&block, s),
                None => block,
            };
            let name = input.file_name().context("input has no file name")?;
            let out = a.out_dir.join(name);
            save_wav(&normalize_rms(&block, target)?, &out, a.format)?;
            Ok(out)
        })();
        match result {
            Ok(out) => println!("{}", out.display()),
            Err(e) => {
                eprintln!("failed: {}: {e:#}", input.display());
                ok = false;
            }
        }
    }
    Ok(ok)
}

fn serve(a: ServeArgs) -> Result<()> {
    let Some(mut params) = protocol::preset(&a.preset) else {
        bail!("unknown preset {:?}, expected one of {:?}", a.preset, protocol::PRESETS);
    };
    if let Some(alpha) = a.alpha {
        params.alpha = alpha;
    }
    if let Some(k) = a.k {
        params.modulators[0].k = k;
    }
    if let Some(h) = a.h {
        params.modulators[0].h = h;
    }
    if let Some(m) = a.fcut_mult {
        params.fcut_multiplier = m;
    }
    let mut config = StreamConfig::files("", "");
    config.input = a.input.parse()?;
    config.output = a.output.parse()?;
    config.block_size = a.block;
    config.limiter_ceiling = a.limiter;
    config.pace = a.pace;

    let session = start_stream(config, params)?;
    let server = match a.port {
        Some(port) => {
            let listener = TcpListener::bind(("127.0.0.1", port)).with_context(|| format!("binding port {port}"))?;
            let server = serve_control(listener, session.control(), Some(session.telemetry()), a.ui)?;
            eprintln!("control on ws://{}", server.local_addr());
            Some(server)
        }
        None => None,
    };
    let stats = session.wait()?;
    drop(server);
    println!(
        "{}",
        serde_json::json!({
            "samples": stats.samples,
            "blocks": stats.blocks,
            "sample_rate": stats.sample_rate,
            "min_margin": stats.min_margin,
            "mean_margin": stats.mean_margin,
            "telemetry_sent": stats.telemetry_sent,
            "telemetry_dropped": stats.telemetry_dropped,
        })
    );
    Ok(())
}
