//! Command-line front end for the `dicke` binary.

use std::fmt::Write as _;
use std::fs;
use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::analysis::{self, SweepProtocol, SweepResult, DEFAULT_RATIOS};
use crate::config::IonChainConfig;
use crate::dsl::{parse_schedule, ScheduleDocument};
use crate::dynamics::{AncillaOutcome, DEFAULT_NORM_TOL, DEFAULT_TRUNCATION_TOL, RNG_NAME};
use crate::plot::{Axis, LineChart, Series};
use crate::protocols::{self, FidelityModel, FrameMode, RunOptions, SimulationResult, Trace, REACHABILITY_TOL};

/// Trace samples per segment written by `dicke run`.
pub const TRACE_SAMPLES: usize = 40;
/// Basis states whose population never exceeds this are left out of `trace.svg`.
const PLOT_THRESHOLD: f64 = 1e-3;
const PLOT_MAX_SERIES: usize = 8;

#[derive(Debug, Parser)]
#[command(name = "dicke", version, about = "Selective Dicke-subspace pulse simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    #[value(name = "two-level")]
    TwoLevel,
    Symmetric,
    Full,
}

impl From<ModelArg> for FidelityModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::TwoLevel => FidelityModel::TwoLevel,
            ModelArg::Symmetric => FidelityModel::FullSymmetric,
            ModelArg::Full => FidelityModel::FullRegister,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FrameArg {
    Carry,
    Reset,
}

impl From<FrameArg> for FrameMode {
    fn from(f: FrameArg) -> Self {
        match f {
            FrameArg::Carry => FrameMode::Carry,
            FrameArg::Reset => FrameMode::Reset,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compile and execute a schedule file.
    Run {
        schedule: PathBuf,
        /// Forces every pulse onto this model.
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
        /// Overrides the schedule seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "carry")]
        frame: FrameArg,
        /// Skip trace.svg.
        #[arg(long)]
        no_plot: bool,
    },
    /// Infidelity against Ω₀/|Ω_eff| for a named protocol.
    Sweep {
        /// Schedule file; only its config stanza is used.
        config: PathBuf,
        /// `w` or `ladder:K`.
        #[arg(long)]
        protocol: String,
        /// Comma-separated, strictly increasing.
        #[arg(long, value_delimiter = ',')]
        ratios: Option<Vec<f64>>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Repeated ancilla readout after the excitation-number filter.
    Discriminate {
        /// Schedule file; only its config stanza is used.
        config: PathBuf,
        /// One `re [im]` Dicke coefficient per line, k = 0..N.
        #[arg(long)]
        coeffs: PathBuf,
        #[arg(long)]
        k0: usize,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        n0: usize,
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
    },
}

fn read_document(path: &Path) -> anyhow::Result<ScheduleDocument> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_schedule(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_config(path: &Path) -> anyhow::Result<IonChainConfig> {
    Ok(read_document(path)?.schedule.config)
}

/// Parses `re [im]` lines; blank lines and `#` comments are skipped.
pub fn parse_coefficients(text: &str) -> anyhow::Result<Vec<Complex64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() > 2 {
            bail!("line {}: expected `re [im]`, got {} fields", i + 1, fields.len());
        }
        let num = |s: &str| -> anyhow::Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .with_context(|| format!("line {}: malformed number `{s}`", i + 1))
        };
        let re = num(fields[0])?;
        let im = fields.get(1).map(|s| num(s)).transpose()?.unwrap_or(0.0);
        out.push(Complex64::new(re, im));
    }
    if out.is_empty() {
        bail!("no coefficients found");
    }
    Ok(out)
}

/// `time,<label>...` header followed by one row per sample.
pub fn trace_csv(trace: &Trace) -> String {
    let mut s = String::from("time");
    for label in &trace.labels {
        s.push(',');
        s.push_str(label);
    }
    s.push('\n');
    for (t, pops) in trace.times.iter().zip(&trace.populations) {
        let _ = write!(s, "{t:.16e}");
        for p in pops {
            let _ = write!(s, ",{p:.16e}");
        }
        s.push('\n');
    }
    s
}

pub fn trace_chart(trace: &Trace, title: &str) -> LineChart {
    let mut cols: Vec<(usize, f64)> = (0..trace.labels.len())
        .map(|c| (c, trace.populations.iter().map(|row| row[c]).fold(0.0, f64::max)))
        .filter(|(_, peak)| *peak > PLOT_THRESHOLD)
        .collect();
    cols.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    cols.truncate(PLOT_MAX_SERIES);
    cols.sort_by_key(|c| c.0);
    LineChart {
        title: title.to_string(),
        x: Axis::linear("time (1/|Ω_eff|)"),
        y: Axis::linear("population"),
        series: cols
            .into_iter()
            .map(|(c, _)| Series {
                label: trace.labels[c].clone(),
                points: trace.times.iter().zip(&trace.populations).map(|(t, row)| (*t, row[c])).collect(),
            })
            .collect(),
    }
}

fn outcome_name(o: AncillaOutcome) -> &'static str {
    match o {
        AncillaOutcome::AncillaExcited => "excited",
        AncillaOutcome::AncillaGround => "ground",
    }
}

/// Contents of `result.json`. Holds no wall-clock data, so reruns are identical.
pub fn result_json(doc: &ScheduleDocument, result: &SimulationResult) -> Value {
    let amplitudes: Vec<Value> = result
        .final_state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| json!({ "label": result.basis.label(i), "re": a.re, "im": a.im }))
        .collect();
    let measurements: Vec<Value> = result
        .measurements
        .iter()
        .map(|m| json!({ "outcome": outcome_name(m.outcome), "probability": m.probability }))
        .collect();
    let models: Vec<&str> = result.models.iter().map(|m| m.name()).collect();
    json!({
        "fidelity": result.headline_fidelity(),
        "fidelity_vs_ideal": result.fidelity_vs_ideal,
        "expectations": result.expectations,
        "amplitudes": amplitudes,
        "measurements": measurements,
        "total_duration": result.total_duration,
        "metadata": {
            "seed": result.seed,
            "n_ions": doc.schedule.config.n_ions(),
            "n_max": doc.schedule.config.n_max(),
            "basis": result.basis.to_string(),
            "evolution": "static-expm",
            "dt": Value::Null,
            "generator": RNG_NAME,
            "tolerances": {
                "norm": DEFAULT_NORM_TOL,
                "truncation": DEFAULT_TRUNCATION_TOL,
                "reachability": REACHABILITY_TOL,
            },
            "models": models,
            "frame": result.frame.name(),
            "config": doc.schedule.config,
        },
    })
}

/// `ratio,infidelity,wall_ms` with a header row.
pub fn sweep_csv(sweep: &SweepResult) -> String {
    let mut s = String::from("ratio,infidelity,wall_ms\n");
    for ((r, inf), ms) in sweep.axis.iter().zip(&sweep.infidelity).zip(&sweep.wall_ms) {
        let _ = writeln!(s, "{r:.16e},{inf:.16e},{ms:.16e}");
    }
    s
}

/// Log-log chart; zero infidelities are floored so they stay on the axis.
pub fn sweep_chart(sweep: &SweepResult) -> LineChart {
    LineChart {
        title: format!("{} selectivity, N = {}", sweep.protocol.name(), sweep.config.n_ions()),
        x: Axis::log("Ω₀/|Ω_eff|"),
        y: Axis::log("1 - F"),
        series: vec![Series {
            label: "infidelity".into(),
            points: sweep
                .axis
                .iter()
                .zip(&sweep.infidelity)
                .map(|(r, inf)| (*r, inf.max(1e-16)))
                .collect(),
        }],
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> anyhow::Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn run_cmd(
    schedule: &Path,
    model: Option<ModelArg>,
    seed: Option<u64>,
    out: &Path,
    frame: FrameArg,
    no_plot: bool,
) -> anyhow::Result<()> {
    let mut doc = read_document(schedule)?;
    if let Some(seed) = seed {
        doc.schedule.seed = seed;
    }
    let options = RunOptions {
        model: model.map(Into::into),
        frame: frame.into(),
        trace_samples: TRACE_SAMPLES,
    };
    let result = protocols::run_schedule(&doc.schedule, &options).context("running schedule")?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let trace = result.trace.as_ref().context("run produced no trace")?;
    write_file(out, "trace.csv", &trace_csv(trace))?;
    let mut body = serde_json::to_string_pretty(&result_json(&doc, &result))?;
    body.push('\n');
    write_file(out, "result.json", &body)?;
    if !no_plot {
        let title = schedule.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        write_file(out, "trace.svg", &trace_chart(trace, &title).to_svg()?)?;
    }
    println!(
        "fidelity {:.12} (vs ideal {:.12}), {} segments, output in {}",
        result.headline_fidelity(),
        result.fidelity_vs_ideal,
        result.models.len(),
        out.display()
    );
    Ok(())
}

fn sweep_cmd(config: &Path, protocol: &str, ratios: Option<Vec<f64>>, out: &Path) -> anyhow::Result<()> {
    let template = read_config(config)?;
    let protocol = SweepProtocol::parse(protocol)
        .with_context(|| format!("unknown protocol `{protocol}`, expected `w` or `ladder:K`"))?;
    let ratios = ratios.unwrap_or_else(|| DEFAULT_RATIOS.to_vec());
    let sweep = analysis::selectivity_sweep(&template, protocol, &ratios)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_file(out, "sweep.csv", &sweep_csv(&sweep))?;
    write_file(out, "sweep.svg", &sweep_chart(&sweep).to_svg()?)?;
    for (r, inf) in sweep.axis.iter().zip(&sweep.infidelity) {
        println!("ratio {r:>10}  infidelity {inf:.6e}");
    }
    Ok(())
}

fn discriminate_cmd(
    config: &Path,
    coeffs: &Path,
    k0: usize,
    n0: usize,
    trials: u64,
    seed: u64,
    model: Option<ModelArg>,
) -> anyhow::Result<()> {
    let config = read_config(config)?;
    let text = fs::read_to_string(coeffs).with_context(|| format!("reading {}", coeffs.display()))?;
    let c = parse_coefficients(&text).with_context(|| format!("parsing {}", coeffs.display()))?;
    let stats = protocols::discrimination_trials(&config, &c, k0, n0, model.map(Into::into), trials, seed)?;
    println!("{}", serde_json::to_string_pretty(&stats)?);
    Ok(())
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run {
            schedule,
            model,
            seed,
            out,
            frame,
            no_plot,
        } => run_cmd(&schedule, model, seed, &out, frame, no_plot),
        Command::Sweep {
            config,
            protocol,
            ratios,
            out,
        } => sweep_cmd(&config, &protocol, ratios, &out),
        Command::Discriminate {
            config,
            coeffs,
            k0,
            trials,
            seed,
            n0,
            model,
        } => discriminate_cmd(&config, &coeffs, k0, n0, trials, seed, model),
    }
}

fn use_color() -> bool {
    std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty()) && std::io::stderr().is_terminal()
}

/// Entry point for the binary: diagnostics go to stderr, failures exit with 1.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let prefix = if use_color() { "\x1b[1;31merror\x1b[0m" } else { "error" };
            eprintln!("{prefix}: {err:#}");
            ExitCode::FAILURE
        }
    }
}
