use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use wgqed::acceptance::{run_all, AcceptanceOptions};
use wgqed::analysis::{fit_exponential_rate, plateau_metric, AnalysisReport, DEFAULT_FIT_START};
use wgqed::scenario::{
    forcing_series, kernel_series, prepare, run_scenario, write_outputs, DerivedConstants, ScenarioConfig,
};
use wgqed::trace::{complex_series_csv, fmt_f64, DecayTrace, KERNEL_HEADER};
use wgqed::{Error, Result};

/// Emitter decay in a coupled-resonator waveguide.
#[derive(Parser)]
#[command(name = "wgqed", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its decay trace.
    Simulate(ConfigArgs),
    /// Tabulate the memory kernel `tau,re_G,im_G`.
    Kernel(ConfigArgs),
    /// Tabulate the forcing of the scenario's initial state, raw and averaged.
    Forcing(ConfigArgs),
    /// Run the acceptance suite; exits with 1 on any failure.
    Verify(VerifyArgs),
    /// Fit a rate (and optionally a plateau) to a trace CSV.
    Analyze(AnalyzeArgs),
    /// Run a scenario for several values of one parameter.
    Sweep(SweepArgs),
}

#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// `key = value` file or a metadata JSON from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// bare | virtual_bound | slow_decay | custom
    #[arg(long)]
    scenario: Option<String>,
    /// Coupling G0 in units of J.
    #[arg(long)]
    g0: Option<f64>,
    /// Cavity detuning omega_c - omega0 in units of J.
    #[arg(long)]
    detuning: Option<f64>,
    /// Lattice half-length N (2N+1 sites; default 800, auto-sized for slow_decay).
    #[arg(long)]
    n_half: Option<usize>,
    /// Half-width L of the bound-state packet.
    #[arg(long = "L", alias = "half-width")]
    half_width: Option<usize>,
    /// epsilon / gamma_R for the slow-decay state.
    #[arg(long)]
    eps_rel: Option<f64>,
    /// Time step in units of 1/J (default 0.02).
    #[arg(long)]
    dt: Option<f64>,
    /// Duration in units of 1/J (default 150).
    #[arg(long, alias = "t-max")]
    tmax: Option<f64>,
    /// Record every n-th step (default 5).
    #[arg(long)]
    sample_every: Option<usize>,
    /// exact | kspace | volterra | markov | analytic
    #[arg(long)]
    solver: Option<String>,
    /// target | series | averaged
    #[arg(long)]
    forcing: Option<String>,
    /// Averaging window for the forcing (default 2 pi / J).
    #[arg(long)]
    window: Option<f64>,
    /// JSON state file for the custom scenario.
    #[arg(long)]
    state: Option<PathBuf>,
    /// Allow runs past the edge-effect horizon.
    #[arg(long)]
    no_edge_guard: bool,
    /// Output CSV (stdout when omitted).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Metadata JSON (defaults to the CSV path with a .json extension).
    #[arg(long)]
    meta: Option<PathBuf>,
    /// Any other configuration key, as `key=value`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    extra: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => ScenarioConfig::from_path(path)?,
            None => ScenarioConfig::default(),
        };
        let mut set = |key: &str, value: Option<String>| -> Result<()> {
            match value {
                Some(v) => cfg.set(key, &v),
                None => Ok(()),
            }
        };
        set("scenario", self.scenario.clone())?;
        set("g0", self.g0.map(|v| v.to_string()))?;
        set("detuning", self.detuning.map(|v| v.to_string()))?;
        set("n_half", self.n_half.map(|v| v.to_string()))?;
        set("half_width", self.half_width.map(|v| v.to_string()))?;
        set("eps_rel", self.eps_rel.map(|v| v.to_string()))?;
        set("dt", self.dt.map(|v| v.to_string()))?;
        set("t_max", self.tmax.map(|v| v.to_string()))?;
        set("sample_every", self.sample_every.map(|v| v.to_string()))?;
        set("solver", self.solver.clone())?;
        set("forcing", self.forcing.clone())?;
        set("window", self.window.map(|v| v.to_string()))?;
        set("state", self.state.as_ref().map(|p| p.display().to_string()))?;
        set("out", self.out.as_ref().map(|p| p.display().to_string()))?;
        set("meta", self.meta.as_ref().map(|p| p.display().to_string()))?;
        if self.no_edge_guard {
            set("edge_guard", Some("false".into()))?;
        }
        for kv in &self.extra {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("--set expects key=value, got `{kv}`")))?;
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct VerifyArgs {
    /// Override the time step of every exact run.
    #[arg(long, default_value_t = 0.02)]
    dt: f64,
    /// Override the coupling G0 / J.
    #[arg(long, default_value_t = 0.3)]
    g0: f64,
    /// Print the individual checks of each criterion.
    #[arg(long, short)]
    verbose: bool,
    /// Also write the results as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Trace CSV with columns t,re_ca,im_ca,survival,norm.
    trace: PathBuf,
    /// Fit window `lo,hi` (default 5 to the end of the trace).
    #[arg(long, value_parser = parse_window)]
    window: Option<[f64; 2]>,
    /// Plateau length to test against.
    #[arg(long)]
    delta_t: Option<f64>,
    /// Expected amplitude rate.
    #[arg(long)]
    expect_rate: Option<f64>,
    /// Relative tolerance for --expect-rate.
    #[arg(long, default_value_t = 0.03)]
    tol: f64,
    /// Write the JSON report here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Configuration key to vary, e.g. `g0` or `L`.
    #[arg(long)]
    param: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<String>,
    /// Directory for per-run traces and `summary.csv`.
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    base: ConfigArgs,
}

fn parse_window(s: &str) -> std::result::Result<[f64; 2], String> {
    let (lo, hi) = s.split_once(',').ok_or("expected lo,hi")?;
    let p = |x: &str| x.trim().parse::<f64>().map_err(|e| e.to_string());
    Ok([p(lo)?, p(hi)?])
}

fn warn_if_strong(derived: &DerivedConstants) {
    if !derived.weak_coupling {
        eprintln!("warning: G0 > J; memory-kernel and golden-rule descriptions assume weak coupling");
    }
}

fn print_constants(derived: &DerivedConstants, to_stderr: bool) {
    for line in derived.lines() {
        if to_stderr {
            eprintln!("{line}");
        } else {
            println!("{line}");
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => match std::io::stdout().write_all(text.as_bytes()) {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
            other => other?,
        },
    }
    Ok(())
}

/// Fit window for sweep summaries: from the transient cutoff until the
/// survival first drops below 1e-2, past which the power-law tail and the
/// lattice ripple dominate.
fn summary_window(trace: &DecayTrace) -> [f64; 2] {
    let t_end = trace.times.last().copied().unwrap_or(0.0);
    let stop = trace
        .times
        .iter()
        .zip(&trace.survival)
        .find(|&(&t, &p)| t > DEFAULT_FIT_START && p < 1e-2)
        .map_or(t_end, |(&t, _)| t);
    [DEFAULT_FIT_START, stop]
}

fn simulate(args: &ConfigArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let output = run_scenario(&cfg)?;
    let derived = &output.prepared.derived;
    warn_if_strong(derived);
    match write_outputs(&output)? {
        Some((csv, meta)) => {
            print_constants(derived, false);
            println!("wrote {} and {}", csv.display(), meta.display());
        }
        None => {
            print_constants(derived, true);
            emit(None, &output.trace.to_csv())?;
        }
    }
    Ok(())
}

fn kernel(args: &ConfigArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let (taus, values) = kernel_series(&cfg)?;
    emit(cfg.out.as_deref(), &complex_series_csv(KERNEL_HEADER, &taus, &values))
}

fn forcing(args: &ConfigArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let prepared = prepare(&cfg)?;
    warn_if_strong(&prepared.derived);
    let (times, raw, avg) = forcing_series(&cfg)?;
    let mut text = String::from("t,re_F,im_F,re_F_avg,im_F_avg\n");
    for ((t, f), a) in times.iter().zip(&raw).zip(&avg) {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_f64(*t),
            fmt_f64(f.re),
            fmt_f64(f.im),
            fmt_f64(a.re),
            fmt_f64(a.im)
        ));
    }
    emit(cfg.out.as_deref(), &text)
}

fn verify(args: &VerifyArgs) -> Result<bool> {
    let opts = AcceptanceOptions {
        dt: args.dt,
        g0_over_j: args.g0,
    };
    let results = run_all(&opts);
    for r in &results {
        println!("{}", if args.verbose { r.report() } else { r.line() });
    }
    let ok = results.iter().all(|r| r.passed());
    let failed = results.iter().filter(|r| !r.passed()).count();
    println!("{} of {} criteria failed", failed, results.len());
    if let Some(path) = &args.json {
        fs::write(path, serde_json::to_string_pretty(&results)?)?;
    }
    Ok(ok)
}

fn analyze(args: &AnalyzeArgs) -> Result<bool> {
    let trace = DecayTrace::read_csv(&args.trace)?;
    let t_end = trace.times.last().copied().unwrap_or(0.0);
    let window = args.window.unwrap_or([DEFAULT_FIT_START, t_end]);
    let fit = fit_exponential_rate(&trace, window);
    let mut report = AnalysisReport::from_fit(fit.as_ref().ok());
    if let Err(e) = &fit {
        eprintln!("rate fit failed: {e}");
    }
    if let (Some(rate), Ok(f)) = (args.expect_rate, &fit) {
        report.check_relative("amplitude rate", f.rate_amplitude, rate, args.tol);
    }
    if let Some(delta_t) = args.delta_t {
        let p = plateau_metric(&trace, delta_t)?;
        report.plateau = Some(p);
        report.verdicts.push(wgqed::analysis::Verdict {
            name: "plateau".into(),
            passed: p.max_rel_dev < 0.05,
            detail: format!(
                "max relative deviation {:.4} on [0, {:.3}]",
                p.max_rel_dev,
                0.9 * delta_t
            ),
        });
    }
    let mut json = report.to_json()?;
    json.push('\n');
    emit(args.out.as_deref(), &json)?;
    Ok(fit.is_ok() && report.all_passed())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let base = ConfigArgs {
        out: None,
        meta: None,
        ..args.base.clone()
    }
    .resolve()?;
    let mut configs = Vec::with_capacity(args.values.len());
    for (i, value) in args.values.iter().enumerate() {
        let mut cfg = base.clone();
        cfg.set(&args.param, value)?;
        cfg.validate()?;
        cfg.out = Some(args.out_dir.join(format!("trace_{i:03}.csv")));
        configs.push(cfg);
    }
    fs::create_dir_all(&args.out_dir)?;
    let rows: Vec<Result<String>> = configs
        .par_iter()
        .zip(&args.values)
        .map(|(cfg, value)| {
            let output = run_scenario(cfg)?;
            write_outputs(&output)?;
            let d = &output.prepared.derived;
            let rate = fit_exponential_rate(&output.trace, summary_window(&output.trace))
                .map(|f| f.rate_amplitude)
                .unwrap_or(f64::NAN);
            Ok(format!(
                "{},{},{},{},{}",
                value,
                fmt_f64(d.gamma_r.unwrap_or(f64::NAN)),
                fmt_f64(d.c_a0_sq_exact),
                fmt_f64(rate),
                fmt_f64(d.edge_horizon)
            ))
        })
        .collect();
    let mut summary = format!("{},gamma_r,c_a0_sq_exact,rate_amplitude,edge_horizon\n", args.param);
    for row in rows {
        summary.push_str(&row?);
        summary.push('\n');
    }
    let path = args.out_dir.join("summary.csv");
    fs::write(&path, summary)?;
    println!("wrote {} runs and {}", configs.len(), path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate(a) => simulate(a).map(|_| true),
        Command::Kernel(a) => kernel(a).map(|_| true),
        Command::Forcing(a) => forcing(a).map(|_| true),
        Command::Verify(a) => verify(a),
        Command::Analyze(a) => analyze(a),
        Command::Sweep(a) => sweep(a).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
