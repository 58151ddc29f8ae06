//! Command-line driver.
//!
//! Exit codes: 0 success, 1 validation failure, 2 parse failure (bad
//! flags, unreadable or malformed input files), 3 numerical failure.

use crate::analysis::{
    self, AnalysisConfig, EchoReport, EfficiencyMetric,
};
use crate::ensemble::{self, build_grid, SweepOptions};
use crate::model::{
    resolve, resolve_durations, validate, ConfigFile, ResolvedSequence, ValidationReport,
};
use crate::output::{self, Diagnostics, RunSummary, ScanPoint};
use crate::propagate::{cross_validate, Integrator, PropagateOptions};
use crate::scenarios::{self, Scenario, ScenarioParams, Variant, DATA_DUR_US};
use crate::seqdsl;
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "raman-echo",
    about = "Spin-echo storage simulator for Raman-driven atomic ensembles",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario or sequence file and write trace + summary.
    Run(RunArgs),
    /// Sweep the rephasing delay and fit the storage decay time.
    Scan(ScanArgs),
    /// Check a scenario or sequence file without running it.
    Validate(SourceArgs),
    /// Turn a trace CSV into a self-contained gnuplot script.
    EmitPlot(EmitPlotArgs),
}

#[derive(Debug, Args, Clone)]
pub struct SourceArgs {
    /// Built-in scenario tag: fig1a, fig1b, fig1c, fig1d, fig2, weak_probe.
    #[arg(long)]
    pub scenario: Option<Variant>,
    /// Pulse sequence file (.qps). Mutually exclusive with --scenario.
    #[arg(long)]
    pub seq: Option<PathBuf>,
    /// Level-system JSON used with --seq; omitting it gives the default
    /// three-level system.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Rephasing pulse area, e.g. "2pi" or "2".
    #[arg(long)]
    pub area: Option<String>,
    /// Readout pulse area ending the locked hold, e.g. "3pi".
    #[arg(long = "final-area")]
    pub final_area: Option<String>,
    /// Rephasing pulse start time in us.
    #[arg(long)]
    pub delay: Option<f64>,
    /// Locked hold duration in us.
    #[arg(long = "lock-time")]
    pub lock_time: Option<f64>,
    /// Probe attenuation for the weak-probe scenario.
    #[arg(long)]
    pub attenuation: Option<f64>,
    /// Ground coherence decay rate gamma21 in kHz.
    #[arg(long)]
    pub gamma21: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Trace CSV destination (stdout section omitted when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run summary JSON destination (stdout when absent).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// RK4 step in us.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value = "exact")]
    pub integrator: Integrator,
    /// Keep the full trace of the member at this detuning (repeatable).
    #[arg(long = "retain-delta", allow_negative_numbers = true)]
    pub retain_delta: Vec<f64>,
    /// Efficiency definition.
    #[arg(long, default_value = "mirror-point")]
    pub metric: MetricArg,
    /// Worker threads for the ensemble sweep (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Rephasing delays to sweep, comma separated, in us.
    #[arg(long, value_delimiter = ',')]
    pub delays: Vec<f64>,
    #[arg(long)]
    pub gamma21: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value = "exact")]
    pub integrator: Integrator,
    #[arg(long, default_value = "mirror-point")]
    pub metric: MetricArg,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EmitPlotArgs {
    /// Trace CSV produced by `run`.
    pub csv: PathBuf,
    /// Scenario tag selecting the panel layout.
    #[arg(long, default_value = "fig1a")]
    pub scenario: Variant,
    /// Script destination (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricArg {
    MirrorPoint,
    PeakOverBitEnd,
}

impl std::str::FromStr for MetricArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mirror-point" | "mirror_point" => Ok(MetricArg::MirrorPoint),
            "peak-over-bit-end" | "peak_over_bit_end" => Ok(MetricArg::PeakOverBitEnd),
            other => Err(format!(
                "unknown metric '{other}' (expected mirror-point or peak-over-bit-end)"
            )),
        }
    }
}

impl From<MetricArg> for EfficiencyMetric {
    fn from(m: MetricArg) -> EfficiencyMetric {
        match m {
            MetricArg::MirrorPoint => EfficiencyMetric::MirrorPoint,
            MetricArg::PeakOverBitEnd => EfficiencyMetric::PeakOverBitEnd,
        }
    }
}

pub fn run_cli() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Scan(args) => cmd_scan(args),
        Command::Validate(args) => cmd_validate(args),
        Command::EmitPlot(args) => cmd_emit_plot(args),
    }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))
}

fn write_output(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Numerical(format!("cannot write {}: {e}", path.display())))
}

fn parse_area(text: &str, flag: &str) -> Result<f64, CliError> {
    let trimmed = text.trim();
    let body = trimmed
        .strip_suffix("pi")
        .map(str::trim)
        .unwrap_or(trimmed);
    body.parse::<f64>()
        .map_err(|_| CliError::Parse(format!("{flag} expects a number of pi, got '{text}'")))
}

fn scenario_params(args: &SourceArgs, variant: Variant) -> Result<ScenarioParams, CliError> {
    let mut params = ScenarioParams::new(variant);
    if let Some(area) = &args.area {
        params.area_pi = parse_area(area, "--area")?;
    }
    if let Some(area) = &args.final_area {
        params.final_area_pi = parse_area(area, "--final-area")?;
    }
    if let Some(delay) = args.delay {
        params.delay_us = delay;
    }
    if let Some(lock) = args.lock_time {
        params.lock_time_us = lock;
    }
    if let Some(att) = args.attenuation {
        params.attenuation = att;
    }
    if let Some(g21) = args.gamma21 {
        params.gamma21_khz = g21;
    }
    Ok(params)
}

fn report_text(report: &ValidationReport) -> String {
    report
        .issues
        .iter()
        .map(|issue| format!("{issue}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Build the scenario from either a tag or a sequence file, validate it
/// and resolve all pulse areas to durations.
fn load_scenario(args: &SourceArgs) -> Result<(Scenario, ResolvedSequence), CliError> {
    if args.scenario.is_some() && args.seq.is_some() {
        return Err(CliError::Validation(
            "--scenario and --seq are mutually exclusive".into(),
        ));
    }
    let scenario = match (&args.scenario, &args.seq) {
        (Some(variant), None) => {
            let params = scenario_params(args, *variant)?;
            scenarios::build(&params).map_err(|e| CliError::Validation(e.to_string()))?
        }
        (None, Some(path)) => {
            let text = read_input(path)?;
            let sequence = seqdsl::parse(&text).map_err(|e| {
                CliError::Parse(format!("{}: {e}", path.display()))
            })?;
            let (system, ensemble) = match &args.config {
                Some(cfg_path) => {
                    let cfg_text = read_input(cfg_path)?;
                    let cfg: ConfigFile = serde_json::from_str(&cfg_text).map_err(|e| {
                        CliError::Parse(format!("{}: {e}", cfg_path.display()))
                    })?;
                    let (system, ensemble, _) = cfg
                        .to_parts()
                        .map_err(|e| CliError::Validation(e.to_string()))?;
                    (system, ensemble)
                }
                None => (
                    crate::model::LevelSystem::three_level(args.gamma21.unwrap_or(1.0)),
                    crate::model::EnsembleSpec::default(),
                ),
            };
            let params = scenario_params(args, Variant::Custom)?;
            Scenario {
                system,
                sequence,
                ensemble,
                params,
            }
        }
        (None, None) => {
            return Err(CliError::Validation(
                "give either --scenario <tag> or --seq <file.qps>".into(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("rejected above"),
    };
    let report = validate(&scenario.system, &scenario.sequence, &scenario.ensemble);
    if report.has_errors() {
        return Err(CliError::Validation(report_text(&report)));
    }
    let resolved = resolve_durations(&scenario.sequence)
        .and_then(|seq| resolve(&seq))
        .map_err(|e| CliError::Validation(e.to_string()))?;
    Ok((scenario, resolved))
}

fn propagate_options(dt: Option<f64>, integrator: Integrator) -> PropagateOptions {
    let mut opts = PropagateOptions {
        integrator,
        ..PropagateOptions::default()
    };
    if let Some(dt) = dt {
        opts.dt_us = dt;
    }
    opts
}

fn with_pool<T: Send>(
    threads: Option<usize>,
    work: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<T, CliError> {
    match threads {
        None => work(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| CliError::Validation(format!("cannot build thread pool: {e}")))?;
            pool.install(work)
        }
    }
}

/// The echo-bearing observable: the optical-echo scenario reads the
/// excited-state coherence, everything else the spin coherence.
fn echo_signal(scenario: Variant, trace: &ensemble::EnsembleTrace) -> Vec<f64> {
    match scenario {
        Variant::Fig1b => trace.p13.iter().map(|z| z.im.abs()).collect(),
        _ => trace.abs_s12(),
    }
}

fn try_echo_report(
    variant: Variant,
    trace: &ensemble::EnsembleTrace,
    resolved: &ResolvedSequence,
    metric: EfficiencyMetric,
) -> Option<EchoReport> {
    let cfg = AnalysisConfig {
        metric,
        ..AnalysisConfig::default()
    };
    let signal = echo_signal(variant, trace);
    analysis::echo_report(&trace.times, &signal, resolved, &cfg).ok()
}

fn efficiencies(
    variant: Variant,
    trace: &ensemble::EnsembleTrace,
    resolved: &ResolvedSequence,
    metric: EfficiencyMetric,
) -> std::collections::BTreeMap<String, f64> {
    let mut out = std::collections::BTreeMap::new();
    let Ok((c0, c1)) = analysis::rephase_span(resolved) else {
        return out;
    };
    let signal = echo_signal(variant, trace);
    for bit in analysis::bit_windows(resolved) {
        let eff = analysis::retrieval_efficiency(&trace.times, &signal, &bit, c0, c1, metric);
        out.insert(bit.label.clone(), eff);
    }
    out
}

fn retained_path(out: &Path, delta: f64) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trace".into());
    let ext = out
        .extension()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    out.with_file_name(format!("{stem}_delta{delta:+}.{ext}"))
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let (scenario, resolved) = load_scenario(&args.source)?;
    let variant = scenario.params.variant;
    let opts = propagate_options(args.dt, args.integrator);
    let (grid, grid_warning) = build_grid(&scenario.ensemble);
    let mut retained = scenario.params.retained_deltas_khz.clone();
    retained.extend(args.retain_delta.iter().copied());
    retained.sort_by(f64::total_cmp);
    retained.dedup();
    let sweep_opts = SweepOptions {
        propagate: opts,
        retained_deltas_khz: retained,
    };

    let system = scenario.system.clone();
    let seq = resolved.clone();
    let trace = with_pool(args.threads, move || {
        ensemble::sweep(&system, &seq, &grid, &sweep_opts)
            .map_err(|e| CliError::Numerical(e.to_string()))
    })?;

    let metric: EfficiencyMetric = args.metric.into();
    let mut summary = RunSummary::new(variant, scenario.params.clone());
    summary.integrator = args.integrator.to_string();
    summary.dt_us = opts.dt_us;
    summary.sample_interval_us = opts.sample_interval_us;
    summary.echo_report = try_echo_report(variant, &trace, &resolved, metric);
    summary.efficiencies = efficiencies(variant, &trace, &resolved, metric);
    if let Some(warning) = grid_warning {
        summary.warnings.push(warning);
    }
    if let Some(report) = &summary.echo_report {
        for echo in &report.echoes {
            if echo.contaminated {
                summary.warnings.push(format!(
                    "{} efficiency {:.4} exceeds {}: cross-write contamination at its mirror point",
                    echo.label,
                    echo.efficiency,
                    analysis::CONTAMINATION_LIMIT
                ));
            }
        }
    }

    let cross_dev = cross_validate(
        &scenario.system,
        &resolved,
        10.0,
        opts.dt_us,
        opts.sample_interval_us,
    )
    .map_err(|e| CliError::Numerical(e.to_string()))?;
    summary.diagnostics = Diagnostics {
        max_trace_drift: trace.max_trace_drift,
        max_hermiticity_defect: trace.max_hermiticity_defect,
        cross_validation_dev: Some(cross_dev),
    };
    summary.wall_time_s = started.elapsed().as_secs_f64();

    if let Some(out) = &args.out {
        write_output(out, &output::trace_csv(&trace))?;
        for member in &trace.retained {
            write_output(&retained_path(out, member.delta_khz), &output::member_csv(member))?;
        }
    } else if !trace.retained.is_empty() {
        summary
            .warnings
            .push("retained member traces need --out to be written".into());
    }
    let json = output::to_json(&summary).map_err(|e| CliError::Numerical(e.to_string()))?;
    match &args.summary {
        Some(path) => write_output(path, &json)?,
        None => println!("{json}"),
    }
    for warning in &summary.warnings {
        eprintln!("warning: {warning}");
    }
    eprintln!("wall time: {:.2}s", summary.wall_time_s);
    Ok(())
}

fn cmd_scan(args: ScanArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let delays = if args.delays.is_empty() {
        scenarios::default_scan_delays_us()
    } else {
        args.delays.clone()
    };
    let metric: EfficiencyMetric = args.metric.into();
    let opts = propagate_options(args.dt, args.integrator);

    let points = with_pool(args.threads, || {
        let mut points = Vec::new();
        for &delay in &delays {
            let mut params = ScenarioParams::new(Variant::Fig1d);
            params.delay_us = delay;
            if let Some(g21) = args.gamma21 {
                params.gamma21_khz = g21;
            }
            let scenario =
                scenarios::build(&params).map_err(|e| CliError::Validation(e.to_string()))?;
            let resolved = resolve_durations(&scenario.sequence)
                .and_then(|seq| resolve(&seq))
                .map_err(|e| CliError::Validation(e.to_string()))?;
            let (grid, _) = build_grid(&scenario.ensemble);
            let sweep_opts = SweepOptions {
                propagate: opts,
                retained_deltas_khz: Vec::new(),
            };
            let trace = ensemble::sweep(&scenario.system, &resolved, &grid, &sweep_opts)
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            // read the mirror point directly: long delays and fast decay
            // push the echo below any peak-detection floor, but the
            // fixed-time efficiency stays well defined
            let (c0, c1) = analysis::rephase_span(&resolved)
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            let first_bit = analysis::bit_windows(&resolved)
                .into_iter()
                .next()
                .ok_or_else(|| CliError::Numerical(format!("no bit markers at delay {delay}")))?;
            let signal: Vec<f64> = trace.s12.iter().map(|z| z.norm()).collect();
            let efficiency = analysis::retrieval_efficiency(
                &trace.times,
                &signal,
                &first_bit,
                c0,
                c1,
                metric,
            );
            let echo_time_us = analysis::mirror_time(c0, c1, first_bit.center_us());
            points.push(ScanPoint {
                delay_us: delay,
                echo_time_us,
                storage_interval_us: echo_time_us - first_bit.end_us,
                efficiency,
            });
        }
        Ok(points)
    })?;

    let xs: Vec<f64> = points.iter().map(|p| p.storage_interval_us).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.efficiency).collect();
    let fit = analysis::fit_exponential(&xs, &ys)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let (capacity, capacity_warning) = analysis::storage_capacity(fit.tau_us, DATA_DUR_US);

    let mut params = ScenarioParams::new(Variant::Fig1d);
    if let Some(g21) = args.gamma21 {
        params.gamma21_khz = g21;
    }
    let mut summary = RunSummary::new(Variant::Fig1d, params.clone());
    summary.integrator = args.integrator.to_string();
    summary.dt_us = opts.dt_us;
    summary.sample_interval_us = opts.sample_interval_us;
    summary.fit = Some(fit);
    summary.storage_capacity_bits = Some(capacity);
    summary.scan = Some(points.clone());
    if let Some(w) = capacity_warning {
        summary.warnings.push(w);
    }

    // cross-check the integrator pair on the shortest-delay member
    let scenario = scenarios::build(&ScenarioParams {
        delay_us: delays.iter().cloned().fold(f64::INFINITY, f64::min),
        ..params
    })
    .map_err(|e| CliError::Validation(e.to_string()))?;
    let resolved = resolve_durations(&scenario.sequence)
        .and_then(|seq| resolve(&seq))
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let cross_dev = cross_validate(
        &scenario.system,
        &resolved,
        10.0,
        opts.dt_us,
        opts.sample_interval_us,
    )
    .map_err(|e| CliError::Numerical(e.to_string()))?;
    summary.diagnostics.cross_validation_dev = Some(cross_dev);
    summary.wall_time_s = started.elapsed().as_secs_f64();

    if let Some(out) = &args.out {
        write_output(out, &output::scan_csv(&points))?;
    }
    let json = output::to_json(&summary).map_err(|e| CliError::Numerical(e.to_string()))?;
    match &args.summary {
        Some(path) => write_output(path, &json)?,
        None => println!("{json}"),
    }
    eprintln!("wall time: {:.2}s", summary.wall_time_s);
    Ok(())
}

fn cmd_validate(args: SourceArgs) -> Result<(), CliError> {
    let (scenario, resolved) = load_scenario(&args)?;
    let report = validate(&scenario.system, &scenario.sequence, &scenario.ensemble);
    if report.issues.is_empty() {
        println!(
            "ok: {} statements, {} segments, total {} us",
            scenario.sequence.stmts.len(),
            resolved.segments.len(),
            resolved.total_time
        );
    } else {
        println!("{}", report_text(&report));
    }
    Ok(())
}

fn cmd_emit_plot(args: EmitPlotArgs) -> Result<(), CliError> {
    let csv = read_input(&args.csv)?;
    let png_name = args
        .out
        .as_deref()
        .and_then(Path::file_stem)
        .map(|s| format!("{}.png", s.to_string_lossy()))
        .unwrap_or_else(|| format!("raman_echo_{}.png", args.scenario.tag()));
    let script = output::emit_plot(&csv, args.scenario, &png_name).map_err(|e| match e {
        output::OutputError::Io(err) => CliError::Parse(err.to_string()),
        other => CliError::Validation(other.to_string()),
    })?;
    match &args.out {
        Some(path) => write_output(path, &script)?,
        None => print!("{script}"),
    }
    Ok(())
}
