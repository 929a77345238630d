//! Command-line front end: simulate, analyze, sweep, plotdata, calibrate
//! and compliance.

pub mod summary;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use microtensile::analysis::{analyze_last_cycle, analyze_monotonic, fit_sn, reduce, Direction, MODULUS_NOTE};
use microtensile::config::{bundled_config, BenchConfig, ProtocolConfig, TrainConfig};
use microtensile::mechanics::{calibrate_load_train, fixed_guided_beam_stiffness, max_calibration_rate, series_stiffness};
use microtensile::record::{read_record, samples_from_csv, samples_to_csv, sidecar_json, sidecar_path};
use microtensile::simulator::{run_fatigue, run_monotonic, FatigueOptions, ProtocolSpec, Termination, TestRecord};
use microtensile::units::{parse_quantity, Dimension};
use microtensile::Error;

use summary::SummaryRow;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_) | Error::RecordFormat { .. } => EXIT_IO,
            Error::SolverFailure { .. }
            | Error::NoYield
            | Error::OpenLoop { .. }
            | Error::TooFewPoints { .. }
            | Error::UnderDetermined(_) => EXIT_SOLVER,
            Error::InvalidInput(_)
            | Error::Infeasible(_)
            | Error::Protocol(_)
            | Error::MetadataMismatch(_)
            | Error::Config(_) => EXIT_CONFIG,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    }
}

#[derive(Debug, Parser)]
#[command(name = "microtensile", version, about = "Virtual micro-tensile bench for freestanding thin films")]
pub struct Cli {
    /// Output format for tables.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the monotonic or fatigue protocol of a config and write the record.
    Simulate(SimulateArgs),
    /// Reduce a record to stress-strain and report moduli, yield, UTS or cycle stats.
    Analyze(AnalyzeArgs),
    /// Run a mean x amplitude fatigue grid and fit the S-N curve.
    Sweep(SweepArgs),
    /// Emit plot data as CSV on standard output.
    Plotdata(PlotArgs),
    /// Solve the alignment-spring stiffness for a stress-per-displacement target.
    Calibrate(CalibrateArgs),
    /// Beam and series-spring stiffness helpers.
    #[command(subcommand)]
    Compliance(ComplianceCommand),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Config file, or the name of a bundled config.
    #[arg(long)]
    pub config: String,
    /// Record CSV; the sidecar goes next to it as `<stem>.meta.json`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Record CSV (with its sidecar alongside).
    pub record: PathBuf,
    /// Machine-readable JSON report; the text report goes to stdout.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: String,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    StressStrain,
    #[value(name = "s-n")]
    SN,
    Waveform,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long, value_enum)]
    pub kind: PlotKind,
    /// Record CSV (stress-strain, waveform) or sweep summary CSV (s-n).
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub config: String,
    /// Override the target, e.g. "111.1 MPa/um".
    #[arg(long)]
    pub rate: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum ComplianceCommand {
    /// Fixed-guided beam stiffness E w t^3 / L^3.
    Beam {
        #[arg(long)]
        youngs_modulus: String,
        #[arg(long)]
        width: String,
        #[arg(long)]
        thickness: String,
        #[arg(long)]
        length: String,
    },
    /// Stiffness of springs in series.
    Series {
        #[arg(required = true)]
        stiffness: Vec<String>,
    },
}

/// Loads a config from a path, falling back to the bundled config of that name.
pub fn load_config(spec: &str) -> Result<BenchConfig, CliError> {
    let path = Path::new(spec);
    let text = if path.exists() {
        std::fs::read_to_string(path).map_err(|e| io_err(path, e))?
    } else if let Some(text) = bundled_config(spec) {
        text.to_string()
    } else {
        return Err(io_err(path, "no such file and no bundled config of that name"));
    };
    BenchConfig::from_toml_str(&text).map_err(|e| CliError::config(format!("{spec}: {e}")))
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| io_err(path, e))?;
    tmp.write_all(contents).map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

fn quantity(text: &str, dim: Dimension) -> Result<f64, CliError> {
    if let Ok(v) = text.trim().parse::<f64>() {
        return Ok(v);
    }
    parse_quantity(text, dim).map_err(CliError::from)
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(a) => simulate(&a, stdout),
        Command::Analyze(a) => analyze(&a, stdout),
        Command::Sweep(a) => sweep(&a, stdout),
        Command::Plotdata(a) => plotdata(&a, stdout),
        Command::Calibrate(a) => calibrate(&a, stdout),
        Command::Compliance(c) => compliance(&c, stdout),
    }
}

fn out_err(e: std::io::Error) -> CliError {
    CliError {
        code: EXIT_IO,
        message: format!("stdout: {e}"),
    }
}

pub fn simulate_record(cfg: &BenchConfig, seed: u64) -> Result<TestRecord, CliError> {
    let bench = cfg.bench(seed)?;
    let record = match cfg.protocol_spec() {
        Some(ProtocolSpec::Monotonic(p)) => run_monotonic(&bench, &p)?,
        Some(ProtocolSpec::Fatigue(p)) => {
            let (_, rec) = run_fatigue(&bench, &p, FatigueOptions::default())?;
            rec.expect("record requested")
        }
        None => {
            return Err(CliError::config(
                "config has a [sweep] section; run it with `microtensile sweep`",
            ))
        }
    };
    if let Termination::SolverError { sample_index, message } = &record.termination {
        return Err(CliError {
            code: EXIT_SOLVER,
            message: format!("solver failed at sample {sample_index}: {message}"),
        });
    }
    Ok(record)
}

fn simulate(a: &SimulateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_config(&a.config)?;
    let seed = a.seed.unwrap_or(cfg.seed);
    let record = simulate_record(&cfg, seed)?;
    write_atomic(&a.out, samples_to_csv(&record.samples).as_bytes())?;
    write_atomic(&sidecar_path(&a.out), sidecar_json(&record).as_bytes())?;
    let status = match (&record.termination, &record.fatigue) {
        (_, Some(o)) => format!("{:?}", o.status),
        (Termination::SpecimenFailed { t, .. }, None) => format!("specimen failed at t = {t} s"),
        (t, None) => format!("{t:?}"),
    };
    writeln!(stdout, "{}: {} samples, {status}", a.out.display(), record.samples.len()).map_err(out_err)?;
    Ok(())
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum AnalysisDoc {
    Monotonic {
        report: microtensile::analysis::MonotonicReport,
        yield_reached: bool,
    },
    Fatigue {
        last_cycle: microtensile::analysis::CycleReport,
        outcome: Option<microtensile::simulator::FatigueOutcome>,
        note: String,
    },
}

fn mpa(v: f64) -> String {
    format!("{:.3} MPa", v / 1e6)
}

fn gpa(v: f64) -> String {
    format!("{:.3} GPa", v / 1e9)
}

fn analyze(a: &AnalyzeArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let record = read_record(&a.record)?;
    let meta = &record.metadata;
    let curve = reduce(&record, &meta.geometry, meta.train.k_sensor)?;
    let mut text = String::new();
    let doc = match meta.protocol {
        ProtocolSpec::Monotonic(_) => {
            let r = analyze_monotonic(&curve)?;
            let lf = &r.loading_fit;
            text.push_str(&format!(
                "E loading     {}  (window {}, {} points, R^2 {:.6})\n",
                gpa(r.e_loading),
                lf.window,
                lf.n_points,
                lf.r_squared
            ));
            match &r.unloading_fit {
                Some(f) => text.push_str(&format!(
                    "E unloading   {}  (window {}, {} points, R^2 {:.6})\n",
                    gpa(f.modulus),
                    f.window,
                    f.n_points,
                    f.r_squared
                )),
                None => text.push_str("E unloading   no unloading branch\n"),
            }
            match r.sigma_y_offset02 {
                Some(s) => text.push_str(&format!("yield (0.2%)  {}\n", mpa(s))),
                None => text.push_str("yield (0.2%)  not reached\n"),
            }
            text.push_str(&format!("UTS           {}\n", mpa(r.uts)));
            text.push_str(&format!("elongation    {:.5}\n", r.elongation_at_failure));
            text.push_str(&format!("note: {}\n", r.note));
            let yield_reached = r.sigma_y_offset02.is_some();
            AnalysisDoc::Monotonic {
                report: r,
                yield_reached,
            }
        }
        ProtocolSpec::Fatigue(p) => {
            let c = analyze_last_cycle(&curve, p.samples_per_cycle)?;
            text.push_str(&format!(
                "last cycle    sigma_max {}  sigma_min {}  sigma_mean {}  sigma_amp {}\n",
                mpa(c.sigma_max),
                mpa(c.sigma_min),
                mpa(c.sigma_mean),
                mpa(c.sigma_amp)
            ));
            match c.delta_eps_pl {
                Some(d) => text.push_str(&format!("delta eps_pl  {d:.6e}\n")),
                None => text.push_str("delta eps_pl  loop not closed\n"),
            }
            if let Some(o) = &record.fatigue {
                text.push_str(&format!("outcome       {:?}, damage {:.6}\n", o.status, o.damage));
            }
            text.push_str(&format!("note: {MODULUS_NOTE}\n"));
            AnalysisDoc::Fatigue {
                last_cycle: c,
                outcome: record.fatigue,
                note: MODULUS_NOTE.to_string(),
            }
        }
    };
    let mut json = serde_json::to_string_pretty(&doc).expect("report serializes");
    json.push('\n');
    write_atomic(&a.out, json.as_bytes())?;
    stdout.write_all(text.as_bytes()).map_err(out_err)?;
    Ok(())
}

fn sweep(a: &SweepArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_config(&a.config)?;
    let ProtocolConfig::Sweep(grid) = &cfg.protocol else {
        return Err(CliError::config("config has no [sweep] section"));
    };
    let seed = a.seed.unwrap_or(cfg.seed);
    let plan = grid.plan();
    std::fs::create_dir_all(&a.out).map_err(|e| io_err(&a.out, e))?;

    let mut excluded = String::from("mean_m,amplitude_m,reason\n");
    for x in &plan.excluded {
        excluded.push_str(&format!("{:.8e},{:.8e},{}\n", x.mean_displacement, x.amplitude, x.reason));
    }
    write_atomic(&a.out.join("excluded.csv"), excluded.as_bytes())?;
    if plan.protocols.is_empty() {
        return Err(CliError::config(format!(
            "every grid point is infeasible ({} excluded, see {})",
            plan.excluded.len(),
            a.out.join("excluded.csv").display()
        )));
    }

    let runs: Vec<(u64, _)> = plan
        .protocols
        .iter()
        .enumerate()
        .map(|(i, p)| (seed.wrapping_add(i as u64), *p))
        .collect();
    let job = |(s, p): &(u64, microtensile::protocol::FatigueProtocol)| -> Result<_, CliError> {
        let bench = cfg.bench(*s)?;
        let options = FatigueOptions {
            keep_record: false,
            ..Default::default()
        };
        Ok(run_fatigue(&bench, p, options)?.0)
    };
    let results: Vec<Result<_, CliError>> = match a.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| CliError::config(format!("--jobs: {e}")))?
            .install(|| runs.par_iter().map(job).collect()),
        None => runs.par_iter().map(job).collect(),
    };
    let outcomes = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let rows: Vec<SummaryRow> = outcomes.iter().map(SummaryRow::from).collect();
    write_atomic(&a.out.join("summary.csv"), summary::to_csv(&rows).as_bytes())?;
    write_atomic(&a.out.join("sn.csv"), sn_plot(&rows).as_bytes())?;

    let fit = fit_sn(&outcomes, cfg.bench(seed)?.material.uts);
    let mut json = match &fit {
        Ok(model) => serde_json::to_string_pretty(model).expect("fit serializes"),
        Err(e) => serde_json::to_string_pretty(&serde_json::json!({ "error": e.to_string() })).expect("json"),
    };
    json.push('\n');
    write_atomic(&a.out.join("sn_fit.json"), json.as_bytes())?;

    let failures = rows.iter().filter(|r| r.failed).count();
    writeln!(
        stdout,
        "{} runs ({} failed, {} runouts, {} excluded) -> {}",
        rows.len(),
        failures,
        rows.len() - failures,
        plan.excluded.len(),
        a.out.display()
    )
    .map_err(out_err)?;
    match fit {
        Ok(m) => writeln!(stdout, "S-N fit: sigma_f = {}, b = {:.5}", mpa(m.sigma_f), m.b),
        Err(e) => writeln!(stdout, "S-N fit: {e}"),
    }
    .map_err(out_err)?;
    Ok(())
}

fn sn_plot(rows: &[SummaryRow]) -> String {
    let mut out = String::from("log10_N,sigma_a_MPa,sigma_m_MPa,censored\n");
    for r in rows {
        out.push_str(&format!(
            "{:.8e},{:.8e},{:.8e},{}\n",
            (r.cycles as f64).log10(),
            r.sigma_amp / 1e6,
            r.sigma_mean / 1e6,
            u8::from(!r.failed)
        ));
    }
    out
}

fn plotdata(a: &PlotArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&a.input).map_err(|e| io_err(&a.input, e))?;
    let out = match a.kind {
        PlotKind::SN => sn_plot(&summary::from_csv(&text)?),
        PlotKind::Waveform => {
            let samples = samples_from_csv(&text)?;
            let mut out = String::from("t_s,u_act_um,series\n");
            for s in samples {
                out.push_str(&format!("{:.8e},{:.8e},actuator\n", s.t, s.u_act * 1e6));
            }
            out
        }
        PlotKind::StressStrain => {
            let record = read_record(&a.input)?;
            let meta = &record.metadata;
            let curve = reduce(&record, &meta.geometry, meta.train.k_sensor)?;
            let mut out = String::from("strain,stress_MPa,series\n");
            for p in curve.points {
                let series = match p.direction {
                    Direction::Loading => "loading",
                    Direction::Unloading => "unloading",
                };
                out.push_str(&format!("{:.8e},{:.8e},{series}\n", p.strain, p.stress / 1e6));
            }
            out
        }
    };
    stdout.write_all(out.as_bytes()).map_err(out_err)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct CalibrationDoc {
    target_pa_per_m: f64,
    k_sensor: f64,
    k_align: f64,
    film_stiffness: f64,
    max_rate_pa_per_m: f64,
}

fn calibrate(a: &CalibrateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_config(&a.config)?;
    let e = cfg.material.material.youngs_modulus;
    let (k_sensor, default_rate) = match cfg.train {
        TrainConfig::Calibrated { k_sensor, rate } => (k_sensor, Some(rate)),
        TrainConfig::Explicit(t) => (t.k_sensor, None),
    };
    let rate = match (&a.rate, default_rate) {
        (Some(r), _) => quantity(r, Dimension::StressRate)?,
        (None, Some(r)) => r,
        (None, None) => {
            return Err(CliError::config(
                "config gives k_align directly; pass --rate to calibrate against a target",
            ))
        }
    };
    let k_align = calibrate_load_train(rate, &cfg.geometry, e, k_sensor)?;
    let doc = CalibrationDoc {
        target_pa_per_m: rate,
        k_sensor,
        k_align,
        film_stiffness: cfg.geometry.axial_stiffness(e),
        max_rate_pa_per_m: max_calibration_rate(&cfg.geometry, e),
    };
    let mut json = serde_json::to_string_pretty(&doc).expect("json");
    json.push('\n');
    stdout.write_all(json.as_bytes()).map_err(out_err)?;
    Ok(())
}

fn compliance(c: &ComplianceCommand, stdout: &mut dyn Write) -> Result<(), CliError> {
    let k = match c {
        ComplianceCommand::Beam {
            youngs_modulus,
            width,
            thickness,
            length,
        } => fixed_guided_beam_stiffness(
            quantity(youngs_modulus, Dimension::Pressure)?,
            quantity(width, Dimension::Length)?,
            quantity(thickness, Dimension::Length)?,
            quantity(length, Dimension::Length)?,
        )?,
        ComplianceCommand::Series { stiffness } => {
            let ks = stiffness
                .iter()
                .map(|s| quantity(s, Dimension::Stiffness))
                .collect::<Result<Vec<_>, _>>()?;
            series_stiffness(&ks)?
        }
    };
    writeln!(stdout, "{k:.8e} N/m").map_err(out_err)?;
    Ok(())
}
