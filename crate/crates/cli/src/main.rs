//! Command-line front end: single-point SNR queries, power allocations, beam
//! scans, Monte Carlo runs, config-driven sweeps, and figure presets.
//!
//! Angles are degrees, distances meters, composite gain dB. Exit codes:
//! 0 on success, 1 on usage errors (bad flags, config, or paths), 2 when the
//! physics rejected the inputs (or every sweep point did).

use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use xlradar::geometry::{validate_scenario, ArrayConfig, Scenario};
use xlradar::oracle::{
    beamform_scan, exact_snr_mimo, exact_snr_phased, power_alloc, AllocationPolicy,
};
use xlradar::response::LinkBudget;
use xlradar::simkit::{simulate_mimo, simulate_phased, McConfig};
use xlradar::snr_laws::{evaluate, Mode, ModeSpec, Model};
use xlradar::sweep::{
    emit_csv, emit_csv_to_path, figure_preset, format_sig12, parse_sweep_config, run_sweep,
    Estimator, SweepSpec,
};

#[derive(Parser)]
#[command(
    name = "xlradar",
    version,
    about = "SNR models and simulations for very large radar arrays",
    max_term_width = 100
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one SNR law at a single scene
    Snr(SnrCmd),
    /// Print a transmit power allocation as CSV
    Alloc(AllocCmd),
    /// Scan the beamformed response over a probe grid, as CSV
    Scan(ScanCmd),
    /// Simulate the full waveform chain at a single scene
    Mc(McCmd),
    /// Run a sweep described by a config file, emitting CSV
    Sweep(SweepCmd),
    /// Run a built-in figure sweep (fig2, fig3, fig4), emitting CSV
    Figure(FigureCmd),
}

/// Scene flags shared by the single-point subcommands. Side-specific flags
/// override the shared ones; the conflict rules reject ambiguous mixes.
#[derive(Args)]
struct SceneArgs {
    /// Transmit element count (odd)
    #[arg(long, default_value_t = 1025)]
    tx_elements: usize,
    /// Receive element count (odd); defaults to the transmit count
    #[arg(long)]
    rx_elements: Option<usize>,
    /// Element spacing for both arrays, meters
    #[arg(long, conflicts_with_all = ["tx_spacing", "rx_spacing"])]
    spacing: Option<f64>,
    #[arg(long)]
    tx_spacing: Option<f64>,
    #[arg(long)]
    rx_spacing: Option<f64>,
    /// Carrier wavelength, meters; defaults to twice the spacing
    #[arg(long)]
    wavelength: Option<f64>,
    /// Range of the target from both arrays, meters
    #[arg(long, conflicts_with_all = ["tx_range", "rx_range"])]
    range: Option<f64>,
    #[arg(long)]
    tx_range: Option<f64>,
    #[arg(long)]
    rx_range: Option<f64>,
    /// Target direction from both arrays, degrees off broadside
    #[arg(long, conflicts_with_all = ["tx_angle", "rx_angle"])]
    angle: Option<f64>,
    #[arg(long)]
    tx_angle: Option<f64>,
    #[arg(long)]
    rx_angle: Option<f64>,
    /// Composite link gain, dB
    #[arg(long, conflicts_with_all = ["power", "reflectivity", "ref_gain", "noise"])]
    g_db: Option<f64>,
    /// Total transmit power, watts
    #[arg(long)]
    power: Option<f64>,
    /// Target reflectivity (power factor)
    #[arg(long)]
    reflectivity: Option<f64>,
    /// Reference channel gain at one meter (power factor)
    #[arg(long)]
    ref_gain: Option<f64>,
    /// Noise variance per receive sample, watts
    #[arg(long)]
    noise: Option<f64>,
}

struct Scene {
    tx: ArrayConfig,
    rx: ArrayConfig,
    scenario: Scenario,
    budget: LinkBudget,
}

impl SceneArgs {
    fn build(&self) -> Result<Scene, CliError> {
        let tx_spacing = self.tx_spacing.or(self.spacing).unwrap_or(0.0628);
        let rx_spacing = self.rx_spacing.or(self.spacing).unwrap_or(0.0628);
        let array = |elements: usize, spacing: f64| match self.wavelength {
            Some(w) => ArrayConfig::new(elements, spacing, w),
            None => ArrayConfig::half_wavelength_spaced(elements, spacing),
        };
        let tx = array(self.tx_elements, tx_spacing)?;
        let rx = array(self.rx_elements.unwrap_or(self.tx_elements), rx_spacing)?;

        let scenario = Scenario::from_degrees(
            self.tx_range.or(self.range).unwrap_or(50.0),
            self.tx_angle.or(self.angle).unwrap_or(0.0),
            self.rx_range.or(self.range).unwrap_or(50.0),
            self.rx_angle.or(self.angle).unwrap_or(0.0),
        );

        let explicit = self.power.is_some()
            || self.reflectivity.is_some()
            || self.ref_gain.is_some()
            || self.noise.is_some();
        let budget = if explicit {
            LinkBudget::new(
                self.power.unwrap_or(1.0),
                self.reflectivity.unwrap_or(1.0),
                self.ref_gain.unwrap_or(1.0),
                self.noise.unwrap_or(1.0),
            )?
        } else {
            LinkBudget::from_composite_db(self.g_db.unwrap_or(50.0))?
        };

        for violation in validate_scenario(&scenario, &tx, &rx) {
            if !violation.is_error() {
                eprintln!("{violation}");
            }
        }
        Ok(Scene {
            tx,
            rx,
            scenario,
            budget,
        })
    }
}

#[derive(Args)]
struct SnrCmd {
    #[command(flatten)]
    scene: SceneArgs,
    #[arg(long, default_value = "mimo")]
    mode: Mode,
    #[arg(long, default_value = "xl")]
    model: Model,
    /// closed_form or oracle (Monte Carlo has its own subcommand)
    #[arg(long, default_value = "closed_form")]
    estimator: Estimator,
}

#[derive(Args)]
struct AllocCmd {
    #[command(flatten)]
    scene: SceneArgs,
    #[arg(long, default_value = "equal", value_parser = parse_policy)]
    policy: AllocationPolicy,
}

#[derive(Args)]
struct ScanCmd {
    #[command(flatten)]
    scene: SceneArgs,
    /// Probe range offsets span +/- this, meters
    #[arg(long, default_value_t = 10.0)]
    range_span: f64,
    #[arg(long, default_value_t = 21)]
    range_steps: usize,
    /// Probe angle offsets span +/- this, degrees
    #[arg(long, default_value_t = 2.0)]
    angle_span: f64,
    #[arg(long, default_value_t = 21)]
    angle_steps: usize,
}

#[derive(Args)]
struct McCmd {
    #[command(flatten)]
    scene: SceneArgs,
    #[arg(long, default_value = "mimo")]
    mode: Mode,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Samples per pulse; defaults to the transmit element count
    #[arg(long)]
    code_length: Option<usize>,
    /// Run only the noise-free pass (reports the signal amplitude)
    #[arg(long)]
    no_noise: bool,
}

#[derive(Args)]
struct SweepCmd {
    /// Sweep description, flat key=value format (see README)
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path; stdout when omitted
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FigureCmd {
    /// Preset name: fig2, fig3, or fig4
    name: String,
    /// Output CSV path; stdout when omitted
    #[arg(long)]
    output: Option<PathBuf>,
    /// Add the Monte Carlo estimator (stays size-guarded)
    #[arg(long)]
    with_mc: bool,
    /// Lift the Monte Carlo array-size guard; sweeps may run for hours
    #[arg(long)]
    mc_unguarded: bool,
    /// Override Monte Carlo trials per point
    #[arg(long)]
    trials: Option<usize>,
    /// Override the master seed
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_policy(s: &str) -> Result<AllocationPolicy, String> {
    match s {
        "equal" => Ok(AllocationPolicy::Equal),
        "optimal" => Ok(AllocationPolicy::Optimal),
        other => Err(format!(
            "unknown policy `{other}` (custom allocations are library-only)"
        )),
    }
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Display) -> Self {
        Self {
            code: 1,
            message: message.to_string(),
        }
    }

    fn domain(message: impl Display) -> Self {
        Self {
            code: 2,
            message: message.to_string(),
        }
    }
}

impl From<xlradar::Error> for CliError {
    fn from(err: xlradar::Error) -> Self {
        match &err {
            xlradar::Error::UnknownName { .. }
            | xlradar::Error::UnknownPreset(_)
            | xlradar::Error::Io { .. } => CliError::usage(err),
            _ => CliError::domain(err),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{err}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{err}");
                    ExitCode::from(1)
                }
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Snr(cmd) => run_snr(cmd),
        Command::Alloc(cmd) => run_alloc(cmd),
        Command::Scan(cmd) => run_scan(cmd),
        Command::Mc(cmd) => run_mc(cmd),
        Command::Sweep(cmd) => {
            let text = fs::read_to_string(&cmd.config)
                .map_err(|e| CliError::usage(format!("{}: {e}", cmd.config.display())))?;
            let spec = parse_sweep_config(&text).map_err(CliError::usage)?;
            run_rows(&spec, cmd.output)
        }
        Command::Figure(cmd) => {
            let mut spec = figure_preset(&cmd.name)?;
            if cmd.with_mc && !spec.estimators.contains(&Estimator::MonteCarlo) {
                spec.estimators.push(Estimator::MonteCarlo);
            }
            if cmd.mc_unguarded {
                spec.mc_max_antennas = None;
            }
            if let Some(trials) = cmd.trials {
                spec.trials = trials;
            }
            if let Some(seed) = cmd.seed {
                spec.seed = seed;
            }
            run_rows(&spec, cmd.output)
        }
    }
}

fn run_snr(cmd: SnrCmd) -> Result<(), CliError> {
    if cmd.estimator == Estimator::MonteCarlo {
        return Err(CliError::usage(
            "the snr subcommand is closed_form/oracle only; see the mc subcommand",
        ));
    }
    let scene = cmd.scene.build()?;
    let spec = ModeSpec::new(cmd.mode, cmd.model);
    let result = match cmd.estimator {
        Estimator::ClosedForm => evaluate(spec, &scene.tx, &scene.rx, &scene.scenario, &scene.budget)?,
        Estimator::Oracle => match (cmd.mode, cmd.model) {
            (Mode::Mimo, Model::Xl) => {
                exact_snr_mimo(&scene.tx, &scene.rx, &scene.scenario, &scene.budget)?
            }
            (mode, Model::Xl) => {
                let policy = match mode {
                    Mode::PhasedEqual => AllocationPolicy::Equal,
                    _ => AllocationPolicy::Optimal,
                };
                let alloc = power_alloc(policy, &scene.tx, &scene.scenario, &scene.budget)?;
                exact_snr_phased(&alloc, &scene.tx, &scene.rx, &scene.scenario, &scene.budget)?
            }
            // The plane-wave closed forms are their own element sums.
            (_, Model::Upw) => {
                evaluate(spec, &scene.tx, &scene.rx, &scene.scenario, &scene.budget)?
            }
        },
        Estimator::MonteCarlo => unreachable!("rejected above"),
    };
    println!("mode={}", cmd.mode);
    println!("model={}", cmd.model);
    println!("estimator={}", cmd.estimator);
    println!("snr_linear={}", format_sig12(result.linear));
    println!("snr_db={}", format_sig12(result.db));
    println!("source={}", result.source);
    Ok(())
}

fn run_alloc(cmd: AllocCmd) -> Result<(), CliError> {
    let scene = cmd.scene.build()?;
    let alloc = power_alloc(cmd.policy, &scene.tx, &scene.scenario, &scene.budget)?;
    let residual = alloc.constraint_residual(&scene.tx, &scene.scenario, &scene.budget)?;
    eprintln!(
        "policy={:?} elements={} residual={}",
        cmd.policy,
        alloc.elements(),
        format_sig12(residual)
    );
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "index,distance_m,coefficient,element_power")
        .map_err(|e| CliError::usage(format!("stdout: {e}")))?;
    let beta = scene.budget.ref_gain();
    for index in scene.tx.indices() {
        let distance = xlradar::geometry::tx_element_distance(&scene.tx, &scene.scenario, index)?;
        let coefficient = alloc.coefficient(index);
        let radiated = coefficient * beta / (distance * distance);
        writeln!(
            out,
            "{index},{},{},{}",
            format_sig12(distance),
            format_sig12(coefficient),
            format_sig12(radiated)
        )
        .map_err(|e| CliError::usage(format!("stdout: {e}")))?;
    }
    Ok(())
}

fn run_scan(cmd: ScanCmd) -> Result<(), CliError> {
    if cmd.range_steps == 0 || cmd.angle_steps == 0 {
        return Err(CliError::usage("scan steps must be at least 1"));
    }
    let scene = cmd.scene.build()?;
    let offsets = |span: f64, steps: usize| -> Vec<f64> {
        if steps == 1 {
            return vec![0.0];
        }
        (0..steps)
            .map(|i| -span + 2.0 * span * i as f64 / (steps - 1) as f64)
            .collect()
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "probe_range_m,probe_angle_deg,response")
        .map_err(|e| CliError::usage(format!("stdout: {e}")))?;
    let truth = scene.scenario;
    for dr in offsets(cmd.range_span, cmd.range_steps) {
        for da in offsets(cmd.angle_span, cmd.angle_steps) {
            let probe = Scenario::new(
                truth.tx_range + dr,
                truth.tx_angle + da.to_radians(),
                truth.rx_range + dr,
                truth.rx_angle + da.to_radians(),
            );
            // NaN when the probe fell outside the model's domain.
            let response = beamform_scan(&scene.tx, &scene.rx, &truth, &scene.budget, &probe)
                .unwrap_or(f64::NAN);
            writeln!(
                out,
                "{},{},{}",
                format_sig12(truth.tx_range + dr),
                format_sig12(truth.tx_angle.to_degrees() + da),
                format_sig12(response)
            )
            .map_err(|e| CliError::usage(format!("stdout: {e}")))?;
        }
    }
    Ok(())
}

fn run_mc(cmd: McCmd) -> Result<(), CliError> {
    let scene = cmd.scene.build()?;
    let mc = McConfig {
        trials: cmd.trials,
        code_length: cmd.code_length,
        seed: cmd.seed,
        noise_on: !cmd.no_noise,
    };
    let (outcome, exact) = match cmd.mode {
        Mode::Mimo => (
            simulate_mimo(&scene.tx, &scene.rx, &scene.scenario, &scene.budget, &mc)?,
            exact_snr_mimo(&scene.tx, &scene.rx, &scene.scenario, &scene.budget)?,
        ),
        mode => {
            let policy = match mode {
                Mode::PhasedEqual => AllocationPolicy::Equal,
                _ => AllocationPolicy::Optimal,
            };
            let alloc = power_alloc(policy, &scene.tx, &scene.scenario, &scene.budget)?;
            (
                simulate_phased(
                    &scene.tx,
                    &scene.rx,
                    &scene.scenario,
                    &scene.budget,
                    &alloc,
                    &mc,
                )?,
                exact_snr_phased(&alloc, &scene.tx, &scene.rx, &scene.scenario, &scene.budget)?,
            )
        }
    };
    println!("mode={}", cmd.mode);
    println!("trials={}", outcome.trials);
    println!("seed={}", outcome.seed);
    println!(
        "code_length={}",
        cmd.code_length.unwrap_or(scene.tx.elements())
    );
    println!("signal_amplitude={}", format_sig12(outcome.signal_amplitude));
    if let (Some(snr), Some(noise)) = (&outcome.snr, outcome.noise_power) {
        println!("noise_power={}", format_sig12(noise));
        println!("empirical_snr_linear={}", format_sig12(snr.linear));
        println!("empirical_snr_db={}", format_sig12(snr.db));
    }
    println!("exact_snr_linear={}", format_sig12(exact.linear));
    println!("exact_snr_db={}", format_sig12(exact.db));
    println!(
        "source={}",
        outcome
            .snr
            .as_ref()
            .map_or("noise-free pass", |snr| snr.source.as_str())
    );
    Ok(())
}

fn run_rows(spec: &SweepSpec, output: Option<PathBuf>) -> Result<(), CliError> {
    let rows = run_sweep(spec)?;
    match output {
        Some(path) => {
            let bytes = emit_csv_to_path(&rows, &path)?;
            eprintln!("rows={} bytes={bytes} path={}", rows.len(), path.display());
        }
        None => {
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            emit_csv(&rows, &mut out).map_err(|e| CliError::usage(format!("stdout: {e}")))?;
        }
    }
    let errors = rows.iter().filter(|r| r.is_error()).count();
    if errors > 0 {
        eprintln!("{errors} of {} points failed", rows.len());
    }
    if !rows.is_empty() && errors == rows.len() {
        return Err(CliError::domain("every sweep point failed"));
    }
    Ok(())
}
