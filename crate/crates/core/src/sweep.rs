//! Parameter sweeps, figure presets, CSV emission, and the sweep config
//! format.
//!
//! A [`SweepSpec`] names one swept variable, the values it takes, a base
//! configuration for everything else, and which (mode, model) laws and
//! estimators to evaluate at each point. Points are independent and evaluated
//! in parallel; rows come back in a deterministic order (value-major, then
//! mode, then estimator) and per-point domain errors become error rows instead
//! of aborting the sweep.
//!
//! The three built-in presets sweep antenna count, range, and angle over the
//! reference scene (50 m, half-wavelength 0.0628 m spacing, 50 dB composite
//! gain); see [`figure_preset`].

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error as ThisError;

use crate::error::Error;
use crate::geometry::{ArrayConfig, Scenario};
use crate::oracle::{exact_snr_mimo, exact_snr_phased, power_alloc, AllocationPolicy};
use crate::response::LinkBudget;
use crate::simkit::{simulate_mimo, simulate_phased, McConfig};
use crate::snr_laws::{evaluate, Mode, ModeSpec, Model, SnrResult};

/// Which scalar a sweep varies. Locked variants move both sides together.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    /// Element count of both arrays (values must be odd integers).
    AntennaCount,
    /// Both ranges, meters.
    Range,
    /// Both angles, degrees.
    Angle,
    TxRange,
    RxRange,
    TxAngle,
    RxAngle,
    TxAntennas,
    RxAntennas,
}

impl SweepVariable {
    /// Column label; also the accepted config spelling.
    pub fn name(&self) -> &'static str {
        match self {
            SweepVariable::AntennaCount => "antennas",
            SweepVariable::Range => "range_m",
            SweepVariable::Angle => "angle_deg",
            SweepVariable::TxRange => "tx_range_m",
            SweepVariable::RxRange => "rx_range_m",
            SweepVariable::TxAngle => "tx_angle_deg",
            SweepVariable::RxAngle => "rx_angle_deg",
            SweepVariable::TxAntennas => "tx_antennas",
            SweepVariable::RxAntennas => "rx_antennas",
        }
    }

    fn is_antenna_count(&self) -> bool {
        matches!(
            self,
            SweepVariable::AntennaCount | SweepVariable::TxAntennas | SweepVariable::RxAntennas
        )
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let all = [
            SweepVariable::AntennaCount,
            SweepVariable::Range,
            SweepVariable::Angle,
            SweepVariable::TxRange,
            SweepVariable::RxRange,
            SweepVariable::TxAngle,
            SweepVariable::RxAngle,
            SweepVariable::TxAntennas,
            SweepVariable::RxAntennas,
        ];
        all.into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::UnknownName {
                what: "sweep variable",
                got: s.to_string(),
            })
    }
}

/// How each point is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    /// Closed-form law.
    ClosedForm,
    /// Brute-force element summation.
    Oracle,
    /// Full waveform-chain simulation.
    MonteCarlo,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::ClosedForm => "closed_form",
            Estimator::Oracle => "oracle",
            Estimator::MonteCarlo => "monte_carlo",
        })
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.replace('-', "_").as_str() {
            "closed_form" => Ok(Estimator::ClosedForm),
            "oracle" => Ok(Estimator::Oracle),
            "monte_carlo" | "mc" => Ok(Estimator::MonteCarlo),
            _ => Err(Error::UnknownName {
                what: "estimator",
                got: s.to_string(),
            }),
        }
    }
}

/// What each row reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputKind {
    /// SNR of each (mode, model) law.
    Snr,
    /// Ratio of the spherical-wavefront SNR to the plane-wave SNR for each
    /// mode; the model component of each `ModeSpec` is ignored.
    RatioXlOverUpw,
}

/// Model column of an emitted row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowModel {
    Xl,
    Upw,
    XlOverUpw,
}

impl fmt::Display for RowModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowModel::Xl => "xl",
            RowModel::Upw => "upw",
            RowModel::XlOverUpw => "xl_over_upw",
        })
    }
}

/// Everything a sweep holds fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepBase {
    pub tx: ArrayConfig,
    pub rx: ArrayConfig,
    pub scenario: Scenario,
    pub budget: LinkBudget,
}

/// Full sweep description. Pure data: equal specs produce equal output.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub base: SweepBase,
    pub modes: Vec<ModeSpec>,
    pub estimators: Vec<Estimator>,
    pub output: OutputKind,
    /// Monte Carlo trials per point.
    pub trials: usize,
    /// Master seed; per-point seeds are derived from it and the point index.
    pub seed: u64,
    /// Skip Monte Carlo rows when either array exceeds this element count
    /// (`None` disables the guard). Simulation cost grows like M*N*L per
    /// trial, so unguarded large-array sweeps can run for hours.
    pub mc_max_antennas: Option<usize>,
}

impl SweepSpec {
    /// Checks the structural invariants: values non-empty, finite, strictly
    /// increasing, and odd integers when the variable is an element count.
    pub fn validate(&self) -> Result<(), Error> {
        if self.values.is_empty() || self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::SweepValues);
        }
        if self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::SweepValues);
        }
        if self.variable.is_antenna_count() {
            for &v in &self.values {
                let count = v as usize;
                if v.fract() != 0.0 || v < 1.0 || count.is_multiple_of(2) {
                    return Err(Error::SweepAntennaValue(v));
                }
            }
        }
        Ok(())
    }
}

/// One output row. `snr_linear`/`snr_db` are NaN on error rows, with the
/// error message in `provenance` (prefixed `error:`, commas stripped).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub variable: SweepVariable,
    pub value: f64,
    pub mode: Mode,
    pub model: RowModel,
    pub estimator: Estimator,
    pub snr_linear: f64,
    pub snr_db: f64,
    pub provenance: String,
}

impl SweepRow {
    pub fn is_error(&self) -> bool {
        self.provenance.starts_with("error:")
    }
}

fn sanitize(provenance: String) -> String {
    if provenance.contains(',') {
        provenance.replace(',', ";")
    } else {
        provenance
    }
}

/// Applies the swept value to the base configuration.
fn configure_point(
    spec: &SweepSpec,
    value: f64,
) -> Result<(ArrayConfig, ArrayConfig, Scenario), Error> {
    let base = &spec.base;
    let mut tx = base.tx;
    let mut rx = base.rx;
    let mut scenario = base.scenario;
    let rebuild = |template: &ArrayConfig, count: f64| {
        ArrayConfig::new(count as usize, template.spacing(), template.wavelength())
    };
    match spec.variable {
        SweepVariable::AntennaCount => {
            tx = rebuild(&base.tx, value)?;
            rx = rebuild(&base.rx, value)?;
        }
        SweepVariable::TxAntennas => tx = rebuild(&base.tx, value)?,
        SweepVariable::RxAntennas => rx = rebuild(&base.rx, value)?,
        SweepVariable::Range => {
            scenario.tx_range = value;
            scenario.rx_range = value;
        }
        SweepVariable::TxRange => scenario.tx_range = value,
        SweepVariable::RxRange => scenario.rx_range = value,
        SweepVariable::Angle => {
            scenario.tx_angle = value.to_radians();
            scenario.rx_angle = value.to_radians();
        }
        SweepVariable::TxAngle => scenario.tx_angle = value.to_radians(),
        SweepVariable::RxAngle => scenario.rx_angle = value.to_radians(),
    }
    scenario.check()?;
    Ok((tx, rx, scenario))
}

/// Derives a per-point Monte Carlo seed from the master seed and point index.
fn point_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn estimate(
    mode_spec: ModeSpec,
    estimator: Estimator,
    tx: &ArrayConfig,
    rx: &ArrayConfig,
    scenario: &Scenario,
    budget: &LinkBudget,
    mc: &McConfig,
) -> Result<SnrResult, Error> {
    match estimator {
        Estimator::ClosedForm => evaluate(mode_spec, tx, rx, scenario, budget),
        Estimator::Oracle => match mode_spec.model {
            Model::Xl => match mode_spec.mode {
                Mode::Mimo => exact_snr_mimo(tx, rx, scenario, budget),
                Mode::PhasedEqual => {
                    let alloc = power_alloc(AllocationPolicy::Equal, tx, scenario, budget)?;
                    exact_snr_phased(&alloc, tx, rx, scenario, budget)
                }
                Mode::PhasedOptimal => {
                    let alloc = power_alloc(AllocationPolicy::Optimal, tx, scenario, budget)?;
                    exact_snr_phased(&alloc, tx, rx, scenario, budget)
                }
            },
            // Plane-wave laws contain no approximation to brute-force away:
            // the closed form is already the element sum.
            Model::Upw => {
                let mut res = evaluate(mode_spec, tx, rx, scenario, budget)?;
                res.source.push_str(" (exact under plane-wave model)");
                Ok(res)
            }
        },
        Estimator::MonteCarlo => match mode_spec.model {
            Model::Upw => Err(Error::MonteCarloNeedsSpherical),
            Model::Xl => {
                let out = match mode_spec.mode {
                    Mode::Mimo => simulate_mimo(tx, rx, scenario, budget, mc)?,
                    Mode::PhasedEqual => {
                        let alloc = power_alloc(AllocationPolicy::Equal, tx, scenario, budget)?;
                        simulate_phased(tx, rx, scenario, budget, &alloc, mc)?
                    }
                    Mode::PhasedOptimal => {
                        let alloc = power_alloc(AllocationPolicy::Optimal, tx, scenario, budget)?;
                        simulate_phased(tx, rx, scenario, budget, &alloc, mc)?
                    }
                };
                // noise_on is always true here, so the SNR is present.
                Ok(out.snr.expect("noisy simulation returns an SNR"))
            }
        },
    }
}

fn point_rows(spec: &SweepSpec, index: usize, value: f64) -> Vec<SweepRow> {
    let mc = McConfig::new(spec.trials, point_seed(spec.seed, index));
    let configured = configure_point(spec, value);
    let mut rows = Vec::new();
    for &mode_spec in &spec.modes {
        for &estimator in &spec.estimators {
            let row_model = match spec.output {
                OutputKind::RatioXlOverUpw => RowModel::XlOverUpw,
                OutputKind::Snr => match mode_spec.model {
                    Model::Xl => RowModel::Xl,
                    Model::Upw => RowModel::Upw,
                },
            };
            let budget = &spec.base.budget;
            let outcome = configured.as_ref().map_err(clone_shallow).and_then(
                |(tx, rx, scenario)| {
                    if estimator == Estimator::MonteCarlo {
                        if let Some(cap) = spec.mc_max_antennas {
                            if tx.elements().max(rx.elements()) > cap {
                                return Ok(None);
                            }
                        }
                    }
                    match spec.output {
                        OutputKind::Snr => {
                            estimate(mode_spec, estimator, tx, rx, scenario, budget, &mc).map(Some)
                        }
                        OutputKind::RatioXlOverUpw => {
                            let xl = estimate(
                                ModeSpec::new(mode_spec.mode, Model::Xl),
                                estimator,
                                tx,
                                rx,
                                scenario,
                                budget,
                                &mc,
                            )?;
                            let upw = evaluate(
                                ModeSpec::new(mode_spec.mode, Model::Upw),
                                tx,
                                rx,
                                scenario,
                                budget,
                            )?;
                            let ratio = xl.linear / upw.linear;
                            Ok(Some(SnrResult::new(
                                ratio,
                                format!("ratio of [{}] to [{}]", xl.source, upw.source),
                            )))
                        }
                    }
                },
            );
            match outcome {
                Ok(None) => {} // guarded Monte Carlo point: no row
                Ok(Some(res)) => rows.push(SweepRow {
                    variable: spec.variable,
                    value,
                    mode: mode_spec.mode,
                    model: row_model,
                    estimator,
                    snr_linear: res.linear,
                    snr_db: res.db,
                    provenance: sanitize(res.source),
                }),
                Err(err) => rows.push(SweepRow {
                    variable: spec.variable,
                    value,
                    mode: mode_spec.mode,
                    model: row_model,
                    estimator,
                    snr_linear: f64::NAN,
                    snr_db: f64::NAN,
                    provenance: sanitize(format!("error: {err}")),
                }),
            }
        }
    }
    rows
}

/// Evaluates every (value, mode, estimator) combination of the spec.
///
/// Points run in parallel; the returned order and every Monte Carlo seed
/// depend only on the spec, so output is identical for any worker count.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, Error> {
    spec.validate()?;
    let rows: Vec<Vec<SweepRow>> = spec
        .values
        .par_iter()
        .enumerate()
        .map(|(index, &value)| point_rows(spec, index, value))
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// Reference half-wavelength spacing, meters.
pub const REFERENCE_SPACING: f64 = 0.0628;

fn reference_base(elements: usize, range: f64, angle_deg: f64) -> SweepBase {
    SweepBase {
        tx: ArrayConfig::half_wavelength_spaced(elements, REFERENCE_SPACING)
            .expect("reference array is valid"),
        rx: ArrayConfig::half_wavelength_spaced(elements, REFERENCE_SPACING)
            .expect("reference array is valid"),
        scenario: Scenario::from_degrees(range, angle_deg, range, angle_deg),
        budget: LinkBudget::from_composite_db(50.0).expect("reference budget is valid"),
    }
}

/// Built-in sweeps over the reference scene.
///
/// * `fig2`: SNR versus element count, odd M = N from 1 to 4097 at broadside,
///   50 m, all five distinct laws. The range straddles the interior maximum
///   of the spherical MIMO law.
/// * `fig3`: SNR versus range, M = N = 1025, 88 degrees, log-spaced 10 m to
///   100 km. 1025 stands in for a power-of-two 1024: the element index set is
///   symmetric around a center element, which requires an odd count.
/// * `fig4`: spherical-to-plane-wave SNR ratio versus angle, integer degrees
///   -89 to 89, M = N = 1025 at 50 m, per mode.
///
/// Monte Carlo is not in any preset's estimator list; when enabled separately
/// it stays guarded to arrays of at most 257 elements.
pub fn figure_preset(name: &str) -> Result<SweepSpec, Error> {
    match name {
        "fig2" => Ok(SweepSpec {
            variable: SweepVariable::AntennaCount,
            values: (1..=4097u64).step_by(2).map(|m| m as f64).collect(),
            base: reference_base(1025, 50.0, 0.0),
            modes: ModeSpec::all_distinct().to_vec(),
            estimators: vec![Estimator::ClosedForm],
            output: OutputKind::Snr,
            trials: 1000,
            seed: 42,
            mc_max_antennas: Some(257),
        }),
        "fig3" => Ok(SweepSpec {
            variable: SweepVariable::Range,
            values: vec![
                10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1e3, 2e3, 5e3, 1e4, 2e4, 5e4, 1e5,
            ],
            base: reference_base(1025, 50.0, 88.0),
            modes: ModeSpec::all_distinct().to_vec(),
            estimators: vec![Estimator::ClosedForm],
            output: OutputKind::Snr,
            trials: 1000,
            seed: 42,
            mc_max_antennas: Some(257),
        }),
        "fig4" => Ok(SweepSpec {
            variable: SweepVariable::Angle,
            values: (-89..=89).map(|d| d as f64).collect(),
            base: reference_base(1025, 50.0, 0.0),
            modes: vec![
                ModeSpec::new(Mode::Mimo, Model::Xl),
                ModeSpec::new(Mode::PhasedEqual, Model::Xl),
                ModeSpec::new(Mode::PhasedOptimal, Model::Xl),
            ],
            estimators: vec![Estimator::ClosedForm],
            output: OutputKind::RatioXlOverUpw,
            trials: 1000,
            seed: 42,
            mc_max_antennas: Some(257),
        }),
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

/// Exact header line of every emitted CSV.
pub const CSV_HEADER: &str = "variable,value,mode,model,estimator,snr_linear,snr_db,provenance";

/// Formats a float with 12 significant digits, round-trippable by `parse`.
pub fn format_sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Writes rows as CSV (UTF-8, LF) and returns the byte count.
pub fn emit_csv<W: Write>(rows: &[SweepRow], out: &mut W) -> io::Result<u64> {
    let mut bytes = 0u64;
    let mut write_line = |line: String, out: &mut W| -> io::Result<()> {
        bytes += line.len() as u64 + 1;
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")
    };
    write_line(CSV_HEADER.to_string(), out)?;
    for row in rows {
        debug_assert!(!row.provenance.contains(','));
        write_line(
            format!(
                "{},{},{},{},{},{},{},{}",
                row.variable,
                format_sig12(row.value),
                row.mode,
                row.model,
                row.estimator,
                format_sig12(row.snr_linear),
                format_sig12(row.snr_db),
                row.provenance
            ),
            out,
        )?;
    }
    Ok(bytes)
}

/// [`emit_csv`] to a file path, with the path attached to any I/O failure.
pub fn emit_csv_to_path(rows: &[SweepRow], path: &Path) -> Result<u64, Error> {
    let wrap = |source: io::Error| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(wrap)?;
    let mut out = BufWriter::new(file);
    let bytes = emit_csv(rows, &mut out).map_err(wrap)?;
    out.flush().map_err(wrap)?;
    Ok(bytes)
}

/// Errors from [`parse_sweep_config`], with line numbers where they apply.
#[derive(Debug, ThisError)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: invalid value for `{key}`: {detail}")]
    Value {
        line: usize,
        key: String,
        detail: String,
    },
    #[error("`{key}` cannot be combined with `{other}`")]
    Conflict { key: String, other: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error(transparent)]
    Spec(#[from] Error),
}

struct RawConfig {
    entries: Vec<(usize, String, String)>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: Vec<(usize, String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let stripped = raw.split('#').next().unwrap_or("").trim();
            if stripped.is_empty() {
                continue;
            }
            let (key, value) = stripped
                .split_once('=')
                .ok_or(ConfigError::Syntax { line })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Syntax { line });
            }
            if entries.iter().any(|(_, k, _)| *k == key) {
                return Err(ConfigError::DuplicateKey { line, key });
            }
            entries.push((line, key, value));
        }
        Ok(Self { entries })
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        let pos = self.entries.iter().position(|(_, k, _)| k == key)?;
        let (line, _, value) = self.entries.remove(pos);
        Some((line, value))
    }
}

fn parse_scalar<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::Value {
        line,
        key: key.to_string(),
        detail: e.to_string(),
    })
}

fn parse_values(line: usize, value: &str) -> Result<Vec<f64>, ConfigError> {
    let bad = |detail: &str| ConfigError::Value {
        line,
        key: "values".to_string(),
        detail: detail.to_string(),
    };
    let grid = |spec: &str, log: bool| -> Result<Vec<f64>, ConfigError> {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:count"));
        }
        let start: f64 = parts[0].parse().map_err(|_| bad("bad start"))?;
        let stop: f64 = parts[1].parse().map_err(|_| bad("bad stop"))?;
        let count: usize = parts[2].parse().map_err(|_| bad("bad count"))?;
        if count < 2 {
            return Err(bad("count must be >= 2"));
        }
        if log && (start <= 0.0 || stop <= 0.0) {
            return Err(bad("logspace endpoints must be positive"));
        }
        let n = (count - 1) as f64;
        Ok((0..count)
            .map(|i| {
                let t = i as f64 / n;
                if log {
                    (start.ln() + t * (stop.ln() - start.ln())).exp()
                } else {
                    start + t * (stop - start)
                }
            })
            .collect())
    };
    if let Some(spec) = value.strip_prefix("linspace:") {
        grid(spec, false)
    } else if let Some(spec) = value.strip_prefix("logspace:") {
        grid(spec, true)
    } else {
        value
            .split(',')
            .map(|v| v.trim().parse().map_err(|_| bad(v.trim())))
            .collect()
    }
}

fn parse_list<T: FromStr<Err = Error>>(
    line: usize,
    key: &str,
    value: &str,
) -> Result<Vec<T>, ConfigError> {
    value
        .split(',')
        .map(|item| {
            item.trim().parse().map_err(|e: Error| ConfigError::Value {
                line,
                key: key.to_string(),
                detail: e.to_string(),
            })
        })
        .collect()
}

/// Parses the flat `key = value` sweep config format.
///
/// Recognized keys (defaults in parentheses):
///
/// * `variable` (required): one of `antennas`, `range_m`, `angle_deg`,
///   `tx_range_m`, `rx_range_m`, `tx_angle_deg`, `rx_angle_deg`,
///   `tx_antennas`, `rx_antennas`.
/// * `values` (required): comma list, `linspace:start:stop:count`, or
///   `logspace:start:stop:count`.
/// * `elements` (1025), or `tx_elements` / `rx_elements`.
/// * `spacing` (0.0628), or `tx_spacing` / `rx_spacing`; meters.
/// * `wavelength` (2x the spacing of each side); meters.
/// * `range` (50), or `tx_range` / `rx_range`; meters.
/// * `angle_deg` (0), or `tx_angle_deg` / `rx_angle_deg`; degrees.
/// * `g_db` (50): composite gain in dB; conflicts with the explicit
///   `power` / `reflectivity` / `ref_gain` / `noise` quartet.
/// * `modes` (`mimo,phased_equal,phased_optimal`), `models` (`xl,upw`):
///   rows cover the cross product.
/// * `estimators` (`closed_form`).
/// * `output` (`snr`): `snr` or `ratio_xl_over_upw`.
/// * `trials` (10000), `seed` (42).
/// * `mc_max_antennas` (257): `0` disables the Monte Carlo size guard.
///
/// Lines are `key = value`, `#` starts a comment, keys may not repeat, and
/// unknown keys are hard errors so a typo cannot silently change a sweep.
pub fn parse_sweep_config(text: &str) -> Result<SweepSpec, ConfigError> {
    let mut raw = RawConfig::parse(text)?;

    let (line, value) = raw
        .take("variable")
        .ok_or(ConfigError::Missing("variable"))?;
    let variable: SweepVariable =
        value
            .parse()
            .map_err(|e: Error| ConfigError::Value {
                line,
                key: "variable".to_string(),
                detail: e.to_string(),
            })?;

    let (line, value) = raw.take("values").ok_or(ConfigError::Missing("values"))?;
    let values = parse_values(line, &value)?;

    let side_scalar = |general: &'static str,
                           tx_key: &'static str,
                           rx_key: &'static str,
                           default: f64,
                           raw: &mut RawConfig|
     -> Result<(f64, f64), ConfigError> {
        let shared = raw.take(general);
        let tx = raw.take(tx_key);
        let rx = raw.take(rx_key);
        if let Some((line, v)) = shared {
            if tx.is_some() || rx.is_some() {
                return Err(ConfigError::Conflict {
                    key: general.to_string(),
                    other: if tx.is_some() { tx_key } else { rx_key }.to_string(),
                });
            }
            let v: f64 = parse_scalar(line, general, &v)?;
            return Ok((v, v));
        }
        let tx_v = match tx {
            Some((line, v)) => parse_scalar(line, tx_key, &v)?,
            None => default,
        };
        let rx_v = match rx {
            Some((line, v)) => parse_scalar(line, rx_key, &v)?,
            None => default,
        };
        Ok((tx_v, rx_v))
    };

    let (tx_elements, rx_elements) =
        side_scalar("elements", "tx_elements", "rx_elements", 1025.0, &mut raw)?;
    let (tx_spacing, rx_spacing) = side_scalar(
        "spacing",
        "tx_spacing",
        "rx_spacing",
        REFERENCE_SPACING,
        &mut raw,
    )?;
    let (tx_range, rx_range) = side_scalar("range", "tx_range", "rx_range", 50.0, &mut raw)?;
    let (tx_angle, rx_angle) =
        side_scalar("angle_deg", "tx_angle_deg", "rx_angle_deg", 0.0, &mut raw)?;

    let wavelength = raw.take("wavelength");
    let build_array = |elements: f64, spacing: f64| -> Result<ArrayConfig, ConfigError> {
        let array = match &wavelength {
            Some((line, v)) => {
                let w: f64 = parse_scalar(*line, "wavelength", v)?;
                ArrayConfig::new(elements as usize, spacing, w)
            }
            None => ArrayConfig::half_wavelength_spaced(elements as usize, spacing),
        };
        Ok(array?)
    };
    let tx = build_array(tx_elements, tx_spacing)?;
    let rx = build_array(rx_elements, rx_spacing)?;

    let g_db = raw.take("g_db");
    let explicit: Vec<(usize, &'static str, String)> =
        ["power", "reflectivity", "ref_gain", "noise"]
            .into_iter()
            .filter_map(|k| raw.take(k).map(|(line, v)| (line, k, v)))
            .collect();
    let budget = match (g_db, explicit.is_empty()) {
        (Some(_), false) => {
            return Err(ConfigError::Conflict {
                key: "g_db".to_string(),
                other: explicit[0].1.to_string(),
            })
        }
        (Some((line, v)), true) => {
            LinkBudget::from_composite_db(parse_scalar(line, "g_db", &v)?)?
        }
        (None, true) => LinkBudget::from_composite_db(50.0)?,
        (None, false) => {
            let mut quartet = [1.0f64; 4];
            for (line, key, v) in &explicit {
                let slot = ["power", "reflectivity", "ref_gain", "noise"]
                    .iter()
                    .position(|k| k == key)
                    .expect("key comes from the quartet list");
                quartet[slot] = parse_scalar(*line, key, v)?;
            }
            LinkBudget::new(quartet[0], quartet[1], quartet[2], quartet[3])?
        }
    };

    let modes: Vec<Mode> = match raw.take("modes") {
        Some((line, v)) => parse_list(line, "modes", &v)?,
        None => vec![Mode::Mimo, Mode::PhasedEqual, Mode::PhasedOptimal],
    };
    let models: Vec<Model> = match raw.take("models") {
        Some((line, v)) => parse_list(line, "models", &v)?,
        None => vec![Model::Xl, Model::Upw],
    };
    let mode_specs: Vec<ModeSpec> = modes
        .iter()
        .flat_map(|&mode| models.iter().map(move |&model| ModeSpec::new(mode, model)))
        .collect();

    let estimators: Vec<Estimator> = match raw.take("estimators") {
        Some((line, v)) => parse_list(line, "estimators", &v)?,
        None => vec![Estimator::ClosedForm],
    };

    let output = match raw.take("output") {
        None => OutputKind::Snr,
        Some((line, v)) => match v.as_str() {
            "snr" => OutputKind::Snr,
            "ratio_xl_over_upw" => OutputKind::RatioXlOverUpw,
            other => {
                return Err(ConfigError::Value {
                    line,
                    key: "output".to_string(),
                    detail: format!("unknown output `{other}`"),
                })
            }
        },
    };

    let trials = match raw.take("trials") {
        Some((line, v)) => parse_scalar(line, "trials", &v)?,
        None => 10_000,
    };
    let seed = match raw.take("seed") {
        Some((line, v)) => parse_scalar(line, "seed", &v)?,
        None => 42,
    };
    let mc_max_antennas = match raw.take("mc_max_antennas") {
        Some((line, v)) => {
            let cap: usize = parse_scalar(line, "mc_max_antennas", &v)?;
            (cap != 0).then_some(cap)
        }
        None => Some(257),
    };

    if let Some((line, key, _)) = raw.entries.first() {
        return Err(ConfigError::UnknownKey {
            line: *line,
            key: key.clone(),
        });
    }

    let spec = SweepSpec {
        variable,
        values,
        base: SweepBase {
            tx,
            rx,
            scenario: Scenario::from_degrees(tx_range, tx_angle, rx_range, rx_angle),
            budget,
        },
        modes: mode_specs,
        estimators,
        output,
        trials,
        seed,
        mc_max_antennas,
    };
    spec.validate()?;
    Ok(spec)
}

/// `Error` is not `Clone` (it may wrap `io::Error`); a sweep only needs to
/// replicate one point-configuration failure across that point's rows.
fn clone_shallow(err: &Error) -> Error {
    match err {
        Error::NonPositive { name, value } => Error::NonPositive {
            name,
            value: *value,
        },
        Error::AngleRange { name, got_deg } => Error::AngleRange {
            name,
            got_deg: *got_deg,
        },
        Error::ElementCount(n) => Error::ElementCount(*n),
        other => Error::UnknownName {
            what: "sweep point",
            got: other.to_string(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snr_laws::snr_xl_mimo;

    fn tiny_spec() -> SweepSpec {
        SweepSpec {
            variable: SweepVariable::AntennaCount,
            values: vec![1.0, 3.0, 5.0],
            base: reference_base(1025, 50.0, 0.0),
            modes: vec![ModeSpec::new(Mode::Mimo, Model::Xl)],
            estimators: vec![Estimator::ClosedForm],
            output: OutputKind::Snr,
            trials: 10,
            seed: 1,
            mc_max_antennas: Some(257),
        }
    }

    #[test]
    fn validate_rejects_malformed_value_lists() {
        let mut spec = tiny_spec();
        spec.values = vec![];
        assert!(matches!(spec.validate(), Err(Error::SweepValues)));
        spec.values = vec![3.0, 3.0];
        assert!(spec.validate().is_err());
        spec.values = vec![5.0, 3.0];
        assert!(spec.validate().is_err());
        spec.values = vec![1.0, f64::NAN];
        assert!(spec.validate().is_err());
        spec.values = vec![1.0, 4.0];
        assert!(matches!(
            spec.validate(),
            Err(Error::SweepAntennaValue(v)) if v == 4.0
        ));
        spec.values = vec![1.0, 3.5];
        assert!(spec.validate().is_err());

        spec.variable = SweepVariable::Range;
        spec.values = vec![1.0, 4.0];
        assert!(spec.validate().is_ok());
    }

    #[test]
    fn single_point_sweep_equals_direct_call() {
        let mut spec = tiny_spec();
        spec.values = vec![65.0];
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 1);
        let tx = ArrayConfig::half_wavelength_spaced(65, REFERENCE_SPACING).unwrap();
        let direct = snr_xl_mimo(&tx, &tx, &spec.base.scenario, &spec.base.budget).unwrap();
        assert_eq!(rows[0].snr_linear, direct.linear);
        assert_eq!(rows[0].snr_db, direct.db);
        assert_eq!(rows[0].provenance, direct.source);
        assert_eq!(rows[0].mode, Mode::Mimo);
        assert_eq!(rows[0].model, RowModel::Xl);
    }

    #[test]
    fn row_count_is_cartesian_product() {
        let mut spec = tiny_spec();
        spec.modes = vec![
            ModeSpec::new(Mode::Mimo, Model::Xl),
            ModeSpec::new(Mode::Mimo, Model::Upw),
            ModeSpec::new(Mode::PhasedOptimal, Model::Xl),
        ];
        spec.estimators = vec![Estimator::ClosedForm, Estimator::Oracle];
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 3 * 3 * 2);
        // Deterministic order: value-major, then mode, then estimator.
        assert_eq!(rows[0].value, 1.0);
        assert_eq!(rows[0].estimator, Estimator::ClosedForm);
        assert_eq!(rows[1].estimator, Estimator::Oracle);
        assert_eq!(rows[6].value, 3.0);
    }

    #[test]
    fn oracle_upw_rows_note_the_model_exactness() {
        let mut spec = tiny_spec();
        spec.modes = vec![ModeSpec::new(Mode::Mimo, Model::Upw)];
        spec.estimators = vec![Estimator::Oracle];
        let rows = run_sweep(&spec).unwrap();
        assert!(rows[0].provenance.contains("exact under plane-wave model"));
        assert_eq!(rows[0].model, RowModel::Upw);
    }

    #[test]
    fn domain_errors_become_error_rows() {
        let mut spec = tiny_spec();
        spec.variable = SweepVariable::Range;
        // 0.2 m puts spacing/range past the validity limit; 50 m is fine.
        spec.values = vec![0.2, 50.0];
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].is_error());
        assert!(rows[0].snr_linear.is_nan());
        assert!(rows[0].provenance.starts_with("error:"));
        assert!(!rows[0].provenance.contains(','));
        assert!(!rows[1].is_error());
    }

    #[test]
    fn monte_carlo_guard_skips_large_arrays() {
        let mut spec = tiny_spec();
        spec.values = vec![5.0, 9.0];
        spec.estimators = vec![Estimator::ClosedForm, Estimator::MonteCarlo];
        spec.mc_max_antennas = Some(7);
        spec.trials = 50;
        let rows = run_sweep(&spec).unwrap();
        // 2 closed-form rows plus one Monte Carlo row (5 <= 7 < 9).
        assert_eq!(rows.len(), 3);
        assert_eq!(
            rows.iter()
                .filter(|r| r.estimator == Estimator::MonteCarlo)
                .count(),
            1
        );
        assert_eq!(rows[1].value, 5.0);

        spec.mc_max_antennas = None;
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 4);
    }

    #[test]
    fn monte_carlo_under_plane_wave_is_an_error_row() {
        let mut spec = tiny_spec();
        spec.modes = vec![ModeSpec::new(Mode::Mimo, Model::Upw)];
        spec.estimators = vec![Estimator::MonteCarlo];
        spec.values = vec![5.0];
        spec.trials = 10;
        let rows = run_sweep(&spec).unwrap();
        assert!(rows[0].is_error());
        assert!(rows[0].provenance.contains("spherical"));
    }

    #[test]
    fn sweep_results_are_reproducible() {
        let mut spec = tiny_spec();
        spec.estimators = vec![Estimator::MonteCarlo];
        spec.trials = 100;
        let a = run_sweep(&spec).unwrap();
        let b = run_sweep(&spec).unwrap();
        assert_eq!(a, b);
        // Different points get different seeds.
        assert_ne!(a[0].snr_linear.to_bits(), a[1].snr_linear.to_bits());
    }

    #[test]
    fn presets_are_pure_data() {
        for name in ["fig2", "fig3", "fig4"] {
            assert_eq!(figure_preset(name).unwrap(), figure_preset(name).unwrap());
        }
        assert!(matches!(
            figure_preset("fig9"),
            Err(Error::UnknownPreset(_))
        ));
    }

    #[test]
    fn preset_shapes() {
        let fig2 = figure_preset("fig2").unwrap();
        assert_eq!(fig2.values.len(), 2049);
        assert_eq!(fig2.values[0], 1.0);
        assert_eq!(*fig2.values.last().unwrap(), 4097.0);
        assert_eq!(fig2.modes.len(), 5);
        fig2.validate().unwrap();

        let fig3 = figure_preset("fig3").unwrap();
        assert_eq!(fig3.base.tx.elements(), 1025);
        assert!((fig3.base.scenario.tx_angle.to_degrees() - 88.0).abs() < 1e-12);
        assert_eq!(fig3.values.len(), 13);

        let fig4 = figure_preset("fig4").unwrap();
        assert_eq!(fig4.output, OutputKind::RatioXlOverUpw);
        assert_eq!(fig4.values.len(), 179);
        assert_eq!(fig4.modes.len(), 3);
    }

    #[test]
    fn fig2_rows_cover_the_cartesian_product() {
        let spec = figure_preset("fig2").unwrap();
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(
            rows.len(),
            spec.values.len() * spec.modes.len() * spec.estimators.len()
        );
        // Plane-wave MIMO SNR grows without bound in element count; the
        // spherical-wavefront law's interior maximum is asserted elsewhere.
        let upw: Vec<f64> = rows
            .iter()
            .filter(|r| r.mode == Mode::Mimo && r.model == RowModel::Upw)
            .map(|r| r.snr_linear)
            .collect();
        assert_eq!(upw.len(), 2049);
        assert!(upw.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn ratio_rows_divide_the_two_models() {
        let mut spec = tiny_spec();
        spec.output = OutputKind::RatioXlOverUpw;
        spec.values = vec![65.0];
        let rows = run_sweep(&spec).unwrap();
        let tx = ArrayConfig::half_wavelength_spaced(65, REFERENCE_SPACING).unwrap();
        let xl = snr_xl_mimo(&tx, &tx, &spec.base.scenario, &spec.base.budget).unwrap();
        let upw =
            crate::snr_laws::snr_upw_mimo(65, &spec.base.scenario, &spec.base.budget).unwrap();
        let want = xl.linear / upw.linear;
        assert!((rows[0].snr_linear - want).abs() < 1e-15 * want);
        assert_eq!(rows[0].model, RowModel::XlOverUpw);
        assert!(rows[0].provenance.starts_with("ratio of"));
    }

    #[test]
    fn csv_header_and_shape() {
        let mut spec = tiny_spec();
        spec.values = vec![65.0];
        let rows = run_sweep(&spec).unwrap();
        let mut buf = Vec::new();
        let bytes = emit_csv(&rows, &mut buf).unwrap();
        assert_eq!(bytes, buf.len() as u64);
        let text = String::from_utf8(buf).unwrap();
        assert!(!text.contains('\r'));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1].split(',').count(), 8);
    }

    #[test]
    fn csv_empty_rows_is_header_only() {
        let mut buf = Vec::new();
        emit_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn csv_round_trips_to_twelve_digits() {
        let spec = tiny_spec();
        let rows = run_sweep(&spec).unwrap();
        let mut buf = Vec::new();
        emit_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for (line, row) in text.lines().skip(1).zip(&rows) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields[0], row.variable.name());
            let value: f64 = fields[1].parse().unwrap();
            let linear: f64 = fields[5].parse().unwrap();
            let db: f64 = fields[6].parse().unwrap();
            assert_eq!(value, row.value);
            assert!((linear / row.snr_linear - 1.0).abs() < 1e-11);
            assert!((db / row.snr_db - 1.0).abs() < 1e-11);
        }
    }

    #[test]
    fn config_minimal_and_defaults() {
        let spec = parse_sweep_config(
            "variable = antennas\n\
             values = 1,3,5\n",
        )
        .unwrap();
        assert_eq!(spec.variable, SweepVariable::AntennaCount);
        assert_eq!(spec.values, vec![1.0, 3.0, 5.0]);
        assert_eq!(spec.base.tx.elements(), 1025);
        assert_eq!(spec.base.tx.spacing(), REFERENCE_SPACING);
        assert_eq!(spec.base.tx.wavelength(), 2.0 * REFERENCE_SPACING);
        assert_eq!(spec.base.scenario.tx_range, 50.0);
        assert!((spec.base.budget.composite_gain() - 1e5).abs() < 1e-6);
        assert_eq!(spec.modes.len(), 6);
        assert_eq!(spec.estimators, vec![Estimator::ClosedForm]);
        assert_eq!(spec.output, OutputKind::Snr);
        assert_eq!(spec.trials, 10_000);
        assert_eq!(spec.seed, 42);
        assert_eq!(spec.mc_max_antennas, Some(257));
    }

    #[test]
    fn config_full_example() {
        let text = "\
# angle sweep around broadside
variable = angle_deg
values = linspace:-60:60:7
elements = 65
spacing = 0.05
wavelength = 0.1
range = 40      # meters
g_db = 30
modes = mimo
models = xl
estimators = closed_form, oracle
trials = 500
seed = 9
mc_max_antennas = 0
";
        let spec = parse_sweep_config(text).unwrap();
        assert_eq!(spec.values.len(), 7);
        assert_eq!(spec.values[0], -60.0);
        assert_eq!(spec.values[6], 60.0);
        assert!((spec.values[3]).abs() < 1e-12);
        assert_eq!(spec.base.tx.elements(), 65);
        assert_eq!(spec.base.tx.spacing(), 0.05);
        assert_eq!(spec.base.tx.wavelength(), 0.1);
        assert_eq!(spec.base.scenario.rx_range, 40.0);
        assert!((spec.base.budget.composite_gain() - 1e3).abs() < 1e-9);
        assert_eq!(spec.modes, vec![ModeSpec::new(Mode::Mimo, Model::Xl)]);
        assert_eq!(
            spec.estimators,
            vec![Estimator::ClosedForm, Estimator::Oracle]
        );
        assert_eq!(spec.trials, 500);
        assert_eq!(spec.seed, 9);
        assert_eq!(spec.mc_max_antennas, None);
    }

    #[test]
    fn config_logspace_values() {
        let spec = parse_sweep_config(
            "variable = range_m\n\
             values = logspace:10:1000:3\n",
        )
        .unwrap();
        assert!((spec.values[0] - 10.0).abs() < 1e-9);
        assert!((spec.values[1] - 100.0).abs() < 1e-9);
        assert!((spec.values[2] - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn config_rejects_unknown_and_duplicate_keys() {
        let err = parse_sweep_config(
            "variable = antennas\n\
             values = 1,3\n\
             wavelenght = 0.1\n",
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { line: 3, ref key } if key == "wavelenght"));

        let err = parse_sweep_config(
            "variable = antennas\n\
             values = 1,3\n\
             seed = 1\n\
             seed = 2\n",
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::DuplicateKey { line: 4, .. }));
    }

    #[test]
    fn config_rejects_conflicts_and_bad_values() {
        let err = parse_sweep_config(
            "variable = antennas\n\
             values = 1,3\n\
             g_db = 50\n\
             noise = 2.0\n",
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::Conflict { .. }));

        let err = parse_sweep_config(
            "variable = antennas\n\
             values = 1,3\n\
             range = 50\n\
             tx_range = 60\n",
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::Conflict { .. }));

        let err = parse_sweep_config("variable = antennas\nvalues = 2,4\n").unwrap_err();
        assert!(matches!(err, ConfigError::Spec(Error::SweepAntennaValue(_))));

        let err = parse_sweep_config("values = 1,3\n").unwrap_err();
        assert!(matches!(err, ConfigError::Missing("variable")));

        let err = parse_sweep_config("variable antennas\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 1 }));

        let err = parse_sweep_config(
            "variable = antennas\n\
             values = 1,3\n\
             trials = many\n",
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::Value { .. }));
    }

    #[test]
    fn config_explicit_budget_quartet() {
        let spec = parse_sweep_config(
            "variable = antennas\n\
             values = 1,3\n\
             power = 2.0\n\
             noise = 0.5\n",
        )
        .unwrap();
        assert_eq!(spec.base.budget.power(), 2.0);
        assert_eq!(spec.base.budget.noise(), 0.5);
        assert_eq!(spec.base.budget.reflectivity(), 1.0);
        assert!((spec.base.budget.composite_gain() - 4.0).abs() < 1e-15);
    }
}
