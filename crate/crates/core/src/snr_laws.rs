//! Closed-form sensing SNR laws for both array models and operating modes.
//!
//! All expressions share the composite scale `P * |kappa|^2 * beta^2 / sigma^2`
//! (see [`LinkBudget::composite_gain`]) and differ in how array geometry
//! enters:
//!
//! * spherical-wavefront ("xl") forms integrate per-element amplitude decay
//!   and depend on ranges and angles through the subtended [`angular_span`];
//! * plane-wave ("upw") forms treat every element as equidistant and scale
//!   with bare element counts.
//!
//! MIMO transmits orthogonal waveforms and pays a `1/M` waveform-separation
//! cost; a phased array transmits one waveform through a power allocation
//! across elements. With the optimal allocation the phased SNR is exactly `M`
//! times the MIMO SNR; with equal allocation the transmit side enters through
//! the amplitude-sum factor [`psi`] instead.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::geometry::{ArrayConfig, Scenario, EPSILON_LIMIT};
use crate::numeric::{stable_asinh, to_db};
use crate::response::{angular_span, LinkBudget};

/// One SNR value in linear and decibel form, labeled with how it was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrResult {
    pub linear: f64,
    pub db: f64,
    /// Provenance label, e.g. `closed-form xl mimo`. Never contains commas so
    /// it can be embedded in CSV untouched.
    pub source: String,
}

impl SnrResult {
    pub fn new(linear: f64, source: impl Into<String>) -> Self {
        Self {
            linear,
            db: to_db(linear),
            source: source.into(),
        }
    }
}

/// Operating mode of the transmit array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Orthogonal waveform per element.
    Mimo,
    /// Single waveform, equal power per element.
    PhasedEqual,
    /// Single waveform, power weighted toward nearer elements.
    PhasedOptimal,
}

/// Wavefront model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    /// Spherical wavefront with per-element amplitude decay.
    Xl,
    /// Uniform plane wave: far-field approximation.
    Upw,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Mimo => "mimo",
            Mode::PhasedEqual => "phased_equal",
            Mode::PhasedOptimal => "phased_optimal",
        })
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Xl => "xl",
            Model::Upw => "upw",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.replace('-', "_").as_str() {
            "mimo" => Ok(Mode::Mimo),
            "phased_equal" => Ok(Mode::PhasedEqual),
            "phased_optimal" => Ok(Mode::PhasedOptimal),
            _ => Err(Error::UnknownName {
                what: "mode",
                got: s.to_string(),
            }),
        }
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "xl" => Ok(Model::Xl),
            "upw" => Ok(Model::Upw),
            _ => Err(Error::UnknownName {
                what: "model",
                got: s.to_string(),
            }),
        }
    }
}

/// A (mode, model) pair selecting one SNR law.
///
/// All six combinations are accepted; `(PhasedEqual, Upw)` evaluates the same
/// law as `(PhasedOptimal, Upw)` because equal allocation is already optimal
/// when every element sees the same path gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeSpec {
    pub mode: Mode,
    pub model: Model,
}

impl ModeSpec {
    pub fn new(mode: Mode, model: Model) -> Self {
        Self { mode, model }
    }

    /// The five distinct laws (the sixth combination is an alias).
    pub fn all_distinct() -> [ModeSpec; 5] {
        [
            ModeSpec::new(Mode::Mimo, Model::Xl),
            ModeSpec::new(Mode::Mimo, Model::Upw),
            ModeSpec::new(Mode::PhasedEqual, Model::Xl),
            ModeSpec::new(Mode::PhasedOptimal, Model::Xl),
            ModeSpec::new(Mode::PhasedOptimal, Model::Upw),
        ]
    }
}

impl fmt::Display for ModeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.mode, self.model)
    }
}

fn check_epsilon(side: &'static str, spacing: f64, range: f64) -> Result<(), Error> {
    let epsilon = spacing / range;
    if epsilon >= EPSILON_LIMIT {
        Err(Error::EpsilonTooLarge {
            side,
            epsilon,
            limit: EPSILON_LIMIT,
        })
    } else {
        Ok(())
    }
}

/// Shared core of the spherical-wavefront MIMO and phased-optimal laws:
/// `P |kappa|^2 beta^2 span_t span_r / (sigma^2 d_T d_R r l cos(theta) cos(phi))`.
fn xl_pair_factor(
    tx: &ArrayConfig,
    rx: &ArrayConfig,
    scenario: &Scenario,
    budget: &LinkBudget,
) -> Result<f64, Error> {
    scenario.check()?;
    check_epsilon("transmit", tx.spacing(), scenario.tx_range)?;
    check_epsilon("receive", rx.spacing(), scenario.rx_range)?;
    let span_t = angular_span(
        tx.elements(),
        tx.spacing(),
        scenario.tx_range,
        scenario.tx_angle,
    )?;
    let span_r = angular_span(
        rx.elements(),
        rx.spacing(),
        scenario.rx_range,
        scenario.rx_angle,
    )?;
    Ok(budget.composite_gain() * span_t * span_r
        / (tx.spacing()
            * rx.spacing()
            * scenario.tx_range
            * scenario.rx_range
            * scenario.tx_angle.cos()
            * scenario.rx_angle.cos()))
}

/// Spherical-wavefront MIMO SNR.
///
/// Falls off past an interior maximum as the array outgrows the target range:
/// the span saturates at pi while the orthogonal-waveform cost keeps growing
/// with `M`.
pub fn snr_xl_mimo(
    tx: &ArrayConfig,
    rx: &ArrayConfig,
    scenario: &Scenario,
    budget: &LinkBudget,
) -> Result<SnrResult, Error> {
    let value = xl_pair_factor(tx, rx, scenario, budget)? / tx.elements() as f64;
    Ok(SnrResult::new(value, "closed-form xl mimo"))
}

/// Plane-wave MIMO SNR: `P |kappa|^2 beta^2 N / (sigma^2 r^2 l^2)`.
///
/// Grows without bound in `N` and does not depend on the transmit count.
pub fn snr_upw_mimo(
    rx_elements: usize,
    scenario: &Scenario,
    budget: &LinkBudget,
) -> Result<SnrResult, Error> {
    Ok(SnrResult::new(
        upw_mimo_value(rx_elements, scenario, budget)?,
        "closed-form upw mimo",
    ))
}

fn upw_mimo_value(
    rx_elements: usize,
    scenario: &Scenario,
    budget: &LinkBudget,
) -> Result<f64, Error> {
    if rx_elements == 0 {
        return Err(Error::ZeroCount);
    }
    scenario.check()?;
    let r2 = scenario.tx_range * scenario.tx_range;
    let l2 = scenario.rx_range * scenario.rx_range;
    Ok(budget.composite_gain() * rx_elements as f64 / (r2 * l2))
}

/// Amplitude-sum factor for equal-allocation phased transmission,
/// approximating `sum_m 1/r_m` by its integral:
///
/// ```text
/// psi = (asinh(p2) - asinh(p1)) / spacing,
/// p1 = (-count*eps/2 - sin(angle)) / cos(angle),
/// p2 = ( count*eps/2 - sin(angle)) / cos(angle),    eps = spacing / range
/// ```
///
/// Units are 1/meters. Requires `eps < 0.1`; accuracy further assumes the
/// spacing is small against the transverse distance `range * cos(angle)`, the
/// same condition the norm integral needs.
pub fn psi(count: usize, spacing: f64, range: f64, angle: f64) -> Result<f64, Error> {
    if count == 0 {
        return Err(Error::ZeroCount);
    }
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::NonPositive {
            name: "spacing",
            value: spacing,
        });
    }
    if !(range.is_finite() && range > 0.0) {
        return Err(Error::NonPositive {
            name: "range",
            value: range,
        });
    }
    // `>=` alone would wave NaN through.
    if angle.abs() >= std::f64::consts::FRAC_PI_2 || angle.is_nan() {
        return Err(Error::AngleRange {
            name: "angle",
            got_deg: angle.to_degrees(),
        });
    }
    check_epsilon("psi", spacing, range)?;
    let eps = spacing / range;
    let (s, c) = angle.sin_cos();
    let half = count as f64 * eps / 2.0;
    let p1 = (-half - s) / c;
    let p2 = (half - s) / c;
    // range * eps == spacing exactly, so divide by the spacing directly.
    Ok((stable_asinh(p2) - stable_asinh(p1)) / spacing)
}

/// Spherical-wavefront phased SNR with equal power per element.
pub fn snr_xl_phased_equal(
    tx: &ArrayConfig,
    rx: &ArrayConfig,
    scenario: &Scenario,
    budget: &LinkBudget,
) -> Result<SnrResult, Error> {
    scenario.check()?;
    check_epsilon("receive", rx.spacing(), scenario.rx_range)?;
    let span_r = angular_span(
        rx.elements(),
        rx.spacing(),
        scenario.rx_range,
        scenario.rx_angle,
    )?;
    let psi_t = psi(
        tx.elements(),
        tx.spacing(),
        scenario.tx_range,
        scenario.tx_angle,
    )?;
    let value = budget.composite_gain() * span_r * psi_t * psi_t
        / (tx.elements() as f64 * rx.spacing() * scenario.rx_range * scenario.rx_angle.cos());
    Ok(SnrResult::new(value, "closed-form xl phased equal"))
}

/// Spherical-wavefront phased SNR with the optimal allocation; exactly `M`
/// times [`snr_xl_mimo`].
pub fn snr_xl_phased_optimal(
    tx: &ArrayConfig,
    rx: &ArrayConfig,
    scenario: &Scenario,
    budget: &LinkBudget,
) -> Result<SnrResult, Error> {
    let value = xl_pair_factor(tx, rx, scenario, budget)?;
    Ok(SnrResult::new(value, "closed-form xl phased optimal"))
}

/// Plane-wave phased SNR: `P |kappa|^2 beta^2 M N / (sigma^2 r^2 l^2)`.
///
/// Under the plane-wave model every element has the same path gain, so equal
/// allocation is already optimal and there is a single phased law.
pub fn snr_upw_phased(
    tx_elements: usize,
    rx_elements: usize,
    scenario: &Scenario,
    budget: &LinkBudget,
) -> Result<SnrResult, Error> {
    if tx_elements == 0 {
        return Err(Error::ZeroCount);
    }
    let value = upw_mimo_value(rx_elements, scenario, budget)? * tx_elements as f64;
    Ok(SnrResult::new(value, "closed-form upw phased"))
}

/// Limit of [`snr_xl_phased_optimal`] as both arrays grow without bound: each
/// angular span saturates at pi.
///
/// Finite for any scene, which is the key qualitative difference from the
/// plane-wave laws.
pub fn snr_phased_limit(
    scenario: &Scenario,
    budget: &LinkBudget,
    tx_spacing: f64,
    rx_spacing: f64,
) -> Result<SnrResult, Error> {
    scenario.check()?;
    if !(tx_spacing.is_finite() && tx_spacing > 0.0) {
        return Err(Error::NonPositive {
            name: "tx_spacing",
            value: tx_spacing,
        });
    }
    if !(rx_spacing.is_finite() && rx_spacing > 0.0) {
        return Err(Error::NonPositive {
            name: "rx_spacing",
            value: rx_spacing,
        });
    }
    let pi_sq = std::f64::consts::PI * std::f64::consts::PI;
    let value = budget.composite_gain() * pi_sq
        / (tx_spacing
            * rx_spacing
            * scenario.tx_range
            * scenario.rx_range
            * scenario.tx_angle.cos()
            * scenario.rx_angle.cos());
    Ok(SnrResult::new(value, "closed-form phased limit"))
}

/// Which side of the link is far enough to flatten its wavefront.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReducedCase {
    /// Transmit aperture small against the transmit range.
    FarTransmit,
    /// Receive aperture small against the receive range.
    FarReceive,
    /// Both sides far: collapses to the plane-wave MIMO law.
    FarBoth,
}

/// Aperture half-lengths must stay at least this factor under the range for a
/// far-side reduction to be trustworthy.
pub const REDUCTION_MARGIN: f64 = 10.0;

/// Far-side reductions of the spherical MIMO law.
///
/// The regime is advisory: the formula is evaluated regardless, and when the
/// relevant `range / half_aperture` margin is below [`REDUCTION_MARGIN`] a
/// warning is appended to the result's source label.
pub fn snr_xl_mimo_reduced(
    case: ReducedCase,
    tx: &ArrayConfig,
    rx: &ArrayConfig,
    scenario: &Scenario,
    budget: &LinkBudget,
) -> Result<SnrResult, Error> {
    scenario.check()?;
    let g = budget.composite_gain();
    let (value, label, margin) = match case {
        ReducedCase::FarTransmit => {
            check_epsilon("receive", rx.spacing(), scenario.rx_range)?;
            let span_r = angular_span(
                rx.elements(),
                rx.spacing(),
                scenario.rx_range,
                scenario.rx_angle,
            )?;
            let value = g * span_r
                / (rx.spacing()
                    * scenario.tx_range
                    * scenario.tx_range
                    * scenario.rx_range
                    * scenario.rx_angle.cos());
            (
                value,
                "closed-form xl mimo far-transmit",
                scenario.tx_range / tx.half_aperture(),
            )
        }
        ReducedCase::FarReceive => {
            check_epsilon("transmit", tx.spacing(), scenario.tx_range)?;
            let span_t = angular_span(
                tx.elements(),
                tx.spacing(),
                scenario.tx_range,
                scenario.tx_angle,
            )?;
            let value = g * rx.elements() as f64 * span_t
                / (tx.elements() as f64
                    * tx.spacing()
                    * scenario.tx_range
                    * scenario.tx_angle.cos()
                    * scenario.rx_range
                    * scenario.rx_range);
            (
                value,
                "closed-form xl mimo far-receive",
                scenario.rx_range / rx.half_aperture(),
            )
        }
        ReducedCase::FarBoth => {
            let value = upw_mimo_value(rx.elements(), scenario, budget)?;
            let margin = (scenario.tx_range / tx.half_aperture())
                .min(scenario.rx_range / rx.half_aperture());
            (value, "closed-form xl mimo far-both", margin)
        }
    };
    let source = if margin < REDUCTION_MARGIN {
        format!("{label} (regime margin {margin:.2}x below {REDUCTION_MARGIN:.0}x)")
    } else {
        label.to_string()
    };
    Ok(SnrResult::new(value, source))
}

/// Evaluates the law selected by `spec`.
pub fn evaluate(
    spec: ModeSpec,
    tx: &ArrayConfig,
    rx: &ArrayConfig,
    scenario: &Scenario,
    budget: &LinkBudget,
) -> Result<SnrResult, Error> {
    match (spec.mode, spec.model) {
        (Mode::Mimo, Model::Xl) => snr_xl_mimo(tx, rx, scenario, budget),
        (Mode::Mimo, Model::Upw) => snr_upw_mimo(rx.elements(), scenario, budget),
        (Mode::PhasedEqual, Model::Xl) => snr_xl_phased_equal(tx, rx, scenario, budget),
        (Mode::PhasedOptimal, Model::Xl) => snr_xl_phased_optimal(tx, rx, scenario, budget),
        (_, Model::Upw) => snr_upw_phased(tx.elements(), rx.elements(), scenario, budget),
    }
}
