//! Array layout and exact element-to-target geometry.
//!
//! Both arrays are uniform linear arrays with an odd element count, indexed by
//! a signed element index `m` in `-(count-1)/2 ..= (count-1)/2`; element 0 is
//! the array center and serves as the range reference. A point target at range
//! `r` and angle `theta` off the array normal sees element `m` at the exact
//! two-point distance
//!
//! ```text
//! r_m = r * sqrt(1 - 2 m eps sin(theta) + (m eps)^2),    eps = spacing / r
//! ```
//!
//! with no Fresnel or far-field truncation. When the aperture is comparable to
//! the range these distances vary enough across the array to change both the
//! phase and the amplitude of each element's contribution, which is the regime
//! the rest of the crate models.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::ops::RangeInclusive;

use crate::error::Error;

/// One uniform linear array.
///
/// Invariants, enforced at construction: `elements` is odd and >= 1, `spacing`
/// and `wavelength` are positive and finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayConfig {
    elements: usize,
    spacing: f64,
    wavelength: f64,
}

impl ArrayConfig {
    pub fn new(elements: usize, spacing: f64, wavelength: f64) -> Result<Self, Error> {
        if elements == 0 || elements.is_multiple_of(2) {
            return Err(Error::ElementCount(elements));
        }
        check_positive("spacing", spacing)?;
        check_positive("wavelength", wavelength)?;
        Ok(Self {
            elements,
            spacing,
            wavelength,
        })
    }

    /// Array with `wavelength = 2 * spacing`, the critical sampling used by
    /// the reference configurations.
    pub fn half_wavelength_spaced(elements: usize, spacing: f64) -> Result<Self, Error> {
        Self::new(elements, spacing, 2.0 * spacing)
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// Largest valid element index; the valid range is `-half_span ..= half_span`.
    pub fn half_span(&self) -> i64 {
        ((self.elements - 1) / 2) as i64
    }

    /// Physical half-length of the array, `elements * spacing / 2`.
    pub fn half_aperture(&self) -> f64 {
        self.elements as f64 * self.spacing / 2.0
    }

    /// Signed element indices in ascending order.
    pub fn indices(&self) -> RangeInclusive<i64> {
        -self.half_span()..=self.half_span()
    }
}

/// Bistatic scene: one point target seen from a transmit array at
/// `(tx_range, tx_angle)` and a receive array at `(rx_range, rx_angle)`.
///
/// Angles are in radians, measured from each array's broadside normal; ranges
/// are in meters from each array's center element. Fields are plain data so a
/// scene can always be written down; validity (positive finite ranges, angles
/// strictly inside +-90 degrees) is checked by [`Scenario::check`] at the
/// point of use and reported in detail by [`validate_scenario`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub tx_range: f64,
    pub tx_angle: f64,
    pub rx_range: f64,
    pub rx_angle: f64,
}

impl Scenario {
    pub fn new(tx_range: f64, tx_angle: f64, rx_range: f64, rx_angle: f64) -> Self {
        Self {
            tx_range,
            tx_angle,
            rx_range,
            rx_angle,
        }
    }

    pub fn from_degrees(tx_range: f64, tx_deg: f64, rx_range: f64, rx_deg: f64) -> Self {
        Self::new(
            tx_range,
            tx_deg.to_radians(),
            rx_range,
            rx_deg.to_radians(),
        )
    }

    /// Scene with identical transmit and receive geometry.
    pub fn symmetric(range: f64, angle: f64) -> Self {
        Self::new(range, angle, range, angle)
    }

    /// Errors unless ranges are positive and finite and both angles sit
    /// strictly inside (-90, 90) degrees.
    pub fn check(&self) -> Result<(), Error> {
        check_positive("tx_range", self.tx_range)?;
        check_positive("rx_range", self.rx_range)?;
        check_angle("tx_angle", self.tx_angle)?;
        check_angle("rx_angle", self.rx_angle)?;
        Ok(())
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<(), Error> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositive { name, value })
    }
}

fn check_angle(name: &'static str, angle: f64) -> Result<(), Error> {
    if angle.abs() < FRAC_PI_2 {
        Ok(())
    } else {
        Err(Error::AngleRange {
            name,
            got_deg: angle.to_degrees(),
        })
    }
}

/// Exact distance from element `index` of an array to a target at
/// `(range, angle)`.
///
/// `index` counts elements from the array center; callers are responsible for
/// keeping it within the physical array (see [`tx_element_distance`]).
/// Equivalent to placing the target at `(range*cos(angle), range*sin(angle))`
/// with the array on the y axis and element `index` at `y = index * spacing`.
pub fn element_distance(range: f64, angle: f64, spacing: f64, index: i64) -> f64 {
    let u = index as f64 * spacing / range;
    range * (1.0 - 2.0 * u * angle.sin() + u * u).sqrt()
}

/// Distance from transmit element `index` to the target.
pub fn tx_element_distance(
    array: &ArrayConfig,
    scenario: &Scenario,
    index: i64,
) -> Result<f64, Error> {
    scenario.check()?;
    check_index(array, index)?;
    Ok(element_distance(
        scenario.tx_range,
        scenario.tx_angle,
        array.spacing,
        index,
    ))
}

/// Distance from receive element `index` to the target.
pub fn rx_element_distance(
    array: &ArrayConfig,
    scenario: &Scenario,
    index: i64,
) -> Result<f64, Error> {
    scenario.check()?;
    check_index(array, index)?;
    Ok(element_distance(
        scenario.rx_range,
        scenario.rx_angle,
        array.spacing,
        index,
    ))
}

fn check_index(array: &ArrayConfig, index: i64) -> Result<(), Error> {
    let half_span = array.half_span();
    if index.abs() > half_span {
        Err(Error::ElementIndex { index, half_span })
    } else {
        Ok(())
    }
}

/// How serious a scenario diagnostic is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    /// Results remain defined but approximation quality degrades.
    Warning,
    /// The configuration is outside the model's domain.
    Error,
}

/// One scenario diagnostic: which invariant is involved and the offending value.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub severity: Severity,
    pub invariant: &'static str,
    pub detail: String,
}

impl Violation {
    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}: {}", self.invariant, self.detail)
    }
}

/// Spacing-to-range thresholds used by [`validate_scenario`].
///
/// The closed forms in this crate replace element sums by integrals, which is
/// valid when `spacing / range` is small. Above `epsilon_warn` accuracy
/// degrades measurably; at `epsilon_error` and beyond the approximation is no
/// longer meaningful and computations refuse to run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationLimits {
    pub epsilon_error: f64,
    pub epsilon_warn: f64,
}

/// Largest spacing-to-range ratio the closed forms accept.
pub const EPSILON_LIMIT: f64 = 0.1;

impl Default for ValidationLimits {
    fn default() -> Self {
        Self {
            epsilon_error: EPSILON_LIMIT,
            epsilon_warn: 0.01,
        }
    }
}

/// Checks a scene against both arrays with the default limits.
///
/// Returns an empty list exactly when every invariant holds; otherwise one
/// entry per violated invariant, errors and warnings mixed in check order.
pub fn validate_scenario(
    scenario: &Scenario,
    tx_array: &ArrayConfig,
    rx_array: &ArrayConfig,
) -> Vec<Violation> {
    validate_scenario_with(&ValidationLimits::default(), scenario, tx_array, rx_array)
}

/// [`validate_scenario`] with caller-supplied spacing-to-range limits.
pub fn validate_scenario_with(
    limits: &ValidationLimits,
    scenario: &Scenario,
    tx_array: &ArrayConfig,
    rx_array: &ArrayConfig,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut side = |name: &'static str, range: f64, angle: f64, array: &ArrayConfig| {
        let range_ok = range.is_finite() && range > 0.0;
        if !range_ok {
            out.push(Violation {
                severity: Severity::Error,
                invariant: "range must be positive and finite",
                detail: format!("{name} range = {range}"),
            });
        }
        // `>=` alone would wave NaN through.
        if angle.abs() >= FRAC_PI_2 || angle.is_nan() {
            out.push(Violation {
                severity: Severity::Error,
                invariant: "angle must lie strictly inside (-90, 90) degrees",
                detail: format!("{name} angle = {} degrees", angle.to_degrees()),
            });
        }
        if range_ok {
            let epsilon = array.spacing / range;
            if epsilon >= limits.epsilon_error {
                out.push(Violation {
                    severity: Severity::Error,
                    invariant: "spacing/range ratio exceeds model validity",
                    detail: format!(
                        "{name} spacing/range = {epsilon:.4e} >= {:.4e}",
                        limits.epsilon_error
                    ),
                });
            } else if epsilon > limits.epsilon_warn {
                out.push(Violation {
                    severity: Severity::Warning,
                    invariant: "spacing/range ratio in degraded-accuracy band",
                    detail: format!(
                        "{name} spacing/range = {epsilon:.4e} > {:.4e}",
                        limits.epsilon_warn
                    ),
                });
            }
        }
    };
    side("transmit", scenario.tx_range, scenario.tx_angle, tx_array);
    side("receive", scenario.rx_range, scenario.rx_angle, rx_array);
    out
}
