//! Error type shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Domain, configuration, and I/O failures.
///
/// Every fallible operation in this crate returns this type. Variants carry
/// the offending values so callers can report them without re-deriving
/// context.
#[derive(Debug, Error)]
pub enum Error {
    /// Arrays are indexed symmetrically around their center element, which
    /// requires an odd element count.
    #[error("element count must be an odd integer >= 1, got {0}")]
    ElementCount(usize),

    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    /// Targets must sit strictly in front of the array: |angle| < 90 degrees.
    #[error("{name} must satisfy |angle| < 90 degrees, got {got_deg} degrees")]
    AngleRange { name: &'static str, got_deg: f64 },

    #[error("element index {index} out of range; |index| <= {half_span} required")]
    ElementIndex { index: i64, half_span: i64 },

    /// The spacing-to-range ratio is too large for the element-sum integral
    /// approximations to hold.
    #[error("{side} spacing/range ratio {epsilon:.4e} exceeds the model validity limit {limit}")]
    EpsilonTooLarge {
        side: &'static str,
        epsilon: f64,
        limit: f64,
    },

    #[error(
        "power allocation violates the total-power constraint \
         (relative residual {residual:.3e} > {limit:.0e})"
    )]
    PowerConstraint { residual: f64, limit: f64 },

    #[error("allocation coefficients must be nonnegative and finite; coefficient {index} is {value}")]
    BadCoefficient { index: usize, value: f64 },

    #[error("allocation has {got} coefficients but the transmit array has {expected} elements")]
    CoefficientCount { got: usize, expected: usize },

    /// Orthogonal code banks need at least as many samples as waveforms.
    #[error("code length {code_length} is shorter than the waveform count {count}")]
    CodeLength { code_length: usize, count: usize },

    #[error("trial count must be >= 1")]
    ZeroTrials,

    #[error("count must be >= 1")]
    ZeroCount,

    #[error("custom allocations carry explicit coefficients; build one with PowerAllocation::custom")]
    CustomPolicyWithoutCoefficients,

    #[error("unknown {what} `{got}`")]
    UnknownName { what: &'static str, got: String },

    #[error("unknown figure preset `{0}` (expected fig2, fig3, or fig4)")]
    UnknownPreset(String),

    #[error("sweep values must be non-empty, finite, and strictly increasing")]
    SweepValues,

    #[error("antenna-count sweep values must be odd integers >= 1, got {0}")]
    SweepAntennaValue(f64),

    #[error("monte-carlo estimation needs the spherical-wavefront model, not the plane-wave one")]
    MonteCarloNeedsSpherical,

    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
