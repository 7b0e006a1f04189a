//! Brute-force element-sum references and power allocation.
//!
//! Everything here works directly on per-element distances with no integral
//! approximation; the closed forms in [`crate::snr_laws`] are tested against
//! these sums. The only approximation left is f64 arithmetic, kept tight with
//! compensated summation.

use num_complex::Complex64;

use crate::error::Error;
use crate::geometry::{tx_element_distance, ArrayConfig, Scenario};
use crate::numeric::CompensatedSum;
use crate::response::{probe_steering, rx_steering, tx_steering, LinkBudget, Side, SteeringVector};
use crate::snr_laws::SnrResult;

/// How transmit power is spread across phased-array elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocationPolicy {
    /// Same radiated power per element: `C_m = P r_m^2 / (M beta)`.
    Equal,
    /// SNR-maximizing: all of `C_m` constant, `C_m = P / ||a||^2`.
    Optimal,
    /// Caller-supplied coefficients.
    Custom,
}

/// Largest relative residual accepted on the total-power constraint
/// `sum_m C_m beta / r_m^2 = P`.
pub const POWER_CONSTRAINT_TOL: f64 = 1e-9;

/// Per-element power coefficients `C_m`, ordered by ascending element index.
///
/// `C_m` scales the element's waveform so that the power radiated through the
/// path gain `beta / r_m^2` sums to the budget's `P` across the array. Built
/// against the true element distances of a scenario (the transmitter's belief
/// matches the scene); custom coefficient sets are accepted as-is and only
/// checked, never renormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    policy: AllocationPolicy,
    coefficients: Vec<f64>,
}

impl PowerAllocation {
    /// Wraps explicit coefficients. The constraint is checked later, at the
    /// point of use, against the scenario the allocation is used with.
    pub fn custom(coefficients: Vec<f64>) -> Result<Self, Error> {
        if coefficients.is_empty() || coefficients.len().is_multiple_of(2) {
            return Err(Error::ElementCount(coefficients.len()));
        }
        for (index, &value) in coefficients.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::BadCoefficient { index, value });
            }
        }
        Ok(Self {
            policy: AllocationPolicy::Custom,
            coefficients,
        })
    }

    pub fn policy(&self) -> AllocationPolicy {
        self.policy
    }

    pub fn elements(&self) -> usize {
        self.coefficients.len()
    }

    pub fn half_span(&self) -> i64 {
        ((self.coefficients.len() - 1) / 2) as i64
    }

    /// Coefficient for signed element index `index`.
    ///
    /// Panics if `|index| > half_span`.
    pub fn coefficient(&self, index: i64) -> f64 {
        self.coefficients[(index + self.half_span()) as usize]
    }

    /// Coefficients ordered by ascending element index.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Relative residual of the total-power constraint for this scenario.
    pub fn constraint_residual(
        &self,
        tx: &ArrayConfig,
        scenario: &Scenario,
        budget: &LinkBudget,
    ) -> Result<f64, Error> {
        if self.elements() != tx.elements() {
            return Err(Error::CoefficientCount {
                got: self.elements(),
                expected: tx.elements(),
            });
        }
        scenario.check()?;
        let mut acc = CompensatedSum::new();
        for m in tx.indices() {
            let r_m = tx_element_distance(tx, scenario, m)?;
            acc.add(self.coefficient(m) * budget.ref_gain() / (r_m * r_m));
        }
        Ok((acc.value() / budget.power() - 1.0).abs())
    }

    /// Errors unless the constraint holds to [`POWER_CONSTRAINT_TOL`].
    pub fn check_constraint(
        &self,
        tx: &ArrayConfig,
        scenario: &Scenario,
        budget: &LinkBudget,
    ) -> Result<(), Error> {
        let residual = self.constraint_residual(tx, scenario, budget)?;
        if residual > POWER_CONSTRAINT_TOL {
            Err(Error::PowerConstraint {
                residual,
                limit: POWER_CONSTRAINT_TOL,
            })
        } else {
            Ok(())
        }
    }
}

/// Builds the equal or optimal allocation against the true element distances.
///
/// `Custom` is rejected here: explicit coefficients come in through
/// [`PowerAllocation::custom`].
pub fn power_alloc(
    policy: AllocationPolicy,
    tx: &ArrayConfig,
    scenario: &Scenario,
    budget: &LinkBudget,
) -> Result<PowerAllocation, Error> {
    scenario.check()?;
    let coefficients = match policy {
        AllocationPolicy::Custom => return Err(Error::CustomPolicyWithoutCoefficients),
        AllocationPolicy::Equal => {
            let m = tx.elements() as f64;
            tx.indices()
                .map(|idx| {
                    let r = tx_element_distance(tx, scenario, idx)?;
                    Ok(budget.power() * r * r / (m * budget.ref_gain()))
                })
                .collect::<Result<Vec<_>, Error>>()?
        }
        AllocationPolicy::Optimal => {
            // Constant coefficient P / ||a||^2; uses the exact norm so the
            // constraint holds to summation accuracy, not integral accuracy.
            let norm_sq = tx_steering(tx, budget, scenario)?.norm_sq_exact();
            vec![budget.power() / norm_sq; tx.elements()]
        }
    };
    Ok(PowerAllocation {
        policy,
        coefficients,
    })
}

/// MIMO SNR by direct summation:
/// `P |kappa|^2 / (sigma^2 M) * ||b||^2 * ||a||^2` with exact norms.
pub fn exact_snr_mimo(
    tx: &ArrayConfig,
    rx: &ArrayConfig,
    scenario: &Scenario,
    budget: &LinkBudget,
) -> Result<SnrResult, Error> {
    let a = tx_steering(tx, budget, scenario)?;
    let b = rx_steering(rx, budget, scenario)?;
    let value = budget.power() * budget.reflectivity() * b.norm_sq_exact() * a.norm_sq_exact()
        / (budget.noise() * tx.elements() as f64);
    Ok(SnrResult::new(value, "element-sum oracle mimo"))
}

/// Phased SNR by direct summation:
/// `|kappa|^2 beta^2 ||b||^2 / sigma^2 * (sum_m sqrt(C_m) / r_m^2)^2`.
///
/// The allocation must satisfy the total-power constraint for this scenario;
/// violations are an error, never silently rescaled.
pub fn exact_snr_phased(
    alloc: &PowerAllocation,
    tx: &ArrayConfig,
    rx: &ArrayConfig,
    scenario: &Scenario,
    budget: &LinkBudget,
) -> Result<SnrResult, Error> {
    alloc.check_constraint(tx, scenario, budget)?;
    let mut amp = CompensatedSum::new();
    for m in tx.indices() {
        let r_m = tx_element_distance(tx, scenario, m)?;
        amp.add(alloc.coefficient(m).sqrt() / (r_m * r_m));
    }
    let s = amp.value();
    let beta_sq = budget.ref_gain() * budget.ref_gain();
    let b = rx_steering(rx, budget, scenario)?;
    let value = budget.reflectivity() * beta_sq * b.norm_sq_exact() * s * s / budget.noise();
    let label = match alloc.policy() {
        AllocationPolicy::Equal => "element-sum oracle phased equal",
        AllocationPolicy::Optimal => "element-sum oracle phased optimal",
        AllocationPolicy::Custom => "element-sum oracle phased custom",
    };
    Ok(SnrResult::new(value, label))
}

fn inner_product(u: &SteeringVector, v: &SteeringVector) -> Complex64 {
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    for (a, b) in u.entries().iter().zip(v.entries()) {
        let p = a.conj() * b;
        re.add(p.re);
        im.add(p.im);
    }
    Complex64::new(re.value(), im.value())
}

/// Normalized beamforming response for a probe scene against the true scene.
///
/// Returns `|<a', a>| |<b', b>| / (||a'|| ||a|| ||b'|| ||b||)`, the factorized
/// magnitude response of the stacked virtual array; 1.0 exactly at the matched
/// probe, strictly below 1 elsewhere. Scanning a grid of probes and taking the
/// argmax is the paper's joint range/angle estimator.
pub fn beamform_scan(
    tx: &ArrayConfig,
    rx: &ArrayConfig,
    scenario: &Scenario,
    budget: &LinkBudget,
    probe: &Scenario,
) -> Result<f64, Error> {
    probe.check()?;
    let a = tx_steering(tx, budget, scenario)?;
    let b = rx_steering(rx, budget, scenario)?;
    let a_probe = probe_steering(Side::Transmit, tx, budget, probe.tx_range, probe.tx_angle)?;
    let b_probe = probe_steering(Side::Receive, rx, budget, probe.rx_range, probe.rx_angle)?;
    let tx_response = inner_product(&a_probe, &a).norm() / (a_probe.norm() * a.norm());
    let rx_response = inner_product(&b_probe, &b).norm() / (b_probe.norm() * b.norm());
    Ok(tx_response * rx_response)
}
