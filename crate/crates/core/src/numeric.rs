//! Compensated summation and a few scalar helpers.

/// Neumaier variant of Kahan summation.
///
/// Keeps a running correction term so that long sums of terms with mixed
/// magnitudes stay accurate to within a few ulps of the exact result. The
/// element sums in this crate run over up to ~1e5 terms spanning several
/// orders of magnitude, where naive summation costs more digits than some of
/// the tolerances we verify against.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    correction: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, term: f64) {
        let t = self.sum + term;
        if self.sum.abs() >= term.abs() {
            self.correction += (self.sum - t) + term;
        } else {
            self.correction += (term - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.correction
    }
}

/// Sums an iterator with compensation.
pub fn compensated_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::new();
    for t in terms {
        acc.add(t);
    }
    acc.value()
}

/// Linear power ratio to decibels.
pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Decibels to linear power ratio.
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `asinh` evaluated through `ln_1p`.
///
/// The textbook form `ln(x + sqrt(1 + x^2))` loses every significant digit
/// for small negative `x` once the argument of the log rounds to 1. Rewriting
/// `x + sqrt(1+x^2) - 1` as `x + x^2/(1 + sqrt(1+x^2))` keeps the quantity
/// additive and lets `ln_1p` preserve full precision near zero, which matters
/// because differences of nearly equal asinh values appear in the phased-gain
/// factor.
pub fn stable_asinh(x: f64) -> f64 {
    let a = x.abs();
    let shifted = a + a * a / (1.0 + (1.0 + a * a).sqrt());
    shifted.ln_1p().copysign(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancelled_terms() {
        let mut acc = CompensatedSum::new();
        acc.add(1.0);
        acc.add(1e-16);
        acc.add(1e-16);
        acc.add(-1.0);
        assert_eq!(acc.value(), 2e-16);
    }

    #[test]
    fn compensated_sum_matches_exact_harmonic_tail() {
        // Sum 1/k backwards and forwards; compensation makes both orders agree
        // to the last ulp while naive summation would not.
        let fwd = compensated_sum((1..=100_000).map(|k| 1.0 / k as f64));
        let rev = compensated_sum((1..=100_000).rev().map(|k| 1.0 / k as f64));
        assert_eq!(fwd, rev);
    }

    #[test]
    fn db_round_trip() {
        assert!((to_db(1e5) - 50.0).abs() < 1e-12);
        assert!((from_db(50.0) - 1e5).abs() < 1e-7);
    }

    #[test]
    fn stable_asinh_matches_libm_away_from_zero() {
        for &x in &[-50.0, -3.0, -0.5, 0.4, 2.0, 1e4, 5e6] {
            let got = stable_asinh(x);
            let want = x.asinh();
            assert!(
                (got - want).abs() <= 4.0 * f64::EPSILON * want.abs(),
                "x={x}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn stable_asinh_keeps_precision_near_zero() {
        // asinh(x) = x - x^3/6 + O(x^5); at x = 1e-9 the cubic term is 1e-27,
        // far below resolution, so the result must equal x exactly.
        assert_eq!(stable_asinh(1e-9), 1e-9);
        assert_eq!(stable_asinh(-1e-9), -1e-9);
        assert_eq!(stable_asinh(0.0), 0.0);
    }

    #[test]
    fn stable_asinh_is_odd() {
        for &x in &[1e-12, 0.3, 7.0, 1e5] {
            assert_eq!(stable_asinh(-x), -stable_asinh(x));
        }
    }
}
