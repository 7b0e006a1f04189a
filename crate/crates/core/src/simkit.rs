//! Monte Carlo simulation of the full transmit / matched-filter / beamform
//! chain.
//!
//! Nothing here reuses the closed forms: waveforms are synthesized sample by
//! sample, propagated through the per-element steering entries, matched
//! filtered against each transmit code, stacked into the virtual array, and
//! beamformed. Empirical SNR separates signal from noise:
//!
//! * one noise-free pass gives the beamformed signal output `y0`;
//! * each noisy trial adds fresh complex white noise to the received samples,
//!   runs the same filter chain, and records `|y_t - y0|^2`;
//! * empirical SNR is `|y0|^2` over the mean squared fluctuation.
//!
//! Noise enters in the sample domain, before filtering, so the variance
//! preservation of the matched filter is itself part of what a simulation
//! validates. Trials run in parallel but reduce in a fixed order, and each
//! trial derives its RNG from the master seed by a counter-based stream split,
//! so results are bit-identical for a given seed regardless of worker count.
//!
//! Time is abstract: a pulse is `L` samples with unit total code energy, so
//! the matched filter peak needs no bandwidth bookkeeping. Delay and Doppler
//! are fixed at zero (the filter output is evaluated at its peak).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::f64::consts::TAU;

use crate::error::Error;
use crate::geometry::{ArrayConfig, Scenario};
use crate::numeric::{compensated_sum, CompensatedSum};
use crate::oracle::PowerAllocation;
use crate::response::{rx_steering, tx_steering, LinkBudget, SteeringVector};
use crate::snr_laws::SnrResult;

/// Shape of the transmitted waveform set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveformKind {
    /// One harmonic code per transmit element, mutually orthonormal.
    Orthogonal,
    /// A single shared code (phased-array transmission).
    Single,
}

/// Sampled waveform set, one code of `code_length` samples per lane.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformBank {
    kind: WaveformKind,
    codes: Vec<Vec<Complex64>>,
}

impl WaveformBank {
    pub fn kind(&self) -> WaveformKind {
        self.kind
    }

    pub fn count(&self) -> usize {
        self.codes.len()
    }

    pub fn code_length(&self) -> usize {
        self.codes[0].len()
    }

    /// Codes indexed by lane; lane `i` belongs to element `i - (count-1)/2`.
    pub fn codes(&self) -> &[Vec<Complex64>] {
        &self.codes
    }
}

/// Harmonic code bank: lane `i` carries frequency index `i - (count-1)/2`, so
/// any two lanes differ by an integer number of cycles over the pulse and are
/// exactly orthogonal; each code has unit energy.
pub fn make_orthogonal_codes(count: usize, code_length: usize) -> Result<WaveformBank, Error> {
    if count == 0 {
        return Err(Error::ZeroCount);
    }
    if code_length < count {
        return Err(Error::CodeLength { code_length, count });
    }
    let scale = 1.0 / (code_length as f64).sqrt();
    let codes = (0..count)
        .map(|i| {
            let freq = i as f64 - (count as f64 - 1.0) / 2.0;
            (0..code_length)
                .map(|n| {
                    Complex64::from_polar(scale, TAU * freq * n as f64 / code_length as f64)
                })
                .collect()
        })
        .collect();
    Ok(WaveformBank {
        kind: WaveformKind::Orthogonal,
        codes,
    })
}

/// Single constant unit-energy code shared by all phased-array elements.
pub fn make_single_code(code_length: usize) -> Result<WaveformBank, Error> {
    if code_length == 0 {
        return Err(Error::ZeroCount);
    }
    let scale = 1.0 / (code_length as f64).sqrt();
    Ok(WaveformBank {
        kind: WaveformKind::Single,
        codes: vec![vec![Complex64::new(scale, 0.0); code_length]],
    })
}

/// Monte Carlo run parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub trials: usize,
    /// Samples per pulse; `None` uses the transmit element count, the shortest
    /// length that keeps the orthogonal bank exact.
    pub code_length: Option<usize>,
    pub seed: u64,
    /// With noise off only the noise-free pass runs; `snr` and `noise_power`
    /// come back `None`.
    pub noise_on: bool,
}

impl McConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self {
            trials,
            code_length: None,
            seed,
            noise_on: true,
        }
    }
}

/// Result of a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    /// Empirical SNR; `None` when noise was disabled.
    pub snr: Option<SnrResult>,
    /// Magnitude of the beamformed noise-free output.
    pub signal_amplitude: f64,
    /// Mean squared fluctuation of the noisy output around the noise-free one.
    pub noise_power: Option<f64>,
    pub trials: usize,
    pub seed: u64,
}

/// RNG for one trial: same key for every trial of a run, stream set to the
/// trial counter, so trials are independent and machine-order-free.
fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Complex white noise with total power `noise` per sample, laid out as
/// `samples[n][j]` for sample `n`, receive element `j`. Draw order (samples
/// outer, elements inner, re before im) is part of the determinism contract.
fn noise_samples(
    rng: &mut ChaCha8Rng,
    code_length: usize,
    rx_count: usize,
    noise: f64,
) -> Vec<Vec<Complex64>> {
    let scale = (noise / 2.0).sqrt();
    (0..code_length)
        .map(|_| {
            (0..rx_count)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(scale * re, scale * im)
                })
                .collect()
        })
        .collect()
}

/// Matched filter of received samples against every code lane, stacked with
/// the receive index slow and the code lane fast:
/// `out[j * count + k] = sum_n samples[n][j] * conj(codes[k][n])`.
fn matched_filter(samples: &[Vec<Complex64>], bank: &WaveformBank) -> Vec<Complex64> {
    let rx_count = samples[0].len();
    let count = bank.count();
    let mut out = vec![Complex64::new(0.0, 0.0); rx_count * count];
    for (k, code) in bank.codes().iter().enumerate() {
        for (n, row) in samples.iter().enumerate() {
            let c = code[n].conj();
            for (j, &s) in row.iter().enumerate() {
                out[j * count + k] += s * c;
            }
        }
    }
    out
}

fn beamform(weights: &[Complex64], lanes: &[Complex64]) -> Complex64 {
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    for (w, y) in weights.iter().zip(lanes) {
        let p = w.conj() * y;
        re.add(p.re);
        im.add(p.im);
    }
    Complex64::new(re.value(), im.value())
}

/// Unit-norm stacked beamformer `(b/||b||) kron (a/||a||)`, receive index slow.
fn stacked_weights(a: &SteeringVector, b: &SteeringVector) -> Vec<Complex64> {
    let a_norm = a.norm();
    let b_norm = b.norm();
    let mut v = Vec::with_capacity(a.len() * b.len());
    for bj in b.entries() {
        for ak in a.entries() {
            v.push(bj / b_norm * (ak / a_norm));
        }
    }
    v
}

struct Chain {
    bank: WaveformBank,
    /// Noise-free received samples, `[n][j]`.
    clean: Vec<Vec<Complex64>>,
    weights: Vec<Complex64>,
    y0: Complex64,
}

impl Chain {
    fn run(self, budget: &LinkBudget, mc: &McConfig, label: &str) -> Result<SimOutcome, Error> {
        let signal_amplitude = self.y0.norm();
        if !mc.noise_on {
            return Ok(SimOutcome {
                snr: None,
                signal_amplitude,
                noise_power: None,
                trials: 0,
                seed: mc.seed,
            });
        }
        if mc.trials == 0 {
            return Err(Error::ZeroTrials);
        }
        let rx_count = self.clean[0].len();
        let code_length = self.bank.code_length();
        let sq_fluctuations: Vec<f64> = (0..mc.trials as u64)
            .into_par_iter()
            .map(|trial| {
                let mut rng = trial_rng(mc.seed, trial);
                let mut samples = noise_samples(&mut rng, code_length, rx_count, budget.noise());
                for (noisy, clean) in samples.iter_mut().zip(&self.clean) {
                    for (z, c) in noisy.iter_mut().zip(clean) {
                        *z += c;
                    }
                }
                let lanes = matched_filter(&samples, &self.bank);
                (beamform(&self.weights, &lanes) - self.y0).norm_sqr()
            })
            .collect();
        let noise_power = compensated_sum(sq_fluctuations) / mc.trials as f64;
        let snr = signal_amplitude * signal_amplitude / noise_power;
        Ok(SimOutcome {
            snr: Some(SnrResult::new(
                snr,
                format!("{label} trials={} seed={}", mc.trials, mc.seed),
            )),
            signal_amplitude,
            noise_power: Some(noise_power),
            trials: mc.trials,
            seed: mc.seed,
        })
    }
}

/// Simulates orthogonal-waveform (MIMO) transmission.
///
/// Every element radiates its own unit-energy code at amplitude
/// `sqrt(P / M)`; the receive samples are matched filtered against all `M`
/// codes, stacked into the `M * N` virtual array, and beamformed with the
/// matched unit-norm weights.
pub fn simulate_mimo(
    tx: &ArrayConfig,
    rx: &ArrayConfig,
    scenario: &Scenario,
    budget: &LinkBudget,
    mc: &McConfig,
) -> Result<SimOutcome, Error> {
    scenario.check()?;
    let bank = make_orthogonal_codes(tx.elements(), mc.code_length.unwrap_or(tx.elements()))?;
    let a = tx_steering(tx, budget, scenario)?;
    let b = rx_steering(rx, budget, scenario)?;
    let kappa = budget.reflectivity().sqrt();
    let amp = (budget.power() / tx.elements() as f64).sqrt();

    // Noise-free receive samples: r_j[n] = kappa * b_j * sum_m a_m * amp * s_m[n].
    let clean: Vec<Vec<Complex64>> = (0..bank.code_length())
        .map(|n| {
            let mut tx_sum = Complex64::new(0.0, 0.0);
            for (lane, code) in bank.codes().iter().enumerate() {
                let m = lane as i64 - a.half_span();
                tx_sum += a.entry(m) * code[n];
            }
            let common = kappa * amp * tx_sum;
            b.entries().iter().map(|bj| common * bj).collect()
        })
        .collect();

    let weights = stacked_weights(&a, &b);
    let y0 = beamform(&weights, &matched_filter(&clean, &bank));
    Chain {
        bank,
        clean,
        weights,
        y0,
    }
    .run(budget, mc, "monte-carlo mimo")
}

/// Simulates single-waveform (phased) transmission under a power allocation.
///
/// Element `m` radiates `sqrt(C_m) * conj(a_m) * s[n]`: conjugate steering
/// with the allocation's amplitude. The allocation must satisfy the
/// total-power constraint for this scenario.
pub fn simulate_phased(
    tx: &ArrayConfig,
    rx: &ArrayConfig,
    scenario: &Scenario,
    budget: &LinkBudget,
    alloc: &PowerAllocation,
    mc: &McConfig,
) -> Result<SimOutcome, Error> {
    scenario.check()?;
    alloc.check_constraint(tx, scenario, budget)?;
    let bank = make_single_code(mc.code_length.unwrap_or(tx.elements()))?;
    let a = tx_steering(tx, budget, scenario)?;
    let b = rx_steering(rx, budget, scenario)?;
    let kappa = budget.reflectivity().sqrt();

    // a^T x[n] = (sum_m sqrt(C_m) |a_m|^2) * s[n]; the sum is real positive.
    let gain = compensated_sum(
        tx.indices()
            .map(|m| alloc.coefficient(m).sqrt() * a.entry(m).norm_sqr()),
    );

    let code = &bank.codes()[0];
    let clean: Vec<Vec<Complex64>> = code
        .iter()
        .map(|s| {
            let common = kappa * gain * s;
            b.entries().iter().map(|bj| common * bj).collect()
        })
        .collect();

    // Single waveform: the virtual array is just the receive array.
    let b_norm = b.norm();
    let weights: Vec<Complex64> = b.entries().iter().map(|bj| bj / b_norm).collect();
    let y0 = beamform(&weights, &matched_filter(&clean, &bank));
    Chain {
        bank,
        clean,
        weights,
        y0,
    }
    .run(budget, mc, "monte-carlo phased")
}
