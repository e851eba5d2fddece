use serde::Serialize;

use super::{check_prior, log_prior_ratio, q, DecisionBit};
use crate::channel::{Emission, Link, MuiModel};
use crate::error::{ensure, Error, Result};

/// Likelihood ratio test on one peak-concentration sample,
/// `H0: c ~ N(μ, σ²)` against `H1: c ~ N(s + μ, σ²)`.
///
/// The log-likelihood ratio is affine in `c`, so the test reduces to
/// `α̂·c > γ` with `α̂ = s/σ²` and
/// `γ = (s² + 2sμ)/(2σ²) + ln((1-β)/β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelayDetector {
    signal: f64,
    mui: MuiModel,
    prior: f64,
    weight: f64,
    threshold: f64,
    concentration_threshold: f64,
}

impl RelayDetector {
    /// Detector for `emission` molecules released across `link`.
    pub fn new(emission: Emission, link: &Link, mui: MuiModel, prior: f64) -> Result<Self> {
        Self::from_signal(emission.peak_concentration(link), mui, prior)
    }

    /// Detector for a known received signal level `s`.
    pub fn from_signal(signal: f64, mui: MuiModel, prior: f64) -> Result<Self> {
        check_prior(prior)?;
        if !(signal.is_finite() && signal > 0.0) {
            return Err(Error::DegenerateDetector { signal });
        }
        let var = mui.variance();
        let mu = mui.mean();
        let log_ratio = log_prior_ratio(prior);
        let weight = signal / var;
        let threshold = (signal * signal + 2.0 * signal * mu) / (2.0 * var) + log_ratio;
        // γ / α̂, rearranged so the log-prior term does not cancel against μ.
        let concentration_threshold = 0.5 * signal + mu + var / signal * log_ratio;
        Ok(Self {
            signal,
            mui,
            prior,
            weight,
            threshold,
            concentration_threshold,
        })
    }

    pub fn signal(&self) -> f64 {
        self.signal
    }

    pub fn mui(&self) -> MuiModel {
        self.mui
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }

    /// `α̂ = s/σ²`.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// `γ`, the threshold on `α̂·c`.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// `γ' = γ/α̂`, the equivalent threshold on the concentration itself.
    pub fn concentration_threshold(&self) -> f64 {
        self.concentration_threshold
    }

    pub fn statistic(&self, concentration: f64) -> f64 {
        self.weight * concentration
    }

    /// One iff `α̂·c > γ`. Ties decide zero.
    #[inline]
    pub fn decide(&self, concentration: f64) -> DecisionBit {
        DecisionBit::from(self.weight * concentration > self.threshold)
    }

    /// Detection and false-alarm probabilities of [`decide`](Self::decide).
    pub fn performance(&self) -> RelayPerformance {
        let sigma = self.mui.std();
        let log_term = sigma / self.signal * log_prior_ratio(self.prior);
        let half_snr = 0.5 * self.signal / sigma;
        // (γ' - s - μ)/σ and (γ' - μ)/σ
        RelayPerformance::from_arguments(log_term - half_snr, log_term + half_snr)
    }

    /// `β·(1 - P_D) + (1 - β)·P_FA`.
    pub fn error_probability(&self) -> f64 {
        let perf = self.performance();
        self.prior * perf.p_miss() + (1.0 - self.prior) * perf.p_fa()
    }
}

/// Detection/false-alarm pair of a binary detector.
///
/// The complements are kept alongside so that probabilities near one do
/// not lose their small complement to rounding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelayPerformance {
    p_d: f64,
    p_fa: f64,
    #[serde(skip)]
    p_miss: f64,
    #[serde(skip)]
    p_cr: f64,
}

impl RelayPerformance {
    pub fn new(p_d: f64, p_fa: f64) -> Result<Self> {
        ensure((0.0..=1.0).contains(&p_d), "P_D", p_d, "must lie in [0, 1]")?;
        ensure(
            (0.0..=1.0).contains(&p_fa),
            "P_FA",
            p_fa,
            "must lie in [0, 1]",
        )?;
        Ok(Self {
            p_d,
            p_fa,
            p_miss: 1.0 - p_d,
            p_cr: 1.0 - p_fa,
        })
    }

    /// A relay that never errs.
    pub fn perfect() -> Self {
        Self {
            p_d: 1.0,
            p_fa: 0.0,
            p_miss: 0.0,
            p_cr: 1.0,
        }
    }

    /// From the standardized threshold offsets under `H1` and `H0`.
    pub(crate) fn from_arguments(arg_h1: f64, arg_h0: f64) -> Self {
        Self {
            p_d: q(arg_h1),
            p_fa: q(arg_h0),
            p_miss: q(-arg_h1),
            p_cr: q(-arg_h0),
        }
    }

    pub fn p_d(&self) -> f64 {
        self.p_d
    }

    pub fn p_fa(&self) -> f64 {
        self.p_fa
    }

    /// `1 - P_D`.
    pub fn p_miss(&self) -> f64 {
        self.p_miss
    }

    /// `1 - P_FA`.
    pub fn p_correct_rejection(&self) -> f64 {
        self.p_cr
    }

    /// `P_D - P_FA`, the factor that discounts a relay's fusion weight.
    pub fn reliability(&self) -> f64 {
        self.p_d - self.p_fa
    }
}
