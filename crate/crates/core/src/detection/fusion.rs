use serde::Serialize;

use super::{check_prior, log_prior_ratio, DecisionBit, RelayPerformance};
use crate::channel::{Emission, Link, MuiModel};
use crate::error::{ensure, Error, Result};

/// One relay as seen from the destination: the signal it delivers when it
/// forwards a one, the interference on its molecule type, and how reliably
/// it decoded the source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FusionBranch {
    signal: f64,
    mui: MuiModel,
    relay: RelayPerformance,
}

impl FusionBranch {
    pub fn new(
        emission: Emission,
        link: &Link,
        mui: MuiModel,
        relay: RelayPerformance,
    ) -> Result<Self> {
        Self::from_signal(emission.peak_concentration(link), mui, relay)
    }

    pub fn from_signal(signal: f64, mui: MuiModel, relay: RelayPerformance) -> Result<Self> {
        ensure(
            signal.is_finite() && signal >= 0.0,
            "branch signal",
            signal,
            "must be finite and >= 0",
        )?;
        Ok(Self { signal, mui, relay })
    }

    pub fn signal(&self) -> f64 {
        self.signal
    }

    pub fn mui(&self) -> MuiModel {
        self.mui
    }

    pub fn relay(&self) -> RelayPerformance {
        self.relay
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedBranch {
    pub branch: FusionBranch,
    /// `α_i = (s̃_i/σ̃_i²)(P_D - P_FA)`
    pub alpha: f64,
    /// `θ_i = (s̃_i² + 2s̃_iμ̃_i)/(2σ̃_i²) · (P_D - P_FA)`
    pub theta: f64,
}

/// Linear fusion rule `Σ α_i c̃_i > γ''` with `γ'' = ln((1-β)/β) + Σ θ_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FusionWeights {
    branches: Vec<WeightedBranch>,
    prior: f64,
    threshold: f64,
}

impl FusionWeights {
    pub fn new(branches: &[FusionBranch], prior: f64) -> Result<Self> {
        check_prior(prior)?;
        if branches.is_empty() {
            return Err(Error::Empty("fusion branch"));
        }
        let weighted: Vec<WeightedBranch> = branches
            .iter()
            .map(|b| {
                let var = b.mui.variance();
                let k = b.relay.reliability();
                WeightedBranch {
                    branch: *b,
                    alpha: b.signal / var * k,
                    theta: (b.signal * b.signal + 2.0 * b.signal * b.mui.mean()) / (2.0 * var) * k,
                }
            })
            .collect();
        let threshold = log_prior_ratio(prior) + weighted.iter().map(|w| w.theta).sum::<f64>();
        Ok(Self {
            branches: weighted,
            prior,
            threshold,
        })
    }

    pub fn branches(&self) -> &[WeightedBranch] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }

    /// `γ''`.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn alphas(&self) -> impl Iterator<Item = f64> + '_ {
        self.branches.iter().map(|w| w.alpha)
    }

    pub fn statistic(&self, observed: &[f64]) -> Result<f64> {
        if observed.len() != self.branches.len() {
            return Err(Error::LengthMismatch {
                expected: self.branches.len(),
                got: observed.len(),
            });
        }
        Ok(self.statistic_unchecked(observed))
    }

    #[inline]
    pub(crate) fn statistic_unchecked(&self, observed: &[f64]) -> f64 {
        self.branches
            .iter()
            .zip(observed)
            .map(|(w, c)| w.alpha * c)
            .sum()
    }

    /// One iff the weighted sum exceeds `γ''`. Ties decide zero.
    pub fn decide(&self, observed: &[f64]) -> Result<DecisionBit> {
        Ok(DecisionBit::from(
            self.statistic(observed)? > self.threshold,
        ))
    }

    #[inline]
    pub(crate) fn decide_unchecked(&self, observed: &[f64]) -> DecisionBit {
        DecisionBit::from(self.statistic_unchecked(observed) > self.threshold)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct MixtureBranch {
    signal: f64,
    mean: f64,
    std: f64,
    ln_pd: f64,
    ln_miss: f64,
    ln_pfa: f64,
    ln_cr: f64,
}

/// Likelihood ratio test at the destination that accounts for relay errors.
///
/// Given the source bit, branch `i` observes a two-component Gaussian
/// mixture: `N(s̃+μ̃, σ̃²)` when the relay forwarded a one and `N(μ̃, σ̃²)`
/// otherwise, weighted by `P_D`/`1-P_D` under `H1` and `P_FA`/`1-P_FA`
/// under `H0`. Branches are conditionally independent, so the
/// log-likelihood ratio is the sum of per-branch terms. Each term is
/// evaluated with log-sum-exp, so nothing under- or overflows for
/// standardized offsets up to several hundred and the result is finite
/// for every finite observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactFusion {
    branches: Vec<MixtureBranch>,
    log_threshold: f64,
}

impl ExactFusion {
    pub fn new(branches: &[FusionBranch], prior: f64) -> Result<Self> {
        check_prior(prior)?;
        if branches.is_empty() {
            return Err(Error::Empty("fusion branch"));
        }
        let branches = branches
            .iter()
            .map(|b| MixtureBranch {
                signal: b.signal,
                mean: b.mui.mean(),
                std: b.mui.std(),
                ln_pd: b.relay.p_d().ln(),
                ln_miss: b.relay.p_miss().ln(),
                ln_pfa: b.relay.p_fa().ln(),
                ln_cr: b.relay.p_correct_rejection().ln(),
            })
            .collect();
        Ok(Self {
            branches,
            log_threshold: log_prior_ratio(prior),
        })
    }

    pub fn llr(&self, observed: &[f64]) -> Result<f64> {
        if observed.len() != self.branches.len() {
            return Err(Error::LengthMismatch {
                expected: self.branches.len(),
                got: observed.len(),
            });
        }
        if let Some(&c) = observed.iter().find(|c| !c.is_finite()) {
            return Err(Error::Domain {
                name: "observed concentration",
                value: c,
                reason: "must be finite",
            });
        }
        Ok(self.llr_unchecked(observed))
    }

    pub(crate) fn llr_unchecked(&self, observed: &[f64]) -> f64 {
        self.branches
            .iter()
            .zip(observed)
            .map(|(b, &c)| {
                let z_on = (c - b.signal - b.mean) / b.std;
                let z_off = (c - b.mean) / b.std;
                let on = -0.5 * z_on * z_on;
                let off = -0.5 * z_off * z_off;
                log_add(b.ln_pd + on, b.ln_miss + off) - log_add(b.ln_pfa + on, b.ln_cr + off)
            })
            .sum()
    }

    pub fn decide(&self, observed: &[f64]) -> Result<DecisionBit> {
        Ok(DecisionBit::from(self.llr(observed)? > self.log_threshold))
    }

    #[inline]
    pub(crate) fn decide_unchecked(&self, observed: &[f64]) -> DecisionBit {
        DecisionBit::from(self.llr_unchecked(observed) > self.log_threshold)
    }
}

/// `ln(e^a + e^b)`; either side may be `-inf`.
#[inline]
fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Exact log-likelihood ratio `Σ ln[p(c̃_i|H1)/p(c̃_i|H0)]` over the
/// relay-error mixtures. Compare with `ln((1-β)/β)` for a decision.
pub fn exact_destination_llr(branches: &[FusionBranch], observed: &[f64]) -> Result<f64> {
    // the prior only sets the threshold, not the ratio
    ExactFusion::new(branches, 0.5)?.llr(observed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> MuiModel {
        MuiModel::new(0.0, 1.0).unwrap()
    }

    fn perfect_branch(signal: f64) -> FusionBranch {
        FusionBranch::from_signal(signal, unit(), RelayPerformance::perfect()).unwrap()
    }

    #[test]
    fn single_branch_desk_example() {
        let w = FusionWeights::new(&[perfect_branch(2.0)], 0.5).unwrap();
        assert_eq!(w.branches()[0].alpha, 2.0);
        assert_eq!(w.branches()[0].theta, 2.0);
        assert_eq!(w.threshold(), 2.0);
    }

    #[test]
    fn two_branch_desk_example() {
        let w = FusionWeights::new(&[perfect_branch(2.0), perfect_branch(2.0)], 0.5).unwrap();
        assert_eq!(w.alphas().collect::<Vec<_>>(), vec![2.0, 2.0]);
        assert_eq!(w.threshold(), 4.0);
        assert_eq!(w.statistic(&[1.5, 1.5]).unwrap(), 6.0);
        assert_eq!(w.decide(&[1.5, 1.5]).unwrap(), DecisionBit::One);
        assert_eq!(w.decide(&[0.0, 0.0]).unwrap(), DecisionBit::Zero);
        assert_eq!(w.decide(&[1.0, 1.0]).unwrap(), DecisionBit::Zero);
        assert!(matches!(
            w.decide(&[1.0]),
            Err(Error::LengthMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn coin_flip_relay_is_inert() {
        let coin = RelayPerformance::new(0.3, 0.3).unwrap();
        let b = FusionBranch::from_signal(2.0, unit(), coin).unwrap();
        let w = FusionWeights::new(&[b], 0.5).unwrap();
        assert_eq!(w.branches()[0].alpha, 0.0);
        assert_eq!(w.branches()[0].theta, 0.0);
        for &c in &[-3.0, 0.0, 0.7, 5.0, 40.0] {
            assert_eq!(exact_destination_llr(&[b], &[c]).unwrap(), 0.0);
        }
    }

    #[test]
    fn theta_reduction() {
        let relay = RelayPerformance::new(0.97, 0.02).unwrap();
        let mui = MuiModel::new(4e16, 1.2e16).unwrap();
        let b = FusionBranch::from_signal(2.3e15, mui, relay).unwrap();
        let w = FusionWeights::new(&[b], 0.4).unwrap();
        let wb = w.branches()[0];
        let reduced = wb.alpha * (0.5 * 2.3e15 + 4e16);
        assert!(((wb.theta - reduced) / reduced).abs() < 1e-12);
        let alpha = 2.3e15 / 1.44e32 * 0.95;
        assert!(((wb.alpha - alpha) / alpha).abs() < 1e-12);
    }

    #[test]
    fn empty_and_bad_prior() {
        assert!(matches!(FusionWeights::new(&[], 0.5), Err(Error::Empty(_))));
        assert!(FusionWeights::new(&[perfect_branch(1.0)], 1.0).is_err());
        assert!(ExactFusion::new(&[], 0.5).is_err());
    }

    #[test]
    fn exact_collapses_to_gaussian_llr_for_perfect_relays() {
        let mui = MuiModel::new(1.5, 0.8).unwrap();
        let s = 2.2;
        let b = FusionBranch::from_signal(s, mui, RelayPerformance::perfect()).unwrap();
        for &c in &[-4.0, 0.0, 1.5, 2.6, 3.7, 9.0] {
            let gauss = (-(c - s - 1.5f64).powi(2) + (c - 1.5f64).powi(2)) / (2.0 * 0.64);
            let llr = exact_destination_llr(&[b, b], &[c, c]).unwrap();
            assert!(
                (llr - 2.0 * gauss).abs() <= 1e-12 * (1.0 + gauss.abs()),
                "{c}"
            );
        }
    }

    #[test]
    fn exact_llr_rejects_non_finite() {
        assert!(exact_destination_llr(&[perfect_branch(1.0)], &[f64::NAN]).is_err());
        assert!(exact_destination_llr(&[perfect_branch(1.0)], &[f64::INFINITY]).is_err());
    }

    #[test]
    fn exact_llr_stays_finite_far_in_the_tails() {
        let relay = RelayPerformance::new(1.0 - 1e-12, 1e-12).unwrap();
        let b = FusionBranch::from_signal(3.0, unit(), relay).unwrap();
        for &c in &[-300.0, -50.0, 0.0, 50.0, 300.0] {
            let l = exact_destination_llr(&[b], &[c]).unwrap();
            assert!(l.is_finite(), "{c}: {l}");
        }
        // saturates at the relay's own log-odds instead of growing without bound
        let hi = (relay.p_d() / relay.p_fa()).ln();
        let lo = (relay.p_miss() / relay.p_correct_rejection()).ln();
        assert!((exact_destination_llr(&[b], &[300.0]).unwrap() - hi).abs() < 1e-9);
        assert!((exact_destination_llr(&[b], &[-300.0]).unwrap() - lo).abs() < 1e-9);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn inert_branch_never_changes_decision(
                c1 in -5.0f64..10.0,
                c2 in -5.0f64..10.0,
                extra in -100.0f64..100.0,
                s in 0.1f64..5.0,
                beta in 0.1f64..0.9,
            ) {
                let base = [perfect_branch(s), perfect_branch(2.0 * s)];
                let inert = FusionBranch::from_signal(3.0, unit(), RelayPerformance::new(0.5, 0.5).unwrap()).unwrap();
                let a = FusionWeights::new(&base, beta).unwrap();
                let b = FusionWeights::new(&[base[0], base[1], inert], beta).unwrap();
                prop_assert_eq!(a.decide(&[c1, c2]).unwrap(), b.decide(&[c1, c2, extra]).unwrap());
                let ea = ExactFusion::new(&base, beta).unwrap();
                let eb = ExactFusion::new(&[base[0], base[1], inert], beta).unwrap();
                prop_assert_eq!(ea.llr(&[c1, c2]).unwrap(), eb.llr(&[c1, c2, extra]).unwrap());
            }

            #[test]
            fn linear_and_exact_agree_for_perfect_relays(
                s1 in 0.1f64..5.0,
                s2 in 0.1f64..5.0,
                mu in 0.0f64..3.0,
                beta in 0.1f64..0.9,
                c1 in -5.0f64..10.0,
                c2 in -5.0f64..10.0,
            ) {
                let mui = MuiModel::new(mu, 1.3).unwrap();
                let bs = [
                    FusionBranch::from_signal(s1, mui, RelayPerformance::perfect()).unwrap(),
                    FusionBranch::from_signal(s2, mui, RelayPerformance::perfect()).unwrap(),
                ];
                let lin = FusionWeights::new(&bs, beta).unwrap();
                let ex = ExactFusion::new(&bs, beta).unwrap();
                let margin = lin.statistic(&[c1, c2]).unwrap() - lin.threshold();
                prop_assume!(margin.abs() > 1e-9 * (1.0 + lin.threshold().abs()));
                prop_assert_eq!(lin.decide(&[c1, c2]).unwrap(), ex.decide(&[c1, c2]).unwrap());
            }
        }
    }
}
