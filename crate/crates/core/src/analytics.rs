//! Closed-form error analysis for the cooperative chain and its baselines.
//!
//! The destination statistic `T = Σ α_i c̃_i` is treated as Gaussian under
//! each hypothesis, with every relay assumed to forward the source symbol:
//!
//! ```text
//! H0: T ~ N(Σ α_i μ̃_i,          Σ α_i² σ̃_i²)
//! H1: T ~ N(Σ α_i (s̃_i + μ̃_i),  Σ α_i² σ̃_i²)
//! ```
//!
//! and `P_e = β(1 - P_D) + (1 - β)P_FA`. Relay errors enter only through
//! the `P_D - P_FA` factor in the weights, which is accurate when relays
//! rarely err. [`full_chain_pe`] drops that assumption by conditioning on
//! every pattern of relay decisions.
//!
//! Baselines: SISO is the single-sample test on the direct link; MISO
//! superposes the concentrations of all source emitters at one receiver;
//! SIMO fuses independent receivers with perfect-branch weights.

use serde::{Deserialize, Serialize};

use crate::channel::{Emission, Link, MuiModel};
use crate::detection::{
    check_prior, q, FusionBranch, FusionWeights, RelayDetector, RelayPerformance,
};
use crate::error::{Error, Result};

/// Geometry, emission and interference of one relay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelayBranch {
    /// Source to relay.
    pub source_link: Link,
    /// Interference on the source's molecule type at the relay.
    pub relay_mui: MuiModel,
    /// Molecules the relay releases when it forwards a one.
    pub emission: Emission,
    /// Relay to destination.
    pub destination_link: Link,
    /// Interference on this relay's molecule type at the destination.
    pub destination_mui: MuiModel,
}

/// Complete description of a cooperative scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkConfig {
    prior: f64,
    source: Emission,
    relays: Vec<RelayBranch>,
}

impl NetworkConfig {
    pub fn new(prior: f64, source: Emission, relays: Vec<RelayBranch>) -> Result<Self> {
        check_prior(prior)?;
        if relays.is_empty() {
            return Err(Error::Empty("relay"));
        }
        Ok(Self {
            prior,
            source,
            relays,
        })
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }

    pub fn source(&self) -> Emission {
        self.source
    }

    pub fn relays(&self) -> &[RelayBranch] {
        &self.relays
    }

    /// Same scenario restricted to the first `n` relays.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        Self::new(
            self.prior,
            self.source,
            self.relays[..n.min(self.relays.len())].to_vec(),
        )
    }

    /// Same scenario with another relay appended.
    pub fn with_relay(&self, relay: RelayBranch) -> Self {
        let mut out = self.clone();
        out.relays.push(relay);
        out
    }
}

/// Detection performance at the destination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DestinationPerformance {
    pub p_d: f64,
    pub p_fa: f64,
    /// `1 - P_D`, evaluated as a tail probability rather than by subtraction.
    pub p_miss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerformanceReport {
    pub relays: Vec<RelayPerformance>,
    pub destination: DestinationPerformance,
    pub pe: f64,
}

pub fn relay_detectors(config: &NetworkConfig) -> Result<Vec<RelayDetector>> {
    config
        .relays
        .iter()
        .map(|r| RelayDetector::new(config.source, &r.source_link, r.relay_mui, config.prior))
        .collect()
}

fn branches_with(
    config: &NetworkConfig,
    relay_perf: impl Fn(usize) -> Result<RelayPerformance>,
) -> Result<Vec<FusionBranch>> {
    config
        .relays
        .iter()
        .enumerate()
        .map(|(i, r)| {
            FusionBranch::new(
                r.emission,
                &r.destination_link,
                r.destination_mui,
                relay_perf(i)?,
            )
        })
        .collect()
}

/// Destination branches with relay performance from the single-sample test.
pub fn fusion_branches(config: &NetworkConfig) -> Result<Vec<FusionBranch>> {
    let detectors = relay_detectors(config)?;
    branches_with(config, |i| Ok(detectors[i].performance()))
}

pub fn cooperative_weights(config: &NetworkConfig) -> Result<FusionWeights> {
    FusionWeights::new(&fusion_branches(config)?, config.prior)
}

/// Weights as if every relay decoded without error.
pub fn perfect_relay_weights(config: &NetworkConfig) -> Result<FusionWeights> {
    let branches = branches_with(config, |_| Ok(RelayPerformance::perfect()))?;
    FusionWeights::new(&branches, config.prior)
}

struct Moments {
    /// Power of two dividing every weight, so that tiny weights keep a
    /// representable variance; the test itself is unchanged by the scaling.
    scale: f64,
    threshold: f64,
    mean_h0: f64,
    mean_h1: f64,
    std: f64,
}

fn statistic_moments(weights: &FusionWeights) -> Result<Moments> {
    let largest = weights.alphas().fold(0.0f64, |m, a| m.max(a.abs()));
    if !(largest > 0.0 && largest.is_finite()) {
        return Err(Error::DegenerateFusion);
    }
    let scale = 2f64.powi(largest.log2().floor() as i32);
    let mut mean_h0 = 0.0;
    let mut mean_h1 = 0.0;
    let mut var = 0.0;
    for w in weights.branches() {
        let mui = w.branch.mui();
        let a = w.alpha / scale;
        mean_h0 += a * mui.mean();
        mean_h1 += a * (w.branch.signal() + mui.mean());
        var += a * a * mui.variance();
    }
    if var.is_nan() || var <= 0.0 {
        return Err(Error::DegenerateFusion);
    }
    Ok(Moments {
        scale,
        threshold: weights.threshold() / scale,
        mean_h0,
        mean_h1,
        std: var.sqrt(),
    })
}

/// Destination `P_D`/`P_FA` of the linear fusion rule under the Gaussian
/// statistic model.
pub fn destination_performance(weights: &FusionWeights) -> Result<DestinationPerformance> {
    let m = statistic_moments(weights)?;
    let arg_h1 = (m.threshold - m.mean_h1) / m.std;
    let arg_h0 = (m.threshold - m.mean_h0) / m.std;
    Ok(DestinationPerformance {
        p_d: q(arg_h1),
        p_fa: q(arg_h0),
        p_miss: q(-arg_h1),
    })
}

pub fn pe_from_weights(weights: &FusionWeights) -> Result<f64> {
    let dest = destination_performance(weights)?;
    let beta = weights.prior();
    Ok(beta * dest.p_miss + (1.0 - beta) * dest.p_fa)
}

pub fn destination_detection(config: &NetworkConfig) -> Result<DestinationPerformance> {
    destination_performance(&cooperative_weights(config)?)
}

/// End-to-end error probability of the cooperative chain.
pub fn analytic_pe_cooperative(config: &NetworkConfig) -> Result<f64> {
    pe_from_weights(&cooperative_weights(config)?)
}

pub fn analyze(config: &NetworkConfig) -> Result<PerformanceReport> {
    let relays: Vec<RelayPerformance> = relay_detectors(config)?
        .iter()
        .map(|d| d.performance())
        .collect();
    let branches = branches_with(config, |i| Ok(relays[i]))?;
    let weights = FusionWeights::new(&branches, config.prior)?;
    let destination = destination_performance(&weights)?;
    let beta = config.prior;
    Ok(PerformanceReport {
        relays,
        destination,
        pe: beta * destination.p_miss + (1.0 - beta) * destination.p_fa,
    })
}

/// Largest relay count [`full_chain_pe`] will enumerate.
pub const MAX_ENUMERATED_RELAYS: usize = 20;

/// Exact error probability of the linear fusion rule including relay
/// decoding errors.
///
/// Relays decide independently given the source bit, and given the vector
/// of relay decisions the statistic is exactly Gaussian, so the error
/// probability is a finite sum over the `2^N` decision patterns.
pub fn full_chain_pe(config: &NetworkConfig) -> Result<f64> {
    let n = config.relays.len();
    if n > MAX_ENUMERATED_RELAYS {
        return Err(Error::TooManyBranches(n));
    }
    let weights = cooperative_weights(config)?;
    let m = statistic_moments(&weights)?;
    let branches = weights.branches();
    let mut miss = 0.0;
    let mut false_alarm = 0.0;
    for pattern in 0u32..(1 << n) {
        let mut p_h1 = 1.0;
        let mut p_h0 = 1.0;
        let mut mean = m.mean_h0;
        for (i, w) in branches.iter().enumerate() {
            let relay = w.branch.relay();
            if pattern >> i & 1 == 1 {
                p_h1 *= relay.p_d();
                p_h0 *= relay.p_fa();
                mean += w.alpha / m.scale * w.branch.signal();
            } else {
                p_h1 *= relay.p_miss();
                p_h0 *= relay.p_correct_rejection();
            }
        }
        let arg = (m.threshold - mean) / m.std;
        miss += p_h1 * q(-arg);
        false_alarm += p_h0 * q(arg);
    }
    Ok(config.prior * miss + (1.0 - config.prior) * false_alarm)
}

/// Direct source-to-destination transmission.
pub fn analytic_pe_siso(emission: Emission, link: &Link, mui: MuiModel, prior: f64) -> Result<f64> {
    Ok(RelayDetector::new(emission, link, mui, prior)?.error_probability())
}

/// Several co-located source emitters whose concentrations add at one receiver.
pub fn analytic_pe_miso(emitters: &[(Emission, Link)], mui: MuiModel, prior: f64) -> Result<f64> {
    if emitters.is_empty() {
        return Err(Error::Empty("emitter"));
    }
    let signal = emitters.iter().map(|(e, l)| e.peak_concentration(l)).sum();
    Ok(RelayDetector::from_signal(signal, mui, prior)?.error_probability())
}

/// One emitter observed by several independent receivers.
pub fn analytic_pe_simo(
    emission: Emission,
    receivers: &[(Link, MuiModel)],
    prior: f64,
) -> Result<f64> {
    if receivers.is_empty() {
        return Err(Error::Empty("receiver"));
    }
    pe_from_weights(&simo_weights(emission, receivers, prior)?)
}

pub(crate) fn simo_weights(
    emission: Emission,
    receivers: &[(Link, MuiModel)],
    prior: f64,
) -> Result<FusionWeights> {
    let branches = receivers
        .iter()
        .map(|(l, m)| FusionBranch::new(emission, l, *m, RelayPerformance::perfect()))
        .collect::<Result<Vec<_>>>()?;
    FusionWeights::new(&branches, prior)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Cooperative,
    Siso,
    Miso,
    Simo,
}

impl SystemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SystemKind::Cooperative => "cooperative",
            SystemKind::Siso => "siso",
            SystemKind::Miso => "miso",
            SystemKind::Simo => "simo",
        }
    }
}

impl std::fmt::Display for SystemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SystemKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "cooperative" => Ok(SystemKind::Cooperative),
            "siso" => Ok(SystemKind::Siso),
            "miso" => Ok(SystemKind::Miso),
            "simo" => Ok(SystemKind::Simo),
            other => Err(format!("unknown system `{other}`")),
        }
    }
}

/// Any of the four link-level systems, ready for analysis or simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum System {
    Cooperative(NetworkConfig),
    Siso {
        prior: f64,
        emission: Emission,
        link: Link,
        mui: MuiModel,
    },
    Miso {
        prior: f64,
        emitters: Vec<(Emission, Link)>,
        mui: MuiModel,
    },
    Simo {
        prior: f64,
        emission: Emission,
        receivers: Vec<(Link, MuiModel)>,
    },
}

impl System {
    pub fn kind(&self) -> SystemKind {
        match self {
            System::Cooperative(_) => SystemKind::Cooperative,
            System::Siso { .. } => SystemKind::Siso,
            System::Miso { .. } => SystemKind::Miso,
            System::Simo { .. } => SystemKind::Simo,
        }
    }

    pub fn prior(&self) -> f64 {
        match self {
            System::Cooperative(c) => c.prior(),
            System::Siso { prior, .. }
            | System::Miso { prior, .. }
            | System::Simo { prior, .. } => *prior,
        }
    }

    pub fn analytic_pe(&self) -> Result<f64> {
        match self {
            System::Cooperative(c) => analytic_pe_cooperative(c),
            System::Siso {
                prior,
                emission,
                link,
                mui,
            } => analytic_pe_siso(*emission, link, *mui, *prior),
            System::Miso {
                prior,
                emitters,
                mui,
            } => analytic_pe_miso(emitters, *mui, *prior),
            System::Simo {
                prior,
                emission,
                receivers,
            } => analytic_pe_simo(*emission, receivers, *prior),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        if a == b {
            0.0
        } else {
            ((a - b) / b).abs()
        }
    }

    fn reference_mui() -> MuiModel {
        MuiModel::with_cov(4e16, 0.3).unwrap()
    }

    fn um(x: f64) -> Link {
        Link::from_um(x).unwrap()
    }

    fn em(q: f64) -> Emission {
        Emission::new(q).unwrap()
    }

    fn chain(q0: f64, qi: f64, d_sr: f64, d_rd: f64, n: usize, beta: f64) -> NetworkConfig {
        let relay = RelayBranch {
            source_link: um(d_sr),
            relay_mui: reference_mui(),
            emission: em(qi),
            destination_link: um(d_rd),
            destination_mui: reference_mui(),
        };
        NetworkConfig::new(beta, em(q0), vec![relay; n]).unwrap()
    }

    /// Relay whose destination-side signal is exactly `signal` for a unit-variance MUI.
    fn desk_relay(signal: f64) -> RelayBranch {
        let link = Link::new(1.0).unwrap();
        RelayBranch {
            source_link: Link::new(1e-6).unwrap(),
            relay_mui: MuiModel::new(0.0, 1.0).unwrap(),
            emission: em(signal / crate::channel::peak_gain(&link)),
            destination_link: link,
            destination_mui: MuiModel::new(0.0, 1.0).unwrap(),
        }
    }

    #[test]
    fn two_perfect_branch_desk_example() {
        let config =
            NetworkConfig::new(0.5, em(1.0), vec![desk_relay(2.0), desk_relay(2.0)]).unwrap();
        let w = perfect_relay_weights(&config).unwrap();
        let dest = destination_performance(&w).unwrap();
        // Q(√2), mpmath
        let want = 0.078_649_603_525_142_565;
        assert!(rel(dest.p_fa, want) < 1e-12);
        assert!(rel(dest.p_miss, want) < 1e-12);
        assert!(rel(pe_from_weights(&w).unwrap(), want) < 1e-12);
    }

    #[test]
    fn regression_points() {
        // mpmath evaluations of the closed forms (tests/fixtures/oracle.py)
        let cases = [
            (
                chain(0.75e9, 0.75e9, 10.0, 20.0, 3, 0.5),
                0.309_217_095_761_634_35,
            ),
            (
                chain(3e9, 3e9, 10.0, 20.0, 3, 0.5),
                0.023_170_012_739_990_408,
            ),
            (
                chain(1e9 / 3.0, 1e9 / 3.0, 10.0, 20.0, 2, 0.3),
                0.299_959_153_415_102_51,
            ),
        ];
        for (config, want) in cases {
            let pe = analytic_pe_cooperative(&config).unwrap();
            assert!(rel(pe, want) < 1e-11, "{pe} vs {want}");
        }
        let siso = analytic_pe_siso(em(3e9), &um(25.0), reference_mui(), 0.5).unwrap();
        assert!(rel(siso, 0.277_955_632_580_075_15) < 1e-12);
        let siso_skewed = analytic_pe_siso(em(3e9), &um(25.0), reference_mui(), 0.2).unwrap();
        assert!(rel(siso_skewed, 0.175_315_113_364_666_27) < 1e-12);
        let miso = analytic_pe_miso(
            &[(em(1.5e9), um(30.0)), (em(1.5e9), um(30.0))],
            reference_mui(),
            0.5,
        )
        .unwrap();
        assert!(rel(miso, 0.366_622_047_665_239_78) < 1e-12);
        let simo = analytic_pe_simo(em(3e9), &[(um(25.0), reference_mui()); 2], 0.5).unwrap();
        assert!(rel(simo, 0.202_460_040_816_656_02) < 1e-12);
    }

    #[test]
    fn single_emitter_miso_and_single_receiver_simo_are_siso() {
        let siso = analytic_pe_siso(em(2e9), &um(22.0), reference_mui(), 0.35).unwrap();
        let miso = analytic_pe_miso(&[(em(2e9), um(22.0))], reference_mui(), 0.35).unwrap();
        let simo = analytic_pe_simo(em(2e9), &[(um(22.0), reference_mui())], 0.35).unwrap();
        assert!(rel(miso, siso) < 1e-12);
        assert!(rel(simo, siso) < 1e-12, "{simo} vs {siso}");
    }

    #[test]
    fn split_miso_equals_single_emitter() {
        let whole = analytic_pe_miso(&[(em(4e9), um(30.0))], reference_mui(), 0.5).unwrap();
        let split = analytic_pe_miso(
            &[(em(2e9), um(30.0)), (em(2e9), um(30.0))],
            reference_mui(),
            0.5,
        )
        .unwrap();
        assert!(rel(split, whole) < 1e-12);
    }

    #[test]
    fn simo_with_n_equal_receivers() {
        for n in 1..=5 {
            let simo =
                analytic_pe_simo(em(1e9), &vec![(um(20.0), reference_mui()); n], 0.5).unwrap();
            let s = 1e9 * crate::channel::peak_gain(&um(20.0));
            let want = q((n as f64).sqrt() * s / (2.0 * reference_mui().std()));
            assert!(rel(simo, want) < 1e-12);
        }
    }

    #[test]
    fn full_chain_matches_enumeration_oracle() {
        // mpmath enumeration (tests/fixtures/oracle.py, chain_exact)
        let near_dst = chain(1e9 / 3.0, 1e9 / 3.0, 20.0 * 2.0 / 3.0, 20.0 / 3.0, 2, 0.5);
        let pe = full_chain_pe(&near_dst).unwrap();
        assert!(rel(pe, 0.333_110_069_987_106_3) < 1e-12, "{pe}");
        let skewed = chain(1e9 / 3.0, 1e9 / 3.0, 10.0, 20.0, 2, 0.3);
        let pe = full_chain_pe(&skewed).unwrap();
        assert!(rel(pe, 0.299_992_851_865_510_87) < 1e-12, "{pe}");
        // essentially error-free relays leave nothing to correct
        let strong = chain(1e10, 1e10, 10.0, 20.0, 3, 0.5);
        let a = analytic_pe_cooperative(&strong).unwrap();
        let b = full_chain_pe(&strong).unwrap();
        assert!(rel(a, b) < 1e-9);
    }

    #[test]
    fn tiny_weights_keep_a_usable_statistic() {
        // alpha is subnormal and alpha^2 underflows; equal priors make the
        // reliability factor cancel, leaving Q(-1) and Q(1)
        let relay = RelayPerformance::new(1e-290, 0.0).unwrap();
        let b = FusionBranch::from_signal(2.4e16, reference_mui(), relay).unwrap();
        let w = FusionWeights::new(&[b], 0.5).unwrap();
        assert!(w.branches()[0].alpha.powi(2) == 0.0);
        let dest = destination_performance(&w).unwrap();
        assert!(rel(dest.p_d, 0.841_344_746_068_542_95) < 1e-12);
        assert!(rel(dest.p_fa, 0.158_655_253_931_457_05) < 1e-12);
    }

    #[test]
    fn degenerate_configs() {
        assert!(NetworkConfig::new(0.5, em(1e9), vec![]).is_err());
        assert!(NetworkConfig::new(1.0, em(1e9), vec![desk_relay(1.0)]).is_err());
        assert!(analytic_pe_miso(&[], reference_mui(), 0.5).is_err());
        assert!(analytic_pe_simo(em(1e9), &[], 0.5).is_err());
        let config = NetworkConfig::new(0.5, em(0.0), vec![desk_relay(1.0)]).unwrap();
        assert!(matches!(
            analytic_pe_cooperative(&config),
            Err(Error::DegenerateDetector { .. })
        ));
    }

    #[test]
    fn inert_branches_are_degenerate() {
        let coin = RelayPerformance::new(0.4, 0.4).unwrap();
        let b = FusionBranch::from_signal(1.0, MuiModel::new(0.0, 1.0).unwrap(), coin).unwrap();
        let w = FusionWeights::new(&[b, b], 0.5).unwrap();
        assert!(matches!(
            destination_performance(&w),
            Err(Error::DegenerateFusion)
        ));
    }

    #[test]
    fn system_kind_round_trip() {
        for k in [
            SystemKind::Cooperative,
            SystemKind::Siso,
            SystemKind::Miso,
            SystemKind::Simo,
        ] {
            assert_eq!(k.as_str().parse::<SystemKind>().unwrap(), k);
        }
        assert!("mimo".parse::<SystemKind>().is_err());
    }
}
