//! Monte Carlo simulation of the two-phase chain and the baselines.
//!
//! A trial draws the source bit, samples every relay's peak concentration
//! with Gaussian interference, lets each relay decide, samples the
//! destination's per-branch concentrations from the forwarded bits and
//! applies the destination rule. Baselines sample their receivers directly.
//!
//! Trials are grouped in fixed-size chunks that run in parallel on the
//! current rayon pool. Trial `k` always draws from stream `k` of the run
//! seed (see [`rng`]), and per-chunk error counts are summed as integers,
//! so an estimate depends only on `(system, detector, trials, seed)`.

pub mod rng;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{fusion_branches, relay_detectors, simo_weights, System};
use crate::channel::MuiModel;
use crate::detection::{DecisionBit, ExactFusion, FusionBranch, FusionWeights, RelayDetector};
use crate::error::{ensure, Error, Result};
use rng::{StreamFactory, TrialRng};

const CHUNK: u64 = 4096;

/// Destination rule used by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DetectorChoice {
    /// Weighted-sum fusion.
    #[default]
    Linear,
    /// Full mixture log-likelihood ratio.
    Exact,
}

impl DetectorChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            DetectorChoice::Linear => "linear",
            DetectorChoice::Exact => "exact",
        }
    }
}

impl std::fmt::Display for DetectorChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DetectorChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "linear" => Ok(DetectorChoice::Linear),
            "exact" => Ok(DetectorChoice::Exact),
            other => Err(format!(
                "unknown detector `{other}` (expected linear or exact)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialOutcome {
    pub transmitted: DecisionBit,
    /// Empty for the baselines.
    pub relay_decisions: Vec<DecisionBit>,
    pub decision: DecisionBit,
    pub error: bool,
}

/// Error-rate estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub trials: u64,
    pub errors: u64,
    pub pe: f64,
    pub standard_error: f64,
    pub seed: u64,
}

impl McEstimate {
    pub fn from_counts(trials: u64, errors: u64, seed: u64) -> Self {
        let pe = errors as f64 / trials as f64;
        Self {
            trials,
            errors,
            pe,
            standard_error: (pe * (1.0 - pe) / trials as f64).sqrt(),
            seed,
        }
    }

    /// Normal-approximation interval `p̂ ± z·SE`, clipped to `[0, 1]`.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        let half = z * self.standard_error;
        ((self.pe - half).max(0.0), (self.pe + half).min(1.0))
    }

    /// Standard error evaluated at a reference probability instead of `p̂`.
    /// Stays informative when no errors were observed.
    pub fn standard_error_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Both destination rules applied to the same sampled observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectorComparison {
    pub linear: McEstimate,
    pub exact: McEstimate,
    pub agreements: u64,
}

impl DetectorComparison {
    pub fn agreement_rate(&self) -> f64 {
        self.agreements as f64 / self.linear.trials as f64
    }
}

/// Empirical detection and false-alarm counts of a single-sample detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelayRates {
    pub trials: u64,
    pub detections: u64,
    pub false_alarms: u64,
}

impl RelayRates {
    pub fn p_d(&self) -> f64 {
        self.detections as f64 / self.trials as f64
    }

    pub fn p_fa(&self) -> f64 {
        self.false_alarms as f64 / self.trials as f64
    }
}

#[derive(Debug, Clone)]
enum Plan {
    Relayed {
        relays: Vec<RelayDetector>,
        forward: Vec<(f64, MuiModel)>,
        linear: FusionWeights,
        exact: ExactFusion,
    },
    Single {
        detector: RelayDetector,
    },
    Diversity {
        receivers: Vec<(f64, MuiModel)>,
        linear: FusionWeights,
        exact: ExactFusion,
    },
}

/// Prepared detectors for one system.
#[derive(Debug, Clone)]
pub struct Simulator {
    plan: Plan,
    source_prior: f64,
}

struct Scratch {
    observed: Vec<f64>,
    relays: Vec<DecisionBit>,
}

impl Simulator {
    pub fn new(system: &System) -> Result<Self> {
        let plan = match system {
            System::Cooperative(config) => {
                let relays = relay_detectors(config)?;
                let branches = fusion_branches(config)?;
                Plan::Relayed {
                    relays,
                    forward: branches.iter().map(|b| (b.signal(), b.mui())).collect(),
                    linear: FusionWeights::new(&branches, config.prior())?,
                    exact: ExactFusion::new(&branches, config.prior())?,
                }
            }
            System::Siso {
                prior,
                emission,
                link,
                mui,
            } => Plan::Single {
                detector: RelayDetector::new(*emission, link, *mui, *prior)?,
            },
            System::Miso {
                prior,
                emitters,
                mui,
            } => {
                if emitters.is_empty() {
                    return Err(Error::Empty("emitter"));
                }
                let signal = emitters.iter().map(|(e, l)| e.peak_concentration(l)).sum();
                Plan::Single {
                    detector: RelayDetector::from_signal(signal, *mui, *prior)?,
                }
            }
            System::Simo {
                prior,
                emission,
                receivers,
            } => {
                if receivers.is_empty() {
                    return Err(Error::Empty("receiver"));
                }
                let linear = simo_weights(*emission, receivers, *prior)?;
                let branches: Vec<FusionBranch> =
                    linear.branches().iter().map(|w| w.branch).collect();
                Plan::Diversity {
                    receivers: branches.iter().map(|b| (b.signal(), b.mui())).collect(),
                    exact: ExactFusion::new(&branches, *prior)?,
                    linear,
                }
            }
        };
        Ok(Self {
            plan,
            source_prior: system.prior(),
        })
    }

    /// Draw source symbols with probability `p` of a one while keeping the
    /// detectors designed for the system's prior.
    pub fn with_source_prior(mut self, p: f64) -> Result<Self> {
        ensure(
            (0.0..=1.0).contains(&p),
            "source prior",
            p,
            "must lie in [0, 1]",
        )?;
        self.source_prior = p;
        Ok(self)
    }

    fn scratch(&self) -> Scratch {
        let n = match &self.plan {
            Plan::Relayed { relays, .. } => relays.len(),
            Plan::Single { .. } => 1,
            Plan::Diversity { receivers, .. } => receivers.len(),
        };
        Scratch {
            observed: Vec::with_capacity(n),
            relays: Vec::with_capacity(n),
        }
    }

    /// Samples one trial's observations into `scratch`, returns the source bit.
    #[inline]
    fn sample(&self, rng: &mut TrialRng, scratch: &mut Scratch) -> DecisionBit {
        let x0 = DecisionBit::from(rng.bernoulli(self.source_prior));
        let on = x0.as_f64();
        scratch.observed.clear();
        scratch.relays.clear();
        match &self.plan {
            Plan::Relayed {
                relays, forward, ..
            } => {
                for det in relays {
                    let mui = det.mui();
                    let c = on * det.signal() + rng.normal(mui.mean(), mui.std());
                    scratch.relays.push(det.decide(c));
                }
                for (bit, (signal, mui)) in scratch.relays.iter().zip(forward) {
                    let c = bit.as_f64() * signal + rng.normal(mui.mean(), mui.std());
                    scratch.observed.push(c);
                }
            }
            Plan::Single { detector } => {
                let mui = detector.mui();
                scratch
                    .observed
                    .push(on * detector.signal() + rng.normal(mui.mean(), mui.std()));
            }
            Plan::Diversity { receivers, .. } => {
                for (signal, mui) in receivers {
                    scratch
                        .observed
                        .push(on * signal + rng.normal(mui.mean(), mui.std()));
                }
            }
        }
        x0
    }

    #[inline]
    fn decide(&self, detector: DetectorChoice, observed: &[f64]) -> DecisionBit {
        match (&self.plan, detector) {
            (Plan::Single { detector }, _) => detector.decide(observed[0]),
            (
                Plan::Relayed { linear, .. } | Plan::Diversity { linear, .. },
                DetectorChoice::Linear,
            ) => linear.decide_unchecked(observed),
            (
                Plan::Relayed { exact, .. } | Plan::Diversity { exact, .. },
                DetectorChoice::Exact,
            ) => exact.decide_unchecked(observed),
        }
    }

    /// One realization drawn from `rng`.
    pub fn run_trial(&self, detector: DetectorChoice, rng: &mut TrialRng) -> TrialOutcome {
        let mut scratch = self.scratch();
        let transmitted = self.sample(rng, &mut scratch);
        let decision = self.decide(detector, &scratch.observed);
        TrialOutcome {
            transmitted,
            relay_decisions: scratch.relays,
            decision,
            error: decision != transmitted,
        }
    }

    /// Sums `per_trial` over trials `0..trials`, chunked across the rayon pool.
    fn fold_trials<T, F>(&self, trials: u64, seed: u64, per_trial: F) -> T
    where
        T: Default + Send + std::ops::Add<Output = T>,
        F: Fn(&mut TrialRng, &mut Scratch) -> T + Sync,
    {
        let streams = StreamFactory::new(seed);
        let chunks = trials.div_ceil(CHUNK);
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut scratch = self.scratch();
                let end = ((c + 1) * CHUNK).min(trials);
                (c * CHUNK..end).fold(T::default(), |acc, k| {
                    let mut rng = streams.stream(k);
                    acc + per_trial(&mut rng, &mut scratch)
                })
            })
            .reduce(T::default, |a, b| a + b)
    }

    pub fn estimate(&self, detector: DetectorChoice, trials: u64, seed: u64) -> Result<McEstimate> {
        check_trials(trials)?;
        let errors = self.fold_trials(trials, seed, |rng, scratch| {
            let x0 = self.sample(rng, scratch);
            u64::from(self.decide(detector, &scratch.observed) != x0)
        });
        Ok(McEstimate::from_counts(trials, errors, seed))
    }

    /// Runs both destination rules on common samples.
    pub fn compare(&self, trials: u64, seed: u64) -> Result<DetectorComparison> {
        check_trials(trials)?;
        let Counts3(lin, ex, agree) = self.fold_trials(trials, seed, |rng, scratch| {
            let x0 = self.sample(rng, scratch);
            let a = self.decide(DetectorChoice::Linear, &scratch.observed);
            let b = self.decide(DetectorChoice::Exact, &scratch.observed);
            Counts3(u64::from(a != x0), u64::from(b != x0), u64::from(a == b))
        });
        Ok(DetectorComparison {
            linear: McEstimate::from_counts(trials, lin, seed),
            exact: McEstimate::from_counts(trials, ex, seed),
            agreements: agree,
        })
    }
}

#[derive(Default, Clone, Copy)]
struct Counts3(u64, u64, u64);

impl std::ops::Add for Counts3 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Counts3(self.0 + o.0, self.1 + o.1, self.2 + o.2)
    }
}

fn check_trials(trials: u64) -> Result<()> {
    ensure(trials >= 1, "trial count", trials as f64, "must be >= 1")
}

/// Monte Carlo error probability of `system` under `detector`.
pub fn estimate_pe(
    system: &System,
    detector: DetectorChoice,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    Simulator::new(system)?.estimate(detector, trials, seed)
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|_| Error::Domain {
            name: "worker count",
            value: workers as f64,
            reason: "could not start thread pool",
        })?;
    Ok(pool.install(f))
}

/// Counts detections under `H1` and false alarms under `H0` over `trials`
/// pairs of independent samples.
pub fn estimate_relay_rates(
    detector: &RelayDetector,
    trials: u64,
    seed: u64,
) -> Result<RelayRates> {
    check_trials(trials)?;
    let streams = StreamFactory::new(seed);
    let chunks = trials.div_ceil(CHUNK);
    let mui = detector.mui();
    let (detections, false_alarms) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let end = ((c + 1) * CHUNK).min(trials);
            (c * CHUNK..end).fold((0u64, 0u64), |(d, f), k| {
                let mut rng = streams.stream(k);
                let h1 = detector.signal() + rng.normal(mui.mean(), mui.std());
                let h0 = rng.normal(mui.mean(), mui.std());
                (
                    d + u64::from(detector.decide(h1).is_one()),
                    f + u64::from(detector.decide(h0).is_one()),
                )
            })
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(RelayRates {
        trials,
        detections,
        false_alarms,
    })
}
