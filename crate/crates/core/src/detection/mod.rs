//! Decision statistics for the two-hop chain.
//!
//! Each relay runs a single-sample Gaussian likelihood ratio test on the
//! concentration it senses from the source ([`RelayDetector`]). The
//! destination combines the per-relay concentrations with a weighted sum
//! ([`FusionWeights`]) whose weights are discounted by each relay's
//! reliability `P_D - P_FA`. [`ExactFusion`] evaluates the full mixture
//! likelihood ratio and serves as a reference for the linear rule.

mod fusion;
mod relay;
mod tail;

use serde::{Deserialize, Serialize};

pub use fusion::{exact_destination_llr, ExactFusion, FusionBranch, FusionWeights, WeightedBranch};
pub use relay::{RelayDetector, RelayPerformance};
pub use tail::{log_q_function, q_function};

pub(crate) use tail::q;

use crate::error::{ensure, Result};

/// Transmitted or decoded binary symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum DecisionBit {
    Zero,
    One,
}

impl DecisionBit {
    pub fn is_one(self) -> bool {
        self == DecisionBit::One
    }

    pub fn as_f64(self) -> f64 {
        if self.is_one() {
            1.0
        } else {
            0.0
        }
    }
}

impl From<bool> for DecisionBit {
    fn from(b: bool) -> Self {
        if b {
            DecisionBit::One
        } else {
            DecisionBit::Zero
        }
    }
}

impl From<DecisionBit> for u8 {
    fn from(b: DecisionBit) -> u8 {
        b as u8
    }
}

impl TryFrom<u8> for DecisionBit {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(DecisionBit::Zero),
            1 => Ok(DecisionBit::One),
            _ => Err(format!("decision bit must be 0 or 1, got {v}")),
        }
    }
}

/// `ln((1-β)/β)`, the MAP threshold on a log-likelihood ratio.
pub fn log_prior_ratio(prior: f64) -> f64 {
    ((1.0 - prior) / prior).ln()
}

pub(crate) fn check_prior(prior: f64) -> Result<()> {
    ensure(
        prior > 0.0 && prior < 1.0,
        "prior",
        prior,
        "must lie strictly between 0 and 1",
    )
}
