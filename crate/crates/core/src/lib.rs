//! Link-level analysis and simulation of diffusion-based cooperative
//! molecular nano-networks.
//!
//! A source nanomachine sends one bit by releasing a burst of molecules
//! (or staying silent). `N` decode-and-forward relays sense the peak
//! concentration, decide, and re-emit using their own molecule types. The
//! destination fuses the per-relay concentrations. Interference from other
//! transmitters is Gaussian at every receiver.
//!
//! - [`channel`]: peak-concentration arithmetic of the diffusion channel.
//! - [`detection`]: relay and destination decision rules.
//! - [`analytics`]: closed-form error probabilities, cooperative and baseline.
//! - [`simulator`]: seedable, parallel Monte Carlo over the full chain.
//! - [`experiment`]: JSON scenarios, parameter sweeps and CSV output.

// reference values in tests carry every digit the oracle printed
#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod analytics;
pub mod channel;
pub mod detection;
pub mod error;
pub mod experiment;
pub mod simulator;

pub use error::{Error, Result};
