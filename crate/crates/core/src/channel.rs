//! Free-space diffusion channel between a point emitter and a receiver.
//!
//! All lengths are in centimetres, times in seconds, diffusion coefficients
//! in cm²/s and concentrations in molecules/cm³. Configuration files quote
//! distances in micrometres; use [`Link::from_um`] to convert on ingest.
//!
//! The receiver samples the concentration at its peak, which for an
//! impulsive release at distance `d` occurs at `t_p = d²/(6D)` and equals
//! `d⁻³·(3/(2πe))^{3/2}` per released molecule, independent of `D`.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// Centimetres per micrometre.
pub const CM_PER_UM: f64 = 1e-4;

/// `(3 / (2πe))^{3/2}`, the dimensionless peak factor of the 3-D Green's function.
pub fn peak_factor() -> f64 {
    (3.0 / (2.0 * PI * E)).powf(1.5)
}

pub fn um_to_cm(um: f64) -> f64 {
    um * CM_PER_UM
}

/// Inverse of [`um_to_cm`]. Results within a few ulps of a 10⁻³ μm grid
/// point are snapped onto it, so `cm_to_um(um_to_cm(x)) == x` for every
/// `x` written with at most three decimals.
pub fn cm_to_um(cm: f64) -> f64 {
    let raw = cm / CM_PER_UM;
    let snapped = (raw * 1e3).round() / 1e3;
    if (snapped - raw).abs() <= 4.0 * f64::EPSILON * raw.abs() {
        snapped
    } else {
        raw
    }
}

/// Propagation medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Medium {
    diffusion_coefficient: f64,
}

impl Medium {
    /// `diffusion_coefficient` in cm²/s, strictly positive.
    pub fn new(diffusion_coefficient: f64) -> Result<Self> {
        ensure(
            diffusion_coefficient.is_finite() && diffusion_coefficient > 0.0,
            "diffusion coefficient",
            diffusion_coefficient,
            "must be finite and > 0",
        )?;
        Ok(Self {
            diffusion_coefficient,
        })
    }

    pub fn diffusion_coefficient(&self) -> f64 {
        self.diffusion_coefficient
    }
}

/// Straight-line separation between an emitter and a receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    distance_cm: f64,
}

impl Link {
    pub fn new(distance_cm: f64) -> Result<Self> {
        ensure(
            distance_cm.is_finite() && distance_cm > 0.0,
            "link distance",
            distance_cm,
            "must be finite and > 0",
        )?;
        Ok(Self { distance_cm })
    }

    pub fn from_um(distance_um: f64) -> Result<Self> {
        Self::new(um_to_cm(distance_um))
    }

    pub fn distance_cm(&self) -> f64 {
        self.distance_cm
    }

    pub fn distance_um(&self) -> f64 {
        cm_to_um(self.distance_cm)
    }

    /// Same link stretched by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.distance_cm * factor)
    }
}

/// Gaussian multi-user interference at a receiving surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuiModel {
    mean: f64,
    std: f64,
}

impl MuiModel {
    pub fn new(mean: f64, std: f64) -> Result<Self> {
        ensure(
            mean.is_finite() && mean >= 0.0,
            "interference mean",
            mean,
            "must be finite and >= 0",
        )?;
        ensure(
            std.is_finite() && std > 0.0,
            "interference std",
            std,
            "must be finite and > 0",
        )?;
        Ok(Self { mean, std })
    }

    /// Mean scaled by a coefficient of variation: `std = cov · mean`.
    pub fn with_cov(mean: f64, cov: f64) -> Result<Self> {
        ensure(
            cov.is_finite() && cov > 0.0,
            "coefficient of variation",
            cov,
            "must be finite and > 0",
        )?;
        Self::new(mean, cov * mean)
    }

    /// Interference produced by `count` identical emitters of `each`
    /// molecules at `link`, each contributing its peak concentration.
    pub fn from_interferers(count: u32, each: Emission, link: Link, cov: f64) -> Result<Self> {
        ensure(count >= 1, "interferer count", count as f64, "must be >= 1")?;
        let mean = count as f64 * each.molecules() * peak_gain(&link);
        Self::with_cov(mean, cov)
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn std(&self) -> f64 {
        self.std
    }

    pub fn variance(&self) -> f64 {
        self.std * self.std
    }
}

/// Number of molecules released for symbol 1.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Emission(f64);

impl Emission {
    pub fn new(molecules: f64) -> Result<Self> {
        ensure(
            molecules.is_finite() && molecules >= 0.0,
            "molecule count",
            molecules,
            "must be finite and >= 0",
        )?;
        Ok(Self(molecules))
    }

    pub fn molecules(&self) -> f64 {
        self.0
    }

    /// Peak concentration this emission produces across `link`.
    pub fn peak_concentration(&self, link: &Link) -> f64 {
        self.0 * peak_gain(link)
    }
}

/// Concentration per released molecule at time `t` after an impulsive
/// release, `(4πDt)^{-3/2} exp(-d²/(4Dt))`. Deep-tail underflow yields 0.
pub fn impulse_response(t: f64, link: &Link, medium: &Medium) -> Result<f64> {
    ensure(
        t.is_finite() && t > 0.0,
        "time",
        t,
        "must be finite and > 0",
    )?;
    let d = link.distance_cm();
    let dt = medium.diffusion_coefficient() * t;
    Ok((4.0 * PI * dt).powf(-1.5) * (-d * d / (4.0 * dt)).exp())
}

/// Time at which the impulse response peaks, `d²/(6D)`.
pub fn peak_time(link: &Link, medium: &Medium) -> f64 {
    let d = link.distance_cm();
    d * d / (6.0 * medium.diffusion_coefficient())
}

/// Peak concentration per released molecule, `d⁻³·(3/(2πe))^{3/2}`.
pub fn peak_gain(link: &Link) -> f64 {
    link.distance_cm().powi(-3) * peak_factor()
}
