//! Built-in scenario files for the three reference experiments.

use super::config::{scenarios_from_json, Scenario};
use super::ExperimentError;

/// Error rate against molecule budget for one to three relays.
pub const FIG2A: &str = include_str!("../../presets/fig2a.json");
/// Error rate against distance at a fixed budget, three relay placements.
pub const FIG2B: &str = include_str!("../../presets/fig2b.json");
/// Error rate against molecule budget at a fixed distance, three relay placements.
pub const FIG2C: &str = include_str!("../../presets/fig2c.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    Fig2a,
    Fig2b,
    Fig2c,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Fig2a, Preset::Fig2b, Preset::Fig2c];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2a => "fig2a",
            Preset::Fig2b => "fig2b",
            Preset::Fig2c => "fig2c",
        }
    }

    pub fn json(self) -> &'static str {
        match self {
            Preset::Fig2a => FIG2A,
            Preset::Fig2b => FIG2B,
            Preset::Fig2c => FIG2C,
        }
    }

    pub fn scenarios(self) -> Result<Vec<Scenario>, ExperimentError> {
        scenarios_from_json(self.json())
    }
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown preset `{s}` (expected fig2a, fig2b or fig2c)"))
    }
}
