//! JSON summary of a scenario at its own operating point.

use serde::Serialize;

use super::config::Scenario;
use super::ExperimentError;
use crate::analytics::{
    analyze, full_chain_pe, PerformanceReport, SystemKind, MAX_ENUMERATED_RELAYS,
};
use crate::channel::peak_time;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CooperativeSummary {
    pub relays: usize,
    /// Gaussian-statistic closed form.
    pub pe: f64,
    /// Exact value over all relay decision patterns; absent above the enumeration limit.
    pub pe_full_chain: Option<f64>,
    pub detail: PerformanceReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakTimes {
    pub direct_s: f64,
    /// `(source to relay, relay to destination)` per relay.
    pub relays_s: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticReport {
    pub label: Option<String>,
    pub molecules: f64,
    pub distance_um: f64,
    pub cooperative: Option<CooperativeSummary>,
    pub siso: f64,
    pub miso: f64,
    pub simo: f64,
    pub peak_times: PeakTimes,
}

pub fn analytic_report(s: &Scenario) -> Result<AnalyticReport, ExperimentError> {
    let point = s.base_point();
    let cooperative = if s.relays.is_empty() {
        None
    } else {
        let net = s.network(s.relays.len(), &point)?;
        let detail = analyze(&net)?;
        let pe_full_chain = if s.relays.len() <= MAX_ENUMERATED_RELAYS {
            Some(full_chain_pe(&net)?)
        } else {
            None
        };
        Some(CooperativeSummary {
            relays: s.relays.len(),
            pe: detail.pe,
            pe_full_chain,
            detail,
        })
    };
    let pe =
        |kind| -> Result<f64, ExperimentError> { Ok(s.system(kind, 0, &point)?.analytic_pe()?) };
    Ok(AnalyticReport {
        label: s.label.clone(),
        molecules: point.molecules,
        distance_um: point.distance.distance_um(),
        cooperative,
        siso: pe(SystemKind::Siso)?,
        miso: pe(SystemKind::Miso)?,
        simo: pe(SystemKind::Simo)?,
        peak_times: PeakTimes {
            direct_s: peak_time(&s.direct_link, &s.medium),
            relays_s: s
                .relays
                .iter()
                .map(|r| {
                    (
                        peak_time(&r.source_link, &s.medium),
                        peak_time(&r.destination_link, &s.medium),
                    )
                })
                .collect(),
        },
    })
}
