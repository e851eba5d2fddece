//! Parameter grids and the CSV sweep runner.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::config::{OperatingPoint, Scenario};
use super::ExperimentError;
use crate::analytics::SystemKind;
use crate::channel::cm_to_um;
use crate::simulator::{DetectorChoice, Simulator};

/// Fixed CSV header.
pub const CSV_HEADER: [&str; 10] = [
    "system",
    "N",
    "Q_total",
    "distance_um",
    "pe_analytic",
    "pe_mc",
    "mc_se",
    "trials",
    "seed",
    "detector",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Molecule budget `Q`.
    #[serde(alias = "total_molecules", alias = "q")]
    Molecules,
    /// Direct source-destination distance in μm.
    #[serde(alias = "distance")]
    DistanceUm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl Grid {
    /// Grid values; both endpoints are hit exactly.
    pub fn values(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i == 0 {
                    return self.min;
                }
                if i + 1 == self.points {
                    return self.max;
                }
                let t = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.min + (self.max - self.min) * t,
                    Spacing::Log => {
                        let (a, b) = (self.min.log10(), self.max.log10());
                        10f64.powf(a + (b - a) * t)
                    }
                }
            })
            .collect()
    }
}

/// What a sweep evaluates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    /// `None` evaluates only the scenario's own operating point.
    pub parameter: Option<SweepParameter>,
    pub grid: Option<Grid>,
    pub systems: Vec<SystemKind>,
    /// Relay counts for the cooperative system; each uses the first `n` relays.
    pub relay_counts: Vec<usize>,
    /// Monte Carlo trials per row; zero means analytic only.
    pub trials: u64,
    pub seed: u64,
    pub detector: DetectorChoice,
}

impl SweepSpec {
    pub fn single_point(relays: usize) -> Self {
        let (systems, relay_counts) = if relays == 0 {
            (vec![SystemKind::Siso], vec![])
        } else {
            (vec![SystemKind::Cooperative], vec![relays])
        };
        Self {
            parameter: None,
            grid: None,
            systems,
            relay_counts,
            trials: 0,
            seed: super::config::DEFAULT_SEED,
            detector: DetectorChoice::Linear,
        }
    }

    /// `(parameter, value)` pairs, or a single `None` for an unswept spec.
    pub fn points(&self) -> Vec<Option<(SweepParameter, f64)>> {
        match (self.parameter, &self.grid) {
            (Some(p), Some(g)) => g.values().into_iter().map(|v| Some((p, v))).collect(),
            _ => vec![None],
        }
    }
}

/// Command-line overrides applied on top of a scenario's sweep block.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub detector: Option<DetectorChoice>,
}

impl Overrides {
    pub fn apply(&self, spec: &SweepSpec) -> Result<SweepSpec, ExperimentError> {
        let mut s = spec.clone();
        if let Some(t) = self.trials {
            if t != 0 && t < super::config::MIN_SWEEP_TRIALS {
                return Err(ExperimentError::Config {
                    key: "trials".into(),
                    message: format!(
                        "Monte Carlo sweeps need at least {} trials, got {t}",
                        super::config::MIN_SWEEP_TRIALS
                    ),
                });
            }
            s.trials = t;
        }
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(d) = self.detector {
            s.detector = d;
        }
        Ok(s)
    }
}

/// One CSV line.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// System name, with `@label` appended for labelled cooperative scenarios.
    pub system: String,
    pub n: usize,
    pub q_total: f64,
    pub distance_um: f64,
    pub pe_analytic: f64,
    pub mc: Option<McColumns>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McColumns {
    pub pe: f64,
    pub se: f64,
    pub trials: u64,
    pub seed: u64,
    pub detector: DetectorChoice,
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl SweepRow {
    pub fn record(&self) -> Vec<String> {
        let mut r = vec![
            self.system.clone(),
            self.n.to_string(),
            fmt_f64(self.q_total),
            fmt_f64(self.distance_um),
            fmt_f64(self.pe_analytic),
        ];
        match &self.mc {
            Some(m) => r.extend([
                fmt_f64(m.pe),
                fmt_f64(m.se),
                m.trials.to_string(),
                m.seed.to_string(),
                m.detector.to_string(),
            ]),
            None => r.extend(std::iter::repeat_n(String::new(), 5)),
        }
        r
    }

    fn parse(rec: &csv::StringRecord, line: usize) -> Result<Self, ExperimentError> {
        let bad = |col: &str, v: &str| ExperimentError::Config {
            key: format!("row {line}.{col}"),
            message: format!("cannot parse `{v}`"),
        };
        if rec.len() != CSV_HEADER.len() {
            return Err(ExperimentError::Config {
                key: format!("row {line}"),
                message: format!("expected {} fields, got {}", CSV_HEADER.len(), rec.len()),
            });
        }
        let f = |i: usize| -> Result<f64, ExperimentError> {
            rec[i]
                .parse::<f64>()
                .map_err(|_| bad(CSV_HEADER[i], &rec[i]))
        };
        let u = |i: usize| -> Result<u64, ExperimentError> {
            rec[i]
                .parse::<u64>()
                .map_err(|_| bad(CSV_HEADER[i], &rec[i]))
        };
        let mc = if rec[5].is_empty() {
            None
        } else {
            Some(McColumns {
                pe: f(5)?,
                se: f(6)?,
                trials: u(7)?,
                seed: u(8)?,
                detector: rec[9].parse().map_err(|_| bad("detector", &rec[9]))?,
            })
        };
        Ok(Self {
            system: rec[0].to_string(),
            n: rec[1].parse().map_err(|_| bad("N", &rec[1]))?,
            q_total: f(2)?,
            distance_um: f(3)?,
            pe_analytic: f(4)?,
            mc,
        })
    }
}

/// Streams rows to CSV, flushing after each one.
pub struct CsvSink<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> CsvSink<W> {
    pub fn new(out: W) -> Result<Self, ExperimentError> {
        let mut inner = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(out);
        inner.write_record(CSV_HEADER)?;
        inner.flush()?;
        Ok(Self { inner })
    }

    pub fn push(&mut self, row: &SweepRow) -> Result<(), ExperimentError> {
        self.inner.write_record(row.record())?;
        self.inner.flush()?;
        Ok(())
    }
}

/// Parses CSV produced by [`CsvSink`].
pub fn read_rows(input: impl Read) -> Result<Vec<SweepRow>, ExperimentError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(ExperimentError::Config {
            key: "header".into(),
            message: format!(
                "unexpected CSV header `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    reader
        .records()
        .enumerate()
        .map(|(i, rec)| SweepRow::parse(&rec?, i + 1))
        .collect()
}

/// Evaluates one row.
pub fn evaluate(
    scenario: &Scenario,
    kind: SystemKind,
    relays: usize,
    point: &OperatingPoint,
    spec: &SweepSpec,
) -> Result<SweepRow, ExperimentError> {
    let system = scenario.system(kind, relays, point)?;
    let pe_analytic = system.analytic_pe()?;
    let mc = if spec.trials > 0 {
        let est = Simulator::new(&system)?.estimate(spec.detector, spec.trials, spec.seed)?;
        Some(McColumns {
            pe: est.pe,
            se: est.standard_error,
            trials: est.trials,
            seed: est.seed,
            detector: spec.detector,
        })
    } else {
        None
    };
    let system = match (&scenario.label, kind) {
        (Some(label), SystemKind::Cooperative) => format!("{kind}@{label}"),
        _ => kind.to_string(),
    };
    Ok(SweepRow {
        system,
        n: scenario.branch_count(kind, relays),
        q_total: point.molecules,
        distance_um: cm_to_um(point.distance.distance_cm()),
        pe_analytic,
        mc,
    })
}

/// Runs `spec` over `scenario`, writing each row as soon as it is computed.
/// Rows appear grid point by grid point, then in the order of
/// `spec.systems` (cooperative expanded over `spec.relay_counts`).
pub fn run_sweep<W: Write>(
    scenario: &Scenario,
    spec: &SweepSpec,
    sink: &mut CsvSink<W>,
) -> Result<Vec<SweepRow>, ExperimentError> {
    let mut rows = Vec::new();
    for p in spec.points() {
        let point = match p {
            Some((param, v)) => scenario.point(param, v)?,
            None => scenario.base_point(),
        };
        for &kind in &spec.systems {
            let counts: &[usize] = if kind == SystemKind::Cooperative {
                &spec.relay_counts
            } else {
                &[0]
            };
            for &n in counts {
                let row = evaluate(scenario, kind, n, &point, spec)?;
                sink.push(&row)?;
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

/// Runs a scenario's own sweep block with `overrides`.
pub fn sweep_to_csv<W: Write>(
    scenarios: &[Scenario],
    overrides: &Overrides,
    out: W,
) -> Result<Vec<SweepRow>, ExperimentError> {
    let mut sink = CsvSink::new(out)?;
    let mut rows = Vec::new();
    for s in scenarios {
        let spec = overrides.apply(&s.sweep)?;
        rows.extend(run_sweep(s, &spec, &mut sink)?);
    }
    Ok(rows)
}
