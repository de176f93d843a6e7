//! Radius sweeps, cross-over curves and oracle-vs-formula campaigns.
//!
//! Jobs run on the rayon pool; results are collected in job order, so the
//! emitted records do not depend on the number of workers.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{self, ClosedForms, FormulaSet};
use crate::error::{Error, Result};
use crate::format::{fmt_sig, serialize_sig, serialize_sig_opt, SIG_DIGITS};
use crate::heralding::{simulate_capped, Metrics, Provenance};
use crate::schemes::{self, eta_for_geometry, NetworkGeometry, Scheme};

/// Largest party count the amplitude oracle is run for.
pub const ORACLE_MAX_PARTIES: usize = 6;

/// Abort an oracle case once a state holds more monomials than this.
pub const TERM_CAP: usize = 100_000_000;

/// Default oracle-vs-formula tolerance.
pub const VERIFY_TOL: f64 = 1e-9;

pub const DEFAULT_VERIFY_PARTIES: [usize; 3] = [2, 3, 4];
pub const DEFAULT_VERIFY_ETAS: [f64; 4] = [1.0, 0.9, 0.7, 0.5];

pub const SWEEP_HEADER: [&str; 10] = [
    "scheme", "N", "R_km", "alpha", "eta", "p_suc", "p_hr", "h_eff", "h_th", "source",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRecord {
    pub scheme: Scheme,
    #[serde(rename = "N")]
    pub parties: usize,
    #[serde(rename = "R_km", serialize_with = "serialize_sig")]
    pub radius_km: f64,
    #[serde(serialize_with = "serialize_sig")]
    pub alpha: f64,
    #[serde(serialize_with = "serialize_sig")]
    pub eta: f64,
    #[serde(serialize_with = "serialize_sig")]
    pub p_suc: f64,
    #[serde(serialize_with = "serialize_sig")]
    pub p_hr: f64,
    #[serde(serialize_with = "serialize_sig")]
    pub h_eff: f64,
    #[serde(serialize_with = "serialize_sig")]
    pub h_th: f64,
    pub source: Provenance,
}

impl SweepRecord {
    fn csv_fields(&self) -> [String; 10] {
        let f = |v: f64| fmt_sig(v, SIG_DIGITS);
        [
            self.scheme.to_string(),
            self.parties.to_string(),
            f(self.radius_km),
            f(self.alpha),
            f(self.eta),
            f(self.p_suc),
            f(self.p_hr),
            f(self.h_eff),
            f(self.h_th),
            self.source.to_string(),
        ]
    }
}

/// `start, start+step, …` up to and including `stop` (within 1e-9 steps).
pub fn radius_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start || start < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "radius grid {start}:{stop}:{step} must satisfy 0 <= start <= stop, step > 0"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

/// One analytic record per `(scheme, N, R)`, in that nesting order.
pub fn sweep_vs_radius(
    schemes: &[Scheme],
    parties: &[usize],
    radii: &[f64],
    alpha: f64,
    set: FormulaSet,
) -> Result<Vec<SweepRecord>> {
    if radii.is_empty() {
        return Err(Error::InvalidParameter("empty radius grid".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("radius grid must be strictly ascending".into()));
    }
    let mut jobs = Vec::new();
    for &s in schemes {
        for &n in parties {
            for &r in radii {
                jobs.push((s, NetworkGeometry::new(n, r, alpha)?));
            }
        }
    }
    jobs.par_iter()
        .map(|&(scheme, geometry)| {
            let eta = eta_for_geometry(scheme, &geometry);
            let m = ClosedForms::new(scheme, set).metrics(geometry.parties, eta)?;
            Ok(SweepRecord {
                scheme,
                parties: geometry.parties,
                radius_km: geometry.radius_km,
                alpha,
                eta,
                p_suc: m.p_suc,
                p_hr: m.p_hr,
                h_eff: m.h_eff,
                h_th: analytic::lhv_threshold(geometry.parties),
                source: Provenance::Analytic,
            })
        })
        .collect()
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn io_error(path: &str, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.to_string(),
        message: e.to_string(),
    }
}

pub fn write_sweep_csv<W: Write>(out: W, records: &[SweepRecord]) -> Result<()> {
    let mut w = csv_writer(out);
    let err = |e: csv::Error| io_error("<sweep>", e);
    w.write_record(SWEEP_HEADER).map_err(err)?;
    for r in records {
        w.write_record(r.csv_fields()).map_err(err)?;
    }
    w.flush().map_err(|e| io_error("<sweep>", e))
}

pub fn sweep_csv_string(records: &[SweepRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, records)?;
    Ok(String::from_utf8(buf).expect("csv output is ASCII"))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CrossoverPoint {
    #[serde(rename = "N")]
    pub parties: usize,
    #[serde(rename = "R_c_km", serialize_with = "serialize_sig")]
    pub radius_km: f64,
    #[serde(rename = "l_c_km", serialize_with = "serialize_sig")]
    pub chord_km: f64,
}

pub fn crossover_curve(n_min: usize, n_max: usize, alpha: f64, tol: f64) -> Result<Vec<CrossoverPoint>> {
    if n_min < 2 {
        return Err(Error::TooFewParties(n_min));
    }
    if n_max < n_min {
        return Err(Error::InvalidParameter(format!("empty party range {n_min}..{n_max}")));
    }
    (n_min..=n_max)
        .into_par_iter()
        .map(|n| {
            let r = analytic::crossover_radius(n, alpha, tol)?;
            Ok(CrossoverPoint {
                parties: n,
                radius_km: r,
                chord_km: analytic::chord(n, r),
            })
        })
        .collect()
}

pub fn write_crossover_csv<W: Write>(out: W, points: &[CrossoverPoint]) -> Result<()> {
    let mut w = csv_writer(out);
    let err = |e: csv::Error| io_error("<crossover>", e);
    w.write_record(["N", "R_c_km", "l_c_km"]).map_err(err)?;
    for p in points {
        w.write_record([
            p.parties.to_string(),
            fmt_sig(p.radius_km, SIG_DIGITS),
            fmt_sig(p.chord_km, SIG_DIGITS),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| io_error("<crossover>", e))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationRow {
    pub case_id: String,
    pub scheme: Scheme,
    #[serde(rename = "N")]
    pub parties: usize,
    #[serde(serialize_with = "serialize_sig")]
    pub eta: f64,
    pub metric: &'static str,
    #[serde(serialize_with = "serialize_sig_opt")]
    pub analytic: Option<f64>,
    #[serde(serialize_with = "serialize_sig_opt")]
    pub simulated: Option<f64>,
    #[serde(serialize_with = "serialize_sig_opt")]
    pub abs_diff: Option<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct VerificationSummary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub reference: FormulaSet,
    #[serde(serialize_with = "serialize_sig")]
    pub tolerance: f64,
    pub rows: Vec<VerificationRow>,
    pub summary: VerificationSummary,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn failures(&self) -> impl Iterator<Item = &VerificationRow> {
        self.rows.iter().filter(|r| !r.pass)
    }
}

pub const METRIC_NAMES: [&str; 3] = ["p_suc", "p_hr", "h_eff"];

fn metric_values(m: &Metrics) -> [f64; 3] {
    [m.p_suc, m.p_hr, m.h_eff]
}

fn verify_case(scheme: Scheme, n: usize, eta: f64, set: FormulaSet, tol: f64) -> Vec<VerificationRow> {
    let case_id = format!("{scheme}-N{n}-eta{}", fmt_sig(eta, SIG_DIGITS));
    let analytic = ClosedForms::new(scheme, set).metrics(n, eta);
    let simulated = schemes::build(scheme, n, eta).and_then(|setup| simulate_capped(&setup, TERM_CAP));
    let reason = match (&analytic, &simulated) {
        (Err(e), _) | (_, Err(e)) => Some(e.to_string()),
        _ => None,
    };
    let a = analytic.ok().map(|m| metric_values(&m));
    let s = simulated.ok().map(|m| metric_values(&m));
    METRIC_NAMES
        .iter()
        .enumerate()
        .map(|(k, &metric)| {
            let av = a.map(|v| v[k]);
            let sv = s.map(|v| v[k]);
            let diff = av.zip(sv).map(|(x, y)| (x - y).abs());
            VerificationRow {
                case_id: case_id.clone(),
                scheme,
                parties: n,
                eta,
                metric,
                analytic: av,
                simulated: sv,
                abs_diff: diff,
                pass: diff.is_some_and(|d| d <= tol),
                reason: reason.clone(),
            }
        })
        .collect()
}

/// Runs the amplitude oracle for every `(scheme, N, η)` and compares all
/// three metrics with the closed forms of `set`.
pub fn verify_suite(parties: &[usize], etas: &[f64], set: FormulaSet, tol: f64) -> Result<VerificationReport> {
    for &n in parties {
        if n > ORACLE_MAX_PARTIES {
            return Err(Error::OracleCap {
                parties: n,
                cap: ORACLE_MAX_PARTIES,
            });
        }
        if n < 2 {
            return Err(Error::TooFewParties(n));
        }
    }
    for &eta in etas {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidEta(eta));
        }
    }
    let mut cases = Vec::new();
    for &scheme in &Scheme::ALL {
        for &n in parties {
            for &eta in etas {
                cases.push((scheme, n, eta));
            }
        }
    }
    let rows: Vec<VerificationRow> = cases
        .par_iter()
        .map(|&(s, n, eta)| verify_case(s, n, eta, set, tol))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let passed = rows.iter().filter(|r| r.pass).count();
    Ok(VerificationReport {
        reference: set,
        tolerance: tol,
        summary: VerificationSummary {
            total: rows.len(),
            passed,
            failed: rows.len() - passed,
        },
        rows,
    })
}
