//! Closed-form metrics, ring geometry and the cross-over solver.
//!
//! Three formula sets are available. [`FormulaSet::Tabulated`] is the
//! published comparison table (with the SC heralding probability in its
//! self-consistent form) and is the default everywhere. [`FormulaSet::TabulatedRaw`]
//! differs only in using the SC heralding probability exactly as printed.
//! [`FormulaSet::Exact`] contains the forms that agree with the amplitude
//! oracle: a party's herald photon comes from the retained-partner branch
//! with weight `1/2` and from a lost-partner branch with weight
//! `(1−η²)/2`, which gives `P_hr = 2(2η²−η⁴)^N / 4^N` for both
//! single-photon schemes.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heralding::{Metrics, Provenance};
use crate::schemes::Scheme;

/// Default bisection tolerance for [`crossover_radius`], in km.
pub const DEFAULT_CROSSOVER_TOL: f64 = 1e-6;

/// Chord limit quoted alongside the computed one, in km.
pub const REFERENCE_CHORD_KM: f64 = 15.71;

/// Party count used for the numeric large-`N` chord.
pub const ASYMPTOTIC_PARTIES: usize = 500;

const MAX_BRACKET_KM: f64 = 1e5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormulaSet {
    #[default]
    Tabulated,
    TabulatedRaw,
    Exact,
}

impl fmt::Display for FormulaSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FormulaSet::Tabulated => "tabulated",
            FormulaSet::TabulatedRaw => "tabulated-raw",
            FormulaSet::Exact => "exact",
        })
    }
}

impl FromStr for FormulaSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tabulated" => Ok(FormulaSet::Tabulated),
            "tabulated-raw" => Ok(FormulaSet::TabulatedRaw),
            "exact" => Ok(FormulaSet::Exact),
            other => Err(Error::InvalidParameter(format!("unknown formula set '{other}'"))),
        }
    }
}

fn pow(x: f64, n: usize) -> f64 {
    x.powi(n as i32)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClosedForms {
    pub scheme: Scheme,
    pub set: FormulaSet,
}

impl ClosedForms {
    pub fn new(scheme: Scheme, set: FormulaSet) -> Self {
        Self { scheme, set }
    }

    pub fn tabulated(scheme: Scheme) -> Self {
        Self::new(scheme, FormulaSet::Tabulated)
    }

    pub fn p_suc(&self, n: usize, eta: f64) -> f64 {
        let e2 = eta * eta;
        match self.scheme {
            Scheme::Bc => pow(e2, n) / pow(2.0, n - 1),
            Scheme::Sc => pow(e2, n) / pow(2.0, 2 * n - 1),
            Scheme::Sd => pow(e2, 2 * n) / pow(2.0, 2 * n - 1),
        }
    }

    pub fn p_hr(&self, n: usize, eta: f64) -> f64 {
        let e2 = eta * eta;
        let e4 = e2 * e2;
        match (self.scheme, self.set) {
            (Scheme::Bc, _) => pow(e2, n) / pow(2.0, n - 1),
            (Scheme::Sc, FormulaSet::Tabulated) => (pow(e2, n) + pow(3.0 * e2 - 2.0 * e4, n)) / pow(4.0, n),
            (Scheme::Sc, FormulaSet::TabulatedRaw) => {
                let inner = 2.0 * e2 * (1.0 - e2) * (1.0 - e2) + e2;
                (2.0 * pow(e2, n) + pow(inner, n) - pow(e2, n)) / pow(2.0, n)
            }
            (Scheme::Sd, FormulaSet::Tabulated | FormulaSet::TabulatedRaw) => {
                (pow(2.0 * e2 - e4, n) + pow(e4, n)) / pow(4.0, n)
            }
            (Scheme::Sc | Scheme::Sd, FormulaSet::Exact) => 2.0 * pow(2.0 * e2 - e4, n) / pow(4.0, n),
        }
    }

    /// Fails at `η = 0`, where no herald ever occurs.
    pub fn h_eff(&self, n: usize, eta: f64) -> Result<f64> {
        if eta == 0.0 {
            return Err(Error::UndefinedEfficiency { eta });
        }
        let e2 = eta * eta;
        Ok(match (self.scheme, self.set) {
            (Scheme::Bc, _) => 1.0,
            (Scheme::Sc, FormulaSet::Tabulated | FormulaSet::TabulatedRaw) => 2.0 / (1.0 + pow(3.0 - 2.0 * e2, n)),
            (Scheme::Sd, FormulaSet::Tabulated | FormulaSet::TabulatedRaw) => {
                2.0 * pow(e2, n) / (pow(2.0 - e2, n) + pow(e2, n))
            }
            (Scheme::Sc, FormulaSet::Exact) => 1.0 / pow(2.0 - e2, n),
            (Scheme::Sd, FormulaSet::Exact) => pow(e2 / (2.0 - e2), n),
        })
    }

    pub fn metrics(&self, n: usize, eta: f64) -> Result<Metrics> {
        Ok(Metrics {
            p_suc: self.p_suc(n, eta),
            p_hr: self.p_hr(n, eta),
            h_eff: self.h_eff(n, eta)?,
            provenance: Provenance::Analytic,
        })
    }
}

pub fn closed_p_suc(scheme: Scheme, n: usize, eta: f64) -> f64 {
    ClosedForms::tabulated(scheme).p_suc(n, eta)
}

pub fn closed_p_hr(scheme: Scheme, n: usize, eta: f64) -> f64 {
    ClosedForms::tabulated(scheme).p_hr(n, eta)
}

pub fn closed_h_eff(scheme: Scheme, n: usize, eta: f64) -> Result<f64> {
    ClosedForms::tabulated(scheme).h_eff(n, eta)
}

/// Efficiency a Bell-type test must beat to rule out local hidden variables.
pub fn lhv_threshold(n: usize) -> f64 {
    n as f64 / (2.0 * n as f64 - 2.0)
}

pub fn eta_of_length(alpha: f64, length_km: f64) -> f64 {
    (-alpha * length_km).exp()
}

/// Distance between neighbouring parties on a ring of radius `r`.
pub fn chord(n: usize, radius_km: f64) -> f64 {
    2.0 * radius_km * (PI / n as f64).sin()
}

/// `e^{−2αR} + e^{4αR·sin(π/N)} − 2`; its positive root is the cross-over radius.
pub fn crossover_residual(n: usize, alpha: f64, radius_km: f64) -> f64 {
    (-2.0 * alpha * radius_km).exp() + (4.0 * alpha * radius_km * (PI / n as f64).sin()).exp() - 2.0
}

/// Radius where the SC and SD heralding efficiencies meet.
///
/// Zero for `N ≤ 6`, where the residual has no positive root. Otherwise the
/// root is bracketed by doubling (or halving) from 1 km and then bisected
/// until the bracket is narrower than `tol`.
pub fn crossover_radius(n: usize, alpha: f64, tol: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::TooFewParties(n));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be > 0, got {tol}")));
    }
    if n <= 6 {
        return Ok(0.0);
    }
    let g = |r: f64| crossover_residual(n, alpha, r);
    let (mut lo, mut hi) = if g(1.0) < 0.0 {
        let mut lo = 1.0;
        let mut hi = 2.0;
        while g(hi) < 0.0 {
            if hi > MAX_BRACKET_KM {
                return Err(Error::NoBracket(MAX_BRACKET_KM));
            }
            lo = hi;
            hi *= 2.0;
        }
        (lo, hi)
    } else {
        let mut hi = 1.0;
        let mut lo = 0.5;
        while g(lo) >= 0.0 {
            if lo < 1e-300 {
                return Err(Error::NoBracket(MAX_BRACKET_KM));
            }
            hi = lo;
            lo /= 2.0;
        }
        (lo, hi)
    };
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticChord {
    /// `ln 2 / (2α)`, the `N → ∞` limit of the cross-over chord.
    pub analytic_km: f64,
    pub numeric_parties: usize,
    pub numeric_km: f64,
    pub reference_km: f64,
}

pub fn asymptotic_chord(alpha: f64) -> Result<AsymptoticChord> {
    let r = crossover_radius(ASYMPTOTIC_PARTIES, alpha, 1e-10)?;
    Ok(AsymptoticChord {
        analytic_km: LN_2 / (2.0 * alpha),
        numeric_parties: ASYMPTOTIC_PARTIES,
        numeric_km: chord(ASYMPTOTIC_PARTIES, r),
        reference_km: REFERENCE_CHORD_KM,
    })
}

/// Smallest `N` for which the SD success probability beats SC at every
/// positive radius: `η_SD⁴ > η_SC²` reduces to `sin(π/N) < 1/4`.
pub fn p_suc_crossing_party_count() -> usize {
    (2..)
        .find(|&n| (PI / n as f64).sin() < 0.25)
        .expect("sin(π/N) tends to zero")
}
