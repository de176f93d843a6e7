//! Herald outcomes and the three figures of merit.
//!
//! A herald is valid when every detector station registers exactly one
//! photon; the pattern records which of the two outputs clicked. For each
//! pattern `h`, `v_h` is the heralded component with every environment mode
//! empty, and `x_h`, `y_h` are its overlaps with the two GHZ product strings.
//! The best GHZ fidelity over the relative phase gives
//! `P_suc(h) = (|x_h| + |y_h|)² / 2`, attained at `φ = arg y_h − arg x_h`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{Mode, Monomial, PhotonicState, Role};
use crate::optics::LinearMap;
use crate::schemes::{DetectionBasis, SchemeSetup, SchemeSpec};

/// Amplitudes below this are treated as absent when extracting a phase.
pub const PHASE_TOL: f64 = 1e-12;

const BUCKET_CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Outcome {
    H,
    V,
    D,
    A,
}

impl Outcome {
    pub fn pair(basis: DetectionBasis) -> [Outcome; 2] {
        match basis {
            DetectionBasis::Hv => [Outcome::H, Outcome::V],
            DetectionBasis::Da => [Outcome::D, Outcome::A],
        }
    }

    /// True for the second outcome of its basis (`V` or `A`).
    pub fn is_second(self) -> bool {
        matches!(self, Outcome::V | Outcome::A)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Outcome::H => "H",
            Outcome::V => "V",
            Outcome::D => "D",
            Outcome::A => "A",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HeraldPattern {
    outcomes: Vec<Outcome>,
}

impl HeraldPattern {
    pub fn new(outcomes: Vec<Outcome>) -> Self {
        Self { outcomes }
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn second_flags(&self) -> Vec<bool> {
        self.outcomes.iter().map(|o| o.is_second()).collect()
    }

    pub fn count(&self, outcome: Outcome) -> usize {
        self.outcomes.iter().filter(|&&o| o == outcome).count()
    }

    /// Position in [`enumerate_patterns`] order.
    pub fn index(&self) -> usize {
        self.outcomes
            .iter()
            .fold(0, |acc, o| (acc << 1) | usize::from(o.is_second()))
    }

    fn from_index(index: usize, n: usize, basis: DetectionBasis) -> Self {
        let [first, second] = Outcome::pair(basis);
        let outcomes = (0..n)
            .map(|k| {
                if (index >> (n - 1 - k)) & 1 == 1 {
                    second
                } else {
                    first
                }
            })
            .collect();
        Self { outcomes }
    }
}

impl fmt::Display for HeraldPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in &self.outcomes {
            write!(f, "{o}")?;
        }
        Ok(())
    }
}

/// All `2^n` patterns, lexicographic with the first station most significant.
pub fn enumerate_patterns_for(n: usize, basis: DetectionBasis) -> Vec<HeraldPattern> {
    (0..1usize << n)
        .map(|i| HeraldPattern::from_index(i, n, basis))
        .collect()
}

pub fn enumerate_patterns(spec: &SchemeSpec) -> Vec<HeraldPattern> {
    enumerate_patterns_for(spec.parties, spec.detection_basis)
}

/// Expresses the detector modes in the measured basis. Identity for H/V.
pub fn detection_frame(state: &PhotonicState, spec: &SchemeSpec) -> Result<PhotonicState> {
    match spec.detection_basis {
        DetectionBasis::Hv => Ok(state.clone()),
        DetectionBasis::Da => {
            let reg = state.registry();
            let parts = spec
                .detector_stations
                .iter()
                .map(|&pair| LinearMap::hv_to_da(reg, pair))
                .collect::<Result<Vec<_>>>()?;
            LinearMap::combine("readout_da", parts)?.apply(state)
        }
    }
}

fn pattern_occupations(spec: &SchemeSpec, pattern: &HeraldPattern) -> Vec<(Mode, u32)> {
    spec.detector_stations
        .iter()
        .zip(pattern.outcomes())
        .flat_map(|(&(first, second), o)| {
            let hit = u32::from(o.is_second());
            [(first, 1 - hit), (second, hit)]
        })
        .collect()
}

/// Unnormalized heralded component of an evolved state. Detector modes stay
/// in the result (in the measured frame); environment modes are unconstrained.
pub fn pattern_projection(
    state: &PhotonicState,
    spec: &SchemeSpec,
    pattern: &HeraldPattern,
) -> Result<PhotonicState> {
    let framed = detection_frame(state, spec)?;
    Ok(framed.project_pattern(&pattern_occupations(spec, pattern)))
}

pub fn herald_probability(state: &PhotonicState, spec: &SchemeSpec) -> Result<f64> {
    Ok(HeraldAnalysis::new(state, spec)?.herald_probability())
}

pub fn success_probability(state: &PhotonicState, spec: &SchemeSpec) -> Result<f64> {
    Ok(HeraldAnalysis::new(state, spec)?.success_probability())
}

pub fn heralding_efficiency(state: &PhotonicState, spec: &SchemeSpec) -> Result<f64> {
    HeraldAnalysis::new(state, spec)?.heralding_efficiency()
}

pub fn feedforward_phase(state: &PhotonicState, spec: &SchemeSpec, pattern: &HeraldPattern) -> Result<f64> {
    HeraldAnalysis::new(state, spec)?.pattern(pattern)?.feedforward_phase()
}

pub fn false_herald_breakdown(state: &PhotonicState, spec: &SchemeSpec) -> Result<Vec<PatternOutcome>> {
    Ok(HeraldAnalysis::new(state, spec)?.patterns().to_vec())
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatternOutcome {
    pub pattern: HeraldPattern,
    /// Probability of observing the pattern, environment summed over.
    pub probability: f64,
    /// Best-phase GHZ fidelity weight `(|x|+|y|)²/2`.
    pub success: f64,
    pub x: Complex64,
    pub y: Complex64,
    /// `(environment photon count, probability)`, ascending by count.
    pub environment_histogram: Vec<(u32, f64)>,
}

impl PatternOutcome {
    /// `success / probability`, `None` for a pattern that never occurs.
    pub fn fidelity(&self) -> Option<f64> {
        (self.probability > 0.0).then(|| self.success / self.probability)
    }

    /// Relative phase in `[0, 2π)` that maximizes the GHZ overlap.
    pub fn feedforward_phase(&self) -> Result<f64> {
        if self.x.norm() < PHASE_TOL || self.y.norm() < PHASE_TOL {
            return Err(Error::NoFeedforward(self.pattern.to_string()));
        }
        let phi = (self.y.arg() - self.x.arg()).rem_euclid(TAU);
        Ok(if TAU - phi < 1e-9 { 0.0 } else { phi })
    }

    /// `|x| = |y|` within `tol`.
    pub fn is_balanced(&self, tol: f64) -> bool {
        (self.x.norm() - self.y.norm()).abs() <= tol
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Analytic,
    Simulated,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Analytic => "analytic",
            Provenance::Simulated => "simulated",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub p_suc: f64,
    pub p_hr: f64,
    pub h_eff: f64,
    pub provenance: Provenance,
}

#[derive(Default)]
struct Bucket {
    probability: f64,
    env: BTreeMap<u32, f64>,
    clean: BTreeMap<Monomial, Complex64>,
}

impl Bucket {
    fn merge(&mut self, other: Bucket) {
        self.probability += other.probability;
        for (k, p) in other.env {
            *self.env.entry(k).or_default() += p;
        }
        for (m, a) in other.clean {
            *self.clean.entry(m).or_default() += a;
        }
    }
}

/// Per-pattern decomposition of one evolved state, computed in a single pass.
#[derive(Clone, Debug)]
pub struct HeraldAnalysis {
    eta: f64,
    rows: Vec<PatternOutcome>,
}

impl HeraldAnalysis {
    pub fn new(state: &PhotonicState, spec: &SchemeSpec) -> Result<Self> {
        if !state.same_registry(&spec.ghz.s1) {
            return Err(Error::RegistryMismatch);
        }
        let framed = detection_frame(state, spec)?;
        let reg = framed.registry().clone();
        let n = spec.parties;
        let station_of: BTreeMap<Mode, (usize, bool)> = spec
            .detector_stations
            .iter()
            .enumerate()
            .flat_map(|(k, &(a, b))| [(a, (k, false)), (b, (k, true))])
            .collect();
        let detectors: Vec<bool> = reg.modes().map(|(_, info)| info.role == Role::Detector).collect();
        let environment: Vec<bool> = reg.modes().map(|(_, info)| info.role == Role::Environment).collect();

        let terms: Vec<(&Monomial, &Complex64)> = framed.terms().collect();
        let partials: Vec<Vec<Bucket>> = terms
            .par_chunks(BUCKET_CHUNK)
            .map(|chunk| {
                let mut buckets: Vec<Bucket> = (0..1usize << n).map(|_| Bucket::default()).collect();
                for &(mono, amp) in chunk {
                    let mut clicks = vec![0u32; n];
                    let mut second = vec![false; n];
                    let mut env_photons = 0u32;
                    for (mode, k) in mono.occupations() {
                        if let Some(&(station, is_second)) = station_of.get(&mode) {
                            clicks[station] += k;
                            second[station] = is_second;
                        } else if environment[mode.index()] {
                            env_photons += k;
                        }
                    }
                    if clicks.iter().any(|&c| c != 1) {
                        continue;
                    }
                    let index = second.iter().fold(0, |acc, &s| (acc << 1) | usize::from(s));
                    let weight = amp.norm_sqr() * mono.fock_weight();
                    let bucket = &mut buckets[index];
                    bucket.probability += weight;
                    *bucket.env.entry(env_photons).or_default() += weight;
                    if env_photons == 0 {
                        let reduced = mono.without(|m| detectors[m.index()]);
                        *bucket.clean.entry(reduced).or_default() += *amp;
                    }
                }
                buckets
            })
            .collect();

        let mut buckets: Vec<Bucket> = (0..1usize << n).map(|_| Bucket::default()).collect();
        for partial in partials {
            for (acc, b) in buckets.iter_mut().zip(partial) {
                acc.merge(b);
            }
        }

        let overlap = |target: &PhotonicState, clean: &BTreeMap<Monomial, Complex64>| -> Complex64 {
            target
                .terms()
                .filter_map(|(m, s)| clean.get(m).map(|a| s.conj() * a * m.fock_weight()))
                .sum()
        };
        let rows = buckets
            .into_iter()
            .enumerate()
            .map(|(i, b)| {
                let x = overlap(&spec.ghz.s1, &b.clean);
                let y = overlap(&spec.ghz.s2, &b.clean);
                let s = x.norm() + y.norm();
                PatternOutcome {
                    pattern: HeraldPattern::from_index(i, n, spec.detection_basis),
                    probability: b.probability,
                    success: s * s / 2.0,
                    x,
                    y,
                    environment_histogram: b.env.into_iter().collect(),
                }
            })
            .collect();
        Ok(Self { eta: spec.eta, rows })
    }

    pub fn patterns(&self) -> &[PatternOutcome] {
        &self.rows
    }

    pub fn pattern(&self, pattern: &HeraldPattern) -> Result<&PatternOutcome> {
        self.rows
            .get(pattern.index())
            .filter(|r| r.pattern == *pattern)
            .ok_or_else(|| Error::InvalidParameter(format!("pattern {pattern} does not belong to this scheme")))
    }

    pub fn herald_probability(&self) -> f64 {
        self.rows.iter().map(|r| r.probability).sum()
    }

    pub fn success_probability(&self) -> f64 {
        self.rows.iter().map(|r| r.success).sum()
    }

    pub fn heralding_efficiency(&self) -> Result<f64> {
        let p_hr = self.herald_probability();
        if p_hr <= 0.0 {
            return Err(Error::UndefinedEfficiency { eta: self.eta });
        }
        Ok(self.success_probability() / p_hr)
    }

    pub fn metrics(&self) -> Result<Metrics> {
        Ok(Metrics {
            p_suc: self.success_probability(),
            p_hr: self.herald_probability(),
            h_eff: self.heralding_efficiency()?,
            provenance: Provenance::Simulated,
        })
    }
}

/// Evolves the setup and evaluates all metrics by brute force.
pub fn simulate(setup: &SchemeSetup) -> Result<Metrics> {
    simulate_capped(setup, usize::MAX)
}

pub fn simulate_capped(setup: &SchemeSetup, cap: usize) -> Result<Metrics> {
    let out = setup.evolve_capped(cap)?;
    HeraldAnalysis::new(&out, &setup.spec)?.metrics()
}

/// The phase the scheme's feed-forward rule prescribes for `pattern`.
pub fn prescribed_phase(spec: &SchemeSpec, pattern: &HeraldPattern) -> f64 {
    spec.feedforward.phase(&pattern.second_flags())
}

/// Phases are compared modulo 2π.
pub fn same_phase(a: f64, b: f64, tol: f64) -> bool {
    let d = (a - b).rem_euclid(TAU);
    d < tol || TAU - d < tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::Polarization;
    use std::f64::consts::PI;
    use crate::schemes::{build, build_bc, build_bc_with, build_sc, build_sd, build_sd_with, BcOptions, Scheme, SdOptions};

    fn analyze(setup: &SchemeSetup) -> HeraldAnalysis {
        HeraldAnalysis::new(&setup.evolve().unwrap(), &setup.spec).unwrap()
    }

    // Closed forms derived by counting, per party, which loss events still
    // leave one photon at every station.
    fn counted_p_hr(n: i32, eta: f64) -> f64 {
        let e2 = eta * eta;
        2.0 * (2.0 * e2 - e2 * e2).powi(n) / 4f64.powi(n)
    }

    #[test]
    fn pattern_enumeration() {
        let one = enumerate_patterns_for(1, DetectionBasis::Hv);
        assert_eq!(one.iter().map(|p| p.to_string()).collect::<Vec<_>>(), ["H", "V"]);
        let one = enumerate_patterns_for(1, DetectionBasis::Da);
        assert_eq!(one.iter().map(|p| p.to_string()).collect::<Vec<_>>(), ["D", "A"]);
        let three = enumerate_patterns_for(3, DetectionBasis::Hv);
        assert_eq!(three.len(), 8);
        assert_eq!(three[1].to_string(), "HHV");
        assert_eq!(three[4].to_string(), "VHH");
        for (i, p) in three.iter().enumerate() {
            assert_eq!(p.index(), i);
        }
        assert_eq!(three, enumerate_patterns_for(3, DetectionBasis::Hv));
    }

    #[test]
    fn bc_metrics_match_tabulated() {
        for n in 2..=3 {
            for eta in [1.0, 0.9, 0.5] {
                let m = analyze(&build_bc(n, eta).unwrap()).metrics().unwrap();
                let expected = eta.powi(2 * n as i32) / 2f64.powi(n as i32 - 1);
                assert!((m.p_suc - expected).abs() < 1e-12);
                assert!((m.p_hr - expected).abs() < 1e-12);
                assert!((m.h_eff - 1.0).abs() < 1e-12);
            }
        }
        let m = analyze(&build_bc(3, 0.9).unwrap()).metrics().unwrap();
        assert!((m.p_suc - 0.13286025).abs() < 1e-12);
    }

    #[test]
    fn bc_conditional_states_are_ghz() {
        let setup = build_bc(3, 1.0).unwrap();
        let out = setup.evolve().unwrap();
        let a = HeraldAnalysis::new(&out, &setup.spec).unwrap();
        let all_h = &a.patterns()[0];
        assert_eq!(all_h.feedforward_phase().unwrap(), 0.0);
        let one_v = &a.patterns()[1];
        assert!(same_phase(one_v.feedforward_phase().unwrap(), PI, 1e-12));
        let all_v = &a.patterns()[7];
        assert!(same_phase(all_v.feedforward_phase().unwrap(), PI, 1e-12));
        let even = build_bc(2, 1.0).unwrap();
        let a2 = analyze(&even);
        assert_eq!(a2.patterns()[3].feedforward_phase().unwrap(), 0.0);

        // projection of the all-H pattern onto the retained modes is ∝ GHZ+
        let proj = pattern_projection(&out, &setup.spec, &all_h.pattern).unwrap();
        let pattern = pattern_occupations(&setup.spec, &all_h.pattern);
        let reduced = proj.condition_on(&pattern);
        let ghz = setup.spec.ghz.s1.add(&setup.spec.ghz.s2).unwrap();
        let overlap = reduced.inner_product(&ghz).unwrap().norm_sqr();
        assert!((overlap - reduced.norm_squared() * ghz.norm_squared()).abs() < 1e-12);
    }

    #[test]
    fn bc_lossless_herald_terms() {
        // ∏ b_D d_D + ∏ b_A d_A with weight (1/√2)^N each, before splitting
        // detectors into H/V; the herald-compatible mass is 2^N · 2^-N / 2^(N-1)
        let setup = build_bc(2, 1.0).unwrap();
        let out = setup.evolve().unwrap();
        let mass: f64 = enumerate_patterns(&setup.spec)
            .iter()
            .map(|p| pattern_projection(&out, &setup.spec, p).unwrap().norm_squared())
            .sum();
        assert!((mass - 0.5).abs() < 1e-12);
    }

    #[test]
    fn phase_plate_changes_phases_not_metrics() {
        for n in 2..=4 {
            let on = analyze(&build_bc(n, 0.8).unwrap());
            let off = analyze(
                &build_bc_with(
                    n,
                    0.8,
                    BcOptions {
                        phase_plate: false,
                        plate_party: 0,
                    },
                )
                .unwrap(),
            );
            let (m1, m2) = (on.metrics().unwrap(), off.metrics().unwrap());
            assert!((m1.p_suc - m2.p_suc).abs() < 1e-12);
            assert!((m1.p_hr - m2.p_hr).abs() < 1e-12);
            let flipped = on
                .patterns()
                .iter()
                .zip(off.patterns())
                .filter(|(a, b)| {
                    !same_phase(a.feedforward_phase().unwrap(), b.feedforward_phase().unwrap(), 1e-9)
                })
                .count();
            assert_eq!(flipped, if n % 2 == 1 { 1 << n } else { 0 });
        }
    }

    #[test]
    fn feedforward_rules_match_best_phase() {
        for scheme in Scheme::ALL {
            for n in 2..=4 {
                let setup = build(scheme, n, 0.85).unwrap();
                for row in analyze(&setup).patterns() {
                    let phi = row.feedforward_phase().unwrap();
                    assert!(
                        same_phase(phi, prescribed_phase(&setup.spec, &row.pattern), 1e-9),
                        "{scheme} N={n} {}",
                        row.pattern
                    );
                }
            }
        }
    }

    #[test]
    fn sc_lossless_and_lossy() {
        let m = analyze(&build_sc(2, 1.0).unwrap()).metrics().unwrap();
        assert!((m.p_suc - 0.125).abs() < 1e-12);
        assert!((m.p_hr - 0.125).abs() < 1e-12);
        for row in analyze(&build_sc(2, 1.0).unwrap()).patterns() {
            assert!((row.fidelity().unwrap() - 1.0).abs() < 1e-12);
        }

        let a = analyze(&build_sc(2, 0.9).unwrap());
        let m = a.metrics().unwrap();
        assert!((m.p_suc - 0.0820125).abs() < 1e-12);
        assert!((m.p_hr - 0.11613790125).abs() < 1e-12);
        assert!((m.h_eff - 0.706164818869).abs() < 1e-11);
        for row in a.patterns() {
            // false heralds carry environment photons
            assert!(row.environment_histogram.iter().any(|&(k, p)| k > 0 && p > 0.0));
            assert!((row.fidelity().unwrap() - m.h_eff).abs() < 1e-12);
        }
    }

    #[test]
    fn sd_metrics() {
        let m = analyze(&build_sd(2, 1.0).unwrap()).metrics().unwrap();
        assert!((m.p_suc - 0.125).abs() < 1e-12);
        let a = analyze(&build_sd(2, 1.0).unwrap());
        for row in a.patterns() {
            assert!((row.success - 0.125 / 4.0).abs() < 1e-12);
        }
        let m = analyze(&build_sd(2, 0.9).unwrap()).metrics().unwrap();
        assert!((m.p_suc - 0.05380840125).abs() < 1e-12);
        assert!((m.p_hr - 0.11613790125).abs() < 1e-12);
        assert!((m.h_eff - 0.463314737660).abs() < 1e-11);
    }

    #[test]
    fn sd_hv_readout_halves_success() {
        let hv = build_sd_with(
            2,
            0.9,
            SdOptions {
                detection_basis: DetectionBasis::Hv,
            },
        )
        .unwrap();
        let m = analyze(&hv).metrics().unwrap();
        assert!((m.p_suc - 0.026904200625).abs() < 1e-12);
    }

    #[test]
    fn counted_herald_probability() {
        for scheme in [Scheme::Sc, Scheme::Sd] {
            for n in 2..=3 {
                for eta in [0.9, 0.7, 0.5] {
                    let p = analyze(&build(scheme, n, eta).unwrap()).herald_probability();
                    assert!((p - counted_p_hr(n as i32, eta)).abs() < 1e-12, "{scheme} {n} {eta}");
                }
            }
        }
        let p = analyze(&build_sc(3, 0.9).unwrap()).herald_probability();
        assert!((p - 0.027986330753718758).abs() < 1e-14);
    }

    #[test]
    fn balanced_ghz_components() {
        for scheme in Scheme::ALL {
            for eta in [1.0, 0.7] {
                for row in analyze(&build(scheme, 3, eta).unwrap()).patterns() {
                    assert!(row.is_balanced(1e-10));
                }
            }
        }
    }

    #[test]
    fn completeness_over_detector_patterns() {
        let setup = build_sc(2, 0.8).unwrap();
        let out = setup.evolve().unwrap();
        let reg = out.registry().clone();
        let d: Vec<Mode> = reg.modes_with_role(Role::Detector);
        let mut hist: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (m, a) in out.terms() {
            let key: Vec<u32> = d.iter().map(|&x| m.count(x)).collect();
            *hist.entry(key).or_default() += a.norm_sqr() * m.fock_weight();
        }
        let total: f64 = hist
            .keys()
            .map(|k| {
                let pattern: Vec<(Mode, u32)> = d.iter().copied().zip(k.iter().copied()).collect();
                out.marginal_probability(&pattern)
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn opaque_channel_is_undefined() {
        let a = analyze(&build_sc(2, 0.0).unwrap());
        assert_eq!(a.herald_probability(), 0.0);
        assert_eq!(a.success_probability(), 0.0);
        let err = a.metrics().unwrap_err();
        assert_eq!(err.to_string(), "heralding efficiency undefined at eta=0");
        assert!(a.patterns()[0].feedforward_phase().is_err());
    }

    #[test]
    fn projection_keeps_detector_and_environment_modes() {
        let setup = build_sc(2, 0.9).unwrap();
        let out = setup.evolve().unwrap();
        let pattern = &enumerate_patterns(&setup.spec)[0];
        let proj = pattern_projection(&out, &setup.spec, pattern).unwrap();
        let reg = out.registry();
        let d1h = reg.require("d1", Polarization::H).unwrap();
        assert!(proj.terms().all(|(m, _)| m.count(d1h) == 1));
        assert!(proj.mean_photons_with_role(Role::Environment) > 0.0);
    }

    #[test]
    fn da_frame_conserves_norm() {
        let setup = build_sd(2, 0.7).unwrap();
        let out = setup.evolve().unwrap();
        let framed = detection_frame(&out, &setup.spec).unwrap();
        assert!((framed.norm_squared() - 1.0).abs() < 1e-12);
    }
}
