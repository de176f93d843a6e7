//! Builders for the three distribution schemes.
//!
//! Every builder returns a [`SchemeSetup`]: the initial state, the circuit and
//! a [`SchemeSpec`] describing which modes are detectors, which are kept by
//! the parties, which model loss, and which GHZ pair is the target.
//!
//! Mode labels use a letter for the path and a 1-based party index, e.g.
//! `b1`, `c3`. Station `i ⊕ 1` means the next party around the ring.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{Mode, ModeRegistry, Monomial, PhotonicState, Polarization, Role};
use crate::optics::{Circuit, LinearMap};

/// Default fiber attenuation constant in km⁻¹.
pub const DEFAULT_ALPHA: f64 = 0.023;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Bell-pair sources, central heralding station.
    Bc,
    /// Single-photon sources, central heralding station.
    Sc,
    /// Single-photon sources, heralding distributed over the parties.
    Sd,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Bc, Scheme::Sc, Scheme::Sd];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Bc => "bc",
            Scheme::Sc => "sc",
            Scheme::Sd => "sd",
        }
    }

    /// Path letters used by this scheme, in registration order.
    pub fn path_letters(self) -> &'static [(&'static str, Role)] {
        match self {
            Scheme::Bc => &[
                ("b", Role::Retained),
                ("c", Role::Internal),
                ("f", Role::Environment),
                ("d", Role::Detector),
            ],
            Scheme::Sc => &[
                ("a", Role::Internal),
                ("b", Role::Retained),
                ("c", Role::Internal),
                ("f", Role::Environment),
                ("d", Role::Detector),
            ],
            Scheme::Sd => &[
                ("a", Role::Internal),
                ("b", Role::Internal),
                ("c", Role::Internal),
                ("e", Role::Retained),
                ("d", Role::Detector),
                ("f", Role::Environment),
                ("g", Role::Environment),
            ],
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bc" => Ok(Scheme::Bc),
            "sc" => Ok(Scheme::Sc),
            "sd" => Ok(Scheme::Sd),
            other => Err(Error::InvalidParameter(format!("unknown scheme '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetectionBasis {
    Hv,
    Da,
}

/// Which detector outcome is counted by the feed-forward parity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeedforwardRule {
    /// True for `V` (H/V basis) or `A` (D/A basis) clicks.
    pub count_second: bool,
    /// Adds `N` to the count before taking the parity.
    pub add_parties: bool,
}

impl FeedforwardRule {
    /// Phase in `{0, π}` for the given per-station outcomes, where `true`
    /// marks the second outcome of the basis (`V` or `A`).
    pub fn phase(&self, second: &[bool]) -> f64 {
        let hits = second.iter().filter(|&&s| s == self.count_second).count();
        let total = hits + if self.add_parties { second.len() } else { 0 };
        if total % 2 == 1 {
            PI
        } else {
            0.0
        }
    }
}

/// The two N-fold products whose superposition is the target GHZ state.
#[derive(Clone, Debug)]
pub struct GhzBasis {
    pub s1: PhotonicState,
    pub s2: PhotonicState,
}

#[derive(Clone, Debug)]
pub struct SchemeSpec {
    pub scheme: Scheme,
    pub parties: usize,
    pub eta: f64,
    /// One `(H, V)` detector pair per station. Under D/A detection the `H`
    /// slot reads out `D` and the `V` slot reads out `A`.
    pub detector_stations: Vec<(Mode, Mode)>,
    pub retained_modes: Vec<(Mode, Mode)>,
    pub environment_modes: Vec<Mode>,
    pub detection_basis: DetectionBasis,
    pub ghz: GhzBasis,
    pub feedforward: FeedforwardRule,
    pub photon_budget: u32,
}

impl SchemeSpec {
    pub fn registry(&self) -> &Arc<ModeRegistry> {
        self.ghz.s1.registry()
    }
}

#[derive(Clone, Debug)]
pub struct SchemeSetup {
    pub initial: PhotonicState,
    pub circuit: Circuit,
    pub spec: SchemeSpec,
}

impl SchemeSetup {
    pub fn registry(&self) -> &Arc<ModeRegistry> {
        self.initial.registry()
    }

    pub fn evolve(&self) -> Result<PhotonicState> {
        self.circuit.apply(&self.initial)
    }

    pub fn evolve_capped(&self, cap: usize) -> Result<PhotonicState> {
        self.circuit.apply_capped(&self.initial, cap)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BcOptions {
    /// Retarder on the Bell-pair photon sent by `plate_party`.
    pub phase_plate: bool,
    /// Zero-based party carrying the plate.
    pub plate_party: usize,
}

impl Default for BcOptions {
    fn default() -> Self {
        Self {
            phase_plate: true,
            plate_party: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SdOptions {
    pub detection_basis: DetectionBasis,
}

impl Default for SdOptions {
    fn default() -> Self {
        Self {
            detection_basis: DetectionBasis::Da,
        }
    }
}

pub fn label(letter: &str, party: usize) -> String {
    format!("{letter}{}", party + 1)
}

fn check_args(n: usize, eta: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::TooFewParties(n));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidEta(eta));
    }
    Ok(())
}

/// Registers every mode of `scheme` for `n` parties.
pub fn registry_for(scheme: Scheme, n: usize) -> Result<Arc<ModeRegistry>> {
    if n < 2 {
        return Err(Error::TooFewParties(n));
    }
    let mut reg = ModeRegistry::new();
    for &(letter, role) in scheme.path_letters() {
        for i in 0..n {
            reg.register_pair(&label(letter, i), role)?;
        }
    }
    Ok(Arc::new(reg))
}

fn pairs(reg: &ModeRegistry, letter: &str, n: usize) -> Result<Vec<(Mode, Mode)>> {
    (0..n)
        .map(|i| {
            let l = label(letter, i);
            Ok((reg.require(&l, Polarization::H)?, reg.require(&l, Polarization::V)?))
        })
        .collect()
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `(b_H c_V + b_V c_H)/√2`.
pub fn bell_pair_state(
    registry: &Arc<ModeRegistry>,
    b: (Mode, Mode),
    c: (Mode, Mode),
) -> Result<PhotonicState> {
    PhotonicState::from_terms(
        registry,
        [
            (Monomial::from_modes([b.0, c.1]), re(FRAC_1_SQRT_2)),
            (Monomial::from_modes([b.1, c.0]), re(FRAC_1_SQRT_2)),
        ],
    )
}

/// Product of `n` Bell pairs over modes `b_i`, `c_i` of `registry`.
pub fn bell_initial_state(registry: &Arc<ModeRegistry>, n: usize) -> Result<PhotonicState> {
    if n < 2 {
        return Err(Error::TooFewParties(n));
    }
    let b = pairs(registry, "b", n)?;
    let c = pairs(registry, "c", n)?;
    let mut state = PhotonicState::vacuum(registry);
    for i in 0..n {
        state = state.product(&bell_pair_state(registry, b[i], c[i])?)?;
    }
    Ok(state)
}

/// One H and one V photon in path `letter` of every party.
pub fn single_photon_initial_state(
    registry: &Arc<ModeRegistry>,
    n: usize,
    letter: &str,
) -> Result<PhotonicState> {
    if n < 2 {
        return Err(Error::TooFewParties(n));
    }
    let modes: Vec<Mode> = pairs(registry, letter, n)?
        .into_iter()
        .flat_map(|(h, v)| [h, v])
        .collect();
    PhotonicState::from_creation_product(registry, &modes)
}

/// `Π_i (x_iH + s·x_iV)/√2` with `s = ±1`.
fn diagonal_product(registry: &Arc<ModeRegistry>, modes: &[(Mode, Mode)], sign: f64) -> Result<PhotonicState> {
    let mut state = PhotonicState::vacuum(registry);
    for &(h, v) in modes {
        let factor = PhotonicState::from_terms(
            registry,
            [
                (Monomial::from_modes([h]), re(FRAC_1_SQRT_2)),
                (Monomial::from_modes([v]), re(sign * FRAC_1_SQRT_2)),
            ],
        )?;
        state = state.product(&factor)?;
    }
    Ok(state)
}

fn central_pbs_stage(reg: &Arc<ModeRegistry>, c: &[(Mode, Mode)], d: &[(Mode, Mode)]) -> Result<LinearMap> {
    let n = c.len();
    let parts = (0..n)
        .map(|i| LinearMap::pbs_da(reg, c[i], d[i], d[(i + 1) % n]))
        .collect::<Result<Vec<_>>>()?;
    LinearMap::combine("pbs_da", parts)
}

fn loss_stage(
    reg: &Arc<ModeRegistry>,
    name: &str,
    links: &[((Mode, Mode), (Mode, Mode))],
    eta: f64,
) -> Result<LinearMap> {
    let mut parts = Vec::new();
    for &(input, env) in links {
        parts.push(LinearMap::loss_channel(reg, input.0, env.0, eta)?);
        parts.push(LinearMap::loss_channel(reg, input.1, env.1, eta)?);
    }
    LinearMap::combine(name, parts)
}

fn flatten(pairs: &[(Mode, Mode)]) -> Vec<Mode> {
    pairs.iter().flat_map(|&(h, v)| [h, v]).collect()
}

pub fn build_bc(n: usize, eta: f64) -> Result<SchemeSetup> {
    build_bc_with(n, eta, BcOptions::default())
}

/// Bell-pair scheme. Stages: optional retarder on one `c` path, loss on
/// every `c` path, then the D/A PBS sending D to station `i` and A to
/// station `i ⊕ 1`.
///
/// The retarder imprints `π·(N mod 2)` on the A component, which cancels
/// the `(−1)^N` the A-routed branch collects so that the all-H herald
/// always announces the `+` GHZ state.
pub fn build_bc_with(n: usize, eta: f64, options: BcOptions) -> Result<SchemeSetup> {
    check_args(n, eta)?;
    if options.plate_party >= n {
        return Err(Error::InvalidParameter(format!(
            "plate party {} out of range for {n} parties",
            options.plate_party
        )));
    }
    let reg = registry_for(Scheme::Bc, n)?;
    let b = pairs(&reg, "b", n)?;
    let c = pairs(&reg, "c", n)?;
    let f = pairs(&reg, "f", n)?;
    let d = pairs(&reg, "d", n)?;

    let mut stages = Vec::new();
    if options.phase_plate {
        let theta = PI * (n % 2) as f64;
        stages.push(LinearMap::da_retarder(&reg, c[options.plate_party], theta)?);
    }
    let links: Vec<_> = c.iter().copied().zip(f.iter().copied()).collect();
    stages.push(loss_stage(&reg, "loss", &links, eta)?);
    stages.push(central_pbs_stage(&reg, &c, &d)?);

    let spec = SchemeSpec {
        scheme: Scheme::Bc,
        parties: n,
        eta,
        detector_stations: d,
        environment_modes: flatten(&f),
        detection_basis: DetectionBasis::Hv,
        ghz: GhzBasis {
            s1: diagonal_product(&reg, &b, 1.0)?,
            s2: diagonal_product(&reg, &b, -1.0)?,
        },
        retained_modes: b,
        feedforward: FeedforwardRule {
            count_second: true,
            add_parties: !options.phase_plate && n % 2 == 1,
        },
        photon_budget: 2 * n as u32,
    };
    Ok(SchemeSetup {
        initial: bell_initial_state(&reg, n)?,
        circuit: Circuit::new(stages)?,
        spec,
    })
}

/// Single-photon scheme with central heralding. Stages: 50:50 split of each
/// source photon into a kept path `b` and a sent path `c`, loss on `c`, then
/// the same D/A PBS wiring as the Bell-pair scheme.
pub fn build_sc(n: usize, eta: f64) -> Result<SchemeSetup> {
    check_args(n, eta)?;
    let reg = registry_for(Scheme::Sc, n)?;
    let a = pairs(&reg, "a", n)?;
    let b = pairs(&reg, "b", n)?;
    let c = pairs(&reg, "c", n)?;
    let f = pairs(&reg, "f", n)?;
    let d = pairs(&reg, "d", n)?;

    let mut split = Vec::new();
    for i in 0..n {
        split.push(LinearMap::bs_5050(&reg, a[i].0, b[i].0, c[i].0)?);
        split.push(LinearMap::bs_5050(&reg, a[i].1, b[i].1, c[i].1)?);
    }
    let links: Vec<_> = c.iter().copied().zip(f.iter().copied()).collect();
    let stages = vec![
        LinearMap::combine("bs", split)?,
        loss_stage(&reg, "loss", &links, eta)?,
        central_pbs_stage(&reg, &c, &d)?,
    ];

    let spec = SchemeSpec {
        scheme: Scheme::Sc,
        parties: n,
        eta,
        detector_stations: d,
        environment_modes: flatten(&f),
        detection_basis: DetectionBasis::Hv,
        ghz: GhzBasis {
            s1: diagonal_product(&reg, &b, 1.0)?,
            s2: diagonal_product(&reg, &b, -1.0)?,
        },
        retained_modes: b,
        feedforward: FeedforwardRule {
            count_second: true,
            add_parties: n % 2 == 1,
        },
        photon_budget: 2 * n as u32,
    };
    Ok(SchemeSetup {
        initial: single_photon_initial_state(&reg, n, "a")?,
        circuit: Circuit::new(stages)?,
        spec,
    })
}

pub fn build_sd(n: usize, eta: f64) -> Result<SchemeSetup> {
    build_sd_with(n, eta, SdOptions::default())
}

/// Single-photon scheme with distributed heralding. Stages: D/A PBS at each
/// source (D to `b`, A to `c`), loss on `b` and `c`, the ring wiring
/// `c_i → c_{i⊕1}`, then an H/V PBS joining `b_i` and `c_i` into the kept
/// path `e_i` and the local detector `d_i`.
pub fn build_sd_with(n: usize, eta: f64, options: SdOptions) -> Result<SchemeSetup> {
    check_args(n, eta)?;
    let reg = registry_for(Scheme::Sd, n)?;
    let a = pairs(&reg, "a", n)?;
    let b = pairs(&reg, "b", n)?;
    let c = pairs(&reg, "c", n)?;
    let e = pairs(&reg, "e", n)?;
    let d = pairs(&reg, "d", n)?;
    let f = pairs(&reg, "f", n)?;
    let g = pairs(&reg, "g", n)?;

    let source = (0..n)
        .map(|i| LinearMap::pbs_da(&reg, a[i], b[i], c[i]))
        .collect::<Result<Vec<_>>>()?;
    let mut links: Vec<_> = b.iter().copied().zip(f.iter().copied()).collect();
    links.extend(c.iter().copied().zip(g.iter().copied()));
    let wiring: Vec<(String, String)> = (0..n)
        .map(|i| (label("c", i), label("c", (i + 1) % n)))
        .collect();
    let join = (0..n)
        .map(|i| LinearMap::pbs_hv(&reg, b[i], c[i], e[i], d[i]))
        .collect::<Result<Vec<_>>>()?;
    let stages = vec![
        LinearMap::combine("pbs_da", source)?,
        loss_stage(&reg, "loss", &links, eta)?,
        LinearMap::rewire(&reg, &wiring)?,
        LinearMap::combine("pbs_hv", join)?,
    ];

    let product = |modes: Vec<Mode>| PhotonicState::from_creation_product(&reg, &modes);
    let mut environment = flatten(&f);
    environment.extend(flatten(&g));
    let spec = SchemeSpec {
        scheme: Scheme::Sd,
        parties: n,
        eta,
        detector_stations: d,
        environment_modes: environment,
        detection_basis: options.detection_basis,
        ghz: GhzBasis {
            s1: product(e.iter().map(|p| p.0).collect())?,
            s2: product(e.iter().map(|p| p.1).collect())?,
        },
        retained_modes: e,
        feedforward: FeedforwardRule {
            count_second: true,
            add_parties: false,
        },
        photon_budget: 2 * n as u32,
    };
    Ok(SchemeSetup {
        initial: single_photon_initial_state(&reg, n, "a")?,
        circuit: Circuit::new(stages)?,
        spec,
    })
}

pub fn build(scheme: Scheme, n: usize, eta: f64) -> Result<SchemeSetup> {
    match scheme {
        Scheme::Bc => build_bc(n, eta),
        Scheme::Sc => build_sc(n, eta),
        Scheme::Sd => build_sd(n, eta),
    }
}

/// Relabels every path of `scheme` from party `i` to party `i + shift (mod n)`.
pub fn cyclic_relabeling(
    scheme: Scheme,
    registry: &Arc<ModeRegistry>,
    n: usize,
    shift: usize,
) -> Result<LinearMap> {
    let mut wiring = Vec::new();
    for &(letter, _) in scheme.path_letters() {
        for i in 0..n {
            wiring.push((label(letter, i), label(letter, (i + shift) % n)));
        }
    }
    // rewire demands a bijection per call; paths never mix, so one map is fine
    LinearMap::rewire(registry, &wiring)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkGeometry {
    pub parties: usize,
    pub radius_km: f64,
    pub alpha: f64,
}

impl NetworkGeometry {
    pub fn new(parties: usize, radius_km: f64, alpha: f64) -> Result<Self> {
        if parties < 2 {
            return Err(Error::TooFewParties(parties));
        }
        if !(radius_km >= 0.0) || !radius_km.is_finite() {
            return Err(Error::InvalidParameter(format!("radius must be >= 0, got {radius_km}")));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
        }
        Ok(Self {
            parties,
            radius_km,
            alpha,
        })
    }
}

/// Fiber length per link: the radius for central schemes, the chord between
/// neighbouring parties for the distributed scheme.
pub fn channel_length(scheme: Scheme, geometry: &NetworkGeometry) -> f64 {
    match scheme {
        Scheme::Bc | Scheme::Sc => geometry.radius_km,
        Scheme::Sd => 2.0 * geometry.radius_km * (PI / geometry.parties as f64).sin(),
    }
}

pub fn eta_for_geometry(scheme: Scheme, geometry: &NetworkGeometry) -> f64 {
    crate::analytic::eta_of_length(geometry.alpha, channel_length(scheme, geometry))
}
