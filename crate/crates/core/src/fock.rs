//! Multi-photon states as sparse polynomials in creation operators.
//!
//! A [`PhotonicState`] is a finite sum `Σ a_m · m |vac⟩` where every `m` is a
//! [`Monomial`], a product of creation operators over modes of a
//! [`ModeRegistry`]. Monomials are *unnormalized* Fock vectors: the squared
//! norm of `(a†)^k |vac⟩` is `k!`, which is what [`PhotonicState::norm_squared`]
//! and [`PhotonicState::inner_product`] account for.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Amplitudes below this magnitude are dropped.
pub const PRUNE_TOL: f64 = 1e-14;

/// Tolerance for comparing probabilities.
pub const PROB_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::H, Polarization::V];
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarization::H => f.write_str("H"),
            Polarization::V => f.write_str("V"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    /// Kept by a party; carries the distributed state.
    Retained,
    /// Measured by a photon-number resolving detector.
    Detector,
    /// Purification mode absorbing the photons a loss element removes.
    Environment,
    /// Intermediate path mode.
    Internal,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Role::Retained => "retained",
            Role::Detector => "detector",
            Role::Environment => "environment",
            Role::Internal => "internal",
        };
        f.write_str(s)
    }
}

/// Handle of a registered mode. Handles are dense indices in registration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mode(u16);

impl Mode {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeInfo {
    pub label: String,
    pub polarization: Polarization,
    pub role: Role,
}

/// The set of modes a state or a linear map is expressed over.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ModeRegistry {
    modes: Vec<ModeInfo>,
    by_key: HashMap<(String, Polarization), Mode>,
}

impl ModeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `(label, polarization)` with a fixed role.
    pub fn register(
        &mut self,
        label: impl Into<String>,
        polarization: Polarization,
        role: Role,
    ) -> Result<Mode> {
        let label = label.into();
        let key = (label.clone(), polarization);
        if self.by_key.contains_key(&key) {
            return Err(Error::DuplicateMode {
                label,
                polarization,
            });
        }
        let id = u16::try_from(self.modes.len())
            .map_err(|_| Error::InvalidParameter("mode registry is full".into()))?;
        let mode = Mode(id);
        self.modes.push(ModeInfo {
            label,
            polarization,
            role,
        });
        self.by_key.insert(key, mode);
        Ok(mode)
    }

    /// Registers both polarizations of a spatial label, returning `(H, V)`.
    pub fn register_pair(&mut self, label: &str, role: Role) -> Result<(Mode, Mode)> {
        let h = self.register(label, Polarization::H, role)?;
        let v = self.register(label, Polarization::V, role)?;
        Ok((h, v))
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn contains(&self, mode: Mode) -> bool {
        mode.index() < self.modes.len()
    }

    pub fn info(&self, mode: Mode) -> Result<&ModeInfo> {
        self.modes
            .get(mode.index())
            .ok_or(Error::UnknownMode(mode.index()))
    }

    pub fn lookup(&self, label: &str, polarization: Polarization) -> Option<Mode> {
        self.by_key.get(&(label.to_string(), polarization)).copied()
    }

    pub fn require(&self, label: &str, polarization: Polarization) -> Result<Mode> {
        self.lookup(label, polarization)
            .ok_or_else(|| Error::UnknownLabel {
                label: label.to_string(),
                polarization,
            })
    }

    pub fn role(&self, mode: Mode) -> Result<Role> {
        self.info(mode).map(|i| i.role)
    }

    /// Human-readable name such as `b1H`.
    pub fn name(&self, mode: Mode) -> String {
        match self.info(mode) {
            Ok(info) => format!("{}{}", info.label, info.polarization),
            Err(_) => format!("#{}", mode.index()),
        }
    }

    pub fn modes(&self) -> impl Iterator<Item = (Mode, &ModeInfo)> {
        self.modes
            .iter()
            .enumerate()
            .map(|(i, info)| (Mode(i as u16), info))
    }

    pub fn modes_with_role(&self, role: Role) -> Vec<Mode> {
        self.modes()
            .filter(|(_, info)| info.role == role)
            .map(|(m, _)| m)
            .collect()
    }
}

/// A product of creation operators, stored as the sorted multiset of modes.
///
/// `a†_x a†_x a†_y` is `[x, x, y]`; the vacuum is the empty list. Sorting makes
/// the representation canonical, so like terms merge by key equality.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(SmallVec<[Mode; 12]>);

impl Monomial {
    pub fn vacuum() -> Self {
        Self::default()
    }

    pub fn from_modes(modes: impl IntoIterator<Item = Mode>) -> Self {
        let mut v: SmallVec<[Mode; 12]> = modes.into_iter().collect();
        v.sort_unstable();
        Monomial(v)
    }

    pub fn from_occupations(occupations: impl IntoIterator<Item = (Mode, u32)>) -> Self {
        Self::from_modes(
            occupations
                .into_iter()
                .flat_map(|(m, k)| std::iter::repeat_n(m, k as usize)),
        )
    }

    pub fn photon_number(&self) -> u32 {
        self.0.len() as u32
    }

    pub fn is_vacuum(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count(&self, mode: Mode) -> u32 {
        let start = self.0.partition_point(|&m| m < mode);
        let end = self.0.partition_point(|&m| m <= mode);
        (end - start) as u32
    }

    /// `(mode, occupation)` pairs in mode order; zero occupations never appear.
    pub fn occupations(&self) -> Occupations<'_> {
        Occupations {
            modes: &self.0,
            pos: 0,
        }
    }

    /// Product of `occupation!` over all modes.
    pub fn fock_weight(&self) -> f64 {
        self.occupations()
            .map(|(_, k)| factorial(k))
            .product()
    }

    /// The monomial multiplied by one more `a†_mode`.
    pub fn created(&self, mode: Mode) -> Monomial {
        let mut v = self.0.clone();
        let at = v.partition_point(|&m| m <= mode);
        v.insert(at, mode);
        Monomial(v)
    }

    pub fn times(&self, other: &Monomial) -> Monomial {
        let mut v: SmallVec<[Mode; 12]> = SmallVec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            if self.0[i] <= other.0[j] {
                v.push(self.0[i]);
                i += 1;
            } else {
                v.push(other.0[j]);
                j += 1;
            }
        }
        v.extend_from_slice(&self.0[i..]);
        v.extend_from_slice(&other.0[j..]);
        Monomial(v)
    }

    /// Drops every factor whose mode satisfies `pred`.
    pub fn without(&self, mut pred: impl FnMut(Mode) -> bool) -> Monomial {
        Monomial(self.0.iter().copied().filter(|&m| !pred(m)).collect())
    }

    pub fn modes(&self) -> impl Iterator<Item = Mode> + '_ {
        self.0.iter().copied()
    }

    pub fn describe(&self, registry: &ModeRegistry) -> String {
        if self.is_vacuum() {
            return "vac".into();
        }
        self.occupations()
            .map(|(m, k)| {
                if k == 1 {
                    registry.name(m)
                } else {
                    format!("{}^{}", registry.name(m), k)
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

pub struct Occupations<'a> {
    modes: &'a [Mode],
    pos: usize,
}

impl Iterator for Occupations<'_> {
    type Item = (Mode, u32);

    fn next(&mut self) -> Option<Self::Item> {
        let mode = *self.modes.get(self.pos)?;
        let start = self.pos;
        while self.pos < self.modes.len() && self.modes[self.pos] == mode {
            self.pos += 1;
        }
        Some((mode, (self.pos - start) as u32))
    }
}

pub fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// A pure state of light: complex amplitudes on creation-operator monomials.
#[derive(Clone, Debug)]
pub struct PhotonicState {
    registry: Arc<ModeRegistry>,
    terms: BTreeMap<Monomial, Complex64>,
}

impl PhotonicState {
    pub fn vacuum(registry: &Arc<ModeRegistry>) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Monomial::vacuum(), Complex64::new(1.0, 0.0));
        Self {
            registry: Arc::clone(registry),
            terms,
        }
    }

    /// The zero vector (not the vacuum).
    pub fn zero(registry: &Arc<ModeRegistry>) -> Self {
        Self {
            registry: Arc::clone(registry),
            terms: BTreeMap::new(),
        }
    }

    /// `∏ a†_m |vac⟩` over the listed modes, repeated modes meaning multiple photons.
    pub fn from_creation_product(registry: &Arc<ModeRegistry>, modes: &[Mode]) -> Result<Self> {
        for &m in modes {
            registry.info(m)?;
        }
        let mut terms = BTreeMap::new();
        terms.insert(
            Monomial::from_modes(modes.iter().copied()),
            Complex64::new(1.0, 0.0),
        );
        Ok(Self {
            registry: Arc::clone(registry),
            terms,
        })
    }

    /// Builds a state from raw terms, merging duplicates and pruning.
    pub fn from_terms(
        registry: &Arc<ModeRegistry>,
        terms: impl IntoIterator<Item = (Monomial, Complex64)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<Monomial, Complex64> = BTreeMap::new();
        for (mono, amp) in terms {
            for m in mono.modes() {
                registry.info(m)?;
            }
            *map.entry(mono).or_default() += amp;
        }
        Ok(Self::from_map(registry, map))
    }

    pub(crate) fn from_map(
        registry: &Arc<ModeRegistry>,
        mut terms: BTreeMap<Monomial, Complex64>,
    ) -> Self {
        terms.retain(|_, a| a.norm() >= PRUNE_TOL);
        Self {
            registry: Arc::clone(registry),
            terms,
        }
    }

    pub fn registry(&self) -> &Arc<ModeRegistry> {
        &self.registry
    }

    pub fn same_registry(&self, other: &PhotonicState) -> bool {
        Arc::ptr_eq(&self.registry, &other.registry) || *self.registry == *other.registry
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Same as [`is_zero`](Self::is_zero): a state with no terms.
    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn amplitude(&self, monomial: &Monomial) -> Complex64 {
        self.terms.get(monomial).copied().unwrap_or_default()
    }

    /// `Σ |a_m|² · Π occupation!`.
    pub fn norm_squared(&self) -> f64 {
        self.terms
            .iter()
            .map(|(m, a)| a.norm_sqr() * m.fock_weight())
            .sum()
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    pub fn inner_product(&self, other: &PhotonicState) -> Result<Complex64> {
        if !self.same_registry(other) {
            return Err(Error::RegistryMismatch);
        }
        let (small, large, conj_small) = if self.terms.len() <= other.terms.len() {
            (&self.terms, &other.terms, true)
        } else {
            (&other.terms, &self.terms, false)
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (mono, a) in small {
            if let Some(b) = large.get(mono) {
                let w = mono.fock_weight();
                acc += if conj_small {
                    a.conj() * b * w
                } else {
                    b.conj() * a * w
                };
            }
        }
        Ok(acc)
    }

    pub fn scaled(&self, factor: Complex64) -> PhotonicState {
        let terms = self
            .terms
            .iter()
            .map(|(m, a)| (m.clone(), a * factor))
            .collect();
        Self::from_map(&self.registry, terms)
    }

    pub fn add(&self, other: &PhotonicState) -> Result<PhotonicState> {
        if !self.same_registry(other) {
            return Err(Error::RegistryMismatch);
        }
        let mut terms = self.terms.clone();
        for (m, a) in &other.terms {
            *terms.entry(m.clone()).or_default() += a;
        }
        Ok(Self::from_map(&self.registry, terms))
    }

    /// Operator product of the two polynomials (tensor product for disjoint modes).
    pub fn product(&self, other: &PhotonicState) -> Result<PhotonicState> {
        if !self.same_registry(other) {
            return Err(Error::RegistryMismatch);
        }
        let mut terms: BTreeMap<Monomial, Complex64> = BTreeMap::new();
        for (m1, a1) in &self.terms {
            for (m2, a2) in &other.terms {
                *terms.entry(m1.times(m2)).or_default() += a1 * a2;
            }
        }
        Ok(Self::from_map(&self.registry, terms))
    }

    /// Terms whose occupation on the measured modes equals `pattern`, amplitudes
    /// unchanged. Modes not listed are unconstrained.
    pub fn project_pattern(&self, pattern: &[(Mode, u32)]) -> PhotonicState {
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| pattern.iter().all(|&(mode, k)| m.count(mode) == k))
            .map(|(m, a)| (m.clone(), *a))
            .collect();
        Self::from_map(&self.registry, terms)
    }

    /// Probability of observing `pattern` on the listed modes, all other modes
    /// summed over. Assumes `self` is normalized.
    pub fn marginal_probability(&self, pattern: &[(Mode, u32)]) -> f64 {
        self.terms
            .iter()
            .filter(|(m, _)| pattern.iter().all(|&(mode, k)| m.count(mode) == k))
            .map(|(m, a)| a.norm_sqr() * m.fock_weight())
            .sum()
    }

    /// Projects onto `pattern` and removes the measured modes, rescaling by
    /// `√(Π k!)` so the conditional keeps the projected norm.
    pub fn condition_on(&self, pattern: &[(Mode, u32)]) -> PhotonicState {
        let scale: f64 = pattern.iter().map(|&(_, k)| factorial(k)).product::<f64>().sqrt();
        let mut terms: BTreeMap<Monomial, Complex64> = BTreeMap::new();
        for (m, a) in &self.terms {
            if pattern.iter().all(|&(mode, k)| m.count(mode) == k) {
                let reduced = m.without(|mode| pattern.iter().any(|&(p, _)| p == mode));
                *terms.entry(reduced).or_default() += a * scale;
            }
        }
        Self::from_map(&self.registry, terms)
    }

    /// Distinct total photon numbers present.
    pub fn photon_numbers(&self) -> Vec<u32> {
        let mut n: Vec<u32> = self.terms.keys().map(Monomial::photon_number).collect();
        n.sort_unstable();
        n.dedup();
        n
    }

    /// Total photon weight `Σ |a|² w · count` sitting in modes of the given role.
    pub fn mean_photons_with_role(&self, role: Role) -> f64 {
        self.terms
            .iter()
            .map(|(m, a)| {
                let k: u32 = m
                    .occupations()
                    .filter(|&(mode, _)| self.registry.role(mode) == Ok(role))
                    .map(|(_, k)| k)
                    .sum();
                a.norm_sqr() * m.fock_weight() * f64::from(k)
            })
            .sum()
    }
}

impl fmt::Display for PhotonicState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, a)| format!("({:.6}{:+.6}i)·{}", a.re, a.im, m.describe(&self.registry)))
            .collect();
        f.write_str(&parts.join(" + "))
    }
}
