//! Linear optical elements as substitutions on creation operators.
//!
//! A [`LinearMap`] replaces each mapped `a†_x` by `Σ_o c_xo a†_o`; modes without
//! a column pass through unchanged. Applying a map to a [`PhotonicState`]
//! expands every monomial and merges like terms. The substitution is
//! simultaneous, so a map may reuse its input modes as outputs (rewiring,
//! in-place basis rotations).
//!
//! Loss is an isometry into a dedicated environment mode, so photons are
//! relocated rather than destroyed and total photon number is conserved.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{Mode, ModeRegistry, Monomial, PhotonicState, Polarization, Role};

/// Terms expanded per parallel work unit. Fixed so that the summation order,
/// and therefore every amplitude bit, is independent of the worker count.
const EXPAND_CHUNK: usize = 1024;

/// Default tolerance for [`LinearMap::is_isometry`].
pub const ISOMETRY_TOL: f64 = 1e-12;

type Column = Vec<(Mode, Complex64)>;

#[derive(Clone, Debug)]
pub struct LinearMap {
    registry: Arc<ModeRegistry>,
    name: String,
    columns: BTreeMap<Mode, Column>,
    /// Environment modes owned by loss elements inside this map.
    loss_environments: BTreeSet<Mode>,
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

impl LinearMap {
    pub fn identity(registry: &Arc<ModeRegistry>) -> Self {
        Self {
            registry: Arc::clone(registry),
            name: "identity".into(),
            columns: BTreeMap::new(),
            loss_environments: BTreeSet::new(),
        }
    }

    /// A map from explicit columns. Zero coefficients are dropped.
    pub fn from_columns(
        registry: &Arc<ModeRegistry>,
        name: impl Into<String>,
        columns: impl IntoIterator<Item = (Mode, Column)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (input, column) in columns {
            registry.info(input)?;
            let mut merged: BTreeMap<Mode, Complex64> = BTreeMap::new();
            for (out, c) in column {
                registry.info(out)?;
                *merged.entry(out).or_default() += c;
            }
            let column: Column = merged.into_iter().filter(|(_, c)| *c != re(0.0)).collect();
            if map.insert(input, column).is_some() {
                return Err(Error::DuplicateInput(registry.name(input)));
            }
        }
        Ok(Self {
            registry: Arc::clone(registry),
            name: name.into(),
            columns: map,
            loss_environments: BTreeSet::new(),
        })
    }

    /// `a†_in → η a†_in + √(1−η²) a†_env`.
    pub fn loss_channel(
        registry: &Arc<ModeRegistry>,
        input: Mode,
        environment: Mode,
        eta: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidEta(eta));
        }
        expect_role(registry, environment, Role::Environment)?;
        if input == environment {
            return Err(Error::EnvironmentReuse(registry.name(environment)));
        }
        let leak = (1.0 - eta * eta).sqrt();
        let mut map = Self::from_columns(
            registry,
            format!("loss({})", registry.name(input)),
            [(input, vec![(input, re(eta)), (environment, re(leak))])],
        )?;
        map.loss_environments.insert(environment);
        Ok(map)
    }

    /// Single-port 50:50 beam splitter, `a† → (b† + c†)/√2`.
    pub fn bs_5050(registry: &Arc<ModeRegistry>, input: Mode, out1: Mode, out2: Mode) -> Result<Self> {
        let p = registry.info(input)?.polarization;
        for m in [out1, out2] {
            if registry.info(m)?.polarization != p {
                return Err(Error::PolarizationMismatch(format!(
                    "{} feeds {}",
                    registry.name(input),
                    registry.name(m)
                )));
            }
        }
        Self::from_columns(
            registry,
            format!("bs({})", registry.name(input)),
            [(input, vec![(out1, re(FRAC_1_SQRT_2)), (out2, re(FRAC_1_SQRT_2))])],
        )
    }

    /// Diagonal/anti-diagonal polarizing beam splitter.
    ///
    /// `in_H → (D_d + A_a)/√2`, `in_V → (D_d − A_a)/√2`, where `D_d` is the
    /// diagonal polarization of the `d_side` spatial mode and `A_a` the
    /// anti-diagonal polarization of the `a_side` mode, both written in the
    /// H/V basis.
    pub fn pbs_da(
        registry: &Arc<ModeRegistry>,
        input: (Mode, Mode),
        d_side: (Mode, Mode),
        a_side: (Mode, Mode),
    ) -> Result<Self> {
        for pair in [input, d_side, a_side] {
            check_pair(registry, pair)?;
        }
        let h = 0.5;
        let col_h = vec![
            (d_side.0, re(h)),
            (d_side.1, re(h)),
            (a_side.0, re(h)),
            (a_side.1, re(-h)),
        ];
        let col_v = vec![
            (d_side.0, re(h)),
            (d_side.1, re(h)),
            (a_side.0, re(-h)),
            (a_side.1, re(h)),
        ];
        let label = &registry.info(input.0)?.label;
        Self::from_columns(
            registry,
            format!("pbs_da({label})"),
            [(input.0, col_h), (input.1, col_v)],
        )
    }

    /// H/V polarizing beam splitter joining two input paths.
    ///
    /// `b_H → e_H`, `b_V → d_V`, `c_H → d_H`, `c_V → e_V`.
    pub fn pbs_hv(
        registry: &Arc<ModeRegistry>,
        in_b: (Mode, Mode),
        in_c: (Mode, Mode),
        out_e: (Mode, Mode),
        out_d: (Mode, Mode),
    ) -> Result<Self> {
        for pair in [in_b, in_c, out_e, out_d] {
            check_pair(registry, pair)?;
        }
        let one = re(1.0);
        let label = &registry.info(in_b.0)?.label;
        Self::from_columns(
            registry,
            format!("pbs_hv({label})"),
            [
                (in_b.0, vec![(out_e.0, one)]),
                (in_b.1, vec![(out_d.1, one)]),
                (in_c.0, vec![(out_d.0, one)]),
                (in_c.1, vec![(out_e.1, one)]),
            ],
        )
    }

    /// `a† → e^{iφ} a†` on a single mode.
    pub fn phase_plate(registry: &Arc<ModeRegistry>, mode: Mode, phase: f64) -> Result<Self> {
        Self::from_columns(
            registry,
            format!("phase({})", registry.name(mode)),
            [(mode, vec![(mode, Complex64::from_polar(1.0, phase))])],
        )
    }

    /// Retarder diagonal in the D/A basis: `D → D`, `A → e^{iφ} A`.
    ///
    /// In the H/V basis this is `H → ((1+e)H + (1−e)V)/2`,
    /// `V → ((1−e)H + (1+e)V)/2` with `e = e^{iφ}`.
    pub fn da_retarder(registry: &Arc<ModeRegistry>, pair: (Mode, Mode), phase: f64) -> Result<Self> {
        check_pair(registry, pair)?;
        let e = Complex64::from_polar(1.0, phase);
        let plus = (re(1.0) + e) * 0.5;
        let minus = (re(1.0) - e) * 0.5;
        let label = &registry.info(pair.0)?.label;
        Self::from_columns(
            registry,
            format!("retarder({label})"),
            [
                (pair.0, vec![(pair.0, plus), (pair.1, minus)]),
                (pair.1, vec![(pair.0, minus), (pair.1, plus)]),
            ],
        )
    }

    /// In-place change of a station's readout basis, H/V to D/A:
    /// `H → (H + V)/√2`, `V → (H − V)/√2`. Afterwards the `H` slot counts
    /// diagonal photons and the `V` slot anti-diagonal ones.
    pub fn hv_to_da(registry: &Arc<ModeRegistry>, pair: (Mode, Mode)) -> Result<Self> {
        check_pair(registry, pair)?;
        let h = re(FRAC_1_SQRT_2);
        let label = &registry.info(pair.0)?.label;
        Self::from_columns(
            registry,
            format!("readout_da({label})"),
            [
                (pair.0, vec![(pair.0, h), (pair.1, h)]),
                (pair.1, vec![(pair.0, h), (pair.1, -h)]),
            ],
        )
    }

    /// Relabels spatial modes (both polarizations) with unit coefficients.
    ///
    /// `wiring` lists `(from, to)` label pairs and must be a bijection of a
    /// label set onto itself.
    pub fn rewire(registry: &Arc<ModeRegistry>, wiring: &[(String, String)]) -> Result<Self> {
        let from: BTreeSet<&str> = wiring.iter().map(|(f, _)| f.as_str()).collect();
        let to: BTreeSet<&str> = wiring.iter().map(|(_, t)| t.as_str()).collect();
        if from.len() != wiring.len() || to.len() != wiring.len() || from != to {
            return Err(Error::NotBijective(
                wiring
                    .iter()
                    .map(|(f, t)| format!("{f}->{t}"))
                    .collect::<Vec<_>>()
                    .join(", "),
            ));
        }
        let mut columns = Vec::new();
        for (f, t) in wiring {
            for p in Polarization::BOTH {
                let src = registry.require(f, p)?;
                let dst = registry.require(t, p)?;
                columns.push((src, vec![(dst, re(1.0))]));
            }
        }
        Self::from_columns(registry, "rewire", columns)
    }

    /// Side-by-side composition of elements acting on disjoint inputs.
    pub fn combine(name: impl Into<String>, parts: Vec<LinearMap>) -> Result<Self> {
        let mut iter = parts.into_iter();
        let mut acc = match iter.next() {
            Some(first) => first,
            None => return Err(Error::InvalidParameter("empty stage".into())),
        };
        acc.name = name.into();
        for part in iter {
            if !Arc::ptr_eq(&acc.registry, &part.registry) && *acc.registry != *part.registry {
                return Err(Error::RegistryMismatch);
            }
            for (input, column) in part.columns {
                if acc.columns.insert(input, column).is_some() {
                    return Err(Error::DuplicateInput(acc.registry.name(input)));
                }
            }
            for env in part.loss_environments {
                if !acc.loss_environments.insert(env) {
                    return Err(Error::EnvironmentReuse(acc.registry.name(env)));
                }
            }
        }
        Ok(acc)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn registry(&self) -> &Arc<ModeRegistry> {
        &self.registry
    }

    pub fn column(&self, mode: Mode) -> Option<&[(Mode, Complex64)]> {
        self.columns.get(&mode).map(Vec::as_slice)
    }

    pub fn inputs(&self) -> impl Iterator<Item = Mode> + '_ {
        self.columns.keys().copied()
    }

    pub fn loss_environments(&self) -> &BTreeSet<Mode> {
        &self.loss_environments
    }

    /// True iff the Gram matrix of the explicit columns is the identity within `tol`.
    pub fn is_isometry(&self, tol: f64) -> bool {
        let cols: Vec<BTreeMap<Mode, Complex64>> = self
            .columns
            .values()
            .map(|c| c.iter().copied().collect())
            .collect();
        for (i, x) in cols.iter().enumerate() {
            for y in &cols[i..] {
                let g: Complex64 = x
                    .iter()
                    .filter_map(|(m, cx)| y.get(m).map(|cy| cx.conj() * cy))
                    .sum();
                let target = if std::ptr::eq(x, y) { 1.0 } else { 0.0 };
                if (g - re(target)).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn apply(&self, state: &PhotonicState) -> Result<PhotonicState> {
        self.apply_capped(state, usize::MAX)
    }

    /// Like [`apply`](Self::apply) but fails once the result exceeds `cap` terms.
    pub fn apply_capped(&self, state: &PhotonicState, cap: usize) -> Result<PhotonicState> {
        if !Arc::ptr_eq(&self.registry, state.registry()) && *self.registry != **state.registry() {
            return Err(Error::RegistryMismatch);
        }
        let outputs: HashSet<Mode> = self
            .columns
            .values()
            .flat_map(|c| c.iter().map(|&(m, _)| m))
            .filter(|m| !self.columns.contains_key(m))
            .collect();

        let terms: Vec<(&Monomial, &Complex64)> = state.terms().collect();
        let partials: Vec<Result<BTreeMap<Monomial, Complex64>>> = terms
            .par_chunks(EXPAND_CHUNK)
            .map(|chunk| {
                let mut acc: BTreeMap<Monomial, Complex64> = BTreeMap::new();
                for &(mono, amp) in chunk {
                    self.expand_into(mono, *amp, &outputs, &mut acc)?;
                }
                Ok(acc)
            })
            .collect();

        let mut merged: BTreeMap<Monomial, Complex64> = BTreeMap::new();
        for partial in partials {
            for (m, a) in partial? {
                *merged.entry(m).or_default() += a;
            }
            if merged.len() > cap {
                return Err(Error::TermCapExceeded { cap });
            }
        }
        Ok(PhotonicState::from_map(&self.registry, merged))
    }

    fn expand_into(
        &self,
        mono: &Monomial,
        amp: Complex64,
        outputs: &HashSet<Mode>,
        acc: &mut BTreeMap<Monomial, Complex64>,
    ) -> Result<()> {
        let mut fixed = Monomial::vacuum();
        let mut partial: Vec<(Monomial, Complex64)> = vec![(Monomial::vacuum(), amp)];
        for (mode, k) in mono.occupations() {
            match self.columns.get(&mode) {
                None => {
                    if outputs.contains(&mode) {
                        return Err(Error::OutputCollision(self.registry.name(mode)));
                    }
                    for _ in 0..k {
                        fixed = fixed.created(mode);
                    }
                }
                Some(column) => {
                    for _ in 0..k {
                        let mut next: BTreeMap<Monomial, Complex64> = BTreeMap::new();
                        for (m, a) in &partial {
                            for &(out, c) in column {
                                *next.entry(m.created(out)).or_default() += a * c;
                            }
                        }
                        partial = next.into_iter().collect();
                    }
                }
            }
        }
        for (m, a) in partial {
            *acc.entry(m.times(&fixed)).or_default() += a;
        }
        Ok(())
    }
}

fn expect_role(registry: &ModeRegistry, mode: Mode, role: Role) -> Result<()> {
    let actual = registry.role(mode)?;
    if actual != role {
        return Err(Error::WrongRole {
            mode: registry.name(mode),
            actual: actual.to_string(),
            expected: role.to_string(),
        });
    }
    Ok(())
}

fn check_pair(registry: &ModeRegistry, (h, v): (Mode, Mode)) -> Result<()> {
    let hi = registry.info(h)?;
    let vi = registry.info(v)?;
    if hi.polarization != Polarization::H || vi.polarization != Polarization::V || hi.label != vi.label {
        return Err(Error::IncompletePair(format!(
            "({}, {})",
            registry.name(h),
            registry.name(v)
        )));
    }
    Ok(())
}

/// An ordered sequence of stages.
#[derive(Clone, Debug)]
pub struct Circuit {
    stages: Vec<LinearMap>,
}

impl Circuit {
    /// Validates that all stages share a registry and that no environment mode
    /// is fed by more than one loss element.
    pub fn new(stages: Vec<LinearMap>) -> Result<Self> {
        let mut envs = BTreeSet::new();
        for (i, stage) in stages.iter().enumerate() {
            if i > 0 {
                let r0 = stages[0].registry();
                if !Arc::ptr_eq(r0, stage.registry()) && **r0 != **stage.registry() {
                    return Err(Error::RegistryMismatch);
                }
            }
            for &env in stage.loss_environments() {
                if !envs.insert(env) {
                    return Err(Error::EnvironmentReuse(stage.registry().name(env)));
                }
            }
        }
        Ok(Self { stages })
    }

    pub fn stages(&self) -> &[LinearMap] {
        &self.stages
    }

    pub fn apply(&self, state: &PhotonicState) -> Result<PhotonicState> {
        self.apply_capped(state, usize::MAX)
    }

    pub fn apply_capped(&self, state: &PhotonicState, cap: usize) -> Result<PhotonicState> {
        let mut current = state.clone();
        for stage in &self.stages {
            current = stage.apply_capped(&current, cap)?;
        }
        Ok(current)
    }

    /// Concatenation: `self` first, then `next`.
    pub fn then(&self, next: &Circuit) -> Result<Circuit> {
        let mut stages = self.stages.clone();
        stages.extend(next.stages.iter().cloned());
        Circuit::new(stages)
    }
}
