//! Resolved run configuration and flag parsing helpers.

use std::fs;
use std::path::PathBuf;

use clap::ValueEnum;
use heraldnet::analytic::{FormulaSet, DEFAULT_CROSSOVER_TOL};
use heraldnet::experiments::{DEFAULT_VERIFY_PARTIES, VERIFY_TOL};
use heraldnet::schemes::DEFAULT_ALPHA;
use heraldnet::Scheme;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SWEEP_PARTIES: [usize; 4] = [4, 6, 8, 13];
pub const DEFAULT_SWEEP_GRID: Grid = Grid {
    start: 0.0,
    stop: 50.0,
    step: 0.5,
};
pub const DEFAULT_CROSSOVER_PARTIES: (usize, usize) = (2, 30);
pub const DEFAULT_SIMULATE_PARTIES: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Simulate,
    Sweep,
    Crossover,
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Text,
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeChoice {
    Bc,
    Sc,
    Sd,
    All,
}

impl SchemeChoice {
    pub fn schemes(self) -> Vec<Scheme> {
        match self {
            SchemeChoice::Bc => vec![Scheme::Bc],
            SchemeChoice::Sc => vec![Scheme::Sc],
            SchemeChoice::Sd => vec![Scheme::Sd],
            SchemeChoice::All => Scheme::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Reference {
    Tabulated,
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

/// `START:STOP:STEP`.
pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected START:STOP:STEP, got '{s}'"));
    }
    let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}"));
    Ok(Grid {
        start: num(parts[0])?,
        stop: num(parts[1])?,
        step: num(parts[2])?,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartyList(pub Vec<usize>);

/// `N`, `MIN..MAX` (inclusive) or a comma list.
pub fn parse_party_list(s: &str) -> Result<PartyList, String> {
    parse_parties(s).map(PartyList)
}

pub fn parse_parties(s: &str) -> Result<Vec<usize>, String> {
    let num = |p: &str| p.trim().parse::<usize>().map_err(|e| format!("'{p}': {e}"));
    if let Some((lo, hi)) = s.split_once("..") {
        let hi = hi.strip_prefix('=').unwrap_or(hi);
        let (lo, hi) = (num(lo)?, num(hi)?);
        if hi < lo {
            return Err(format!("empty party range {lo}..{hi}"));
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',').map(num).collect()
}

/// Everything a run needs, after defaults are applied. `--dump-config` prints
/// this and `--config` reads it back.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub schemes: Vec<Scheme>,
    pub parties: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_grid: Option<Grid>,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub tol: f64,
    pub formulas: FormulaSet,
}

/// Flags as typed by the user; `None` means not supplied.
#[derive(Clone, Debug, Default)]
pub struct RawFlags {
    pub scheme: Option<SchemeChoice>,
    pub parties: Option<Vec<usize>>,
    pub radius: Option<f64>,
    pub radius_grid: Option<Grid>,
    pub alpha: Option<f64>,
    pub eta: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub tol: Option<f64>,
    pub literal_sc_phr: bool,
    pub reference: Option<Reference>,
}

impl RawFlags {
    fn any_set(&self) -> bool {
        self.scheme.is_some()
            || self.parties.is_some()
            || self.radius.is_some()
            || self.radius_grid.is_some()
            || self.alpha.is_some()
            || self.eta.is_some()
            || self.out.is_some()
            || self.format.is_some()
            || self.tol.is_some()
            || self.literal_sc_phr
            || self.reference.is_some()
    }
}

pub fn load(path: &PathBuf, command: Command, flags: &RawFlags) -> Result<RunConfig, String> {
    if flags.any_set() {
        return Err("--config cannot be combined with other run flags".into());
    }
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    if cfg.command != command {
        return Err(format!(
            "{}: config is for '{}', not '{}'",
            path.display(),
            command_name(cfg.command),
            command_name(command)
        ));
    }
    validate(&cfg)?;
    Ok(cfg)
}

pub fn command_name(c: Command) -> &'static str {
    match c {
        Command::Simulate => "simulate",
        Command::Sweep => "sweep",
        Command::Crossover => "crossover",
        Command::Verify => "verify",
    }
}

pub fn resolve(command: Command, flags: RawFlags) -> Result<RunConfig, String> {
    if flags.eta.is_some() && (flags.radius.is_some() || flags.radius_grid.is_some()) {
        return Err("--eta and --radius/--radius-grid are mutually exclusive; supply one".into());
    }
    if flags.radius.is_some() && flags.radius_grid.is_some() {
        return Err("--radius and --radius-grid are mutually exclusive".into());
    }
    if flags.literal_sc_phr && flags.reference == Some(Reference::Exact) {
        return Err("--paper-literal-sc-phr applies to the tabulated reference only".into());
    }
    let formulas = match (flags.literal_sc_phr, flags.reference) {
        (true, _) => FormulaSet::TabulatedRaw,
        (false, Some(Reference::Exact)) => FormulaSet::Exact,
        _ => FormulaSet::Tabulated,
    };
    let schemes = flags.scheme.unwrap_or(SchemeChoice::All).schemes();
    let alpha = flags.alpha.unwrap_or(DEFAULT_ALPHA);

    let cfg = match command {
        Command::Simulate => {
            if flags.radius_grid.is_some() {
                return Err("simulate takes a single --radius, not a grid".into());
            }
            if flags.eta.is_none() && flags.radius.is_none() {
                return Err("simulate needs either --eta or --radius".into());
            }
            RunConfig {
                command,
                schemes,
                parties: flags.parties.unwrap_or_else(|| vec![DEFAULT_SIMULATE_PARTIES]),
                radius_km: flags.radius,
                radius_grid: None,
                alpha,
                eta: flags.eta,
                out: flags.out,
                format: flags.format.unwrap_or(OutputFormat::Text),
                tol: flags.tol.unwrap_or(VERIFY_TOL),
                formulas,
            }
        }
        Command::Sweep => {
            if flags.eta.is_some() {
                return Err("sweep is geometry-driven; --eta is not accepted".into());
            }
            let grid = match (flags.radius, flags.radius_grid) {
                (Some(r), _) => Grid {
                    start: r,
                    stop: r,
                    step: 1.0,
                },
                (None, Some(g)) => g,
                (None, None) => DEFAULT_SWEEP_GRID,
            };
            RunConfig {
                command,
                schemes,
                parties: flags.parties.unwrap_or_else(|| DEFAULT_SWEEP_PARTIES.to_vec()),
                radius_km: None,
                radius_grid: Some(grid),
                alpha,
                eta: None,
                out: flags.out,
                format: flags.format.unwrap_or(OutputFormat::Csv),
                tol: flags.tol.unwrap_or(VERIFY_TOL),
                formulas,
            }
        }
        Command::Crossover => {
            if flags.eta.is_some() || flags.radius.is_some() || flags.radius_grid.is_some() {
                return Err("crossover takes --parties and --alpha only".into());
            }
            let (lo, hi) = DEFAULT_CROSSOVER_PARTIES;
            RunConfig {
                command,
                schemes: vec![Scheme::Sc, Scheme::Sd],
                parties: flags.parties.unwrap_or_else(|| (lo..=hi).collect()),
                radius_km: None,
                radius_grid: None,
                alpha,
                eta: None,
                out: flags.out,
                format: flags.format.unwrap_or(OutputFormat::Csv),
                tol: flags.tol.unwrap_or(DEFAULT_CROSSOVER_TOL),
                formulas,
            }
        }
        Command::Verify => {
            if flags.radius.is_some() || flags.radius_grid.is_some() {
                return Err("verify runs at fixed transmissions; use --eta".into());
            }
            RunConfig {
                command,
                schemes,
                parties: flags.parties.unwrap_or_else(|| DEFAULT_VERIFY_PARTIES.to_vec()),
                radius_km: None,
                radius_grid: None,
                alpha,
                eta: flags.eta,
                out: flags.out,
                format: flags.format.unwrap_or(OutputFormat::Json),
                tol: flags.tol.unwrap_or(VERIFY_TOL),
                formulas,
            }
        }
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> Result<(), String> {
    if cfg.parties.is_empty() {
        return Err("no party counts given".into());
    }
    if cfg.schemes.is_empty() {
        return Err("no schemes given".into());
    }
    if !(cfg.alpha > 0.0) || !cfg.alpha.is_finite() {
        return Err(format!("--alpha must be positive, got {}", cfg.alpha));
    }
    if !(cfg.tol > 0.0) {
        return Err(format!("--tol must be positive, got {}", cfg.tol));
    }
    if let Some(eta) = cfg.eta {
        if !(0.0..=1.0).contains(&eta) {
            return Err(format!("--eta must lie in [0, 1], got {eta}"));
        }
    }
    if cfg.eta.is_some() && (cfg.radius_km.is_some() || cfg.radius_grid.is_some()) {
        return Err("--eta and --radius/--radius-grid are mutually exclusive; supply one".into());
    }
    if let Some(r) = cfg.radius_km {
        if !(r >= 0.0) {
            return Err(format!("--radius must be >= 0, got {r}"));
        }
    }
    if cfg.format == OutputFormat::Text && cfg.command != Command::Simulate {
        return Err(format!("{} writes csv or json", command_name(cfg.command)));
    }
    if cfg.format == OutputFormat::Csv && cfg.command == Command::Verify {
        return Err("verify writes a json report".into());
    }
    Ok(())
}
