//! Exact simulation and closed-form analysis of heralded N-party GHZ state
//! distribution over lossy optical channels.
//!
//! Three distribution schemes are modelled:
//!
//! * **BC**: Bell-pair sources, heralding detectors at a central station.
//! * **SC**: single-photon sources, heralding detectors at a central station.
//! * **SD**: single-photon sources, heralding detectors distributed over the
//!   parties (no central station).
//!
//! States are sparse polynomials in bosonic creation operators ([`fock`]),
//! optical elements are linear substitutions on those operators ([`optics`]),
//! and [`heralding`] evaluates success probability, heralding probability and
//! heralding efficiency by brute force over all herald outcomes. [`analytic`]
//! holds the corresponding closed forms and the ring-network geometry, and
//! [`experiments`] runs sweeps and oracle-vs-formula verification campaigns.

pub mod analytic;
pub mod error;
pub mod experiments;
pub mod fock;
pub mod format;
pub mod heralding;
pub mod optics;
pub mod schemes;

pub use num_complex::Complex64;

pub use error::{Error, Result};
pub use fock::{Mode, ModeRegistry, Monomial, PhotonicState, Polarization, Role};
pub use heralding::{HeraldAnalysis, HeraldPattern, Metrics, Outcome, Provenance};
pub use optics::{Circuit, LinearMap};
pub use schemes::{NetworkGeometry, Scheme, SchemeSetup, SchemeSpec};
