//! Security modeling of decoy-state BB84 under Trojan-horse light that
//! leaks through a wavelength-converting component.
//!
//! A damaged multiplexer at the transmitter output can split injected
//! high-power light into a comb of shifted wavelengths, some of which see
//! far less isolation than the nominal channel. This crate turns measured
//! (or synthesized) optical spectra plus per-wavelength isolation data into
//! a Trojan-photon budget, and propagates that budget through a
//! GLLP/decoy-state key-rate model to secure-key-rate curves and maximum
//! secure distances.
//!
//! Modules:
//!
//! * [`model`] - channel parameters, forward detection model, GLLP rate;
//! * [`decoy`] - single-photon bounds and their distinguishability loosening;
//! * [`tha`] - quantum-coin phase-error inflation and photon budgets;
//! * [`spectra`] - spectrum CSV I/O, peak detection, comb synthesis,
//!   isolation profiles;
//! * [`solver`] - distance scans, rate curves and per-wavelength maps.
//!
//! # Example
//!
//! How far a link stays secure when each pulse leaks 1e-12 Trojan photons:
//!
//! ```
//! use qkd_spectral::{ChannelParams, Solver};
//!
//! let solver = Solver::new(ChannelParams::default()).unwrap();
//! let scan = solver.scan(1e-12).unwrap();
//!
//! assert!(scan.baseline_max_km > 250.0);
//! assert!(scan.max_secure_km < scan.baseline_max_km);
//! println!(
//!     "secure distance {:.1} km -> {:.1} km ({:.1}% kept)",
//!     scan.baseline_max_km,
//!     scan.max_secure_km,
//!     100.0 * scan.ratio
//! );
//! ```

pub mod decoy;
pub mod error;
pub mod model;
pub mod solver;
pub mod spectra;
pub mod tha;

pub use error::{Error, Result};
pub use model::{ChannelParams, Observables};
pub use solver::{DistinguishabilityModel, LooseningModel, Solver, SolverOptions};
