//! Trojan-horse attack machinery: the quantum-coin imbalance, the phase-error
//! inflation it implies, and per-wavelength photon budgets built from
//! spectral measurements.

use crate::error::{Error, Result};
use crate::spectra::IsolationProfile;

/// Per-wavelength Trojan-horse photon budget.
///
/// Invariant (maintained by [`compute_budget`]):
/// `mu_out = injected_photons * conversion_fraction * reflectivity
///           * 10^(-roundtrip_isolation_db / 10)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThaBudget {
    /// Center wavelength of the spectral component, nm.
    pub wavelength_nm: f64,
    /// Mean photon number per pulse entering the transmitter.
    pub injected_photons: f64,
    /// Fraction of the injected power emerging at this wavelength.
    pub conversion_fraction: f64,
    /// Total isolation over the full path (all passes counted), dB.
    pub roundtrip_isolation_db: f64,
    /// Internal reflection efficiency of the transmitter optics.
    pub reflectivity: f64,
    /// Mean photon number per pulse returning to the eavesdropper.
    pub mu_out: f64,
}

/// Probability that the sender's quantum coin, measured in the X basis,
/// lands on the tagged outcome:
/// `Delta = (1 - exp(-mu_out) * cos(mu_out)) / 2`.
///
/// Written as `(-expm1(-m) + exp(-m) * 2 sin^2(m/2)) / 2` so the value stays
/// accurate down to the 1e-12 intensities typical of well-isolated
/// transmitters. Exactly 0 at `mu_out = 0`, tending to 1/2 for large
/// `mu_out`.
pub fn quantum_coin_delta(mu_out: f64) -> Result<f64> {
    if !mu_out.is_finite() || mu_out < 0.0 {
        return Err(Error::domain(format!(
            "quantum_coin_delta: mu_out must be >= 0, got {mu_out}"
        )));
    }
    let s = (mu_out / 2.0).sin();
    Ok(0.5 * (-(-mu_out).exp_m1() + (-mu_out).exp() * 2.0 * s * s))
}

/// Single-photon phase-error bound under a Trojan-horse leak of intensity
/// `mu_out`, given the leak-free bound `e1_bar` and the yield lower bound
/// `y1` that renormalizes the coin imbalance:
///
/// ```text
/// Delta' = Delta(mu_out) / y1
/// e1 = e1_bar + 4 Delta'(1 - Delta')(1 - 2 e1_bar)
///            + 4 (1 - 2 Delta') sqrt(Delta'(1 - Delta') e1_bar(1 - e1_bar))
/// ```
///
/// clamped to [0, 0.5]. The radical covers the full product
/// `Delta'(1 - Delta') e1_bar(1 - e1_bar)`. Once `Delta' >= 1/2` the
/// fidelity constraint behind the expression no longer restricts the phase
/// error and the bound is reported vacuous (0.5); the same applies when
/// `y1 = 0`. At `mu_out = 0` the input `e1_bar` is returned exactly.
pub fn phase_error_with_tha(e1_bar: f64, mu_out: f64, y1: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&e1_bar) {
        return Err(Error::domain(format!(
            "phase_error_with_tha: e1_bar must be in [0, 0.5], got {e1_bar}"
        )));
    }
    if !y1.is_finite() || y1 < 0.0 {
        return Err(Error::domain(format!(
            "phase_error_with_tha: y1 must be >= 0, got {y1}"
        )));
    }
    if y1 == 0.0 {
        return Ok(0.5);
    }
    let delta_prime = quantum_coin_delta(mu_out)? / y1;
    if delta_prime >= 0.5 {
        return Ok(0.5);
    }
    let spread = delta_prime * (1.0 - delta_prime);
    let e1 = e1_bar
        + 4.0 * spread * (1.0 - 2.0 * e1_bar)
        + 4.0 * (1.0 - 2.0 * delta_prime) * (spread * e1_bar * (1.0 - e1_bar)).sqrt();
    Ok(e1.clamp(0.0, 0.5))
}

/// Combine injected intensity, conversion fraction, per-wavelength isolation
/// and internal reflectivity into the Trojan photon number returning to the
/// channel.
///
/// `isolation_passes` counts how many times the light crosses the isolation
/// chain; 2 models one inbound and one outbound pass. The converted light is
/// assumed to keep its shifted wavelength on the way out, so the profile is
/// evaluated at `wavelength_nm` for every pass.
pub fn compute_budget(
    injected_photons: f64,
    wavelength_nm: f64,
    conversion_fraction: f64,
    isolation: &IsolationProfile,
    reflectivity: f64,
    isolation_passes: u32,
) -> Result<ThaBudget> {
    if !injected_photons.is_finite() || injected_photons < 0.0 {
        return Err(Error::domain(format!(
            "compute_budget: injected_photons must be >= 0, got {injected_photons}"
        )));
    }
    if !(0.0..=1.0).contains(&conversion_fraction) {
        return Err(Error::domain(format!(
            "compute_budget: conversion_fraction must be in [0, 1], got {conversion_fraction}"
        )));
    }
    if !(0.0..=1.0).contains(&reflectivity) {
        return Err(Error::domain(format!(
            "compute_budget: reflectivity must be in [0, 1], got {reflectivity}"
        )));
    }
    if isolation_passes == 0 {
        return Err(Error::domain(
            "compute_budget: isolation_passes must be >= 1".to_string(),
        ));
    }
    let single_pass_db = isolation.attenuation_db_at(wavelength_nm)?;
    let roundtrip_isolation_db = single_pass_db * isolation_passes as f64;
    let mu_out = injected_photons
        * conversion_fraction
        * reflectivity
        * 10f64.powf(-roundtrip_isolation_db / 10.0);
    Ok(ThaBudget {
        wavelength_nm,
        injected_photons,
        conversion_fraction,
        roundtrip_isolation_db,
        reflectivity,
        mu_out,
    })
}
