//! Single-photon bounds from the weak+vacuum decoy method, and their
//! loosening when the signal and decoy settings become distinguishable to an
//! eavesdropper.
//!
//! Without any leak the standard estimates are
//!
//! ```text
//! Y1 >= Y1_L = mu/(mu nu - nu^2) * [ Q_nu e^nu - Q_mu e^mu nu^2/mu^2
//!                                     - (mu^2 - nu^2)/mu^2 * Y0 ]
//! e1 <= e1_U = (E_nu Q_nu e^nu - e0 Y0) / (Y1_L * nu)
//! ```
//!
//! Trojan-horse back-reflections carry the intensity setting, so the
//! per-setting single-photon statistics may differ by up to the trace
//! distance `D` of the reflected states:
//!
//! ```text
//! |Y1(signal) - Y1(decoy)|           <= D
//! |Y1(signal) e1(signal) - Y1(decoy) e1(decoy)| <= D
//! ```
//!
//! Two loosening constructions are provided:
//!
//! * [`bounds_with_distinguishability`] redoes the decoy estimate with the
//!   per-setting yields allowed to differ by `D` at every photon number,
//!   which propagates the slack through the same algebra that produced the
//!   exact bounds (default in the solver);
//! * [`apply_distinguishability`] applies a simpler additive slack directly
//!   to already-computed bounds.
//!
//! Both reduce to the exact estimates at `D = 0`.

use crate::error::{Error, Result};
use crate::model::{ChannelParams, Observables};

/// Guard for the loosened-error denominator at the vacuous boundary.
const E1_DENOM_GUARD: f64 = 1e-15;

/// Single-photon yield/error bounds, together with the trace distance that
/// was folded into them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinglePhotonBounds {
    /// Lower bound on the single-photon yield of the signal setting.
    pub y1_lower: f64,
    /// Upper bound on the single-photon error rate, clamped to [0, 0.5].
    pub e1_upper: f64,
    /// Trace distance D between the settings as seen by the eavesdropper.
    pub distinguishability: f64,
}

fn check_decoy_intensities(params: &ChannelParams) -> Result<()> {
    if !(params.nu > 0.0 && params.nu < params.mu) {
        return Err(Error::DegenerateDecoy);
    }
    Ok(())
}

fn check_gain(name: &str, obs: Observables) -> Result<()> {
    if !obs.gain.is_finite() || obs.gain <= 0.0 {
        return Err(Error::domain(format!(
            "{name} gain must be positive, got {}",
            obs.gain
        )));
    }
    Ok(())
}

/// Unclamped decoy-state yield bound; shared by the exact and loosened paths.
fn y1_lower_raw(q_mu: f64, q_nu: f64, p: &ChannelParams) -> f64 {
    let prefactor = p.mu / (p.mu * p.nu - p.nu * p.nu);
    let bracket = q_nu * p.nu.exp()
        - q_mu * p.mu.exp() * (p.nu * p.nu) / (p.mu * p.mu)
        - (p.mu * p.mu - p.nu * p.nu) / (p.mu * p.mu) * p.y0;
    prefactor * bracket
}

/// Lower bound on the single-photon yield from one signal/decoy gain pair,
/// clamped to [0, 1].
pub fn y1_lower_bound(
    obs_signal: Observables,
    obs_decoy: Observables,
    params: &ChannelParams,
) -> Result<f64> {
    check_decoy_intensities(params)?;
    check_gain("signal", obs_signal)?;
    check_gain("decoy", obs_decoy)?;
    Ok(y1_lower_raw(obs_signal.gain, obs_decoy.gain, params).clamp(0.0, 1.0))
}

/// Upper bound on the single-photon error rate in the absence of a leak,
/// clamped to [0, 0.5].
///
/// A vanishing yield bound makes the estimate vacuous; 0.5 is reported in
/// that case.
pub fn e1_upper_bound_no_tha(
    obs_decoy: Observables,
    y1_lower: f64,
    params: &ChannelParams,
) -> Result<f64> {
    check_decoy_intensities(params)?;
    if !(0.0..=1.0).contains(&y1_lower) {
        return Err(Error::domain(format!(
            "y1_lower must be in [0, 1], got {y1_lower}"
        )));
    }
    if y1_lower <= 0.0 {
        return Ok(0.5);
    }
    let num = obs_decoy.qber * obs_decoy.gain * params.nu.exp() - params.e0 * params.y0;
    Ok((num / (y1_lower * params.nu)).clamp(0.0, 0.5))
}

/// Exact (leak-free) bounds from one signal/decoy observation pair.
pub fn decoy_bounds(
    obs_signal: Observables,
    obs_decoy: Observables,
    params: &ChannelParams,
) -> Result<SinglePhotonBounds> {
    let y1 = y1_lower_bound(obs_signal, obs_decoy, params)?;
    let e1 = e1_upper_bound_no_tha(obs_decoy, y1, params)?;
    Ok(SinglePhotonBounds {
        y1_lower: y1,
        e1_upper: e1,
        distinguishability: 0.0,
    })
}

/// Trace distance between two pure coherent states of the given mean photon
/// numbers with aligned phases:
/// `D = sqrt(1 - exp(-(sqrt(m1) - sqrt(m2))^2))`.
pub fn coherent_trace_distance(mu_out_signal: f64, mu_out_decoy: f64) -> Result<f64> {
    trace_distance_from_amplitude_gap(mu_out_signal, mu_out_decoy, false)
}

/// Trace distance between two coherent states whose relative phase is
/// uncontrolled, taken at the anti-aligned worst case:
/// `D = sqrt(1 - exp(-(sqrt(m1) + sqrt(m2))^2))`.
///
/// Wavelength-converted light carries no guaranteed phase relation between
/// the settings, so a conservative analysis lets the amplitudes add.
pub fn worst_phase_trace_distance(mu_out_signal: f64, mu_out_decoy: f64) -> Result<f64> {
    trace_distance_from_amplitude_gap(mu_out_signal, mu_out_decoy, true)
}

fn trace_distance_from_amplitude_gap(m1: f64, m2: f64, anti_aligned: bool) -> Result<f64> {
    if !m1.is_finite() || m1 < 0.0 || !m2.is_finite() || m2 < 0.0 {
        return Err(Error::domain(format!(
            "trace distance: intensities must be >= 0, got {m1}, {m2}"
        )));
    }
    let gap = if anti_aligned {
        m1.sqrt() + m2.sqrt()
    } else {
        m1.sqrt() - m2.sqrt()
    };
    // 1 - exp(-x) via expm1: exact for the ~1e-12 intensities of interest.
    Ok((-(-gap * gap).exp_m1()).sqrt())
}

/// Additive-slack loosening of existing bounds:
/// `y1' = max(0, y1 - d)` and `e1' = min(0.5, (y1 e1 + d) / max(y1 - d, eps))`.
///
/// Bounds become vacuous (`y1' = 0`, `e1' = 0.5`) once the slack swallows
/// the whole yield, `d >= y1`. At `d = 0` the input is returned unchanged.
pub fn apply_distinguishability(bounds: SinglePhotonBounds, d: f64) -> Result<SinglePhotonBounds> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::domain(format!(
            "distinguishability must be in [0, 1], got {d}"
        )));
    }
    if d == 0.0 {
        return Ok(SinglePhotonBounds {
            distinguishability: 0.0,
            ..bounds
        });
    }
    if d >= bounds.y1_lower {
        return Ok(SinglePhotonBounds {
            y1_lower: 0.0,
            e1_upper: 0.5,
            distinguishability: d,
        });
    }
    let y1 = (bounds.y1_lower - d).max(0.0);
    let e1 = ((bounds.y1_lower * bounds.e1_upper + d) / (bounds.y1_lower - d).max(E1_DENOM_GUARD))
        .min(0.5);
    Ok(SinglePhotonBounds {
        y1_lower: y1,
        e1_upper: e1,
        distinguishability: d,
    })
}

/// Decoy estimate redone with the per-setting single-photon statistics
/// allowed to differ by `d`.
///
/// Carrying `|Y_n(signal) - Y_n(decoy)| <= d` through the decoy algebra
/// subtracts `mu/(mu nu - nu^2) * (e^nu + nu^2/mu^2) * d` from the yield
/// bound and adds `(e0 + nu) * d` to the error numerator:
///
/// ```text
/// Y1_L(d) = Y1_L - mu/(mu nu - nu^2) * (e^nu + nu^2/mu^2) * d
/// e1_U(d) = (E_nu Q_nu e^nu - e0 Y0 + (e0 + nu) d) / (nu * Y1_L(d))
/// ```
///
/// At `d = 0` this is bit-identical to [`y1_lower_bound`] followed by
/// [`e1_upper_bound_no_tha`].
pub fn bounds_with_distinguishability(
    obs_signal: Observables,
    obs_decoy: Observables,
    d: f64,
    params: &ChannelParams,
) -> Result<SinglePhotonBounds> {
    check_decoy_intensities(params)?;
    check_gain("signal", obs_signal)?;
    check_gain("decoy", obs_decoy)?;
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::domain(format!(
            "distinguishability must be in [0, 1], got {d}"
        )));
    }
    let mut y1 = y1_lower_raw(obs_signal.gain, obs_decoy.gain, params);
    if d > 0.0 {
        let prefactor = params.mu / (params.mu * params.nu - params.nu * params.nu);
        y1 -= prefactor * d * (params.nu.exp() + (params.nu * params.nu) / (params.mu * params.mu));
    }
    let y1 = y1.clamp(0.0, 1.0);
    if y1 <= 0.0 {
        return Ok(SinglePhotonBounds {
            y1_lower: 0.0,
            e1_upper: 0.5,
            distinguishability: d,
        });
    }
    let mut num = obs_decoy.qber * obs_decoy.gain * params.nu.exp() - params.e0 * params.y0;
    if d > 0.0 {
        num += d * (params.e0 + params.nu);
    }
    let e1 = (num / (y1 * params.nu)).clamp(0.0, 0.5);
    Ok(SinglePhotonBounds {
        y1_lower: y1,
        e1_upper: e1,
        distinguishability: d,
    })
}
