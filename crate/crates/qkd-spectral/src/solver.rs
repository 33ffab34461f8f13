//! Pipeline assembly: key-rate curves, maximum-secure-distance searches and
//! per-wavelength distance maps.
//!
//! One rate evaluation chains the forward model, the decoy bounds, the
//! distinguishability loosening, the quantum-coin phase-error inflation and
//! the GLLP formula. With `mu_out = 0` and `D = 0` every extra stage is an
//! exact no-op, so the plain decoy-state rate is recovered bit-for-bit.

use crate::decoy::{
    apply_distinguishability, bounds_with_distinguishability, coherent_trace_distance,
    decoy_bounds, worst_phase_trace_distance,
};
use crate::error::{Error, Result};
use crate::model::{forward_observables, gllp_key_rate, poisson_single_photon_prob, ChannelParams};
use crate::tha::{phase_error_with_tha, ThaBudget};

/// How the trace distance between the signal-setting and decoy-setting
/// back-reflections is estimated from the Trojan intensity `mu_out`.
///
/// The decoy-setting reflection is scaled by the intensity ratio `nu/mu`
/// that the modulator imprints on light passing through it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistinguishabilityModel {
    /// No distinguishability: D = 0 regardless of the leak.
    None,
    /// Coherent states with aligned phases,
    /// `D = sqrt(1 - exp(-(sqrt(m_s) - sqrt(m_d))^2))`.
    AlignedPhase,
    /// Coherent states with uncontrolled relative phase, taken at the
    /// anti-aligned worst case. Wavelength-converted light carries no
    /// guaranteed phase relation, so this is the default.
    WorstCasePhase,
    /// A fixed D, e.g. from an external characterization.
    Constant(f64),
}

impl DistinguishabilityModel {
    /// Trace distance for a signal-setting Trojan intensity `mu_out`.
    pub fn trace_distance(&self, mu_out: f64, params: &ChannelParams) -> Result<f64> {
        if !mu_out.is_finite() || mu_out < 0.0 {
            return Err(Error::domain(format!(
                "trace_distance: mu_out must be >= 0, got {mu_out}"
            )));
        }
        let decoy_leak = mu_out * params.nu / params.mu;
        match *self {
            DistinguishabilityModel::None => Ok(0.0),
            DistinguishabilityModel::AlignedPhase => coherent_trace_distance(mu_out, decoy_leak),
            DistinguishabilityModel::WorstCasePhase => {
                if mu_out == 0.0 {
                    return Ok(0.0);
                }
                worst_phase_trace_distance(mu_out, decoy_leak)
            }
            DistinguishabilityModel::Constant(d) => {
                if !(0.0..=1.0).contains(&d) {
                    return Err(Error::domain(format!(
                        "constant distinguishability must be in [0, 1], got {d}"
                    )));
                }
                Ok(d)
            }
        }
    }
}

/// Which loosening construction folds the trace distance into the decoy
/// bounds (see [`crate::decoy`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LooseningModel {
    /// Redo the decoy estimate with per-setting yields allowed to differ
    /// by D (default).
    DecoyEstimate,
    /// Additive slack applied to the exact bounds.
    AdditiveSlack,
}

/// Scan and root-finding controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub d_model: DistinguishabilityModel,
    pub loosening: LooseningModel,
    /// Upper end of all distance scans, km.
    pub l_max_km: f64,
    /// Coarse grid step used to bracket the rate cutoff, km.
    pub step_km: f64,
    /// Bisection tolerance on the cutoff distance, km.
    pub tol_km: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            d_model: DistinguishabilityModel::WorstCasePhase,
            loosening: LooseningModel::DecoyEstimate,
            l_max_km: 400.0,
            step_km: 1.0,
            tol_km: 0.01,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !self.l_max_km.is_finite() || self.l_max_km <= 0.0 {
            return Err(Error::domain(format!(
                "l_max_km must be > 0, got {}",
                self.l_max_km
            )));
        }
        if !self.step_km.is_finite() || self.step_km <= 0.0 {
            return Err(Error::domain(format!(
                "step_km must be > 0, got {}",
                self.step_km
            )));
        }
        if !self.tol_km.is_finite() || self.tol_km <= 0.0 {
            return Err(Error::domain(format!(
                "tol_km must be > 0, got {}",
                self.tol_km
            )));
        }
        Ok(())
    }
}

/// One row of a rate-curve table. `key_rate` is clamped to 0 for reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub mu_out: f64,
    pub distance_km: f64,
    pub key_rate: f64,
}

/// Key-rate-versus-distance scan for one Trojan intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceScan {
    /// `(distance_km, key_rate)` on the coarse grid, rates clamped to 0.
    pub points: Vec<(f64, f64)>,
    /// Largest distance with a positive rate under the leak.
    pub max_secure_km: f64,
    /// Same with `mu_out = 0` and `D = 0`.
    pub baseline_max_km: f64,
    /// `max_secure_km / baseline_max_km`, clamped to [0, 1].
    pub ratio: f64,
}

/// One wavelength of a distance map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapEntry {
    pub wavelength_nm: f64,
    pub mu_out: f64,
    pub max_km: f64,
}

/// Per-wavelength maximum secure distances for a set of Trojan budgets.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMap {
    /// Entries in the input budget order.
    pub entries: Vec<MapEntry>,
    pub baseline_max_km: f64,
    /// The smallest per-wavelength distance: the system's effective secure
    /// distance when every mapped wavelength is open to the eavesdropper.
    pub min_max_km: f64,
    /// Wavelength attaining the minimum (first one on ties).
    pub min_wavelength_nm: f64,
    /// `min_max_km / baseline_max_km`, clamped to [0, 1].
    pub ratio: f64,
}

/// Evaluates the composed security model for one channel configuration.
#[derive(Debug, Clone)]
pub struct Solver {
    params: ChannelParams,
    options: SolverOptions,
}

impl Solver {
    pub fn new(params: ChannelParams) -> Result<Self> {
        Self::with_options(params, SolverOptions::default())
    }

    pub fn with_options(params: ChannelParams, options: SolverOptions) -> Result<Self> {
        params.validate()?;
        options.validate()?;
        Ok(Solver { params, options })
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    /// Trace distance assigned to `mu_out` by the configured model.
    pub fn trace_distance(&self, mu_out: f64) -> Result<f64> {
        self.options.d_model.trace_distance(mu_out, &self.params)
    }

    /// Secret-key rate at one distance for an explicit leak intensity and
    /// trace distance. Unclamped: negative values signal an insecure link.
    pub fn key_rate_at(&self, distance_km: f64, mu_out: f64, d: f64) -> Result<f64> {
        let obs_signal = forward_observables(self.params.mu, distance_km, &self.params)?;
        let obs_decoy = forward_observables(self.params.nu, distance_km, &self.params)?;
        let bounds = match self.options.loosening {
            LooseningModel::DecoyEstimate => {
                bounds_with_distinguishability(obs_signal, obs_decoy, d, &self.params)?
            }
            LooseningModel::AdditiveSlack => {
                apply_distinguishability(decoy_bounds(obs_signal, obs_decoy, &self.params)?, d)?
            }
        };
        let e1 = phase_error_with_tha(bounds.e1_upper, mu_out, bounds.y1_lower)?;
        let p1 = poisson_single_photon_prob(self.params.mu)?;
        gllp_key_rate(obs_signal, bounds.y1_lower, e1, p1, &self.params)
    }

    /// Secret-key rate with the trace distance taken from the configured
    /// distinguishability model.
    pub fn key_rate(&self, distance_km: f64, mu_out: f64) -> Result<f64> {
        let d = self.trace_distance(mu_out)?;
        self.key_rate_at(distance_km, mu_out, d)
    }

    /// Largest distance with a positive key rate: coarse scan to bracket the
    /// last sign change, then bisection down to `tol_km`.
    ///
    /// Returns 0 when the rate is non-positive already at L = 0, and
    /// `l_max_km` when it is still positive at the end of the scan.
    pub fn max_secure_distance(&self, mu_out: f64, d: f64) -> Result<f64> {
        let step = self.options.step_km;
        let l_max = self.options.l_max_km;
        let mut r_prev = self.key_rate_at(0.0, mu_out, d)?;
        if r_prev <= 0.0 {
            return Ok(0.0);
        }
        let n = (l_max / step).ceil() as usize;
        let mut bracket: Option<(f64, f64, f64, f64)> = None; // lo, hi, r_lo, r_hi
        let mut l_prev = 0.0;
        for i in 1..=n {
            let l = (i as f64 * step).min(l_max);
            let r = self.key_rate_at(l, mu_out, d)?;
            if r_prev > 0.0 && r <= 0.0 {
                bracket = Some((l_prev, l, r_prev, r));
            }
            l_prev = l;
            r_prev = r;
        }
        let (mut lo, mut hi, mut r_lo, mut r_hi) = match bracket {
            Some(b) => b,
            // Still positive at the end of the scan window.
            None => return Ok(l_max),
        };
        while hi - lo > self.options.tol_km {
            let mid = 0.5 * (lo + hi);
            let r_mid = self.key_rate_at(mid, mu_out, d)?;
            if r_mid > 0.0 {
                lo = mid;
                r_lo = r_mid;
            } else {
                hi = mid;
                r_hi = r_mid;
            }
        }
        // Post-hoc check: the returned root must sit on a sign change.
        if !(r_lo > 0.0 && r_hi <= 0.0) {
            return Err(Error::Numeric(format!(
                "bisection lost its bracket near {lo}..{hi} km"
            )));
        }
        Ok(0.5 * (lo + hi))
    }

    /// Full scan for one Trojan intensity, with the baseline and the
    /// distance ratio.
    pub fn scan(&self, mu_out: f64) -> Result<DistanceScan> {
        let d = self.trace_distance(mu_out)?;
        let baseline_max_km = self.max_secure_distance(0.0, 0.0)?;
        let max_secure_km = if mu_out == 0.0 && d == 0.0 {
            baseline_max_km
        } else {
            self.max_secure_distance(mu_out, d)?
        };
        let step = self.options.step_km;
        let n = (self.options.l_max_km / step).ceil() as usize;
        let mut points = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let l = (i as f64 * step).min(self.options.l_max_km);
            points.push((l, self.key_rate_at(l, mu_out, d)?.max(0.0)));
        }
        Ok(DistanceScan {
            points,
            max_secure_km,
            baseline_max_km,
            ratio: ratio_clamped(max_secure_km, baseline_max_km),
        })
    }

    /// Plot-ready rate table over the scan grid, one block per `mu_out`
    /// value, in input order. Rates are clamped to 0.
    pub fn rate_curves(&self, mu_out_values: &[f64]) -> Result<Vec<CurvePoint>> {
        let step = self.options.step_km;
        let n = (self.options.l_max_km / step).ceil() as usize;
        let mut rows = Vec::with_capacity(mu_out_values.len() * (n + 1));
        for &mu_out in mu_out_values {
            let d = self.trace_distance(mu_out)?;
            for i in 0..=n {
                let distance_km = (i as f64 * step).min(self.options.l_max_km);
                rows.push(CurvePoint {
                    mu_out,
                    distance_km,
                    key_rate: self.key_rate_at(distance_km, mu_out, d)?.max(0.0),
                });
            }
        }
        Ok(rows)
    }

    /// Maximum secure distance per wavelength for a set of Trojan budgets,
    /// each with its own `mu_out` and a trace distance from the configured
    /// model.
    pub fn distance_map(&self, budgets: &[ThaBudget]) -> Result<DistanceMap> {
        if budgets.is_empty() {
            return Err(Error::domain("distance_map: no budgets given".to_string()));
        }
        let baseline_max_km = self.max_secure_distance(0.0, 0.0)?;
        let mut entries = Vec::with_capacity(budgets.len());
        for b in budgets {
            let d = self.trace_distance(b.mu_out)?;
            let max_km = if b.mu_out == 0.0 && d == 0.0 {
                baseline_max_km
            } else {
                self.max_secure_distance(b.mu_out, d)?
            };
            entries.push(MapEntry {
                wavelength_nm: b.wavelength_nm,
                mu_out: b.mu_out,
                max_km,
            });
        }
        let min_entry = entries
            .iter()
            .copied()
            .reduce(|best, e| if e.max_km < best.max_km { e } else { best })
            .expect("entries nonempty");
        Ok(DistanceMap {
            entries,
            baseline_max_km,
            min_max_km: min_entry.max_km,
            min_wavelength_nm: min_entry.wavelength_nm,
            ratio: ratio_clamped(min_entry.max_km, baseline_max_km),
        })
    }
}

fn ratio_clamped(max_km: f64, baseline_km: f64) -> f64 {
    if baseline_km > 0.0 {
        (max_km / baseline_km).clamp(0.0, 1.0)
    } else {
        1.0
    }
}
