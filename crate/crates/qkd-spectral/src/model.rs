//! Channel parameters, elementary information-theoretic functions, the
//! forward detection model and the GLLP key-rate formula.
//!
//! The forward model is the standard simulation for a weak-coherent-pulse
//! decoy-state link with threshold detectors and additive dark counts:
//!
//! ```text
//! eta   = eta_det * 10^(-alpha * L / 10)
//! Q     = Y0 + 1 - exp(-eta * intensity)
//! E * Q = e0 * Y0 + e_det * (1 - exp(-eta * intensity))
//! ```
//!
//! and the secret-key rate is the GLLP expression
//!
//! ```text
//! R = q * { -Q_mu * H2(E_mu) * f + P1 * Y1 * [1 - H2(e1)] }
//! ```
//!
//! where `P1 = mu * exp(-mu)` is the single-photon emission probability and
//! `Y1`, `e1` are bounds produced by the [`crate::decoy`] module. `R` may be
//! negative; callers clamp to zero only at reporting boundaries so that
//! root-finders can sign-test.

use crate::error::{Error, Result};

/// Fiber, detector and protocol constants of a decoy-state BB84 link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Fiber attenuation in dB/km.
    pub alpha_db_per_km: f64,
    /// Detector efficiency at the receiver (0..1].
    pub eta_det: f64,
    /// Optical misalignment error probability.
    pub e_det: f64,
    /// Dark count probability per gate (Y0).
    pub y0: f64,
    /// Error rate of dark counts (e0), 1/2 for random clicks.
    pub e0: f64,
    /// Bidirectional error-correction inefficiency f, >= 1.
    pub f_ec: f64,
    /// Sifting factor q, 1/2 for standard BB84.
    pub q: f64,
    /// Mean photon number of the signal state.
    pub mu: f64,
    /// Mean photon number of the (weak) decoy state, 0 < nu < mu.
    pub nu: f64,
}

impl Default for ChannelParams {
    /// 0.2 dB/km fiber, 42% detection efficiency, 1% misalignment error,
    /// dark count probability 8e-8 per gate, e0 = 0.5, f = 1.16, q = 0.5.
    ///
    /// The signal/decoy intensities mu = 0.5, nu = 0.1 are tool defaults,
    /// not measured quantities; override them in configuration when they
    /// are known.
    fn default() -> Self {
        ChannelParams {
            alpha_db_per_km: 0.2,
            eta_det: 0.42,
            e_det: 0.01,
            y0: 8e-8,
            e0: 0.5,
            f_ec: 1.16,
            q: 0.5,
            mu: 0.5,
            nu: 0.1,
        }
    }
}

impl ChannelParams {
    /// Check every field against its physical domain. Error messages name
    /// the offending fields.
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("alpha_db_per_km", self.alpha_db_per_km),
            ("eta_det", self.eta_det),
            ("e_det", self.e_det),
            ("y0", self.y0),
            ("e0", self.e0),
            ("f_ec", self.f_ec),
            ("q", self.q),
            ("mu", self.mu),
            ("nu", self.nu),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::domain(format!("{name} must be finite, got {v}")));
            }
        }
        if self.alpha_db_per_km < 0.0 {
            return Err(Error::domain(format!(
                "alpha_db_per_km must be >= 0, got {}",
                self.alpha_db_per_km
            )));
        }
        if !(self.eta_det > 0.0 && self.eta_det <= 1.0) {
            return Err(Error::domain(format!(
                "eta_det must be in (0, 1], got {}",
                self.eta_det
            )));
        }
        if !(0.0..=1.0).contains(&self.e_det) {
            return Err(Error::domain(format!(
                "e_det must be in [0, 1], got {}",
                self.e_det
            )));
        }
        if !(0.0..=1.0).contains(&self.y0) {
            return Err(Error::domain(format!(
                "y0 must be in [0, 1], got {}",
                self.y0
            )));
        }
        if !(0.0..=1.0).contains(&self.e0) {
            return Err(Error::domain(format!(
                "e0 must be in [0, 1], got {}",
                self.e0
            )));
        }
        if self.f_ec < 1.0 {
            return Err(Error::domain(format!(
                "f_ec must be >= 1, got {}",
                self.f_ec
            )));
        }
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::domain(format!(
                "q must be in (0, 1], got {}",
                self.q
            )));
        }
        if self.mu <= 0.0 {
            return Err(Error::domain(format!("mu must be > 0, got {}", self.mu)));
        }
        if !(self.nu > 0.0 && self.nu < self.mu) {
            return Err(Error::domain(format!(
                "mu and nu must satisfy 0 < nu < mu, got mu={}, nu={}",
                self.mu, self.nu
            )));
        }
        Ok(())
    }
}

/// Measured gain and error rate of one pulse intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    /// Total gain Q: detection probability per pulse.
    pub gain: f64,
    /// Quantum bit error rate E of the detected pulses.
    pub qber: f64,
}

/// Binary Shannon entropy `H2(x) = -x log2(x) - (1-x) log2(1-x)`.
///
/// Returns the limit value 0 at the endpoints x = 0 and x = 1 so that the
/// key-rate formula stays total.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!(
            "binary_entropy: x must be in [0, 1], got {x}"
        )));
    }
    Ok(h2(x))
}

/// `binary_entropy` without the domain check; callers guarantee x in [0, 1].
pub(crate) fn h2(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// Probability that a Poissonian source of mean `mu` emits exactly one
/// photon: `mu * exp(-mu)`.
pub fn poisson_single_photon_prob(mu: f64) -> Result<f64> {
    if !mu.is_finite() || mu <= 0.0 {
        return Err(Error::domain(format!(
            "poisson_single_photon_prob: mu must be > 0, got {mu}"
        )));
    }
    Ok(mu * (-mu).exp())
}

/// Overall transmittance `eta = eta_det * 10^(-alpha * L / 10)` of fiber
/// plus detector.
pub fn transmittance(distance_km: f64, params: &ChannelParams) -> Result<f64> {
    if !distance_km.is_finite() || distance_km < 0.0 {
        return Err(Error::domain(format!(
            "transmittance: distance must be >= 0 km, got {distance_km}"
        )));
    }
    Ok(params.eta_det * 10f64.powf(-params.alpha_db_per_km * distance_km / 10.0))
}

/// Gain and error rate a pulse of the given mean photon number produces at
/// the given distance.
///
/// `Q = Y0 + 1 - exp(-eta * intensity)` and
/// `E * Q = e0 * Y0 + e_det * (1 - exp(-eta * intensity))`. When Q = 0
/// (no dark counts and no light) the error rate is reported as `e0`.
pub fn forward_observables(
    intensity: f64,
    distance_km: f64,
    params: &ChannelParams,
) -> Result<Observables> {
    if !intensity.is_finite() || intensity < 0.0 {
        return Err(Error::domain(format!(
            "forward_observables: intensity must be >= 0, got {intensity}"
        )));
    }
    let eta = transmittance(distance_km, params)?;
    // 1 - exp(-x) via expm1 keeps precision for the very small signals
    // that decide the long-distance cutoff.
    let click = -(-eta * intensity).exp_m1();
    let gain = params.y0 + click;
    let eq = params.e0 * params.y0 + params.e_det * click;
    let qber = if gain > 0.0 { eq / gain } else { params.e0 };
    Ok(Observables { gain, qber })
}

/// GLLP secret-key rate
/// `R = q * { -Q_mu H2(E_mu) f + P1 * y1 * [1 - H2(e1)] }`.
///
/// `y1` and `e1` are the single-photon yield and phase-error bounds, `p1`
/// the single-photon emission probability. The result may be negative.
pub fn gllp_key_rate(
    obs_signal: Observables,
    y1: f64,
    e1: f64,
    p1: f64,
    params: &ChannelParams,
) -> Result<f64> {
    for (name, v) in [
        ("gain", obs_signal.gain),
        ("qber", obs_signal.qber),
        ("y1", y1),
        ("e1", e1),
        ("p1", p1),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::domain(format!(
                "gllp_key_rate: {name} must be in [0, 1], got {v}"
            )));
        }
    }
    let ec = obs_signal.gain * h2(obs_signal.qber) * params.f_ec;
    let privacy = p1 * y1 * (1.0 - h2(e1));
    Ok(params.q * (privacy - ec))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn entropy_endpoints_and_maximum() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
    }

    #[test]
    fn entropy_at_0_11() {
        // High-precision evaluation of the closed form.
        let h = binary_entropy(0.11).unwrap();
        assert!(rel_close(h, 0.499915958164528, 1e-12), "H2(0.11) = {h}");
    }

    #[test]
    fn entropy_symmetry_spot_checks() {
        for x in [0.01, 0.11, 0.3, 0.49] {
            let a = binary_entropy(x).unwrap();
            let b = binary_entropy(1.0 - x).unwrap();
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn entropy_rejects_out_of_range() {
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn poisson_single_photon_values() {
        let p = poisson_single_photon_prob(1.0).unwrap();
        assert!(rel_close(p, 0.367879441171442, 1e-12), "p1(1) = {p}");
        let p = poisson_single_photon_prob(0.5).unwrap();
        assert!(rel_close(p, 0.303265329856317, 1e-12), "p1(0.5) = {p}");
        // First-order series: p1(mu) -> mu as mu -> 0.
        let p = poisson_single_photon_prob(1e-9).unwrap();
        assert!(rel_close(p, 1e-9, 1e-8), "p1(1e-9) = {p}");
        assert!(poisson_single_photon_prob(0.0).is_err());
        assert!(poisson_single_photon_prob(-1.0).is_err());
    }

    #[test]
    fn transmittance_fig6_values() {
        let p = ChannelParams::default();
        assert_eq!(transmittance(0.0, &p).unwrap(), 0.42);
        let t = transmittance(100.0, &p).unwrap();
        assert!(rel_close(t, 0.0042, 1e-12), "eta(100 km) = {t}");
    }

    #[test]
    fn transmittance_lossless_channel() {
        let p = ChannelParams {
            eta_det: 1.0,
            alpha_db_per_km: 0.0,
            ..ChannelParams::default()
        };
        for l in [0.0, 10.0, 1000.0] {
            assert_eq!(transmittance(l, &p).unwrap(), 1.0);
        }
        assert!(transmittance(-1.0, &p).is_err());
    }

    #[test]
    fn forward_observables_at_zero_distance() {
        let p = ChannelParams::default();
        let obs = forward_observables(0.5, 0.0, &p).unwrap();
        assert!(
            rel_close(obs.gain, 0.189415834029813, 1e-12),
            "Q = {}",
            obs.gain
        );
        assert!(
            rel_close(obs.qber, 0.0100002069520756, 1e-12),
            "E = {}",
            obs.qber
        );
    }

    #[test]
    fn forward_observables_vacuum_pulse() {
        let p = ChannelParams::default();
        let obs = forward_observables(0.0, 17.0, &p).unwrap();
        assert_eq!(obs.gain, p.y0);
        assert_eq!(obs.qber, p.e0);
    }

    #[test]
    fn forward_observables_total_loss_limit() {
        let p = ChannelParams::default();
        let obs = forward_observables(0.5, 1e7, &p).unwrap();
        assert!(rel_close(obs.gain, p.y0, 1e-9));
        assert!(rel_close(obs.qber, p.e0, 1e-9));
    }

    #[test]
    fn forward_observables_division_guard() {
        // y0 = 0 and e_det = 0: the error numerator vanishes, E must be 0
        // while light still arrives, and e0 once nothing arrives at all.
        let p = ChannelParams {
            y0: 0.0,
            e_det: 0.0,
            ..ChannelParams::default()
        };
        let obs = forward_observables(0.5, 10.0, &p).unwrap();
        assert!(obs.gain > 0.0);
        assert_eq!(obs.qber, 0.0);
        let obs = forward_observables(0.0, 10.0, &p).unwrap();
        assert_eq!(obs.gain, 0.0);
        assert_eq!(obs.qber, p.e0);
    }

    #[test]
    fn forward_observables_monotone_in_distance() {
        let p = ChannelParams::default();
        let mut last = forward_observables(0.5, 0.0, &p).unwrap();
        for i in 1..=60 {
            let obs = forward_observables(0.5, i as f64 * 5.0, &p).unwrap();
            assert!(obs.gain <= last.gain, "gain rose at {} km", i * 5);
            assert!(obs.qber >= last.qber, "qber fell at {} km", i * 5);
            last = obs;
        }
    }

    #[test]
    fn key_rate_error_free_channel() {
        // E = 0, e1 = 0, p1*y1 = Q: R reduces to q*Q.
        let p = ChannelParams::default();
        let obs = Observables {
            gain: 0.2,
            qber: 0.0,
        };
        let r = gllp_key_rate(obs, 0.4, 0.0, 0.5, &p).unwrap();
        assert!(rel_close(r, p.q * 0.2, 1e-12));
    }

    #[test]
    fn key_rate_vacuous_phase_error_is_negative() {
        // H2(0.5) = 1 kills the privacy term, leaving only the EC cost.
        let p = ChannelParams::default();
        let obs = Observables {
            gain: 0.2,
            qber: 0.05,
        };
        let r = gllp_key_rate(obs, 0.4, 0.5, 0.3, &p).unwrap();
        let expected = p.q * (-obs.gain * h2(obs.qber) * p.f_ec);
        assert_eq!(r, expected);
        assert!(r < 0.0);
    }

    #[test]
    fn key_rate_non_increasing_in_e1() {
        let p = ChannelParams::default();
        let obs = Observables {
            gain: 0.19,
            qber: 0.01,
        };
        let mut last = f64::INFINITY;
        for i in 0..=50 {
            let e1 = i as f64 * 0.01;
            let r = gllp_key_rate(obs, 0.4, e1, 0.3, &p).unwrap();
            assert!(r <= last, "rate rose at e1 = {e1}");
            last = r;
        }
    }

    #[test]
    fn key_rate_rejects_out_of_range() {
        let p = ChannelParams::default();
        let obs = Observables {
            gain: 0.2,
            qber: 0.01,
        };
        assert!(gllp_key_rate(obs, -0.1, 0.0, 0.3, &p).is_err());
        assert!(gllp_key_rate(obs, 0.4, 1.5, 0.3, &p).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ChannelParams::default().validate().is_ok());
        let bad = ChannelParams {
            nu: 0.6,
            ..ChannelParams::default()
        };
        let err = bad.validate().unwrap_err().to_string();
        assert!(err.contains("mu") && err.contains("nu"), "message: {err}");
        let bad = ChannelParams {
            f_ec: 0.9,
            ..ChannelParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = ChannelParams {
            eta_det: 0.0,
            ..ChannelParams::default()
        };
        assert!(bad.validate().is_err());
    }
}
