//! Optical-spectrum handling: CSV ingestion, comb synthesis, peak detection,
//! conversion fractions and device isolation profiles.
//!
//! Spectrum CSV contract (bit-exact): UTF-8, first line
//! `wavelength_nm,power_dbm`, each following line two decimal fields
//! separated by a comma, wavelengths strictly increasing, LF or CRLF line
//! endings, no thousands separators. Isolation files use the header
//! `wavelength_nm,attenuation_db` with the same conventions.
//!
//! In-band powers are integrated trapezoidally in linear units and
//! normalized to the sampling resolution, so an integrated value is the
//! resolution-weighted sum of the in-window sample powers (mW).

use crate::error::{Error, Result};

/// Header line of a spectrum CSV.
pub const SPECTRUM_CSV_HEADER: &str = "wavelength_nm,power_dbm";
/// Header line of an isolation-profile CSV.
pub const ISOLATION_CSV_HEADER: &str = "wavelength_nm,attenuation_db";
/// OSA sensitivity floor used when none is configured, dBm.
pub const DEFAULT_NOISE_FLOOR_DBM: f64 = -65.0;
/// Full width of the integration window placed around each peak, nm.
pub const DEFAULT_PEAK_WINDOW_NM: f64 = 0.4;

/// Convert log-power (dBm) to linear power (mW).
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Convert linear power (mW) to log-power (dBm).
pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Fixed numeric formatting for emitted CSV bodies: nine significant digits,
/// scientific notation, `.` decimal separator regardless of locale.
pub fn csv_number(x: f64) -> String {
    format!("{x:.8e}")
}

/// An ordered wavelength/power trace as produced by an optical spectrum
/// analyzer.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    samples: Vec<(f64, f64)>,
    resolution_pm: f64,
}

impl Spectrum {
    /// Build a spectrum from `(wavelength_nm, power_dbm)` samples. The
    /// sampling resolution is inferred as the median wavelength step.
    pub fn from_samples(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::domain(format!(
                "spectrum needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        for (i, &(w, p)) in samples.iter().enumerate() {
            if !w.is_finite() || !p.is_finite() {
                return Err(Error::domain(format!(
                    "spectrum sample {i} is not finite: ({w}, {p})"
                )));
            }
            if i > 0 && w <= samples[i - 1].0 {
                return Err(Error::Ordering {
                    line: i + 1,
                    msg: format!("wavelength {w} does not increase past {}", samples[i - 1].0),
                });
            }
        }
        let mut gaps: Vec<f64> = samples.windows(2).map(|w| w[1].0 - w[0].0).collect();
        gaps.sort_by(|a, b| a.total_cmp(b));
        let resolution_pm = gaps[gaps.len() / 2] * 1000.0;
        Ok(Spectrum {
            samples,
            resolution_pm,
        })
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires at least 2 samples
    }

    /// Sampling resolution in picometres.
    pub fn resolution_pm(&self) -> f64 {
        self.resolution_pm
    }

    pub fn min_nm(&self) -> f64 {
        self.samples[0].0
    }

    pub fn max_nm(&self) -> f64 {
        self.samples[self.samples.len() - 1].0
    }

    /// Power at an arbitrary wavelength by linear interpolation in dBm.
    pub fn power_dbm_at(&self, wavelength_nm: f64) -> Result<f64> {
        if wavelength_nm < self.min_nm() || wavelength_nm > self.max_nm() {
            return Err(Error::OutOfRange {
                wavelength_nm,
                min_nm: self.min_nm(),
                max_nm: self.max_nm(),
            });
        }
        let idx = self.samples.partition_point(|&(w, _)| w <= wavelength_nm);
        if idx == self.samples.len() {
            return Ok(self.samples[idx - 1].1);
        }
        if idx == 0 {
            return Ok(self.samples[0].1);
        }
        let (w0, p0) = self.samples[idx - 1];
        let (w1, p1) = self.samples[idx];
        let t = (wavelength_nm - w0) / (w1 - w0);
        Ok(p0 + t * (p1 - p0))
    }

    /// In-band power: trapezoidal integral of the linear power over
    /// `[lo_nm, hi_nm]` (clipped to the trace), normalized to the sampling
    /// resolution. Units mW.
    pub fn band_power_mw(&self, lo_nm: f64, hi_nm: f64) -> f64 {
        let lo = lo_nm.max(self.min_nm());
        let hi = hi_nm.min(self.max_nm());
        if lo > hi {
            return 0.0;
        }
        let start = self.samples.partition_point(|&(w, _)| w < lo);
        let end = self.samples.partition_point(|&(w, _)| w <= hi);
        let slice = &self.samples[start..end];
        match slice.len() {
            0 => 0.0,
            1 => dbm_to_mw(slice[0].1),
            _ => {
                let mut area = 0.0;
                for pair in slice.windows(2) {
                    let (w0, p0) = pair[0];
                    let (w1, p1) = pair[1];
                    area += 0.5 * (dbm_to_mw(p0) + dbm_to_mw(p1)) * (w1 - w0);
                }
                area / (self.resolution_pm / 1000.0)
            }
        }
    }

    /// Total in-band power of the whole trace, mW.
    pub fn total_power_mw(&self) -> f64 {
        self.band_power_mw(self.min_nm(), self.max_nm())
    }

    /// Pointwise maximum of two traces on an identical wavelength grid
    /// (hold-max combination of repeated sweeps).
    pub fn max_combine(&self, other: &Spectrum) -> Result<Spectrum> {
        if self.samples.len() != other.samples.len()
            || self
                .samples
                .iter()
                .zip(&other.samples)
                .any(|(a, b)| a.0 != b.0)
        {
            return Err(Error::domain(
                "max_combine requires identical wavelength grids".to_string(),
            ));
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(&(w, p0), &(_, p1))| (w, p0.max(p1)))
            .collect();
        Ok(Spectrum {
            samples,
            resolution_pm: self.resolution_pm,
        })
    }

    /// Render the trace in the spectrum CSV format.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.samples.len() + 1));
        out.push_str(SPECTRUM_CSV_HEADER);
        out.push('\n');
        for &(w, p) in &self.samples {
            out.push_str(&csv_number(w));
            out.push(',');
            out.push_str(&csv_number(p));
            out.push('\n');
        }
        out
    }
}

/// One detected spectral line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    /// Wavelength of the maximal sample, nm.
    pub center_nm: f64,
    /// Height of that sample, dBm.
    pub height_dbm: f64,
    /// In-band power over the window around the center, mW.
    pub integrated_mw: f64,
    /// Full width of the integration window, nm.
    pub window_nm: f64,
}

/// Detected peaks, ordered by center wavelength.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PeakSet {
    pub peaks: Vec<Peak>,
}

impl PeakSet {
    pub fn centers(&self) -> Vec<f64> {
        self.peaks.iter().map(|p| p.center_nm).collect()
    }
}

/// Detect peaks with the default +-0.2 nm integration window.
pub fn detect_peaks(
    spectrum: &Spectrum,
    noise_floor_dbm: f64,
    min_separation_nm: f64,
) -> Result<PeakSet> {
    detect_peaks_with_window(
        spectrum,
        noise_floor_dbm,
        min_separation_nm,
        DEFAULT_PEAK_WINDOW_NM,
    )
}

/// Local maxima above the noise floor, greedily merged left to right when
/// closer than `min_separation_nm` (the taller line survives), each carrying
/// the in-band power over `window_nm` around its center.
pub fn detect_peaks_with_window(
    spectrum: &Spectrum,
    noise_floor_dbm: f64,
    min_separation_nm: f64,
    window_nm: f64,
) -> Result<PeakSet> {
    if !min_separation_nm.is_finite() || min_separation_nm <= 0.0 {
        return Err(Error::domain(format!(
            "min_separation_nm must be > 0, got {min_separation_nm}"
        )));
    }
    if !window_nm.is_finite() || window_nm <= 0.0 {
        return Err(Error::domain(format!(
            "window_nm must be > 0, got {window_nm}"
        )));
    }
    let s = spectrum.samples();
    let mut candidates: Vec<(f64, f64)> = Vec::new();
    for i in 1..s.len() - 1 {
        let (w, p) = s[i];
        if p > noise_floor_dbm && p > s[i - 1].1 && p >= s[i + 1].1 {
            candidates.push((w, p));
        }
    }
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (w, p) in candidates {
        match merged.last() {
            Some(&(lw, lp)) if w - lw < min_separation_nm => {
                if p > lp {
                    *merged.last_mut().unwrap() = (w, p);
                }
            }
            _ => merged.push((w, p)),
        }
    }
    let peaks = merged
        .into_iter()
        .map(|(center_nm, height_dbm)| Peak {
            center_nm,
            height_dbm,
            integrated_mw: spectrum
                .band_power_mw(center_nm - window_nm / 2.0, center_nm + window_nm / 2.0),
            window_nm,
        })
        .collect();
    Ok(PeakSet { peaks })
}

/// Fraction of the injected power emerging in each output peak:
/// in-band output power over the peak window divided by the total in-band
/// power of the input trace. Fractions are clamped to [0, 1].
///
/// Both traces must cover every peak window.
pub fn conversion_fractions(
    input_com: &Spectrum,
    output_pass: &Spectrum,
    peaks: &PeakSet,
) -> Result<Vec<(f64, f64)>> {
    let total_in = input_com.total_power_mw();
    let mut out = Vec::with_capacity(peaks.peaks.len());
    for peak in &peaks.peaks {
        let lo = peak.center_nm - peak.window_nm / 2.0;
        let hi = peak.center_nm + peak.window_nm / 2.0;
        for s in [input_com, output_pass] {
            if lo < s.min_nm() || hi > s.max_nm() {
                return Err(Error::OutOfRange {
                    wavelength_nm: peak.center_nm,
                    min_nm: s.min_nm() + peak.window_nm / 2.0,
                    max_nm: s.max_nm() - peak.window_nm / 2.0,
                });
            }
        }
        let fraction = (output_pass.band_power_mw(lo, hi) / total_in).clamp(0.0, 1.0);
        out.push((peak.center_nm, fraction));
    }
    Ok(out)
}

/// Wavelength-dependent attenuation, linearly interpolated between points.
#[derive(Debug, Clone, PartialEq)]
pub struct IsolationProfile {
    points: Vec<(f64, f64)>,
}

impl IsolationProfile {
    /// Build a profile from `(wavelength_nm, attenuation_db)` points.
    pub fn from_points(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("isolation profile has no points".to_string()));
        }
        for (i, &(w, a)) in points.iter().enumerate() {
            if !w.is_finite() || !a.is_finite() {
                return Err(Error::domain(format!(
                    "isolation point {i} is not finite: ({w}, {a})"
                )));
            }
            if a < 0.0 {
                return Err(Error::domain(format!(
                    "attenuation must be >= 0 dB, got {a} at {w} nm"
                )));
            }
            if i > 0 && w <= points[i - 1].0 {
                return Err(Error::Ordering {
                    line: i + 1,
                    msg: format!("wavelength {w} does not increase past {}", points[i - 1].0),
                });
            }
        }
        Ok(IsolationProfile { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn min_nm(&self) -> f64 {
        self.points[0].0
    }

    pub fn max_nm(&self) -> f64 {
        self.points[self.points.len() - 1].0
    }

    /// Attenuation at a wavelength inside the covered range.
    pub fn attenuation_db_at(&self, wavelength_nm: f64) -> Result<f64> {
        if wavelength_nm < self.min_nm() || wavelength_nm > self.max_nm() {
            return Err(Error::OutOfRange {
                wavelength_nm,
                min_nm: self.min_nm(),
                max_nm: self.max_nm(),
            });
        }
        let idx = self.points.partition_point(|&(w, _)| w <= wavelength_nm);
        if idx == self.points.len() {
            return Ok(self.points[idx - 1].1);
        }
        if idx == 0 {
            return Ok(self.points[0].1);
        }
        let (w0, a0) = self.points[idx - 1];
        let (w1, a1) = self.points[idx];
        let t = (wavelength_nm - w0) / (w1 - w0);
        Ok(a0 + t * (a1 - a0))
    }

    /// Render the profile in the isolation CSV format.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.points.len() + 1));
        out.push_str(ISOLATION_CSV_HEADER);
        out.push('\n');
        for &(w, a) in &self.points {
            out.push_str(&csv_number(w));
            out.push(',');
            out.push_str(&csv_number(a));
            out.push('\n');
        }
        out
    }
}

/// Result of a with/without-device comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct IsolationEstimate {
    pub profile: IsolationProfile,
    /// Number of grid points where the raw difference was negative and got
    /// clamped to 0 dB.
    pub clamped_points: usize,
}

/// Isolation of a device from a spectral pair measured with and without it:
/// `attenuation_db(w) = power_without(w) - power_with(w)` on the overlap of
/// the two traces (the without-device grid), negatives clamped to 0.
pub fn isolation_from_pair(
    without_dut: &Spectrum,
    with_dut: &Spectrum,
) -> Result<IsolationEstimate> {
    let lo = without_dut.min_nm().max(with_dut.min_nm());
    let hi = without_dut.max_nm().min(with_dut.max_nm());
    if lo >= hi {
        return Err(Error::NoOverlap(format!(
            "[{}, {}] nm and [{}, {}] nm are disjoint",
            without_dut.min_nm(),
            without_dut.max_nm(),
            with_dut.min_nm(),
            with_dut.max_nm()
        )));
    }
    let mut points = Vec::new();
    let mut clamped = 0usize;
    for &(w, p_without) in without_dut.samples() {
        if w < lo || w > hi {
            continue;
        }
        let p_with = with_dut.power_dbm_at(w)?;
        let mut att = p_without - p_with;
        if att < 0.0 {
            att = 0.0;
            clamped += 1;
        }
        points.push((w, att));
    }
    if points.len() < 2 {
        return Err(Error::NoOverlap(
            "fewer than 2 shared grid points".to_string(),
        ));
    }
    Ok(IsolationEstimate {
        profile: IsolationProfile::from_points(points)?,
        clamped_points: clamped,
    })
}

/// Parameters of a synthetic comb-like spectrum: Gaussian lines at
/// `center +- k * spacing` for `k = 0..=n_side`, the k-th pair lowered by
/// `k * decay_db_per_line`, superposed on a flat noise floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombSpec {
    pub center_nm: f64,
    pub spacing_nm: f64,
    /// Number of side-line pairs on each side of the center line.
    pub n_side: u32,
    pub center_power_dbm: f64,
    pub decay_db_per_line: f64,
    /// Full width at half maximum of each line, nm.
    pub linewidth_nm: f64,
    pub noise_floor_dbm: f64,
    pub resolution_pm: f64,
}

impl Default for CombSpec {
    /// A comb resembling a wavelength-converted 1550.7 nm pump: 1 nm line
    /// spacing, two side pairs 10 dB per line down, 2 pm sampling.
    fn default() -> Self {
        CombSpec {
            center_nm: 1550.7,
            spacing_nm: 1.0,
            n_side: 2,
            center_power_dbm: -5.0,
            decay_db_per_line: 10.0,
            linewidth_nm: 0.05,
            noise_floor_dbm: DEFAULT_NOISE_FLOOR_DBM,
            resolution_pm: 2.0,
        }
    }
}

/// Synthesize the comb described by `comb`, sampled over the line span plus
/// a margin of one spacing (or ten linewidths, whichever is larger).
///
/// ```
/// use qkd_spectral::spectra::{detect_peaks, synthesize_comb, CombSpec};
///
/// let comb = synthesize_comb(&CombSpec::default()).unwrap();
/// let peaks = detect_peaks(&comb, -60.0, 0.5).unwrap();
/// assert_eq!(peaks.peaks.len(), 5); // center line plus two side pairs
/// ```
pub fn synthesize_comb(comb: &CombSpec) -> Result<Spectrum> {
    if [comb.spacing_nm, comb.linewidth_nm, comb.resolution_pm]
        .iter()
        .any(|v| !v.is_finite() || *v <= 0.0)
    {
        return Err(Error::domain(format!(
            "spacing ({}), linewidth ({}) and resolution ({}) must be positive",
            comb.spacing_nm, comb.linewidth_nm, comb.resolution_pm
        )));
    }
    if !comb.decay_db_per_line.is_finite() || comb.decay_db_per_line < 0.0 {
        return Err(Error::domain(format!(
            "decay_db_per_line must be >= 0, got {}",
            comb.decay_db_per_line
        )));
    }
    if !comb.center_power_dbm.is_finite() || !comb.noise_floor_dbm.is_finite() {
        return Err(Error::domain(
            "center_power_dbm and noise_floor_dbm must be finite".to_string(),
        ));
    }
    let margin = comb.spacing_nm.max(10.0 * comb.linewidth_nm);
    let span = comb.n_side as f64 * comb.spacing_nm + margin;
    if !comb.center_nm.is_finite() || comb.center_nm <= span {
        return Err(Error::domain(format!(
            "center_nm ({}) must exceed the synthesized span ({span})",
            comb.center_nm
        )));
    }
    // FWHM -> Gaussian sigma.
    let sigma = comb.linewidth_nm / (2.0 * (2.0 * 2f64.ln()).sqrt());
    let mut lines: Vec<(f64, f64)> = Vec::new();
    for k in 0..=comb.n_side {
        let amp = dbm_to_mw(comb.center_power_dbm - k as f64 * comb.decay_db_per_line);
        if k == 0 {
            lines.push((comb.center_nm, amp));
        } else {
            lines.push((comb.center_nm - k as f64 * comb.spacing_nm, amp));
            lines.push((comb.center_nm + k as f64 * comb.spacing_nm, amp));
        }
    }
    let floor_mw = dbm_to_mw(comb.noise_floor_dbm);
    let res_nm = comb.resolution_pm / 1000.0;
    let start = comb.center_nm - span;
    let n = (2.0 * span / res_nm).floor() as usize + 1;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let w = start + i as f64 * res_nm;
        let mut p = floor_mw;
        for &(c, amp) in &lines {
            let z = (w - c) / sigma;
            p += amp * (-0.5 * z * z).exp();
        }
        samples.push((w, mw_to_dbm(p)));
    }
    Spectrum::from_samples(samples)
}

/// Parse the spectrum CSV format.
pub fn parse_spectrum(text: &str) -> Result<Spectrum> {
    let rows = parse_two_column(text, SPECTRUM_CSV_HEADER)?;
    check_increasing(&rows)?;
    Spectrum::from_samples(rows.into_iter().map(|(_, w, p)| (w, p)).collect())
}

/// Parse the isolation-profile CSV format.
pub fn parse_isolation_profile(text: &str) -> Result<IsolationProfile> {
    let rows = parse_two_column(text, ISOLATION_CSV_HEADER)?;
    check_increasing(&rows)?;
    for &(line, w, a) in &rows {
        if a < 0.0 {
            return Err(Error::Parse {
                line,
                msg: format!("attenuation must be >= 0 dB, got {a} at {w} nm"),
            });
        }
    }
    IsolationProfile::from_points(rows.into_iter().map(|(_, w, a)| (w, a)).collect())
}

fn parse_two_column(text: &str, expected_header: &str) -> Result<Vec<(usize, f64, f64)>> {
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if !saw_header {
            if line != expected_header {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected header `{expected_header}`, got `{line}`"),
                });
            }
            saw_header = true;
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (a, b) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected exactly 2 comma-separated fields, got `{line}`"),
                })
            }
        };
        rows.push((line_no, parse_field(a, line_no)?, parse_field(b, line_no)?));
    }
    if !saw_header {
        return Err(Error::Parse {
            line: 1,
            msg: "empty input".to_string(),
        });
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 2,
            msg: "no data rows".to_string(),
        });
    }
    Ok(rows)
}

fn parse_field(s: &str, line: usize) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("not a number: `{s}`"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("non-finite value: `{s}`"),
        });
    }
    Ok(v)
}

fn check_increasing(rows: &[(usize, f64, f64)]) -> Result<()> {
    for pair in rows.windows(2) {
        if pair[1].1 <= pair[0].1 {
            return Err(Error::Ordering {
                line: pair[1].0,
                msg: format!(
                    "wavelength {} does not increase past {}",
                    pair[1].1, pair[0].1
                ),
            });
        }
    }
    Ok(())
}
