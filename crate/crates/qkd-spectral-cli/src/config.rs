//! Flat `key = value` run configuration.
//!
//! Unset keys fall back to the defaults listed in the README; unknown keys
//! are rejected. Relative paths are resolved against the directory holding
//! the config file.

use std::path::{Path, PathBuf};

use qkd_spectral::{ChannelParams, DistinguishabilityModel, LooseningModel, Solver, SolverOptions};

use crate::CliError;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub channel: ChannelParams,
    /// Trojan photons per pulse entering the transmitter (example scale 1e8).
    pub injected_photons: f64,
    pub reflectivity: f64,
    pub isolation_file: Option<PathBuf>,
    /// How many times Trojan light crosses the isolation chain (2 = in+out).
    pub isolation_passes: u32,
    pub d_model: DistinguishabilityModel,
    pub loosening: LooseningModel,
    pub l_max_km: f64,
    pub step_km: f64,
    pub tol_km: f64,
    pub noise_floor_dbm: f64,
    pub min_separation_nm: f64,
    pub peak_window_nm: f64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let opts = SolverOptions::default();
        RunConfig {
            channel: ChannelParams::default(),
            injected_photons: 1e8,
            reflectivity: 1.0,
            isolation_file: None,
            isolation_passes: 2,
            d_model: opts.d_model,
            loosening: opts.loosening,
            l_max_km: opts.l_max_km,
            step_km: opts.step_km,
            tol_km: opts.tol_km,
            noise_floor_dbm: qkd_spectral::spectra::DEFAULT_NOISE_FLOOR_DBM,
            min_separation_nm: 0.5,
            peak_window_nm: qkd_spectral::spectra::DEFAULT_PEAK_WINDOW_NM,
            out_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        parse(&text, base)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            d_model: self.d_model,
            loosening: self.loosening,
            l_max_km: self.l_max_km,
            step_km: self.step_km,
            tol_km: self.tol_km,
        }
    }

    pub fn solver(&self) -> Result<Solver, CliError> {
        Ok(Solver::with_options(self.channel, self.solver_options())?)
    }
}

pub fn parse(text: &str, base_dir: &Path) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::input(format!("config line {line_no}: expected `key = value`"))
        })?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "alpha_db_per_km" => cfg.channel.alpha_db_per_km = num(key, value, line_no)?,
            "eta_det" => cfg.channel.eta_det = num(key, value, line_no)?,
            "e_det" => cfg.channel.e_det = num(key, value, line_no)?,
            "y0" => cfg.channel.y0 = num(key, value, line_no)?,
            "e0" => cfg.channel.e0 = num(key, value, line_no)?,
            "f_ec" => cfg.channel.f_ec = num(key, value, line_no)?,
            "q" => cfg.channel.q = num(key, value, line_no)?,
            "mu" => cfg.channel.mu = num(key, value, line_no)?,
            "nu" => cfg.channel.nu = num(key, value, line_no)?,
            "injected_photons" => cfg.injected_photons = num(key, value, line_no)?,
            "reflectivity" => cfg.reflectivity = num(key, value, line_no)?,
            "isolation_file" => cfg.isolation_file = Some(base_dir.join(value)),
            "isolation_passes" => {
                cfg.isolation_passes = value.parse().map_err(|_| {
                    CliError::input(format!(
                        "config line {line_no}: isolation_passes must be a positive integer, got `{value}`"
                    ))
                })?
            }
            "d_model" => cfg.d_model = parse_d_model(value, line_no)?,
            "loosening" => {
                cfg.loosening = match value {
                    "decoy-estimate" => LooseningModel::DecoyEstimate,
                    "additive-slack" => LooseningModel::AdditiveSlack,
                    _ => {
                        return Err(CliError::input(format!(
                            "config line {line_no}: loosening must be `decoy-estimate` or `additive-slack`, got `{value}`"
                        )))
                    }
                }
            }
            "l_max_km" => cfg.l_max_km = num(key, value, line_no)?,
            "step_km" => cfg.step_km = num(key, value, line_no)?,
            "tol_km" => cfg.tol_km = num(key, value, line_no)?,
            "noise_floor_dbm" => cfg.noise_floor_dbm = num(key, value, line_no)?,
            "min_separation_nm" => cfg.min_separation_nm = num(key, value, line_no)?,
            "peak_window_nm" => cfg.peak_window_nm = num(key, value, line_no)?,
            "out_dir" => cfg.out_dir = base_dir.join(value),
            _ => {
                return Err(CliError::input(format!(
                    "config line {line_no}: unknown key `{key}`"
                )))
            }
        }
    }
    Ok(cfg)
}

fn parse_d_model(value: &str, line_no: usize) -> Result<DistinguishabilityModel, CliError> {
    match value {
        "worst-phase" => Ok(DistinguishabilityModel::WorstCasePhase),
        "aligned-phase" => Ok(DistinguishabilityModel::AlignedPhase),
        "none" => Ok(DistinguishabilityModel::None),
        _ => {
            if let Some(rest) = value.strip_prefix("constant:") {
                let d = rest.trim().parse().map_err(|_| {
                    CliError::input(format!(
                        "config line {line_no}: constant distinguishability is not a number: `{rest}`"
                    ))
                })?;
                Ok(DistinguishabilityModel::Constant(d))
            } else {
                Err(CliError::input(format!(
                    "config line {line_no}: d_model must be `worst-phase`, `aligned-phase`, `none` or `constant:<D>`, got `{value}`"
                )))
            }
        }
    }
}

fn num(key: &str, value: &str, line_no: usize) -> Result<f64, CliError> {
    value.parse().map_err(|_| {
        CliError::input(format!(
            "config line {line_no}: {key} is not a number: `{value}`"
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_survive_empty_config() {
        let cfg = parse("", Path::new(".")).unwrap();
        assert_eq!(cfg.channel, ChannelParams::default());
        assert_eq!(cfg.isolation_passes, 2);
        assert!(cfg.isolation_file.is_none());
    }

    #[test]
    fn parses_keys_and_comments() {
        let text = "# channel\nmu = 0.6\nnu=0.2  # decoy\n\nd_model = aligned-phase\nisolation_file = iso.csv\n";
        let cfg = parse(text, Path::new("/tmp/base")).unwrap();
        assert_eq!(cfg.channel.mu, 0.6);
        assert_eq!(cfg.channel.nu, 0.2);
        assert_eq!(cfg.d_model, DistinguishabilityModel::AlignedPhase);
        assert_eq!(cfg.isolation_file.unwrap(), Path::new("/tmp/base/iso.csv"));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_numbers() {
        assert!(parse("bogus = 1\n", Path::new(".")).is_err());
        assert!(parse("mu = abc\n", Path::new(".")).is_err());
        assert!(parse("mu 0.5\n", Path::new(".")).is_err());
        assert!(parse("loosening = magic\n", Path::new(".")).is_err());
    }

    #[test]
    fn parses_constant_d_model() {
        let cfg = parse("d_model = constant:1e-6\n", Path::new(".")).unwrap();
        assert_eq!(cfg.d_model, DistinguishabilityModel::Constant(1e-6));
    }
}
