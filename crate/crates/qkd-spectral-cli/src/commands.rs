//! Command implementations: each one binds configuration and input files to
//! the library pipeline and emits plot-ready CSV plus a JSON summary.
//!
//! All numeric CSV fields use the fixed nine-significant-digit scientific
//! form from [`spectra::csv_number`], so repeated runs are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use qkd_spectral::spectra::{self, csv_number, CombSpec};
use qkd_spectral::tha::{compute_budget, ThaBudget};

use crate::config::RunConfig;
use crate::{CliError, PeaksArgs, SynthArgs};

/// curves.csv + summary.json for a list of Trojan intensities.
pub fn keyrate(config: &Path, mu_outs: &[f64], out_dir: Option<&Path>) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let solver = cfg.solver()?;
    let mu_outs: Vec<f64> = if mu_outs.is_empty() {
        vec![0.0]
    } else {
        mu_outs.to_vec()
    };
    let out_dir = resolve_out_dir(&cfg, out_dir)?;

    let rows = solver.rate_curves(&mu_outs)?;
    let mut csv = String::from("mu_out,distance_km,key_rate\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{}\n",
            csv_number(r.mu_out),
            csv_number(r.distance_km),
            csv_number(r.key_rate)
        ));
    }
    let curves_path = out_dir.join("curves.csv");
    fs::write(&curves_path, csv)?;

    let baseline_max_km = solver.max_secure_distance(0.0, 0.0)?;
    let mut results = Vec::with_capacity(mu_outs.len());
    for &mu_out in &mu_outs {
        let d = solver.trace_distance(mu_out)?;
        let max_km = if mu_out == 0.0 && d == 0.0 {
            baseline_max_km
        } else {
            solver.max_secure_distance(mu_out, d)?
        };
        results.push(MuOutResult {
            mu_out,
            max_km,
            ratio: ratio_clamped(max_km, baseline_max_km),
        });
    }
    let worst_ratio = results.iter().map(|r| r.ratio).fold(1.0, f64::min);
    let summary = KeyrateSummary {
        baseline_max_km,
        results,
        ratio: worst_ratio,
    };
    let summary_path = out_dir.join("summary.json");
    fs::write(&summary_path, to_json(&summary)?)?;

    println!("wrote {}", curves_path.display());
    println!("wrote {}", summary_path.display());
    println!("baseline_max_km = {}", csv_number(baseline_max_km));
    println!("ratio = {}", csv_number(worst_ratio));
    Ok(())
}

/// budget.csv from a COM input trace and a Pass output trace.
pub fn budget(
    config: &Path,
    com: &Path,
    pass: &Path,
    out_dir: Option<&Path>,
) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let iso_path = cfg.isolation_file.clone().ok_or_else(|| {
        CliError::input("config does not set isolation_file, required by `budget`")
    })?;
    let iso = spectra::parse_isolation_profile(&read(&iso_path)?)?;
    let com_spectrum = spectra::parse_spectrum(&read(com)?)?;
    let pass_spectrum = spectra::parse_spectrum(&read(pass)?)?;

    let peaks = spectra::detect_peaks_with_window(
        &pass_spectrum,
        cfg.noise_floor_dbm,
        cfg.min_separation_nm,
        cfg.peak_window_nm,
    )?;
    let fractions = spectra::conversion_fractions(&com_spectrum, &pass_spectrum, &peaks)?;

    let out_dir = resolve_out_dir(&cfg, out_dir)?;
    let mut csv = String::from("wavelength_nm,conversion_fraction,roundtrip_isolation_db,mu_out\n");
    for (wavelength_nm, fraction) in fractions {
        let b = compute_budget(
            cfg.injected_photons,
            wavelength_nm,
            fraction,
            &iso,
            cfg.reflectivity,
            cfg.isolation_passes,
        )?;
        csv.push_str(&format!(
            "{},{},{},{}\n",
            csv_number(b.wavelength_nm),
            csv_number(b.conversion_fraction),
            csv_number(b.roundtrip_isolation_db),
            csv_number(b.mu_out)
        ));
    }
    let path = out_dir.join("budget.csv");
    fs::write(&path, csv)?;
    println!("wrote {} ({} peaks)", path.display(), peaks.peaks.len());
    Ok(())
}

/// distmap.csv + distmap.json from a budget table.
pub fn maxdist(config: &Path, budget_csv: &Path, out_dir: Option<&Path>) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let solver = cfg.solver()?;
    let budgets = parse_budget_csv(&read(budget_csv)?, &cfg)?;
    let out_dir = resolve_out_dir(&cfg, out_dir)?;

    let mut csv = String::from("wavelength_nm,mu_out,max_km\n");
    let summary = if budgets.is_empty() {
        // A budget with no rows (all light at the noise floor) leaves only
        // the baseline.
        let baseline_max_km = solver.max_secure_distance(0.0, 0.0)?;
        csv.push_str(&baseline_row(baseline_max_km));
        DistmapSummary {
            baseline_max_km,
            min_max_km: baseline_max_km,
            min_wavelength_nm: 0.0,
            ratio: 1.0,
        }
    } else {
        let map = solver.distance_map(&budgets)?;
        csv.push_str(&baseline_row(map.baseline_max_km));
        for e in &map.entries {
            csv.push_str(&format!(
                "{},{},{}\n",
                csv_number(e.wavelength_nm),
                csv_number(e.mu_out),
                csv_number(e.max_km)
            ));
        }
        DistmapSummary {
            baseline_max_km: map.baseline_max_km,
            min_max_km: map.min_max_km,
            min_wavelength_nm: map.min_wavelength_nm,
            ratio: map.ratio,
        }
    };
    let csv_path = out_dir.join("distmap.csv");
    fs::write(&csv_path, csv)?;
    let json_path = out_dir.join("distmap.json");
    fs::write(&json_path, to_json(&summary)?)?;

    println!("wrote {}", csv_path.display());
    println!("wrote {}", json_path.display());
    println!("ratio_min_to_baseline = {}", csv_number(summary.ratio));
    Ok(())
}

/// The baseline (`mu_out = 0`) row uses wavelength 0 as its marker.
fn baseline_row(baseline_max_km: f64) -> String {
    format!(
        "{},{},{}\n",
        csv_number(0.0),
        csv_number(0.0),
        csv_number(baseline_max_km)
    )
}

pub fn spectra_synth(args: &SynthArgs) -> Result<(), CliError> {
    let spec = CombSpec {
        center_nm: args.center_nm,
        spacing_nm: args.spacing_nm,
        n_side: args.lines_per_side,
        center_power_dbm: args.center_power_dbm,
        decay_db_per_line: args.decay_db_per_line,
        linewidth_nm: args.linewidth_nm,
        noise_floor_dbm: args.noise_floor_dbm,
        resolution_pm: args.resolution_pm,
    };
    let s = spectra::synthesize_comb(&spec)?;
    fs::write(&args.out, s.to_csv())?;
    println!("wrote {} ({} samples)", args.out.display(), s.len());
    Ok(())
}

pub fn spectra_peaks(args: &PeaksArgs) -> Result<(), CliError> {
    let s = spectra::parse_spectrum(&read(&args.input)?)?;
    let peaks = spectra::detect_peaks_with_window(
        &s,
        args.noise_floor_dbm,
        args.min_separation_nm,
        args.window_nm,
    )?;
    let mut csv = String::from("center_nm,height_dbm,integrated_mw,window_nm\n");
    for p in &peaks.peaks {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            csv_number(p.center_nm),
            csv_number(p.height_dbm),
            csv_number(p.integrated_mw),
            csv_number(p.window_nm)
        ));
    }
    fs::write(&args.out, csv)?;
    println!("wrote {} ({} peaks)", args.out.display(), peaks.peaks.len());
    Ok(())
}

pub fn spectra_isolation(without_dut: &Path, with_dut: &Path, out: &Path) -> Result<(), CliError> {
    let without = spectra::parse_spectrum(&read(without_dut)?)?;
    let with = spectra::parse_spectrum(&read(with_dut)?)?;
    let est = spectra::isolation_from_pair(&without, &with)?;
    if est.clamped_points > 0 {
        eprintln!(
            "warning: {} points had negative attenuation and were clamped to 0 dB",
            est.clamped_points
        );
    }
    fs::write(out, est.profile.to_csv())?;
    println!(
        "wrote {} ({} points)",
        out.display(),
        est.profile.points().len()
    );
    Ok(())
}

#[derive(Serialize)]
struct KeyrateSummary {
    baseline_max_km: f64,
    results: Vec<MuOutResult>,
    /// Smallest ratio across the requested intensities.
    ratio: f64,
}

#[derive(Serialize)]
struct MuOutResult {
    mu_out: f64,
    max_km: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct DistmapSummary {
    baseline_max_km: f64,
    min_max_km: f64,
    min_wavelength_nm: f64,
    ratio: f64,
}

fn ratio_clamped(max_km: f64, baseline_km: f64) -> f64 {
    if baseline_km > 0.0 {
        (max_km / baseline_km).clamp(0.0, 1.0)
    } else {
        1.0
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::input(format!("cannot serialize summary: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

fn resolve_out_dir(cfg: &RunConfig, flag: Option<&Path>) -> Result<PathBuf, CliError> {
    let dir = flag
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.out_dir.clone());
    fs::create_dir_all(&dir)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn parse_budget_csv(text: &str, cfg: &RunConfig) -> Result<Vec<ThaBudget>, CliError> {
    const HEADER: &str = "wavelength_nm,conversion_fraction,roundtrip_isolation_db,mu_out";
    let mut budgets = Vec::new();
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if !saw_header {
            if line != HEADER {
                return Err(CliError::input(format!(
                    "budget line 1: expected header `{HEADER}`"
                )));
            }
            saw_header = true;
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(CliError::input(format!(
                "budget line {line_no}: expected 4 fields, got {}",
                fields.len()
            )));
        }
        let mut vals = [0.0f64; 4];
        for (v, f) in vals.iter_mut().zip(&fields) {
            *v = f.trim().parse().map_err(|_| {
                CliError::input(format!("budget line {line_no}: not a number: `{f}`"))
            })?;
            if !v.is_finite() {
                return Err(CliError::input(format!(
                    "budget line {line_no}: non-finite value `{f}`"
                )));
            }
        }
        if vals[3] < 0.0 {
            return Err(CliError::input(format!(
                "budget line {line_no}: mu_out must be >= 0, got {}",
                vals[3]
            )));
        }
        budgets.push(ThaBudget {
            wavelength_nm: vals[0],
            injected_photons: cfg.injected_photons,
            conversion_fraction: vals[1],
            roundtrip_isolation_db: vals[2],
            reflectivity: cfg.reflectivity,
            mu_out: vals[3],
        });
    }
    if !saw_header {
        return Err(CliError::input("budget file is empty"));
    }
    Ok(budgets)
}
