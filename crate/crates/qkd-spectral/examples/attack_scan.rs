//! Full pipeline in library form: synthesize a wavelength-converted comb,
//! derive per-wavelength Trojan budgets against a sloped isolation profile,
//! and map the maximum secure distance per wavelength.
//!
//! Run with `cargo run --example attack_scan --release`.

use qkd_spectral::spectra::{
    conversion_fractions, detect_peaks, synthesize_comb, CombSpec, IsolationProfile,
};
use qkd_spectral::tha::compute_budget;
use qkd_spectral::{ChannelParams, Solver};

fn main() -> qkd_spectral::Result<()> {
    // A 1550.7 nm pump split into a comb with 1 nm line spacing. The pump
    // trace is sampled with a 3 nm margin so it covers the comb's peak
    // windows, as conversion_fractions requires.
    let pump = synthesize_comb(&CombSpec {
        n_side: 0,
        spacing_nm: 3.0,
        center_power_dbm: 0.0,
        ..CombSpec::default()
    })?;
    let comb = synthesize_comb(&CombSpec {
        n_side: 2,
        center_power_dbm: -3.0,
        decay_db_per_line: 9.0,
        ..CombSpec::default()
    })?;

    // Isolation of the attenuator+isolator chain, weaker at short
    // wavelengths; crossed twice (in and out).
    let isolation = IsolationProfile::from_points(vec![(1547.0, 95.0), (1554.0, 101.0)])?;

    let peaks = detect_peaks(&comb, -60.0, 0.5)?;
    let injected_photons = 1e8;
    let mut budgets = Vec::new();
    for (wavelength_nm, fraction) in conversion_fractions(&pump, &comb, &peaks)? {
        budgets.push(compute_budget(
            injected_photons,
            wavelength_nm,
            fraction,
            &isolation,
            1.0,
            2,
        )?);
    }

    let solver = Solver::new(ChannelParams::default())?;
    let map = solver.distance_map(&budgets)?;

    println!("baseline: {:.2} km", map.baseline_max_km);
    for entry in &map.entries {
        println!(
            "{:9.3} nm  mu_out {:.3e}  max {:.2} km",
            entry.wavelength_nm, entry.mu_out, entry.max_km
        );
    }
    println!(
        "worst wavelength {:.3} nm keeps {:.1}% of the baseline distance",
        map.min_wavelength_nm,
        100.0 * map.ratio
    );
    Ok(())
}
