//! Runs a small user-count sweep from a flat config text and writes the
//! record CSV and JSON summary to the temp directory.
//!
//! cargo run --release --example harness_sweep

use beamspace_noma::harness::{run_to_files, Mode, SystemConfig};

const CONFIG: &str = "
# desk-scale K sweep
antennas = 64
users = 4, 8, 16
snr = 10
trials = 30
seed = 42
schemes = noma, beamspace-mimo
";

fn main() -> beamspace_noma::Result<()> {
    let config = SystemConfig::from_str_with_defaults(CONFIG)?;
    let out = std::env::temp_dir().join("beamspace_noma_users.csv");
    let (result, paths) = run_to_files(&config, Mode::SweepUsers, &out)?;
    println!("{} records -> {}", result.records.len(), paths.records.display());
    println!("summary    -> {}", paths.summary.display());
    for row in &result.summary {
        println!("K={:2} {:<14} mean SE {:.3} (dropped {})", row.k, row.scheme, row.mean_se, row.dropped);
    }
    Ok(())
}
