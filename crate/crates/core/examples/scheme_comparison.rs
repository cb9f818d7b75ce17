//! Spectral and energy efficiency of the four schemes on paired trials.
//!
//! cargo run --release --example scheme_comparison

use beamspace_noma::harness::{sweep, Mode, SystemConfig};

fn main() -> beamspace_noma::Result<()> {
    let config = SystemConfig {
        antennas: 128,
        users: vec![16],
        snr: "0:20:10".parse()?,
        trials: 40,
        ..SystemConfig::default()
    };
    let result = sweep(&config, Mode::SweepSnr)?;
    println!("snr_db  scheme          SE (bps/Hz)       EE (bps/Hz/W)");
    for row in &result.summary {
        println!(
            "{:6.1}  {:<14} {:7.3} +- {:5.3}  {:8.3} +- {:5.3}",
            row.snr_db, row.scheme, row.mean_se, row.stderr_se, row.mean_ee, row.stderr_ee
        );
    }
    Ok(())
}
