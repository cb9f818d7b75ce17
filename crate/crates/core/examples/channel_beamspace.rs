//! Draws one multipath realization and shows how the lens array
//! concentrates each user's energy on a few beams.
//!
//! cargo run --example channel_beamspace

use beamspace_noma::channel::{lens_transform_matrix, ChannelParams, ChannelRealization};
use beamspace_noma::rng::trial_seed;

fn main() -> beamspace_noma::Result<()> {
    let params = ChannelParams {
        antennas: 64,
        users: 4,
        ..ChannelParams::default()
    };
    let lens = lens_transform_matrix(params.antennas)?;
    let r = ChannelRealization::sample(&params, &lens, trial_seed(7, 0))?;

    for (k, user) in r.users.iter().enumerate() {
        println!("user {k}");
        for (l, path) in user.paths.iter().enumerate() {
            let kind = if l == 0 { "LoS " } else { "NLoS" };
            println!("  {kind} theta = {:+.4}  |beta|^2 = {:.3}", path.direction, path.gain.norm_sqr());
        }
        let column = r.beamspace.matrix.column(k);
        let mut energy: Vec<(f64, usize)> = column.iter().enumerate().map(|(b, z)| (z.norm_sqr(), b)).collect();
        energy.sort_by(|a, b| b.0.total_cmp(&a.0));
        let total: f64 = energy.iter().map(|e| e.0).sum();
        let top4: f64 = energy.iter().take(4).map(|e| e.0).sum();
        println!(
            "  strongest beam {} ({:.1}% of energy), 4 strongest beams {:.1}%",
            energy[0].1,
            100.0 * energy[0].0 / total,
            100.0 * top4 / total
        );
    }
    println!("realization fingerprint {:016x}", r.fingerprint());
    Ok(())
}
