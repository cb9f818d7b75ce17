//! Maximum-magnitude beam selection and NOMA grouping at the default
//! 256-antenna, 32-user scale, plus the empirical beam-conflict rate.
//!
//! cargo run --release --example beam_grouping

use beamspace_noma::beams::{group_users, select_beams};
use beamspace_noma::channel::{lens_transform_matrix, ChannelParams, ChannelRealization};
use beamspace_noma::rng::trial_seed;

fn main() -> beamspace_noma::Result<()> {
    let params = ChannelParams::default();
    let lens = lens_transform_matrix(params.antennas)?;

    let r = ChannelRealization::sample(&params, &lens, trial_seed(1, 0))?;
    let assignment = select_beams(&r.beamspace)?;
    let grouping = group_users(&assignment, &r.beamspace)?;
    println!("{} users on {} beams", grouping.users(), grouping.n_rf());
    for (n, set) in grouping.members.iter().enumerate().filter(|(_, s)| s.len() > 1) {
        let norms: Vec<String> = set.iter().map(|&k| format!("u{k}:{:.2}", grouping.reduced[k].norm())).collect();
        println!("  beam {:3} shared by {}", grouping.selected[n], norms.join(" "));
    }

    let trials = 2000;
    let mut conflicts = 0;
    let mut chains = 0;
    for t in 0..trials {
        let r = ChannelRealization::sample(&params, &lens, trial_seed(1, t))?;
        let a = select_beams(&r.beamspace)?;
        conflicts += usize::from(a.has_conflict());
        chains += a.n_rf();
    }
    println!(
        "over {trials} trials: {:.1}% have a beam conflict, mean N_RF = {:.2}",
        100.0 * conflicts as f64 / trials as f64,
        chains as f64 / trials as f64
    );
    Ok(())
}
