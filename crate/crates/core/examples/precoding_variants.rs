//! Compares the strongest-user and SVD equivalent channels on the same
//! realizations: conditioning, residual leakage and equal-power sum rate.
//!
//! cargo run --release --example precoding_variants

use beamspace_noma::channel::{lens_transform_matrix, ChannelParams, ChannelRealization};
use beamspace_noma::pipeline::NomaLink;
use beamspace_noma::precoding::EquivalentVariant;
use beamspace_noma::rates::LinkBudget;
use beamspace_noma::rng::trial_seed;

fn main() -> beamspace_noma::Result<()> {
    let params = ChannelParams {
        antennas: 64,
        users: 16,
        ..ChannelParams::default()
    };
    let lens = lens_transform_matrix(params.antennas)?;
    let budget = LinkBudget::from_snr_db(32.0, 10.0)?;

    println!("trial  variant    cond(H_eq)  reordered  leak/own   R_sum(P/K)");
    for t in 0..5 {
        let r = ChannelRealization::sample(&params, &lens, trial_seed(3, t))?;
        for variant in [EquivalentVariant::StrongestUser, EquivalentVariant::Svd] {
            let link = NomaLink::build(&r.beamspace, variant)?;
            // interference a user sees from other beams, relative to its own beam
            let g = &link.gains.power;
            let leak: f64 = (0..link.users())
                .map(|k| {
                    let own = g[(k, link.grouping.beam_of(k))];
                    (0..link.n_rf()).filter(|&j| j != link.grouping.beam_of(k)).map(|j| g[(k, j)]).sum::<f64>() / own
                })
                .sum::<f64>()
                / link.users() as f64;
            let rate = link.rates(&link.equal_powers(budget.total_power), &budget).sum_rate;
            println!(
                "{t:5}  {:<9} {:11.2}  {:9}  {:8.2e}  {rate:10.3}",
                variant.as_str(),
                link.precoder.condition,
                link.reordered,
                leak
            );
        }
    }
    Ok(())
}
