//! Iterative power allocation on one realization: the sum-rate trace, the
//! resulting per-beam powers, and the same run with a 1 bps/Hz minimum rate.
//!
//! cargo run --release --example power_allocation

use beamspace_noma::channel::{lens_transform_matrix, ChannelParams, ChannelRealization};
use beamspace_noma::pipeline::NomaLink;
use beamspace_noma::power::OptimizerConfig;
use beamspace_noma::precoding::EquivalentVariant;
use beamspace_noma::rates::{beam_powers, LinkBudget};
use beamspace_noma::rng::trial_seed;

fn main() -> beamspace_noma::Result<()> {
    let params = ChannelParams {
        antennas: 64,
        users: 12,
        ..ChannelParams::default()
    };
    let lens = lens_transform_matrix(params.antennas)?;
    let r = ChannelRealization::sample(&params, &lens, trial_seed(5, 2))?;
    let link = NomaLink::build(&r.beamspace, EquivalentVariant::StrongestUser)?;

    let budget = LinkBudget::from_snr_db(32.0, 10.0)?;
    let equal = link.rates(&link.equal_powers(budget.total_power), &budget).sum_rate;
    let alloc = link.allocate(&budget, &OptimizerConfig::default())?;
    println!("equal split: {equal:.4} bps/Hz");
    for (t, rate) in alloc.trace.iter().enumerate() {
        println!("iteration {:2}: {rate:.6} bps/Hz", t + 1);
    }
    println!("budget multiplier {:.4e}", alloc.duals.budget);
    for (n, p) in beam_powers(&link.grouping, &alloc.powers).iter().enumerate() {
        println!("  beam {:2} users {:?} power {p:.3} mW", link.grouping.selected[n], link.grouping.members[n]);
    }

    let budget = LinkBudget::from_snr_db(32.0, 20.0)?;
    let cfg = OptimizerConfig {
        min_rate: 1.0,
        ..OptimizerConfig::default()
    };
    let alloc = link.allocate(&budget, &cfg)?;
    let report = link.rates(&alloc.powers, &budget);
    let lowest = report.rates().into_iter().fold(f64::INFINITY, f64::min);
    println!(
        "R_min = 1 at 20 dB: feasible = {}, sum rate {:.3}, lowest user rate {lowest:.6}",
        alloc.feasible, report.sum_rate
    );
    Ok(())
}
