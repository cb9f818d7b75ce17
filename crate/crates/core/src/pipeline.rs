//! The beamspace MIMO-NOMA link for one channel realization: beam selection,
//! grouping, precoding with one order check, and power allocation.

use crate::beams::{group_users, select_beams, verify_order, BeamAssignment, BeamGrouping, OrderReport};
use crate::channel::BeamspaceChannel;
use crate::power::{allocate, OptimizerConfig, PowerAllocation};
use crate::precoding::{equivalent_channel, zf_precoder, EquivalentVariant, LinkGains, Precoder};
use crate::rates::{sum_rate, LinkBudget, RateReport};
use crate::Result;

/// Grouping, precoder and gains of a realization, before power allocation.
#[derive(Debug, Clone)]
pub struct NomaLink {
    pub assignment: BeamAssignment,
    pub grouping: BeamGrouping,
    pub precoder: Precoder,
    pub gains: LinkGains,
    /// Order check of the first precoder.
    pub order: OrderReport,
    /// Whether the users were re-sorted and the precoder rebuilt.
    pub reordered: bool,
}

impl NomaLink {
    /// Users are first ordered by reduced-channel norm. If the precoded gains
    /// disagree with that order, the beams are re-sorted by precoded gain and
    /// the precoder is rebuilt once; the second precoder is kept even if its
    /// order check fails again.
    pub fn build(beamspace: &BeamspaceChannel, variant: EquivalentVariant) -> Result<Self> {
        let assignment = select_beams(beamspace)?;
        let grouping = group_users(&assignment, beamspace)?;
        let precoder = zf_precoder(equivalent_channel(&grouping, variant)?)?;
        let order = verify_order(&grouping, &precoder);
        let (grouping, precoder, reordered) = if order.violations() > 0 {
            let grouping = grouping.reordered(order.restored_order())?;
            let precoder = zf_precoder(equivalent_channel(&grouping, variant)?)?;
            (grouping, precoder, true)
        } else {
            (grouping, precoder, false)
        };
        let gains = LinkGains::new(&grouping, &precoder);
        Ok(Self {
            assignment,
            grouping,
            precoder,
            gains,
            order,
            reordered,
        })
    }

    pub fn n_rf(&self) -> usize {
        self.grouping.n_rf()
    }

    pub fn users(&self) -> usize {
        self.grouping.users()
    }

    /// `P / K` for every user.
    pub fn equal_powers(&self, total_power: f64) -> Vec<f64> {
        vec![total_power / self.users() as f64; self.users()]
    }

    pub fn rates(&self, powers: &[f64], budget: &LinkBudget) -> RateReport {
        sum_rate(&self.grouping, &self.gains, powers, budget)
    }

    pub fn allocate(&self, budget: &LinkBudget, config: &OptimizerConfig) -> Result<PowerAllocation> {
        allocate(&self.grouping, &self.gains, budget, config)
    }
}

#[derive(Debug, Clone)]
pub struct NomaOutcome {
    pub link: NomaLink,
    pub allocation: PowerAllocation,
    pub report: RateReport,
}

/// Builds the link and runs the power allocation.
pub fn run_noma(
    beamspace: &BeamspaceChannel,
    variant: EquivalentVariant,
    budget: &LinkBudget,
    config: &OptimizerConfig,
) -> Result<NomaOutcome> {
    let link = NomaLink::build(beamspace, variant)?;
    let allocation = link.allocate(budget, config)?;
    let report = link.rates(&allocation.powers, budget);
    Ok(NomaOutcome {
        link,
        allocation,
        report,
    })
}
