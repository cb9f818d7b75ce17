//! Comparison schemes: fully digital ZF, beamspace MIMO with one user per
//! beam, and MIMO-OMA on the NOMA grouping. All baselines split the power
//! equally.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::beams::{group_users, BeamAssignment, BeamGrouping};
use crate::channel::BeamspaceChannel;
use crate::precoding::{equivalent_channel_strongest, zero_forcing, zf_precoder, LinkGains};
use crate::rates::{sum_rate, LinkBudget, RateReport};
use crate::{CMatrix, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    /// Beamspace MIMO-NOMA with iterative power allocation.
    Noma,
    /// One RF chain per antenna, ZF on the spatial channels.
    FullyDigital,
    /// One user per beam, `N_RF = K`.
    BeamspaceMimo,
    /// NOMA grouping, users of a beam on orthogonal resources.
    Oma,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::Noma,
        Scheme::FullyDigital,
        Scheme::BeamspaceMimo,
        Scheme::Oma,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Noma => "noma",
            Scheme::FullyDigital => "fully-digital",
            Scheme::BeamspaceMimo => "beamspace-mimo",
            Scheme::Oma => "oma",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "noma" | "beamspace-noma" => Ok(Scheme::Noma),
            "fully-digital" | "fd" | "digital" => Ok(Scheme::FullyDigital),
            "beamspace-mimo" | "bmimo" | "mimo" => Ok(Scheme::BeamspaceMimo),
            "oma" | "mimo-oma" => Ok(Scheme::Oma),
            other => Err(Error::Config(format!("unknown scheme '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeResult {
    pub scheme: Scheme,
    pub sum_rate: f64,
    pub n_rf: usize,
    pub served: usize,
    /// Per-user rates indexed by user.
    pub rates: Vec<f64>,
}

impl SchemeResult {
    pub fn from_report(scheme: Scheme, report: &RateReport) -> Self {
        Self {
            scheme,
            sum_rate: report.sum_rate,
            n_rf: report.n_rf,
            served: report.users.len(),
            rates: report.rates(),
        }
    }
}

fn rates_from_gains(gains: &CMatrix, powers: &[f64], noise: f64) -> Vec<f64> {
    let users = gains.nrows();
    (0..users)
        .map(|k| {
            let signal = gains[(k, k)].norm_sqr() * powers[k];
            let leak: f64 = (0..users)
                .filter(|&j| j != k)
                .map(|j| gains[(k, j)].norm_sqr() * powers[j])
                .sum();
            (1.0 + signal / (leak + noise)).log2()
        })
        .collect()
}

/// ZF on the `N x K` spatial channel matrix with `P / K` per user and
/// `N_RF = N`.
pub fn fully_digital_zf(spatial: &CMatrix, budget: &LinkBudget) -> Result<SchemeResult> {
    let (antennas, users) = spatial.shape();
    let zf = zero_forcing(spatial)?;
    let gains = spatial.adjoint() * &zf.normalized;
    let powers = vec![budget.total_power / users as f64; users];
    let rates = rates_from_gains(&gains, &powers, budget.noise_power);
    Ok(SchemeResult {
        scheme: Scheme::FullyDigital,
        sum_rate: rates.iter().sum(),
        n_rf: antennas,
        served: users,
        rates,
    })
}

/// Distinct beam per user: users in decreasing beamspace-norm order take
/// their strongest beam not yet taken (ties to the lower index).
pub fn greedy_distinct_beams(beamspace: &BeamspaceChannel) -> Result<BeamAssignment> {
    let (beams, users) = beamspace.matrix.shape();
    if users > beams {
        return Err(Error::InvalidDimension(format!(
            "{users} users cannot get distinct beams out of {beams}"
        )));
    }
    let mut order: Vec<(f64, usize)> = (0..users)
        .map(|k| (beamspace.matrix.column(k).norm(), k))
        .collect();
    order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));

    let mut taken = vec![false; beams];
    let mut choice = vec![0; users];
    for (norm, k) in order {
        if !(norm > 0.0) {
            return Err(Error::DegenerateChannel { user: k });
        }
        let column = beamspace.matrix.column(k);
        let mut best: Option<(f64, usize)> = None;
        for b in (0..beams).filter(|&b| !taken[b]) {
            let mag = column[b].norm();
            if best.is_none_or(|(m, _)| mag > m) {
                best = Some((mag, b));
            }
        }
        let (_, b) = best.expect("fewer users than beams");
        taken[b] = true;
        choice[k] = b;
    }
    Ok(BeamAssignment::from_choices(choice))
}

/// One user per beam on greedily assigned distinct beams, ZF on the `K x K`
/// reduced matrix, `P / K` per user.
pub fn beamspace_mimo_single_user(
    beamspace: &BeamspaceChannel,
    budget: &LinkBudget,
) -> Result<SchemeResult> {
    let assignment = greedy_distinct_beams(beamspace)?;
    let grouping = group_users(&assignment, beamspace)?;
    let precoder = zf_precoder(equivalent_channel_strongest(&grouping)?)?;
    let gains = LinkGains::new(&grouping, &precoder);
    let users = grouping.users();
    let powers = vec![budget.total_power / users as f64; users];
    let report = sum_rate(&grouping, &gains, &powers, budget);
    Ok(SchemeResult::from_report(Scheme::BeamspaceMimo, &report))
}

/// Users of a beam share it in time/frequency with equal fractions; every
/// beam transmits `P / N_RF` during each share.
pub fn mimo_oma(grouping: &BeamGrouping, gains: &LinkGains, budget: &LinkBudget) -> SchemeResult {
    let n_rf = grouping.n_rf();
    let beam_power = budget.total_power / n_rf as f64;
    let rates: Vec<f64> = (0..grouping.users())
        .map(|k| {
            let n = grouping.beam_of(k);
            let inter: f64 = (0..n_rf)
                .filter(|&j| j != n)
                .map(|j| gains.power[(k, j)] * beam_power)
                .sum();
            let share = 1.0 / grouping.members[n].len() as f64;
            share * (1.0 + gains.power[(k, n)] * beam_power / (inter + budget.noise_power)).log2()
        })
        .collect();
    SchemeResult {
        scheme: Scheme::Oma,
        sum_rate: rates.iter().sum(),
        n_rf,
        served: rates.len(),
        rates,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{lens_transform_matrix, steering_vector, to_beamspace, ChannelParams, ChannelRealization};
    use crate::pipeline::NomaLink;
    use crate::precoding::EquivalentVariant;
    use crate::rng::trial_seed;
    use crate::Complex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMatrix::from_fn(rows, cols, |_, _| {
            Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.as_str().parse::<Scheme>().unwrap(), s);
        }
        assert!("dpc".parse::<Scheme>().is_err());
    }

    #[test]
    fn fully_digital_single_user_is_matched_filter() {
        let h = random_matrix(16, 1, 1);
        let budget = LinkBudget::from_snr_db(32.0, 10.0).unwrap();
        let r = fully_digital_zf(&h, &budget).unwrap();
        let expect = (1.0 + h.norm_squared() * 32.0 / budget.noise_power).log2();
        assert!((r.sum_rate - expect).abs() < 1e-10);
        assert_eq!((r.n_rf, r.served), (16, 1));
    }

    #[test]
    fn fully_digital_orthogonal_users() {
        let n = 8;
        let columns: Vec<_> = [0usize, 2, 5]
            .iter()
            .map(|&b| steering_vector((b as f64 - 3.5) / n as f64, n).unwrap() * Complex::new(1.5, 0.0))
            .collect();
        let h = CMatrix::from_columns(&columns);
        let budget = LinkBudget::from_snr_db(30.0, 10.0).unwrap();
        let r = fully_digital_zf(&h, &budget).unwrap();
        for (k, col) in columns.iter().enumerate() {
            let mf = (1.0 + col.norm_squared() * 10.0 / budget.noise_power).log2();
            assert!((r.rates[k] - mf).abs() < 1e-9);
        }
    }

    #[test]
    fn fully_digital_leakage_is_nulled() {
        let h = random_matrix(16, 4, 2);
        let zf = zero_forcing(&h).unwrap();
        let g = h.adjoint() * &zf.normalized;
        for k in 0..4 {
            for j in (0..4).filter(|&j| j != k) {
                assert!(g[(k, j)].norm() <= 1e-9 * g[(k, k)].norm());
            }
        }
    }

    #[test]
    fn conflicting_user_takes_second_best_beam() {
        let mut h = CMatrix::zeros(6, 2);
        h[(2, 0)] = Complex::new(2.0, 0.0);
        h[(4, 0)] = Complex::new(0.1, 0.0);
        h[(2, 1)] = Complex::new(1.0, 0.0);
        h[(3, 1)] = Complex::new(0.5, 0.0);
        let a = greedy_distinct_beams(&BeamspaceChannel { matrix: h }).unwrap();
        assert_eq!(a.beam_of_user, vec![2, 3]);
        assert_eq!(a.n_rf(), 2);
    }

    #[test]
    fn conflict_free_realization_matches_noma_equal_power() {
        let n = 32;
        let lens = lens_transform_matrix(n).unwrap();
        let columns: Vec<_> = [3usize, 9, 20, 27]
            .iter()
            .enumerate()
            .map(|(k, &b)| steering_vector(lens.grid[b], n).unwrap() * Complex::new(1.0 + k as f64 * 0.3, 0.2))
            .collect();
        let spatial = CMatrix::from_columns(&columns);
        let bs = to_beamspace(&spatial, &lens).unwrap();
        let budget = LinkBudget::from_snr_db(32.0, 10.0).unwrap();
        let bm = beamspace_mimo_single_user(&bs, &budget).unwrap();
        let link = NomaLink::build(&bs, EquivalentVariant::StrongestUser).unwrap();
        let noma = link.rates(&link.equal_powers(32.0), &budget);
        assert!((bm.sum_rate - noma.sum_rate).abs() < 1e-9);
        assert_eq!(bm.n_rf, 4);
    }

    #[test]
    fn oma_without_sharing_equals_equal_power_noma() {
        let params = ChannelParams { antennas: 64, users: 8, ..Default::default() };
        let lens = lens_transform_matrix(64).unwrap();
        let budget = LinkBudget::from_snr_db(32.0, 10.0).unwrap();
        let mut checked = 0;
        for trial in 0..50 {
            let r = ChannelRealization::sample(&params, &lens, trial_seed(3, trial)).unwrap();
            let Ok(link) = NomaLink::build(&r.beamspace, EquivalentVariant::StrongestUser) else {
                continue;
            };
            if link.assignment.has_conflict() {
                continue;
            }
            checked += 1;
            let oma = mimo_oma(&link.grouping, &link.gains, &budget);
            let noma = link.rates(&link.equal_powers(32.0), &budget);
            assert!((oma.sum_rate - noma.sum_rate).abs() < 1e-9);
        }
        assert!(checked > 0);
    }

    #[test]
    fn oma_identical_users_split_rate() {
        // two identical users alone on one beam
        let mut h = CMatrix::zeros(4, 2);
        h[(1, 0)] = Complex::new(1.0, 0.0);
        h[(1, 1)] = Complex::new(1.0, 0.0);
        let bs = BeamspaceChannel { matrix: h };
        let link = NomaLink::build(&bs, EquivalentVariant::StrongestUser).unwrap();
        let budget = LinkBudget::from_snr_db(32.0, 10.0).unwrap();
        let oma = mimo_oma(&link.grouping, &link.gains, &budget);
        let single = (1.0 + 32.0 / budget.noise_power).log2();
        for r in &oma.rates {
            assert!((r - single / 2.0).abs() < 1e-12);
        }
        assert_eq!(oma.n_rf, 1);
    }
}
