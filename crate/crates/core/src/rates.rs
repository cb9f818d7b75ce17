//! SINR, achievable rates, spectral and energy efficiency.
//!
//! All powers are in milliwatts. User `m` of a beam decodes and cancels the
//! weaker users `i > m` of the same beam (SIC), so its residual interference
//! is the stronger users of its own beam plus every other beam.

use crate::beams::BeamGrouping;
use crate::precoding::LinkGains;
use crate::{Error, Result};

/// Transmit budget and noise level of one SNR point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Total transmit power `P` in mW.
    pub total_power: f64,
    /// Noise variance in mW.
    pub noise_power: f64,
    pub snr_db: f64,
}

/// `sigma^2 = P / 10^(snr_db / 10)`: the SNR is the total transmit power over
/// the noise power.
pub fn noise_power_for_snr(total_power: f64, snr_db: f64) -> f64 {
    total_power / 10f64.powf(snr_db / 10.0)
}

impl LinkBudget {
    pub fn from_snr_db(total_power: f64, snr_db: f64) -> Result<Self> {
        Self::new(total_power, noise_power_for_snr(total_power, snr_db), snr_db)
    }

    pub fn new(total_power: f64, noise_power: f64, snr_db: f64) -> Result<Self> {
        if !(total_power > 0.0 && total_power.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "total power must be positive, got {total_power}"
            )));
        }
        if !(noise_power > 0.0 && noise_power.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise power must be positive, got {noise_power}"
            )));
        }
        Ok(Self {
            total_power,
            noise_power,
            snr_db,
        })
    }
}

/// Circuit power figures for the energy-efficiency denominator, in mW.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerModel {
    pub rf_chain: f64,
    pub switch: f64,
    pub baseband: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self {
            rf_chain: 300.0,
            switch: 5.0,
            baseband: 200.0,
        }
    }
}

impl PowerModel {
    /// Total consumed power in watts for `n_rf` chains and transmit power
    /// `total_power` mW.
    pub fn consumption_watts(&self, total_power: f64, n_rf: usize) -> f64 {
        let n = n_rf as f64;
        (total_power + n * self.rf_chain + n * self.switch + self.baseband) / 1000.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserRate {
    pub user: usize,
    pub beam: usize,
    pub rank: usize,
    /// Interference plus noise `xi`.
    pub interference: f64,
    pub sinr: f64,
    /// `log2(1 + sinr)` in bps/Hz.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// Indexed by user.
    pub users: Vec<UserRate>,
    pub sum_rate: f64,
    pub n_rf: usize,
}

impl RateReport {
    pub fn rates(&self) -> Vec<f64> {
        self.users.iter().map(|u| u.rate).collect()
    }
}

/// Total power radiated on every beam.
pub fn beam_powers(grouping: &BeamGrouping, powers: &[f64]) -> Vec<f64> {
    grouping
        .members
        .iter()
        .map(|set| set.iter().map(|&k| powers[k]).sum())
        .collect()
}

fn interference_with(
    k: usize,
    grouping: &BeamGrouping,
    gains: &LinkGains,
    powers: &[f64],
    per_beam: &[f64],
    noise: f64,
) -> f64 {
    let n = grouping.beam_of(k);
    let intra: f64 = grouping.stronger_than(k).iter().map(|&i| powers[i]).sum();
    let inter: f64 = (0..grouping.n_rf())
        .filter(|&j| j != n)
        .map(|j| gains.power[(k, j)] * per_beam[j])
        .sum();
    gains.power[(k, n)] * intra + inter + noise
}

/// Residual interference plus noise `xi` of user `k` after SIC.
pub fn interference_term(
    k: usize,
    grouping: &BeamGrouping,
    gains: &LinkGains,
    powers: &[f64],
    noise: f64,
) -> f64 {
    let per_beam = beam_powers(grouping, powers);
    interference_with(k, grouping, gains, powers, &per_beam, noise)
}

/// `xi` of every user at once.
pub fn interference_terms(
    grouping: &BeamGrouping,
    gains: &LinkGains,
    powers: &[f64],
    noise: f64,
) -> Vec<f64> {
    let per_beam = beam_powers(grouping, powers);
    (0..grouping.users())
        .map(|k| interference_with(k, grouping, gains, powers, &per_beam, noise))
        .collect()
}

pub fn sinr(k: usize, grouping: &BeamGrouping, gains: &LinkGains, powers: &[f64], noise: f64) -> f64 {
    gains.own(k, grouping) * powers[k] / interference_term(k, grouping, gains, powers, noise)
}

pub fn sum_rate(
    grouping: &BeamGrouping,
    gains: &LinkGains,
    powers: &[f64],
    budget: &LinkBudget,
) -> RateReport {
    let xi = interference_terms(grouping, gains, powers, budget.noise_power);
    let users: Vec<UserRate> = (0..grouping.users())
        .map(|k| {
            let sinr = gains.own(k, grouping) * powers[k] / xi[k];
            UserRate {
                user: k,
                beam: grouping.beam_of(k),
                rank: grouping.rank_of(k),
                interference: xi[k],
                sinr,
                rate: (1.0 + sinr).log2(),
            }
        })
        .collect();
    RateReport {
        sum_rate: users.iter().map(|u| u.rate).sum(),
        users,
        n_rf: grouping.n_rf(),
    }
}

/// Sum rate per consumed watt (bps/Hz/W).
pub fn energy_efficiency(sum_rate: f64, n_rf: usize, budget: &LinkBudget, model: &PowerModel) -> f64 {
    sum_rate / model.consumption_watts(budget.total_power, n_rf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beams::{group_users, select_beams, BeamGrouping};
    use crate::channel::BeamspaceChannel;
    use crate::precoding::{equivalent_channel_strongest, zf_precoder, Precoder};
    use crate::{CMatrix, Complex};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex {
        Complex::new(re, 0.0)
    }

    struct Fixture {
        grouping: BeamGrouping,
        precoder: Precoder,
        gains: LinkGains,
    }

    fn fixture(seed: u64, beams: usize, assignment: &[usize]) -> Fixture {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let users = assignment.len();
        let mut h = CMatrix::from_fn(beams, users, |_, _| {
            Complex::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3))
        });
        for (k, &b) in assignment.iter().enumerate() {
            h[(b, k)] += c(2.0 + rng.random_range(0.0..1.0));
        }
        let bs = BeamspaceChannel { matrix: h };
        let grouping = group_users(&select_beams(&bs).unwrap(), &bs).unwrap();
        let precoder = zf_precoder(equivalent_channel_strongest(&grouping).unwrap()).unwrap();
        let gains = LinkGains::new(&grouping, &precoder);
        Fixture {
            grouping,
            precoder,
            gains,
        }
    }

    /// Term-by-term decomposition of the received signal: every transmitted
    /// stream contributes `|h_k^H w_j|^2 p_i`, classified as desired,
    /// cancelled (weaker user of the same beam), or interference.
    fn oracle_sinr(f: &Fixture, powers: &[f64], noise: f64) -> Vec<f64> {
        let g = &f.grouping;
        (0..g.users())
            .map(|k| {
                let own_beam = g.beam_of(k);
                let mut desired = 0.0;
                let mut interference = noise;
                for (j, set) in g.members.iter().enumerate() {
                    let w = f.precoder.weights.column(j);
                    let amp: Complex = (0..g.n_rf()).map(|r| g.reduced[k][r].conj() * w[r]).sum();
                    for (rank, &i) in set.iter().enumerate() {
                        let term = amp.norm_sqr() * powers[i];
                        if i == k {
                            desired += term;
                        } else if j == own_beam && rank > g.rank_of(k) {
                            // removed by SIC
                        } else {
                            interference += term;
                        }
                    }
                }
                desired / interference
            })
            .collect()
    }

    #[test]
    fn single_user_interference_is_noise() {
        let f = fixture(1, 1, &[0]);
        assert_eq!(interference_term(0, &f.grouping, &f.gains, &[3.0], 0.7), 0.7);
        let gamma = sinr(0, &f.grouping, &f.gains, &[3.0], 0.7);
        assert!((gamma - f.gains.own(0, &f.grouping) * 3.0 / 0.7).abs() < 1e-12);
    }

    #[test]
    fn first_users_see_only_noise_under_zf() {
        let f = fixture(2, 4, &[0, 0, 1, 2, 2, 3]);
        let powers = vec![1.0, 0.5, 2.0, 1.5, 0.25, 1.0];
        for set in &f.grouping.members {
            let xi = interference_term(set[0], &f.grouping, &f.gains, &powers, 0.1);
            assert!((xi - 0.1).abs() <= 1e-12, "{xi}");
        }
    }

    #[test]
    fn hand_expanded_two_beam_three_user() {
        let f = fixture(3, 2, &[0, 0, 1]);
        let g = &f.grouping;
        let p = [0.6, 0.3, 1.1];
        let noise = 0.05;
        // beam 0 = {strong, weak}, beam 1 = {u2}
        let strong = g.members[0][0];
        let weak = g.members[0][1];
        let gp = &f.gains.power;
        let xi_weak = gp[(weak, 0)] * p[strong] + gp[(weak, 1)] * p[2] + noise;
        let xi_strong = gp[(strong, 1)] * p[2] + noise;
        let xi_2 = gp[(2, 0)] * (p[strong] + p[weak]) + noise;
        assert!((interference_term(weak, g, &f.gains, &p, noise) - xi_weak).abs() < 1e-14);
        assert!((interference_term(strong, g, &f.gains, &p, noise) - xi_strong).abs() < 1e-14);
        assert!((interference_term(2, g, &f.gains, &p, noise) - xi_2).abs() < 1e-14);
    }

    #[test]
    fn sinr_edge_cases() {
        let f = fixture(4, 3, &[0, 1, 2]);
        let mut p = vec![1.0, 2.0, 0.0];
        assert_eq!(sinr(2, &f.grouping, &f.gains, &p, 0.1), 0.0);
        let before = sinr(0, &f.grouping, &f.gains, &p, 0.1);
        // singletons with perfect ZF: xi = noise, so gamma is linear in own power
        p.iter_mut().for_each(|x| *x *= 2.0);
        let after = sinr(0, &f.grouping, &f.gains, &p, 0.1);
        assert!((after - 2.0 * before).abs() <= 1e-9 * after);
    }

    #[test]
    fn sum_rate_unit_sinr_is_one_bit() {
        let f = fixture(5, 1, &[0]);
        let g0 = f.gains.own(0, &f.grouping);
        let budget = LinkBudget::new(1.0, g0, 0.0).unwrap();
        let report = sum_rate(&f.grouping, &f.gains, &[1.0], &budget);
        assert!((report.sum_rate - 1.0).abs() < 1e-12);
        assert_eq!(report.n_rf, 1);
    }

    #[test]
    fn zero_power_zero_rate() {
        let f = fixture(6, 3, &[0, 0, 2, 1]);
        let budget = LinkBudget::from_snr_db(32.0, 10.0).unwrap();
        let report = sum_rate(&f.grouping, &f.gains, &[0.0; 4], &budget);
        assert_eq!(report.sum_rate, 0.0);
    }

    #[test]
    fn matches_term_by_term_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for seed in 0..100 {
            let f = fixture(seed, 3, &[0, 0, 1, 2, 2, 2]);
            let powers: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..5.0)).collect();
            let budget = LinkBudget::from_snr_db(32.0, rng.random_range(-5.0..25.0)).unwrap();
            let report = sum_rate(&f.grouping, &f.gains, &powers, &budget);
            let oracle = oracle_sinr(&f, &powers, budget.noise_power);
            let oracle_sum: f64 = oracle.iter().map(|g| (1.0 + g).log2()).sum();
            for (u, o) in report.users.iter().zip(&oracle) {
                assert!((u.sinr - o).abs() <= 1e-10 * o.max(1.0));
            }
            assert!((report.sum_rate - oracle_sum).abs() <= 1e-10 * oracle_sum.max(1.0));
        }
    }

    #[test]
    fn sic_never_hurts() {
        for seed in 0..50 {
            let f = fixture(seed, 2, &[0, 0, 0, 1, 1]);
            let powers = [1.0, 0.8, 0.6, 1.2, 0.4];
            let noise = 0.2;
            let g = &f.grouping;
            for k in 0..g.users() {
                let with_sic = sinr(k, g, &f.gains, &powers, noise);
                let weaker: f64 = g.weaker_than(k).iter().map(|&i| powers[i]).sum();
                let xi = interference_term(k, g, &f.gains, &powers, noise)
                    + f.gains.own(k, g) * weaker;
                let without = f.gains.own(k, g) * powers[k] / xi;
                assert!(with_sic >= without);
            }
        }
    }

    #[test]
    fn energy_efficiency_constants() {
        let model = PowerModel::default();
        let budget = LinkBudget::from_snr_db(32.0, 10.0).unwrap();
        assert!((model.consumption_watts(32.0, 32) - 9.992).abs() < 1e-12);
        let ee = energy_efficiency(100.0, 32, &budget, &model);
        assert!((ee - 100.0 / 9.992).abs() < 1e-12);
        assert!((ee - 10.008).abs() < 1e-3);
        assert_eq!(energy_efficiency(0.0, 32, &budget, &model), 0.0);
        assert!((model.consumption_watts(32.0, 256) - 78.312).abs() < 1e-12);
    }

    #[test]
    fn budget_validation() {
        assert!(LinkBudget::new(0.0, 1.0, 0.0).is_err());
        assert!(LinkBudget::new(1.0, 0.0, 0.0).is_err());
        let b = LinkBudget::from_snr_db(32.0, 10.0).unwrap();
        assert!((b.noise_power - 3.2).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn more_noise_strictly_lowers_positive_sinr(seed in 0u64..500, noise in 0.01f64..5.0, extra in 0.01f64..5.0) {
            let f = fixture(seed, 3, &[0, 0, 1, 2]);
            let powers = [1.0, 0.5, 0.7, 0.9];
            for k in 0..4 {
                let a = sinr(k, &f.grouping, &f.gains, &powers, noise);
                let b = sinr(k, &f.grouping, &f.gains, &powers, noise + extra);
                if a > 0.0 {
                    prop_assert!(b < a);
                }
            }
        }

        #[test]
        fn rates_are_finite_and_nonnegative(seed in 0u64..500, scale in 0.0f64..100.0) {
            let f = fixture(seed, 3, &[0, 1, 1, 2, 0]);
            let powers: Vec<f64> = (0..5).map(|i| scale * (i as f64 + 1.0) / 5.0).collect();
            let budget = LinkBudget::from_snr_db(32.0, 10.0).unwrap();
            let r = sum_rate(&f.grouping, &f.gains, &powers, &budget);
            prop_assert!(r.users.iter().all(|u| u.rate >= 0.0 && u.rate.is_finite()));
        }

        #[test]
        fn sinr_invariant_when_power_and_noise_scale(seed in 0u64..500, snr in -10.0f64..30.0) {
            let f = fixture(seed, 2, &[0, 0, 1]);
            let shares = [0.5, 0.2, 0.3];
            let at = |total: f64| {
                let budget = LinkBudget::from_snr_db(total, snr).unwrap();
                let powers: Vec<f64> = shares.iter().map(|s| s * total).collect();
                sum_rate(&f.grouping, &f.gains, &powers, &budget)
            };
            let a = at(32.0);
            let b = at(64.0);
            for (x, y) in a.users.iter().zip(&b.users) {
                prop_assert!((x.sinr - y.sinr).abs() <= 1e-12 * x.sinr.max(1.0));
            }
        }
    }
}
