//! Beam selection and NOMA user grouping.
//!
//! Users pick their magnitude-maximal beam. Users that pick the same beam
//! ("conflicting users") share it through superposition coding; inside a
//! beam they are kept in decoding order, strongest first.

use std::cmp::Ordering;

use crate::channel::BeamspaceChannel;
use crate::precoding::Precoder;
use crate::{CVector, Error, Result};

/// Per-user beam choice. Beam indices are 0-based rows of the beamspace
/// channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeamAssignment {
    pub beam_of_user: Vec<usize>,
    /// Distinct selected beams in ascending order (`Gamma`).
    pub selected: Vec<usize>,
}

impl BeamAssignment {
    /// Builds the selected set from per-user choices.
    pub fn from_choices(beam_of_user: Vec<usize>) -> Self {
        let mut selected = beam_of_user.clone();
        selected.sort_unstable();
        selected.dedup();
        Self {
            beam_of_user,
            selected,
        }
    }

    /// Number of RF chains needed, one per selected beam.
    pub fn n_rf(&self) -> usize {
        self.selected.len()
    }

    /// True when at least two users picked the same beam.
    pub fn has_conflict(&self) -> bool {
        self.selected.len() < self.beam_of_user.len()
    }
}

/// Maximum-magnitude beam selection. Ties go to the lowest beam index.
pub fn select_beams(beamspace: &BeamspaceChannel) -> Result<BeamAssignment> {
    let h = &beamspace.matrix;
    let mut choices = Vec::with_capacity(h.ncols());
    for k in 0..h.ncols() {
        let mut best = 0;
        let mut best_mag = -1.0;
        for n in 0..h.nrows() {
            let mag = h[(n, k)].norm_sqr();
            if mag > best_mag {
                best = n;
                best_mag = mag;
            }
        }
        if best_mag <= 0.0 {
            return Err(Error::DegenerateChannel { user: k });
        }
        choices.push(best);
    }
    Ok(BeamAssignment::from_choices(choices))
}

/// Users partitioned over the selected beams, with their reduced channels.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamGrouping {
    /// Selected beams (rows of the full beamspace channel), ascending.
    pub selected: Vec<usize>,
    /// `members[n]` lists the users of selected beam `n` in decoding order.
    pub members: Vec<Vec<usize>>,
    /// `reduced[k]` is user `k`'s beamspace channel restricted to `selected`.
    pub reduced: Vec<CVector>,
    beam_of: Vec<usize>,
    rank_of: Vec<usize>,
}

impl BeamGrouping {
    /// Assembles a grouping from explicit beam sets. `members` must
    /// partition the users `0..K` of `beamspace`.
    pub fn new(
        selected: Vec<usize>,
        members: Vec<Vec<usize>>,
        beamspace: &BeamspaceChannel,
    ) -> Result<Self> {
        let users = beamspace.users();
        if selected.len() != members.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} user sets", selected.len()),
                got: format!("{}", members.len()),
            });
        }
        if let Some(&bad) = selected.iter().find(|&&b| b >= beamspace.beams()) {
            return Err(Error::InvalidParameter(format!("beam {bad} out of range")));
        }
        let mut beam_of = vec![usize::MAX; users];
        let mut rank_of = vec![usize::MAX; users];
        for (n, set) in members.iter().enumerate() {
            if set.is_empty() {
                return Err(Error::EmptyBeam { beam: n });
            }
            for (m, &k) in set.iter().enumerate() {
                if k >= users || beam_of[k] != usize::MAX {
                    return Err(Error::InvalidParameter(format!(
                        "user {k} missing from the channel or listed twice"
                    )));
                }
                beam_of[k] = n;
                rank_of[k] = m;
            }
        }
        if let Some(k) = beam_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::InvalidParameter(format!("user {k} is not grouped")));
        }

        let reduced = (0..users)
            .map(|k| {
                CVector::from_iterator(
                    selected.len(),
                    selected.iter().map(|&row| beamspace.matrix[(row, k)]),
                )
            })
            .collect();
        Ok(Self {
            selected,
            members,
            reduced,
            beam_of,
            rank_of,
        })
    }

    pub fn n_rf(&self) -> usize {
        self.selected.len()
    }

    pub fn users(&self) -> usize {
        self.reduced.len()
    }

    /// Position of user `k`'s beam inside `selected`.
    pub fn beam_of(&self, k: usize) -> usize {
        self.beam_of[k]
    }

    /// Decoding rank of user `k` inside its beam (0 = strongest).
    pub fn rank_of(&self, k: usize) -> usize {
        self.rank_of[k]
    }

    /// Users of beam `n` decoded before (stronger than) user `k`.
    pub fn stronger_than(&self, k: usize) -> &[usize] {
        &self.members[self.beam_of[k]][..self.rank_of[k]]
    }

    /// Users of beam `n` decoded after (weaker than) user `k`.
    pub fn weaker_than(&self, k: usize) -> &[usize] {
        &self.members[self.beam_of[k]][self.rank_of[k] + 1..]
    }

    /// Same users and reduced channels with each beam's order replaced.
    pub fn reordered(&self, members: Vec<Vec<usize>>) -> Result<Self> {
        if members.len() != self.members.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} user sets", self.members.len()),
                got: format!("{}", members.len()),
            });
        }
        let mut next = self.clone();
        for (n, set) in members.iter().enumerate() {
            let mut a = set.clone();
            let mut b = self.members[n].clone();
            a.sort_unstable();
            b.sort_unstable();
            if a != b {
                return Err(Error::InvalidParameter(format!(
                    "reordering changes the users of beam {n}"
                )));
            }
            for (m, &k) in set.iter().enumerate() {
                next.rank_of[k] = m;
            }
        }
        next.members = members;
        Ok(next)
    }
}

/// Descending by key, ties by lowest user index.
fn descending(a: (f64, usize), b: (f64, usize)) -> Ordering {
    b.0.partial_cmp(&a.0)
        .unwrap_or(Ordering::Equal)
        .then(a.1.cmp(&b.1))
}

/// Forms the per-beam NOMA sets and sorts each by decreasing reduced-channel
/// norm (lowest user index first on ties).
pub fn group_users(assignment: &BeamAssignment, beamspace: &BeamspaceChannel) -> Result<BeamGrouping> {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); assignment.selected.len()];
    for (k, beam) in assignment.beam_of_user.iter().enumerate() {
        let n = assignment
            .selected
            .binary_search(beam)
            .map_err(|_| Error::InvalidParameter(format!("beam {beam} of user {k} not selected")))?;
        members[n].push(k);
    }
    let grouping = BeamGrouping::new(assignment.selected.clone(), members, beamspace)?;

    let sorted = grouping
        .members
        .iter()
        .map(|set| {
            let mut keyed: Vec<(f64, usize)> = set
                .iter()
                .map(|&k| (grouping.reduced[k].norm(), k))
                .collect();
            keyed.sort_by(|&a, &b| descending(a, b));
            keyed.into_iter().map(|(_, k)| k).collect()
        })
        .collect();
    grouping.reordered(sorted)
}

/// Order check of one beam.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamOrder {
    pub beam: usize,
    /// `|h_{m,n}^H w_n|` in the current order.
    pub gains: Vec<f64>,
    /// Users sorted by non-increasing gain (stable, so equal gains keep
    /// their current order).
    pub sorted: Vec<usize>,
}

impl BeamOrder {
    pub fn violated(&self) -> bool {
        self.gains.windows(2).any(|w| w[1] > w[0])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderReport {
    pub beams: Vec<BeamOrder>,
}

impl OrderReport {
    pub fn violations(&self) -> usize {
        self.beams.iter().filter(|b| b.violated()).count()
    }

    /// Member lists that restore the non-increasing gain order.
    pub fn restored_order(&self) -> Vec<Vec<usize>> {
        self.beams.iter().map(|b| b.sorted.clone()).collect()
    }
}

/// Checks that equivalent gains `|h_{m,n}^H w_n|` are non-increasing along
/// each beam's decoding order.
pub fn verify_order(grouping: &BeamGrouping, precoder: &Precoder) -> OrderReport {
    let beams = grouping
        .members
        .iter()
        .enumerate()
        .map(|(n, set)| {
            let w = precoder.weights.column(n);
            let gains: Vec<f64> = set
                .iter()
                .map(|&k| grouping.reduced[k].dotc(&w).norm())
                .collect();
            let mut idx: Vec<usize> = (0..set.len()).collect();
            idx.sort_by(|&a, &b| gains[b].partial_cmp(&gains[a]).unwrap_or(Ordering::Equal));
            BeamOrder {
                beam: n,
                sorted: idx.iter().map(|&i| set[i]).collect(),
                gains,
            }
        })
        .collect();
    OrderReport { beams }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precoding::{equivalent_channel_strongest, zf_precoder};
    use crate::{CMatrix, Complex};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex {
        Complex::new(re, 0.0)
    }

    /// 8 beams x 3 users; users 0, 1 peak on beam 3 and user 2 on beam 7.
    fn conflict_channel() -> BeamspaceChannel {
        let mut h = CMatrix::from_element(8, 3, c(0.01));
        h[(3, 0)] = c(1.0);
        h[(3, 1)] = c(2.0);
        h[(7, 2)] = c(1.5);
        h[(7, 0)] = c(0.2);
        BeamspaceChannel { matrix: h }
    }

    #[test]
    fn selected_set_is_distinct_and_sorted() {
        let a = select_beams(&conflict_channel()).unwrap();
        assert_eq!(a.beam_of_user, vec![3, 3, 7]);
        assert_eq!(a.selected, vec![3, 7]);
        assert_eq!(a.n_rf(), 2);
        assert!(a.has_conflict());
    }

    #[test]
    fn zero_column_is_degenerate() {
        let mut h = conflict_channel();
        h.matrix.column_mut(1).fill(c(0.0));
        assert!(matches!(
            select_beams(&h),
            Err(Error::DegenerateChannel { user: 1 })
        ));
    }

    #[test]
    fn magnitude_ties_pick_lowest_beam() {
        let mut h = CMatrix::zeros(4, 1);
        h[(1, 0)] = Complex::new(0.0, 1.0);
        h[(2, 0)] = c(-1.0);
        let a = select_beams(&BeamspaceChannel { matrix: h }).unwrap();
        assert_eq!(a.beam_of_user, vec![1]);
    }

    #[test]
    fn distinct_grid_users_get_their_own_beam() {
        let mut h = CMatrix::zeros(6, 4);
        for (k, beam) in [0usize, 2, 3, 5].into_iter().enumerate() {
            h[(beam, k)] = c(1.0);
        }
        let bs = BeamspaceChannel { matrix: h };
        let a = select_beams(&bs).unwrap();
        assert_eq!(a.n_rf(), 4);
        let g = group_users(&a, &bs).unwrap();
        assert!(g.members.iter().all(|s| s.len() == 1));
    }

    #[test]
    fn groups_sorted_by_reduced_norm() {
        let bs = conflict_channel();
        let g = group_users(&select_beams(&bs).unwrap(), &bs).unwrap();
        assert_eq!(g.members, vec![vec![1, 0], vec![2]]);
        assert_eq!(g.rank_of(1), 0);
        assert_eq!(g.rank_of(0), 1);
        assert_eq!(g.beam_of(2), 1);
        assert_eq!(g.stronger_than(0), &[1]);
        assert_eq!(g.weaker_than(1), &[0]);
        // reduced channel keeps rows 3 and 7, bit-exact
        assert_eq!(g.reduced[0][0], bs.matrix[(3, 0)]);
        assert_eq!(g.reduced[0][1], bs.matrix[(7, 0)]);
    }

    #[test]
    fn single_user_grouping() {
        let mut h = CMatrix::zeros(4, 1);
        h[(2, 0)] = c(0.7);
        let bs = BeamspaceChannel { matrix: h };
        let g = group_users(&select_beams(&bs).unwrap(), &bs).unwrap();
        assert_eq!(g.members, vec![vec![0]]);
        assert_eq!(g.reduced[0].len(), 1);
    }

    #[test]
    fn norm_ties_keep_lower_user_first() {
        let mut h = CMatrix::zeros(4, 3);
        h[(1, 0)] = c(1.0);
        h[(1, 1)] = c(1.0);
        h[(1, 2)] = c(1.0);
        let bs = BeamspaceChannel { matrix: h };
        let g = group_users(&select_beams(&bs).unwrap(), &bs).unwrap();
        assert_eq!(g.members, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn grouping_validation() {
        let bs = conflict_channel();
        assert!(BeamGrouping::new(vec![3, 7], vec![vec![0, 1], vec![]], &bs).is_err());
        assert!(BeamGrouping::new(vec![3, 7], vec![vec![0, 1], vec![1]], &bs).is_err());
        assert!(BeamGrouping::new(vec![3, 7], vec![vec![0], vec![2]], &bs).is_err());
        assert!(BeamGrouping::new(vec![3, 9], vec![vec![0, 1], vec![2]], &bs).is_err());
        let g = BeamGrouping::new(vec![3, 7], vec![vec![0, 1], vec![2]], &bs).unwrap();
        assert!(g.reordered(vec![vec![0, 2], vec![1]]).is_err());
    }

    fn random_beamspace(rng: &mut ChaCha8Rng, beams: usize, users: usize) -> BeamspaceChannel {
        BeamspaceChannel {
            matrix: CMatrix::from_fn(beams, users, |_, _| {
                Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            }),
        }
    }

    #[test]
    fn singleton_beams_never_violate_order() {
        let mut h = CMatrix::zeros(5, 3);
        h[(0, 0)] = c(1.0);
        h[(2, 1)] = c(1.0);
        h[(4, 2)] = c(1.0);
        h[(1, 1)] = c(0.3);
        let bs = BeamspaceChannel { matrix: h };
        let g = group_users(&select_beams(&bs).unwrap(), &bs).unwrap();
        let p = zf_precoder(equivalent_channel_strongest(&g).unwrap()).unwrap();
        assert_eq!(verify_order(&g, &p).violations(), 0);
    }

    #[test]
    fn identical_users_keep_order() {
        let mut h = CMatrix::zeros(4, 3);
        h[(1, 0)] = c(1.0);
        h[(2, 0)] = c(0.2);
        h[(1, 1)] = c(1.0);
        h[(2, 1)] = c(0.2);
        h[(3, 2)] = c(1.0);
        let bs = BeamspaceChannel { matrix: h };
        let g = group_users(&select_beams(&bs).unwrap(), &bs).unwrap();
        let p = zf_precoder(equivalent_channel_strongest(&g).unwrap()).unwrap();
        let report = verify_order(&g, &p);
        assert_eq!(report.violations(), 0);
        assert_eq!(report.restored_order(), g.members);
    }

    #[test]
    fn two_user_report_matches_direct_comparison() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut checked = 0;
        while checked < 200 {
            let mut bs = random_beamspace(&mut rng, 3, 3);
            // make users 0 and 1 share beam 0, user 2 own beam 2
            bs.matrix[(0, 0)] += c(4.0);
            bs.matrix[(0, 1)] += c(4.0);
            bs.matrix[(2, 2)] += c(4.0);
            let a = select_beams(&bs).unwrap();
            if a.selected != vec![0, 2] {
                continue;
            }
            let g = group_users(&a, &bs).unwrap();
            let p = zf_precoder(equivalent_channel_strongest(&g).unwrap()).unwrap();
            let report = verify_order(&g, &p);
            let set = &g.members[0];
            let w = p.weights.column(0);
            // direct recomputation of both scalar gains
            let first: Complex = (0..2).map(|i| g.reduced[set[0]][i].conj() * w[i]).sum();
            let second: Complex = (0..2).map(|i| g.reduced[set[1]][i].conj() * w[i]).sum();
            assert_eq!(report.beams[0].violated(), second.norm() > first.norm());
            if report.beams[0].violated() {
                assert_eq!(report.beams[0].sorted, vec![set[1], set[0]]);
            }
            checked += 1;
        }
    }

    #[test]
    fn partition_covers_all_users() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let bs = random_beamspace(&mut rng, 8, 12);
            let g = group_users(&select_beams(&bs).unwrap(), &bs).unwrap();
            let mut all: Vec<usize> = g.members.concat();
            all.sort_unstable();
            assert_eq!(all, (0..12).collect::<Vec<_>>());
            for set in &g.members {
                let norms: Vec<f64> = set.iter().map(|&k| g.reduced[k].norm()).collect();
                assert!(norms.windows(2).all(|w| w[0] >= w[1]));
            }
        }
    }
}
