//! Equivalent channels and zero-forcing precoders.
//!
//! With more users than beams the reduced channel matrix has no
//! pseudo-inverse, so each beam is represented by a single equivalent channel
//! vector: either the strongest user's reduced channel, or the dominant
//! direction of all its users' channels. ZF is then applied to the square
//! `N_RF x N_RF` equivalent channel matrix.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::beams::BeamGrouping;
use crate::{CMatrix, CVector, Complex, Error, Result};

/// Gram matrices with a larger condition number are treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

const POWER_ITERATION_TOL: f64 = 1e-12;
const POWER_ITERATION_CAP: usize = 10_000;
const RESTART_SEED: u64 = 0x5eed_0f_5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EquivalentVariant {
    /// First (strongest) user of every beam.
    StrongestUser,
    /// Dominant singular direction of the beam's stacked user channels.
    Svd,
}

impl EquivalentVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::StrongestUser => "strongest",
            Self::Svd => "svd",
        }
    }
}

impl fmt::Display for EquivalentVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EquivalentVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "strongest" | "strongest-user" | "p1" => Ok(Self::StrongestUser),
            "svd" | "p2" => Ok(Self::Svd),
            other => Err(Error::Config(format!(
                "unknown equivalent-channel variant `{other}` (expected strongest|svd)"
            ))),
        }
    }
}

/// `N_RF x N_RF` matrix whose column `n` represents beam `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalentChannel {
    pub matrix: CMatrix,
    pub variant: EquivalentVariant,
}

/// Normalized ZF precoder built from an equivalent channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    /// Column `n` is the unit-norm precoding vector of beam `n`.
    pub weights: CMatrix,
    pub equivalent: EquivalentChannel,
    /// Condition number of the inverted Gram matrix.
    pub condition: f64,
}

fn check_beams(grouping: &BeamGrouping) -> Result<()> {
    if grouping.n_rf() == 0 {
        return Err(Error::InvalidDimension("grouping has no beams".into()));
    }
    if let Some(n) = grouping.members.iter().position(|s| s.is_empty()) {
        return Err(Error::EmptyBeam { beam: n });
    }
    Ok(())
}

pub fn equivalent_channel_strongest(grouping: &BeamGrouping) -> Result<EquivalentChannel> {
    check_beams(grouping)?;
    let columns: Vec<CVector> = grouping
        .members
        .iter()
        .map(|set| grouping.reduced[set[0]].clone())
        .collect();
    Ok(EquivalentChannel {
        matrix: CMatrix::from_columns(&columns),
        variant: EquivalentVariant::StrongestUser,
    })
}

/// Column `n` is `H_n u_n^*`, where `H_n` stacks the beam's reduced channels
/// and `u_n` is the dominant left singular vector of `H_n^T`.
pub fn equivalent_channel_svd(grouping: &BeamGrouping) -> Result<EquivalentChannel> {
    check_beams(grouping)?;
    let mut columns = Vec::with_capacity(grouping.n_rf());
    for set in &grouping.members {
        let stacked = CMatrix::from_columns(
            &set.iter()
                .map(|&k| grouping.reduced[k].clone())
                .collect::<Vec<_>>(),
        );
        let (u, _) = top_left_singular_vector(&stacked.transpose())?;
        columns.push(&stacked * u.map(|z| z.conj()));
    }
    Ok(EquivalentChannel {
        matrix: CMatrix::from_columns(&columns),
        variant: EquivalentVariant::Svd,
    })
}

pub fn equivalent_channel(
    grouping: &BeamGrouping,
    variant: EquivalentVariant,
) -> Result<EquivalentChannel> {
    match variant {
        EquivalentVariant::StrongestUser => equivalent_channel_strongest(grouping),
        EquivalentVariant::Svd => equivalent_channel_svd(grouping),
    }
}

/// Scales `v` so its largest-magnitude entry is real and positive.
fn fix_phase(v: &mut CVector) {
    let pivot = v
        .iter()
        .copied()
        .fold(Complex::new(0.0, 0.0), |best, z| {
            if z.norm() > best.norm() {
                z
            } else {
                best
            }
        });
    if pivot.norm() > 0.0 {
        let rot = pivot.conj() / pivot.norm();
        v.iter_mut().for_each(|z| *z *= rot);
    }
}

struct PowerRun {
    vector: CVector,
    eigenvalue: f64,
    converged: bool,
}

/// Power iteration on the Hermitian PSD matrix `gram`. `None` when the
/// iterate falls into the null space.
fn power_iteration(gram: &CMatrix, start: CVector, scale: f64) -> Option<PowerRun> {
    let mut v = start.normalize();
    let mut eigenvalue = 0.0;
    for _ in 0..POWER_ITERATION_CAP {
        let y = gram * &v;
        let norm = y.norm();
        if norm <= f64::EPSILON * scale {
            return None;
        }
        v = y / Complex::new(norm, 0.0);
        let gv = gram * &v;
        eigenvalue = v.dotc(&gv).re;
        let residual = (gv - &v * Complex::new(eigenvalue, 0.0)).norm();
        if residual <= POWER_ITERATION_TOL * scale {
            return Some(PowerRun {
                vector: v,
                eigenvalue,
                converged: true,
            });
        }
    }
    Some(PowerRun {
        vector: v,
        eigenvalue,
        converged: false,
    })
}

/// Dominant left singular pair of `m` by power iteration on `m m^H`.
///
/// The returned vector has unit norm and its largest-magnitude entry is real
/// positive. When the top two singular values (nearly) coincide the
/// iteration may stop at the cap; any vector of the dominant subspace is then
/// acceptable.
pub fn top_left_singular_vector(m: &CMatrix) -> Result<(CVector, f64)> {
    let rows = m.nrows();
    if rows == 0 || m.ncols() == 0 {
        return Err(Error::InvalidDimension("empty matrix".into()));
    }
    let gram = m * m.adjoint();
    let scale = gram.norm();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::DegenerateMatrix(
            "dominant singular vector of a zero matrix".into(),
        ));
    }

    let start = CVector::from_element(rows, Complex::new(1.0, 0.0));
    let first = power_iteration(&gram, start, scale);
    let run = match first {
        Some(run) if run.converged => run,
        stalled => {
            let mut rng = ChaCha8Rng::seed_from_u64(RESTART_SEED);
            let random = CVector::from_fn(rows, |_, _| {
                Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            match (stalled, power_iteration(&gram, random, scale)) {
                (Some(a), Some(b)) => {
                    if b.eigenvalue > a.eigenvalue {
                        b
                    } else {
                        a
                    }
                }
                (Some(a), None) => a,
                (None, Some(b)) => b,
                (None, None) => {
                    return Err(Error::DegenerateMatrix(
                        "power iteration collapsed to zero".into(),
                    ))
                }
            }
        }
    };

    let mut u = run.vector;
    fix_phase(&mut u);
    Ok((u, run.eigenvalue.max(0.0).sqrt()))
}

/// Columns of `H (H^H H)^{-1}` before and after unit-norm scaling.
#[derive(Debug, Clone)]
pub struct ZeroForcing {
    pub raw: CMatrix,
    pub normalized: CMatrix,
    pub condition: f64,
}

/// Zero-forcing for a tall or square channel matrix whose columns are the
/// channels to be separated.
pub fn zero_forcing(h: &CMatrix) -> Result<ZeroForcing> {
    if h.ncols() == 0 || h.nrows() < h.ncols() {
        return Err(Error::InvalidDimension(format!(
            "zero forcing needs a tall or square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let singular = h.clone().svd(false, false).singular_values;
    let smax = singular.max();
    let smin = singular.min();
    let condition = if smin > 0.0 {
        (smax / smin).powi(2)
    } else {
        f64::INFINITY
    };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned {
            condition,
            limit: MAX_CONDITION,
        });
    }

    let gram = h.adjoint() * h;
    let k = h.ncols();
    let inverse = gram
        .lu()
        .solve(&CMatrix::identity(k, k))
        .ok_or(Error::IllConditioned {
            condition,
            limit: MAX_CONDITION,
        })?;
    let raw = h * inverse;
    let mut normalized = raw.clone();
    for mut col in normalized.column_iter_mut() {
        let norm = col.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::DegenerateMatrix("zero precoding column".into()));
        }
        col /= Complex::new(norm, 0.0);
    }
    Ok(ZeroForcing {
        raw,
        normalized,
        condition,
    })
}

/// ZF precoder `W = H_eq (H_eq^H H_eq)^{-1}` with unit-norm columns.
pub fn zf_precoder(equivalent: EquivalentChannel) -> Result<Precoder> {
    let zf = zero_forcing(&equivalent.matrix)?;
    Ok(Precoder {
        weights: zf.normalized,
        equivalent,
        condition: zf.condition,
    })
}

/// Scalar gains every rate and power computation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGains {
    /// `h_k^H w_{b(k)}` for every user `k`.
    pub effective: Vec<Complex>,
    /// `power[(k, j)] = |h_k^H w_j|^2`.
    pub power: DMatrix<f64>,
}

impl LinkGains {
    pub fn new(grouping: &BeamGrouping, precoder: &Precoder) -> Self {
        let users = grouping.users();
        let beams = precoder.weights.ncols();
        let inner = DMatrix::from_fn(users, beams, |k, j| {
            grouping.reduced[k].dotc(&precoder.weights.column(j))
        });
        Self {
            effective: (0..users).map(|k| inner[(k, grouping.beam_of(k))]).collect(),
            power: inner.map(|z| z.norm_sqr()),
        }
    }

    /// `|h_k^H w_{b(k)}|^2`.
    pub fn own(&self, k: usize, grouping: &BeamGrouping) -> f64 {
        self.power[(k, grouping.beam_of(k))]
    }
}
