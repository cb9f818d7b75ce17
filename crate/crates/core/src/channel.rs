//! Saleh-Valenzuela spatial channels and the lens (beamspace) transform.
//!
//! Spatial directions are used directly: `theta = (d / lambda) sin(phi)` with
//! half-wavelength spacing, so `theta` ranges over `[-1/2, 1/2]` and the
//! physical angle, spacing and wavelength never need to be instantiated.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::rng::user_stream;
use crate::{CMatrix, CVector, Complex, Error, Result};

/// Parameters of the multipath channel of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    /// Number of BS antennas `N`.
    pub antennas: usize,
    /// Number of users `K`.
    pub users: usize,
    /// NLoS paths per user `L` (one LoS path is always present).
    pub nlos_paths: usize,
    /// Variance of the LoS complex gain.
    pub los_variance: f64,
    /// Variance of every NLoS complex gain.
    pub nlos_variance: f64,
    /// Interval the spatial directions are drawn from, uniformly.
    pub direction_range: (f64, f64),
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            antennas: 256,
            users: 32,
            nlos_paths: 2,
            los_variance: 1.0,
            nlos_variance: 0.1,
            direction_range: (-0.5, 0.5),
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if self.antennas < 2 {
            return Err(Error::InvalidDimension(format!(
                "antenna count must be at least 2, got {}",
                self.antennas
            )));
        }
        if self.users == 0 {
            return Err(Error::InvalidDimension("user count must be at least 1".into()));
        }
        if !(self.los_variance > 0.0 && self.los_variance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "LoS variance must be positive, got {}",
                self.los_variance
            )));
        }
        if !(self.nlos_variance >= 0.0 && self.nlos_variance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "NLoS variance must be non-negative, got {}",
                self.nlos_variance
            )));
        }
        let (lo, hi) = self.direction_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidParameter(format!(
                "bad direction range [{lo}, {hi}]"
            )));
        }
        Ok(())
    }
}

/// One propagation path: complex gain and spatial direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathRecord {
    pub gain: Complex,
    pub direction: f64,
}

/// Spatial channel of one user together with the paths it was built from.
/// `paths[0]` is the LoS path.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialChannel {
    pub paths: Vec<PathRecord>,
    pub vector: CVector,
}

impl SpatialChannel {
    /// Rebuilds `sum_l beta_l a(theta_l)` from the stored paths.
    pub fn reconstruct(&self) -> CVector {
        let n = self.vector.len();
        let mut h = CVector::zeros(n);
        for path in &self.paths {
            let a = steering_vector(path.direction, n).expect("stored channel has n >= 1");
            h.axpy(path.gain, &a, Complex::new(1.0, 0.0));
        }
        h
    }
}

/// ULA steering vector `a(theta)` with entries `exp(-j 2 pi theta m) / sqrt(N)`
/// for the symmetric index set `m = i - (N - 1) / 2`.
pub fn steering_vector(theta: f64, n: usize) -> Result<CVector> {
    if n == 0 {
        return Err(Error::InvalidDimension("steering vector needs N >= 1".into()));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let center = (n as f64 - 1.0) / 2.0;
    Ok(CVector::from_iterator(
        n,
        (0..n).map(|i| {
            let m = i as f64 - center;
            Complex::from_polar(scale, -2.0 * PI * theta * m)
        }),
    ))
}

/// Circularly-symmetric complex Gaussian sample with total variance `variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex {
    let x: f64 = StandardNormal.sample(rng);
    let y: f64 = StandardNormal.sample(rng);
    Complex::new(x, y) * (variance / 2.0).sqrt()
}

/// Draws one user's channel: LoS path plus `L` NLoS paths.
pub fn sample_user_channel<R: Rng + ?Sized>(
    params: &ChannelParams,
    rng: &mut R,
) -> Result<SpatialChannel> {
    params.validate()?;
    let (lo, hi) = params.direction_range;
    let directions = Uniform::new_inclusive(lo, hi)
        .map_err(|e| Error::InvalidParameter(format!("direction range: {e}")))?;

    let mut paths = Vec::with_capacity(params.nlos_paths + 1);
    for l in 0..=params.nlos_paths {
        let variance = if l == 0 {
            params.los_variance
        } else {
            params.nlos_variance
        };
        let gain = complex_gaussian(rng, variance);
        let direction = directions.sample(rng);
        paths.push(PathRecord { gain, direction });
    }

    let n = params.antennas;
    let mut vector = CVector::zeros(n);
    for path in &paths {
        let a = steering_vector(path.direction, n)?;
        vector.axpy(path.gain, &a, Complex::new(1.0, 0.0));
    }
    Ok(SpatialChannel { paths, vector })
}

/// The lens antenna array as an `N x N` spatial DFT matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LensMatrix {
    /// Row `n` is `a(grid[n])^H`.
    pub matrix: CMatrix,
    /// Beam directions `(1/N)(n - (N + 1)/2)` for `n = 1..N`.
    pub grid: Vec<f64>,
}

impl LensMatrix {
    pub fn size(&self) -> usize {
        self.grid.len()
    }
}

/// Grid direction of 0-based beam `index` for an `n`-element array.
pub fn grid_direction(index: usize, n: usize) -> f64 {
    ((index + 1) as f64 - (n as f64 + 1.0) / 2.0) / n as f64
}

pub fn lens_transform_matrix(n: usize) -> Result<LensMatrix> {
    if n < 2 {
        return Err(Error::InvalidDimension(format!(
            "lens matrix needs N >= 2, got {n}"
        )));
    }
    let grid: Vec<f64> = (0..n).map(|i| grid_direction(i, n)).collect();
    let mut matrix = CMatrix::zeros(n, n);
    for (row, &theta) in grid.iter().enumerate() {
        let a = steering_vector(theta, n)?;
        for col in 0..n {
            matrix[(row, col)] = a[col].conj();
        }
    }
    Ok(LensMatrix { matrix, grid })
}

/// Beamspace channel matrix `H_bar = U H`; column `k` belongs to user `k`,
/// row `n` to beam `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamspaceChannel {
    pub matrix: CMatrix,
}

impl BeamspaceChannel {
    pub fn beams(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn users(&self) -> usize {
        self.matrix.ncols()
    }
}

pub fn to_beamspace(spatial: &CMatrix, lens: &LensMatrix) -> Result<BeamspaceChannel> {
    if spatial.nrows() != lens.size() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} rows", lens.size()),
            got: format!("{} rows", spatial.nrows()),
        });
    }
    Ok(BeamspaceChannel {
        matrix: &lens.matrix * spatial,
    })
}

/// Everything drawn for one Monte Carlo trial.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub trial_seed: u64,
    pub users: Vec<SpatialChannel>,
    /// `N x K`, column `k` is user `k`'s spatial channel.
    pub spatial: CMatrix,
    pub beamspace: BeamspaceChannel,
}

impl ChannelRealization {
    /// Draws the `K` users of a trial, user `k` from substream `k` of
    /// `trial_seed`.
    pub fn sample(params: &ChannelParams, lens: &LensMatrix, trial_seed: u64) -> Result<Self> {
        params.validate()?;
        let mut users = Vec::with_capacity(params.users);
        for k in 0..params.users {
            let mut rng = user_stream(trial_seed, k as u64);
            users.push(sample_user_channel(params, &mut rng)?);
        }
        let columns: Vec<CVector> = users.iter().map(|u| u.vector.clone()).collect();
        let spatial = CMatrix::from_columns(&columns);
        let beamspace = to_beamspace(&spatial, lens)?;
        Ok(Self {
            trial_seed,
            users,
            spatial,
            beamspace,
        })
    }

    /// FNV-1a digest of the spatial channel bits; equal realizations hash
    /// equal, so paired schemes can be checked to share one draw.
    pub fn fingerprint(&self) -> u64 {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |x: u64| {
            for byte in x.to_le_bytes() {
                hash ^= byte as u64;
                hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        feed(self.spatial.nrows() as u64);
        feed(self.spatial.ncols() as u64);
        for z in self.spatial.iter() {
            feed(z.re.to_bits());
            feed(z.im.to_bits());
        }
        hash
    }
}
