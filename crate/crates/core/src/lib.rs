//! Downlink mmWave beamspace MIMO-NOMA link-level simulator.
//!
//! The crate models a base station with an `N`-element uniform linear array
//! behind a lens antenna array serving `K` single-antenna users. The pipeline
//! for one channel realization is:
//!
//! 1. [`channel`]: draw Saleh-Valenzuela spatial channels and move them to the
//!    beamspace domain through the lens (spatial DFT) matrix.
//! 2. [`beams`]: pick one dominant beam per user, collect conflicting users of
//!    a beam into one NOMA group and extract the dimension-reduced channels.
//! 3. [`precoding`]: build one equivalent channel per beam (strongest user or
//!    dominant singular direction) and a normalized zero-forcing precoder.
//! 4. [`power`]: iterative equalizer / weight / power updates that maximize the
//!    sum rate under a total power budget and per-user minimum rates.
//! 5. [`rates`]: SINR, achievable rates, sum spectral efficiency and energy
//!    efficiency.
//!
//! [`baselines`] holds the comparison schemes (fully digital ZF, single user
//! per beam beamspace MIMO, MIMO-OMA) and [`harness`] runs seeded Monte Carlo
//! sweeps and writes CSV/JSON results. See the crate's `examples/` directory
//! for one runnable program per capability.

pub mod baselines;
pub mod beams;
pub mod channel;
pub mod error;
pub mod harness;
pub mod pipeline;
pub mod power;
pub mod precoding;
pub mod rates;
pub mod rng;

pub use error::{Error, Result};

/// Complex scalar used for every channel gain and precoder entry.
pub type Complex = nalgebra::Complex<f64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<Complex>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<Complex>;
