//! One Monte Carlo trial: a single channel realization shared by every
//! scheme and SNR point.

use crate::baselines::{beamspace_mimo_single_user, fully_digital_zf, mimo_oma, Scheme, SchemeResult};
use crate::channel::{lens_transform_matrix, ChannelRealization, LensMatrix};
use crate::harness::config::SystemConfig;
use crate::pipeline::NomaLink;
use crate::precoding::EquivalentVariant;
use crate::rates::{energy_efficiency, LinkBudget};
use crate::rng::trial_seed;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub trial: usize,
    pub seed: u64,
    pub snr_db: f64,
    pub scheme: Scheme,
    pub variant: EquivalentVariant,
    pub users: usize,
    pub n_rf: usize,
    pub sum_rate: f64,
    pub energy_efficiency: f64,
    /// Sum rate after every iteration (NOMA only).
    pub trace: Option<Vec<f64>>,
    pub user_rates: Vec<f64>,
    /// Whether the minimum rates were met (NOMA only).
    pub feasible: Option<bool>,
    /// Reason the trial was dropped for this scheme.
    pub dropped: Option<String>,
    /// Fingerprint of the channel realization.
    pub realization: u64,
}

impl ExperimentRecord {
    pub fn is_dropped(&self) -> bool {
        self.dropped.is_some()
    }
}

/// Configuration plus the cached lens matrix.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: SystemConfig,
    lens: LensMatrix,
}

impl Experiment {
    pub fn new(config: SystemConfig) -> Result<Self> {
        config.validate()?;
        let lens = lens_transform_matrix(config.antennas)?;
        Ok(Self { config, lens })
    }

    pub fn lens(&self) -> &LensMatrix {
        &self.lens
    }

    pub fn realization(&self, trial: usize, users: usize) -> Result<ChannelRealization> {
        let seed = trial_seed(self.config.seed, trial as u64);
        ChannelRealization::sample(&self.config.channel_params(users), &self.lens, seed)
    }

    /// Records for every SNR point and scheme, in that nesting order.
    pub fn run_trial(&self, trial: usize, users: usize) -> Result<Vec<ExperimentRecord>> {
        let cfg = &self.config;
        let realization = self.realization(trial, users)?;
        let needs_link = cfg
            .schemes
            .iter()
            .any(|s| matches!(s, Scheme::Noma | Scheme::Oma));
        let link = if needs_link {
            Some(NomaLink::build(&realization.beamspace, cfg.variant).map_err(|e| e.to_string()))
        } else {
            None
        };
        let optimizer = cfg.optimizer();

        let mut records = Vec::with_capacity(cfg.snr.points().len() * cfg.schemes.len());
        for snr_db in cfg.snr_points() {
            let budget = LinkBudget::from_snr_db(cfg.total_power_mw, snr_db)?;
            for &scheme in &cfg.schemes {
                let mut trace = None;
                let mut feasible = None;
                let outcome: std::result::Result<SchemeResult, String> = match scheme {
                    Scheme::Noma => link_ref(&link).and_then(|link| {
                        let alloc = link.allocate(&budget, &optimizer).map_err(|e| e.to_string())?;
                        let report = link.rates(&alloc.powers, &budget);
                        trace = Some(alloc.trace);
                        feasible = Some(alloc.feasible);
                        Ok(SchemeResult::from_report(Scheme::Noma, &report))
                    }),
                    Scheme::Oma => link_ref(&link).map(|link| mimo_oma(&link.grouping, &link.gains, &budget)),
                    Scheme::FullyDigital => {
                        fully_digital_zf(&realization.spatial, &budget).map_err(|e| e.to_string())
                    }
                    Scheme::BeamspaceMimo => {
                        beamspace_mimo_single_user(&realization.beamspace, &budget).map_err(|e| e.to_string())
                    }
                };
                let base = ExperimentRecord {
                    trial,
                    seed: realization.trial_seed,
                    snr_db,
                    scheme,
                    variant: cfg.variant,
                    users,
                    n_rf: 0,
                    sum_rate: f64::NAN,
                    energy_efficiency: f64::NAN,
                    trace: None,
                    user_rates: Vec::new(),
                    feasible: None,
                    dropped: None,
                    realization: realization.fingerprint(),
                };
                records.push(match outcome {
                    Ok(r) => ExperimentRecord {
                        n_rf: r.n_rf,
                        sum_rate: r.sum_rate,
                        energy_efficiency: energy_efficiency(r.sum_rate, r.n_rf, &budget, &cfg.power_model),
                        trace,
                        user_rates: r.rates,
                        feasible,
                        ..base
                    },
                    Err(reason) => ExperimentRecord {
                        dropped: Some(reason),
                        ..base
                    },
                });
            }
        }
        Ok(records)
    }
}

fn link_ref(link: &Option<std::result::Result<NomaLink, String>>) -> std::result::Result<&NomaLink, String> {
    match link {
        Some(Ok(link)) => Ok(link),
        Some(Err(reason)) => Err(reason.clone()),
        None => unreachable!("link requested but not built"),
    }
}
