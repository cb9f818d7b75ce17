//! System configuration and its flat `key = value` file format.

use std::path::{Path, PathBuf};

use crate::baselines::Scheme;
use crate::channel::ChannelParams;
use crate::power::OptimizerConfig;
use crate::precoding::EquivalentVariant;
use crate::rates::PowerModel;
use crate::{Error, Result};

/// Inclusive SNR grid `start, start + step, ... <= stop` in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrSweep {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SnrSweep {
    pub fn single(snr_db: f64) -> Self {
        Self {
            start: snr_db,
            stop: snr_db,
            step: 1.0,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Config(format!(
                "bad SNR sweep {}:{}:{}",
                self.start, self.stop, self.step
            )));
        }
        if self.stop < self.start {
            return Err(Error::Config(format!(
                "empty SNR sweep: stop {} below start {}",
                self.stop, self.start
            )));
        }
        Ok(())
    }
}

impl std::str::FromStr for SnrSweep {
    type Err = Error;

    /// `start:stop:step` or a single value.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let num = |p: &str| {
            p.parse::<f64>()
                .map_err(|_| Error::Config(format!("bad SNR value '{p}' in '{s}'")))
        };
        let sweep = match parts.as_slice() {
            [one] => Self::single(num(one)?),
            [a, b] => Self {
                start: num(a)?,
                stop: num(b)?,
                step: 1.0,
            },
            [a, b, c] => Self {
                start: num(a)?,
                stop: num(b)?,
                step: num(c)?,
            },
            _ => return Err(Error::Config(format!("bad SNR sweep '{s}'"))),
        };
        sweep.validate()?;
        Ok(sweep)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub antennas: usize,
    /// User counts to run; a single entry unless sweeping `K`.
    pub users: Vec<usize>,
    pub nlos_paths: usize,
    /// Total transmit power `P` in mW.
    pub total_power_mw: f64,
    pub los_variance: f64,
    pub nlos_variance: f64,
    pub snr: SnrSweep,
    pub trials: usize,
    pub seed: u64,
    pub max_iterations: usize,
    pub min_rate: f64,
    pub power_model: PowerModel,
    pub schemes: Vec<Scheme>,
    pub variant: EquivalentVariant,
    pub out: Option<PathBuf>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            antennas: 256,
            users: vec![32],
            nlos_paths: 2,
            total_power_mw: 32.0,
            los_variance: 1.0,
            nlos_variance: 0.1,
            snr: SnrSweep {
                start: 0.0,
                stop: 30.0,
                step: 5.0,
            },
            trials: 200,
            seed: 1,
            max_iterations: 20,
            min_rate: 0.0,
            power_model: PowerModel::default(),
            schemes: Scheme::ALL.to_vec(),
            variant: EquivalentVariant::StrongestUser,
            out: None,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value '{value}' for '{key}'")))
}

pub fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| parse(key, v))
        .collect()
}

pub fn parse_schemes(value: &str) -> Result<Vec<Scheme>> {
    if value.trim().eq_ignore_ascii_case("all") {
        return Ok(Scheme::ALL.to_vec());
    }
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(str::parse)
        .collect()
}

impl SystemConfig {
    /// Sets one field from its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "antennas" | "n" => self.antennas = parse(key, value)?,
            "users" | "k" => self.users = parse_list(key, value)?,
            "paths" | "nlos_paths" | "l" => self.nlos_paths = parse(key, value)?,
            "power_mw" | "total_power_mw" => self.total_power_mw = parse(key, value)?,
            "los_variance" => self.los_variance = parse(key, value)?,
            "nlos_variance" => self.nlos_variance = parse(key, value)?,
            "snr" => self.snr = value.parse()?,
            "snr_start_db" => self.snr.start = parse(key, value)?,
            "snr_stop_db" => self.snr.stop = parse(key, value)?,
            "snr_step_db" => self.snr.step = parse(key, value)?,
            "trials" => self.trials = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "t_max" | "iters" => self.max_iterations = parse(key, value)?,
            "r_min" | "rmin" => self.min_rate = parse(key, value)?,
            "p_rf_mw" => self.power_model.rf_chain = parse(key, value)?,
            "p_sw_mw" => self.power_model.switch = parse(key, value)?,
            "p_bb_mw" => self.power_model.baseband = parse(key, value)?,
            "schemes" => self.schemes = parse_schemes(value)?,
            "variant" => self.variant = value.parse()?,
            "out" => self.out = Some(PathBuf::from(value)),
            other => return Err(Error::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn merge_str(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", i + 1)))?;
            self.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn from_str_with_defaults(text: &str) -> Result<Self> {
        let mut config = Self::default();
        config.merge_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_str_with_defaults(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.users.is_empty() {
            return Err(Error::Config("user list is empty".into()));
        }
        for &k in &self.users {
            self.channel_params(k).validate()?;
        }
        self.snr.validate()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.total_power_mw > 0.0 && self.total_power_mw.is_finite()) {
            return Err(Error::Config(format!(
                "total power must be positive, got {}",
                self.total_power_mw
            )));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("scheme list is empty".into()));
        }
        self.optimizer().validate()
    }

    pub fn channel_params(&self, users: usize) -> ChannelParams {
        ChannelParams {
            antennas: self.antennas,
            users,
            nlos_paths: self.nlos_paths,
            los_variance: self.los_variance,
            nlos_variance: self.nlos_variance,
            ..ChannelParams::default()
        }
    }

    pub fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig {
            max_iterations: self.max_iterations,
            min_rate: self.min_rate,
            ..OptimizerConfig::default()
        }
    }

    pub fn snr_points(&self) -> Vec<f64> {
        self.snr.points()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = SystemConfig::default();
        assert_eq!((c.antennas, c.users.as_slice(), c.nlos_paths), (256, &[32][..], 2));
        assert_eq!((c.total_power_mw, c.max_iterations, c.min_rate), (32.0, 20, 0.0));
        assert_eq!(c.power_model, PowerModel::default());
        assert!(c.validate().is_ok());
    }

    #[test]
    fn snr_grid() {
        let s: SnrSweep = "0:30:5".parse().unwrap();
        assert_eq!(s.points(), vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]);
        let s: SnrSweep = "10".parse().unwrap();
        assert_eq!(s.points(), vec![10.0]);
        let s: SnrSweep = "-5:5:2.5".parse().unwrap();
        assert_eq!(s.points().len(), 5);
        assert!("5:0:1".parse::<SnrSweep>().is_err());
        assert!("0:5:0".parse::<SnrSweep>().is_err());
    }

    #[test]
    fn file_overrides_defaults() {
        let text = "# desk run\nantennas = 64\nusers = 8, 16\nsnr = 0:20:10\n\nschemes = noma,oma\nvariant = svd\nr_min = 1\np_rf_mw = 250\n";
        let c = SystemConfig::from_str_with_defaults(text).unwrap();
        assert_eq!(c.antennas, 64);
        assert_eq!(c.users, vec![8, 16]);
        assert_eq!(c.snr_points(), vec![0.0, 10.0, 20.0]);
        assert_eq!(c.schemes, vec![Scheme::Noma, Scheme::Oma]);
        assert_eq!(c.variant, EquivalentVariant::Svd);
        assert_eq!(c.min_rate, 1.0);
        assert_eq!(c.power_model.rf_chain, 250.0);
        assert_eq!(c.trials, 200);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SystemConfig::from_str_with_defaults("antennas 64").is_err());
        assert!(SystemConfig::from_str_with_defaults("colour = red").is_err());
        assert!(SystemConfig::from_str_with_defaults("trials = 0").is_err());
        assert!(SystemConfig::from_str_with_defaults("users = ").is_err());
        assert!(SystemConfig::from_str_with_defaults("schemes = dpc").is_err());
    }
}
