//! Run configuration: a flat TOML file of keys and arrays, overridable from
//! the command line. Unset keys fall back to the defaults of the experiment
//! they feed.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{
    CThetaConfig, IdentityConfig, IntersectionConfig, RangeCapacityConfig, SpineFractionConfig,
};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "BCAPLAB_OUTPUT_DIR";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Worker threads; 0 or unset uses every core.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub far_distances: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub walks_per_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub guard: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub guard_power: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batches: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
}

macro_rules! overlay {
    ($self:ident, $other:ident; $($f:ident),*) => {
        $(if $other.$f.is_some() { $self.$f = $other.$f.clone(); })*
    };
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::validation(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Keys set in `other` replace those in `self`.
    pub fn merge(&mut self, other: &RunConfig) {
        overlay!(self, other; experiment, seed, d, mu, theta, xi, output_dir, workers, n_grid, eps_grid,
            r_grid, far_distances, walks_per_n, trials, samples, budget, levels, guard, guard_power,
            batches, eta, x);
    }

    /// Checks that do not depend on the experiment.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: Option<u64>| match v {
            Some(0) => Err(Error::validation(format!("{name} must be positive"))),
            _ => Ok(()),
        };
        positive("trials", self.trials)?;
        positive("samples", self.samples.map(|v| v as u64))?;
        positive("walks_per_n", self.walks_per_n.map(|v| v as u64))?;
        positive("budget", self.budget.map(|v| v as u64))?;
        positive("levels", self.levels.map(|v| v as u64))?;
        positive("batches", self.batches.map(|v| v as u64))?;
        if let Some(d) = self.d {
            if !(1..=crate::MAX_DIM).contains(&d) {
                return Err(Error::validation(format!("dimension {d} outside 1..={}", crate::MAX_DIM)));
            }
        }
        if let Some(g) = &self.n_grid {
            if g.is_empty() || g.contains(&0) {
                return Err(Error::validation("n_grid entries must be positive"));
            }
        }
        for (name, g) in [("eps_grid", &self.eps_grid), ("far_distances", &self.far_distances)] {
            if let Some(g) = g {
                if g.is_empty() || g.iter().any(|v| !(*v > 0.0)) {
                    return Err(Error::validation(format!("{name} entries must be positive")));
                }
            }
        }
        if let Some(g) = &self.r_grid {
            if g.iter().any(|r| !(0.0..=1.0).contains(r)) {
                return Err(Error::validation("r_grid entries must lie in [0, 1]"));
            }
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta < 1.0) {
                return Err(Error::validation(format!("eta = {eta} outside (0, 1)")));
            }
        }
        if let (Some(x), Some(d)) = (&self.x, self.d) {
            if x.len() != d {
                return Err(Error::validation(format!("x has {} coordinates, d = {d}", x.len())));
            }
        }
        if let Some(g) = self.guard {
            if !(g > 0.0) {
                return Err(Error::validation("guard must be positive"));
            }
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }

    /// Explicit directory, else the environment variable, else `./out`.
    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    fn dim(&self, default: usize) -> usize {
        self.d.unwrap_or(default)
    }

    pub fn range_capacity(&self) -> RangeCapacityConfig {
        let d = self.dim(5);
        let mut c = RangeCapacityConfig::for_dimension(d);
        c.seed = self.seed();
        set(&mut c.mu, &self.mu);
        set(&mut c.theta, &self.theta);
        set(&mut c.xi, &self.xi);
        set(&mut c.n_grid, &self.n_grid);
        set(&mut c.walks_per_n, &self.walks_per_n);
        set(&mut c.trials, &self.trials);
        set(&mut c.budget, &self.budget);
        set(&mut c.levels, &self.levels);
        set(&mut c.guard, &self.guard);
        set(&mut c.guard_power, &self.guard_power);
        set(&mut c.batches, &self.batches);
        c
    }

    pub fn intersection(&self) -> IntersectionConfig {
        let mut c = IntersectionConfig { seed: self.seed(), ..IntersectionConfig::default() };
        if let Some(d) = self.d {
            c.theta = format!("srw({d})");
            c.xi = format!("srw({d})");
            c.x = (0..d).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
        }
        set(&mut c.mu, &self.mu);
        set(&mut c.theta, &self.theta);
        set(&mut c.xi, &self.xi);
        set(&mut c.x, &self.x);
        set(&mut c.eta, &self.eta);
        set(&mut c.eps_grid, &self.eps_grid);
        set(&mut c.n_grid, &self.n_grid);
        if let Some(t) = self.trials {
            c.trials = t as usize;
        }
        if self.budget.is_some() {
            c.budget = self.budget;
        }
        c
    }

    pub fn spine_fraction(&self) -> SpineFractionConfig {
        let mut c = SpineFractionConfig { seed: self.seed(), ..SpineFractionConfig::default() };
        set(&mut c.mu, &self.mu);
        set(&mut c.n_grid, &self.n_grid);
        set(&mut c.r_grid, &self.r_grid);
        set(&mut c.samples, &self.samples);
        c
    }

    pub fn identities(&self) -> IdentityConfig {
        let mut c = IdentityConfig { seed: self.seed(), ..IdentityConfig::default() };
        if let Some(d) = self.d {
            c.theta = format!("srw({d})");
        }
        set(&mut c.mu, &self.mu);
        set(&mut c.theta, &self.theta);
        set(&mut c.translation_samples, &self.samples);
        c
    }

    pub fn c_theta(&self) -> CThetaConfig {
        let mut c = CThetaConfig { seed: self.seed(), ..CThetaConfig::default() };
        if let Some(d) = self.d {
            c.theta = format!("srw({d})");
        }
        set(&mut c.mu, &self.mu);
        set(&mut c.theta, &self.theta);
        c
    }
}

fn set<T: Clone>(slot: &mut T, value: &Option<T>) {
    if let Some(v) = value {
        *slot = v.clone();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let cfg = RunConfig {
            experiment: Some("range-capacity".into()),
            seed: Some(7),
            d: Some(6),
            mu: Some("geometric(0.5)".into()),
            n_grid: Some(vec![250, 1000]),
            eps_grid: Some(vec![0.05, 0.1]),
            guard: Some(0.75),
            x: Some(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
            output_dir: Some("runs/a".into()),
            ..RunConfig::default()
        };
        let text = cfg.to_toml();
        assert!(text.contains("n_grid = [250, 1000]"), "{text}");
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn validation_and_merge() {
        assert!(RunConfig::from_toml("eta = 1.5").is_err());
        assert!(RunConfig::from_toml("trials = 0").is_err());
        assert!(RunConfig::from_toml("colour = 3").is_err());
        let mut base = RunConfig::from_toml("seed = 3\nd = 5\n").unwrap();
        base.merge(&RunConfig { seed: Some(9), ..RunConfig::default() });
        assert_eq!((base.seed(), base.d), (9, Some(5)));
        let r = base.range_capacity();
        assert_eq!((r.seed, r.d, r.theta.as_str()), (9, 5, "srw(5)"));
    }
}
