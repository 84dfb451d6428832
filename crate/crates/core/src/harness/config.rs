use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::models::{Lgss, Sir};
use crate::smc2::ProposalKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lgss,
    Sir,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Lgss => "lgss",
            ModelKind::Sir => "sir",
        }
    }

    pub fn default_theta(self) -> Vec<f64> {
        match self {
            ModelKind::Lgss => Lgss::TRUE_THETA.to_vec(),
            ModelKind::Sir => Sir::TRUE_THETA.to_vec(),
        }
    }

    pub fn default_t(self) -> usize {
        match self {
            ModelKind::Lgss => 500,
            ModelKind::Sir => 36,
        }
    }

    pub fn n_params(self) -> usize {
        match self {
            ModelKind::Lgss => 3,
            ModelKind::Sir => 2,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lgss" => Ok(ModelKind::Lgss),
            "sir" => Ok(ModelKind::Sir),
            _ => Err(HarnessError::Invalid(format!("unknown model {s:?} (expected lgss or sir)"))),
        }
    }
}

/// Default step-size range per proposal, log-spaced.
pub fn default_range(kind: ProposalKind) -> (f64, f64) {
    match kind {
        ProposalKind::Rw => (0.05, 1.5),
        ProposalKind::Fo => (0.005, 0.1),
        ProposalKind::So => (0.25, 3.0),
    }
}

/// `count` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| {
                    if i == 0 {
                        lo
                    } else if i == count - 1 {
                        hi
                    } else {
                        (a + (b - a) * i as f64 / (count - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// A sweep description. Read from a flat TOML file; every key except
/// `model` and `master_seed` has a default.
///
/// ```toml
/// model = "lgss"
/// master_seed = 7
/// t = 500
/// n_seeds = 5
/// proposals = ["rw", "fo", "so"]
/// grid_count = 20
/// eps_so = [1.55]           # explicit list wins over the range
/// range_rw = [0.05, 1.5]
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub master_seed: u64,
    #[serde(default)]
    pub true_theta: Option<Vec<f64>>,
    #[serde(default)]
    pub t: Option<usize>,
    #[serde(default = "defaults::n_seeds")]
    pub n_seeds: usize,
    #[serde(default)]
    pub first_seed: u64,
    #[serde(default = "defaults::n_particles")]
    pub n_particles: usize,
    #[serde(default = "defaults::n_samples")]
    pub n_samples: usize,
    #[serde(default = "defaults::iterations")]
    pub iterations: usize,
    #[serde(default = "defaults::proposals")]
    pub proposals: Vec<ProposalKind>,
    #[serde(default = "defaults::grid_count")]
    pub grid_count: usize,
    #[serde(default)]
    pub eps_rw: Option<Vec<f64>>,
    #[serde(default)]
    pub eps_fo: Option<Vec<f64>>,
    #[serde(default)]
    pub eps_so: Option<Vec<f64>>,
    #[serde(default)]
    pub range_rw: Option<[f64; 2]>,
    #[serde(default)]
    pub range_fo: Option<[f64; 2]>,
    #[serde(default)]
    pub range_so: Option<[f64; 2]>,
    /// SIR noise variance.
    #[serde(default)]
    pub noise_var: Option<f64>,
    /// Read `<model>_seed<seed>.csv` from here instead of simulating.
    #[serde(default)]
    pub data_dir: Option<PathBuf>,
    /// Sample indices whose `neg_hess` is replaced by an indefinite matrix
    /// before every SO move.
    #[serde(default)]
    pub inject_indefinite: Vec<usize>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

mod defaults {
    use crate::smc2::ProposalKind;
    pub fn n_seeds() -> usize {
        5
    }
    pub fn n_particles() -> usize {
        500
    }
    pub fn n_samples() -> usize {
        32
    }
    pub fn iterations() -> usize {
        15
    }
    pub fn proposals() -> Vec<ProposalKind> {
        ProposalKind::ALL.to_vec()
    }
    pub fn grid_count() -> usize {
        20
    }
}

impl ExperimentConfig {
    pub fn new(model: ModelKind, master_seed: u64) -> Self {
        ExperimentConfig {
            model,
            master_seed,
            true_theta: None,
            t: None,
            n_seeds: defaults::n_seeds(),
            first_seed: 0,
            n_particles: defaults::n_particles(),
            n_samples: defaults::n_samples(),
            iterations: defaults::iterations(),
            proposals: defaults::proposals(),
            grid_count: defaults::grid_count(),
            eps_rw: None,
            eps_fo: None,
            eps_so: None,
            range_rw: None,
            range_fo: None,
            range_so: None,
            noise_var: None,
            data_dir: None,
            inject_indefinite: Vec::new(),
            workers: None,
            out: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Config {
            path: None,
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            HarnessError::Config { message, .. } => HarnessError::Config {
                path: Some(path.to_path_buf()),
                message,
            },
            other => other,
        })
    }

    pub fn theta(&self) -> Vec<f64> {
        self.true_theta.clone().unwrap_or_else(|| self.model.default_theta())
    }

    pub fn t_len(&self) -> usize {
        self.t.unwrap_or_else(|| self.model.default_t())
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.n_seeds as u64).map(|s| self.first_seed + s).collect()
    }

    pub fn grid(&self, kind: ProposalKind) -> Vec<f64> {
        let (list, range) = match kind {
            ProposalKind::Rw => (&self.eps_rw, self.range_rw),
            ProposalKind::Fo => (&self.eps_fo, self.range_fo),
            ProposalKind::So => (&self.eps_so, self.range_so),
        };
        if let Some(list) = list {
            return list.clone();
        }
        let (lo, hi) = range.map(|[a, b]| (a, b)).unwrap_or_else(|| default_range(kind));
        log_grid(lo, hi, self.grid_count)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Invalid(m));
        if self.n_seeds == 0 || self.n_particles < 2 || self.n_samples < 2 || self.iterations == 0 {
            return bad("n_seeds and iterations must be ≥ 1, n_particles and n_samples ≥ 2".into());
        }
        if self.t_len() == 0 {
            return bad("t must be ≥ 1".into());
        }
        if self.theta().len() != self.model.n_params() {
            return bad(format!("{} takes {} parameters", self.model, self.model.n_params()));
        }
        if self.proposals.is_empty() {
            return bad("no proposals selected".into());
        }
        for &kind in &self.proposals {
            let grid = self.grid(kind);
            if grid.is_empty() {
                return bad(format!("empty step-size grid for {kind}"));
            }
            if let Some(e) = grid.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
                return bad(format!("step size {e} for {kind} is not positive"));
            }
        }
        if self.workers == Some(0) {
            return bad("workers must be ≥ 1".into());
        }
        if let Some(i) = self.inject_indefinite.iter().find(|&&i| i >= self.n_samples) {
            return bad(format!("inject_indefinite index {i} ≥ n_samples"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(0.05, 1.5, 20);
        assert_eq!(g.len(), 20);
        assert_eq!(g[0], 0.05);
        assert_eq!(g[19], 1.5);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        let ratio = g[1] / g[0];
        assert!((g[10] / g[9] - ratio).abs() < 1e-12);
        assert_eq!(log_grid(0.3, 2.0, 1), vec![0.3]);
    }

    #[test]
    fn parse_flat_toml() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            model = "sir"
            master_seed = 3
            n_seeds = 2
            proposals = ["rw", "so"]
            eps_so = [2.05]
            range_rw = [0.1, 1.0]
            grid_count = 4
            "#,
        )
        .unwrap();
        assert_eq!(cfg.model, ModelKind::Sir);
        assert_eq!(cfg.t_len(), 36);
        assert_eq!(cfg.grid(ProposalKind::So), vec![2.05]);
        assert_eq!(cfg.grid(ProposalKind::Rw).len(), 4);
        assert_eq!(cfg.grid(ProposalKind::Fo).len(), 4);
        assert_eq!(cfg.theta(), vec![0.6, 0.3]);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_toml_str("model = \"lgss\"").is_err());
        assert!(ExperimentConfig::from_toml_str("model = \"lgss\"\nmaster_seed = 1\nbogus = 2").is_err());
        assert!(ExperimentConfig::from_toml_str("model = \"lgss\"\nmaster_seed = 1\neps_rw = [-1.0]").is_err());
        assert!(ExperimentConfig::from_toml_str("model = \"sir\"\nmaster_seed = 1\ntrue_theta = [1.0]").is_err());
    }
}
