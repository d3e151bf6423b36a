//! Experiment configuration: one TOML file with four blocks.
//!
//! ```toml
//! [system]            # matrices, or plain numbers for 1x1
//! a = 1.2
//! b = 1.0
//! k = -1.2            # optional for scalar systems (derived from A+BK=0)
//! r = 1.0
//! q = 1.0
//!
//! [channel]
//! kind = "exponential"   # or "table" with probs = [...]
//! p0 = 0.8
//! ratio = 0.5
//!
//! [solver]
//! n = 70
//! m = 5
//!
//! [sim]               # only needed by simulate / fig3
//! t = 50000
//! warmup = 1000
//! seeds = [1, 2, 3]
//! ```

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use wncs_core::{channel::ChannelModel, lti::Matrix, SystemModel64};

/// A number where a 1x1 matrix is meant, or the full nested-row form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixOrScalar {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

impl MatrixOrScalar {
    fn to_matrix(&self, field: &str) -> Result<Matrix<f64>> {
        match self {
            MatrixOrScalar::Scalar(v) => {
                Matrix::scalar(*v).map_err(|e| anyhow!("{field}: {e}"))
            }
            MatrixOrScalar::Matrix(rows) => {
                Matrix::from_rows(rows).map_err(|e| anyhow!("{field}: {e}"))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    pub a: MatrixOrScalar,
    pub b: MatrixOrScalar,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<MatrixOrScalar>,
    pub r: MatrixOrScalar,
    pub q: MatrixOrScalar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ChannelBlock {
    Exponential { p0: f64, ratio: f64 },
    Table { probs: Vec<f64> },
}

fn default_epsilon() -> f64 {
    wncs_core::smdp::DEFAULT_EPSILON
}

fn default_max_iters() -> usize {
    wncs_core::smdp::DEFAULT_MAX_ITERS
}

fn default_fig2_n_list() -> Vec<usize> {
    vec![30, 50, 70]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    pub n: usize,
    pub m: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_fig2_n_list")]
    pub fig2_n_list: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimBlock {
    /// Slots per episode.
    pub t: usize,
    #[serde(default)]
    pub warmup: usize,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemBlock,
    pub channel: ChannelBlock,
    pub solver: SolverBlock,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimBlock>,
    #[serde(default, skip_serializing_if = "is_default_output")]
    pub output: OutputBlock,
}

fn is_default_output(o: &OutputBlock) -> bool {
    o.dir.is_none()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).context("config parse failed")?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text)
    }

    #[allow(dead_code)] // round-trip surface, exercised by tests
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).context("config serialization failed")
    }

    fn check(&self) -> Result<()> {
        if self.solver.m < 1 {
            bail!("solver.m: must be >= 1");
        }
        if self.solver.n < self.solver.m {
            bail!(
                "solver.n: must be >= solver.m ({} < {})",
                self.solver.n,
                self.solver.m
            );
        }
        if self.solver.epsilon <= 0.0 || self.solver.epsilon.is_nan() {
            bail!("solver.epsilon: must be positive");
        }
        if self.solver.fig2_n_list.is_empty() {
            bail!("solver.fig2_n_list: must not be empty");
        }
        if let Some(sim) = &self.sim {
            if sim.t == 0 {
                bail!("sim.t: must be >= 1");
            }
            if sim.warmup >= sim.t {
                bail!("sim.warmup: must be below sim.t");
            }
            if sim.seeds.is_empty() {
                bail!("sim.seeds: must not be empty");
            }
        }
        Ok(())
    }

    /// Builds the validated plant; the cost cache covers `n + m`.
    #[allow(dead_code)] // convenience wrapper, exercised by tests
    pub fn system_model(&self) -> Result<SystemModel64> {
        self.system_model_with_depth(self.solver.n + self.solver.m)
    }

    /// Same plant with a caller-chosen cost-cache depth.
    pub fn system_model_with_depth(&self, d_max: usize) -> Result<SystemModel64> {
        let a = self.system.a.to_matrix("system.a")?;
        let b = self.system.b.to_matrix("system.b")?;
        let r = self.system.r.to_matrix("system.r")?;
        let q = self.system.q.to_matrix("system.q")?;
        let k = match &self.system.k {
            Some(k) => k.to_matrix("system.k")?,
            None => {
                if a.rows() == 1 && b.rows() == 1 && b.cols() == 1 {
                    let bv = b.get(0, 0);
                    if bv == 0.0 {
                        bail!("system.k: cannot derive a gain, system.b is zero");
                    }
                    Matrix::scalar(-a.get(0, 0) / bv).map_err(|e| anyhow!("system.k: {e}"))?
                } else {
                    bail!("system.k: required for non-scalar systems");
                }
            }
        };
        SystemModel64::new(a, b, k, r, q, d_max).map_err(|e| anyhow!("system: {e}"))
    }

    pub fn channel_model(&self) -> Result<ChannelModel<f64>> {
        let ch = match &self.channel {
            ChannelBlock::Exponential { p0, ratio } => ChannelModel::exponential(*p0, *ratio)
                .map_err(|e| anyhow!("channel: {e}"))?,
            ChannelBlock::Table { probs } => ChannelModel::table(probs.clone()),
        };
        ch.require_valid().map_err(|e| anyhow!("channel: {e}"))?;
        Ok(ch)
    }

    pub fn sim_block(&self) -> Result<&SimBlock> {
        self.sim
            .as_ref()
            .ok_or_else(|| anyhow!("sim: block required for this command"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAPER: &str = r#"
[system]
a = 1.2
b = 1.0
r = 1.0
q = 1.0

[channel]
kind = "exponential"
p0 = 0.8
ratio = 0.5

[solver]
n = 70
m = 5

[sim]
t = 50000
warmup = 1000
seeds = [1, 2, 3]
"#;

    #[test]
    fn parses_and_builds_models() {
        let cfg = ExperimentConfig::parse(PAPER).unwrap();
        let sys = cfg.system_model().unwrap();
        assert_eq!(sys.rho(), 1.2);
        assert_eq!(sys.k().get(0, 0), -1.2);
        assert_eq!(sys.cached_d_max(), 75);
        let ch = cfg.channel_model().unwrap();
        assert_eq!(ch.error_prob(1).unwrap(), 0.8);
        assert_eq!(cfg.solver.epsilon, 1e-9);
        assert_eq!(cfg.solver.fig2_n_list, vec![30, 50, 70]);
    }

    #[test]
    fn round_trip_is_identity() {
        let cfg = ExperimentConfig::parse(PAPER).unwrap();
        let text = cfg.to_toml().unwrap();
        let back = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn missing_channel_is_named() {
        let broken = PAPER.replace("[channel]", "[chan]");
        let err = ExperimentConfig::parse(&broken).unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("channel"), "{msg}");
    }

    #[test]
    fn first_bad_field_is_named() {
        let broken = PAPER.replace("p0 = 0.8", "p0 = 1.8");
        let cfg = ExperimentConfig::parse(&broken).unwrap();
        let err = cfg.channel_model().unwrap_err();
        assert!(format!("{err:#}").contains("channel"));

        let broken = PAPER.replace("r = 1.0", "r = -1.0");
        let cfg = ExperimentConfig::parse(&broken).unwrap();
        let err = cfg.system_model().unwrap_err();
        assert!(format!("{err:#}").contains("system"));
    }

    #[test]
    fn matrix_form_accepted() {
        let text = PAPER
            .replace("a = 1.2", "a = [[1.2]]")
            .replace("r = 1.0", "r = [[1.0]]");
        let cfg = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(cfg.system_model().unwrap().rho(), 1.2);
    }

    #[test]
    fn bounds_are_checked() {
        assert!(ExperimentConfig::parse(&PAPER.replace("n = 70", "n = 3")).is_err());
        assert!(ExperimentConfig::parse(&PAPER.replace("seeds = [1, 2, 3]", "seeds = []")).is_err());
        assert!(ExperimentConfig::parse(&PAPER.replace("warmup = 1000", "warmup = 60000")).is_err());
    }

    #[test]
    fn table_channel_parses() {
        let text = PAPER.replace(
            "kind = \"exponential\"\np0 = 0.8\nratio = 0.5",
            "kind = \"table\"\nprobs = [0.8, 0.4, 0.2, 0.1, 0.05]",
        );
        let cfg = ExperimentConfig::parse(&text).unwrap();
        let ch = cfg.channel_model().unwrap();
        assert_eq!(ch.max_length(), Some(5));
    }
}
