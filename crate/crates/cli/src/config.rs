//! TOML run configuration.

use std::path::PathBuf;

use fluidq::{ClassLaws, Distribution, InitialCondition, Rect, SimConfig};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub fluid: Option<FluidConfig>,
    pub sim: Option<SimBlock>,
    pub converge: Option<ConvergeConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Number of classes; optional, checked against `classes` when given.
    pub k: Option<usize>,
    pub classes: Vec<ClassConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassConfig {
    /// Interarrival-time law.
    pub arrival: Distribution,
    pub service: Distribution,
    pub deadline: Distribution,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub class: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidConfig {
    #[serde(default)]
    pub w0: Option<f64>,
    pub horizon: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    /// Initial mass spread uniformly on boxes; the initial workload is then
    /// the right edge of their union.
    #[serde(default)]
    pub boxes: Vec<BoxConfig>,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_step() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    #[default]
    Empty,
    /// Warm-up length run from empty before the clock starts.
    Warm(f64),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimBlock {
    #[serde(default = "default_scale")]
    pub n: u64,
    #[serde(default)]
    pub seed: u64,
    pub horizon: f64,
    #[serde(default)]
    pub initial: InitialSpec,
    /// Spacing of the snapshot times written by `simulate`.
    #[serde(default)]
    pub snapshot_step: Option<f64>,
}

fn default_scale() -> u64 {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    pub scales: Vec<u64>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    pub time_grid: Option<Vec<f64>>,
    /// Rectangles as `[a, b, c, d]`; `inf` is allowed for `b` and `d`.
    pub rect_grid: Option<Vec<[f64; 4]>>,
    pub c_grid: Option<Vec<f64>>,
    pub age_grid: Option<Vec<f64>>,
    pub kappas: Option<Vec<f64>>,
}

fn default_reps() -> usize {
    5
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: Option<PathBuf>,
    /// Subset of `csv`, `json`; both are written when empty.
    #[serde(default)]
    pub formats: Vec<String>,
}

impl OutputConfig {
    pub fn wants(&self, format: &str) -> bool {
        self.formats.is_empty() || self.formats.iter().any(|f| f == format)
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.check()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn check(&self) -> Result<(), CliError> {
        if self.model.classes.is_empty() {
            return Err(CliError::Config("model.classes must list at least one class".into()));
        }
        if let Some(k) = self.model.k {
            if k != self.model.classes.len() {
                return Err(CliError::Config(format!(
                    "model.k = {k} but {} classes are listed",
                    self.model.classes.len()
                )));
            }
        }
        for fmt in &self.output.formats {
            if fmt != "csv" && fmt != "json" {
                return Err(CliError::Config(format!("unknown output format {fmt:?}")));
            }
        }
        // law parameters are checked through the simulator's validation
        self.sim_config(1.0, 0)?.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn class_laws(&self) -> Vec<ClassLaws> {
        self.model
            .classes
            .iter()
            .map(|c| ClassLaws {
                interarrival: c.arrival.clone(),
                service: c.service.clone(),
                deadline: c.deadline.clone(),
            })
            .collect()
    }

    fn sim_config(&self, horizon: f64, seed: u64) -> Result<SimConfig, CliError> {
        Ok(SimConfig {
            classes: self.class_laws(),
            horizon,
            scale: 1,
            seed,
            initial: InitialCondition::Empty,
        })
    }

    pub fn sim_block(&self) -> Result<&SimBlock, CliError> {
        self.sim
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [sim] block".into()))
    }

    /// Simulation config from the `[sim]` block with the resolved seed.
    pub fn simulation(&self, seed: u64) -> Result<SimConfig, CliError> {
        let block = self.sim_block()?;
        let config = SimConfig {
            classes: self.class_laws(),
            horizon: block.horizon,
            scale: block.n,
            seed,
            initial: match block.initial {
                InitialSpec::Empty => InitialCondition::Empty,
                InitialSpec::Warm(warmup) => InitialCondition::WarmStart { warmup },
            },
        };
        config.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(config)
    }

    pub fn rect_grid(&self) -> Result<Option<Vec<Rect>>, CliError> {
        let Some(grid) = self.converge.as_ref().and_then(|c| c.rect_grid.as_ref()) else {
            return Ok(None);
        };
        grid.iter()
            .map(|&[a, b, c, d]| Rect::new(a, b, c, d).map_err(|e| CliError::Config(format!("converge.rect_grid: {e}"))))
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MM1M: &str = r#"
[model]
k = 1
[[model.classes]]
arrival = { family = "exponential", rate = 2.0 }
service = { family = "exponential", rate = 1.0 }
deadline = { family = "exponential", rate = 1.0 }

[fluid]
w0 = 0.0
horizon = 5.0

[sim]
seed = 3
horizon = 5.0
initial = { warm = 2.0 }
"#;

    #[test]
    fn parses_example() {
        let config = RunConfig::parse(MM1M).unwrap();
        assert_eq!(config.model.classes.len(), 1);
        let fluid = config.fluid.unwrap();
        assert_eq!(fluid.tol, 1e-10);
        assert_eq!(fluid.step, 0.1);
        let sim = config.sim.unwrap();
        assert_eq!(sim.n, 1);
        assert_eq!(sim.initial, InitialSpec::Warm(2.0));
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let text = MM1M.replace("horizon = 5.0\n\n[sim]", "horizon = 5.0\nhorizn = 1\n\n[sim]");
        let Err(CliError::Config(msg)) = RunConfig::parse(&text) else {
            panic!("expected a config error");
        };
        assert!(msg.contains("horizn"), "{msg}");
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn class_count_mismatch() {
        let text = MM1M.replace("k = 1", "k = 2");
        assert!(matches!(RunConfig::parse(&text), Err(CliError::Config(_))));
    }

    #[test]
    fn bad_law_parameters() {
        let text = MM1M.replace("rate = 2.0", "rate = -2.0");
        assert!(matches!(RunConfig::parse(&text), Err(CliError::Config(_))));
        let text = MM1M.replace(
            r#"deadline = { family = "exponential", rate = 1.0 }"#,
            r#"deadline = { family = "deterministic", value = 1.0 }"#,
        );
        assert!(matches!(RunConfig::parse(&text), Err(CliError::Config(_))));
    }
}
