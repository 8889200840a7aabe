//! Experiment configuration file.
//!
//! ```toml
//! [scenario]
//! num_bs = 4
//! num_files = 3
//! segments_per_file = 3
//! cache_capacity = 2
//! backhaul_delay_slots = 1.0
//! rate_bits = 2.5
//! buffer_m = 1
//! avg_snr_db = 10.0
//! zipf_gamma = 0.6
//!
//! [sweep]
//! delta_values = [0.0, 1.0, 2.0]
//! strategies = ["sca", "exhaustive"]
//! ```
//!
//! `[solver]`, `[sim]` and `[sweep]` are optional. Unknown keys are rejected.

use std::fmt;
use std::path::Path;

use bhcache::baselines::DEFAULT_ENUMERATION_CAP;
use bhcache::{db_to_linear, zipf_popularity, Init, Scenario, SimConfig, SolverConfig, StepRule};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSection,
    #[serde(default, skip_serializing_if = "SolverSection::is_empty")]
    pub solver: SolverSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub num_bs: usize,
    pub num_files: usize,
    pub segments_per_file: usize,
    pub cache_capacity: usize,
    pub backhaul_delay_slots: f64,
    pub rate_bits: f64,
    pub buffer_m: u32,
    pub avg_snr_db: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zipf_gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub popularity: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    Constant,
    Diminishing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    Uniform,
    Popularity,
    Mpc,
    Lcd,
}

/// Every key falls back to the solver default when absent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_rule: Option<StepKind>,
    /// Used with the constant rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_size: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prox_weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain_floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subproblem_tol: Option<f64>,
}

impl SolverSection {
    fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    /// Zero disables simulation in sweeps.
    #[serde(default)]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_slots")]
    pub max_slots_per_segment: u64,
}

fn default_max_slots() -> u64 {
    SimConfig::default().max_slots_per_segment
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            trials: 0,
            seed: 0,
            max_slots_per_segment: default_max_slots(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Sca,
    Mpc,
    #[serde(rename = "mpc-paper-formula")]
    MpcLiteral,
    Lcd,
    Exhaustive,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Sca,
        Strategy::Mpc,
        Strategy::MpcLiteral,
        Strategy::Lcd,
        Strategy::Exhaustive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Sca => "sca",
            Strategy::Mpc => "mpc",
            Strategy::MpcLiteral => "mpc-paper-formula",
            Strategy::Lcd => "lcd",
            Strategy::Exhaustive => "exhaustive",
        }
    }

    pub fn parse(name: &str) -> Option<Strategy> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Defaults to the scenario's own backhaul delay.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub delta_values: Vec<f64>,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<Strategy>,
    /// Largest `(K + 1)^(F L)` the exhaustive strategy will enumerate.
    #[serde(default = "default_cap")]
    pub enumeration_cap: u64,
}

fn default_strategies() -> Vec<Strategy> {
    vec![Strategy::Sca, Strategy::Mpc, Strategy::Lcd]
}

fn default_cap() -> u64 {
    DEFAULT_ENUMERATION_CAP as u64
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            delta_values: Vec::new(),
            strategies: default_strategies(),
            enumeration_cap: default_cap(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.check()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    fn check(&self) -> Result<(), CliError> {
        let s = &self.scenario;
        match (&s.zipf_gamma, &s.popularity) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "scenario: give either zipf_gamma or popularity, not both".into(),
                ))
            }
            (None, None) => {
                return Err(CliError::Config(
                    "scenario: one of zipf_gamma or popularity is required".into(),
                ))
            }
            (Some(g), None) if !(g.is_finite() && *g >= 0.0) => {
                return Err(CliError::Config(format!("scenario: zipf_gamma {g} must be >= 0")))
            }
            _ => {}
        }
        if s.num_files == 0 {
            return Err(CliError::Config("scenario: num_files must be at least 1".into()));
        }
        if self.sweep.strategies.is_empty() {
            return Err(CliError::Config("sweep: strategies is empty".into()));
        }
        if let Some(d) = self.sweep.delta_values.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(CliError::Config(format!("sweep: delta value {d} must be >= 0")));
        }
        self.scenario()?;
        self.solver_config().validate()?;
        Ok(())
    }

    /// The validated scenario at its configured backhaul delay.
    pub fn scenario(&self) -> Result<Scenario, CliError> {
        let s = &self.scenario;
        let popularity = match (&s.popularity, s.zipf_gamma) {
            (Some(p), _) => p.clone(),
            (None, Some(g)) => zipf_popularity(s.num_files, g),
            (None, None) => Vec::new(),
        };
        let scenario = Scenario {
            num_bs: s.num_bs,
            num_files: s.num_files,
            segments_per_file: s.segments_per_file,
            cache_capacity: s.cache_capacity,
            backhaul_delay: s.backhaul_delay_slots,
            rate: s.rate_bits,
            buffer: s.buffer_m,
            avg_snr: db_to_linear(s.avg_snr_db),
            popularity,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn solver_config(&self) -> SolverConfig {
        let d = SolverConfig::default();
        let s = &self.solver;
        let step = match s.step_rule {
            Some(StepKind::Diminishing) => StepRule::Diminishing,
            Some(StepKind::Constant) | None => match s.step_size {
                Some(eta) => StepRule::Constant(eta),
                None => d.step,
            },
        };
        SolverConfig {
            step,
            prox_weight: s.prox_weight.unwrap_or(d.prox_weight),
            smoothing_a: s.smoothing_a.unwrap_or(d.smoothing_a),
            domain_floor: s.domain_floor.unwrap_or(d.domain_floor),
            tol: s.tol.unwrap_or(d.tol),
            max_iters: s.max_iters.unwrap_or(d.max_iters),
            init: match s.init {
                Some(InitKind::Uniform) => Init::Uniform,
                Some(InitKind::Popularity) | None => Init::PopularityProportional,
                Some(InitKind::Mpc) => Init::Mpc,
                Some(InitKind::Lcd) => Init::Lcd,
            },
            subproblem_tol: s.subproblem_tol.unwrap_or(d.subproblem_tol),
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            trials: self.sim.trials,
            rng_seed: self.sim.seed,
            max_slots_per_segment: self.sim.max_slots_per_segment,
        }
    }

    pub fn delta_values(&self) -> Vec<f64> {
        if self.sweep.delta_values.is_empty() {
            vec![self.scenario.backhaul_delay_slots]
        } else {
            self.sweep.delta_values.clone()
        }
    }
}
