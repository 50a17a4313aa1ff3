//! Experiment configuration, read from TOML.
//!
//! Environment sections use the parameter names of the benchmark tables;
//! every default equals the table value. Learner defaults depend on the
//! environment (see [`QlSection::defaults_for`]).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvKind {
    Taxi,
    Trading,
    Elevator,
    LowerBound,
}

impl EnvKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "taxi" => Ok(Self::Taxi),
            "trading" => Ok(Self::Trading),
            "elevator" => Ok(Self::Elevator),
            "lower-bound" | "lower_bound" => Ok(Self::LowerBound),
            other => Err(HarnessError::UnknownName {
                kind: "environment",
                name: other.to_string(),
            }),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Taxi => "taxi",
            Self::Trading => "trading",
            Self::Elevator => "elevator",
            Self::LowerBound => "lower-bound",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgoKind {
    Exavi,
    Ucbvi,
    Exaq,
    Ql,
    Twap,
}

impl AlgoKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "exavi" => Ok(Self::Exavi),
            "ucbvi" => Ok(Self::Ucbvi),
            "exaq" => Ok(Self::Exaq),
            "ql" | "qlearning" => Ok(Self::Ql),
            "twap" => Ok(Self::Twap),
            other => Err(HarnessError::UnknownName {
                kind: "algorithm",
                name: other.to_string(),
            }),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Exavi => "exavi",
            Self::Ucbvi => "ucbvi",
            Self::Exaq => "exaq",
            Self::Ql => "ql",
            Self::Twap => "twap",
        }
    }

    pub fn model_based(&self) -> bool {
        matches!(self, Self::Exavi | Self::Ucbvi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaxiSection {
    pub horizon: usize,
    pub traffic_locations: Vec<(usize, usize)>,
    pub traffic_prob: f64,
}

impl Default for TaxiSection {
    fn default() -> Self {
        let d = pcmdp::env::TaxiSpec::default();
        Self {
            horizon: d.horizon,
            traffic_locations: d.traffic_cells,
            traffic_prob: d.congestion,
        }
    }
}

/// Trading parameters. Unset fields fall back to the desk-scale or
/// full-scale instance, whichever is selected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TradingSection {
    pub horizon: Option<usize>,
    pub price_levels: Option<usize>,
    pub initial_price: Option<f64>,
    pub volatility: Option<f64>,
    pub drift: Option<f64>,
    pub price_granularity: Option<f64>,
    pub initial_inventory: Option<usize>,
    pub risk_aversion: Option<f64>,
    pub transaction_cost: Option<f64>,
    pub adjusted_temp_impact: Option<f64>,
    pub time_interval: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElevatorSection {
    pub horizon: usize,
    pub floors: usize,
    pub capacity: usize,
    pub arrival_rate: Vec<f64>,
    pub max_queue: usize,
    pub max_batch: usize,
    pub delivery_bonus: f64,
    pub waiting_penalty: f64,
}

impl Default for ElevatorSection {
    fn default() -> Self {
        let d = pcmdp::env::ElevatorSpec::default();
        Self {
            horizon: d.horizon,
            floors: d.floors,
            capacity: d.capacity,
            arrival_rate: d.arrival_rates,
            max_queue: d.queue_cap,
            max_batch: d.max_arrivals,
            delivery_bonus: d.delivery_bonus,
            waiting_penalty: d.wait_penalty,
        }
    }
}

/// Lower-bound family: explicit leaf probabilities, or `branching` with the
/// `1/2 ± sqrt(N/K)/4` construction tuned to `tuned_for_episodes` (defaults
/// to the run length).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LowerBoundSection {
    pub branching: usize,
    pub probabilities: Option<Vec<f64>>,
    pub tuned_for_episodes: Option<usize>,
}

impl Default for LowerBoundSection {
    fn default() -> Self {
        Self {
            branching: 4,
            probabilities: None,
            tuned_for_episodes: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UcbviSection {
    pub bonus: f64,
    pub delta: f64,
}

impl Default for UcbviSection {
    fn default() -> Self {
        Self { bonus: 0.5, delta: 1e-6 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QlSection {
    pub learning_rate: Option<f64>,
    pub epsilon_start: Option<f64>,
    pub epsilon_min: Option<f64>,
    pub decay_rate: Option<f64>,
}

/// Resolved Q-learning hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QlParams {
    pub learning_rate: f64,
    pub epsilon_start: f64,
    pub epsilon_min: f64,
    pub decay_rate: f64,
}

impl QlSection {
    /// Per-environment defaults; environments without a tuned row use the taxi one.
    pub fn defaults_for(env: EnvKind) -> QlParams {
        match env {
            EnvKind::Elevator => QlParams {
                learning_rate: 0.01,
                epsilon_start: 1.0,
                epsilon_min: 0.05,
                decay_rate: 0.9995,
            },
            EnvKind::Trading => QlParams {
                learning_rate: 1.0,
                epsilon_start: 1.0,
                epsilon_min: 0.05,
                decay_rate: 0.9998,
            },
            EnvKind::Taxi | EnvKind::LowerBound => QlParams {
                learning_rate: 0.05,
                epsilon_start: 1.0,
                epsilon_min: 0.0,
                decay_rate: 0.99985,
            },
        }
    }

    pub fn resolve(&self, env: EnvKind) -> QlParams {
        let d = Self::defaults_for(env);
        QlParams {
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            epsilon_start: self.epsilon_start.unwrap_or(d.epsilon_start),
            epsilon_min: self.epsilon_min.unwrap_or(d.epsilon_min),
            decay_rate: self.decay_rate.unwrap_or(d.decay_rate),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvKind,
    pub algo: AlgoKind,
    /// Planned number of training episodes `K`.
    pub episodes: usize,
    /// Stop early after this many episodes. The run is the exact prefix of
    /// the full `K`-episode run (`K` still enters the UCBVI bonus).
    pub stop_after: Option<usize>,
    pub seeds: Vec<u64>,
    pub master_seed: u64,
    pub eval_every: usize,
    pub eval_episodes: usize,
    pub replan_every: u64,
    /// Exact per-episode regret; needs an exportable model.
    pub track_regret: bool,
    /// Trading only: run the reduced instance.
    pub desk_scale: bool,
    pub taxi: TaxiSection,
    pub trading: TradingSection,
    pub elevator: ElevatorSection,
    pub lower_bound: LowerBoundSection,
    pub ucbvi: UcbviSection,
    pub ql: QlSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            env: EnvKind::Taxi,
            algo: AlgoKind::Exavi,
            episodes: 5000,
            stop_after: None,
            seeds: (1..=10).collect(),
            master_seed: 0,
            eval_every: 50,
            eval_episodes: 50,
            replan_every: 1,
            track_regret: true,
            desk_scale: true,
            taxi: TaxiSection::default(),
            trading: TradingSection::default(),
            elevator: ElevatorSection::default(),
            lower_bound: LowerBoundSection::default(),
            ucbvi: UcbviSection::default(),
            ql: QlSection::default(),
        }
    }
}

impl ExperimentConfig {
    /// Defaults for an environment/learner pair, with the benchmark episode
    /// counts.
    pub fn for_pair(env: EnvKind, algo: AlgoKind) -> Self {
        let episodes = match (env, algo.model_based()) {
            (EnvKind::Taxi, false) => 15_000,
            (EnvKind::Elevator, false) => 7_000,
            (EnvKind::Trading, _) => 20_000,
            _ => 5_000,
        };
        Self {
            env,
            algo,
            episodes,
            ..Self::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Episodes actually run.
    pub fn episodes_run(&self) -> usize {
        self.stop_after.map_or(self.episodes, |s| s.min(self.episodes))
    }

    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(HarnessError::Config("episodes must be at least 1".into()));
        }
        if self.stop_after == Some(0) {
            return Err(HarnessError::Config("stop_after must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("at least one seed is required".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(HarnessError::Config("seeds must be distinct".into()));
        }
        if self.eval_every == 0 || self.eval_episodes == 0 {
            return Err(HarnessError::Config("evaluation cadence and length must be positive".into()));
        }
        if self.replan_every == 0 {
            return Err(HarnessError::Config("replan_every must be at least 1".into()));
        }
        if self.algo == AlgoKind::Twap && self.env != EnvKind::Trading {
            return Err(HarnessError::Inadmissible("twap is defined for trading only".into()));
        }
        if self.algo.model_based() && self.env == EnvKind::Trading && !self.desk_scale {
            return Err(HarnessError::Inadmissible(format!(
                "{} needs exact planning, which is intractable on full-scale trading",
                self.algo.as_str()
            )));
        }
        Ok(())
    }
}

/// Parses `a..b` (inclusive), `a..=b` or a comma list into seeds.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    parse_list(s).map_err(|_| HarnessError::Config(format!("cannot parse seed list `{s}`")))
}

/// Parses `a..b` with doubling steps (`1000..16000` gives 1000, 2000, .., 16000)
/// or a comma list.
pub fn parse_doubling(s: &str) -> Result<Vec<usize>> {
    let bad = || HarnessError::Config(format!("cannot parse range `{s}`"));
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim_start_matches('=').trim().parse().map_err(|_| bad())?;
        if a == 0 || b < a {
            return Err(bad());
        }
        let mut out = vec![a];
        while out[out.len() - 1] * 2 <= b {
            out.push(out[out.len() - 1] * 2);
        }
        Ok(out)
    } else {
        s.split(',')
            .map(|x| x.trim().parse().map_err(|_| bad()))
            .collect()
    }
}

fn parse_list(s: &str) -> std::result::Result<Vec<u64>, std::num::ParseIntError> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse()?;
        let b: u64 = b.trim_start_matches('=').trim().parse()?;
        Ok((a..=b).collect())
    } else {
        s.split(',').map(|x| x.trim().parse()).collect()
    }
}
