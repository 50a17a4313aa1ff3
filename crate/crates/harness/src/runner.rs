//! Multi-seed experiment execution.
//!
//! Each seed trains its own learner on a shared, immutable environment.
//! Records are produced at every evaluation cadence point and at the last
//! episode. Evaluation plays the frozen greedy policy on a separate random
//! stream. Returns are reported on the raw reward scale.

use std::time::Instant;

use pcmdp::algorithms::{EpsilonSchedule, ExAq, ExAvi, FixedPolicy, Learner, QLearning, Ucbvi, UcbviConfig};
use pcmdp::env::{
    rollout, trading, Elevator, ElevatorSpec, Environment, LowerBound, LowerBoundSpec, Normalized, Taxi,
    TaxiSpec, Trading, TradingSpec,
};
use pcmdp::planning::{evaluate_with, initial_value, value_iteration};
use pcmdp::regret::RegretLedger;
use pcmdp::{ControlModel, FactoredModel, RewardAffine};
use rand::RngCore;
use rayon::prelude::*;

use crate::config::{AlgoKind, EnvKind, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::seeding::{evaluation_rng, training_rng};

/// Environment variable capping the number of concurrent runs.
pub const WORKERS_VAR: &str = "PCMDP_WORKERS";

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub env: String,
    pub algo: String,
    pub seed: u64,
    /// One-based training episode index.
    pub episode: usize,
    pub train_return: f64,
    pub eval_return: f64,
    pub cum_regret: Option<f64>,
    pub wall_ms: u64,
}

pub fn trading_spec(cfg: &ExperimentConfig) -> TradingSpec {
    let base = if cfg.desk_scale {
        TradingSpec::desk()
    } else {
        TradingSpec::full()
    };
    let t = &cfg.trading;
    TradingSpec {
        initial_inventory: t.initial_inventory.unwrap_or(base.initial_inventory),
        price_levels: t.price_levels.unwrap_or(base.price_levels),
        tick: t.price_granularity.unwrap_or(base.tick),
        initial_price: t.initial_price.unwrap_or(base.initial_price),
        sigma: t.volatility.unwrap_or(base.sigma),
        mu: t.drift.unwrap_or(base.mu),
        fixed_cost: t.transaction_cost.unwrap_or(base.fixed_cost),
        temporary_impact: t.adjusted_temp_impact.unwrap_or(base.temporary_impact),
        tau: t.time_interval.unwrap_or(base.tau),
        risk_aversion: t.risk_aversion.unwrap_or(base.risk_aversion),
        horizon: t.horizon.unwrap_or(base.horizon),
        full_scale: !cfg.desk_scale,
    }
}

pub fn lower_bound_spec(cfg: &ExperimentConfig) -> Result<LowerBoundSpec> {
    let lb = &cfg.lower_bound;
    match &lb.probabilities {
        Some(p) => Ok(LowerBoundSpec { p: p.clone() }),
        None => Ok(LowerBoundSpec::scaled(
            lb.branching,
            lb.tuned_for_episodes.unwrap_or(cfg.episodes),
        )?),
    }
}

/// The environment on the raw reward scale.
pub fn build_env(cfg: &ExperimentConfig) -> Result<Box<dyn Environment>> {
    Ok(match cfg.env {
        EnvKind::Taxi => Box::new(Taxi::new(TaxiSpec {
            traffic_cells: cfg.taxi.traffic_locations.clone(),
            congestion: cfg.taxi.traffic_prob,
            horizon: cfg.taxi.horizon,
        })?),
        EnvKind::Trading => Box::new(Trading::new(trading_spec(cfg))?),
        EnvKind::Elevator => {
            let e = &cfg.elevator;
            Box::new(Elevator::new(ElevatorSpec {
                floors: e.floors,
                capacity: e.capacity,
                queue_cap: e.max_queue,
                arrival_rates: e.arrival_rate.clone(),
                max_arrivals: e.max_batch,
                delivery_bonus: e.delivery_bonus,
                wait_penalty: e.waiting_penalty,
                horizon: e.horizon,
            })?)
        }
        EnvKind::LowerBound => Box::new(LowerBound::new(lower_bound_spec(cfg)?)?),
    })
}

/// A fresh learner for the normalized control model.
pub fn build_learner(cfg: &ExperimentConfig, control: &ControlModel) -> Result<Box<dyn Learner>> {
    Ok(match cfg.algo {
        AlgoKind::Exavi => Box::new(ExAvi::new(control, cfg.replan_every)?),
        AlgoKind::Ucbvi => Box::new(Ucbvi::new(
            control,
            UcbviConfig {
                bonus_scale: cfg.ucbvi.bonus,
                delta: cfg.ucbvi.delta,
                episodes: cfg.episodes,
            },
        )?),
        AlgoKind::Exaq => Box::new(ExAq::new(control)?),
        AlgoKind::Ql => {
            let p = cfg.ql.resolve(cfg.env);
            Box::new(QLearning::new(
                control,
                p.learning_rate,
                EpsilonSchedule {
                    start: p.epsilon_start,
                    min: p.epsilon_min,
                    decay: p.decay_rate,
                },
            )?)
        }
        AlgoKind::Twap => {
            if cfg.env != EnvKind::Trading {
                return Err(HarnessError::Inadmissible("twap is defined for trading only".into()));
            }
            Box::new(FixedPolicy::new("twap", trading::twap_policy(&trading_spec(cfg))))
        }
    })
}

/// Everything shared by the seeds of one experiment.
pub struct Prepared {
    pub env: Normalized<Box<dyn Environment>>,
    /// Normalized model with `V*` from the initial distribution, when the
    /// environment exports one and regret is tracked.
    pub oracle: Option<(FactoredModel, f64)>,
}

impl Prepared {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let env = Normalized::new(build_env(cfg)?);
        let oracle = if cfg.track_regret {
            env.export_model().map(|m| {
                let sol = value_iteration(&m);
                let v = initial_value(&m, &sol.v[0]);
                (m, v)
            })
        } else {
            None
        };
        Ok(Self { env, oracle })
    }

    pub fn affine(&self) -> RewardAffine {
        self.env.affine()
    }

    /// Raw-scale optimal expected return, when available.
    pub fn optimal_return(&self) -> Option<f64> {
        let h = self.env.horizon();
        self.oracle.as_ref().map(|(_, v)| self.affine().raw_return(*v, h))
    }
}

/// Exact raw-scale optimal return of the configured environment.
pub fn optimal_return(cfg: &ExperimentConfig) -> Result<f64> {
    let env = Normalized::new(build_env(cfg)?);
    let m = env
        .export_model()
        .ok_or_else(|| HarnessError::Inadmissible("environment has no exact model".into()))?;
    let sol = value_iteration(&m);
    Ok(env.affine().raw_return(initial_value(&m, &sol.v[0]), m.horizon()))
}

/// Mean raw return of `episodes` frozen greedy episodes, simulated on the
/// raw-reward environment.
pub fn evaluate_greedy(
    learner: &dyn Learner,
    env: &Normalized<Box<dyn Environment>>,
    episodes: usize,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    let control = env.control();
    let mut total = 0.0;
    for _ in 0..episodes {
        let traj = rollout(env.inner(), rng, |h, s, _| learner.greedy_action(control, h, s))?;
        total += traj.total_reward();
    }
    Ok(total / episodes as f64)
}

pub fn run_seed(cfg: &ExperimentConfig, prepared: &Prepared, seed: u64) -> Result<Vec<RunRecord>> {
    let start = Instant::now();
    let env = &prepared.env;
    let control = env.control();
    let affine = env.affine();
    let mut learner = build_learner(cfg, control)?;
    let mut train_rng = training_rng(cfg.master_seed, seed);
    let mut eval_rng = evaluation_rng(cfg.master_seed, seed);
    let mut ledger = RegretLedger::new();
    let total = cfg.episodes_run();
    let mut records = Vec::with_capacity(total / cfg.eval_every + 1);
    for k in 1..=total {
        if let Some((model, v_star)) = &prepared.oracle {
            let (policy, eps) = learner.behavior_policy(control);
            let v = evaluate_with(&model.control, &model.exogenous, &policy, eps);
            ledger.update(*v_star, initial_value(model, &v[0]))?;
        }
        let traj = learner.train_episode(env, &mut train_rng)?;
        if k % cfg.eval_every == 0 || k == total {
            let eval_return = evaluate_greedy(learner.as_ref(), env, cfg.eval_episodes, &mut eval_rng)?;
            records.push(RunRecord {
                env: cfg.env.as_str().to_string(),
                algo: cfg.algo.as_str().to_string(),
                seed,
                episode: k,
                train_return: affine.raw_return(traj.total_reward(), traj.len()),
                eval_return,
                cum_regret: prepared.oracle.as_ref().map(|_| affine.raw_gap(ledger.cumulative())),
                wall_ms: start.elapsed().as_millis() as u64,
            });
        }
    }
    Ok(records)
}

/// Worker count from [`WORKERS_VAR`], defaulting to the available cores.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_VAR)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs every seed, in parallel, returning one record stream per seed in the
/// order of `cfg.seeds`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<Vec<RunRecord>>> {
    let prepared = Prepared::new(cfg)?;
    run_prepared(cfg, &prepared)
}

pub fn run_prepared(cfg: &ExperimentConfig, prepared: &Prepared) -> Result<Vec<Vec<RunRecord>>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    pool.install(|| {
        cfg.seeds
            .par_iter()
            .map(|&seed| run_seed(cfg, prepared, seed))
            .collect()
    })
}
