//! Model-based learner that estimates only the exogenous kernel and plans
//! greedily on it. There is no exploration bonus: the exogenous process is
//! observed in full whatever the agent does.

use alloc::vec::Vec;

use rand::RngCore;

use super::Learner;
use crate::env::{rollout, Environment};
use crate::error::{invalid, Result};
use crate::estimation::ExoStatistics;
use crate::model::{ControlModel, DeterministicPolicy, FactoredState};
use crate::planning::{plan, Trajectory};

#[derive(Debug, Clone)]
pub struct ExAvi {
    stats: ExoStatistics,
    policy: DeterministicPolicy,
    values: Vec<Vec<f64>>,
    replan_every: u64,
}

impl ExAvi {
    /// Starts from the plan for a uniform exogenous kernel.
    pub fn new(control: &ControlModel, replan_every: u64) -> Result<Self> {
        if replan_every == 0 {
            return Err(invalid("replan cadence must be at least 1"));
        }
        let fact = control.factorization();
        let stats = ExoStatistics::new(fact.n_exogenous(), control.horizon());
        let mut out = Self {
            stats,
            policy: DeterministicPolicy::constant(fact.n_states(), control.horizon(), 0),
            values: Vec::new(),
            replan_every,
        };
        out.replan(control);
        Ok(out)
    }

    /// Rebuilds the learner from saved statistics and replans.
    pub fn from_stats(control: &ControlModel, stats: ExoStatistics, replan_every: u64) -> Result<Self> {
        let mut out = Self::new(control, replan_every)?;
        out.stats = stats;
        out.replan(control);
        Ok(out)
    }

    pub fn stats(&self) -> &ExoStatistics {
        &self.stats
    }

    pub fn policy(&self) -> &DeterministicPolicy {
        &self.policy
    }

    /// Planned `V_h` of the current estimate.
    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn replan_every(&self) -> u64 {
        self.replan_every
    }

    /// Exact planning on `p◇ · p̂•`.
    pub fn replan(&mut self, control: &ControlModel) {
        let (kernel, _) = self.stats.to_kernel();
        let (values, policy) = plan(control, &kernel);
        self.values = values;
        self.policy = policy;
    }
}

impl Learner for ExAvi {
    fn name(&self) -> &'static str {
        "exavi"
    }

    fn train_episode(&mut self, env: &dyn Environment, rng: &mut dyn RngCore) -> Result<Trajectory> {
        let fact = env.control().factorization();
        let policy = &self.policy;
        let traj = rollout(env, rng, |h, s, _| policy.action(h, fact.encode(s)))?;
        self.stats.record_episode(&traj)?;
        if self.stats.episodes().is_multiple_of(self.replan_every) {
            self.replan(env.control());
        }
        Ok(traj)
    }

    fn greedy_action(&self, control: &ControlModel, h: usize, state: FactoredState) -> usize {
        self.policy.action(h, control.factorization().encode(state))
    }

    fn behavior_policy(&self, _control: &ControlModel) -> (DeterministicPolicy, f64) {
        (self.policy.clone(), 0.0)
    }
}
