//! A policy that never learns, e.g. the linear liquidation schedule
//! ([`crate::env::Trading::twap_policy`]).

use rand::RngCore;

use super::Learner;
use crate::env::{rollout, Environment};
use crate::error::Result;
use crate::model::{ControlModel, DeterministicPolicy, FactoredState};
use crate::planning::Trajectory;

#[derive(Debug, Clone)]
pub struct FixedPolicy {
    name: &'static str,
    policy: DeterministicPolicy,
}

impl FixedPolicy {
    pub fn new(name: &'static str, policy: DeterministicPolicy) -> Self {
        Self { name, policy }
    }
}

impl Learner for FixedPolicy {
    fn name(&self) -> &'static str {
        self.name
    }

    fn train_episode(&mut self, env: &dyn Environment, rng: &mut dyn RngCore) -> Result<Trajectory> {
        let fact = env.control().factorization();
        rollout(env, rng, |h, s, _| self.policy.action(h, fact.encode(s)))
    }

    fn greedy_action(&self, control: &ControlModel, h: usize, state: FactoredState) -> usize {
        self.policy.action(h, control.factorization().encode(state))
    }

    fn behavior_policy(&self, _control: &ControlModel) -> (DeterministicPolicy, f64) {
        (self.policy.clone(), 0.0)
    }
}
