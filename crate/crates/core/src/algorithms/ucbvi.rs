//! Optimistic model-based baseline: estimates the full transition kernel
//! from `(s, a, s')` counts and plans on it with a Hoeffding-type bonus
//! `b(n) = C H sqrt(log(S A H K / δ) / max(1, n))`.

use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use super::Learner;
use crate::env::{rollout, Environment};
use crate::error::{invalid, Result};
use crate::estimation::FullStatistics;
use crate::math::{argmax_legal, ln, sqrt};
use crate::model::{ControlModel, DeterministicPolicy, FactoredState};
use crate::planning::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UcbviConfig {
    pub bonus_scale: f64,
    pub delta: f64,
    /// Planned number of episodes; enters the bonus logarithm.
    pub episodes: usize,
}

impl Default for UcbviConfig {
    fn default() -> Self {
        Self {
            bonus_scale: 0.5,
            delta: 1e-6,
            episodes: 5000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Ucbvi {
    config: UcbviConfig,
    stats: FullStatistics,
    policy: DeterministicPolicy,
    /// Bonus-augmented `V̂_h`.
    values: Vec<Vec<f64>>,
    log_term: f64,
}

impl Ucbvi {
    pub fn new(control: &ControlModel, config: UcbviConfig) -> Result<Self> {
        if !(config.bonus_scale >= 0.0) || !(config.delta > 0.0 && config.delta < 1.0) || config.episodes == 0 {
            return Err(invalid("UCBVI needs C >= 0, delta in (0, 1) and K >= 1"));
        }
        let hz = control.horizon();
        let total = control.n_states() as f64 * control.n_actions() as f64 * hz as f64 * config.episodes as f64;
        let mut out = Self {
            config,
            stats: FullStatistics::new(control.n_actions(), hz.saturating_sub(1)),
            policy: DeterministicPolicy::constant(control.n_states(), hz, 0),
            values: Vec::new(),
            log_term: ln(total / config.delta),
        };
        out.replan(control);
        Ok(out)
    }

    pub fn from_stats(control: &ControlModel, config: UcbviConfig, stats: FullStatistics) -> Result<Self> {
        let mut out = Self::new(control, config)?;
        out.stats = stats;
        out.replan(control);
        Ok(out)
    }

    pub fn stats(&self) -> &FullStatistics {
        &self.stats
    }

    pub fn config(&self) -> UcbviConfig {
        self.config
    }

    pub fn policy(&self) -> &DeterministicPolicy {
        &self.policy
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn bonus(&self, horizon: usize, n: u64) -> f64 {
        self.config.bonus_scale * horizon as f64 * sqrt(self.log_term / n.max(1) as f64)
    }

    /// Optimistic backward induction on the empirical full kernel, clipped
    /// at the number of remaining steps. The last step has no successor to
    /// be uncertain about, so its values are the plain rewards.
    pub fn replan(&mut self, control: &ControlModel) {
        let fact = control.factorization();
        let n = fact.n_states();
        let na = control.n_actions();
        let hz = control.horizon();
        let rewards = control.rewards();
        let b0 = self.bonus(hz, 0);
        let mut values = vec![Vec::new(); hz];
        let mut q = vec![0.0; n * na];
        for h in (0..hz).rev() {
            let cap = (hz - h) as f64;
            let last = h + 1 == hz;
            let step_r = rewards.step_table(h);
            if last {
                q.copy_from_slice(step_r);
            } else {
                for (slot, &r) in q.iter_mut().zip(step_r) {
                    *slot = (r + b0).min(cap);
                }
                let next_v = &values[h + 1];
                for ((s, a), counts) in self.stats.visited(h) {
                    let inv = 1.0 / counts.visits as f64;
                    let cont: f64 = counts
                        .successors
                        .iter()
                        .map(|&(s2, c)| c as f64 * inv * next_v[s2 as usize])
                        .sum();
                    let i = s * na + a;
                    q[i] = (step_r[i] + self.bonus(hz, counts.visits) + cont).min(cap);
                }
            }
            let mut v = vec![0.0; n];
            for (s, slot) in v.iter_mut().enumerate() {
                let c = fact.decode(s).controllable;
                let (a, best) = argmax_legal(&q[s * na..(s + 1) * na], |a| control.is_legal(h, c, a));
                *slot = best;
                self.policy.set(h, s, a);
            }
            values[h] = v;
        }
        self.values = values;
    }
}

impl Learner for Ucbvi {
    fn name(&self) -> &'static str {
        "ucbvi"
    }

    fn train_episode(&mut self, env: &dyn Environment, rng: &mut dyn RngCore) -> Result<Trajectory> {
        let fact = env.control().factorization();
        let policy = &self.policy;
        let traj = rollout(env, rng, |h, s, _| policy.action(h, fact.encode(s)))?;
        self.stats.record_episode(&traj, |s| fact.encode(s))?;
        self.replan(env.control());
        Ok(traj)
    }

    fn greedy_action(&self, control: &ControlModel, h: usize, state: FactoredState) -> usize {
        self.policy.action(h, control.factorization().encode(state))
    }

    fn behavior_policy(&self, _control: &ControlModel) -> (DeterministicPolicy, f64) {
        (self.policy.clone(), 0.0)
    }
}
