//! ε-greedy tabular Q-learning with a constant step size.

use rand::{Rng, RngCore};

use super::{random_legal_action, Learner};
use crate::env::{rollout, Environment};
use crate::error::{invalid, Result};
use crate::model::{ControlModel, DeterministicPolicy, FactoredState};
use crate::planning::Trajectory;
use crate::tables::StepTables;

/// `ε ← max(ε_min, ε · decay)` after every episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub min: f64,
    pub decay: f64,
}

impl EpsilonSchedule {
    pub fn validate(&self) -> Result<()> {
        let unit = 0.0..=1.0;
        if !unit.contains(&self.start) || !unit.contains(&self.min) || !unit.contains(&self.decay) || self.min > self.start {
            return Err(invalid("epsilon schedule needs 0 <= min <= start <= 1 and decay in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct QLearning {
    tables: StepTables,
    alpha: f64,
    schedule: EpsilonSchedule,
    epsilon: f64,
}

impl QLearning {
    /// Tables start at zero.
    pub fn new(control: &ControlModel, alpha: f64, schedule: EpsilonSchedule) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(invalid("learning rate must lie in (0, 1]"));
        }
        schedule.validate()?;
        Ok(Self {
            tables: StepTables::new(control.factorization(), control.n_actions(), control.horizon(), |_| 0.0),
            alpha,
            schedule,
            epsilon: schedule.start,
        })
    }

    pub fn from_parts(control: &ControlModel, alpha: f64, schedule: EpsilonSchedule, tables: StepTables, epsilon: f64) -> Result<Self> {
        let mut out = Self::new(control, alpha, schedule)?;
        out.tables = tables;
        out.epsilon = epsilon;
        Ok(out)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn schedule(&self) -> EpsilonSchedule {
        self.schedule
    }

    pub fn tables(&self) -> &StepTables {
        &self.tables
    }
}

impl Learner for QLearning {
    fn name(&self) -> &'static str {
        "ql"
    }

    fn train_episode(&mut self, env: &dyn Environment, rng: &mut dyn RngCore) -> Result<Trajectory> {
        let control = env.control();
        let eps = self.epsilon;
        let tables = &self.tables;
        let traj = rollout(env, rng, |h, s, rng| {
            if eps > 0.0 && rng.random::<f64>() < eps {
                random_legal_action(control, h, s.controllable, rng)
            } else {
                tables.greedy(control, h, s).0
            }
        })?;
        // Updates at h only touch Q_h and read Q_{h+1}, which this episode has
        // not written yet, so the order matches updating online.
        for (h, step) in traj.steps.iter().enumerate() {
            let cont = match traj.steps.get(h + 1) {
                Some(next) => self.tables.value(control, h + 1, next.state),
                None => 0.0,
            };
            let target = step.reward + cont;
            let q = self.tables.q_mut(h, step.state, step.action);
            *q = (1.0 - self.alpha) * *q + self.alpha * target;
        }
        self.epsilon = (self.epsilon * self.schedule.decay).max(self.schedule.min);
        Ok(traj)
    }

    fn greedy_action(&self, control: &ControlModel, h: usize, state: FactoredState) -> usize {
        self.tables.greedy(control, h, state).0
    }

    fn behavior_policy(&self, control: &ControlModel) -> (DeterministicPolicy, f64) {
        (self.tables.greedy_policy(control), self.epsilon)
    }
}
