//! Model-free learner with counterfactual updates.
//!
//! After each episode, for every step `h` the whole block of Q values that
//! shares the observed exogenous state `s•_h` is moved toward its one-step
//! target. The target uses the known controllable kernel and the observed
//! successor `s•_{h+1}`, so unexecuted actions are updated as well. The
//! learning rate `(H+1)/(H+t)` is keyed by the exogenous visit count `t`.

use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use super::Learner;
use crate::env::{rollout, Environment};
use crate::error::Result;
use crate::estimation::{expect_controllable, ExoStatistics, LearningRateSchedule};
use crate::model::{ControlModel, DeterministicPolicy, FactoredState};
use crate::planning::Trajectory;
use crate::tables::StepTables;

#[derive(Debug, Clone)]
pub struct ExAq {
    tables: StepTables,
    stats: ExoStatistics,
    schedule: LearningRateSchedule,
    next_v: Vec<f64>,
}

impl ExAq {
    /// Optimistic start: `Q_h = H - h` remaining-steps bound.
    pub fn new(control: &ControlModel) -> Result<Self> {
        let fact = control.factorization();
        let hz = control.horizon();
        Ok(Self {
            tables: StepTables::optimistic(fact, control.n_actions(), hz),
            stats: ExoStatistics::new(fact.n_exogenous(), hz),
            schedule: LearningRateSchedule::new(hz)?,
            next_v: vec![0.0; fact.n_controllable()],
        })
    }

    pub fn from_parts(control: &ControlModel, tables: StepTables, stats: ExoStatistics) -> Result<Self> {
        let mut out = Self::new(control)?;
        out.tables = tables;
        out.stats = stats;
        Ok(out)
    }

    pub fn tables(&self) -> &StepTables {
        &self.tables
    }

    pub fn stats(&self) -> &ExoStatistics {
        &self.stats
    }

    /// Counterfactual update of every `(s◇, a)` sharing `s•_h`, given the
    /// observed successor (`None` at the last step). Returns the rate used.
    pub fn update_step(
        &mut self,
        control: &ControlModel,
        h: usize,
        exo: usize,
        next_exo: Option<usize>,
    ) -> Result<f64> {
        let t = match next_exo {
            Some(e2) => self.stats.record_transition(h, exo, e2)?,
            None => self.stats.record_visit(h, exo)?,
        };
        let alpha = self.schedule.rate(t)?;
        if let Some(e2) = next_exo {
            self.tables.values_for_exo(control, h + 1, e2, &mut self.next_v);
        }
        let na = control.n_actions();
        let nc = control.factorization().n_controllable();
        let fact = control.factorization();
        let next_v = &self.next_v;
        let block = self.tables.block_mut(h, exo);
        for c in 0..nc {
            let state = FactoredState::new(c, exo);
            let r = control.rewards().row(h, fact.encode(state));
            for a in 0..na {
                let cont = if next_exo.is_some() {
                    expect_controllable(control, h, state, a, next_v)
                } else {
                    0.0
                };
                let w = r[a] + cont;
                let q = &mut block[c * na + a];
                *q = (1.0 - alpha) * *q + alpha * w;
            }
        }
        Ok(alpha)
    }
}

impl Learner for ExAq {
    fn name(&self) -> &'static str {
        "exaq"
    }

    fn train_episode(&mut self, env: &dyn Environment, rng: &mut dyn RngCore) -> Result<Trajectory> {
        let control = env.control();
        let tables = &self.tables;
        let traj = rollout(env, rng, |h, s, _| tables.greedy(control, h, s).0)?;
        // Ascending h: Q_{h+1} is still the pre-episode table when Q_h reads it.
        for h in 0..traj.len() {
            let exo = traj.steps[h].state.exogenous;
            let next = traj.steps.get(h + 1).map(|s| s.state.exogenous);
            self.update_step(control, h, exo, next)?;
        }
        self.stats.finish_episode();
        Ok(traj)
    }

    fn greedy_action(&self, control: &ControlModel, h: usize, state: FactoredState) -> usize {
        self.tables.greedy(control, h, state).0
    }

    fn behavior_policy(&self, control: &ControlModel) -> (DeterministicPolicy, f64) {
        (self.tables.greedy_policy(control), 0.0)
    }
}
