//! Generative environments.
//!
//! An [`Environment`] exposes exactly what a learner may know (the
//! [`ControlModel`]: controllable kernel, rewards, legal actions) and a
//! simulator for the rest. Environments small enough to tabulate can also
//! export the full [`FactoredModel`], which is what the exact oracles use.

use alloc::string::String;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::math::sample_dense;
use crate::model::{ControlModel, FactoredModel, FactoredState, RewardAffine};
use crate::planning::{sample_transition, Trajectory, TrajectoryStep};

pub mod elevator;
pub mod lower_bound;
pub mod taxi;
pub mod trading;

pub use elevator::{Elevator, ElevatorSpec};
pub use lower_bound::{LowerBound, LowerBoundSpec};
pub use taxi::{Taxi, TaxiSpec};
pub use trading::{Trading, TradingSpec};

/// Reward earned at a step and the successor state (`None` after the last step).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub reward: f64,
    pub next: Option<FactoredState>,
}

pub trait Environment: Send + Sync {
    fn name(&self) -> &str;

    /// The known part of the model.
    fn control(&self) -> &ControlModel;

    fn reset(&self, rng: &mut dyn RngCore) -> FactoredState;

    /// Simulates one step. Illegal actions are rejected.
    fn step(&self, h: usize, state: FactoredState, a: usize, rng: &mut dyn RngCore) -> Result<Step>;

    /// The full model, when the environment is small enough to tabulate.
    fn export_model(&self) -> Option<FactoredModel>;

    /// Draws `s•_{h+1}` given `s•_h`. Used by tests that probe the
    /// exogenous process directly.
    fn sample_exogenous(&self, h: usize, exo: usize, rng: &mut dyn RngCore) -> usize;

    #[inline]
    fn horizon(&self) -> usize {
        self.control().horizon()
    }
}

/// Checks step and action legality before a simulator step.
pub(crate) fn check_action(control: &ControlModel, h: usize, state: FactoredState, a: usize) -> Result<()> {
    control.check_step(h)?;
    control.factorization().check(state)?;
    if a >= control.n_actions() || !control.is_legal(h, state.controllable, a) {
        return Err(Error::IllegalAction {
            step: h,
            controllable: state.controllable,
            action: a,
        });
    }
    Ok(())
}

/// Rolls out one episode, choosing actions with `policy`.
pub fn rollout(
    env: &dyn Environment,
    rng: &mut dyn RngCore,
    mut policy: impl FnMut(usize, FactoredState, &mut dyn RngCore) -> usize,
) -> Result<Trajectory> {
    let hz = env.horizon();
    let mut traj = Trajectory::with_capacity(hz);
    let mut state = env.reset(rng);
    for h in 0..hz {
        let action = policy(h, state, rng);
        let step = env.step(h, state, action, rng)?;
        traj.steps.push(TrajectoryStep {
            state,
            action,
            reward: step.reward,
        });
        match step.next {
            Some(next) => state = next,
            None => break,
        }
    }
    Ok(traj)
}

/// An environment simulated directly from a tabulated model.
#[derive(Debug, Clone)]
pub struct ModelEnv {
    name: String,
    model: FactoredModel,
}

impl ModelEnv {
    pub fn new(name: impl Into<String>, model: FactoredModel) -> Self {
        Self {
            name: name.into(),
            model,
        }
    }

    pub fn model(&self) -> &FactoredModel {
        &self.model
    }
}

impl Environment for ModelEnv {
    fn name(&self) -> &str {
        &self.name
    }

    fn control(&self) -> &ControlModel {
        &self.model.control
    }

    fn reset(&self, rng: &mut dyn RngCore) -> FactoredState {
        self.model.factorization().decode(self.model.initial.sample(rng))
    }

    fn step(&self, h: usize, state: FactoredState, a: usize, rng: &mut dyn RngCore) -> Result<Step> {
        check_action(&self.model.control, h, state, a)?;
        let reward = self.model.control.reward(h, state, a);
        let next = (h + 1 < self.model.horizon()).then(|| sample_transition(&self.model, h, state, a, rng));
        Ok(Step { reward, next })
    }

    fn export_model(&self) -> Option<FactoredModel> {
        Some(self.model.clone())
    }

    fn sample_exogenous(&self, h: usize, exo: usize, rng: &mut dyn RngCore) -> usize {
        use rand::Rng;
        let u: f64 = rng.random();
        sample_dense(self.model.exogenous.row(h, exo), u)
    }
}

/// Presents an environment with rewards mapped to `[0, 1]` through its
/// analytic reward bounds. Learners run on this view.
pub struct Normalized<E> {
    inner: E,
    control: ControlModel,
    affine: RewardAffine,
}

impl<E: Environment> Normalized<E> {
    pub fn new(inner: E) -> Self {
        let (control, affine) = inner.control().normalized();
        Self {
            inner,
            control,
            affine,
        }
    }

    pub fn affine(&self) -> RewardAffine {
        self.affine
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }
}

impl<E: Environment> Environment for Normalized<E> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn control(&self) -> &ControlModel {
        &self.control
    }

    fn reset(&self, rng: &mut dyn RngCore) -> FactoredState {
        self.inner.reset(rng)
    }

    fn step(&self, h: usize, state: FactoredState, a: usize, rng: &mut dyn RngCore) -> Result<Step> {
        let step = self.inner.step(h, state, a, rng)?;
        Ok(Step {
            reward: self.affine.normalize(step.reward),
            next: step.next,
        })
    }

    fn export_model(&self) -> Option<FactoredModel> {
        self.inner.export_model().map(|m| FactoredModel {
            control: self.control.clone(),
            exogenous: m.exogenous,
            initial: m.initial,
        })
    }

    fn sample_exogenous(&self, h: usize, exo: usize, rng: &mut dyn RngCore) -> usize {
        self.inner.sample_exogenous(h, exo, rng)
    }
}

impl<E: Environment + ?Sized> Environment for alloc::boxed::Box<E> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn control(&self) -> &ControlModel {
        (**self).control()
    }

    fn reset(&self, rng: &mut dyn RngCore) -> FactoredState {
        (**self).reset(rng)
    }

    fn step(&self, h: usize, state: FactoredState, a: usize, rng: &mut dyn RngCore) -> Result<Step> {
        (**self).step(h, state, a, rng)
    }

    fn export_model(&self) -> Option<FactoredModel> {
        (**self).export_model()
    }

    fn sample_exogenous(&self, h: usize, exo: usize, rng: &mut dyn RngCore) -> usize {
        (**self).sample_exogenous(h, exo, rng)
    }
}
