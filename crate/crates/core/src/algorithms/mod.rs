//! Episode-level learners.
//!
//! Every learner plays on the `[0, 1]`-normalized view of an environment and
//! sees only its [`ControlModel`]; the exogenous process is known to it only
//! through the states it observes.

use rand::{Rng, RngCore};

use crate::error::Result;
use crate::model::{ControlModel, DeterministicPolicy, FactoredState};
use crate::planning::Trajectory;

pub mod exaq;
pub mod exavi;
pub mod qlearning;
pub mod twap;
pub mod ucbvi;

pub use exaq::ExAq;
pub use exavi::ExAvi;
pub use qlearning::{EpsilonSchedule, QLearning};
pub use twap::FixedPolicy;
pub use ucbvi::{Ucbvi, UcbviConfig};

use crate::env::Environment;

pub trait Learner: Send {
    fn name(&self) -> &'static str;

    /// Plays one training episode and updates the learner.
    fn train_episode(&mut self, env: &dyn Environment, rng: &mut dyn RngCore) -> Result<Trajectory>;

    /// Greedy action of the current estimate; used for frozen evaluation.
    fn greedy_action(&self, control: &ControlModel, h: usize, state: FactoredState) -> usize;

    /// The policy the next training episode follows, as a deterministic
    /// policy plus the probability of replacing its action by a uniformly
    /// random legal one.
    fn behavior_policy(&self, control: &ControlModel) -> (DeterministicPolicy, f64);
}

/// A uniformly random legal action.
pub fn random_legal_action(control: &ControlModel, h: usize, controllable: usize, rng: &mut dyn RngCore) -> usize {
    let count = control.legal_actions(h, controllable).count();
    let k = rng.random_range(0..count);
    control
        .legal_actions(h, controllable)
        .nth(k)
        .expect("mask guarantees a legal action")
}
