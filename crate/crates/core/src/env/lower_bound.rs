//! The three-step hard instance family.
//!
//! Exogenous tree: a root, `N` middle states reached uniformly, and two
//! leaves below each middle state reached with probabilities `(p_i, 1-p_i)`.
//! The controllable state is `0` until the last step, where it takes the value
//! (`-1` or `+1`) of the action played at the middle state. The only nonzero
//! reward is at the last step: `+z` at a first-type leaf and `-z` at a
//! second-type leaf. Playing `+1` at middle state `i` is optimal iff
//! `p_i >= 1/2`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use super::{Environment, ModelEnv, Step};
use crate::error::{invalid, Result};
use crate::math::sqrt;
use crate::model::{
    ControlModel, ControllableKernel, ExogenousKernel, FactoredModel, FactoredState,
    InitialDistribution, PerStep, RewardBounds, RewardTable, SparseRows, StateFactorization,
};

pub const HORIZON: usize = 3;
/// Controllable index of the value `0`, `-1`, `+1`.
pub const ZERO: usize = 0;
pub const MINUS: usize = 1;
pub const PLUS: usize = 2;
/// Action indices for `-1` and `+1`.
pub const ACT_MINUS: usize = 0;
pub const ACT_PLUS: usize = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundSpec {
    pub p: Vec<f64>,
}

impl LowerBoundSpec {
    /// Leaf probabilities `1/2 ± Δ` with `Δ = sqrt(N/K)/4`, signs alternating.
    pub fn scaled(n: usize, episodes: usize) -> Result<Self> {
        if n == 0 || episodes == 0 {
            return Err(invalid("N and K must be positive"));
        }
        let delta = (0.25 * sqrt(n as f64 / episodes as f64)).min(0.5);
        let p = (0..n)
            .map(|i| if i % 2 == 0 { 0.5 + delta } else { 0.5 - delta })
            .collect();
        Ok(Self { p })
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn middle(&self, i: usize) -> usize {
        1 + i
    }

    pub fn leaf(&self, i: usize, second: bool) -> usize {
        1 + self.n() + 2 * i + usize::from(second)
    }

    /// Exact optimal value from the root: the mean of `|2 p_i - 1|`.
    pub fn optimal_value(&self) -> f64 {
        self.p.iter().map(|&p| (2.0 * p - 1.0).abs()).sum::<f64>() / self.n() as f64
    }
}

/// The family as a model-backed environment.
#[derive(Debug, Clone)]
pub struct LowerBound {
    spec: LowerBoundSpec,
    env: ModelEnv,
}

impl LowerBound {
    pub fn new(spec: LowerBoundSpec) -> Result<Self> {
        let n = spec.n();
        if n == 0 {
            return Err(invalid("lower-bound family needs N >= 1"));
        }
        if spec.p.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(invalid("leaf probabilities must lie in [0, 1]"));
        }
        let ne = 3 * n + 1;
        let fact = StateFactorization::new(3, ne)?;

        let mut first = vec![0.0; ne * ne];
        let mut second = vec![0.0; ne * ne];
        for e in 0..ne {
            // rows that are never reached at a step just stay put
            first[e * ne + e] = 1.0;
            second[e * ne + e] = 1.0;
        }
        first[0] = 0.0;
        for i in 0..n {
            first[spec.middle(i)] = 1.0 / n as f64;
            let m = spec.middle(i);
            second[m * ne + m] = 0.0;
            second[m * ne + spec.leaf(i, false)] = spec.p[i];
            second[m * ne + spec.leaf(i, true)] = 1.0 - spec.p[i];
        }
        let exogenous = ExogenousKernel::new(ne, PerStep::Varying(vec![first, second]))?;

        let mut to_zero = SparseRows::with_capacity(6, 6);
        let mut by_action = SparseRows::with_capacity(6, 6);
        for _c in 0..3 {
            to_zero.push_point(ZERO);
            to_zero.push_point(ZERO);
            by_action.push_point(MINUS);
            by_action.push_point(PLUS);
        }
        let kernel = ControllableKernel::new(fact, 2, false, PerStep::Varying(vec![to_zero, by_action]))?;

        let zero = vec![0.0; fact.n_states() * 2];
        let mut last = zero.clone();
        for i in 0..n {
            for (leaf, sign) in [(spec.leaf(i, false), 1.0), (spec.leaf(i, true), -1.0)] {
                for (c, z) in [(MINUS, -1.0), (PLUS, 1.0)] {
                    let s = fact.encode(FactoredState::new(c, leaf));
                    last[s * 2] = sign * z;
                    last[s * 2 + 1] = sign * z;
                }
            }
        }
        let reward = RewardTable::new(fact.n_states(), 2, PerStep::Varying(vec![zero.clone(), zero, last]))?;
        let bounds = RewardBounds { min: -1.0, max: 1.0 };
        let control = ControlModel::new(fact, 2, HORIZON, kernel, reward, bounds, None)?;
        let model = FactoredModel::new(control, exogenous, InitialDistribution::point(0))?;
        Ok(Self {
            env: ModelEnv::new(format!("lower-bound-{n}"), model),
            spec,
        })
    }

    pub fn spec(&self) -> &LowerBoundSpec {
        &self.spec
    }

    pub fn model(&self) -> &FactoredModel {
        self.env.model()
    }
}

impl Environment for LowerBound {
    fn name(&self) -> &str {
        "lower-bound"
    }

    fn control(&self) -> &ControlModel {
        self.env.control()
    }

    fn reset(&self, rng: &mut dyn RngCore) -> FactoredState {
        self.env.reset(rng)
    }

    fn step(&self, h: usize, state: FactoredState, a: usize, rng: &mut dyn RngCore) -> Result<Step> {
        self.env.step(h, state, a, rng)
    }

    fn export_model(&self) -> Option<FactoredModel> {
        self.env.export_model()
    }

    fn sample_exogenous(&self, h: usize, exo: usize, rng: &mut dyn RngCore) -> usize {
        self.env.sample_exogenous(h, exo, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planning::value_iteration;

    #[test]
    fn sizes() {
        let lb = LowerBound::new(LowerBoundSpec { p: vec![0.5, 0.5] }).unwrap();
        assert_eq!(lb.control().factorization().n_exogenous(), 7);
        assert_eq!(lb.control().factorization().n_controllable(), 3);
    }

    #[test]
    fn certain_leaves_favor_plus() {
        let lb = LowerBound::new(LowerBoundSpec { p: vec![1.0; 3] }).unwrap();
        let sol = value_iteration(lb.model());
        assert!((sol.v[0][0] - 1.0).abs() < 1e-12);
        for i in 0..3 {
            let s = lb.control().factorization().encode(FactoredState::new(ZERO, lb.spec().middle(i)));
            assert_eq!(sol.policy.action(1, s), ACT_PLUS);
        }
    }

    #[test]
    fn optimal_value_formula() {
        let spec = LowerBoundSpec { p: vec![0.9, 0.2, 0.5] };
        let lb = LowerBound::new(spec.clone()).unwrap();
        let sol = value_iteration(lb.model());
        assert!((sol.v[0][0] - spec.optimal_value()).abs() < 1e-12);
    }

    #[test]
    fn scaled_probabilities() {
        let s = LowerBoundSpec::scaled(4, 1600).unwrap();
        assert!((s.p[0] - 0.5125).abs() < 1e-12);
        assert!((s.p[1] - 0.4875).abs() < 1e-12);
    }
}
