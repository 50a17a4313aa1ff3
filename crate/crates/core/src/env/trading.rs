//! Optimal execution: liquidate an inventory over a fixed horizon while the
//! price follows a clamped random walk on a tick grid.
//!
//! Controllable state is the inventory `u`; the action is the target
//! inventory for the next step, legal when it does not exceed `u`. The last
//! step must sell everything. Exogenous state is the price index.
//!
//! Reward for selling `n = u - a` at price `p`:
//! `n p - ε|n| - (η/τ) n² - λ τ σ² a²`.

use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::{check_action, Environment, Step};
use crate::error::{invalid, Result};
use crate::math::{normal_cdf, round};
use crate::model::{
    ActionMask, ControlModel, ControllableKernel, DeterministicPolicy, ExogenousKernel,
    FactoredModel, FactoredState, InitialDistribution, PerStep, RewardBounds, RewardTable,
    SparseRows, StateFactorization,
};

#[derive(Debug, Clone, PartialEq)]
pub struct TradingSpec {
    pub initial_inventory: usize,
    pub price_levels: usize,
    pub tick: f64,
    pub initial_price: f64,
    pub sigma: f64,
    pub mu: f64,
    pub fixed_cost: f64,
    pub temporary_impact: f64,
    pub tau: f64,
    pub risk_aversion: f64,
    pub horizon: usize,
    /// The full-size instance; too large for exact planning.
    pub full_scale: bool,
}

impl TradingSpec {
    pub fn full() -> Self {
        Self {
            initial_inventory: 100,
            price_levels: 1000,
            tick: 0.02,
            initial_price: 100.0,
            sigma: 0.3,
            mu: 0.0,
            fixed_cost: 0.0625,
            temporary_impact: 2e-5,
            tau: 1.0,
            risk_aversion: 100.0,
            horizon: 200,
            full_scale: true,
        }
    }

    /// Reduced instance with exact planning and regret available.
    pub fn desk() -> Self {
        Self {
            initial_inventory: 20,
            price_levels: 100,
            horizon: 50,
            full_scale: false,
            ..Self::full()
        }
    }

    /// Price of grid index `i`; the initial price sits at `levels / 2`.
    pub fn price(&self, i: usize) -> f64 {
        self.initial_price + (i as f64 - (self.price_levels / 2) as f64) * self.tick
    }

    pub fn initial_price_index(&self) -> usize {
        self.price_levels / 2
    }

    pub fn execution_cost(&self, n: f64) -> f64 {
        self.fixed_cost * n.abs() + self.temporary_impact / self.tau * n * n
    }

    pub fn holding_cost(&self, remaining: f64) -> f64 {
        self.risk_aversion * self.tau * self.sigma * self.sigma * remaining * remaining
    }

    /// Reward for moving inventory from `u` to `a` at price index `price`.
    pub fn reward(&self, u: usize, a: usize, price: usize) -> f64 {
        let n = u as f64 - a as f64;
        n * self.price(price) - self.execution_cost(n) - self.holding_cost(a as f64)
    }

    pub fn reward_bounds(&self) -> RewardBounds {
        let u = self.initial_inventory as f64;
        let p_max = self.price(self.price_levels - 1);
        RewardBounds {
            min: -u * p_max - self.execution_cost(u) - self.holding_cost(u),
            max: u * p_max,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.price_levels < 2 || self.horizon == 0 || self.initial_inventory == 0 {
            return Err(invalid("trading grids and horizon must be nonempty"));
        }
        if !(self.tick > 0.0) || !(self.sigma > 0.0) || !(self.tau > 0.0) {
            return Err(invalid("tick, sigma and tau must be positive"));
        }
        if self.price(0) <= 0.0 {
            return Err(invalid("price grid must stay positive"));
        }
        if self.fixed_cost < 0.0 || self.temporary_impact < 0.0 || self.risk_aversion < 0.0 {
            return Err(invalid("cost coefficients must be nonnegative"));
        }
        Ok(())
    }

    /// Row of the discretized price kernel out of index `i`: the Gaussian
    /// increment rounded to the nearest tick, clamped into the grid.
    pub fn price_row(&self, i: usize) -> Vec<f64> {
        let l = self.price_levels;
        let cdf = |ticks: f64| normal_cdf((ticks * self.tick - self.mu) / self.sigma);
        let mut row = vec![0.0; l];
        for (j, slot) in row.iter_mut().enumerate() {
            let d = j as f64 - i as f64;
            let lo = if j == 0 { 0.0 } else { cdf(d - 0.5) };
            let hi = if j + 1 == l { 1.0 } else { cdf(d + 0.5) };
            *slot = (hi - lo).max(0.0);
        }
        let sum: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= sum);
        row
    }
}

/// Linear liquidation schedule: target inventory `round(u_0 (H-h-1)/H)` at
/// zero-based step `h`, so the final step sells out. Ignores the price.
pub fn twap_policy(spec: &TradingSpec) -> DeterministicPolicy {
    let nu = spec.initial_inventory + 1;
    let hz = spec.horizon;
    let u0 = spec.initial_inventory as f64;
    let n_states = nu * spec.price_levels;
    DeterministicPolicy::from_fn(n_states, hz, |h, s| {
        let target = round(u0 * (hz - h - 1) as f64 / hz as f64) as usize;
        target.min(s / spec.price_levels)
    })
}

#[derive(Debug, Clone)]
pub struct Trading {
    spec: TradingSpec,
    control: ControlModel,
}

impl Trading {
    pub fn new(spec: TradingSpec) -> Result<Self> {
        spec.validate()?;
        let nu = spec.initial_inventory + 1;
        let nl = spec.price_levels;
        let fact = StateFactorization::new(nu, nl)?;
        let na = nu;

        let mut rows = SparseRows::with_capacity(nu * na, nu * na);
        for u in 0..nu {
            for a in 0..na {
                rows.push_point(if a <= u { a } else { u });
            }
        }
        let kernel = ControllableKernel::new(fact, na, false, PerStep::Stationary(rows))?;

        let bounds = spec.reward_bounds();
        let mut rewards = Vec::with_capacity(fact.n_states() * na);
        for s in 0..fact.n_states() {
            let st = fact.decode(s);
            for a in 0..na {
                rewards.push(if a <= st.controllable {
                    spec.reward(st.controllable, a, st.exogenous)
                } else {
                    bounds.min
                });
            }
        }
        let reward = RewardTable::new(fact.n_states(), na, PerStep::Stationary(rewards))?;

        let inner: Vec<bool> = (0..nu * na).map(|i| i % na <= i / na).collect();
        let last: Vec<bool> = (0..nu * na).map(|i| i % na == 0).collect();
        let mut legal = vec![inner; spec.horizon - 1];
        legal.push(last);
        let mask = ActionMask::new(nu, na, PerStep::Varying(legal))?;

        let control = ControlModel::new(fact, na, spec.horizon, kernel, reward, bounds, Some(mask))?;
        Ok(Self { spec, control })
    }

    pub fn spec(&self) -> &TradingSpec {
        &self.spec
    }

    /// See [`twap_policy`].
    pub fn twap_policy(&self) -> DeterministicPolicy {
        twap_policy(&self.spec)
    }

    fn sample_price(&self, i: usize, rng: &mut dyn RngCore) -> usize {
        let z: f64 = StandardNormal.sample(&mut *rng);
        let ticks = round((self.spec.mu + self.spec.sigma * z) / self.spec.tick);
        let j = i as f64 + ticks;
        j.clamp(0.0, (self.spec.price_levels - 1) as f64) as usize
    }
}

impl Environment for Trading {
    fn name(&self) -> &str {
        "trading"
    }

    fn control(&self) -> &ControlModel {
        &self.control
    }

    fn reset(&self, _rng: &mut dyn RngCore) -> FactoredState {
        FactoredState::new(self.spec.initial_inventory, self.spec.initial_price_index())
    }

    fn step(&self, h: usize, state: FactoredState, a: usize, rng: &mut dyn RngCore) -> Result<Step> {
        check_action(&self.control, h, state, a)?;
        let reward = self.spec.reward(state.controllable, a, state.exogenous);
        let next = (h + 1 < self.spec.horizon)
            .then(|| FactoredState::new(a, self.sample_price(state.exogenous, rng)));
        Ok(Step { reward, next })
    }

    /// `None` at full scale.
    fn export_model(&self) -> Option<FactoredModel> {
        if self.spec.full_scale {
            return None;
        }
        let nl = self.spec.price_levels;
        let mut matrix = Vec::with_capacity(nl * nl);
        for i in 0..nl {
            matrix.extend(self.spec.price_row(i));
        }
        let exogenous = ExogenousKernel::stationary(nl, matrix).ok()?;
        let s0 = self.control.factorization().encode(FactoredState::new(
            self.spec.initial_inventory,
            self.spec.initial_price_index(),
        ));
        FactoredModel::new(self.control.clone(), exogenous, InitialDistribution::point(s0)).ok()
    }

    fn sample_exogenous(&self, _h: usize, exo: usize, rng: &mut dyn RngCore) -> usize {
        self.sample_price(exo, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_examples() {
        let s = TradingSpec::full();
        assert!((s.execution_cost(10.0) - 0.627).abs() < 1e-12);
        assert!((s.holding_cost(5.0) - 225.0).abs() < 1e-9);
        // holding: no sale, only the risk penalty
        assert!((s.reward(5, 5, 500) + 225.0).abs() < 1e-9);
    }

    #[test]
    fn price_grid_spans_range() {
        let s = TradingSpec::full();
        assert!((s.price(0) - 90.0).abs() < 1e-12);
        assert!((s.price(999) - 109.98).abs() < 1e-9);
        assert_eq!(s.price(s.initial_price_index()), 100.0);
        let d = TradingSpec::desk();
        assert!((d.price(0) - 99.0).abs() < 1e-12);
    }

    #[test]
    fn price_rows_stochastic() {
        let s = TradingSpec::desk();
        for i in [0, 1, 50, 99] {
            let row = s.price_row(i);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn legality() {
        let t = Trading::new(TradingSpec::desk()).unwrap();
        let c = t.control();
        assert!(c.is_legal(0, 5, 5));
        assert!(c.is_legal(0, 5, 0));
        assert!(!c.is_legal(0, 5, 6));
        assert!(c.is_legal(49, 5, 0));
        assert!(!c.is_legal(49, 5, 1));
    }

    #[test]
    fn twap_schedule() {
        let t = Trading::new(TradingSpec::desk()).unwrap();
        let pi = t.twap_policy();
        let f = t.control().factorization();
        let s = f.encode(FactoredState::new(20, 50));
        assert_eq!(pi.action(49, s), 0);
        assert_eq!(pi.action(0, s), 20);
        assert_eq!(pi.action(24, s), 10);
        pi.validate(t.control()).unwrap();
    }
}
