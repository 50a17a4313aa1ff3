//! A single elevator serving down-peak traffic to the ground floor.
//!
//! Controllable state `(ν, ψ, w_1, .., w_{F-1})`: floor, passengers on board
//! and waiting queues at the upper floors. Exogenous state: the number of
//! arrivals at each upper floor this step, truncated Poisson and independent
//! across steps. Arrivals join the queues first (excess beyond the queue cap
//! is lost), then the action applies. Opening at an upper floor boards as
//! many as fit; opening at the ground floor discharges everyone.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use super::{check_action, Environment, Step};
use crate::error::{invalid, Result};
use crate::math::{exp, sample_dense};
use crate::model::{
    ControlModel, ControllableKernel, ExogenousKernel, FactoredModel, FactoredState,
    InitialDistribution, PerStep, RewardBounds, RewardTable, SparseRows, StateFactorization,
};

pub const UP: usize = 0;
pub const DOWN: usize = 1;
pub const OPEN: usize = 2;
pub const N_ACTIONS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ElevatorSpec {
    pub floors: usize,
    pub capacity: usize,
    pub queue_cap: usize,
    /// Arrival rate per upper floor (`floors - 1` entries).
    pub arrival_rates: Vec<f64>,
    pub max_arrivals: usize,
    pub delivery_bonus: f64,
    pub wait_penalty: f64,
    pub horizon: usize,
}

impl Default for ElevatorSpec {
    fn default() -> Self {
        Self {
            floors: 3,
            capacity: 2,
            queue_cap: 2,
            arrival_rates: vec![0.05, 0.2],
            max_arrivals: 2,
            delivery_bonus: 10.0,
            wait_penalty: 1.0,
            horizon: 300,
        }
    }
}

/// Decoded controllable state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElevatorState {
    pub floor: usize,
    pub onboard: usize,
    /// Queue length at each upper floor.
    pub queues: Vec<usize>,
}

impl ElevatorSpec {
    fn n_upper(&self) -> usize {
        self.floors - 1
    }

    pub fn n_controllable(&self) -> usize {
        self.floors * (self.capacity + 1) * (self.queue_cap + 1).pow(self.n_upper() as u32)
    }

    pub fn n_exogenous(&self) -> usize {
        (self.max_arrivals + 1).pow(self.n_upper() as u32)
    }

    pub fn encode(&self, st: &ElevatorState) -> usize {
        let mut c = st.floor * (self.capacity + 1) + st.onboard;
        for &w in &st.queues {
            c = c * (self.queue_cap + 1) + w;
        }
        c
    }

    pub fn decode(&self, mut c: usize) -> ElevatorState {
        let mut queues = vec![0; self.n_upper()];
        for q in queues.iter_mut().rev() {
            *q = c % (self.queue_cap + 1);
            c /= self.queue_cap + 1;
        }
        ElevatorState {
            floor: c / (self.capacity + 1),
            onboard: c % (self.capacity + 1),
            queues,
        }
    }

    /// Arrival counts per upper floor, most significant floor first.
    pub fn decode_arrivals(&self, mut e: usize) -> Vec<usize> {
        let mut k = vec![0; self.n_upper()];
        for slot in k.iter_mut().rev() {
            *slot = e % (self.max_arrivals + 1);
            e /= self.max_arrivals + 1;
        }
        k
    }

    /// `P(κ = j)` for `j = 0..=max_arrivals`; the Poisson tail lands on the cap.
    pub fn arrival_pmf(&self, rate: f64) -> Vec<f64> {
        let mut pmf = Vec::with_capacity(self.max_arrivals + 1);
        let mut term = exp(-rate);
        let mut acc = 0.0;
        for j in 0..self.max_arrivals {
            pmf.push(term);
            acc += term;
            term *= rate / (j + 1) as f64;
        }
        pmf.push((1.0 - acc).max(0.0));
        pmf
    }

    /// Joint arrival distribution over exogenous indices.
    pub fn arrival_distribution(&self) -> Vec<f64> {
        let pmfs: Vec<Vec<f64>> = self.arrival_rates.iter().map(|&r| self.arrival_pmf(r)).collect();
        (0..self.n_exogenous())
            .map(|e| {
                self.decode_arrivals(e)
                    .iter()
                    .zip(&pmfs)
                    .map(|(&k, pmf)| pmf[k])
                    .product()
            })
            .collect()
    }

    /// Deterministic effect of arrivals `e` and action `a`: the next
    /// controllable state and the reward.
    pub fn transition(&self, st: &ElevatorState, e: usize, a: usize) -> (ElevatorState, f64) {
        let arrivals = self.decode_arrivals(e);
        let mut next = st.clone();
        for (w, k) in next.queues.iter_mut().zip(&arrivals) {
            *w = (*w + k).min(self.queue_cap);
        }
        match a {
            UP => next.floor = (next.floor + 1).min(self.floors - 1),
            DOWN => next.floor = next.floor.saturating_sub(1),
            _ => {
                if next.floor == 0 {
                    next.onboard = 0;
                } else {
                    let w = &mut next.queues[next.floor - 1];
                    let board = (*w).min(self.capacity - next.onboard);
                    *w -= board;
                    next.onboard += board;
                }
            }
        }
        let waiting: usize = next.queues.iter().sum::<usize>() + next.onboard;
        let mut r = -self.wait_penalty * waiting as f64;
        if next.onboard == 0 {
            r += self.delivery_bonus * st.onboard as f64;
        }
        (next, r)
    }

    pub fn reward_bounds(&self) -> RewardBounds {
        let worst = (self.n_upper() * self.queue_cap + self.capacity) as f64;
        RewardBounds {
            min: -self.wait_penalty * worst,
            max: self.delivery_bonus * self.capacity as f64,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.floors < 2 || self.capacity == 0 || self.horizon == 0 {
            return Err(invalid("elevator needs two floors, capacity and a horizon"));
        }
        if self.arrival_rates.len() != self.n_upper() {
            return Err(invalid("one arrival rate per upper floor is required"));
        }
        if self.arrival_rates.iter().any(|&r| !(r >= 0.0) || !r.is_finite()) {
            return Err(invalid("arrival rates must be nonnegative"));
        }
        if self.wait_penalty < 0.0 || self.delivery_bonus < 0.0 {
            return Err(invalid("reward coefficients must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Elevator {
    spec: ElevatorSpec,
    control: ControlModel,
    arrivals: Vec<f64>,
}

impl Elevator {
    pub fn new(spec: ElevatorSpec) -> Result<Self> {
        spec.validate()?;
        let fact = StateFactorization::new(spec.n_controllable(), spec.n_exogenous())?;
        let mut rows = SparseRows::with_capacity(fact.n_states() * N_ACTIONS, fact.n_states() * N_ACTIONS);
        let mut rewards = Vec::with_capacity(fact.n_states() * N_ACTIONS);
        for s in 0..fact.n_states() {
            let st = fact.decode(s);
            let es = spec.decode(st.controllable);
            for a in 0..N_ACTIONS {
                let (next, r) = spec.transition(&es, st.exogenous, a);
                rows.push_point(spec.encode(&next));
                rewards.push(r);
            }
        }
        let kernel = ControllableKernel::new(fact, N_ACTIONS, true, PerStep::Stationary(rows))?;
        let reward = RewardTable::new(fact.n_states(), N_ACTIONS, PerStep::Stationary(rewards))?;
        let control = ControlModel::new(
            fact,
            N_ACTIONS,
            spec.horizon,
            kernel,
            reward,
            spec.reward_bounds(),
            None,
        )?;
        let arrivals = spec.arrival_distribution();
        Ok(Self {
            spec,
            control,
            arrivals,
        })
    }

    pub fn spec(&self) -> &ElevatorSpec {
        &self.spec
    }

    fn sample_arrivals(&self, rng: &mut dyn RngCore) -> usize {
        sample_dense(&self.arrivals, rng.random())
    }
}

impl Environment for Elevator {
    fn name(&self) -> &str {
        "elevator"
    }

    fn control(&self) -> &ControlModel {
        &self.control
    }

    /// Empty building, elevator at the ground floor.
    fn reset(&self, rng: &mut dyn RngCore) -> FactoredState {
        FactoredState::new(0, self.sample_arrivals(rng))
    }

    fn step(&self, h: usize, state: FactoredState, a: usize, rng: &mut dyn RngCore) -> Result<Step> {
        check_action(&self.control, h, state, a)?;
        let st = self.spec.decode(state.controllable);
        let (next, reward) = self.spec.transition(&st, state.exogenous, a);
        let next = (h + 1 < self.spec.horizon)
            .then(|| FactoredState::new(self.spec.encode(&next), self.sample_arrivals(rng)));
        Ok(Step { reward, next })
    }

    fn export_model(&self) -> Option<FactoredModel> {
        let n = self.arrivals.len();
        let mut matrix = Vec::with_capacity(n * n);
        for _ in 0..n {
            matrix.extend_from_slice(&self.arrivals);
        }
        let exogenous = ExogenousKernel::stationary(n, matrix).ok()?;
        let fact = self.control.factorization();
        let init: Vec<(usize, f64)> = self
            .arrivals
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(e, &p)| (fact.encode(FactoredState::new(0, e)), p))
            .collect();
        let initial = InitialDistribution::new(fact.n_states(), init).ok()?;
        FactoredModel::new(self.control.clone(), exogenous, initial).ok()
    }

    fn sample_exogenous(&self, _h: usize, _exo: usize, rng: &mut dyn RngCore) -> usize {
        self.sample_arrivals(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> ElevatorSpec {
        ElevatorSpec::default()
    }

    fn st(floor: usize, onboard: usize, q: [usize; 2]) -> ElevatorState {
        ElevatorState {
            floor,
            onboard,
            queues: q.to_vec(),
        }
    }

    #[test]
    fn sizes() {
        assert_eq!(spec().n_controllable(), 81);
        assert_eq!(spec().n_exogenous(), 9);
        for c in 0..81 {
            assert_eq!(spec().encode(&spec().decode(c)), c);
        }
    }

    #[test]
    fn reward_examples() {
        let s = spec();
        // idle empty building
        assert_eq!(s.transition(&st(0, 0, [0, 0]), 0, DOWN).1, 0.0);
        // queues (1, 2), one aboard, moving
        assert_eq!(s.transition(&st(1, 1, [1, 2]), 0, UP).1, -4.0);
        // discharge two at the ground floor
        let (next, r) = s.transition(&st(0, 2, [0, 0]), 0, OPEN);
        assert_eq!(next.onboard, 0);
        assert_eq!(r, 20.0);
    }

    #[test]
    fn boarding_respects_capacity_and_queue_cap() {
        let s = spec();
        let (next, _) = s.transition(&st(2, 1, [0, 2]), 0, OPEN);
        assert_eq!(next.onboard, 2);
        assert_eq!(next.queues, vec![0, 1]);
        // arrivals (2, 2) on queues (1, 2): capped at 2
        let e = 2 * 3 + 2;
        let (next, _) = s.transition(&st(0, 0, [1, 2]), e, DOWN);
        assert_eq!(next.queues, vec![2, 2]);
    }

    #[test]
    fn arrival_pmf_sums_to_one() {
        let s = spec();
        for r in [0.01, 0.05, 0.2] {
            let p = s.arrival_pmf(r);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((p[0] - (-r).exp()).abs() < 1e-15);
        }
        assert!((s.arrival_distribution().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn model_exports() {
        let e = Elevator::new(spec()).unwrap();
        let m = e.export_model().unwrap();
        assert_eq!(m.n_states(), 729);
    }
}
