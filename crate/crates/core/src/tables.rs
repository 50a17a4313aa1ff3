//! Per-step Q tables with lazily allocated exogenous blocks.
//!
//! A block holds the `S◇ × A` values sharing one `(step, exogenous state)`.
//! Blocks that were never written read as the step's default value, so a
//! table over a huge exogenous space only pays for the blocks it visits.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::argmax_legal;
use crate::model::{ControlModel, DeterministicPolicy, FactoredState, StateFactorization};

#[derive(Debug, Clone, PartialEq)]
pub struct StepTables {
    factorization: StateFactorization,
    n_actions: usize,
    horizon: usize,
    blocks: Vec<Vec<Option<Box<[f64]>>>>,
    defaults: Vec<f64>,
}

impl StepTables {
    /// Tables whose unwritten entries read as `default(h)`.
    pub fn new(
        factorization: StateFactorization,
        n_actions: usize,
        horizon: usize,
        default: impl Fn(usize) -> f64,
    ) -> Self {
        Self {
            factorization,
            n_actions,
            horizon,
            blocks: (0..horizon)
                .map(|_| vec![None; factorization.n_exogenous()])
                .collect(),
            defaults: (0..horizon).map(default).collect(),
        }
    }

    /// Optimistic initialization `Q_h = H - h` for one-based `h`, i.e.
    /// `H - 1 - h` for the zero-based steps used here.
    pub fn optimistic(factorization: StateFactorization, n_actions: usize, horizon: usize) -> Self {
        Self::new(factorization, n_actions, horizon, |h| (horizon - 1 - h) as f64)
    }

    pub fn factorization(&self) -> StateFactorization {
        self.factorization
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    #[inline]
    pub fn default_value(&self, h: usize) -> f64 {
        self.defaults[h]
    }

    #[inline]
    pub fn block(&self, h: usize, exo: usize) -> Option<&[f64]> {
        self.blocks[h][exo].as_deref()
    }

    /// The block for `(h, exo)`, allocated with the default value on first use.
    pub fn block_mut(&mut self, h: usize, exo: usize) -> &mut [f64] {
        let len = self.factorization.n_controllable() * self.n_actions;
        let d = self.defaults[h];
        self.blocks[h][exo].get_or_insert_with(|| vec![d; len].into_boxed_slice())
    }

    /// Replaces a block wholesale (used when loading checkpoints).
    pub fn set_block(&mut self, h: usize, exo: usize, values: Box<[f64]>) {
        debug_assert_eq!(values.len(), self.factorization.n_controllable() * self.n_actions);
        self.blocks[h][exo] = Some(values);
    }

    #[inline]
    pub fn q(&self, h: usize, state: FactoredState, a: usize) -> f64 {
        match self.block(h, state.exogenous) {
            Some(b) => b[state.controllable * self.n_actions + a],
            None => self.defaults[h],
        }
    }

    #[inline]
    pub fn q_mut(&mut self, h: usize, state: FactoredState, a: usize) -> &mut f64 {
        let na = self.n_actions;
        &mut self.block_mut(h, state.exogenous)[state.controllable * na + a]
    }

    /// `(argmax, max)` over legal actions; ties go to the lowest index.
    pub fn greedy(&self, control: &ControlModel, h: usize, state: FactoredState) -> (usize, f64) {
        let legal = |a| control.is_legal(h, state.controllable, a);
        match self.block(h, state.exogenous) {
            Some(b) => {
                let na = self.n_actions;
                argmax_legal(&b[state.controllable * na..(state.controllable + 1) * na], legal)
            }
            None => {
                let a = (0..self.n_actions).find(|&a| legal(a)).unwrap_or(0);
                (a, self.defaults[h])
            }
        }
    }

    /// `V_h(s) = max_a Q_h(s, a)` over legal actions.
    #[inline]
    pub fn value(&self, control: &ControlModel, h: usize, state: FactoredState) -> f64 {
        self.greedy(control, h, state).1
    }

    /// Writes `V_h(·, exo)` for every controllable state into `out`.
    pub fn values_for_exo(&self, control: &ControlModel, h: usize, exo: usize, out: &mut [f64]) {
        let nc = self.factorization.n_controllable();
        match self.block(h, exo) {
            None => out[..nc].fill(self.defaults[h]),
            Some(b) => {
                let na = self.n_actions;
                for (c, slot) in out[..nc].iter_mut().enumerate() {
                    *slot = argmax_legal(&b[c * na..(c + 1) * na], |a| control.is_legal(h, c, a)).1;
                }
            }
        }
    }

    /// Greedy policy over every step and state.
    pub fn greedy_policy(&self, control: &ControlModel) -> DeterministicPolicy {
        let fact = self.factorization;
        DeterministicPolicy::from_fn(fact.n_states(), self.horizon, |h, s| {
            self.greedy(control, h, fact.decode(s)).0
        })
    }

    pub fn allocated_blocks(&self) -> usize {
        self.blocks.iter().flatten().filter(|b| b.is_some()).count()
    }

    /// `(h, exo, block)` for every allocated block.
    pub fn iter_blocks(&self) -> impl Iterator<Item = (usize, usize, &[f64])> {
        self.blocks.iter().enumerate().flat_map(|(h, row)| {
            row.iter()
                .enumerate()
                .filter_map(move |(e, b)| b.as_deref().map(|b| (h, e, b)))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fact() -> StateFactorization {
        StateFactorization::new(3, 4).unwrap()
    }

    #[test]
    fn unallocated_reads_default() {
        let t = StepTables::optimistic(fact(), 2, 5);
        assert_eq!(t.q(0, FactoredState::new(2, 3), 1), 4.0);
        assert_eq!(t.q(4, FactoredState::new(0, 0), 0), 0.0);
        assert_eq!(t.allocated_blocks(), 0);
    }

    #[test]
    fn writes_touch_one_block() {
        let mut t = StepTables::optimistic(fact(), 2, 5);
        *t.q_mut(1, FactoredState::new(1, 2), 1) = -7.0;
        assert_eq!(t.allocated_blocks(), 1);
        assert_eq!(t.q(1, FactoredState::new(1, 2), 1), -7.0);
        assert_eq!(t.q(1, FactoredState::new(1, 2), 0), 3.0);
        assert_eq!(t.q(1, FactoredState::new(1, 3), 1), 3.0);
        let b = t.block(1, 2).unwrap();
        assert_eq!(b.len(), 6);
    }
}
