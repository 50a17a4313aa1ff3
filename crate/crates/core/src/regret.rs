//! Cumulative regret bookkeeping.

use crate::error::{Error, Result};

/// Absolute slack for a negative regret increment, scaled by `max(1, |V*|)`.
pub const NEGATIVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RegretLedger {
    cumulative: f64,
    episodes: usize,
}

impl RegretLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cumulative(&self) -> f64 {
        self.cumulative
    }

    pub fn episodes(&self) -> usize {
        self.episodes
    }

    /// Adds `V*_1(s_1) - V^π_1(s_1)` and returns the increment.
    ///
    /// Increments below zero by more than the tolerance mean the "optimal"
    /// value was not optimal, which is reported as an error. Smaller negative
    /// rounding noise is clamped to zero so the total never decreases.
    pub fn update(&mut self, v_star: f64, v_pi: f64) -> Result<f64> {
        let inc = v_star - v_pi;
        let tol = NEGATIVE_TOL * v_star.abs().max(1.0);
        if inc < -tol || inc.is_nan() {
            return Err(Error::NegativeRegret(inc));
        }
        let inc = inc.max(0.0);
        self.cumulative += inc;
        self.episodes += 1;
        Ok(inc)
    }
}

/// Functional form of [`RegretLedger::update`].
pub fn regret_update(ledger: RegretLedger, v_star: f64, v_pi: f64) -> Result<RegretLedger> {
    let mut l = ledger;
    l.update(v_star, v_pi)?;
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_episodes_zero_regret() {
        assert_eq!(RegretLedger::new().cumulative(), 0.0);
    }

    #[test]
    fn optimal_play_adds_nothing() {
        let l = regret_update(RegretLedger::new(), 3.5, 3.5).unwrap();
        assert_eq!(l.cumulative(), 0.0);
        assert_eq!(l.episodes(), 1);
    }

    #[test]
    fn rounding_noise_clamped_real_violation_rejected() {
        let mut l = RegretLedger::new();
        assert_eq!(l.update(1.0, 1.0 + 1e-13).unwrap(), 0.0);
        assert!(matches!(l.update(1.0, 1.1), Err(Error::NegativeRegret(_))));
        assert_eq!(l.episodes(), 1);
    }

    #[test]
    fn accumulates() {
        let mut l = RegretLedger::new();
        l.update(2.0, 1.5).unwrap();
        l.update(2.0, 1.0).unwrap();
        assert!((l.cumulative() - 1.5).abs() < 1e-15);
    }
}
