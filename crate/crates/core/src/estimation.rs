//! Learned quantities: exogenous visitation statistics and their empirical
//! kernel, full `(s, a, s')` counts for model-based baselines, the
//! counterfactual one-step target, the `(H+1)/(H+t)` learning-rate schedule
//! and Bernstein-type confidence envelopes.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::math::{ln, sqrt};
use crate::model::{ControlModel, ExogenousKernel, FactoredState, PerStep};
use crate::planning::Trajectory;

/// Increments the count for `key` in a sorted sparse count row.
fn bump(row: &mut Vec<(u32, u64)>, key: u32, by: u64) {
    match row.binary_search_by_key(&key, |&(k, _)| k) {
        Ok(i) => row[i].1 += by,
        Err(i) => row.insert(i, (key, by)),
    }
}

/// Visitation counts `n_h(s•)` and transition counts `m_h(s•, s•')`.
///
/// Visits are counted at every step (the learning rate of the last step
/// needs them); transitions only where a successor exists.
#[derive(Debug, Clone, PartialEq)]
pub struct ExoStatistics {
    n_exo: usize,
    horizon: usize,
    visits: Vec<u64>,
    transitions: Vec<Vec<(u32, u64)>>,
    episodes: u64,
}

/// Empirical distribution of the next exogenous state.
#[derive(Debug, Clone, PartialEq)]
pub struct ExoEstimate {
    pub probs: Vec<f64>,
    /// The state was never visited and `probs` is the uniform fallback.
    pub unvisited: bool,
}

impl ExoStatistics {
    pub fn new(n_exo: usize, horizon: usize) -> Self {
        Self {
            n_exo,
            horizon,
            visits: vec![0; n_exo * horizon],
            transitions: vec![Vec::new(); n_exo * horizon.saturating_sub(1)],
            episodes: 0,
        }
    }

    pub fn n_exogenous(&self) -> usize {
        self.n_exo
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn episodes(&self) -> u64 {
        self.episodes
    }

    fn check(&self, h: usize, e: usize, steps: usize) -> Result<()> {
        if h >= steps {
            return Err(Error::StepOutOfRange {
                step: h,
                horizon: steps,
            });
        }
        if e >= self.n_exo {
            return Err(Error::IndexOutOfRange {
                what: "exogenous state",
                index: e,
                size: self.n_exo,
            });
        }
        Ok(())
    }

    /// Counts a visit to `s•` at `h` without a successor; returns the new count.
    pub fn record_visit(&mut self, h: usize, e: usize) -> Result<u64> {
        self.check(h, e, self.horizon)?;
        let slot = &mut self.visits[h * self.n_exo + e];
        *slot += 1;
        Ok(*slot)
    }

    /// Counts the transition `s• → s•'` out of step `h < H-1`, incrementing
    /// both `n_h(s•)` and `m_h(s•, s•')`; returns the new `n_h(s•)`.
    pub fn record_transition(&mut self, h: usize, e: usize, next: usize) -> Result<u64> {
        self.check(h, e, self.horizon.saturating_sub(1))?;
        if next >= self.n_exo {
            return Err(Error::IndexOutOfRange {
                what: "exogenous successor",
                index: next,
                size: self.n_exo,
            });
        }
        bump(&mut self.transitions[h * self.n_exo + e], next as u32, 1);
        let slot = &mut self.visits[h * self.n_exo + e];
        *slot += 1;
        Ok(*slot)
    }

    /// Records every exogenous state of an episode.
    pub fn record_episode(&mut self, traj: &Trajectory) -> Result<()> {
        for (h, w) in traj.steps.windows(2).enumerate() {
            self.record_transition(h, w[0].state.exogenous, w[1].state.exogenous)?;
        }
        if let Some(last) = traj.steps.last() {
            self.record_visit(traj.steps.len() - 1, last.state.exogenous)?;
        }
        self.episodes += 1;
        Ok(())
    }

    /// Marks one more processed episode without touching counts; used by
    /// learners that record visits step by step.
    pub fn finish_episode(&mut self) {
        self.episodes += 1;
    }

    #[inline]
    pub fn visits(&self, h: usize, e: usize) -> u64 {
        self.visits[h * self.n_exo + e]
    }

    pub fn transition_count(&self, h: usize, e: usize, next: usize) -> u64 {
        let row = &self.transitions[h * self.n_exo + e];
        row.binary_search_by_key(&(next as u32), |&(k, _)| k)
            .map(|i| row[i].1)
            .unwrap_or(0)
    }

    /// Sparse `(s•', m_h(s•, s•'))` counts.
    pub fn transition_row(&self, h: usize, e: usize) -> &[(u32, u64)] {
        &self.transitions[h * self.n_exo + e]
    }

    /// Writes `m_h(s•, ·) / n_h(s•)` into `out`; unvisited states get the
    /// uniform distribution and the function returns `true`.
    pub fn empirical_into(&self, h: usize, e: usize, out: &mut [f64]) -> bool {
        let n = self.visits(h, e);
        if n == 0 {
            out.fill(1.0 / self.n_exo as f64);
            return true;
        }
        out.fill(0.0);
        let inv = 1.0 / n as f64;
        for &(k, c) in self.transition_row(h, e) {
            out[k as usize] = c as f64 * inv;
        }
        false
    }

    /// Empirical exogenous kernel at `(h, s•)`.
    pub fn empirical_exo_kernel(&self, h: usize, e: usize) -> Result<ExoEstimate> {
        self.check(h, e, self.horizon.saturating_sub(1))?;
        let mut probs = vec![0.0; self.n_exo];
        let unvisited = self.empirical_into(h, e, &mut probs);
        Ok(ExoEstimate { probs, unvisited })
    }

    /// The whole empirical kernel as a model component, with the number of
    /// rows that fell back to uniform.
    pub fn to_kernel(&self) -> (ExogenousKernel, usize) {
        let n = self.n_exo;
        let steps = self.horizon.saturating_sub(1);
        let mut fallback = 0;
        let mut mats = Vec::with_capacity(steps);
        for h in 0..steps {
            let mut m = vec![0.0; n * n];
            for e in 0..n {
                if self.empirical_into(h, e, &mut m[e * n..(e + 1) * n]) {
                    fallback += 1;
                }
            }
            mats.push(m);
        }
        let kernel = ExogenousKernel::new(n, PerStep::Varying(mats))
            .expect("empirical rows are stochastic by construction");
        (kernel, fallback)
    }

    /// Rebuilds statistics from raw parts (checkpoint loading).
    pub fn from_parts(
        n_exo: usize,
        horizon: usize,
        episodes: u64,
        visits: Vec<u64>,
        transitions: Vec<Vec<(u32, u64)>>,
    ) -> Result<Self> {
        if visits.len() != n_exo * horizon
            || transitions.len() != n_exo * horizon.saturating_sub(1)
        {
            return Err(Error::Dimension("exogenous statistics parts have wrong shape".into()));
        }
        for (i, row) in transitions.iter().enumerate() {
            let sum: u64 = row.iter().map(|&(_, c)| c).sum();
            if sum != visits[i] || row.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(invalid("transition counts inconsistent with visits"));
            }
            if row.iter().any(|&(k, _)| k as usize >= n_exo) {
                return Err(invalid("transition successor out of range"));
            }
        }
        Ok(Self {
            n_exo,
            horizon,
            visits,
            transitions,
            episodes,
        })
    }

    pub fn visits_table(&self) -> &[u64] {
        &self.visits
    }

    pub fn transition_rows(&self) -> &[Vec<(u32, u64)>] {
        &self.transitions
    }
}

/// Visit and successor counts for one `(h, s, a)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairCounts {
    pub visits: u64,
    pub successors: Vec<(u32, u64)>,
}

/// Sparse full-state counts keyed by `(s, a)` and `(s, a, s')` per step.
#[derive(Debug, Clone, PartialEq)]
pub struct FullStatistics {
    n_actions: usize,
    steps: Vec<BTreeMap<u64, PairCounts>>,
}

impl FullStatistics {
    /// Counts for transitions out of steps `0..transition_steps`.
    pub fn new(n_actions: usize, transition_steps: usize) -> Self {
        Self {
            n_actions,
            steps: vec![BTreeMap::new(); transition_steps],
        }
    }

    #[inline]
    fn key(&self, s: usize, a: usize) -> u64 {
        (s * self.n_actions + a) as u64
    }

    pub fn record(&mut self, h: usize, s: usize, a: usize, next: usize) -> Result<()> {
        self.add(h, s, a, next, 1)
    }

    /// Adds `count` observations of `(s, a) → s'` at step `h`.
    pub fn add(&mut self, h: usize, s: usize, a: usize, next: usize, count: u64) -> Result<()> {
        if h >= self.steps.len() {
            return Err(Error::StepOutOfRange {
                step: h,
                horizon: self.steps.len(),
            });
        }
        let key = self.key(s, a);
        let entry = self.steps[h].entry(key).or_default();
        entry.visits += count;
        bump(&mut entry.successors, next as u32, count);
        Ok(())
    }

    /// Records the transitions of one episode given global state indices.
    pub fn record_episode(&mut self, traj: &Trajectory, encode: impl Fn(FactoredState) -> usize) -> Result<()> {
        for (h, w) in traj.steps.windows(2).enumerate() {
            if h >= self.steps.len() {
                break;
            }
            self.record(h, encode(w[0].state), w[0].action, encode(w[1].state))?;
        }
        Ok(())
    }

    pub fn visits(&self, h: usize, s: usize, a: usize) -> u64 {
        self.steps[h].get(&self.key(s, a)).map_or(0, |c| c.visits)
    }

    pub fn pair(&self, h: usize, s: usize, a: usize) -> Option<&PairCounts> {
        self.steps[h].get(&self.key(s, a))
    }

    /// `((s, a), counts)` for every visited pair at step `h`, in key order.
    pub fn visited(&self, h: usize) -> impl Iterator<Item = ((usize, usize), &PairCounts)> {
        let na = self.n_actions;
        self.steps[h]
            .iter()
            .map(move |(&k, c)| (((k as usize) / na, (k as usize) % na), c))
    }

    pub fn transition_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Sparse estimate `count(s,a,s') / max(1, count(s,a))`; unvisited pairs
    /// give an empty (all-zero) row.
    pub fn empirical_full_kernel(&self, h: usize, s: usize, a: usize) -> Vec<(usize, f64)> {
        match self.pair(h, s, a) {
            None => Vec::new(),
            Some(c) => {
                let denom = c.visits.max(1) as f64;
                c.successors
                    .iter()
                    .map(|&(k, n)| (k as usize, n as f64 / denom))
                    .collect()
            }
        }
    }
}

/// `Σ_{s̄◇} v_by_ctrl[s̄◇] · p◇_h(s̄◇ | state, a)`.
#[inline]
pub fn expect_controllable(
    control: &ControlModel,
    h: usize,
    state: FactoredState,
    a: usize,
    v_by_ctrl: &[f64],
) -> f64 {
    let (next, prob) = control.support(h, state, a);
    next.iter()
        .zip(prob)
        .map(|(&c, &p)| p * v_by_ctrl[c as usize])
        .sum()
}

/// Counterfactual one-step target: the value of `f` one step after `(state, a)`
/// with the exogenous successor fixed to the observed `next_exo` and the
/// controllable successor averaged under the known kernel. Zero at the last
/// step, where no successor exists.
pub fn counterfactual_target(
    control: &ControlModel,
    h: usize,
    next_exo: usize,
    f: &[f64],
    state: FactoredState,
    a: usize,
) -> f64 {
    if h + 1 >= control.horizon() {
        return 0.0;
    }
    let ne = control.factorization().n_exogenous();
    let (next, prob) = control.support(h, state, a);
    next.iter()
        .zip(prob)
        .map(|(&c, &p)| p * f[c as usize * ne + next_exo])
        .sum()
}

/// `α_t = (H + 1) / (H + t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LearningRateSchedule {
    horizon: usize,
}

impl LearningRateSchedule {
    pub fn new(horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(invalid("learning-rate horizon must be positive"));
        }
        Ok(Self { horizon })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `α_t`; `t` is a visit count and must be at least 1.
    pub fn rate(&self, t: u64) -> Result<f64> {
        if t == 0 {
            return Err(invalid("learning rate index t must be >= 1"));
        }
        Ok(self.rate_unchecked(t))
    }

    #[inline]
    pub(crate) fn rate_unchecked(&self, t: u64) -> f64 {
        let h = self.horizon as f64;
        (h + 1.0) / (h + t as f64)
    }

    /// Weights `α_t^i = α_i Π_{j=i+1}^t (1 - α_j)` for `i = 0..=t`, where
    /// `α_t^0 = Π_{j=1}^t (1 - α_j)`. Built from the top down so no product
    /// is formed from underflowed factors.
    pub fn weights(&self, t: u64) -> Vec<f64> {
        let mut w = vec![0.0; t as usize + 1];
        let mut tail = 1.0;
        for i in (1..=t).rev() {
            let a = self.rate_unchecked(i);
            w[i as usize] = a * tail;
            tail *= 1.0 - a;
        }
        w[0] = tail;
        w
    }
}

/// Bernstein deviation bound for a sum of `n` zero-mean variables bounded by
/// `bound_b` with total variance `variance_sum`:
/// `sqrt(2 σ² log(2/δ)) + (2B/3) log(2/δ)`.
pub fn bernstein_bound(variance_sum: f64, bound_b: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta must lie in (0, 1)"));
    }
    if !(variance_sum >= 0.0) || !(bound_b > 0.0) {
        return Err(invalid("variance must be >= 0 and bound > 0"));
    }
    let l = ln(2.0 / delta);
    Ok(sqrt(2.0 * variance_sum * l) + 2.0 * bound_b / 3.0 * l)
}

/// [`bernstein_bound`] divided by `n`: a deviation bound on the sample mean.
pub fn bernstein_mean_bound(variance_sum: f64, bound_b: f64, n: u64, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n must be >= 1"));
    }
    Ok(bernstein_bound(variance_sum, bound_b, delta)? / n as f64)
}

/// Per-entry envelope on `|p̂(s•'|s•) - p(s•'|s•)|` after `n` visits, holding
/// simultaneously over `n_exo` successors, `episodes` visit counts and the
/// confidence level `delta`:
/// `sqrt(2 p (1-p) L / n) + 4 L / (3 n)` with `L = log(2 K S• / δ)`.
pub fn exo_estimator_envelope(p: f64, n: u64, episodes: u64, n_exo: usize, delta: f64) -> Result<f64> {
    if n == 0 || episodes == 0 || n_exo == 0 {
        return Err(invalid("counts must be positive"));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid("delta must lie in (0, 1]"));
    }
    let l = ln(2.0 * episodes as f64 * n_exo as f64 / delta);
    let n = n as f64;
    Ok(sqrt(2.0 * p * (1.0 - p) * l / n) + 4.0 * l / (3.0 * n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planning::TrajectoryStep;

    fn traj(exos: &[usize]) -> Trajectory {
        Trajectory {
            steps: exos
                .iter()
                .map(|&e| TrajectoryStep {
                    state: FactoredState::new(0, e),
                    action: 0,
                    reward: 0.0,
                })
                .collect(),
        }
    }

    #[test]
    fn single_transition_touches_two_cells() {
        let mut st = ExoStatistics::new(3, 4);
        assert_eq!(st.record_transition(1, 2, 0).unwrap(), 1);
        for h in 0..3 {
            for e in 0..3 {
                let want = u64::from(h == 1 && e == 2);
                assert_eq!(st.visits(h, e), want);
                for e2 in 0..3 {
                    assert_eq!(st.transition_count(h, e, e2), u64::from(h == 1 && e == 2 && e2 == 0));
                }
            }
        }
    }

    #[test]
    fn out_of_range_rejected() {
        let mut st = ExoStatistics::new(3, 4);
        assert!(st.record_transition(3, 0, 0).is_err());
        assert!(st.record_transition(0, 3, 0).is_err());
        assert!(st.record_transition(0, 0, 3).is_err());
        assert!(st.record_visit(4, 0).is_err());
    }

    #[test]
    fn conservation_over_episodes() {
        let mut st = ExoStatistics::new(3, 4);
        let eps = [[0, 1, 2, 0], [1, 1, 1, 2], [2, 0, 1, 1], [0, 0, 0, 0], [1, 2, 0, 1]];
        for e in &eps {
            st.record_episode(&traj(e)).unwrap();
        }
        assert_eq!(st.episodes(), 5);
        for h in 0..4 {
            let total: u64 = (0..3).map(|e| st.visits(h, e)).sum();
            assert_eq!(total, 5);
        }
        for h in 0..3 {
            for e in 0..3 {
                let m: u64 = (0..3).map(|e2| st.transition_count(h, e, e2)).sum();
                assert_eq!(m, st.visits(h, e));
            }
        }
    }

    #[test]
    fn empirical_kernel_ratios() {
        let mut st = ExoStatistics::new(2, 2);
        st.record_transition(0, 0, 1).unwrap();
        st.record_transition(0, 0, 1).unwrap();
        st.record_transition(0, 0, 0).unwrap();
        let est = st.empirical_exo_kernel(0, 0).unwrap();
        assert!(!est.unvisited);
        assert!((est.probs[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!((est.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let fallback = st.empirical_exo_kernel(0, 1).unwrap();
        assert!(fallback.unvisited);
        assert_eq!(fallback.probs, vec![0.5, 0.5]);
    }

    #[test]
    fn single_visit_is_point_mass() {
        let mut st = ExoStatistics::new(4, 3);
        st.record_transition(1, 3, 2).unwrap();
        assert_eq!(st.empirical_exo_kernel(1, 3).unwrap().probs, vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn full_kernel_zero_and_point_rows() {
        let mut fs = FullStatistics::new(2, 3);
        assert!(fs.empirical_full_kernel(0, 1, 1).is_empty());
        for _ in 0..5 {
            fs.record(0, 1, 1, 4).unwrap();
        }
        assert_eq!(fs.empirical_full_kernel(0, 1, 1), vec![(4, 1.0)]);
        assert_eq!(fs.visits(0, 1, 1), 5);
        assert!(fs.record(3, 0, 0, 0).is_err());
    }

    #[test]
    fn learning_rate_values() {
        for h in [1, 2, 7, 200] {
            let s = LearningRateSchedule::new(h).unwrap();
            assert_eq!(s.rate(1).unwrap(), 1.0);
        }
        let s = LearningRateSchedule::new(10).unwrap();
        assert!((s.rate(5).unwrap() - 11.0 / 15.0).abs() < 1e-15);
        assert!(s.rate(0).is_err());
        assert!(s.rate(3).unwrap() < s.rate(2).unwrap());
        for t in 1..50 {
            assert_eq!(s.weights(t)[0], 0.0);
        }
    }

    #[test]
    fn bernstein_values() {
        let l = (2.0f64 / 0.05).ln();
        assert!((bernstein_bound(0.0, 1.0, 0.05).unwrap() - 2.0 / 3.0 * l).abs() < 1e-12);
        let v = 100.0 * 0.25;
        let want = (2.0 * v * l).sqrt() + 2.0 / 3.0 * l;
        assert!((bernstein_bound(v, 1.0, 0.05).unwrap() - want).abs() < 1e-12);
        assert!((bernstein_mean_bound(v, 1.0, 100, 0.05).unwrap() - want / 100.0).abs() < 1e-14);
        assert!(bernstein_bound(1.0, 1.0, 0.0).is_err());
        assert!(bernstein_bound(1.0, 1.0, 1.0).is_err());
    }
}
