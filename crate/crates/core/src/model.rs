//! Factored finite-horizon MDP data model.
//!
//! Steps are zero-based throughout the crate: a horizon `H` model has steps
//! `0..H`, transitions exist out of steps `0..H-1`, and the last step `H-1`
//! only pays a reward.
//!
//! Global states are encoded as `s = controllable * n_exogenous + exogenous`,
//! so all states sharing an exogenous component are strided and every
//! `(step, exogenous)` block of a Q table holds `n_controllable * n_actions`
//! contiguous entries.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};

/// Tolerance for probability rows summing to one.
pub const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StateFactorization {
    n_controllable: usize,
    n_exogenous: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FactoredState {
    pub controllable: usize,
    pub exogenous: usize,
}

impl FactoredState {
    pub const fn new(controllable: usize, exogenous: usize) -> Self {
        Self {
            controllable,
            exogenous,
        }
    }
}

impl StateFactorization {
    pub fn new(n_controllable: usize, n_exogenous: usize) -> Result<Self> {
        if n_controllable == 0 || n_exogenous == 0 {
            return Err(Error::Dimension(format!(
                "state factors must be non-empty (got {n_controllable} x {n_exogenous})"
            )));
        }
        Ok(Self {
            n_controllable,
            n_exogenous,
        })
    }

    #[inline]
    pub fn n_controllable(&self) -> usize {
        self.n_controllable
    }

    #[inline]
    pub fn n_exogenous(&self) -> usize {
        self.n_exogenous
    }

    #[inline]
    pub fn n_states(&self) -> usize {
        self.n_controllable * self.n_exogenous
    }

    #[inline]
    pub fn encode(&self, state: FactoredState) -> usize {
        debug_assert!(state.controllable < self.n_controllable);
        debug_assert!(state.exogenous < self.n_exogenous);
        state.controllable * self.n_exogenous + state.exogenous
    }

    #[inline]
    pub fn decode(&self, s: usize) -> FactoredState {
        FactoredState {
            controllable: s / self.n_exogenous,
            exogenous: s % self.n_exogenous,
        }
    }

    pub fn check(&self, state: FactoredState) -> Result<()> {
        if state.controllable >= self.n_controllable {
            return Err(Error::IndexOutOfRange {
                what: "controllable state",
                index: state.controllable,
                size: self.n_controllable,
            });
        }
        if state.exogenous >= self.n_exogenous {
            return Err(Error::IndexOutOfRange {
                what: "exogenous state",
                index: state.exogenous,
                size: self.n_exogenous,
            });
        }
        Ok(())
    }
}

/// A per-step quantity that is either shared by every step or given
/// explicitly for each one.
#[derive(Debug, Clone, PartialEq)]
pub enum PerStep<T> {
    Stationary(T),
    Varying(Vec<T>),
}

impl<T> PerStep<T> {
    #[inline]
    pub fn get(&self, h: usize) -> &T {
        match self {
            PerStep::Stationary(t) => t,
            PerStep::Varying(v) => &v[h],
        }
    }

    /// Whether a value exists for every step in `0..steps`.
    pub fn covers(&self, steps: usize) -> bool {
        match self {
            PerStep::Stationary(_) => true,
            PerStep::Varying(v) => v.len() >= steps,
        }
    }

    /// The distinct stored values.
    pub fn values(&self) -> &[T] {
        match self {
            PerStep::Stationary(t) => core::slice::from_ref(t),
            PerStep::Varying(v) => v,
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> PerStep<U> {
        match self {
            PerStep::Stationary(t) => PerStep::Stationary(f(t)),
            PerStep::Varying(v) => PerStep::Varying(v.iter().map(f).collect()),
        }
    }
}

/// Compressed sparse rows of probability distributions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseRows {
    offsets: Vec<usize>,
    next: Vec<u32>,
    prob: Vec<f64>,
}

impl SparseRows {
    pub fn new() -> Self {
        Self {
            offsets: alloc::vec![0],
            next: Vec::new(),
            prob: Vec::new(),
        }
    }

    pub fn with_capacity(rows: usize, entries: usize) -> Self {
        let mut offsets = Vec::with_capacity(rows + 1);
        offsets.push(0);
        Self {
            offsets,
            next: Vec::with_capacity(entries),
            prob: Vec::with_capacity(entries),
        }
    }

    /// Appends one row. Entries are sorted and merged so the stored support is
    /// strictly increasing; zero-probability entries are dropped.
    pub fn push_row(&mut self, entries: &[(usize, f64)]) {
        let start = self.next.len();
        for &(i, p) in entries {
            if p == 0.0 {
                continue;
            }
            self.next.push(i as u32);
            self.prob.push(p);
        }
        let n = self.next.len() - start;
        if n > 1 {
            // insertion sort: supports are tiny
            for j in start + 1..start + n {
                let mut k = j;
                while k > start && self.next[k - 1] > self.next[k] {
                    self.next.swap(k - 1, k);
                    self.prob.swap(k - 1, k);
                    k -= 1;
                }
            }
            let mut w = start;
            for r in start + 1..start + n {
                if self.next[r] == self.next[w] {
                    self.prob[w] += self.prob[r];
                } else {
                    w += 1;
                    self.next[w] = self.next[r];
                    self.prob[w] = self.prob[r];
                }
            }
            self.next.truncate(w + 1);
            self.prob.truncate(w + 1);
        }
        self.offsets.push(self.next.len());
    }

    /// Appends a point mass.
    pub fn push_point(&mut self, i: usize) {
        self.next.push(i as u32);
        self.prob.push(1.0);
        self.offsets.push(self.next.len());
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.offsets[i], self.offsets[i + 1]);
        (&self.next[a..b], &self.prob[a..b])
    }

    pub fn max_support(&self) -> usize {
        self.offsets
            .windows(2)
            .map(|w| w[1] - w[0])
            .max()
            .unwrap_or(0)
    }

    pub fn validate(&self, n_targets: usize, what: &str) -> Result<()> {
        for i in 0..self.n_rows() {
            let (next, prob) = self.row(i);
            if next.is_empty() {
                return Err(Error::InvalidDistribution {
                    what: format!("{what} row {i}"),
                    reason: "empty support".into(),
                });
            }
            let mut prev: Option<u32> = None;
            let mut sum = 0.0;
            for (&j, &p) in next.iter().zip(prob) {
                if j as usize >= n_targets {
                    return Err(Error::InvalidDistribution {
                        what: format!("{what} row {i}"),
                        reason: format!("successor {j} outside 0..{n_targets}"),
                    });
                }
                if prev.is_some_and(|q| q >= j) {
                    return Err(Error::InvalidDistribution {
                        what: format!("{what} row {i}"),
                        reason: "support not strictly increasing".into(),
                    });
                }
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidDistribution {
                        what: format!("{what} row {i}"),
                        reason: format!("probability {p} outside [0, 1]"),
                    });
                }
                prev = Some(j);
                sum += p;
            }
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::NotStochastic {
                    what: format!("{what} row {i}"),
                    sum,
                });
            }
        }
        Ok(())
    }
}

/// Known controllable transition kernel `p◇_h(s◇' | s◇, s•, a)`.
///
/// Rows are keyed by `(s, a)` when the kernel reads the exogenous component,
/// and by `(s◇, a)` when it does not.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllableKernel {
    factorization: StateFactorization,
    n_actions: usize,
    exo_dependent: bool,
    rows: PerStep<SparseRows>,
}

impl ControllableKernel {
    pub fn new(
        factorization: StateFactorization,
        n_actions: usize,
        exo_dependent: bool,
        rows: PerStep<SparseRows>,
    ) -> Result<Self> {
        let expected = if exo_dependent {
            factorization.n_states() * n_actions
        } else {
            factorization.n_controllable() * n_actions
        };
        for (t, table) in rows.values().iter().enumerate() {
            if table.n_rows() != expected {
                return Err(Error::Dimension(format!(
                    "controllable kernel table {t} has {} rows, expected {expected}",
                    table.n_rows()
                )));
            }
            table.validate(factorization.n_controllable(), "controllable kernel")?;
        }
        Ok(Self {
            factorization,
            n_actions,
            exo_dependent,
            rows,
        })
    }

    #[inline]
    pub fn support(&self, h: usize, state: FactoredState, a: usize) -> (&[u32], &[f64]) {
        let row = if self.exo_dependent {
            self.factorization.encode(state) * self.n_actions + a
        } else {
            state.controllable * self.n_actions + a
        };
        self.rows.get(h).row(row)
    }

    pub fn exo_dependent(&self) -> bool {
        self.exo_dependent
    }

    pub fn covers(&self, steps: usize) -> bool {
        self.rows.covers(steps)
    }

    pub fn max_support(&self) -> usize {
        self.rows
            .values()
            .iter()
            .map(SparseRows::max_support)
            .max()
            .unwrap_or(0)
    }
}

/// Dense exogenous kernel `p•_h(s•' | s•)`, one row-stochastic matrix per
/// transition step.
#[derive(Debug, Clone, PartialEq)]
pub struct ExogenousKernel {
    n: usize,
    rows: PerStep<Vec<f64>>,
}

impl ExogenousKernel {
    pub fn new(n: usize, rows: PerStep<Vec<f64>>) -> Result<Self> {
        for (t, m) in rows.values().iter().enumerate() {
            if m.len() != n * n {
                return Err(Error::Dimension(format!(
                    "exogenous matrix {t} has {} entries, expected {}",
                    m.len(),
                    n * n
                )));
            }
            for (i, row) in m.chunks_exact(n).enumerate() {
                if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(Error::InvalidDistribution {
                        what: format!("exogenous matrix {t} row {i}"),
                        reason: "entry outside [0, 1]".into(),
                    });
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > STOCHASTIC_TOL {
                    return Err(Error::NotStochastic {
                        what: format!("exogenous matrix {t} row {i}"),
                        sum,
                    });
                }
            }
        }
        Ok(Self { n, rows })
    }

    /// Same matrix at every step.
    pub fn stationary(n: usize, matrix: Vec<f64>) -> Result<Self> {
        Self::new(n, PerStep::Stationary(matrix))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn row(&self, h: usize, exo: usize) -> &[f64] {
        let m = self.rows.get(h);
        &m[exo * self.n..(exo + 1) * self.n]
    }

    pub fn covers(&self, steps: usize) -> bool {
        self.rows.covers(steps)
    }
}

/// Reward table `r_h(s, a)` indexed by `s * n_actions + a`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardTable {
    n_actions: usize,
    values: PerStep<Vec<f64>>,
}

impl RewardTable {
    pub fn new(n_states: usize, n_actions: usize, values: PerStep<Vec<f64>>) -> Result<Self> {
        for (t, v) in values.values().iter().enumerate() {
            if v.len() != n_states * n_actions {
                return Err(Error::Dimension(format!(
                    "reward table {t} has {} entries, expected {}",
                    v.len(),
                    n_states * n_actions
                )));
            }
        }
        Ok(Self { n_actions, values })
    }

    #[inline]
    pub fn get(&self, h: usize, s: usize, a: usize) -> f64 {
        self.values.get(h)[s * self.n_actions + a]
    }

    /// All `n_actions` rewards of state `s` at step `h`.
    #[inline]
    pub fn row(&self, h: usize, s: usize) -> &[f64] {
        let v = self.values.get(h);
        &v[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn step_table(&self, h: usize) -> &[f64] {
        self.values.get(h)
    }

    pub fn tables(&self) -> &PerStep<Vec<f64>> {
        &self.values
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            n_actions: self.n_actions,
            values: self.values.map(|v| v.iter().map(|&r| f(r)).collect()),
        }
    }
}

/// Legal actions per `(step, controllable state)`, indexed `s◇ * n_actions + a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionMask {
    n_actions: usize,
    legal: PerStep<Vec<bool>>,
}

impl ActionMask {
    pub fn new(n_controllable: usize, n_actions: usize, legal: PerStep<Vec<bool>>) -> Result<Self> {
        for (t, v) in legal.values().iter().enumerate() {
            if v.len() != n_controllable * n_actions {
                return Err(Error::Dimension(format!(
                    "action mask {t} has {} entries, expected {}",
                    v.len(),
                    n_controllable * n_actions
                )));
            }
            for (c, row) in v.chunks_exact(n_actions).enumerate() {
                if !row.iter().any(|&b| b) {
                    return Err(Error::Dimension(format!(
                        "action mask {t}: controllable state {c} has no legal action"
                    )));
                }
            }
        }
        Ok(Self { n_actions, legal })
    }

    #[inline]
    pub fn is_legal(&self, h: usize, controllable: usize, a: usize) -> bool {
        self.legal.get(h)[controllable * self.n_actions + a]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardBounds {
    pub min: f64,
    pub max: f64,
}

/// Affine map between raw and `[0, 1]`-normalized rewards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardAffine {
    pub offset: f64,
    pub scale: f64,
    /// Set when the bounds were degenerate and every normalized reward is 0.
    pub degenerate: bool,
}

impl RewardAffine {
    pub const IDENTITY: Self = Self {
        offset: 0.0,
        scale: 1.0,
        degenerate: false,
    };

    pub fn from_bounds(bounds: RewardBounds) -> Self {
        let width = bounds.max - bounds.min;
        if width > 0.0 && width.is_finite() {
            Self {
                offset: bounds.min,
                scale: width,
                degenerate: false,
            }
        } else {
            Self {
                offset: bounds.min,
                scale: 1.0,
                degenerate: true,
            }
        }
    }

    #[inline]
    pub fn normalize(&self, r: f64) -> f64 {
        if self.degenerate {
            0.0
        } else {
            (r - self.offset) / self.scale
        }
    }

    #[inline]
    pub fn denormalize(&self, r: f64) -> f64 {
        r * self.scale + self.offset
    }

    /// Raw return of `steps` rewards whose normalized sum is `normalized`.
    #[inline]
    pub fn raw_return(&self, normalized: f64, steps: usize) -> f64 {
        normalized * self.scale + self.offset * steps as f64
    }

    /// Raw value of a difference of two normalized returns.
    #[inline]
    pub fn raw_gap(&self, normalized_gap: f64) -> f64 {
        normalized_gap * self.scale
    }
}

/// Everything a learner is allowed to know: factorization, actions, horizon,
/// the controllable kernel, rewards and the legal-action mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlModel {
    factorization: StateFactorization,
    n_actions: usize,
    horizon: usize,
    controllable: ControllableKernel,
    reward: RewardTable,
    bounds: RewardBounds,
    mask: Option<ActionMask>,
}

impl ControlModel {
    pub fn new(
        factorization: StateFactorization,
        n_actions: usize,
        horizon: usize,
        controllable: ControllableKernel,
        reward: RewardTable,
        bounds: RewardBounds,
        mask: Option<ActionMask>,
    ) -> Result<Self> {
        if n_actions == 0 {
            return Err(Error::Dimension("at least one action is required".into()));
        }
        if horizon == 0 {
            return Err(Error::Dimension("horizon must be positive".into()));
        }
        if controllable.factorization != factorization || controllable.n_actions != n_actions {
            return Err(Error::Dimension(
                "controllable kernel built for a different state/action space".into(),
            ));
        }
        if !controllable.covers(horizon.saturating_sub(1)) {
            return Err(Error::Dimension(
                "controllable kernel does not cover every transition step".into(),
            ));
        }
        if !reward.values.covers(horizon) {
            return Err(Error::Dimension("reward table does not cover every step".into()));
        }
        if let Some(m) = &mask {
            if !m.legal.covers(horizon) {
                return Err(Error::Dimension("action mask does not cover every step".into()));
            }
        }
        if !(bounds.min <= bounds.max) {
            return Err(Error::InvalidParameter(format!(
                "reward bounds [{}, {}] are not ordered",
                bounds.min, bounds.max
            )));
        }
        let steps = match &reward.values {
            PerStep::Stationary(_) => 1,
            PerStep::Varying(v) => v.len().min(horizon),
        };
        for h in 0..steps {
            for &r in reward.step_table(h) {
                if !(bounds.min..=bounds.max).contains(&r) {
                    return Err(Error::RewardOutOfBounds {
                        step: h,
                        value: r,
                        min: bounds.min,
                        max: bounds.max,
                    });
                }
            }
        }
        Ok(Self {
            factorization,
            n_actions,
            horizon,
            controllable,
            reward,
            bounds,
            mask,
        })
    }

    #[inline]
    pub fn factorization(&self) -> StateFactorization {
        self.factorization
    }

    #[inline]
    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    #[inline]
    pub fn n_states(&self) -> usize {
        self.factorization.n_states()
    }

    pub fn controllable(&self) -> &ControllableKernel {
        &self.controllable
    }

    pub fn rewards(&self) -> &RewardTable {
        &self.reward
    }

    pub fn reward_bounds(&self) -> RewardBounds {
        self.bounds
    }

    pub fn mask(&self) -> Option<&ActionMask> {
        self.mask.as_ref()
    }

    #[inline]
    pub fn reward(&self, h: usize, state: FactoredState, a: usize) -> f64 {
        self.reward.get(h, self.factorization.encode(state), a)
    }

    #[inline]
    pub fn support(&self, h: usize, state: FactoredState, a: usize) -> (&[u32], &[f64]) {
        self.controllable.support(h, state, a)
    }

    #[inline]
    pub fn is_legal(&self, h: usize, controllable: usize, a: usize) -> bool {
        self.mask
            .as_ref()
            .is_none_or(|m| m.is_legal(h, controllable, a))
    }

    pub fn legal_actions(&self, h: usize, controllable: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_actions).filter(move |&a| self.is_legal(h, controllable, a))
    }

    pub fn check_step(&self, h: usize) -> Result<()> {
        if h >= self.horizon {
            Err(Error::StepOutOfRange {
                step: h,
                horizon: self.horizon,
            })
        } else {
            Ok(())
        }
    }

    /// Rewards mapped to `[0, 1]` through the analytic bounds.
    pub fn normalized(&self) -> (ControlModel, RewardAffine) {
        let affine = RewardAffine::from_bounds(self.bounds);
        let mut out = self.clone();
        out.reward = self.reward.map(|r| affine.normalize(r));
        out.bounds = if affine.degenerate {
            RewardBounds { min: 0.0, max: 0.0 }
        } else {
            RewardBounds { min: 0.0, max: 1.0 }
        };
        (out, affine)
    }

    /// Same dynamics with a different reward table.
    pub fn with_rewards(&self, reward: RewardTable, bounds: RewardBounds) -> Result<Self> {
        Self::new(
            self.factorization,
            self.n_actions,
            self.horizon,
            self.controllable.clone(),
            reward,
            bounds,
            self.mask.clone(),
        )
    }
}

/// Distribution of the first state of every episode over global indices.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDistribution {
    states: Vec<(usize, f64)>,
}

impl InitialDistribution {
    pub fn new(n_states: usize, states: Vec<(usize, f64)>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidDistribution {
                what: "initial distribution".into(),
                reason: "empty support".into(),
            });
        }
        let mut sum = 0.0;
        for &(s, p) in &states {
            if s >= n_states {
                return Err(Error::IndexOutOfRange {
                    what: "initial state",
                    index: s,
                    size: n_states,
                });
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidDistribution {
                    what: "initial distribution".into(),
                    reason: format!("probability {p} outside [0, 1]"),
                });
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::NotStochastic {
                what: "initial distribution".into(),
                sum,
            });
        }
        Ok(Self { states })
    }

    pub fn point(s: usize) -> Self {
        Self {
            states: alloc::vec![(s, 1.0)],
        }
    }

    pub fn support(&self) -> &[(usize, f64)] {
        &self.states
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> usize {
        if self.states.len() == 1 {
            return self.states[0].0;
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for &(s, p) in &self.states {
            acc += p;
            if u < acc {
                return s;
            }
        }
        self.states[self.states.len() - 1].0
    }
}

/// The full model: known control part plus the true exogenous kernel and the
/// initial-state distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct FactoredModel {
    pub control: ControlModel,
    pub exogenous: ExogenousKernel,
    pub initial: InitialDistribution,
}

impl FactoredModel {
    pub fn new(
        control: ControlModel,
        exogenous: ExogenousKernel,
        initial: InitialDistribution,
    ) -> Result<Self> {
        if exogenous.n() != control.factorization().n_exogenous() {
            return Err(Error::Dimension(format!(
                "exogenous kernel over {} states, factorization has {}",
                exogenous.n(),
                control.factorization().n_exogenous()
            )));
        }
        if !exogenous.covers(control.horizon().saturating_sub(1)) {
            return Err(Error::Dimension(
                "exogenous kernel does not cover every transition step".into(),
            ));
        }
        for &(s, _) in initial.support() {
            if s >= control.n_states() {
                return Err(Error::IndexOutOfRange {
                    what: "initial state",
                    index: s,
                    size: control.n_states(),
                });
            }
        }
        Ok(Self {
            control,
            exogenous,
            initial,
        })
    }

    #[inline]
    pub fn factorization(&self) -> StateFactorization {
        self.control.factorization()
    }

    #[inline]
    pub fn n_actions(&self) -> usize {
        self.control.n_actions()
    }

    #[inline]
    pub fn horizon(&self) -> usize {
        self.control.horizon()
    }

    #[inline]
    pub fn n_states(&self) -> usize {
        self.control.n_states()
    }
}

/// `π_h(s)` for every step and global state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterministicPolicy {
    n_states: usize,
    horizon: usize,
    actions: Vec<u32>,
}

impl DeterministicPolicy {
    /// Plays action `a` everywhere.
    pub fn constant(n_states: usize, horizon: usize, a: usize) -> Self {
        Self {
            n_states,
            horizon,
            actions: alloc::vec![a as u32; n_states * horizon],
        }
    }

    pub fn from_fn(n_states: usize, horizon: usize, mut f: impl FnMut(usize, usize) -> usize) -> Self {
        let mut actions = Vec::with_capacity(n_states * horizon);
        for h in 0..horizon {
            for s in 0..n_states {
                actions.push(f(h, s) as u32);
            }
        }
        Self {
            n_states,
            horizon,
            actions,
        }
    }

    #[inline]
    pub fn action(&self, h: usize, s: usize) -> usize {
        self.actions[h * self.n_states + s] as usize
    }

    #[inline]
    pub fn set(&mut self, h: usize, s: usize, a: usize) {
        self.actions[h * self.n_states + s] = a as u32;
    }

    pub fn step_slice(&self, h: usize) -> &[u32] {
        &self.actions[h * self.n_states..(h + 1) * self.n_states]
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Checks every entry is a valid, legal action of `control`.
    pub fn validate(&self, control: &ControlModel) -> Result<()> {
        if self.n_states != control.n_states() || self.horizon != control.horizon() {
            return Err(Error::Dimension("policy shape does not match model".into()));
        }
        let fact = control.factorization();
        for h in 0..self.horizon {
            for s in 0..self.n_states {
                let a = self.action(h, s);
                let c = fact.decode(s).controllable;
                if a >= control.n_actions() || !control.is_legal(h, c, a) {
                    return Err(Error::IllegalAction {
                        step: h,
                        controllable: c,
                        action: a,
                    });
                }
            }
        }
        Ok(())
    }
}
