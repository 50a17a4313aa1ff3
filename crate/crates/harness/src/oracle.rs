//! Independent verification machinery: policy enumeration, log-log slope
//! fits, a chi-square test of action independence for the exogenous process,
//! and a coverage experiment for the exogenous-kernel concentration envelope.

use pcmdp::env::{Environment, ModelEnv, Step};
use pcmdp::estimation::exo_estimator_envelope;
use pcmdp::model::{
    ControlModel, ControllableKernel, ExogenousKernel, FactoredModel, FactoredState, InitialDistribution,
    PerStep, RewardBounds, RewardTable, SparseRows, StateFactorization,
};
use rand::{Rng, RngCore};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{HarnessError, Result};

/// Default cap on the number of policies [`brute_force_optimal`] enumerates.
pub const POLICY_BUDGET: u64 = 10_000_000;

/// `max_π V^π_1(s0)` for every state in the initial support, by enumerating
/// every deterministic step-dependent policy over the decision points
/// reachable from `s0` and evaluating each by forward propagation.
pub fn brute_force_optimal(model: &FactoredModel, budget: u64) -> Result<Vec<(usize, f64)>> {
    model
        .initial
        .support()
        .iter()
        .map(|&(s0, _)| brute_force_from(model, s0, budget).map(|v| (s0, v)))
        .collect()
}

/// Expected optimal return under the initial distribution, by enumeration.
pub fn brute_force_initial_value(model: &FactoredModel, budget: u64) -> Result<f64> {
    let per_state = brute_force_optimal(model, budget)?;
    Ok(model
        .initial
        .support()
        .iter()
        .zip(&per_state)
        .map(|(&(_, p), &(_, v))| p * v)
        .sum())
}

fn successors(model: &FactoredModel, h: usize, s: usize, a: usize, mut f: impl FnMut(usize, f64)) {
    let fact = model.factorization();
    let ne = fact.n_exogenous();
    let st = fact.decode(s);
    let (next, prob) = model.control.support(h, st, a);
    let exo = model.exogenous.row(h, st.exogenous);
    for (&c, &pc) in next.iter().zip(prob) {
        for (e, &pe) in exo.iter().enumerate() {
            if pc * pe > 0.0 {
                f(c as usize * ne + e, pc * pe);
            }
        }
    }
}

fn brute_force_from(model: &FactoredModel, s0: usize, budget: u64) -> Result<f64> {
    let n = model.n_states();
    let na = model.n_actions();
    let hz = model.horizon();
    let fact = model.factorization();

    // decision points reachable under some action sequence
    let mut reach = vec![vec![s0]];
    for h in 0..hz - 1 {
        let mut seen = vec![false; n];
        for &s in &reach[h] {
            for a in 0..na {
                successors(model, h, s, a, |s2, _| seen[s2] = true);
            }
        }
        reach.push((0..n).filter(|&s| seen[s]).collect());
    }
    let legal: Vec<Vec<Vec<usize>>> = reach
        .iter()
        .enumerate()
        .map(|(h, states)| {
            states
                .iter()
                .map(|&s| model.control.legal_actions(h, fact.decode(s).controllable).collect())
                .collect()
        })
        .collect();
    let mut count: u64 = 1;
    for choices in legal.iter().flatten() {
        count = count.saturating_mul(choices.len() as u64);
    }
    if count > budget {
        return Err(HarnessError::Oracle(format!(
            "{count} policies exceed the enumeration budget of {budget}"
        )));
    }

    let mut digits: Vec<Vec<usize>> = legal.iter().map(|l| vec![0; l.len()]).collect();
    let mut best = f64::NEG_INFINITY;
    let mut dist = vec![0.0; n];
    let mut next = vec![0.0; n];
    for _ in 0..count {
        dist.fill(0.0);
        dist[s0] = 1.0;
        let mut value = 0.0;
        for h in 0..hz {
            next.fill(0.0);
            for (i, &s) in reach[h].iter().enumerate() {
                let mass = dist[s];
                if mass == 0.0 {
                    continue;
                }
                let a = legal[h][i][digits[h][i]];
                value += mass * model.control.reward(h, fact.decode(s), a);
                if h + 1 < hz {
                    successors(model, h, s, a, |s2, p| next[s2] += mass * p);
                }
            }
            std::mem::swap(&mut dist, &mut next);
        }
        best = best.max(value);
        // advance the mixed-radix counter
        'carry: for (h, row) in digits.iter_mut().enumerate() {
            for (i, d) in row.iter_mut().enumerate() {
                *d += 1;
                if *d < legal[h][i].len() {
                    break 'carry;
                }
                *d = 0;
            }
        }
    }
    Ok(best)
}

/// Size limits for [`random_pcmdp`].
#[derive(Debug, Clone, Copy)]
pub struct RandomModelLimits {
    pub max_controllable: usize,
    pub max_exogenous: usize,
    pub max_actions: usize,
    pub max_horizon: usize,
}

impl Default for RandomModelLimits {
    fn default() -> Self {
        Self {
            max_controllable: 3,
            max_exogenous: 3,
            max_actions: 2,
            max_horizon: 3,
        }
    }
}

fn random_dist(n: usize, rng: &mut dyn RngCore) -> Vec<f64> {
    // sparse-ish: each entry zero with probability 1/3, at least one kept
    let mut w: Vec<f64> = (0..n)
        .map(|_| if rng.random::<f64>() < 1.0 / 3.0 { 0.0 } else { rng.random::<f64>() + 1e-3 })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.random_range(0..n)] = 1.0;
    }
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= sum);
    w
}

/// A random small model: step-varying kernels, sometimes exogenous-dependent
/// controllable dynamics, rewards in `[0, 1]`, random initial distribution.
pub fn random_pcmdp(limits: RandomModelLimits, rng: &mut dyn RngCore) -> FactoredModel {
    let nc = rng.random_range(1..=limits.max_controllable);
    let ne = rng.random_range(1..=limits.max_exogenous);
    let na = rng.random_range(1..=limits.max_actions);
    let hz = rng.random_range(1..=limits.max_horizon);
    let fact = StateFactorization::new(nc, ne).expect("positive sizes");
    let exo_dep = rng.random::<bool>();
    let rows_per = if exo_dep { nc * ne * na } else { nc * na };
    let transitions = hz.saturating_sub(1);
    let mut kernels = Vec::with_capacity(transitions.max(1));
    for _ in 0..transitions.max(1) {
        let mut rows = SparseRows::new();
        for _ in 0..rows_per {
            let d = random_dist(nc, rng);
            let entries: Vec<(usize, f64)> = d.iter().copied().enumerate().filter(|&(_, p)| p > 0.0).collect();
            rows.push_row(&entries);
        }
        kernels.push(rows);
    }
    let kernel = ControllableKernel::new(fact, na, exo_dep, PerStep::Varying(kernels)).expect("valid kernel");
    let mut mats = Vec::with_capacity(transitions.max(1));
    for _ in 0..transitions.max(1) {
        let mut m = Vec::with_capacity(ne * ne);
        for _ in 0..ne {
            m.extend(random_dist(ne, rng));
        }
        mats.push(m);
    }
    let exogenous = ExogenousKernel::new(ne, PerStep::Varying(mats)).expect("valid kernel");
    let rewards = (0..hz)
        .map(|_| (0..fact.n_states() * na).map(|_| rng.random::<f64>()).collect())
        .collect();
    let reward = RewardTable::new(fact.n_states(), na, PerStep::Varying(rewards)).expect("valid rewards");
    let control = ControlModel::new(fact, na, hz, kernel, reward, RewardBounds { min: 0.0, max: 1.0 }, None)
        .expect("valid control model");
    let init = random_dist(fact.n_states(), rng);
    let initial = InitialDistribution::new(
        fact.n_states(),
        init.into_iter().enumerate().filter(|&(_, p)| p > 0.0).collect(),
    )
    .expect("valid initial distribution");
    FactoredModel::new(control, exogenous, initial).expect("consistent model")
}

/// Least-squares fit of `log R = slope · log K + intercept`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub residual_norm: f64,
}

impl ScalingFit {
    /// `exp(intercept)`: the constant `c` in `R ≈ c K^slope`.
    pub fn constant(&self) -> f64 {
        self.intercept.exp()
    }
}

pub fn regret_slope(k_grid: &[f64], regrets: &[f64]) -> Result<ScalingFit> {
    if k_grid.len() != regrets.len() || k_grid.len() < 4 {
        return Err(HarnessError::Oracle("slope fit needs at least 4 matching points".into()));
    }
    if k_grid.windows(2).any(|w| w[1] <= w[0]) || k_grid[0] <= 0.0 {
        return Err(HarnessError::Oracle("K values must be positive and strictly increasing".into()));
    }
    if regrets.iter().any(|&r| !(r > 0.0)) {
        return Err(HarnessError::Oracle("regret values must be positive".into()));
    }
    let points: Vec<(f64, f64)> = k_grid.iter().zip(regrets).map(|(k, r)| (k.ln(), r.ln())).collect();
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual_norm = points
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(ScalingFit {
        points,
        slope,
        intercept,
        residual_norm,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExogeneityResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Fewer than two usable outcome columns or actions; no test performed.
    pub skipped: bool,
}

impl ExogeneityResult {
    /// No dependence on the action detected at level `alpha`.
    pub fn passes(&self, alpha: f64) -> bool {
        self.skipped || self.p_value > alpha
    }
}

/// Chi-square independence test of `s•_{h+1}` against the action, sampling
/// `samples_per_action` steps from `state` for every legal action. Outcome
/// columns with expected count below 5 are pooled.
pub fn exogeneity_test(
    env: &dyn Environment,
    h: usize,
    state: FactoredState,
    samples_per_action: usize,
    rng: &mut dyn RngCore,
) -> Result<ExogeneityResult> {
    if samples_per_action < 1000 {
        return Err(HarnessError::Oracle("need at least 1000 samples per action".into()));
    }
    if h + 1 >= env.horizon() {
        return Err(HarnessError::Oracle("no exogenous successor at the last step".into()));
    }
    let control = env.control();
    let ne = control.factorization().n_exogenous();
    let actions: Vec<usize> = control.legal_actions(h, state.controllable).collect();
    let mut table = vec![vec![0u64; ne]; actions.len()];
    for (row, &a) in table.iter_mut().zip(&actions) {
        for _ in 0..samples_per_action {
            let step = env.step(h, state, a, rng)?;
            let next = step.next.expect("successor exists before the last step");
            row[next.exogenous] += 1;
        }
    }
    Ok(chi_square_independence(&table))
}

/// Pearson chi-square test of independence on a rows × columns count table.
pub fn chi_square_independence(table: &[Vec<u64>]) -> ExogeneityResult {
    let skipped = ExogeneityResult {
        statistic: 0.0,
        dof: 0,
        p_value: 1.0,
        skipped: true,
    };
    let rows = table.len();
    if rows < 2 {
        return skipped;
    }
    let cols = table[0].len();
    let row_tot: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let total: f64 = row_tot.iter().sum();
    let col_tot: Vec<f64> = (0..cols).map(|j| table.iter().map(|r| r[j]).sum::<u64>() as f64).collect();
    let min_row = row_tot.iter().cloned().fold(f64::INFINITY, f64::min);
    // pool sparse columns so every expected count is at least 5
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut pooled: Vec<usize> = Vec::new();
    for j in 0..cols {
        if col_tot[j] == 0.0 {
            continue;
        }
        if col_tot[j] * min_row / total >= 5.0 {
            groups.push(vec![j]);
        } else {
            pooled.push(j);
        }
    }
    if !pooled.is_empty() {
        let mass: f64 = pooled.iter().map(|&j| col_tot[j]).sum();
        if mass * min_row / total >= 5.0 || groups.is_empty() {
            groups.push(pooled);
        } else if let Some(smallest) = groups.iter_mut().min_by(|a, b| {
            let ma: f64 = a.iter().map(|&j| col_tot[j]).sum();
            let mb: f64 = b.iter().map(|&j| col_tot[j]).sum();
            ma.total_cmp(&mb)
        }) {
            smallest.extend(pooled);
        }
    }
    if groups.len() < 2 {
        return skipped;
    }
    let mut stat = 0.0;
    for (r, row) in table.iter().enumerate() {
        for g in &groups {
            let obs: f64 = g.iter().map(|&j| row[j] as f64).sum();
            let col: f64 = g.iter().map(|&j| col_tot[j]).sum();
            let exp = row_tot[r] * col / total;
            stat += (obs - exp).powi(2) / exp;
        }
    }
    let dof = (rows - 1) * (groups.len() - 1);
    let chi = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    ExogeneityResult {
        statistic: stat,
        dof,
        p_value: chi.sf(stat),
        skipped: false,
    }
}

/// Fraction of `trials` in which the count-ratio estimate of `p` from `n`
/// draws leaves the per-entry envelope
/// `sqrt(2 p (1-p) L / n) + 4 L / (3 n)`, `L = log(2 K S / δ)`, with `K = 1`
/// and `S = len(p)`, in at least one entry. At `δ >= 1` the envelope carries
/// no probability guarantee and is taken as unbounded.
pub fn concentration_coverage(p: &[f64], n: u64, delta: f64, trials: usize, rng: &mut dyn RngCore) -> Result<f64> {
    if trials < 100 {
        return Err(HarnessError::Oracle("need at least 100 trials".into()));
    }
    if n == 0 || p.is_empty() || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(HarnessError::Oracle("need n >= 1 and a probability vector".into()));
    }
    if delta >= 1.0 {
        return Ok(0.0);
    }
    let envelope: Vec<f64> = p
        .iter()
        .map(|&pj| exo_estimator_envelope(pj, n, 1, p.len(), delta))
        .collect::<std::result::Result<_, _>>()?;
    let mut cdf = Vec::with_capacity(p.len());
    let mut acc = 0.0;
    for &pj in p {
        acc += pj;
        cdf.push(acc);
    }
    let mut counts = vec![0u64; p.len()];
    let mut violations = 0;
    for _ in 0..trials {
        counts.fill(0);
        for _ in 0..n {
            let u: f64 = rng.random();
            let j = cdf.iter().position(|&c| u < c).unwrap_or(p.len() - 1);
            counts[j] += 1;
        }
        let violated = counts
            .iter()
            .zip(p)
            .zip(&envelope)
            .any(|((&c, &pj), &b)| (c as f64 / n as f64 - pj).abs() > b);
        violations += usize::from(violated);
    }
    Ok(violations as f64 / trials as f64)
}

/// A deliberately non-exogenous process: with probability `leak` the next
/// "exogenous" state copies the action, otherwise it is uniform. The
/// exogeneity test must flag it.
pub struct PlantedDependence {
    inner: ModelEnv,
    leak: f64,
}

impl PlantedDependence {
    pub fn new(n_values: usize, leak: f64) -> Result<Self> {
        let fact = StateFactorization::new(1, n_values)?;
        let hz = 2;
        let mut rows = SparseRows::new();
        for _ in 0..n_values {
            rows.push_point(0);
        }
        let kernel = ControllableKernel::new(fact, n_values, false, PerStep::Stationary(rows))?;
        let reward = RewardTable::new(fact.n_states(), n_values, PerStep::Stationary(vec![0.0; fact.n_states() * n_values]))?;
        let control = ControlModel::new(fact, n_values, hz, kernel, reward, RewardBounds { min: 0.0, max: 1.0 }, None)?;
        let uniform = vec![1.0 / n_values as f64; n_values * n_values];
        let model = FactoredModel::new(
            control,
            ExogenousKernel::stationary(n_values, uniform)?,
            InitialDistribution::point(0),
        )?;
        Ok(Self {
            inner: ModelEnv::new("planted-dependence", model),
            leak,
        })
    }
}

impl Environment for PlantedDependence {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn control(&self) -> &ControlModel {
        self.inner.control()
    }

    fn reset(&self, rng: &mut dyn RngCore) -> FactoredState {
        self.inner.reset(rng)
    }

    fn step(&self, h: usize, state: FactoredState, a: usize, rng: &mut dyn RngCore) -> pcmdp::Result<Step> {
        let mut step = self.inner.step(h, state, a, rng)?;
        if let Some(next) = step.next.as_mut() {
            if rng.random::<f64>() < self.leak {
                next.exogenous = a;
            }
        }
        Ok(step)
    }

    fn export_model(&self) -> Option<FactoredModel> {
        None
    }

    fn sample_exogenous(&self, h: usize, exo: usize, rng: &mut dyn RngCore) -> usize {
        self.inner.sample_exogenous(h, exo, rng)
    }
}
