//! Exact finite-horizon planning on factored models.
//!
//! Every backup exploits the product structure of the kernel: for each
//! exogenous state the continuation is first averaged over the exogenous
//! successor, then the (sparse) controllable kernel is applied. A backup costs
//! `O(S◇·S•² + S·A·k)` for support size `k` instead of `O(S²·A)`.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::math::{argmax_legal, dot, sample_dense};
use crate::model::{
    ControlModel, DeterministicPolicy, ExogenousKernel, FactoredModel, FactoredState, RewardAffine,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryStep {
    pub state: FactoredState,
    pub action: usize,
    pub reward: f64,
}

/// One episode: `H` visited states with the action taken and reward earned.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
}

impl Trajectory {
    pub fn with_capacity(h: usize) -> Self {
        Self {
            steps: Vec::with_capacity(h),
        }
    }

    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn initial_state(&self) -> Option<FactoredState> {
        self.steps.first().map(|s| s.state)
    }

    /// `(s•_h, s•_{h+1})` pairs for every step that has a successor.
    pub fn exogenous_transitions(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.steps
            .windows(2)
            .enumerate()
            .map(|(h, w)| (h, w[0].state.exogenous, w[1].state.exogenous))
    }
}

/// Optimal Q and V tables per step plus the greedy policy.
#[derive(Debug, Clone)]
pub struct Solution {
    /// `q[h][s * A + a]`
    pub q: Vec<Vec<f64>>,
    /// `v[h][s]`
    pub v: Vec<Vec<f64>>,
    pub policy: DeterministicPolicy,
}

/// Scratch space reused across backups.
#[derive(Debug, Default, Clone)]
pub struct BackupWorkspace {
    // continuation[s• * S◇ + s◇'] = Σ_{s•'} p•(s•'|s•) V(s◇', s•')
    continuation: Vec<f64>,
}

impl BackupWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    fn fill(&mut self, control: &ControlModel, exo: &ExogenousKernel, h: usize, next_v: &[f64]) {
        let fact = control.factorization();
        let (nc, ne) = (fact.n_controllable(), fact.n_exogenous());
        self.continuation.clear();
        self.continuation.resize(nc * ne, 0.0);
        for e in 0..ne {
            let row = exo.row(h, e);
            let out = &mut self.continuation[e * nc..(e + 1) * nc];
            for (c, slot) in out.iter_mut().enumerate() {
                let vals = &next_v[c * ne..(c + 1) * ne];
                *slot = dot(row, vals);
            }
        }
    }

    /// Expected continuation of `(state, a)` after `fill`.
    #[inline]
    fn expect(&self, control: &ControlModel, h: usize, state: FactoredState, a: usize) -> f64 {
        let nc = control.factorization().n_controllable();
        let cont = &self.continuation[state.exogenous * nc..(state.exogenous + 1) * nc];
        let (next, prob) = control.support(h, state, a);
        next.iter()
            .zip(prob)
            .map(|(&c, &p)| p * cont[c as usize])
            .sum()
    }
}

/// Writes `Q_h(s, a) = r_h(s, a) + E[V_{h+1}(s')]` into `q` (length `S·A`).
/// `next_v = None` means zero continuation (last step).
pub fn backup_into(
    control: &ControlModel,
    exo: &ExogenousKernel,
    h: usize,
    next_v: Option<&[f64]>,
    ws: &mut BackupWorkspace,
    q: &mut [f64],
) {
    let fact = control.factorization();
    let na = control.n_actions();
    let rewards = control.rewards();
    match next_v {
        None => {
            for s in 0..fact.n_states() {
                q[s * na..(s + 1) * na].copy_from_slice(rewards.row(h, s));
            }
        }
        Some(v) => {
            ws.fill(control, exo, h, v);
            for s in 0..fact.n_states() {
                let st = fact.decode(s);
                let r = rewards.row(h, s);
                for a in 0..na {
                    q[s * na + a] = r[a] + ws.expect(control, h, st, a);
                }
            }
        }
    }
}

/// One Bellman optimality backup at step `h` (zero-based).
pub fn bellman_backup(model: &FactoredModel, h: usize, next_v: &[f64]) -> Result<Vec<f64>> {
    model.control.check_step(h)?;
    let n = model.n_states();
    if next_v.len() != n {
        return Err(Error::Dimension("next-step value table has wrong length".into()));
    }
    let mut q = vec![0.0; n * model.n_actions()];
    let mut ws = BackupWorkspace::new();
    let last = h + 1 == model.horizon();
    backup_into(
        &model.control,
        &model.exogenous,
        h,
        (!last).then_some(next_v),
        &mut ws,
        &mut q,
    );
    Ok(q)
}

/// Greedy maximization of one step's Q table over legal actions; ties go to
/// the lowest action index.
pub fn greedy_step(control: &ControlModel, h: usize, q: &[f64], v: &mut [f64], pi: &mut [u32]) {
    let fact = control.factorization();
    let na = control.n_actions();
    for s in 0..fact.n_states() {
        let c = fact.decode(s).controllable;
        let (a, best) = argmax_legal(&q[s * na..(s + 1) * na], |a| control.is_legal(h, c, a));
        v[s] = best;
        pi[s] = a as u32;
    }
}

/// Backward induction that keeps only the value tables and greedy policy.
pub fn plan(control: &ControlModel, exo: &ExogenousKernel) -> (Vec<Vec<f64>>, DeterministicPolicy) {
    let (_, v, pi) = induct(control, exo, false);
    (v, pi)
}

fn induct(
    control: &ControlModel,
    exo: &ExogenousKernel,
    keep_q: bool,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, DeterministicPolicy) {
    let n = control.n_states();
    let na = control.n_actions();
    let hz = control.horizon();
    let mut ws = BackupWorkspace::new();
    let mut qs = Vec::new();
    let mut vs = vec![Vec::new(); hz];
    let mut policy = DeterministicPolicy::constant(n, hz, 0);
    let mut q = vec![0.0; n * na];
    let mut pi = vec![0u32; n];
    for h in (0..hz).rev() {
        let next = if h + 1 < hz { Some(vs[h + 1].as_slice()) } else { None };
        backup_into(control, exo, h, next, &mut ws, &mut q);
        let mut v = vec![0.0; n];
        greedy_step(control, h, &q, &mut v, &mut pi);
        for (s, &a) in pi.iter().enumerate() {
            policy.set(h, s, a as usize);
        }
        vs[h] = v;
        if keep_q {
            qs.push(q.clone());
        }
    }
    qs.reverse();
    (qs, vs, policy)
}

/// Optimal Q*, V* and the greedy policy by backward induction.
pub fn value_iteration(model: &FactoredModel) -> Solution {
    let (q, v, policy) = induct(&model.control, &model.exogenous, true);
    Solution { q, v, policy }
}

/// Exact `V^π_h` for a deterministic policy.
pub fn evaluate_policy(model: &FactoredModel, policy: &DeterministicPolicy) -> Vec<Vec<f64>> {
    evaluate_with(&model.control, &model.exogenous, policy, 0.0)
}

/// Exact values of the ε-greedy wrapper around `policy`: with probability ε a
/// uniformly random legal action, otherwise the policy's action.
pub fn evaluate_epsilon_greedy(
    model: &FactoredModel,
    policy: &DeterministicPolicy,
    epsilon: f64,
) -> Vec<Vec<f64>> {
    evaluate_with(&model.control, &model.exogenous, policy, epsilon)
}

/// Policy evaluation against an arbitrary control model / exogenous kernel pair.
pub fn evaluate_with(
    control: &ControlModel,
    exo: &ExogenousKernel,
    policy: &DeterministicPolicy,
    epsilon: f64,
) -> Vec<Vec<f64>> {
    let fact = control.factorization();
    let n = fact.n_states();
    let na = control.n_actions();
    let hz = control.horizon();
    let rewards = control.rewards();
    let mut ws = BackupWorkspace::new();
    let mut vs: Vec<Vec<f64>> = vec![Vec::new(); hz];
    let mut legal: Vec<usize> = Vec::with_capacity(na);
    for h in (0..hz).rev() {
        let has_next = h + 1 < hz;
        if has_next {
            ws.fill(control, exo, h, &vs[h + 1]);
        }
        let mut v = vec![0.0; n];
        for c in 0..fact.n_controllable() {
            legal.clear();
            legal.extend(control.legal_actions(h, c));
            if has_next && !control.controllable().exo_dependent() {
                evaluate_block(control, h, c, &legal, policy, epsilon, &ws, &mut v);
                continue;
            }
            for e in 0..fact.n_exogenous() {
                let st = FactoredState::new(c, e);
                let s = fact.encode(st);
                let r = rewards.row(h, s);
                let q = |a: usize| r[a] + if has_next { ws.expect(control, h, st, a) } else { 0.0 };
                let greedy = policy.action(h, s);
                v[s] = if epsilon > 0.0 {
                    let mut sum = 0.0;
                    let mut q_greedy = None;
                    for &a in &legal {
                        let qa = q(a);
                        sum += qa;
                        if a == greedy {
                            q_greedy = Some(qa);
                        }
                    }
                    let qg = q_greedy.unwrap_or_else(|| q(greedy));
                    (1.0 - epsilon) * qg + epsilon * sum / legal.len() as f64
                } else {
                    q(greedy)
                };
            }
        }
        vs[h] = v;
    }
    vs
}

/// [`evaluate_with`] for one controllable state when its successors do not
/// depend on the exogenous state, so supports are looked up once.
#[allow(clippy::too_many_arguments)]
fn evaluate_block(
    control: &ControlModel,
    h: usize,
    c: usize,
    legal: &[usize],
    policy: &DeterministicPolicy,
    epsilon: f64,
    ws: &BackupWorkspace,
    v: &mut [f64],
) {
    let fact = control.factorization();
    let (nc, ne) = (fact.n_controllable(), fact.n_exogenous());
    let rewards = control.rewards();
    let supports: Vec<(&[u32], &[f64])> = (0..control.n_actions())
        .map(|a| control.support(h, FactoredState::new(c, 0), a))
        .collect();
    let expect = |cont: &[f64], a: usize| -> f64 {
        let (next, prob) = supports[a];
        next.iter().zip(prob).map(|(&n, &p)| p * cont[n as usize]).sum()
    };
    for e in 0..ne {
        let s = fact.encode(FactoredState::new(c, e));
        let r = rewards.row(h, s);
        let cont = &ws.continuation[e * nc..(e + 1) * nc];
        let greedy = policy.action(h, s);
        let qg = r[greedy] + expect(cont, greedy);
        v[s] = if epsilon > 0.0 {
            let sum: f64 = legal.iter().map(|&a| r[a] + expect(cont, a)).sum();
            (1.0 - epsilon) * qg + epsilon * sum / legal.len() as f64
        } else {
            qg
        };
    }
}

/// Expected value of `v` under the model's initial distribution.
pub fn initial_value(model: &FactoredModel, v1: &[f64]) -> f64 {
    model.initial.support().iter().map(|&(s, p)| p * v1[s]).sum()
}

/// Dense full kernel `p_h(s'|s,a)` at transition step `h`, laid out as
/// `((s * A + a) * S + s')`. Only for small models.
pub fn compose_full_kernel(model: &FactoredModel, h: usize, budget: usize) -> Result<Vec<f64>> {
    if h + 1 >= model.horizon() {
        return Err(Error::StepOutOfRange {
            step: h,
            horizon: model.horizon().saturating_sub(1),
        });
    }
    let fact = model.factorization();
    let n = fact.n_states();
    let na = model.n_actions();
    let required = n
        .checked_mul(na)
        .and_then(|x| x.checked_mul(n))
        .unwrap_or(usize::MAX);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let ne = fact.n_exogenous();
    let mut out = vec![0.0; required];
    for s in 0..n {
        let st = fact.decode(s);
        let exo_row = model.exogenous.row(h, st.exogenous);
        for a in 0..na {
            let base = (s * na + a) * n;
            let (next, prob) = model.control.support(h, st, a);
            for (&c, &pc) in next.iter().zip(prob) {
                let c = c as usize;
                for (e, &pe) in exo_row.iter().enumerate() {
                    out[base + c * ne + e] = pc * pe;
                }
            }
        }
    }
    Ok(out)
}

/// Draws the next state factor by factor: controllable successor from the
/// known kernel, then the exogenous successor independently.
pub fn sample_transition(
    model: &FactoredModel,
    h: usize,
    state: FactoredState,
    a: usize,
    rng: &mut dyn RngCore,
) -> FactoredState {
    let (next, prob) = model.control.support(h, state, a);
    let u: f64 = rng.random();
    let c = next[sample_dense(prob, u)] as usize;
    let u: f64 = rng.random();
    let e = sample_dense(model.exogenous.row(h, state.exogenous), u);
    FactoredState::new(c, e)
}

/// Rolls out one episode of `policy` on the model.
pub fn sample_episode(
    model: &FactoredModel,
    mut policy: impl FnMut(usize, FactoredState) -> usize,
    rng: &mut dyn RngCore,
) -> Trajectory {
    let fact = model.factorization();
    let hz = model.horizon();
    let mut traj = Trajectory::with_capacity(hz);
    let mut state = fact.decode(model.initial.sample(rng));
    for h in 0..hz {
        let a = policy(h, state);
        let reward = model.control.reward(h, state, a);
        traj.steps.push(TrajectoryStep {
            state,
            action: a,
            reward,
        });
        if h + 1 < hz {
            state = sample_transition(model, h, state, a, rng);
        }
    }
    traj
}

/// Maps every reward into `[0, 1]` through the model's analytic bounds.
pub fn normalize_rewards(model: &FactoredModel) -> (FactoredModel, RewardAffine) {
    let (control, affine) = model.control.normalized();
    (
        FactoredModel {
            control,
            exogenous: model.exogenous.clone(),
            initial: model.initial.clone(),
        },
        affine,
    )
}
