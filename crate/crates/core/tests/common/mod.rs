#![allow(dead_code)]

use pcmdp::model::{
    ControlModel, ControllableKernel, ExogenousKernel, FactoredModel, InitialDistribution, PerStep,
    RewardBounds, RewardTable, SparseRows, StateFactorization,
};
use pcmdp::planning::compose_full_kernel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_dist(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n)
        .map(|_| if rng.random::<f64>() < 0.3 { 0.0 } else { rng.random::<f64>() + 0.01 })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.random_range(0..n)] = 1.0;
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

/// Random model with the given sizes; rewards in `[0, 1]`.
pub fn random_model(nc: usize, ne: usize, na: usize, hz: usize, exo_dep: bool, rng: &mut impl Rng) -> FactoredModel {
    let fact = StateFactorization::new(nc, ne).unwrap();
    let rows_per = if exo_dep { nc * ne * na } else { nc * na };
    let steps = hz.saturating_sub(1).max(1);
    let kernels = (0..steps)
        .map(|_| {
            let mut rows = SparseRows::new();
            for _ in 0..rows_per {
                let d = random_dist(nc, rng);
                let e: Vec<(usize, f64)> = d.into_iter().enumerate().filter(|&(_, p)| p > 0.0).collect();
                rows.push_row(&e);
            }
            rows
        })
        .collect();
    let kernel = ControllableKernel::new(fact, na, exo_dep, PerStep::Varying(kernels)).unwrap();
    let mats = (0..steps)
        .map(|_| (0..ne).flat_map(|_| random_dist(ne, rng)).collect())
        .collect();
    let exogenous = ExogenousKernel::new(ne, PerStep::Varying(mats)).unwrap();
    let rewards = (0..hz)
        .map(|_| (0..fact.n_states() * na).map(|_| rng.random::<f64>()).collect())
        .collect();
    let reward = RewardTable::new(fact.n_states(), na, PerStep::Varying(rewards)).unwrap();
    let control =
        ControlModel::new(fact, na, hz, kernel, reward, RewardBounds { min: 0.0, max: 1.0 }, None).unwrap();
    let init: Vec<(usize, f64)> = random_dist(fact.n_states(), rng)
        .into_iter()
        .enumerate()
        .filter(|&(_, p)| p > 0.0)
        .collect();
    FactoredModel::new(control, exogenous, InitialDistribution::new(fact.n_states(), init).unwrap()).unwrap()
}

/// Backward induction on the dense composed kernel, as an independent
/// reference for the factored planner.
pub fn dense_value_iteration(model: &FactoredModel) -> Vec<Vec<f64>> {
    let n = model.n_states();
    let na = model.n_actions();
    let hz = model.horizon();
    let fact = model.factorization();
    let mut vs = vec![vec![0.0; n]; hz + 1];
    for h in (0..hz).rev() {
        let kernel = (h + 1 < hz).then(|| compose_full_kernel(model, h, usize::MAX).unwrap());
        for s in 0..n {
            let st = fact.decode(s);
            let mut best = f64::NEG_INFINITY;
            for a in 0..na {
                if !model.control.is_legal(h, st.controllable, a) {
                    continue;
                }
                let mut q = model.control.reward(h, st, a);
                if let Some(k) = &kernel {
                    for s2 in 0..n {
                        q += k[(s * na + a) * n + s2] * vs[h + 1][s2];
                    }
                }
                best = best.max(q);
            }
            vs[h][s] = best;
        }
    }
    vs.truncate(hz);
    vs
}

/// Two controllable states, `nexo` exogenous states, two actions; action `a`
/// moves deterministically to controllable state `a`.
pub fn switch_model(ne: usize, hz: usize, rewards: Vec<f64>, exo: Vec<f64>) -> FactoredModel {
    let fact = StateFactorization::new(2, ne).unwrap();
    let mut rows = SparseRows::new();
    for _c in 0..2 {
        rows.push_point(0);
        rows.push_point(1);
    }
    let kernel = ControllableKernel::new(fact, 2, false, PerStep::Stationary(rows)).unwrap();
    let bounds = RewardBounds {
        min: rewards.iter().cloned().fold(f64::INFINITY, f64::min).min(0.0),
        max: rewards.iter().cloned().fold(f64::NEG_INFINITY, f64::max).max(0.0),
    };
    let reward = RewardTable::new(fact.n_states(), 2, PerStep::Stationary(rewards)).unwrap();
    let control = ControlModel::new(fact, 2, hz, kernel, reward, bounds, None).unwrap();
    FactoredModel::new(
        control,
        ExogenousKernel::stationary(ne, exo).unwrap(),
        InitialDistribution::point(0),
    )
    .unwrap()
}
