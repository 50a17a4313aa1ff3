//! Self-contained correctness checks shared by the `verify` command and the
//! acceptance suite. Each check returns a pass flag and a one-line detail.

use std::fmt;

use pcmdp::env::{rollout, Elevator, ElevatorSpec, Environment, Taxi, TaxiSpec, Trading, TradingSpec};
use pcmdp::estimation::{counterfactual_target, LearningRateSchedule};
use pcmdp::planning::{initial_value, value_iteration};
use pcmdp::FactoredState;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::oracle::{
    brute_force_initial_value, concentration_coverage, exogeneity_test, random_pcmdp, PlantedDependence,
    RandomModelLimits, POLICY_BUDGET,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

/// Outcomes of [`run_all`].
#[derive(Debug, Clone, PartialEq)]
pub struct Report(pub Vec<CheckOutcome>);

impl Report {
    pub fn passed(&self) -> bool {
        self.0.iter().all(|c| c.passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.0 {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Exact value iteration against policy enumeration on random small models.
pub fn oracle_equivalence(models: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..models {
        let m = random_pcmdp(RandomModelLimits::default(), &mut rng);
        let sol = value_iteration(&m);
        let vi = initial_value(&m, &sol.v[0]);
        let bf = brute_force_initial_value(&m, POLICY_BUDGET)?;
        worst = worst.max((vi - bf).abs());
        for &(s0, _) in m.initial.support() {
            let single = crate::oracle::brute_force_optimal(&m, POLICY_BUDGET)?
                .into_iter()
                .find(|&(s, _)| s == s0)
                .map(|(_, v)| v)
                .unwrap_or(f64::NAN);
            worst = worst.max((sol.v[0][s0] - single).abs());
        }
    }
    Ok(CheckOutcome {
        name: "oracle equivalence",
        passed: worst <= 1e-9,
        detail: format!("{models} models, max |V_vi - V_enum| = {worst:.3e}"),
    })
}

/// Monte-Carlo mean of the counterfactual target against its exact
/// factored expectation.
pub fn counterfactual_unbiasedness(tuples: usize, draws: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let limits = RandomModelLimits {
        max_controllable: 4,
        max_exogenous: 4,
        max_actions: 3,
        max_horizon: 4,
    };
    let mut worst_z: f64 = 0.0;
    let mut done = 0;
    while done < tuples {
        let m = random_pcmdp(limits, &mut rng);
        if m.horizon() < 2 {
            continue;
        }
        let fact = m.factorization();
        let f: Vec<f64> = (0..fact.n_states()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h = rng.random_range(0..m.horizon() - 1);
        let state = FactoredState::new(
            rng.random_range(0..fact.n_controllable()),
            rng.random_range(0..fact.n_exogenous()),
        );
        let a = rng.random_range(0..m.n_actions());
        let exo_row = m.exogenous.row(h, state.exogenous);
        let exact: f64 = exo_row
            .iter()
            .enumerate()
            .map(|(e2, &p)| p * counterfactual_target(&m.control, h, e2, &f, state, a))
            .sum();
        let (mut sum, mut sq) = (0.0, 0.0);
        let cdf: Vec<f64> = exo_row
            .iter()
            .scan(0.0, |acc, &p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        for _ in 0..draws {
            let u: f64 = rng.random();
            let e2 = cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1);
            let y = counterfactual_target(&m.control, h, e2, &f, state, a);
            sum += y;
            sq += y * y;
        }
        let n = draws as f64;
        let mean = sum / n;
        let var = (sq / n - mean * mean).max(0.0) * n / (n - 1.0);
        let se = (var / n).sqrt();
        let gap = (mean - exact).abs();
        let z = if se > 0.0 {
            gap / se
        } else if gap <= 1e-12 {
            0.0
        } else {
            f64::INFINITY
        };
        worst_z = worst_z.max(z);
        done += 1;
    }
    Ok(CheckOutcome {
        name: "counterfactual unbiasedness",
        passed: worst_z <= 3.0,
        detail: format!("{tuples} tuples x {draws} draws, max |mean - exact| / se = {worst_z:.3}"),
    })
}

/// The four weight properties of `α_t = (H+1)/(H+t)` plus normalization,
/// for every `t <= t_max`. Property 4 is checked as partial sums
/// `Σ_{t=i}^{t_max} α_t^i <= 1 + 1/H`.
pub fn learning_rate_identities(horizons: &[usize], t_max: u64) -> Result<CheckOutcome> {
    const TOL: f64 = 1e-12;
    let mut failures = Vec::new();
    let mut closest_tail: f64 = 0.0;
    for &hz in horizons {
        let sched = LearningRateSchedule::new(hz)?;
        let h = hz as f64;
        let mut partial = vec![0.0; t_max as usize + 1];
        let mut record = |what: &str, t: u64| {
            if failures.len() < 5 {
                failures.push(format!("H={hz} t={t}: {what}"));
            }
        };
        for t in 1..=t_max {
            let w = sched.weights(t);
            let tf = t as f64;
            let total: f64 = w.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                record("weights do not sum to 1", t);
            }
            let p1: f64 = (1..=t as usize).map(|i| w[i] / (i as f64).sqrt()).sum();
            if p1 < 1.0 / tf.sqrt() - TOL || p1 > 2.0 / tf.sqrt() + TOL {
                record("property 1", t);
            }
            let max = w[1..].iter().cloned().fold(0.0, f64::max);
            if max > 2.0 * h / tf + TOL {
                record("property 2", t);
            }
            let sq: f64 = w[1..].iter().map(|x| x * x).sum();
            if sq > 2.0 * h / tf + TOL {
                record("property 3", t);
            }
            for i in 1..=t as usize {
                partial[i] += w[i];
            }
        }
        for (i, &p) in partial.iter().enumerate().skip(1) {
            if p > 1.0 + 1.0 / h + 1e-9 {
                record("property 4", i as u64);
            }
        }
        closest_tail = closest_tail.max((partial[1] - (1.0 + 1.0 / h)).abs());
    }
    let passed = failures.is_empty();
    let detail = if passed {
        format!(
            "H in {horizons:?}, t <= {t_max}; largest gap of the i=1 partial sum to 1+1/H is {closest_tail:.2e}"
        )
    } else {
        failures.join("; ")
    };
    Ok(CheckOutcome {
        name: "learning-rate identities",
        passed,
        detail,
    })
}

/// Envelope violation frequency of the count-ratio estimator.
pub fn concentration(p: &[f64], n: u64, delta: f64, trials: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rate = concentration_coverage(p, n, delta, trials, &mut rng)?;
    Ok(CheckOutcome {
        name: "concentration coverage",
        passed: rate <= delta + 0.01,
        detail: format!("p = {p:?}, n = {n}, delta = {delta}: violation rate {rate:.4}"),
    })
}

/// A state reached at step `h` by playing uniformly random legal actions.
fn probe_state(env: &dyn Environment, h: usize, rng: &mut dyn RngCore) -> Result<FactoredState> {
    let control = env.control();
    let mut state = env.reset(rng);
    for step in 0..h {
        let legal: Vec<usize> = control.legal_actions(step, state.controllable).collect();
        let a = legal[rng.random_range(0..legal.len())];
        state = env.step(step, state, a, rng)?.next.expect("probe stays inside the horizon");
    }
    Ok(state)
}

/// Chi-square action-independence tests on the benchmark environments and
/// the planted dependent process, at level `alpha`.
pub fn exogeneity(samples_per_action: usize, alpha: f64, seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let envs: Vec<Box<dyn Environment>> = vec![
        Box::new(Taxi::new(TaxiSpec::default())?),
        Box::new(Trading::new(TradingSpec::desk())?),
        Box::new(Elevator::new(ElevatorSpec::default())?),
    ];
    let mut parts = Vec::new();
    let mut passed = true;
    for env in &envs {
        for h in [0, 3] {
            let state = probe_state(env.as_ref(), h, &mut rng)?;
            let r = exogeneity_test(env.as_ref(), h, state, samples_per_action, &mut rng)?;
            passed &= r.passes(alpha);
            parts.push(format!(
                "{} h={h} p={:.3}{}",
                env.name(),
                r.p_value,
                if r.skipped { " (skipped)" } else { "" }
            ));
        }
    }
    let planted = PlantedDependence::new(3, 0.9)?;
    let state = planted.reset(&mut rng);
    let r = exogeneity_test(&planted, 0, state, samples_per_action, &mut rng)?;
    let flagged = !r.skipped && r.p_value <= alpha;
    passed &= flagged;
    parts.push(format!("planted p={:.1e} flagged={flagged}", r.p_value));
    Ok(CheckOutcome {
        name: "exogeneity",
        passed,
        detail: parts.join(", "),
    })
}

/// A greedy rollout smoke check: every environment runs one episode.
pub fn environments_roll_out(seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let envs: Vec<Box<dyn Environment>> = vec![
        Box::new(Taxi::new(TaxiSpec::default())?),
        Box::new(Trading::new(TradingSpec::desk())?),
        Box::new(Trading::new(TradingSpec::full())?),
        Box::new(Elevator::new(ElevatorSpec::default())?),
    ];
    let mut lens = Vec::new();
    for env in &envs {
        let control = env.control();
        let traj = rollout(env.as_ref(), &mut rng, |h, s, _| {
            control.legal_actions(h, s.controllable).next().unwrap_or(0)
        })?;
        lens.push(format!("{}={}", env.name(), traj.len()));
    }
    Ok(CheckOutcome {
        name: "environment rollouts",
        passed: true,
        detail: lens.join(", "),
    })
}

pub fn run_all() -> Result<Report> {
    Ok(Report(vec![
        oracle_equivalence(50, 1)?,
        counterfactual_unbiasedness(20, 100_000, 2)?,
        learning_rate_identities(&[1, 5, 10], 10_000)?,
        concentration(&[0.2, 0.3, 0.5], 10_000, 0.05, 1000, 3)?,
        exogeneity(100_000, 0.001, 4)?,
        environments_roll_out(5)?,
    ]))
}
