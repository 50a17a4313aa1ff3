mod common;

use common::{random_dist, random_model, rng};
use pcmdp::estimation::{
    bernstein_bound, bernstein_mean_bound, counterfactual_target, ExoStatistics, FullStatistics,
    LearningRateSchedule,
};
use pcmdp::model::FactoredState;
use pcmdp::planning::sample_episode;
use rand::Rng;

fn draw(p: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &x) in p.iter().enumerate() {
        acc += x;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

#[test]
fn one_transition_touches_one_cell() {
    let mut s = ExoStatistics::new(3, 3);
    assert_eq!(s.record_transition(1, 2, 0).unwrap(), 1);
    for h in 0..2 {
        for e in 0..3 {
            let want = u64::from(h == 1 && e == 2);
            assert_eq!(s.visits(h, e), want);
            for e2 in 0..3 {
                assert_eq!(s.transition_count(h, e, e2), u64::from(h == 1 && e == 2 && e2 == 0));
            }
        }
    }
    assert!(s.record_transition(2, 0, 0).is_err());
    assert!(s.record_transition(0, 3, 0).is_err());
    assert!(s.record_transition(0, 0, 3).is_err());
}

#[test]
fn counts_are_conserved_over_episodes() {
    let mut r = rng(1);
    let m = random_model(2, 4, 2, 5, false, &mut r);
    let mut s = ExoStatistics::new(4, 5);
    for k in 1..=50u64 {
        let traj = sample_episode(&m, |h, _| h % 2, &mut r);
        s.record_episode(&traj).unwrap();
        for h in 0..5 {
            assert_eq!((0..4).map(|e| s.visits(h, e)).sum::<u64>(), k);
            if h < 4 {
                for e in 0..4 {
                    let row: u64 = s.transition_row(h, e).iter().map(|&(_, c)| c).sum();
                    assert_eq!(row, s.visits(h, e));
                }
            }
        }
    }
    assert_eq!(s.episodes(), 50);
}

#[test]
fn counts_match_a_retally() {
    let mut r = rng(2);
    let mut s = ExoStatistics::new(2, 2);
    let mut tally = [[0u64; 2]; 2];
    let mut e = 0;
    for _ in 0..100 {
        let next = usize::from(r.random::<f64>() < 0.3);
        s.record_transition(0, e, next).unwrap();
        tally[e][next] += 1;
        e = next;
    }
    for (a, row) in tally.iter().enumerate() {
        for (b, &c) in row.iter().enumerate() {
            assert_eq!(s.transition_count(0, a, b), c);
        }
        assert_eq!(s.visits(0, a), row.iter().sum::<u64>());
    }
}

#[test]
fn empirical_kernel_examples() {
    let mut s = ExoStatistics::new(3, 2);
    for next in [1, 1, 2] {
        s.record_transition(0, 0, next).unwrap();
    }
    let est = s.empirical_exo_kernel(0, 0).unwrap();
    assert!(!est.unvisited);
    assert_eq!(est.probs[1], 2.0 / 3.0);
    assert!((est.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);

    s.record_transition(0, 1, 2).unwrap();
    assert_eq!(s.empirical_exo_kernel(0, 1).unwrap().probs, vec![0.0, 0.0, 1.0]);

    let fallback = s.empirical_exo_kernel(0, 2).unwrap();
    assert!(fallback.unvisited);
    assert_eq!(fallback.probs, vec![1.0 / 3.0; 3]);
    let (_, n_fallback) = s.to_kernel();
    assert_eq!(n_fallback, 1);
}

#[test]
fn empirical_kernel_stays_inside_the_bernstein_envelope() {
    let mut r = rng(3);
    let p = [0.3, 0.7];
    let n = 10_000u64;
    let delta = 1e-3;
    let bound = bernstein_mean_bound(n as f64 * p[0] * (1.0 - p[0]), 1.0, n, delta).unwrap();
    let mut violations = 0;
    for _ in 0..1000 {
        let mut s = ExoStatistics::new(2, 2);
        for _ in 0..n {
            s.record_transition(0, 0, draw(&p, &mut r)).unwrap();
        }
        let est = s.empirical_exo_kernel(0, 0).unwrap().probs;
        let err = est.iter().zip(p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if err > bound {
            violations += 1;
        }
    }
    assert!(violations <= 1, "{violations} violations");
}

#[test]
fn full_kernel_examples() {
    let mut s = FullStatistics::new(2, 1);
    assert!(s.empirical_full_kernel(0, 3, 1).is_empty());
    for _ in 0..5 {
        s.record(0, 3, 1, 7).unwrap();
    }
    assert_eq!(s.empirical_full_kernel(0, 3, 1), vec![(7, 1.0)]);
    assert!(s.record(1, 0, 0, 0).is_err());
}

#[test]
fn full_kernel_converges_in_total_variation() {
    let mut r = rng(4);
    let truth: Vec<Vec<f64>> = (0..8).map(|_| random_dist(4, &mut r)).collect();
    let mut s = FullStatistics::new(2, 1);
    for (pair, p) in truth.iter().enumerate() {
        for _ in 0..10_000 {
            s.record(0, pair / 2, pair % 2, draw(p, &mut r)).unwrap();
        }
    }
    for (pair, p) in truth.iter().enumerate() {
        let mut est = [0.0; 4];
        for (k, q) in s.empirical_full_kernel(0, pair / 2, pair % 2) {
            est[k] = q;
        }
        let tv: f64 = est.iter().zip(p).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
        assert!(tv <= 0.05, "pair {pair}: tv {tv}");
        let pc = s.pair(0, pair / 2, pair % 2).unwrap();
        assert_eq!(pc.successors.iter().map(|&(_, c)| c).sum::<u64>(), pc.visits);
    }
}

#[test]
fn counterfactual_target_examples() {
    let mut r = rng(5);
    let m = random_model(4, 3, 2, 3, true, &mut r);
    let ns = m.n_states();
    let st = FactoredState::new(2, 1);
    let last = m.horizon() - 1;
    let f: Vec<f64> = (0..ns).map(|_| r.random_range(-2.0..2.0)).collect();
    assert_eq!(counterfactual_target(&m.control, last, 0, &f, st, 0), 0.0);
    let c = vec![1.75; ns];
    for e2 in 0..3 {
        assert!((counterfactual_target(&m.control, 0, e2, &c, st, 1) - 1.75).abs() < 1e-12);
    }
    for h in 0..last {
        for a in 0..2 {
            for e2 in 0..3 {
                let mut dense = 0.0;
                for c2 in 0..4 {
                    let (next, prob) = m.control.support(h, st, a);
                    let p = next.iter().zip(prob).find(|(&n, _)| n as usize == c2).map_or(0.0, |(_, &p)| p);
                    dense += p * f[c2 * 3 + e2];
                }
                let got = counterfactual_target(&m.control, h, e2, &f, st, a);
                assert!((got - dense).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn learning_rate_examples() {
    for h in [1, 5, 10, 100] {
        let s = LearningRateSchedule::new(h).unwrap();
        assert_eq!(s.rate(1).unwrap(), 1.0);
        assert!(s.rate(0).is_err());
        for t in 1..50 {
            assert_eq!(s.weights(t)[0], 0.0);
        }
    }
    assert_eq!(LearningRateSchedule::new(10).unwrap().rate(5).unwrap(), 11.0 / 15.0);
    assert!(LearningRateSchedule::new(0).is_err());
}

#[test]
fn bernstein_examples() {
    let l = (2.0f64 / 0.05).ln();
    assert_eq!(bernstein_bound(0.0, 3.0, 0.05).unwrap(), 2.0 * 3.0 / 3.0 * l);
    let want = (2.0 * 25.0 * l).sqrt() + 2.0 / 3.0 * l;
    assert!((bernstein_bound(25.0, 1.0, 0.05).unwrap() - want).abs() < 1e-12);
    assert!((bernstein_mean_bound(25.0, 1.0, 100, 0.05).unwrap() - want / 100.0).abs() < 1e-14);
    assert!(bernstein_bound(1.0, 1.0, 0.0).is_err());
    assert!(bernstein_bound(1.0, 1.0, 1.0).is_err());
    assert!(bernstein_mean_bound(1.0, 1.0, 0, 0.5).is_err());
}

#[test]
fn bernstein_coverage_on_bernoulli_sums() {
    let mut r = rng(6);
    let (n, p, delta) = (100u64, 0.5, 0.05);
    let bound = bernstein_bound(n as f64 * p * (1.0 - p), 1.0, delta).unwrap();
    let trials = 10_000;
    let mut violations = 0;
    for _ in 0..trials {
        let sum: f64 = (0..n).map(|_| f64::from(u8::from(r.random::<f64>() < p)) - p).sum();
        if sum.abs() > bound {
            violations += 1;
        }
    }
    assert!(violations as f64 / trials as f64 <= delta + 0.01);
}
