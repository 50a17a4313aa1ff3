//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use pcmdp_harness::aggregate::{aggregate, reach_episode, tail_mean, AggregateRow};
use pcmdp_harness::config::{AlgoKind, EnvKind, ExperimentConfig};
use pcmdp_harness::csv_io::write_raw_to;
use pcmdp_harness::runner::{optimal_return, run_experiment, RunRecord};
use pcmdp_harness::scaling::{run_sweep, ScalingSweep};
use pcmdp_harness::verify;
use pcmdp_harness::Result;

const SEEDS: std::ops::RangeInclusive<u64> = 1..=10;
const REACH_TOLERANCE: f64 = 0.05;

struct Outcome {
    passed: bool,
    detail: String,
}

fn out(line: &str) {
    let mut so = std::io::stdout().lock();
    let _ = writeln!(so, "{line}");
    let _ = so.flush();
}

fn config(env: EnvKind, algo: AlgoKind, stop_after: Option<usize>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::for_pair(env, algo);
    cfg.seeds = SEEDS.collect();
    cfg.stop_after = stop_after;
    cfg.track_regret = false;
    cfg
}

fn run(cfg: &ExperimentConfig) -> Result<(Vec<RunRecord>, Vec<AggregateRow>)> {
    let records: Vec<RunRecord> = run_experiment(cfg)?.into_iter().flatten().collect();
    let rows = aggregate(&records);
    Ok((records, rows))
}

fn fmt_reach(r: Option<usize>) -> String {
    r.map_or_else(|| "never".to_string(), |e| e.to_string())
}

fn from_check(c: verify::CheckOutcome) -> Outcome {
    Outcome {
        passed: c.passed,
        detail: c.detail,
    }
}

fn criterion_5_configs() -> (ExperimentConfig, ExperimentConfig) {
    (
        config(EnvKind::Taxi, AlgoKind::Exavi, Some(100)),
        config(EnvKind::Taxi, AlgoKind::Ucbvi, Some(1000)),
    )
}

fn c5_taxi_model_based() -> Result<Outcome> {
    let (exavi, ucbvi) = criterion_5_configs();
    let target = optimal_return(&exavi)?;
    let (_, ex_rows) = run(&exavi)?;
    let (_, ucb_rows) = run(&ucbvi)?;
    let ex_reach = reach_episode(&ex_rows, target, REACH_TOLERANCE);
    let ucb_reach = reach_episode(&ucb_rows, target, REACH_TOLERANCE);
    Ok(Outcome {
        passed: ex_reach.is_some_and(|e| e <= 100) && ucb_reach.is_none(),
        detail: format!(
            "optimum {target:.3}; exavi reaches 95% at {}, ucbvi within 1000 episodes: {} (last mean {:.2})",
            fmt_reach(ex_reach),
            fmt_reach(ucb_reach),
            ucb_rows.last().map_or(f64::NAN, |r| r.mean_eval)
        ),
    })
}

fn c6_taxi_model_free() -> Result<Outcome> {
    let exaq = config(EnvKind::Taxi, AlgoKind::Exaq, Some(1500));
    let ql = config(EnvKind::Taxi, AlgoKind::Ql, None);
    let target = optimal_return(&exaq)?;
    let (_, exaq_rows) = run(&exaq)?;
    let (_, ql_rows) = run(&ql)?;
    let e = reach_episode(&exaq_rows, target, REACH_TOLERANCE);
    let q = reach_episode(&ql_rows, target, REACH_TOLERANCE);
    // a learner that never reaches the threshold counts as infinitely late
    let passed = match (e, q) {
        (Some(e), Some(q)) => e * 10 <= q,
        (Some(_), None) => true,
        _ => false,
    };
    Ok(Outcome {
        passed,
        detail: format!(
            "optimum {target:.3}; exaq reaches 95% at {}, ql ({} episodes) at {} (final mean {:.2})",
            fmt_reach(e),
            ql.episodes,
            fmt_reach(q),
            ql_rows.last().map_or(f64::NAN, |r| r.mean_eval)
        ),
    })
}

fn sweep(algo: AlgoKind, branching: Vec<usize>, episodes: Vec<usize>) -> ScalingSweep {
    ScalingSweep {
        branching,
        episodes,
        algo,
        seeds: SEEDS.collect(),
        master_seed: 0,
    }
}

fn c7_regret_scaling() -> Result<Outcome> {
    let ks = vec![1000, 2000, 4000, 8000, 16000];
    let exaq = run_sweep(&sweep(AlgoKind::Exaq, vec![4], ks.clone()))?;
    let ql = run_sweep(&sweep(AlgoKind::Ql, vec![4], ks))?;
    let fe = exaq.fit(4).expect("five points").clone();
    let fq = ql.fit(4).expect("five points").clone();
    let in_band = (0.35..=0.65).contains(&fe.slope);
    let ql_worse = fq.slope > fe.slope || fq.constant() >= 2.0 * fe.constant();
    Ok(Outcome {
        passed: in_band && ql_worse,
        detail: format!(
            "exaq slope {:.3} (constant {:.3}), ql slope {:.3} (constant {:.3})",
            fe.slope,
            fe.constant(),
            fq.slope,
            fq.constant()
        ),
    })
}

fn c8_branching_scaling() -> Result<Outcome> {
    let t = run_sweep(&sweep(AlgoKind::Exaq, vec![2, 4, 8], vec![8000]))?;
    let r: Vec<f64> = [2, 4, 8]
        .iter()
        .map(|&n| t.cell(n, 8000).expect("cell ran").mean_regret)
        .collect();
    let ratio = r[2] / r[0];
    Ok(Outcome {
        passed: r[0] < r[1] && r[1] < r[2] && (1.4..=3.5).contains(&ratio),
        detail: format!(
            "regret at K=8000: N=2 {:.2}, N=4 {:.2}, N=8 {:.2}; R(8)/R(2) = {ratio:.3}",
            r[0], r[1], r[2]
        ),
    })
}

fn c9_trading() -> Result<Outcome> {
    let mut exaq = config(EnvKind::Trading, AlgoKind::Exaq, None);
    let mut ql = config(EnvKind::Trading, AlgoKind::Ql, None);
    for cfg in [&mut exaq, &mut ql] {
        cfg.episodes = 2000;
        cfg.track_regret = true;
    }
    let (er, _) = run(&exaq)?;
    let (qr, _) = run(&ql)?;
    let at = |recs: &[RunRecord], seed: u64, ep: usize| {
        recs.iter()
            .find(|r| r.seed == seed && r.episode == ep)
            .expect("record exists")
            .clone()
    };
    let wins = SEEDS
        .filter(|&s| at(&er, s, 500).eval_return >= at(&qr, s, 500).eval_return)
        .count();
    let mean_regret = |recs: &[RunRecord]| {
        SEEDS.map(|s| at(recs, s, 2000).cum_regret.expect("regret tracked")).sum::<f64>() / SEEDS.count() as f64
    };
    let (re, rq) = (mean_regret(&er), mean_regret(&qr));
    Ok(Outcome {
        passed: wins >= 8 && re <= 0.5 * rq,
        detail: format!(
            "exaq >= ql at episode 500 in {wins}/10 seeds; regret at K=2000: exaq {re:.2}, ql {rq:.2}"
        ),
    })
}

fn c10_elevator() -> Result<Outcome> {
    let exavi = config(EnvKind::Elevator, AlgoKind::Exavi, None);
    let ucbvi = config(EnvKind::Elevator, AlgoKind::Ucbvi, None);
    let exaq = config(EnvKind::Elevator, AlgoKind::Exaq, Some(500));
    let ql = config(EnvKind::Elevator, AlgoKind::Ql, None);
    let (_, exavi_rows) = run(&exavi)?;
    let (_, ucbvi_rows) = run(&ucbvi)?;
    let (_, exaq_rows) = run(&exaq)?;
    let (_, ql_rows) = run(&ql)?;
    let exavi_asym = tail_mean(&exavi_rows, 500).expect("rows");
    let ucbvi_asym = tail_mean(&ucbvi_rows, 500).expect("rows");
    let ql_final = tail_mean(&ql_rows, 500).expect("rows");
    let exavi_reach = reach_episode(&exavi_rows, exavi_asym, REACH_TOLERANCE);
    let exaq_reach = reach_episode(&exaq_rows, ql_final, 0.0);
    Ok(Outcome {
        passed: exavi_reach.is_some_and(|e| e <= 100) && exavi_asym > ucbvi_asym && exaq_reach.is_some_and(|e| e <= 500),
        detail: format!(
            "exavi asymptote {exavi_asym:.2} reached at {}, ucbvi asymptote {ucbvi_asym:.2}; \
             ql final {ql_final:.2} matched by exaq at {}",
            fmt_reach(exavi_reach),
            fmt_reach(exaq_reach)
        ),
    })
}

fn csv_without_wall_clock(records: &[RunRecord]) -> Vec<u8> {
    let stripped: Vec<RunRecord> = records
        .iter()
        .cloned()
        .map(|mut r| {
            r.wall_ms = 0;
            r
        })
        .collect();
    let mut buf = Vec::new();
    write_raw_to(&mut buf, &stripped).expect("in-memory write");
    buf
}

fn c12_determinism() -> Result<Outcome> {
    let (exavi, ucbvi) = criterion_5_configs();
    let mut same = true;
    let mut bytes = 0;
    for cfg in [&exavi, &ucbvi] {
        let a = csv_without_wall_clock(&run(cfg)?.0);
        let b = csv_without_wall_clock(&run(cfg)?.0);
        same &= a == b;
        bytes += a.len();
    }
    Ok(Outcome {
        passed: same,
        detail: format!("two runs of each taxi config compared over {bytes} CSV bytes: identical = {same}"),
    })
}

type Criterion = (&'static str, fn() -> Result<Outcome>);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("oracle equivalence", || verify::oracle_equivalence(50, 1).map(from_check)),
        ("counterfactual unbiasedness", || {
            verify::counterfactual_unbiasedness(20, 100_000, 2).map(from_check)
        }),
        ("learning-rate identities", || {
            verify::learning_rate_identities(&[1, 5, 10], 10_000).map(from_check)
        }),
        ("concentration coverage", || {
            verify::concentration(&[0.2, 0.3, 0.5], 10_000, 0.05, 1000, 3).map(from_check)
        }),
        ("taxi exavi vs ucbvi", c5_taxi_model_based),
        ("taxi exaq vs ql", c6_taxi_model_free),
        ("regret slope on the lower-bound family", c7_regret_scaling),
        ("regret growth in N", c8_branching_scaling),
        ("desk trading exaq vs ql", c9_trading),
        ("elevator ordering", c10_elevator),
        ("exogeneity", || verify::exogeneity(100_000, 0.001, 4).map(from_check)),
        ("determinism", c12_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match f() {
            Ok(o) if o.passed => ("PASS", o.detail),
            Ok(o) => ("FAIL", o.detail),
            Err(e) => ("FAIL", format!("error: {e}")),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        out(&format!(
            "{tag} criterion {:>2} {name}: {detail} [{:.1}s]",
            i + 1,
            start.elapsed().as_secs_f64()
        ));
    }
    out(&format!("acceptance: {} passed, {failed} failed", criteria.len() - failed));
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
