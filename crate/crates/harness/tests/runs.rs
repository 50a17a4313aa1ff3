use pcmdp_harness::config::{AlgoKind, EnvKind, ExperimentConfig, QlSection};
use pcmdp_harness::csv_io::write_raw_to;
use pcmdp_harness::runner::{optimal_return, run_experiment};
use pcmdp_harness::scaling::{render_csv, run_sweep, ScalingSweep};
use pcmdp_harness::HarnessError;

fn small(env: EnvKind, algo: AlgoKind, episodes: usize) -> ExperimentConfig {
    ExperimentConfig {
        episodes,
        seeds: vec![1, 2],
        eval_every: 5,
        eval_episodes: 3,
        ..ExperimentConfig::for_pair(env, algo)
    }
}

#[test]
fn defaults_follow_the_benchmark_tables() {
    let ql = QlSection::defaults_for(EnvKind::Taxi);
    assert_eq!((ql.learning_rate, ql.epsilon_min, ql.decay_rate), (0.05, 0.0, 0.99985));
    let ql = QlSection::defaults_for(EnvKind::Trading);
    assert_eq!((ql.learning_rate, ql.epsilon_min, ql.decay_rate), (1.0, 0.05, 0.9998));
    assert_eq!(ExperimentConfig::for_pair(EnvKind::Taxi, AlgoKind::Ql).episodes, 15_000);
    assert_eq!(ExperimentConfig::for_pair(EnvKind::Taxi, AlgoKind::Exavi).episodes, 5_000);
    let d = ExperimentConfig::default();
    assert_eq!(d.seeds, (1..=10).collect::<Vec<_>>());
    assert_eq!((d.eval_every, d.eval_episodes), (50, 50));
    assert_eq!((d.ucbvi.bonus, d.ucbvi.delta), (0.5, 1e-6));
}

#[test]
fn configs_parse_from_toml() {
    let cfg = ExperimentConfig::from_toml_str(
        "env = \"elevator\"\nalgo = \"ql\"\nepisodes = 7000\nseeds = [1, 2, 3]\n[taxi]\ntraffic_prob = 0.2\n",
    )
    .unwrap();
    assert_eq!(cfg.env, EnvKind::Elevator);
    assert_eq!(cfg.seeds, vec![1, 2, 3]);
    assert_eq!(ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
    assert!(ExperimentConfig::from_toml_str("episodes = 0").is_err());
    assert!(ExperimentConfig::from_toml_str("seeds = [1, 1]").is_err());
    assert!(ExperimentConfig::from_toml_str("seeds = []").is_err());
    assert!(ExperimentConfig::from_toml_str("bogus = 1").is_err());
    for file in ["taxi_exavi.toml", "taxi_ql.toml", "elevator_exaq.toml", "trading_desk_exaq.toml"] {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(file);
        ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{file}: {e}"));
    }
}

#[test]
fn model_based_learners_are_rejected_on_full_scale_trading() {
    for algo in [AlgoKind::Exavi, AlgoKind::Ucbvi] {
        let cfg = ExperimentConfig {
            desk_scale: false,
            ..small(EnvKind::Trading, algo, 5)
        };
        assert!(matches!(run_experiment(&cfg), Err(HarnessError::Inadmissible(_))));
    }
    let twap_taxi = small(EnvKind::Taxi, AlgoKind::Twap, 5);
    assert!(run_experiment(&twap_taxi).is_err());
    let full_exaq = ExperimentConfig {
        desk_scale: false,
        track_regret: false,
        ..small(EnvKind::Trading, AlgoKind::Exaq, 1)
    };
    assert_eq!(run_experiment(&full_exaq).unwrap()[0].len(), 1);
}

#[test]
fn one_episode_gives_one_record_per_seed() {
    let cfg = small(EnvKind::LowerBound, AlgoKind::Exaq, 1);
    let runs = run_experiment(&cfg).unwrap();
    assert_eq!(runs.len(), 2);
    assert!(runs.iter().all(|r| r.len() == 1 && r[0].episode == 1));
}

#[test]
fn records_are_ordered_and_regret_is_monotone() {
    for algo in [AlgoKind::Exaq, AlgoKind::Ql, AlgoKind::Exavi, AlgoKind::Ucbvi] {
        let cfg = small(EnvKind::LowerBound, algo, 40);
        for (seed, recs) in cfg.seeds.iter().zip(run_experiment(&cfg).unwrap()) {
            let eps: Vec<usize> = recs.iter().map(|r| r.episode).collect();
            assert_eq!(eps, vec![5, 10, 15, 20, 25, 30, 35, 40]);
            assert!(recs.iter().all(|r| r.seed == *seed));
            let regrets: Vec<f64> = recs.iter().map(|r| r.cum_regret.unwrap()).collect();
            assert!(regrets.windows(2).all(|w| w[1] >= w[0]), "{regrets:?}");
        }
    }
}

#[test]
fn reported_returns_are_on_the_raw_scale() {
    // on the desk instance the optimum sells at once and the even schedule
    // pays a large holding penalty, far outside the normalized range
    let cfg = small(EnvKind::Trading, AlgoKind::Twap, 5);
    let recs = run_experiment(&cfg).unwrap();
    let opt = optimal_return(&cfg).unwrap();
    assert!(opt > 1000.0);
    for r in recs.iter().flatten() {
        assert!(r.eval_return < -1000.0 && r.train_return < -1000.0);
        assert!((r.train_return - r.eval_return).abs() < 0.01 * r.eval_return.abs());
    }
}

#[test]
fn identical_configs_give_identical_csv() {
    let cfg = small(EnvKind::Taxi, AlgoKind::Exaq, 10);
    let bytes = || {
        let recs: Vec<_> = run_experiment(&cfg)
            .unwrap()
            .into_iter()
            .flatten()
            .map(|mut r| {
                r.wall_ms = 0;
                r
            })
            .collect();
        let mut buf = Vec::new();
        write_raw_to(&mut buf, &recs).unwrap();
        buf
    };
    assert_eq!(bytes(), bytes());
}

#[test]
fn adding_seeds_leaves_existing_streams_alone() {
    let one = small(EnvKind::LowerBound, AlgoKind::Ql, 20);
    let more = ExperimentConfig {
        seeds: vec![1, 2, 3, 4],
        ..one.clone()
    };
    let a = run_experiment(&one).unwrap();
    let b = run_experiment(&more).unwrap();
    for (x, y) in a.iter().zip(&b) {
        for (r, s) in x.iter().zip(y) {
            assert_eq!((r.eval_return, r.cum_regret), (s.eval_return, s.cum_regret));
        }
    }
}

#[test]
fn small_sweep_renders_a_table() {
    let sweep = ScalingSweep {
        branching: vec![2],
        episodes: vec![50, 100, 200, 400],
        algo: AlgoKind::Exaq,
        seeds: vec![1, 2],
        master_seed: 0,
    };
    let t = run_sweep(&sweep).unwrap();
    assert!(t.fit(2).is_some());
    let text = render_csv(&t);
    assert!(text.starts_with("kind,algo,N,K,mean_regret,ci_half_width,slope,constant\n"));
    assert_eq!(text.lines().count(), 1 + 4 + 1);
}
