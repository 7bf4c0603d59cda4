mod common;

use greyshot::data::split;
use greyshot::experiment::{
    evaluate_on_split, run_experiment, write_outputs, write_trials_csv, Algorithm, ExperimentConfig,
};
use greyshot::model::train;
use greyshot::{Rating, SplitSpec, TrainConfig};

fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        trials: 3,
        base_seed: 11,
        greyshot: TrainConfig {
            iterations: 5_000,
            ..TrainConfig::default()
        },
        ..ExperimentConfig::default()
    }
}

fn trials_csv(config: &ExperimentConfig, seed: u64) -> String {
    let data = common::power_law_dataset(40, 80, 1_500, seed);
    let result = run_experiment(&data, config).unwrap();
    let mut buf = Vec::new();
    write_trials_csv(&mut buf, &result.trials).unwrap();
    common::strip_timing(&String::from_utf8(buf).unwrap())
}

#[test]
fn reruns_produce_identical_trial_csv() {
    let cfg = small_config();
    assert_eq!(trials_csv(&cfg, 3), trials_csv(&cfg, 3));
}

#[test]
fn worker_count_does_not_change_results() {
    let sequential = ExperimentConfig {
        workers: 1,
        ..small_config()
    };
    let parallel = ExperimentConfig {
        workers: 4,
        ..small_config()
    };
    assert_eq!(trials_csv(&sequential, 5), trials_csv(&parallel, 5));
}

#[test]
fn greyshot_parameters_ignore_the_dataset() {
    // Same shape, different ratings: training only sees (m, n, config).
    let first = common::dense_dataset(12, 30, 1);
    let second = common::dense_dataset(12, 30, 2);
    assert_ne!(first.ratings(), second.ratings());
    let cfg = TrainConfig {
        iterations: 20_000,
        seed: 9,
        ..TrainConfig::default()
    };
    let a = train(first.users(), first.items(), &cfg).unwrap();
    let b = train(second.users(), second.items(), &cfg).unwrap();
    assert_eq!(a.params, b.params);
    let bits = |p: &[f64]| p.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    for i in 0..first.users() {
        assert_eq!(
            bits(a.params.user_factors(i)),
            bits(b.params.user_factors(i))
        );
    }
    for j in 0..first.items() {
        assert_eq!(
            bits(a.params.item_factors(j)),
            bits(b.params.item_factors(j))
        );
    }
    assert_eq!(a.params.a.to_bits(), b.params.a.to_bits());
    assert_eq!(a.params.b.to_bits(), b.params.b.to_bits());
}

#[test]
fn greyshot_report_is_invariant_under_train_replacement() {
    let data = common::power_law_dataset(30, 60, 1_200, 4);
    let cfg = small_config();
    let parts = split(
        &data,
        SplitSpec {
            test_fraction: 0.2,
            seed: cfg.trial_seed(0),
        },
    )
    .unwrap();
    let scrambled: Vec<Rating> = parts
        .train
        .ratings
        .iter()
        .map(|r| Rating {
            value: 6.0 - r.value,
            ..*r
        })
        .collect();
    let original = evaluate_on_split(
        &data,
        &parts.train.ratings,
        &parts.test.ratings,
        Algorithm::GreyShot,
        0,
        &cfg,
    )
    .unwrap();
    let replaced = evaluate_on_split(
        &data,
        &scrambled,
        &parts.test.ratings,
        Algorithm::GreyShot,
        0,
        &cfg,
    )
    .unwrap();
    let empty = evaluate_on_split(
        &data,
        &[],
        &parts.test.ratings,
        Algorithm::GreyShot,
        0,
        &cfg,
    )
    .unwrap();
    assert!(original.same_result(&replaced));
    assert!(original.same_result(&empty));
    assert_eq!(original.mae.to_bits(), replaced.mae.to_bits());
}

#[test]
fn single_trial_spread_collapses() {
    let data = common::power_law_dataset(20, 40, 600, 8);
    let cfg = ExperimentConfig {
        trials: 1,
        ..small_config()
    };
    let result = run_experiment(&data, &cfg).unwrap();
    for row in &result.summary.rows {
        assert_eq!(row.trials, 1);
        assert_eq!(row.mae.min, row.mae.avg);
        assert_eq!(row.mae.avg, row.mae.max);
        if let Some(d) = row.dme {
            assert_eq!(d.min, d.max);
            assert_eq!(d.min, d.avg);
        }
    }
}

#[test]
fn summary_brackets_every_trial() {
    let data = common::power_law_dataset(30, 50, 900, 2);
    let result = run_experiment(&data, &small_config()).unwrap();
    assert_eq!(result.trials.len(), 9);
    for row in &result.summary.rows {
        assert!(row.mae.min <= row.mae.avg && row.mae.avg <= row.mae.max);
        for t in result
            .trials
            .iter()
            .filter(|t| t.algorithm == row.algorithm)
        {
            assert!(t.mae >= row.mae.min && t.mae <= row.mae.max);
            assert!(t.mae >= 0.0 && t.mae.is_finite());
        }
    }
}

#[test]
fn invalid_configurations_are_config_errors() {
    assert!(Algorithm::parse_list("greyshot,svd")
        .unwrap_err()
        .is_config());
    let data = common::power_law_dataset(10, 20, 200, 1);
    let zero_trials = ExperimentConfig {
        trials: 0,
        ..small_config()
    };
    assert!(run_experiment(&data, &zero_trials).unwrap_err().is_config());
    let too_long = ExperimentConfig {
        top_l: 1_000,
        ..small_config()
    };
    assert!(run_experiment(&data, &too_long).unwrap_err().is_config());
}

#[test]
fn outputs_land_on_disk() {
    let data = common::power_law_dataset(20, 40, 600, 6);
    let cfg = small_config();
    let result = run_experiment(&data, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_outputs(dir.path(), &data, &cfg, &result).unwrap();
    for name in ["trials.csv", "summary.csv", "summary.txt", "config.txt"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(!text.is_empty(), "{name}");
    }
    let trials = std::fs::read_to_string(dir.path().join("trials.csv")).unwrap();
    assert!(trials.starts_with("algorithm,trial,seed,mae,dme,skipped_steps,ms"));
    assert_eq!(trials.lines().count(), 1 + 9);
    let config = std::fs::read_to_string(dir.path().join("config.txt")).unwrap();
    assert!(config.contains("base_seed=11"));
}
