use reviewsim::config::{BehaviorMix, MatchingModel, ReviewPolicy};
use reviewsim::engine::{run_parallel, run_range};
use reviewsim::harness::{run_preset, standard_scenario};
use reviewsim::engine::RunOptions;
use reviewsim::quality::Selectivity;
use reviewsim::report::merge_reports;
use reviewsim::score::{CriticalMap, SigmaPolicy};

#[test]
fn split_ranges_merge_to_the_full_run() {
    let config = standard_scenario(Selectivity::Low, 3, 77);
    let whole = run_range(&config, 0, 3000).unwrap();
    let parts = [
        run_range(&config, 0, 1).unwrap(),
        run_range(&config, 1, 1700).unwrap(),
        run_range(&config, 1700, 3000).unwrap(),
    ];
    assert_eq!(merge_reports(&parts).unwrap(), whole);
    assert_eq!(run_parallel(&config, 3000, 4).unwrap(), whole);
}

#[test]
fn every_model_feature_is_worker_independent() {
    let mut config = standard_scenario(Selectivity::Random, 4, 3);
    config.reviews = ReviewPolicy::HeterogeneousTwoRound(4);
    config.matching = MatchingModel::ManyType {
        levels: 3,
        map: CriticalMap::Identity,
    };
    config.sigma = SigmaPolicy::LinearInCritical { base: 0.5, slope: 1.5 };
    config.behaviors = BehaviorMix {
        random_scoring: 0.1,
        bias_scoring: 0.05,
    };
    let one = run_parallel(&config, 2500, 1).unwrap();
    assert_eq!(run_parallel(&config, 2500, 3).unwrap(), one);
    assert_eq!(run_parallel(&config, 2500, 8).unwrap(), one);

    config.seed += 1;
    assert_ne!(run_parallel(&config, 2500, 1).unwrap().counts(), one.counts());
}

#[test]
fn preset_reruns_are_byte_identical() {
    let options = RunOptions {
        workers: Some(2),
        progress: false,
    };
    let a = run_preset("fig-hetero", 300, 9, options).unwrap().render();
    let b = run_preset("fig-hetero", 300, 9, options).unwrap().render();
    assert_eq!(a, b);
    assert!(a.lines().any(|l| l.starts_with("H-S-S/n=3,ratio,30,")));
}
