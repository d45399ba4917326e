use std::path::Path;
use std::process::{Command, Output};

use reviewsim::harness::{standard_scenario, ReportCsv, RunParams, ScenarioFile};
use reviewsim::quality::Selectivity;
use reviewsim::strategy::compare_strategies;
use reviewsim::engine::RunOptions;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reviewsim"))
        .arg("--quiet")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_scenario(dir: &Path, file: &ScenarioFile) -> String {
    let path = dir.join("scenario.json");
    std::fs::write(&path, file.to_json()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn plan_prints_rounds() {
    let tight = cli(&["plan", "--epsilon", "0.01", "--delta", "0.05", "--k", "30", "--bound", "tight"]);
    assert!(tight.status.success());
    assert_eq!(stdout(&tight).trim(), "213686");
    let loose = cli(&["plan", "--epsilon", "0.01", "--delta", "0.05", "--k", "30", "--bound", "loose", "--p-floor", "1"]);
    assert_eq!(stdout(&loose), stdout(&tight));
    let coarse = cli(&["plan", "--epsilon", "0.02", "--delta", "0.05", "--k", "30"]);
    let ratio: f64 = stdout(&coarse).trim().parse::<f64>().unwrap() / 213_686.0;
    assert!((ratio - 0.25).abs() < 1e-4);
    assert_eq!(cli(&["plan", "--epsilon", "0.01", "--delta", "2", "--k", "30"]).status.code(), Some(2));
}

#[test]
fn simulate_writes_a_reproducible_csv() {
    let dir = tempfile::tempdir().unwrap();
    let file = ScenarioFile {
        scenario: standard_scenario(Selectivity::Medium, 3, 5),
        run: RunParams {
            rounds: Some(400),
            ..RunParams::default()
        },
    };
    let config = write_scenario(dir.path(), &file);
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    let a = cli(&["simulate", "--config", &config, "--workers", "1", "--out", out_a.to_str().unwrap()]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = cli(&["simulate", "--config", &config, "--workers", "3", "--out", out_b.to_str().unwrap()]);
    assert!(b.status.success());
    let text = std::fs::read_to_string(&out_a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&out_b).unwrap());
    let csv = ReportCsv::parse(&text).unwrap();
    let e1 = csv.find("scenario", "E", 1).unwrap();
    assert_eq!((e1.rounds, e1.seed), (400, 5));
    assert!(csv.comments.iter().any(|c| c.contains("\"regime\":\"medium\"")));

    // command-line overrides
    let c = cli(&["simulate", "--config", &config, "--rounds", "100", "--seed", "6"]);
    let csv = ReportCsv::parse(&stdout(&c)).unwrap();
    assert_eq!((csv.rows[0].rounds, csv.rows[0].seed), (100, 6));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let mut scenario = standard_scenario(Selectivity::Medium, 3, 5);
    scenario.accept = 250;
    let bad = write_scenario(dir.path(), &ScenarioFile { scenario, run: RunParams::default() });
    let o = cli(&["simulate", "--config", &bad, "--rounds", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("k ≤ N"));

    let mut scenario = standard_scenario(Selectivity::Medium, 3, 5);
    scenario.sigma = reviewsim::score::SigmaPolicy::Constant(1e-3);
    let infeasible = write_scenario(dir.path(), &ScenarioFile { scenario, run: RunParams::default() });
    assert_eq!(cli(&["simulate", "--config", &infeasible, "--rounds", "10"]).status.code(), Some(3));

    std::fs::write(dir.path().join("broken.json"), "{\"scenario\": {\"papers\": 3,,}}").unwrap();
    let broken = dir.path().join("broken.json");
    let o = cli(&["simulate", "--config", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));

    assert_eq!(cli(&["reproduce", "--preset", "table9", "--rounds", "10"]).status.code(), Some(2));
}

#[test]
fn exact_subcommand_emits_pmf() {
    let dir = tempfile::tempdir().unwrap();
    let mut scenario = ScenarioFile {
        scenario: standard_scenario(Selectivity::Medium, 1, 1),
        run: RunParams::default(),
    };
    scenario.scenario.papers = 4;
    scenario.scenario.accept = 2;
    scenario.scenario.metrics = vec![1];
    scenario.scenario.quality = reviewsim::config::QualityModel::LinearGrid;
    scenario.scenario.tiebreak = reviewsim::rules::TieBreakRule::RandomPick;
    let config = write_scenario(dir.path(), &scenario);
    let o = cli(&["exact", "--config", &config]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = ReportCsv::parse(&stdout(&o)).unwrap();
    let total: f64 = csv.rows.iter().filter(|r| r.metric == "pmf").map(|r| r.value).sum();
    assert!((total - 1.0).abs() < 1e-11);
}

#[test]
fn template_round_trips_and_compare_matches_library() {
    let t = cli(&["template", "--regime", "high", "--n", "3", "--seed", "4", "--rounds", "300"]);
    assert!(t.status.success());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    std::fs::write(&path, stdout(&t)).unwrap();
    let file = reviewsim::harness::load_scenario(&path).unwrap();
    assert_eq!(file.scenario.digest(), standard_scenario(Selectivity::High, 3, 4).digest());

    let o = cli(&["compare", "--strategy", "hetero", "--config", path.to_str().unwrap(), "--workers", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = ReportCsv::parse(&stdout(&o)).unwrap();
    let lib = compare_strategies(&file.scenario, 3, 300, RunOptions::default()).unwrap();
    let ratio = csv.find("scenario", "ratio", 30).unwrap().value;
    let want = lib.entry(30).unwrap().ratio.unwrap();
    assert!((ratio - want).abs() <= 1e-11 * want.abs());
    assert_eq!(csv.find("scenario", "W-hetero", 0).unwrap().value, 600.0);
}
