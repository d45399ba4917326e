//! Scenario files, experiment presets and CSV reports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{BehaviorMix, MatchingModel, QualityModel, ReviewPolicy, ScenarioConfig};
use crate::engine::{run_with, RunOptions};
use crate::error::{EngineError, ExactError, ModelError};
use crate::exact::{pmf_moments, ExactInstance};
use crate::planner::GuaranteeSpec;
use crate::quality::Selectivity;
use crate::report::AccuracyReport;
use crate::rules::{TieBreakRule, VotingRule};
use crate::score::{CriticalMap, ScorePmf, SigmaPolicy};
use crate::strategy::{compare_strategies, ImprovementReport};

/// Rounds used by presets unless told otherwise.
pub const DEFAULT_PRESET_ROUNDS: u64 = 1_000_000;

pub const PRESETS: [&str; 10] = [
    "table4",
    "table5",
    "fig-workload",
    "fig-voting",
    "fig-tiebreak",
    "fig-twotype",
    "fig-manytype",
    "fig-anomaly-random",
    "fig-anomaly-bias",
    "fig-hetero",
];

pub const CSV_HEADER: [&str; 7] = ["scenario", "metric", "i_or_bin", "value", "stderr", "K", "seed"];

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("scenario violates `{0}`")]
    Validation(String),
    #[error("infeasible score model: {0}")]
    Infeasible(String),
    #[error("unknown preset `{name}`; expected one of {}", PRESETS.join(", "))]
    UnknownPreset { name: String },
    #[error("{0}")]
    Other(String),
}

impl HarnessError {
    /// Process exit status for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Parse { .. } | HarnessError::Validation(_) | HarnessError::UnknownPreset { .. } => 2,
            HarnessError::Infeasible(_) => 3,
            HarnessError::Io { .. } | HarnessError::Other(_) => 1,
        }
    }
}

impl From<ModelError> for HarnessError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::AdjustmentInfeasible { .. } => HarnessError::Infeasible(e.to_string()),
            ModelError::InvalidParameter(what) => HarnessError::Validation(what),
        }
    }
}

impl From<EngineError> for HarnessError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Validation(what) => HarnessError::Validation(what),
            EngineError::Model(m) => m.into(),
            EngineError::Rule(r) => HarnessError::Validation(r.to_string()),
            other => HarnessError::Other(other.to_string()),
        }
    }
}

impl From<ExactError> for HarnessError {
    fn from(e: ExactError) -> Self {
        match e {
            ExactError::Model(m) => m.into(),
            ExactError::InvalidInstance(what) => HarnessError::Validation(what),
            other => HarnessError::Other(other.to_string()),
        }
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map_or(0, |p| p.line() as usize);
        HarnessError::Parse {
            line,
            column: 0,
            message: e.to_string(),
        }
    }
}

/// Run parameters that sit next to the scenario in a scenario file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds: Option<u64>,
    /// Alternative to `rounds`: the planner picks `K`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guarantee: Option<GuaranteeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl RunParams {
    /// `K` requested by the file, if any.
    pub fn resolved_rounds(&self) -> Option<u64> {
        self.rounds.or_else(|| self.guarantee.map(|g| g.required_rounds()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub run: RunParams,
}

impl ScenarioFile {
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.scenario.validate()?;
        let run = &self.run;
        if run.rounds.is_some() && run.guarantee.is_some() {
            return Err(HarnessError::Validation("give either rounds or guarantee".into()));
        }
        if run.rounds == Some(0) {
            return Err(HarnessError::Validation("K ≥ 1".into()));
        }
        if run.workers == Some(0) {
            return Err(HarnessError::Validation("workers ≥ 1".into()));
        }
        if let Some(g) = run.guarantee {
            g.validate()?;
            if g.accept != self.scenario.accept {
                return Err(HarnessError::Validation("guarantee k equals scenario k".into()));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario file serialises")
    }
}

/// Parses and fully validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<ScenarioFile, HarnessError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| HarnessError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    file.validate()?;
    Ok(file)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile, HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text)
}

/// Shortest decimal form of `x` rounded to 12 significant digits.
pub fn format_value(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub scenario: String,
    pub metric: String,
    pub i_or_bin: usize,
    pub value: f64,
    pub stderr: f64,
    #[serde(rename = "K")]
    pub rounds: u64,
    pub seed: u64,
}

/// A CSV report: `#` comment lines describing the scenarios, then a fixed
/// header and one row per estimate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportCsv {
    pub comments: Vec<String>,
    pub rows: Vec<CsvRow>,
}

impl ReportCsv {
    pub fn comment(&mut self, line: impl Into<String>) {
        self.comments.push(line.into());
    }

    /// Records the scenario's JSON form as a comment.
    pub fn describe(&mut self, label: &str, config: &ScenarioConfig) {
        let json = serde_json::to_string(config).expect("config serialises");
        self.comment(format!("{label}: {json}"));
    }

    pub fn push(&mut self, scenario: &str, metric: &str, i_or_bin: usize, value: f64, stderr: f64, rounds: u64, seed: u64) {
        self.rows.push(CsvRow {
            scenario: scenario.to_string(),
            metric: metric.to_string(),
            i_or_bin,
            value,
            stderr,
            rounds,
            seed,
        });
    }

    /// `E` and `Var` rows for every tallied `i`, then the pmf of `I(k)`.
    pub fn push_report(&mut self, label: &str, report: &AccuracyReport) {
        let (k, seed) = (report.rounds, report.seed);
        for m in &report.metrics {
            self.push(label, "E", m.top, m.mean(), m.mean_stderr(), k, seed);
            self.push(label, "Var", m.top, m.variance(), m.variance_stderr(), k, seed);
        }
        let tally = report.intersection();
        for (j, (p, se)) in tally.pmf().into_iter().zip(tally.pmf_stderr()).enumerate() {
            self.push(label, "pmf", j, p, se, k, seed);
        }
    }

    pub fn push_improvement(&mut self, label: &str, report: &ImprovementReport, seed: u64) {
        let k = report.rounds;
        self.push(label, "W-hom", 0, report.workloads.0 as f64, 0.0, k, seed);
        self.push(label, "W-hetero", 0, report.workloads.1 as f64, 0.0, k, seed);
        for e in &report.entries {
            self.push(label, "E-hom", e.top, e.baseline_mean, e.baseline_stderr, k, seed);
            self.push(label, "E-hetero", e.top, e.candidate_mean, e.candidate_stderr, k, seed);
            let delta_se = e.baseline_stderr.hypot(e.candidate_stderr);
            self.push(label, "delta", e.top, e.delta, delta_se, k, seed);
            if let Some(ratio) = e.ratio {
                self.push(label, "ratio", e.top, ratio, delta_se / e.baseline_mean, k, seed);
            }
        }
    }

    pub fn find(&self, scenario: &str, metric: &str, i_or_bin: usize) -> Option<&CsvRow> {
        self.rows
            .iter()
            .find(|r| r.scenario == scenario && r.metric == metric && r.i_or_bin == i_or_bin)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.scenario.clone(),
                r.metric.clone(),
                r.i_or_bin.to_string(),
                format_value(r.value),
                format_value(r.stderr),
                r.rounds.to_string(),
                r.seed.to_string(),
            ])
            .expect("in-memory write");
        }
        let body = w.into_inner().expect("in-memory flush");
        out.push_str(std::str::from_utf8(&body).expect("rows are UTF-8"));
        out
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let comments = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .map(|l| l.trim_start_matches('#').trim_start().to_string())
            .collect();
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        if header != CSV_HEADER {
            return Err(HarnessError::Parse {
                line: 1,
                column: 0,
                message: format!("unexpected header {header:?}"),
            });
        }
        let rows = reader.deserialize().collect::<Result<Vec<CsvRow>, _>>()?;
        Ok(Self { comments, rows })
    }

    pub fn write(&self, path: &Path) -> Result<(), HarnessError> {
        fs::write(path, self.render()).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Runs a loaded scenario file. `rounds`, `seed` and `workers` override the
/// file when given.
pub fn simulate(
    file: &ScenarioFile,
    rounds: Option<u64>,
    seed: Option<u64>,
    workers: Option<usize>,
    progress: bool,
) -> Result<ReportCsv, HarnessError> {
    let mut config = file.scenario.clone();
    if let Some(s) = seed {
        config.seed = s;
    }
    let rounds = rounds
        .or_else(|| file.run.resolved_rounds())
        .ok_or_else(|| HarnessError::Validation("rounds given in the file or on the command line".into()))?;
    let options = RunOptions {
        workers: workers.or(file.run.workers),
        progress,
    };
    let report = run_with(&config, rounds, options)?;
    let mut csv = ReportCsv::default();
    csv.comment("simulate");
    csv.describe("scenario", &config);
    csv.push_report("scenario", &report);
    Ok(csv)
}

/// Exact pmf of `I_i` for every tallied `i`, for scenarios the exact solver
/// covers: fixed qualities, honest reviewers with one constant σ, average
/// rule, random tie-breaking and a homogeneous plan.
pub fn exact_report(config: &ScenarioConfig) -> Result<ReportCsv, HarnessError> {
    config.validate_structure()?;
    let unsupported = |what: &str| Err(HarnessError::Validation(format!("exact solver needs {what}")));
    let ReviewPolicy::Homogeneous(n) = config.reviews else {
        return unsupported("a homogeneous review plan");
    };
    let SigmaPolicy::Constant(sigma) = config.sigma else {
        return unsupported("a constant σ policy");
    };
    if config.voting != VotingRule::AverageScore {
        return unsupported("the average rule");
    }
    if config.tiebreak != TieBreakRule::RandomPick {
        return unsupported("random tie-breaking");
    }
    if !config.behaviors.is_honest() || !matches!(config.matching, MatchingModel::None { .. }) {
        return unsupported("honest reviewers without matching");
    }
    let Some(qualities) = config.fixed_qualities()? else {
        return unsupported("fixed qualities");
    };

    // the solver wants papers from best to worst
    let mut order: Vec<usize> = (0..config.papers).collect();
    let q = qualities.values();
    order.sort_by(|&a, &b| q[b].total_cmp(&q[a]).then(a.cmp(&b)));
    let pmfs = order
        .iter()
        .map(|&i| ScorePmf::new(q[i], sigma, config.max_score))
        .collect::<Result<Vec<_>, _>>()?;
    let instance = ExactInstance::from_score_pmfs(config.accept, n, pmfs)?;

    let mut csv = ReportCsv::default();
    csv.comment("exact");
    csv.describe("scenario", config);
    let mut pmf_k = Vec::new();
    for top in config.metric_list() {
        let pmf = instance.intersection_pmf_top(top)?;
        let (mean, var) = pmf_moments(&pmf);
        csv.push("scenario", "E", top, mean, 0.0, 0, config.seed);
        csv.push("scenario", "Var", top, var, 0.0, 0, config.seed);
        if top == config.accept {
            pmf_k = pmf;
        }
    }
    for (j, p) in pmf_k.into_iter().enumerate() {
        csv.push("scenario", "pmf", j, p, 0.0, 0, config.seed);
    }
    Ok(csv)
}

/// The standard scenario of the experiments: 200 papers, 30 accepted,
/// scores 1..=5, `σ = 1`, average rule, least-variance tie-breaking.
pub fn standard_scenario(regime: Selectivity, n: u32, seed: u64) -> ScenarioConfig {
    let mut c = ScenarioConfig::basic(
        200,
        30,
        n,
        QualityModel::Regime(regime),
        VotingRule::AverageScore,
        TieBreakRule::LeastVariance,
        seed,
    );
    c.metrics = vec![1, 5, 10, 30];
    c
}

fn preset_voting() -> [VotingRule; 3] {
    [
        VotingRule::AverageScore,
        VotingRule::EliminateHighLow,
        VotingRule::punish_low_default(),
    ]
}

const PRESET_TIEBREAK: [TieBreakRule; 4] = [
    TieBreakRule::LeastVariance,
    TieBreakRule::LargestMaxScore,
    TieBreakRule::LargestMinScore,
    TieBreakRule::LargestMedianScore,
];

fn tenths(from: u32, to: u32) -> Vec<f64> {
    (from..=to).map(|t| f64::from(t) / 10.0).collect()
}

enum Job {
    Simulate(String, ScenarioConfig),
    Compare(String, ScenarioConfig, u32),
}

fn preset_jobs(name: &str, seed: u64) -> Result<Vec<Job>, HarnessError> {
    let std = |r: Selectivity, n: u32| standard_scenario(r, n, seed);
    let mut jobs = Vec::new();
    let mut sim = |label: String, c: ScenarioConfig| jobs.push(Job::Simulate(label, c));
    match name {
        "table4" => {
            for n in [3, 4, 6, 8, 10] {
                sim(format!("n={n}"), std(Selectivity::Medium, n));
            }
        }
        "table5" => {
            for r in Selectivity::ALL {
                sim(r.label().to_string(), std(r, 3));
            }
        }
        "fig-workload" => {
            for r in Selectivity::ALL {
                for n in 1..=12 {
                    sim(format!("{}/n={n}", r.label()), std(r, n));
                }
            }
        }
        "fig-voting" => {
            for r in Selectivity::ALL {
                for rule in preset_voting() {
                    for n in 3..=12 {
                        let mut c = std(r, n);
                        c.voting = rule;
                        sim(format!("{}/{}/n={n}", r.label(), rule.name()), c);
                    }
                }
            }
        }
        "fig-tiebreak" => {
            for r in Selectivity::ALL {
                for rule in PRESET_TIEBREAK {
                    for n in 1..=12 {
                        let mut c = std(r, n);
                        c.tiebreak = rule;
                        sim(format!("{}/{}/n={n}", r.label(), rule.name()), c);
                    }
                }
            }
        }
        "fig-twotype" => {
            for r in Selectivity::ALL {
                for fraction in tenths(0, 10) {
                    let mut c = std(r, 4);
                    c.matching = MatchingModel::TwoType { fraction };
                    c.sigma = SigmaPolicy::TwoType {
                        matched: 0.5,
                        mismatched: 2.0,
                    };
                    sim(format!("{}/same-type={fraction:.1}", r.label()), c);
                }
            }
        }
        "fig-manytype" => {
            for r in Selectivity::ALL {
                for rule in preset_voting().into_iter().chain([VotingRule::WeightedAverage]) {
                    for n in 3..=12 {
                        let mut c = std(r, n);
                        c.voting = rule;
                        c.matching = MatchingModel::ManyType {
                            levels: 3,
                            map: CriticalMap::Identity,
                        };
                        c.sigma = SigmaPolicy::LinearInCritical { base: 0.5, slope: 1.5 };
                        sim(format!("{}/{}/n={n}", r.label(), rule.name()), c);
                    }
                }
            }
        }
        "fig-anomaly-random" => {
            for r in Selectivity::ALL {
                for fraction in tenths(1, 10) {
                    let mut c = std(r, 4);
                    c.behaviors = BehaviorMix {
                        random_scoring: fraction,
                        bias_scoring: 0.0,
                    };
                    sim(format!("{}/random={fraction:.1}", r.label()), c);
                }
            }
        }
        "fig-anomaly-bias" => {
            for r in Selectivity::ALL {
                for step in 0..=10 {
                    let fraction = 0.03 * f64::from(step);
                    let mut c = std(r, 4);
                    c.behaviors = BehaviorMix {
                        random_scoring: 0.0,
                        bias_scoring: fraction,
                    };
                    sim(format!("{}/bias={fraction:.2}", r.label()), c);
                }
            }
        }
        "fig-hetero" => {
            for r in Selectivity::ALL {
                for n in 2..=10 {
                    jobs.push(Job::Compare(format!("{}/n={n}", r.label()), std(r, n), n));
                }
            }
        }
        other => return Err(HarnessError::UnknownPreset { name: other.to_string() }),
    }
    Ok(jobs)
}

/// Runs every scenario of a preset sweep with a shared seed.
pub fn run_preset(name: &str, rounds: u64, seed: u64, options: RunOptions) -> Result<ReportCsv, HarnessError> {
    let jobs = preset_jobs(name, seed)?;
    let mut csv = ReportCsv::default();
    csv.comment(format!("preset {name}, K = {rounds}, seed = {seed}"));
    for job in &jobs {
        match job {
            Job::Simulate(label, c) | Job::Compare(label, c, _) => csv.describe(label, c),
        }
    }
    for job in jobs {
        match job {
            Job::Simulate(label, c) => {
                if options.progress {
                    eprintln!("{name}: {label}");
                }
                let report = run_with(&c, rounds, options)?;
                csv.push_report(&label, &report);
            }
            Job::Compare(label, c, n) => {
                if options.progress {
                    eprintln!("{name}: {label}");
                }
                let report = compare_strategies(&c, n, rounds, options)?;
                csv.push_improvement(&label, &report, seed);
            }
        }
    }
    Ok(csv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> &'static str {
        r#"{
  "scenario": {
    "papers": 200,
    "accept": 30,
    "max_score": 5,
    "reviews": {"homogeneous": 3},
    "quality": {"regime": "medium"},
    "voting": "average",
    "tiebreak": "least-variance",
    "seed": 42
  },
  "run": {"rounds": 1000}
}"#
    }

    #[test]
    fn minimal_file_loads() {
        let f = parse_scenario(minimal()).unwrap();
        assert_eq!(f.scenario.papers, 200);
        assert_eq!(f.scenario.seed, 42);
        assert_eq!(f.run.resolved_rounds(), Some(1000));
    }

    #[test]
    fn rejects_k_above_n() {
        let text = minimal().replace("\"accept\": 30", "\"accept\": 201");
        match parse_scenario(&text) {
            Err(HarnessError::Validation(what)) => assert_eq!(what, "k ≤ N"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_position_and_field() {
        let text = minimal().replace("\"max_score\": 5", "\"max_scor\": 5");
        match parse_scenario(&text) {
            Err(e @ HarnessError::Parse { line, .. }) => {
                assert_eq!(line, 5);
                assert!(e.to_string().contains("max_scor"));
                assert_eq!(e.exit_code(), 2);
            }
            other => panic!("{other:?}"),
        }
        let text = minimal().replace("\"seed\": 42", "\"sed\": 42");
        assert!(matches!(parse_scenario(&text), Err(HarnessError::Parse { .. })));
        let text = minimal().replace(",\n    \"seed\": 42", "");
        match parse_scenario(&text) {
            Err(HarnessError::Parse { message, .. }) => assert!(message.contains("seed")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn emitted_file_reloads_with_same_digest() {
        let f = ScenarioFile {
            scenario: standard_scenario(Selectivity::High, 4, 9),
            run: RunParams::default(),
        };
        let back = parse_scenario(&f.to_json()).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.scenario.digest(), f.scenario.digest());
    }

    #[test]
    fn guarantee_drives_rounds() {
        let text = minimal().replace(
            "\"run\": {\"rounds\": 1000}",
            "\"run\": {\"guarantee\": {\"epsilon\": 0.1, \"delta\": 0.05, \"bound\": \"tight\", \"accept\": 30}}",
        );
        assert_eq!(parse_scenario(&text).unwrap().run.resolved_rounds(), Some(2137));
        let both = minimal().replace(
            "{\"rounds\": 1000}",
            "{\"rounds\": 5, \"guarantee\": {\"epsilon\": 0.1, \"delta\": 0.05, \"bound\": \"tight\", \"accept\": 30}}",
        );
        assert!(matches!(parse_scenario(&both), Err(HarnessError::Validation(_))));
    }

    #[test]
    fn infeasible_model_has_its_own_exit_code() {
        let text = minimal().replace("\"seed\": 42", "\"seed\": 42, \"sigma\": {\"constant\": 0.001}");
        let err = parse_scenario(&text).unwrap_err();
        assert!(matches!(err, HarnessError::Infeasible(_)), "{err:?}");
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn values_keep_twelve_digits() {
        for x in [0.983_212_345_678_9, 19.827, 1.0 / 3.0, 4.121e-7, 0.0, 213_686.0] {
            let back: f64 = format_value(x).parse().unwrap();
            let rel = if x == 0.0 { back.abs() } else { ((back - x) / x).abs() };
            assert!(rel < 5e-12, "{x} -> {}", format_value(x));
        }
        assert_eq!(format_value(0.5), "0.5");
        assert_eq!(format_value(1.0 / 3.0), "0.333333333333");
    }

    #[test]
    fn csv_round_trip() {
        let mut csv = ReportCsv::default();
        csv.comment("a note");
        csv.push("H-S-S/n=3", "E", 30, 13.225_812_345_678_9, 0.004, 1000, 7);
        csv.push("H-S-S/n=3", "pmf", 0, 1e-9, 0.0, 1000, 7);
        let text = csv.render();
        assert!(text.starts_with("# a note\nscenario,metric,i_or_bin,value,stderr,K,seed\n"));
        let back = ReportCsv::parse(&text).unwrap();
        assert_eq!(back.comments, vec!["a note".to_string()]);
        assert_eq!(back.rows.len(), 2);
        let row = back.find("H-S-S/n=3", "E", 30).unwrap();
        assert_eq!(format_value(row.value), format_value(13.225_812_345_678_9));
        assert_eq!(back.render(), text);
    }

    #[test]
    fn unknown_preset() {
        let err = run_preset("table6", 10, 1, RunOptions::default()).unwrap_err();
        assert!(matches!(err, HarnessError::UnknownPreset { .. }));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn every_preset_scenario_is_valid() {
        for name in PRESETS {
            let jobs = preset_jobs(name, 1).unwrap();
            assert!(!jobs.is_empty());
            for job in jobs {
                let (Job::Simulate(label, c) | Job::Compare(label, c, _)) = job;
                c.validate().unwrap_or_else(|e| panic!("{name} {label}: {e}"));
            }
        }
    }

    #[test]
    fn preset_output_is_deterministic() {
        let options = RunOptions {
            workers: Some(1),
            progress: false,
        };
        let a = run_preset("table5", 200, 3, options).unwrap().render();
        let b = run_preset("table5", 200, 3, RunOptions { workers: Some(2), ..options }).unwrap().render();
        assert_eq!(a, b);
        assert!(a.contains("R-S-S: {"));
    }

    #[test]
    fn exact_report_on_small_grid() {
        let mut c = ScenarioConfig::basic(4, 2, 2, QualityModel::LinearGrid, VotingRule::AverageScore, TieBreakRule::RandomPick, 1);
        c.max_score = 3;
        c.metrics = vec![1];
        let csv = exact_report(&c).unwrap();
        let total: f64 = csv.rows.iter().filter(|r| r.metric == "pmf").map(|r| r.value).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let e1 = csv.find("scenario", "E", 1).unwrap().value;
        assert!(e1 > 0.5 && e1 <= 1.0);
        c.quality = QualityModel::Regime(Selectivity::High);
        assert!(matches!(exact_report(&c), Err(HarnessError::Validation(_))));
    }
}
