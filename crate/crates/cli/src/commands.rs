//! The `screen`, `tune` and `simulate` subcommands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use dfscreen::simgen::ScenarioSampler;
use dfscreen::{
    cv_select_c, run_experiment, screen, standardize_columns, CvOptions, CvReport, ExperimentConfig, ExperimentReport,
    LinkSpec, ScreenOptions,
};
use serde::{Deserialize, Serialize};

use crate::data::{read_csv, write_design, CsvDataset};
use crate::{CliError, CliResult};

/// Inputs shared by the commands that work on a user CSV.
#[derive(Debug, Clone)]
pub struct DataRequest {
    pub input: PathBuf,
    pub response: String,
    pub link: LinkSpec,
    pub lambda: Option<f64>,
    pub standardize: bool,
    pub seed: u64,
}

impl DataRequest {
    /// Reads the file, validates the response and standardizes if asked.
    pub fn load(&self) -> CliResult<CsvDataset> {
        let mut data = read_csv(&self.input, &self.response)?;
        data.check_response(self.link)?;
        if self.standardize {
            data.x = standardize_columns(&data.x);
        }
        Ok(data)
    }
}

/// The screening path with every per-step quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathAudit {
    pub order: Vec<usize>,
    pub order_names: Vec<String>,
    pub rss_per_step: Vec<f64>,
    pub decrements: Vec<f64>,
    pub thresholds: Vec<f64>,
    /// 1-based step at which the stopping rule fired, if it did.
    pub stop_step: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenReport {
    pub input: String,
    pub response: String,
    pub link: LinkSpec,
    pub standardize: bool,
    pub seed: u64,
    pub n: usize,
    pub p: usize,
    pub selected_names: Vec<String>,
    /// 0-based positions among the feature columns (response excluded).
    pub selected_indices: Vec<usize>,
    pub lambda: f64,
    pub c: f64,
    pub cv: Option<CvReport>,
    pub path: PathAudit,
    pub wall_time_secs: f64,
}

pub fn run_screen(req: &DataRequest, c: Option<f64>) -> CliResult<ScreenReport> {
    let start = Instant::now();
    let data = req.load()?;
    let mut opts = ScreenOptions::new(req.link);
    opts.lambda = req.lambda;
    opts.c = c;
    opts.cv.seed = req.seed;
    let result = screen(&data.x, &data.y, &opts)?;
    let names = |idx: &[usize]| idx.iter().map(|&j| data.feature_cols[j].clone()).collect::<Vec<_>>();
    Ok(ScreenReport {
        input: req.input.display().to_string(),
        response: req.response.clone(),
        link: req.link,
        standardize: req.standardize,
        seed: req.seed,
        n: data.n(),
        p: data.p(),
        selected_names: names(&result.selected),
        selected_indices: result.selected.clone(),
        lambda: result.lambda,
        c: result.c,
        cv: result.cv,
        path: PathAudit {
            order_names: names(&result.path.order),
            order: result.path.order,
            rss_per_step: result.path.rss_per_step,
            decrements: result.path.decrements,
            thresholds: result.thresholds,
            stop_step: result.stop_step,
        },
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub input: String,
    pub response: String,
    pub link: LinkSpec,
    pub standardize: bool,
    pub seed: u64,
    pub n: usize,
    pub p: usize,
    /// Fixed `λ`, or `None` when each fold used the default for its size.
    pub lambda: Option<f64>,
    pub cv: CvReport,
    pub wall_time_secs: f64,
}

pub fn run_tune(req: &DataRequest) -> CliResult<TuneReport> {
    let start = Instant::now();
    let data = req.load()?;
    let opts = CvOptions {
        seed: req.seed,
        lambda: req.lambda,
        ..CvOptions::default()
    };
    let cv = cv_select_c(&data.x, &data.y, req.link, &opts)?;
    Ok(TuneReport {
        input: req.input.display().to_string(),
        response: req.response.clone(),
        link: req.link,
        standardize: req.standardize,
        seed: req.seed,
        n: data.n(),
        p: data.p(),
        lambda: req.lambda,
        cv,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

pub fn read_experiment(path: &Path) -> CliResult<ExperimentConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("{}: invalid experiment config: {e}", path.display())))
}

/// Runs the experiment; with `dump` set, also writes every replication's
/// data to `dump/rep_<r>.csv`.
pub fn run_simulate(config: &ExperimentConfig, dump: Option<&Path>) -> CliResult<ExperimentReport> {
    config.scenario.validate()?;
    if let Some(dir) = dump {
        std::fs::create_dir_all(dir).map_err(|e| CliError::input(format!("cannot create {}: {e}", dir.display())))?;
        let sampler = ScenarioSampler::new(&config.scenario)?;
        for r in 0..config.scenario.replications {
            let (x, y) = sampler.replication(r)?;
            write_design(&dir.join(format!("rep_{r}.csv")), &x, &y)?;
        }
    }
    Ok(run_experiment(config)?)
}
