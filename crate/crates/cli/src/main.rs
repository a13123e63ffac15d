use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dfscreen::simgen::{metrics_csv, metrics_table};
use dfscreen::{LinkSpec, Method, MethodSettings};
use dfscreen_cli::commands::{read_experiment, run_screen, run_simulate, run_tune, DataRequest};
use dfscreen_cli::predict::{predict_split, SplitSummary};
use dfscreen_cli::{emit, CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "dfscreen",
    version,
    about = "Decorrelated forward screening for high-dimensional regression"
)]
struct Cli {
    /// Worker threads for replications and repeats (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Args)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    input: PathBuf,
    /// Name of the response column; every other column is a feature.
    #[arg(long)]
    response: String,
    /// identity, logit, log, power:1/3 or power:1/5.
    #[arg(long, default_value = "identity")]
    link: String,
    /// Ridge parameter; defaults to 4·(log p / n)^(1/4).
    #[arg(long)]
    lambda: Option<f64>,
    /// Standardize feature columns before screening.
    #[arg(long, value_enum, default_value = "on")]
    standardize: Toggle,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl DataArgs {
    fn request(&self) -> CliResult<DataRequest> {
        Ok(DataRequest {
            input: self.input.clone(),
            response: self.response.clone(),
            link: self.link.parse::<LinkSpec>()?,
            lambda: self.lambda,
            standardize: matches!(self.standardize, Toggle::On),
            seed: self.seed,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Screen a CSV data set and write a JSON report.
    Screen {
        #[command(flatten)]
        data: DataArgs,
        /// Threshold constant; chosen by 10-fold cross-validation if omitted.
        #[arg(long)]
        c: Option<f64>,
    },
    /// Cross-validate the threshold constant and write the CV report as JSON.
    Tune {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Run a simulation experiment and write the metrics CSV.
    Simulate {
        /// Experiment configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Overrides the master seed in the configuration.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory to receive each replication's data as CSV.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Split-sample prediction error of a screening method.
    PredictSplit {
        #[command(flatten)]
        data: DataArgs,
        /// tdf, fbic, holp, sis or wrh.
        #[arg(long, default_value = "tdf")]
        method: String,
        #[arg(long, default_value_t = 100)]
        repeats: usize,
    },
}

fn json<T: serde::Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::input(format!("cannot serialize report: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::input(format!("cannot start {t} worker threads: {e}")))?;
    }
    match cli.command {
        Command::Screen { data, c } => {
            let report = run_screen(&data.request()?, c)?;
            log::info!("selected {:?} in {:.2}s", report.selected_names, report.wall_time_secs);
            emit(data.out.as_deref(), &json(&report)?)
        }
        Command::Tune { data } => {
            let report = run_tune(&data.request()?)?;
            log::info!("chosen c = {}", report.cv.chosen_c);
            emit(data.out.as_deref(), &json(&report)?)
        }
        Command::Simulate {
            config,
            seed,
            out,
            dump,
        } => {
            let mut config = read_experiment(&config)?;
            if let Some(s) = seed {
                config.scenario.seed = s;
            }
            let report = run_simulate(&config, dump.as_deref())?;
            eprint!("{}", metrics_table(&report));
            emit(out.as_deref(), &metrics_csv(&report))
        }
        Command::PredictSplit { data, method, repeats } => {
            let req = data.request()?;
            let method: Method = method.parse()?;
            let ds = req.load()?;
            let outcome = predict_split(
                &ds.x,
                &ds.y,
                req.link,
                method,
                &MethodSettings::default(),
                req.seed,
                repeats,
            )?;
            emit(data.out.as_deref(), &SplitSummary::of(&outcome).to_csv())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SCREEN_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
