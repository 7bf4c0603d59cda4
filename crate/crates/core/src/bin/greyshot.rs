use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use greyshot::data::{DatasetSource, DelimitedOptions};
use greyshot::experiment::{self, Algorithm, ExperimentConfig, RescaleSetting};
use greyshot::gradcheck::{self, GradCheckConfig};
use greyshot::model::{self, Direction, TrainConfig};
use greyshot::{grey, Error, MfConfig};

#[derive(Parser)]
#[command(
    name = "greyshot",
    version,
    about = "GM(1,1) grey models and the GreyShot zero-shot recommender"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// GM(1,1) time-series tools.
    Gm11 {
        #[command(subcommand)]
        action: Gm11Command,
    },
    /// Train GreyShot on an M x N grid (no rating data is read) and save the parameters.
    Train(TrainArgs),
    /// Compare the analytic gradients against central finite differences.
    Gradcheck(GradcheckArgs),
    /// Run seeded multi-trial comparisons on a ratings dataset.
    Experiment(Box<ExperimentArgs>),
}

#[derive(Subcommand)]
enum Gm11Command {
    /// Fit a series and print a, b and the restored forecast as `step,value`.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = grey::DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        horizon: usize,
        #[arg(long)]
        skip_header: bool,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    users: usize,
    #[arg(long)]
    items: usize,
    #[arg(long, default_value_t = 10)]
    rank: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 100_000)]
    iters: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    init_scale: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    g_floor: f64,
    #[arg(long, default_value = "descent")]
    direction: Direction,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Movielens,
    Delimited,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "movielens")]
    format: Format,
    /// Field delimiter for `--format delimited` (`\t` for tab).
    #[arg(long, default_value = ",")]
    delimiter: String,
    #[arg(long, default_value_t = 0)]
    user_col: usize,
    #[arg(long, default_value_t = 1)]
    item_col: usize,
    #[arg(long, default_value_t = 2)]
    rating_col: usize,
    #[arg(long)]
    skip_header: bool,
    #[arg(long, requires = "rating_max")]
    rating_min: Option<f64>,
    #[arg(long, requires = "rating_min")]
    rating_max: Option<f64>,
    /// Comma-separated subset of greyshot,mf,random.
    #[arg(long, default_value = "greyshot,mf,random")]
    algos: String,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    top_l: usize,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long)]
    out_dir: PathBuf,

    #[arg(long, default_value_t = 10)]
    gs_rank: usize,
    #[arg(long, default_value_t = 0.01)]
    gs_lr: f64,
    #[arg(long, default_value_t = 100_000)]
    gs_iters: u64,
    #[arg(long)]
    gs_init_scale: Option<f64>,
    #[arg(long, default_value = "descent")]
    gs_direction: Direction,
    /// none | minmax | minmax:LO:HI
    #[arg(long, default_value = "minmax")]
    gs_rescale: String,

    #[arg(long, default_value_t = 10)]
    mf_rank: usize,
    #[arg(long, default_value_t = 0.01)]
    mf_lr: f64,
    #[arg(long, default_value_t = 0.02)]
    mf_reg: f64,
    #[arg(long, default_value_t = 30)]
    mf_epochs: usize,
    #[arg(long, default_value = "none")]
    mf_rescale: String,

    #[arg(long, default_value = "minmax")]
    random_rescale: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gm11 {
            action:
                Gm11Command::Fit {
                    input,
                    alpha,
                    horizon,
                    skip_header,
                },
        } => gm11_fit(&input, alpha, horizon, skip_header),
        Command::Train(args) => train(&args),
        Command::Gradcheck(args) => return gradcheck(&args),
        Command::Experiment(args) => run_experiment(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn read_series(path: &PathBuf, skip_header: bool) -> Result<Vec<f64>, Error> {
    let reader = BufReader::new(File::open(path)?);
    let mut values = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if (skip_header && idx == 0) || text.is_empty() {
            continue;
        }
        let field = text.split(',').next().unwrap_or(text).trim();
        let value = field.parse::<f64>().map_err(|_| Error::Parse {
            path: path.clone(),
            line: idx + 1,
            message: format!("{field:?} is not a number"),
        })?;
        values.push(value);
    }
    Ok(values)
}

fn gm11_fit(input: &PathBuf, alpha: f64, horizon: usize, skip_header: bool) -> Result<(), Error> {
    let series = read_series(input, skip_header)?;
    let model = grey::fit_gm11(&series, alpha)?;
    let restored = model.forecast_restored(horizon)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "a,{:.16e}", model.a)?;
    writeln!(out, "b,{:.16e}", model.b)?;
    writeln!(out, "step,value")?;
    for (k, v) in restored.iter().enumerate() {
        writeln!(out, "{},{:.16e}", k + 1, v)?;
    }
    Ok(())
}

fn train(args: &TrainArgs) -> Result<(), Error> {
    let config = TrainConfig {
        rank: args.rank,
        learning_rate: args.lr,
        iterations: args.iters,
        seed: args.seed,
        init_scale: args.init_scale,
        g_floor: args.g_floor,
        direction: args.direction,
        ..TrainConfig::default()
    };
    config.validate()?;
    if args.users == 0 || args.items == 0 {
        return Err(Error::InvalidArgument(
            "--users and --items must be positive".into(),
        ));
    }
    let outcome = model::train(args.users, args.items, &config)?;
    outcome
        .params
        .write_to(BufWriter::new(File::create(&args.out)?))?;
    eprintln!(
        "a={} b={} skipped_steps={} rejected_a_updates={}",
        outcome.params.a, outcome.params.b, outcome.skipped_steps, outcome.rejected_a_updates
    );
    Ok(())
}

fn gradcheck(args: &GradcheckArgs) -> ExitCode {
    let config = GradCheckConfig {
        points: args.trials,
        seed: args.seed,
        ..GradCheckConfig::default()
    };
    match gradcheck::run(&config) {
        Ok(report) => {
            println!("{report}");
            if report.passed() {
                println!("PASS");
                ExitCode::SUCCESS
            } else {
                println!("FAIL");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn delimiter_byte(raw: &str) -> Result<u8, Error> {
    match raw {
        "\\t" | "tab" => Ok(b'\t'),
        s if s.len() == 1 => Ok(s.as_bytes()[0]),
        other => Err(Error::InvalidArgument(format!(
            "delimiter must be a single byte, got {other:?}"
        ))),
    }
}

fn run_experiment(args: &ExperimentArgs) -> Result<(), Error> {
    let config = ExperimentConfig {
        algorithms: Algorithm::parse_list(&args.algos)?,
        trials: args.trials,
        base_seed: args.seed,
        test_fraction: args.test_fraction,
        top_l: args.top_l,
        greyshot: TrainConfig {
            rank: args.gs_rank,
            learning_rate: args.gs_lr,
            iterations: args.gs_iters,
            init_scale: args.gs_init_scale,
            direction: args.gs_direction,
            ..TrainConfig::default()
        },
        mf: MfConfig {
            rank: args.mf_rank,
            learning_rate: args.mf_lr,
            regularization: args.mf_reg,
            epochs: args.mf_epochs,
            ..MfConfig::default()
        },
        greyshot_rescale: args.gs_rescale.parse::<RescaleSetting>()?,
        mf_rescale: args.mf_rescale.parse::<RescaleSetting>()?,
        random_rescale: args.random_rescale.parse::<RescaleSetting>()?,
        workers: args.workers,
    };
    config.validate()?;

    let source = match args.format {
        Format::Movielens => DatasetSource::MovieLens(args.data.clone()),
        Format::Delimited => DatasetSource::Delimited(
            args.data.clone(),
            DelimitedOptions {
                delimiter: delimiter_byte(&args.delimiter)?,
                user_col: args.user_col,
                item_col: args.item_col,
                rating_col: args.rating_col,
                skip_header: args.skip_header,
                rating_range: args.rating_min.zip(args.rating_max),
            },
        ),
    };
    let dataset = source.load()?;
    eprintln!(
        "loaded {} ratings ({} users x {} items)",
        dataset.len(),
        dataset.users(),
        dataset.items()
    );

    let result = experiment::run_experiment(&dataset, &config)?;
    experiment::write_outputs(&args.out_dir, &dataset, &config, &result)?;
    print!("{}", experiment::render_summary(&result.summary));
    Ok(())
}
