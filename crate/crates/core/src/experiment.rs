//! Seeded multi-trial comparison harness.
//!
//! Trial `t` uses seed `base_seed + t` (wrapping) for both the train/test split
//! and the algorithm's own initialization, so every table is reproducible from
//! the configuration alone.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::baselines::{train_mf, MfConfig, RandomScorer, Scorer};
use crate::data::{split, Rating, RatingsDataset, SplitSpec};
use crate::error::{Error, Result};
use crate::metrics::{self, RescalePolicy};
use crate::model::{self, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    GreyShot,
    Mf,
    Random,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::GreyShot => "greyshot",
            Algorithm::Mf => "mf",
            Algorithm::Random => "random",
        }
    }

    /// Parses a comma-separated list such as `greyshot,mf,random`.
    pub fn parse_list(s: &str) -> Result<Vec<Algorithm>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let algo: Algorithm = part.parse()?;
            if !out.contains(&algo) {
                out.push(algo);
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidArgument("no algorithms selected".into()));
        }
        Ok(out)
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greyshot" => Ok(Algorithm::GreyShot),
            "mf" => Ok(Algorithm::Mf),
            "random" => Ok(Algorithm::Random),
            other => Err(Error::InvalidArgument(format!(
                "unknown algorithm {other:?} (expected greyshot, mf or random)"
            ))),
        }
    }
}

/// Rescaling applied to an algorithm's predictions before MAE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RescaleSetting {
    None,
    /// Min-max onto the dataset's rating range.
    DatasetRange,
    Explicit(RescalePolicy),
}

impl RescaleSetting {
    fn resolve(self, dataset_range: (f64, f64)) -> Result<RescalePolicy> {
        match self {
            RescaleSetting::None => Ok(RescalePolicy::None),
            RescaleSetting::DatasetRange => {
                RescalePolicy::min_max(dataset_range.0, dataset_range.1)
            }
            RescaleSetting::Explicit(p) => Ok(p),
        }
    }
}

impl FromStr for RescaleSetting {
    type Err = Error;

    /// `none`, `minmax` (dataset range) or `minmax:LO:HI`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(RescaleSetting::None),
            "minmax" => Ok(RescaleSetting::DatasetRange),
            other => {
                let parts: Vec<&str> = other.split(':').collect();
                let num = |p: &str| {
                    p.parse::<f64>()
                        .map_err(|_| Error::InvalidArgument(format!("bad rescale bound {p:?}")))
                };
                match parts.as_slice() {
                    ["minmax", lo, hi] => Ok(RescaleSetting::Explicit(RescalePolicy::min_max(
                        num(lo)?,
                        num(hi)?,
                    )?)),
                    _ => Err(Error::InvalidArgument(format!(
                        "unknown rescale policy {other:?} (expected none, minmax or minmax:LO:HI)"
                    ))),
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    pub base_seed: u64,
    pub test_fraction: f64,
    pub top_l: usize,
    pub greyshot: TrainConfig,
    pub mf: MfConfig,
    pub greyshot_rescale: RescaleSetting,
    pub mf_rescale: RescaleSetting,
    pub random_rescale: RescaleSetting,
    /// Worker threads for trials; 0 picks the rayon default.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algorithms: vec![Algorithm::GreyShot, Algorithm::Mf, Algorithm::Random],
            trials: 10,
            base_seed: 0,
            test_fraction: 0.2,
            top_l: 10,
            greyshot: TrainConfig::default(),
            mf: MfConfig::default(),
            greyshot_rescale: RescaleSetting::DatasetRange,
            mf_rescale: RescaleSetting::None,
            random_rescale: RescaleSetting::DatasetRange,
            workers: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidArgument("no algorithms selected".into()));
        }
        if self.top_l == 0 {
            return Err(Error::InvalidArgument("top-L must be at least 1".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidArgument(
                "test fraction must lie in (0, 1)".into(),
            ));
        }
        self.greyshot.validate()?;
        self.mf.validate()
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.base_seed.wrapping_add(trial as u64)
    }

    fn rescale_for(&self, algo: Algorithm) -> RescaleSetting {
        match algo {
            Algorithm::GreyShot => self.greyshot_rescale,
            Algorithm::Mf => self.mf_rescale,
            Algorithm::Random => self.random_rescale,
        }
    }

    /// Human-readable record of every setting that influences the numbers.
    pub fn describe(&self, dataset: &RatingsDataset) -> String {
        let range = dataset.rating_range();
        let policy = |a| {
            self.rescale_for(a)
                .resolve(range)
                .map_or_else(|e| format!("invalid ({e})"), |p| p.label())
        };
        let algos: Vec<&str> = self.algorithms.iter().map(|a| a.name()).collect();
        let g = &self.greyshot;
        let mf = &self.mf;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "users={} items={} ratings={}",
            dataset.users(),
            dataset.items(),
            dataset.len()
        );
        let _ = writeln!(s, "rating_range={},{}", range.0, range.1);
        let _ = writeln!(s, "algorithms={}", algos.join(","));
        let _ = writeln!(
            s,
            "trials={} base_seed={} seed_rule=base_seed+trial",
            self.trials, self.base_seed
        );
        let _ = writeln!(
            s,
            "test_fraction={} top_l={}",
            self.test_fraction, self.top_l
        );
        let _ = writeln!(
            s,
            "greyshot rank={} lr={} iters={} init_scale={} g_floor={} a_init={} b_init={} direction={:?} rescale={}",
            g.rank,
            g.learning_rate,
            g.iterations,
            g.effective_init_scale(),
            g.g_floor,
            g.a_init,
            g.b_init,
            g.direction,
            policy(Algorithm::GreyShot)
        );
        let _ = writeln!(
            s,
            "mf rank={} lr={} reg={} epochs={} rescale={}",
            mf.rank,
            mf.learning_rate,
            mf.regularization,
            mf.epochs,
            policy(Algorithm::Mf)
        );
        let _ = writeln!(s, "random rescale={}", policy(Algorithm::Random));
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub algorithm: Algorithm,
    pub trial: usize,
    pub seed: u64,
    pub mae: f64,
    /// `None` when the popularity profile is uniform.
    pub dme: Option<f64>,
    pub skipped_steps: u64,
    pub elapsed: Duration,
}

impl TrialReport {
    /// Equality ignoring wall time.
    pub fn same_result(&self, other: &TrialReport) -> bool {
        TrialReport {
            elapsed: Duration::ZERO,
            ..self.clone()
        } == TrialReport {
            elapsed: Duration::ZERO,
            ..other.clone()
        }
    }
}

/// Trains or builds the scorer for one trial and evaluates it.
///
/// GreyShot never sees `train`; only the grid shape reaches its trainer.
pub fn evaluate_on_split(
    dataset: &RatingsDataset,
    train: &[Rating],
    test: &[Rating],
    algorithm: Algorithm,
    trial: usize,
    config: &ExperimentConfig,
) -> Result<TrialReport> {
    let start = Instant::now();
    let seed = config.trial_seed(trial);
    let (m, n) = (dataset.users(), dataset.items());
    if config.top_l > n {
        return Err(Error::InvalidArgument(format!(
            "top-L {} exceeds the item count {n}",
            config.top_l
        )));
    }
    let policy = config
        .rescale_for(algorithm)
        .resolve(dataset.rating_range())?;

    let mut skipped_steps = 0;
    let scorer: Box<dyn Scorer> = match algorithm {
        Algorithm::GreyShot => {
            let cfg = TrainConfig {
                seed,
                ..config.greyshot.clone()
            };
            let outcome = model::train(m, n, &cfg)?;
            skipped_steps = outcome.skipped_steps;
            Box::new(outcome.params)
        }
        Algorithm::Mf => {
            let cfg = MfConfig {
                seed,
                ..config.mf.clone()
            };
            Box::new(train_mf(m, n, train, &cfg)?)
        }
        Algorithm::Random => {
            let (lo, hi) = dataset.rating_range();
            Box::new(RandomScorer::new(m, n, lo, hi, seed)?)
        }
    };

    let mae = metrics::mae(scorer.as_ref(), test, policy)?;
    let profile = metrics::popularity_profile(scorer.as_ref(), config.top_l)?;
    let dme = match metrics::dme(&profile) {
        Ok(v) => Some(v),
        Err(Error::DegenerateProfile) => None,
        Err(e) => return Err(e),
    };

    Ok(TrialReport {
        algorithm,
        trial,
        seed,
        mae,
        dme,
        skipped_steps,
        elapsed: start.elapsed(),
    })
}

/// One trial: seeded split, then [`evaluate_on_split`].
pub fn run_trial(
    dataset: &RatingsDataset,
    config: &ExperimentConfig,
    algorithm: Algorithm,
    trial: usize,
) -> Result<TrialReport> {
    let seed = config.trial_seed(trial);
    let wrap = |e: Error| Error::Trial {
        algorithm: algorithm.name().to_string(),
        trial,
        seed,
        source: Box::new(e),
    };
    let parts = split(
        dataset,
        SplitSpec {
            test_fraction: config.test_fraction,
            seed,
        },
    )
    .map_err(wrap)?;
    evaluate_on_split(
        dataset,
        &parts.train.ratings,
        &parts.test.ratings,
        algorithm,
        trial,
        config,
    )
    .map_err(wrap)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spread {
    pub min: f64,
    pub avg: f64,
    pub max: f64,
}

impl Spread {
    fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut count = 0usize;
        let (mut min, mut max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for v in values {
            count += 1;
            min = min.min(v);
            max = max.max(v);
            sum += v;
        }
        if count == 0 {
            return None;
        }
        // keep min ≤ avg ≤ max under rounding
        let avg = (sum / count as f64).clamp(min, max);
        Some(Spread { min, avg, max })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub trials: usize,
    pub mae: Spread,
    /// Aggregated over trials with a defined DME.
    pub dme: Option<Spread>,
    pub dme_undefined: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    pub fn from_trials(algorithms: &[Algorithm], trials: &[TrialReport]) -> Self {
        let rows = algorithms
            .iter()
            .filter_map(|&algorithm| {
                let mine: Vec<&TrialReport> =
                    trials.iter().filter(|t| t.algorithm == algorithm).collect();
                let mae = Spread::of(mine.iter().map(|t| t.mae))?;
                Some(SummaryRow {
                    algorithm,
                    trials: mine.len(),
                    mae,
                    dme: Spread::of(mine.iter().filter_map(|t| t.dme)),
                    dme_undefined: mine.iter().filter(|t| t.dme.is_none()).count(),
                })
            })
            .collect();
        SummaryTable { rows }
    }

    pub fn row(&self, algorithm: Algorithm) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.algorithm == algorithm)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub trials: Vec<TrialReport>,
    pub summary: SummaryTable,
}

/// Runs every (algorithm, trial) pair and aggregates.
///
/// Trials run concurrently on up to `config.workers` threads; results are
/// ordered by algorithm (as configured) then trial index either way.
pub fn run_experiment(
    dataset: &RatingsDataset,
    config: &ExperimentConfig,
) -> Result<ExperimentResult> {
    config.validate()?;
    if config.top_l > dataset.items() {
        return Err(Error::InvalidArgument(format!(
            "top-L {} exceeds the item count {}",
            config.top_l,
            dataset.items()
        )));
    }
    let jobs: Vec<(Algorithm, usize)> = config
        .algorithms
        .iter()
        .flat_map(|&a| (0..config.trials).map(move |t| (a, t)))
        .collect();
    let run = || -> Result<Vec<TrialReport>> {
        jobs.par_iter()
            .map(|&(a, t)| run_trial(dataset, config, a, t))
            .collect()
    };
    let trials = if config.workers == 1 {
        jobs.iter()
            .map(|&(a, t)| run_trial(dataset, config, a, t))
            .collect::<Result<Vec<_>>>()?
    } else if config.workers == 0 {
        run()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(run)?
    };
    let summary = SummaryTable::from_trials(&config.algorithms, &trials);
    Ok(ExperimentResult { trials, summary })
}

/// Decimal text with `sig` significant digits.
pub fn format_sig(x: f64, sig: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", sig.saturating_sub(1), x);
    let exp: i32 = sci
        .rsplit('e')
        .next()
        .and_then(|e| e.parse().ok())
        .unwrap_or(0);
    if !(-6..=20).contains(&exp) {
        return sci;
    }
    let decimals = (sig as i32 - 1 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

fn metric(x: f64) -> String {
    format_sig(x, 9)
}

fn opt_metric(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), metric)
}

/// Per-trial CSV: `algorithm,trial,seed,mae,dme,skipped_steps,ms`.
pub fn write_trials_csv<W: Write>(mut out: W, trials: &[TrialReport]) -> Result<()> {
    writeln!(out, "algorithm,trial,seed,mae,dme,skipped_steps,ms")?;
    for t in trials {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            t.algorithm.name(),
            t.trial,
            t.seed,
            metric(t.mae),
            opt_metric(t.dme),
            t.skipped_steps,
            t.elapsed.as_millis()
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Summary CSV: `algorithm,mae_min,mae_avg,mae_max,dme_min,dme_avg,dme_max,dme_undefined_count`.
pub fn write_summary_csv<W: Write>(mut out: W, summary: &SummaryTable) -> Result<()> {
    writeln!(
        out,
        "algorithm,mae_min,mae_avg,mae_max,dme_min,dme_avg,dme_max,dme_undefined_count"
    )?;
    for r in &summary.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.algorithm.name(),
            metric(r.mae.min),
            metric(r.mae.avg),
            metric(r.mae.max),
            opt_metric(r.dme.map(|d| d.min)),
            opt_metric(r.dme.map(|d| d.avg)),
            opt_metric(r.dme.map(|d| d.max)),
            r.dme_undefined
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Aligned plain-text rendering of the summary, one block per metric.
pub fn render_summary(summary: &SummaryTable) -> String {
    let mut s = String::new();
    for (title, pick) in [
        (
            "MAE",
            (|r: &SummaryRow| Some(r.mae)) as fn(&SummaryRow) -> Option<Spread>,
        ),
        ("Degree of Matthew Effect", |r: &SummaryRow| r.dme),
    ] {
        let _ = writeln!(s, "{title}");
        let _ = writeln!(
            s,
            "{:<10} {:>16} {:>16} {:>16}",
            "", "Minimum", "Average", "Maximum"
        );
        for r in &summary.rows {
            let cells = match pick(r) {
                Some(sp) => [metric(sp.min), metric(sp.avg), metric(sp.max)],
                None => ["NA".into(), "NA".into(), "NA".into()],
            };
            let _ = writeln!(
                s,
                "{:<10} {:>16} {:>16} {:>16}",
                r.algorithm.name(),
                cells[0],
                cells[1],
                cells[2]
            );
        }
        let _ = writeln!(s);
    }
    s
}

/// Writes `trials.csv`, `summary.csv`, `summary.txt` and `config.txt` into `dir`.
pub fn write_outputs(
    dir: &Path,
    dataset: &RatingsDataset,
    config: &ExperimentConfig,
    result: &ExperimentResult,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_trials_csv(fs::File::create(dir.join("trials.csv"))?, &result.trials)?;
    write_summary_csv(fs::File::create(dir.join("summary.csv"))?, &result.summary)?;
    fs::write(dir.join("summary.txt"), render_summary(&result.summary))?;
    fs::write(dir.join("config.txt"), config.describe(dataset))?;
    Ok(())
}
