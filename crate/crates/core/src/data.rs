//! Rating datasets: loaders, id compaction and seeded splits.
//!
//! Original user and item ids are compacted to dense indices in order of first
//! appearance, so loading the same file twice yields the same indices.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One observed rating, by dense indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rating {
    pub user: usize,
    pub item: usize,
    pub value: f64,
}

/// Bijection between original ids and dense indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl IdMap {
    fn intern(&mut self, id: &str) -> usize {
        if let Some(&idx) = self.index.get(id) {
            return idx;
        }
        let idx = self.ids.len();
        self.ids.push(id.to_string());
        self.index.insert(id.to_string(), idx);
        idx
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn id_of(&self, index: usize) -> Option<&str> {
        self.ids.get(index).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatingsDataset {
    ratings: Vec<Rating>,
    users: IdMap,
    items: IdMap,
    rating_min: f64,
    rating_max: f64,
}

impl RatingsDataset {
    /// Builds a dataset from `(user id, item id, rating)` records.
    ///
    /// With `range = None` the rating range is inferred from the data.
    pub fn from_records<U, I>(
        records: impl IntoIterator<Item = (U, I, f64)>,
        range: Option<(f64, f64)>,
    ) -> Result<Self>
    where
        U: AsRef<str>,
        I: AsRef<str>,
    {
        let mut builder = Builder::default();
        for (u, i, r) in records {
            builder.push(u.as_ref(), i.as_ref(), r);
        }
        builder.finish(range)
    }

    pub fn ratings(&self) -> &[Rating] {
        &self.ratings
    }

    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    /// Number of users (`M`).
    pub fn users(&self) -> usize {
        self.users.len()
    }

    /// Number of items (`N`).
    pub fn items(&self) -> usize {
        self.items.len()
    }

    pub fn user_ids(&self) -> &IdMap {
        &self.users
    }

    pub fn item_ids(&self) -> &IdMap {
        &self.items
    }

    pub fn rating_range(&self) -> (f64, f64) {
        (self.rating_min, self.rating_max)
    }

    /// Writes `user<delim>item<delim>rating` lines using the original ids.
    pub fn write_delimited<W: Write>(&self, mut out: W, delimiter: char) -> Result<()> {
        for r in &self.ratings {
            writeln!(
                out,
                "{}{delimiter}{}{delimiter}{}",
                self.users.ids[r.user], self.items.ids[r.item], r.value
            )?;
        }
        out.flush()?;
        Ok(())
    }

    /// Seeded uniform subsample of `count` ratings, re-compacted.
    pub fn subsample(&self, count: usize, seed: u64) -> Result<Self> {
        if count == 0 || count > self.len() {
            return Err(Error::InvalidArgument(format!(
                "cannot draw {count} ratings from {}",
                self.len()
            )));
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut chosen = order[..count].to_vec();
        chosen.sort_unstable();
        Self::from_records(
            chosen.into_iter().map(|k| {
                let r = self.ratings[k];
                (&self.users.ids[r.user], &self.items.ids[r.item], r.value)
            }),
            Some((self.rating_min, self.rating_max)),
        )
    }
}

#[derive(Default)]
struct Builder {
    ratings: Vec<Rating>,
    users: IdMap,
    items: IdMap,
}

impl Builder {
    fn push(&mut self, user: &str, item: &str, value: f64) {
        let user = self.users.intern(user);
        let item = self.items.intern(item);
        self.ratings.push(Rating { user, item, value });
    }

    fn finish(self, range: Option<(f64, f64)>) -> Result<RatingsDataset> {
        if self.ratings.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let (lo, hi) = match range {
            Some((lo, hi)) => {
                if !(lo <= hi) {
                    return Err(Error::InvalidArgument(format!(
                        "rating range [{lo}, {hi}] is empty"
                    )));
                }
                if let Some(r) = self.ratings.iter().find(|r| r.value < lo || r.value > hi) {
                    return Err(Error::InvalidArgument(format!(
                        "rating {} lies outside [{lo}, {hi}]",
                        r.value
                    )));
                }
                (lo, hi)
            }
            None => self
                .ratings
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                    (lo.min(r.value), hi.max(r.value))
                }),
        };
        Ok(RatingsDataset {
            ratings: self.ratings,
            users: self.users,
            items: self.items,
            rating_min: lo,
            rating_max: hi,
        })
    }
}

fn parse_rating(raw: &str, path: &Path, line: usize) -> Result<f64> {
    match raw.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("rating {raw:?} is not a finite number"),
        }),
    }
}

/// Parses MovieLens `UserID::MovieID::Rating::Timestamp` lines.
pub fn parse_movielens<R: BufRead>(reader: R, origin: &Path) -> Result<RatingsDataset> {
    let mut builder = Builder::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split("::").collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line: line_no,
                message: format!("expected 4 '::'-separated fields, found {}", fields.len()),
            });
        }
        if fields[0].is_empty() || fields[1].is_empty() {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line: line_no,
                message: "empty user or movie id".into(),
            });
        }
        let value = parse_rating(fields[2], origin, line_no)?;
        builder.push(fields[0], fields[1], value);
    }
    builder.finish(Some((1.0, 5.0)))
}

/// Loads a MovieLens 1M `ratings.dat` file. Ratings span `[1, 5]`.
pub fn load_movielens(path: impl AsRef<Path>) -> Result<RatingsDataset> {
    let path = path.as_ref();
    parse_movielens(BufReader::new(File::open(path)?), path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelimitedOptions {
    pub delimiter: u8,
    pub user_col: usize,
    pub item_col: usize,
    pub rating_col: usize,
    pub skip_header: bool,
    /// Overrides the inferred rating range.
    pub rating_range: Option<(f64, f64)>,
}

impl Default for DelimitedOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            user_col: 0,
            item_col: 1,
            rating_col: 2,
            skip_header: false,
            rating_range: None,
        }
    }
}

/// Parses a delimited ratings file with configurable column positions.
pub fn parse_delimited<R: std::io::Read>(
    reader: R,
    options: &DelimitedOptions,
    origin: &Path,
) -> Result<RatingsDataset> {
    let cols = [options.user_col, options.item_col, options.rating_col];
    if cols[0] == cols[1] || cols[0] == cols[2] || cols[1] == cols[2] {
        return Err(Error::InvalidArgument(
            "user, item and rating columns must be distinct".into(),
        ));
    }
    let mut csv = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(options.skip_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut builder = Builder::default();
    let mut record = csv::StringRecord::new();
    while csv.read_record(&mut record)? {
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let field = |c: usize| {
            record.get(c).ok_or_else(|| Error::Parse {
                path: origin.to_path_buf(),
                line,
                message: format!("missing column {c} (row has {} fields)", record.len()),
            })
        };
        let (user, item) = (field(options.user_col)?, field(options.item_col)?);
        let value = parse_rating(field(options.rating_col)?, origin, line)?;
        builder.push(user, item, value);
    }
    builder.finish(options.rating_range)
}

pub fn load_delimited(
    path: impl AsRef<Path>,
    options: &DelimitedOptions,
) -> Result<RatingsDataset> {
    let path = path.as_ref();
    parse_delimited(File::open(path)?, options, path)
}

/// Where a dataset comes from; recorded alongside experiment output.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    MovieLens(PathBuf),
    Delimited(PathBuf, DelimitedOptions),
}

impl DatasetSource {
    pub fn load(&self) -> Result<RatingsDataset> {
        match self {
            DatasetSource::MovieLens(p) => load_movielens(p),
            DatasetSource::Delimited(p, opts) => load_delimited(p, opts),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            seed: 0,
        }
    }
}

/// A subset of a dataset's ratings that shares its dimensions and id maps.
#[derive(Debug, Clone)]
pub struct RatingsView<'a> {
    pub dataset: &'a RatingsDataset,
    pub ratings: Vec<Rating>,
}

impl RatingsView<'_> {
    pub fn dims(&self) -> (usize, usize) {
        (self.dataset.users(), self.dataset.items())
    }
}

#[derive(Debug, Clone)]
pub struct Split<'a> {
    pub train: RatingsView<'a>,
    pub test: RatingsView<'a>,
}

/// Seeded shuffle; the first `⌈fraction·count⌉` ratings go to test.
pub fn split<'a>(dataset: &'a RatingsDataset, spec: SplitSpec) -> Result<Split<'a>> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction must lie in (0, 1), got {}",
            spec.test_fraction
        )));
    }
    let count = dataset.len();
    let test_len = (spec.test_fraction * count as f64).ceil() as usize;
    if test_len == 0 || test_len >= count {
        return Err(Error::InvalidArgument(format!(
            "test fraction {} leaves an empty side for {count} ratings",
            spec.test_fraction
        )));
    }
    let mut shuffled = dataset.ratings.clone();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let train = shuffled.split_off(test_len);
    Ok(Split {
        train: RatingsView {
            dataset,
            ratings: train,
        },
        test: RatingsView {
            dataset,
            ratings: shuffled,
        },
    })
}
