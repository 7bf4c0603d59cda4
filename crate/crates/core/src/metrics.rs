//! Accuracy and popularity-bias metrics.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::baselines::Scorer;
use crate::data::Rating;
use crate::error::{Error, Result};

/// How raw scores are mapped onto the rating scale before MAE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RescalePolicy {
    None,
    /// Affine map sending the batch min/max to `target_min`/`target_max`.
    MinMax {
        target_min: f64,
        target_max: f64,
    },
}

impl RescalePolicy {
    pub fn min_max(target_min: f64, target_max: f64) -> Result<Self> {
        if target_min < target_max {
            Ok(RescalePolicy::MinMax {
                target_min,
                target_max,
            })
        } else {
            Err(Error::InvalidArgument(format!(
                "rescale target [{target_min}, {target_max}] is empty"
            )))
        }
    }

    pub fn apply(&self, predictions: &mut [f64]) -> Result<()> {
        let RescalePolicy::MinMax {
            target_min,
            target_max,
        } = *self
        else {
            return Ok(());
        };
        let lo = predictions.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = predictions
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if !(hi > lo) {
            return Err(Error::ConstantPredictions);
        }
        let scale = (target_max - target_min) / (hi - lo);
        for p in predictions.iter_mut() {
            *p = if *p == hi {
                target_max
            } else {
                target_min + (*p - lo) * scale
            };
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self {
            RescalePolicy::None => "none".into(),
            RescalePolicy::MinMax {
                target_min,
                target_max,
            } => format!("minmax[{target_min},{target_max}]"),
        }
    }
}

/// Mean absolute error between `(value)` and its rescaled prediction.
pub fn mae_of(predictions: &[f64], truth: &[f64]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if predictions.len() != truth.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions for {} ratings",
            predictions.len(),
            truth.len()
        )));
    }
    let total: f64 = predictions
        .iter()
        .zip(truth)
        .map(|(p, r)| (r - p).abs())
        .sum();
    Ok(total / predictions.len() as f64)
}

/// MAE of `scorer` on the observed test triplets.
pub fn mae(scorer: &dyn Scorer, test: &[Rating], policy: RescalePolicy) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut predictions = test
        .iter()
        .map(|r| scorer.predict(r.user, r.item))
        .collect::<Result<Vec<_>>>()?;
    policy.apply(&mut predictions)?;
    let truth: Vec<f64> = test.iter().map(|r| r.value).collect();
    mae_of(&predictions, &truth)
}

/// How often each item appears across users' top-L lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PopularityProfile {
    counts: BTreeMap<usize, u64>,
}

impl PopularityProfile {
    /// Builds a profile from raw counts; zero counts are dropped.
    pub fn from_counts(counts: impl IntoIterator<Item = (usize, u64)>) -> Self {
        let mut map = BTreeMap::new();
        for (item, c) in counts {
            if c > 0 {
                *map.entry(item).or_insert(0) += c;
            }
        }
        Self { counts: map }
    }

    pub fn counts(&self) -> &BTreeMap<usize, u64> {
        &self.counts
    }

    /// Number of distinct items with a nonzero count.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn x_max(&self) -> u64 {
        self.counts.values().copied().max().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

fn by_score_desc(x: &(f64, usize), y: &(f64, usize)) -> Ordering {
    y.0.total_cmp(&x.0).then(x.1.cmp(&y.1))
}

/// Items each user would be shown: the `top_l` highest scores, ties to the lower id.
pub fn top_l_items(
    scorer: &dyn Scorer,
    user: usize,
    top_l: usize,
    buf: &mut Vec<(f64, usize)>,
) -> Result<()> {
    let (_, n) = scorer.dims();
    buf.clear();
    for j in 0..n {
        buf.push((scorer.predict(user, j)?, j));
    }
    if top_l < n {
        buf.select_nth_unstable_by(top_l - 1, by_score_desc);
        buf.truncate(top_l);
    }
    buf.sort_unstable_by(by_score_desc);
    Ok(())
}

/// Counts item occurrences over every user's top-L list.
pub fn popularity_profile(scorer: &dyn Scorer, top_l: usize) -> Result<PopularityProfile> {
    let (m, n) = scorer.dims();
    if top_l == 0 || top_l > n {
        return Err(Error::InvalidArgument(format!(
            "top-L must lie in [1, {n}], got {top_l}"
        )));
    }
    let mut counts = vec![0u64; n];
    let mut buf = Vec::with_capacity(n);
    for i in 0..m {
        top_l_items(scorer, i, top_l, &mut buf)?;
        for &(_, j) in &buf {
            counts[j] += 1;
        }
    }
    Ok(PopularityProfile::from_counts(
        counts.into_iter().enumerate(),
    ))
}

/// Degree of Matthew effect: `1 + n / Σ ln(x_i / x_max)`.
pub fn dme(profile: &PopularityProfile) -> Result<f64> {
    if profile.is_empty() {
        return Err(Error::DegenerateProfile);
    }
    let x_max = profile.x_max() as f64;
    let sum: f64 = profile
        .counts
        .values()
        .map(|&x| (x as f64 / x_max).ln())
        .sum();
    if sum == 0.0 {
        return Err(Error::DegenerateProfile);
    }
    Ok(1.0 + profile.len() as f64 / sum)
}

/// DME straight from real-valued magnitudes (not necessarily integer counts).
pub fn dme_of(values: &[f64]) -> Result<f64> {
    if values.is_empty() || values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidArgument(
            "DME needs positive magnitudes".into(),
        ));
    }
    let x_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = values.iter().map(|x| (x / x_max).ln()).sum();
    if sum == 0.0 {
        return Err(Error::DegenerateProfile);
    }
    Ok(1.0 + values.len() as f64 / sum)
}
