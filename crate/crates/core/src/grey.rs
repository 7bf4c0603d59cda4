//! Classical GM(1,1) grey modelling.
//!
//! A raw series `x⁰` is accumulated into `x¹` (the AGO), the whitening equation
//! `dx¹/dt + a·z¹ = b` is fitted by ordinary least squares over the background
//! values `z¹`, and forecasts come from its exponential solution.
//!
//! Background values average consecutive accumulated pairs:
//! `z(k) = alpha·x¹(k−1) + (1−alpha)·x¹(k)` for `k = 2..n`.

use crate::error::{Error, Result};

/// Default background weight.
pub const DEFAULT_ALPHA: f64 = 0.5;

/// Shortest series accepted by [`fit_gm11`].
pub const MIN_FIT_LEN: usize = 4;

/// Fits with `|a|` below this are rejected as singular.
pub const NEAR_SINGULAR: f64 = 1e-12;

/// Fitted GM(1,1) parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gm11Model {
    /// Development coefficient.
    pub a: f64,
    /// Grey input.
    pub b: f64,
    /// First raw observation; anchors the cumulative forecast.
    pub x0_first: f64,
    /// Background weight used during fitting.
    pub alpha: f64,
}

impl Gm11Model {
    /// Builds a model from known parameters, checking the invariants a fit would.
    pub fn new(a: f64, b: f64, x0_first: f64, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(a.abs() >= NEAR_SINGULAR) {
            return Err(Error::NearSingular { a });
        }
        if !b.is_finite() || !x0_first.is_finite() {
            return Err(Error::InvalidArgument(
                "model parameters must be finite".into(),
            ));
        }
        Ok(Self {
            a,
            b,
            x0_first,
            alpha,
        })
    }

    /// Cumulative forecast `x̂¹(t+1) = (x0_first − b/a)·e^{−a·t} + b/a`.
    ///
    /// `t = 0` returns `x0_first` exactly.
    pub fn forecast_cumulative(&self, t: u64) -> f64 {
        if t == 0 {
            return self.x0_first;
        }
        let ratio = self.b / self.a;
        (self.x0_first - ratio) * (-self.a * t as f64).exp() + ratio
    }

    /// Restored (differenced) forecast for steps `1..=horizon`.
    pub fn forecast_restored(&self, horizon: usize) -> Result<Vec<f64>> {
        if horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        let mut prev = self.forecast_cumulative(0);
        Ok((1..=horizon as u64)
            .map(|k| {
                let cur = self.forecast_cumulative(k);
                let step = cur - prev;
                prev = cur;
                step
            })
            .collect())
    }

    /// Sum of squared residuals of `x⁰(k) = −a·z(k) + b` on `series`.
    pub fn residual_sum_of_squares(&self, series: &[f64]) -> Result<f64> {
        sse(series, self.alpha, self.a, self.b)
    }
}

/// Accumulated generating operation: running partial sums.
pub fn ago(series: &[f64]) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    let mut acc = 0.0;
    Ok(series
        .iter()
        .map(|&x| {
            acc += x;
            acc
        })
        .collect())
}

/// Inverse of [`ago`]: first element kept, then first differences.
pub fn inverse_ago(series: &[f64]) -> Result<Vec<f64>> {
    let (&first, _) = series.split_first().ok_or(Error::EmptySeries)?;
    Ok(std::iter::once(first)
        .chain(series.windows(2).map(|w| w[1] - w[0]))
        .collect())
}

/// Background values `z(k)` for `k = 2..n` (returned zero-based, length `n − 1`).
pub fn background_values(cumulative: &[f64], alpha: f64) -> Vec<f64> {
    cumulative
        .windows(2)
        .map(|w| alpha * w[0] + (1.0 - alpha) * w[1])
        .collect()
}

/// Least-squares GM(1,1) fit.
///
/// Solves the 2×2 normal equations of `x⁰(k) = −a·z(k) + b`, `k = 2..n`, in
/// closed form.
pub fn fit_gm11(series: &[f64], alpha: f64) -> Result<Gm11Model> {
    check_alpha(alpha)?;
    if series.len() < MIN_FIT_LEN {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            min: MIN_FIT_LEN,
        });
    }
    if let Some((index, &value)) = series.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NonPositiveValue { index, value });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "series contains non-finite values".into(),
        ));
    }

    let cumulative = ago(series)?;
    let z = background_values(&cumulative, alpha);
    let y = &series[1..];

    let p = z.len() as f64;
    let (mut s_z, mut s_zz, mut s_y, mut s_zy) = (0.0, 0.0, 0.0, 0.0);
    for (&zk, &yk) in z.iter().zip(y) {
        s_z += zk;
        s_zz += zk * zk;
        s_y += yk;
        s_zy += zk * yk;
    }

    // BᵀB = [[Σz², −Σz], [−Σz, p]], Bᵀy = [−Σzy, Σy]
    let det = p * s_zz - s_z * s_z;
    if det == 0.0 || !det.is_finite() {
        return Err(Error::NearSingular { a: 0.0 });
    }
    let a = (s_z * s_y - p * s_zy) / det;
    let b = (s_zz * s_y - s_z * s_zy) / det;
    if !(a.abs() >= NEAR_SINGULAR) {
        return Err(Error::NearSingular { a });
    }

    Ok(Gm11Model {
        a,
        b,
        x0_first: series[0],
        alpha,
    })
}

fn sse(series: &[f64], alpha: f64, a: f64, b: f64) -> Result<f64> {
    let cumulative = ago(series)?;
    let z = background_values(&cumulative, alpha);
    Ok(z.iter()
        .zip(&series[1..])
        .map(|(zk, yk)| {
            let r = yk + a * zk - b;
            r * r
        })
        .sum())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "background weight alpha must lie in [0, 1], got {alpha}"
        )))
    }
}
