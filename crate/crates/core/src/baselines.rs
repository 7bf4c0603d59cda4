//! Comparison scorers: random placement and classic matrix factorization.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Rating;
use crate::error::{Error, Result};
use crate::model::GreyShotParams;

/// A deterministic predictor over an `m × n` grid.
pub trait Scorer: Send + Sync {
    fn name(&self) -> &str;

    /// `(users, items)`.
    fn dims(&self) -> (usize, usize);

    fn predict(&self, i: usize, j: usize) -> Result<f64>;
}

fn check_index(i: usize, j: usize, (m, n): (usize, usize)) -> Result<()> {
    if i < m && j < n {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { i, j, m, n })
    }
}

impl Scorer for GreyShotParams {
    fn name(&self) -> &str {
        "greyshot"
    }

    fn dims(&self) -> (usize, usize) {
        (self.users(), self.items())
    }

    fn predict(&self, i: usize, j: usize) -> Result<f64> {
        GreyShotParams::predict(self, i, j)
    }
}

/// Uniform random ratings, derived per cell from a counter-based hash of
/// `(seed, i, j)` so no grid is stored.
#[derive(Debug, Clone)]
pub struct RandomScorer {
    m: usize,
    n: usize,
    rating_min: f64,
    rating_max: f64,
    seed: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RandomScorer {
    pub fn new(m: usize, n: usize, rating_min: f64, rating_max: f64, seed: u64) -> Result<Self> {
        if !(rating_min < rating_max) || !rating_min.is_finite() || !rating_max.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "rating range [{rating_min}, {rating_max}] is empty"
            )));
        }
        if m == 0 || n == 0 {
            return Err(Error::InvalidArgument(
                "grid dimensions must be positive".into(),
            ));
        }
        Ok(Self {
            m,
            n,
            rating_min,
            rating_max,
            seed,
        })
    }

    fn unit(&self, i: usize, j: usize) -> f64 {
        let h = splitmix64(splitmix64(splitmix64(self.seed) ^ i as u64) ^ j as u64);
        (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl Scorer for RandomScorer {
    fn name(&self) -> &str {
        "random"
    }

    fn dims(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    fn predict(&self, i: usize, j: usize) -> Result<f64> {
        check_index(i, j, (self.m, self.n))?;
        Ok(self.rating_min + (self.rating_max - self.rating_min) * self.unit(i, j))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MfConfig {
    pub rank: usize,
    pub learning_rate: f64,
    pub regularization: f64,
    pub epochs: usize,
    pub seed: u64,
    /// `None` means `1/√rank`.
    pub init_scale: Option<f64>,
}

impl Default for MfConfig {
    fn default() -> Self {
        Self {
            rank: 10,
            learning_rate: 0.01,
            regularization: 0.02,
            epochs: 30,
            seed: 0,
            init_scale: None,
        }
    }
}

impl MfConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.to_string()));
        if self.rank == 0 {
            return bad("MF rank must be at least 1");
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return bad("MF learning rate must be finite and nonnegative");
        }
        if !(self.regularization >= 0.0) || !self.regularization.is_finite() {
            return bad("MF regularization must be finite and nonnegative");
        }
        if self.epochs == 0 {
            return bad("MF epochs must be at least 1");
        }
        Ok(())
    }
}

/// Dot-product scorer over factors trained on squared error.
#[derive(Debug, Clone)]
pub struct MfScorer {
    m: usize,
    n: usize,
    rank: usize,
    u: Vec<f64>,
    v: Vec<f64>,
    /// Training RMSE after each epoch.
    pub epoch_rmse: Vec<f64>,
}

impl MfScorer {
    fn row(data: &[f64], rank: usize, r: usize) -> &[f64] {
        &data[r * rank..(r + 1) * rank]
    }

    pub fn training_rmse(&self, ratings: &[Rating]) -> f64 {
        rmse(&self.u, &self.v, self.rank, ratings)
    }
}

impl Scorer for MfScorer {
    fn name(&self) -> &str {
        "mf"
    }

    fn dims(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    fn predict(&self, i: usize, j: usize) -> Result<f64> {
        check_index(i, j, (self.m, self.n))?;
        Ok(Self::row(&self.u, self.rank, i)
            .iter()
            .zip(Self::row(&self.v, self.rank, j))
            .map(|(p, q)| p * q)
            .sum())
    }
}

fn rmse(u: &[f64], v: &[f64], rank: usize, ratings: &[Rating]) -> f64 {
    let sq: f64 = ratings
        .iter()
        .map(|r| {
            let pred: f64 = u[r.user * rank..(r.user + 1) * rank]
                .iter()
                .zip(&v[r.item * rank..(r.item + 1) * rank])
                .map(|(p, q)| p * q)
                .sum();
            (r.value - pred).powi(2)
        })
        .sum();
    (sq / ratings.len() as f64).sqrt()
}

/// Classic matrix factorization trained by shuffled-epoch SGD:
/// `e = R − U_i·V_j; U_i += η(e·V_j − λU_i); V_j += η(e·U_i − λV_j)`.
pub fn train_mf(m: usize, n: usize, ratings: &[Rating], config: &MfConfig) -> Result<MfScorer> {
    config.validate()?;
    if ratings.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if let Some(r) = ratings.iter().find(|r| r.user >= m || r.item >= n) {
        return Err(Error::IndexOutOfRange {
            i: r.user,
            j: r.item,
            m,
            n,
        });
    }

    let rank = config.rank;
    let scale = config
        .init_scale
        .unwrap_or_else(|| 1.0 / (rank as f64).sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut u: Vec<f64> = (0..m * rank).map(|_| rng.gen::<f64>() * scale).collect();
    let mut v: Vec<f64> = (0..n * rank).map(|_| rng.gen::<f64>() * scale).collect();

    let (eta, lambda) = (config.learning_rate, config.regularization);
    let mut order: Vec<usize> = (0..ratings.len()).collect();
    let mut epoch_rmse = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &idx in &order {
            let r = ratings[idx];
            let (ui, vj) = (r.user * rank, r.item * rank);
            let pred: f64 = (0..rank).map(|k| u[ui + k] * v[vj + k]).sum();
            let err = r.value - pred;
            for k in 0..rank {
                let (p, q) = (u[ui + k], v[vj + k]);
                u[ui + k] += eta * (err * q - lambda * p);
                v[vj + k] += eta * (err * p - lambda * q);
            }
        }
        epoch_rmse.push(rmse(&u, &v, rank, ratings));
    }

    Ok(MfScorer {
        m,
        n,
        rank,
        u,
        v,
        epoch_rmse,
    })
}
