#![allow(dead_code)]

use greyshot::RatingsDataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Synthetic ratings with Zipf-like item popularity and integer ratings in [1, 5].
pub fn power_law_dataset(users: usize, items: usize, ratings: usize, seed: u64) -> RatingsDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (1..=items).map(|r| 1.0 / r as f64).collect();
    let total: f64 = weights.iter().sum();
    let mut cumulative = Vec::with_capacity(items);
    let mut acc = 0.0;
    for w in &weights {
        acc += w / total;
        cumulative.push(acc);
    }
    let records = (0..ratings).map(|_| {
        let u = rng.gen_range(0..users);
        let p: f64 = rng.gen();
        let i = cumulative.partition_point(|&c| c < p).min(items - 1);
        let r = rng.gen_range(1..=5) as f64;
        (format!("u{u}"), format!("i{i}"), r)
    });
    RatingsDataset::from_records(records.collect::<Vec<_>>(), Some((1.0, 5.0))).unwrap()
}

/// Every (user, item) pair rated once, so the dimensions are exactly `users x items`.
pub fn dense_dataset(users: usize, items: usize, seed: u64) -> RatingsDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(users * items);
    for u in 0..users {
        for i in 0..items {
            records.push((
                format!("u{u}"),
                format!("i{i}"),
                rng.gen_range(1..=5) as f64,
            ));
        }
    }
    RatingsDataset::from_records(records, Some((1.0, 5.0))).unwrap()
}

/// Trials CSV with the wall-time column removed.
pub fn strip_timing(csv: &str) -> String {
    csv.lines()
        .map(|line| {
            let mut fields: Vec<&str> = line.split(',').collect();
            fields.pop();
            fields.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}
