//! Finite-difference verification of the analytic GreyShot gradients.
//!
//! The reference values come from central differences of `g^g` evaluated
//! directly from its closed form; nothing here reuses the gradient code.

use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::model::{self, GreyShotParams};

#[derive(Debug, Clone)]
pub struct GradCheckConfig {
    /// Number of accepted random points.
    pub points: usize,
    pub seed: u64,
    /// Central-difference step.
    pub step: f64,
    pub rel_tolerance: f64,
    /// Absolute tolerance used where the reference is below `small_threshold`.
    pub abs_tolerance: f64,
    pub small_threshold: f64,
    /// Points with `g` below this are redrawn.
    pub min_transform: f64,
    pub a_range: (f64, f64),
    pub b_range: (f64, f64),
    pub ranks: Vec<usize>,
    pub g_floor: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            points: 1000,
            seed: 0,
            step: 1e-6,
            rel_tolerance: 1e-4,
            abs_tolerance: 1e-8,
            small_threshold: 1e-6,
            min_transform: 0.05,
            a_range: (0.2, 2.0),
            b_range: (-1.0, 1.0),
            ranks: vec![1, 4, 16],
            g_floor: 1e-8,
        }
    }
}

/// Worst-case agreement for one gradient.
#[derive(Debug, Clone, Copy, Default)]
pub struct GradientErrors {
    /// Largest relative error where the reference is at least `small_threshold`.
    pub max_relative: f64,
    /// Largest absolute error where the reference is below `small_threshold`.
    pub max_absolute_small: f64,
    pub comparisons: usize,
    pub failures: usize,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub points: usize,
    pub grad_a: GradientErrors,
    pub grad_b: GradientErrors,
    pub grad_u: GradientErrors,
    pub grad_v: GradientErrors,
    pub elapsed: Duration,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.gradients().iter().all(|(_, e)| e.failures == 0)
    }

    pub fn gradients(&self) -> [(&'static str, &GradientErrors); 4] {
        [
            ("grad_a", &self.grad_a),
            ("grad_b", &self.grad_b),
            ("grad_u", &self.grad_u),
            ("grad_v", &self.grad_v),
        ]
    }
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "points checked: {}", self.points)?;
        for (name, e) in self.gradients() {
            writeln!(
                f,
                "{name}: max_rel_err={:.3e} max_abs_err_small={:.3e} comparisons={} failures={}",
                e.max_relative, e.max_absolute_small, e.comparisons, e.failures
            )?;
        }
        write!(f, "elapsed: {:.3}s", self.elapsed.as_secs_f64())
    }
}

fn power_term(x: f64, a: f64, b: f64) -> f64 {
    let g = (1.0 - b / a) * (-a * x).exp() + b / a;
    g.powf(g)
}

fn transform(x: f64, a: f64, b: f64) -> f64 {
    (1.0 - b / a) * (-a * x).exp() + b / a
}

impl GradientErrors {
    fn record(&mut self, analytic: f64, reference: f64, cfg: &GradCheckConfig) {
        self.comparisons += 1;
        let abs = (analytic - reference).abs();
        let ok = if reference.abs() < cfg.small_threshold {
            self.max_absolute_small = self.max_absolute_small.max(abs);
            abs <= cfg.abs_tolerance
        } else {
            let rel = abs / reference.abs();
            self.max_relative = self.max_relative.max(rel);
            rel <= cfg.rel_tolerance
        };
        if !ok || !analytic.is_finite() {
            self.failures += 1;
        }
    }
}

/// Runs the suite over `config.points` random parameter points.
pub fn run(config: &GradCheckConfig) -> Result<GradCheckReport> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let h = config.step;
    let central = |f: &dyn Fn(f64) -> f64, at: f64| (f(at + h) - f(at - h)) / (2.0 * h);
    let mut report = GradCheckReport {
        points: 0,
        grad_a: GradientErrors::default(),
        grad_b: GradientErrors::default(),
        grad_u: GradientErrors::default(),
        grad_v: GradientErrors::default(),
        elapsed: Duration::ZERO,
    };

    while report.points < config.points {
        let rank = config.ranks[rng.gen_range(0..config.ranks.len())];
        let a = rng.gen_range(config.a_range.0..config.a_range.1);
        let b = rng.gen_range(config.b_range.0..config.b_range.1);
        let u: Vec<f64> = (0..rank).map(|_| rng.gen()).collect();
        let v: Vec<f64> = (0..rank).map(|_| rng.gen()).collect();
        let x: f64 = u.iter().zip(&v).map(|(p, q)| p * q).sum();
        if transform(x, a, b) < config.min_transform {
            continue;
        }
        report.points += 1;

        let params = GreyShotParams::from_parts(1, 1, rank, u.clone(), v.clone(), a, b)?;
        let ga = model::grad_a(&params, 0, 0, config.g_floor)?;
        let gb = model::grad_b(&params, 0, 0, config.g_floor)?;
        let gu = model::grad_u(&params, 0, 0, config.g_floor)?;
        let gv = model::grad_v(&params, 0, 0, config.g_floor)?;

        report
            .grad_a
            .record(ga, central(&|t| power_term(x, t, b), a), config);
        report
            .grad_b
            .record(gb, central(&|t| power_term(x, a, t), b), config);
        for k in 0..rank {
            let du = central(
                &|t| {
                    let row: f64 = (0..rank)
                        .map(|c| if c == k { t } else { u[c] } * v[c])
                        .sum();
                    power_term(row, a, b)
                },
                u[k],
            );
            let dv = central(
                &|t| {
                    let row: f64 = (0..rank)
                        .map(|c| u[c] * if c == k { t } else { v[c] })
                        .sum();
                    power_term(row, a, b)
                },
                v[k],
            );
            report.grad_u.record(gu[k], du, config);
            report.grad_v.record(gv[k], dv, config);
        }
    }

    report.elapsed = start.elapsed();
    Ok(report)
}
