//! The GreyShot recommender.
//!
//! Each rating is modelled as the partial sum of a unit-vote process, which the
//! GM(1,1) solution turns into the grey transform
//!
//! ```text
//! g(x) = (1 − b/a)·e^{−a·x} + b/a
//! ```
//!
//! applied to the dot product `x = U_i·V_j`. The power-law likelihood of the
//! rating grid is `∏ g^g`, and training runs SGD over the per-pair factors
//! `g^g` using hand-derived gradients with respect to `a`, `b`, `U_i` and
//! `V_j`. None of those gradients reads a rating, so [`train`] takes only the
//! grid shape and a configuration.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Smallest admissible `|a|`.
pub const MIN_ABS_A: f64 = 1e-12;

/// Upper clamp for `g` before `g^g` and `ln g` are evaluated.
pub const G_CEILING: f64 = 20.0;

const PARAMS_MAGIC: &str = "greyshot-params";
const PARAMS_VERSION: &str = "v1";

/// Which way SGD moves along the per-pair gradient of `g^g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Direction {
    /// `θ ← θ − η·∂(g^g)/∂θ`.
    #[default]
    Descent,
    /// `θ ← θ + η·∂(g^g)/∂θ`. The likelihood is unbounded above, so long
    /// ascent runs drive `a` through zero and overflow `g`.
    Ascent,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Descent => -1.0,
            Direction::Ascent => 1.0,
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "descent" => Ok(Direction::Descent),
            "ascent" => Ok(Direction::Ascent),
            other => Err(Error::InvalidArgument(format!(
                "unknown direction {other:?} (expected descent or ascent)"
            ))),
        }
    }
}

/// Hyperparameters for [`train`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub rank: usize,
    pub learning_rate: f64,
    pub iterations: u64,
    pub seed: u64,
    /// Factors start uniform in `[0, init_scale)`; `None` means `1/√rank`.
    pub init_scale: Option<f64>,
    /// Lower clamp for `g` before `g^g` and `ln g` are evaluated.
    pub g_floor: f64,
    pub a_init: f64,
    pub b_init: f64,
    pub direction: Direction,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            rank: 10,
            learning_rate: 0.01,
            iterations: 100_000,
            seed: 0,
            init_scale: None,
            g_floor: 1e-8,
            a_init: 0.5,
            b_init: 0.1,
            direction: Direction::Descent,
        }
    }
}

impl TrainConfig {
    pub fn effective_init_scale(&self) -> f64 {
        self.init_scale
            .unwrap_or_else(|| 1.0 / (self.rank.max(1) as f64).sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.to_string()));
        if self.rank == 0 {
            return bad("rank must be at least 1");
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return bad("learning rate must be finite and nonnegative");
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1");
        }
        let scale = self.effective_init_scale();
        if !(scale > 0.0) || !scale.is_finite() {
            return bad("init scale must be positive");
        }
        if !(self.g_floor > 0.0 && self.g_floor < 1.0) {
            return bad("g_floor must lie in (0, 1)");
        }
        if !(self.a_init.abs() >= MIN_ABS_A) || !self.a_init.is_finite() {
            return bad("initial a must be finite and away from zero");
        }
        if !self.b_init.is_finite() {
            return bad("initial b must be finite");
        }
        Ok(())
    }
}

/// Trainable state: factor matrices and the grey scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct GreyShotParams {
    m: usize,
    n: usize,
    rank: usize,
    /// Row-major `m × rank`.
    u: Vec<f64>,
    /// Row-major `n × rank`.
    v: Vec<f64>,
    pub a: f64,
    pub b: f64,
}

impl GreyShotParams {
    pub fn from_parts(
        m: usize,
        n: usize,
        rank: usize,
        u: Vec<f64>,
        v: Vec<f64>,
        a: f64,
        b: f64,
    ) -> Result<Self> {
        if m == 0 || n == 0 || rank == 0 {
            return Err(Error::InvalidArgument("dimensions must be positive".into()));
        }
        if u.len() != m * rank || v.len() != n * rank {
            return Err(Error::InvalidArgument(format!(
                "factor sizes {}/{} do not match {m}x{rank} and {n}x{rank}",
                u.len(),
                v.len()
            )));
        }
        if !(a.abs() >= MIN_ABS_A) || !a.is_finite() || !b.is_finite() {
            return Err(Error::NearSingular { a });
        }
        if u.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("factors must be finite".into()));
        }
        Ok(Self {
            m,
            n,
            rank,
            u,
            v,
            a,
            b,
        })
    }

    pub fn users(&self) -> usize {
        self.m
    }

    pub fn items(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn user_factors(&self, i: usize) -> &[f64] {
        &self.u[i * self.rank..(i + 1) * self.rank]
    }

    pub fn item_factors(&self, j: usize) -> &[f64] {
        &self.v[j * self.rank..(j + 1) * self.rank]
    }

    fn user_factors_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.u[i * self.rank..(i + 1) * self.rank]
    }

    fn item_factors_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.v[j * self.rank..(j + 1) * self.rank]
    }

    fn check_index(&self, i: usize, j: usize) -> Result<()> {
        if i < self.m && j < self.n {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                i,
                j,
                m: self.m,
                n: self.n,
            })
        }
    }

    /// Raw dot product `U_i·V_j`; predictions are not rescaled here.
    pub fn predict(&self, i: usize, j: usize) -> Result<f64> {
        self.check_index(i, j)?;
        Ok(dot(self.user_factors(i), self.item_factors(j)))
    }

    /// Writes the plain-text parameter format.
    ///
    /// Header `greyshot-params v1 M N K a b`, then `M` rows of `U` and `N` rows
    /// of `V`; numbers carry 17 significant digits so doubles round-trip.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "{PARAMS_MAGIC} {PARAMS_VERSION} {} {} {} {:.16e} {:.16e}",
            self.m, self.n, self.rank, self.a, self.b
        )?;
        for row in self.u.chunks(self.rank).chain(self.v.chunks(self.rank)) {
            let line: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let fmt = |msg: String| Error::ParamsFormat(msg);
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| fmt("missing header".into()))??;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 7 || fields[0] != PARAMS_MAGIC || fields[1] != PARAMS_VERSION {
            return Err(fmt(format!("bad header {header:?}")));
        }
        let dim = |s: &str| s.parse::<usize>().map_err(|e| fmt(format!("{s:?}: {e}")));
        let real = |s: &str| s.parse::<f64>().map_err(|e| fmt(format!("{s:?}: {e}")));
        let (m, n, rank) = (dim(fields[2])?, dim(fields[3])?, dim(fields[4])?);
        let (a, b) = (real(fields[5])?, real(fields[6])?);

        let mut values = Vec::with_capacity((m + n) * rank);
        for row in 0..m + n {
            let line = lines
                .next()
                .ok_or_else(|| fmt(format!("expected {} factor rows, got {row}", m + n)))??;
            let before = values.len();
            for tok in line.split_whitespace() {
                values.push(real(tok)?);
            }
            if values.len() - before != rank {
                return Err(fmt(format!(
                    "row {row} has {} entries, expected {rank}",
                    values.len() - before
                )));
            }
        }
        if let Some(extra) = lines.next() {
            if !extra?.trim().is_empty() {
                return Err(fmt("trailing data after factor rows".into()));
            }
        }
        let v = values.split_off(m * rank);
        Self::from_parts(m, n, rank, values, v, a, b)
    }
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: GreyShotParams,
    /// Steps dropped because the transform was nonpositive or an update was non-finite.
    pub skipped_steps: u64,
    /// Steps whose update to `a` was rejected for landing within `MIN_ABS_A` of zero.
    pub rejected_a_updates: u64,
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(p, q)| p * q).sum()
}

fn check_a(a: f64) -> Result<()> {
    if a.abs() >= MIN_ABS_A {
        Ok(())
    } else {
        Err(Error::NearSingular { a })
    }
}

/// `g = (1 − b/a)·e^{−a·x} + b/a`, evaluated as `1 + (1 − b/a)·(e^{−a·x} − 1)`
/// so that `g(0) = 1` exactly.
pub fn grey_transform(x: f64, a: f64, b: f64) -> Result<f64> {
    check_a(a)?;
    let ratio = b / a;
    Ok(1.0 + (1.0 - ratio) * (-a * x).exp_m1())
}

/// `g^g`, evaluated as `exp(g·ln g)`.
pub fn likelihood_term(g: f64) -> Result<f64> {
    if !(g > 0.0) {
        return Err(Error::NonPositiveTransform { g });
    }
    Ok((g * g.ln()).exp())
}

fn clamp_transform(g: f64, g_floor: f64) -> Result<f64> {
    if !(g > 0.0) || g.is_nan() {
        return Err(Error::NonPositiveTransform { g });
    }
    Ok(g.clamp(g_floor, G_CEILING))
}

/// `Σ g·ln g` over `pairs`, i.e. the log of the likelihood restricted to them.
pub fn log_likelihood(
    params: &GreyShotParams,
    pairs: &[(usize, usize)],
    g_floor: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for &(i, j) in pairs {
        let x = params.predict(i, j)?;
        let g = clamp_transform(grey_transform(x, params.a, params.b)?, g_floor)?;
        total += g * g.ln();
    }
    Ok(total)
}

/// `∂(g^g)/∂a` at dot product `x`.
pub fn grad_a_at(x: f64, a: f64, b: f64, g_floor: f64) -> Result<f64> {
    check_a(a)?;
    let t0 = b / a;
    let t1 = x;
    let t2 = (-a * t1).exp();
    let t3 = 1.0 - t0;
    let t4 = t2 * t3;
    let t5 = clamp_transform(t0 + t4, g_floor)?;
    let t6 = t5.powf(t5 - 1.0);
    let t7 = a * a;
    let t8 = t5.powf(t5);
    let t9 = t5.ln();
    let t10 = t2 * t9;
    Ok(
        b * t2 * t5 * t6 / t7 - t1 * t4 * t5 * t6 - b * t5 * t6 / t7 - t1 * t10 * t3 * t8
            + b * t10 * t8 / t7
            - b * t8 * t9 / t7,
    )
}

/// `∂(g^g)/∂b` at dot product `x`.
pub fn grad_b_at(x: f64, a: f64, b: f64, g_floor: f64) -> Result<f64> {
    check_a(a)?;
    let t0 = b / a;
    let t1 = (-a * x).exp();
    let t2 = t1 * (1.0 - t0);
    let t3 = clamp_transform(t0 + t2, g_floor)?;
    let t4 = t3.powf(t3 - 1.0);
    let t5 = t3.powf(t3);
    let t6 = t3.ln();
    Ok(t3 * t4 / a - t1 * t3 * t4 / a - t1 * t5 * t6 / a + t5 * t6 / a)
}

/// Scalar `s` with `∂(g^g)/∂U_i = s·V_j` and `∂(g^g)/∂V_j = s·U_i`.
pub fn factor_gradient_scale(x: f64, a: f64, b: f64, g_floor: f64) -> Result<f64> {
    check_a(a)?;
    let t0 = b / a;
    let t1 = (-a * x).exp();
    let t2 = 1.0 - t0;
    let t3 = t1 * t2;
    let t4 = clamp_transform(t0 + t3, g_floor)?;
    Ok(-(a * t3 * t4.powf(t4) + a * t1 * t2 * t4.powf(t4) * t4.ln()))
}

fn pair_dot(params: &GreyShotParams, i: usize, j: usize) -> Result<f64> {
    params.predict(i, j)
}

pub fn grad_a(params: &GreyShotParams, i: usize, j: usize, g_floor: f64) -> Result<f64> {
    grad_a_at(pair_dot(params, i, j)?, params.a, params.b, g_floor)
}

pub fn grad_b(params: &GreyShotParams, i: usize, j: usize, g_floor: f64) -> Result<f64> {
    grad_b_at(pair_dot(params, i, j)?, params.a, params.b, g_floor)
}

pub fn grad_u(params: &GreyShotParams, i: usize, j: usize, g_floor: f64) -> Result<Vec<f64>> {
    let s = factor_gradient_scale(pair_dot(params, i, j)?, params.a, params.b, g_floor)?;
    Ok(params.item_factors(j).iter().map(|v| s * v).collect())
}

pub fn grad_v(params: &GreyShotParams, i: usize, j: usize, g_floor: f64) -> Result<Vec<f64>> {
    let s = factor_gradient_scale(pair_dot(params, i, j)?, params.a, params.b, g_floor)?;
    Ok(params.user_factors(i).iter().map(|u| s * u).collect())
}

/// Seeded initial parameters for an `m × n` grid.
pub fn initialize(
    m: usize,
    n: usize,
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<GreyShotParams> {
    config.validate()?;
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument(
            "user and item counts must be positive".into(),
        ));
    }
    let scale = config.effective_init_scale();
    let mut draw =
        |len: usize| -> Vec<f64> { (0..len).map(|_| rng.gen::<f64>() * scale).collect() };
    let u = draw(m * config.rank);
    let v = draw(n * config.rank);
    GreyShotParams::from_parts(m, n, config.rank, u, v, config.a_init, config.b_init)
}

/// Trains GreyShot on an `m × n` grid without reading any rating.
///
/// Every step samples a cell uniformly, evaluates all four gradients at the
/// current parameters and applies them together. Steps with a nonpositive
/// transform or a non-finite result are skipped and counted.
pub fn train(m: usize, n: usize, config: &TrainConfig) -> Result<TrainOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = initialize(m, n, config, &mut rng)?;
    let step_size = config.direction.sign() * config.learning_rate;
    let (mut skipped_steps, mut rejected_a_updates) = (0u64, 0u64);
    let mut new_u = vec![0.0; config.rank];
    let mut new_v = vec![0.0; config.rank];

    for _ in 0..config.iterations {
        let i = rng.gen_range(0..m as u64) as usize;
        let j = rng.gen_range(0..n as u64) as usize;
        let (a, b) = (params.a, params.b);
        let x = dot(params.user_factors(i), params.item_factors(j));

        let grads = grad_a_at(x, a, b, config.g_floor).and_then(|ga| {
            let gb = grad_b_at(x, a, b, config.g_floor)?;
            let s = factor_gradient_scale(x, a, b, config.g_floor)?;
            Ok((ga, gb, s))
        });
        let Ok((ga, gb, s)) = grads else {
            skipped_steps += 1;
            continue;
        };

        let next_a = a + step_size * ga;
        let next_b = b + step_size * gb;
        let (ui, vj) = (params.user_factors(i), params.item_factors(j));
        for k in 0..config.rank {
            new_u[k] = ui[k] + step_size * s * vj[k];
            new_v[k] = vj[k] + step_size * s * ui[k];
        }
        let finite = next_a.is_finite()
            && next_b.is_finite()
            && new_u.iter().chain(&new_v).all(|x| x.is_finite());
        if !finite {
            skipped_steps += 1;
            continue;
        }

        if next_a.abs() >= MIN_ABS_A {
            params.a = next_a;
        } else {
            rejected_a_updates += 1;
        }
        params.b = next_b;
        params.user_factors_mut(i).copy_from_slice(&new_u);
        params.item_factors_mut(j).copy_from_slice(&new_v);
    }

    Ok(TrainOutcome {
        params,
        skipped_steps,
        rejected_a_updates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    const FLOOR: f64 = 1e-8;

    /// Finite-difference oracle: `g^g` straight from the closed form.
    fn power_term(x: f64, a: f64, b: f64) -> f64 {
        let g = (1.0 - b / a) * (-a * x).exp() + b / a;
        g.powf(g)
    }

    fn central(f: impl Fn(f64) -> f64, at: f64) -> f64 {
        let h = 1e-6;
        (f(at + h) - f(at - h)) / (2.0 * h)
    }

    fn close(got: f64, want: f64) -> bool {
        if want.abs() < 1e-6 {
            (got - want).abs() <= 1e-8
        } else {
            ((got - want) / want).abs() <= 1e-4
        }
    }

    fn params_1d(u: f64, v: f64, a: f64, b: f64) -> GreyShotParams {
        GreyShotParams::from_parts(1, 1, 1, vec![u], vec![v], a, b).unwrap()
    }

    #[test]
    fn grey_transform_examples() {
        for (a, b) in [(0.5, 0.1), (-1.3, 2.0), (3.0, -4.0)] {
            assert_eq!(grey_transform(0.0, a, b).unwrap(), 1.0);
        }
        for x in [-2.0, 0.0, 0.3, 7.5] {
            assert_relative_eq!(grey_transform(x, 0.8, 0.8).unwrap(), 1.0, epsilon = 1e-15);
        }
        assert_relative_eq!(
            grey_transform(1.0, 1.0, 0.0).unwrap(),
            0.367_879_4,
            epsilon = 1e-7
        );
        assert!(matches!(
            grey_transform(1.0, 0.0, 1.0),
            Err(Error::NearSingular { .. })
        ));
    }

    #[test]
    fn likelihood_term_examples() {
        assert_eq!(likelihood_term(1.0).unwrap(), 1.0);
        let e_inv = (-1.0f64).exp();
        assert_relative_eq!(
            likelihood_term(e_inv).unwrap(),
            (-e_inv).exp(),
            max_relative = 1e-14
        );
        assert!((likelihood_term(e_inv).unwrap() - 0.6922).abs() < 1e-4);
        assert_relative_eq!(likelihood_term(2.0).unwrap(), 4.0, max_relative = 1e-14);
        assert!(likelihood_term(0.0).is_err());
        assert!(likelihood_term(-0.5).is_err());
    }

    #[test]
    fn log_likelihood_examples() {
        let p = params_1d(0.7, 0.4, 0.9, 0.9);
        assert_relative_eq!(
            log_likelihood(&p, &[(0, 0)], FLOOR).unwrap(),
            0.0,
            epsilon = 1e-15
        );

        let p = params_1d(0.0, 0.4, 0.5, 0.1);
        assert_eq!(log_likelihood(&p, &[(0, 0)], FLOOR).unwrap(), 0.0);

        let p = params_1d(1.0, 1.0, 1.0, 0.0);
        let ll = log_likelihood(&p, &[(0, 0)], FLOOR).unwrap();
        assert_relative_eq!(ll, -(-1.0f64).exp(), max_relative = 1e-14);
        assert!((ll + 0.3679).abs() < 1e-4);

        assert!(matches!(
            log_likelihood(&p, &[(1, 0)], FLOOR),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn grad_a_degenerate_points() {
        // a = b and x = 0: g = 1, ln g = 0
        let fd = central(|a| power_term(0.0, a, 0.6), 0.6);
        let got = grad_a_at(0.0, 0.6, 0.6, FLOOR).unwrap();
        assert!(close(got, fd), "{got} vs {fd}");

        let fd = central(|a| power_term(0.0, a, 0.0), 1.0);
        let got = grad_a_at(0.0, 1.0, 0.0, FLOOR).unwrap();
        assert!(close(got, fd), "{got} vs {fd}");
    }

    #[test]
    fn grad_b_examples() {
        assert_eq!(grad_b_at(0.0, 0.7, 0.2, FLOOR).unwrap(), 0.0);

        let (a, x) = (0.8, 0.35);
        let got = grad_b_at(x, a, a, FLOOR).unwrap();
        let symbolic = (1.0 - (-a * x).exp()) / a;
        assert_relative_eq!(got, symbolic, max_relative = 1e-12);
        let fd = central(|b| power_term(x, a, b), a);
        assert!(close(got, fd));

        let (a, b, x) = (1.3, -0.4, 0.62);
        let fd = central(|b| power_term(x, a, b), b);
        assert!(close(grad_b_at(x, a, b, FLOOR).unwrap(), fd));
    }

    #[test]
    fn grad_u_and_v_examples() {
        let p =
            GreyShotParams::from_parts(1, 1, 3, vec![0.2, 0.5, 0.1], vec![0.3, 0.9, 0.4], 0.7, 0.7)
                .unwrap();
        assert!(grad_u(&p, 0, 0, FLOOR).unwrap().iter().all(|g| *g == 0.0));
        assert!(grad_v(&p, 0, 0, FLOOR).unwrap().iter().all(|g| *g == 0.0));

        let p = GreyShotParams::from_parts(1, 1, 3, vec![0.2, 0.5, 0.1], vec![0.0; 3], 0.7, 0.1)
            .unwrap();
        assert!(grad_u(&p, 0, 0, FLOOR).unwrap().iter().all(|g| *g == 0.0));
    }

    #[test]
    fn grad_v_mirrors_grad_u() {
        let u = vec![0.12, 0.55, 0.31, 0.07];
        let v = vec![0.44, 0.19, 0.83, 0.62];
        let p = GreyShotParams::from_parts(1, 1, 4, u.clone(), v.clone(), 1.1, 0.3).unwrap();
        let swapped = GreyShotParams::from_parts(1, 1, 4, v, u, 1.1, 0.3).unwrap();
        assert_eq!(
            grad_v(&p, 0, 0, FLOOR).unwrap(),
            grad_u(&swapped, 0, 0, FLOOR).unwrap()
        );
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 300 {
            let rank = [1, 4, 16][rng.gen_range(0..3)];
            let a = rng.gen_range(0.2..2.0);
            let b = rng.gen_range(-1.0..1.0);
            let u: Vec<f64> = (0..rank).map(|_| rng.gen()).collect();
            let v: Vec<f64> = (0..rank).map(|_| rng.gen()).collect();
            let x = dot(&u, &v);
            if grey_transform(x, a, b).unwrap() < 0.05 {
                continue;
            }
            checked += 1;
            assert!(close(
                grad_a_at(x, a, b, FLOOR).unwrap(),
                central(|a| power_term(x, a, b), a)
            ));
            assert!(close(
                grad_b_at(x, a, b, FLOOR).unwrap(),
                central(|b| power_term(x, a, b), b)
            ));

            let p = GreyShotParams::from_parts(1, 1, rank, u.clone(), v.clone(), a, b).unwrap();
            let gu = grad_u(&p, 0, 0, FLOOR).unwrap();
            let gv = grad_v(&p, 0, 0, FLOOR).unwrap();
            for k in 0..rank {
                let fd_u = central(
                    |t| {
                        let mut w = u.clone();
                        w[k] = t;
                        power_term(dot(&w, &v), a, b)
                    },
                    u[k],
                );
                let fd_v = central(
                    |t| {
                        let mut w = v.clone();
                        w[k] = t;
                        power_term(dot(&u, &w), a, b)
                    },
                    v[k],
                );
                assert!(close(gu[k], fd_u), "u[{k}] {} vs {fd_u}", gu[k]);
                assert!(close(gv[k], fd_v), "v[{k}] {} vs {fd_v}", gv[k]);
            }
        }
    }

    #[test]
    fn nonpositive_transform_is_an_error() {
        // b/a = 2: g = 2 − e^{−a·x}, negative once a·x < −ln 2
        let (a, b, x) = (1.0, 2.0, -1.0);
        assert!(grey_transform(x, a, b).unwrap() < 0.0);
        assert!(matches!(
            grad_a_at(x, a, b, FLOOR),
            Err(Error::NonPositiveTransform { .. })
        ));
        assert!(matches!(
            grad_b_at(x, a, b, FLOOR),
            Err(Error::NonPositiveTransform { .. })
        ));
        assert!(factor_gradient_scale(x, a, b, FLOOR).is_err());
    }

    #[test]
    fn predict_examples() {
        let p =
            GreyShotParams::from_parts(2, 2, 1, vec![0.0, 2.0], vec![3.0, 5.0], 0.5, 0.1).unwrap();
        assert_eq!(p.predict(0, 0).unwrap(), 0.0);
        assert_eq!(p.predict(0, 1).unwrap(), 0.0);
        assert_eq!(p.predict(1, 0).unwrap(), 6.0);
        assert!(matches!(
            p.predict(2, 0),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(p.predict(0, 2).is_err());

        let doubled =
            GreyShotParams::from_parts(2, 2, 1, vec![0.0, 4.0], vec![3.0, 5.0], 0.5, 0.1).unwrap();
        assert_eq!(
            doubled.predict(1, 1).unwrap(),
            2.0 * p.predict(1, 1).unwrap()
        );
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = TrainConfig {
            iterations: 5_000,
            seed: 42,
            ..TrainConfig::default()
        };
        let x = train(13, 17, &cfg).unwrap();
        let y = train(13, 17, &cfg).unwrap();
        assert_eq!(x.params, y.params);
        let other = train(13, 17, &TrainConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(x.params, other.params);
    }

    #[test]
    fn zero_learning_rate_keeps_initialization() {
        let cfg = TrainConfig {
            learning_rate: 0.0,
            iterations: 1_000,
            seed: 3,
            ..TrainConfig::default()
        };
        let trained = train(5, 6, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let init = initialize(5, 6, &cfg, &mut rng).unwrap();
        assert_eq!(trained.params, init);
    }

    #[test]
    fn initialization_respects_scale() {
        let cfg = TrainConfig {
            rank: 4,
            ..TrainConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = initialize(30, 40, &cfg, &mut rng).unwrap();
        assert!(p.u.iter().chain(&p.v).all(|x| (0.0..0.5).contains(x)));
        assert_eq!((p.a, p.b), (0.5, 0.1));
    }

    fn sample_pairs(m: usize, n: usize, count: usize, seed: u64) -> Vec<(usize, usize)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| (rng.gen_range(0..m), rng.gen_range(0..n)))
            .collect()
    }

    #[test]
    fn descent_lowers_and_ascent_raises_the_likelihood() {
        let (m, n) = (40, 60);
        let pairs = sample_pairs(m, n, 2_000, 99);
        let cfg = TrainConfig {
            seed: 11,
            ..TrainConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let init = initialize(m, n, &cfg, &mut rng).unwrap();
        let before = log_likelihood(&init, &pairs, cfg.g_floor).unwrap() / pairs.len() as f64;

        let down = train(m, n, &cfg).unwrap();
        let after = log_likelihood(&down.params, &pairs, cfg.g_floor).unwrap() / pairs.len() as f64;
        assert!(after <= before, "descent: {after} > {before}");

        let up_cfg = TrainConfig {
            iterations: 100,
            direction: Direction::Ascent,
            ..cfg
        };
        let up = train(m, n, &up_cfg).unwrap();
        assert_eq!(up.skipped_steps, 0);
        let after = log_likelihood(&up.params, &pairs, cfg.g_floor).unwrap() / pairs.len() as f64;
        assert!(after >= before, "ascent: {after} < {before}");
    }

    #[test]
    fn default_training_never_skips() {
        let out = train(121, 1232, &TrainConfig::default()).unwrap();
        assert_eq!(out.skipped_steps, 0);
        assert!(out.params.a.abs() >= MIN_ABS_A);
    }

    #[test]
    fn long_ascent_skips_instead_of_poisoning_parameters() {
        let cfg = TrainConfig {
            iterations: 20_000,
            direction: Direction::Ascent,
            ..TrainConfig::default()
        };
        let out = train(20, 20, &cfg).unwrap();
        assert!(out.skipped_steps > 0);
        let p = &out.params;
        assert!(p.a.is_finite() && p.b.is_finite());
        assert!(p.u.iter().chain(&p.v).all(|x| x.is_finite()));
    }

    #[test]
    fn params_text_roundtrip_is_exact() {
        let out = train(
            7,
            9,
            &TrainConfig {
                iterations: 500,
                rank: 3,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        let mut buf = Vec::new();
        out.params.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("greyshot-params v1 7 9 3 "));
        assert_eq!(text.lines().count(), 1 + 7 + 9);
        let back = GreyShotParams::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, out.params);
    }

    #[test]
    fn params_reader_rejects_garbage() {
        assert!(GreyShotParams::read_from("".as_bytes()).is_err());
        assert!(
            GreyShotParams::read_from("greyshot-params v2 1 1 1 0.5 0.1\n1\n1\n".as_bytes())
                .is_err()
        );
        assert!(
            GreyShotParams::read_from("greyshot-params v1 1 1 2 0.5 0.1\n1\n1 2\n".as_bytes())
                .is_err()
        );
        assert!(
            GreyShotParams::read_from("greyshot-params v1 1 1 1 0.5 0.1\n1\n".as_bytes()).is_err()
        );
        assert!(
            GreyShotParams::read_from("greyshot-params v1 1 1 1 0 0.1\n1\n1\n".as_bytes()).is_err()
        );
        assert!(GreyShotParams::read_from(
            "greyshot-params v1 1 1 1 0.5 0.1\n1\n1\n9\n".as_bytes()
        )
        .is_err());
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for bad in [
            TrainConfig {
                rank: 0,
                ..TrainConfig::default()
            },
            TrainConfig {
                learning_rate: -1.0,
                ..TrainConfig::default()
            },
            TrainConfig {
                iterations: 0,
                ..TrainConfig::default()
            },
            TrainConfig {
                g_floor: 1.0,
                ..TrainConfig::default()
            },
            TrainConfig {
                init_scale: Some(0.0),
                ..TrainConfig::default()
            },
            TrainConfig {
                a_init: 0.0,
                ..TrainConfig::default()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
        assert_eq!("ascent".parse::<Direction>().unwrap(), Direction::Ascent);
        assert!("sideways".parse::<Direction>().is_err());
    }

    proptest! {
        #[test]
        fn transform_is_one_at_origin(a in prop_oneof![-5.0f64..-1e-6, 1e-6f64..5.0], b in -5.0f64..5.0) {
            prop_assert_eq!(grey_transform(0.0, a, b).unwrap(), 1.0);
        }

        #[test]
        fn log_likelihood_ignores_pair_order(seed in any::<u64>(), shift in 1usize..50) {
            let out = train(6, 8, &TrainConfig { iterations: 200, seed, ..TrainConfig::default() }).unwrap();
            let pairs = sample_pairs(6, 8, 50, seed);
            let mut rotated = pairs.clone();
            rotated.rotate_left(shift);
            rotated.reverse();
            let x = log_likelihood(&out.params, &pairs, FLOOR).unwrap();
            let y = log_likelihood(&out.params, &rotated, FLOOR).unwrap();
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }
}
