//! The p-stable hash family for Euclidean distance: random Gaussian
//! projection, uniform offset, floor bucketing. Includes the exact collision
//! probability of the scheme and a Monte-Carlo check against it.

use std::io::Write;

use rand::distr::Uniform;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::dot;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Deterministic randomness source. Distinct `(seed, stream)` pairs yield
/// statistically independent draws; the same pair reproduces the same draws
/// bit for bit.
///
/// Backed by a counter-based generator (ChaCha8), so streams can be derived
/// cheaply without correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashSeed {
    pub seed: u64,
    pub stream: u64,
}

impl HashSeed {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Same seed, stream shifted by `delta`. Used to derive per-function and
    /// per-table streams from one base seed.
    pub fn offset(&self, delta: u64) -> Self {
        Self {
            seed: self.seed,
            stream: self.stream.wrapping_add(delta),
        }
    }

    pub(crate) fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// One hash function `x ↦ ⌊(a·x + b) / r⌋`: Gaussian projection direction
/// `a`, offset `b` uniform on `[0, r)`, bucket width `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct L2HashFunction<T> {
    a: Vec<T>,
    b: T,
    r: T,
}

impl<T: Scalar> L2HashFunction<T> {
    pub(crate) fn from_parts(a: Vec<T>, b: T, r: T) -> Self {
        Self { a, b, r }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn projection(&self) -> &[T] {
        &self.a
    }

    pub fn shift(&self) -> T {
        self.b
    }

    pub fn bucket_width(&self) -> T {
        self.r
    }
}

/// Sample one hash function: `dim` i.i.d. standard normal entries for the
/// projection, then the offset uniform on `[0, r)`. Identical seeds reproduce
/// identical functions.
pub fn sample_hash<T: Scalar>(dim: usize, r: f64, seed: HashSeed) -> L2HashFunction<T> {
    assert!(dim >= 1, "hash dimension must be at least 1");
    assert!(r > 0.0, "bucket width must be positive");
    let mut rng = seed.rng();
    let a: Vec<T> = (0..dim).map(|_| T::standard_normal(&mut rng)).collect();
    let r = T::from_f64_exact(r);
    let b = rng.sample(Uniform::new(T::zero(), r).expect("valid uniform range"));
    L2HashFunction { a, b, r }
}

/// Bucket index of `x`: mathematical floor (toward −∞), never truncation;
/// negative projections are routine.
pub fn hash_value<T: Scalar>(h: &L2HashFunction<T>, x: &[T]) -> Result<i64> {
    if x.len() != h.a.len() {
        return Err(Error::DimensionMismatch {
            expected: h.a.len(),
            got: x.len(),
        });
    }
    let v = ((dot(&h.a, x) + h.b) / h.r).floor();
    Ok(v.to_i64().expect("bucket index fits in i64"))
}

/// Standard normal CDF via the complementary error function.
/// Absolute error is below 1e-10 over the whole real line.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// Exact collision probability of the hash family at Euclidean distance `d`
/// with bucket width `r`:
///
/// `F_r(d) = 1 − 2Φ(−r/d) − (2 / (√(2π)·(r/d))) · (1 − exp(−(r/d)²/2))`
///
/// Strictly decreasing in `d`, and a function of the ratio `r/d` only.
/// Identical points (`d = 0`) always collide; callers handle that case.
pub fn collision_probability(d: f64, r: f64) -> Result<f64> {
    if d <= 0.0 {
        return Err(Error::invalid("d", format!("distance must be positive, got {d}")));
    }
    if r <= 0.0 {
        return Err(Error::invalid("r", format!("bucket width must be positive, got {r}")));
    }
    let t = r / d;
    let sqrt_2pi = (2.0 * std::f64::consts::PI).sqrt();
    // 1 − exp(−t²/2) via exp_m1 to avoid cancellation for small t.
    let tail = -(-t * t / 2.0).exp_m1();
    Ok(1.0 - 2.0 * normal_cdf(-t) - (2.0 / (sqrt_2pi * t)) * tail)
}

/// Fraction of `trials` independently sampled hash functions on which `x` and
/// `y` land in the same bucket. Trial `i` uses stream `seed.stream + i`.
pub fn empirical_collision_rate<T: Scalar>(
    x: &[T],
    y: &[T],
    r: f64,
    trials: usize,
    seed: HashSeed,
) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if trials == 0 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    let dim = x.len();
    let collisions: usize = (0..trials)
        .into_par_iter()
        .map(|i| {
            let h = sample_hash::<T>(dim, r, seed.offset(i as u64));
            let hx = hash_value(&h, x).expect("dims match");
            let hy = hash_value(&h, y).expect("dims match");
            usize::from(hx == hy)
        })
        .sum();
    Ok(collisions as f64 / trials as f64)
}

/// One row of the collision-law check: analytic probability vs the
/// Monte-Carlo rate at distance `d` and bucket width `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionCheck {
    pub d: f64,
    pub r: f64,
    pub expected: f64,
    pub empirical: f64,
    pub trials: usize,
}

impl CollisionCheck {
    /// Binomial standard error of the empirical rate.
    pub fn std_err(&self) -> f64 {
        (self.expected * (1.0 - self.expected) / self.trials as f64).sqrt()
    }
}

/// Run the Monte-Carlo collision check for each `(d, r)` pair. Pair `i` draws
/// from streams `seed.stream + i·trials ..`, so pairs never share randomness.
pub fn collision_law_check(
    pairs: &[(f64, f64)],
    trials: usize,
    seed: HashSeed,
) -> Result<Vec<CollisionCheck>> {
    pairs
        .iter()
        .enumerate()
        .map(|(i, &(d, r))| {
            let expected = collision_probability(d, r)?;
            let x = [0.0f64, 0.0];
            let y = [d, 0.0];
            let empirical = empirical_collision_rate(
                &x,
                &y,
                r,
                trials,
                seed.offset(i as u64 * trials as u64),
            )?;
            Ok(CollisionCheck {
                d,
                r,
                expected,
                empirical,
                trials,
            })
        })
        .collect()
}

/// CSV dump of collision-law rows: `d,r,expected,empirical,trials`.
pub fn write_collision_csv<W: Write>(rows: &[CollisionCheck], mut w: W) -> std::io::Result<()> {
    writeln!(w, "d,r,expected,empirical,trials")?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            row.d, row.r, row.expected, row.empirical, row.trials
        )?;
    }
    Ok(())
}
