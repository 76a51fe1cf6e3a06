//! The asymmetric vector transformations that turn inner-product search into
//! Euclidean near-neighbor search.
//!
//! Items are rescaled so every norm is at most `U < 1`, then extended with a
//! tower of norm powers (`transform_p`); queries are unit-normalized and
//! extended with constant halves (`transform_q`). The squared distance between
//! the two transformed sides then decreases monotonically with the inner
//! product, up to an error term that vanishes at a tower rate.

use crate::data::{dot, DataVector, Dataset};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Slack accepted on the `‖x‖ ≤ U` and `‖x‖ ≤ 1` checks. Rescaling divides by
/// a computed factor, so the bound can be overshot by a last-bit rounding
/// error; the exact boundary is measure-zero.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Norm slack in the working precision: the f64 contract value, widened for
/// coarser scalars where a single rounding step already exceeds it.
fn norm_slack<T: Scalar>() -> f64 {
    (T::epsilon().as_f64() * 16.0).max(NORM_TOLERANCE)
}

/// Parameters of the asymmetric transformation: `m` appended coordinates and
/// the norm bound `U` items are rescaled to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformParams {
    m: u32,
    u: f64,
}

impl TransformParams {
    pub fn new(m: u32, u: f64) -> Result<Self> {
        if m < 1 {
            return Err(Error::invalid("m", "must be at least 1"));
        }
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::invalid("u", format!("must lie in (0, 1), got {u}")));
        }
        Ok(Self { m, u })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    /// Magnitude bound of the distance error term: `U^(2^(m+1))`.
    pub fn error_bound(&self) -> f64 {
        pow_pow2(self.u, self.m + 1)
    }
}

/// `x^(2^k)` by `k` repeated squarings. Exact tower exponents without
/// round-tripping through `powf`.
pub fn pow_pow2<T: Scalar>(x: T, k: u32) -> T {
    let mut s = x;
    for _ in 0..k {
        s = s * s;
    }
    s
}

/// A dataset rescaled so that every norm is at most `params.u()`.
#[derive(Debug, Clone)]
pub struct ScaledDataset<T> {
    base: Dataset<T>,
    scale_factor: T,
    params: TransformParams,
}

impl<T: Scalar> ScaledDataset<T> {
    /// The rescaled vectors.
    pub fn base(&self) -> &Dataset<T> {
        &self.base
    }

    /// The divisor that was applied (1 when the data already fit the bound).
    pub fn scale_factor(&self) -> T {
        self.scale_factor
    }

    pub fn params(&self) -> &TransformParams {
        &self.params
    }
}

/// Divide every item by `max_norm / U` so the largest norm lands on `U`.
/// Uniform positive scaling, so all inner-product orderings are preserved.
pub fn scale_dataset<T: Scalar>(
    ds: &Dataset<T>,
    params: &TransformParams,
) -> Result<ScaledDataset<T>> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if ds.max_norm() == T::zero() {
        return Err(Error::AllZeroDataset);
    }
    let u = T::from_f64_exact(params.u());
    let scale_factor = if ds.max_norm() > u {
        ds.max_norm() / u
    } else {
        T::one()
    };
    let vectors = ds
        .vectors()
        .iter()
        .map(|v| {
            DataVector::from_raw(v.values().iter().map(|&x| x / scale_factor).collect())
        })
        .collect();
    let base = Dataset::from_vectors_with_dim(vectors, ds.dim())?;
    debug_assert!(base.max_norm().as_f64() <= params.u() + norm_slack::<T>());
    Ok(ScaledDataset {
        base,
        scale_factor,
        params: *params,
    })
}

/// Rescale `q` to unit norm. The maximizer of `q·x` does not depend on the
/// query norm, so this is always safe on the query side.
pub fn normalize_query<T: Scalar>(q: &DataVector<T>) -> Result<DataVector<T>> {
    let norm = dot(q.values(), q.values()).sqrt();
    if norm == T::zero() {
        return Err(Error::ZeroQuery);
    }
    Ok(DataVector::from_raw(
        q.values().iter().map(|&x| x / norm).collect(),
    ))
}

/// Item-side transformation: append `‖x‖^2, ‖x‖^4, …, ‖x‖^(2^m)`.
///
/// Requires `‖x‖ ≤ 1` (callers scale to `U < 1` first); beyond 1 the appended
/// tower diverges instead of vanishing.
pub fn transform_p<T: Scalar>(x: &DataVector<T>, params: &TransformParams) -> Result<DataVector<T>> {
    let norm_sq = dot(x.values(), x.values());
    let norm = norm_sq.sqrt();
    if norm.as_f64() > 1.0 + norm_slack::<T>() {
        return Err(Error::NormExceedsOne {
            norm: norm.as_f64(),
        });
    }
    let m = params.m() as usize;
    let mut values = Vec::with_capacity(x.dim() + m);
    values.extend_from_slice(x.values());
    let mut s = norm_sq;
    for _ in 0..m {
        values.push(s);
        s = s * s;
    }
    Ok(DataVector::from_raw(values))
}

/// Query-side transformation: append `m` constant halves. Queries are expected
/// unit-normalized when the two sides are compared.
pub fn transform_q<T: Scalar>(x: &DataVector<T>, params: &TransformParams) -> DataVector<T> {
    let m = params.m() as usize;
    let half = T::from_f64_exact(0.5);
    let mut values = Vec::with_capacity(x.dim() + m);
    values.extend_from_slice(x.values());
    values.extend(std::iter::repeat(half).take(m));
    DataVector::from_raw(values)
}

/// Analytic form of `‖Q(q) − P(x)‖²` for a unit-norm query:
/// `(1 + m/4) − 2·q·x + ‖x‖^(2^(m+1))`.
///
/// Must agree with the coordinate-wise evaluation to 1e-9; the coordinate-wise
/// route exists as the independent check, this is the fast path.
pub fn transformed_distance_sq<T: Scalar>(
    q: &DataVector<T>,
    x: &DataVector<T>,
    params: &TransformParams,
) -> Result<T> {
    if q.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: q.dim(),
            got: x.dim(),
        });
    }
    let norm_sq = dot(x.values(), x.values());
    let norm = norm_sq.sqrt();
    if norm.as_f64() > 1.0 + norm_slack::<T>() {
        return Err(Error::NormExceedsOne {
            norm: norm.as_f64(),
        });
    }
    let ip = dot(q.values(), x.values());
    let m = T::from_f64_exact(params.m() as f64);
    let four = T::from_f64_exact(4.0);
    let two = T::from_f64_exact(2.0);
    // ‖x‖^(2^(m+1)) = (‖x‖²)^(2^m)
    let error_term = pow_pow2(norm_sq, params.m());
    Ok(T::one() + m / four - two * ip + error_term)
}
