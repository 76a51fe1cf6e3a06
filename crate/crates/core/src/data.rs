//! Dense vector primitives, the dataset container, and the exact brute-force
//! oracle used as ground truth by the hashing and evaluation layers.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A dense vector of latent coordinates. Entries are validated finite and the
/// dimension is at least 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DataVector<T> {
    values: Vec<T>,
}

impl<T: Scalar> DataVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyVector);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { values })
    }

    /// Construction for values produced internally (already finite).
    pub(crate) fn from_raw(values: Vec<T>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }
}

impl<T> AsRef<[T]> for DataVector<T> {
    fn as_ref(&self) -> &[T] {
        &self.values
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Exact inner product x·y in working precision.
pub fn inner_product<T: Scalar>(x: &DataVector<T>, y: &DataVector<T>) -> Result<T> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: y.dim(),
        });
    }
    Ok(dot(x.values(), y.values()))
}

/// Euclidean norm; zero exactly when the vector is zero.
pub fn l2_norm<T: Scalar>(x: &DataVector<T>) -> T {
    dot(x.values(), x.values()).sqrt()
}

/// An immutable item collection of uniform dimension. Item ids are the
/// ingestion positions (0-based) and the maximum norm is cached on
/// construction.
#[derive(Debug, Clone)]
pub struct Dataset<T> {
    vectors: Vec<DataVector<T>>,
    dim: usize,
    max_norm: T,
}

impl<T: Scalar> Dataset<T> {
    pub fn from_vectors(vectors: Vec<DataVector<T>>) -> Result<Self> {
        let dim = vectors.first().map_or(0, |v| v.dim());
        Self::from_vectors_with_dim(vectors, dim)
    }

    /// Like [`Dataset::from_vectors`] but keeps an explicit dimension, so an
    /// empty collection read from a file preserves its declared dimension.
    pub fn from_vectors_with_dim(vectors: Vec<DataVector<T>>, dim: usize) -> Result<Self> {
        for v in &vectors {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.dim(),
                });
            }
        }
        let max_norm = vectors
            .iter()
            .map(l2_norm)
            .fold(T::zero(), |a, b| if b > a { b } else { a });
        Ok(Self {
            vectors,
            dim,
            max_norm,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Exact maximum of the item norms (zero for an empty dataset).
    pub fn max_norm(&self) -> T {
        self.max_norm
    }

    pub fn vector(&self, id: u32) -> Option<&DataVector<T>> {
        self.vectors.get(id as usize)
    }

    pub fn vectors(&self) -> &[DataVector<T>] {
        &self.vectors
    }

    /// Item ids paired with their vectors, in id order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, &DataVector<T>)> {
        self.vectors.iter().enumerate().map(|(i, v)| (i as u32, v))
    }
}

/// Exact top-T result: (item id, score) sorted by score descending, ties
/// broken by the smaller id.
#[derive(Debug, Clone, PartialEq)]
pub struct TopTResult<T> {
    entries: Vec<(u32, T)>,
    t: usize,
}

impl<T: Scalar> TopTResult<T> {
    pub(crate) fn new(entries: Vec<(u32, T)>, t: usize) -> Self {
        Self { entries, t }
    }

    pub fn entries(&self) -> &[(u32, T)] {
        &self.entries
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|&(id, _)| id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Sort (id, score) pairs by score descending, ties by smaller id, and keep
/// the first `t`.
pub(crate) fn top_t_of<T: Scalar>(mut scored: Vec<(u32, T)>, t: usize) -> Vec<(u32, T)> {
    scored.sort_unstable_by(|(ia, sa), (ib, sb)| {
        sb.partial_cmp(sa)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(ia.cmp(ib))
    });
    scored.truncate(t);
    scored
}

/// Exact top-T items by inner product with `q`. This is the gold standard
/// every approximate path is measured against.
pub fn brute_force_top_t<T: Scalar>(
    q: &DataVector<T>,
    ds: &Dataset<T>,
    t: usize,
) -> Result<TopTResult<T>> {
    if t == 0 {
        return Err(Error::invalid("t", "must be at least 1"));
    }
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if q.dim() != ds.dim() {
        return Err(Error::DimensionMismatch {
            expected: ds.dim(),
            got: q.dim(),
        });
    }
    let scored: Vec<(u32, T)> = ds
        .iter()
        .map(|(id, v)| (id, dot(q.values(), v.values())))
        .collect();
    Ok(TopTResult::new(top_t_of(scored, t), t))
}
