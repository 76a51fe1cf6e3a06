//! Approximate maximum inner product search in sublinear time.
//!
//! Inner products are not a metric, and hashing raw vectors with a
//! distance-sensitive family ranks items by proximity instead of by inner
//! product. This crate implements the asymmetric construction that fixes
//! that: items are rescaled below a norm bound and extended with a tower of
//! norm powers, while queries are unit-normalized and extended with constant
//! halves. From there the p-stable Euclidean hash family does the rest:
//! bigger inner product, smaller transformed distance, higher collision
//! probability.
//!
//! What's here:
//!
//! - [`data`]: dense vectors, datasets, and the exact brute-force oracle.
//! - [`transform`]: the item/query transformations and norm rescaling.
//! - [`l2lsh`]: the p-stable hash family and its exact collision law.
//! - [`index`]: multi-table bucketed index with binary snapshots, plus a
//!   symmetric baseline mode.
//! - [`tuning`]: collision bounds, the query-time exponent, and its
//!   constrained grid minimization.
//! - [`eval`]: collision-count ranking and averaged precision–recall curves
//!   comparing the asymmetric scheme against the raw Euclidean baseline.
//! - [`io`]: binary/CSV vector files and synthetic dataset generation.
//!
//! The numeric core is generic over the scalar type ([`scalar::Scalar`],
//! implemented for `f32` and `f64`); the aliases below pin the
//! double-precision instantiation most callers want.

pub mod data;
pub mod error;
pub mod eval;
pub mod index;
pub mod io;
pub mod l2lsh;
pub mod scalar;
pub mod transform;
pub mod tuning;

mod bytes;

pub use data::{brute_force_top_t, inner_product, l2_norm, DataVector, Dataset, TopTResult};
pub use error::{Error, Result};
pub use index::{build_index, suggest_kl, AlshIndex, CandidateSet, IndexConfig, IndexMode};
pub use l2lsh::{collision_probability, hash_value, sample_hash, HashSeed, L2HashFunction};
pub use scalar::Scalar;
pub use transform::{
    normalize_query, scale_dataset, transform_p, transform_q, transformed_distance_sq,
    ScaledDataset, TransformParams,
};
pub use tuning::{p1_bound, p2_bound, recommended_params, rho, rho_star, MipsInstance, ParamGrid};

/// Double-precision vector.
pub type DataVector64 = DataVector<f64>;
/// Double-precision dataset.
pub type Dataset64 = Dataset<f64>;
/// Double-precision index.
pub type AlshIndex64 = AlshIndex<f64>;
/// Double-precision hash function.
pub type L2HashFunction64 = L2HashFunction<f64>;
