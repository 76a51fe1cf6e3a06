//! Collision-count ranking and the precision–recall protocol used to compare
//! the asymmetric pipeline against the raw Euclidean baseline.
//!
//! For each query, `K` shared hash functions are evaluated on both sides and
//! every item is ranked by how many of its hash values agree with the
//! query's. Walking that ranking against the exact top-T gold standard yields
//! a precision and a recall at every rank; curves are averaged over queries
//! at fixed rank.

use std::io::Write;

use rayon::prelude::*;

use crate::data::{brute_force_top_t, DataVector, Dataset, TopTResult};
use crate::error::{Error, Result};
use crate::l2lsh::{hash_value, sample_hash, HashSeed, L2HashFunction};
use crate::scalar::Scalar;
use crate::transform::{normalize_query, scale_dataset, transform_p, transform_q, TransformParams};

/// Which hashing scheme ranks the items.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankMethod {
    /// Item-side/query-side transformations in front of the shared hash
    /// family; queries are unit-normalized.
    Alsh { params: TransformParams, r: f64 },
    /// The shared hash family on raw vectors; no transformation, no
    /// normalization.
    L2Lsh { r: f64 },
}

impl RankMethod {
    pub fn label(&self) -> &'static str {
        match self {
            RankMethod::Alsh { .. } => "alsh",
            RankMethod::L2Lsh { .. } => "l2lsh",
        }
    }

    pub fn r(&self) -> f64 {
        match self {
            RankMethod::Alsh { r, .. } | RankMethod::L2Lsh { r } => *r,
        }
    }
}

/// Per-item hash agreement counts for one query; each count lies in `[0, K]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchCounts {
    counts: Vec<u32>,
    num_hashes: usize,
}

impl MatchCounts {
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn num_hashes(&self) -> usize {
        self.num_hashes
    }

    /// Items sorted by count descending, ties to the smaller id.
    pub fn ranked_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = (0..self.counts.len() as u32).collect();
        ids.sort_by(|&a, &b| {
            self.counts[b as usize]
                .cmp(&self.counts[a as usize])
                .then(a.cmp(&b))
        });
        ids
    }
}

/// Item-side hash codes for `K` shared functions, precomputed once per method
/// so many queries can be ranked against the same corpus.
struct HashedCorpus<T> {
    /// `codes[k * n + i]` is hash `k` of item `i`.
    codes: Vec<i64>,
    n: usize,
    funcs: Vec<L2HashFunction<T>>,
    method: RankMethod,
}

impl<T: Scalar> HashedCorpus<T> {
    fn build(ds: &Dataset<T>, method: &RankMethod, num_hashes: usize, seed: HashSeed) -> Result<Self> {
        if num_hashes == 0 {
            return Err(Error::invalid("num_hashes", "must be at least 1"));
        }
        if ds.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let items: Vec<Vec<T>> = match method {
            RankMethod::Alsh { params, .. } => {
                let scaled = scale_dataset(ds, params)?;
                scaled
                    .base()
                    .vectors()
                    .iter()
                    .map(|v| Ok(transform_p(v, params)?.into_values()))
                    .collect::<Result<Vec<_>>>()?
            }
            RankMethod::L2Lsh { .. } => {
                ds.vectors().iter().map(|v| v.values().to_vec()).collect()
            }
        };
        let dim = items[0].len();
        let funcs: Vec<L2HashFunction<T>> = (0..num_hashes)
            .map(|k| sample_hash(dim, method.r(), seed.offset(k as u64)))
            .collect();
        let n = items.len();
        let codes: Vec<i64> = funcs
            .par_iter()
            .flat_map_iter(|f| {
                items
                    .iter()
                    .map(move |v| hash_value(f, v).expect("corpus dimension matches"))
            })
            .collect();
        Ok(Self {
            codes,
            n,
            funcs,
            method: *method,
        })
    }

    fn query_codes(&self, q: &DataVector<T>) -> Result<Vec<i64>> {
        let qv: Vec<T> = match &self.method {
            RankMethod::Alsh { params, .. } => {
                transform_q(&normalize_query(q)?, params).into_values()
            }
            RankMethod::L2Lsh { .. } => q.values().to_vec(),
        };
        self.funcs.iter().map(|f| hash_value(f, &qv)).collect()
    }

    fn match_counts(&self, q: &DataVector<T>) -> Result<MatchCounts> {
        let qcodes = self.query_codes(q)?;
        let mut counts = vec![0u32; self.n];
        for (k, &qc) in qcodes.iter().enumerate() {
            let row = &self.codes[k * self.n..(k + 1) * self.n];
            for (count, &code) in counts.iter_mut().zip(row) {
                *count += u32::from(code == qc);
            }
        }
        Ok(MatchCounts {
            counts,
            num_hashes: self.funcs.len(),
        })
    }
}

/// Hash agreement counts of every item against `q` under `K` shared hash
/// functions drawn from `seed`.
pub fn match_counts<T: Scalar>(
    q: &DataVector<T>,
    ds: &Dataset<T>,
    method: &RankMethod,
    num_hashes: usize,
    seed: HashSeed,
) -> Result<MatchCounts> {
    HashedCorpus::build(ds, method, num_hashes, seed)?.match_counts(q)
}

/// All items ranked by hash agreement count, descending, ties to the smaller
/// id.
pub fn collision_count_rank<T: Scalar>(
    q: &DataVector<T>,
    ds: &Dataset<T>,
    method: &RankMethod,
    num_hashes: usize,
    seed: HashSeed,
) -> Result<Vec<u32>> {
    Ok(match_counts(q, ds, method, num_hashes, seed)?.ranked_ids())
}

/// One point of a precision–recall curve at rank `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub rank: usize,
    pub precision: f64,
    pub recall: f64,
}

/// A precision–recall curve with its method label and protocol parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    pub method: String,
    pub r: f64,
    pub num_hashes: usize,
    pub t: usize,
    pub points: Vec<PrPoint>,
}

impl PrCurve {
    /// Precision at a recall level, interpolated linearly between the
    /// adjacent curve points (recall is non-decreasing in rank).
    pub fn precision_at_recall(&self, recall: f64) -> f64 {
        interpolated_precision(&self.points, recall)
    }
}

/// Walk a full ranking top-down against the gold standard: at rank `k`,
/// precision is `relevant_seen / k` and recall is `relevant_seen / T`.
pub fn pr_curve<T: Scalar>(ranked: &[u32], gold: &TopTResult<T>) -> Result<Vec<PrPoint>> {
    if gold.is_empty() {
        return Err(Error::invalid("gold", "gold standard must be non-empty"));
    }
    let n = ranked.len();
    let mut relevant = vec![false; n];
    for id in gold.ids() {
        if id as usize >= n {
            return Err(Error::UnknownItem(id));
        }
        relevant[id as usize] = true;
    }
    let denom = gold.len() as f64;
    let mut seen = 0usize;
    let mut points = Vec::with_capacity(n);
    for (i, &id) in ranked.iter().enumerate() {
        if relevant[id as usize] {
            seen += 1;
        }
        let k = i + 1;
        points.push(PrPoint {
            rank: k,
            precision: seen as f64 / k as f64,
            recall: seen as f64 / denom,
        });
    }
    Ok(points)
}

/// Exact top-`t` gold standards for a batch of queries, in parallel.
fn gold_standards<T: Scalar>(
    ds: &Dataset<T>,
    queries: &[DataVector<T>],
    t: usize,
) -> Result<Vec<TopTResult<T>>> {
    queries
        .par_iter()
        .map(|q| brute_force_top_t(q, ds, t))
        .collect()
}

fn averaged_curve<T: Scalar>(
    ds: &Dataset<T>,
    queries: &[DataVector<T>],
    golds: &[TopTResult<T>],
    t: usize,
    method: &RankMethod,
    num_hashes: usize,
    seed: HashSeed,
) -> Result<PrCurve> {
    let corpus = HashedCorpus::build(ds, method, num_hashes, seed)?;
    let per_query: Vec<Vec<PrPoint>> = queries
        .par_iter()
        .zip(golds)
        .map(|(q, gold)| {
            let ranked = corpus.match_counts(q)?.ranked_ids();
            pr_curve(&ranked, gold)
        })
        .collect::<Result<Vec<_>>>()?;

    // Fixed-order accumulation per rank keeps the mean independent of the
    // worker count.
    let n = ds.len();
    let mut precision = vec![0.0f64; n];
    let mut recall = vec![0.0f64; n];
    for curve in &per_query {
        for (i, p) in curve.iter().enumerate() {
            precision[i] += p.precision;
            recall[i] += p.recall;
        }
    }
    let q = per_query.len() as f64;
    let points = (0..n)
        .map(|i| PrPoint {
            rank: i + 1,
            precision: precision[i] / q,
            recall: recall[i] / q,
        })
        .collect();
    Ok(PrCurve {
        method: method.label().to_string(),
        r: method.r(),
        num_hashes,
        t,
        points,
    })
}

/// Rank every query with `K` shared hashes and average precision and recall
/// pointwise at each rank. Per-query work runs in parallel; the average is a
/// fixed-order reduction, so the result does not depend on the worker count.
pub fn averaged_pr<T: Scalar>(
    ds: &Dataset<T>,
    queries: &[DataVector<T>],
    t: usize,
    method: &RankMethod,
    num_hashes: usize,
    seed: HashSeed,
) -> Result<PrCurve> {
    if queries.is_empty() {
        return Err(Error::invalid("queries", "need at least one query"));
    }
    let golds = gold_standards(ds, queries, t)?;
    averaged_curve(ds, queries, &golds, t, method, num_hashes, seed)
}

/// Side-by-side protocol run: one transformed-pipeline curve and one raw
/// Euclidean baseline curve per bucket width.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub curves: Vec<PrCurve>,
    pub t: usize,
    pub num_hashes: usize,
}

impl ComparisonReport {
    /// The transformed-pipeline curve (always first).
    pub fn alsh_curve(&self) -> &PrCurve {
        &self.curves[0]
    }

    /// The baseline curves, one per swept bucket width.
    pub fn baseline_curves(&self) -> &[PrCurve] {
        &self.curves[1..]
    }

    /// Full per-rank CSV: `method,r,K,T,k,precision,recall`.
    pub fn write_pr_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "method,r,K,T,k,precision,recall")?;
        for curve in &self.curves {
            for p in &curve.points {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    curve.method, curve.r, curve.num_hashes, curve.t, p.rank, p.precision, p.recall
                )?;
            }
        }
        Ok(())
    }

    /// Interpolated-precision summary CSV:
    /// `method,r,K,T,recall_level,interpolated_precision`.
    pub fn write_summary_csv<W: Write>(
        &self,
        recall_levels: &[f64],
        mut w: W,
    ) -> std::io::Result<()> {
        writeln!(w, "method,r,K,T,recall_level,interpolated_precision")?;
        for curve in &self.curves {
            for &level in recall_levels {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    curve.method,
                    curve.r,
                    curve.num_hashes,
                    curve.t,
                    level,
                    curve.precision_at_recall(level)
                )?;
            }
        }
        Ok(())
    }
}

/// Run the comparison protocol: the transformed pipeline at `(alsh_params,
/// alsh_r)` against the raw baseline at every width in `l2lsh_r_values`.
pub fn compare_methods<T: Scalar>(
    ds: &Dataset<T>,
    queries: &[DataVector<T>],
    t: usize,
    num_hashes: usize,
    alsh_params: TransformParams,
    alsh_r: f64,
    l2lsh_r_values: &[f64],
    seed: HashSeed,
) -> Result<ComparisonReport> {
    if queries.is_empty() {
        return Err(Error::invalid("queries", "need at least one query"));
    }
    let golds = gold_standards(ds, queries, t)?;
    let mut curves = Vec::with_capacity(1 + l2lsh_r_values.len());
    curves.push(averaged_curve(
        ds,
        queries,
        &golds,
        t,
        &RankMethod::Alsh {
            params: alsh_params,
            r: alsh_r,
        },
        num_hashes,
        seed,
    )?);
    for &r in l2lsh_r_values {
        curves.push(averaged_curve(
            ds,
            queries,
            &golds,
            t,
            &RankMethod::L2Lsh { r },
            num_hashes,
            seed,
        )?);
    }
    Ok(ComparisonReport {
        curves,
        t,
        num_hashes,
    })
}

/// Linear interpolation of precision at a recall level. Below the first
/// point's recall the first precision is returned; recall reaches 1 at the
/// last rank, so levels in `[0, 1]` are always covered.
pub fn interpolated_precision(points: &[PrPoint], recall: f64) -> f64 {
    assert!(!points.is_empty(), "curve has no points");
    let first = &points[0];
    if recall <= first.recall {
        return first.precision;
    }
    for pair in points.windows(2) {
        let (lo, hi) = (&pair[0], &pair[1]);
        if recall <= hi.recall {
            if hi.recall == lo.recall {
                return hi.precision;
            }
            let frac = (recall - lo.recall) / (hi.recall - lo.recall);
            return lo.precision + frac * (hi.precision - lo.precision);
        }
    }
    points.last().unwrap().precision
}
