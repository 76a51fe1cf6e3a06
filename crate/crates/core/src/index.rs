//! Bucketed multi-table hash index for inner-product retrieval.
//!
//! Preprocessing hashes every item under the item-side transformation and
//! files it, per table, under a key built from `K` concatenated hash values.
//! Querying hashes the query under the query-side transformation with the
//! same hash bank and returns the union of the probed buckets. A symmetric
//! mode skips both transformations and hashes raw vectors, which is the
//! Euclidean-distance baseline.

use std::collections::HashMap;
use std::io::{Read, Write};

use byteorder::{LittleEndian, WriteBytesExt};
use rayon::prelude::*;

use crate::bytes::CountingReader;
use crate::data::{dot, top_t_of, DataVector, Dataset, TopTResult};
use crate::error::{Error, Result};
use crate::l2lsh::{hash_value, sample_hash, HashSeed, L2HashFunction};
use crate::scalar::Scalar;
use crate::transform::{normalize_query, scale_dataset, transform_p, transform_q, TransformParams};

/// Magic prefix of the index snapshot format.
pub const SNAPSHOT_MAGIC: &[u8; 4] = b"ALSH";
/// Snapshot format version this build reads and writes.
pub const SNAPSHOT_VERSION: u32 = 1;

/// Whether the index applies the asymmetric item/query transformations or
/// hashes raw vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IndexMode {
    Asymmetric(TransformParams),
    Symmetric,
}

/// Build-time configuration: `num_hashes` values are concatenated per table
/// key and `num_tables` tables are probed per query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexConfig {
    pub num_hashes: usize,
    pub num_tables: usize,
    pub r: f64,
    pub mode: IndexMode,
    pub seed: HashSeed,
}

impl IndexConfig {
    pub fn asymmetric(
        num_hashes: usize,
        num_tables: usize,
        r: f64,
        params: TransformParams,
        seed: HashSeed,
    ) -> Self {
        Self {
            num_hashes,
            num_tables,
            r,
            mode: IndexMode::Asymmetric(params),
            seed,
        }
    }

    pub fn symmetric(num_hashes: usize, num_tables: usize, r: f64, seed: HashSeed) -> Self {
        Self {
            num_hashes,
            num_tables,
            r,
            mode: IndexMode::Symmetric,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.num_hashes < 1 {
            return Err(Error::invalid("num_hashes", "must be at least 1"));
        }
        if self.num_tables < 1 {
            return Err(Error::invalid("num_tables", "must be at least 1"));
        }
        if !(self.r > 0.0) {
            return Err(Error::invalid("r", "bucket width must be positive"));
        }
        Ok(())
    }
}

/// Union of the probed buckets for one query. Ids are sorted and distinct;
/// `probed_buckets` counts the non-empty buckets that contributed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    ids: Vec<u32>,
    probed_buckets: usize,
}

impl CandidateSet {
    /// A candidate set from an explicit id list (sorted, deduplicated), for
    /// re-ranking arbitrary subsets.
    pub fn from_ids(mut ids: Vec<u32>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        Self {
            ids,
            probed_buckets: 0,
        }
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn probed_buckets(&self) -> usize {
        self.probed_buckets
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: u32) -> bool {
        self.ids.binary_search(&id).is_ok()
    }
}

/// Reduce `K` concatenated hash values to one 64-bit table key with a fixed
/// multiply-xor mix (a splitmix-style finalizer folded per value). Key
/// collisions only add spurious candidates, never drop true ones. The mix is
/// part of the snapshot format and must not change within a format version.
pub fn meta_key(values: &[i64]) -> u64 {
    let mut h: u64 = 0x9E37_79B9_7F4A_7C15;
    for &v in values {
        h ^= v as u64;
        h = h.wrapping_mul(0xBF58_476D_1CE4_E5B9);
        h ^= h >> 27;
        h = h.wrapping_mul(0x94D0_49BB_1331_11EB);
        h ^= h >> 31;
    }
    h
}

/// Stream offset of hash function `k` in table `l`. Keeps the per-table
/// function sequence prefix-stable when `num_hashes` grows.
fn bank_stream(l: usize, k: usize) -> u64 {
    ((l as u64) << 32) | k as u64
}

type Table = HashMap<u64, Vec<u32>>;

/// The built index: hash bank, bucket tables, and the original (unscaled)
/// dataset for exact re-ranking of candidates. Immutable after construction;
/// queries are pure reads and safe to run concurrently.
#[derive(Debug, Clone)]
pub struct AlshIndex<T> {
    config: IndexConfig,
    data: Dataset<T>,
    scale_factor: T,
    bank: Vec<L2HashFunction<T>>,
    tables: Vec<Table>,
}

/// Build the index over `ds`. In asymmetric mode the dataset is rescaled to
/// the norm bound and item-side transformed before hashing; in symmetric mode
/// raw vectors are hashed. Deterministic given the seed.
pub fn build_index<T: Scalar>(ds: Dataset<T>, config: IndexConfig) -> Result<AlshIndex<T>> {
    config.validate()?;
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if config.num_hashes >= (1usize << 32) {
        return Err(Error::invalid("num_hashes", "must fit in 32 bits"));
    }

    let (hashed, scale_factor): (Vec<Vec<T>>, T) = match &config.mode {
        IndexMode::Asymmetric(params) => {
            let scaled = scale_dataset(&ds, params)?;
            let hashed = scaled
                .base()
                .vectors()
                .iter()
                .map(|v| Ok(transform_p(v, params)?.into_values()))
                .collect::<Result<Vec<_>>>()?;
            (hashed, scaled.scale_factor())
        }
        IndexMode::Symmetric => (
            ds.vectors().iter().map(|v| v.values().to_vec()).collect(),
            T::one(),
        ),
    };

    let hash_dim = hashed[0].len();
    let bank: Vec<L2HashFunction<T>> = (0..config.num_tables)
        .flat_map(|l| (0..config.num_hashes).map(move |k| (l, k)))
        .map(|(l, k)| sample_hash(hash_dim, config.r, config.seed.offset(bank_stream(l, k))))
        .collect();

    // Tables are independent; build them in parallel, one worker per table.
    let tables: Vec<Table> = (0..config.num_tables)
        .into_par_iter()
        .map(|l| {
            let funcs = &bank[l * config.num_hashes..(l + 1) * config.num_hashes];
            let mut table = Table::new();
            let mut values = vec![0i64; config.num_hashes];
            for (i, hv) in hashed.iter().enumerate() {
                for (slot, f) in values.iter_mut().zip(funcs) {
                    *slot = hash_value(f, hv).expect("bank dimension matches");
                }
                table
                    .entry(meta_key(&values))
                    .or_insert_with(Vec::new)
                    .push(i as u32);
            }
            table
        })
        .collect();

    Ok(AlshIndex {
        config,
        data: ds,
        scale_factor,
        bank,
        tables,
    })
}

impl<T: Scalar> AlshIndex<T> {
    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    /// The original, unscaled dataset.
    pub fn data(&self) -> &Dataset<T> {
        &self.data
    }

    /// Divisor applied to items before hashing (1 in symmetric mode).
    pub fn scale_factor(&self) -> T {
        self.scale_factor
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Sorted multiset of the ids stored in table `l`, across all buckets.
    /// Every id must appear exactly once per table.
    pub fn table_ids(&self, l: usize) -> Vec<u32> {
        let mut ids: Vec<u32> = self.tables[l].values().flatten().copied().collect();
        ids.sort_unstable();
        ids
    }

    pub fn num_buckets(&self, l: usize) -> usize {
        self.tables[l].len()
    }

    fn query_vector(&self, q: &DataVector<T>) -> Result<Vec<T>> {
        if q.dim() != self.data.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.data.dim(),
                got: q.dim(),
            });
        }
        Ok(match &self.config.mode {
            IndexMode::Asymmetric(params) => {
                transform_q(&normalize_query(q)?, params).into_values()
            }
            IndexMode::Symmetric => q.values().to_vec(),
        })
    }

    /// Union of the buckets the query lands in across all tables. Empty
    /// buckets everywhere produce an empty candidate set, not an error.
    pub fn query(&self, q: &DataVector<T>) -> Result<CandidateSet> {
        let qv = self.query_vector(q)?;
        let k = self.config.num_hashes;
        let mut ids = Vec::new();
        let mut probed = 0usize;
        let mut values = vec![0i64; k];
        for (l, table) in self.tables.iter().enumerate() {
            let funcs = &self.bank[l * k..(l + 1) * k];
            for (slot, f) in values.iter_mut().zip(funcs) {
                *slot = hash_value(f, &qv).expect("bank dimension matches");
            }
            if let Some(bucket) = table.get(&meta_key(&values)) {
                probed += 1;
                ids.extend_from_slice(bucket);
            }
        }
        ids.sort_unstable();
        ids.dedup();
        Ok(CandidateSet {
            ids,
            probed_buckets: probed,
        })
    }

    /// Exact inner products of `q` against the candidates, on the original
    /// unscaled vectors, top-`t` with ties to the smaller id. May return fewer
    /// than `t` entries.
    pub fn rank_candidates(
        &self,
        q: &DataVector<T>,
        candidates: &CandidateSet,
        t: usize,
    ) -> Result<TopTResult<T>> {
        if t == 0 {
            return Err(Error::invalid("t", "must be at least 1"));
        }
        if q.dim() != self.data.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.data.dim(),
                got: q.dim(),
            });
        }
        let mut scored = Vec::with_capacity(candidates.len());
        for &id in candidates.ids() {
            let v = self.data.vector(id).ok_or(Error::UnknownItem(id))?;
            scored.push((id, dot(q.values(), v.values())));
        }
        Ok(TopTResult::new(top_t_of(scored, t), t))
    }

    /// Retrieve then re-rank in one call.
    pub fn search(&self, q: &DataVector<T>, t: usize) -> Result<TopTResult<T>> {
        let candidates = self.query(q)?;
        self.rank_candidates(q, &candidates, t)
    }

    /// Serialize the index (hash bank and tables, not the vectors) in the
    /// little-endian snapshot layout. Buckets are written in ascending key
    /// order, so identical indexes produce identical bytes.
    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        let (m, u) = match &self.config.mode {
            IndexMode::Asymmetric(p) => (p.m(), p.u()),
            IndexMode::Symmetric => (0u32, 0.0f64),
        };
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_u32::<LittleEndian>(SNAPSHOT_VERSION)?;
        w.write_u32::<LittleEndian>(self.data.dim() as u32)?;
        w.write_u64::<LittleEndian>(self.data.len() as u64)?;
        w.write_u32::<LittleEndian>(self.config.num_hashes as u32)?;
        w.write_u32::<LittleEndian>(self.config.num_tables as u32)?;
        w.write_u32::<LittleEndian>(m)?;
        w.write_f64::<LittleEndian>(u)?;
        w.write_f64::<LittleEndian>(self.config.r)?;
        w.write_f64::<LittleEndian>(self.scale_factor.as_f64())?;
        w.write_u64::<LittleEndian>(self.config.seed.seed)?;
        w.write_u64::<LittleEndian>(self.config.seed.stream)?;
        for f in &self.bank {
            for &c in f.projection() {
                w.write_f64::<LittleEndian>(c.as_f64())?;
            }
            w.write_f64::<LittleEndian>(f.shift().as_f64())?;
        }
        for table in &self.tables {
            let mut keys: Vec<u64> = table.keys().copied().collect();
            keys.sort_unstable();
            w.write_u64::<LittleEndian>(keys.len() as u64)?;
            for key in keys {
                let bucket = &table[&key];
                w.write_u64::<LittleEndian>(key)?;
                w.write_u32::<LittleEndian>(bucket.len() as u32)?;
                for &id in bucket {
                    w.write_u32::<LittleEndian>(id)?;
                }
            }
        }
        Ok(())
    }

    /// Load a snapshot and bind it to its dataset (the snapshot stores hash
    /// bank and buckets only; exact re-ranking needs the original vectors).
    pub fn load<R: Read>(reader: R, data: Dataset<T>) -> Result<Self> {
        let mut r = CountingReader::new(reader);
        let fail = |offset: u64, reason: String| Error::SnapshotFormat { offset, reason };

        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|e| fail(0, format!("truncated magic: {e}")))?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(fail(0, format!("bad magic {magic:?}")));
        }
        let version = r.read_u32().map_err(|e| fail(r.offset(), e.to_string()))?;
        if version != SNAPSHOT_VERSION {
            return Err(fail(4, format!("unsupported version {version}")));
        }
        let dim = r.read_u32().map_err(|e| fail(r.offset(), e.to_string()))? as usize;
        let n = r.read_u64().map_err(|e| fail(r.offset(), e.to_string()))? as usize;
        let num_hashes = r.read_u32().map_err(|e| fail(r.offset(), e.to_string()))? as usize;
        let num_tables = r.read_u32().map_err(|e| fail(r.offset(), e.to_string()))? as usize;
        let m = r.read_u32().map_err(|e| fail(r.offset(), e.to_string()))?;
        let u = r.read_f64().map_err(|e| fail(r.offset(), e.to_string()))?;
        let width = r.read_f64().map_err(|e| fail(r.offset(), e.to_string()))?;
        let scale_factor = r.read_f64().map_err(|e| fail(r.offset(), e.to_string()))?;
        let seed = r.read_u64().map_err(|e| fail(r.offset(), e.to_string()))?;
        let stream = r.read_u64().map_err(|e| fail(r.offset(), e.to_string()))?;

        if data.dim() != dim {
            return Err(fail(
                8,
                format!("snapshot dimension {dim} but dataset has {}", data.dim()),
            ));
        }
        if data.len() != n {
            return Err(fail(
                12,
                format!("snapshot holds {n} items but dataset has {}", data.len()),
            ));
        }
        if num_hashes == 0 || num_tables == 0 {
            return Err(fail(20, "zero hash or table count".into()));
        }

        let mode = if m == 0 {
            IndexMode::Symmetric
        } else {
            IndexMode::Asymmetric(
                TransformParams::new(m, u)
                    .map_err(|e| fail(28, format!("bad transform parameters: {e}")))?,
            )
        };
        let hash_dim = dim + m as usize;

        let mut bank = Vec::with_capacity(num_tables * num_hashes);
        for _ in 0..num_tables * num_hashes {
            let mut a = Vec::with_capacity(hash_dim);
            for _ in 0..hash_dim {
                let c = r.read_f64().map_err(|e| fail(r.offset(), e.to_string()))?;
                a.push(T::from_f64_exact(c));
            }
            let b = r.read_f64().map_err(|e| fail(r.offset(), e.to_string()))?;
            bank.push(L2HashFunction::from_parts(
                a,
                T::from_f64_exact(b),
                T::from_f64_exact(width),
            ));
        }

        let mut tables = Vec::with_capacity(num_tables);
        for _ in 0..num_tables {
            let buckets = r.read_u64().map_err(|e| fail(r.offset(), e.to_string()))?;
            let mut table = Table::with_capacity(buckets as usize);
            let mut stored = 0usize;
            for _ in 0..buckets {
                let key = r.read_u64().map_err(|e| fail(r.offset(), e.to_string()))?;
                let size = r.read_u32().map_err(|e| fail(r.offset(), e.to_string()))?;
                let mut ids = Vec::with_capacity(size as usize);
                for _ in 0..size {
                    let id = r.read_u32().map_err(|e| fail(r.offset(), e.to_string()))?;
                    if id as usize >= n {
                        return Err(fail(r.offset(), format!("item id {id} out of range")));
                    }
                    ids.push(id);
                }
                stored += ids.len();
                if table.insert(key, ids).is_some() {
                    return Err(fail(r.offset(), format!("duplicate bucket key {key}")));
                }
            }
            if stored != n {
                return Err(fail(
                    r.offset(),
                    format!("table stores {stored} ids, expected {n}"),
                ));
            }
            tables.push(table);
        }

        if !r.at_eof().map_err(Error::Io)? {
            return Err(fail(r.offset(), "trailing bytes after tables".into()));
        }

        Ok(AlshIndex {
            config: IndexConfig {
                num_hashes,
                num_tables,
                r: width,
                mode,
                seed: HashSeed::new(seed, stream),
            },
            data,
            scale_factor: T::from_f64_exact(scale_factor),
            bank,
            tables,
        })
    }
}

/// Parameter suggestion from the standard analysis: `K = ⌈ln n / ln(1/p2)⌉`
/// hashes per table and `L = ⌈n^ρ⌉` tables, floored at 1.
pub fn suggest_kl(n: usize, rho: f64, p2: f64) -> Result<(usize, usize)> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    if !(p2 > 0.0 && p2 < 1.0) {
        return Err(Error::invalid("p2", format!("must lie in (0, 1), got {p2}")));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::invalid("rho", format!("must lie in (0, 1), got {rho}")));
    }
    let k = ((n as f64).ln() / (1.0 / p2).ln()).ceil() as usize;
    let l = (n as f64).powf(rho).ceil() as usize;
    Ok((k.max(1), l.max(1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::inner_product;
    use crate::transform::transformed_distance_sq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_dataset(seed: u64, n: usize, dim: usize, scale: f64) -> Dataset<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Dataset::from_vectors(
            (0..n)
                .map(|_| {
                    DataVector::from_raw(
                        (0..dim)
                            .map(|_| rng.sample::<f64, _>(StandardNormal) * scale)
                            .collect(),
                    )
                })
                .collect(),
        )
        .unwrap()
    }

    fn params() -> TransformParams {
        TransformParams::new(3, 0.83).unwrap()
    }

    #[test]
    fn single_item_index() {
        let ds = Dataset::from_vectors(vec![
            DataVector::new(vec![0.5, 0.1]).unwrap(),
        ])
        .unwrap();
        let config = IndexConfig::asymmetric(4, 8, 2.5, params(), HashSeed::new(1, 0));
        let idx = build_index(ds, config).unwrap();
        for l in 0..8 {
            assert_eq!(idx.num_buckets(l), 1);
            assert_eq!(idx.table_ids(l), vec![0]);
        }
    }

    #[test]
    fn duplicate_vectors_share_buckets() {
        let v = DataVector::new(vec![0.4, -0.2, 0.7]).unwrap();
        let ds = Dataset::from_vectors(vec![v.clone(), v]).unwrap();
        let config = IndexConfig::asymmetric(6, 4, 2.5, params(), HashSeed::new(2, 0));
        let idx = build_index(ds, config).unwrap();
        for l in 0..4 {
            assert_eq!(idx.num_buckets(l), 1, "duplicates must share a key");
        }
    }

    #[test]
    fn per_table_completeness() {
        let ds = random_dataset(3, 1000, 10, 1.0);
        let config = IndexConfig::asymmetric(8, 16, 2.5, params(), HashSeed::new(3, 0));
        let idx = build_index(ds, config).unwrap();
        let expected: Vec<u32> = (0..1000).collect();
        for l in 0..16 {
            assert_eq!(idx.table_ids(l), expected);
        }
    }

    #[test]
    fn builds_are_deterministic() {
        let ds = random_dataset(5, 200, 8, 1.0);
        let config = IndexConfig::asymmetric(4, 6, 2.5, params(), HashSeed::new(9, 4));
        let a = build_index(ds.clone(), config).unwrap();
        let b = build_index(ds, config).unwrap();
        assert_eq!(a.bank, b.bank);
        assert_eq!(a.tables, b.tables);
    }

    #[test]
    fn symmetric_mode_always_self_collides() {
        let ds = random_dataset(7, 50, 6, 1.0);
        let config = IndexConfig::symmetric(8, 2, 2.5, HashSeed::new(11, 0));
        let idx = build_index(ds.clone(), config).unwrap();
        for (id, v) in ds.iter() {
            let cands = idx.query(v).unwrap();
            assert!(cands.contains(id), "symmetric self-collision is certain");
        }
    }

    #[test]
    fn asymmetric_mode_does_not_guarantee_self_collision() {
        // A low-norm item queried by its own direction sits at a strictly
        // positive transformed distance, so a wide-enough meta-hash misses it
        // for some seed.
        let mut misses = 0;
        for seed in 0..40u64 {
            let ds = Dataset::from_vectors(vec![
                DataVector::new(vec![0.05, 0.0]).unwrap(),
                DataVector::new(vec![0.0, 0.8]).unwrap(),
            ])
            .unwrap();
            let config = IndexConfig::asymmetric(16, 1, 2.5, params(), HashSeed::new(seed, 0));
            let idx = build_index(ds, config).unwrap();
            let q = DataVector::new(vec![1.0, 0.0]).unwrap();
            if !idx.query(&q).unwrap().contains(0) {
                misses += 1;
            }
        }
        assert!(misses > 0, "expected at least one self-collision miss");
    }

    #[test]
    fn empty_buckets_yield_empty_candidates() {
        let ds = Dataset::from_vectors(vec![
            DataVector::new(vec![0.8, 0.0]).unwrap(),
        ])
        .unwrap();
        let config = IndexConfig::asymmetric(64, 1, 0.05, params(), HashSeed::new(13, 0));
        let idx = build_index(ds, config).unwrap();
        // A near-orthogonal query with K=64 narrow buckets collides with
        // nothing; that is an empty result, not an error.
        let q = DataVector::new(vec![-0.01, 1.0]).unwrap();
        let cands = idx.query(&q).unwrap();
        assert!(cands.is_empty());
        assert_eq!(cands.probed_buckets(), 0);
    }

    #[test]
    fn candidates_shrink_as_meta_hash_widens() {
        let ds = random_dataset(17, 400, 8, 1.0);
        let q = DataVector::new(vec![0.3, -0.1, 0.5, 0.2, 0.0, 0.4, -0.3, 0.1]).unwrap();
        let seed = HashSeed::new(19, 0);
        let mut prev: Option<Vec<u32>> = None;
        for k in [1usize, 2, 4, 8, 16, 32, 64] {
            let config = IndexConfig::asymmetric(k, 1, 2.5, params(), seed);
            let idx = build_index(ds.clone(), config).unwrap();
            let ids = idx.query(&q).unwrap().ids().to_vec();
            if let Some(prev_ids) = &prev {
                assert!(
                    ids.iter().all(|id| prev_ids.contains(id)),
                    "K={k}: candidates are not a subset of the shorter prefix"
                );
            }
            prev = Some(ids);
        }
        // 64 narrow concatenated hashes on random data leave near-empty buckets.
        assert!(prev.unwrap().len() <= 4);
    }

    #[test]
    fn single_hash_collision_rate_matches_law() {
        // K = L = 1: the retrieval event is exactly one hash collision, so its
        // rate over rebuilt indexes must match the analytic law at the
        // transformed distance.
        let x = DataVector::new(vec![0.4f64, 0.2]).unwrap();
        let ds = Dataset::from_vectors(vec![x.clone()]).unwrap();
        let p = params();
        let q = normalize_query(&x).unwrap();
        let dist = transformed_distance_sq(&q, &x, &p).unwrap().sqrt();
        let expected = crate::l2lsh::collision_probability(dist, 2.5).unwrap();

        let trials = 10_000;
        let mut hits = 0;
        for t in 0..trials {
            let config = IndexConfig::asymmetric(1, 1, 2.5, p, HashSeed::new(23, t as u64));
            let idx = build_index(ds.clone(), config).unwrap();
            if idx.query(&x).unwrap().contains(0) {
                hits += 1;
            }
        }
        let rate = hits as f64 / trials as f64;
        assert!(
            (rate - expected).abs() < 0.02,
            "empirical {rate} vs analytic {expected}"
        );
    }

    #[test]
    fn rank_candidates_matches_subset_brute_force() {
        let ds = random_dataset(29, 300, 8, 1.0);
        let config = IndexConfig::asymmetric(4, 8, 2.5, params(), HashSeed::new(31, 0));
        let idx = build_index(ds.clone(), config).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..20 {
            let q = DataVector::from_raw(
                (0..8).map(|_| rng.sample::<f64, _>(StandardNormal)).collect(),
            );
            let cands = idx.query(&q).unwrap();
            let got = idx.rank_candidates(&q, &cands, 10).unwrap();

            let mut subset: Vec<(u32, f64)> = cands
                .ids()
                .iter()
                .map(|&id| (id, inner_product(&q, ds.vector(id).unwrap()).unwrap()))
                .collect();
            subset.sort_by(|(ia, sa), (ib, sb)| sb.partial_cmp(sa).unwrap().then(ia.cmp(ib)));
            subset.truncate(10);
            assert_eq!(got.entries(), &subset[..]);
        }
    }

    #[test]
    fn rank_all_candidates_reduces_to_brute_force() {
        let ds = random_dataset(41, 120, 6, 1.0);
        let config = IndexConfig::asymmetric(2, 4, 2.5, params(), HashSeed::new(43, 0));
        let idx = build_index(ds.clone(), config).unwrap();
        let q = DataVector::new(vec![0.2, -0.4, 0.1, 0.6, -0.2, 0.3]).unwrap();
        let all = CandidateSet {
            ids: (0..120).collect(),
            probed_buckets: 0,
        };
        let got = idx.rank_candidates(&q, &all, 7).unwrap();
        let oracle = crate::data::brute_force_top_t(&q, &ds, 7).unwrap();
        assert_eq!(got.entries(), oracle.entries());

        let empty = CandidateSet {
            ids: vec![],
            probed_buckets: 0,
        };
        assert!(idx.rank_candidates(&q, &empty, 7).unwrap().is_empty());
    }

    #[test]
    fn retrieval_recall_monotone_in_k_and_l() {
        let ds = random_dataset(47, 500, 10, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let queries: Vec<DataVector<f64>> = (0..2000)
            .map(|_| {
                DataVector::from_raw(
                    (0..10).map(|_| rng.sample::<f64, _>(StandardNormal)).collect(),
                )
            })
            .collect();
        let golds: Vec<u32> = queries
            .iter()
            .map(|q| crate::data::brute_force_top_t(q, &ds, 1).unwrap().entries()[0].0)
            .collect();

        let recall = |k: usize, l: usize| -> f64 {
            let config = IndexConfig::asymmetric(k, l, 2.5, params(), HashSeed::new(59, 0));
            let idx = build_index(ds.clone(), config).unwrap();
            let hits = queries
                .iter()
                .zip(&golds)
                .filter(|(q, gold)| idx.query(q).unwrap().contains(**gold))
                .count();
            hits as f64 / queries.len() as f64
        };

        // 3 standard errors of a mean over 2000 binary outcomes.
        let tol = 3.0 * (0.25f64 / 2000.0).sqrt();
        let r_k: Vec<f64> = [1, 2, 4, 8].iter().map(|&k| recall(k, 4)).collect();
        for pair in r_k.windows(2) {
            assert!(pair[1] <= pair[0] + tol, "recall rose with K: {r_k:?}");
        }
        let r_l: Vec<f64> = [1, 2, 4, 8].iter().map(|&l| recall(4, l)).collect();
        for pair in r_l.windows(2) {
            assert!(pair[1] >= pair[0] - tol, "recall fell with L: {r_l:?}");
        }
    }

    #[test]
    fn snapshot_round_trip_preserves_queries() {
        let ds = random_dataset(61, 250, 7, 1.0);
        let config = IndexConfig::asymmetric(4, 8, 2.5, params(), HashSeed::new(67, 0));
        let idx = build_index(ds.clone(), config).unwrap();

        let mut bytes = Vec::new();
        idx.save(&mut bytes).unwrap();
        let loaded = AlshIndex::load(&bytes[..], ds.clone()).unwrap();

        assert_eq!(idx.bank, loaded.bank);
        assert_eq!(idx.tables, loaded.tables);
        assert_eq!(idx.config, loaded.config);

        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..100 {
            let q = DataVector::from_raw(
                (0..7).map(|_| rng.sample::<f64, _>(StandardNormal)).collect(),
            );
            assert_eq!(idx.query(&q).unwrap(), loaded.query(&q).unwrap());
        }

        // Re-saving the loaded index is byte-identical.
        let mut again = Vec::new();
        loaded.save(&mut again).unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn snapshot_round_trip_symmetric() {
        let ds = random_dataset(73, 90, 5, 1.0);
        let config = IndexConfig::symmetric(3, 5, 1.5, HashSeed::new(79, 0));
        let idx = build_index(ds.clone(), config).unwrap();
        let mut bytes = Vec::new();
        idx.save(&mut bytes).unwrap();
        let loaded = AlshIndex::load(&bytes[..], ds).unwrap();
        assert_eq!(loaded.config.mode, IndexMode::Symmetric);
        assert_eq!(idx.tables, loaded.tables);
    }

    #[test]
    fn snapshot_rejects_corruption() {
        let ds = random_dataset(83, 40, 4, 1.0);
        let config = IndexConfig::asymmetric(2, 2, 2.5, params(), HashSeed::new(89, 0));
        let idx = build_index(ds.clone(), config).unwrap();
        let mut bytes = Vec::new();
        idx.save(&mut bytes).unwrap();

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            AlshIndex::load(&bad_magic[..], ds.clone()).unwrap_err(),
            Error::SnapshotFormat { offset: 0, .. }
        ));

        let truncated = &bytes[..bytes.len() - 3];
        assert!(AlshIndex::<f64>::load(truncated, ds.clone()).is_err());

        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(AlshIndex::<f64>::load(&trailing[..], ds.clone()).is_err());

        let wrong_ds = random_dataset(97, 41, 4, 1.0);
        assert!(AlshIndex::load(&bytes[..], wrong_ds).is_err());
    }

    #[test]
    fn zero_query_rejected_in_asymmetric_mode() {
        let ds = random_dataset(101, 10, 3, 1.0);
        let config = IndexConfig::asymmetric(2, 2, 2.5, params(), HashSeed::new(103, 0));
        let idx = build_index(ds, config).unwrap();
        let zero = DataVector::new(vec![0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(idx.query(&zero).unwrap_err(), Error::ZeroQuery));
    }

    #[test]
    fn suggest_kl_formulas() {
        assert_eq!(suggest_kl(10_000, 0.5, 0.5).unwrap().0, 14);
        assert_eq!(suggest_kl(10_000, 0.5, 0.5).unwrap().1, 100);
        let (k, l) = suggest_kl(1, 0.5, 0.5).unwrap();
        assert!(k >= 1 && l >= 1);
        assert!(suggest_kl(10, 0.5, 0.0).is_err());
        assert!(suggest_kl(10, 0.5, 1.0).is_err());
        assert!(suggest_kl(10, 1.5, 0.5).is_err());
    }

    #[test]
    fn meta_key_depends_on_order_and_values() {
        assert_eq!(meta_key(&[1, 2, 3]), meta_key(&[1, 2, 3]));
        assert_ne!(meta_key(&[1, 2, 3]), meta_key(&[3, 2, 1]));
        assert_ne!(meta_key(&[0]), meta_key(&[0, 0]));
        assert_ne!(meta_key(&[-1]), meta_key(&[1]));
    }
}
