//! Vector file ingestion and synthetic dataset generation.
//!
//! The binary vector format stores 32-bit floats row-major, little-endian,
//! behind a fixed header; CSV files (one vector per line) are accepted as an
//! alternative, selected by file extension. Values are widened to the working
//! precision in memory.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, WriteBytesExt};
use rand::distr::Uniform;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::bytes::CountingReader;
use crate::data::{DataVector, Dataset};
use crate::error::{Error, Result};
use crate::l2lsh::HashSeed;
use crate::scalar::Scalar;

/// Magic prefix of the binary vector format.
pub const VECTOR_MAGIC: &[u8; 4] = b"AVEC";
/// Vector format version this build reads and writes.
pub const VECTOR_VERSION: u32 = 1;
/// Payload element tag: 32-bit IEEE float.
pub const DTYPE_F32: u32 = 1;

/// Write a dataset in the binary vector format (f32 payload).
pub fn write_vectors<T: Scalar, W: Write>(ds: &Dataset<T>, mut w: W) -> Result<()> {
    w.write_all(VECTOR_MAGIC)?;
    w.write_u32::<LittleEndian>(VECTOR_VERSION)?;
    w.write_u32::<LittleEndian>(ds.dim() as u32)?;
    w.write_u64::<LittleEndian>(ds.len() as u64)?;
    w.write_u32::<LittleEndian>(DTYPE_F32)?;
    for v in ds.vectors() {
        for &x in v.values() {
            w.write_f32::<LittleEndian>(x.as_f64() as f32)?;
        }
    }
    Ok(())
}

/// Write a dataset to a file path in the binary format.
pub fn write_vectors_file<T: Scalar>(ds: &Dataset<T>, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_vectors(ds, &mut w)?;
    Ok(())
}

/// Read the binary vector format. Malformed headers and truncated payloads
/// fail with the byte offset; no partial dataset is ever returned.
pub fn read_vectors_bin<T: Scalar, R: Read>(reader: R) -> Result<Dataset<T>> {
    let mut r = CountingReader::new(reader);
    let fail = |offset: u64, reason: String| Error::VectorFileFormat { offset, reason };

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|e| fail(0, format!("truncated magic: {e}")))?;
    if &magic != VECTOR_MAGIC {
        return Err(fail(0, format!("bad magic {magic:?}")));
    }
    let version = r.read_u32().map_err(|e| fail(r.offset(), e.to_string()))?;
    if version != VECTOR_VERSION {
        return Err(fail(4, format!("unsupported version {version}")));
    }
    let dim = r.read_u32().map_err(|e| fail(r.offset(), e.to_string()))? as usize;
    let count = r.read_u64().map_err(|e| fail(r.offset(), e.to_string()))? as usize;
    let dtype = r.read_u32().map_err(|e| fail(r.offset(), e.to_string()))?;
    if dtype != DTYPE_F32 {
        return Err(fail(20, format!("unsupported dtype tag {dtype}")));
    }
    if dim == 0 && count > 0 {
        return Err(fail(8, "zero dimension with non-zero count".into()));
    }

    let mut vectors = Vec::with_capacity(count);
    for _ in 0..count {
        let mut values = Vec::with_capacity(dim);
        for _ in 0..dim {
            let x = r.read_f32().map_err(|e| fail(r.offset(), e.to_string()))?;
            if !x.is_finite() {
                return Err(fail(r.offset(), format!("non-finite value {x}")));
            }
            values.push(T::from_f64_exact(x as f64));
        }
        vectors.push(DataVector::new(values).map_err(|e| fail(r.offset(), e.to_string()))?);
    }
    if !r.at_eof()? {
        return Err(fail(r.offset(), "trailing bytes after payload".into()));
    }
    Dataset::from_vectors_with_dim(vectors, dim)
}

/// Read CSV vectors: one vector per line, comma-separated decimals with a
/// `.` separator, no header. Blank lines are skipped.
pub fn read_vectors_csv<T: Scalar, R: BufRead>(reader: R) -> Result<Dataset<T>> {
    let mut vectors: Vec<DataVector<T>> = Vec::new();
    let mut offset = 0u64;
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        let line_offset = offset;
        offset += line.len() as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let values = line
            .split(',')
            .map(|field| {
                field.trim().parse::<f64>().map(T::from_f64_exact).map_err(|e| {
                    Error::VectorFileFormat {
                        offset: line_offset,
                        reason: format!("line {}: bad number {field:?}: {e}", line_no + 1),
                    }
                })
            })
            .collect::<Result<Vec<T>>>()?;
        let v = DataVector::new(values).map_err(|e| Error::VectorFileFormat {
            offset: line_offset,
            reason: format!("line {}: {e}", line_no + 1),
        })?;
        if let Some(first) = vectors.first() {
            if v.dim() != first.dim() {
                return Err(Error::VectorFileFormat {
                    offset: line_offset,
                    reason: format!(
                        "line {}: dimension {} differs from {}",
                        line_no + 1,
                        v.dim(),
                        first.dim()
                    ),
                });
            }
        }
        vectors.push(v);
    }
    Dataset::from_vectors(vectors)
}

/// Read vectors from a path; `.csv` selects the CSV reader, anything else the
/// binary format.
pub fn read_vectors<T: Scalar>(path: &Path) -> Result<Dataset<T>> {
    let file = File::open(path)?;
    let is_csv = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        read_vectors_csv(BufReader::new(file))
    } else {
        read_vectors_bin(BufReader::new(file))
    }
}

/// Generate `n` vectors with i.i.d. Gaussian directions and norms uniform in
/// `[norm_low, norm_high]`. Stands in for learned latent factors, whose norms
/// vary widely in practice. Deterministic given the seed.
pub fn gen_synthetic<T: Scalar>(
    n: usize,
    dim: usize,
    norm_low: f64,
    norm_high: f64,
    seed: HashSeed,
) -> Result<Dataset<T>> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    if dim == 0 {
        return Err(Error::invalid("dim", "must be at least 1"));
    }
    if !(norm_low > 0.0 && norm_low <= norm_high) {
        return Err(Error::invalid(
            "norm range",
            format!("need 0 < norm_low <= norm_high, got [{norm_low}, {norm_high}]"),
        ));
    }
    let mut rng = seed.rng();
    let norm_dist = if norm_low < norm_high {
        Some(Uniform::new(norm_low, norm_high).expect("validated range"))
    } else {
        None
    };
    let vectors = (0..n)
        .map(|_| {
            let mut dir: Vec<f64>;
            loop {
                dir = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                let norm_sq: f64 = dir.iter().map(|x| x * x).sum();
                if norm_sq > 0.0 {
                    let target = match &norm_dist {
                        Some(d) => rng.sample(d),
                        None => norm_low,
                    };
                    let scale = target / norm_sq.sqrt();
                    return DataVector::from_raw(
                        dir.into_iter().map(|x| T::from_f64_exact(x * scale)).collect(),
                    );
                }
            }
        })
        .collect();
    Dataset::from_vectors(vectors)
}

/// Uniform sample of `count` vectors without replacement (seeded shuffle);
/// returns the whole collection when `count` exceeds it.
pub fn sample_vectors<T: Scalar>(
    ds: &Dataset<T>,
    count: usize,
    seed: HashSeed,
) -> Vec<DataVector<T>> {
    use rand::seq::SliceRandom;
    let mut rng = seed.rng();
    let mut ids: Vec<u32> = (0..ds.len() as u32).collect();
    ids.shuffle(&mut rng);
    ids.truncate(count.min(ds.len()));
    ids.into_iter()
        .map(|id| ds.vector(id).expect("id in range").clone())
        .collect()
}
