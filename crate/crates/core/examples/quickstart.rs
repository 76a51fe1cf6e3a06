//! Build an index over synthetic data and run one query.
//!
//! ```console
//! cargo run -p alsh-core --example quickstart
//! ```

use alsh_core::index::{build_index, IndexConfig};
use alsh_core::io::gen_synthetic;
use alsh_core::l2lsh::HashSeed;
use alsh_core::tuning::recommended_params;
use alsh_core::{DataVector64, Dataset64};

fn main() -> alsh_core::Result<()> {
    let seed = HashSeed::new(42, 0);
    let ds: Dataset64 = gen_synthetic(10_000, 50, 0.2, 1.0, seed)?;

    let (params, r) = recommended_params();
    let idx = build_index(ds, IndexConfig::asymmetric(8, 32, r, params, seed))?;

    let q = DataVector64::new(vec![0.1; 50])?;
    let candidates = idx.query(&q)?;
    let top = idx.rank_candidates(&q, &candidates, 10)?;

    println!(
        "{} candidates from {} probed buckets",
        candidates.len(),
        candidates.probed_buckets()
    );
    for (rank, (id, score)) in top.entries().iter().enumerate() {
        println!("{:2}. item {id}: {score:.4}", rank + 1);
    }
    Ok(())
}
