//! Collision bounds for the transformed pipeline, the query-time exponent
//! `ρ = log p1 / log p2`, and the constrained grid search for its minimum.
//!
//! An instance is a similarity threshold expressed as a fraction of the norm
//! bound `U` (inner products against a unit query never exceed `U`) together
//! with an approximation ratio `c`. The exponent is driven by the collision
//! probabilities at distance `√(1 + m/4 − 2·S0 + U^(2^(m+1)))` (similar pair,
//! lower bound) and `√(1 + m/4 − 2·c·S0)` (dissimilar pair, upper bound),
//! subject to `c < 1 − U^(2^(m+1))/(2·S0)` so the gap is positive.

use std::io::Write;

use rayon::prelude::*;

use crate::data::DataVector;
use crate::error::{Error, Result};
use crate::l2lsh::{collision_probability, empirical_collision_rate, HashSeed};
use crate::transform::{pow_pow2, transform_p, transform_q, TransformParams};

/// A retrieval instance for the tuner: the similarity threshold as a fraction
/// of the norm bound, and the approximation ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MipsInstance {
    s0_frac: f64,
    c: f64,
}

impl MipsInstance {
    pub fn new(s0_frac: f64, c: f64) -> Result<Self> {
        if !(s0_frac > 0.0 && s0_frac <= 1.0) {
            return Err(Error::invalid(
                "s0_frac",
                format!("threshold fraction must lie in (0, 1], got {s0_frac}"),
            ));
        }
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::invalid(
                "c",
                format!("approximation ratio must lie in (0, 1), got {c}"),
            ));
        }
        Ok(Self { s0_frac, c })
    }

    /// Threshold as a fraction of the norm bound, so `s0 = s0_frac · U`.
    pub fn s0_frac(&self) -> f64 {
        self.s0_frac
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

/// The grid the exponent is minimized over.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    pub u_values: Vec<f64>,
    pub m_values: Vec<u32>,
    pub r_values: Vec<f64>,
}

impl Default for ParamGrid {
    /// U ∈ {0.50, 0.55, …, 0.95}, m ∈ {1, …, 6}, r ∈ {0.5, 1.0, …, 5.0}.
    /// Wide enough to bracket the useful region with margin; override freely.
    fn default() -> Self {
        Self {
            u_values: (0..10).map(|i| 0.50 + 0.05 * i as f64).collect(),
            m_values: (1..=6).collect(),
            r_values: (1..=10).map(|i| 0.5 * i as f64).collect(),
        }
    }
}

impl ParamGrid {
    fn describe(&self) -> String {
        format!(
            "u in {:?}, m in {:?}, r in {:?}",
            self.u_values, self.m_values, self.r_values
        )
    }
}

/// Result of the grid search: the minimal exponent and its argmin.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoSearchResult {
    pub c: f64,
    /// Concrete threshold at the argmin (`s0_frac · best_u`).
    pub s0: f64,
    pub rho_star: f64,
    pub best_u: f64,
    pub best_m: u32,
    pub best_r: f64,
    pub grid_spec: String,
}

fn check_positive_radicand(value: f64, what: &str) -> Result<f64> {
    if value <= 0.0 {
        return Err(Error::Infeasible(format!(
            "{what} = {value} is not positive; degenerate instance"
        )));
    }
    Ok(value)
}

/// Lower bound on the collision probability of a pair at similarity `s0` or
/// better: `F_r(√(1 + m/4 − 2·s0 + u^(2^(m+1))))`.
pub fn p1_bound(s0: f64, u: f64, m: u32, r: f64) -> Result<f64> {
    let radicand = check_positive_radicand(
        1.0 + m as f64 / 4.0 - 2.0 * s0 + pow_pow2(u, m + 1),
        "p1 radicand 1 + m/4 - 2*s0 + u^(2^(m+1))",
    )?;
    collision_probability(radicand.sqrt(), r)
}

/// Upper bound on the collision probability of a pair at similarity `c·s0` or
/// worse: `F_r(√(1 + m/4 − 2·c·s0))`.
pub fn p2_bound(s0: f64, c: f64, m: u32, r: f64) -> Result<f64> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::invalid(
            "c",
            format!("approximation ratio must lie in (0, 1], got {c}"),
        ));
    }
    let radicand = check_positive_radicand(
        1.0 + m as f64 / 4.0 - 2.0 * c * s0,
        "p2 radicand 1 + m/4 - 2*c*s0",
    )?;
    collision_probability(radicand.sqrt(), r)
}

/// Query-time exponent `log p1 / log p2` at one parameter point.
///
/// Fails when `c ≥ 1 − u^(2^(m+1))/(2·s0)`: past that point the dissimilar
/// bound is no smaller than the similar bound and the exponent reaches 1.
pub fn rho(s0: f64, c: f64, u: f64, m: u32, r: f64) -> Result<f64> {
    let error_term = pow_pow2(u, m + 1);
    let c_limit = 1.0 - error_term / (2.0 * s0);
    if c >= c_limit {
        return Err(Error::Infeasible(format!(
            "approximation ratio c = {c} violates c < 1 - u^(2^(m+1))/(2*s0) = {c_limit}"
        )));
    }
    let p1 = p1_bound(s0, u, m, r)?;
    let p2 = p2_bound(s0, c, m, r)?;
    if !(p1 > 0.0 && p1 < 1.0 && p2 > 0.0 && p2 < 1.0) {
        return Err(Error::Infeasible(format!(
            "collision bounds p1 = {p1}, p2 = {p2} must lie strictly in (0, 1)"
        )));
    }
    Ok(p1.ln() / p2.ln())
}

/// Exhaustive minimization of the exponent over the grid, restricted to
/// feasible points (positive gap constraint, positive radicands, and
/// `s0 ≤ u`, which holds by construction since `s0 = s0_frac · u`).
///
/// Ties break to the smallest `m`, then `u`, then `r`, so the result does not
/// depend on evaluation order or worker count.
pub fn rho_star(instance: &MipsInstance, grid: &ParamGrid) -> Result<RhoSearchResult> {
    #[derive(Clone, Copy)]
    struct Point {
        rho: f64,
        m: u32,
        u: f64,
        r: f64,
        s0: f64,
    }

    let points: Vec<(f64, u32, f64)> = grid
        .u_values
        .iter()
        .flat_map(|&u| {
            grid.m_values
                .iter()
                .flat_map(move |&m| grid.r_values.iter().map(move |&r| (u, m, r)))
        })
        .collect();

    let best = points
        .par_iter()
        .filter_map(|&(u, m, r)| {
            if !(u > 0.0 && u < 1.0) || !(r > 0.0) || m < 1 {
                return None;
            }
            let s0 = instance.s0_frac * u;
            rho(s0, instance.c, u, m, r).ok().map(|rho| Point {
                rho,
                m,
                u,
                r,
                s0,
            })
        })
        .min_by(|a, b| {
            a.rho
                .total_cmp(&b.rho)
                .then(a.m.cmp(&b.m))
                .then(a.u.total_cmp(&b.u))
                .then(a.r.total_cmp(&b.r))
        });

    match best {
        Some(p) => Ok(RhoSearchResult {
            c: instance.c,
            s0: p.s0,
            rho_star: p.rho,
            best_u: p.u,
            best_m: p.m,
            best_r: p.r,
            grid_spec: grid.describe(),
        }),
        None => Err(Error::EmptyFeasibleSet(format!(
            "no grid point satisfies c < 1 - u^(2^(m+1))/(2*s0) with positive radicands \
             for s0_frac = {}, c = {} over {}",
            instance.s0_frac,
            instance.c,
            grid.describe()
        ))),
    }
}

/// The parameter set that works well across instances: `m = 3`, `U = 0.83`,
/// bucket width `r = 2.5`.
pub fn recommended_params() -> (TransformParams, f64) {
    (
        TransformParams::new(3, 0.83).expect("recommended parameters are valid"),
        2.5,
    )
}

/// CSV dump of grid-search results: `c,s0,rho_star,u,m,r`.
pub fn write_rho_csv<W: Write>(rows: &[RhoSearchResult], mut w: W) -> std::io::Result<()> {
    writeln!(w, "c,s0,rho_star,u,m,r")?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            row.c, row.s0, row.rho_star, row.best_u, row.best_m, row.best_r
        )?;
    }
    Ok(())
}

/// Monte-Carlo check of the similar-pair bound at its equality point: a unit
/// query and an item with `‖x‖ = u` and `q·x = s0` collide under the
/// transformed pipeline at exactly the bound rate.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineCollisionCheck {
    pub s0: f64,
    pub u: f64,
    pub m: u32,
    pub r: f64,
    pub expected: f64,
    pub empirical: f64,
    pub trials: usize,
}

impl PipelineCollisionCheck {
    pub fn std_err(&self) -> f64 {
        (self.expected * (1.0 - self.expected) / self.trials as f64).sqrt()
    }
}

pub fn bound_equality_check(
    s0: f64,
    u: f64,
    m: u32,
    r: f64,
    trials: usize,
    seed: HashSeed,
) -> Result<PipelineCollisionCheck> {
    if !(s0 > 0.0 && s0 <= u) {
        return Err(Error::invalid(
            "s0",
            format!("equality construction needs 0 < s0 <= u, got s0 = {s0}, u = {u}"),
        ));
    }
    let params = TransformParams::new(m, u)?;
    let q = DataVector::new(vec![1.0f64, 0.0])?;
    let x = DataVector::new(vec![s0, (u * u - s0 * s0).sqrt()])?;
    let qq = transform_q(&q, &params);
    let px = transform_p(&x, &params)?;
    let expected = p1_bound(s0, u, m, r)?;
    let empirical = empirical_collision_rate(qq.values(), px.values(), r, trials, seed)?;
    Ok(PipelineCollisionCheck {
        s0,
        u,
        m,
        r,
        expected,
        empirical,
        trials,
    })
}

/// CSV dump of pipeline collision checks: `s0,u,m,r,expected,empirical,trials`.
pub fn write_pipeline_check_csv<W: Write>(
    rows: &[PipelineCollisionCheck],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "s0,u,m,r,expected,empirical,trials")?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            row.s0, row.u, row.m, row.r, row.expected, row.empirical, row.trials
        )?;
    }
    Ok(())
}
