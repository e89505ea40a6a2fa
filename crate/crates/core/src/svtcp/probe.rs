//! Ray probes of the merit function `r` for level boundedness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};
use crate::search::norm2;

use super::{svtcp_residual, SvtcpInstance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaProbe {
    pub alpha: f64,
    /// Smallest grid `t` with `r(t d) > alpha`.
    pub first_exceed: Option<f64>,
    /// `r(t_max d) <= alpha`: the ray stays in the level set `{r <= alpha}`
    /// up to the end of the grid.
    pub bounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionProbe {
    pub direction: Vec<f64>,
    pub values: Vec<f64>,
    /// Minimum of `r` over the upper half of the grid.
    pub tail_min: f64,
    pub alphas: Vec<AlphaProbe>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelProbeReport {
    pub t_grid: Vec<f64>,
    pub directions: Vec<DirectionProbe>,
    /// Indices of directions flagged as staying in some level set.
    pub bounded_directions: Vec<usize>,
}

/// Evaluates `r(t d)` along each direction (normalized to unit Euclidean
/// length) for each `t` of the increasing grid `t_grid`, and records for each
/// level `alpha` where the ray leaves the level set. A direction flagged
/// `bounded` at `t_max` witnesses an unbounded level set, up to the grid.
pub fn probe_level_boundedness(
    inst: &SvtcpInstance,
    directions: &[Vec<f64>],
    t_grid: &[f64],
    alphas: &[f64],
) -> Result<LevelProbeReport> {
    check_finite(t_grid, "t grid")?;
    check_finite(alphas, "alpha")?;
    if t_grid.is_empty() || t_grid.iter().any(|&t| t < 0.0) {
        return Err(Error::InvalidArgument("t grid must be nonempty and nonnegative".into()));
    }
    if t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("t grid must be increasing".into()));
    }
    let mut units = Vec::with_capacity(directions.len());
    for d in directions {
        inst.check_point(d)?;
        let norm = norm2(d);
        if norm == 0.0 {
            return Err(Error::ZeroDirection);
        }
        units.push(d.iter().map(|x| x / norm).collect::<Vec<f64>>());
    }

    let probes: Vec<Result<DirectionProbe>> = units
        .into_par_iter()
        .map(|d| {
            let values = t_grid
                .iter()
                .map(|&t| {
                    let v: Vec<f64> = d.iter().map(|x| t * x).collect();
                    svtcp_residual(inst, &v).map(|r| r.value)
                })
                .collect::<Result<Vec<f64>>>()?;
            let tail_min = values[values.len() / 2..]
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            let last = *values.last().expect("grid is nonempty");
            let alphas = alphas
                .iter()
                .map(|&alpha| AlphaProbe {
                    alpha,
                    first_exceed: t_grid
                        .iter()
                        .zip(&values)
                        .find(|(_, &r)| r > alpha)
                        .map(|(&t, _)| t),
                    bounded: last <= alpha,
                })
                .collect();
            Ok(DirectionProbe {
                direction: d,
                values,
                tail_min,
                alphas,
            })
        })
        .collect();
    let directions = probes.into_iter().collect::<Result<Vec<_>>>()?;
    let bounded_directions = directions
        .iter()
        .enumerate()
        .filter(|(_, p)| p.alphas.iter().any(|a| a.bounded))
        .map(|(i, _)| i)
        .collect();
    Ok(LevelProbeReport {
        t_grid: t_grid.to_vec(),
        directions,
        bounded_directions,
    })
}

/// `count` seeded directions in the nonnegative orthant with unit Euclidean
/// norm, sampled as `|N(0, I)|` normalized.
pub fn sample_nonneg_directions(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let d: Vec<f64> = (0..dim)
                .map(|_| {
                    let x: f64 = StandardNormal.sample(&mut rng);
                    x.abs()
                })
                .collect();
            let norm = norm2(&d);
            if norm > 0.0 {
                break d.iter().map(|x| x / norm).collect();
            }
        })
        .collect()
}

/// `10^{e}` for `e = lo, lo + 1/per_decade, .., hi`.
pub fn log_grid(lo: i32, hi: i32, per_decade: usize) -> Vec<f64> {
    let steps = (hi - lo) as usize * per_decade;
    (0..=steps)
        .map(|i| 10f64.powf(lo as f64 + i as f64 / per_decade as f64))
        .collect()
}
