//! The classical tensor complementarity problem: find `v >= 0` with
//! `F(v) = B v^{m-1} + p >= 0` and `v^T F(v) = 0`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_len, Error, Result};
use crate::search::{dist_inf, dot, min_component, nelder_mead, norm2};
use crate::tensor::DenseTensor;

/// Default absolute tolerance for feasibility and solution checks.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Largest dimension accepted by [`solve_lcp_enum`].
pub const MAX_ENUM_DIM: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct TcpInstance {
    tensor: DenseTensor,
    p: Vec<f64>,
}

impl TcpInstance {
    pub fn new(tensor: DenseTensor, p: Vec<f64>) -> Result<Self> {
        check_len(&p, tensor.dim())?;
        check_finite(&p, "p")?;
        Ok(Self { tensor, p })
    }

    pub fn tensor(&self) -> &DenseTensor {
        &self.tensor
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn dim(&self) -> usize {
        self.tensor.dim()
    }

    pub fn order(&self) -> usize {
        self.tensor.order()
    }

    /// `F(v) = B v^{m-1} + p`.
    pub fn map(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut f = self.tensor.contract_to_vector(v)?;
        f.iter_mut().zip(&self.p).for_each(|(x, q)| *x += q);
        Ok(f)
    }

    fn map_unchecked(&self, v: &[f64]) -> Vec<f64> {
        let mut f = self.tensor.contract_vector_unchecked(v);
        f.iter_mut().zip(&self.p).for_each(|(x, q)| *x += q);
        f
    }

    fn residual_norm_unchecked(&self, v: &[f64]) -> f64 {
        let f = self.map_unchecked(v);
        v.iter()
            .zip(&f)
            .map(|(a, b)| a.min(*b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Componentwise `min(v, B v^{m-1} + p)`.
pub fn natural_residual(inst: &TcpInstance, v: &[f64]) -> Result<Vec<f64>> {
    let f = inst.map(v)?;
    Ok(v.iter().zip(&f).map(|(a, b)| a.min(*b)).collect())
}

pub fn is_feasible(inst: &TcpInstance, v: &[f64], tol: f64) -> Result<bool> {
    let f = inst.map(v)?;
    Ok(min_component(v) >= -tol && min_component(&f) >= -tol)
}

/// Feasible at `tol` and `|v^T F(v)| <= tol (1 + |v|)(1 + |F(v)|)`.
pub fn is_solution(inst: &TcpInstance, v: &[f64], tol: f64) -> Result<bool> {
    let f = inst.map(v)?;
    Ok(solution_test(v, &f, tol))
}

pub(crate) fn solution_test(v: &[f64], f: &[f64], tol: f64) -> bool {
    min_component(v) >= -tol
        && min_component(f) >= -tol
        && dot(v, f).abs() <= tol * (1.0 + norm2(v)) * (1.0 + norm2(f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Solved,
    NoSolutionFound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Diagonal,
    SupportEnum,
    MultiStart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub v: Option<Vec<f64>>,
    /// Euclidean norm of the natural residual at `v` (best value seen when
    /// no solution was found).
    pub residual: f64,
    pub solver: SolverKind,
    pub iterations: usize,
}

impl SolveReport {
    pub fn is_solved(&self) -> bool {
        self.status == SolveStatus::Solved
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub starts: usize,
    /// Iteration cap per local descent.
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            starts: 16,
            max_iters: 2000,
            tol: DEFAULT_TOL,
            seed: 0,
        }
    }
}

/// Closed form for diagonal `B` with positive diagonal `d`:
/// `v_i = (max(0, -p_i) / d_i)^{1/(m-1)}`.
pub fn solve_diagonal(inst: &TcpInstance) -> Result<SolveReport> {
    let b = inst.tensor();
    if !b.is_diagonal() {
        return Err(Error::NotDiagonal);
    }
    let diag = b.diagonal();
    if let Some((index, &value)) = diag.iter().enumerate().find(|(_, &d)| d <= 0.0) {
        return Err(Error::NonpositiveDiagonal { index, value });
    }
    let degree = b.order() - 1;
    let v: Vec<f64> = diag
        .iter()
        .zip(inst.p())
        .map(|(d, q)| {
            let x = (-q).max(0.0) / d;
            match degree {
                0 => 0.0,
                1 => x,
                2 => x.sqrt(),
                3 => x.cbrt(),
                k => x.powf(1.0 / k as f64),
            }
        })
        .collect();
    let residual = inst.residual_norm_unchecked(&v);
    Ok(SolveReport {
        status: SolveStatus::Solved,
        v: Some(v),
        residual,
        solver: SolverKind::Diagonal,
        iterations: 0,
    })
}

/// Exact solver for the linear case (`m = 2`): tries every support `S`,
/// solving `(Bv + p)_S = 0` with `v` zero off `S`. Supports are visited by
/// increasing size, then lexicographically; the first feasible one wins.
pub fn solve_lcp_enum(inst: &TcpInstance) -> Result<SolveReport> {
    solve_lcp_enum_tol(inst, DEFAULT_TOL)
}

pub fn solve_lcp_enum_tol(inst: &TcpInstance, tol: f64) -> Result<SolveReport> {
    let b = inst.tensor();
    if b.order() != 2 {
        return Err(Error::OrderNotTwo(b.order()));
    }
    let n = b.dim();
    if n > MAX_ENUM_DIM {
        return Err(Error::TooLarge {
            found: n,
            max: MAX_ENUM_DIM,
        });
    }
    let m = b.entries();
    let p = inst.p();
    let scale = 1.0 + b.max_abs() + p.iter().fold(0.0, |a: f64, x| a.max(x.abs()));
    let mut tried = 0;
    let mut best = (f64::INFINITY, vec![0.0; n]);
    for size in 0..=n {
        for support in combinations(n, size) {
            tried += 1;
            let mut v = vec![0.0; n];
            if size > 0 {
                let a = DMatrix::from_fn(size, size, |r, c| m[support[r] * n + support[c]]);
                let rhs = DVector::from_iterator(size, support.iter().map(|&i| -p[i]));
                let Some(sol) = a.clone().lu().solve(&rhs) else {
                    continue;
                };
                if !sol.iter().all(|x| x.is_finite()) {
                    continue;
                }
                // near-singular supports produce large linear residuals
                let lin = (&a * &sol - &rhs).amax();
                if lin > 1e-9 * scale * (1.0 + sol.amax()) {
                    continue;
                }
                for (&i, x) in support.iter().zip(sol.iter()) {
                    v[i] = *x;
                }
            }
            let f = inst.map_unchecked(&v);
            if min_component(&v) >= -tol && min_component(&f) >= -tol {
                v.iter_mut().for_each(|x| *x = x.max(0.0));
                let residual = inst.residual_norm_unchecked(&v);
                return Ok(SolveReport {
                    status: SolveStatus::Solved,
                    v: Some(v),
                    residual,
                    solver: SolverKind::SupportEnum,
                    iterations: tried,
                });
            }
            v.iter_mut().for_each(|x| *x = x.max(0.0));
            let r = inst.residual_norm_unchecked(&v);
            if r < best.0 {
                best = (r, v);
            }
        }
    }
    Ok(SolveReport {
        status: SolveStatus::NoSolutionFound,
        v: None,
        residual: best.0,
        solver: SolverKind::SupportEnum,
        iterations: tried,
    })
}

/// All `size`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..size).collect();
    if size > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(pos) = (0..size).rev().find(|&i| cur[i] < n - size + i) else {
            return out;
        };
        cur[pos] += 1;
        for j in pos + 1..size {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Result of one local descent.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSolve {
    /// Projected iterate, `v >= 0`.
    pub v: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

impl LocalSolve {
    pub fn solved(&self, tol: f64) -> bool {
        self.residual <= tol
    }
}

/// Starting points for the multi-start search: `0`, `e`, then `|N(0,1)|`
/// samples drawn from a seeded stream.
pub fn multistart_points(dim: usize, starts: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..starts.max(1))
        .map(|k| match k {
            0 => vec![0.0; dim],
            1 => vec![1.0; dim],
            _ => (0..dim)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z.abs()
                })
                .collect(),
        })
        .collect()
}

/// Multi-start local minimization of `|min(v, F(v))|^2` over `v >= 0`.
/// Returns the first start (in start order) that reaches `cfg.tol`.
pub fn solve_tcp(inst: &TcpInstance, cfg: &SolverConfig) -> Result<SolveReport> {
    validate_config(cfg)?;
    let mut iterations = 0;
    let mut best_residual = f64::INFINITY;
    for start in multistart_points(inst.dim(), cfg.starts, cfg.seed) {
        let local = local_solve(inst, &start, cfg);
        iterations += local.iterations;
        if local.solved(cfg.tol) {
            return Ok(SolveReport {
                status: SolveStatus::Solved,
                v: Some(local.v),
                residual: local.residual,
                solver: SolverKind::MultiStart,
                iterations,
            });
        }
        best_residual = best_residual.min(local.residual);
    }
    Ok(SolveReport {
        status: SolveStatus::NoSolutionFound,
        v: None,
        residual: best_residual,
        solver: SolverKind::MultiStart,
        iterations,
    })
}

/// Runs one local descent from each given start. Starts run in parallel;
/// results come back in start order.
pub fn solve_tcp_from(
    inst: &TcpInstance,
    starts: &[Vec<f64>],
    cfg: &SolverConfig,
) -> Result<Vec<LocalSolve>> {
    validate_config(cfg)?;
    for s in starts {
        check_len(s, inst.dim())?;
        check_finite(s, "start")?;
    }
    Ok(starts
        .par_iter()
        .map(|s| local_solve(inst, s, cfg))
        .collect())
}

/// Distinct solutions reached from the configured multi-start points plus
/// `extra` starts, deduplicated at `dedup_tol` in the max norm, in order of
/// first discovery.
pub fn collect_solutions(
    inst: &TcpInstance,
    cfg: &SolverConfig,
    extra: &[Vec<f64>],
    dedup_tol: f64,
) -> Result<Vec<Vec<f64>>> {
    let mut starts = multistart_points(inst.dim(), cfg.starts, cfg.seed);
    starts.extend(extra.iter().cloned());
    let mut found: Vec<Vec<f64>> = Vec::new();
    for local in solve_tcp_from(inst, &starts, cfg)? {
        if local.solved(cfg.tol) && !found.iter().any(|f| dist_inf(f, &local.v) <= dedup_tol) {
            found.push(local.v);
        }
    }
    Ok(found)
}

fn validate_config(cfg: &SolverConfig) -> Result<()> {
    if cfg.starts == 0 {
        return Err(Error::InvalidArgument("starts must be at least 1".into()));
    }
    if cfg.tol.is_nan() || cfg.tol < 0.0 {
        return Err(Error::InvalidArgument("tol must be nonnegative".into()));
    }
    Ok(())
}

fn project(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.max(0.0)).collect()
}

/// Newton polish, then polytope descent followed by another polish if the
/// first attempt stalls. Keeps the best projected point seen.
pub(crate) fn local_solve(inst: &TcpInstance, start: &[f64], cfg: &SolverConfig) -> LocalSolve {
    let x0 = project(start);
    let mut best = LocalSolve {
        residual: inst.residual_norm_unchecked(&x0),
        v: x0.clone(),
        iterations: 0,
    };
    if best.solved(cfg.tol) {
        return best;
    }
    let mut iterations = 0;
    let consider = |v: Vec<f64>, best: &mut LocalSolve| {
        let v = project(&v);
        let r = inst.residual_norm_unchecked(&v);
        if r < best.residual {
            best.residual = r;
            best.v = v;
        }
    };

    let (v, it) = fb_newton(inst, &x0, 200, cfg.tol);
    iterations += it;
    let (w, it) = newton_polish(inst, &project(&v), 100);
    iterations += it;
    consider(v, &mut best);
    consider(w, &mut best);
    if !best.solved(cfg.tol) {
        let (v, it) = newton_polish(inst, &x0, 100);
        iterations += it;
        consider(v, &mut best);
    }
    if !best.solved(cfg.tol) {
        let phi = |x: &[f64]| {
            let y = project(x);
            inst.residual_norm_unchecked(&y).powi(2)
        };
        let scale = x0.iter().fold(0.0, |a: f64, x| a.max(x.abs()));
        let step = 0.25 * (1.0 + scale);
        let d = nelder_mead(phi, &x0, step, cfg.max_iters, cfg.tol * cfg.tol);
        iterations += d.iterations;
        let (v, it) = newton_polish(inst, &project(&d.x), 100);
        iterations += it;
        consider(d.x, &mut best);
        consider(v, &mut best);
    }
    best.iterations = iterations;
    best
}

/// Semismooth Newton on `H(v) = min(v, F(v))` with an Armijo backtracking
/// line search on `|H|^2`. Rows where `v_i <= F_i` use the identity branch.
fn newton_polish(inst: &TcpInstance, v0: &[f64], max_iters: usize) -> (Vec<f64>, usize) {
    let n = inst.dim();
    let mut v = v0.to_vec();
    let eval = |v: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let f = inst.map_unchecked(v);
        let h = v.iter().zip(&f).map(|(a, b)| a.min(*b)).collect();
        (f, h)
    };
    let (mut f, mut h) = eval(&v);
    let mut merit = dot(&h, &h);
    let mut iterations = 0;
    while iterations < max_iters && merit > 0.0 {
        iterations += 1;
        let jac = inst.tensor().jacobian_unchecked(&v);
        let a = DMatrix::from_fn(n, n, |r, c| {
            if v[r] <= f[r] {
                if r == c {
                    1.0
                } else {
                    0.0
                }
            } else {
                jac[r * n + c]
            }
        });
        let rhs = DVector::from_iterator(n, h.iter().map(|x| -x));
        let Some(dir) = a.lu().solve(&rhs) else {
            break;
        };
        if !dir.iter().all(|x| x.is_finite()) {
            break;
        }
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let trial: Vec<f64> = v.iter().zip(dir.iter()).map(|(x, d)| x + t * d).collect();
            let (ft, ht) = eval(&trial);
            let mt = dot(&ht, &ht);
            if mt <= (1.0 - 1e-4 * t) * merit {
                v = trial;
                f = ft;
                h = ht;
                merit = mt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (v, iterations)
}

/// `phi(a, b) = a + b - sqrt(a^2 + b^2)`, zero iff `a, b >= 0` and `ab = 0`.
fn fischer_burmeister(a: f64, b: f64) -> f64 {
    a + b - a.hypot(b)
}

/// Semismooth Newton on the Fischer-Burmeister system
/// `phi(v_i, F_i(v)) = 0`. Its merit `|Phi|^2 / 2` is smooth, so a gradient
/// step is always available when the Newton direction fails.
fn fb_newton(inst: &TcpInstance, v0: &[f64], max_iters: usize, tol: f64) -> (Vec<f64>, usize) {
    let n = inst.dim();
    let eval = |v: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let f = inst.map_unchecked(v);
        let phi = v.iter().zip(&f).map(|(a, b)| fischer_burmeister(*a, *b)).collect();
        (f, phi)
    };
    let mut v = v0.to_vec();
    let (mut f, mut phi) = eval(&v);
    let mut merit = 0.5 * dot(&phi, &phi);
    let stop = 0.5 * (1e-3 * tol).powi(2);
    let mut iterations = 0;
    while iterations < max_iters && merit > stop {
        iterations += 1;
        let jac = inst.tensor().jacobian_unchecked(&v);
        let a = DMatrix::from_fn(n, n, |r, c| {
            let norm = v[r].hypot(f[r]);
            let (da, db) = if norm > 0.0 {
                (1.0 - v[r] / norm, 1.0 - f[r] / norm)
            } else {
                (1.0 - std::f64::consts::FRAC_1_SQRT_2, 1.0 - std::f64::consts::FRAC_1_SQRT_2)
            };
            let id = if r == c { da } else { 0.0 };
            id + db * jac[r * n + c]
        });
        let phi_vec = DVector::from_column_slice(&phi);
        let grad = a.transpose() * &phi_vec;
        let newton = a.clone().lu().solve(&(-&phi_vec));
        let dir = match newton {
            Some(d)
                if d.iter().all(|x| x.is_finite())
                    && grad.dot(&d) <= -1e-10 * d.norm().powf(2.1) =>
            {
                d
            }
            _ => -grad.clone(),
        };
        let slope = grad.dot(&dir);
        if slope.is_nan() || slope >= 0.0 {
            break;
        }
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-14 {
            let trial: Vec<f64> = v.iter().zip(dir.iter()).map(|(x, d)| x + t * d).collect();
            let (ft, pt) = eval(&trial);
            let mt = 0.5 * dot(&pt, &pt);
            if mt.is_finite() && mt <= merit + 1e-4 * t * slope {
                v = trial;
                f = ft;
                phi = pt;
                merit = mt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (v, iterations)
}
