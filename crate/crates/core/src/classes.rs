//! Semi-decision procedures for structured tensor classes.
//!
//! Every checker returns a [`ClassVerdict`]:
//!
//! - `Refuted` carries a certificate vector that violates the class
//!   definition when plugged back in (see the `*_violation` functions).
//! - `Verified` is backed either by an exact structural rule or by a grid on
//!   the unit simplex whose observed margin beats a Lipschitz bound times the
//!   grid's covering radius.
//! - `Unknown` means the search budget ran out first.
//!
//! The Lipschitz bound for a contraction component on the simplex is
//! `m * max|b| * n^{(m-1)/2}`.
//!
//! P-tensors use the usual definition: `max_k v_k (B v^{m-1})_k > 0` for all
//! `v != 0`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_len, Result};
use crate::search::{
    face_coords, face_point, for_each_simplex_point, level_resolution, min_component, nelder_mead,
    norm1, norm2, simplex_grid_size, simplex_mesh, support_of,
};
use crate::tcp::{self, SolverConfig, TcpInstance};
use crate::tensor::DenseTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Verified,
    Refuted,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassVerdict {
    pub status: VerdictStatus,
    pub certificate: Option<Vec<f64>>,
    /// Parameter values involved in a refutation of a set-level property.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub witness_omegas: Vec<Vec<f64>>,
    /// Observed margin for grid-based verdicts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    pub detail: String,
}

impl ClassVerdict {
    pub fn verified(detail: impl Into<String>) -> Self {
        Self {
            status: VerdictStatus::Verified,
            certificate: None,
            witness_omegas: Vec::new(),
            margin: None,
            detail: detail.into(),
        }
    }

    pub fn refuted(certificate: Vec<f64>, detail: impl Into<String>) -> Self {
        Self {
            status: VerdictStatus::Refuted,
            certificate: Some(certificate),
            witness_omegas: Vec::new(),
            margin: None,
            detail: detail.into(),
        }
    }

    pub fn unknown(detail: impl Into<String>) -> Self {
        Self {
            status: VerdictStatus::Unknown,
            certificate: None,
            witness_omegas: Vec::new(),
            margin: None,
            detail: detail.into(),
        }
    }

    pub fn is_verified(&self) -> bool {
        self.status == VerdictStatus::Verified
    }

    pub fn is_refuted(&self) -> bool {
        self.status == VerdictStatus::Refuted
    }
}

/// Knobs shared by the grid-based checkers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Number of grid refinement levels; level `l` uses resolution `2^{l+1}`.
    pub grid_depth: u32,
    /// Levels whose point count exceeds this are skipped.
    pub max_grid_points: usize,
    /// Number of best grid faces polished by local descent.
    pub polish_starts: usize,
    pub polish_iters: usize,
    /// Tolerance for residual-type refutations.
    pub tol: f64,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            grid_depth: 8,
            max_grid_points: 200_000,
            polish_starts: 8,
            polish_iters: 400,
            tol: 1e-9,
            seed: 0,
        }
    }
}

impl SearchBudget {
    pub fn with_grid_depth(grid_depth: u32) -> Self {
        Self {
            grid_depth,
            ..Self::default()
        }
    }
}

/// Gradient bound of `v -> (B v^{m-1})_k` on the unit simplex.
pub fn component_lipschitz(b: &DenseTensor) -> f64 {
    let m = b.order() as f64;
    let n = b.dim() as f64;
    m * b.max_abs() * n.powf((m - 1.0) / 2.0)
}

fn rescale_max(v: &[f64]) -> Vec<f64> {
    let s = v.iter().fold(0.0, |a: f64, x| a.max(x.abs()));
    if s > 0.0 {
        v.iter().map(|x| x / s).collect()
    } else {
        v.to_vec()
    }
}

// ---------------------------------------------------------------------------
// grid engine

pub(crate) enum GridOutcome {
    Violation {
        point: Vec<f64>,
        value: f64,
    },
    Verified {
        resolution: usize,
        margin: f64,
        bound: f64,
    },
    Exhausted {
        best_value: f64,
        resolution: usize,
    },
}

/// Maps a grid point to an exact nearby candidate, if one exists.
type Refine<'a> = &'a dyn Fn(&[f64]) -> Option<Vec<f64>>;

pub(crate) struct GridSearch<'a> {
    pub dim: usize,
    /// Search the unit l1-sphere (every sign pattern) instead of the simplex.
    pub signed: bool,
    /// Quantity whose small values indicate a violation.
    pub measure: &'a dyn Fn(&[f64]) -> f64,
    pub is_violation: &'a dyn Fn(f64) -> bool,
    /// Lipschitz constant of `measure` on the search set; `None` disables
    /// verification.
    pub lipschitz: Option<f64>,
    /// Optional exact refinement of a promising point.
    pub refine: Option<Refine<'a>>,
}

type FaceKey = (u32, u32);

fn face_key(v: &[f64]) -> FaceKey {
    let mut support = 0u32;
    let mut negative = 0u32;
    for (i, &x) in v.iter().enumerate() {
        if x != 0.0 {
            support |= 1 << i;
        }
        if x < 0.0 {
            negative |= 1 << i;
        }
    }
    (support, negative)
}

impl GridSearch<'_> {
    pub(crate) fn run(&self, budget: &SearchBudget) -> GridOutcome {
        let n = self.dim;
        let mut faces: BTreeMap<FaceKey, (f64, Vec<f64>)> = BTreeMap::new();
        let mut resolution = 0;

        let bary = vec![1.0 / n as f64; n];
        let value = (self.measure)(&bary);
        if (self.is_violation)(value) {
            return GridOutcome::Violation { point: bary, value };
        }
        let mut best: (f64, Vec<f64>) = (value, bary);

        for level in 1..=budget.grid_depth.max(1) {
            let res = level_resolution(level);
            let signs = if self.signed { 1usize << n } else { 1 };
            let count = simplex_grid_size(n, res).saturating_mul(signs);
            if count > budget.max_grid_points {
                break;
            }
            resolution = res;
            let mut level_min = f64::INFINITY;
            let mut signed_pt = vec![0.0; n];
            for_each_simplex_point(n, res, |p| {
                let nnz: Vec<usize> = support_of(p);
                let patterns = if self.signed { 1usize << nnz.len() } else { 1 };
                for mask in 0..patterns {
                    signed_pt.copy_from_slice(p);
                    for (bit, &i) in nnz.iter().enumerate() {
                        if mask & (1 << bit) != 0 {
                            signed_pt[i] = -signed_pt[i];
                        }
                    }
                    let value = (self.measure)(&signed_pt);
                    level_min = level_min.min(value);
                    if value < best.0 {
                        best = (value, signed_pt.clone());
                    }
                    let entry = faces
                        .entry(face_key(&signed_pt))
                        .or_insert((f64::INFINITY, Vec::new()));
                    if value < entry.0 {
                        *entry = (value, signed_pt.clone());
                    }
                }
            });
            if (self.is_violation)(best.0) {
                return GridOutcome::Violation {
                    point: best.1,
                    value: best.0,
                };
            }
            if let Some(lip) = self.lipschitz {
                let bound = lip * simplex_mesh(n, res);
                if level_min > bound {
                    return GridOutcome::Verified {
                        resolution: res,
                        margin: level_min,
                        bound,
                    };
                }
            }
            if level == 1 {
                if let Some(found) = self.polish(&faces, budget) {
                    return found;
                }
            }
        }
        if let Some(found) = self.polish(&faces, budget) {
            return found;
        }
        GridOutcome::Exhausted {
            best_value: best.0,
            resolution,
        }
    }

    fn polish(
        &self,
        faces: &BTreeMap<FaceKey, (f64, Vec<f64>)>,
        budget: &SearchBudget,
    ) -> Option<GridOutcome> {
        let n = self.dim;
        let mut ranked: Vec<&(f64, Vec<f64>)> = faces.values().collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut scratch = Vec::with_capacity(n);
        for (_, start) in ranked.into_iter().take(budget.polish_starts) {
            let mut candidates = Vec::new();
            let support = support_of(start);
            if support.len() > 1 {
                let signs: Vec<f64> = support.iter().map(|&i| start[i].signum()).collect();
                let abs: Vec<f64> = start.iter().map(|x| x.abs()).collect();
                let to_point = |z: &[f64], out: &mut Vec<f64>| {
                    face_point(z, &support, n, out);
                    for (&i, s) in support.iter().zip(&signs) {
                        out[i] *= s;
                    }
                };
                let d = nelder_mead(
                    |z| {
                        let mut pt = Vec::with_capacity(n);
                        to_point(z, &mut pt);
                        (self.measure)(&pt)
                    },
                    &face_coords(&abs, &support),
                    1.0,
                    budget.polish_iters,
                    f64::NEG_INFINITY,
                );
                to_point(&d.x, &mut scratch);
                candidates.push(scratch.clone());
            }
            if let Some(refine) = self.refine {
                if let Some(r) = refine(start) {
                    candidates.push(r);
                }
                if let Some(r) = candidates.first().and_then(|c| refine(c)) {
                    candidates.push(r);
                }
            }
            for c in candidates {
                let value = (self.measure)(&c);
                if (self.is_violation)(value) {
                    return Some(GridOutcome::Violation { point: c, value });
                }
            }
        }
        None
    }
}

fn grid_detail(resolution: usize, margin: f64, bound: f64) -> String {
    format!("grid resolution {resolution}, margin {margin:.6e} exceeds bound {bound:.6e}")
}

fn exhausted_detail(resolution: usize, best: f64) -> String {
    format!("search budget exhausted at grid resolution {resolution}; best measure {best:.6e}")
}

// ---------------------------------------------------------------------------
// measures and certificate checks

/// `max_{k : v_k > 0} (B v^{m-1})_k`, or `+inf` when `v` has no positive
/// component.
pub fn semipositive_measure(b: &DenseTensor, v: &[f64]) -> f64 {
    let f = b.contract_vector_unchecked(v);
    support_max(v, &f)
}

pub(crate) fn support_max(v: &[f64], f: &[f64]) -> f64 {
    if !v.iter().any(|&x| x > 0.0) {
        return f64::INFINITY;
    }
    v.iter()
        .zip(f)
        .filter(|(x, _)| **x > 0.0)
        .map(|(_, y)| *y)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// True when nonzero `v >= 0` violates (strict) semipositivity: every
/// component on the support of `v` is negative (nonpositive when `strict`).
pub fn semipositive_violation(b: &DenseTensor, v: &[f64], strict: bool) -> Result<bool> {
    check_len(v, b.dim())?;
    check_finite(v, "certificate")?;
    if v.iter().any(|&x| x < 0.0) || v.iter().all(|&x| x == 0.0) {
        return Ok(false);
    }
    let h = semipositive_measure(b, v);
    Ok(if strict { h <= 0.0 } else { h < 0.0 })
}

/// `|min(v, B v^{m-1})|`, the residual of the homogeneous problem.
pub fn r0_measure(b: &DenseTensor, v: &[f64]) -> f64 {
    let f = b.contract_vector_unchecked(v);
    v.iter()
        .zip(&f)
        .map(|(x, y)| x.min(*y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// True when `v` is a nonzero solution of the homogeneous problem at `tol`.
pub fn r0_violation(b: &DenseTensor, v: &[f64], tol: f64) -> Result<bool> {
    check_len(v, b.dim())?;
    if norm1(v) == 0.0 {
        return Ok(false);
    }
    let inst = TcpInstance::new(b.clone(), vec![0.0; b.dim()])?;
    tcp::is_solution(&inst, v, tol)
}

/// `max_k v_k (B v^{m-1})_k`.
pub fn p_measure(b: &DenseTensor, v: &[f64]) -> f64 {
    let f = b.contract_vector_unchecked(v);
    v.iter()
        .zip(&f)
        .map(|(x, y)| x * y)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// True when nonzero `v` has `max_k v_k (B v^{m-1})_k <= 0`.
pub fn p_violation(b: &DenseTensor, v: &[f64]) -> Result<bool> {
    check_len(v, b.dim())?;
    check_finite(v, "certificate")?;
    Ok(v.iter().any(|&x| x != 0.0) && p_measure(b, v) <= 0.0)
}

/// True when `v > 0` and `B v^{m-1} > 0`.
pub fn s_certificate_valid(b: &DenseTensor, v: &[f64]) -> Result<bool> {
    let f = b.contract_to_vector(v)?;
    Ok(min_component(v) > 0.0 && min_component(&f) > 0.0)
}

// ---------------------------------------------------------------------------
// checkers

/// Looks for `v > 0` with `B v^{m-1} > 0` by maximizing
/// `min_i (B v^{m-1})_i` over the interior of the simplex. Never refutes.
pub fn check_s_tensor(b: &DenseTensor, budget: &SearchBudget) -> ClassVerdict {
    let n = b.dim();
    let all: Vec<usize> = (0..n).collect();
    let score = |v: &[f64]| min_component(&b.contract_vector_unchecked(v));
    let accept = |v: &[f64]| -> Option<ClassVerdict> {
        let v = rescale_max(v);
        if min_component(&v) > 0.0 && score(&v) > 0.0 {
            let mut verdict = ClassVerdict::verified(format!(
                "certificate with min component of B v^(m-1) = {:.6e}",
                score(&v)
            ));
            verdict.margin = Some(score(&v));
            verdict.certificate = Some(v);
            Some(verdict)
        } else {
            None
        }
    };

    let bary = vec![1.0 / n as f64; n];
    if let Some(v) = accept(&bary) {
        return v;
    }
    let mut starts: Vec<(f64, Vec<f64>)> = vec![(score(&bary), bary)];
    for level in 1..=budget.grid_depth.clamp(1, 3) {
        let res = level_resolution(level);
        if simplex_grid_size(n, res) > budget.max_grid_points {
            break;
        }
        for_each_simplex_point(n, res, |p| {
            if p.iter().all(|&x| x > 0.0) {
                starts.push((score(p), p.to_vec()));
            }
        });
    }
    starts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = starts[0].0;
    for (_, start) in starts.iter() {
        if let Some(v) = accept(start) {
            return v;
        }
    }
    let mut scratch = Vec::with_capacity(n);
    for (_, start) in starts.iter().take(budget.polish_starts.max(1)) {
        let d = nelder_mead(
            |z| {
                let mut pt = Vec::with_capacity(n);
                face_point(z, &all, n, &mut pt);
                -score(&pt)
            },
            &face_coords(start, &all),
            1.0,
            budget.polish_iters,
            f64::NEG_INFINITY,
        );
        face_point(&d.x, &all, n, &mut scratch);
        best = best.max(score(&scratch));
        if let Some(v) = accept(&scratch) {
            return v;
        }
    }
    let mut verdict = ClassVerdict::unknown(format!(
        "no positive certificate found; best min component {best:.6e}"
    ));
    verdict.margin = Some(best);
    verdict
}

/// Semipositivity (`strict = false`) or strict semipositivity.
pub fn check_semipositive(b: &DenseTensor, strict: bool, budget: &SearchBudget) -> ClassVerdict {
    if b.is_nonnegative() {
        if !strict {
            return ClassVerdict::verified("all entries are nonnegative");
        }
        if b.diagonal().iter().all(|&d| d > 0.0) {
            return ClassVerdict::verified("entries are nonnegative and the diagonal is positive");
        }
    }
    let measure = |v: &[f64]| semipositive_measure(b, v);
    let is_violation = |h: f64| if strict { h <= 0.0 } else { h < 0.0 };
    let search = GridSearch {
        dim: b.dim(),
        signed: false,
        measure: &measure,
        is_violation: &is_violation,
        lipschitz: Some(component_lipschitz(b)),
        refine: None,
    };
    finish_grid(search.run(budget), |v| {
        ClassVerdict::refuted(
            rescale_max(v),
            "every component of B v^(m-1) on the support of the certificate is negative"
                .to_string()
                + if strict { " or zero" } else { "" },
        )
    })
}

fn finish_grid(outcome: GridOutcome, refute: impl Fn(&[f64]) -> ClassVerdict) -> ClassVerdict {
    match outcome {
        GridOutcome::Violation { point, value } => {
            let mut v = refute(&point);
            v.margin = Some(value);
            v
        }
        GridOutcome::Verified {
            resolution,
            margin,
            bound,
        } => {
            let mut v = ClassVerdict::verified(grid_detail(resolution, margin, bound));
            v.margin = Some(margin);
            v
        }
        GridOutcome::Exhausted {
            best_value,
            resolution,
            ..
        } => {
            let mut v = ClassVerdict::unknown(exhausted_detail(resolution, best_value));
            v.margin = Some(best_value);
            v
        }
    }
}

/// Gauss-Newton on `F_S(v) = 0, sum(v_S) = 1` with `v` zero off `S`,
/// where `S` is the support of `start`. Returns a simplex point.
fn homogeneous_refine(b: &DenseTensor, start: &[f64]) -> Option<Vec<f64>> {
    let n = b.dim();
    let support = support_of(start);
    if support.is_empty() {
        return None;
    }
    let s = support.len();
    let mut v = start.to_vec();
    for _ in 0..30 {
        let f = b.contract_vector_unchecked(&v);
        let jac = b.jacobian_unchecked(&v);
        let mut res = DVector::from_iterator(s, support.iter().map(|&i| f[i]));
        let sum: f64 = support.iter().map(|&i| v[i]).sum();
        res = res.push(sum - 1.0);
        if res.amax() < 1e-15 {
            break;
        }
        let j = DMatrix::from_fn(s + 1, s, |r, c| {
            if r < s {
                jac[support[r] * n + support[c]]
            } else {
                1.0
            }
        });
        let step = j.svd(true, true).solve(&(-res), 1e-13).ok()?;
        for (&i, d) in support.iter().zip(step.iter()) {
            v[i] += d;
        }
        if !v.iter().all(|x| x.is_finite()) {
            return None;
        }
    }
    if v.iter().any(|&x| x < 0.0) {
        return None;
    }
    let total: f64 = v.iter().sum();
    Some(v.iter().map(|x| x / total).collect())
}

/// R0: the homogeneous problem `TCP(B, 0)` has only the zero solution.
/// By homogeneity the search is restricted to the unit simplex.
pub fn check_r0(b: &DenseTensor, budget: &SearchBudget) -> ClassVerdict {
    if b.is_nonnegative() && b.diagonal().iter().all(|&d| d > 0.0) {
        return ClassVerdict::verified(
            "entries are nonnegative and the diagonal is positive, so every nonzero v >= 0 \
             has a positive component of B v^(m-1) on its support",
        );
    }
    // the solution cone of TCP(B, 0) is unchanged by positive scaling of B,
    // and the margin bound is tightest at max|b| = 1
    let peak = b.max_abs();
    let unit_b = if peak > 0.0 { b.scaled(1.0 / peak) } else { b.clone() };
    let tol = budget.tol;
    let measure = |v: &[f64]| r0_measure(&unit_b, v);
    let is_violation = |f: f64| f <= tol;
    let refine = |v: &[f64]| homogeneous_refine(&unit_b, v);
    let n = b.dim() as f64;
    let search = GridSearch {
        dim: b.dim(),
        signed: false,
        measure: &measure,
        is_violation: &is_violation,
        lipschitz: Some(n.sqrt() * component_lipschitz(&unit_b).max(1.0)),
        refine: Some(&refine),
    };
    finish_grid(search.run(budget), |v| {
        if r0_violation(b, v, tol).unwrap_or(false) {
            ClassVerdict::refuted(
                v.to_vec(),
                format!(
                    "nonzero solution of the homogeneous problem, residual {:.3e}",
                    r0_measure(b, v)
                ),
            )
        } else {
            ClassVerdict::unknown("near-solution found that does not validate at the tolerance")
        }
    })
}

/// For diagonal `B`, `v_k (B v^{m-1})_k = d_k v_k^m`.
fn diagonal_p_verdict(b: &DenseTensor) -> ClassVerdict {
    let n = b.dim();
    let even = b.order().is_multiple_of(2);
    let diag = b.diagonal();
    let bad = diag.iter().position(|&d| d <= 0.0);
    match (bad, even) {
        (None, true) => {
            let mut v = ClassVerdict::verified(
                "diagonal with positive entries and even order: v_k (B v^(m-1))_k = d_k v_k^m",
            );
            v.margin = diag.iter().copied().reduce(f64::min);
            v
        }
        (Some(k), _) => {
            let mut cert = vec![0.0; n];
            cert[k] = 1.0;
            ClassVerdict::refuted(cert, format!("diagonal entry {} is not positive", k + 1))
        }
        (None, false) => {
            let mut cert = vec![0.0; n];
            cert[0] = -1.0;
            ClassVerdict::refuted(cert, "diagonal with odd order: -e_1 gives -d_1 < 0")
        }
    }
}

/// P property on the unit l1-sphere, all sign patterns.
pub fn check_p_tensor(b: &DenseTensor, budget: &SearchBudget) -> ClassVerdict {
    if b.is_diagonal() {
        return diagonal_p_verdict(b);
    }
    let measure = |v: &[f64]| p_measure(b, v);
    let is_violation = |g: f64| g <= 0.0;
    let search = GridSearch {
        dim: b.dim(),
        signed: true,
        measure: &measure,
        is_violation: &is_violation,
        lipschitz: Some(b.max_abs() + component_lipschitz(b)),
        refine: None,
    };
    finish_grid(search.run(budget), |v| {
        ClassVerdict::refuted(
            rescale_max(v),
            "max_k v_k (B v^(m-1))_k is not positive at the certificate",
        )
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolProbeEntry {
    pub scale: f64,
    pub solved: bool,
    pub v: Vec<f64>,
    pub residual: f64,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolProbeReport {
    pub entries: Vec<SolProbeEntry>,
    /// Largest norm among solved entries, `None` if nothing was solved.
    pub max_norm: Option<f64>,
}

/// Runs one local solve from `t * e` for each scale `t` and records the
/// solutions reached. On an R0 tensor the solution set is bounded, so the
/// recorded norms should stay bounded as the scales grow.
pub fn probe_sol_boundedness(
    inst: &TcpInstance,
    scales: &[f64],
    cfg: &SolverConfig,
) -> Result<SolProbeReport> {
    check_finite(scales, "scales")?;
    let starts: Vec<Vec<f64>> = scales.iter().map(|&t| vec![t; inst.dim()]).collect();
    let locals = tcp::solve_tcp_from(inst, &starts, cfg)?;
    let entries: Vec<SolProbeEntry> = scales
        .iter()
        .zip(locals)
        .map(|(&scale, l)| SolProbeEntry {
            scale,
            solved: l.solved(cfg.tol),
            norm: norm2(&l.v),
            residual: l.residual,
            v: l.v,
        })
        .collect();
    let max_norm = entries
        .iter()
        .filter(|e| e.solved)
        .map(|e| e.norm)
        .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))));
    Ok(SolProbeReport { entries, max_norm })
}
