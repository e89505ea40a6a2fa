//! The set-valued problem `SVTCP(B(w), p(w), Omega)`.
//!
//! `B(w) = B0 + sum_j w_j B_j` and `p(w) = p0 + sum_j w_j P_j` are affine in
//! the parameter `w in R^k`; `Omega` is an [`OmegaMap`]. A point `v` solves
//! the problem when some `w in Omega(v)` makes `v` a solution of the
//! single-tensor problem `TCP(B(w), p(w))`.
//!
//! The parameter dimension is called `k` throughout to keep `m` for the
//! tensor order.

mod checks;
mod omega;
mod probe;

pub use checks::{
    check_limit_r0, check_strongly_semipositive_set, check_weakly_semipositive_set,
    check_zero_unique_solution, rhs_from_weak_violator, set_semipositive_violation,
    ZERO_UNIQUE_SCALES,
};
pub use omega::{
    LimitSet, Omega, OmegaMap, Piece, Predicate, DEFAULT_POINT_TOL, MIN_ANGULAR_TOL,
};
pub use probe::{
    log_grid, probe_level_boundedness, sample_nonneg_directions, AlphaProbe, DirectionProbe,
    LevelProbeReport,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_len, Error, Result};
use crate::search::{dist_inf, min_component, norm2};
use crate::tcp::{self, SolverConfig, TcpInstance};
use crate::tensor::DenseTensor;

/// Margin used for strict inequalities (`v > 0`, `B(w) v^{m-1} > 0`).
pub const STRICT_MARGIN: f64 = 1e-9;

/// `B(w) = base + sum_j w_j coeffs[j]`. An empty coefficient list means the
/// family is constant.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorFamily {
    base: DenseTensor,
    coeffs: Vec<DenseTensor>,
}

impl TensorFamily {
    pub fn new(base: DenseTensor, coeffs: Vec<DenseTensor>) -> Result<Self> {
        for c in &coeffs {
            if c.order() != base.order() {
                return Err(Error::InvalidArgument(format!(
                    "coefficient order {} differs from base order {}",
                    c.order(),
                    base.order()
                )));
            }
            if c.dim() != base.dim() {
                return Err(Error::DimensionMismatch {
                    expected: base.dim(),
                    found: c.dim(),
                });
            }
        }
        Ok(Self { base, coeffs })
    }

    pub fn constant(base: DenseTensor) -> Self {
        Self {
            base,
            coeffs: Vec::new(),
        }
    }

    pub fn base(&self) -> &DenseTensor {
        &self.base
    }

    pub fn coeffs(&self) -> &[DenseTensor] {
        &self.coeffs
    }

    pub fn order(&self) -> usize {
        self.base.order()
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn at(&self, omega: &[f64]) -> Result<DenseTensor> {
        check_finite(omega, "omega")?;
        if self.coeffs.is_empty() {
            return Ok(self.base.clone());
        }
        if omega.len() != self.coeffs.len() {
            return Err(Error::OmegaDimMismatch {
                expected: self.coeffs.len(),
                found: omega.len(),
            });
        }
        let mut out = self.base.clone();
        for (w, c) in omega.iter().zip(&self.coeffs) {
            if *w != 0.0 {
                out = out.add_scaled(c, *w)?;
            }
        }
        Ok(out)
    }
}

/// `p(w) = base + sum_j w_j coeffs[j]`; each coefficient is a column of
/// length `n`. An empty coefficient list means the family is constant.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFamily {
    base: Vec<f64>,
    coeffs: Vec<Vec<f64>>,
}

impl VectorFamily {
    pub fn new(base: Vec<f64>, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        check_finite(&base, "p base")?;
        for c in &coeffs {
            check_len(c, base.len())?;
            check_finite(c, "p coefficient")?;
        }
        Ok(Self { base, coeffs })
    }

    pub fn constant(base: Vec<f64>) -> Result<Self> {
        Self::new(base, Vec::new())
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn at(&self, omega: &[f64]) -> Result<Vec<f64>> {
        check_finite(omega, "omega")?;
        if self.coeffs.is_empty() {
            return Ok(self.base.clone());
        }
        if omega.len() != self.coeffs.len() {
            return Err(Error::OmegaDimMismatch {
                expected: self.coeffs.len(),
                found: omega.len(),
            });
        }
        let mut out = self.base.clone();
        for (w, c) in omega.iter().zip(&self.coeffs) {
            out.iter_mut().zip(c).for_each(|(o, x)| *o += w * x);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvtcpInstance {
    family: TensorFamily,
    rhs: VectorFamily,
    omega: OmegaMap,
}

impl SvtcpInstance {
    pub fn new(family: TensorFamily, rhs: VectorFamily, omega: OmegaMap) -> Result<Self> {
        if rhs.dim() != family.dim() {
            return Err(Error::DimensionMismatch {
                expected: family.dim(),
                found: rhs.dim(),
            });
        }
        let k = omega.omega_dim();
        for found in [family.coeffs().len(), rhs.coeffs().len()] {
            if found != 0 && found != k {
                return Err(Error::OmegaDimMismatch { expected: k, found });
            }
        }
        omega.validate_dim(family.dim())?;
        Ok(Self { family, rhs, omega })
    }

    pub fn family(&self) -> &TensorFamily {
        &self.family
    }

    pub fn rhs(&self) -> &VectorFamily {
        &self.rhs
    }

    pub fn omega_map(&self) -> &OmegaMap {
        &self.omega
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    pub fn order(&self) -> usize {
        self.family.order()
    }

    /// `TCP(B(w), p(w))`.
    pub fn tcp_at(&self, omega: &[f64]) -> Result<TcpInstance> {
        TcpInstance::new(self.family.at(omega)?, self.rhs.at(omega)?)
    }

    fn check_point(&self, v: &[f64]) -> Result<()> {
        check_len(v, self.dim())?;
        check_finite(v, "v")
    }
}

/// `Omega(v)`.
pub fn omega_of(inst: &SvtcpInstance, v: &[f64]) -> Result<Vec<Omega>> {
    inst.check_point(v)?;
    inst.omega.eval(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeritValue {
    pub value: f64,
    /// First parameter value attaining the minimum.
    pub omega: Omega,
}

/// Merit function `r(v) = min_{w in Omega(v)} |min(v, B(w) v^{m-1} + p(w))|_2`.
pub fn svtcp_residual(inst: &SvtcpInstance, v: &[f64]) -> Result<MeritValue> {
    let omegas = omega_of(inst, v)?;
    let mut best: Option<MeritValue> = None;
    for w in omegas {
        let r = norm2(&tcp::natural_residual(&inst.tcp_at(&w)?, v)?);
        if best.as_ref().is_none_or(|b| r < b.value) {
            best = Some(MeritValue { value: r, omega: w });
        }
    }
    Ok(best.expect("omega_of never returns an empty set"))
}

/// First `w in Omega(v)` for which `v` solves `TCP(B(w), p(w))` at `tol`.
pub fn is_svtcp_solution(inst: &SvtcpInstance, v: &[f64], tol: f64) -> Result<Option<Omega>> {
    for w in omega_of(inst, v)? {
        if tcp::is_solution(&inst.tcp_at(&w)?, v, tol)? {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvtcpSolveConfig {
    pub solver: SolverConfig,
    /// Cap on the number of parameter values examined.
    pub max_omegas: usize,
    /// Max-norm distance under which two solutions with the same parameter
    /// are merged.
    pub dedup_tol: f64,
}

impl Default for SvtcpSolveConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            max_omegas: 64,
            dedup_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionPair {
    pub v: Vec<f64>,
    pub omega: Omega,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvtcpSolution {
    pub pairs: Vec<SolutionPair>,
    pub omegas_examined: usize,
    /// False when `max_omegas` cut the candidate list short.
    pub complete: bool,
}

/// Solves through the decomposition
/// `SOL = union_w [SOL(B(w), p(w)) intersected with Omega^{-1}(w)]`: for
/// every parameter value the map can return, solves the single-tensor
/// problem and keeps the solutions `v` with `w in Omega(v)`.
pub fn solve_svtcp(inst: &SvtcpInstance, cfg: &SvtcpSolveConfig) -> Result<SvtcpSolution> {
    let candidates = inst.omega.candidates();
    let complete = candidates.len() <= cfg.max_omegas;
    let examined: Vec<Omega> = candidates.into_iter().take(cfg.max_omegas).collect();
    let centers: Vec<Vec<f64>> = inst
        .omega
        .point_centers()
        .into_iter()
        .map(<[f64]>::to_vec)
        .collect();

    let per_omega: Vec<Result<Vec<SolutionPair>>> = examined
        .par_iter()
        .map(|w| solutions_at(inst, w, &centers, cfg))
        .collect();

    let mut pairs: Vec<SolutionPair> = Vec::new();
    for found in per_omega {
        for pair in found? {
            let dup = pairs
                .iter()
                .any(|p| p.omega == pair.omega && dist_inf(&p.v, &pair.v) <= cfg.dedup_tol);
            if !dup {
                pairs.push(pair);
            }
        }
    }
    Ok(SvtcpSolution {
        pairs,
        omegas_examined: examined.len(),
        complete,
    })
}

fn solutions_at(
    inst: &SvtcpInstance,
    w: &[f64],
    centers: &[Vec<f64>],
    cfg: &SvtcpSolveConfig,
) -> Result<Vec<SolutionPair>> {
    let tcp_inst = inst.tcp_at(w)?;
    let tol = cfg.solver.tol;
    let mut found = tcp::collect_solutions(&tcp_inst, &cfg.solver, centers, cfg.dedup_tol)?;
    let b = tcp_inst.tensor();
    if b.is_diagonal() && b.diagonal().iter().all(|&d| d > 0.0) {
        if let Some(v) = tcp::solve_diagonal(&tcp_inst)?.v {
            found.push(v);
        }
    }
    if b.order() == 2 && b.dim() <= tcp::MAX_ENUM_DIM {
        if let Some(v) = tcp::solve_lcp_enum_tol(&tcp_inst, tol)?.v {
            found.push(v);
        }
    }
    for c in centers {
        if tcp::is_solution(&tcp_inst, c, tol)? {
            found.push(c.clone());
        }
    }
    let mut out: Vec<SolutionPair> = Vec::new();
    for v in found {
        if !tcp::is_solution(&tcp_inst, &v, tol)? {
            continue;
        }
        let in_preimage = match inst.omega.eval(&v) {
            Ok(set) => set.iter().any(|x| x.as_slice() == w),
            Err(Error::EmptyOmega) => false,
            Err(e) => return Err(e),
        };
        if in_preimage && !out.iter().any(|p| dist_inf(&p.v, &v) <= cfg.dedup_tol) {
            out.push(SolutionPair {
                v,
                omega: w.to_vec(),
            });
        }
    }
    Ok(out)
}

fn strictly_positive_at(inst: &SvtcpInstance, v: &[f64], margin: f64) -> Result<Option<Omega>> {
    for w in omega_of(inst, v)? {
        let f = inst.family.at(&w)?.contract_to_vector(v)?;
        if min_component(&f) > margin {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

/// Membership in `C = {v > 0 : B(w) v^{m-1} > 0 for some w in Omega(v)}`,
/// strict inequalities taken with `margin`. Returns the witness.
pub fn membership_c(inst: &SvtcpInstance, v: &[f64], margin: f64) -> Result<Option<Omega>> {
    inst.check_point(v)?;
    if min_component(v) <= margin {
        return Ok(None);
    }
    strictly_positive_at(inst, v, margin)
}

/// Membership in `C' = {v >= 0, v != 0 : B(w) v^{m-1} > 0 for some
/// w in Omega(v)}`.
pub fn membership_cprime(inst: &SvtcpInstance, v: &[f64], margin: f64) -> Result<Option<Omega>> {
    inst.check_point(v)?;
    if min_component(v) < 0.0 || v.iter().all(|x| x.abs() <= margin) {
        return Ok(None);
    }
    strictly_positive_at(inst, v, margin)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Promotion {
    Found { v: Vec<f64>, t: f64, omega: Omega },
    NotFound,
}

/// `t = 2^0, 2^-1, .., 2^-30`.
pub fn default_promotion_schedule() -> Vec<f64> {
    (0..=30).map(|k| 0.5f64.powi(k)).collect()
}

/// Moves a point of `C'` into `C` along `v + t e`, scanning `schedule` in
/// the given (decreasing) order. Fails with [`Error::NotInCprime`] unless
/// `w` witnesses `v in C'`. `NotFound` is a legitimate outcome when `Omega`
/// loses the witness off the point.
pub fn promote_cprime_to_c(
    inst: &SvtcpInstance,
    v: &[f64],
    w: &[f64],
    schedule: &[f64],
    margin: f64,
) -> Result<Promotion> {
    inst.check_point(v)?;
    let in_omega = omega_of(inst, v)?.iter().any(|x| x.as_slice() == w);
    let f = inst.family.at(w)?.contract_to_vector(v)?;
    let nonzero = v.iter().any(|x| x.abs() > margin);
    if !in_omega || min_component(v) < 0.0 || !nonzero || min_component(&f) <= margin {
        return Err(Error::NotInCprime);
    }
    if let Some(omega) = membership_c(inst, v, margin)? {
        return Ok(Promotion::Found {
            v: v.to_vec(),
            t: 0.0,
            omega,
        });
    }
    for &t in schedule {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("schedule entry {t}")));
        }
        let shifted: Vec<f64> = v.iter().map(|x| x + t).collect();
        if let Some(omega) = membership_c(inst, &shifted, margin)? {
            return Ok(Promotion::Found {
                v: shifted,
                t,
                omega,
            });
        }
    }
    Ok(Promotion::NotFound)
}

/// Parameter values hit infinitely often along the ray `{n v0}`.
pub fn recurrent_omega_set(inst: &SvtcpInstance, v0: &[f64]) -> Result<Vec<Omega>> {
    inst.check_point(v0)?;
    inst.omega.recurrent_set(v0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayFeasible {
    pub scale: u64,
    pub point: Vec<f64>,
    pub omega: Omega,
}

/// Walks `n = 1, 2, .., n_max` along `n v0` until
/// `B(w0) (n v0)^{m-1} + p(w0) > 0` with `w0 in Omega(n v0)`, giving a
/// feasible point. Requires `v0 >= 0`, `w0` recurrent along the ray and
/// `B(w0) v0^{m-1} > 0`; each failed hypothesis has its own error.
pub fn feasibility_ray_search(
    inst: &SvtcpInstance,
    v0: &[f64],
    w0: &[f64],
    n_max: u64,
    margin: f64,
) -> Result<Option<RayFeasible>> {
    inst.check_point(v0)?;
    if v0.iter().all(|&x| x == 0.0) {
        return Err(Error::ZeroDirection);
    }
    if min_component(v0) < 0.0 {
        return Err(Error::NegativeDirection);
    }
    if !recurrent_omega_set(inst, v0)?.iter().any(|x| x.as_slice() == w0) {
        return Err(Error::NotRecurrent(w0.to_vec()));
    }
    let tcp_inst = inst.tcp_at(w0)?;
    let dir = tcp_inst.tensor().contract_to_vector(v0)?;
    if min_component(&dir) <= margin {
        return Err(Error::NotStrictlyPositive(min_component(&dir)));
    }
    for n in 1..=n_max {
        let point: Vec<f64> = v0.iter().map(|x| n as f64 * x).collect();
        let f = tcp_inst.map(&point)?;
        if min_component(&f) > margin && inst.omega.eval(&point)?.iter().any(|x| x.as_slice() == w0)
        {
            return Ok(Some(RayFeasible {
                scale: n,
                point,
                omega: w0.to_vec(),
            }));
        }
    }
    Ok(None)
}
