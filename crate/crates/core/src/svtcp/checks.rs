//! Set-level class checks on `{B(w) : w in Omega(v)}`.
//!
//! Because `Omega` depends on `v`, the grid margins of the single-tensor
//! checkers do not transfer directly. Verification instead uses a fixed
//! superset or subset of `Omega(v)` that makes the property only harder to
//! satisfy, and refutation searches along rays, where the map settles on its
//! recurrent set. Every refutation is re-validated against the exact
//! `Omega(v)` before it is returned.

use crate::classes::{
    check_r0, check_semipositive, component_lipschitz, support_max, ClassVerdict, GridOutcome,
    GridSearch, SearchBudget, VerdictStatus,
};
use crate::error::{Error, Result};
use crate::search::{for_each_simplex_point, level_resolution, min_component, norm1};
use crate::tcp::{self, SolverConfig};
use crate::tensor::DenseTensor;

use super::{omega::Omega, SvtcpInstance, VectorFamily};

/// Scale ladder for the nonzero-solution search of
/// [`check_zero_unique_solution`].
pub const ZERO_UNIQUE_SCALES: [f64; 5] = [1e-2, 1e-1, 1.0, 1e1, 1e2];

fn tensors_at(inst: &SvtcpInstance, omegas: &[Omega]) -> Result<Vec<DenseTensor>> {
    omegas.iter().map(|w| inst.family().at(w)).collect()
}

/// `max_{k : v_k > 0} min_w (B(w) v^{m-1})_k`.
fn strong_measure(tensors: &[DenseTensor], v: &[f64]) -> f64 {
    let mut worst = vec![f64::INFINITY; v.len()];
    for b in tensors {
        let f = b.contract_vector_unchecked(v);
        worst.iter_mut().zip(&f).for_each(|(a, x)| *a = a.min(*x));
    }
    support_max(v, &worst)
}

/// `max_w max_{k : v_k > 0} (B(w) v^{m-1})_k`.
fn weak_measure(tensors: &[DenseTensor], v: &[f64]) -> f64 {
    tensors
        .iter()
        .map(|b| support_max(v, &b.contract_vector_unchecked(v)))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Checks whether nonzero `v >= 0` violates strong (`strong = true`) or weak
/// set semipositivity with the exact `Omega(v)`. Returns the witnessing
/// parameter values on a violation: for the weak property all of `Omega(v)`;
/// for the strong property a single value if one makes every support
/// component negative, otherwise one value per support component.
pub fn set_semipositive_violation(
    inst: &SvtcpInstance,
    v: &[f64],
    strong: bool,
) -> Result<Option<Vec<Omega>>> {
    inst.check_point(v)?;
    if v.iter().any(|&x| x < 0.0) || v.iter().all(|&x| x == 0.0) {
        return Ok(None);
    }
    let omegas = inst.omega_map().eval(v)?;
    let tensors = tensors_at(inst, &omegas)?;
    if !strong {
        return Ok((weak_measure(&tensors, v) < 0.0).then_some(omegas));
    }
    if strong_measure(&tensors, v) >= 0.0 {
        return Ok(None);
    }
    let values: Vec<Vec<f64>> = tensors.iter().map(|b| b.contract_vector_unchecked(v)).collect();
    if let Some(i) = values.iter().position(|f| support_max(v, f) < 0.0) {
        return Ok(Some(vec![omegas[i].clone()]));
    }
    let mut witnesses = Vec::new();
    for k in (0..v.len()).filter(|&k| v[k] > 0.0) {
        let i = values
            .iter()
            .position(|f| f[k] < 0.0)
            .expect("strong measure is negative");
        super::omega::push_unique(&mut witnesses, &omegas[i]);
    }
    Ok(Some(witnesses))
}

/// Scales `v` by a power of two until no point piece matches, so that
/// `Omega(t v)` is the recurrent set of the ray through `v`.
fn generic_scale(inst: &SvtcpInstance, v: &[f64]) -> Vec<f64> {
    let centers = inst.omega_map().point_centers();
    let mut t = 1.0;
    for _ in 0..64 {
        let scaled: Vec<f64> = v.iter().map(|x| x * t).collect();
        let hit = inst.omega_map().pieces().iter().any(|p| {
            !p.predicate.is_scale_invariant() && p.predicate.matches(&scaled)
        });
        if !hit || centers.is_empty() {
            return scaled;
        }
        t *= 2.0;
    }
    v.to_vec()
}

fn rescale_max(v: &[f64]) -> Vec<f64> {
    let m = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if m > 0.0 {
        v.iter().map(|x| x / m).collect()
    } else {
        v.to_vec()
    }
}

fn set_check(inst: &SvtcpInstance, strong: bool, budget: &SearchBudget) -> Result<ClassVerdict> {
    let name = if strong { "strongly" } else { "weakly" };
    let map = inst.omega_map();

    // exact counterexamples at point pieces first: Omega differs there
    for c in map.point_centers() {
        if let Some(w) = set_semipositive_violation(inst, c, strong)? {
            let mut verdict = ClassVerdict::refuted(
                c.to_vec(),
                format!("not {name} semipositive: violation at a point piece"),
            );
            verdict.witness_omegas = w;
            return Ok(verdict);
        }
    }

    // sound verification through a fixed set: every Omega(v) lies inside the
    // candidates, and always contains the orthant-wide values
    let fixed = if strong {
        map.candidates()
    } else {
        map.always_on_orthant()
    };
    let mut verify_note = None;
    if !fixed.is_empty() {
        let tensors = tensors_at(inst, &fixed)?;
        let shortcut = if strong {
            tensors.iter().all(DenseTensor::is_nonnegative)
        } else {
            tensors.iter().any(DenseTensor::is_nonnegative)
        };
        if shortcut {
            return Ok(ClassVerdict::verified(if strong {
                "every tensor of the family is nonnegative"
            } else {
                "a tensor present at every v >= 0 is nonnegative"
            }));
        }
        let lipschitz = tensors.iter().map(component_lipschitz).fold(0.0, f64::max);
        let measure = |v: &[f64]| {
            if strong {
                strong_measure(&tensors, v)
            } else {
                weak_measure(&tensors, v)
            }
        };
        let never = |_: f64| false;
        let search = GridSearch {
            dim: inst.dim(),
            signed: false,
            measure: &measure,
            is_violation: &never,
            lipschitz: Some(lipschitz),
            refine: None,
        };
        match search.run(budget) {
            GridOutcome::Verified {
                resolution,
                margin,
                bound,
            } => {
                let mut verdict = ClassVerdict::verified(format!(
                    "{name} semipositive over {} fixed parameter values: grid resolution \
                     {resolution}, margin {margin:.6e} exceeds bound {bound:.6e}",
                    fixed.len()
                ));
                verdict.margin = Some(margin);
                return Ok(verdict);
            }
            GridOutcome::Exhausted { best_value, .. } => verify_note = Some(best_value),
            GridOutcome::Violation { .. } => unreachable!("violation predicate is constant false"),
        }
    }

    // refutation along rays, where Omega settles on the recurrent set
    let ray_measure = |v: &[f64]| -> f64 {
        let Ok(omegas) = map.recurrent_set(v) else {
            return f64::INFINITY;
        };
        let Ok(tensors) = tensors_at(inst, &omegas) else {
            return f64::INFINITY;
        };
        if omegas.is_empty() {
            return f64::INFINITY;
        }
        if strong {
            strong_measure(&tensors, v)
        } else {
            weak_measure(&tensors, v)
        }
    };
    let negative = |h: f64| h < 0.0;
    let search = GridSearch {
        dim: inst.dim(),
        signed: false,
        measure: &ray_measure,
        is_violation: &negative,
        lipschitz: None,
        refine: None,
    };
    let outcome = search.run(budget);
    if let GridOutcome::Violation { point, .. } = &outcome {
        let cert = generic_scale(inst, &rescale_max(point));
        if let Some(w) = set_semipositive_violation(inst, &cert, strong)? {
            let mut verdict = ClassVerdict::refuted(
                cert,
                format!(
                    "not {name} semipositive: every support component is negative for {} \
                     parameter value(s) in Omega(v)",
                    if strong { "some" } else { "all" }
                ),
            );
            verdict.witness_omegas = w;
            return Ok(verdict);
        }
    }
    let best = match outcome {
        GridOutcome::Exhausted { best_value, .. } => Some(best_value),
        _ => verify_note,
    };
    let mut verdict = ClassVerdict::unknown(format!(
        "no violation found and the fixed-set bound is inconclusive{}",
        best.map(|b| format!("; best measure {b:.6e}")).unwrap_or_default()
    ));
    verdict.margin = best;
    Ok(verdict)
}

/// Strong set semipositivity: for every nonzero `v >= 0` some `k` with
/// `v_k > 0` has `(B(w) v^{m-1})_k >= 0` for all `w in Omega(v)`.
pub fn check_strongly_semipositive_set(
    inst: &SvtcpInstance,
    budget: &SearchBudget,
) -> Result<ClassVerdict> {
    set_check(inst, true, budget)
}

/// Weak set semipositivity: for every nonzero `v >= 0` some `k` with
/// `v_k > 0` and some `w in Omega(v)` have `(B(w) v^{m-1})_k >= 0`.
pub fn check_weakly_semipositive_set(
    inst: &SvtcpInstance,
    budget: &SearchBudget,
) -> Result<ClassVerdict> {
    set_check(inst, false, budget)
}

fn require_positive_rhs(inst: &SvtcpInstance) -> Result<()> {
    for w in inst.omega_map().candidates() {
        let p = inst.rhs().at(&w)?;
        let min = min_component(&p);
        if min <= 0.0 {
            return Err(Error::NonpositiveRhs { omega: w, min });
        }
    }
    Ok(())
}

/// With `p(w) > 0` on every reachable `w`, zero always solves; this checks
/// that it is the only solution.
///
/// Verified when every reachable `B(w)` is semipositive: a nonzero solution
/// `v` would have `(B(w) v^{m-1})_k = -p_k < 0` on the whole support of `v`.
/// Refutation runs local solves for every reachable `w` from the scale
/// ladder [`ZERO_UNIQUE_SCALES`] times simplex grid points, keeping nonzero
/// solutions with `w in Omega(v)`.
pub fn check_zero_unique_solution(
    inst: &SvtcpInstance,
    budget: &SearchBudget,
) -> Result<ClassVerdict> {
    require_positive_rhs(inst)?;
    let candidates = inst.omega_map().candidates();
    let tol = budget.tol.max(1e-12);
    let nonzero = |v: &[f64]| norm1(v) > 1e-6;

    let refuted = |v: Vec<f64>, w: &Omega| {
        let mut verdict = ClassVerdict::refuted(
            v,
            "nonzero solution with p(w) > 0, so zero is not the unique solution",
        );
        verdict.witness_omegas = vec![w.clone()];
        verdict
    };

    for c in inst.omega_map().point_centers() {
        if nonzero(c) && c.iter().all(|&x| x >= 0.0) {
            if let Some(w) = super::is_svtcp_solution(inst, c, tol)? {
                return Ok(refuted(c.to_vec(), &w));
            }
        }
    }

    let mut grid = Vec::new();
    for_each_simplex_point(inst.dim(), level_resolution(1), |p| grid.push(p.to_vec()));
    let starts: Vec<Vec<f64>> = ZERO_UNIQUE_SCALES
        .iter()
        .flat_map(|&s| grid.iter().map(move |p| p.iter().map(|x| x * s).collect()))
        .collect();
    let cfg = SolverConfig {
        tol,
        seed: budget.seed,
        ..SolverConfig::default()
    };

    let mut all_semipositive = true;
    let mut unknown = false;
    for w in &candidates {
        let tcp_inst = inst.tcp_at(w)?;
        for local in tcp::solve_tcp_from(&tcp_inst, &starts, &cfg)? {
            if !nonzero(&local.v) || !tcp::is_solution(&tcp_inst, &local.v, tol)? {
                continue;
            }
            if inst.omega_map().eval(&local.v)?.contains(w) {
                return Ok(refuted(local.v, w));
            }
        }
        match check_semipositive(tcp_inst.tensor(), false, budget).status {
            VerdictStatus::Verified => {}
            VerdictStatus::Refuted => all_semipositive = false,
            VerdictStatus::Unknown => unknown = true,
        }
    }
    Ok(if all_semipositive && !unknown {
        ClassVerdict::verified(format!(
            "all {} reachable tensors are semipositive and p > 0",
            candidates.len()
        ))
    } else {
        ClassVerdict::unknown(format!(
            "no nonzero solution found over scales {:?}; semipositivity of the reachable tensors \
             not established",
            ZERO_UNIQUE_SCALES
        ))
    })
}

/// Given a weak violator `v` (every support component of `B(w) v^{m-1}` is
/// negative for all `w in Omega(v)`) and `w in Omega(v)`, builds the
/// instance with the constant right-hand side
/// `p_k = -(B(w) v^{m-1})_k` on the support of `v` and
/// `max((B(w) v^{m-1})_k, 0) + 1` elsewhere. `p > 0`, and `v` is a nonzero
/// solution of the new instance.
pub fn rhs_from_weak_violator(
    inst: &SvtcpInstance,
    v: &[f64],
    omega: &[f64],
) -> Result<SvtcpInstance> {
    if set_semipositive_violation(inst, v, false)?.is_none() {
        return Err(Error::InvalidArgument(
            "point does not violate weak set semipositivity".into(),
        ));
    }
    if !inst.omega_map().eval(v)?.iter().any(|w| w.as_slice() == omega) {
        return Err(Error::InvalidArgument("parameter value not in Omega(v)".into()));
    }
    let f = inst.family().at(omega)?.contract_to_vector(v)?;
    let p: Vec<f64> = v
        .iter()
        .zip(&f)
        .map(|(&x, &y)| if x > 0.0 { -y } else { y.max(0.0) + 1.0 })
        .collect();
    SvtcpInstance::new(
        inst.family().clone(),
        VectorFamily::constant(p)?,
        inst.omega_map().clone(),
    )
}

/// Limit-R0: for every `w` in the limit set, `v >= 0`,
/// `B(w) v^{m-1} >= 0` and `B(w) v^m = 0` force `v = 0`. Each limit value is
/// checked with the single-tensor R0 search; a refutation carries the
/// simplex point and the parameter value.
pub fn check_limit_r0(inst: &SvtcpInstance, budget: &SearchBudget) -> Result<ClassVerdict> {
    let limit = inst.omega_map().limit_set();
    if limit.is_empty() {
        return Err(Error::EmptyLimitSet);
    }
    let mut unknown = Vec::new();
    for w in &limit {
        let verdict = check_r0(&inst.family().at(w)?, budget);
        match verdict.status {
            VerdictStatus::Refuted => {
                let mut out = verdict;
                out.detail = format!("R0 fails at a limit parameter value: {}", out.detail);
                out.witness_omegas = vec![w.clone()];
                return Ok(out);
            }
            VerdictStatus::Unknown => unknown.push(w.clone()),
            VerdictStatus::Verified => {}
        }
    }
    Ok(if unknown.is_empty() {
        ClassVerdict::verified(format!(
            "R0 verified at all {} limit parameter values",
            limit.len()
        ))
    } else {
        let mut v = ClassVerdict::unknown(format!(
            "R0 undecided at {} of {} limit parameter values",
            unknown.len(),
            limit.len()
        ));
        v.witness_omegas = unknown;
        v
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svtcp::{LimitSet, OmegaMap, Piece, Predicate, TensorFamily};

    fn budget() -> SearchBudget {
        SearchBudget::default()
    }

    fn instance(family: TensorFamily, p: Vec<f64>, map: OmegaMap) -> SvtcpInstance {
        SvtcpInstance::new(family, VectorFamily::constant(p).unwrap(), map).unwrap()
    }

    fn unit(m: usize, n: usize) -> DenseTensor {
        DenseTensor::unit(m, n).unwrap()
    }

    /// `B(w) = (2w - 1) unit`, `Omega = {0, 1}` everywhere.
    fn signed_family(p: Vec<f64>) -> SvtcpInstance {
        let family = TensorFamily::new(unit(3, 2).scaled(-1.0), vec![unit(3, 2).scaled(2.0)]).unwrap();
        instance(family, p, OmegaMap::constant(1, vec![vec![0.0], vec![1.0]]).unwrap())
    }

    #[test]
    fn constant_unit_family_is_strong() {
        let inst = instance(
            TensorFamily::constant(unit(3, 2)),
            vec![1.0, 1.0],
            OmegaMap::constant(1, vec![vec![0.0], vec![3.0]]).unwrap(),
        );
        assert!(check_strongly_semipositive_set(&inst, &budget()).unwrap().is_verified());
        assert!(check_weakly_semipositive_set(&inst, &budget()).unwrap().is_verified());
    }

    #[test]
    fn signed_family_is_weak_not_strong() {
        let inst = signed_family(vec![1.0, 1.0]);
        let weak = check_weakly_semipositive_set(&inst, &budget()).unwrap();
        assert!(weak.is_verified(), "{weak:?}");
        let strong = check_strongly_semipositive_set(&inst, &budget()).unwrap();
        assert!(strong.is_refuted());
        assert_eq!(strong.certificate.as_deref(), Some(&[1.0, 1.0][..]));
        assert_eq!(strong.witness_omegas, vec![vec![0.0]]);
        let cert = strong.certificate.unwrap();
        assert!(set_semipositive_violation(&inst, &cert, true).unwrap().is_some());
    }

    #[test]
    fn negative_unit_is_not_weak() {
        let inst = instance(
            TensorFamily::constant(unit(3, 2).scaled(-1.0)),
            vec![1.0, 1.0],
            OmegaMap::constant(1, vec![vec![0.0]]).unwrap(),
        );
        let weak = check_weakly_semipositive_set(&inst, &budget()).unwrap();
        assert!(weak.is_refuted());
        assert_eq!(weak.certificate.as_deref(), Some(&[1.0, 1.0][..]));
    }

    #[test]
    fn direction_dependent_map_is_refuted_along_a_ray() {
        // -unit only on the ray through (1, 1); unit elsewhere
        let family = TensorFamily::new(unit(3, 2), vec![unit(3, 2).scaled(-2.0)]).unwrap();
        let map = OmegaMap::new(
            1,
            vec![Piece {
                predicate: Predicate::ConeMatch {
                    direction: vec![1.0, 1.0],
                    angular_tol: 0.0,
                },
                omegas: vec![vec![1.0]],
            }],
            vec![],
            LimitSet::Auto,
        )
        .unwrap();
        let map = map.with_pieces(vec![
            map.pieces()[0].clone(),
            Piece {
                predicate: Predicate::All,
                omegas: vec![vec![0.0]],
            },
        ])
        .unwrap();
        let inst = instance(family, vec![1.0, 1.0], map);
        let strong = check_strongly_semipositive_set(&inst, &budget()).unwrap();
        assert!(strong.is_refuted(), "{strong:?}");
        assert_eq!(strong.witness_omegas, vec![vec![1.0]]);
        // weak holds: w = 0 is always present with the unit tensor
        assert!(check_weakly_semipositive_set(&inst, &budget()).unwrap().is_verified());
    }

    #[test]
    fn zero_unique_examples() {
        let inst = instance(
            TensorFamily::constant(unit(3, 2)),
            vec![1.0, 1.0],
            OmegaMap::constant(1, vec![vec![0.0]]).unwrap(),
        );
        assert!(check_zero_unique_solution(&inst, &budget()).unwrap().is_verified());

        let scalar = instance(
            TensorFamily::constant(DenseTensor::from_vec(3, 1, vec![-1.0]).unwrap()),
            vec![1.0],
            OmegaMap::constant(1, vec![vec![0.0]]).unwrap(),
        );
        let v = check_zero_unique_solution(&scalar, &budget()).unwrap();
        assert!(v.is_refuted());
        assert!((v.certificate.unwrap()[0] - 1.0).abs() < 1e-9);

        let bad = instance(
            TensorFamily::constant(unit(3, 2)),
            vec![1.0, 0.0],
            OmegaMap::constant(1, vec![vec![0.0]]).unwrap(),
        );
        assert!(matches!(
            check_zero_unique_solution(&bad, &budget()),
            Err(Error::NonpositiveRhs { .. })
        ));
    }

    #[test]
    fn weak_violator_construction_gives_nonzero_solution() {
        let base = instance(
            TensorFamily::constant(unit(3, 2).scaled(-1.0)),
            vec![1.0, 1.0],
            OmegaMap::constant(1, vec![vec![0.0]]).unwrap(),
        );
        let v = [0.5, 0.0];
        let built = rhs_from_weak_violator(&base, &v, &[0.0]).unwrap();
        assert_eq!(built.rhs().base(), &[0.25, 1.0]);
        assert!(crate::svtcp::is_svtcp_solution(&built, &v, 1e-12).unwrap().is_some());
        let z = check_zero_unique_solution(&built, &budget()).unwrap();
        assert!(z.is_refuted());
        assert!(rhs_from_weak_violator(&signed_family(vec![1.0, 1.0]), &[1.0, 1.0], &[0.0]).is_err());
    }

    #[test]
    fn limit_r0_examples() {
        let family = TensorFamily::new(DenseTensor::zeros(3, 2).unwrap(), vec![unit(3, 2)]).unwrap();
        let declared = |set: Vec<Omega>| {
            OmegaMap::new(1, vec![], vec![vec![0.0]], LimitSet::Declared(set)).unwrap()
        };
        let ok = instance(family.clone(), vec![1.0, 1.0], declared(vec![vec![1.0]]));
        assert!(check_limit_r0(&ok, &budget()).unwrap().is_verified());

        let bad = instance(family.clone(), vec![1.0, 1.0], declared(vec![vec![0.0]]));
        let v = check_limit_r0(&bad, &budget()).unwrap();
        assert!(v.is_refuted());
        assert_eq!(v.certificate.as_deref(), Some(&[0.5, 0.5][..]));
        assert_eq!(v.witness_omegas, vec![vec![0.0]]);

        let empty = instance(family, vec![1.0, 1.0], declared(vec![]));
        assert_eq!(check_limit_r0(&empty, &budget()), Err(Error::EmptyLimitSet));
    }
}
