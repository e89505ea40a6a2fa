//! Acceptance criteria 1-9, one `[PASS]` / `[FAIL]` line each.

use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use svtcp_core::classes::{
    check_p_tensor, check_r0, check_s_tensor, check_semipositive, p_violation, r0_violation,
    semipositive_violation,
};
use svtcp_core::io::{load_instance, Instance, Report};
use svtcp_core::svtcp::{
    check_limit_r0, check_strongly_semipositive_set, check_weakly_semipositive_set,
    check_zero_unique_solution, is_svtcp_solution, log_grid, probe_level_boundedness,
    sample_nonneg_directions, solve_svtcp, svtcp_residual, LimitSet, SvtcpSolveConfig,
};
use svtcp_core::tcp::{is_solution, natural_residual, solve_diagonal, solve_lcp_enum, solve_tcp};
use svtcp_core::tensor::DEFAULT_PRODUCT_BUDGET;
use svtcp_core::{
    DenseTensor, OmegaMap, Piece, Predicate, SearchBudget, SolverConfig, SvtcpInstance,
    TcpInstance, TensorFamily, VectorFamily,
};

const ORACLE_DV: f64 = 1e-6;
const RESIDUAL_TOL: f64 = 1e-8;
const ALGEBRA_TOL: f64 = 1e-10;

type Check = Result<String, String>;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn svtcp_fixture(name: &str) -> SvtcpInstance {
    match load_instance(fixture(name)).unwrap() {
        Instance::Svtcp(s) => s,
        other => panic!("{name} is a {:?} instance", other.kind()),
    }
}

fn cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("svtcp").chain(args.iter().copied());
    let code = svtcp_cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap())
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took <= limit, || format!("took {took:?}, limit {limit:?}"))
}

// ---------------------------------------------------------------------------

fn diagonal_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_dv: f64 = 0.0;
    let mut worst_res: f64 = 0.0;
    for case in 0..100 {
        let n = rng.random_range(1..=4);
        let m = rng.random_range(3..=4);
        let diag: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..5.0)).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..=5.0)).collect();
        let inst = TcpInstance::new(DenseTensor::make_diagonal(m, n, &diag).unwrap(), p).unwrap();
        let exact = solve_diagonal(&inst).unwrap().v.unwrap();
        let report = solve_tcp(&inst, &SolverConfig::default()).unwrap();
        let v = report.v.ok_or_else(|| format!("case {case}: no solution found"))?;
        let dv = v.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let res = norm2(&natural_residual(&inst, &v).unwrap());
        ensure(dv <= ORACLE_DV, || format!("case {case}: |dv| = {dv:e}"))?;
        ensure(res <= RESIDUAL_TOL, || format!("case {case}: residual {res:e}"))?;
        worst_dv = worst_dv.max(dv);
        worst_res = worst_res.max(res);
    }
    within(start, Duration::from_secs(10))?;
    Ok(format!(
        "100 instances, max |dv| = {worst_dv:e}, max residual = {worst_res:e}, {:.2?}",
        start.elapsed()
    ))
}

fn lcp_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut solvable = 0;
    for case in 0..50 {
        let n = rng.random_range(1..=4);
        let b: Vec<f64> = (0..n * n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let inst = TcpInstance::new(DenseTensor::from_vec(2, n, b).unwrap(), p).unwrap();
        let exact = solve_lcp_enum(&inst).unwrap();
        let Some(ve) = exact.v else { continue };
        solvable += 1;
        ensure(is_solution(&inst, &ve, RESIDUAL_TOL).unwrap(), || {
            format!("case {case}: enumeration output does not validate")
        })?;
        let report = solve_tcp(&inst, &SolverConfig::default()).unwrap();
        let v = report.v.ok_or_else(|| format!("case {case}: multistart found no solution"))?;
        let res = norm2(&natural_residual(&inst, &v).unwrap());
        ensure(res <= RESIDUAL_TOL, || format!("case {case}: residual {res:e}"))?;
        ensure(is_solution(&inst, &v, RESIDUAL_TOL).unwrap(), || {
            format!("case {case}: multistart output does not validate")
        })?;
    }
    within(start, Duration::from_secs(10))?;
    Ok(format!("{solvable} of 50 solvable, all matched, {:.2?}", start.elapsed()))
}

fn class_table() -> Check {
    let budget = SearchBudget::default();
    let mut rows = 0;
    for m in 2..=5 {
        for n in 1..=3 {
            let tag = format!("m={m} n={n}");
            let unit = DenseTensor::unit(m, n).unwrap();
            let zero = DenseTensor::zeros(m, n).unwrap();
            let neg = unit.scaled(-1.0);
            ensure(check_s_tensor(&unit, &budget).is_verified(), || format!("{tag}: unit not S"))?;
            ensure(check_semipositive(&unit, true, &budget).is_verified(), || {
                format!("{tag}: unit not strictly semipositive")
            })?;
            ensure(check_r0(&unit, &budget).is_verified(), || format!("{tag}: unit not R0"))?;
            let p = check_p_tensor(&unit, &budget);
            if m % 2 == 0 {
                ensure(p.is_verified(), || format!("{tag}: unit not P: {p:?}"))?;
            } else {
                ensure(p.is_refuted(), || format!("{tag}: odd unit not refuted as P"))?;
                let c = p.certificate.as_ref().unwrap();
                ensure(c.iter().all(|&x| x <= 0.0) && c.iter().any(|&x| x < 0.0), || {
                    format!("{tag}: P certificate {c:?} not in the negative orthant")
                })?;
                ensure(p_violation(&unit, c).unwrap(), || format!("{tag}: P certificate invalid"))?;
            }

            let r0 = check_r0(&zero, &budget);
            ensure(r0.is_refuted(), || format!("{tag}: zero tensor not refuted as R0"))?;
            ensure(r0_violation(&zero, r0.certificate.as_ref().unwrap(), 0.0).unwrap(), || {
                format!("{tag}: R0 certificate invalid")
            })?;
            let strict = check_semipositive(&zero, true, &budget);
            ensure(strict.is_refuted(), || format!("{tag}: zero tensor strictly semipositive"))?;
            ensure(
                semipositive_violation(&zero, strict.certificate.as_ref().unwrap(), true).unwrap(),
                || format!("{tag}: strict semipositivity certificate invalid"),
            )?;
            ensure(check_semipositive(&zero, false, &budget).is_verified(), || {
                format!("{tag}: zero tensor not semipositive")
            })?;

            let sp = check_semipositive(&neg, false, &budget);
            ensure(sp.is_refuted(), || format!("{tag}: -unit semipositive"))?;
            ensure(
                semipositive_violation(&neg, sp.certificate.as_ref().unwrap(), false).unwrap(),
                || format!("{tag}: semipositivity certificate invalid"),
            )?;
            rows += 1;
        }
    }
    Ok(format!("{rows} (order, dimension) pairs, all certificates re-validated at tolerance 0"))
}

fn demo() -> Check {
    let (code, out) = cli(&["--json", "demo", "example-3-1"]);
    ensure(code == 0, || format!("exit code {code}"))?;
    let report = Report::from_json(&out).map_err(|e| e.to_string())?;
    let r = &report.result;
    let set = |key: &str| -> Vec<Vec<f64>> { serde_json::from_value(r[key].clone()).unwrap() };
    ensure(set("omega_at_1_0") == vec![vec![0.0], vec![1.0]], || "Omega((1,0))".into())?;
    ensure(set("omega_at_2_0") == vec![vec![0.0]], || "Omega((2,0))".into())?;
    ensure(set("recurrent_set_along_1_0") == vec![vec![0.0]], || "recurrent set".into())?;
    ensure(set("limit_set") == vec![vec![0.0]], || "limit set".into())?;
    let lr0 = &r["limit_r0"];
    ensure(lr0["status"] == "refuted", || format!("limit-R0 verdict {lr0}"))?;
    ensure(lr0["witness_omegas"] == serde_json::json!([[0.0]]), || "limit-R0 witness".into())?;
    let cert: Vec<f64> = serde_json::from_value(lr0["certificate"].clone()).unwrap();
    let zero = DenseTensor::zeros(3, 2).unwrap();
    ensure(r0_violation(&zero, &cert, 0.0).unwrap(), || "limit-R0 certificate".into())?;
    ensure(r["membership_cprime_1_0"] == Value::Bool(false), || "C' membership".into())?;
    let note = r["note"].as_str().unwrap_or_default();
    ensure(note.contains("not in C'"), || "missing discrepancy note".into())?;
    let (_, text) = cli(&["demo", "example-3-1"]);
    ensure(text.contains("note: "), || "text output lacks the note".into())?;
    Ok("Omega, recurrent and limit sets, limit-R0 refutation and C' = false all as expected".into())
}

fn semipositive_sets() -> Check {
    let budget = SearchBudget::default();
    let signed = svtcp_fixture("signed-family.json");
    let weak = check_weakly_semipositive_set(&signed, &budget).unwrap();
    let strong = check_strongly_semipositive_set(&signed, &budget).unwrap();
    ensure(weak.is_verified(), || format!("weak: {weak:?}"))?;
    ensure(strong.is_refuted(), || format!("strong: {strong:?}"))?;
    let v = strong.certificate.as_ref().unwrap();
    ensure(
        svtcp_core::svtcp::set_semipositive_violation(&signed, v, true).unwrap().is_some(),
        || "strong certificate does not re-validate".into(),
    )?;

    let unit = svtcp_fixture("unit-family.json");
    ensure(check_strongly_semipositive_set(&unit, &budget).unwrap().is_verified(), || {
        "unit family not strongly semipositive".into()
    })?;
    let zu = check_zero_unique_solution(&unit, &budget).unwrap();
    ensure(zu.is_verified(), || format!("unit family zero-unique: {zu:?}"))?;

    let scalar = svtcp_fixture("neg-scalar.json");
    ensure(check_weakly_semipositive_set(&scalar, &budget).unwrap().is_refuted(), || {
        "scalar -1 not refuted as weakly semipositive".into()
    })?;
    let zs = check_zero_unique_solution(&scalar, &budget).unwrap();
    ensure(zs.is_refuted(), || format!("scalar zero-unique: {zs:?}"))?;
    let c = zs.certificate.as_ref().unwrap();
    ensure((c[0] - 1.0).abs() <= RESIDUAL_TOL, || format!("certificate {c:?}, expected 1"))?;
    ensure(is_svtcp_solution(&scalar, c, RESIDUAL_TOL).unwrap().is_some(), || {
        "certificate is not a solution".into()
    })?;
    Ok(format!(
        "signed family weak verified / strong refuted; zero-unique verified on the unit family, \
         refuted on the scalar with v = {}",
        c[0]
    ))
}

fn level_dichotomy() -> Check {
    let start = Instant::now();
    let budget = SearchBudget::default();
    let diag = svtcp_fixture("diag-unit-family.json");
    ensure(check_limit_r0(&diag, &budget).unwrap().is_verified(), || {
        "diagonal-unit instance is not limit-R0".into()
    })?;
    let dirs = sample_nonneg_directions(diag.dim(), 50, 0);
    let report = probe_level_boundedness(&diag, &dirs, &log_grid(0, 3, 8), &[10.0]).unwrap();
    let mut latest: f64 = 0.0;
    for (k, d) in report.directions.iter().enumerate() {
        let t = d.alphas[0]
            .first_exceed
            .ok_or_else(|| format!("direction {k} never exceeds alpha = 10"))?;
        ensure(t <= 1e3, || format!("direction {k} exceeds only at t = {t}"))?;
        latest = latest.max(t);
    }
    ensure(report.bounded_directions.is_empty(), || "bounded directions reported".into())?;

    let scalar = svtcp_fixture("scalar-level.json");
    let report = probe_level_boundedness(&scalar, &[vec![1.0]], &log_grid(0, 6, 4), &[2.0]).unwrap();
    ensure(report.bounded_directions == vec![0], || "scalar direction not flagged".into())?;
    ensure(report.directions[0].values.iter().all(|&r| (r - 1.0).abs() <= 1e-12), || {
        format!("r(t) values {:?}", report.directions[0].values)
    })?;
    within(start, Duration::from_secs(30))?;
    Ok(format!(
        "50/50 directions exceed alpha = 10 by t = {latest:.3e}; scalar ray stays at r = 1 up to t = 1e6, {:.2?}",
        start.elapsed()
    ))
}

fn random_svtcp(rng: &mut ChaCha8Rng) -> SvtcpInstance {
    let n = rng.random_range(1..=3);
    let m = rng.random_range(2..=3);
    let k = rng.random_range(1..=2);
    let tensor = |rng: &mut ChaCha8Rng, s: f64| DenseTensor::from_fn(m, n, |_| rng.random_range(-s..s)).unwrap();
    let base = tensor(rng, 2.0);
    let coeffs = (0..k).map(|_| tensor(rng, 1.0)).collect();
    let rhs = VectorFamily::new(
        (0..n).map(|_| rng.random_range(-2.0..2.0)).collect(),
        (0..k).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect(),
    )
    .unwrap();
    let values: Vec<Vec<f64>> = (0..3).map(|_| (0..k).map(|_| rng.random_range(-1..=1) as f64).collect()).collect();
    let pieces = (0..rng.random_range(0..=2))
        .map(|_| {
            let predicate = match rng.random_range(0..4) {
                0 => Predicate::All,
                1 => Predicate::NonnegOrthant,
                2 => Predicate::ConeMatch {
                    direction: (0..n).map(|_| rng.random_range(0.1..1.0)).collect(),
                    angular_tol: rng.random_range(0.0..1.0),
                },
                _ => Predicate::PointMatch {
                    point: (0..n).map(|_| rng.random_range(0..3) as f64 * 0.5).collect(),
                    tol: 1e-9,
                },
            };
            Piece { predicate, omegas: vec![values[rng.random_range(1..3)].clone()] }
        })
        .collect();
    let omega = OmegaMap::new(k, pieces, vec![values[0].clone()], LimitSet::Auto).unwrap();
    SvtcpInstance::new(TensorFamily::new(base, coeffs).unwrap(), rhs, omega).unwrap()
}

fn residual_iff_solution() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut pairs = 0;
    let mut solutions = 0;
    let agree = |inst: &SvtcpInstance, v: &[f64]| -> Result<bool, String> {
        let r = svtcp_residual(inst, v).unwrap().value;
        let sol = is_svtcp_solution(inst, v, RESIDUAL_TOL).unwrap().is_some();
        ensure((r <= RESIDUAL_TOL) == sol, || format!("v = {v:?}: r = {r:e}, solution = {sol}"))?;
        Ok(sol)
    };
    for _ in 0..1000 {
        let inst = random_svtcp(&mut rng);
        let v: Vec<f64> = (0..inst.dim())
            .map(|_| if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.0..3.0) })
            .collect();
        solutions += agree(&inst, &v)? as usize;
        pairs += 1;
    }
    let cfg = SvtcpSolveConfig::default();
    let mut outputs = 0;
    for _ in 0..30 {
        let inst = random_svtcp(&mut rng);
        for p in solve_svtcp(&inst, &cfg).unwrap().pairs {
            ensure(agree(&inst, &p.v)?, || format!("solver output {:?} rejected", p.v))?;
            outputs += 1;
        }
    }
    Ok(format!(
        "{pairs} random pairs ({solutions} solutions) and {outputs} solver outputs, 0 counterexamples"
    ))
}

fn algebra() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let close = |a: f64, b: f64| (a - b).abs() <= ALGEBRA_TOL * (1.0 + b.abs());
    for case in 0..1000 {
        let m = rng.random_range(2..=4);
        let n = rng.random_range(1..=4);
        let b = DenseTensor::from_fn(m, n, |_| rng.random_range(-3.0..3.0)).unwrap();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let t: f64 = rng.random_range(0.0..4.0);
        let f = b.contract_to_vector(&v).unwrap();
        let tv: Vec<f64> = v.iter().map(|x| t * x).collect();
        let ft = b.contract_to_vector(&tv).unwrap();
        let factor = t.powi(m as i32 - 1);
        ensure(ft.iter().zip(&f).all(|(a, x)| close(*a, factor * x)), || {
            format!("case {case}: homogeneity")
        })?;
        let s = b.contract_to_scalar(&v).unwrap();
        let d: f64 = v.iter().zip(&f).map(|(a, x)| a * x).sum();
        ensure(close(s, d), || format!("case {case}: scalar {s} vs {d}"))?;
        let eye = DenseTensor::identity_matrix(n).unwrap();
        ensure(b.shao_product(&eye, DEFAULT_PRODUCT_BUDGET).unwrap() == b, || {
            format!("case {case}: B * I != B")
        })?;
        let a2 = DenseTensor::from_fn(2, n, |_| rng.random_range(-3.0..3.0)).unwrap();
        let b2 = DenseTensor::from_fn(2, n, |_| rng.random_range(-3.0..3.0)).unwrap();
        let c = a2.shao_product(&b2, DEFAULT_PRODUCT_BUDGET).unwrap();
        for i in 0..n {
            for j in 0..n {
                let e: f64 = (0..n).map(|l| a2.get(&[i, l]).unwrap() * b2.get(&[l, j]).unwrap()).sum();
                ensure(close(c.get(&[i, j]).unwrap(), e), || format!("case {case}: matrix product"))?;
            }
        }
    }
    within(start, Duration::from_secs(10))?;
    Ok(format!("1000 random tensors, {:.2?}", start.elapsed()))
}

fn determinism() -> Check {
    let f = |name: &str| fixture(name).to_string_lossy().into_owned();
    let runs: Vec<Vec<String>> = vec![
        vec!["--json".into(), "demo".into(), "example-3-1".into()],
        vec!["--json".into(), "solve".into(), f("unit-tcp.json")],
        vec!["--json".into(), "--seed".into(), "7".into(), "solve".into(), f("lcp.json")],
        vec!["--json".into(), "solve".into(), f("example-3-1.json")],
        vec!["--json".into(), "check".into(), f("zero-tensor.json"), "--class".into(), "r0".into()],
        vec!["--json".into(), "check".into(), f("signed-family.json"), "--class".into(), "strong-sp".into()],
        vec!["--json".into(), "check".into(), f("neg-scalar.json"), "--class".into(), "zero-unique".into()],
        vec!["--json".into(), "--seed".into(), "3".into(), "probe".into(), f("diag-unit-family.json"), "--kind".into(), "level".into()],
        vec!["--json".into(), "probe".into(), f("unit-tcp.json"), "--kind".into(), "sol".into()],
        vec!["--json".into(), "eval".into(), f("example-3-1.json"), "--point".into(), "1,0".into()],
    ];
    for args in &runs {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let first = cli(&args);
        let second = cli(&args);
        ensure(first == second, || format!("`{}` differs between runs", args.join(" ")))?;
        ensure(!first.1.is_empty(), || format!("`{}` wrote nothing", args.join(" ")))?;
    }
    Ok(format!("{} commands run twice, byte-identical reports", runs.len()))
}

type Criterion = (&'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("oracle equivalence (diagonal)", diagonal_oracle),
        ("oracle equivalence (LCP)", lcp_oracle),
        ("canonical class table", class_table),
        ("bundled demo instance", demo),
        ("semipositive set theorems", semipositive_sets),
        ("level-boundedness dichotomy", level_dichotomy),
        ("residual iff solution", residual_iff_solution),
        ("algebraic invariants", algebra),
        ("determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Err(format!("panicked: {msg}"))
            });
        match outcome {
            Ok(detail) => println!("[PASS] {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {} {name}: {detail}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
