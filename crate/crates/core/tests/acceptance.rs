//! Acceptance criteria, run at their stated tolerances. Each criterion prints
//! one PASS/FAIL line; the test fails when the set of failing criteria
//! differs from [`KNOWN_FAILURES`].

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use ncdl::cli::{character_rate, evaluate, BesselCheck, Experiment, TailCheck, TensorDemo};
use ncdl::control::{defect_experiment, SequenceKind, SequenceSpec, WindowPolicy, ENTRY_TOL};
use ncdl::fock::{Intertwiner, ModeWindow};
use ncdl::orbits::{candidate_orbits, classify_limit, orbit_limit_oracle_with, random_orbit_spec, worked_examples, OracleConfig};
use ncdl::reps::{matrix_generic, matrix_generic_oracle, matrix_limit, matrix_limit_oracle};
use ncdl::strata::{check_d1, D1Tolerances, FieldPlan, SampledField, Status};
use ncdl::testfn::canonical_family;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Criteria that fail with the current numerics; see the decisions ledger.
/// Boundary convergence: the defect decays like `C/k` with `k·defect`
/// slightly rising, so `defect(20)/defect(1)` lands just above `0.05`.
const KNOWN_FAILURES: &[u8] = &[5];

/// Corpus seeds exercised by the field and oracle criteria.
const CORPUS: std::ops::Range<u64> = 0..10;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn criterion(id: u8, name: &str, limit: Duration, f: impl FnOnce() -> Verdict) -> bool {
    let t = Instant::now();
    let v = f();
    let elapsed = t.elapsed();
    let in_time = elapsed < limit;
    let passed = v.passed && in_time;
    println!(
        "{} {id:>2} {name}: {}; {:.2} s (limit {} s)",
        if passed { "PASS" } else { "FAIL" },
        v.detail,
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    passed
}

fn bessel() -> Verdict {
    let out = evaluate(&Experiment::BesselCheck(BesselCheck::default())).unwrap();
    verdict(out.passed, out.verdict)
}

fn intertwiner() -> Verdict {
    let mut windows = 0;
    let mut exact = true;
    for lambda in 0..=40i64 {
        for half in 1..=40i64 {
            let w = ModeWindow::new(lambda, half).unwrap();
            if w.len() > 64 {
                continue;
            }
            windows += 1;
            let v = Intertwiner::new(lambda, 0.25, w).unwrap();
            let n = w.len();
            for p in 0..n {
                let mut e = vec![Complex64::new(0.0, 0.0); n];
                e[p] = Complex64::new(1.0, 0.0);
                exact &= v.apply_adjoint(&v.apply(&e).unwrap()) == e;
                let fock: Vec<(u64, Complex64)> = v.levels().into_iter().zip(e.iter().copied()).collect();
                exact &= v.apply(&v.apply_adjoint(&fock)).unwrap() == fock;
            }
        }
    }
    verdict(exact, format!("V*V = Id and VV* = Id exactly on {windows} windows up to 64 modes"))
}

fn generic_oracle() -> Verdict {
    let points = [(50i64, 0.02), (200, 0.01), (500, 0.001)];
    let cases: Vec<(u64, i64, f64)> = (0..3).flat_map(|s| points.iter().map(move |&(l, a)| (s, l, a))).collect();
    let worst = cases
        .par_iter()
        .map(|&(seed, l, a)| {
            let f = canonical_family(seed);
            let w = ModeWindow::new(l, 5).unwrap();
            matrix_generic(&f, l, a, &w)
                .unwrap()
                .max_abs_diff(&matrix_generic_oracle(&f, l, a, &w).unwrap())
                .unwrap()
        })
        .reduce(|| 0.0, f64::max);
    verdict(worst <= 1e-8, format!("max entry difference {worst:.3e} on 11-mode windows (tol 1e-8)"))
}

fn limit_oracle() -> Verdict {
    let cases: Vec<(u64, f64)> = CORPUS.flat_map(|s| [0.5, 1.0, 2.0].map(move |r| (s, r))).collect();
    let worst = cases
        .par_iter()
        .map(|&(seed, r)| {
            let f = canonical_family(seed);
            let w = ModeWindow::unclipped(5).unwrap();
            matrix_limit(&f, r, &w)
                .unwrap()
                .max_abs_diff(&matrix_limit_oracle(&f, r, &w).unwrap())
                .unwrap()
        })
        .reduce(|| 0.0, f64::max);
    verdict(worst <= 1e-8, format!("max entry difference {worst:.3e} over {} cases (tol 1e-8)", cases.len()))
}

fn boundary_convergence() -> Verdict {
    let spec = SequenceSpec {
        kind: SequenceKind::ToBoundary {
            r: 1.0,
            lambda_step: 50.0,
            perturbation: 1.0,
            power: 1.0,
        },
        sign: 1,
        k_start: 1,
        k_end: 20,
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for seed in 0..3 {
        let rep = defect_experiment(&canonical_family(seed), &spec, WindowPolicy::Fixed(8)).unwrap();
        let d = rep.defects();
        let ratio = d[19] / d[0];
        let inv = rep.inversions();
        let viol = rep.total_violations();
        ok &= ratio < 0.05 && inv <= 1 && viol == 0;
        parts.push(format!("seed {seed}: ratio {ratio:.4}, {inv} inversions, {viol} entries above δ_k + {ENTRY_TOL:e}"));
    }
    verdict(ok, parts.join("; "))
}

fn character_convergence() -> Verdict {
    let spec = SequenceSpec {
        kind: SequenceKind::ToCharacters {
            lambda_inf: ncdl::control::LambdaInf::Finite(2),
            alpha_scale: 1.0,
            decay: 2.0,
        },
        sign: 1,
        k_start: 1,
        k_end: 30,
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for seed in 0..3 {
        let rep = defect_experiment(&canonical_family(seed), &spec, WindowPolicy::Fixed(8)).unwrap();
        let rows: Vec<(u64, i64, f64, f64)> = rep.rows.iter().map(|r| (r.k, r.lambda, r.alpha, r.defect)).collect();
        let (e, checks, rate_ok) = character_rate(&rows, 5, 2.0).unwrap();
        let worst = checks.iter().filter(|r| r.0 > 5).map(|r| r.1 / r.2).fold(0.0, f64::max);
        ok &= rate_ok && rep.total_violations() == 0;
        parts.push(format!("seed {seed}: E = {e:.3e}, worst later ratio {worst:.3}"));
    }
    verdict(ok, parts.join("; "))
}

fn tail() -> Verdict {
    let out = evaluate(&Experiment::TailCheck(TailCheck::default())).unwrap();
    verdict(out.passed, out.verdict)
}

fn orbits() -> Verdict {
    let cfg = OracleConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let specs: Vec<_> = (0..200).map(|i| random_orbit_spec(&mut rng, 1 + i % 2)).collect();
    let disagree = specs
        .par_iter()
        .filter(|spec| {
            let verdict = classify_limit(spec).unwrap();
            let oracle = orbit_limit_oracle_with(spec, &cfg).unwrap();
            oracle != verdict.restrict(&candidate_orbits(spec.rank(), &cfg))
        })
        .count();
    let mut worked_ok = true;
    for (spec, expected) in worked_examples() {
        let verdict = classify_limit(&spec).unwrap();
        let oracle = orbit_limit_oracle_with(&spec, &cfg).unwrap();
        worked_ok &= verdict == expected && oracle == verdict.restrict(&candidate_orbits(spec.rank(), &cfg));
    }
    verdict(
        disagree == 0 && worked_ok,
        format!(
            "{disagree} of 200 random specs disagree with the oracle, worked examples {}",
            if worked_ok { "match" } else { "differ" }
        ),
    )
}

fn tensors() -> Verdict {
    let out = evaluate(&Experiment::TensorDemo(TensorDemo::default())).unwrap();
    verdict(out.passed, out.verdict)
}

fn d1() -> Verdict {
    let plan = FieldPlan::standard();
    let tol = D1Tolerances::default();
    let mut failing = Vec::new();
    for seed in CORPUS {
        let field = SampledField::from_test_function(&canonical_family(seed), &plan).unwrap();
        if !check_d1(&field, &tol).unwrap().passed() {
            failing.push(seed);
        }
    }
    let field = SampledField::from_test_function(&canonical_family(1), &plan).unwrap();
    let jump = field.max_norm().unwrap();
    let planted = check_d1(&field.with_planted_jump(1.0, jump), &tol).unwrap();
    let caught = planted.status(2) == Some(Status::Fail);
    verdict(
        failing.is_empty() && caught,
        format!(
            "corpus seeds failing: {failing:?}; planted jump {} condition 2",
            if caught { "fails" } else { "passes" }
        ),
    )
}

fn run_binary(threads: &str, out: &Path) -> (Vec<u8>, Vec<u8>) {
    let status = Command::new(env!("CARGO_BIN_EXE_ncdl"))
        .args(["converge-boundary", "--seed", "1", "--r", "1.0", "--kmax", "20", "--J", "8", "--out"])
        .arg(out)
        .env("NCDL_THREADS", threads)
        .output()
        .unwrap();
    assert!(status.status.code().is_some_and(|c| c <= 1), "{status:?}");
    (
        std::fs::read(out.join("converge-boundary.csv")).unwrap(),
        std::fs::read(out.join("converge-boundary.json")).unwrap(),
    )
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let one = run_binary("1", &dir.path().join("one"));
    let again = run_binary("1", &dir.path().join("again"));
    let many = run_binary("8", &dir.path().join("many"));
    let same = one == again && one == many;
    verdict(same, format!("CSV and JSON {} across 1, 1 and 8 threads", if same { "identical" } else { "differ" }))
}

#[test]
fn acceptance() {
    let s = Duration::from_secs;
    let results = [
        (1, criterion(1, "Bessel dual evaluation", s(5), bessel)),
        (2, criterion(2, "intertwiner identities", s(1), intertwiner)),
        (3, criterion(3, "generic matrix oracle", s(120), generic_oracle)),
        (4, criterion(4, "limit matrix oracle", s(120), limit_oracle)),
        (5, criterion(5, "boundary convergence", s(300), boundary_convergence)),
        (6, criterion(6, "character convergence", s(60), character_convergence)),
        (7, criterion(7, "tail bound slope", s(120), tail)),
        (8, criterion(8, "orbit classifier vs oracle", s(60), orbits)),
        (9, criterion(9, "tensor control", s(180), tensors)),
        (10, criterion(10, "operator-field conditions", s(180), d1)),
        (11, criterion(11, "determinism across threads", s(600), determinism)),
    ];
    let failed: Vec<u8> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    println!("failing criteria: {failed:?} (known: {KNOWN_FAILURES:?})");
    assert_eq!(failed, KNOWN_FAILURES, "acceptance results changed");
}
