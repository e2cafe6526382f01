//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits non-zero if any fails.

use std::time::{Duration, Instant};

use epfix::analysis::{
    check_firmly_nonexpansive, check_quasicontraction, estimate_map_expansion, SampleSpec,
};
use epfix::bench::counterexample_rows;
use epfix::cli;
use epfix::iteration::{run_fixed_point, IterationConfig, KmRelaxation, RunStatus, Scheme, TraceSummary};
use epfix::proxmaps::{prox_b, prox_r};
use epfix::subproblem::{solve_prox_subproblem, solve_prox_subproblem_generic};
use epfix::{Bifunction, ConvexSet, MapKind, Matrix, ProblemInstance, ProxMap, Regularizer, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn v(xs: &[f64]) -> Vector {
    Vector::from_slice(xs).unwrap()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(start: Instant, limit: Duration) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:?}, limit {limit:?}"))
}

fn counterexample_exactness() -> Outcome {
    let start = Instant::now();
    let rot = ProblemInstance::builtin("rotation").unwrap();
    let x = v(&[1.0, 0.0]);
    let mut worst = 0.0f64;
    for lambda in [0.1, 0.5, 1.0, 2.0] {
        let bx = prox_b(&rot.bifunction, &rot.set, &x, lambda, 1e-10).map_err(|e| e.to_string())?.output;
        ensure((bx[0] - 1.0).abs() <= 1e-9 && (bx[1] - lambda).abs() <= 1e-9, || {
            format!("B_{lambda}((1,0)) = {:?}", bx.as_slice())
        })?;
        // General point against (x1 − λx2, x2 + λx1).
        let y = v(&[0.3, -1.7]);
        let by = prox_b(&rot.bifunction, &rot.set, &y, lambda, 1e-10).map_err(|e| e.to_string())?.output;
        ensure((by[0] - (0.3 + 1.7 * lambda)).abs() <= 1e-9 && (by[1] - (-1.7 + 0.3 * lambda)).abs() <= 1e-9, || {
            format!("B_{lambda}((0.3,-1.7)) = {:?}", by.as_slice())
        })?;
        let spec = SampleSpec::over(&rot.set, 10_000, 42).unwrap();
        let map = ProxMap::new(&rot.bifunction, &rot.set, MapKind::B, lambda);
        let modulus = estimate_map_expansion(&map, &spec).map_err(|e| e.to_string())?.estimated_modulus.unwrap();
        let err = (modulus - (1.0 + lambda * lambda).sqrt()).abs();
        worst = worst.max(err);
        ensure(err <= 1e-6, || format!("lambda {lambda}: modulus {modulus}"))?;
    }
    let rows = counterexample_rows(&[0.1, 0.5, 1.0, 2.0]).map_err(|e| e.to_string())?;
    ensure(rows.iter().all(|r| r.agrees), || "counterexample table disagrees".into())?;
    within_time(start, Duration::from_secs(5))?;
    Ok(format!("max |modulus - sqrt(1+l^2)| = {worst:.2e}, {:?}", start.elapsed()))
}

fn quasicontraction() -> Outcome {
    let start = Instant::now();
    let inst = ProblemInstance::builtin("bilinear-strong").unwrap();
    let p = &inst.profile;
    ensure((p.tau - 2.0).abs() < 1e-12 && (p.l1 - 1.5).abs() < 1e-9 && (p.l2 - 1.5).abs() < 1e-9, || {
        format!("profile {p:?}")
    })?;
    let lambda = 0.3;
    let rho = (1.0f64 - 2.0 * lambda * (p.tau - p.l1)).sqrt();
    ensure((rho - 0.7f64.sqrt()).abs() < 1e-9, || format!("rho {rho}"))?;
    let x_star = inst.known_solution.clone().unwrap();
    let spec = SampleSpec::over(&inst.set, 1000, 42).unwrap();
    let map = ProxMap::new(&inst.bifunction, &inst.set, MapKind::B, lambda);
    let rep = check_quasicontraction(&map, &x_star, rho, &spec).map_err(|e| e.to_string())?;
    ensure(rep.worst_violation <= 1e-6, || format!("worst violation {}", rep.worst_violation))?;

    let cfg = IterationConfig::new(Scheme::Picard, MapKind::B, lambda)
        .with_tol(1e-8)
        .with_max_iterations(60);
    let trace = run_fixed_point(&inst.bifunction, &inst.set, &v(&[1.0, 1.0]), &cfg).map_err(|e| e.to_string())?;
    ensure(trace.final_status == RunStatus::Converged, || format!("picard ended {:?}", trace.final_status))?;
    let rate = trace.estimated_rate.ok_or("no rate estimate")?;
    ensure(rate <= rho + 0.02, || format!("rate {rate}"))?;
    within_time(start, Duration::from_secs(10))?;
    Ok(format!(
        "worst violation {:.2e}, {} iterations, rate {rate:.4} vs sqrt(0.7) = {rho:.4}",
        rep.worst_violation,
        trace.iterations()
    ))
}

fn cocoercive_nonexpansive() -> Outcome {
    let start = Instant::now();
    let inst = ProblemInstance::builtin("mvi-cocoercive").unwrap();
    let delta = inst.profile.cocoercivity;
    ensure((delta - 0.25).abs() < 1e-12, || format!("delta {delta}"))?;
    let spec = SampleSpec::over(&inst.set, 10_000, 42).unwrap();
    let modulus = |lambda: f64| -> Result<f64, String> {
        let map = ProxMap::new(&inst.bifunction, &inst.set, MapKind::B, lambda);
        Ok(estimate_map_expansion(&map, &spec).map_err(|e| e.to_string())?.estimated_modulus.unwrap())
    };
    let mut worst = 0.0f64;
    for lambda in [0.1, 0.25, 0.4] {
        let m = modulus(lambda)?;
        worst = worst.max(m);
        ensure(m <= 1.0 + 1e-9, || format!("lambda {lambda}: modulus {m}"))?;
    }
    let stated_upper = 1.0 / (2.0 * delta);
    let mut flagged = Vec::new();
    for lambda in [0.75, 1.0, 1.5, stated_upper] {
        let m = modulus(lambda)?;
        if m > 1.0 + 1e-9 {
            flagged.push(format!("{lambda}:{m:.3}"));
        }
    }
    within_time(start, Duration::from_secs(10))?;
    Ok(format!(
        "max modulus on lambda <= 2*delta: {worst:.6}; stated range (0, {stated_upper}] flagged [{}]",
        flagged.join(", ")
    ))
}

fn eps_nonexpansive() -> Outcome {
    let skew = ProblemInstance::builtin("mvi-monotone-skew").unwrap();
    let l = skew.profile.lipschitz_f;
    let rot = ProblemInstance::builtin("rotation").unwrap();
    let mut tightness = 0.0f64;
    for lambda in [0.1, 0.5, 1.0] {
        let bound = 1.0 + l * l * lambda * lambda;
        for inst in [&skew, &rot] {
            let spec = SampleSpec::over(&inst.set, 10_000, 42).unwrap();
            let map = ProxMap::new(&inst.bifunction, &inst.set, MapKind::B, lambda);
            let m2 = estimate_map_expansion(&map, &spec).map_err(|e| e.to_string())?.estimated_modulus.unwrap().powi(2);
            ensure(m2 <= bound + 1e-6, || format!("{} lambda {lambda}: {m2} > {bound}", inst.name))?;
            if inst.name == "rotation" {
                tightness = tightness.max((m2 - bound).abs());
                ensure((m2 - bound).abs() <= 1e-6, || format!("rotation lambda {lambda}: {m2} vs {bound}"))?;
            }
        }
    }
    Ok(format!("L = {l}, rotation attains the bound within {tightness:.2e}"))
}

fn t_quasi_nonexpansive() -> Outcome {
    let rot = ProblemInstance::builtin("rotation").unwrap();
    let lambda = 0.5;
    let l = rot.profile.l1.max(rot.profile.l2);
    ensure(lambda < 1.0 / (2.0 * l), || format!("lambda outside (0, {})", 1.0 / (2.0 * l)))?;
    let spec = SampleSpec::over(&rot.set, 10_000, 42).unwrap();
    let map = ProxMap::new(&rot.bifunction, &rot.set, MapKind::T, lambda);
    let rep = check_quasicontraction(&map, &Vector::zeros(2), 1.0, &spec).map_err(|e| e.to_string())?;
    let ratio = rep.estimated_modulus.unwrap();
    let target = (1.0f64 - lambda * lambda + lambda.powi(4)).sqrt();
    ensure(ratio <= 1.0 + 1e-9, || format!("ratio {ratio}"))?;
    ensure((ratio - target).abs() <= 1e-4, || format!("ratio {ratio} vs {target}"))?;

    let cfg = IterationConfig::new(Scheme::KrasnoselskiiMann(KmRelaxation::Constant(0.5)), MapKind::T, lambda)
        .with_tol(1e-8)
        .with_max_iterations(10_000);
    let trace = run_fixed_point(&rot.bifunction, &rot.set, &v(&[1.0, 0.0]), &cfg).map_err(|e| e.to_string())?;
    ensure(trace.final_status == RunStatus::Converged, || format!("km ended {:?}", trace.final_status))?;
    let end = trace.final_point().unwrap().norm();
    ensure(end <= 1e-7, || format!("km stopped at distance {end}"))?;
    Ok(format!("max ratio {ratio:.6} vs {target:.6}; km converged in {} iterations", trace.iterations()))
}

fn resolvent_firm() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for name in ["rotation", "bilinear-strong"] {
        let inst = ProblemInstance::builtin(name).unwrap();
        let spec = SampleSpec::over(&inst.set, 1000, 42).unwrap();
        let map = ProxMap::new(&inst.bifunction, &inst.set, MapKind::R, 0.5);
        let rep = check_firmly_nonexpansive(&map, &spec).map_err(|e| e.to_string())?;
        worst = worst.max(rep.worst_violation);
        ensure(rep.worst_violation <= 1e-6, || format!("{name}: {}", rep.worst_violation))?;
    }
    let rot = ProblemInstance::builtin("rotation").unwrap();
    let r = prox_r(&rot.bifunction, &rot.set, &v(&[1.0, 0.0]), 0.5, 1e-10).map_err(|e| e.to_string())?.output;
    // Oracle: (I + A) z = (1, 0) with A = [[0,1],[-1,0]], solved independently.
    let oracle = Matrix::from_rows(vec![vec![1.0, 1.0], vec![-1.0, 1.0]])
        .unwrap()
        .solve(&v(&[1.0, 0.0]))
        .unwrap();
    ensure(r.distance(&oracle) <= 1e-8 && r.distance(&v(&[0.5, 0.5])) <= 1e-8, || {
        format!("R(1,0) = {:?}", r.as_slice())
    })?;
    Ok(format!("worst excess {worst:.2e}; R_0.5((1,0)) = ({:.9}, {:.9})", r[0], r[1]))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst = 0.0f64;
    let mut l1_draws = 0;
    for draw in 0..1000 {
        let n = rng.random_range(1..=4usize);
        let mut rand_vec = |lo: f64, hi: f64| Vector::new((0..n).map(|_| rng.random_range(lo..hi)).collect()).unwrap();
        let rows: Vec<Vec<f64>> = (0..n).map(|_| rand_vec(-2.0, 2.0).into_inner()).collect();
        let a = Matrix::from_rows(rows).unwrap();
        let b = rand_vec(-1.0, 1.0);
        let x = rand_vec(-3.0, 3.0);
        let lo = rand_vec(-2.0, -0.1);
        let hi = rand_vec(0.1, 2.0);
        let w = rand_vec(0.0, 1.0);
        let center = rand_vec(-1.0, 1.0);
        let lambda = rng.random_range(0.01..2.0);
        let mut f = Bifunction::mvi_affine(a, b).unwrap();
        let set = match draw % 4 {
            0 => ConvexSet::boxed(lo, hi).unwrap(),
            1 => ConvexSet::ball(center, 1.5).unwrap(),
            2 => ConvexSet::whole_space(n).unwrap(),
            _ => {
                l1_draws += 1;
                f = f.with_regularizer(Regularizer::weighted_l1(w).unwrap()).unwrap();
                ConvexSet::boxed(lo, hi).unwrap()
            }
        };
        let fast = solve_prox_subproblem(&f, &set, &x, &x, lambda, 1e-11).map_err(|e| e.to_string())?;
        let slow = solve_prox_subproblem_generic(&f, &set, &x, &x, lambda, 1e-11).map_err(|e| e.to_string())?;
        ensure(fast.used_closed_form, || format!("draw {draw}: no closed form"))?;
        let d = fast.minimizer.distance(&slow.minimizer);
        worst = worst.max(d);
        ensure(d <= 1e-8, || format!("draw {draw}: closed form and solver differ by {d}"))?;
    }
    Ok(format!("1000 draws ({l1_draws} with l1), max difference {worst:.2e}"))
}

fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli::run(std::iter::once("epfix").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn solution_certification() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let summary_path = dir.path().join("summary.json");
    let summary_arg = summary_path.to_str().unwrap();
    let mut converged = 0;
    let mut worst_gap = 0.0f64;
    let mut worst_residual = 0.0f64;
    for name in epfix::problems::BUILTIN_NAMES {
        let inst = ProblemInstance::builtin(name).unwrap();
        for (map, scheme, lambda) in [
            ("B", "picard", "0.1"),
            ("B", "picard", "0.3"),
            ("T", "picard", "0.4"),
            ("T", "km", "0.5"),
            ("R", "picard", "0.5"),
            ("R", "km", "1.0"),
        ] {
            let (code, _, err) = run_cli(&[
                "solve", "--builtin", name, "--map", map, "--scheme", scheme, "--lambda", lambda, "--tol", "1e-10",
                "--max-iter", "5000", "--x0=0.7,-0.4", "--summary", summary_arg,
            ]);
            if code != cli::EXIT_OK {
                ensure(code == cli::EXIT_NOT_CONVERGED, || format!("{name} {map} {scheme}: exit {code}: {err}"))?;
                continue;
            }
            let summary: TraceSummary =
                serde_json::from_str(&std::fs::read_to_string(&summary_path).unwrap()).map_err(|e| e.to_string())?;
            ensure(summary.status == RunStatus::Converged, || "exit 0 without convergence".into())?;
            converged += 1;
            let x = Vector::new(summary.final_point.unwrap()).unwrap();
            let cert = inst.certify(&x).map_err(|e| e.to_string())?;
            match cert.gap {
                Some(g) => {
                    worst_gap = worst_gap.max(g);
                    ensure(summary.gap.is_some(), || "summary lacks the gap".into())?;
                    ensure(g <= 1e-6, || format!("{name} {map} {scheme}: gap {g}"))?;
                }
                None => {
                    worst_residual = worst_residual.max(cert.fixed_point_residual);
                    ensure(cert.fixed_point_residual <= 1e-8, || {
                        format!("{name} {map} {scheme}: residual {}", cert.fixed_point_residual)
                    })?;
                }
            }
        }
    }
    ensure(converged > 0, || "no run converged".into())?;
    Ok(format!(
        "{converged} converged runs, max gap {worst_gap:.2e}, max unbounded-set residual {worst_residual:.2e}"
    ))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let (code, _, err) = run_cli(&["bench", "--seed", "42", "--out", path.to_str().unwrap()]);
        ensure(code == cli::EXIT_OK, || format!("bench exit {code}: {err}"))?;
    }
    let (a, b) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    ensure(a == b, || "bench reports differ".into())?;
    Ok(format!("{} identical bytes", a.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("counterexample exactness", counterexample_exactness),
        ("quasicontraction of B on bilinear-strong", quasicontraction),
        ("nonexpansiveness under cocoercivity", cocoercive_nonexpansive),
        ("eps-nonexpansiveness", eps_nonexpansive),
        ("quasi-nonexpansiveness of T", t_quasi_nonexpansive),
        ("firm nonexpansiveness of R", resolvent_firm),
        ("closed forms match the generic solver", oracle_equivalence),
        ("solution certification", solution_certification),
        ("bench determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {} [{name}]: PASS ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} [{name}]: FAIL ({why})", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
