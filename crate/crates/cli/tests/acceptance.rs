//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p fmin-cli --test acceptance`.

use std::f64::consts::{E, PI};
use std::process::{Command as Process, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use clap::Parser;
use fmin_cli::{run, Cli, Report, Results, RunConfig};
use fmin_core::ambient::{gaussian_soliton, SineQuadraticWeight, WeightedAmbient};
use fmin_core::conformal::{identity_audit, AuditOptions};
use fmin_core::hypersurface::mesh::icosphere;
use fmin_core::hypersurface::geometric_samples;
use fmin_core::catalog::{make_entry, sphere_spectrum_oracle, CatalogParams};
use fmin_core::quadrature::Quadrature;
use fmin_core::spectral::{assemble, PotentialSpec};

const SPHERE_REL_TOL: f64 = 0.03;
const SPHERE_SECONDS: f64 = 60.0;
const PLANE_LOWEST_REL_TOL: f64 = 0.05;
const SEPARABLE_TOL: f64 = 1e-6;
const AUDIT_REL_TOL: f64 = 1e-4;
const AUDIT_SECONDS: f64 = 10.0;
const PATCH_RESIDUAL_TOL: f64 = 1e-12;
const TORUS_RESIDUAL_MIN: f64 = 0.1;
const AREA_REL_TOL: f64 = 1e-6;
const FORM_REL_TOL: f64 = 0.01;

type Outcome = Result<String, String>;

fn cli(args: &str) -> Result<Report, String> {
    let argv = std::iter::once("fmin").chain(args.split_whitespace());
    let parsed = Cli::try_parse_from(argv).map_err(|e| format!("`{args}`: {e}"))?;
    let config = RunConfig::from_cli(&parsed).map_err(|e| format!("`{args}`: {e}"))?;
    run(&config).map_err(|e| format!("`{args}`: {e}"))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn sphere_index() -> Outcome {
    let start = Instant::now();
    let report = cli("index --surface sphere --n 2 --subdivision 4 --count 6")?;
    let secs = start.elapsed().as_secs_f64();
    let Results::Index(r) = report.results else { unreachable!() };
    let exact = sphere_spectrum_oracle(2, 4);
    let worst = r.spectrum.eigenvalues[..4]
        .iter()
        .zip(&exact)
        .map(|(a, b)| rel(*a, *b))
        .fold(0.0, f64::max);
    check(r.f_index == 4, format!("f_index {}", r.f_index))?;
    check(worst <= SPHERE_REL_TOL, format!("relative error {worst:.3e}"))?;
    check(secs < SPHERE_SECONDS, format!("{secs:.1} s"))?;
    Ok(format!("f_index 4, max rel err {worst:.2e}, {secs:.1} s"))
}

fn nondecreasing(v: &[usize]) -> bool {
    v.windows(2).all(|w| w[0] <= w[1])
}

fn plane_index() -> Outcome {
    let report = cli("exhaustion --surface plane --n 2 --subdivision 3 --domains 2,4,6,8 --count 4")?;
    let Results::Exhaustion(r) = report.results else { unreachable!() };
    let idx = &r.report.indices;
    let lowest = *r.report.lowest.last().unwrap();
    check(nondecreasing(idx), format!("indices {idx:?}"))?;
    check(*idx.last().unwrap() == 1, format!("indices {idx:?}"))?;
    check(rel(lowest, -0.5) <= PLANE_LOWEST_REL_TOL, format!("lowest {lowest}"))?;
    Ok(format!("indices {idx:?}, lowest at R = 8: {lowest:.5}"))
}

fn cylinder_index() -> Outcome {
    let report = cli("index --surface cylinder --n 2 --k 1 --method separable --count 4")?;
    let Results::Index(r) = report.results else { unreachable!() };
    let expected = [-1.0, -0.5, -0.5, -0.5];
    let worst = r
        .spectrum
        .eigenvalues
        .iter()
        .zip(&expected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    check(r.f_index == 4, format!("S1 x R f_index {}", r.f_index))?;
    check(worst <= SEPARABLE_TOL, format!("S1 x R abs error {worst:.3e}"))?;
    let report = cli("index --surface cylinder --n 3 --k 2 --count 8")?;
    let Results::Index(r3) = report.results else { unreachable!() };
    check(r3.spectrum.method == "separable", format!("method {}", r3.spectrum.method))?;
    check(r3.f_index == 5, format!("S2 x R f_index {}", r3.f_index))?;
    Ok(format!("S1 x R: index 4, abs err {worst:.2e}; S2 x R: index 5"))
}

fn identity_audit_criterion() -> Outcome {
    let start = Instant::now();
    let report = cli("identities --weight gaussian --n 2 --samples 50")?;
    let Results::Identities(g) = report.results else { unreachable!() };
    let sine = WeightedAmbient::new(3, Arc::new(SineQuadraticWeight)).map_err(|e| e.to_string())?;
    let s = identity_audit(&sine, &AuditOptions::default()).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let mut worst: f64 = 0.0;
    for rep in g.reports.iter().chain(&s) {
        check(rep.samples.len() == 50, format!("{} has {} samples", rep.identity, rep.samples.len()))?;
        worst = worst.max(rep.max_rel_err);
    }
    check(g.reports.len() == 4 && s.len() == 3, "missing identities")?;
    check(worst <= AUDIT_REL_TOL, format!("max_rel_err {worst:.3e}"))?;
    check(secs < AUDIT_SECONDS, format!("{secs:.2} s"))?;
    Ok(format!("7 audits, max_rel_err {worst:.2e}, {secs:.2} s"))
}

fn residual_of(args: &str) -> Result<f64, String> {
    match cli(args)?.results {
        Results::Residual(r) => Ok(r.sup_norm),
        _ => unreachable!(),
    }
}

fn shrinker_residual_criterion() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 2..=4 {
        worst = worst.max(residual_of(&format!("residual --surface sphere --n {n}"))?);
        worst = worst.max(residual_of(&format!("residual --surface plane --n {n}"))?);
        for k in 1..n {
            worst = worst.max(residual_of(&format!("residual --surface cylinder --n {n} --k {k}"))?);
        }
    }
    check(worst <= PATCH_RESIDUAL_TOL, format!("patch residual {worst:.3e}"))?;
    let torus = residual_of("residual --surface torus --radii 2,1")?;
    check(torus > TORUS_RESIDUAL_MIN, format!("torus residual {torus}"))?;
    let mesh: Vec<f64> = (2..=5)
        .map(|s| residual_of(&format!("residual --surface sphere --mesh --subdivision {s}")))
        .collect::<Result<_, _>>()?;
    check(mesh.windows(2).all(|w| w[1] < w[0]), format!("mesh residuals {mesh:?}"))?;
    Ok(format!(
        "patch sup {worst:.1e}, torus {torus:.3}, mesh {}",
        mesh.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>().join(" > ")
    ))
}

fn area_bound_criterion() -> Outcome {
    let report = cli("bounds --surface sphere --n 2 --kappa 0.5 --genus 0")?;
    let Results::Bounds(r) = report.results else { unreachable!() };
    let b = r.area_bound.ok_or_else(|| format!("skipped: {:?}", r.area_bound_skipped))?;
    let (lhs_err, rhs_err) = (rel(b.lhs, 16.0 * PI / E), rel(b.rhs, 32.0 * PI / E));
    check(lhs_err <= AREA_REL_TOL, format!("lhs {} rel err {lhs_err:.3e}", b.lhs))?;
    check(rhs_err <= AREA_REL_TOL, format!("rhs {} rel err {rhs_err:.3e}", b.rhs))?;
    check(b.holds && b.lhs <= b.rhs, "lhs > rhs")?;
    Ok(format!("lhs {:.10}, rhs {:.10}, errors {lhs_err:.1e} / {rhs_err:.1e}", b.lhs, b.rhs))
}

fn quadratic_form_criterion() -> Outcome {
    let space = gaussian_soliton(3).map_err(|e| e.to_string())?;
    let m = icosphere(2.0, 4);
    let sys = assemble(&m, &space, &vec![false; m.vertex_count()], PotentialSpec::Stability).map_err(|e| e.to_string())?;
    let q = sys.quadratic_form(&vec![1.0; m.vertex_count()]);
    let patch = make_entry("sphere", &CatalogParams::new(2)).map_err(|e| e.to_string())?.surface();
    let mut direct = 0.0;
    for s in geometric_samples(&patch, &space, &Quadrature::default()).map_err(|e| e.to_string())? {
        let x = s.position.as_slice();
        let ric = space.bakry_emery_ricci(x, s.normal.as_slice()).map_err(|e| e.to_string())?;
        let f = space.f(x).map_err(|e| e.to_string())?;
        direct -= (s.shape_sq + ric) * (-f).exp() * s.dv;
    }
    let exact = -16.0 * PI / E;
    check(rel(q, exact) <= FORM_REL_TOL, format!("assembled {q} vs {exact}"))?;
    check(rel(q, direct) <= FORM_REL_TOL, format!("assembled {q} vs quadrature {direct}"))?;
    check(rel(direct, exact) <= 1e-10, format!("quadrature {direct} vs {exact}"))?;
    Ok(format!("Q_f(1,1) = {q:.6}, quadrature {direct:.6}, exact {exact:.6}"))
}

fn monotonicity_criterion() -> Outcome {
    let families = [
        "exhaustion --surface plane --n 2 --subdivision 3 --domains 2,4,6,8 --count 4",
        "exhaustion --surface plane --n 2 --subdivision 3 --domains 1,2,3,4,5,6,7,8 --count 4",
        "exhaustion --surface cylinder --n 2 --k 1 --subdivision 4 --domains 2,4,6 --count 8",
        "exhaustion --surface plane --n 2 --subdivision 3 --domains 2,4,8 --weight zero --count 4",
        "exhaustion --surface plane --n 2 --subdivision 3 --domains 2,4,6,8 --count 4 --weight custom --expr (x1^2+x2^2+x3^2)/4+0.2*sin(x1)*x2",
    ];
    let mut violations = 0;
    let mut summary = Vec::new();
    for args in families {
        let Results::Exhaustion(r) = cli(args)?.results else { unreachable!() };
        let idx = r.report.indices;
        if !nondecreasing(&idx) || !r.report.monotone {
            violations += 1;
        }
        summary.push(format!("{idx:?}"));
    }
    check(violations == 0, format!("{violations} violations: {}", summary.join(" ")))?;
    Ok(format!("{} families, 0 violations: {}", families.len(), summary.join(" ")))
}

fn determinism_criterion() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_fmin");
    let runs = [
        "index --surface sphere --n 2 --subdivision 3 --count 6",
        "identities --weight gaussian --n 2 --samples 10",
        "exhaustion --surface plane --n 2 --subdivision 2 --domains 2,4,6,8 --count 4",
        "refine-study --surface sphere --levels 1,2,3 --format csv",
    ];
    for args in runs {
        let once = || {
            Process::new(bin)
                .args(args.split_whitespace())
                .output()
                .map_err(|e| format!("{bin}: {e}"))
        };
        let (a, b) = (once()?, once()?);
        check(a.status.success() && b.status.success(), format!("`{args}` exited with {}", a.status))?;
        check(!a.stdout.is_empty() && a.stdout == b.stdout, format!("`{args}` differs between runs"))?;
    }
    Ok(format!("{} commands byte-identical across two runs", runs.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("sphere index", sphere_index),
        ("plane index by exhaustion", plane_index),
        ("cylinder index, separable", cylinder_index),
        ("conformal identity audit", identity_audit_criterion),
        ("shrinker residual", shrinker_residual_criterion),
        ("weighted area bound", area_bound_criterion),
        ("quadratic form consistency", quadratic_form_criterion),
        ("exhaustion monotonicity", monotonicity_criterion),
        ("determinism", determinism_criterion),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} [{secs:.1} s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
