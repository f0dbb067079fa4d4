use std::process::{Command, Output};

use fmin_core::hypersurface::mesh::icosphere;
use fmin_core::hypersurface::off::write_off;
use serde_json::Value;

fn fmin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fmin")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn index_report_schema() {
    let v = json(&fmin(&["index", "--surface", "sphere", "--n", "2", "--subdivision", "3", "--count", "6"]));
    assert_eq!(v["spec_version"], 1);
    assert_eq!(v["command"], "index");
    assert_eq!(v["config"]["surface"]["source"], "catalog");
    assert_eq!(v["config"]["surface"]["name"], "sphere");
    assert_eq!(v["results"]["f_index"], 4);
    assert_eq!(v["results"]["exact_index"], 4);
    assert_eq!(v["results"]["spectrum"]["eigenvalues"].as_array().unwrap().len(), 6);
    assert_eq!(v["provenance"]["meshes"][0]["vertices"], 642);
    assert!(v["provenance"].get("wall_clock_seconds").is_none());
}

#[test]
fn floats_are_written_with_seventeen_digits() {
    let out = fmin(&["residual", "--surface", "torus", "--radii", "2,1"]);
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let line = text.lines().find(|l| l.contains("\"sup_norm\"")).unwrap();
    let num = line.split(':').nth(1).unwrap().trim().trim_end_matches(',');
    let mantissa = num.split('e').next().unwrap().trim_start_matches('-');
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{num}");
    assert!(json(&out)["results"]["sup_norm"].as_f64().unwrap() > 0.1);
}

#[test]
fn identities_example() {
    let v = json(&fmin(&["identities", "--weight", "gaussian", "--n", "2", "--samples", "50"]));
    assert!(v["results"]["max_rel_err"].as_f64().unwrap() <= 1e-4);
    let reports = v["results"]["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 4);
    for r in reports {
        assert_eq!(r["samples"].as_array().unwrap().len(), 50);
        for key in ["identity", "n", "weight", "max_rel_err"] {
            assert!(r.get(key).is_some(), "{key}");
        }
        let s = &r["samples"][0];
        for key in ["x", "closed", "oracle", "abs_err", "rel_err"] {
            assert!(s.get(key).is_some(), "{key}");
        }
    }
}

#[test]
fn custom_weight_audit() {
    let v = json(&fmin(&[
        "identities",
        "--weight",
        "custom",
        "--expr",
        "(x1^2 + x2^2 + x3^2)/4 + 0.2*sin(x1)*x2",
        "--samples",
        "10",
    ]));
    assert_eq!(v["provenance"]["weight_derivatives"], "finite_difference");
    assert_eq!(v["results"]["reports"].as_array().unwrap().len(), 3);
}

#[test]
fn csv_tables() {
    let out = fmin(&["refine-study", "--surface", "sphere", "--levels", "1,2,3", "--format", "csv"]);
    assert!(out.status.success());
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(
        r.headers().unwrap().iter().collect::<Vec<_>>(),
        ["subdivision", "vertices", "free_dofs", "f_index", "lowest", "max_abs_error", "rate"]
    );
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    let errs: Vec<f64> = rows.iter().map(|row| row[5].parse().unwrap()).collect();
    assert!(errs[2] < errs[1] && errs[1] < errs[0], "{errs:?}");
    assert_eq!(&rows[2][3], "4");
}

#[test]
fn off_input_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let mesh_path = dir.path().join("sphere.off");
    write_off(&icosphere(2.0, 3), &mesh_path).unwrap();
    let report = dir.path().join("report.json");
    let out = fmin(&[
        "index",
        "--off",
        mesh_path.to_str().unwrap(),
        "--count",
        "5",
        "--output",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["config"]["surface"]["source"], "off");
    assert_eq!(v["results"]["f_index"], 4);
    assert!(v["results"]["exact_index"].is_null());
}

#[test]
fn bounds_report() {
    let v = json(&fmin(&["bounds", "--surface", "sphere"]));
    let b = &v["results"]["area_bound"];
    assert_eq!(b["holds"], true);
    assert_eq!(b["genus"], 0);
    let v = json(&fmin(&["bounds", "--surface", "plane", "--truncation", "3"]));
    assert!(v["results"]["area_bound"].is_null());
    assert!(v["results"]["area_bound_skipped"].as_str().unwrap().contains("closed"));
    assert!(v["results"]["volume_growth"]["ratio"].as_f64().unwrap() > 0.0);
}

#[test]
fn configuration_errors_exit_with_two() {
    let cases: &[&[&str]] = &[
        &["index", "--surface", "hyperboloid"],
        &["index"],
        &["index", "--surface", "torus", "--n", "3"],
        &["identities", "--weight", "custom"],
        &["identities", "--weight", "custom", "--expr", "x1 + y"],
        &["identities", "--weight", "custom", "--expr", "x9", "--n", "2"],
        &["index", "--off", "/nonexistent/mesh.off"],
        &["residual", "--surface", "sphere", "--weight", "zero"],
        &["index", "--surface", "torus", "--method", "separable"],
        &["exhaustion", "--surface", "sphere"],
        &["exhaustion", "--surface", "plane", "--domains", "4,2"],
        &["index", "--surface", "sphere", "--subdivision", "1", "--count", "500"],
        &["nonsense"],
    ];
    for args in cases {
        let out = fmin(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty(), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn solver_failures_exit_with_three() {
    // The weight is infinite everywhere, so evaluation fails once assembly starts.
    let out = fmin(&["index", "--surface", "sphere", "--subdivision", "1", "--weight", "custom", "--expr", "1/(x1-x1)"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn thread_variable() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_fmin"))
            .args(["index", "--surface", "sphere", "--subdivision", "2"])
            .env("FMIN_THREADS", threads)
            .output()
            .unwrap()
    };
    let (one, two) = (run("1"), run("2"));
    assert!(one.status.success() && two.status.success());
    assert_eq!(one.stdout, two.stdout);
    assert_eq!(run("zero").status.code(), Some(2));
    assert_eq!(run("0").status.code(), Some(2));
}

#[test]
fn timing_is_opt_in() {
    let v = json(&fmin(&["residual", "--surface", "sphere", "--timing"]));
    assert!(v["provenance"]["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
}
