use std::fs;
use std::process::{Command, Output};

use nilreturn::retmap::{Classification, Sign};
use nilreturn_cli::{run_job, JobDocument, ReportDocument, Status};

fn job(text: &str) -> JobDocument {
    JobDocument::from_json(text).unwrap()
}

fn run_cli(doc: &str, extra: &[&str]) -> (Output, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("job.json");
    fs::write(&input, doc).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_nilreturn"))
        .arg("--input")
        .arg(&input)
        .args(extra)
        .output()
        .unwrap();
    (out, dir)
}

#[test]
fn hamiltonian_job_is_a_center_candidate() {
    let r = run_job(job(r#"{"f":[1],"g":[0],"k":1,"l":2,"order":6}"#));
    assert_eq!(r.status, Status::Ok);
    let rm = r.return_map.unwrap();
    assert!(rm.coefficients[2..].iter().all(|z| *z == 0.0));
    assert_eq!(rm.classification, Classification::CenterCandidate { verified_up_to: 6 });
}

#[test]
fn constant_field_job_with_verification() {
    let r = run_job(job(r#"{"f":[1],"g":[1],"k":1,"l":2,"order":4,"verify":true}"#));
    assert_eq!(r.status, Status::Ok, "{:?}", r.errors);
    let rm = r.return_map.unwrap();
    assert!((rm.coefficients[3] - std::f64::consts::PI).abs() <= 1e-6);
    assert_eq!(
        rm.classification,
        Classification::Focus {
            order: 3,
            sign: Sign::Positive
        }
    );
    let v = r.verification.unwrap();
    assert!(v.pass, "{v:#?}");
    assert!(v.fit.unwrap().slope >= 3.8);
}

#[test]
fn resonant_case_exits_with_validation_code() {
    let (out, _dir) = run_cli(r#"{"f":[1],"g":[1],"k":2,"l":1}"#, &["--no-timestamp"]);
    assert_eq!(out.status.code(), Some(2));
    let r = ReportDocument::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(r.errors[0].code, "k_equals_l_plus_1");
    assert_eq!(r.errors[0].stage, "normalize");
}

#[test]
fn k_above_range_is_rejected() {
    let r = run_job(job(r#"{"f":[1],"g":[1],"k":3,"l":0}"#));
    assert_eq!(r.status, Status::ValidationError);
    assert_eq!(r.errors[0].code, "k_range");
}

#[test]
fn unknown_field_is_rejected() {
    assert!(JobDocument::from_json(r#"{"f":[1],"g":[1],"k":1,"l":2,"colour":"red"}"#)
        .unwrap_err()
        .contains("colour"));
    let (out, _dir) = run_cli(r#"{"f":[1],"g":[1],"k":1,"l":2,"colour":"red"}"#, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stdout).unwrap().contains("invalid_input"));
}

#[test]
fn missing_field_is_rejected() {
    assert!(JobDocument::from_json(r#"{"f":[1],"k":1,"l":2}"#).is_err());
    assert!(JobDocument::from_json(r#"{"f":[1],"g":[1],"k":"one","l":2}"#).is_err());
}

#[test]
fn report_round_trips_losslessly() {
    let r = run_job(job(r#"{"f":[1,0.3],"g":[0.7,-1.1],"k":1,"l":2,"order":8,"verify":true}"#));
    let text = r.to_json();
    let back = ReportDocument::from_json(&text).unwrap();
    assert_eq!(back, r);
    assert_eq!(back.to_json(), text);
}

#[test]
fn identical_jobs_give_identical_bytes() {
    let doc = r#"{"f":[1],"g":[1,1],"k":2,"l":3,"order":6,"verify":true}"#;
    let (a, _d1) = run_cli(doc, &["--no-timestamp"]);
    let (b, _d2) = run_cli(doc, &["--no-timestamp"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(!String::from_utf8(a.stdout).unwrap().contains("timestamp"));
}

#[test]
fn timestamp_present_by_default() {
    let (out, _dir) = run_cli(r#"{"f":[1],"g":[0],"k":1,"l":1,"order":4}"#, &[]);
    let r = ReportDocument::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert!(r.timestamp.is_some());
}

#[test]
fn flags_override_document() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("report.json");
    let (out, _d) = run_cli(
        r#"{"f":[1],"g":[1],"k":1,"l":2,"order":10}"#,
        &["--order", "5", "--verify", "--epsilons", "0.02,0.04,0.06", "--tol", "1e-12", "--output", target.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r = ReportDocument::from_json(&fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(r.job.order, 5);
    assert_eq!(r.job.epsilons, vec![0.02, 0.04, 0.06]);
    assert_eq!(r.job.tolerances.integrator, Some(1e-12));
    assert_eq!(r.return_map.unwrap().coefficients.len(), 6);
    assert_eq!(r.verification.unwrap().samples.len(), 3);
}

#[test]
fn output_path_from_document() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from_doc.json");
    let doc = format!(r#"{{"f":[1],"g":[0],"k":1,"l":1,"order":4,"output_path":{:?}}}"#, target.to_str().unwrap());
    let (out, _d) = run_cli(&doc, &["--no-timestamp"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(ReportDocument::from_json(&fs::read_to_string(&target).unwrap()).is_ok());
}

#[test]
fn table_mode_rows() {
    let (out, _d) = run_cli(r#"{"f":[1],"g":[1],"k":1,"l":2,"order":4}"#, &["--table"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "eps\tz_series\tz_numeric\tresidual");
    assert_eq!(lines.len(), 5);
    for row in &lines[1..] {
        let cols: Vec<f64> = row.split('\t').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols.len(), 4);
        assert_eq!((cols[2] - cols[1]).abs(), cols[3]);
    }
}

#[test]
fn epsilon_beyond_radius_is_a_validation_error() {
    let r = run_job(job(r#"{"f":[1],"g":[1],"k":1,"l":2,"order":4,"verify":true,"epsilons":[0.02,0.04,0.9]}"#));
    assert_eq!(r.status, Status::ValidationError);
    assert!(r.errors.iter().any(|e| e.code == "out_of_radius"));
}

#[test]
fn order_below_minimum() {
    let r = run_job(job(r#"{"f":[1],"g":[1],"k":1,"l":2,"order":2}"#));
    assert_eq!(r.status, Status::ValidationError);
    assert_eq!(r.errors[0].code, "order_too_low");
}
