use std::path::{Path, PathBuf};
use std::process::{Command as Proc, Output};

use infogeo_cli::report::{Report, ResultBody};
use infogeo_cli::spec::{self, PointsSpec};
use infogeo_cli::{exit_code, parse_report, run};
use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn spec_path(name: &str) -> PathBuf {
    root().join("specs").join(name)
}

fn example_specs() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(root().join("specs"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    v.sort();
    v
}

fn infogeo(args: &[&str]) -> Output {
    Proc::new(env!("CARGO_BIN_EXE_infogeo")).args(args).env_remove("INFOGEO_SEED").output().unwrap()
}

fn run_file(name: &str) -> Report {
    let text = std::fs::read_to_string(spec_path(name)).unwrap();
    run(&spec::parse(&text).unwrap()).unwrap()
}

fn write_spec(dir: &tempfile::TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn load_json(p: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn schema_validators() -> (jsonschema::Validator, jsonschema::Validator) {
    let spec_schema = load_json(root().join("schemas/job-spec.v1.schema.json"));
    let report_schema = load_json(root().join("schemas/report.v1.schema.json"));
    let id = spec_schema["$id"].as_str().unwrap().to_string();
    let spec_v = jsonschema::validator_for(&spec_schema).unwrap();
    let registry = Box::leak(Box::new(jsonschema::Registry::new().add(id, spec_schema).unwrap().prepare().unwrap()));
    let report_v = jsonschema::options().with_registry(registry).build(&report_schema).unwrap();
    (spec_v, report_v)
}

#[test]
fn fisher_on_bernoulli_at_one_half_is_four() {
    let out = infogeo(&["run", "--spec", spec_path("fisher-bernoulli.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report = parse_report(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    let Some(ResultBody::Fisher(f)) = &report.results[0].result else { panic!("no fisher result") };
    assert_eq!(f.fisher.dims, [1, 1]);
    assert!((f.fisher.data[0].0 - 4.0).abs() < 1e-12);
    assert_eq!(f.rank, 1);
}

#[test]
fn normal_mixture_scan_finds_the_axes() {
    let report = run_file("scan-normal-mixture.json");
    assert_eq!(report.results.len(), 441);
    let rel = 1e-8;
    for r in &report.results {
        let Some(ResultBody::Scan(s)) = &r.result else { panic!("point {:?} failed: {:?}", r.xi, r.error) };
        let (a, b) = (r.xi[0], r.xi[1]);
        let on_axis = a == 0.0 || b.abs() < 1e-12;
        if on_axis {
            assert!(s.rank < 2, "rank {} on the axis at {:?}", s.rank, r.xi);
            assert_eq!(s.rank, usize::from(!(a == 0.0 && b.abs() < 1e-12)), "at {:?}", r.xi);
        } else if s.rank < 2 {
            // Only where the closed form itself is below threshold resolution:
            // at a = 1, G = [[e^{b²} − 1, b], [b, 1]].
            assert_eq!(a, 1.0, "unexpected rank drop at {:?}", r.xi);
            let g = nalgebra::Matrix2::new((b * b).exp_m1(), b, b, 1.0);
            let e = g.symmetric_eigenvalues();
            let ratio = e.min() / e.max();
            assert!(ratio < 10.0 * rel, "closed-form ratio {ratio:e} at {:?}", r.xi);
        }
    }
}

#[test]
fn verify_multinomial_exits_zero_with_all_gaps_certified() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("r.json");
    let out = infogeo(&[
        "run",
        "--spec",
        spec_path("verify-multinomial.json").to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = parse_report(&std::fs::read_to_string(out_path).unwrap()).unwrap();
    assert_eq!(report.summary.uncertified, Some(0));
    assert_eq!(report.summary.certified, Some(8));
    assert!(report.facts.iter().all(|f| f.ok), "{:?}", report.facts);
    for r in &report.results {
        let Some(ResultBody::Gap(g)) = &r.result else { panic!() };
        if r.estimator.as_deref() == Some("empirical") {
            assert!(g.gap.data.iter().all(|v| v.0.abs() <= 1e-10));
        }
    }
}

#[test]
fn validate_accepts_and_rejects_with_field_paths() {
    for p in example_specs() {
        let out = infogeo(&["validate", "--spec", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", p.display());
        assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), r#"{"valid":true}"#);
    }
    let dir = tempfile::tempdir().unwrap();
    let bad = write_spec(&dir, "bad.json", r#"{"version":1,"command":"plot","model":{"name":"bernoulli"}}"#);
    let out = infogeo(&["validate", "--spec", &bad]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["valid"], false);
    assert_eq!(v["errors"][0]["path"], "command");

    let mc = write_spec(&dir, "mc.json", r#"{"version":1,"command":"verify","model":{"name":"bernoulli"},"monte_carlo":{"samples":1000}}"#);
    let out = infogeo(&["validate", "--spec", &mc]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["errors"][0]["path"], "seed");
    assert_eq!(v["errors"][0]["message"], "seed required for Monte Carlo");
}

#[test]
fn seed_can_come_from_flag_or_environment() {
    let dir = tempfile::tempdir().unwrap();
    let mc = write_spec(
        &dir,
        "mc.json",
        r#"{"version":1,"command":"crbound","model":{"name":"bernoulli"},"points":{"list":[[0.3]]},"monte_carlo":{"samples":1000}}"#,
    );
    let out = infogeo(&["run", "--spec", &mc]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["errors"][0]["message"], "seed required for Monte Carlo");

    let flag = infogeo(&["run", "--spec", &mc, "--seed", "11"]);
    assert_eq!(flag.status.code(), Some(0));
    let env = Proc::new(env!("CARGO_BIN_EXE_infogeo")).args(["run", "--spec", &mc]).env("INFOGEO_SEED", "11").output().unwrap();
    assert_eq!(env.status.code(), Some(0));
    assert_eq!(flag.stdout, env.stdout);
    let report = parse_report(std::str::from_utf8(&env.stdout).unwrap()).unwrap();
    assert_eq!(report.seed, Some(11));
}

#[test]
fn io_errors_are_machine_readable() {
    let out = infogeo(&["run", "--spec", "/nonexistent/spec.json"]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["errors"][0]["kind"], "io");
}

#[test]
fn per_point_failures_do_not_abort_the_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_spec(
        &dir,
        "s.json",
        r#"{"version":1,"command":"fisher","model":{"name":"bernoulli"},"points":{"list":[[0.5],[1.5],[0.25]]}}"#,
    );
    let out = infogeo(&["run", "--spec", &s]);
    assert_eq!(out.status.code(), Some(1));
    let report = parse_report(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert_eq!(report.summary.errors, 1);
    assert_eq!(report.results[1].error.as_ref().unwrap().kind, "out-of-domain");
    assert!(report.results[2].result.is_some());
}

#[test]
fn uncertified_verify_gaps_exit_with_two() {
    let mut report = run_file("verify-multinomial.json");
    assert_eq!(exit_code(&report), 0);
    if let Some(ResultBody::Gap(g)) = &mut report.results[0].result {
        g.psd_certified = false;
    }
    report.summary.uncertified = Some(1);
    assert_eq!(exit_code(&report), 2);
    report.spec.command = infogeo_cli::Command::Crbound;
    assert_eq!(exit_code(&report), 0);
}

#[test]
fn reports_round_trip_losslessly() {
    for p in example_specs() {
        let text = std::fs::read_to_string(&p).unwrap();
        let report = run(&spec::parse(&text).unwrap()).unwrap();
        let json = serde_json::to_string_pretty(&report).unwrap();
        let back = parse_report(&json).unwrap();
        assert_eq!(back, report, "{}", p.display());
        assert_eq!(serde_json::to_string_pretty(&back).unwrap(), json);
    }
}

#[test]
fn shipped_schemas_agree_with_the_types() {
    let (spec_v, report_v) = schema_validators();
    for p in example_specs() {
        let spec_json = load_json(p.clone());
        assert!(spec_v.is_valid(&spec_json), "{}: {:?}", p.display(), spec_v.iter_errors(&spec_json).map(|e| e.to_string()).collect::<Vec<_>>());
        let report = run(&spec::parse(&spec_json.to_string()).unwrap()).unwrap();
        let report_json = serde_json::to_value(&report).unwrap();
        let errors: Vec<String> = report_v.iter_errors(&report_json).map(|e| format!("{} at {}", e, e.instance_path())).collect();
        assert!(errors.is_empty(), "{}: {errors:?}", p.display());
    }

    let schema = load_json(root().join("schemas/job-spec.v1.schema.json"));
    for cmd in schema["properties"]["command"]["enum"].as_array().unwrap() {
        let text = format!(r#"{{"version":1,"command":{cmd}}}"#);
        assert!(spec::deserialize(&text).is_ok(), "{cmd} rejected by the parser");
    }
    assert!(spec::deserialize(r#"{"version":1,"command":"plot"}"#).is_err());
    let names: Vec<&str> = schema["$defs"]["model"]["properties"]["name"]["enum"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    let mut expected: Vec<&str> = infogeo_core::zoo::ZOO_NAMES.to_vec();
    expected.extend(["product", "tabulated"]);
    assert_eq!(names, expected);

    let unknown: Value = serde_json::json!({"version": 1, "command": "fisher", "colour": "red"});
    assert!(!spec_v.is_valid(&unknown));
    assert!(spec::deserialize(&unknown.to_string()).is_err());
}

#[test]
fn csv_export_has_one_row_per_point() {
    let out = infogeo(&["run", "--spec", spec_path("scan-normal-mixture.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::ReaderBuilder::new().from_reader(out.stdout.as_slice());
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["index", "xi", "rank", "lambda_max", "lambda_min", "mass_residual", "error"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 441);
    assert_eq!(&rows[10][1], "0;0");
    assert_eq!(&rows[10][2], "0");
}

#[test]
fn thread_count_does_not_change_the_report() {
    let spec = spec_path("verify-multinomial.json");
    let one = infogeo(&["run", "--spec", spec.to_str().unwrap(), "--threads", "1"]);
    let many = infogeo(&["run", "--spec", spec.to_str().unwrap(), "--threads", "4"]);
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, many.stdout);
}

#[test]
fn flag_overrides_are_echoed_in_the_report() {
    let spec = spec_path("fisher-bernoulli.json");
    let out = infogeo(&["run", "--spec", spec.to_str().unwrap(), "--rank-threshold", "1e-6"]);
    let report = parse_report(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert_eq!(report.spec.thresholds.unwrap().rank_rel, Some(1e-6));
    let Some(ResultBody::Fisher(f)) = &report.results[0].result else { panic!() };
    assert!((f.cutoff.0 - 4e-6).abs() < 1e-18);
    assert!(matches!(report.spec.points, Some(PointsSpec::List(_))));
}
