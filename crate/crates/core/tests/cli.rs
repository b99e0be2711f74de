use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use clap::Parser;
use schrodinger_poisson::cli::{
    exit_code, parse_lambda_list, run, run_sweep, Cli, RunConfig, CONSTANTS_COLUMNS, EXIT_CONFIG, EXIT_NOT_CONVERGED,
    EXIT_OK, EXIT_PRECONDITION,
};
use schrodinger_poisson::Error;
use tempfile::TempDir;

const SMALL: &str = "[grid]\nhalf_width = 12.0\npoints = 24\n";

fn spcrit(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spcrit"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "error")
        .output()
        .expect("spawn spcrit")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn column<'a>(table: &'a [Vec<String>], name: &str) -> Vec<&'a str> {
    let idx = table[0].iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    table[1..].iter().map(|row| row[idx].as_str()).collect()
}

#[test]
fn constants_csv_is_deterministic_with_five_columns() {
    let tmp = TempDir::new().unwrap();
    let mut bytes = Vec::new();
    for run_dir in ["a", "b"] {
        let out = spcrit(&["constants", "--out", run_dir], tmp.path());
        assert_eq!(out.status.code(), Some(EXIT_OK));
        bytes.push(fs::read(tmp.path().join(run_dir).join("constants.csv")).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
    let table = read_csv(&tmp.path().join("a/constants.csv"));
    assert_eq!(table.len(), 2);
    assert_eq!(table[0], CONSTANTS_COLUMNS);
    for v in &table[1] {
        let x: f64 = v.parse().unwrap();
        assert!(x.is_finite() && x > 0.0);
    }
}

#[test]
fn q_outside_the_open_interval_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[problem]\nq = 2.0\n");
    let out = spcrit(&["constants", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("q must lie in (1,2)"), "{text}");
}

#[test]
fn missing_f_spec_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[problem]\nk = \"constant\"\nk_value = 1.0\n");
    let out = spcrit(&["solve", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&out.stdout).contains("missing the `f` spec"));
}

#[test]
fn config_errors_name_the_line() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[grid]\npoints = 24\nbogus = 1\n");
    let out = spcrit(&["constants", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&out.stdout).contains("line 3"));
    assert_eq!(spcrit(&["constants", "--config", "no/such/file.toml"], tmp.path()).status.code(), Some(EXIT_CONFIG));
    assert_eq!(spcrit(&["frobnicate"], tmp.path()).status.code(), Some(EXIT_CONFIG));
}

#[test]
fn lambda_above_threshold_needs_force() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &format!("{SMALL}[problem]\nlambda_fraction = 2.0\n"));
    let refused = spcrit(&["solve", "--config", &cfg, "--out", "refused"], tmp.path());
    assert_eq!(refused.status.code(), Some(EXIT_PRECONDITION));

    let forced = spcrit(&["solve", "--config", &cfg, "--force", "--out", "forced"], tmp.path());
    assert!(forced.status.code().is_some());
    let summary = read_csv(&tmp.path().join("forced/summary.csv"));
    assert!(summary.len() > 1);
    assert!(column(&summary, "guaranteed").iter().all(|g| *g == "false"));
}

#[test]
fn solve_writes_summary_logs_and_dumps() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = spcrit(&["solve", "--config", &cfg, "--out", "run"], tmp.path());
    let dir = tmp.path().join("run");
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&out.stdout));
    let summary = read_csv(&dir.join("summary.csv"));
    assert_eq!(column(&summary, "kind"), ["saddle", "ball_min", "least_energy"]);
    assert!(column(&summary, "guaranteed").iter().all(|g| *g == "true"));
    let energies: Vec<f64> = column(&summary, "J").iter().map(|v| v.parse().unwrap()).collect();
    assert!(energies[0] > 0.0 && energies[1] < 0.0);

    for kind in ["saddle", "ball_min"] {
        let log = read_csv(&dir.join(format!("iterates_{kind}.csv")));
        assert_eq!(log[0], ["iteration", "J", "grad_norm", "h1_norm"]);
        let values = schrodinger_poisson::cli::output::read_field_values(&dir.join(format!("u_{kind}.bin"))).unwrap();
        assert_eq!(values.len(), 24 * 24 * 24);
        let hdr = fs::read_to_string(dir.join(format!("u_{kind}.hdr"))).unwrap();
        assert!(hdr.contains("points = 24") && hdr.contains("float64-le"));
    }
    assert!(dir.join("checks.csv").exists());
}

#[test]
fn verify_on_an_unresolved_grid_is_a_precondition_failure() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[grid]\nhalf_width = 12.0\npoints = 16\n[solver]\nverify_samples = 2\ngeometry_samples = 4\n",
    );
    let out = spcrit(&["verify", "--config", &cfg, "--out", "v"], tmp.path());
    assert_eq!(out.status.code(), Some(EXIT_PRECONDITION));
    let table = read_csv(&tmp.path().join("v/verify.csv"));
    assert!(column(&table, "check").contains(&"poisson_scaling"));
}

#[test]
fn empty_lambda_list_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = RunConfig { out_dir: tmp.path().to_path_buf(), ..RunConfig::default() };
    assert!(parse_lambda_list(" , ").unwrap().is_empty());
    let err = run_sweep(&cfg, &[], None).unwrap_err();
    assert!(matches!(err, Error::Usage(_)));
    assert_eq!(exit_code(&err), EXIT_PRECONDITION);
    assert!(matches!(parse_lambda_list("0.2,abc"), Err(Error::Usage(_))));

    let cli = Cli::try_parse_from(["spcrit", "sweep", "--lambdas", ""]).unwrap();
    let mut sink = Vec::new();
    assert_eq!(run(&cli, &mut sink), EXIT_PRECONDITION);
}

#[test]
fn sweep_deduplicates_and_sorts() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = RunConfig::parse(SMALL).unwrap();
    cfg.out_dir = tmp.path().to_path_buf();
    let rows = run_sweep(&cfg, &[0.5, 0.2, 0.5], Some(1)).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].lambda < rows[1].lambda);
    assert_eq!(rows[0].lambda_fraction, 0.2);
    let table = read_csv(&tmp.path().join("sweep.csv"));
    assert_eq!(table.len(), 3);
    for r in &rows {
        assert!(r.converged, "{}", r.status);
        assert!(r.c.unwrap() > 0.0 && r.c_tilde.unwrap() < 0.0);
    }
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_spcrit"))
        .args(["sweep", "--lambdas", "0.5"])
        .current_dir(tmp.path())
        .env("SP_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
}

#[test]
fn exit_codes_follow_the_contract() {
    assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
    assert_eq!(exit_code(&Error::InvalidInstance("x".into())), EXIT_CONFIG);
    assert_eq!(exit_code(&Error::NotConverged { iterations: 1, detail: "x".into() }), EXIT_NOT_CONVERGED);
    assert_eq!(exit_code(&Error::Precondition("x".into())), EXIT_PRECONDITION);
    assert_eq!(exit_code(&Error::Usage("x".into())), EXIT_PRECONDITION);
}
