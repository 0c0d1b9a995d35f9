//! End-to-end tests of the `wsr` binary: exit codes, output files, and the
//! revalidation contract (reported rates reproduce from the witness).

use std::path::Path;
use std::process::{Command, Output};

use wsr_core::channel::rates_from_sinrs;
use wsr_core::sampling::sample_siso;

fn wsr_cmd(out_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wsr"))
        .args(args)
        .args(["--out-dir", out_dir.to_str().unwrap()])
        .output()
        .expect("the wsr binary launches")
}

fn read_json(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("result.json")).expect("result.json exists");
    serde_json::from_str(&text).expect("result.json parses")
}

// ---------------------------------------------------------------------------
// exit codes
// ---------------------------------------------------------------------------

#[test]
fn malformed_channel_json_exits_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let out = wsr_cmd(dir.path(), &["solve", "--channel", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "malformed config is an input error");
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json"), "stderr names the offending file: {err}");
}

#[test]
fn unknown_experiment_exits_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = wsr_cmd(dir.path(), &["repro", "fig9"]);
    assert_eq!(out.status.code(), Some(2), "unknown experiment id is an input error");
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("fig9"), "stderr echoes the unknown id: {err}");
}

#[test]
fn topology_mismatch_with_config_file_exits_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("siso.json");
    std::fs::write(&cfg, wsr_core::fixtures::THREE_USER_JSON).unwrap();
    let out =
        wsr_cmd(dir.path(), &["solve", "--channel", cfg.to_str().unwrap(), "--topology", "simo"]);
    assert_eq!(out.status.code(), Some(2), "contradicting the config file is an input error");
}

#[test]
fn baseline_rejects_scalar_channels() {
    let dir = tempfile::tempdir().unwrap();
    let out = wsr_cmd(dir.path(), &["baseline", "--topology", "siso", "--users", "2"]);
    assert_eq!(out.status.code(), Some(2), "no pricing baseline exists for scalar channels");
}

#[test]
fn oversized_power_grid_exits_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = wsr_cmd(
        dir.path(),
        &["oracle", "--topology", "siso", "--users", "5", "--grid-points", "41"],
    );
    assert_eq!(out.status.code(), Some(2), "a grid beyond the resource cap is an input error");
}

#[test]
fn unreachable_minimum_rate_exits_with_solver_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("one.json");
    std::fs::write(
        &cfg,
        r#"{"topology":"siso","gain":[[1.0]],"noise":[1.0],"pmax":[3.0],"weights":[1.0]}"#,
    )
    .unwrap();
    // Single-user capacity is 2 bits; demanding 2.5 is infeasible, not malformed.
    let out = wsr_cmd(
        dir.path(),
        &["solve", "--channel", cfg.to_str().unwrap(), "--rmin", "2.5"],
    );
    assert_eq!(out.status.code(), Some(1), "an unreachable rate floor is a solver failure");
}

// ---------------------------------------------------------------------------
// solve output contract
// ---------------------------------------------------------------------------

#[test]
fn single_user_solve_reports_the_exact_capacity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("one.json");
    std::fs::write(
        &cfg,
        r#"{"topology":"siso","gain":[[1.0]],"noise":[1.0],"pmax":[3.0],"weights":[1.0]}"#,
    )
    .unwrap();
    let out = wsr_cmd(dir.path(), &["solve", "--channel", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let json = read_json(dir.path());
    assert_eq!(
        json["wsr"].as_f64(),
        Some(2.0),
        "log2(1 + 3) = 2 exactly; no interference means no bisection error"
    );
    assert_eq!(json["solver"]["termination"].as_str(), Some("converged"));
}

#[test]
fn solve_writes_the_full_output_set_with_the_documented_trace_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = wsr_cmd(
        dir.path(),
        &["solve", "--topology", "siso", "--users", "2", "--seed", "3", "--eta", "0.1"],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(
        trace.starts_with("iteration,upper_bound,lower_bound,num_vertices\n"),
        "trace.csv leads with the documented header, got: {}",
        trace.lines().next().unwrap_or("")
    );
    assert!(trace.lines().count() > 1, "trace.csv holds at least one iteration row");
    assert!(dir.path().join("report.md").exists(), "report.md is written");
    let json = read_json(dir.path());
    let lower = json["solver"]["lower_bound"].as_f64().unwrap();
    let upper = json["solver"]["upper_bound"].as_f64().unwrap();
    assert!(lower <= upper + 1e-12, "bounds stay ordered: {lower} vs {upper}");
}

#[test]
fn identical_runs_produce_byte_identical_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["solve", "--topology", "simo", "--users", "2", "--antennas", "2", "--seed", "11"];
    assert_eq!(wsr_cmd(a.path(), &args).status.code(), Some(0));
    assert_eq!(wsr_cmd(b.path(), &args).status.code(), Some(0));
    for name in ["result.json", "trace.csv", "report.md"] {
        let left = std::fs::read(a.path().join(name)).unwrap();
        let right = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(left, right, "{name} is reproducible byte-for-byte");
    }
}

#[test]
fn reported_rates_reproduce_from_the_witness_through_the_channel_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = wsr_cmd(
        dir.path(),
        &["solve", "--topology", "siso", "--users", "3", "--seed", "7", "--eta", "0.2"],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let json = read_json(dir.path());
    let reported: Vec<f64> =
        json["rates"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let powers: Vec<f64> = json["witness"]["powers"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    // Rebuild the identical instance (sampling defaults: pmax 3, sigma2 1)
    // and push the witness back through the channel model.
    let ch = sample_siso(3, 3.0, 1.0, 7);
    let recomputed = rates_from_sinrs(&ch.sinr(&powers));
    for (i, (r, c)) in reported.iter().zip(recomputed.iter()).enumerate() {
        assert!(
            (r - c).abs() <= 1e-6,
            "user {i}: reported {r} vs recomputed {c}; the JSON must describe \
             exactly what the witness achieves"
        );
    }
}

// ---------------------------------------------------------------------------
// oracle and baseline commands
// ---------------------------------------------------------------------------

#[test]
fn grid_oracle_on_decoupled_users_finds_full_power_capacity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ortho.json");
    std::fs::write(
        &cfg,
        r#"{"topology":"siso","gain":[[1.0,0.0],[0.0,1.0]],"noise":[1.0,1.0],
            "pmax":[3.0,3.0],"weights":[1.0,1.0]}"#,
    )
    .unwrap();
    let out = wsr_cmd(dir.path(), &["oracle", "--channel", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let json = read_json(dir.path());
    assert_eq!(
        json["wsr"].as_f64(),
        Some(4.0),
        "two decoupled users at full power contribute 2 bits each"
    );
}

#[test]
fn baseline_writes_a_trajectory_and_revalidated_rates() {
    let dir = tempfile::tempdir().unwrap();
    let out = wsr_cmd(
        dir.path(),
        &["baseline", "--topology", "simo", "--users", "2", "--antennas", "2", "--seed", "5"],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let traj = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(
        traj.starts_with("sweep,wsr,max_power_change\n"),
        "trajectory.csv leads with the documented header"
    );
    let json = read_json(dir.path());
    let wsr = json["wsr"].as_f64().unwrap();
    let rates: Vec<f64> =
        json["rates"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let sum: f64 = rates.iter().sum();
    assert!(
        (wsr - sum).abs() <= 1e-9,
        "unit weights make the reported wsr the plain sum of the revalidated rates"
    );
}

// ---------------------------------------------------------------------------
// repro smoke
// ---------------------------------------------------------------------------

#[test]
fn fig3_reproduction_reports_solver_grid_and_reference_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = wsr_cmd(dir.path(), &["repro", "fig3"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let json = read_json(dir.path());
    assert_eq!(json["experiment"].as_str(), Some("fig3"));
    assert_eq!(json["reference"]["wsr"].as_f64(), Some(11.4605));
    let wsr = json["wsr"].as_f64().unwrap();
    let grid = json["grid_wsr"].as_f64().unwrap();
    assert!(
        (wsr - grid).abs() <= 0.5,
        "solver ({wsr}) and exhaustive grid ({grid}) agree within the stop threshold"
    );
    let report = std::fs::read_to_string(dir.path().join("report.md")).unwrap();
    assert!(
        report.contains("sigma^2 = 0.1"),
        "the report flags the assumed noise variance behind the reference values"
    );
    assert!(dir.path().join("trace.csv").exists(), "the reproduction writes its trace");
}
