//! End-to-end checks of the `cqe` binary: flag handling, exit codes,
//! trace/summary formats, and the sweep grid.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cqe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cqe"))
}

fn data(file: &str) -> String {
    format!("{}/../../data/{file}", env!("CARGO_MANIFEST_DIR"))
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf-8 stdout")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn run_writes_consistent_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let summary = dir.path().join("summary.json");
    let output = cqe()
        .args(["run", "--fcidump", &data("h2_0.7414.fcidump")])
        .arg("--trace")
        .arg(&trace)
        .arg("--summary")
        .arg(&summary)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let out = stdout(&output);
    assert!(out.contains("termination: converged"), "{out}");

    let trace_text = read(&trace);
    let mut lines = trace_text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "iter,energy,grad_norm,alpha,n_layers,n_terms,cnot_circuit,cnot_cumulative"
    );
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty());

    let summary: serde_json::Value = serde_json::from_str(&read(&summary)).unwrap();
    assert_eq!(summary["termination"], "converged");
    let iterations = summary["iterations"].as_u64().unwrap();
    assert_eq!(iterations as usize, rows.len());
    // Totals in the summary equal the trace-column aggregates.
    assert_eq!(
        summary["residual_evaluations"].as_u64().unwrap(),
        iterations * summary["pool_size"].as_u64().unwrap()
    );
    let last: Vec<&str> = rows.last().unwrap().split(',').collect();
    assert_eq!(
        summary["cnot_cumulative"].as_u64().unwrap().to_string(),
        last[7]
    );
    assert_eq!(
        summary["cnot_circuit"].as_u64().unwrap().to_string(),
        last[6]
    );
    // Solved H2 sits at its exact ground energy.
    let energy = summary["energy"].as_f64().unwrap();
    assert!((energy - -1.1372701748).abs() < 1e-6);
}

#[test]
fn identical_invocations_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let status = cqe()
            .args([
                "run",
                "--fcidump",
                &data("h2_0.7414.fcidump"),
                "--optimizer",
                "lbfgs",
                "--p-depth",
                "2",
                "--sparsity-c",
                "0.25",
                "--criterion",
                "descent",
                "--include",
                "true",
            ])
            .arg("--trace")
            .arg(path)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn unreadable_fcidump_exits_one_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let output = cqe()
        .args(["run", "--fcidump", "/nonexistent/nope.fcidump"])
        .arg("--trace")
        .arg(&trace)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(!trace.exists(), "no output files on input error");
}

#[test]
fn loose_threshold_converges_in_zero_iterations() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("summary.json");
    let output = cqe()
        .args([
            "run",
            "--fcidump",
            &data("h2_0.7414.fcidump"),
            "--threshold",
            "1e3",
        ])
        .arg("--summary")
        .arg(&summary)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_str(&read(&summary)).unwrap();
    assert_eq!(summary["iterations"], 0);
    assert_eq!(summary["termination"], "converged");
}

#[test]
fn iteration_cap_exits_two() {
    let output = cqe()
        .args([
            "run",
            "--fcidump",
            &data("h2_0.7414.fcidump"),
            "--max-iter",
            "1",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stdout(&output).contains("termination: max_iterations"));
}

#[test]
fn bad_flag_value_exits_one() {
    let output = cqe()
        .args([
            "run",
            "--fcidump",
            &data("h2_0.7414.fcidump"),
            "--optimizer",
            "newton",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn command_line_flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("solver.cfg");
    std::fs::write(
        &config,
        format!(
            "# test configuration\nfcidump = {}\nmax-iter = 1\n",
            data("h2_0.7414.fcidump")
        ),
    )
    .unwrap();
    // The file alone caps at one iteration (exit 2)...
    let capped = cqe()
        .arg("run")
        .arg("--config")
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(capped.status.code(), Some(2));
    // ...and the flag overrides it back to a converging run.
    let overridden = cqe()
        .arg("run")
        .arg("--config")
        .arg(&config)
        .args(["--max-iter", "300"])
        .output()
        .unwrap();
    assert_eq!(overridden.status.code(), Some(0));
}

#[test]
fn fci_prints_sector_ground_energy() {
    let output = cqe()
        .args(["fci", "--fcidump", &data("h2_0.7414.fcidump")])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let energy: f64 = stdout(&output).trim().parse().unwrap();
    assert!((energy - -1.1372701748).abs() < 1e-8);
}

#[test]
fn single_cell_sweep_matches_a_plain_run() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("run.csv");
    let status = cqe()
        .args([
            "run",
            "--fcidump",
            &data("h2_0.7414.fcidump"),
            "--criterion",
            "descent",
            "--include",
            "true",
            "--sparsity-c",
            "0.25",
            "--p-depth",
            "3",
        ])
        .arg("--trace")
        .arg(&trace)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let cells = dir.path().join("cells");
    let summary = dir.path().join("sweep.csv");
    let status = cqe()
        .args([
            "sweep",
            "--fcidump",
            &data("h2_0.7414.fcidump"),
            "--grid-criterion",
            "descent",
            "--grid-include",
            "true",
            "--grid-c",
            "0.25",
            "--grid-p-depth",
            "3",
        ])
        .arg("--out-dir")
        .arg(&cells)
        .arg("--summary")
        .arg(&summary)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let cell_trace = read(&cells.join("descent_true_c0.25_p3.csv"));
    assert_eq!(cell_trace, read(&trace), "sweep cell equals the plain run");

    let table = read(&summary);
    let mut lines = table.lines();
    assert_eq!(
        lines.next().unwrap(),
        "criterion,include,c,p_depth,iterations,total_cnot,termination"
    );
    let row = lines.next().unwrap();
    assert!(row.starts_with("descent,true,0.25,3,"));
    assert!(row.ends_with(",converged"));
    let iterations_in_table: usize = row.split(',').nth(4).unwrap().parse().unwrap();
    assert_eq!(iterations_in_table, cell_trace.lines().count() - 1);
}

#[test]
fn sweep_without_summary_prints_the_table() {
    let output = cqe()
        .args([
            "sweep",
            "--fcidump",
            &data("h2_0.7414.fcidump"),
            "--grid-criterion",
            "abs",
            "--grid-include",
            "false",
            "--grid-c",
            "0.125,0.5",
            "--grid-p-depth",
            "0",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let out = stdout(&output);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(
        lines[0],
        "criterion,include,c,p_depth,iterations,total_cnot,termination"
    );
    assert_eq!(lines.len(), 3, "header plus one row per cell: {out}");
    assert!(lines[1].starts_with("abs,false,0.125,0,"));
    assert!(lines[2].starts_with("abs,false,0.5,0,"));
}

#[test]
fn full_default_grid_never_loses_a_descent_cell_to_line_search() {
    // The default sweep axes span 2 criteria x 2 include x 4 cuts x
    // 5 depths = 80 cells.  Descent-scored cells never fail outright:
    // with the window exemption they all converge, and without it the
    // harshest cut can only run out of iterations (it still converges
    // under a higher cap).  The hard absolute cut without the window
    // exemption loses cells to genuine line-search failure.
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("grid.csv");
    let status = cqe()
        .args([
            "sweep",
            "--fcidump",
            &data("h4_1.50.fcidump"),
            "--max-iter",
            "300",
        ])
        .arg("--summary")
        .arg(&summary)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let table = read(&summary);
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 80);
    let descent_rows: Vec<&&str> = rows.iter().filter(|r| r.starts_with("descent,")).collect();
    assert_eq!(descent_rows.len(), 40);
    assert!(
        descent_rows.iter().all(|r| !r.ends_with(",line_search_failed")),
        "descent scoring never fails the line search"
    );
    assert!(
        descent_rows
            .iter()
            .filter(|r| r.starts_with("descent,true,"))
            .all(|r| r.ends_with(",converged")),
        "descent scoring with the window exemption converges in every cell"
    );
    assert!(
        rows.iter()
            .any(|r| r.starts_with("abs,false,0.9,") && r.ends_with(",line_search_failed")),
        "strict absolute truncation loses cells"
    );
}

#[test]
fn config_file_can_point_at_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let trace: PathBuf = dir.path().join("from_config.csv");
    let config = dir.path().join("solver.cfg");
    std::fs::write(
        &config,
        format!(
            "fcidump = {}\ntrace = {}\n",
            data("h2_0.7414.fcidump"),
            trace.display()
        ),
    )
    .unwrap();
    let status = cqe()
        .arg("run")
        .arg("--config")
        .arg(&config)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(trace.exists());
}
