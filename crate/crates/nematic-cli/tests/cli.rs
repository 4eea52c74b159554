//! End-to-end tests of the binary: exit codes, run directory layout, and
//! config echo fidelity.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nematic::config::RunConfig;
use nematic::ledger::LedgerTable;
use nematic::snapshot::Snapshot;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nematic"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

const FLOW_CFG: &str = "\
    run.mode = flow\n\
    grid.n = 32\n\
    grid.length = 6.283185307179586\n\
    init.director = bubble\n\
    init.lambda = 0.8\n\
    time.t_end = 0.01\n\
    output.diag_stride = 5\n\
    output.snapshot_stride = 5\n";

fn write_cfg(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn verify_subcommand_filters_and_passes() {
    let out = run(&["verify", "--filter", "null"]);
    assert!(out.status.success(), "verify exits 0 on pass");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("PASS"), "prints a PASS line: {text}");
    assert!(text.contains("null_lagrangian"));
    assert_eq!(text.lines().count(), 1, "filter selects exactly one check");

    let out = run(&["verify", "--filter", "no_such_check"]);
    assert_eq!(out.status.code(), Some(2), "unknown filter is a usage error");
}

#[test]
fn flow_run_writes_the_full_directory_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_cfg(dir.path(), FLOW_CFG);
    let out_dir = dir.path().join("out");
    let out = run(&["flow", "--config", &cfg_path, "--out", out_dir.to_str().unwrap(), "--quiet"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    // Canonical config echo reparses to an equivalent configuration.
    let echoed = fs::read_to_string(out_dir.join("config.txt")).unwrap();
    let original = RunConfig::parse(FLOW_CFG).unwrap();
    assert_eq!(RunConfig::parse(&echoed).unwrap(), original);

    // Ledger parses and ends at the run's final time.
    let ledger = fs::read_to_string(out_dir.join("ledger.tsv")).unwrap();
    let table = LedgerTable::read(std::io::BufReader::new(ledger.as_bytes())).unwrap();
    assert!(table.rows.len() >= 2);
    let times = table.column("time").unwrap();
    assert_eq!(times[0], 0.0);

    // Final state loads and sits on the right grid.
    let snap = Snapshot::load(out_dir.join("final_director.nfld")).unwrap();
    assert_eq!(snap.grid.n(), 32);
    assert_eq!(snap.components.len(), 3);
    assert_eq!(snap.time, *times.last().unwrap());

    // Snapshots were emitted, including the forced final one.
    let count = fs::read_dir(out_dir.join("snapshots")).unwrap().count();
    assert!(count >= 2, "expected initial + final snapshots, found {count}");

    // Events file exists (empty run: header only).
    let events = fs::read_to_string(out_dir.join("events.tsv")).unwrap();
    assert!(events.starts_with("time\t"));
}

#[test]
fn el_run_reports_coupled_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "\
        run.mode = el\n\
        grid.n = 32\n\
        grid.length = 6.283185307179586\n\
        el.nu = 0.1\n\
        init.director = constant\n\
        init.velocity = taylor-green\n\
        init.v_amplitude = 0.5\n\
        time.t_end = 0.01\n";
    let cfg_path = write_cfg(dir.path(), cfg);
    let out_dir = dir.path().join("out");
    let out = run(&["el", "--config", &cfg_path, "--out", out_dir.to_str().unwrap(), "--quiet"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let ledger = fs::read_to_string(out_dir.join("ledger.tsv")).unwrap();
    let table = LedgerTable::read(std::io::BufReader::new(ledger.as_bytes())).unwrap();
    let kinetic = table.column("kinetic").unwrap();
    assert!(kinetic[0] > 0.0, "coupled ledger carries kinetic energy");
    assert!(out_dir.join("final_velocity.nfld").exists());
}

#[test]
fn gl_study_writes_one_row_per_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "\
        run.mode = flow\n\
        grid.n = 32\n\
        grid.length = 6.283185307179586\n\
        init.director = bubble\n\
        init.lambda = 0.8\n\
        time.t_end = 0.005\n\
        study.epsilons = 0.2 0.1\n";
    let cfg_path = write_cfg(dir.path(), cfg);
    let out_dir = dir.path().join("out");
    let out =
        run(&["gl-study", "--config", &cfg_path, "--out", out_dir.to_str().unwrap(), "--quiet"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(out_dir.join("summary.tsv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 3, "header + one row per epsilon: {summary}");
    assert!(lines[1].starts_with("0.2\t"));
    assert!(lines[2].starts_with("0.1\t"));
    assert!(out_dir.join("eps_0.2").join("ledger.tsv").exists());
    assert!(out_dir.join("eps_0.1").join("final_director.nfld").exists());
}

#[test]
fn config_errors_exit_2_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_cfg(dir.path(), &format!("{FLOW_CFG}frank.k9 = 1.0\n"));
    let out_dir = dir.path().join("out");
    let out = run(&["flow", "--config", &cfg_path, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("line 9") && stderr.contains("frank.k9"), "stderr: {stderr}");

    // Wrong subcommand for the config's mode is also a config error.
    let cfg_path = write_cfg(dir.path(), FLOW_CFG);
    let out = run(&["el", "--config", &cfg_path, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // CFL violations are caught before any integration.
    let cfg_path = write_cfg(dir.path(), &format!("{FLOW_CFG}time.dt = 0.5\n"));
    let out = run(&["flow", "--config", &cfg_path, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("stability"), "stderr: {stderr}");
}

#[test]
fn io_failures_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_cfg(dir.path(), FLOW_CFG);
    // Output path collides with an existing file: directory creation fails.
    let blocker = dir.path().join("blocked");
    fs::write(&blocker, "in the way").unwrap();
    let out = run(&["flow", "--config", &cfg_path, "--out", blocker.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));

    let out = run(&["flow", "--config", "/no/such/file.cfg", "--out", "/tmp/x"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn seed_override_changes_random_initial_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "\
        run.mode = flow\n\
        grid.n = 32\n\
        grid.length = 6.283185307179586\n\
        init.director = random\n\
        init.amplitude = 0.5\n\
        time.t_end = 0.002\n";
    let cfg_path = write_cfg(dir.path(), cfg);
    let mut finals = Vec::new();
    for (name, seed) in [("a", "7"), ("b", "7"), ("c", "8")] {
        let out_dir = dir.path().join(name);
        let out = run(&[
            "flow",
            "--config",
            &cfg_path,
            "--out",
            out_dir.to_str().unwrap(),
            "--seed",
            seed,
            "--quiet",
        ]);
        assert!(out.status.success());
        finals.push(fs::read(out_dir.join("final_director.nfld")).unwrap());
    }
    assert_eq!(finals[0], finals[1], "same seed reproduces the run bit-for-bit");
    assert_ne!(finals[0], finals[2], "different seed changes the data");
}
