use std::fs;
use std::path::Path;
use std::process::Command;

use stark_nls::grid::{Field, Grid};
use stark_nls::harness::config::{ExperimentConfig, ExperimentKind};
use stark_nls::harness::experiments::{execute, run_compare, run_lemma_check, CheckStatus};
use stark_nls::harness::snapshot::{
    read_snapshot, read_snapshot_into, write_snapshot, SnapshotError,
};

const BIN: &str = env!("CARGO_BIN_EXE_stark-nls");

/// Small, fast setup shared by the CLI tests.
const SMALL: &str = r#"
[grid]
N = 256
L = 40.0
[problem]
E = [0.5]
[scheme]
dt = 5e-3
T = 0.5
sample_every = 10
"#;

fn cli(sub: &str, config: &str, dir: &Path) -> (i32, String, String) {
    let path = dir.join("config.toml");
    fs::write(&path, config).unwrap();
    let out = Command::new(BIN)
        .args([
            sub,
            "--config",
            path.to_str().unwrap(),
            "--out-dir",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn run_writes_csv_with_conserved_mass() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, _) = cli("run", SMALL, dir.path());
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("guards: max boundary_mass"));
    let text = fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with(
        "t,mass,grad_norm,lr_norm_2s2,natural_energy,shifted_energy,pc_quantity,je_norm"
    ));
    let masses: Vec<f64> = lines
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(masses.len(), 11);
    for m in &masses {
        assert!((m - masses[0]).abs() <= 1e-11 * masses[0]);
    }
}

#[test]
fn compare_exit_status_follows_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, _) = cli("compare", SMALL, dir.path());
    assert_eq!(code, 0, "{stdout}");
    assert!(dir.path().join("diagnostics_discrepancy.csv").exists());
    let strict = format!("{SMALL}\n[compare]\ntolerance = 1e-14\n");
    let (code, stdout, _) = cli("compare", &strict, dir.path());
    assert_eq!(code, 1, "{stdout}");
}

#[test]
fn compare_with_zero_field_is_exact() {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::Compare, 1);
    cfg.grid.points = 256;
    cfg.grid.length = 40.0;
    cfg.problem.field = vec![0.0];
    cfg.scheme.dt = 5e-3;
    cfg.scheme.t_final = 0.5;
    let r = run_compare(&cfg).unwrap();
    assert!(r.max_discrepancy <= 1e-12, "{}", r.max_discrepancy);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = cli("run", "[problem]\nlamda = 1\n", dir.path());
    assert_eq!(code, 2);
    assert!(stderr.contains("lambda"), "{stderr}");
    let (code, _, stderr) = cli("run", "[problem]\nsigma = -1\n", dir.path());
    assert_eq!(code, 2);
    assert!(stderr.contains("sigma"), "{stderr}");
    let (code, _, _) = cli("run", "kind = \"scatter\"\n", dir.path());
    assert_eq!(code, 2);
}

#[test]
fn guard_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let drifting = SMALL
        .replace("T = 0.5", "T = 6.0")
        .replace("E = [0.5]", "E = [1.0]");
    let (code, stdout, stderr) = cli("compare", &drifting, dir.path());
    assert_eq!(code, 2, "{stdout}");
    assert!(stderr.contains("boundary_mass"), "{stderr}");
}

fn lemma_cfg() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::LemmaCheck, 1);
    cfg.grid.points = 256;
    cfg.grid.length = 30.0;
    cfg.scheme.dt = 1e-3;
    cfg.scheme.t_final = 0.5;
    cfg.lemma.times = vec![0.0, 0.25, 0.5, 1.0];
    cfg
}

#[test]
fn lemma_suite_passes_and_skips_zero_time() {
    let r = run_lemma_check(&lemma_cfg()).unwrap();
    let text = r.to_string();
    assert_eq!(r.verdict().exit_code(), 0, "{text}");
    let skipped: Vec<_> = r
        .checks
        .iter()
        .filter(|c| matches!(&c.status, CheckStatus::Skipped(reason) if reason == "t ≠ 0 required"))
        .collect();
    assert_eq!(skipped.len(), 3, "{text}");
    assert!(text.contains("guards:"));
}

#[test]
fn lemma_negative_control_fails() {
    let mut cfg = lemma_cfg();
    cfg.lemma.negative_control = true;
    let r = run_lemma_check(&cfg).unwrap();
    assert_eq!(r.verdict().exit_code(), 1);
    assert_eq!(r.checks[0].status, CheckStatus::Fail);
}

#[test]
fn blowup_pairs_and_defocusing() {
    let dir = tempfile::tempdir().unwrap();
    let focusing = r#"
[grid]
N = 1024
L = 20.0
[problem]
lambda = -1.0
sigma = 2.0
[initial_data]
amplitude = 2.0
[scheme]
dt = 2e-4
T = 0.2
sample_every = 1
[guards]
grad_threshold_factor = 5.0
"#;
    let (code, stdout, _) = cli("blowup", focusing, dir.path());
    assert_eq!(code, 0, "{stdout}");
    assert!(
        stdout.contains("stark_backward: t_trigger = -0.10"),
        "{stdout}"
    );

    let defocusing = focusing
        .replace("lambda = -1.0", "lambda = 1.0")
        .replace("amplitude = 2.0", "amplitude = 0.5");
    let (code, stdout, _) = cli("blowup", &defocusing, dir.path());
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("warning: lambda >= 0"));
    assert!(
        stdout.contains("free_forward: t_trigger = none"),
        "{stdout}"
    );
}

#[test]
fn scatter_warns_below_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
[grid]
N = 512
L = 80.0
[problem]
lambda = 1.0
sigma = 1.0
E = [0.1]
[initial_data]
amplitude = 0.5
[scheme]
dt = 5e-3
T = 4.0
sample_every = 100
[scatter]
min_samples = 3
"#;
    let (_, stdout, _) = cli("scatter", cfg, dir.path());
    assert!(
        stdout.contains("below the scattering threshold 1.2808"),
        "{stdout}"
    );
    assert!(dir.path().join("diagnostics_scattering.csv").exists());
}

#[test]
fn snapshots_are_written_and_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::Run, 1);
    cfg.grid.points = 256;
    cfg.grid.length = 40.0;
    cfg.scheme.dt = 5e-3;
    cfg.scheme.t_final = 0.5;
    cfg.outputs.snapshot_dir = Some("snaps".into());
    cfg.outputs.snapshot_every = 5;
    let ex = execute(&cfg, dir.path()).unwrap();
    let snaps: Vec<_> = ex
        .files
        .iter()
        .filter(|p| p.extension().unwrap() == "nlsf")
        .collect();
    assert_eq!(snaps.len(), 3);
    let s = read_snapshot(snaps[2]).unwrap();
    assert!((s.t - 0.5).abs() < 1e-12);
    assert_eq!(s.epsilon, 1.0);

    // restart from the last snapshot
    let mut restart = cfg.clone();
    restart.outputs.snapshot_dir = None;
    restart.initial_data.profile = stark_nls::harness::config::Profile::Snapshot(snaps[2].clone());
    assert!(execute(&restart, &dir.path().join("restart")).is_ok());
}

#[test]
fn snapshot_grid_mismatch_is_typed() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.nlsf");
    let g512 = Grid::cube(1, 512, 10.0).unwrap();
    write_snapshot(&Field::zeros(&g512), 1.0, &path).unwrap();
    let g1024 = Grid::cube(1, 1024, 10.0).unwrap();
    assert!(matches!(
        read_snapshot_into(&path, &g1024),
        Err(SnapshotError::DimensionMismatch { .. })
    ));
    let mut bytes = fs::read(&path).unwrap();
    bytes[1] = b'?';
    fs::write(&path, bytes).unwrap();
    assert!(matches!(
        read_snapshot(&path),
        Err(SnapshotError::BadMagic(_))
    ));
}
