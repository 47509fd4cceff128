use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use aznn::matrix_io::read_matrix;
use aznn::output::{Summary, TrajectoryRow};
use aznn_core::flows::kahan;

fn aznn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aznn")).args(args).output().expect("spawn aznn")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("aznn-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_rows(path: &Path) -> Vec<TrajectoryRow> {
    csv::Reader::from_path(path).unwrap().deserialize().collect::<Result<_, _>>().unwrap()
}

fn read_summary(path: &Path) -> Summary {
    toml::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn gallery_export_round_trips() {
    let dir = scratch("gallery");
    let out = dir.join("kahan.txt");
    let o = aznn(&["gallery", "kahan", "--n", "9", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_matrix(&out).unwrap(), kahan(9));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# kahan n=9\n9 9 real\n"));
}

#[test]
fn run_sqrt_outputs_and_h_values() {
    let dir = scratch("sqrt");
    let (csv1, csv2, summary) = (dir.join("a.csv"), dir.join("b.csv"), dir.join("a.toml"));
    let args = |csv: &Path| {
        vec![
            "run-sqrt".to_string(),
            "--formula=4_5".into(),
            "--tau=0.02".into(),
            "--eta-start=160".into(),
            "--startup-steps=12".into(),
            "--eta-iter=1.45".into(),
            "--t-end=14".into(),
            format!("--csv={}", csv.display()),
            format!("--summary={}", summary.display()),
        ]
    };
    let run = |csv: &Path| Command::new(env!("CARGO_BIN_EXE_aznn")).args(args(csv)).output().unwrap();
    assert!(run(&csv1).status.success());
    assert!(run(&csv2).status.success());
    assert_eq!(std::fs::read(&csv1).unwrap(), std::fs::read(&csv2).unwrap());

    let sum = read_summary(&summary);
    assert_eq!(sum.label, "AZNN");
    assert_eq!(sum.status, "completed");
    assert_eq!(sum.h[0].h, 3.2);
    assert_eq!(sum.h[1].h, 1.45 * 0.02);
    assert!((sum.h[1].h - 0.029).abs() < 1e-15);
    assert_eq!(sum.phase_switch_steps, vec![12]);
    let rows = read_rows(&csv1);
    assert_eq!(rows.len(), sum.steps + 1);
    assert_eq!(sum.steps, 200);
    assert_eq!(rows.last().unwrap().residual, sum.final_residual);
    assert!(sum.config.flow.contains("seed=10"));
}

#[test]
fn baseline_mode_summary() {
    let dir = scratch("baseline");
    let summary = dir.join("b.toml");
    let o = aznn(&["run-sqrt", "--baseline", "--eta-iter", "1.35", "--t-end", "12", "--summary", s(&summary)]);
    assert!(o.status.success());
    let sum = read_summary(&summary);
    assert_eq!(sum.label, "basic ZNN");
    assert!(sum.h.iter().all(|e| e.h == 1.35 * 0.02));
    assert!((sum.h[0].h - 0.027).abs() < 1e-15);
    assert_eq!(sum.config.startup_steps, 8);
    assert_eq!(sum.phase_switch_steps, vec![8]);
}

#[test]
fn config_file_with_flag_override() {
    let dir = scratch("config");
    let (cfg, summary) = (dir.join("run.toml"), dir.join("out.toml"));
    std::fs::write(
        &cfg,
        format!(
            "t_end = 11\nformula = \"2_3\"\n[startup]\neta = 40\nsteps = 5\n[iterate]\neta = 3\n[output]\nsummary = \"{}\"\n",
            summary.display()
        ),
    )
    .unwrap();
    let o = aznn(&["run-sqrt", "--config", s(&cfg), "--eta-iter", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sum = read_summary(&summary);
    assert_eq!(sum.config.formula, "2_3");
    assert_eq!(sum.config.eta_start, 40.0);
    assert_eq!(sum.config.eta_iter, 2.0);
    assert_eq!(sum.steps, 50);
}

#[test]
fn invalid_config_exits_1_with_field() {
    let o = aznn(&["run-sqrt", "--tau=-0.1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`tau`"));
    let o = aznn(&["run-sqrt", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1));
    let o = aznn(&["run-sqrt", "--tau", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`tau`"));

    let dir = scratch("badcfg");
    let cfg = dir.join("bad.toml");
    std::fs::write(&cfg, "[startup]\nsteps = 3\n").unwrap();
    let o = aznn(&["run-sqrt", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`startup.steps`"));

    let o = aznn(&["run-sqrt", "--config", s(&dir.join("missing.toml"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn divergence_exits_2() {
    let o = aznn(&[
        "run-sqrt",
        "--formula",
        "1_2",
        "--startup-steps",
        "2",
        "--eta-start",
        "500",
        "--eta-iter",
        "500",
        "--t-end",
        "12",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("status = \"diverged\""));
}

#[test]
fn static_symmetrizer_outputs() {
    let dir = scratch("static");
    let (mat, out, trace, cert) = (dir.join("a.txt"), dir.join("s.txt"), dir.join("trace.csv"), dir.join("cert.toml"));
    std::fs::write(&mat, "2 2 real\n0 1\n0 1e-10\n").unwrap();
    let o = aznn(&[
        "static-symmetrizer",
        "--matrix",
        s(&mat),
        "--preset",
        "large",
        "--out",
        s(&out),
        "--trace",
        s(&trace),
        "--certificate",
        s(&cert),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let c: toml::Table = toml::from_str(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    assert_eq!(c["rank"].as_integer(), Some(2));
    assert_eq!(c["full_rank"].as_bool(), Some(true));
    assert_eq!(c["steps"].as_integer(), Some(15));
    let s_mat = read_matrix(&out).unwrap();
    assert!(s_mat.is_symmetric());
    let rows = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(rows.lines().count(), 17);
    assert!(rows.lines().last().unwrap().starts_with("15,1.0,"));

    let o = aznn(&["report", s(&trace)]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("kind = \"static_trace\""));
}

#[test]
fn static_tau_is_synchronized() {
    let o = aznn(&["static-symmetrizer", "--gallery", "two_by_two", "--alpha", "1e-3", "--tau", "0.0007"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("snapped"));
    let c: toml::Table = toml::from_str(&String::from_utf8_lossy(&o.stdout)).unwrap();
    assert_eq!(c["tau"].as_float(), Some(0.0006));
    assert_eq!(c["steps"].as_integer(), Some(25));
}

#[test]
fn rank_deficient_static_exits_3() {
    let o = aznn(&["static-symmetrizer", "--gallery", "kahan", "--n", "25", "--preset", "large"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stdout).contains("full_rank = false"));
}

#[test]
fn derive_formula_prints_weights_and_roots() {
    let o = aznn(&["derive-formula", "--builtin", "2_3"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("weights = [8, 1, -6, -5, 2]"), "{text}");
    assert!(text.contains("tau_scale = 18"));
    assert!(text.contains("convergent = true"));

    let o = aznn(&["derive-formula", "--j", "2", "--s", "3"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("type 2_3"));
    assert!(text.contains("convergent = true"));
}

#[test]
fn report_matches_run_summary() {
    let dir = scratch("report");
    let (csv, summary) = (dir.join("r.csv"), dir.join("r.toml"));
    let o = aznn(&["run-sqrt", "--t-end", "12", "--csv", s(&csv), "--summary", s(&summary)]);
    assert!(o.status.success());
    let sum = read_summary(&summary);
    let o = aznn(&["report", s(&csv)]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    let body: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
    let rep: toml::Table = toml::from_str(&body).unwrap();
    assert_eq!(rep["steps"].as_integer(), Some(sum.steps as i64));
    assert_eq!(rep["final_residual"].as_float(), Some(sum.final_residual));
    assert_eq!(rep["phase_switch_steps"].as_array().unwrap().len(), 1);
}

#[test]
fn symmetrizer_snapshots_are_written() {
    let dir = scratch("symm");
    let snaps = dir.join("snaps");
    let o = aznn(&[
        "run-symmetrizer",
        "--t-end",
        "20",
        "--snapshot-time",
        "15",
        "--snapshot-time",
        "20",
        "--snapshots",
        s(&snaps),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sum: Summary = toml::from_str(&String::from_utf8_lossy(&o.stdout)).unwrap();
    assert_eq!(sum.config.solve.as_deref(), Some("reduced"));
    let mut files: Vec<_> = std::fs::read_dir(&snaps).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    assert_eq!(files.len(), 2);
    assert!(files[1].ends_with("step_00000500.txt"), "{files:?}");
    for f in &files {
        let x = read_matrix(f).unwrap();
        assert_eq!(x.rows(), 5);
        assert!(x.is_symmetric());
    }
}
