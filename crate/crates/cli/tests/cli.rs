use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qwmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qwmap")).args(args).env_remove("QWMAP_DATA_DIR").output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn run_iris(out: &Path) -> Output {
    qwmap(&["run", "--dataset", "iris", "--remap", "tanh", "--layers", "2", "--out", out.to_str().unwrap()])
}

#[test]
fn run_writes_thirty_epoch_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_iris(dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let jsonl = fs::read_to_string(dir.path().join("runs/iris__angle__tanh__seed0.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 30);
    for key in ["\"epoch\":", "\"train_loss\":", "\"train_acc\":", "\"valid_loss\":", "\"valid_acc\":"] {
        assert!(jsonl.lines().all(|l| l.contains(key)));
    }
    assert!(dir.path().join("runs/iris__angle__tanh__seed0.test.json").exists());
    assert!(dir.path().join("runs/iris__angle__tanh__seed0.model.json").exists());
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run_iris(a.path()).status.success());
    assert!(run_iris(b.path()).status.success());
    let file = "runs/iris__angle__tanh__seed0.jsonl";
    assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap());
}

#[test]
fn unknown_remap_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = qwmap(&["run", "--dataset", "iris", "--remap", "softsign", "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert_eq!(err.trim().lines().count(), 1, "{err}");
    assert!(err.contains("remap") && err.contains("softsign"), "{err}");
}

#[test]
fn module_errors_are_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = qwmap(&["run", "--dataset", "iris", "--model", "mlp", "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert_eq!(err.trim().lines().count(), 1);
    assert!(err.starts_with("error: runner"), "{err}");

    let o = qwmap(&["run", "--dataset", "wine", "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("wine.data"), "{}", stderr(&o));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    let out = dir.path().join("out");
    fs::write(
        &config,
        format!("dataset = \"iris-2class\"\nembedding = \"amplitude\"\nremap = \"arctan\"\nepochs = 4\nout = {:?}\n", out),
    )
    .unwrap();
    let o = qwmap(&["run", "--config", config.to_str().unwrap(), "--epochs", "3", "--seed", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let jsonl = fs::read_to_string(out.join("runs/iris-2class__amplitude__arctan__seed2.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 3);

    fs::write(&config, "learning_rate = 0.1\n").unwrap();
    let o = qwmap(&["run", "--config", config.to_str().unwrap(), "--dataset", "iris"]);
    assert!(!o.status.success());
}

#[test]
fn sweep_report_anova_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = qwmap(&[
        "sweep", "--dataset", "iris-2class", "--embedding", "amplitude", "--remap", "none,tanh", "--model", "vqc,mlp",
        "--seeds", "0..2", "--epochs", "5", "--workers", "2", "--out", out,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 3 * 3);

    let o = qwmap(&["sweep", "--dataset", "iris-2class", "--embedding", "amplitude", "--remap", "none,tanh", "--seeds", "0..2", "--epochs", "5", "--out", out]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("0 trained, 6 already complete"));

    fs::remove_file(dir.path().join("convergence_amplitude.csv")).unwrap();
    assert!(qwmap(&["report", "--out", out]).status.success());
    let conv = fs::read_to_string(dir.path().join("convergence_amplitude.csv")).unwrap();
    assert!(conv.starts_with("dataset,approach,metric,value,ci_halfwidth\n"));
    assert!(conv.contains("iris-2class,MLP,convergence_diff,"));

    let o = qwmap(&["anova", "--out", out]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("iris-2class,all,df_within,4,"));

    assert!(qwmap(&["plot", "--out", out]).status.success());
    let svg = fs::read_to_string(dir.path().join("plots/iris-2class__amplitude.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 3 * 2 * 2);
}

#[test]
fn plot_of_empty_directory_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = qwmap(&["plot", "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("no completed runs"));
}
