use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
[run]
task = "ballistic"
variant = "pca_inc"
batches = 6
batch_size = 10
n_init = 30
metrics_every = 3
prior_per_dim = 10

[schedule]
updates = [0, 3]

[cvt]
prior_centroids = 20
blind_centroids = 200
kmeans_max_iter = 5

[suite]
variants = ["hand_coded", "pca_inc"]
replications = 2
"#;

fn aurora(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aurora"))
        .args(args)
        .current_dir(cwd)
        .env_remove("AURORA_OUT_DIR")
        .env_remove("AURORA_PARALLEL")
        .output()
        .unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    dir
}

#[test]
fn run_writes_record_under_default_directory() {
    let dir = setup();
    let out = aurora(
        &["run", "--config", "small.toml", "--seed", "4"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let run = dir.path().join("runs/pca_inc/seed_4");
    for f in [
        "config.toml",
        "metrics.csv",
        "summary.json",
        "updates.json",
        "archive_final.json",
        "model_final.json",
    ] {
        assert!(run.join(f).exists(), "{f}");
    }
    assert!(String::from_utf8_lossy(&out.stdout).contains("pca_inc seed 4"));
}

#[test]
fn suite_then_export() {
    let dir = setup();
    let out = aurora(
        &[
            "suite",
            "--config",
            "small.toml",
            "--out",
            "s",
            "--parallel",
            "2",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("hand_coded") && stdout.contains("klc"));
    assert!(dir.path().join("s/suite_stats.csv").exists());
    assert!(dir.path().join("s/hand_coded/seed_1").exists());

    let out = aurora(&["export", "--runs", "s", "--metric", "klc"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("s/plots/klc_pca_inc.csv").exists());
    assert!(dir
        .path()
        .join("s/plots/scatter_hand_coded_seed0.csv")
        .exists());
}

#[test]
fn centroids_are_written_and_loadable() {
    let dir = setup();
    let out = aurora(
        &[
            "centroids",
            "--config",
            "small.toml",
            "--variant",
            "cvt_blind",
            "--out",
            "c.bin",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("200 centroids of dimension 100"));
    let cfg = format!(
        "{}\n",
        SMALL
            .replace("[cvt]", "[cvt]\nblind_file = \"c.bin\"")
            .replace("pca_inc\"\nbatches", "cvt_blind\"\nbatches")
    );
    fs::write(dir.path().join("blind.toml"), cfg).unwrap();
    let out = aurora(&["run", "--config", "blind.toml", "--out", "b"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn bad_input_fails_cleanly() {
    let dir = setup();
    for args in [
        vec!["run", "--config", "missing.toml"],
        vec!["suite", "--config", "small.toml", "--variants", "nonsense"],
        vec!["export", "--runs", ".", "--metric", "speed"],
        vec![
            "centroids",
            "--config",
            "small.toml",
            "--variant",
            "genotype",
            "--out",
            "x.bin",
        ],
    ] {
        let out = aurora(&args, dir.path());
        assert!(!out.status.success(), "{args:?}");
        assert!(
            String::from_utf8_lossy(&out.stderr).contains("error"),
            "{args:?}"
        );
    }
}
