use std::fs;
use std::path::Path;

use aurora::config::{RunConfig, Variant};
use aurora::cvt::CentroidSet;
use aurora::experiment::{
    self, export_plot_data, find_runs, read_metrics, read_plot, read_scatter, read_suite,
    read_summary, run, run_suite, suite_configs, Metric, Resources,
};
use aurora::io;

fn small(task: &str, variant: &str) -> RunConfig {
    RunConfig::from_toml(&format!(
        r#"
        [run]
        task = "{task}"
        variant = "{variant}"
        batches = 12
        batch_size = 16
        n_init = 40
        metrics_every = 4
        prior_per_dim = 12
        [schedule]
        updates = [0, 5, 9]
        [ae]
        max_epochs = 20
        window = 5
        repeats = 2
        [cvt]
        prior_centroids = 40
        blind_centroids = 300
        kmeans_max_iter = 10
        "#
    ))
    .unwrap()
}

#[test]
fn smallest_run_completes() {
    let mut c = small("ballistic", "genotype");
    c.run.batches = 1;
    c.run.batch_size = 1;
    let r = run(&c, &Resources::new(), None).unwrap();
    assert!(r.summary.final_size >= 1);
    assert_eq!(r.rows.len(), 1);
    assert_eq!(r.summary.evaluations, 41);
}

#[test]
fn every_variant_writes_a_readable_record() {
    let dir = tempfile::tempdir().unwrap();
    let res = Resources::new();
    for v in Variant::ALL {
        let c = small("ballistic", v.name());
        let out = dir.path().join(v.name());
        let r = run(&c, &res, Some(&out)).unwrap();

        let rows = read_metrics(&out.join(experiment::METRICS_FILE)).unwrap();
        assert_eq!(rows, r.rows);
        assert_eq!(rows.len() as u64, c.run.batches);
        let measured: Vec<u64> = rows
            .iter()
            .filter(|r| r.klc.is_some())
            .map(|r| r.batch)
            .collect();
        assert_eq!(measured, vec![3, 7, 11]);
        assert_eq!(rows.iter().any(|r| r.rmse.is_some()), v.has_model());
        assert_eq!(
            read_summary(&out.join(experiment::SUMMARY_FILE)).unwrap(),
            r.summary
        );
        assert_eq!(
            RunConfig::load(&out.join(experiment::CONFIG_FILE)).unwrap(),
            c
        );

        let snap = io::read_snapshot(&out.join(experiment::FINAL_ARCHIVE_FILE)).unwrap();
        assert_eq!(snap.entries.len(), r.summary.final_size);
        assert_eq!(snap.header.variant_name, v.name());
        assert_eq!(snap.header.batch_index, c.run.batches);
        assert_eq!(snap.header.l.is_none(), v.is_cvt());
        assert!(snap.entries.iter().all(|e| e.sensory.len() == 100));

        let model = out.join(experiment::FINAL_MODEL_FILE);
        assert_eq!(model.exists(), v.has_model());
        if model.exists() {
            let m = io::read_model(&model).unwrap();
            let e = &snap.entries[0];
            let d = m.project(&e.sensory).unwrap();
            for (a, b) in d.iter().zip(&e.descriptor) {
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
            }
        }
        let incremental = matches!(v, Variant::PcaInc | Variant::AeInc);
        let snaps = fs::read_dir(&out)
            .unwrap()
            .filter(|e| {
                e.as_ref()
                    .unwrap()
                    .file_name()
                    .to_string_lossy()
                    .starts_with("archive_batch_")
            })
            .count();
        assert_eq!(snaps, if incremental { 3 } else { 0 }, "{v}");
    }
}

#[test]
fn same_seed_gives_identical_metrics_file() {
    let dir = tempfile::tempdir().unwrap();
    for (task, v) in [
        ("ballistic", "ae_inc"),
        ("airhockey", "pca_inc"),
        ("ballistic", "cvt_blind"),
    ] {
        let c = small(task, v);
        let a = dir.path().join(format!("{task}_{v}_a"));
        let b = dir.path().join(format!("{task}_{v}_b"));
        run(&c, &Resources::new(), Some(&a)).unwrap();
        run(&c, &Resources::new(), Some(&b)).unwrap();
        let fa = fs::read(a.join(experiment::METRICS_FILE)).unwrap();
        let fb = fs::read(b.join(experiment::METRICS_FILE)).unwrap();
        assert_eq!(fa, fb, "{task} {v}");
        assert_eq!(
            fs::read(a.join(experiment::FINAL_ARCHIVE_FILE)).unwrap(),
            fs::read(b.join(experiment::FINAL_ARCHIVE_FILE)).unwrap()
        );
    }
}

#[test]
fn airhockey_rows_carry_diversity_not_klc() {
    let r = run(&small("airhockey", "hand_coded"), &Resources::new(), None).unwrap();
    let last = r.rows.last().unwrap();
    assert!(last.klc.is_none());
    let d = last.diversity.unwrap();
    assert!((0.01..=100.0).contains(&d));
}

#[test]
fn suite_summary_ignores_execution_order() {
    let base = small("ballistic", "hand_coded");
    let variants = [Variant::Genotype, Variant::PcaInc];
    let configs = suite_configs(&base, &variants, 3, 10);
    assert_eq!(configs.len(), 6);
    assert_eq!(
        configs.iter().map(|c| c.run.seed).collect::<Vec<_>>(),
        vec![10, 11, 12, 10, 11, 12]
    );
    let dir = tempfile::tempdir().unwrap();
    let mut forward = run_suite(&configs, 1, &Resources::new(), Some(dir.path())).unwrap();
    let reversed: Vec<_> = configs.iter().rev().cloned().collect();
    let mut back = run_suite(&reversed, 3, &Resources::new(), None).unwrap();
    back.runs.reverse();
    for r in forward.runs.iter_mut().chain(back.runs.iter_mut()) {
        r.duration_secs = None;
    }
    assert_eq!(forward.runs, back.runs);
    assert_eq!(forward.stats, back.stats);
    let s = forward.stat(Variant::Genotype, Metric::Klc).unwrap();
    assert_eq!(s.n, 3);

    let stored = read_suite(dir.path()).unwrap();
    assert_eq!(stored.stats, forward.stats);
    assert_eq!(find_runs(dir.path()).unwrap().len(), 6);
}

#[test]
fn failing_runs_are_reported_per_run() {
    let good = small("ballistic", "genotype");
    let mut bad = small("ballistic", "cvt_blind");
    bad.cvt.blind_file = Some(Path::new("/nonexistent/centroids.bin").to_path_buf());
    let report = run_suite(&[good, bad], 2, &Resources::new(), None).unwrap();
    assert!(report.runs[0].ok);
    assert!(!report.runs[1].ok);
    assert!(report.runs[1].error.is_some());
    assert_eq!(report.failures().count(), 1);
}

#[test]
fn export_writes_series_and_scatter() {
    let dir = tempfile::tempdir().unwrap();
    let runs = dir.path().join("runs");
    let base = small("ballistic", "pca_inc");
    let configs = suite_configs(&base, &[Variant::PcaInc, Variant::CvtBlind], 2, 0);
    run_suite(&configs, 1, &Resources::new(), Some(&runs)).unwrap();
    let plots = dir.path().join("plots");
    for metric in Metric::ALL {
        let files = export_plot_data(&runs, metric, &plots).unwrap();
        assert_eq!(files.len(), 2 + 4);
    }
    let klc = read_plot(&plots.join("klc_pca_inc.csv")).unwrap();
    assert_eq!(
        klc.iter().map(|r| r.batch).collect::<Vec<_>>(),
        vec![3, 7, 11]
    );
    assert!(klc.iter().all(|r| r.q1 <= r.median && r.median <= r.q3));
    let size = read_plot(&plots.join("size_cvt_blind.csv")).unwrap();
    assert_eq!(size.len(), 12);
    assert!(read_plot(&plots.join("rmse_cvt_blind.csv"))
        .unwrap()
        .is_empty());

    let stored = find_runs(&runs).unwrap();
    for r in &stored {
        let name = format!("scatter_{}_seed{}.csv", r.summary.variant, r.summary.seed);
        let rows = read_scatter(&plots.join(name)).unwrap();
        assert_eq!(rows.len(), r.summary.final_size);
        assert!(rows.iter().all(|s| s.gt_x.is_some() && s.gt_y.is_some()));
        let two_d = r.summary.variant == Variant::PcaInc;
        assert!(rows.iter().all(|s| s.descriptor_x.is_some() == two_d));
    }
}

#[test]
fn single_record_export_has_degenerate_quartiles() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("one");
    let r = run(
        &small("ballistic", "hand_coded"),
        &Resources::new(),
        Some(&out),
    )
    .unwrap();
    let plots = dir.path().join("plots");
    export_plot_data(dir.path(), Metric::Size, &plots).unwrap();
    let rows = read_plot(&plots.join("size_hand_coded.csv")).unwrap();
    assert_eq!(rows.len(), r.rows.len());
    for (p, m) in rows.iter().zip(&r.rows) {
        assert_eq!(
            (p.median, p.q1, p.q3),
            (
                m.archive_size as f64,
                m.archive_size as f64,
                m.archive_size as f64
            )
        );
    }
}

#[test]
fn stored_centroids_are_reused() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small("ballistic", "cvt_blind");
    let built = experiment::build_centroids(&c, Variant::CvtBlind).unwrap();
    let path = dir.path().join("blind.bin");
    built.write_binary(&path).unwrap();
    assert_eq!(
        CentroidSet::read_binary(&path).unwrap().as_slice(),
        built.as_slice()
    );

    let fresh = run(&c, &Resources::new(), None).unwrap();
    c.cvt.blind_file = Some(path);
    let loaded = run(&c, &Resources::new(), None).unwrap();
    assert_eq!(fresh.rows, loaded.rows);

    c.cvt.blind_centroids = 7;
    assert!(run(&c, &Resources::new(), None).is_err());
}

#[test]
fn rejected_configurations() {
    assert!(RunConfig::from_toml("[run]\ntask = \"airhockey\"\nvariant = \"ae_pre\"").is_err());
    let mut c = small("ballistic", "genotype");
    c.run.batches = 0;
    assert!(run(&c, &Resources::new(), None).is_err());
}
