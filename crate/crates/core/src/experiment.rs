//! Experiment harness: single runs with on-disk records, replicated suites
//! and plot-ready exports.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, Variant};
use crate::cvt::{build_blind_centroids, build_prior_centroids, CentroidSet};
use crate::descriptor::{Dataset, Extractor, LatentKind, LatentModel};
use crate::error::{Error, Result};
use crate::io::{self, ArchiveSnapshot, SnapshotHeader};
use crate::metrics;
use crate::par;
use crate::qd::{MetricsRow, ModelUpdate, RunState};
use crate::tasks::{Task, TaskKind, Trajectory, SENSORY_DIM};

pub const CONFIG_FILE: &str = "config.toml";
pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const UPDATES_FILE: &str = "updates.json";
pub const FINAL_ARCHIVE_FILE: &str = "archive_final.json";
pub const FINAL_MODEL_FILE: &str = "model_final.json";

type Shared<T> = Arc<OnceLock<std::result::Result<Arc<T>, String>>>;

struct Cache<T> {
    cells: Mutex<HashMap<String, Shared<T>>>,
}

impl<T> Default for Cache<T> {
    fn default() -> Self {
        Self {
            cells: Mutex::new(HashMap::new()),
        }
    }
}

impl<T> Cache<T> {
    fn get(&self, key: String, build: impl FnOnce() -> Result<T>) -> Result<Arc<T>> {
        let cell = self
            .cells
            .lock()
            .expect("cache lock")
            .entry(key)
            .or_default()
            .clone();
        cell.get_or_init(|| build().map(Arc::new).map_err(|e| e.to_string()))
            .clone()
            .map_err(Error::Resource)
    }
}

/// Pre-run artefacts shared between runs of a suite: the KLC reference,
/// pre-trained models and CVT centroid sets. Each is built once per
/// distinct configuration, on first use.
#[derive(Default)]
pub struct Resources {
    references: Cache<Vec<[f64; 2]>>,
    pretrained: Cache<(LatentModel, Vec<(f64, f64)>)>,
    centroids: Cache<CentroidSet>,
}

impl Resources {
    pub fn new() -> Self {
        Self::default()
    }

    /// Hand-coded descriptors of the final archive of a hand-coded run with
    /// the reference seed.
    pub fn reference(&self, config: &RunConfig) -> Result<Arc<Vec<[f64; 2]>>> {
        let mut base = config.with(Variant::HandCoded, config.run.reference_seed);
        base.suite = Default::default();
        self.references.get(base.to_toml(), || {
            let state = drive(&base, self, None, false)?;
            Ok(ground_truths(&state))
        })
    }

    /// A model fitted once on the prior action grid, with the bounding box of
    /// its projections of that data.
    pub fn pretrained(
        &self,
        config: &RunConfig,
        kind: LatentKind,
    ) -> Result<Arc<(LatentModel, Vec<(f64, f64)>)>> {
        let key = serde_json::to_string(&(
            kind,
            config.run.task,
            &config.ballistic,
            &config.airhockey,
            config.run.prior_per_dim,
            config.run.prior_seed,
            config.pca.components,
            &config.ae,
        ))?;
        self.pretrained.get(key, || {
            let task = config.task();
            let data = prior_dataset(&task, config.run.prior_per_dim)?;
            let (model, _) = LatentModel::fit(
                kind,
                &data,
                config.pca.components,
                &config.ae,
                config.run.prior_seed,
            )?;
            let projected = par::try_map(&(0..data.len()).collect::<Vec<_>>(), |&i| {
                model.project(data.row(i))
            })?;
            Ok((model, bounding_box(&projected)))
        })
    }

    pub fn centroids(&self, config: &RunConfig, variant: Variant) -> Result<Arc<CentroidSet>> {
        let key = serde_json::to_string(&(
            variant,
            config.run.task,
            &config.ballistic,
            &config.airhockey,
            config.run.prior_per_dim,
            &config.cvt,
        ))?;
        self.centroids.get(key, || {
            let c = &config.cvt;
            let (file, k) = match variant {
                Variant::CvtPrior => (&c.prior_file, c.prior_centroids),
                _ => (&c.blind_file, c.blind_centroids),
            };
            if let Some(path) = file {
                let set = CentroidSet::read_binary(path)?;
                if set.k() != k || set.dim() != SENSORY_DIM {
                    return Err(Error::Format {
                        path: path.clone(),
                        reason: format!(
                            "expected {k} centroids of dimension {SENSORY_DIM}, found {} of {}",
                            set.k(),
                            set.dim()
                        ),
                    });
                }
                return Ok(set);
            }
            build_centroids(config, variant)
        })
    }
}

/// Builds the centroid set of a CVT variant from scratch.
pub fn build_centroids(config: &RunConfig, variant: Variant) -> Result<CentroidSet> {
    let task = config.task();
    let c = &config.cvt;
    match variant {
        Variant::CvtPrior => build_prior_centroids(
            &task,
            config.run.prior_per_dim,
            c.prior_centroids,
            c.kmeans_max_iter,
            c.seed,
        ),
        Variant::CvtBlind => build_blind_centroids(
            &task.sensory_bounds(),
            c.blind_centroids,
            c.blind_lloyd_iters,
            c.seed,
        ),
        v => Err(Error::NotApplicable(format!("centroids for variant {v}"))),
    }
}

fn prior_dataset(task: &Task, per_dim: usize) -> Result<Dataset> {
    let genotypes = task.prior_genotypes(per_dim).ok_or_else(|| {
        Error::NotApplicable(format!(
            "a prior action grid for the {} task",
            task.kind().name()
        ))
    })?;
    let sensory = par::try_map(&genotypes, |g| task.evaluate(g).map(|t| t.to_sensory()))?;
    Dataset::from_rows(SENSORY_DIM, &sensory)
}

fn bounding_box(points: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let d = points.first().map_or(0, Vec::len);
    (0..d)
        .map(|k| {
            points
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    (lo.min(p[k]), hi.max(p[k]))
                })
        })
        .collect()
}

fn ground_truths(state: &RunState) -> Vec<[f64; 2]> {
    state
        .container()
        .entries()
        .iter()
        .filter_map(|e| e.ground_truth)
        .collect()
}

/// Final values of one run, as written to `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub variant: Variant,
    pub task: TaskKind,
    pub seed: u64,
    pub batches: u64,
    pub evaluations: u64,
    pub final_size: usize,
    pub final_klc: Option<f64>,
    pub final_diversity: Option<f64>,
    pub final_rmse: Option<f64>,
    pub duration_secs: f64,
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub config: RunConfig,
    pub rows: Vec<MetricsRow>,
    pub updates: Vec<ModelUpdate>,
    pub summary: RunSummary,
    /// Final archive snapshot, when the run was written to disk.
    pub archive: Option<PathBuf>,
    pub duration_secs: f64,
}

/// Runs `config` to completion. With `out`, writes the config snapshot,
/// metrics log, archive snapshots (after every model update and at the end),
/// fitted models, the update log and the summary into that directory.
pub fn run(config: &RunConfig, resources: &Resources, out: Option<&Path>) -> Result<RunRecord> {
    config.validate()?;
    let start = Instant::now();
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(CONFIG_FILE), config.to_toml())?;
    }
    let state = drive(config, resources, out, true)?;
    let duration_secs = start.elapsed().as_secs_f64();
    let rows = state.metrics_log().to_vec();
    let last = rows.last().expect("at least one batch");
    let summary = RunSummary {
        variant: config.run.variant,
        task: config.run.task,
        seed: config.run.seed,
        batches: config.run.batches,
        evaluations: state.evaluations(),
        final_size: state.container().len(),
        final_klc: last.klc,
        final_diversity: last.diversity,
        final_rmse: last.rmse,
        duration_secs,
    };
    let mut archive = None;
    if let Some(dir) = out {
        io::write_csv(&dir.join(METRICS_FILE), &rows)?;
        let p = dir.join(FINAL_ARCHIVE_FILE);
        io::write_snapshot(&p, &snapshot(&state, config.run.variant))?;
        archive = Some(p);
        if let Some(m) = state.extractor().model() {
            io::write_model(&dir.join(FINAL_MODEL_FILE), m)?;
        }
        io::write_json(&dir.join(UPDATES_FILE), state.updates())?;
        io::write_json(&dir.join(SUMMARY_FILE), &summary)?;
    }
    Ok(RunRecord {
        config: config.clone(),
        rows,
        updates: state.updates().to_vec(),
        summary,
        archive,
        duration_secs,
    })
}

fn snapshot(state: &RunState, variant: Variant) -> ArchiveSnapshot {
    ArchiveSnapshot {
        header: SnapshotHeader {
            batch_index: state.batch_index(),
            l: state.container().l(),
            seed: state.seed(),
            variant_name: variant.name().to_string(),
        },
        entries: state.container().entries().to_vec(),
    }
}

fn write_update(state: &RunState, variant: Variant, dir: &Path) -> Result<()> {
    let b = state.batch_index();
    io::write_snapshot(
        &dir.join(format!("archive_batch_{b:06}.json")),
        &snapshot(state, variant),
    )?;
    if let Some(m) = state.extractor().model() {
        io::write_model(&dir.join(format!("model_batch_{b:06}.json")), m)?;
    }
    Ok(())
}

fn drive(
    config: &RunConfig,
    resources: &Resources,
    out: Option<&Path>,
    measure: bool,
) -> Result<RunState> {
    let task = config.task();
    let variant = config.run.variant;
    let reference = match (measure, task.kind()) {
        (true, TaskKind::Ballistic) => Some(resources.reference(config)?),
        _ => None,
    };
    let mut centroids = None;
    let extractor = match variant {
        Variant::HandCoded => Extractor::hand_coded(&task),
        Variant::Genotype => Extractor::genotype(&task),
        Variant::PcaInc => Extractor::incremental(LatentKind::Pca),
        Variant::AeInc => Extractor::incremental(LatentKind::Autoencoder),
        Variant::PcaPre | Variant::AePre => {
            let kind = if variant == Variant::PcaPre {
                LatentKind::Pca
            } else {
                LatentKind::Autoencoder
            };
            let pre = resources.pretrained(config, kind)?;
            Extractor::pretrained(pre.0.clone(), pre.1.clone())
        }
        Variant::CvtPrior | Variant::CvtBlind => {
            centroids = Some(resources.centroids(config, variant)?);
            Extractor::sensory()
        }
    };
    let mut state = RunState::initialize(
        task,
        extractor,
        centroids,
        config.settings(),
        config.run.seed,
    )?;
    let snapshots = out.filter(|_| config.run.snapshot_updates);
    if let Some(dir) = snapshots {
        if !state.updates().is_empty() {
            write_update(&state, variant, dir)?;
        }
    }
    let batches = config.run.batches;
    for b in 0..batches {
        if state.update_due() {
            state.update_model()?;
            if let Some(dir) = snapshots {
                write_update(&state, variant, dir)?;
            }
        }
        state.run_batch()?;
        if measure && ((b + 1) % config.run.metrics_every == 0 || b + 1 == batches) {
            let (klc, diversity, rmse) =
                measure_state(&state, config, reference.as_deref().map(Vec::as_slice))?;
            let row = state.last_row_mut().expect("row pushed by run_batch");
            row.klc = klc;
            row.diversity = diversity;
            row.rmse = rmse;
        }
    }
    Ok(state)
}

type Measured = (Option<f64>, Option<f64>, Option<f64>);

fn measure_state(
    state: &RunState,
    config: &RunConfig,
    reference: Option<&[[f64; 2]]>,
) -> Result<Measured> {
    let task = state.task();
    let entries = state.container().entries();
    let klc = match reference {
        Some(r) => Some(metrics::klc(
            r,
            &ground_truths(state),
            task.ground_truth_bounds(),
            &config.metrics.klc(),
        )?),
        None => None,
    };
    let diversity = match task {
        Task::AirHockey(c) => {
            let trajs = entries
                .iter()
                .map(|e| Trajectory::from_sensory(&e.sensory))
                .collect::<Result<Vec<_>>>()?;
            let arena = (0.0, c.arena_size);
            Some(metrics::diversity(
                &trajs,
                config.metrics.diversity_bins,
                [arena, arena],
            ))
        }
        Task::Ballistic(_) => None,
    };
    let rmse = match state.extractor().model() {
        Some(m) if !entries.is_empty() => {
            let data = Dataset::from_rows(SENSORY_DIM, entries.iter().map(|e| &e.sensory))?;
            Some(metrics::reconstruction_rmse(m, &data)?)
        }
        _ => None,
    };
    Ok((klc, diversity, rmse))
}

/// `replications` copies of `base` per variant, replication `i` seeded with
/// `base_seed + i`.
pub fn suite_configs(
    base: &RunConfig,
    variants: &[Variant],
    replications: usize,
    base_seed: u64,
) -> Vec<RunConfig> {
    variants
        .iter()
        .flat_map(|&v| (0..replications as u64).map(move |i| base.with(v, base_seed + i)))
        .collect()
}

/// One line of the suite table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub variant: Variant,
    pub seed: u64,
    pub ok: bool,
    pub error: Option<String>,
    pub final_size: Option<usize>,
    pub final_klc: Option<f64>,
    pub final_diversity: Option<f64>,
    pub final_rmse: Option<f64>,
    pub duration_secs: Option<f64>,
}

impl SuiteRow {
    fn new(config: &RunConfig, outcome: &Result<RunRecord>) -> Self {
        let (v, seed) = (config.run.variant, config.run.seed);
        match outcome {
            Ok(r) => Self {
                variant: v,
                seed,
                ok: true,
                error: None,
                final_size: Some(r.summary.final_size),
                final_klc: r.summary.final_klc,
                final_diversity: r.summary.final_diversity,
                final_rmse: r.summary.final_rmse,
                duration_secs: Some(r.duration_secs),
            },
            Err(e) => Self {
                variant: v,
                seed,
                ok: false,
                error: Some(e.to_string()),
                final_size: None,
                final_klc: None,
                final_diversity: None,
                final_rmse: None,
                duration_secs: None,
            },
        }
    }

    pub fn value(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Klc => self.final_klc,
            Metric::Diversity => self.final_diversity,
            Metric::Size => self.final_size.map(|s| s as f64),
            Metric::Rmse => self.final_rmse,
        }
    }
}

/// Median and quartiles of one metric for one variant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatRow {
    pub variant: Variant,
    pub metric: Metric,
    pub n: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SuiteReport {
    /// One row per config, in input order.
    pub runs: Vec<SuiteRow>,
    pub stats: Vec<StatRow>,
}

impl SuiteReport {
    pub fn stat(&self, variant: Variant, metric: Metric) -> Option<&StatRow> {
        self.stats
            .iter()
            .find(|s| s.variant == variant && s.metric == metric)
    }

    pub fn failures(&self) -> impl Iterator<Item = &SuiteRow> {
        self.runs.iter().filter(|r| !r.ok)
    }

    /// Variants with a median for `metric`, from lowest to highest median.
    pub fn ordering(&self, metric: Metric) -> Vec<(Variant, f64)> {
        let mut v: Vec<_> = self
            .stats
            .iter()
            .filter(|s| s.metric == metric)
            .map(|s| (s.variant, s.median))
            .collect();
        v.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        v
    }
}

/// Nearest-rank percentile, `p` in `(0, 1]`.
pub fn nearest_rank(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    Some(sorted[rank - 1])
}

/// `(median, q1, q3)` by nearest rank.
pub fn quartiles(values: &[f64]) -> Option<(f64, f64, f64)> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some((
        nearest_rank(&v, 0.5)?,
        nearest_rank(&v, 0.25)?,
        nearest_rank(&v, 0.75)?,
    ))
}

pub fn summarize(runs: Vec<SuiteRow>) -> SuiteReport {
    let mut groups: BTreeMap<Variant, Vec<&SuiteRow>> = BTreeMap::new();
    for r in &runs {
        groups.entry(r.variant).or_default().push(r);
    }
    let mut stats = Vec::new();
    for (variant, rows) in groups {
        for metric in Metric::ALL {
            let values: Vec<f64> = rows.iter().filter_map(|r| r.value(metric)).collect();
            if let Some((median, q1, q3)) = quartiles(&values) {
                stats.push(StatRow {
                    variant,
                    metric,
                    n: values.len(),
                    median,
                    q1,
                    q3,
                });
            }
        }
    }
    SuiteReport { runs, stats }
}

pub const SUITE_RUNS_FILE: &str = "suite_runs.csv";
pub const SUITE_STATS_FILE: &str = "suite_stats.csv";

/// Directory of one suite run below the suite's output directory.
pub fn run_dir(out: &Path, variant: Variant, seed: u64) -> PathBuf {
    out.join(variant.name()).join(format!("seed_{seed}"))
}

/// Runs every config on `parallel` worker threads. A failing run is
/// reported in its row and does not stop the others.
pub fn run_suite(
    configs: &[RunConfig],
    parallel: usize,
    resources: &Resources,
    out: Option<&Path>,
) -> Result<SuiteReport> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<SuiteRow>>> = configs.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..parallel.max(1).min(configs.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(cfg) = configs.get(i) else { break };
                let dir = out.map(|o| run_dir(o, cfg.run.variant, cfg.run.seed));
                let outcome = run(cfg, resources, dir.as_deref());
                *slots[i].lock().expect("slot lock") = Some(SuiteRow::new(cfg, &outcome));
            });
        }
    });
    let runs = slots
        .into_iter()
        .map(|s| {
            s.into_inner()
                .expect("slot lock")
                .expect("every config runs")
        })
        .collect();
    let report = summarize(runs);
    if let Some(o) = out {
        fs::create_dir_all(o)?;
        write_suite(o, &report)?;
    }
    Ok(report)
}

pub fn write_suite(dir: &Path, report: &SuiteReport) -> Result<()> {
    io::write_csv(&dir.join(SUITE_RUNS_FILE), &report.runs)?;
    io::write_csv(&dir.join(SUITE_STATS_FILE), &report.stats)
}

pub fn read_suite(dir: &Path) -> Result<SuiteReport> {
    Ok(SuiteReport {
        runs: io::read_csv(&dir.join(SUITE_RUNS_FILE))?,
        stats: io::read_csv(&dir.join(SUITE_STATS_FILE))?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Klc,
    Diversity,
    Size,
    Rmse,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Klc, Metric::Diversity, Metric::Size, Metric::Rmse];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Klc => "klc",
            Metric::Diversity => "diversity",
            Metric::Size => "size",
            Metric::Rmse => "rmse",
        }
    }

    pub fn of(self, row: &MetricsRow) -> Option<f64> {
        match self {
            Metric::Klc => row.klc,
            Metric::Diversity => row.diversity,
            Metric::Size => Some(row.archive_size as f64),
            Metric::Rmse => row.rmse,
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown metric {s:?}")))
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A finished run found on disk.
#[derive(Clone, Debug)]
pub struct StoredRun {
    pub dir: PathBuf,
    pub summary: RunSummary,
}

impl StoredRun {
    pub fn metrics(&self) -> Result<Vec<MetricsRow>> {
        read_metrics(&self.dir.join(METRICS_FILE))
    }

    pub fn archive(&self) -> Result<ArchiveSnapshot> {
        io::read_snapshot(&self.dir.join(FINAL_ARCHIVE_FILE))
    }
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    io::read_csv(path)
}

pub fn read_summary(path: &Path) -> Result<RunSummary> {
    io::read_json(path)
}

/// Every directory below `root` (inclusive) holding a run summary, sorted
/// by variant, seed and path.
pub fn find_runs(root: &Path) -> Result<Vec<StoredRun>> {
    let mut found = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let summary = dir.join(SUMMARY_FILE);
        if summary.is_file() && dir.join(METRICS_FILE).is_file() {
            found.push(StoredRun {
                summary: read_summary(&summary)?,
                dir: dir.clone(),
            });
        }
        for entry in fs::read_dir(&dir)? {
            let p = entry?.path();
            if p.is_dir() {
                stack.push(p);
            }
        }
    }
    found.sort_by(|a, b| {
        (a.summary.variant, a.summary.seed, &a.dir).cmp(&(
            b.summary.variant,
            b.summary.seed,
            &b.dir,
        ))
    });
    Ok(found)
}

/// One line of a per-metric plot file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub batch: u64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

/// One archive entry in descriptor space and hand-coded space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub descriptor_x: Option<f64>,
    pub descriptor_y: Option<f64>,
    pub gt_x: Option<f64>,
    pub gt_y: Option<f64>,
}

/// Per-batch median and quartiles of `metric` across replications.
pub fn plot_rows(runs: &[Vec<MetricsRow>], metric: Metric) -> Vec<PlotRow> {
    let mut by_batch: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for rows in runs {
        for r in rows {
            if let Some(v) = metric.of(r) {
                by_batch.entry(r.batch).or_default().push(v);
            }
        }
    }
    by_batch
        .into_iter()
        .filter_map(|(batch, v)| {
            quartiles(&v).map(|(median, q1, q3)| PlotRow {
                batch,
                median,
                q1,
                q3,
            })
        })
        .collect()
}

/// Scatter rows of a snapshot; descriptor coordinates are left empty unless
/// the descriptor is 2-D.
pub fn scatter_rows(snapshot: &ArchiveSnapshot) -> Vec<ScatterRow> {
    snapshot
        .entries
        .iter()
        .map(|e| {
            let (dx, dy) = match e.descriptor.as_slice() {
                &[x, y] => (Some(x), Some(y)),
                _ => (None, None),
            };
            ScatterRow {
                descriptor_x: dx,
                descriptor_y: dy,
                gt_x: e.ground_truth.map(|g| g[0]),
                gt_y: e.ground_truth.map(|g| g[1]),
            }
        })
        .collect()
}

/// Writes `<metric>_<variant>.csv` for every variant found below `runs`,
/// plus `scatter_<variant>_seed<seed>.csv` for every final archive, into
/// `out`. Returns the written paths.
pub fn export_plot_data(runs: &Path, metric: Metric, out: &Path) -> Result<Vec<PathBuf>> {
    let stored = find_runs(runs)?;
    fs::create_dir_all(out)?;
    let mut by_variant: BTreeMap<Variant, Vec<&StoredRun>> = BTreeMap::new();
    for r in &stored {
        by_variant.entry(r.summary.variant).or_default().push(r);
    }
    let mut written = Vec::new();
    for (variant, group) in by_variant {
        let logs = group
            .iter()
            .map(|r| r.metrics())
            .collect::<Result<Vec<_>>>()?;
        let p = out.join(format!("{}_{}.csv", metric.name(), variant.name()));
        io::write_csv(&p, &plot_rows(&logs, metric))?;
        written.push(p);
        for r in group {
            if r.dir.join(FINAL_ARCHIVE_FILE).is_file() {
                let p = out.join(format!(
                    "scatter_{}_seed{}.csv",
                    variant.name(),
                    r.summary.seed
                ));
                io::write_csv(&p, &scatter_rows(&r.archive()?))?;
                written.push(p);
            }
        }
    }
    Ok(written)
}

pub fn read_plot(path: &Path) -> Result<Vec<PlotRow>> {
    io::read_csv(path)
}

pub fn read_scatter(path: &Path) -> Result<Vec<ScatterRow>> {
    io::read_csv(path)
}
