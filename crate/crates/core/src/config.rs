//! Run configuration, read from a sectioned TOML file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::descriptor::{AeConfig, UpdateSchedule};
use crate::error::{Error, Result};
use crate::metrics::KlcConfig;
use crate::qd::{CuriosityConfig, NeighborIndex, RunSettings, Selector};
use crate::tasks::{ArenaConfig, BallisticConfig, Task, TaskKind};

/// The eight ways of producing behavioural descriptors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    HandCoded,
    Genotype,
    PcaPre,
    PcaInc,
    AePre,
    AeInc,
    CvtPrior,
    CvtBlind,
}

impl Variant {
    pub const ALL: [Variant; 8] = [
        Variant::HandCoded,
        Variant::Genotype,
        Variant::PcaPre,
        Variant::PcaInc,
        Variant::AePre,
        Variant::AeInc,
        Variant::CvtPrior,
        Variant::CvtBlind,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::HandCoded => "hand_coded",
            Variant::Genotype => "genotype",
            Variant::PcaPre => "pca_pre",
            Variant::PcaInc => "pca_inc",
            Variant::AePre => "ae_pre",
            Variant::AeInc => "ae_inc",
            Variant::CvtPrior => "cvt_prior",
            Variant::CvtBlind => "cvt_blind",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown variant {s:?}")))
    }

    /// Needs data gathered before the run (pre-trained models, prior CVT).
    pub fn needs_prior(self) -> bool {
        matches!(self, Variant::PcaPre | Variant::AePre | Variant::CvtPrior)
    }

    pub fn is_cvt(self) -> bool {
        matches!(self, Variant::CvtPrior | Variant::CvtBlind)
    }

    pub fn has_model(self) -> bool {
        matches!(
            self,
            Variant::PcaPre | Variant::PcaInc | Variant::AePre | Variant::AeInc
        )
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub task: TaskKind,
    pub variant: Variant,
    pub batches: u64,
    pub batch_size: usize,
    pub seed: u64,
    pub n_init: usize,
    /// Metrics are computed every this many batches and after the last one.
    pub metrics_every: u64,
    /// Write an archive snapshot after every model update.
    pub snapshot_updates: bool,
    /// Seed of the hand-coded run whose final archive is the KLC reference.
    pub reference_seed: u64,
    /// Seed for fitting pre-trained models.
    pub prior_seed: u64,
    /// Values per action dimension in the prior sampling grid.
    pub prior_per_dim: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            task: TaskKind::Ballistic,
            variant: Variant::PcaInc,
            batches: 5000,
            batch_size: 200,
            seed: 0,
            n_init: 200,
            metrics_every: 10,
            snapshot_updates: true,
            reference_seed: 1_000_003,
            prior_seed: 0,
            prior_per_dim: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchiveSection {
    pub target_capacity: usize,
    pub l_min: f64,
    pub index: NeighborIndex,
}

impl Default for ArchiveSection {
    fn default() -> Self {
        Self {
            target_capacity: 10_000,
            l_min: 1e-6,
            index: NeighborIndex::Linear,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MutationSection {
    pub sigma_fraction: f64,
}

impl Default for MutationSection {
    fn default() -> Self {
        Self {
            sigma_fraction: 0.05,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSection {
    pub updates: UpdateSchedule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PcaSection {
    pub components: usize,
}

impl Default for PcaSection {
    fn default() -> Self {
        Self { components: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvtSection {
    pub prior_centroids: usize,
    pub blind_centroids: usize,
    pub kmeans_max_iter: usize,
    /// Lloyd refinements of the blind centroids; 0 keeps the raw samples.
    pub blind_lloyd_iters: usize,
    pub seed: u64,
    pub selector: Selector,
    /// Centroid files to load instead of building the sets.
    pub prior_file: Option<PathBuf>,
    pub blind_file: Option<PathBuf>,
}

impl Default for CvtSection {
    fn default() -> Self {
        Self {
            prior_centroids: 10_000,
            blind_centroids: 100_000,
            kmeans_max_iter: 100,
            blind_lloyd_iters: 0,
            seed: 0,
            selector: Selector::Uniform,
            prior_file: None,
            blind_file: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    pub klc_bins: usize,
    pub klc_epsilon: f64,
    pub diversity_bins: usize,
}

impl Default for MetricsSection {
    fn default() -> Self {
        let k = KlcConfig::default();
        Self {
            klc_bins: k.bins,
            klc_epsilon: k.epsilon,
            diversity_bins: 10,
        }
    }
}

impl MetricsSection {
    pub fn klc(&self) -> KlcConfig {
        KlcConfig {
            bins: self.klc_bins,
            epsilon: self.klc_epsilon,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteSection {
    pub variants: Vec<Variant>,
    pub replications: usize,
    pub parallel: usize,
    /// Replication `i` runs with seed `base_seed + i`.
    pub base_seed: u64,
}

impl Default for SuiteSection {
    fn default() -> Self {
        Self {
            variants: Vec::new(),
            replications: 20,
            parallel: 1,
            base_seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub archive: ArchiveSection,
    pub mutation: MutationSection,
    pub curiosity: CuriosityConfig,
    pub schedule: ScheduleSection,
    pub pca: PcaSection,
    pub ae: AeConfig,
    pub cvt: CvtSection,
    pub metrics: MetricsSection,
    pub ballistic: BallisticConfig,
    pub airhockey: ArenaConfig,
    pub suite: SuiteSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: RunConfig = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?).map_err(|e| match e {
            Error::Toml(t) => Error::Format {
                path: path.to_path_buf(),
                reason: t.to_string(),
            },
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always serializable")
    }

    pub fn task(&self) -> Task {
        match self.run.task {
            TaskKind::Ballistic => Task::Ballistic(self.ballistic.clone()),
            TaskKind::Airhockey => Task::AirHockey(self.airhockey.clone()),
        }
    }

    /// The same configuration with another variant and seed.
    pub fn with(&self, variant: Variant, seed: u64) -> Self {
        let mut c = self.clone();
        c.run.variant = variant;
        c.run.seed = seed;
        c
    }

    pub fn settings(&self) -> RunSettings {
        let variant = self.run.variant;
        RunSettings {
            batch_size: self.run.batch_size,
            n_init: self.run.n_init,
            sigma_fraction: self.mutation.sigma_fraction,
            selector: if variant.is_cvt() {
                self.cvt.selector
            } else {
                Selector::Curiosity
            },
            curiosity: self.curiosity.clone(),
            target_capacity: self.archive.target_capacity,
            l_min: self.archive.l_min,
            index: self.archive.index,
            schedule: self.schedule.updates.clone(),
            latent_dim: self.pca.components,
            ae: self.ae.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let task = self.task();
        task.validate()?;
        self.curiosity.validate()?;
        self.ae.validate()?;
        let r = &self.run;
        if r.batches < 1 {
            return bad("run.batches must be at least 1".into());
        }
        if r.n_init < 2 {
            return bad("run.n_init must be at least 2".into());
        }
        if r.metrics_every < 1 {
            return bad("run.metrics_every must be at least 1".into());
        }
        for v in std::iter::once(r.variant).chain(self.suite.variants.iter().copied()) {
            self.check_variant(v)?;
        }
        if !(self.mutation.sigma_fraction >= 0.0 && self.mutation.sigma_fraction.is_finite()) {
            return bad("mutation.sigma_fraction must be a non-negative number".into());
        }
        if self.archive.target_capacity == 0 || !(self.archive.l_min > 0.0) {
            return bad("archive.target_capacity and archive.l_min must be positive".into());
        }
        if self.pca.components == 0 || self.pca.components != self.ae.architecture.latent {
            return bad(format!(
                "pca.components ({}) must match the auto-encoder latent size ({})",
                self.pca.components, self.ae.architecture.latent
            ));
        }
        if self.cvt.prior_centroids == 0 || self.cvt.blind_centroids == 0 {
            return bad("cvt centroid counts must be positive".into());
        }
        if self.metrics.klc_bins == 0
            || self.metrics.diversity_bins == 0
            || !(self.metrics.klc_epsilon > 0.0)
        {
            return bad("metrics bins and klc_epsilon must be positive".into());
        }
        if self.suite.parallel == 0 {
            return bad("suite.parallel must be at least 1".into());
        }
        Ok(())
    }

    pub fn check_variant(&self, v: Variant) -> Result<()> {
        if v.needs_prior() && self.task().prior_genotypes(1).is_none() {
            return Err(Error::InvalidConfig(format!(
                "variant {v} needs a prior action sampler, which the {} task does not have",
                self.run.task.name()
            )));
        }
        if v.needs_prior() && self.run.prior_per_dim < 2 {
            return Err(Error::InvalidConfig(
                "run.prior_per_dim must be at least 2".into(),
            ));
        }
        Ok(())
    }
}
