use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    l_from_extent, mutate, recompute_l, select_parents, select_uniform, AddResult, Archive,
    CuriosityConfig, Individual, NeighborIndex,
};
use crate::cvt::{CentroidSet, CvtGrid};
use crate::descriptor::{
    AeConfig, Dataset, DescriptorKind, Extractor, LatentModel, TrainReport, UpdateSchedule,
};
use crate::error::{Error, Result};
use crate::par;
use crate::tasks::{Task, SENSORY_DIM};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    #[default]
    Curiosity,
    Uniform,
}

/// Everything the batch loop needs besides the task and extractor.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSettings {
    pub batch_size: usize,
    pub n_init: usize,
    pub sigma_fraction: f64,
    pub selector: Selector,
    pub curiosity: CuriosityConfig,
    pub target_capacity: usize,
    pub l_min: f64,
    pub index: NeighborIndex,
    pub schedule: UpdateSchedule,
    pub latent_dim: usize,
    pub ae: AeConfig,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            batch_size: 200,
            n_init: 200,
            sigma_fraction: 0.05,
            selector: Selector::Curiosity,
            curiosity: CuriosityConfig::default(),
            target_capacity: 10_000,
            l_min: 1e-6,
            index: NeighborIndex::Linear,
            schedule: UpdateSchedule::default(),
            latent_dim: 2,
            ae: AeConfig::default(),
        }
    }
}

/// Where individuals are stored.
#[derive(Clone, Debug)]
pub enum Container {
    Archive(Archive),
    Cvt(CvtGrid),
}

impl Container {
    pub fn len(&self) -> usize {
        match self {
            Container::Archive(a) => a.len(),
            Container::Cvt(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entries(&self) -> &[Individual] {
        match self {
            Container::Archive(a) => a.entries(),
            Container::Cvt(g) => g.entries(),
        }
    }

    fn entries_mut(&mut self) -> &mut [Individual] {
        match self {
            Container::Archive(a) => a.entries_mut(),
            Container::Cvt(g) => g.entries_mut(),
        }
    }

    /// Distance threshold of the unstructured archive.
    pub fn l(&self) -> Option<f64> {
        match self {
            Container::Archive(a) => Some(a.l()),
            Container::Cvt(_) => None,
        }
    }
}

/// One line of the per-batch metrics log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub batch: u64,
    pub archive_size: usize,
    pub l: Option<f64>,
    pub evaluations: u64,
    pub klc: Option<f64>,
    pub diversity: Option<f64>,
    pub rmse: Option<f64>,
}

/// A latent-model refit and its training reports (empty for PCA).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelUpdate {
    pub batch: u64,
    /// The archive held too few entries to fit; the previous model was kept.
    pub skipped: bool,
    pub size_before: usize,
    pub size_after: usize,
    pub l: f64,
    pub reports: Vec<TrainReport>,
}

pub struct RunState {
    task: Task,
    extractor: Extractor,
    container: Container,
    settings: RunSettings,
    seed: u64,
    rng: ChaCha8Rng,
    batch_index: u64,
    evaluations: u64,
    next_id: u64,
    metrics_log: Vec<MetricsRow>,
    updates: Vec<ModelUpdate>,
}

impl RunState {
    /// Evaluates `n_init` uniform genotypes, fits a trainable extractor on
    /// their sensory data, and stores them. `centroids` selects a CVT grid
    /// instead of the unstructured archive.
    pub fn initialize(
        task: Task,
        mut extractor: Extractor,
        centroids: Option<Arc<CentroidSet>>,
        settings: RunSettings,
        seed: u64,
    ) -> Result<Self> {
        task.validate()?;
        settings.curiosity.validate()?;
        if settings.n_init < 2 {
            return Err(Error::InvalidConfig(format!(
                "n_init must be at least 2, got {}",
                settings.n_init
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let genotypes: Vec<Vec<f64>> = (0..settings.n_init)
            .map(|_| task.sample_genotype(&mut rng))
            .collect();
        let evaluated = par::try_map(&genotypes, |g| evaluate(&task, g))?;

        let mut updates = Vec::new();
        if extractor.is_trainable() {
            let data = Dataset::from_rows(SENSORY_DIM, evaluated.iter().map(|e| &e.1))?;
            let kind = match extractor.kind() {
                DescriptorKind::Latent(k) => k,
                _ => unreachable!("only latent extractors are trainable"),
            };
            let (model, reports) = LatentModel::fit(
                kind,
                &data,
                settings.latent_dim,
                &settings.ae,
                fit_seed(seed, 0),
            )?;
            extractor.set_model(model);
            updates.push((0, reports));
        }

        let mut individuals = Vec::with_capacity(evaluated.len());
        let described = par::try_map(&evaluated, |(g, s, traj, gt)| {
            Ok::<_, Error>((extractor.describe(&task, g, traj, s)?, *gt))
        })?;
        for (i, ((g, s, _, _), (d, gt))) in evaluated.into_iter().zip(described).enumerate() {
            let mut ind = Individual::new(i as u64, g, s, d);
            ind.ground_truth = Some(gt);
            individuals.push(ind);
        }

        let mut container = match centroids {
            Some(c) => {
                if c.dim() != individuals[0].descriptor.len() {
                    return Err(Error::DimensionMismatch {
                        expected: c.dim(),
                        got: individuals[0].descriptor.len(),
                    });
                }
                Container::Cvt(CvtGrid::new(c))
            }
            None => {
                let l = match extractor.extent() {
                    Some(extent) if !extractor.is_trainable() => {
                        l_from_extent(extent, settings.target_capacity, settings.l_min)
                    }
                    _ => recompute_l(
                        individuals.iter().map(|e| e.descriptor.as_slice()),
                        settings.target_capacity,
                        settings.l_min,
                    ),
                };
                Container::Archive(Archive::new(l, settings.index)?)
            }
        };
        for ind in individuals {
            insert(&mut container, ind)?;
        }
        let size = container.len();
        let l = container.l();
        Ok(Self {
            task,
            extractor,
            container,
            updates: updates
                .into_iter()
                .map(|(batch, reports)| ModelUpdate {
                    batch,
                    skipped: false,
                    size_before: settings.n_init,
                    size_after: size,
                    l: l.unwrap_or(0.0),
                    reports,
                })
                .collect(),
            next_id: settings.n_init as u64,
            evaluations: settings.n_init as u64,
            settings,
            seed,
            rng,
            batch_index: 0,
            metrics_log: Vec::new(),
        })
    }

    pub fn task(&self) -> &Task {
        &self.task
    }

    pub fn extractor(&self) -> &Extractor {
        &self.extractor
    }

    pub fn container(&self) -> &Container {
        &self.container
    }

    pub fn settings(&self) -> &RunSettings {
        &self.settings
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn batch_index(&self) -> u64 {
        self.batch_index
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn metrics_log(&self) -> &[MetricsRow] {
        &self.metrics_log
    }

    pub fn last_row_mut(&mut self) -> Option<&mut MetricsRow> {
        self.metrics_log.last_mut()
    }

    pub fn updates(&self) -> &[ModelUpdate] {
        &self.updates
    }

    /// True when a trainable extractor is due for a refit before the next
    /// batch. The batch-0 fit happens in [`initialize`](Self::initialize).
    pub fn update_due(&self) -> bool {
        self.extractor.is_trainable()
            && self.batch_index > 0
            && self.settings.schedule.is_due(self.batch_index)
    }

    /// Refits the model if due, then runs one batch. Returns whether a
    /// refit happened.
    pub fn step(&mut self) -> Result<bool> {
        let due = self.update_due();
        if due {
            self.update_model()?;
        }
        self.run_batch()?;
        Ok(due)
    }

    /// Selects `batch_size` parents, evaluates their mutants (in parallel)
    /// and inserts them in offspring order, updating parent curiosity.
    pub fn run_batch(&mut self) -> Result<()> {
        let n = self.settings.batch_size;
        if n > 0 {
            if self.container.is_empty() {
                return Err(Error::EmptyArchive);
            }
            let parents = match self.settings.selector {
                Selector::Curiosity => select_parents(
                    self.container.entries(),
                    &self.settings.curiosity,
                    n,
                    &mut self.rng,
                )?,
                Selector::Uniform => select_uniform(self.container.len(), n, &mut self.rng)?,
            };
            let bounds = self.task.bounds();
            let entries = self.container.entries();
            let offspring: Vec<(usize, u64, Vec<f64>)> = parents
                .iter()
                .map(|&p| {
                    let g = mutate(
                        &entries[p].genotype,
                        &bounds,
                        self.settings.sigma_fraction,
                        &mut self.rng,
                    );
                    (p, entries[p].id, g)
                })
                .collect();

            let task = &self.task;
            let extractor = &self.extractor;
            let evaluated = par::try_map(&offspring, |(_, _, g)| {
                let (g, s, traj, gt) = evaluate(task, g)?;
                let d = extractor.describe(task, &g, &traj, &s)?;
                Ok::<_, Error>((g, s, d, gt))
            })?;
            let cells = match &self.container {
                Container::Cvt(grid) => {
                    let flat: Vec<f64> =
                        evaluated.iter().flat_map(|e| e.2.iter().copied()).collect();
                    Some(grid.centroids().nearest_many(&flat)?)
                }
                Container::Archive(_) => None,
            };

            for (i, ((p, pid, _), (g, s, d, gt))) in
                offspring.into_iter().zip(evaluated).enumerate()
            {
                let mut child = Individual::new(self.next_id, g, s, d);
                child.ground_truth = Some(gt);
                self.next_id += 1;
                let result = match (&mut self.container, &cells) {
                    (Container::Cvt(grid), Some(cells)) => grid.try_add_at(cells[i].0, child)?,
                    (c, _) => insert(c, child)?,
                };
                if self.settings.selector == Selector::Curiosity {
                    let parent = &mut self.container.entries_mut()[p];
                    if parent.id == pid {
                        parent.curiosity =
                            self.settings.curiosity.updated(parent.curiosity, &result);
                    }
                }
            }
            self.evaluations += n as u64;
        }
        self.metrics_log.push(MetricsRow {
            batch: self.batch_index,
            archive_size: self.container.len(),
            l: self.container.l(),
            evaluations: self.evaluations,
            klc: None,
            diversity: None,
            rmse: None,
        });
        self.batch_index += 1;
        Ok(())
    }

    /// Refits the latent model on the archive's sensory data, reprojects
    /// every entry, recomputes `l` and rebuilds the archive. An archive too
    /// small to fit on keeps the current model.
    pub fn update_model(&mut self) -> Result<()> {
        let kind = match self.extractor.kind() {
            DescriptorKind::Latent(k) if self.extractor.is_trainable() => k,
            _ => {
                return Err(Error::NotApplicable(
                    "model update for a fixed extractor".into(),
                ))
            }
        };
        let Container::Archive(archive) = &mut self.container else {
            return Err(Error::NotApplicable("model update on a CVT grid".into()));
        };
        let data = Dataset::from_rows(SENSORY_DIM, archive.entries().iter().map(|e| &e.sensory))?;
        let fitted = LatentModel::fit(
            kind,
            &data,
            self.settings.latent_dim,
            &self.settings.ae,
            fit_seed(self.seed, self.batch_index),
        );
        let (model, reports) = match fitted {
            Err(Error::InsufficientData { .. }) => {
                self.updates.push(ModelUpdate {
                    batch: self.batch_index,
                    skipped: true,
                    size_before: archive.len(),
                    size_after: archive.len(),
                    l: archive.l(),
                    reports: Vec::new(),
                });
                return Ok(());
            }
            other => other?,
        };
        let projected = par::try_map(archive.entries(), |e| model.project(&e.sensory))?;
        for (e, d) in archive.entries_mut().iter_mut().zip(projected) {
            e.descriptor = d;
        }
        let l = recompute_l(
            archive.entries().iter().map(|e| e.descriptor.as_slice()),
            self.settings.target_capacity,
            self.settings.l_min,
        );
        let size_before = archive.len();
        let old = std::mem::replace(archive, Archive::new(l, self.settings.index)?);
        *archive = old.rebuild(l)?;
        self.extractor.set_model(model);
        self.updates.push(ModelUpdate {
            batch: self.batch_index,
            skipped: false,
            size_before,
            size_after: archive.len(),
            l,
            reports,
        });
        Ok(())
    }
}

type Evaluated = (Vec<f64>, Vec<f64>, crate::tasks::Trajectory, [f64; 2]);

fn evaluate(task: &Task, genotype: &[f64]) -> Result<Evaluated> {
    let traj = task.evaluate(genotype)?;
    let gt = task.ground_truth(genotype, &traj)?;
    Ok((genotype.to_vec(), traj.to_sensory(), traj, gt))
}

fn insert(container: &mut Container, ind: Individual) -> Result<AddResult> {
    match container {
        Container::Archive(a) => a.try_add(ind),
        Container::Cvt(g) => g.try_add(ind),
    }
}

fn fit_seed(seed: u64, batch: u64) -> u64 {
    seed ^ (batch + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}
