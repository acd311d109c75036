//! Behavioural descriptor extractors and the latent models behind them.

pub mod ae;
mod dataset;
pub mod pca;
pub mod schedule;
pub mod train;

use serde::{Deserialize, Serialize};

pub use ae::{AeArchitecture, AeNetwork};
pub use dataset::Dataset;
pub use pca::PcaModel;
pub use schedule::UpdateSchedule;
pub use train::{AeConfig, AeModel, TrainReport};

use crate::error::{Error, Result};
use crate::tasks::{Task, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatentKind {
    Pca,
    Autoencoder,
}

/// A fitted dimensionality-reduction model.
#[derive(Clone, Debug, PartialEq)]
pub enum LatentModel {
    Pca(PcaModel),
    Autoencoder(AeModel),
}

impl LatentModel {
    pub fn kind(&self) -> LatentKind {
        match self {
            LatentModel::Pca(_) => LatentKind::Pca,
            LatentModel::Autoencoder(_) => LatentKind::Autoencoder,
        }
    }

    /// Fits a model of the given kind; returns the auto-encoder training
    /// reports (empty for PCA).
    pub fn fit(
        kind: LatentKind,
        data: &Dataset,
        components: usize,
        ae: &AeConfig,
        seed: u64,
    ) -> Result<(Self, Vec<TrainReport>)> {
        match kind {
            LatentKind::Pca => Ok((
                LatentModel::Pca(PcaModel::fit(data, components)?),
                Vec::new(),
            )),
            LatentKind::Autoencoder => {
                let (m, reports) = train::fit(data, ae, seed)?;
                Ok((LatentModel::Autoencoder(m), reports))
            }
        }
    }

    pub fn project(&self, sensory: &[f64]) -> Result<Vec<f64>> {
        match self {
            LatentModel::Pca(m) => m.project(sensory),
            LatentModel::Autoencoder(m) => m.project(sensory),
        }
    }

    pub fn reconstruct(&self, latent: &[f64]) -> Result<Vec<f64>> {
        match self {
            LatentModel::Pca(m) => m.reconstruct(latent),
            LatentModel::Autoencoder(m) => m.reconstruct(latent),
        }
    }

    /// Encode then decode.
    pub fn round_trip(&self, sensory: &[f64]) -> Result<Vec<f64>> {
        match self {
            LatentModel::Pca(m) => m.reconstruct(&m.project(sensory)?),
            LatentModel::Autoencoder(m) => Ok(m.forward(sensory)?.1),
        }
    }
}

/// Which descriptor an individual is placed by.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescriptorKind {
    HandCoded,
    Genotype,
    Latent(LatentKind),
    /// The raw 100-D sensory vector (CVT baselines).
    Sensory,
}

/// Computes descriptors; holds the latent model when there is one.
#[derive(Clone, Debug, PartialEq)]
pub struct Extractor {
    kind: DescriptorKind,
    model: Option<LatentModel>,
    trainable: bool,
    /// Fixed extent of the descriptor space, when known ahead of the run.
    extent: Option<Vec<(f64, f64)>>,
}

impl Extractor {
    pub fn hand_coded(task: &Task) -> Self {
        Self {
            kind: DescriptorKind::HandCoded,
            model: None,
            trainable: false,
            extent: Some(task.ground_truth_bounds().to_vec()),
        }
    }

    pub fn genotype(task: &Task) -> Self {
        Self {
            kind: DescriptorKind::Genotype,
            model: None,
            trainable: false,
            extent: Some(task.bounds()),
        }
    }

    pub fn sensory() -> Self {
        Self {
            kind: DescriptorKind::Sensory,
            model: None,
            trainable: false,
            extent: None,
        }
    }

    /// A latent extractor refitted during the run; has no model until the
    /// first fit.
    pub fn incremental(kind: LatentKind) -> Self {
        Self {
            kind: DescriptorKind::Latent(kind),
            model: None,
            trainable: true,
            extent: None,
        }
    }

    /// A latent extractor fitted once, ahead of the run. `extent` is the
    /// bounding box of the prior data in latent space.
    pub fn pretrained(model: LatentModel, extent: Vec<(f64, f64)>) -> Self {
        Self {
            kind: DescriptorKind::Latent(model.kind()),
            model: Some(model),
            trainable: false,
            extent: Some(extent),
        }
    }

    pub fn kind(&self) -> DescriptorKind {
        self.kind
    }

    pub fn is_trainable(&self) -> bool {
        self.trainable
    }

    pub fn model(&self) -> Option<&LatentModel> {
        self.model.as_ref()
    }

    pub fn extent(&self) -> Option<&[(f64, f64)]> {
        self.extent.as_deref()
    }

    pub(crate) fn set_model(&mut self, model: LatentModel) {
        debug_assert!(self.trainable);
        self.model = Some(model);
    }

    /// Descriptor of one evaluated behaviour.
    pub fn describe(
        &self,
        task: &Task,
        genotype: &[f64],
        traj: &Trajectory,
        sensory: &[f64],
    ) -> Result<Vec<f64>> {
        match self.kind {
            DescriptorKind::HandCoded => Ok(task.ground_truth(genotype, traj)?.to_vec()),
            DescriptorKind::Genotype => Ok(genotype.to_vec()),
            DescriptorKind::Sensory => Ok(sensory.to_vec()),
            DescriptorKind::Latent(_) => self
                .model
                .as_ref()
                .ok_or_else(|| {
                    Error::NotApplicable("latent projection before the first fit".into())
                })?
                .project(sensory),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::{ArenaConfig, BallisticConfig};

    #[test]
    fn genotype_and_hand_coded_descriptors() {
        let task = Task::Ballistic(BallisticConfig::default());
        let g = [0.7, 6.0];
        let traj = task.evaluate(&g).unwrap();
        let s = traj.to_sensory();
        assert_eq!(
            Extractor::genotype(&task)
                .describe(&task, &g, &traj, &s)
                .unwrap(),
            g.to_vec()
        );
        let hc = Extractor::hand_coded(&task)
            .describe(&task, &g, &traj, &s)
            .unwrap();
        assert_eq!(hc, task.ground_truth(&g, &traj).unwrap().to_vec());

        let arena = Task::AirHockey(ArenaConfig::default());
        let g = [0.1; 8];
        let traj = arena.evaluate(&g).unwrap();
        let s = traj.to_sensory();
        let hc = Extractor::hand_coded(&arena)
            .describe(&arena, &g, &traj, &s)
            .unwrap();
        assert_eq!(hc, traj.last().to_vec());
    }

    #[test]
    fn latent_before_fit_is_an_error() {
        let task = Task::Ballistic(BallisticConfig::default());
        let g = [0.7, 6.0];
        let traj = task.evaluate(&g).unwrap();
        let e = Extractor::incremental(LatentKind::Pca);
        assert!(e.describe(&task, &g, &traj, &traj.to_sensory()).is_err());
    }

    #[test]
    fn projection_is_pure() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| (0..100).map(|j| ((i * 7 + j * 3) % 11) as f64).collect())
            .collect();
        let data = Dataset::from_rows(100, rows).unwrap();
        let (m, _) = LatentModel::fit(LatentKind::Pca, &data, 2, &AeConfig::default(), 0).unwrap();
        let x = data.row(4);
        assert_eq!(m.project(x).unwrap(), m.project(x).unwrap());
    }
}
