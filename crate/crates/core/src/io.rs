//! On-disk formats: archive snapshots and latent models as JSON, plus CSV
//! helpers shared by the harness.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::descriptor::{AeArchitecture, AeModel, AeNetwork, LatentModel, PcaModel};
use crate::error::{Error, Result};
use crate::qd::Individual;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub batch_index: u64,
    /// `None` for CVT grids.
    pub l: Option<f64>,
    pub seed: u64,
    pub variant_name: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchiveSnapshot {
    pub header: SnapshotHeader,
    pub entries: Vec<Individual>,
}

/// Serialized form of a [`LatentModel`], tagged by kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelFile {
    Pca {
        mean: Vec<f64>,
        components: Vec<Vec<f64>>,
        explained_variance: Vec<f64>,
    },
    Autoencoder {
        architecture: AeArchitecture,
        params: Vec<f64>,
        input_mean: Vec<f64>,
        input_std: Vec<f64>,
    },
}

impl From<&LatentModel> for ModelFile {
    fn from(m: &LatentModel) -> Self {
        match m {
            LatentModel::Pca(p) => ModelFile::Pca {
                mean: p.mean.clone(),
                components: p.components.clone(),
                explained_variance: p.explained_variance.clone(),
            },
            LatentModel::Autoencoder(a) => ModelFile::Autoencoder {
                architecture: a.network.architecture().clone(),
                params: a.network.params().to_vec(),
                input_mean: a.input_mean.clone(),
                input_std: a.input_std.clone(),
            },
        }
    }
}

impl ModelFile {
    pub fn into_model(self) -> Result<LatentModel> {
        Ok(match self {
            ModelFile::Pca {
                mean,
                components,
                explained_variance,
            } => {
                let d = mean.len();
                if let Some(c) = components.iter().find(|c| c.len() != d) {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: c.len(),
                    });
                }
                if explained_variance.len() != components.len() {
                    return Err(Error::DimensionMismatch {
                        expected: components.len(),
                        got: explained_variance.len(),
                    });
                }
                LatentModel::Pca(PcaModel {
                    mean,
                    components,
                    explained_variance,
                })
            }
            ModelFile::Autoencoder {
                architecture,
                params,
                input_mean,
                input_std,
            } => {
                let net = AeNetwork::from_params(architecture, params)?;
                LatentModel::Autoencoder(AeModel::new(net, input_mean, input_std)?)
            }
        })
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, value)?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let r = BufReader::new(File::open(path)?);
    serde_json::from_reader(r).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

pub fn write_model(path: &Path, model: &LatentModel) -> Result<()> {
    write_json(path, &ModelFile::from(model))
}

pub fn read_model(path: &Path) -> Result<LatentModel> {
    read_json::<ModelFile>(path)?.into_model()
}

pub fn write_snapshot(path: &Path, snapshot: &ArchiveSnapshot) -> Result<()> {
    write_json(path, snapshot)
}

pub fn read_snapshot(path: &Path) -> Result<ArchiveSnapshot> {
    read_json(path)
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Format {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptor::Dataset;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pca_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| {
                (0..6)
                    .map(|_| rand::Rng::gen::<f64>(&mut rng) / 3.0)
                    .collect()
            })
            .collect();
        let data = Dataset::from_rows(6, rows.iter()).unwrap();
        let model = LatentModel::Pca(PcaModel::fit(&data, 2).unwrap());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        write_model(&p, &model).unwrap();
        assert_eq!(read_model(&p).unwrap(), model);
    }

    #[test]
    fn autoencoder_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = AeNetwork::random(AeArchitecture::default(), &mut rng).unwrap();
        let d = net.architecture().input_dim();
        let model = LatentModel::Autoencoder(
            AeModel::new(net, (0..d).map(|i| i as f64 * 0.1).collect(), vec![1.7; d]).unwrap(),
        );
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        write_model(&p, &model).unwrap();
        assert_eq!(read_model(&p).unwrap(), model);
    }

    #[test]
    fn malformed_model_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        std::fs::write(
            &p,
            r#"{"kind":"pca","mean":[0,0],"components":[[1]],"explained_variance":[1]}"#,
        )
        .unwrap();
        assert!(read_model(&p).is_err());
        std::fs::write(&p, "{").unwrap();
        assert!(matches!(read_model(&p), Err(Error::Format { .. })));
    }
}
