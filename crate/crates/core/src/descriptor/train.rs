//! Auto-encoder fitting: standardization, Adam, split-based early stopping
//! and selection among repeated fits.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ae::{AeArchitecture, AeNetwork, GradientBuffers};
use super::Dataset;
use crate::error::{Error, Result};
use crate::par;

/// Smallest dataset that still leaves two validation rows after a 75/25 split.
pub const MIN_ROWS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AeConfig {
    pub architecture: AeArchitecture,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Early stopping compares the mean validation error of consecutive,
    /// non-overlapping windows of this many epochs.
    pub window: usize,
    pub repeats: usize,
    pub validation_fraction: f64,
    pub std_floor: f64,
}

impl Default for AeConfig {
    fn default() -> Self {
        Self {
            architecture: AeArchitecture::default(),
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            batch_size: 32,
            max_epochs: 20_000,
            window: 500,
            repeats: 5,
            validation_fraction: 0.25,
            std_floor: 1e-8,
        }
    }
}

impl AeConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.batch_size > 0
            && self.max_epochs > 0
            && self.window > 0
            && self.repeats > 0
            && self.validation_fraction > 0.0
            && self.validation_fraction < 1.0
            && self.std_floor > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "auto-encoder training: {self:?}"
            )))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    /// Mean squared error per input dimension on standardized data.
    pub final_train_error: f64,
    pub final_validation_error: f64,
    pub validation_rows: usize,
    pub split_seed: u64,
}

/// A trained network plus the input standardization it was trained with.
#[derive(Clone, Debug, PartialEq)]
pub struct AeModel {
    pub network: AeNetwork,
    pub input_mean: Vec<f64>,
    pub input_std: Vec<f64>,
}

impl AeModel {
    pub fn new(network: AeNetwork, input_mean: Vec<f64>, input_std: Vec<f64>) -> Result<Self> {
        let d = network.architecture().input_dim();
        for v in [&input_mean, &input_std] {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: v.len(),
                });
            }
        }
        if input_std.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidConfig(
                "standard deviations must be positive".into(),
            ));
        }
        Ok(Self {
            network,
            input_mean,
            input_std,
        })
    }

    /// A model that does not rescale its inputs.
    pub fn unnormalized(network: AeNetwork) -> Self {
        let d = network.architecture().input_dim();
        Self {
            network,
            input_mean: vec![0.0; d],
            input_std: vec![1.0; d],
        }
    }

    fn standardize(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.input_mean.len(),
                got: x.len(),
            });
        }
        Ok(x.iter()
            .zip(self.input_mean.iter().zip(&self.input_std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }

    /// Latent code and reconstruction (original units) of one sensory vector.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (z, mut r) = self.network.forward(&self.standardize(x)?)?;
        for (v, (m, s)) in r
            .iter_mut()
            .zip(self.input_mean.iter().zip(&self.input_std))
        {
            *v = m + s * *v;
        }
        Ok((z, r))
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let xs = self.standardize(x)?;
        if !self.network.is_finite() {
            return Err(Error::NonFinite("auto-encoder parameters"));
        }
        let mut act = self.network.activations();
        self.network.encode_into(&xs, &mut act);
        Ok(act.latent().to_vec())
    }

    pub fn reconstruct(&self, z: &[f64]) -> Result<Vec<f64>> {
        let arch = self.network.architecture();
        if z.len() != arch.latent {
            return Err(Error::DimensionMismatch {
                expected: arch.latent,
                got: z.len(),
            });
        }
        let mut act = self.network.activations();
        act.latent_mut().copy_from_slice(z);
        self.network.decode_into(&mut act);
        Ok(act
            .output()
            .iter()
            .zip(self.input_mean.iter().zip(&self.input_std))
            .map(|(v, (m, s))| m + s * v)
            .collect())
    }
}

/// Trains `config.repeats` auto-encoders on independent 75/25 splits and
/// returns the one with the lowest final validation error, along with every
/// run's report. Repeats are independent and may run in parallel; each one
/// is seeded from `seed` and its index, so the outcome does not depend on
/// scheduling.
pub fn fit(data: &Dataset, config: &AeConfig, seed: u64) -> Result<(AeModel, Vec<TrainReport>)> {
    config.validate()?;
    if data.len() < MIN_ROWS {
        return Err(Error::InsufficientData {
            needed: MIN_ROWS,
            got: data.len(),
        });
    }
    if data.dim() != config.architecture.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: config.architecture.input_dim(),
            got: data.dim(),
        });
    }
    let seeds: Vec<u64> = {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..config.repeats).map(|_| rng.gen()).collect()
    };
    let runs = par::try_map(&seeds, |&s| fit_once(data, config, s))?;
    let mut best = 0;
    for (i, (_, r)) in runs.iter().enumerate() {
        if r.final_validation_error < runs[best].1.final_validation_error {
            best = i;
        }
    }
    let reports = runs.iter().map(|(_, r)| r.clone()).collect();
    let model = runs
        .into_iter()
        .nth(best)
        .map(|(m, _)| m)
        .expect("at least one repeat");
    Ok((model, reports))
}

/// Number of validation rows for a dataset of `n` rows.
pub fn validation_rows(n: usize, fraction: f64) -> usize {
    (fraction * n as f64).floor() as usize
}

fn fit_once(data: &Dataset, config: &AeConfig, split_seed: u64) -> Result<(AeModel, TrainReport)> {
    let mut rng = ChaCha8Rng::seed_from_u64(split_seed);
    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_val = validation_rows(n, config.validation_fraction);
    let (val_idx, train_idx) = order.split_at(n_val);

    let train_raw = data.select(train_idx);
    let mean = train_raw.column_means();
    let mut std = vec![0.0; data.dim()];
    for row in train_raw.rows() {
        for (s, (x, m)) in std.iter_mut().zip(row.iter().zip(&mean)) {
            *s += (x - m) * (x - m);
        }
    }
    let denom = train_raw.len() as f64;
    for s in &mut std {
        *s = (*s / denom).sqrt().max(config.std_floor);
    }
    let standardize = |d: &Dataset| -> Dataset {
        let mut out = Vec::with_capacity(d.as_slice().len());
        for row in d.rows() {
            out.extend(
                row.iter()
                    .zip(mean.iter().zip(&std))
                    .map(|(x, (m, s))| (x - m) / s),
            );
        }
        Dataset::new(d.dim(), out).expect("finite standardized data")
    };
    let train = standardize(&train_raw);
    let val = standardize(&data.select(val_idx));

    let mut net = AeNetwork::random(config.architecture.clone(), &mut rng)?;
    let n_params = net.params().len();
    let mut grad = vec![0.0; n_params];
    let mut m1 = vec![0.0; n_params];
    let mut m2 = vec![0.0; n_params];
    let mut buffers = GradientBuffers::new(&net);
    let mut t = 0i32;
    let mut rows: Vec<usize> = (0..train.len()).collect();
    let mut batch: Vec<&[f64]> = Vec::with_capacity(config.batch_size);

    let mut epochs_run = 0;
    let mut val_error = mse(&net, &val);
    let mut window_sum = 0.0;
    let mut previous_window: Option<f64> = None;
    for epoch in 0..config.max_epochs {
        rows.shuffle(&mut rng);
        for chunk in rows.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train.row(i)));
            buffers.accumulate(&net, &batch, &mut grad);
            t += 1;
            adam_step(net.params_mut(), &grad, &mut m1, &mut m2, t, config);
        }
        if !net.is_finite() {
            return Err(Error::NonFinite("auto-encoder training diverged"));
        }
        epochs_run = epoch + 1;
        val_error = mse(&net, &val);
        window_sum += val_error;
        if epochs_run % config.window == 0 {
            let mean = window_sum / config.window as f64;
            window_sum = 0.0;
            if previous_window.is_some_and(|p| mean > p) {
                break;
            }
            previous_window = Some(mean);
        }
    }

    let report = TrainReport {
        epochs_run,
        final_train_error: mse(&net, &train),
        final_validation_error: val_error,
        validation_rows: n_val,
        split_seed,
    };
    Ok((AeModel::new(net, mean, std)?, report))
}

/// Mean squared error per element.
fn mse(net: &AeNetwork, data: &Dataset) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    2.0 * net.loss(data) / data.dim() as f64
}

fn adam_step(
    params: &mut [f64],
    grad: &[f64],
    m1: &mut [f64],
    m2: &mut [f64],
    t: i32,
    c: &AeConfig,
) {
    let bc1 = 1.0 - c.beta1.powi(t);
    let bc2 = 1.0 - c.beta2.powi(t);
    let step = c.learning_rate * bc2.sqrt() / bc1;
    for i in 0..params.len() {
        let g = grad[i];
        m1[i] = c.beta1 * m1[i] + (1.0 - c.beta1) * g;
        m2[i] = c.beta2 * m2[i] + (1.0 - c.beta2) * g * g;
        params[i] -= step * m1[i] / (m2[i].sqrt() + c.adam_epsilon * bc2.sqrt());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> AeConfig {
        AeConfig {
            max_epochs: 300,
            window: 100,
            ..AeConfig::default()
        }
    }

    #[test]
    fn always_reports_each_repeat() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| (0..100).map(|j| ((i * j) % 7) as f64).collect())
            .collect();
        let data = Dataset::from_rows(100, rows).unwrap();
        let (_, reports) = fit(&data, &quick(), 1).unwrap();
        assert_eq!(reports.len(), 5);
        for r in &reports {
            assert_eq!(r.validation_rows, 5);
            assert!(r.final_train_error >= 0.0 && r.final_validation_error >= 0.0);
        }
    }

    #[test]
    fn too_small_dataset_is_rejected() {
        let data = Dataset::from_rows(100, vec![vec![0.0; 100]; 7]).unwrap();
        assert!(matches!(
            fit(&data, &quick(), 0),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn constant_dataset_is_reconstructed() {
        let row: Vec<f64> = (0..100).map(|j| (j as f64 * 0.37).sin()).collect();
        let data = Dataset::from_rows(100, vec![row.clone(); 16]).unwrap();
        let (model, _) = fit(&data, &quick(), 5).unwrap();
        let (_, rec) = model.forward(&row).unwrap();
        let rmse = (row
            .iter()
            .zip(&rec)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            / 100.0)
            .sqrt();
        assert!(rmse < 1e-3, "{rmse}");
    }

    #[test]
    fn fit_is_deterministic() {
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|i| (0..100).map(|j| ((i + j) % 5) as f64).collect())
            .collect();
        let data = Dataset::from_rows(100, rows).unwrap();
        let cfg = AeConfig {
            max_epochs: 20,
            window: 10,
            ..AeConfig::default()
        };
        let (a, ra) = fit(&data, &cfg, 3).unwrap();
        let (b, rb) = fit(&data, &cfg, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }

    #[test]
    fn project_and_reconstruct_agree_with_forward() {
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| (0..100).map(|j| (i * j) as f64 * 0.01).collect())
            .collect();
        let data = Dataset::from_rows(100, rows).unwrap();
        let cfg = AeConfig {
            max_epochs: 5,
            window: 5,
            repeats: 1,
            ..AeConfig::default()
        };
        let (m, _) = fit(&data, &cfg, 0).unwrap();
        let x = data.row(3);
        let (z, r) = m.forward(x).unwrap();
        assert_eq!(m.project(x).unwrap(), z);
        assert_eq!(m.reconstruct(&z).unwrap(), r);
    }
}
