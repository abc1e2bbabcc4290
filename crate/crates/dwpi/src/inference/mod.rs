//! Preference inference: the trained regression model mapping demonstration
//! features to preference weights, plus the two search baselines.

use serde::{Deserialize, Serialize};

use crate::demos::{DemoDataset, DemoFeature, Representation};
use crate::error::{Error, Result};
use crate::nn::{Mlp, MlpConfig};
use crate::rng::RngStream;
use crate::types::{normalize_weights, PreferenceWeight};

mod baselines;

pub use baselines::{mwal_infer, mwal_update, pm_infer, BaselineBudget, BaselineOutcome};

/// Regression model from demonstration features to preference weights.
///
/// Inputs are standardized with the training-set statistics stored on the
/// model, so inference is a pure function of (model, feature).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InferenceModel {
    pub net: Mlp,
    pub representation: Representation,
    /// Which output components may be negative.
    pub signed_objectives: Vec<bool>,
    input_offset: Vec<f64>,
    input_scale: Vec<f64>,
    pub epochs: usize,
    pub loss_curve: Vec<f64>,
    pub final_loss: f64,
}

/// Training knobs for the inference model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DwpiTrainConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Final learning rate of a linear per-epoch decay; equal to
    /// `learning_rate` for a constant rate.
    pub learning_rate_end: f64,
    pub batch_size: usize,
    /// Replace half of the training samples by means of random same-label
    /// row subsets. Deployed features are averages over many
    /// demonstrations, so training must cover feature-space points that
    /// such averaging produces; the augmentation uses dataset rows only.
    pub subset_mean_augmentation: bool,
}

impl Default for DwpiTrainConfig {
    fn default() -> Self {
        DwpiTrainConfig {
            hidden: vec![64, 64],
            epochs: 2000,
            learning_rate: 5e-3,
            learning_rate_end: 5e-4,
            batch_size: 16,
            subset_mean_augmentation: true,
        }
    }
}

impl DwpiTrainConfig {
    fn lr_at(&self, epoch: usize) -> f64 {
        if self.epochs <= 1 {
            return self.learning_rate;
        }
        let t = epoch as f64 / (self.epochs - 1) as f64;
        self.learning_rate + (self.learning_rate_end - self.learning_rate) * t
    }
}

/// Train the inference regressor by minibatch SGD on the squared error
/// between predicted and labelled preference weights.
pub fn train_dwpi(
    dataset: &DemoDataset,
    config: &DwpiTrainConfig,
    signed_objectives: Vec<bool>,
    rng: &mut RngStream,
) -> Result<InferenceModel> {
    if dataset.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    let feat_dim = dataset.feature_dim();
    let label_dim = dataset.label_dim();
    if dataset.features.iter().any(|f| f.values.len() != feat_dim) {
        return Err(Error::InvalidParameter {
            name: "dataset",
            reason: "inconsistent feature dimensions".into(),
        });
    }
    if signed_objectives.len() != label_dim {
        return Err(Error::DimensionMismatch {
            expected: label_dim,
            got: signed_objectives.len(),
        });
    }
    if config.epochs == 0 || config.batch_size == 0 {
        return Err(Error::InvalidParameter {
            name: "epochs/batch_size",
            reason: "must be positive".into(),
        });
    }

    // Standardize inputs; constant features pass through unscaled.
    let n = dataset.len() as f64;
    let mut offset = vec![0.0; feat_dim];
    for f in &dataset.features {
        for (o, v) in offset.iter_mut().zip(&f.values) {
            *o += v / n;
        }
    }
    let mut scale = vec![0.0; feat_dim];
    for f in &dataset.features {
        for (s, (v, o)) in scale.iter_mut().zip(f.values.iter().zip(&offset)) {
            *s += (v - o) * (v - o) / n;
        }
    }
    for s in &mut scale {
        *s = s.sqrt();
        if *s < 1e-8 {
            *s = 1.0;
        }
    }

    let mut sizes = vec![feat_dim];
    sizes.extend_from_slice(&config.hidden);
    sizes.push(label_dim);
    let mut net = Mlp::init(MlpConfig::new(sizes), rng)?;

    let rows: Vec<(Vec<f64>, Vec<f64>)> = dataset
        .features
        .iter()
        .zip(&dataset.labels)
        .map(|(f, l)| {
            let x: Vec<f64> = f
                .values
                .iter()
                .zip(offset.iter().zip(&scale))
                .map(|(v, (o, s))| (v - o) / s)
                .collect();
            (x, l.values().to_vec())
        })
        .collect();

    // Rows sharing one label, for subset-mean augmentation.
    let mut groups: Vec<Vec<usize>> = Vec::new();
    {
        let mut by_label: std::collections::HashMap<Vec<u64>, usize> = std::collections::HashMap::new();
        for (i, label) in dataset.labels.iter().enumerate() {
            let slot = *by_label.entry(label.bits_key()).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[slot].push(i);
        }
    }
    let group_of: Vec<usize> = {
        let mut g = vec![0usize; rows.len()];
        for (gi, group) in groups.iter().enumerate() {
            for &i in group {
                g[i] = gi;
            }
        }
        g
    };

    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut loss_curve = Vec::with_capacity(config.epochs);
    let mut batch: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(config.batch_size);
    for epoch in 0..config.epochs {
        let lr = config.lr_at(epoch);
        // Fisher-Yates shuffle from the training stream.
        for i in (1..order.len()).rev() {
            order.swap(i, rng.index(i + 1));
        }
        let mut epoch_loss = 0.0;
        let mut seen = 0usize;
        for chunk in order.chunks(config.batch_size) {
            batch.resize_with(chunk.len(), || (Vec::new(), Vec::new()));
            for (slot, &i) in batch.iter_mut().zip(chunk) {
                slot.1.clone_from(&rows[i].1);
                let group = &groups[group_of[i]];
                if config.subset_mean_augmentation && group.len() > 1 && rng.uniform() < 0.5 {
                    // Mean of k rows drawn from the anchor's label group.
                    let k = 2 + rng.index(group.len() - 1);
                    slot.0.clear();
                    slot.0.resize(feat_dim, 0.0);
                    for _ in 0..k {
                        let j = group[rng.index(group.len())];
                        for (acc, v) in slot.0.iter_mut().zip(&rows[j].0) {
                            *acc += v;
                        }
                    }
                    for v in slot.0.iter_mut() {
                        *v /= k as f64;
                    }
                } else {
                    slot.0.clone_from(&rows[i].0);
                }
            }
            let loss = net.train_step(&batch, lr)?;
            epoch_loss += loss * chunk.len() as f64;
            seen += chunk.len();
        }
        loss_curve.push(epoch_loss / seen as f64);
    }
    // The recorded loss is measured on the dataset rows themselves.
    let final_loss = {
        let plain: Vec<(Vec<f64>, Vec<f64>)> = rows.clone();
        net.batch_loss(&plain)?
    };
    loss_curve.push(final_loss);
    Ok(InferenceModel {
        net,
        representation: dataset.representation,
        signed_objectives,
        input_offset: offset,
        input_scale: scale,
        epochs: config.epochs,
        loss_curve,
        final_loss,
    })
}

/// Infer a preference weight from a demonstration feature: one forward pass,
/// negative components clamped to zero (except signed objectives), then
/// renormalized onto the (signed) simplex.
pub fn infer(model: &InferenceModel, feature: &DemoFeature) -> Result<PreferenceWeight> {
    if feature.representation != model.representation {
        return Err(Error::RepresentationMismatch {
            expected: model.representation.label().to_string(),
            got: feature.representation.label().to_string(),
        });
    }
    if feature.values.len() != model.input_offset.len() {
        return Err(Error::DimensionMismatch {
            expected: model.input_offset.len(),
            got: feature.values.len(),
        });
    }
    let x: Vec<f64> = feature
        .values
        .iter()
        .zip(model.input_offset.iter().zip(&model.input_scale))
        .map(|(v, (o, s))| (v - o) / s)
        .collect();
    let mut y = model.net.forward(&x)?;
    for (v, &signed) in y.iter_mut().zip(&model.signed_objectives) {
        if !signed && *v < 0.0 {
            *v = 0.0;
        }
    }
    if y.iter().map(|v| v.abs()).sum::<f64>() == 0.0 {
        // Degenerate all-zero output: fall back to indifference.
        return Ok(PreferenceWeight::uniform(y.len()));
    }
    normalize_weights(&y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demos::DemoMode;

    fn toy_dataset(points: &[(Vec<f64>, Vec<f64>)], repr: Representation) -> DemoDataset {
        DemoDataset {
            features: points
                .iter()
                .map(|(f, _)| DemoFeature {
                    representation: repr,
                    values: f.clone(),
                })
                .collect(),
            labels: points
                .iter()
                .map(|(_, l)| PreferenceWeight::new(l.clone()).unwrap())
                .collect(),
            modes: vec![DemoMode::Optimal; points.len()],
            mix_ratio: 0.0,
            repeats: 1,
            representation: repr,
        }
    }

    #[test]
    fn memorizes_a_single_repeated_pair() {
        let points: Vec<(Vec<f64>, Vec<f64>)> =
            std::iter::repeat((vec![-5.0, 82.0], vec![0.3, 0.7])).take(32).collect();
        let ds = toy_dataset(&points, Representation::Reward);
        let cfg = DwpiTrainConfig {
            hidden: vec![16],
            epochs: 800,
            learning_rate: 0.01,
            learning_rate_end: 0.01,
            batch_size: 8,
            subset_mean_augmentation: false,
        };
        let mut rng = RngStream::new(3);
        let model = train_dwpi(&ds, &cfg, vec![false, false], &mut rng).unwrap();
        assert!(model.final_loss < 1e-6, "loss {}", model.final_loss);
    }

    #[test]
    fn fits_linearly_realizable_labels() {
        // Labels are a fixed linear map of the feature: (f, 1 - f).
        let points: Vec<(Vec<f64>, Vec<f64>)> = (0..41)
            .map(|i| {
                let f = i as f64 / 40.0;
                (vec![f], vec![f, 1.0 - f])
            })
            .collect();
        let ds = toy_dataset(&points, Representation::Reward);
        let cfg = DwpiTrainConfig {
            hidden: vec![32],
            epochs: 4000,
            learning_rate: 0.01,
            learning_rate_end: 0.01,
            batch_size: 8,
            subset_mean_augmentation: false,
        };
        let mut rng = RngStream::new(5);
        let model = train_dwpi(&ds, &cfg, vec![false, false], &mut rng).unwrap();
        assert!(model.final_loss < 1e-5, "loss {}", model.final_loss);
    }

    #[test]
    fn identity_regression_on_the_2_simplex() {
        let points: Vec<(Vec<f64>, Vec<f64>)> = (0..=20)
            .map(|i| {
                let w = i as f64 / 20.0;
                (vec![w, 1.0 - w], vec![w, 1.0 - w])
            })
            .collect();
        let ds = toy_dataset(&points, Representation::Reward);
        let cfg = DwpiTrainConfig {
            hidden: vec![32, 32],
            epochs: 3000,
            learning_rate: 0.005,
            learning_rate_end: 0.005,
            batch_size: 21,
            subset_mean_augmentation: false,
        };
        let mut rng = RngStream::new(7);
        let model = train_dwpi(&ds, &cfg, vec![false, false], &mut rng).unwrap();
        let probe = DemoFeature {
            representation: Representation::Reward,
            values: vec![0.3, 0.7],
        };
        let w = infer(&model, &probe).unwrap();
        assert!((w.values()[0] - 0.3).abs() < 0.02, "got {w}");
        assert!((w.values()[1] - 0.7).abs() < 0.02);
    }

    #[test]
    fn infer_renormalizes_clamped_output() {
        // A zero network always outputs zeros; inference falls back to the
        // uniform weight rather than dividing by zero.
        let ds = toy_dataset(&[(vec![1.0], vec![0.5, 0.5])], Representation::Reward);
        let cfg = DwpiTrainConfig {
            hidden: vec![4],
            epochs: 1,
            learning_rate: 1e-9,
            learning_rate_end: 1e-9,
            batch_size: 1,
            subset_mean_augmentation: false,
        };
        let mut rng = RngStream::new(11);
        let model = train_dwpi(&ds, &cfg, vec![false, false], &mut rng).unwrap();
        let w = infer(
            &model,
            &DemoFeature {
                representation: Representation::Reward,
                values: vec![1.0],
            },
        )
        .unwrap();
        let s: f64 = w.values().iter().map(|v| v.abs()).sum();
        assert!((s - 1.0).abs() < 1e-9);
    }

    #[test]
    fn representation_mismatch_rejected() {
        let ds = toy_dataset(&[(vec![1.0], vec![0.5, 0.5])], Representation::Reward);
        let cfg = DwpiTrainConfig {
            hidden: vec![4],
            epochs: 1,
            learning_rate: 0.01,
            learning_rate_end: 0.01,
            batch_size: 1,
            subset_mean_augmentation: false,
        };
        let mut rng = RngStream::new(11);
        let model = train_dwpi(&ds, &cfg, vec![false, false], &mut rng).unwrap();
        let probe = DemoFeature {
            representation: Representation::StateFrequency,
            values: vec![1.0],
        };
        assert!(matches!(
            infer(&model, &probe),
            Err(Error::RepresentationMismatch { .. })
        ));
    }

    #[test]
    fn inference_is_pure() {
        let points: Vec<(Vec<f64>, Vec<f64>)> = (0..10)
            .map(|i| {
                let w = i as f64 / 9.0;
                (vec![w * 3.0 - 1.0], vec![w, 1.0 - w])
            })
            .collect();
        let ds = toy_dataset(&points, Representation::Reward);
        let cfg = DwpiTrainConfig {
            hidden: vec![8],
            epochs: 50,
            learning_rate: 0.01,
            learning_rate_end: 0.01,
            batch_size: 4,
            subset_mean_augmentation: false,
        };
        let mut rng = RngStream::new(13);
        let model = train_dwpi(&ds, &cfg, vec![false, false], &mut rng).unwrap();
        let probe = DemoFeature {
            representation: Representation::Reward,
            values: vec![0.4],
        };
        let a = infer(&model, &probe).unwrap();
        let b = infer(&model, &probe).unwrap();
        assert_eq!(a.bits_key(), b.bits_key());
    }

    #[test]
    fn model_round_trips_through_json() {
        let ds = toy_dataset(&[(vec![1.0, 2.0], vec![0.5, 0.5])], Representation::Reward);
        let cfg = DwpiTrainConfig {
            hidden: vec![4],
            epochs: 2,
            learning_rate: 0.01,
            learning_rate_end: 0.01,
            batch_size: 1,
            subset_mean_augmentation: false,
        };
        let mut rng = RngStream::new(17);
        let model = train_dwpi(&ds, &cfg, vec![false, false], &mut rng).unwrap();
        let json = serde_json::to_string(&model).unwrap();
        let back: InferenceModel = serde_json::from_str(&json).unwrap();
        assert_eq!(model.net, back.net);
        assert_eq!(model.input_offset, back.input_offset);
    }
}
