use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::features::{LabeledWord, WordFeatures, FEATURE_COUNT};
use crate::error::{Error, Result};
use crate::numcore::{sigmoid, DenseLayer, Matrix};
use crate::rng::{derive_seed, seeded, stream};

const MANIFEST: &str = "confidence.json";
const FORMAT: &str = "transkit-confidence/1";
const MIN_STD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub hidden_dim: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            hidden_dim: 16,
            lr: 0.1,
            epochs: 200,
            batch_size: 32,
            seed: 0,
        }
    }
}

/// Two-layer feed-forward word classifier over z-normalized features.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceModel {
    pub hidden: DenseLayer,
    pub output: DenseLayer,
    pub mean: [f64; FEATURE_COUNT],
    pub std: [f64; FEATURE_COUNT],
}

/// Parameter gradients, shaped like the model's two layers.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierGradient {
    pub hidden: DenseLayer,
    pub output: DenseLayer,
}

impl ConfidenceModel {
    pub fn new(hidden_dim: usize, seed: u64) -> Result<Self> {
        if hidden_dim == 0 {
            return Err(Error::Config("classifier hidden dimension must be positive".into()));
        }
        let mut rng = stream(seed, "classifier-init", 0);
        Ok(ConfidenceModel {
            hidden: DenseLayer::random(hidden_dim, FEATURE_COUNT, &mut rng),
            output: DenseLayer::random(1, hidden_dim, &mut rng),
            mean: [0.0; FEATURE_COUNT],
            std: [1.0; FEATURE_COUNT],
        })
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden.out_dim()
    }

    /// Fits per-feature mean and standard deviation; constant features keep
    /// a unit scale.
    pub fn fit_normalization(&mut self, data: &[LabeledWord]) {
        let n = data.len().max(1) as f64;
        let rows: Vec<[f64; FEATURE_COUNT]> = data.iter().map(|w| w.features.to_array()).collect();
        for k in 0..FEATURE_COUNT {
            let mean = rows.iter().map(|r| r[k]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>() / n;
            self.mean[k] = mean;
            self.std[k] = if var.sqrt() > MIN_STD { var.sqrt() } else { 1.0 };
        }
    }

    fn normalize(&self, f: &WordFeatures) -> Result<[f64; FEATURE_COUNT]> {
        let mut x = f.to_array();
        if let Some(k) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("feature {k} is not finite ({})", x[k])));
        }
        for k in 0..FEATURE_COUNT {
            x[k] = (x[k] - self.mean[k]) / self.std[k];
        }
        Ok(x)
    }

    /// Hidden activations and output logit.
    fn forward(&self, z: &[f64]) -> (Vec<f64>, f64) {
        let h: Vec<f64> = self.hidden.forward_unchecked(z).into_iter().map(f64::tanh).collect();
        let a = self.output.forward_unchecked(&h)[0];
        (h, a)
    }

    pub fn predict(&self, features: &WordFeatures) -> Result<f64> {
        let z = self.normalize(features)?;
        Ok(sigmoid(self.forward(&z).1))
    }

    /// Mean binary cross-entropy over `batch`.
    pub fn loss(&self, batch: &[LabeledWord]) -> Result<f64> {
        Ok(self.loss_and_gradient(batch)?.0)
    }

    /// Mean binary cross-entropy and its gradient.
    pub fn loss_and_gradient(&self, batch: &[LabeledWord]) -> Result<(f64, ClassifierGradient)> {
        if batch.is_empty() {
            return Err(Error::Training("empty batch".into()));
        }
        let mut grad = ClassifierGradient {
            hidden: self.hidden.zeros_like(),
            output: self.output.zeros_like(),
        };
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        for w in batch {
            if w.label > 1 {
                return Err(Error::Data(format!("label {} for '{}' is not binary", w.label, w.word)));
            }
            let z = self.normalize(&w.features)?;
            let (h, a) = self.forward(&z);
            let c = f64::from(w.label);
            // softplus(a) - c·a == -[c ln σ(a) + (1-c) ln(1-σ(a))]
            loss += a.max(0.0) + (-a.abs()).exp().ln_1p() - c * a;
            let da = [(sigmoid(a) - c) * scale];
            let mut dh = vec![0.0; h.len()];
            self.output.backward(&h, &da, &mut grad.output, Some(&mut dh));
            for (g, hv) in dh.iter_mut().zip(&h) {
                *g *= 1.0 - hv * hv;
            }
            self.hidden.backward(&z, &dh, &mut grad.hidden, None);
        }
        Ok((loss * scale, grad))
    }

    /// Flat parameter vector: hidden weight, hidden bias, output weight, output bias.
    pub fn params(&self) -> Vec<f64> {
        self.hidden
            .tensors()
            .into_iter()
            .chain(self.output.tensors())
            .flat_map(|t| t.iter().copied())
            .collect()
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        let n: usize = self.params().len();
        if params.len() != n {
            return Err(Error::Shape(format!("{} parameters for a model with {n}", params.len())));
        }
        let mut rest = params;
        for t in self.hidden.tensors_mut().into_iter().chain(self.output.tensors_mut()) {
            let (head, tail) = rest.split_at(t.len());
            t.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    fn apply(&mut self, grad: &ClassifierGradient, lr: f64) {
        let params = self.hidden.tensors_mut().into_iter().chain(self.output.tensors_mut());
        let grads = grad.hidden.tensors().into_iter().chain(grad.output.tensors());
        for (p, g) in params.zip(grads) {
            for (v, d) in p.iter_mut().zip(g) {
                *v -= lr * d;
            }
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.hidden.weight.save(&dir.join("hidden.weight.tdm"))?;
        Matrix::from_vec(1, self.hidden.bias.len(), self.hidden.bias.clone())?.save(&dir.join("hidden.bias.tdm"))?;
        self.output.weight.save(&dir.join("output.weight.tdm"))?;
        Matrix::from_vec(1, 1, self.output.bias.clone())?.save(&dir.join("output.bias.tdm"))?;
        let manifest = Manifest {
            format: FORMAT.into(),
            input_dim: FEATURE_COUNT,
            hidden_dim: self.hidden_dim(),
            mean: self.mean.to_vec(),
            std: self.std.to_vec(),
        };
        let path = dir.join(MANIFEST);
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::json(&path, e))?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?;
        if m.format != FORMAT || m.input_dim != FEATURE_COUNT {
            return Err(Error::Data(format!("{}: not a confidence model", path.display())));
        }
        let stats = |v: &[f64], what: &str| -> Result<[f64; FEATURE_COUNT]> {
            v.try_into()
                .map_err(|_| Error::Data(format!("{what} has {} entries, expected {FEATURE_COUNT}", v.len())))
        };
        let load = |name: &str, rows: usize, cols: usize| -> Result<Matrix> {
            let mat = Matrix::load(&dir.join(name))?;
            if mat.rows() != rows || mat.cols() != cols {
                return Err(Error::Data(format!("{name}: expected {rows}x{cols}")));
            }
            Ok(mat)
        };
        let h = m.hidden_dim;
        let model = ConfidenceModel {
            hidden: DenseLayer::new(
                load("hidden.weight.tdm", h, FEATURE_COUNT)?,
                load("hidden.bias.tdm", 1, h)?.data().to_vec(),
            )?,
            output: DenseLayer::new(load("output.weight.tdm", 1, h)?, load("output.bias.tdm", 1, 1)?.data().to_vec())?,
            mean: stats(&m.mean, "mean")?,
            std: stats(&m.std, "std")?,
        };
        if model.std.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Data("normalization std must be positive".into()));
        }
        Ok(model)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    input_dim: usize,
    hidden_dim: usize,
    mean: Vec<f64>,
    std: Vec<f64>,
}

/// Mini-batch SGD on mean BCE. Normalization statistics come from `data`.
pub fn train_classifier(data: &[LabeledWord], config: &ClassifierConfig) -> Result<ConfidenceModel> {
    let positives = data.iter().filter(|w| w.label == 1).count();
    if positives == 0 || positives == data.len() {
        return Err(Error::Training(format!(
            "confidence training needs both classes, got {positives} correct of {} words",
            data.len()
        )));
    }
    if config.batch_size == 0 || !(config.lr > 0.0) {
        return Err(Error::Config("batch size and learning rate must be positive".into()));
    }
    let mut model = ConfidenceModel::new(config.hidden_dim, config.seed)?;
    model.fit_normalization(data);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = seeded(derive_seed(config.seed, "classifier-shuffle", 0));
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<LabeledWord> = chunk.iter().map(|&i| data[i].clone()).collect();
            let (_, grad) = model.loss_and_gradient(&batch)?;
            model.apply(&grad, config.lr);
        }
    }
    Ok(model)
}

pub fn predict_confidence(model: &ConfidenceModel, features: &WordFeatures) -> Result<f64> {
    model.predict(features)
}
