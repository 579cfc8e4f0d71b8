use serde::{Deserialize, Serialize};

use super::lattice::PosteriorLattice;
use super::vocab::Vocabulary;
use crate::error::{contract_err, shape_err, Error, Result};
use crate::numcore::{log_softmax_unchecked, softmax_unchecked, DenseLayer, Matrix, RecurrentLayer};
use crate::rng::Rng;

/// Topology of a toy transducer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransducerConfig {
    pub input_dim: usize,
    pub encoder_layers: usize,
    /// Encoder layers shared with the phone branch, counted from the bottom.
    pub shared_layers: usize,
    pub encoder_hidden: usize,
    pub prediction_layers: usize,
    pub prediction_hidden: usize,
    pub embed_dim: usize,
    pub joint_dim: usize,
    pub branch_layers: usize,
    pub branch_hidden: usize,
}

impl Default for TransducerConfig {
    fn default() -> Self {
        TransducerConfig {
            input_dim: 8,
            encoder_layers: 3,
            shared_layers: 1,
            encoder_hidden: 32,
            prediction_layers: 1,
            prediction_hidden: 32,
            embed_dim: 16,
            joint_dim: 32,
            branch_layers: 1,
            branch_hidden: 32,
        }
    }
}

/// CI-phone prediction head stacked on the shared lower encoder layers.
#[derive(Debug, Clone, PartialEq)]
pub struct PhoneBranch {
    pub layers: Vec<RecurrentLayer>,
    pub output: DenseLayer,
}

/// Frame-wise phone posteriors, one row per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PhonePosteriorgram {
    probs: Matrix,
}

impl PhonePosteriorgram {
    pub fn new(probs: Matrix) -> Result<Self> {
        for t in 0..probs.rows() {
            let row = probs.row(t);
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Numeric(format!(
                    "posteriorgram row {t} is not a distribution (sum {sum})"
                )));
            }
        }
        Ok(PhonePosteriorgram { probs })
    }

    pub fn frames(&self) -> usize {
        self.probs.rows()
    }

    pub fn phones(&self) -> usize {
        self.probs.cols()
    }

    pub fn prob(&self, t: usize, p: usize) -> f64 {
        self.probs.get(t, p)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.probs
    }
}

/// Identifies a block of parameters for freezing and checkpointing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamGroup {
    Encoder(usize),
    Embedding,
    Prediction(usize),
    Joint,
    Output,
    Branch(usize),
    BranchOutput,
}

impl ParamGroup {
    /// True for every parameter the transducer itself uses.
    pub fn is_transducer(self) -> bool {
        !matches!(self, ParamGroup::Branch(_) | ParamGroup::BranchOutput)
    }

    fn prefix(self) -> String {
        match self {
            ParamGroup::Encoder(i) => format!("encoder.{i}"),
            ParamGroup::Embedding => "embedding".into(),
            ParamGroup::Prediction(i) => format!("prediction.{i}"),
            ParamGroup::Joint => "joint".into(),
            ParamGroup::Output => "output".into(),
            ParamGroup::Branch(i) => format!("branch.{i}"),
            ParamGroup::BranchOutput => "branch.output".into(),
        }
    }
}

/// Borrowed view of one named parameter tensor.
#[derive(Debug)]
pub struct TensorView<'a> {
    pub group: ParamGroup,
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: &'a [f64],
}

/// Encoder, prediction network, joint network and optional phone branch.
#[derive(Debug, Clone, PartialEq)]
pub struct TransducerModel {
    pub encoder: Vec<RecurrentLayer>,
    pub shared_layers: usize,
    /// One row per vocabulary id; the blank row doubles as the start symbol.
    pub embedding: Matrix,
    pub prediction: Vec<RecurrentLayer>,
    pub joint: DenseLayer,
    pub output: DenseLayer,
    pub phone_branch: Option<PhoneBranch>,
    pub vocab: Vocabulary,
    pub phones: Vec<String>,
}

/// Per-layer encoder activations.
#[derive(Debug, Clone)]
pub struct EncoderActivations {
    pub layers: Vec<Vec<Vec<f64>>>,
    shared_layers: usize,
}

impl EncoderActivations {
    /// States consumed by the phone branch.
    pub fn lower(&self) -> &[Vec<f64>] {
        &self.layers[self.shared_layers.max(1) - 1]
    }

    pub fn top(&self) -> &[Vec<f64>] {
        self.layers.last().map_or(&[], |v| v.as_slice())
    }
}

/// Hidden state of every prediction layer after consuming some history.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionState {
    hidden: Vec<Vec<f64>>,
}

impl PredictionState {
    pub fn output(&self) -> &[f64] {
        self.hidden.last().map_or(&[], |v| v.as_slice())
    }
}

impl TransducerModel {
    pub fn new(config: &TransducerConfig, vocab: Vocabulary, phones: Vec<String>, rng: &mut Rng) -> Result<Self> {
        if config.encoder_layers == 0 || config.prediction_layers == 0 {
            return Err(Error::Config("encoder and prediction need at least one layer".into()));
        }
        if config.shared_layers == 0 || config.shared_layers > config.encoder_layers {
            return Err(Error::Config(format!(
                "shared layers must be in 1..={}, got {}",
                config.encoder_layers, config.shared_layers
            )));
        }
        let k = vocab.len();
        let mut encoder = Vec::with_capacity(config.encoder_layers);
        for i in 0..config.encoder_layers {
            let input = if i == 0 { config.input_dim } else { config.encoder_hidden };
            encoder.push(RecurrentLayer::random(config.encoder_hidden, input, rng));
        }
        let mut embedding = Matrix::zeros(k, config.embed_dim);
        let scale = 1.0 / (config.embed_dim as f64).sqrt();
        for v in embedding.data_mut() {
            *v = rand::Rng::random_range(rng, -scale..scale);
        }
        let mut prediction = Vec::with_capacity(config.prediction_layers);
        for i in 0..config.prediction_layers {
            let input = if i == 0 { config.embed_dim } else { config.prediction_hidden };
            prediction.push(RecurrentLayer::random(config.prediction_hidden, input, rng));
        }
        let joint = DenseLayer::random(
            config.joint_dim,
            config.encoder_hidden + config.prediction_hidden,
            rng,
        );
        let output = DenseLayer::random(k, config.joint_dim, rng);
        let phone_branch = if phones.is_empty() {
            None
        } else {
            let mut layers = Vec::with_capacity(config.branch_layers);
            for i in 0..config.branch_layers {
                let input = if i == 0 { config.encoder_hidden } else { config.branch_hidden };
                layers.push(RecurrentLayer::random(config.branch_hidden, input, rng));
            }
            let in_dim = if config.branch_layers == 0 {
                config.encoder_hidden
            } else {
                config.branch_hidden
            };
            Some(PhoneBranch {
                layers,
                output: DenseLayer::random(phones.len(), in_dim, rng),
            })
        };
        let model = TransducerModel {
            encoder,
            shared_layers: config.shared_layers,
            embedding,
            prediction,
            joint,
            output,
            phone_branch,
            vocab,
            phones,
        };
        model.validate()?;
        Ok(model)
    }

    /// Checks every shape relation between the blocks.
    pub fn validate(&self) -> Result<()> {
        let k = self.vocab.len();
        if self.encoder.is_empty() || self.prediction.is_empty() {
            return Err(shape_err!("encoder and prediction network must be nonempty"));
        }
        if self.shared_layers == 0 || self.shared_layers > self.encoder.len() {
            return Err(Error::Config(format!(
                "shared layers {} outside 1..={}",
                self.shared_layers,
                self.encoder.len()
            )));
        }
        for w in self.encoder.windows(2) {
            if w[1].input_dim() != w[0].hidden_dim() {
                return Err(shape_err!("encoder layer dims do not chain"));
            }
        }
        for w in self.prediction.windows(2) {
            if w[1].input_dim() != w[0].hidden_dim() {
                return Err(shape_err!("prediction layer dims do not chain"));
            }
        }
        if self.embedding.rows() != k || self.prediction[0].input_dim() != self.embedding.cols() {
            return Err(shape_err!("embedding must be {k} x prediction input dim"));
        }
        if self.joint.in_dim() != self.encoder_dim() + self.prediction_dim() {
            return Err(shape_err!("joint input must be encoder dim + prediction dim"));
        }
        if self.output.in_dim() != self.joint.out_dim() || self.output.out_dim() != k {
            return Err(shape_err!("output layer must map joint dim to {k} tokens"));
        }
        if let Some(b) = &self.phone_branch {
            let mut dim = self.encoder[self.shared_layers - 1].hidden_dim();
            for l in &b.layers {
                if l.input_dim() != dim {
                    return Err(shape_err!("phone branch layer dims do not chain"));
                }
                dim = l.hidden_dim();
            }
            if b.output.in_dim() != dim || b.output.out_dim() != self.phones.len() {
                return Err(shape_err!("phone branch output must map to {} phones", self.phones.len()));
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.encoder[0].input_dim()
    }

    pub fn encoder_dim(&self) -> usize {
        self.encoder.last().map_or(0, RecurrentLayer::hidden_dim)
    }

    pub fn prediction_dim(&self) -> usize {
        self.prediction.last().map_or(0, RecurrentLayer::hidden_dim)
    }

    pub fn blank(&self) -> usize {
        self.vocab.blank()
    }

    fn check_features(&self, features: &[Vec<f64>]) -> Result<()> {
        if let Some((t, f)) = features.iter().enumerate().find(|(_, f)| f.len() != self.input_dim()) {
            return Err(shape_err!(
                "frame {t} has dim {}, model expects {}",
                f.len(),
                self.input_dim()
            ));
        }
        Ok(())
    }

    pub fn encode_all(&self, features: &[Vec<f64>]) -> Result<EncoderActivations> {
        self.check_features(features)?;
        let mut layers: Vec<Vec<Vec<f64>>> = Vec::with_capacity(self.encoder.len());
        for layer in &self.encoder {
            let input = layers.last().map_or(features, |v| v.as_slice());
            let h0 = vec![0.0; layer.hidden_dim()];
            let out = layer.forward_unchecked(input, &h0);
            layers.push(out);
        }
        Ok(EncoderActivations {
            layers,
            shared_layers: self.shared_layers,
        })
    }

    /// Returns `(lower states, final encoder states)`.
    pub fn encode(&self, features: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let acts = self.encode_all(features)?;
        Ok((acts.lower().to_vec(), acts.top().to_vec()))
    }

    fn check_history(&self, history: &[usize]) -> Result<()> {
        if let Some(&k) = history
            .iter()
            .find(|&&k| k == self.blank() || k >= self.vocab.len())
        {
            return Err(contract_err!("history token {k} is blank or out of range"));
        }
        Ok(())
    }

    /// Prediction-network inputs: the start symbol followed by the history.
    pub(crate) fn prediction_inputs(&self, history: &[usize]) -> Vec<Vec<f64>> {
        std::iter::once(self.blank())
            .chain(history.iter().copied())
            .map(|k| self.embedding.row(k).to_vec())
            .collect()
    }

    /// Per-layer prediction activations for a full history.
    pub(crate) fn predict_all(&self, history: &[usize]) -> (Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>) {
        let inputs = self.prediction_inputs(history);
        let mut layers: Vec<Vec<Vec<f64>>> = Vec::with_capacity(self.prediction.len());
        for layer in &self.prediction {
            let input = layers.last().map_or(inputs.as_slice(), |v| v.as_slice());
            let h0 = vec![0.0; layer.hidden_dim()];
            layers.push(layer.forward_unchecked(input, &h0));
        }
        (inputs, layers)
    }

    /// `h_pre` for `u = 0..=|history|`; index `u` has consumed `u` labels.
    pub fn predict(&self, history: &[usize]) -> Result<Vec<Vec<f64>>> {
        self.check_history(history)?;
        let (_, mut layers) = self.predict_all(history);
        Ok(layers.pop().unwrap_or_default())
    }

    pub fn initial_prediction_state(&self) -> PredictionState {
        let zeros: Vec<Vec<f64>> = self
            .prediction
            .iter()
            .map(|l| vec![0.0; l.hidden_dim()])
            .collect();
        self.advance_prediction(&PredictionState { hidden: zeros }, self.blank())
    }

    /// Feeds one token (the blank id stands for the start symbol).
    pub fn advance_prediction(&self, state: &PredictionState, token: usize) -> PredictionState {
        let mut x = self.embedding.row(token).to_vec();
        let mut hidden = Vec::with_capacity(self.prediction.len());
        for (layer, h_prev) in self.prediction.iter().zip(&state.hidden) {
            x = layer.step(&x, h_prev);
            hidden.push(x.clone());
        }
        PredictionState { hidden }
    }

    /// `W_enc·h_enc + b` for every frame: the encoder half of the joint layer.
    pub(crate) fn project_encoder(&self, h_enc: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let he = self.encoder_dim();
        h_enc
            .iter()
            .map(|h| {
                let mut a = self.joint.bias.clone();
                for (r, o) in a.iter_mut().enumerate() {
                    *o += crate::numcore::dot(&self.joint.weight.row(r)[..he], h);
                }
                a
            })
            .collect()
    }

    /// `W_pre·h_pre`: the prediction half of the joint layer.
    pub(crate) fn project_prediction(&self, h_pre: &[f64]) -> Vec<f64> {
        let he = self.encoder_dim();
        (0..self.joint.out_dim())
            .map(|r| crate::numcore::dot(&self.joint.weight.row(r)[he..], h_pre))
            .collect()
    }

    /// Joint activation `z = tanh(enc part + pred part)` and output logits.
    pub(crate) fn joint_from_projections(&self, enc: &[f64], pre: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let z: Vec<f64> = enc.iter().zip(pre).map(|(a, b)| (a + b).tanh()).collect();
        let logits = self.output.forward_unchecked(&z);
        (z, logits)
    }

    pub(crate) fn log_probs_from_projections(&self, enc: &[f64], pre: &[f64]) -> Vec<f64> {
        let (_, logits) = self.joint_from_projections(enc, pre);
        log_softmax_unchecked(&logits)
    }

    /// `P(k | t, u) = softmax(W_y·tanh(W_j·[h_enc_t; h_pre_u] + b_j) + b_y)`.
    pub fn joint_posteriors(&self, h_enc: &[Vec<f64>], h_pre: &[Vec<f64>]) -> Result<PosteriorLattice> {
        if h_enc.is_empty() || h_pre.is_empty() {
            return Err(contract_err!("joint needs at least one encoder and one prediction state"));
        }
        if h_enc.iter().any(|h| h.len() != self.encoder_dim())
            || h_pre.iter().any(|h| h.len() != self.prediction_dim())
        {
            return Err(shape_err!(
                "joint expects encoder dim {} and prediction dim {}",
                self.encoder_dim(),
                self.prediction_dim()
            ));
        }
        let (nt, nu, k) = (h_enc.len(), h_pre.len(), self.vocab.len());
        let enc = self.project_encoder(h_enc);
        let pre: Vec<Vec<f64>> = h_pre.iter().map(|h| self.project_prediction(h)).collect();
        let mut log_probs = Vec::with_capacity(nt * nu * k);
        for e in &enc {
            for p in &pre {
                log_probs.extend(self.log_probs_from_projections(e, p));
            }
        }
        Ok(PosteriorLattice::from_log_probs_unchecked(nt, nu - 1, k, log_probs))
    }

    /// Lattice for a feature sequence and a label sequence.
    pub fn lattice(&self, features: &[Vec<f64>], target: &[usize]) -> Result<PosteriorLattice> {
        let acts = self.encode_all(features)?;
        let h_pre = self.predict(target)?;
        self.joint_posteriors(acts.top(), &h_pre)
    }

    /// Phone-branch activations: per-layer outputs and per-frame logits.
    pub(crate) fn branch_all(&self, lower: &[Vec<f64>]) -> Result<(Vec<Vec<Vec<f64>>>, Vec<Vec<f64>>)> {
        let branch = self
            .phone_branch
            .as_ref()
            .ok_or_else(|| Error::Config("model has no phone branch".into()))?;
        let mut layers: Vec<Vec<Vec<f64>>> = Vec::with_capacity(branch.layers.len());
        for layer in &branch.layers {
            let input = layers.last().map_or(lower, |v| v.as_slice());
            let h0 = vec![0.0; layer.hidden_dim()];
            layers.push(layer.forward_unchecked(input, &h0));
        }
        let top = layers.last().map_or(lower, |v| v.as_slice());
        let logits = top.iter().map(|h| branch.output.forward_unchecked(h)).collect();
        Ok((layers, logits))
    }

    /// Frame-wise CI-phone posteriors from the shared lower encoder states.
    pub fn ci_phone_forward(&self, lower: &[Vec<f64>]) -> Result<PhonePosteriorgram> {
        let branch_in = self
            .encoder
            .get(self.shared_layers - 1)
            .map_or(0, RecurrentLayer::hidden_dim);
        if lower.iter().any(|h| h.len() != branch_in) {
            return Err(shape_err!("phone branch expects states of dim {branch_in}"));
        }
        let (_, logits) = self.branch_all(lower)?;
        let rows: Vec<Vec<f64>> = logits.iter().map(|l| softmax_unchecked(l)).collect();
        let probs = if rows.is_empty() {
            Matrix::zeros(0, self.phones.len())
        } else {
            Matrix::from_rows(&rows)?
        };
        Ok(PhonePosteriorgram { probs })
    }

    /// Convenience: encode and run the phone branch.
    pub fn phone_posteriorgram(&self, features: &[Vec<f64>]) -> Result<PhonePosteriorgram> {
        let acts = self.encode_all(features)?;
        self.ci_phone_forward(acts.lower())
    }

    /// Zero-valued model with identical shapes, used to accumulate gradients.
    pub fn zeros_like(&self) -> Self {
        TransducerModel {
            encoder: self.encoder.iter().map(RecurrentLayer::zeros_like).collect(),
            shared_layers: self.shared_layers,
            embedding: Matrix::zeros(self.embedding.rows(), self.embedding.cols()),
            prediction: self.prediction.iter().map(RecurrentLayer::zeros_like).collect(),
            joint: self.joint.zeros_like(),
            output: self.output.zeros_like(),
            phone_branch: self.phone_branch.as_ref().map(|b| PhoneBranch {
                layers: b.layers.iter().map(RecurrentLayer::zeros_like).collect(),
                output: b.output.zeros_like(),
            }),
            vocab: self.vocab.clone(),
            phones: self.phones.clone(),
        }
    }

    /// Every parameter tensor with its group and checkpoint name.
    pub fn tensors(&self) -> Vec<TensorView<'_>> {
        let mut out = Vec::new();
        let rec = recurrent_views;
        for (i, l) in self.encoder.iter().enumerate() {
            rec(ParamGroup::Encoder(i), l, &mut out);
        }
        out.push(view(ParamGroup::Embedding, "embedding".into(), &self.embedding));
        for (i, l) in self.prediction.iter().enumerate() {
            rec(ParamGroup::Prediction(i), l, &mut out);
        }
        out.push(view(ParamGroup::Joint, "joint.weight".into(), &self.joint.weight));
        out.push(bias_view(ParamGroup::Joint, "joint.bias".into(), &self.joint.bias));
        out.push(view(ParamGroup::Output, "output.weight".into(), &self.output.weight));
        out.push(bias_view(ParamGroup::Output, "output.bias".into(), &self.output.bias));
        if let Some(b) = &self.phone_branch {
            for (i, l) in b.layers.iter().enumerate() {
                rec(ParamGroup::Branch(i), l, &mut out);
            }
            out.push(view(ParamGroup::BranchOutput, "branch.output.weight".into(), &b.output.weight));
            out.push(bias_view(ParamGroup::BranchOutput, "branch.output.bias".into(), &b.output.bias));
        }
        out
    }

    /// Mutable tensors in the same order as [`TransducerModel::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<(ParamGroup, &mut [f64])> {
        let mut out: Vec<(ParamGroup, &mut [f64])> = Vec::new();
        for (i, l) in self.encoder.iter_mut().enumerate() {
            out.extend(l.tensors_mut().map(|t| (ParamGroup::Encoder(i), t)));
        }
        out.push((ParamGroup::Embedding, self.embedding.data_mut()));
        for (i, l) in self.prediction.iter_mut().enumerate() {
            out.extend(l.tensors_mut().map(|t| (ParamGroup::Prediction(i), t)));
        }
        out.extend(self.joint.tensors_mut().map(|t| (ParamGroup::Joint, t)));
        out.extend(self.output.tensors_mut().map(|t| (ParamGroup::Output, t)));
        if let Some(b) = &mut self.phone_branch {
            for (i, l) in b.layers.iter_mut().enumerate() {
                out.extend(l.tensors_mut().map(|t| (ParamGroup::Branch(i), t)));
            }
            out.extend(b.output.tensors_mut().map(|t| (ParamGroup::BranchOutput, t)));
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }
}

fn recurrent_views<'a>(group: ParamGroup, l: &'a RecurrentLayer, out: &mut Vec<TensorView<'a>>) {
    let p = group.prefix();
    out.push(view(group, format!("{p}.input_weight"), &l.input_weight));
    out.push(view(group, format!("{p}.recurrent_weight"), &l.recurrent_weight));
    out.push(bias_view(group, format!("{p}.bias"), &l.bias));
}

fn view(group: ParamGroup, name: String, m: &Matrix) -> TensorView<'_> {
    TensorView {
        group,
        name,
        rows: m.rows(),
        cols: m.cols(),
        data: m.data(),
    }
}

fn bias_view(group: ParamGroup, name: String, b: &[f64]) -> TensorView<'_> {
    TensorView {
        group,
        name,
        rows: 1,
        cols: b.len(),
        data: b,
    }
}
