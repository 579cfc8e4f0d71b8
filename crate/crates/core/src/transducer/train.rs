//! Gradient computation and SGD training for the transducer and its phone
//! branch, including the lower-layer-frozen adaptation procedure.

use rand::seq::SliceRandom;

use super::loss::rnnt_grad;
use super::model::{ParamGroup, TransducerModel};
use super::lattice::PosteriorLattice;
use crate::error::{contract_err, Error, Result};
use crate::numcore::{log_softmax_unchecked, softmax_unchecked, sgd_step_in_place, PROB_EPS};
use crate::rng::Rng;

/// Which objective a step optimizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrainMode {
    RnntOnly,
    /// `α·L_ce + (1-α)·L_rnnt`.
    Mtl { alpha: f64 },
    /// Phone branch only; every transducer parameter stays fixed.
    CeBranchOnly,
}

impl TrainMode {
    fn weights(self) -> Result<(f64, f64)> {
        match self {
            TrainMode::RnntOnly => Ok((1.0, 0.0)),
            TrainMode::Mtl { alpha } => {
                check_alpha(alpha)?;
                Ok((1.0 - alpha, alpha))
            }
            TrainMode::CeBranchOnly => Ok((0.0, 1.0)),
        }
    }

    fn needs_phones(self) -> bool {
        !matches!(self, TrainMode::RnntOnly)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(contract_err!("MTL weight must lie in [0, 1], got {alpha}"));
    }
    Ok(())
}

/// `α·L_ce + (1-α)·L_rnnt`.
pub fn mtl_loss(rnnt: f64, ce: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(alpha * ce + (1.0 - alpha) * rnnt)
}

/// One utterance: frame features, word-piece targets and, for the phone
/// branch, one phone id per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainExample {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<usize>,
    pub phone_targets: Option<Vec<usize>>,
}

/// Parameters excluded from updates.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Freeze {
    /// Bottom encoder layers held fixed.
    pub lower_encoder: usize,
    pub transducer: bool,
    pub branch: bool,
}

impl Freeze {
    pub fn none() -> Self {
        Freeze::default()
    }

    pub fn lower(count: usize) -> Self {
        Freeze {
            lower_encoder: count,
            ..Freeze::default()
        }
    }

    pub fn is_frozen(&self, group: ParamGroup) -> bool {
        match group {
            ParamGroup::Encoder(i) if i < self.lower_encoder => true,
            ParamGroup::Branch(_) | ParamGroup::BranchOutput => self.branch,
            _ => self.transducer,
        }
    }
}

/// Batch-mean losses.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Losses {
    pub rnnt: f64,
    pub ce: f64,
    pub total: f64,
}

/// Settings for a single SGD update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    pub mode: TrainMode,
    pub lr: f64,
    pub freeze: Freeze,
    /// Rescale the update when the global gradient norm exceeds this.
    pub clip_norm: Option<f64>,
}

fn check_example(model: &TransducerModel, ex: &TrainExample, mode: TrainMode) -> Result<()> {
    if mode.needs_phones() {
        if model.phone_branch.is_none() {
            return Err(Error::Config("phone-branch training needs a model with a branch".into()));
        }
        match &ex.phone_targets {
            None => return Err(Error::Data("phone-branch training needs frame-level phone targets".into())),
            Some(p) if p.len() != ex.features.len() => {
                return Err(Error::Data(format!(
                    "{} phone targets for {} frames",
                    p.len(),
                    ex.features.len()
                )))
            }
            Some(p) if p.iter().any(|&q| q >= model.phones.len()) => {
                return Err(Error::Data("phone target outside the phone set".into()))
            }
            _ => {}
        }
    }
    Ok(())
}

/// Transducer loss of one utterance plus its lattice-level intermediates.
struct JointPass {
    lattice: PosteriorLattice,
    h_pre_inputs: Vec<Vec<f64>>,
    pred_layers: Vec<Vec<Vec<f64>>>,
    z: Vec<Vec<f64>>,
}

fn joint_pass(model: &TransducerModel, h_enc: &[Vec<f64>], targets: &[usize]) -> JointPass {
    let (inputs, pred_layers) = model.predict_all(targets);
    let h_pre = pred_layers.last().expect("prediction network has layers");
    let enc_proj = model.project_encoder(h_enc);
    let pre_proj: Vec<Vec<f64>> = h_pre.iter().map(|h| model.project_prediction(h)).collect();
    let k = model.vocab.len();
    let mut log_probs = Vec::with_capacity(h_enc.len() * h_pre.len() * k);
    let mut z = Vec::with_capacity(h_enc.len() * h_pre.len());
    for e in &enc_proj {
        for p in &pre_proj {
            let (zc, logits) = model.joint_from_projections(e, p);
            log_probs.extend(log_softmax_unchecked(&logits));
            z.push(zc);
        }
    }
    JointPass {
        lattice: PosteriorLattice::from_log_probs_unchecked(h_enc.len(), targets.len(), k, log_probs),
        h_pre_inputs: inputs,
        pred_layers,
        z,
    }
}

/// Accumulates `w_rnnt·∇L_rnnt + w_ce·∇L_ce` of one utterance into `grads`.
fn accumulate(
    model: &TransducerModel,
    ex: &TrainExample,
    w_rnnt: f64,
    w_ce: f64,
    freeze: &Freeze,
    grads: &mut TransducerModel,
) -> Result<(f64, f64)> {
    let acts = model.encode_all(&ex.features)?;
    let nt = ex.features.len();
    let n_enc = model.encoder.len();
    let mut g_enc: Vec<Vec<Vec<f64>>> = model
        .encoder
        .iter()
        .map(|l| vec![vec![0.0; l.hidden_dim()]; nt])
        .collect();

    let mut rnnt = 0.0;
    if w_rnnt > 0.0 {
        let pass = joint_pass(model, acts.top(), &ex.targets);
        let blank = model.blank();
        let g = rnnt_grad(&pass.lattice, &ex.targets, blank)?;
        if !g.loss.is_finite() {
            return Err(Error::Training(format!(
                "no alignment of {} labels into {nt} frames",
                ex.targets.len()
            )));
        }
        rnnt = g.loss;
        let nu = ex.targets.len() + 1;
        let k = model.vocab.len();
        let he = model.encoder_dim();
        let h_pre = pass.pred_layers.last().expect("prediction network has layers");
        let mut g_pre = vec![vec![0.0; model.prediction_dim()]; nu];
        let mut gz = vec![0.0; model.joint.out_dim()];
        let mut gx = vec![0.0; model.joint.in_dim()];
        let mut x = vec![0.0; model.joint.in_dim()];
        for t in 0..nt {
            for u in 0..nu {
                let cell = t * nu + u;
                let gl: Vec<f64> = g.grad[cell * k..(cell + 1) * k].iter().map(|v| v * w_rnnt).collect();
                let z = &pass.z[cell];
                gz.iter_mut().for_each(|v| *v = 0.0);
                model.output.backward(z, &gl, &mut grads.output, Some(&mut gz));
                for (gv, zv) in gz.iter_mut().zip(z) {
                    *gv *= 1.0 - zv * zv;
                }
                x[..he].copy_from_slice(&acts.top()[t]);
                x[he..].copy_from_slice(&h_pre[u]);
                gx.iter_mut().for_each(|v| *v = 0.0);
                model.joint.backward(&x, &gz, &mut grads.joint, Some(&mut gx));
                for (a, b) in g_enc[n_enc - 1][t].iter_mut().zip(&gx[..he]) {
                    *a += b;
                }
                for (a, b) in g_pre[u].iter_mut().zip(&gx[he..]) {
                    *a += b;
                }
            }
        }
        // Prediction network, top layer down to the embedding.
        let mut upstream = g_pre;
        for l in (0..model.prediction.len()).rev() {
            let layer = &model.prediction[l];
            let input = if l == 0 {
                &pass.h_pre_inputs
            } else {
                &pass.pred_layers[l - 1]
            };
            let h0 = vec![0.0; layer.hidden_dim()];
            upstream = layer.backward(input, &h0, &pass.pred_layers[l], &upstream, &mut grads.prediction[l], true);
        }
        let history = std::iter::once(blank).chain(ex.targets.iter().copied());
        for (tok, g_row) in history.zip(&upstream) {
            for (e, gv) in grads.embedding.row_mut(tok).iter_mut().zip(g_row) {
                *e += gv;
            }
        }
    }

    let mut ce = 0.0;
    if w_ce > 0.0 {
        let phones = ex.phone_targets.as_ref().expect("checked by caller");
        let lower = acts.lower();
        let (branch_layers, logits) = model.branch_all(lower)?;
        let branch = model.phone_branch.as_ref().expect("checked by caller");
        let gbranch = grads.phone_branch.as_mut().expect("grads mirror model");
        let top: &[Vec<f64>] = branch_layers.last().map_or(lower, |v| v.as_slice());
        let mut g_top = vec![vec![0.0; branch.output.in_dim()]; nt];
        for t in 0..nt {
            let mut p = softmax_unchecked(&logits[t]);
            ce -= p[phones[t]].max(PROB_EPS).ln();
            p[phones[t]] -= 1.0;
            p.iter_mut().for_each(|v| *v *= w_ce);
            branch.output.backward(&top[t], &p, &mut gbranch.output, Some(&mut g_top[t]));
        }
        let mut upstream = g_top;
        for l in (0..branch.layers.len()).rev() {
            let layer = &branch.layers[l];
            let input = if l == 0 { lower } else { &branch_layers[l - 1] };
            let h0 = vec![0.0; layer.hidden_dim()];
            upstream = layer.backward(input, &h0, &branch_layers[l], &upstream, &mut gbranch.layers[l], true);
        }
        let shared = model.shared_layers - 1;
        for (a, b) in g_enc[shared].iter_mut().zip(&upstream) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    // Encoder: stop once every remaining layer is frozen.
    let lowest_trainable = if freeze.transducer { n_enc } else { freeze.lower_encoder.min(n_enc) };
    for l in (lowest_trainable..n_enc).rev() {
        let layer = &model.encoder[l];
        let input = if l == 0 { &ex.features } else { &acts.layers[l - 1] };
        let h0 = vec![0.0; layer.hidden_dim()];
        let want_inputs = l > lowest_trainable;
        let grad_out = std::mem::take(&mut g_enc[l]);
        let g_in = layer.backward(input, &h0, &acts.layers[l], &grad_out, &mut grads.encoder[l], want_inputs);
        if want_inputs {
            for (a, b) in g_enc[l - 1].iter_mut().zip(&g_in) {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
            }
        }
    }
    Ok((rnnt, ce))
}

/// Batch-mean losses and their gradient with respect to every parameter not
/// excluded by `freeze` (frozen entries of the result are meaningless).
pub fn loss_and_gradient(
    model: &TransducerModel,
    batch: &[TrainExample],
    mode: TrainMode,
    freeze: &Freeze,
) -> Result<(Losses, TransducerModel)> {
    if batch.is_empty() {
        return Err(contract_err!("empty training batch"));
    }
    let (w_rnnt, w_ce) = mode.weights()?;
    let mut freeze = *freeze;
    if mode == TrainMode::CeBranchOnly {
        freeze.transducer = true;
        freeze.lower_encoder = model.encoder.len();
    }
    let mut grads = model.zeros_like();
    let mut losses = Losses::default();
    let scale = 1.0 / batch.len() as f64;
    for ex in batch {
        check_example(model, ex, mode)?;
        let (r, c) = accumulate(model, ex, w_rnnt * scale, w_ce * scale, &freeze, &mut grads)?;
        losses.rnnt += r * scale;
        losses.ce += c * scale;
    }
    losses.total = w_rnnt * losses.rnnt + w_ce * losses.ce;
    Ok((losses, grads))
}

/// Batch-mean losses without gradients.
pub fn batch_loss(model: &TransducerModel, batch: &[TrainExample], mode: TrainMode) -> Result<Losses> {
    let (w_rnnt, w_ce) = mode.weights()?;
    let mut losses = Losses::default();
    let scale = 1.0 / batch.len().max(1) as f64;
    for ex in batch {
        check_example(model, ex, mode)?;
        let acts = model.encode_all(&ex.features)?;
        if w_rnnt > 0.0 {
            let pass = joint_pass(model, acts.top(), &ex.targets);
            losses.rnnt += super::loss::rnnt_loss(&pass.lattice, &ex.targets, model.blank())? * scale;
        }
        if w_ce > 0.0 {
            let phones = ex.phone_targets.as_ref().expect("checked above");
            let (_, logits) = model.branch_all(acts.lower())?;
            for (l, &q) in logits.iter().zip(phones) {
                losses.ce -= softmax_unchecked(l)[q].max(PROB_EPS).ln() * scale;
            }
        }
    }
    losses.total = w_rnnt * losses.rnnt + w_ce * losses.ce;
    Ok(losses)
}

/// One SGD update in place; returns the losses before the update.
pub fn train_step(model: &mut TransducerModel, batch: &[TrainExample], config: &StepConfig) -> Result<Losses> {
    let mut freeze = config.freeze;
    if config.mode == TrainMode::CeBranchOnly {
        freeze.transducer = true;
        freeze.lower_encoder = model.encoder.len();
    }
    let (losses, mut grads) = loss_and_gradient(model, batch, config.mode, &freeze)?;
    if let Some(max_norm) = config.clip_norm {
        let sq: f64 = grads
            .tensors_mut()
            .iter()
            .filter(|(g, _)| !freeze.is_frozen(*g))
            .map(|(_, t)| t.iter().map(|v| v * v).sum::<f64>())
            .sum();
        let norm = sq.sqrt();
        if norm > max_norm {
            let s = max_norm / norm;
            for (_, t) in grads.tensors_mut() {
                t.iter_mut().for_each(|v| *v *= s);
            }
        }
    }
    let grad_tensors = grads.tensors_mut();
    for ((group, p), (_, g)) in model.tensors_mut().into_iter().zip(grad_tensors) {
        sgd_step_in_place(p, g, config.lr, freeze.is_frozen(group))?;
    }
    Ok(losses)
}

/// Multi-epoch minibatch training settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub step: StepConfig,
    pub epochs: usize,
    pub batch_size: usize,
}

/// Runs `epochs` passes over `examples` in seeded shuffled order; returns
/// the mean pre-update total loss of each epoch.
pub fn train(model: &mut TransducerModel, examples: &[TrainExample], config: &TrainConfig, rng: &mut Rng) -> Result<Vec<f64>> {
    if config.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(rng);
        let mut sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<TrainExample> = chunk.iter().map(|&i| examples[i].clone()).collect();
            let l = train_step(model, &batch, &config.step)?;
            sum += l.total;
            batches += 1;
        }
        let mean = sum / batches.max(1) as f64;
        log::debug!("epoch {epoch}: loss {mean:.4}");
        history.push(mean);
    }
    Ok(history)
}

/// Adaptation settings: transducer-loss steps on randomly drawn minibatches
/// with the bottom `freeze_lower` encoder layers held fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptConfig {
    pub freeze_lower: usize,
    pub lr: f64,
    pub steps: usize,
    pub batch_size: usize,
    pub clip_norm: Option<f64>,
}

/// Returns an adapted copy of `model`.
pub fn adapt(model: &TransducerModel, examples: &[TrainExample], config: &AdaptConfig, rng: &mut Rng) -> Result<TransducerModel> {
    if config.freeze_lower >= model.encoder.len() {
        return Err(Error::Config(format!(
            "cannot freeze {} of {} encoder layers",
            config.freeze_lower,
            model.encoder.len()
        )));
    }
    if config.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    let mut adapted = model.clone();
    if config.steps == 0 {
        return Ok(adapted);
    }
    if examples.is_empty() {
        return Err(Error::Data("adaptation set is empty".into()));
    }
    let step = StepConfig {
        mode: TrainMode::RnntOnly,
        lr: config.lr,
        freeze: Freeze::lower(config.freeze_lower),
        clip_norm: config.clip_norm,
    };
    let mut order: Vec<usize> = Vec::new();
    let mut cursor = 0;
    for _ in 0..config.steps {
        let mut batch = Vec::with_capacity(config.batch_size);
        while batch.len() < config.batch_size {
            if cursor == order.len() {
                order = (0..examples.len()).collect();
                order.shuffle(rng);
                cursor = 0;
            }
            batch.push(examples[order[cursor]].clone());
            cursor += 1;
        }
        train_step(&mut adapted, &batch, &step)?;
    }
    Ok(adapted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::{finite_diff_gradient, FD_EPS};
    use crate::rng::seeded;
    use crate::transducer::{TransducerConfig, Vocabulary};
    use rand::Rng as _;

    fn config() -> TransducerConfig {
        TransducerConfig {
            input_dim: 3,
            encoder_layers: 3,
            shared_layers: 1,
            encoder_hidden: 4,
            prediction_layers: 2,
            prediction_hidden: 3,
            embed_dim: 2,
            joint_dim: 4,
            branch_layers: 1,
            branch_hidden: 3,
        }
    }

    fn model(seed: u64) -> TransducerModel {
        let vocab = Vocabulary::new(["▁a", "▁b", "c"]).unwrap();
        let phones = vec!["sil".to_string(), "p".to_string(), "q".to_string()];
        TransducerModel::new(&config(), vocab, phones, &mut seeded(seed)).unwrap()
    }

    fn example(rng: &mut Rng, frames: usize, labels: usize) -> TrainExample {
        TrainExample {
            features: (0..frames)
                .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect(),
            targets: (0..labels).map(|_| rng.random_range(1..4)).collect(),
            phone_targets: Some((0..frames).map(|_| rng.random_range(0..3)).collect()),
        }
    }

    fn flat(m: &TransducerModel) -> Vec<f64> {
        m.tensors().iter().flat_map(|t| t.data.iter().copied()).collect()
    }

    fn with_flat(m: &TransducerModel, theta: &[f64]) -> TransducerModel {
        let mut out = m.clone();
        let mut i = 0;
        for (_, t) in out.tensors_mut() {
            let n = t.len();
            t.copy_from_slice(&theta[i..i + n]);
            i += n;
        }
        out
    }

    #[test]
    fn mtl_loss_examples() {
        assert_eq!(mtl_loss(3.0, 2.0, 0.0).unwrap(), 3.0);
        assert_eq!(mtl_loss(3.0, 2.0, 1.0).unwrap(), 2.0);
        assert!((mtl_loss(3.0, 2.0, 0.1).unwrap() - 2.9).abs() < 1e-12);
        assert!(mtl_loss(3.0, 2.0, 1.5).is_err());
    }

    #[test]
    fn gradients_match_finite_differences_in_every_mode() {
        let mut rng = seeded(31);
        let m = model(2);
        let batch = vec![example(&mut rng, 4, 2), example(&mut rng, 3, 1)];
        for mode in [TrainMode::RnntOnly, TrainMode::Mtl { alpha: 0.3 }, TrainMode::CeBranchOnly] {
            let (losses, grads) = loss_and_gradient(&m, &batch, mode, &Freeze::none()).unwrap();
            let direct = batch_loss(&m, &batch, mode).unwrap();
            assert!((losses.total - direct.total).abs() < 1e-12);
            let numeric = finite_diff_gradient(
                |theta| batch_loss(&with_flat(&m, theta), &batch, mode).unwrap().total,
                &flat(&m),
                FD_EPS,
            )
            .unwrap();
            let mut i = 0;
            for view in grads.tensors() {
                let frozen_by_mode = mode == TrainMode::CeBranchOnly && view.group.is_transducer();
                for &a in view.data {
                    let n = numeric[i];
                    i += 1;
                    if frozen_by_mode {
                        continue;
                    }
                    assert!((a - n).abs() <= 1e-7 + 1e-4 * n.abs(), "{} {a} vs {n} ({mode:?})", view.name);
                }
            }
        }
    }

    #[test]
    fn ce_branch_only_leaves_transducer_bit_identical() {
        let mut rng = seeded(4);
        let mut m = model(5);
        let before = m.clone();
        let batch = vec![example(&mut rng, 5, 2)];
        let step = StepConfig {
            mode: TrainMode::CeBranchOnly,
            lr: 0.5,
            freeze: Freeze::none(),
            clip_norm: None,
        };
        for _ in 0..5 {
            train_step(&mut m, &batch, &step).unwrap();
        }
        for (a, b) in before.tensors().iter().zip(m.tensors()) {
            if a.group.is_transducer() {
                assert_eq!(a.data, b.data);
            }
        }
        assert_ne!(before.phone_branch, m.phone_branch);
    }

    #[test]
    fn mtl_with_zero_alpha_matches_rnnt_only_update() {
        let mut rng = seeded(6);
        let batch = vec![example(&mut rng, 4, 2)];
        let mut a = model(7);
        let mut b = a.clone();
        let mk = |mode| StepConfig {
            mode,
            lr: 0.1,
            freeze: Freeze::none(),
            clip_norm: None,
        };
        train_step(&mut a, &batch, &mk(TrainMode::RnntOnly)).unwrap();
        train_step(&mut b, &batch, &mk(TrainMode::Mtl { alpha: 0.0 })).unwrap();
        for (x, y) in a.tensors().iter().zip(b.tensors()) {
            if x.group.is_transducer() {
                assert_eq!(x.data, y.data);
            }
        }
    }

    #[test]
    fn small_step_decreases_loss() {
        let mut rng = seeded(8);
        let batch = vec![example(&mut rng, 5, 2), example(&mut rng, 4, 2)];
        for mode in [TrainMode::RnntOnly, TrainMode::Mtl { alpha: 0.1 }, TrainMode::CeBranchOnly] {
            let mut m = model(9);
            let step = StepConfig {
                mode,
                lr: 1e-3,
                freeze: Freeze::none(),
                clip_norm: None,
            };
            let before = train_step(&mut m, &batch, &step).unwrap().total;
            let after = batch_loss(&m, &batch, mode).unwrap().total;
            assert!(after < before, "{mode:?}: {after} >= {before}");
        }
    }

    #[test]
    fn ce_modes_need_phone_targets() {
        let mut rng = seeded(10);
        let mut ex = example(&mut rng, 3, 1);
        ex.phone_targets = None;
        let m = model(1);
        assert!(matches!(
            loss_and_gradient(&m, &[ex.clone()], TrainMode::CeBranchOnly, &Freeze::none()),
            Err(Error::Data(_))
        ));
        assert!(loss_and_gradient(&m, &[ex], TrainMode::RnntOnly, &Freeze::none()).is_ok());
    }

    #[test]
    fn adapt_freezes_lower_layers() {
        let mut rng = seeded(12);
        let m = model(13);
        let data: Vec<TrainExample> = (0..4).map(|_| example(&mut rng, 4, 2)).collect();
        let cfg = AdaptConfig {
            freeze_lower: 2,
            lr: 0.05,
            steps: 100,
            batch_size: 2,
            clip_norm: Some(5.0),
        };
        let adapted = adapt(&m, &data, &cfg, &mut seeded(1)).unwrap();
        assert_eq!(adapted.encoder[..2], m.encoder[..2]);
        assert_ne!(adapted.encoder[2], m.encoder[2]);
        assert_ne!(adapted.output, m.output);

        let unchanged = adapt(&m, &data, &AdaptConfig { steps: 0, ..cfg }, &mut seeded(1)).unwrap();
        assert_eq!(unchanged, m);
        assert!(matches!(
            adapt(&m, &data, &AdaptConfig { freeze_lower: 3, ..cfg }, &mut seeded(1)),
            Err(Error::Config(_))
        ));
    }
}
