//! Model checkpoints: one matrix file per tensor plus a JSON manifest.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{TransducerConfig, TransducerModel};
use super::vocab::Vocabulary;
use crate::error::{Error, Result};
use crate::numcore::Matrix;
use crate::rng::seeded;

pub const MANIFEST_FILE: &str = "manifest.json";
const FORMAT: &str = "transkit-transducer/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub file: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format: String,
    pub config: TransducerConfig,
    /// Encoder layers shared with the phone branch.
    pub shared_layers: usize,
    pub vocabulary: Vec<String>,
    pub blank_id: usize,
    pub phones: Vec<String>,
    pub tensors: Vec<TensorEntry>,
}

fn config_of(model: &TransducerModel) -> TransducerConfig {
    let branch = model.phone_branch.as_ref();
    TransducerConfig {
        input_dim: model.input_dim(),
        encoder_layers: model.encoder.len(),
        shared_layers: model.shared_layers,
        encoder_hidden: model.encoder_dim(),
        prediction_layers: model.prediction.len(),
        prediction_hidden: model.prediction_dim(),
        embed_dim: model.embedding.cols(),
        joint_dim: model.joint.out_dim(),
        branch_layers: branch.map_or(0, |b| b.layers.len()),
        branch_hidden: branch
            .and_then(|b| b.layers.last())
            .map_or(model.encoder_dim(), |l| l.hidden_dim()),
    }
}

/// Writes every tensor and the manifest into `dir`, creating it if needed.
pub fn save_checkpoint(model: &TransducerModel, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tensors = Vec::new();
    for view in model.tensors() {
        let file = format!("{}.tdm", view.name);
        let m = Matrix::from_vec(view.rows, view.cols, view.data.to_vec())?;
        m.save(&dir.join(&file))?;
        tensors.push(TensorEntry {
            name: view.name,
            file,
            rows: view.rows,
            cols: view.cols,
        });
    }
    let manifest = CheckpointManifest {
        format: FORMAT.into(),
        config: config_of(model),
        shared_layers: model.shared_layers,
        vocabulary: model.vocab.tokens().to_vec(),
        blank_id: model.blank(),
        phones: model.phones.clone(),
        tensors,
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::json(&path, e))?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

pub fn load_checkpoint(dir: &Path) -> Result<TransducerModel> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: CheckpointManifest = serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?;
    if manifest.format != FORMAT {
        return Err(Error::Data(format!("unknown checkpoint format '{}'", manifest.format)));
    }
    let vocab = Vocabulary::from_tokens(manifest.vocabulary.clone(), manifest.blank_id)?;
    let mut config = manifest.config.clone();
    config.shared_layers = manifest.shared_layers;
    let mut model = TransducerModel::new(&config, vocab, manifest.phones.clone(), &mut seeded(0))?;
    let names: Vec<(String, usize, usize)> = model.tensors().into_iter().map(|v| (v.name, v.rows, v.cols)).collect();
    if names.len() != manifest.tensors.len() {
        return Err(Error::Data(format!(
            "checkpoint lists {} tensors, topology needs {}",
            manifest.tensors.len(),
            names.len()
        )));
    }
    for (((name, rows, cols), entry), (_, dst)) in names.iter().zip(&manifest.tensors).zip(model.tensors_mut()) {
        if *name != entry.name || *rows != entry.rows || *cols != entry.cols {
            return Err(Error::Data(format!(
                "checkpoint tensor '{}' ({}x{}) does not match expected '{name}' ({rows}x{cols})",
                entry.name, entry.rows, entry.cols
            )));
        }
        let m = Matrix::load(&dir.join(&entry.file))?;
        if m.rows() != *rows || m.cols() != *cols {
            return Err(Error::Data(format!("tensor file {} has wrong shape", entry.file)));
        }
        dst.copy_from_slice(m.data());
    }
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let vocab = Vocabulary::new(["▁a", "b"]).unwrap();
        let cfg = TransducerConfig {
            input_dim: 2,
            encoder_layers: 2,
            encoder_hidden: 3,
            prediction_hidden: 3,
            embed_dim: 2,
            joint_dim: 3,
            branch_hidden: 2,
            ..TransducerConfig::default()
        };
        for phones in [vec![], vec!["x".to_string(), "y".to_string()]] {
            let model = TransducerModel::new(&cfg, vocab.clone(), phones, &mut seeded(3)).unwrap();
            let dir = tempfile::tempdir().unwrap();
            save_checkpoint(&model, dir.path()).unwrap();
            assert_eq!(load_checkpoint(dir.path()).unwrap(), model);
        }
    }

    #[test]
    fn missing_tensor_is_an_error() {
        let vocab = Vocabulary::new(["▁a"]).unwrap();
        let cfg = TransducerConfig {
            input_dim: 2,
            encoder_hidden: 2,
            prediction_hidden: 2,
            embed_dim: 2,
            joint_dim: 2,
            ..TransducerConfig::default()
        };
        let model = TransducerModel::new(&cfg, vocab, vec![], &mut seeded(3)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(&model, dir.path()).unwrap();
        fs::remove_file(dir.path().join("joint.weight.tdm")).unwrap();
        assert!(load_checkpoint(dir.path()).is_err());
    }
}
