//! Flat `key = value` configuration. Values resolve as defaults, then the
//! config file, then command-line overrides; unknown keys are rejected.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use transkit::confidence::AvgHypReading;
use transkit::splicer::UnresolvedPolicy;
use transkit::transducer::{TrainMode, TransducerConfig};

use crate::corpus::CorpusSpec;

macro_rules! named_enum {
    ($name:ident { $($variant:ident => $text:literal),* $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        pub enum $name {
            $($variant),*
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($text => Ok($name::$variant),)*
                    _ => Err(format!("expected one of: {}", [$($text),*].join(", "))),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self {
                    $($name::$variant => $text),*
                })
            }
        }
    };
}

named_enum!(TrainModeName { Rnnt => "rnnt", Mtl => "mtl", CeBranch => "ce-branch" });
named_enum!(AlignMethod { Phone => "phone", RnntEmit => "rnnt-emit" });
named_enum!(UnresolvedName { Abort => "abort", Skip => "skip" });
named_enum!(AvgHypName { Partial => "partial-hypothesis", LastPiece => "last-piece" });

/// A positive threshold or `none`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionalF64(pub Option<f64>);

impl FromStr for OptionalF64 {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "none" {
            return Ok(OptionalF64(None));
        }
        s.parse::<f64>()
            .map(|v| OptionalF64(Some(v)))
            .map_err(|_| "expected a number or 'none'".to_string())
    }
}

impl fmt::Display for OptionalF64 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{v}"),
            None => f.write_str("none"),
        }
    }
}

macro_rules! config {
    ($($field:ident : $ty:ty = $default:expr => $key:literal,)*) => {
        #[derive(Debug, Clone, PartialEq)]
        pub struct Config {
            $(pub $field: $ty,)*
        }

        impl Default for Config {
            fn default() -> Self {
                Config { $($field: $default,)* }
            }
        }

        impl Config {
            pub const KEYS: &'static [&'static str] = &[$($key),*];

            pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
                match key {
                    $($key => {
                        self.$field = value
                            .parse::<$ty>()
                            .map_err(|e| anyhow::anyhow!("config key '{key}': bad value '{value}': {e}"))?
                    })*
                    _ => bail!("unknown config key '{key}'"),
                }
                Ok(())
            }

            /// Every key with its resolved value, in declaration order.
            pub fn entries(&self) -> Vec<(&'static str, String)> {
                vec![$(($key, self.$field.to_string())),*]
            }
        }
    };
}

config! {
    seed: u64 = 0 => "seed",
    jobs: usize = 1 => "jobs",

    corpus_phones: usize = 8 => "corpus.phones",
    corpus_words: usize = 10 => "corpus.words",
    corpus_noise: f64 = 0.15 => "corpus.noise",
    corpus_min_words: usize = 2 => "corpus.min_words",
    corpus_max_words: usize = 4 => "corpus.max_words",
    corpus_min_phone_frames: usize = 2 => "corpus.min_phone_frames",
    corpus_max_phone_frames: usize = 4 => "corpus.max_phone_frames",
    corpus_pause_prob: f64 = 0.3 => "corpus.pause_prob",
    corpus_domain_bias: f64 = 0.85 => "corpus.domain_bias",
    corpus_source_train: usize = 300 => "corpus.source_train",
    corpus_source_test: usize = 40 => "corpus.source_test",
    corpus_target_texts: usize = 300 => "corpus.target_texts",
    corpus_target_dev: usize = 100 => "corpus.target_dev",
    corpus_target_test: usize = 40 => "corpus.target_test",

    model_encoder_layers: usize = 3 => "model.encoder_layers",
    model_shared_layers: usize = 1 => "model.shared_layers",
    model_encoder_hidden: usize = 24 => "model.encoder_hidden",
    model_prediction_layers: usize = 1 => "model.prediction_layers",
    model_prediction_hidden: usize = 24 => "model.prediction_hidden",
    model_embed_dim: usize = 12 => "model.embed_dim",
    model_joint_dim: usize = 24 => "model.joint_dim",
    model_branch_layers: usize = 1 => "model.branch_layers",
    model_branch_hidden: usize = 16 => "model.branch_hidden",

    train_mode: TrainModeName = TrainModeName::Rnnt => "train.mode",
    train_alpha: f64 = 0.1 => "train.alpha",
    train_lr: f64 = 0.05 => "train.lr",
    train_epochs: usize = 30 => "train.epochs",
    train_batch_size: usize = 8 => "train.batch_size",
    train_clip_norm: OptionalF64 = OptionalF64(Some(5.0)) => "train.clip_norm",

    adapt_freeze_lower: usize = 1 => "adapt.freeze_lower",
    adapt_lr: f64 = 0.02 => "adapt.lr",
    adapt_steps: usize = 300 => "adapt.steps",
    adapt_batch_size: usize = 8 => "adapt.batch_size",
    adapt_clip_norm: OptionalF64 = OptionalF64(Some(5.0)) => "adapt.clip_norm",

    splice_mix_ratio: f64 = 1.0 => "splice.mix_ratio",
    splice_unresolved: UnresolvedName = UnresolvedName::Abort => "splice.unresolved",

    decode_beam: usize = 8 => "decode.beam",
    decode_nbest: usize = 4 => "decode.nbest",
    decode_max_symbols: usize = 3 => "decode.max_symbols",
    decode_entropy_includes_blank: bool = false => "decode.entropy_includes_blank",

    align_method: AlignMethod = AlignMethod::Phone => "align.method",
    align_silence: String = "sil".to_string() => "align.silence",
    align_frame_shift: f64 = transkit::audio::FRAME_SHIFT => "align.frame_shift",

    conf_hidden_dim: usize = 16 => "conf.hidden_dim",
    conf_lr: f64 = 0.1 => "conf.lr",
    conf_epochs: usize = 200 => "conf.epochs",
    conf_batch_size: usize = 32 => "conf.batch_size",
    conf_avg_hyp: AvgHypName = AvgHypName::Partial => "conf.avg_hyp",
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_assignments(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .with_context(|| format!("config line {}: expected 'key = value'", n + 1))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl Config {
    /// Defaults, then `file`, then `overrides` (each `key=value`).
    pub fn resolve(file: Option<&Path>, overrides: &[String]) -> Result<Config> {
        let mut config = Config::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            for (k, v) in parse_assignments(&text).with_context(|| format!("in {}", path.display()))? {
                config.set(&k, &v).with_context(|| format!("in {}", path.display()))?;
            }
        }
        for o in overrides {
            let (k, v) = o.split_once('=').with_context(|| format!("override '{o}': expected key=value"))?;
            config.set(k.trim(), v.trim())?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.corpus_spec().validate()?;
        let positive = [
            ("jobs", self.jobs),
            ("model.encoder_layers", self.model_encoder_layers),
            ("model.encoder_hidden", self.model_encoder_hidden),
            ("model.prediction_layers", self.model_prediction_layers),
            ("model.prediction_hidden", self.model_prediction_hidden),
            ("model.embed_dim", self.model_embed_dim),
            ("model.joint_dim", self.model_joint_dim),
            ("model.branch_hidden", self.model_branch_hidden),
            ("train.batch_size", self.train_batch_size),
            ("adapt.batch_size", self.adapt_batch_size),
            ("decode.beam", self.decode_beam),
            ("decode.nbest", self.decode_nbest),
            ("decode.max_symbols", self.decode_max_symbols),
            ("conf.hidden_dim", self.conf_hidden_dim),
            ("conf.batch_size", self.conf_batch_size),
        ];
        for (k, v) in positive {
            if v == 0 {
                bail!("config key '{k}' must be positive");
            }
        }
        if self.model_shared_layers == 0 || self.model_shared_layers > self.model_encoder_layers {
            bail!("model.shared_layers must be in 1..=model.encoder_layers");
        }
        if self.adapt_freeze_lower >= self.model_encoder_layers {
            bail!("adapt.freeze_lower must be below model.encoder_layers");
        }
        if self.decode_nbest > self.decode_beam {
            bail!("decode.nbest must not exceed decode.beam");
        }
        if !(0.0..=1.0).contains(&self.train_alpha) {
            bail!("train.alpha must be in [0, 1]");
        }
        for (k, v) in [
            ("train.lr", self.train_lr),
            ("adapt.lr", self.adapt_lr),
            ("conf.lr", self.conf_lr),
            ("align.frame_shift", self.align_frame_shift),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                bail!("config key '{k}' must be a positive number");
            }
        }
        for (k, v) in [("train.clip_norm", self.train_clip_norm), ("adapt.clip_norm", self.adapt_clip_norm)] {
            if v.0.is_some_and(|c| !(c > 0.0)) {
                bail!("config key '{k}' must be positive or 'none'");
            }
        }
        if !(self.splice_mix_ratio >= 0.0 && self.splice_mix_ratio.is_finite()) {
            bail!("splice.mix_ratio must be >= 0");
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn corpus_spec(&self) -> CorpusSpec {
        CorpusSpec {
            phones: self.corpus_phones,
            words: self.corpus_words,
            noise: self.corpus_noise,
            min_words: self.corpus_min_words,
            max_words: self.corpus_max_words,
            min_phone_frames: self.corpus_min_phone_frames,
            max_phone_frames: self.corpus_max_phone_frames,
            pause_prob: self.corpus_pause_prob,
            domain_bias: self.corpus_domain_bias,
            source_train: self.corpus_source_train,
            source_test: self.corpus_source_test,
            target_texts: self.corpus_target_texts,
            target_dev: self.corpus_target_dev,
            target_test: self.corpus_target_test,
            seed: self.seed,
        }
    }

    pub fn transducer_config(&self, input_dim: usize) -> TransducerConfig {
        TransducerConfig {
            input_dim,
            encoder_layers: self.model_encoder_layers,
            shared_layers: self.model_shared_layers,
            encoder_hidden: self.model_encoder_hidden,
            prediction_layers: self.model_prediction_layers,
            prediction_hidden: self.model_prediction_hidden,
            embed_dim: self.model_embed_dim,
            joint_dim: self.model_joint_dim,
            branch_layers: self.model_branch_layers,
            branch_hidden: self.model_branch_hidden,
        }
    }

    pub fn train_mode(&self) -> TrainMode {
        match self.train_mode {
            TrainModeName::Rnnt => TrainMode::RnntOnly,
            TrainModeName::Mtl => TrainMode::Mtl { alpha: self.train_alpha },
            TrainModeName::CeBranch => TrainMode::CeBranchOnly,
        }
    }

    pub fn unresolved_policy(&self) -> UnresolvedPolicy {
        match self.splice_unresolved {
            UnresolvedName::Abort => UnresolvedPolicy::Abort,
            UnresolvedName::Skip => UnresolvedPolicy::SkipWithReport,
        }
    }

    pub fn avg_hyp_reading(&self) -> AvgHypReading {
        match self.conf_avg_hyp {
            AvgHypName::Partial => AvgHypReading::PartialHypothesis,
            AvgHypName::LastPiece => AvgHypReading::LastPiece,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_is_flags_then_file_then_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "# toy run\ntrain.lr = 0.2\ndecode.beam = 6 # wider\nseed = 5\n").unwrap();
        let c = Config::resolve(Some(&path), &["train.lr=0.3".into()]).unwrap();
        assert_eq!(c.train_lr, 0.3);
        assert_eq!(c.decode_beam, 6);
        assert_eq!(c.seed, 5);
        assert_eq!(c.adapt_lr, Config::default().adapt_lr);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(Config::resolve(None, &["train.lrr=0.1".into()]).is_err());
        assert!(Config::resolve(None, &["train.mode=ctc".into()]).is_err());
        assert!(Config::resolve(None, &["decode.nbest=20".into()]).is_err());
        assert!(Config::resolve(None, &["adapt.freeze_lower=3".into()]).is_err());
        assert!(Config::resolve(None, &["train.clip_norm=none".into()]).is_ok());
    }

    #[test]
    fn text_round_trip() {
        let mut c = Config::default();
        c.set("train.mode", "mtl").unwrap();
        c.set("conf.avg_hyp", "last-piece").unwrap();
        let mut d = Config::default();
        for (k, v) in parse_assignments(&c.to_text()).unwrap() {
            d.set(&k, &v).unwrap();
        }
        assert_eq!(c, d);
        assert_eq!(Config::KEYS.len(), c.entries().len());
    }
}
