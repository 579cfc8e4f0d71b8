//! Subcommand implementations. Every output file is written atomically.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde_json::json;
use transkit::audio::{FEATURE_DIM, SAMPLE_RATE};
use transkit::confidence::{
    evaluate_confidence, format_feature_csv, train_classifier, word_confidence_features, ClassifierConfig,
    ConfidenceModel, LabeledWord, WordRecord,
};
use transkit::rng::{derive_seed, stream};
use transkit::splicer::{
    build_adaptation_set, format_ctm, format_manifest, parse_ctm, AudioStore, CtmRow, Lexicon, ManifestRow, Origin,
    SegmentInventory, UnitLevel,
};
use transkit::text::wer;
use transkit::transducer::{
    adapt, beam_search, load_checkpoint, parse_nbest_jsonl, save_checkpoint, train, write_nbest_jsonl, AdaptConfig,
    DecodeConfig, Freeze, NBestList, NBestRecord, StepConfig, TrainConfig, TrainMode, TransducerModel, Vocabulary,
    WORD_START,
};
use transkit::word_timing::{
    ctm_to_timings, evaluate_timings, expand_to_phones, rnnt_baseline_end_times, timings_to_ctm, viterbi_align,
    TimedWord,
};

use crate::config::{AlignMethod, Config};
use crate::corpus::generate;
use crate::data::{examples, load_frame_targets, load_vocabulary, read_list, Dataset};
use crate::io::{parent_dir, read_audio, read_text, relative_to, resolve, write_atomic, write_wav_atomic};
use crate::{Cli, Command};

pub fn dispatch(cli: &Cli, cfg: &Config) -> Result<()> {
    let out_dir = || cli.out_dir.as_deref().context("--out-dir is required");
    let out = cli.out.as_deref();
    match &cli.command {
        Command::MakeCorpus => make_corpus(cfg, out_dir()?),
        Command::BuildInventory {
            word_ctm,
            phone_ctm,
            audio_dir,
        } => {
            let out = out.context("--out is required")?;
            build_inventory(word_ctm, phone_ctm.as_deref(), audio_dir, out)
        }
        Command::Splice {
            inventory,
            lexicon,
            texts,
            real,
        } => splice(cfg, inventory, lexicon, texts, real.as_deref(), out_dir()?),
        Command::Train {
            manifest,
            vocab,
            phones,
            phone_ctm,
            init,
        } => train_model(
            cfg,
            manifest,
            vocab.as_deref(),
            phones.as_deref(),
            phone_ctm.as_deref(),
            init.as_deref(),
            out_dir()?,
        ),
        Command::Adapt { model, manifest } => adapt_model(cfg, model, manifest, out_dir()?),
        Command::Decode { model, manifest } => emit(out, &decode(cfg, model, manifest)?),
        Command::Align {
            model,
            manifest,
            nbest,
            lexicon,
            reference,
        } => emit(out, &align(cfg, model, manifest, nbest.as_deref(), lexicon.as_deref(), *reference)?),
        Command::TimingEval {
            hyp,
            reference,
            end_only,
        } => emit(out, &timing_eval(hyp, reference, *end_only)?),
        Command::ConfTrain { model, nbest, manifest } => conf_train(cfg, model, nbest, manifest, out_dir()?),
        Command::ConfEval {
            model,
            conf_model,
            nbest,
            manifest,
        } => emit(out, &conf_eval(cfg, model, conf_model, nbest, manifest)?),
        Command::Wer { nbest, manifest } => emit(out, &word_error_rate(nbest, manifest)?),
    }
}

/// Writes `text` to `out`, or to stdout.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

/// Lets `save` write into a scratch directory under `out_dir`, then renames
/// each file into place.
fn save_dir_atomic(out_dir: &Path, save: impl FnOnce(&Path) -> transkit::Result<()>) -> Result<()> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let tmp = tempfile::Builder::new()
        .prefix(".partial")
        .tempdir_in(out_dir)
        .with_context(|| format!("scratch directory in {}", out_dir.display()))?;
    save(tmp.path())?;
    let mut entries: Vec<PathBuf> = fs::read_dir(tmp.path())?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
    entries.sort();
    for path in entries {
        let name = path.file_name().context("unnamed scratch file")?;
        fs::rename(&path, out_dir.join(name)).with_context(|| format!("moving {} into place", path.display()))?;
    }
    Ok(())
}

fn make_corpus(cfg: &Config, out_dir: &Path) -> Result<()> {
    let corpus = generate(&cfg.corpus_spec())?;
    let lines = |items: &mut dyn Iterator<Item = String>| -> String { items.map(|l| l + "\n").collect() };
    let info = json!({
        "spec": corpus.spec,
        "phones": corpus.phones,
        "prototypes": corpus.prototypes,
        "words": corpus.words,
        "source_successor": corpus.source_successor,
        "target_successor": corpus.target_successor,
    });
    write_atomic(&out_dir.join("corpus.json"), to_json(&info)?.as_bytes())?;
    write_atomic(&out_dir.join("lexicon.txt"), corpus.lexicon.to_text().as_bytes())?;
    write_atomic(
        &out_dir.join("phones.txt"),
        lines(&mut corpus.phones.iter().cloned()).as_bytes(),
    )?;
    write_atomic(
        &out_dir.join("vocab.txt"),
        lines(&mut corpus.words.iter().map(|w| format!("{WORD_START}{w}"))).as_bytes(),
    )?;
    write_atomic(
        &out_dir.join("target_texts.txt"),
        lines(&mut corpus.target_texts.iter().map(|t| t.join(" "))).as_bytes(),
    )?;
    for split in &corpus.splits {
        let dir = out_dir.join(&split.name);
        split
            .utterances
            .par_iter()
            .map(|u| write_wav_atomic(&dir.join("wav").join(format!("{}.wav", u.id)), &u.audio()?, SAMPLE_RATE))
            .collect::<Result<Vec<()>>>()?;
        let rows: Vec<ManifestRow> = split
            .utterances
            .iter()
            .map(|u| ManifestRow {
                utt_id: u.id.clone(),
                audio_path: format!("wav/{}.wav", u.id),
                text: u.words.join(" "),
                origin: Origin::Real,
                recipe: None,
            })
            .collect();
        write_atomic(&dir.join("manifest.jsonl"), format_manifest(&rows)?.as_bytes())?;
        let words: Vec<CtmRow> = split.utterances.iter().flat_map(|u| u.word_ctm()).collect();
        let phones: Vec<CtmRow> = split.utterances.iter().flat_map(|u| u.phone_ctm()).collect();
        write_atomic(&dir.join("words.ctm"), format_ctm(&words).as_bytes())?;
        write_atomic(&dir.join("phones.ctm"), format_ctm(&phones).as_bytes())?;
        log::info!("{}: {} utterances", split.name, split.utterances.len());
    }
    Ok(())
}

fn load_ctm(path: &Path) -> Result<Vec<CtmRow>> {
    parse_ctm(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn build_inventory(word_ctm: &Path, phone_ctm: Option<&Path>, audio_dir: &Path, out: &Path) -> Result<()> {
    let mut inv = SegmentInventory::new(SAMPLE_RATE);
    inv.add_rows(&load_ctm(word_ctm)?, audio_dir, UnitLevel::Word)?;
    if let Some(p) = phone_ctm {
        inv.add_rows(&load_ctm(p)?, audio_dir, UnitLevel::Phone)?;
    }
    let base = parent_dir(out);
    for seg in inv.words.values_mut().chain(inv.phones.values_mut()).flatten() {
        seg.audio_path = relative_to(Path::new(&seg.audio_path), &base);
    }
    log::info!(
        "inventory: {} word types, {} phone types, {} segments",
        inv.words.len(),
        inv.phones.len(),
        inv.segment_count()
    );
    write_atomic(out, to_json(&inv)?.as_bytes())
}

fn load_lexicon(path: &Path) -> Result<Lexicon> {
    Lexicon::parse(&read_text(path)?).with_context(|| format!("parsing lexicon {}", path.display()))
}

fn splice(
    cfg: &Config,
    inventory: &Path,
    lexicon: &Path,
    texts: &Path,
    real: Option<&Path>,
    out_dir: &Path,
) -> Result<()> {
    let inv: SegmentInventory = serde_json::from_str(&read_text(inventory)?)
        .with_context(|| format!("parsing inventory {}", inventory.display()))?;
    let inv_dir = parent_dir(inventory);
    let mut paths: Vec<&str> = inv
        .words
        .values()
        .chain(inv.phones.values())
        .flatten()
        .map(|s| s.audio_path.as_str())
        .collect();
    paths.sort_unstable();
    paths.dedup();
    let loaded: Vec<Vec<i16>> = paths.par_iter().map(|p| read_audio(&resolve(&inv_dir, p))).collect::<Result<_>>()?;
    let mut store = AudioStore::new();
    for (p, samples) in paths.iter().zip(loaded) {
        store.insert(*p, samples);
    }
    let lex = load_lexicon(lexicon)?;
    let texts: Vec<Vec<String>> = read_list(texts)?
        .iter()
        .map(|l| l.split_whitespace().map(str::to_string).collect())
        .collect();
    let real_rows: Vec<ManifestRow> = match real {
        None => Vec::new(),
        Some(path) => {
            let ds = Dataset::load(path)?;
            ds.rows
                .iter()
                .map(|r| ManifestRow {
                    audio_path: relative_to(&ds.audio_path(r), out_dir),
                    ..r.clone()
                })
                .collect()
        }
    };
    let set = build_adaptation_set(
        &texts,
        &inv,
        &lex,
        &store,
        &real_rows,
        cfg.splice_mix_ratio,
        derive_seed(cfg.seed, "splice", 0),
        cfg.unresolved_policy(),
    )?;
    set.audio
        .par_iter()
        .map(|(rel, samples)| write_wav_atomic(&out_dir.join(rel), samples, set.sample_rate))
        .collect::<Result<Vec<()>>>()?;
    write_atomic(&out_dir.join("manifest.jsonl"), format_manifest(&set.rows)?.as_bytes())?;
    if !set.skipped.is_empty() {
        let report: Vec<_> = set
            .skipped
            .iter()
            .map(|(i, words)| json!({ "index": i, "text": texts[*i].join(" "), "unresolvable": words }))
            .collect();
        write_atomic(&out_dir.join("skipped.json"), to_json(&report)?.as_bytes())?;
        log::warn!("skipped {} texts with unresolvable words", set.skipped.len());
    }
    log::info!(
        "adaptation set: {} spliced, {} real",
        set.audio.len(),
        set.rows.len() - set.audio.len()
    );
    Ok(())
}

fn train_model(
    cfg: &Config,
    manifest: &Path,
    vocab: Option<&Path>,
    phones: Option<&Path>,
    phone_ctm: Option<&Path>,
    init: Option<&Path>,
    out_dir: &Path,
) -> Result<()> {
    let mode = cfg.train_mode();
    let mut model = match init {
        Some(dir) => load_checkpoint(dir).with_context(|| format!("loading checkpoint {}", dir.display()))?,
        None => {
            if mode == TrainMode::CeBranchOnly {
                bail!("train.mode = ce-branch needs --init with a trained transducer");
            }
            let vocab = load_vocabulary(vocab.context("--vocab is required without --init")?)?;
            let phones = match phones {
                Some(p) => read_list(p)?,
                None => Vec::new(),
            };
            let config = cfg.transducer_config(FEATURE_DIM);
            TransducerModel::new(&config, vocab, phones, &mut stream(cfg.seed, "init", 0))?
        }
    };
    let needs_phones = !matches!(mode, TrainMode::RnntOnly);
    if needs_phones && model.phone_branch.is_none() {
        bail!("train.mode = {} needs a phone branch; pass --phones", cfg.train_mode);
    }
    let targets = match (needs_phones, phone_ctm) {
        (false, _) => None,
        (true, None) => bail!("train.mode = {} needs --phone-ctm", cfg.train_mode),
        (true, Some(p)) => Some(load_frame_targets(p, &model.phones, cfg.align_frame_shift)?),
    };
    let ds = Dataset::load(manifest)?;
    let data = examples(&ds, ds.features()?, &model.vocab, targets.as_ref())?;
    let config = TrainConfig {
        step: StepConfig {
            mode,
            lr: cfg.train_lr,
            freeze: Freeze::none(),
            clip_norm: cfg.train_clip_norm.0,
        },
        epochs: cfg.train_epochs,
        batch_size: cfg.train_batch_size,
    };
    let history = train(&mut model, &data, &config, &mut stream(cfg.seed, "train", 0))?;
    if let Some(last) = history.last() {
        log::info!("trained {} epochs, final loss {last:.4}", history.len());
    }
    save_dir_atomic(out_dir, |dir| save_checkpoint(&model, dir))?;
    let log = json!({
        "mode": cfg.train_mode.to_string(),
        "utterances": data.len(),
        "epoch_loss": history,
    });
    write_atomic(&out_dir.join("train_log.json"), to_json(&log)?.as_bytes())
}

fn adapt_model(cfg: &Config, model: &Path, manifest: &Path, out_dir: &Path) -> Result<()> {
    let model = load_checkpoint(model).with_context(|| format!("loading checkpoint {}", model.display()))?;
    let ds = Dataset::load(manifest)?;
    let data = examples(&ds, ds.features()?, &model.vocab, None)?;
    let config = AdaptConfig {
        freeze_lower: cfg.adapt_freeze_lower,
        lr: cfg.adapt_lr,
        steps: cfg.adapt_steps,
        batch_size: cfg.adapt_batch_size,
        clip_norm: cfg.adapt_clip_norm.0,
    };
    let adapted = adapt(&model, &data, &config, &mut stream(cfg.seed, "adapt", 0))?;
    log::info!("adapted on {} utterances for {} steps", data.len(), config.steps);
    save_dir_atomic(out_dir, |dir| save_checkpoint(&adapted, dir))
}

fn decode_config(cfg: &Config) -> DecodeConfig {
    DecodeConfig {
        beam: cfg.decode_beam,
        nbest: cfg.decode_nbest,
        max_symbols_per_frame: cfg.decode_max_symbols,
        entropy_includes_blank: cfg.decode_entropy_includes_blank,
    }
}

fn decode(cfg: &Config, model: &Path, manifest: &Path) -> Result<String> {
    let model = load_checkpoint(model).with_context(|| format!("loading checkpoint {}", model.display()))?;
    let ds = Dataset::load(manifest)?;
    let features = ds.features()?;
    let config = decode_config(cfg);
    let lists: Vec<NBestList> = ds
        .rows
        .par_iter()
        .zip(features.par_iter())
        .map(|(r, f)| beam_search(&r.utt_id, f, &model, &config).with_context(|| format!("decoding {}", r.utt_id)))
        .collect::<Result<_>>()?;
    Ok(write_nbest_jsonl(&lists, &model.vocab)?)
}

fn load_nbest(path: &Path) -> Result<Vec<NBestList>> {
    parse_nbest_jsonl(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn align(
    cfg: &Config,
    model: &Path,
    manifest: &Path,
    nbest: Option<&Path>,
    lexicon: Option<&Path>,
    use_reference: bool,
) -> Result<String> {
    let model = load_checkpoint(model).with_context(|| format!("loading checkpoint {}", model.display()))?;
    let ds = Dataset::load(manifest)?;
    let lists: BTreeMap<String, NBestList> = match nbest {
        Some(p) => load_nbest(p)?.into_iter().map(|l| (l.utt_id.clone(), l)).collect(),
        None => BTreeMap::new(),
    };
    if !use_reference && nbest.is_none() {
        bail!("pass --nbest, or --reference to align manifest transcripts");
    }
    let rows: Vec<&ManifestRow> = ds
        .rows
        .iter()
        .filter(|r| use_reference || lists.contains_key(&r.utt_id))
        .collect();
    let shift = cfg.align_frame_shift;
    let timed: Vec<Vec<CtmRow>> = match cfg.align_method {
        AlignMethod::RnntEmit => {
            if use_reference {
                bail!("align.method = rnnt-emit times decoded hypotheses and cannot use --reference");
            }
            rows.iter()
                .map(|r| {
                    let words = match lists[&r.utt_id].best() {
                        Some(h) => rnnt_baseline_end_times(h, &model.vocab, shift)?,
                        None => Vec::new(),
                    };
                    Ok(timings_to_ctm(&r.utt_id, &words))
                })
                .collect::<Result<_>>()?
        }
        AlignMethod::Phone => {
            if model.phone_branch.is_none() {
                bail!("the checkpoint has no phone branch; train with --phones first");
            }
            let lex = load_lexicon(lexicon.context("align.method = phone needs --lexicon")?)?;
            let silence = (!cfg.align_silence.is_empty()).then_some(cfg.align_silence.as_str());
            rows.par_iter()
                .map(|r| {
                    let words = if use_reference {
                        r.words().into_iter().map(str::to_string).collect()
                    } else {
                        match lists[&r.utt_id].best() {
                            Some(h) => model.vocab.words(&h.tokens)?,
                            None => Vec::new(),
                        }
                    };
                    if words.is_empty() {
                        return Ok(Vec::new());
                    }
                    let features = transkit::audio::featurize(&read_audio(&ds.audio_path(r))?);
                    let pg = model.phone_posteriorgram(&features)?;
                    let seq = expand_to_phones(&words, &lex, &model.phones, silence)
                        .with_context(|| format!("expanding the words of {}", r.utt_id))?;
                    let result = viterbi_align(&pg, &seq, shift).with_context(|| format!("aligning {}", r.utt_id))?;
                    let timed: Vec<TimedWord> = result
                        .words
                        .iter()
                        .map(|w| TimedWord {
                            word: w.word.clone(),
                            start: Some(w.start_sec),
                            end: w.end_sec,
                        })
                        .collect();
                    Ok(timings_to_ctm(&r.utt_id, &timed))
                })
                .collect::<Result<_>>()?
        }
    };
    Ok(format_ctm(&timed.concat()))
}

fn timing_eval(hyp: &Path, reference: &Path, end_only: bool) -> Result<String> {
    let h = ctm_to_timings(&load_ctm(hyp)?, !end_only);
    let r = ctm_to_timings(&load_ctm(reference)?, true);
    to_json(&evaluate_timings(&h, &r)?)
}

/// Features of every top-hypothesis word, labelled against the manifest.
fn confidence_records(cfg: &Config, model: &Path, nbest: &Path, manifest: &Path) -> Result<Vec<WordRecord>> {
    let vocab: Vocabulary = load_checkpoint(model)
        .with_context(|| format!("loading checkpoint {}", model.display()))?
        .vocab;
    let refs = Dataset::load(manifest)?.references();
    let reading = cfg.avg_hyp_reading();
    let per_utt: Vec<Vec<WordRecord>> = load_nbest(nbest)?
        .par_iter()
        .map(|list| {
            let reference = refs
                .get(&list.utt_id)
                .with_context(|| format!("{} is not in the manifest", list.utt_id))?;
            Ok(word_confidence_features(list, &vocab, reading, Some(reference))?)
        })
        .collect::<Result<_>>()?;
    Ok(per_utt.concat())
}

fn labeled(records: &[WordRecord]) -> Vec<LabeledWord> {
    records.iter().filter_map(WordRecord::labeled).collect()
}

fn conf_train(cfg: &Config, model: &Path, nbest: &Path, manifest: &Path, out_dir: &Path) -> Result<()> {
    let records = confidence_records(cfg, model, nbest, manifest)?;
    let data = labeled(&records);
    let config = ClassifierConfig {
        hidden_dim: cfg.conf_hidden_dim,
        lr: cfg.conf_lr,
        epochs: cfg.conf_epochs,
        batch_size: cfg.conf_batch_size,
        seed: cfg.seed,
    };
    let classifier = train_classifier(&data, &config)?;
    log::info!(
        "confidence classifier on {} words ({} incorrect), loss {:.4}",
        data.len(),
        data.iter().filter(|w| w.label == 0).count(),
        classifier.loss(&data)?
    );
    save_dir_atomic(out_dir, |dir| classifier.save(dir))?;
    write_atomic(&out_dir.join("features.csv"), format_feature_csv(&records)?.as_bytes())
}

fn conf_eval(cfg: &Config, model: &Path, conf_model: &Path, nbest: &Path, manifest: &Path) -> Result<String> {
    let classifier = ConfidenceModel::load(conf_model)
        .with_context(|| format!("loading confidence model {}", conf_model.display()))?;
    let records = confidence_records(cfg, model, nbest, manifest)?;
    to_json(&evaluate_confidence(&classifier, &labeled(&records))?)
}

/// Words of a piece sequence, split at word-start markers.
fn record_words(utt_id: &str, tokens: &[String]) -> Result<Vec<String>> {
    let mut words: Vec<String> = Vec::new();
    for t in tokens {
        match t.strip_prefix(WORD_START) {
            Some(rest) => words.push(rest.to_string()),
            None => words
                .last_mut()
                .with_context(|| format!("{utt_id}: hypothesis starts with continuation piece '{t}'"))?
                .push_str(t),
        }
    }
    Ok(words)
}

fn word_error_rate(nbest: &Path, manifest: &Path) -> Result<String> {
    let mut hyps: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (i, line) in read_text(nbest)?.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let rec: NBestRecord =
            serde_json::from_str(line).with_context(|| format!("{} line {}", nbest.display(), i + 1))?;
        let words = match rec.hyps.first() {
            Some(h) => record_words(&rec.utt_id, &h.tokens)?,
            None => Vec::new(),
        };
        hyps.insert(rec.utt_id, words);
    }
    let pairs: Vec<(Vec<String>, Vec<String>)> = Dataset::load(manifest)?
        .references()
        .into_iter()
        .map(|(utt, r)| (hyps.remove(&utt).unwrap_or_default(), r))
        .collect();
    if let Some(extra) = hyps.keys().next() {
        bail!("hypothesis for {extra} has no reference in the manifest");
    }
    to_json(&wer(&pairs))
}
