//! 16-bit PCM WAV I/O and the fixed frame featurizer shared by corpus
//! synthesis, splicing and decoding.
//!
//! A frame is 30 ms (480 samples at 16 kHz) split into 8 sub-blocks of 60
//! samples; each feature is a sub-block mean divided by [`AMPLITUDE`].
//! [`synthesize`] writes constant sub-blocks, so featurizing synthesized
//! audio returns the frames up to 16-bit quantization.

use std::io::Cursor;
use std::path::Path;

use crate::error::{contract_err, Error, Result};

pub const SAMPLE_RATE: u32 = 16_000;
pub const FRAME_SAMPLES: usize = 480;
pub const FEATURE_DIM: usize = 8;
pub const SUB_BLOCK: usize = FRAME_SAMPLES / FEATURE_DIM;
/// Sample value representing feature value 1.0.
pub const AMPLITUDE: f64 = 4096.0;
/// Frame shift in seconds.
pub const FRAME_SHIFT: f64 = FRAME_SAMPLES as f64 / SAMPLE_RATE as f64;

fn spec(rate: u32) -> hound::WavSpec {
    hound::WavSpec {
        channels: 1,
        sample_rate: rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    }
}

/// Encodes mono 16-bit PCM as WAV bytes.
pub fn wav_bytes(samples: &[i16], rate: u32) -> Result<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    {
        let mut w = hound::WavWriter::new(&mut buf, spec(rate)).map_err(|e| Error::Wav {
            path: "<memory>".into(),
            source: e,
        })?;
        for &s in samples {
            w.write_sample(s).map_err(|e| Error::Wav {
                path: "<memory>".into(),
                source: e,
            })?;
        }
        w.finalize().map_err(|e| Error::Wav {
            path: "<memory>".into(),
            source: e,
        })?;
    }
    Ok(buf.into_inner())
}

pub fn write_wav(path: &Path, samples: &[i16], rate: u32) -> Result<()> {
    let bytes = wav_bytes(samples, rate)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads a mono 16-bit PCM WAV; returns samples and sample rate.
pub fn read_wav(path: &Path) -> Result<(Vec<i16>, u32)> {
    let wav_err = |e| Error::Wav {
        path: path.to_path_buf(),
        source: e,
    };
    let mut reader = hound::WavReader::open(path).map_err(wav_err)?;
    let s = reader.spec();
    if s.channels != 1 || s.bits_per_sample != 16 || s.sample_format != hound::SampleFormat::Int {
        return Err(Error::Data(format!(
            "{}: expected mono 16-bit PCM, got {} channels / {} bits",
            path.display(),
            s.channels,
            s.bits_per_sample
        )));
    }
    let samples = reader.samples::<i16>().collect::<std::result::Result<Vec<_>, _>>().map_err(wav_err)?;
    Ok((samples, s.sample_rate))
}

/// Feature frames of a waveform; a trailing partial frame is dropped.
pub fn featurize(samples: &[i16]) -> Vec<Vec<f64>> {
    samples
        .chunks_exact(FRAME_SAMPLES)
        .map(|frame| {
            frame
                .chunks_exact(SUB_BLOCK)
                .map(|b| b.iter().map(|&s| f64::from(s)).sum::<f64>() / (SUB_BLOCK as f64 * AMPLITUDE))
                .collect()
        })
        .collect()
}

/// Waveform whose features are `frames` (quantized to 1/AMPLITUDE).
pub fn synthesize(frames: &[Vec<f64>]) -> Result<Vec<i16>> {
    let mut out = Vec::with_capacity(frames.len() * FRAME_SAMPLES);
    for (t, f) in frames.iter().enumerate() {
        if f.len() != FEATURE_DIM {
            return Err(contract_err!("frame {t} has dim {}, expected {FEATURE_DIM}", f.len()));
        }
        for &v in f {
            let s = (v * AMPLITUDE).round().clamp(f64::from(i16::MIN), f64::from(i16::MAX)) as i16;
            out.extend(std::iter::repeat_n(s, SUB_BLOCK));
        }
    }
    Ok(out)
}
