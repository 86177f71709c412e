//! WAV decoding and clip normalization.

use std::path::Path;

use crate::error::{Error, Result};

/// Target rate after normalization.
pub const TARGET_RATE: u32 = 44_100;
/// Target clip length in seconds.
pub const TARGET_SECONDS: usize = 10;
pub const TARGET_LEN: usize = TARGET_RATE as usize * TARGET_SECONDS;

/// Mono PCM samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::param("sample rate must be positive"));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::Domain("audio samples must be finite".into()));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Resample to 44.1 kHz and fit to exactly ten seconds.
    pub fn normalized(&self) -> Self {
        let resampled = resample_linear(&self.samples, self.sample_rate, TARGET_RATE);
        Self {
            samples: fit_length(resampled, TARGET_LEN),
            sample_rate: TARGET_RATE,
        }
    }
}

/// Linear interpolation onto the output grid `t = k / to`. Positions past
/// the last input sample hold the last value.
pub fn resample_linear(samples: &[f64], from: u32, to: u32) -> Vec<f64> {
    if from == to || samples.is_empty() {
        return samples.to_vec();
    }
    let out_len = ((samples.len() as u128 * to as u128) / from as u128) as usize;
    let last = samples.len() - 1;
    (0..out_len)
        .map(|k| {
            // exact rational position k·from/to
            let num = k as u128 * from as u128;
            let i = (num / to as u128) as usize;
            let frac = (num % to as u128) as f64 / to as f64;
            if i >= last {
                samples[last]
            } else {
                samples[i] * (1.0 - frac) + samples[i + 1] * frac
            }
        })
        .collect()
}

/// Right-pad with zeros, or keep the centered window of `len` samples.
pub fn fit_length(mut samples: Vec<f64>, len: usize) -> Vec<f64> {
    if samples.len() <= len {
        samples.resize(len, 0.0);
        samples
    } else {
        let start = (samples.len() - len) / 2;
        samples[start..start + len].to_vec()
    }
}

fn map_hound(e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) if io.kind() == std::io::ErrorKind::UnexpectedEof => {
            Error::Format(format!("truncated RIFF data: {io}"))
        }
        hound::Error::IoError(io) => Error::Format(io.to_string()),
        hound::Error::FormatError(m) => Error::Format(m.to_string()),
        hound::Error::Unsupported => Error::Unsupported("WAV codec is not integer/float PCM".into()),
        other => Error::Unsupported(other.to_string()),
    }
}

/// Decode a WAV stream to mono `[-1, 1]` samples at the file's own rate.
pub fn decode_wav<R: std::io::Read>(reader: R) -> Result<AudioClip> {
    let mut r = hound::WavReader::new(reader).map_err(map_hound)?;
    let spec = r.spec();
    if spec.channels == 0 || spec.channels > 2 {
        return Err(Error::Unsupported(format!("{} channels", spec.channels)));
    }
    let raw: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Float, 32) => r
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(map_hound)?,
        (hound::SampleFormat::Int, bits @ (8 | 16 | 24)) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            r.samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(map_hound)?
        }
        (fmt, bits) => {
            return Err(Error::Unsupported(format!("{bits}-bit {fmt:?} samples")));
        }
    };
    if raw.is_empty() {
        return Err(Error::EmptyInput("WAV file has no samples".into()));
    }
    let ch = spec.channels as usize;
    let mono = raw
        .chunks(ch)
        .map(|f| (f.iter().sum::<f64>() / ch as f64).clamp(-1.0, 1.0))
        .collect();
    AudioClip::new(mono, spec.sample_rate)
}

/// Read a WAV file and normalize it to 441 000 samples at 44.1 kHz.
pub fn load_wav(path: &Path) -> Result<AudioClip> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(decode_wav(std::io::BufReader::new(f))?.normalized())
}

/// Write a clip as 16-bit mono PCM.
pub fn write_wav_i16(path: &Path, clip: &AudioClip) -> Result<()> {
    write_wav_pcm(path, clip, 16)
}

/// Write a clip as mono integer PCM with 8, 16 or 24 bits per sample.
pub fn write_wav_pcm(path: &Path, clip: &AudioClip, bits: u16) -> Result<()> {
    if !matches!(bits, 8 | 16 | 24) {
        return Err(Error::Unsupported(format!("writing {bits}-bit PCM")));
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate(),
        bits_per_sample: bits,
        sample_format: hound::SampleFormat::Int,
    };
    let full = ((1i64 << (bits - 1)) - 1) as f64;
    let mut w = hound::WavWriter::create(path, spec).map_err(map_hound)?;
    for &s in clip.samples() {
        w.write_sample((s.clamp(-1.0, 1.0) * full).round() as i32)
            .map_err(map_hound)?;
    }
    w.finalize().map_err(map_hound)
}
