use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mel::MelFilterBank;
use super::spectral::{stft, SpectralConfig};
use crate::error::{Error, Result};
use crate::grid::resize_bilinear;
use crate::ingest::AudioClip;

/// Floor applied before every logarithm.
pub const LOG_EPS: f64 = 1e-10;
pub const MFCC_FILTERS: usize = 40;
pub const MFCC_COEFFS: usize = 12;
pub const MEL_BANDS: usize = 128;
pub const PITCH_CLASSES: usize = 12;
/// Pitch class names; index 0 is the A440 reference class.
pub const PITCH_CLASS_NAMES: [&str; 12] = ["A", "A#", "B", "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Mel,
    Mfcc,
    Stft,
    Chroma,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 4] = [FeatureKind::Mel, FeatureKind::Mfcc, FeatureKind::Stft, FeatureKind::Chroma];

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Mel => "mel",
            FeatureKind::Mfcc => "mfcc",
            FeatureKind::Stft => "stft",
            FeatureKind::Chroma => "chroma",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::param(format!("unknown feature kind '{s}' (mel, mfcc, stft, chroma)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinAxis {
    /// Linear-frequency FFT bins (power).
    Hz,
    /// Mel bands (power).
    Mel,
    /// Cepstral coefficient index (log domain, may be negative).
    Cepstral,
    /// Pitch classes (power).
    PitchClass,
}

impl BinAxis {
    pub fn is_power(self) -> bool {
        !matches!(self, BinAxis::Cepstral)
    }
}

/// `rows × frames` grid, row-major by bin.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: Vec<f64>,
    pub rows: usize,
    pub frames: usize,
    pub bin_axis: BinAxis,
    pub frame_times: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(values: Vec<f64>, rows: usize, frames: usize, bin_axis: BinAxis) -> Result<Self> {
        if values.len() != rows * frames {
            return Err(Error::shape(format!(
                "{} values for a {rows}×{frames} matrix",
                values.len()
            )));
        }
        Ok(Self {
            values,
            rows,
            frames,
            bin_axis,
            frame_times: Vec::new(),
        })
    }

    pub fn at(&self, row: usize, frame: usize) -> f64 {
        self.values[row * self.frames + frame]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.frames..(r + 1) * self.frames]
    }

    pub fn frame(&self, t: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.at(r, t)).collect()
    }

    pub fn argmax_row(&self, frame: usize) -> usize {
        crate::nn::tensor::argmax(&self.frame(frame))
    }

    /// Power rows mapped to dB against the matrix maximum, then min-max
    /// scaled to `[0, 1]`; cepstral rows are min-max scaled directly.
    pub fn to_unit_db(&self) -> Vec<f64> {
        let vals: Vec<f64> = if self.bin_axis.is_power() {
            let reference = self.values.iter().copied().fold(LOG_EPS, f64::max);
            self.values.iter().map(|&v| power_to_db(v, reference)).collect()
        } else {
            self.values.clone()
        };
        min_max(&vals)
    }

    /// Unit-scaled dB grid resampled to `rows × cols` for 2-D models.
    pub fn to_image(&self, rows: usize, cols: usize) -> Vec<f64> {
        resize_bilinear(&self.to_unit_db(), self.rows, self.frames, rows, cols)
    }

    /// `steps × rows` sequence (time-major) for recurrent models: the
    /// unit-scaled dB grid with its time axis resampled to `steps`.
    pub fn to_sequence(&self, steps: usize) -> Vec<f64> {
        let grid = resize_bilinear(&self.to_unit_db(), self.rows, self.frames, self.rows, steps);
        let mut out = Vec::with_capacity(steps * self.rows);
        for t in 0..steps {
            for r in 0..self.rows {
                out.push(grid[r * steps + t]);
            }
        }
        out
    }
}

/// `10 · log10(max(v, ε) / ref)`
pub fn power_to_db(v: f64, reference: f64) -> f64 {
    10.0 * (v.max(LOG_EPS) / reference).log10()
}

fn min_max(vals: &[f64]) -> Vec<f64> {
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo > 0.0 {
        vals.iter().map(|v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0)).collect()
    } else {
        vec![0.0; vals.len()]
    }
}

/// Condensed per-bin summary in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub kind: FeatureKind,
}

/// Row means, converted to dB against the largest mean (power axes only),
/// then min-max normalized. A constant result maps to all zeros.
pub fn condense(matrix: &FeatureMatrix, kind: FeatureKind) -> Result<FeatureVector> {
    if matrix.rows == 0 || matrix.frames == 0 {
        return Err(Error::shape("cannot condense an empty matrix"));
    }
    if matrix.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("feature matrix contains non-finite values".into()));
    }
    let means: Vec<f64> = (0..matrix.rows)
        .map(|r| matrix.row(r).iter().sum::<f64>() / matrix.frames as f64)
        .collect();
    let scaled = if matrix.bin_axis.is_power() {
        let reference = means.iter().copied().fold(LOG_EPS, f64::max);
        means.iter().map(|&m| power_to_db(m, reference)).collect()
    } else {
        means
    };
    Ok(FeatureVector {
        values: min_max(&scaled),
        kind,
    })
}

/// `|STFT|²`, `(n_fft/2 + 1) × frames`.
pub fn power_spectrogram(clip: &AudioClip, cfg: &SpectralConfig) -> Result<FeatureMatrix> {
    let spec = stft(clip, cfg)?;
    let mut m = FeatureMatrix::new(spec.power(), spec.bins, spec.frames, BinAxis::Hz)?;
    m.frame_times = spec.frame_times;
    Ok(m)
}

fn check_bank(cfg: &SpectralConfig, bank: &MelFilterBank) -> Result<()> {
    if bank.n_fft() != cfg.n_fft || bank.sample_rate() != cfg.sample_rate {
        return Err(Error::shape(format!(
            "filter bank built for n_fft {} at {} Hz, config has n_fft {} at {} Hz",
            bank.n_fft(),
            bank.sample_rate(),
            cfg.n_fft,
            cfg.sample_rate
        )));
    }
    Ok(())
}

fn apply_bank(power: &FeatureMatrix, bank: &MelFilterBank) -> FeatureMatrix {
    let mut values = vec![0.0; bank.n_filters() * power.frames];
    for t in 0..power.frames {
        let energies = bank.apply(&power.frame(t));
        for (m, e) in energies.into_iter().enumerate() {
            values[m * power.frames + t] = e;
        }
    }
    FeatureMatrix {
        values,
        rows: bank.n_filters(),
        frames: power.frames,
        bin_axis: BinAxis::Mel,
        frame_times: power.frame_times.clone(),
    }
}

/// Filter-bank energies of the power spectrogram.
pub fn mel_spectrogram(clip: &AudioClip, cfg: &SpectralConfig, bank: &MelFilterBank) -> Result<FeatureMatrix> {
    check_bank(cfg, bank)?;
    Ok(apply_bank(&power_spectrogram(clip, cfg)?, bank))
}

/// `c_i = Σ_{n=1..N} S_n · cos(i·(n − 0.5)·π / N)` for `i = 1..=n_coeffs`.
pub fn cepstral_coefficients(log_energies: &[f64], n_coeffs: usize) -> Result<Vec<f64>> {
    let nf = log_energies.len();
    if n_coeffs > nf {
        return Err(Error::param(format!("{n_coeffs} coefficients requested from {nf} filters")));
    }
    Ok((1..=n_coeffs)
        .map(|i| {
            log_energies
                .iter()
                .enumerate()
                .map(|(n0, s)| s * (i as f64 * (n0 as f64 + 0.5) * PI / nf as f64).cos())
                .sum()
        })
        .collect())
}

/// Cepstral coefficients of the natural-log filter energies, per frame.
pub fn mfcc(clip: &AudioClip, cfg: &SpectralConfig, bank: &MelFilterBank, n_coeffs: usize) -> Result<FeatureMatrix> {
    if n_coeffs > bank.n_filters() {
        return Err(Error::param(format!(
            "{n_coeffs} coefficients requested from {} filters",
            bank.n_filters()
        )));
    }
    let energies = mel_spectrogram(clip, cfg, bank)?;
    let mut values = vec![0.0; n_coeffs * energies.frames];
    for t in 0..energies.frames {
        let logs: Vec<f64> = energies.frame(t).iter().map(|e| e.max(LOG_EPS).ln()).collect();
        for (i, c) in cepstral_coefficients(&logs, n_coeffs)?.into_iter().enumerate() {
            values[i * energies.frames + t] = c;
        }
    }
    let mut m = FeatureMatrix::new(values, n_coeffs, energies.frames, BinAxis::Cepstral)?;
    m.frame_times = energies.frame_times;
    Ok(m)
}

/// Pitch class of a positive frequency: `round(12·log2(f / 440)) mod 12`.
pub fn pitch_class(f: f64) -> usize {
    ((12.0 * (f / 440.0).log2()).round() as i64).rem_euclid(12) as usize
}

/// Power of bins `k ≥ 1` summed into 12 equal-tempered pitch classes.
pub fn chromagram(clip: &AudioClip, cfg: &SpectralConfig) -> Result<FeatureMatrix> {
    let power = power_spectrogram(clip, cfg)?;
    let classes: Vec<usize> = (1..power.rows).map(|k| pitch_class(cfg.bin_frequency(k))).collect();
    let mut values = vec![0.0; PITCH_CLASSES * power.frames];
    for (k, &pc) in (1..power.rows).zip(&classes) {
        for (t, p) in power.row(k).iter().enumerate() {
            values[pc * power.frames + t] += p;
        }
    }
    let mut m = FeatureMatrix::new(values, PITCH_CLASSES, power.frames, BinAxis::PitchClass)?;
    m.frame_times = power.frame_times;
    Ok(m)
}

/// Row count of a feature matrix under `config`.
pub fn feature_rows(kind: FeatureKind, config: &SpectralConfig) -> usize {
    match kind {
        FeatureKind::Mel => MEL_BANDS,
        FeatureKind::Mfcc => MFCC_COEFFS,
        FeatureKind::Stft => config.n_bins(),
        FeatureKind::Chroma => 12,
    }
}

/// Shared configuration and filter banks for all four features.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    pub config: SpectralConfig,
    mel_bank: MelFilterBank,
    mfcc_bank: MelFilterBank,
    pub n_mfcc: usize,
}

impl FeatureExtractor {
    pub fn new(config: SpectralConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            mel_bank: MelFilterBank::full_band(MEL_BANDS, config.n_fft, config.sample_rate)?,
            mfcc_bank: MelFilterBank::full_band(MFCC_FILTERS, config.n_fft, config.sample_rate)?,
            config,
            n_mfcc: MFCC_COEFFS,
        })
    }

    pub fn mel_bank(&self) -> &MelFilterBank {
        &self.mel_bank
    }

    pub fn mfcc_bank(&self) -> &MelFilterBank {
        &self.mfcc_bank
    }

    pub fn matrix(&self, clip: &AudioClip, kind: FeatureKind) -> Result<FeatureMatrix> {
        match kind {
            FeatureKind::Mel => mel_spectrogram(clip, &self.config, &self.mel_bank),
            FeatureKind::Mfcc => mfcc(clip, &self.config, &self.mfcc_bank, self.n_mfcc),
            FeatureKind::Stft => power_spectrogram(clip, &self.config),
            FeatureKind::Chroma => chromagram(clip, &self.config),
        }
    }

    pub fn vector(&self, clip: &AudioClip, kind: FeatureKind) -> Result<FeatureVector> {
        condense(&self.matrix(clip, kind)?, kind)
    }

    /// Per-clip matrices computed in parallel; results keep input order.
    pub fn matrices(&self, clips: &[AudioClip], kind: FeatureKind) -> Vec<Result<FeatureMatrix>> {
        clips.par_iter().map(|c| self.matrix(c, kind)).collect()
    }
}

impl Default for FeatureExtractor {
    fn default() -> Self {
        Self::new(SpectralConfig::default()).expect("default spectral config is valid")
    }
}
