//! Framed short-time Fourier transform.
//!
//! Frame `t` covers samples `[t·hop, t·hop + n_fft)`; there is no centering
//! or edge padding, so a clip of `n` samples yields
//! `1 + floor((n − n_fft) / hop)` frames. Bin `k` of frame `t` is
//! `Σ_n w[n] · x[t·hop + n] · e^{−2πikn/n_fft}` for `k = 0..=n_fft/2`.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::AudioClip;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// Periodic Hann: `0.5 − 0.5·cos(2πn / N)`.
    Hann,
    Rectangular,
}

impl Window {
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / n as f64).cos())
                .collect(),
            Window::Rectangular => vec![1.0; n],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub n_fft: usize,
    pub hop: usize,
    pub window: Window,
    pub sample_rate: u32,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            n_fft: 1024,
            hop: 512,
            window: Window::Hann,
            sample_rate: 44_100,
        }
    }
}

impl SpectralConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.n_fft.is_power_of_two() || self.n_fft < 2 {
            return Err(Error::param(format!("n_fft {} is not a power of two", self.n_fft)));
        }
        if self.hop == 0 || self.hop > self.n_fft {
            return Err(Error::param(format!("hop {} must lie in 1..={}", self.hop, self.n_fft)));
        }
        if self.sample_rate == 0 {
            return Err(Error::param("sample rate must be positive"));
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn n_frames(&self, n_samples: usize) -> usize {
        if n_samples < self.n_fft {
            0
        } else {
            1 + (n_samples - self.n_fft) / self.hop
        }
    }

    pub fn bin_frequency(&self, k: usize) -> f64 {
        k as f64 * self.sample_rate as f64 / self.n_fft as f64
    }
}

/// One-sided complex spectrogram, `bins × frames` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    pub values: Vec<Complex64>,
    pub bins: usize,
    pub frames: usize,
    /// Frame start times in seconds.
    pub frame_times: Vec<f64>,
}

impl ComplexSpectrogram {
    pub fn at(&self, bin: usize, frame: usize) -> Complex64 {
        self.values[bin * self.frames + frame]
    }

    /// `|X|²` per cell.
    pub fn power(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.norm_sqr()).collect()
    }
}

pub fn stft(clip: &AudioClip, cfg: &SpectralConfig) -> Result<ComplexSpectrogram> {
    cfg.validate()?;
    if clip.sample_rate() != cfg.sample_rate {
        return Err(Error::param(format!(
            "clip rate {} Hz differs from configured {} Hz",
            clip.sample_rate(),
            cfg.sample_rate
        )));
    }
    let x = clip.samples();
    if x.len() < cfg.n_fft {
        return Err(Error::InsufficientData(format!(
            "clip has {} samples, frame needs {}",
            x.len(),
            cfg.n_fft
        )));
    }
    let frames = cfg.n_frames(x.len());
    let bins = cfg.n_bins();
    let win = cfg.window.coefficients(cfg.n_fft);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(cfg.n_fft);
    let mut values = vec![Complex64::new(0.0, 0.0); bins * frames];
    let mut buf = vec![Complex64::new(0.0, 0.0); cfg.n_fft];
    for t in 0..frames {
        let start = t * cfg.hop;
        for (b, (s, w)) in buf.iter_mut().zip(x[start..start + cfg.n_fft].iter().zip(&win)) {
            *b = Complex64::new(s * w, 0.0);
        }
        fft.process(&mut buf);
        for k in 0..bins {
            values[k * frames + t] = buf[k];
        }
    }
    let frame_times = (0..frames)
        .map(|t| (t * cfg.hop) as f64 / cfg.sample_rate as f64)
        .collect();
    Ok(ComplexSpectrogram {
        values,
        bins,
        frames,
        frame_times,
    })
}
