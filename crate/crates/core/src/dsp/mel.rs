use crate::error::{Error, Result};

/// `2595 · log10(1 + f / 700)`
pub fn hz_to_mel(f: f64) -> Result<f64> {
    if !(f >= 0.0) {
        return Err(Error::Domain(format!("frequency must be nonnegative, got {f}")));
    }
    Ok(2595.0 * (1.0 + f / 700.0).log10())
}

/// Inverse of [`hz_to_mel`].
pub fn mel_to_hz(m: f64) -> Result<f64> {
    if !(m >= 0.0) {
        return Err(Error::Domain(format!("mel value must be nonnegative, got {m}")));
    }
    Ok(700.0 * (10f64.powf(m / 2595.0) - 1.0))
}

/// Triangular filters evenly spaced on the mel axis, evaluated at the
/// one-sided FFT bin frequencies `k · sr / n_fft`. Filters peak at 1.
///
/// Narrow low-frequency filters can fall between bin centers and end up with
/// an all-zero row; their center frequencies still increase strictly.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterBank {
    weights: Vec<f64>,
    n_filters: usize,
    n_bins: usize,
    n_fft: usize,
    sample_rate: u32,
    centers: Vec<f64>,
    f_min: f64,
    f_max: f64,
}

impl MelFilterBank {
    pub fn new(n_filters: usize, n_fft: usize, sample_rate: u32, f_min: f64, f_max: f64) -> Result<Self> {
        if n_filters == 0 || n_fft < 2 {
            return Err(Error::param("filter bank needs filters and n_fft ≥ 2"));
        }
        if !(0.0 <= f_min && f_min < f_max && f_max <= sample_rate as f64 / 2.0) {
            return Err(Error::param(format!(
                "band [{f_min}, {f_max}] Hz must lie within [0, {}] Hz",
                sample_rate as f64 / 2.0
            )));
        }
        let (lo, hi) = (hz_to_mel(f_min)?, hz_to_mel(f_max)?);
        let edges: Vec<f64> = (0..n_filters + 2)
            .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (n_filters + 1) as f64))
            .collect::<Result<_>>()?;
        let n_bins = n_fft / 2 + 1;
        let mut weights = vec![0.0; n_filters * n_bins];
        for m in 0..n_filters {
            let (l, c, r) = (edges[m], edges[m + 1], edges[m + 2]);
            for k in 0..n_bins {
                let f = k as f64 * sample_rate as f64 / n_fft as f64;
                let up = (f - l) / (c - l);
                let down = (r - f) / (r - c);
                weights[m * n_bins + k] = up.min(down).max(0.0);
            }
        }
        Ok(Self {
            weights,
            n_filters,
            n_bins,
            n_fft,
            sample_rate,
            centers: edges[1..=n_filters].to_vec(),
            f_min,
            f_max,
        })
    }

    /// Bank over 0 Hz – Nyquist.
    pub fn full_band(n_filters: usize, n_fft: usize, sample_rate: u32) -> Result<Self> {
        Self::new(n_filters, n_fft, sample_rate, 0.0, sample_rate as f64 / 2.0)
    }

    /// Arbitrary nonnegative weights, `n_filters × (n_fft/2 + 1)` row-major.
    pub fn from_weights(weights: Vec<f64>, n_filters: usize, n_fft: usize, sample_rate: u32) -> Result<Self> {
        let n_bins = n_fft / 2 + 1;
        if n_filters == 0 || weights.len() != n_filters * n_bins {
            return Err(Error::shape(format!(
                "{} weights for {n_filters} filters × {n_bins} bins",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::param("filter weights must be nonnegative"));
        }
        Ok(Self {
            weights,
            n_filters,
            n_bins,
            n_fft,
            sample_rate,
            centers: Vec::new(),
            f_min: 0.0,
            f_max: sample_rate as f64 / 2.0,
        })
    }

    pub fn n_filters(&self) -> usize {
        self.n_filters
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.weights[m * self.n_bins..(m + 1) * self.n_bins]
    }

    /// Filter peak frequencies in Hz (empty for banks built from raw weights).
    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn band(&self) -> (f64, f64) {
        (self.f_min, self.f_max)
    }

    /// Filter energies for one power spectrum.
    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        (0..self.n_filters)
            .map(|m| self.row(m).iter().zip(power).map(|(w, p)| w * p).sum())
            .collect()
    }
}
