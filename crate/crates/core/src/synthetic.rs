//! Procedural datasets: the bundled on-disk fixture and in-memory
//! complementary-signal data for fusion experiments.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ingest::{write_wav_pcm, AudioClip, BBoxAnnotation, DatasetManifest, ImageSample, LabelScheme, ManifestEntry};
use crate::models::{AUDIO_INPUT, IMAGE_INPUT};
use crate::nn::{Dataset, Tensor};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureConfig {
    /// Health samples per class.
    pub per_class: usize,
    /// Bee-presence clips (half with bees).
    pub bee_clips: usize,
    pub image_size: usize,
    pub audio_rate: u32,
    pub audio_seconds: f64,
    pub seed: u64,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        Self {
            per_class: 6,
            bee_clips: 24,
            image_size: 16,
            audio_rate: 8000,
            audio_seconds: 1.0,
            seed: 7,
        }
    }
}

const BEE_COLORS: [[f64; 3]; 4] = [[0.95, 0.8, 0.15], [0.55, 0.1, 0.1], [0.2, 0.55, 0.95], [0.3, 0.9, 0.3]];
const HEALTH_PITCH: [f64; 4] = [200.0, 290.0, 410.0, 580.0];

fn health_image(rng: &mut SplitMix64, size: usize, class: usize) -> (ImageSample, BBoxAnnotation) {
    let side = (size / 3).max(2);
    let r0 = rng.below(size - side + 1);
    let c0 = rng.below(size - side + 1);
    let mut px = Vec::with_capacity(size * size * 3);
    for r in 0..size {
        for c in 0..size {
            let inside = (r0..r0 + side).contains(&r) && (c0..c0 + side).contains(&c);
            for ch in 0..3 {
                let base = if inside { BEE_COLORS[class][ch] } else { 0.35 };
                px.push((base + 0.05 * rng.normal()).clamp(0.0, 1.0));
            }
        }
    }
    let s = size as f64;
    let bbox = BBoxAnnotation {
        class_id: 0,
        cx: (c0 as f64 + side as f64 / 2.0) / s,
        cy: (r0 as f64 + side as f64 / 2.0) / s,
        w: side as f64 / s,
        h: side as f64 / s,
    };
    (ImageSample::new(px, size, size, "synthetic").expect("valid pixels"), bbox)
}

fn tone(rng: &mut SplitMix64, rate: u32, seconds: f64, f0: f64, harmonics: usize, noise: f64) -> Vec<f64> {
    let n = (rate as f64 * seconds).round() as usize;
    let phase = rng.uniform(0.0, TAU);
    (0..n)
        .map(|i| {
            let t = i as f64 / rate as f64;
            let mut v = 0.0;
            for h in 1..=harmonics {
                v += (TAU * f0 * h as f64 * t + phase).sin() / h as f64;
            }
            (0.4 * v + noise * rng.normal()).clamp(-1.0, 1.0)
        })
        .collect()
}

fn bee_clip(rng: &mut SplitMix64, rate: u32, seconds: f64, bee: bool) -> Vec<f64> {
    if bee {
        let f0 = rng.uniform(220.0, 260.0);
        let mut v = tone(rng, rate, seconds, f0, 4, 0.03);
        for (i, s) in v.iter_mut().enumerate() {
            *s *= 0.8 + 0.2 * (TAU * 6.0 * i as f64 / rate as f64).sin();
        }
        v
    } else {
        let f = rng.uniform(1500.0, 3000.0);
        let n = (rate as f64 * seconds).round() as usize;
        (0..n)
            .map(|i| (0.15 * (TAU * f * i as f64 / rate as f64).sin() + 0.2 * rng.normal()).clamp(-1.0, 1.0))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct FixtureSummary {
    pub health: DatasetManifest,
    pub bee: DatasetManifest,
}

/// Writes `manifest` (health, image + audio), `manifest_bee` (bee
/// presence, audio only), `images/`, `audio/`, `labels/` (one YOLO box per
/// image) and `predictions/` (jittered boxes with confidences plus some false
/// positives) under `dir`.
pub fn write_fixture(dir: &Path, cfg: &FixtureConfig) -> Result<FixtureSummary> {
    if cfg.per_class == 0 || cfg.image_size < 4 || cfg.audio_rate < 2000 || cfg.audio_seconds <= 0.0 {
        return Err(Error::param(format!("invalid fixture config {cfg:?}")));
    }
    for sub in ["images", "audio", "labels", "predictions"] {
        let p = dir.join(sub);
        std::fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
    }
    let root = SplitMix64::new(cfg.seed);
    let mut health = Vec::new();
    for i in 0..4 * cfg.per_class {
        let class = i % 4;
        let id = format!("h{i:03}");
        let mut rng = root.fork(i as u64);
        let (img, bbox) = health_image(&mut rng, cfg.image_size, class);
        img.save_png(&dir.join("images").join(format!("{id}.png")))?;
        write_text(&dir.join("labels").join(format!("{id}.txt")), &format!("{}\n", bbox.to_line()))?;
        let mut preds = String::new();
        let j = |rng: &mut SplitMix64| 0.02 * rng.normal();
        let p = BBoxAnnotation {
            cx: (bbox.cx + j(&mut rng)).clamp(0.0, 1.0),
            cy: (bbox.cy + j(&mut rng)).clamp(0.0, 1.0),
            ..bbox
        };
        let _ = writeln!(preds, "{} {:.4}", p.to_line(), rng.uniform(0.6, 0.99));
        if i % 4 == 3 {
            let fp = BBoxAnnotation { cx: 0.5, cy: 0.5, w: 0.1, h: 0.1, class_id: 0 };
            let _ = writeln!(preds, "{} {:.4}", fp.to_line(), rng.uniform(0.05, 0.5));
        }
        write_text(&dir.join("predictions").join(format!("{id}.txt")), &preds)?;
        let samples = tone(&mut rng, cfg.audio_rate, cfg.audio_seconds, HEALTH_PITCH[class], 3, 0.03);
        write_wav_pcm(&dir.join("audio").join(format!("{id}.wav")), &AudioClip::new(samples, cfg.audio_rate)?, 8)?;
        health.push(ManifestEntry {
            id: id.clone(),
            image: Some(format!("images/{id}.png").into()),
            audio: Some(format!("audio/{id}.wav").into()),
            label: class,
        });
    }
    let mut bee = Vec::new();
    for i in 0..cfg.bee_clips {
        let id = format!("b{i:03}");
        let is_bee = i % 2 == 1;
        let mut rng = root.fork(10_000 + i as u64);
        let samples = bee_clip(&mut rng, cfg.audio_rate, cfg.audio_seconds, is_bee);
        write_wav_pcm(&dir.join("audio").join(format!("{id}.wav")), &AudioClip::new(samples, cfg.audio_rate)?, 8)?;
        bee.push(ManifestEntry {
            id: id.clone(),
            image: None,
            audio: Some(format!("audio/{id}.wav").into()),
            label: is_bee as usize,
        });
    }
    let health = DatasetManifest::new(LabelScheme::Health, health, dir)?;
    let bee = DatasetManifest::new(LabelScheme::BeePresence, bee, dir)?;
    health.save(&dir.join("manifest"))?;
    bee.save(&dir.join("manifest_bee"))?;
    Ok(FixtureSummary { health, bee })
}

fn write_text(p: &Path, s: &str) -> Result<()> {
    std::fs::write(p, s).map_err(|e| Error::io(p, e))
}

/// Four classes where the image separates classes 2 and 3 from each other
/// and from {0, 1}, and the audio grid separates 0 and 1 from each other and
/// from {2, 3}. Either modality alone tops out at 75% accuracy.
///
/// Inputs: `image` `[3, S, S]` with a bright 3×3 blob whose quadrant carries
/// the signal (2 top-left, 3 bottom-right, 0 and 1 either of the other two),
/// `audio` `[1, T, T]` with a horizontal band in the top half (class 0) or
/// bottom half (class 1), or a vertical band (classes 2 and 3). Both get
/// additive Gaussian noise of the given scale. Sides must be even and ≥ 8.
pub fn complementary_dataset(n: usize, image_size: usize, audio_size: usize, noise: f64, seed: u64) -> Result<Dataset> {
    let ok = |side: usize| side >= 8 && side % 2 == 0;
    if n == 0 || !ok(image_size) || !ok(audio_size) {
        return Err(Error::param("complementary dataset needs n ≥ 1 and even sides ≥ 8"));
    }
    let (s, t) = (image_size, audio_size);
    let mut img = vec![0.0; n * 3 * s * s];
    let mut aud = vec![0.0; n * t * t];
    let mut labels = Vec::with_capacity(n);
    let root = SplitMix64::new(seed);
    for i in 0..n {
        let mut rng = root.fork(i as u64);
        let class = i % 4;
        labels.push(class);
        // quadrant: 0 top-left, 1 top-right, 2 bottom-left, 3 bottom-right
        let quad = match class {
            2 => 0,
            3 => 3,
            _ => [1, 2][rng.below(2)],
        };
        let half = s / 2;
        let r0 = (quad / 2) * half + rng.below(half - 2);
        let c0 = (quad % 2) * half + rng.below(half - 2);
        let im = &mut img[i * 3 * s * s..(i + 1) * 3 * s * s];
        for ch in 0..3 {
            for r in r0..r0 + 3 {
                for c in c0..c0 + 3 {
                    im[ch * s * s + r * s + c] = 1.0;
                }
            }
        }
        for v in im.iter_mut() {
            *v += noise * rng.normal();
        }
        let au = &mut aud[i * t * t..(i + 1) * t * t];
        let half = t / 2;
        match class {
            0 | 1 => {
                let row = class * half + 1 + rng.below(half - 2);
                au[row * t..(row + 1) * t].fill(1.0);
            }
            _ => {
                let col = 1 + rng.below(t - 2);
                for r in 0..t {
                    au[r * t + col] = 1.0;
                }
            }
        }
        for v in au.iter_mut() {
            *v += noise * rng.normal();
        }
    }
    Dataset::new(
        vec![
            (IMAGE_INPUT.to_string(), Tensor::new(vec![n, 3, s, s], img)?),
            (AUDIO_INPUT.to_string(), Tensor::new(vec![n, 1, t, t], aud)?),
        ],
        labels,
        4,
    )
}
