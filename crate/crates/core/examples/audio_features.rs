//! Mel, MFCC, STFT and chroma features of a synthetic hive hum.

use hivesense::dsp::{FeatureExtractor, FeatureKind, PITCH_CLASS_NAMES};
use hivesense::ingest::{AudioClip, TARGET_LEN, TARGET_RATE};

fn main() -> hivesense::Result<()> {
    // 220 Hz fundamental with a weaker octave, 10 s at 44.1 kHz
    let rate = TARGET_RATE as f64;
    let samples = (0..TARGET_LEN)
        .map(|n| {
            let t = n as f64 / rate;
            0.5 * (2.0 * std::f64::consts::PI * 220.0 * t).sin() + 0.2 * (2.0 * std::f64::consts::PI * 440.0 * t).sin()
        })
        .collect();
    let clip = AudioClip::new(samples, TARGET_RATE)?;
    let fx = FeatureExtractor::default();
    for kind in FeatureKind::ALL {
        let m = fx.matrix(&clip, kind)?;
        let v = fx.vector(&clip, kind)?;
        let peak = v.values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap();
        println!("{:<7} {:>4} rows x {} frames, condensed peak at row {peak}", kind.name(), m.rows, m.frames);
    }
    // linear energy per pitch class; the condensed vector is in dB
    let chroma = fx.matrix(&clip, FeatureKind::Chroma)?;
    let means: Vec<f64> = (0..chroma.rows)
        .map(|r| (0..chroma.frames).map(|t| chroma.at(r, t)).sum::<f64>() / chroma.frames as f64)
        .collect();
    let top = means.iter().copied().fold(0.0, f64::max);
    for (name, v) in PITCH_CLASS_NAMES.iter().zip(&means) {
        println!("{name:>2} {}", "#".repeat((v / top * 40.0).round() as usize));
    }
    Ok(())
}
