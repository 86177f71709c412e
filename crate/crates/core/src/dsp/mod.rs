//! Audio features: mel scale, STFT, mel spectrogram, MFCC, chromagram and
//! their condensed `[0, 1]` summaries.

pub mod dump;
pub mod features;
pub mod mel;
pub mod spectral;

pub use dump::{load_record, read_record, save_record, write_record, FeatureRecord};
pub use features::{
    cepstral_coefficients, chromagram, condense, feature_rows, mel_spectrogram, mfcc, pitch_class, power_spectrogram, power_to_db,
    BinAxis, FeatureExtractor, FeatureKind, FeatureMatrix, FeatureVector, LOG_EPS, MEL_BANDS, MFCC_COEFFS,
    MFCC_FILTERS, PITCH_CLASSES, PITCH_CLASS_NAMES,
};
pub use mel::{hz_to_mel, mel_to_hz, MelFilterBank};
pub use spectral::{stft, ComplexSpectrogram, SpectralConfig, Window};
