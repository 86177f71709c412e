//! Loading audio, images, annotations and manifests; dataset splits.

pub mod audio;
pub mod image;
pub mod labels;
pub mod manifest;
pub mod split;
pub mod yolo;

pub use audio::{decode_wav, fit_length, load_wav, resample_linear, write_wav_i16, write_wav_pcm, AudioClip, TARGET_LEN, TARGET_RATE};
pub use image::{load_image, load_model_image, ImageSample, MODEL_IMAGE_SIZE};
pub use labels::{HealthLabel, LabelScheme};
pub use manifest::{DatasetManifest, ManifestEntry};
pub use split::{make_kfold, make_kfold_with, make_split, FoldAssignment, SplitPlan};
pub use yolo::{parse_yolo_labels, parse_yolo_predictions, BBoxAnnotation, BoxCorners, ScoredBox};
