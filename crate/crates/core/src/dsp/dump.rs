//! Feature records on disk.
//!
//! ```text
//! magic      8 bytes  "HIVEFEAT"
//! version    u32 LE   1
//! kind_len   u32 LE, kind (UTF-8: "mel" | "mfcc" | "stft" | "chroma")
//! form       u8       0 = matrix, 1 = condensed vector
//! axis       u8       0 = Hz, 1 = mel, 2 = cepstral, 3 = pitch class
//! rows       u32 LE
//! cols       u32 LE   (frames; 1 for vectors)
//! frame_step f64 LE   seconds between frame starts (0 for vectors)
//! values     rows × cols f64 LE, row-major
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::features::{BinAxis, FeatureKind, FeatureMatrix, FeatureVector};
use crate::error::{Error, Result};

pub const FEATURE_MAGIC: &[u8; 8] = b"HIVEFEAT";
pub const FEATURE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureRecord {
    Matrix { kind: FeatureKind, matrix: FeatureMatrix },
    Vector(FeatureVector),
}

fn axis_code(a: BinAxis) -> u8 {
    match a {
        BinAxis::Hz => 0,
        BinAxis::Mel => 1,
        BinAxis::Cepstral => 2,
        BinAxis::PitchClass => 3,
    }
}

fn axis_from(c: u8) -> Result<BinAxis> {
    Ok(match c {
        0 => BinAxis::Hz,
        1 => BinAxis::Mel,
        2 => BinAxis::Cepstral,
        3 => BinAxis::PitchClass,
        _ => return Err(Error::Format(format!("unknown axis code {c}"))),
    })
}

fn default_axis(kind: FeatureKind) -> BinAxis {
    match kind {
        FeatureKind::Mel => BinAxis::Mel,
        FeatureKind::Mfcc => BinAxis::Cepstral,
        FeatureKind::Stft => BinAxis::Hz,
        FeatureKind::Chroma => BinAxis::PitchClass,
    }
}

fn io(e: std::io::Error) -> Error {
    Error::Format(format!("feature stream: {e}"))
}

pub fn write_record<W: Write>(rec: &FeatureRecord, mut w: W) -> Result<()> {
    let (kind, form, axis, rows, cols, step, values) = match rec {
        FeatureRecord::Matrix { kind, matrix } => {
            let step = if matrix.frame_times.len() > 1 {
                matrix.frame_times[1] - matrix.frame_times[0]
            } else {
                0.0
            };
            (*kind, 0u8, matrix.bin_axis, matrix.rows, matrix.frames, step, &matrix.values)
        }
        FeatureRecord::Vector(v) => (v.kind, 1u8, default_axis(v.kind), v.values.len(), 1, 0.0, &v.values),
    };
    let name = kind.name().as_bytes();
    w.write_all(FEATURE_MAGIC).map_err(io)?;
    w.write_all(&FEATURE_VERSION.to_le_bytes()).map_err(io)?;
    w.write_all(&(name.len() as u32).to_le_bytes()).map_err(io)?;
    w.write_all(name).map_err(io)?;
    w.write_all(&[form, axis_code(axis)]).map_err(io)?;
    w.write_all(&(rows as u32).to_le_bytes()).map_err(io)?;
    w.write_all(&(cols as u32).to_le_bytes()).map_err(io)?;
    w.write_all(&step.to_le_bytes()).map_err(io)?;
    for v in values {
        w.write_all(&v.to_le_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_record<R: Read>(mut r: R) -> Result<FeatureRecord> {
    let mut b8 = [0u8; 8];
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b8).map_err(io)?;
    if &b8 != FEATURE_MAGIC {
        return Err(Error::Format("not a feature record".into()));
    }
    r.read_exact(&mut b4).map_err(io)?;
    let version = u32::from_le_bytes(b4);
    if version != FEATURE_VERSION {
        return Err(Error::Version(format!("feature record version {version}")));
    }
    r.read_exact(&mut b4).map_err(io)?;
    let mut name = vec![0u8; u32::from_le_bytes(b4) as usize];
    r.read_exact(&mut name).map_err(io)?;
    let kind: FeatureKind = String::from_utf8(name).map_err(|e| Error::Format(e.to_string()))?.parse()?;
    let mut fa = [0u8; 2];
    r.read_exact(&mut fa).map_err(io)?;
    r.read_exact(&mut b4).map_err(io)?;
    let rows = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b4).map_err(io)?;
    let cols = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8).map_err(io)?;
    let step = f64::from_le_bytes(b8);
    let mut raw = vec![0u8; rows * cols * 8];
    r.read_exact(&mut raw).map_err(io)?;
    let values: Vec<f64> = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    match fa[0] {
        0 => {
            let mut matrix = FeatureMatrix::new(values, rows, cols, axis_from(fa[1])?)?;
            matrix.frame_times = (0..cols).map(|t| t as f64 * step).collect();
            Ok(FeatureRecord::Matrix { kind, matrix })
        }
        1 => Ok(FeatureRecord::Vector(FeatureVector { values, kind })),
        f => Err(Error::Format(format!("unknown record form {f}"))),
    }
}

pub fn save_record(rec: &FeatureRecord, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_record(rec, std::io::BufWriter::new(f))
}

pub fn load_record(path: &Path) -> Result<FeatureRecord> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_record(std::io::BufReader::new(f))
}
