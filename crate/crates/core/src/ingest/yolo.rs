//! YOLO label text: one object per line, `class cx cy w h`, coordinates
//! normalized to the image size. Prediction files append a confidence.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBoxAnnotation {
    pub class_id: u32,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

/// Axis-aligned box by corners, `x1 < x2`, `y1 < y2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxCorners {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BoxCorners {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self { x1, y1, x2, y2 }
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }
}

impl BBoxAnnotation {
    pub fn new(class_id: u32, cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        let b = Self { class_id, cx, cy, w, h };
        b.check(0)?;
        Ok(b)
    }

    fn check(&self, line: usize) -> Result<()> {
        for (name, v) in [("cx", self.cx), ("cy", self.cy), ("w", self.w), ("h", self.h)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Range {
                    line,
                    msg: format!("{name} = {v} is outside [0, 1]"),
                });
            }
        }
        if self.w == 0.0 || self.h == 0.0 {
            return Err(Error::Range {
                line,
                msg: "box width and height must be positive".into(),
            });
        }
        Ok(())
    }

    /// Pixel corners for an image of `width × height`, clipped to the image.
    pub fn to_corners(&self, width: f64, height: f64) -> BoxCorners {
        let x1 = ((self.cx - self.w / 2.0) * width).clamp(0.0, width);
        let x2 = ((self.cx + self.w / 2.0) * width).clamp(0.0, width);
        let y1 = ((self.cy - self.h / 2.0) * height).clamp(0.0, height);
        let y2 = ((self.cy + self.h / 2.0) * height).clamp(0.0, height);
        BoxCorners { x1, y1, x2, y2 }
    }

    pub fn to_line(&self) -> String {
        format!("{} {:.6} {:.6} {:.6} {:.6}", self.class_id, self.cx, self.cy, self.w, self.h)
    }
}

fn parse_fields(line: &str, lineno: usize, want: usize) -> Result<Vec<f64>> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != want {
        return Err(Error::Parse {
            line: lineno,
            msg: format!("expected {want} fields, found {}", fields.len()),
        });
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line: lineno,
                    msg: format!("'{f}' is not a number"),
                })
        })
        .collect()
}

fn annotation(v: &[f64], lineno: usize) -> Result<BBoxAnnotation> {
    if v[0] < 0.0 || v[0].fract() != 0.0 || v[0] > u32::MAX as f64 {
        return Err(Error::Parse {
            line: lineno,
            msg: format!("class id {} is not a nonnegative integer", v[0]),
        });
    }
    let b = BBoxAnnotation {
        class_id: v[0] as u32,
        cx: v[1],
        cy: v[2],
        w: v[3],
        h: v[4],
    };
    b.check(lineno)?;
    Ok(b)
}

/// Parses ground-truth label text. Blank lines are skipped; line numbers in
/// errors are 1-based.
pub fn parse_yolo_labels(text: &str) -> Result<Vec<BBoxAnnotation>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| annotation(&parse_fields(l, i + 1, 5)?, i + 1))
        .collect()
}

/// A predicted box with its confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredBox {
    pub bbox: BBoxAnnotation,
    pub confidence: f64,
}

/// Parses prediction text: `class cx cy w h confidence` per line.
pub fn parse_yolo_predictions(text: &str) -> Result<Vec<ScoredBox>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let v = parse_fields(l, i + 1, 6)?;
            if !(0.0..=1.0).contains(&v[5]) {
                return Err(Error::Range {
                    line: i + 1,
                    msg: format!("confidence {} is outside [0, 1]", v[5]),
                });
            }
            Ok(ScoredBox {
                bbox: annotation(&v[..5], i + 1)?,
                confidence: v[5],
            })
        })
        .collect()
}
