//! Dataset manifest.
//!
//! Line-oriented, tab-separated text:
//!
//! ```text
//! #scheme: health
//! # id	image	audio	label
//! h0001	images/h0001.png	audio/h0001.wav	healthy
//! h0002	-	audio/h0002.wav	missing_queen
//! ```
//!
//! Lines starting with `#` are comments except the `#scheme:` header, which
//! selects how labels are read (`health` or `bee_presence`, default
//! `health`). `-` marks a missing modality. Relative paths resolve against
//! the manifest's directory.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::labels::LabelScheme;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub id: String,
    pub image: Option<PathBuf>,
    pub audio: Option<PathBuf>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    scheme: LabelScheme,
    entries: Vec<ManifestEntry>,
    root: PathBuf,
}

impl DatasetManifest {
    pub fn new(scheme: LabelScheme, entries: Vec<ManifestEntry>, root: impl Into<PathBuf>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if e.id.is_empty() || e.id.contains(char::is_whitespace) {
                return Err(Error::Validation(format!("invalid sample id '{}'", e.id)));
            }
            if !seen.insert(e.id.as_str()) {
                return Err(Error::Validation(format!("duplicate sample id '{}'", e.id)));
            }
            if e.image.is_none() && e.audio.is_none() {
                return Err(Error::Validation(format!("entry '{}' has no modality", e.id)));
            }
            if e.label >= scheme.n_classes() {
                return Err(Error::Validation(format!("entry '{}' has label {} out of range", e.id, e.label)));
            }
        }
        Ok(Self {
            scheme,
            entries,
            root: root.into(),
        })
    }

    pub fn parse(text: &str, root: impl Into<PathBuf>) -> Result<Self> {
        let mut scheme = LabelScheme::Health;
        let mut rows = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if let Some(rest) = line.strip_prefix("#scheme:") {
                scheme = LabelScheme::parse(rest.trim()).map_err(|e| Error::Parse {
                    line: i + 1,
                    msg: e.to_string(),
                })?;
                continue;
            }
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split('\t').map(str::trim).collect();
            if f.len() != 4 {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected 4 tab-separated fields, found {}", f.len()),
                });
            }
            rows.push((i + 1, f[0].to_string(), f[1].to_string(), f[2].to_string(), f[3].to_string()));
        }
        let mut entries = Vec::with_capacity(rows.len());
        for (line, id, image, audio, label) in rows {
            let path = |s: String| (s != "-").then(|| PathBuf::from(s));
            let label = scheme.parse_label(&label).map_err(|e| Error::Parse {
                line,
                msg: e.to_string(),
            })?;
            entries.push(ManifestEntry {
                id,
                image: path(image),
                audio: path(audio),
                label,
            });
        }
        Self::new(scheme, entries, root)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, root)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("#scheme: {}\n# id\timage\taudio\tlabel\n", self.scheme.name());
        let show = |p: &Option<PathBuf>| p.as_ref().map_or("-".to_string(), |p| p.display().to_string());
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}",
                e.id,
                show(&e.image),
                show(&e.audio),
                self.scheme.class_names()[e.label]
            );
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn scheme(&self) -> LabelScheme {
        self.scheme
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.id.as_str()).collect()
    }

    pub fn entry(&self, id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    /// Entries in the order of `ids`. Unknown ids are a validation error.
    pub fn select(&self, ids: &[String]) -> Result<Vec<&ManifestEntry>> {
        let index: BTreeMap<&str, &ManifestEntry> = self.entries.iter().map(|e| (e.id.as_str(), e)).collect();
        ids.iter()
            .map(|id| {
                index
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::Validation(format!("unknown sample id '{id}'")))
            })
            .collect()
    }

    /// Tally per label index, length `n_classes`.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.scheme.n_classes()];
        for e in &self.entries {
            c[e.label] += 1;
        }
        c
    }

    /// Keeps entries that have the given modality.
    pub fn with_modality(&self, image: bool, audio: bool) -> Self {
        Self {
            scheme: self.scheme,
            entries: self
                .entries
                .iter()
                .filter(|e| (!image || e.image.is_some()) && (!audio || e.audio.is_some()))
                .cloned()
                .collect(),
            root: self.root.clone(),
        }
    }
}
