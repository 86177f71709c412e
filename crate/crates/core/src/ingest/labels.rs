use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HealthLabel {
    Healthy = 0,
    AntInfestation = 1,
    MissingQueen = 2,
    PesticideExposure = 3,
}

impl HealthLabel {
    pub const ALL: [HealthLabel; 4] = [
        HealthLabel::Healthy,
        HealthLabel::AntInfestation,
        HealthLabel::MissingQueen,
        HealthLabel::PesticideExposure,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            HealthLabel::Healthy => "healthy",
            HealthLabel::AntInfestation => "ant_infestation",
            HealthLabel::MissingQueen => "missing_queen",
            HealthLabel::PesticideExposure => "pesticide_exposure",
        }
    }
}

impl fmt::Display for HealthLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How manifest labels are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelScheme {
    /// Four hive-health states.
    Health,
    /// Bee sound present or absent (`nobee` = 0, `bee` = 1).
    BeePresence,
}

impl LabelScheme {
    pub fn class_names(self) -> &'static [&'static str] {
        match self {
            LabelScheme::Health => &["healthy", "ant_infestation", "missing_queen", "pesticide_exposure"],
            LabelScheme::BeePresence => &["nobee", "bee"],
        }
    }

    pub fn n_classes(self) -> usize {
        self.class_names().len()
    }

    pub fn parse_label(self, s: &str) -> Result<usize> {
        self.class_names()
            .iter()
            .position(|n| *n == s)
            .ok_or_else(|| Error::param(format!("label '{s}' is not one of {:?}", self.class_names())))
    }

    pub fn name(self) -> &'static str {
        match self {
            LabelScheme::Health => "health",
            LabelScheme::BeePresence => "bee_presence",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "health" => Ok(LabelScheme::Health),
            "bee_presence" => Ok(LabelScheme::BeePresence),
            _ => Err(Error::param(format!("unknown label scheme '{s}'"))),
        }
    }
}
