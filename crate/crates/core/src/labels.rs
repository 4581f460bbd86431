//! Manual failure labels and their error-type by element count matrix.

use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::record::TrialRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    Incorrect,
    Missing,
    Spurious,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Element {
    Variable,
    Objective,
    Constraint,
    Parameter,
    Code,
}

impl LabelKind {
    pub const ALL: [LabelKind; 3] = [Self::Incorrect, Self::Missing, Self::Spurious];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Incorrect => "incorrect",
            Self::Missing => "missing",
            Self::Spurious => "spurious",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str().eq_ignore_ascii_case(s))
    }
}

impl Element {
    pub const ALL: [Element; 5] = [
        Self::Variable,
        Self::Objective,
        Self::Constraint,
        Self::Parameter,
        Self::Code,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Variable => "variable",
            Self::Objective => "objective",
            Self::Constraint => "constraint",
            Self::Parameter => "parameter",
            Self::Code => "code",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for LabelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FailureLabel {
    pub error_type: LabelKind,
    pub element: Element,
    #[serde(default)]
    pub note: String,
}

impl FailureLabel {
    pub fn new(error_type: LabelKind, element: Element, note: impl Into<String>) -> Self {
        Self {
            error_type,
            element,
            note: note.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("trial {0} succeeded; failure labels apply to unsuccessful trials only")]
pub struct LabelOnSuccess(pub String);

/// Counts indexed `[error_type][element]` in `ALL` order, with marginals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelSummary {
    pub counts: [[u64; 5]; 3],
    pub by_error_type: [u64; 3],
    pub by_element: [u64; 5],
    pub total: u64,
}

impl LabelSummary {
    pub fn add(&mut self, label: &FailureLabel) {
        let (k, e) = (label.error_type as usize, label.element as usize);
        self.counts[k][e] += 1;
        self.by_error_type[k] += 1;
        self.by_element[e] += 1;
        self.total += 1;
    }

    pub fn get(&self, kind: LabelKind, element: Element) -> u64 {
        self.counts[kind as usize][element as usize]
    }
}

pub fn summarize_labels<'a>(records: impl IntoIterator<Item = &'a TrialRecord>) -> LabelSummary {
    let mut summary = LabelSummary::default();
    for label in records.into_iter().flat_map(|r| &r.labels) {
        summary.add(label);
    }
    summary
}
