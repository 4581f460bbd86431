//! Aggregation of trial records into per-group success rates and token
//! averages. Every trial weighs the same: three trials of one problem
//! contribute three fractional observations to their group.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::record::TrialRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupDim {
    Dataset,
    ProblemType,
    ProblemSize,
    Variant,
}

impl GroupDim {
    pub const ALL: [GroupDim; 4] = [Self::Dataset, Self::ProblemType, Self::ProblemSize, Self::Variant];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Dataset => "dataset",
            Self::ProblemType => "problem_type",
            Self::ProblemSize => "problem_size",
            Self::Variant => "variant",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "dataset" => Some(Self::Dataset),
            "problem_type" | "type" => Some(Self::ProblemType),
            "problem_size" | "size" => Some(Self::ProblemSize),
            "variant" => Some(Self::Variant),
            _ => None,
        }
    }

    /// The record's value on this dimension.
    pub fn key_of(self, record: &TrialRecord) -> String {
        match self {
            Self::Dataset => record.dataset.clone(),
            Self::ProblemType => record.problem_type.map_or("unknown", |t| t.as_str()).into(),
            Self::ProblemSize => record.problem_size.map_or("unknown", |s| s.as_str()).into(),
            Self::Variant => record.variant.label(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    /// One entry per dimension in [`GroupDim::ALL`] order; `None` where the
    /// report is not grouped on that dimension.
    pub key: [Option<String>; 4],
    pub trials: u64,
    pub successes: u64,
    pub success_rate: f64,
    pub avg_prompt_tokens: f64,
    pub avg_completion_tokens: f64,
    pub avg_repair_iterations: f64,
    pub total_prompt_tokens: u64,
    pub total_completion_tokens: u64,
}

impl ReportRow {
    pub fn key_for(&self, dim: GroupDim) -> Option<&str> {
        self.key[dim as usize].as_deref()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub group_by: Vec<GroupDim>,
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AggregateError {
    #[error("no trial records to aggregate")]
    EmptyInput,
}

#[derive(Default)]
struct Tally {
    trials: u64,
    successes: u64,
    prompt: u64,
    completion: u64,
    repairs: u64,
}

/// Groups records on `group_by` (order and duplicates are irrelevant) and
/// emits rows ordered lexicographically by key.
pub fn aggregate(records: &[TrialRecord], group_by: &[GroupDim]) -> Result<BenchmarkReport, AggregateError> {
    if records.is_empty() {
        return Err(AggregateError::EmptyInput);
    }
    let dims: Vec<GroupDim> = GroupDim::ALL.into_iter().filter(|d| group_by.contains(d)).collect();

    let mut groups: BTreeMap<[Option<String>; 4], Tally> = BTreeMap::new();
    for r in records {
        let key = GroupDim::ALL.map(|d| dims.contains(&d).then(|| d.key_of(r)));
        let t = groups.entry(key).or_default();
        t.trials += 1;
        t.successes += u64::from(r.success());
        t.prompt += r.usage_total.prompt_tokens;
        t.completion += r.usage_total.completion_tokens;
        t.repairs += u64::from(r.repair_iterations());
    }

    let rows = groups
        .into_iter()
        .map(|(key, t)| {
            let n = t.trials as f64;
            ReportRow {
                key,
                trials: t.trials,
                successes: t.successes,
                success_rate: t.successes as f64 / n,
                avg_prompt_tokens: t.prompt as f64 / n,
                avg_completion_tokens: t.completion as f64 / n,
                avg_repair_iterations: t.repairs as f64 / n,
                total_prompt_tokens: t.prompt,
                total_completion_tokens: t.completion,
            }
        })
        .collect();
    Ok(BenchmarkReport { group_by: dims, rows })
}
