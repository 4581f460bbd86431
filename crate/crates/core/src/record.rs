//! One end-to-end trial and the configuration that produced it.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::artifacts::{Defect, ModelingArtifacts};
use crate::chat::TokenUsage;
use crate::labels::{FailureLabel, LabelOnSuccess};
use crate::problem::{ProblemSize, ProblemType};
use crate::prompt::{Formulation, PromptVariant, Understanding};
use crate::solve::SolveOutcome;
use crate::success::SuccessVerdict;

/// Prompt variant plus whether the Solve Agent may repair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VariantConfig {
    pub prompt: PromptVariant,
    pub repair: bool,
}

impl Default for VariantConfig {
    fn default() -> Self {
        Self::ORTHOUGHT
    }
}

impl VariantConfig {
    pub const ORTHOUGHT: VariantConfig = VariantConfig {
        prompt: PromptVariant::CANONICAL,
        repair: true,
    };

    /// The full pipeline and its four single-component ablations.
    pub fn ablations() -> [VariantConfig; 5] {
        let with = |u, f| VariantConfig {
            prompt: PromptVariant::new(u, f),
            repair: true,
        };
        [
            Self::ORTHOUGHT,
            VariantConfig {
                prompt: PromptVariant::CANONICAL,
                repair: false,
            },
            with(Understanding::Removed, Formulation::Expert),
            with(Understanding::Plain, Formulation::Expert),
            with(Understanding::Full, Formulation::Plain),
        ]
    }

    /// e.g. `full-expert-repair`, `removed-expert-norepair`.
    pub fn label(&self) -> String {
        format!(
            "{}-{}",
            self.prompt.label(),
            if self.repair { "repair" } else { "norepair" }
        )
    }

    pub fn from_label(label: &str) -> Option<Self> {
        let (prompt, repair) = label.rsplit_once('-')?;
        let repair = match repair {
            "repair" => true,
            "norepair" => false,
            _ => return None,
        };
        Some(Self {
            prompt: PromptVariant::from_label(prompt)?,
            repair,
        })
    }

    /// Row name used in text tables: the ablation's conventional name when
    /// it is one, the label otherwise.
    pub fn display_name(&self) -> String {
        let ablation = match (self.prompt.understanding, self.prompt.formulation, self.repair) {
            (Understanding::Full, Formulation::Expert, true) => "ORThought",
            (Understanding::Full, Formulation::Expert, false) => "w/o repair",
            (Understanding::Removed, Formulation::Expert, true) => "w/o understanding",
            (Understanding::Plain, Formulation::Expert, true) => "w/o expert understanding",
            (Understanding::Full, Formulation::Plain, true) => "w/o expert formulation",
            _ => return self.label(),
        };
        ablation.into()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub problem_id: String,
    #[serde(default)]
    pub dataset: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem_type: Option<ProblemType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem_size: Option<ProblemSize>,
    /// 1-based.
    pub trial_index: u32,
    pub variant: VariantConfig,
    pub model: String,
    pub temperature: f64,
    pub artifacts: ModelingArtifacts,
    #[serde(default)]
    pub defects: Vec<Defect>,
    /// Absent when no code could be extracted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<SolveOutcome>,
    /// Absent for problems without ground truth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<SuccessVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_reason: Option<String>,
    pub usage_total: TokenUsage,
    #[serde(default)]
    pub labels: Vec<FailureLabel>,
}

impl TrialRecord {
    pub fn record_id(&self) -> String {
        Self::id_for(&self.problem_id, self.trial_index, &self.variant)
    }

    /// `<problem>.t<trial>.<variant label>`
    pub fn id_for(problem_id: &str, trial_index: u32, variant: &VariantConfig) -> String {
        format!("{problem_id}.t{trial_index}.{}", variant.label())
    }

    pub fn seed_tag(trial_index: u32) -> String {
        format!("t{trial_index}")
    }

    pub fn success(&self) -> bool {
        self.verdict.as_ref().is_some_and(|v| v.success)
    }

    pub fn repair_iterations(&self) -> u32 {
        self.outcome.as_ref().map_or(0, |o| o.repair_iterations)
    }

    pub fn achieved(&self) -> Option<f64> {
        self.outcome.as_ref().and_then(|o| o.achieved)
    }

    /// Labels may only describe failed trials.
    pub fn attach_labels(&mut self, labels: impl IntoIterator<Item = FailureLabel>) -> Result<(), LabelOnSuccess> {
        if self.success() {
            return Err(LabelOnSuccess(self.record_id()));
        }
        self.labels.extend(labels);
        Ok(())
    }
}
