//! Model Agent and repair prompts.
//!
//! Templates are stored verbatim. Only the named placeholders (`{nlp}`,
//! `{model_text}`, `{code_text}`, `{error_message}`) are substituted, in a
//! single left-to-right pass: substituted text is never rescanned and any
//! other brace sequence, such as `{{ij}}`, is copied through untouched.
//!
//! Ablation variants are literal edits of the canonical model prompt. The
//! understanding section runs from its heading up to the formulation heading;
//! the formulation section runs from its heading up to the code heading.

use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problem::ProblemInstance;

pub const MODEL_AGENT_TEMPLATE: &str = include_str!("../prompts/model_agent.txt");
pub const REPAIR_TEMPLATE: &str = include_str!("../prompts/repair.txt");
pub const UNDERSTANDING_PLAIN: &str = include_str!("../prompts/understanding_plain.txt");
pub const FORMULATION_PLAIN: &str = include_str!("../prompts/formulation_plain.txt");

pub const UNDERSTANDING_HEADING: &str = "1. Understanding the Problem";
pub const FORMULATION_HEADING: &str = "2. Building the Mathematical Model (Step by Step)";
pub const CODE_HEADING: &str = "3. Gurobipy Python Code";

/// Blank lines that separate numbered sections in the canonical template.
const SECTION_GAP: &str = "\n\n\n";

/// Written into the repair prompt when the model agent produced no model.
pub const MISSING_MODEL_NOTE: &str = "(no mathematical model was produced)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Understanding {
    #[default]
    Full,
    Plain,
    Removed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    #[default]
    Expert,
    Plain,
}

impl Understanding {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::Plain => "plain",
            Self::Removed => "removed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "full" => Some(Self::Full),
            "plain" => Some(Self::Plain),
            "removed" => Some(Self::Removed),
            _ => None,
        }
    }
}

impl Formulation {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Expert => "expert",
            Self::Plain => "plain",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "expert" => Some(Self::Expert),
            "plain" => Some(Self::Plain),
            _ => None,
        }
    }
}

/// Which edits to apply to the canonical model prompt. The default,
/// `(Full, Expert)`, is the unmodified prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct PromptVariant {
    pub understanding: Understanding,
    pub formulation: Formulation,
}

impl PromptVariant {
    pub const CANONICAL: PromptVariant = PromptVariant {
        understanding: Understanding::Full,
        formulation: Formulation::Expert,
    };

    pub fn new(understanding: Understanding, formulation: Formulation) -> Self {
        Self {
            understanding,
            formulation,
        }
    }

    pub fn is_canonical(&self) -> bool {
        *self == Self::CANONICAL
    }

    /// `understanding-formulation`, e.g. `full-expert`.
    pub fn label(&self) -> String {
        alloc::format!("{}-{}", self.understanding.as_str(), self.formulation.as_str())
    }

    pub fn from_label(label: &str) -> Option<Self> {
        let (u, f) = label.split_once('-')?;
        Some(Self::new(Understanding::parse(u)?, Formulation::parse(f)?))
    }

    pub fn all() -> impl Iterator<Item = PromptVariant> {
        [Understanding::Full, Understanding::Plain, Understanding::Removed]
            .into_iter()
            .flat_map(|u| [Formulation::Expert, Formulation::Plain].map(|f| Self::new(u, f)))
    }
}

impl fmt::Display for PromptVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("{template} template is missing `{needle}`")]
    Missing {
        template: &'static str,
        needle: &'static str,
    },
    #[error("model template sections are out of order")]
    SectionOrder,
}

/// The four prompt texts. [`Default`] gives the stock templates; other sets
/// must pass [`PromptTemplates::new`] validation so variant edits always
/// find their anchors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplates {
    model: String,
    repair: String,
    understanding_plain: String,
    formulation_plain: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        Self {
            model: MODEL_AGENT_TEMPLATE.into(),
            repair: REPAIR_TEMPLATE.into(),
            understanding_plain: UNDERSTANDING_PLAIN.into(),
            formulation_plain: FORMULATION_PLAIN.into(),
        }
    }
}

impl PromptTemplates {
    pub fn new(
        model: String,
        repair: String,
        understanding_plain: String,
        formulation_plain: String,
    ) -> Result<Self, TemplateError> {
        let need = |template: &'static str, text: &str, needle: &'static str| {
            if text.contains(needle) {
                Ok(())
            } else {
                Err(TemplateError::Missing { template, needle })
            }
        };
        need("model", &model, "{nlp}")?;
        need("model", &model, UNDERSTANDING_HEADING)?;
        need("model", &model, FORMULATION_HEADING)?;
        need("model", &model, CODE_HEADING)?;
        for p in ["{nlp}", "{model_text}", "{code_text}", "{error_message}"] {
            need("repair", &repair, p)?;
        }
        let u = model.find(UNDERSTANDING_HEADING).unwrap_or_default();
        let f = model.find(FORMULATION_HEADING).unwrap_or_default();
        let c = model.find(CODE_HEADING).unwrap_or_default();
        if !(u < f && f < c) {
            return Err(TemplateError::SectionOrder);
        }
        Ok(Self {
            model,
            repair,
            understanding_plain,
            formulation_plain,
        })
    }

    pub fn model_template(&self) -> &str {
        &self.model
    }

    pub fn repair_template(&self) -> &str {
        &self.repair
    }

    pub fn understanding_plain(&self) -> &str {
        &self.understanding_plain
    }

    pub fn formulation_plain(&self) -> &str {
        &self.formulation_plain
    }

    /// The model template with the variant's section edits applied, before
    /// `{nlp}` substitution.
    pub fn model_template_for(&self, variant: PromptVariant) -> String {
        let t = self.model.as_str();
        let u = t.find(UNDERSTANDING_HEADING).expect("validated template");
        let f = t.find(FORMULATION_HEADING).expect("validated template");
        let c = t.find(CODE_HEADING).expect("validated template");

        let mut out = String::with_capacity(t.len());
        out.push_str(&t[..u]);
        match variant.understanding {
            Understanding::Full => out.push_str(&t[u..f]),
            Understanding::Plain => {
                out.push_str(&self.understanding_plain);
                out.push_str(SECTION_GAP);
            }
            Understanding::Removed => {}
        }
        match variant.formulation {
            Formulation::Expert => out.push_str(&t[f..c]),
            Formulation::Plain => {
                out.push_str(&self.formulation_plain);
                out.push_str(SECTION_GAP);
            }
        }
        out.push_str(&t[c..]);
        out
    }

    pub fn build_model_prompt(&self, problem: &ProblemInstance, variant: PromptVariant) -> String {
        render(&self.model_template_for(variant), &[("nlp", &problem.description)])
    }

    pub fn build_repair_prompt(
        &self,
        problem: &ProblemInstance,
        model_text: &str,
        code_text: &str,
        error_message: &str,
    ) -> String {
        let model_text = if model_text.trim().is_empty() {
            MISSING_MODEL_NOTE
        } else {
            model_text
        };
        render(
            &self.repair,
            &[
                ("nlp", &problem.description),
                ("model_text", model_text),
                ("code_text", code_text),
                ("error_message", error_message),
            ],
        )
    }
}

pub fn build_model_prompt(problem: &ProblemInstance, variant: PromptVariant) -> String {
    PromptTemplates::default().build_model_prompt(problem, variant)
}

pub fn build_repair_prompt(
    problem: &ProblemInstance,
    model_text: &str,
    code_text: &str,
    error_message: &str,
) -> String {
    PromptTemplates::default().build_repair_prompt(problem, model_text, code_text, error_message)
}

/// Single-pass `{name}` substitution over the known names only.
pub fn render(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + values.iter().map(|(_, v)| v.len()).sum::<usize>());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open + 1..];
        let hit = values.iter().find_map(|(name, value)| {
            tail.strip_prefix(name)
                .and_then(|t| t.strip_prefix('}'))
                .map(|after| (value, after))
        });
        match hit {
            Some((value, after)) => {
                out.push_str(value);
                rest = after;
            }
            None => {
                out.push('{');
                rest = tail;
            }
        }
    }
    out.push_str(rest);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn problem(desc: &str) -> ProblemInstance {
        ProblemInstance::new("p", desc)
    }

    #[test]
    fn canonical_prompt_keeps_all_headings() {
        let p = build_model_prompt(&problem("ship goods"), PromptVariant::CANONICAL);
        for h in [UNDERSTANDING_HEADING, FORMULATION_HEADING, CODE_HEADING] {
            assert!(p.contains(h), "{h}");
        }
        assert!(p.starts_with("You are an expert in optimization modeling"));
        assert!(p.contains("```text\nship goods\n```"));
        assert!(p.contains("$x_{{ij}} \\ge 0$"));
        assert!(!p.contains("{nlp}"));
    }

    #[test]
    fn removed_understanding_drops_only_section_one() {
        let p = build_model_prompt(
            &problem("d"),
            PromptVariant::new(Understanding::Removed, Formulation::Expert),
        );
        assert!(!p.contains(UNDERSTANDING_HEADING));
        assert!(p.contains(FORMULATION_HEADING));
        assert!(p.contains(CODE_HEADING));
    }

    #[test]
    fn plain_variants_use_replacement_text() {
        let p = build_model_prompt(
            &problem("d"),
            PromptVariant::new(Understanding::Plain, Formulation::Plain),
        );
        assert!(p.contains("From an optimization perspective, what is your understanding"));
        assert!(p.contains("Please define the mathematical model."));
        assert!(!p.contains("Core Optimization Objective"));
        assert!(!p.contains("Objective Function Construction"));
    }

    #[test]
    fn braces_in_description_are_verbatim() {
        let p = build_model_prompt(&problem("sets {a} and {nlp} and {"), PromptVariant::CANONICAL);
        assert!(p.contains("sets {a} and {nlp} and {"));
    }

    #[test]
    fn repair_prompt_substitutes_each_placeholder_once() {
        let p = build_repair_prompt(&problem("DESC-1"), "MODEL-2", "CODE-3", "ERR-4 ```boom```");
        assert!(p.contains("Enclose the corrected code within"));
        for (marker, fence) in [
            ("DESC-1", "```text\n"),
            ("MODEL-2", "```model\n"),
            ("CODE-3", "```code\n"),
            ("ERR-4 ```boom```", "```text\n"),
        ] {
            assert_eq!(p.matches(marker).count(), 1, "{marker}");
            let at = p.find(marker).unwrap();
            assert!(p[..at].ends_with(fence), "{marker}");
        }
        let order: Vec<usize> = ["DESC-1", "MODEL-2", "CODE-3", "ERR-4"]
            .iter()
            .map(|m| p.find(m).unwrap())
            .collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn empty_model_gets_sentinel() {
        let p = build_repair_prompt(&problem("d"), "  ", "c", "e");
        assert!(p.contains(MISSING_MODEL_NOTE));
    }

    #[test]
    fn labels_round_trip() {
        let all: Vec<_> = PromptVariant::all().collect();
        assert_eq!(all.len(), 6);
        for v in all {
            assert_eq!(PromptVariant::from_label(&v.label()), Some(v));
        }
        assert_eq!(PromptVariant::CANONICAL.label(), "full-expert");
    }

    #[test]
    fn override_templates_are_validated() {
        let bad = PromptTemplates::new(
            "no placeholders".into(),
            REPAIR_TEMPLATE.into(),
            String::new(),
            String::new(),
        );
        assert!(matches!(bad, Err(TemplateError::Missing { template: "model", .. })));
        let ok = PromptTemplates::new(
            MODEL_AGENT_TEMPLATE.into(),
            REPAIR_TEMPLATE.into(),
            UNDERSTANDING_PLAIN.into(),
            FORMULATION_PLAIN.into(),
        )
        .unwrap();
        assert_eq!(ok, PromptTemplates::default());
    }

    #[test]
    fn render_is_single_pass() {
        assert_eq!(render("{a}{b}", &[("a", "{b}"), ("b", "x")]), "{b}x");
        assert_eq!(render("{{a}}", &[("a", "x")]), "{x}");
        assert_eq!(render("{", &[("a", "x")]), "{");
    }
}
