//! Parser for the semi-structured mathematical-model text.
//!
//! A model is laid out as headed sections (`Set:`, `Parameter:`,
//! `Decision variable:`, `Objective:`, `Constraint:`, `Type:`), each holding
//! numbered items whose unnumbered follow-up lines belong to the item above.
//! Headings match case-insensitively, with or without a plural `s`, and may
//! carry markdown decoration such as `**Objective:**` or `### Constraints:`.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SectionKind {
    Set,
    Parameter,
    DecisionVariable,
    Objective,
    Constraint,
    Type,
}

impl SectionKind {
    /// Heading order of the canonical layout.
    pub const ORDER: [SectionKind; 6] = [
        Self::Set,
        Self::Parameter,
        Self::DecisionVariable,
        Self::Objective,
        Self::Constraint,
        Self::Type,
    ];

    fn from_heading_name(name: &str) -> Option<Self> {
        let singular = name.strip_suffix('s').unwrap_or(name);
        match singular {
            "set" => Some(Self::Set),
            "parameter" => Some(Self::Parameter),
            "decision variable" => Some(Self::DecisionVariable),
            "objective" => Some(Self::Objective),
            "constraint" => Some(Self::Constraint),
            "type" => Some(Self::Type),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("model text has no recognized section heading")]
pub struct MalformedModel;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ModelSections {
    /// Lines before the first heading, verbatim.
    pub preamble: Vec<String>,
    pub sets: Vec<String>,
    pub parameters: Vec<String>,
    pub decision_variables: Vec<String>,
    pub objective: Vec<String>,
    pub constraints: Vec<String>,
    pub type_tags: Vec<String>,
    /// Heading lines exactly as written, in order of appearance.
    pub headings: Vec<(SectionKind, String)>,
}

impl ModelSections {
    pub fn section(&self, kind: SectionKind) -> &[String] {
        match kind {
            SectionKind::Set => &self.sets,
            SectionKind::Parameter => &self.parameters,
            SectionKind::DecisionVariable => &self.decision_variables,
            SectionKind::Objective => &self.objective,
            SectionKind::Constraint => &self.constraints,
            SectionKind::Type => &self.type_tags,
        }
    }

    fn section_mut(&mut self, kind: SectionKind) -> &mut Vec<String> {
        match kind {
            SectionKind::Set => &mut self.sets,
            SectionKind::Parameter => &mut self.parameters,
            SectionKind::DecisionVariable => &mut self.decision_variables,
            SectionKind::Objective => &mut self.objective,
            SectionKind::Constraint => &mut self.constraints,
            SectionKind::Type => &mut self.type_tags,
        }
    }

    /// Preamble, then every section in heading order (its heading lines
    /// followed by its item lines). Blank lines are not retained.
    pub fn lines(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.preamble.iter().map(String::as_str).collect();
        for kind in SectionKind::ORDER {
            out.extend(
                self.headings
                    .iter()
                    .filter(|(k, _)| *k == kind)
                    .map(|(_, line)| line.as_str()),
            );
            for item in self.section(kind) {
                out.extend(item.split('\n'));
            }
        }
        out
    }
}

/// Returns the section a line opens, if it is a heading.
pub fn heading_kind(line: &str) -> Option<SectionKind> {
    let t = line.trim().trim_start_matches('#').trim();
    let t = t.trim_matches('*').trim();
    let name = t.strip_suffix(':')?.trim().trim_matches('*').trim();
    if name.is_empty() || name.len() > 24 {
        return None;
    }
    let mut norm = String::with_capacity(name.len());
    for word in name.split_whitespace() {
        if !norm.is_empty() {
            norm.push(' ');
        }
        norm.push_str(&word.to_ascii_lowercase());
    }
    SectionKind::from_heading_name(&norm)
}

/// `1. x`, `2) x`, `- x`, `* x` open a new item.
fn is_item_marker(line: &str) -> bool {
    let t = line.trim_start();
    if t.starts_with("- ") || t.starts_with("* ") || t.starts_with("• ") {
        return true;
    }
    let digits = t.bytes().take_while(u8::is_ascii_digit).count();
    if digits == 0 {
        return false;
    }
    let rest = &t.as_bytes()[digits..];
    matches!(rest.first(), Some(b'.') | Some(b')')) && rest.get(1).is_none_or(|b| b.is_ascii_whitespace())
}

pub fn parse_model_sections(model_text: &str) -> Result<ModelSections, MalformedModel> {
    let mut out = ModelSections::default();
    let mut current: Option<SectionKind> = None;
    // Whether the last item in the current section opened with a marker.
    let mut open_marked = false;

    for line in model_text.lines() {
        if let Some(kind) = heading_kind(line) {
            out.headings.push((kind, line.into()));
            current = Some(kind);
            open_marked = false;
            continue;
        }
        let Some(kind) = current else {
            if !line.trim().is_empty() {
                out.preamble.push(line.into());
            }
            continue;
        };
        if line.trim().is_empty() {
            continue;
        }
        let items = out.section_mut(kind);
        if is_item_marker(line) {
            items.push(line.into());
            open_marked = true;
        } else if open_marked && let Some(last) = items.last_mut() {
            last.push('\n');
            last.push_str(line);
        } else {
            items.push(line.into());
        }
    }

    if out.headings.is_empty() {
        return Err(MalformedModel);
    }
    Ok(out)
}
