//! Benchmark problems and their ground-truth annotations.

use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Serialize};

/// A natural-language optimization problem, optionally annotated with its
/// verified optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub id: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation: Option<Annotation>,
    #[serde(default)]
    pub dataset: String,
}

impl ProblemInstance {
    pub fn new(id: impl Into<String>, description: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            description: description.into(),
            annotation: None,
            dataset: String::new(),
        }
    }

    pub fn with_annotation(mut self, annotation: Annotation) -> Self {
        self.annotation = Some(annotation);
        self
    }

    pub fn in_dataset(mut self, dataset: impl Into<String>) -> Self {
        self.dataset = dataset.into();
        self
    }
}

/// Problem class as annotated in the dataset manifest.
///
/// Manifests write nonlinear problems as `"NP"`; both spellings parse to
/// [`ProblemType::Nlp`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProblemType {
    #[serde(rename = "LP")]
    Lp,
    #[serde(rename = "ILP")]
    Ilp,
    #[serde(rename = "MILP")]
    Milp,
    #[serde(rename = "NLP", alias = "NP")]
    Nlp,
}

impl ProblemType {
    pub const ALL: [ProblemType; 4] = [Self::Lp, Self::Ilp, Self::Milp, Self::Nlp];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Lp => "LP",
            Self::Ilp => "ILP",
            Self::Milp => "MILP",
            Self::Nlp => "NLP",
        }
    }

    pub fn parse(tag: &str) -> Option<Self> {
        match tag.trim().to_ascii_uppercase().as_str() {
            "LP" => Some(Self::Lp),
            "ILP" | "IP" => Some(Self::Ilp),
            "MILP" | "MIP" => Some(Self::Milp),
            "NLP" | "NP" => Some(Self::Nlp),
            _ => None,
        }
    }
}

impl fmt::Display for ProblemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProblemSize {
    Toy,
    Small,
    Medium,
}

impl ProblemSize {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Toy => "Toy",
            Self::Small => "Small",
            Self::Medium => "Medium",
        }
    }
}

impl fmt::Display for ProblemSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Variable, constraint and nonzero-coefficient counts of the reference model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SizeDetails {
    pub variables_num: u64,
    pub constraints_num: u64,
    pub nonzeros_num: u64,
}

impl SizeDetails {
    pub const fn new(variables_num: u64, constraints_num: u64, nonzeros_num: u64) -> Self {
        Self {
            variables_num,
            constraints_num,
            nonzeros_num,
        }
    }
}

/// Exclusive upper bounds `(variables, constraints, nonzeros)` of each class.
pub const TOY_LIMITS: (u64, u64, u64) = (5, 10, 20);
pub const SMALL_LIMITS: (u64, u64, u64) = (25, 40, 80);

/// Toy when every count is under the Toy bounds, Small when every count is
/// under the Small bounds, Medium otherwise.
pub fn classify_size(details: &SizeDetails) -> ProblemSize {
    let under = |(v, c, n): (u64, u64, u64)| {
        details.variables_num < v && details.constraints_num < c && details.nonzeros_num < n
    };
    if under(TOY_LIMITS) {
        ProblemSize::Toy
    } else if under(SMALL_LIMITS) {
        ProblemSize::Small
    } else {
        ProblemSize::Medium
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub ground_truth: f64,
    pub problem_type: ProblemType,
    pub problem_size: ProblemSize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<SizeDetails>,
}

/// A manifest annotation that disagrees with what its own counts imply.
#[derive(Debug, Clone, PartialEq)]
pub enum AnnotationIssue {
    NonFiniteGroundTruth,
    SizeMismatch {
        labeled: ProblemSize,
        classified: ProblemSize,
    },
}

impl fmt::Display for AnnotationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonFiniteGroundTruth => f.write_str("ground truth is not a finite number"),
            Self::SizeMismatch { labeled, classified } => {
                write!(f, "size labeled {labeled} but counts classify as {classified}")
            }
        }
    }
}

impl Annotation {
    pub fn issues(&self) -> alloc::vec::Vec<AnnotationIssue> {
        let mut issues = alloc::vec::Vec::new();
        if !self.ground_truth.is_finite() {
            issues.push(AnnotationIssue::NonFiniteGroundTruth);
        }
        if let Some(details) = &self.details {
            let classified = classify_size(details);
            if classified != self.problem_size {
                issues.push(AnnotationIssue::SizeMismatch {
                    labeled: self.problem_size,
                    classified,
                });
            }
        }
        issues
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_example_is_toy() {
        assert_eq!(classify_size(&SizeDetails::new(3, 1, 3)), ProblemSize::Toy);
        assert_eq!(classify_size(&SizeDetails::new(0, 0, 0)), ProblemSize::Toy);
    }

    #[test]
    fn small_and_medium_examples() {
        // 10 >= 5 breaks Toy; 10<25, 5<40, 30<80 keeps Small.
        assert_eq!(classify_size(&SizeDetails::new(10, 5, 30)), ProblemSize::Small);
        // 50 constraints >= 40 breaks Small.
        assert_eq!(classify_size(&SizeDetails::new(3, 50, 3)), ProblemSize::Medium);
    }

    #[test]
    fn np_tag_maps_to_nlp() {
        let a: Annotation = serde_json::from_str(
            r#"{"ground_truth": 670003.8, "problem_type": "NP", "problem_size": "Toy",
                "details": {"variables_num": 3, "constraints_num": 1, "nonzeros_num": 3}}"#,
        )
        .unwrap();
        assert_eq!(a.problem_type, ProblemType::Nlp);
        assert!(a.issues().is_empty());
        assert_eq!(ProblemType::parse("np"), Some(ProblemType::Nlp));
    }

    #[test]
    fn mislabeled_size_is_flagged() {
        let a = Annotation {
            ground_truth: 1.0,
            problem_type: ProblemType::Lp,
            problem_size: ProblemSize::Toy,
            details: Some(SizeDetails::new(10, 5, 30)),
        };
        assert_eq!(
            a.issues(),
            alloc::vec![AnnotationIssue::SizeMismatch {
                labeled: ProblemSize::Toy,
                classified: ProblemSize::Small
            }]
        );
    }
}
