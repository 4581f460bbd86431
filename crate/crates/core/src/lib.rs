//! Core of the ORThought pipeline.
//!
//! Everything in this crate is pure computation over owned data and runs
//! without `std`: problem annotations and size classes, the success metric,
//! parsing of model text, the Model Agent prompt and its ablation variants,
//! artifact extraction, the Detection-Diagnosis-Repair loop (generic over a
//! sandbox and a chat model), trial records, aggregation, and failure labels.
//!
//! IO lives in the `orthought` crate: the HTTP gateway and transcript store,
//! the subprocess sandbox, datasets on disk, the benchmark journal and the CLI.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod artifacts;
pub mod chat;
pub mod fake_sandbox;
pub mod labels;
pub mod problem;
pub mod prompt;
pub mod record;
pub mod report;
pub mod sections;
pub mod solve;
pub mod success;

pub use artifacts::{Defect, ExtractError, ModelingArtifacts, extract_artifacts, extract_code, validate_artifacts};
pub use chat::{ChatModel, Completion, CompletionRequest, Message, Role, TokenUsage, sum_usage};
pub use fake_sandbox::FakeSandbox;
pub use labels::{Element, FailureLabel, LabelKind, LabelSummary, summarize_labels};
pub use problem::{Annotation, ProblemInstance, ProblemSize, ProblemType, SizeDetails, classify_size};
pub use prompt::{
    Formulation, PromptTemplates, PromptVariant, TemplateError, Understanding, build_model_prompt, build_repair_prompt,
};
pub use record::{TrialRecord, VariantConfig};
pub use report::{AggregateError, BenchmarkReport, GroupDim, ReportRow, aggregate};
pub use sections::{MalformedModel, ModelSections, SectionKind, parse_model_sections};
pub use solve::{
    Diagnosis, DiagnosisKind, ExecStatus, ExecutionLimits, ExecutionReport, RepairPolicy, ReturnValue, SandboxPort,
    SandboxUnavailable, SolveAgent, SolveError, SolveOutcome, detect,
};
pub use success::{SuccessVerdict, Tolerance, evaluate_success};
