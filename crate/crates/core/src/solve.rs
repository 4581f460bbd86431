//! The Solve Agent: execute, detect, diagnose, repair.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifacts::{ModelingArtifacts, extract_code};
use crate::chat::{ChatModel, CompletionRequest, TokenUsage};
use crate::problem::ProblemInstance;
use crate::prompt::PromptTemplates;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecStatus {
    Returned,
    RaisedException,
    TimedOut,
    ProtocolError,
}

/// What the generated function handed back.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnValue {
    Number(f64),
    /// The function returned `None`: no feasible/bounded optimum.
    Null,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub status: ExecStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub returned_value: Option<ReturnValue>,
    #[serde(default)]
    pub stdout: String,
    #[serde(default)]
    pub stderr: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traceback: Option<String>,
    pub wall_time_s: f64,
}

impl ExecutionReport {
    pub fn returned(value: f64) -> Self {
        Self::with_status(ExecStatus::Returned, Some(ReturnValue::Number(value)))
    }

    pub fn returned_none() -> Self {
        Self::with_status(ExecStatus::Returned, Some(ReturnValue::Null))
    }

    pub fn raised(error_type: impl Into<String>, traceback: impl Into<String>) -> Self {
        let mut r = Self::with_status(ExecStatus::RaisedException, None);
        r.error_type = Some(error_type.into());
        r.traceback = Some(traceback.into());
        r
    }

    pub fn timed_out(wall_time_s: f64) -> Self {
        let mut r = Self::with_status(ExecStatus::TimedOut, None);
        r.wall_time_s = wall_time_s;
        r
    }

    pub fn protocol_error(detail: impl Into<String>) -> Self {
        let mut r = Self::with_status(ExecStatus::ProtocolError, None);
        r.stderr = detail.into();
        r
    }

    fn with_status(status: ExecStatus, returned_value: Option<ReturnValue>) -> Self {
        Self {
            status,
            returned_value,
            stdout: String::new(),
            stderr: String::new(),
            error_type: None,
            traceback: None,
            wall_time_s: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiagnosisKind {
    Optimal,
    NoSolution,
    ExecutionError,
    Timeout,
    Protocol,
}

impl DiagnosisKind {
    pub fn is_repair_eligible(self) -> bool {
        matches!(self, Self::ExecutionError | Self::Timeout)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnosis {
    pub kind: DiagnosisKind,
    pub detail: String,
    /// The objective when `kind` is `Optimal`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

/// Longest traceback tail carried into a diagnosis.
const TRACEBACK_EXCERPT_LINES: usize = 30;

fn excerpt(text: &str) -> String {
    let lines: Vec<&str> = text.trim_end().lines().collect();
    let start = lines.len().saturating_sub(TRACEBACK_EXCERPT_LINES);
    lines[start..].join("\n")
}

/// Maps one execution report to a diagnosis. Whether an `Optimal` value
/// matches the ground truth is decided later by the harness.
pub fn detect(report: &ExecutionReport) -> Diagnosis {
    let (kind, detail, value) = match report.status {
        ExecStatus::Returned => match report.returned_value {
            Some(ReturnValue::Number(v)) => (DiagnosisKind::Optimal, format!("returned {v}"), Some(v)),
            Some(ReturnValue::Null) => (
                DiagnosisKind::NoSolution,
                "returned None: the model is infeasible or unbounded".into(),
                None,
            ),
            None => (
                DiagnosisKind::Protocol,
                "returned status without a value or null marker".into(),
                None,
            ),
        },
        ExecStatus::RaisedException => {
            let error_type = report.error_type.as_deref().unwrap_or("Exception");
            let trace = report
                .traceback
                .as_deref()
                .filter(|t| !t.trim().is_empty())
                .unwrap_or(&report.stderr);
            let detail = if trace.trim().is_empty() {
                error_type.into()
            } else {
                format!("{error_type}\n{}", excerpt(trace))
            };
            (DiagnosisKind::ExecutionError, detail, None)
        }
        ExecStatus::TimedOut => (
            DiagnosisKind::Timeout,
            format!("execution was stopped after {:.1} seconds", report.wall_time_s),
            None,
        ),
        ExecStatus::ProtocolError => (
            DiagnosisKind::Protocol,
            format!("sandbox protocol error: {}", report.stderr.trim()),
            None,
        ),
    };
    Diagnosis { kind, detail, value }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExecutionLimits {
    pub timeout_s: f64,
    pub memory_mb: u64,
    pub capture_limit_bytes: u64,
}

impl Default for ExecutionLimits {
    fn default() -> Self {
        Self {
            timeout_s: 60.0,
            memory_mb: 4096,
            capture_limit_bytes: 64 * 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("sandbox unavailable: {0}")]
pub struct SandboxUnavailable(pub String);

/// Runs one generated program in a fresh environment.
pub trait SandboxPort {
    fn execute(&self, code: &str, limits: &ExecutionLimits) -> Result<ExecutionReport, SandboxUnavailable>;
}

impl<T: SandboxPort + ?Sized> SandboxPort for &T {
    fn execute(&self, code: &str, limits: &ExecutionLimits) -> Result<ExecutionReport, SandboxUnavailable> {
        (**self).execute(code, limits)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairPolicy {
    /// Maximum number of repair calls.
    pub budget: u32,
    pub model: String,
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    /// Base tag of the trial; repair requests append `/repair<n>`.
    pub seed_tag: String,
    /// Also repair code that returned `None`.
    #[serde(default)]
    pub repair_no_solution: bool,
}

impl Default for RepairPolicy {
    fn default() -> Self {
        Self {
            budget: 3,
            model: String::new(),
            temperature: 0.0,
            max_tokens: None,
            seed_tag: "t1".into(),
            repair_no_solution: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub final_code: String,
    pub repair_iterations: u32,
    pub diagnosis_history: Vec<Diagnosis>,
    pub achieved: Option<f64>,
    /// Tokens spent on repair calls only.
    pub usage: TokenUsage,
}

impl SolveOutcome {
    pub fn final_diagnosis(&self) -> &Diagnosis {
        self.diagnosis_history
            .last()
            .expect("history holds at least one diagnosis")
    }
}

#[derive(Debug, Error)]
pub enum SolveError<E> {
    #[error(transparent)]
    Sandbox(#[from] SandboxUnavailable),
    #[error("repair completion failed: {0}")]
    Chat(E),
}

/// The Detection-Diagnosis-Repair loop bound to a sandbox and a chat model.
pub struct SolveAgent<'a, S, C> {
    pub sandbox: S,
    pub chat: C,
    pub templates: &'a PromptTemplates,
    pub limits: ExecutionLimits,
    pub policy: RepairPolicy,
}

impl<S: SandboxPort, C: ChatModel> SolveAgent<'_, S, C> {
    fn eligible(&self, kind: DiagnosisKind) -> bool {
        kind.is_repair_eligible() || (self.policy.repair_no_solution && kind == DiagnosisKind::NoSolution)
    }

    /// The error text handed to the repair prompt.
    fn error_message(&self, diagnosis: &Diagnosis) -> String {
        match diagnosis.kind {
            DiagnosisKind::Timeout => format!(
                "Execution exceeded {} seconds and was terminated.",
                self.limits.timeout_s
            ),
            DiagnosisKind::NoSolution => {
                "The function returned None: the model was reported infeasible or unbounded.".into()
            }
            _ => diagnosis.detail.clone(),
        }
    }

    /// Executes `artifacts.code_text` and repairs it while the diagnosis is
    /// repair-eligible and the budget lasts. At most `budget + 1` executions
    /// and `budget` completions happen.
    pub fn solve_with_repair(
        &self,
        problem: &ProblemInstance,
        artifacts: &ModelingArtifacts,
    ) -> Result<SolveOutcome, SolveError<C::Error>> {
        let mut code = artifacts.code_text.clone();
        let mut usage = TokenUsage::default();
        let mut history = Vec::new();
        let mut iterations = 0u32;

        let mut diagnosis = detect(&self.sandbox.execute(&code, &self.limits)?);
        loop {
            let eligible = self.eligible(diagnosis.kind);
            history.push(diagnosis.clone());
            if !eligible || iterations >= self.policy.budget {
                break;
            }
            iterations += 1;
            let prompt = self.templates.build_repair_prompt(
                problem,
                &artifacts.model_text,
                &code,
                &self.error_message(&diagnosis),
            );
            let mut request = CompletionRequest::single_turn(
                self.policy.model.clone(),
                self.policy.temperature,
                prompt,
                format!("{}/repair{iterations}", self.policy.seed_tag),
            );
            request.max_tokens = self.policy.max_tokens;
            let completion = self.chat.complete(&request).map_err(SolveError::Chat)?;
            usage += completion.usage;

            diagnosis = match extract_code(&completion.text) {
                Some(fixed) => {
                    code = fixed;
                    detect(&self.sandbox.execute(&code, &self.limits)?)
                }
                // Nothing new to run; the previous failure stands.
                None => Diagnosis {
                    kind: diagnosis.kind,
                    detail: format!(
                        "repair reply contained no code block; previous error:\n{}",
                        diagnosis.detail
                    ),
                    value: None,
                },
            };
        }

        let last = history.last().expect("at least one execution");
        let achieved = match last.kind {
            DiagnosisKind::Optimal => last.value,
            _ => None,
        };
        Ok(SolveOutcome {
            final_code: code,
            repair_iterations: iterations,
            diagnosis_history: history,
            achieved,
            usage,
        })
    }
}
