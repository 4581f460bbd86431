//! One end-to-end trial: Model Agent, Solve Agent, verdict.

use orthought_core::{
    CompletionRequest, ExecutionLimits, ExtractError, ModelingArtifacts, ProblemInstance, PromptTemplates,
    RepairPolicy, SandboxPort, SandboxUnavailable, SolveAgent, SolveError, Tolerance, TrialRecord, VariantConfig,
    evaluate_success, extract_artifacts, validate_artifacts,
};
use thiserror::Error;

use crate::gateway::{DEFAULT_MODEL, Gateway, GatewayError};

#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: Option<u32>,
    pub variant: VariantConfig,
    pub repair_budget: u32,
    /// Treat `None` returns (infeasible/unbounded) as repairable.
    pub repair_no_solution: bool,
    pub limits: ExecutionLimits,
    pub tolerance: Tolerance,
    pub templates: PromptTemplates,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            model: DEFAULT_MODEL.into(),
            temperature: 0.0,
            max_tokens: None,
            variant: VariantConfig::ORTHOUGHT,
            repair_budget: 3,
            repair_no_solution: false,
            limits: ExecutionLimits::default(),
            tolerance: Tolerance::default(),
            templates: PromptTemplates::default(),
        }
    }
}

#[derive(Clone, Copy)]
pub struct Ports<'a> {
    pub gateway: &'a Gateway,
    pub sandbox: &'a (dyn SandboxPort + Sync),
}

/// Failures of the machinery rather than of the pipeline under test.
#[derive(Debug, Error)]
pub enum InfrastructureError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Sandbox(#[from] SandboxUnavailable),
    #[error("run directory: {0}")]
    Storage(#[from] std::io::Error),
}

impl From<SolveError<GatewayError>> for InfrastructureError {
    fn from(e: SolveError<GatewayError>) -> Self {
        match e {
            SolveError::Sandbox(s) => Self::Sandbox(s),
            SolveError::Chat(g) => Self::Gateway(g),
        }
    }
}

/// Runs trial `trial_index` (1-based) of `problem`. Pipeline failures such
/// as a missing code block or a wrong objective become a failed record.
pub fn run_trial(
    problem: &ProblemInstance,
    trial_index: u32,
    config: &TrialConfig,
    ports: Ports<'_>,
) -> Result<TrialRecord, InfrastructureError> {
    let seed_tag = TrialRecord::seed_tag(trial_index);
    let prompt = config.templates.build_model_prompt(problem, config.variant.prompt);
    let mut request =
        CompletionRequest::single_turn(config.model.clone(), config.temperature, prompt, seed_tag.clone());
    request.max_tokens = config.max_tokens;
    let completion = ports.gateway.complete(&request)?;

    let annotation = problem.annotation.as_ref();
    let mut record = TrialRecord {
        problem_id: problem.id.clone(),
        dataset: problem.dataset.clone(),
        problem_type: annotation.map(|a| a.problem_type),
        problem_size: annotation.map(|a| a.problem_size),
        trial_index,
        variant: config.variant,
        model: config.model.clone(),
        temperature: config.temperature,
        artifacts: ModelingArtifacts::default(),
        defects: Vec::new(),
        outcome: None,
        verdict: None,
        failure_reason: None,
        usage_total: completion.usage,
        labels: Vec::new(),
    };

    let extracted = extract_artifacts(&completion.text);
    let mut artifacts = match &extracted {
        Ok(a) => a.clone(),
        Err(ExtractError::NoCodeBlock(partial)) => (**partial).clone(),
    };
    artifacts.usage = completion.usage;
    record.defects = validate_artifacts(&artifacts);
    record.artifacts = artifacts;

    if let Err(e) = extracted {
        record.failure_reason = Some(format!("NoCodeBlock: {e}"));
    } else {
        let agent = SolveAgent {
            sandbox: ports.sandbox,
            chat: ports.gateway,
            templates: &config.templates,
            limits: config.limits,
            policy: RepairPolicy {
                budget: if config.variant.repair { config.repair_budget } else { 0 },
                model: config.model.clone(),
                temperature: config.temperature,
                max_tokens: config.max_tokens,
                seed_tag,
                repair_no_solution: config.repair_no_solution,
            },
        };
        let outcome = agent.solve_with_repair(problem, &record.artifacts)?;
        record.usage_total += outcome.usage;
        let last = outcome.final_diagnosis();
        if last.value.is_none() {
            record.failure_reason = Some(format!("{:?}: {}", last.kind, first_line(&last.detail)));
        }
        record.outcome = Some(outcome);
    }

    if let Some(a) = annotation {
        let verdict = evaluate_success(record.achieved(), a.ground_truth, config.tolerance);
        if !verdict.success && record.failure_reason.is_none() {
            record.failure_reason = verdict.reason.clone();
        }
        record.verdict = Some(verdict);
    }
    Ok(record)
}

/// Reads `model.txt`, `repair.txt`, `understanding_plain.txt` and
/// `formulation_plain.txt` from `dir`; files that are absent keep the
/// built-in text.
pub fn load_templates(dir: &std::path::Path) -> anyhow::Result<PromptTemplates> {
    let base = PromptTemplates::default();
    let read = |name: &str, fallback: &str| -> anyhow::Result<String> {
        match std::fs::read_to_string(dir.join(name)) {
            Ok(s) => Ok(s),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(fallback.to_owned()),
            Err(e) => Err(anyhow::Error::new(e).context(format!("reading {}", dir.join(name).display()))),
        }
    };
    Ok(PromptTemplates::new(
        read("model.txt", base.model_template())?,
        read("repair.txt", base.repair_template())?,
        read("understanding_plain.txt", base.understanding_plain())?,
        read("formulation_plain.txt", base.formulation_plain())?,
    )?)
}

fn first_line(s: &str) -> &str {
    s.lines().next().unwrap_or("")
}
