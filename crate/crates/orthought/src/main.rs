use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use orthought::{
    BenchConfig, Format, Gateway, Mode, Ports, RunDir, SubprocessSandbox, TrialConfig, emit_report,
    format_label_summary, load_dataset, load_fake_rules, load_templates, run_benchmark, run_trial, validate_dataset,
};
use orthought_core::{
    Annotation, Element, ExecutionLimits, FailureLabel, FakeSandbox, Formulation, GroupDim, LabelKind, ProblemInstance,
    ProblemSize, ProblemType, PromptVariant, SandboxPort, Tolerance, TrialRecord, Understanding, VariantConfig,
    aggregate, summarize_labels,
};

#[derive(Parser)]
#[command(
    name = "orthought",
    version,
    about = "Model Agent and Solve Agent pipeline for optimization modeling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline once on a problem description file.
    Solve {
        file: PathBuf,
        /// Score the result against this optimal objective.
        #[arg(long)]
        ground_truth: Option<f64>,
        /// Write the full trial record as JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Run repeated trials over an annotated dataset.
    Bench {
        dataset: PathBuf,
        /// Run directory for records, the resume journal and labels.
        #[arg(long)]
        run: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        trials: u32,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Also run every ablation variant.
        #[arg(long)]
        ablations: bool,
        #[arg(long, value_delimiter = ',', default_value = "variant,problem_size")]
        group_by: Vec<String>,
        #[arg(long, default_value = "table")]
        format: Format,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Aggregate the records of a run directory.
    Report {
        run: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "variant")]
        group_by: Vec<String>,
        #[arg(long, default_value = "table")]
        format: Format,
    },
    /// Attach a failure label to a failed trial.
    Label {
        record_id: String,
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        error_type: String,
        #[arg(long)]
        element: String,
        #[arg(long, default_value = "")]
        note: String,
    },
    /// Error type by element counts over a run's labels.
    Labels { run: PathBuf },
    /// Check a dataset's annotations and reference artifacts.
    Validate { dataset: PathBuf },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SandboxKind {
    Subprocess,
    Fake,
}

#[derive(Args)]
struct PipelineArgs {
    /// Model identifier sent to the provider.
    #[arg(long, env = "ORTHOUGHT_MODEL", default_value = orthought::gateway::DEFAULT_MODEL)]
    model: String,
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
    #[arg(long)]
    max_tokens: Option<u32>,
    #[arg(long, default_value_t = 3)]
    repair_budget: u32,
    #[arg(long)]
    no_repair: bool,
    /// Also repair programs that return no solution.
    #[arg(long)]
    repair_infeasible: bool,
    /// full, plain or removed.
    #[arg(long, default_value = "full")]
    understanding: String,
    /// expert or plain.
    #[arg(long, default_value = "expert")]
    formulation: String,
    #[arg(long, default_value = "live")]
    mode: Mode,
    /// Transcript directory for record and replay modes.
    #[arg(long)]
    transcripts: Option<PathBuf>,
    /// Directory of prompt template overrides.
    #[arg(long)]
    prompts: Option<PathBuf>,
    #[arg(long, default_value_t = 60.0)]
    timeout_s: f64,
    #[arg(long, default_value_t = 4096)]
    memory_mb: u64,
    #[arg(long, value_enum, default_value = "subprocess")]
    sandbox: SandboxKind,
    /// JSON rules for the fake sandbox.
    #[arg(long)]
    fake_rules: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-6)]
    abs_tol: f64,
    #[arg(long, default_value_t = 1e-4)]
    rel_tol: f64,
}

impl PipelineArgs {
    fn variant(&self) -> Result<VariantConfig> {
        let understanding = Understanding::parse(&self.understanding)
            .with_context(|| format!("unknown understanding variant {:?}", self.understanding))?;
        let formulation = Formulation::parse(&self.formulation)
            .with_context(|| format!("unknown formulation variant {:?}", self.formulation))?;
        Ok(VariantConfig {
            prompt: PromptVariant::new(understanding, formulation),
            repair: !self.no_repair,
        })
    }

    fn trial_config(&self) -> Result<TrialConfig> {
        let templates = match &self.prompts {
            Some(dir) => load_templates(dir)?,
            None => Default::default(),
        };
        Ok(TrialConfig {
            model: self.model.clone(),
            temperature: self.temperature,
            max_tokens: self.max_tokens,
            variant: self.variant()?,
            repair_budget: self.repair_budget,
            repair_no_solution: self.repair_infeasible,
            limits: ExecutionLimits {
                timeout_s: self.timeout_s,
                memory_mb: self.memory_mb,
                ..ExecutionLimits::default()
            },
            tolerance: Tolerance {
                abs_tol: self.abs_tol,
                rel_tol: self.rel_tol,
            },
            templates,
        })
    }

    fn gateway(&self) -> Result<Gateway> {
        Ok(Gateway::from_env(self.mode, self.transcripts.as_deref())?)
    }

    fn sandbox(&self) -> Result<Box<dyn SandboxPort + Sync>> {
        Ok(match self.sandbox {
            SandboxKind::Subprocess => Box::new(SubprocessSandbox::from_env()),
            SandboxKind::Fake => match &self.fake_rules {
                Some(path) => {
                    Box::new(load_fake_rules(path).with_context(|| format!("loading fake rules {}", path.display()))?)
                }
                None => Box::new(FakeSandbox::new()),
            },
        })
    }
}

fn group_dims(names: &[String]) -> Result<Vec<GroupDim>> {
    names
        .iter()
        .map(|n| GroupDim::parse(n.trim()).with_context(|| format!("unknown group-by dimension {n:?}")))
        .collect()
}

fn print_record(record: &TrialRecord) {
    let status = if record.success() { "ok" } else { "FAIL" };
    let achieved = record.achieved().map_or_else(|| "-".into(), |v| v.to_string());
    print!(
        "{:<4} {}  objective {}  repairs {}  tokens {}",
        status,
        record.record_id(),
        achieved,
        record.repair_iterations(),
        record.usage_total.total()
    );
    match &record.failure_reason {
        Some(reason) => println!("  ({reason})"),
        None => println!(),
    }
}

fn solve(file: &Path, ground_truth: Option<f64>, out: Option<&Path>, args: &PipelineArgs) -> Result<bool> {
    let description = std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let id = file
        .file_stem()
        .map_or_else(|| "problem".into(), |s| s.to_string_lossy().into_owned());
    let mut problem = ProblemInstance::new(id, description.trim_end());
    if let Some(gt) = ground_truth {
        problem = problem.with_annotation(Annotation {
            ground_truth: gt,
            problem_type: ProblemType::Lp,
            problem_size: ProblemSize::Toy,
            details: None,
        });
    }
    let config = args.trial_config()?;
    let gateway = args.gateway()?;
    let sandbox = args.sandbox()?;
    let record = run_trial(
        &problem,
        1,
        &config,
        Ports {
            gateway: &gateway,
            sandbox: sandbox.as_ref(),
        },
    )?;
    print_record(&record);
    if !record.artifacts.code_text.is_empty() {
        let code = record
            .outcome
            .as_ref()
            .map_or(&record.artifacts.code_text, |o| &o.final_code);
        println!("\n{code}");
    }
    if let Some(path) = out {
        std::fs::write(path, serde_json::to_string_pretty(&record)? + "\n")?;
    }
    Ok(ground_truth.is_none() || record.success())
}

#[allow(clippy::too_many_arguments)]
fn bench(
    dataset: &Path,
    run: Option<&Path>,
    trials: u32,
    jobs: usize,
    ablations: bool,
    group_by: &[String],
    format: Format,
    args: &PipelineArgs,
) -> Result<()> {
    let dims = group_dims(group_by)?;
    let dataset = load_dataset(dataset)?;
    for flag in &dataset.flags {
        log::warn!("{}: {}", flag.problem_id, flag.message);
    }
    let run_dir = run.map(RunDir::open).transpose()?;
    let gateway = args.gateway()?;
    let sandbox = args.sandbox()?;
    let ports = Ports {
        gateway: &gateway,
        sandbox: sandbox.as_ref(),
    };
    let base = args.trial_config()?;
    let mut variants = vec![base.variant];
    if ablations {
        variants.extend(VariantConfig::ablations().into_iter().filter(|v| *v != base.variant));
    }

    let mut records = Vec::new();
    for variant in variants {
        let config = BenchConfig {
            trial: TrialConfig {
                variant,
                ..base.clone()
            },
            trials,
            jobs,
        };
        let batch = run_benchmark(&dataset, &config, ports, run_dir.as_ref())?;
        for r in &batch {
            print_record(r);
        }
        records.extend(batch);
    }
    println!();
    print!("{}", emit_report(&aggregate(&records, &dims)?, format));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve {
            file,
            ground_truth,
            out,
            pipeline,
        } => solve(&file, ground_truth, out.as_deref(), &pipeline),
        Command::Bench {
            dataset,
            run,
            trials,
            jobs,
            ablations,
            group_by,
            format,
            pipeline,
        } => bench(
            &dataset,
            run.as_deref(),
            trials,
            jobs,
            ablations,
            &group_by,
            format,
            &pipeline,
        )
        .map(|()| true),
        Command::Report { run, group_by, format } => {
            let records = RunDir::open(&run)?.load_records()?;
            print!(
                "{}",
                emit_report(&aggregate(&records, &group_dims(&group_by)?)?, format)
            );
            Ok(true)
        }
        Command::Label {
            record_id,
            run,
            error_type,
            element,
            note,
        } => {
            let kind = LabelKind::parse(&error_type).with_context(|| format!("unknown error type {error_type:?}"))?;
            let element = Element::parse(&element).with_context(|| format!("unknown element {element:?}"))?;
            RunDir::open(&run)?.attach_labels(&record_id, vec![FailureLabel::new(kind, element, note)])?;
            Ok(true)
        }
        Command::Labels { run } => {
            let records = RunDir::open(&run)?.load_records()?;
            print!("{}", format_label_summary(&summarize_labels(&records)));
            Ok(true)
        }
        Command::Validate { dataset } => {
            let dataset = load_dataset(&dataset)?;
            let flags = validate_dataset(&dataset);
            for f in &flags {
                println!("{}: {}", f.problem_id, f.message);
            }
            println!("{} problems, {} flags", dataset.problems.len(), flags.len());
            Ok(flags.is_empty())
        }
    }
}
