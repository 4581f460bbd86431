//! Shared test support: the scripted fixture benchmark and its generator.
#![allow(dead_code)]

pub mod oracles;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::sync::atomic::{AtomicUsize, Ordering};

use orthought::gateway::TranscriptStore;
use orthought::sandbox::FakeRule;
use orthought::{
    BenchConfig, FnTransport, Format, Gateway, Ports, TransportError, TrialConfig, emit_report, load_dataset,
    load_fake_rules, run_benchmark,
};
use orthought_core::{
    Annotation, Completion, CompletionRequest, ExecutionReport, GroupDim, ProblemSize, ProblemType, SizeDetails,
    TokenUsage, TrialRecord, VariantConfig, aggregate, classify_size,
};

pub const PROB_081_DESCRIPTION: &str = include_str!("../../fixtures/reference/prob_081.problem.txt");
pub const PROB_081_MODEL: &str = include_str!("../../fixtures/reference/prob_081.model.txt");
pub const PROB_081_CODE: &str = include_str!("../../fixtures/reference/prob_081.code.txt");
pub const TRANSPORT_DESCRIPTION: &str = include_str!("../../fixtures/reference/transportation.problem.txt");
pub const TRANSPORT_CODE: &str = include_str!("../../fixtures/reference/transportation.code.txt");

pub const PROB_081_OBJECTIVE: f64 = 670003.8;
pub const TRANSPORT_OBJECTIVE: f64 = 405.0;

pub const REPAIR_PROMPT_OPENING: &str = "You are an expert Gurobipy developer";

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn bench_fixture_dir() -> PathBuf {
    manifest_dir().join("fixtures").join("bench")
}

/// Variants the fixture benchmark is recorded for.
pub fn fixture_variants() -> [VariantConfig; 2] {
    [
        VariantConfig::ORTHOUGHT,
        VariantConfig {
            repair: false,
            ..VariantConfig::ORTHOUGHT
        },
    ]
}

pub const FIXTURE_TRIALS: u32 = 3;
pub const FIXTURE_GROUP_BY: [GroupDim; 3] = [GroupDim::Variant, GroupDim::ProblemType, GroupDim::ProblemSize];

pub enum Reply {
    Code(String),
    Prose(String),
}

pub struct Scenario {
    pub id: &'static str,
    pub description: String,
    pub annotation: Annotation,
    /// `(trial, None)` for the modeling call, `(trial, Some(k))` for repair `k`.
    pub script: fn(u32, Option<u32>) -> Reply,
}

fn annotated(ground_truth: f64, problem_type: ProblemType, dims: (u64, u64, u64)) -> Annotation {
    let details = SizeDetails::new(dims.0, dims.1, dims.2);
    Annotation {
        ground_truth,
        problem_type,
        problem_size: classify_size(&details),
        details: Some(details),
    }
}

/// A program whose behavior under the fake sandbox is fixed by `directive`.
pub fn synthetic_code(name: &str, directive: &str, revision: u32) -> String {
    format!(
        "import gurobipy as gp\nfrom gurobipy import GRB\n\n\
         def solve_{name}():\n    \
         # fake-sandbox: {directive}\n    \
         # revision {revision}\n    \
         model = gp.Model(\"{name}\")\n    \
         x = model.addVar(lb=0, name=\"x\")\n    \
         model.setObjective(x, GRB.MINIMIZE)\n    \
         model.optimize()\n    \
         if model.status == GRB.OPTIMAL:\n        \
         return model.objVal\n    \
         return None\n"
    )
}

pub const SYNTHETIC_MODEL: &str = "Set:\n1. Item\nThe set of items, \\( I \\)\n\n\
    Parameter:\n1. Cost\n# Unit cost of each item\n[3, 5, 7]\n\n\
    Decision variable:\n1. Amount\nContinuous variable, \\( x[i] \\forall i \\in I \\)\n\n\
    Objective:\n1. Minimize total cost.\nmin: \\( \\sum_i Cost[i] x[i] \\)\n\n\
    Constraint:\n1. Coverage. \\( \\sum_i x[i] \\geq 1 \\)\n\n\
    Type:\nContinuous, linear, linear\nLP";

/// A modeling completion in the layout the model prompt asks for.
pub fn modeling_completion(model: &str, code: &str) -> String {
    format!(
        "<solution_path>\n1. Understanding the Problem\nThe objective and constraints are read off the description.\n\n\
         2. Building the Mathematical Model (Step by Step)\n```model\n{model}\n```\n</solution_path>\n\n\
         3. Gurobipy Python Code\n```python\n{code}\n```\n"
    )
}

pub fn repair_completion(code: &str) -> String {
    format!("The error comes from the solver call. Corrected program:\n\n```python\n{code}\n```\n")
}

fn reply_code(code: String) -> Reply {
    Reply::Code(code)
}

pub fn scenarios() -> Vec<Scenario> {
    use ProblemType::*;
    vec![
        Scenario {
            id: "prob_081",
            description: PROB_081_DESCRIPTION.trim_end().into(),
            annotation: Annotation {
                ground_truth: PROB_081_OBJECTIVE,
                problem_type: Nlp,
                problem_size: ProblemSize::Toy,
                details: Some(SizeDetails::new(3, 1, 3)),
            },
            script: |_, _| Reply::Code(PROB_081_CODE.trim_end().into()),
        },
        Scenario {
            id: "fx_transport",
            description: TRANSPORT_DESCRIPTION.trim_end().into(),
            annotation: annotated(TRANSPORT_OBJECTIVE, Lp, (15, 8, 30)),
            script: |_, _| Reply::Code(TRANSPORT_CODE.trim_end().into()),
        },
        Scenario {
            id: "fx_repair_exception",
            description: "A bakery bakes bread and cake from 120 kg of flour. Bread uses 1 kg and earns 2, \
                          cake uses 2 kg and earns 5. Maximize profit."
                .into(),
            annotation: annotated(300.0, Lp, (2, 1, 2)),
            script: |_, k| match k {
                None => reply_code(synthetic_code("bakery", "raise KeyError: 'cake'", 0)),
                Some(k) => reply_code(synthetic_code("bakery", "return 300", k)),
            },
        },
        Scenario {
            id: "fx_repair_timeout",
            description: "Schedule 4 nurses over 7 days so that every day has two nurses on duty and \
                          no nurse works more than 4 days. Minimize total shifts."
                .into(),
            annotation: annotated(14.0, Ilp, (28, 11, 56)),
            script: |_, k| match k {
                None => reply_code(synthetic_code("nurses", "timeout", 0)),
                Some(k) => reply_code(synthetic_code("nurses", "return 14", k)),
            },
        },
        Scenario {
            id: "fx_no_code",
            description: "A farmer splits 40 hectares between wheat and barley. Wheat earns 300 per \
                          hectare, barley 250. Maximize revenue."
                .into(),
            annotation: annotated(12000.0, Lp, (2, 1, 2)),
            script: |_, _| {
                Reply::Prose(
                    "<solution_path>\nAll land goes to wheat, which earns more per hectare.\n</solution_path>\n\
                     The optimal revenue is 12000."
                        .into(),
                )
            },
        },
        Scenario {
            id: "fx_infeasible",
            description: "A plant must produce at least 500 units but has capacity for 300. Minimize \
                          production cost at 4 per unit."
                .into(),
            annotation: annotated(2000.0, Lp, (1, 2, 2)),
            script: |_, _| reply_code(synthetic_code("plant", "return None", 0)),
        },
        Scenario {
            id: "fx_wrong_value",
            description: "Blend two ores to obtain 10 tons of alloy with at least 30% copper. Ore A is \
                          40% copper at cost 50, ore B 20% copper at cost 30. Minimize cost."
                .into(),
            annotation: annotated(400.0, Lp, (2, 2, 4)),
            script: |_, _| reply_code(synthetic_code("ores", "return 380", 0)),
        },
        Scenario {
            id: "fx_stubborn",
            description: "Choose warehouse sites among 6 candidates to serve 10 stores at minimum fixed \
                          plus assignment cost."
                .into(),
            annotation: annotated(930.0, Milp, (66, 70, 190)),
            script: |_, k| {
                reply_code(synthetic_code(
                    "warehouses",
                    "raise GurobiError: Unable to retrieve attribute 'objVal'",
                    k.unwrap_or(0),
                ))
            },
        },
        Scenario {
            id: "fx_protocol",
            description: "Route one truck through 5 cities and return to the depot at minimum distance.".into(),
            annotation: annotated(118.0, Ilp, (25, 30, 100)),
            script: |_, _| reply_code(synthetic_code("tour", "protocol worker exited without a response", 0)),
        },
        Scenario {
            id: "fx_flaky",
            description: "Cut 7 rolls of paper into widths 3, 5 and 7 to meet orders with minimum \
                          waste rolls."
                .into(),
            annotation: annotated(7.0, Ilp, (9, 3, 18)),
            script: |t, _| match t {
                2 => reply_code(synthetic_code("rolls", "return 8", 0)),
                _ => reply_code(synthetic_code("rolls", "return 7", 0)),
            },
        },
        Scenario {
            id: "fx_within_tolerance",
            description: "A portfolio of 3 bonds must yield at least 5% on a budget of 1,000,000. \
                          Minimize risk-weighted exposure."
                .into(),
            annotation: annotated(250000.0, Lp, (3, 2, 6)),
            script: |_, _| reply_code(synthetic_code("bonds", "return 250012.5", 0)),
        },
        Scenario {
            id: "fx_medium_milp",
            description: "Plan production of 12 products over 10 periods with setup costs, capacity \
                          limits and inventory balance. Minimize total cost."
                .into(),
            annotation: annotated(1834.0, Milp, (240, 130, 700)),
            script: |_, _| reply_code(synthetic_code("lotsizing", "return 1834", 0)),
        },
    ]
}

pub fn fake_rules() -> Vec<FakeRule> {
    vec![
        FakeRule {
            marker: "def solve_logistics".into(),
            report: ExecutionReport::returned(PROB_081_OBJECTIVE),
        },
        FakeRule {
            marker: "def optimize_transportation".into(),
            report: ExecutionReport::returned(TRANSPORT_OBJECTIVE),
        },
    ]
}

/// Parses `t3` or `t3/repair2`.
pub fn parse_seed_tag(tag: &str) -> (u32, Option<u32>) {
    let (trial, repair) = match tag.split_once('/') {
        Some((t, r)) => (t, r.strip_prefix("repair").map(|k| k.parse().expect("repair index"))),
        None => (tag, None),
    };
    (
        trial
            .strip_prefix('t')
            .expect("trial tag")
            .parse()
            .expect("trial index"),
        repair,
    )
}

/// Deterministic token counts: roughly four characters per token.
pub fn usage_for(request: &CompletionRequest, text: &str) -> TokenUsage {
    let prompt_chars: usize = request.messages.iter().map(|m| m.content.len()).sum();
    TokenUsage {
        prompt_tokens: prompt_chars as u64 / 4 + 1,
        completion_tokens: text.len() as u64 / 4 + 1,
    }
}

/// The scripted provider for the fixture scenarios.
pub fn scripted_reply(request: &CompletionRequest) -> Result<Completion, TransportError> {
    let prompt = &request.messages.last().expect("one message").content;
    let scenario = scenarios()
        .into_iter()
        .find(|s| prompt.contains(&s.description))
        .ok_or_else(|| TransportError::Fatal("prompt matches no fixture scenario".into()))?;
    let (trial, repair) = parse_seed_tag(&request.seed_tag);
    assert_eq!(repair.is_some(), prompt.starts_with(REPAIR_PROMPT_OPENING));
    let text = match (scenario.script)(trial, repair) {
        Reply::Code(code) if repair.is_some() => repair_completion(&code),
        Reply::Code(code) => {
            let model = if scenario.id == "prob_081" {
                PROB_081_MODEL
            } else {
                SYNTHETIC_MODEL
            };
            modeling_completion(model.trim_end(), &code)
        }
        Reply::Prose(text) => text,
    };
    Ok(Completion {
        usage: usage_for(request, &text),
        text,
        provider_meta: BTreeMap::new(),
    })
}

/// A transport serving [`scripted_reply`] and counting its calls.
pub fn scripted_transport(
    calls: Arc<AtomicUsize>,
) -> Box<FnTransport<impl Fn(&CompletionRequest) -> Result<Completion, TransportError> + Send + Sync>> {
    Box::new(FnTransport(move |req: &CompletionRequest| {
        calls.fetch_add(1, Ordering::SeqCst);
        scripted_reply(req)
    }))
}

fn write(path: &Path, text: &str) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, text).unwrap();
}

/// Writes the dataset files and sandbox rules of the fixture benchmark.
pub fn write_fixture_dataset(dir: &Path) {
    let all = scenarios();
    let manifest: BTreeMap<&str, &Annotation> = all.iter().map(|s| (s.id, &s.annotation)).collect();
    write(
        &dir.join("manifest.json"),
        &(serde_json::to_string_pretty(&manifest).unwrap() + "\n"),
    );
    for s in scenarios() {
        write(
            &dir.join("problems").join(format!("{}.txt", s.id)),
            &format!("{}\n", s.description),
        );
    }
    write(
        &dir.join("fake_rules.json"),
        &(serde_json::to_string_pretty(&fake_rules()).unwrap() + "\n"),
    );
}

/// Runs every fixture variant over the dataset in `dir` through `gateway`
/// and returns the records and the CSV report.
pub fn run_fixture(dir: &Path, gateway: &Gateway) -> (Vec<TrialRecord>, String) {
    let dataset = load_dataset(dir).unwrap();
    let sandbox = load_fake_rules(&dir.join("fake_rules.json")).unwrap();
    let ports = Ports {
        gateway,
        sandbox: &sandbox,
    };
    let mut records = Vec::new();
    for variant in fixture_variants() {
        let config = BenchConfig {
            trial: TrialConfig {
                variant,
                ..TrialConfig::default()
            },
            trials: FIXTURE_TRIALS,
            jobs: 1,
        };
        records.extend(run_benchmark(&dataset, &config, ports, None).unwrap());
    }
    let report = aggregate(&records, &FIXTURE_GROUP_BY).unwrap();
    (records, emit_report(&report, Format::Csv))
}

/// Generates the whole fixture benchmark into `dir`: dataset, sandbox
/// rules, recorded transcripts and the expected report.
pub fn generate_bench_fixture(dir: &Path) {
    write_fixture_dataset(dir);
    let store = TranscriptStore::open(dir.join("transcripts")).unwrap();
    let gateway = Gateway::record(scripted_transport(Arc::default()), store);
    let (_, csv) = run_fixture(dir, &gateway);
    write(&dir.join("report.csv"), &csv);
}

/// A replay gateway over the committed fixture transcripts.
pub fn fixture_replay_gateway(dir: &Path) -> Gateway {
    Gateway::replay(TranscriptStore::open(dir.join("transcripts")).unwrap())
}

/// Relative path and bytes of every file under `dir`, sorted.
pub fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}
