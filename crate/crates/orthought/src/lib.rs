//! Host side of the ORThought pipeline: LLM gateway, subprocess sandbox,
//! datasets, trial and benchmark runners, and report emitters.

pub mod bench;
pub mod dataset;
pub mod emit;
pub mod gateway;
pub mod sandbox;
pub mod trial;

pub use bench::{BenchConfig, JournalEntry, LabelError, LedgerEntry, RunDir, journal_key, run_benchmark};
pub use dataset::{Dataset, DatasetError, DatasetFlag, Reference, load_dataset, validate_dataset};
pub use emit::{Format, ParseReportError, emit_report, format_label_summary, parse_report_csv, percent};
pub use gateway::{FnTransport, Gateway, GatewayError, Mode, RetryPolicy, Transport, TransportError};
pub use sandbox::{FakeRule, RunRequest, RunResponse, SubprocessSandbox, load_fake_rules};
pub use trial::{InfrastructureError, Ports, TrialConfig, load_templates, run_trial};
