//! Benchmark runs: repeated trials over a dataset, persisted to a run
//! directory with a resumable journal and a failure-label ledger.
//!
//! ```text
//! <run>/records/<record-id>.json   one TrialRecord each
//! <run>/journal.jsonl              one line per finished trial
//! <run>/labels.jsonl               one line per label attachment
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

use orthought_core::{FailureLabel, TrialRecord, VariantConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::trial::{InfrastructureError, Ports, TrialConfig, run_trial};

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub trial: TrialConfig,
    /// Trials per problem.
    pub trials: u32,
    /// Worker threads.
    pub jobs: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            trial: TrialConfig::default(),
            trials: 3,
            jobs: 1,
        }
    }
}

pub fn journal_key(problem_id: &str, trial_index: u32, variant: &VariantConfig) -> String {
    let digest = Sha256::digest(format!("{problem_id}\n{trial_index}\n{}", variant.label()));
    hex::encode(&digest[..16])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub key: String,
    pub record_id: String,
    pub problem_id: String,
    pub trial_index: u32,
    pub variant: String,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub record_id: String,
    pub labels: Vec<FailureLabel>,
}

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("no record {0} in this run")]
    UnknownRecord(String),
    #[error(transparent)]
    LabelOnSuccess(#[from] orthought_core::labels::LabelOnSuccess),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    journal: Mutex<()>,
}

fn file_stem(record_id: &str) -> String {
    record_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "._-".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> io::Result<Vec<T>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e),
    };
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(v) => out.push(v),
            // A torn final line from an interrupted append.
            Err(e) => log::warn!("skipping unreadable line in {}: {e}", path.display()),
        }
    }
    Ok(out)
}

fn append_jsonl<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut line = serde_json::to_string(value).map_err(io::Error::other)?;
    line.push('\n');
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    f.write_all(line.as_bytes())?;
    f.sync_data()
}

impl RunDir {
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(root.join("records"))?;
        Ok(Self {
            root,
            journal: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn journal_path(&self) -> PathBuf {
        self.root.join("journal.jsonl")
    }

    pub fn ledger_path(&self) -> PathBuf {
        self.root.join("labels.jsonl")
    }

    pub fn record_path(&self, record_id: &str) -> PathBuf {
        self.root.join("records").join(format!("{}.json", file_stem(record_id)))
    }

    pub fn save_record(&self, record: &TrialRecord) -> io::Result<()> {
        let mut body = serde_json::to_vec_pretty(record).map_err(io::Error::other)?;
        body.push(b'\n');
        let path = self.record_path(&record.record_id());
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, body)?;
        fs::rename(tmp, path)
    }

    /// The stored record without ledger labels applied.
    pub fn load_record(&self, record_id: &str) -> io::Result<Option<TrialRecord>> {
        match fs::read(self.record_path(record_id)) {
            Ok(bytes) => serde_json::from_slice(&bytes).map(Some).map_err(io::Error::other),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Every record in the run with ledger labels applied, ordered by
    /// dataset, problem, variant and trial.
    pub fn load_records(&self) -> io::Result<Vec<TrialRecord>> {
        let mut records = Vec::new();
        for entry in fs::read_dir(self.root.join("records"))? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                let record: TrialRecord = serde_json::from_slice(&fs::read(&path)?).map_err(io::Error::other)?;
                records.push(record);
            }
        }
        let mut labels: BTreeMap<String, Vec<FailureLabel>> = BTreeMap::new();
        for e in self.ledger()? {
            labels.entry(e.record_id).or_default().extend(e.labels);
        }
        for r in &mut records {
            if let Some(extra) = labels.remove(&r.record_id()) {
                r.labels.extend(extra);
            }
        }
        records.sort_by(|a, b| {
            (&a.dataset, &a.problem_id, a.variant.label(), a.trial_index).cmp(&(
                &b.dataset,
                &b.problem_id,
                b.variant.label(),
                b.trial_index,
            ))
        });
        Ok(records)
    }

    pub fn journal(&self) -> io::Result<Vec<JournalEntry>> {
        read_jsonl(&self.journal_path())
    }

    pub fn ledger(&self) -> io::Result<Vec<LedgerEntry>> {
        read_jsonl(&self.ledger_path())
    }

    fn log_finished(&self, record: &TrialRecord) -> io::Result<()> {
        let entry = JournalEntry {
            key: journal_key(&record.problem_id, record.trial_index, &record.variant),
            record_id: record.record_id(),
            problem_id: record.problem_id.clone(),
            trial_index: record.trial_index,
            variant: record.variant.label(),
            success: record.success(),
        };
        let _guard = self.journal.lock().unwrap_or_else(|e| e.into_inner());
        append_jsonl(&self.journal_path(), &entry)
    }

    /// Appends labels for a failed trial to the ledger.
    pub fn attach_labels(&self, record_id: &str, labels: Vec<FailureLabel>) -> Result<(), LabelError> {
        let mut record = self
            .load_record(record_id)?
            .ok_or_else(|| LabelError::UnknownRecord(record_id.into()))?;
        record.attach_labels(labels.iter().cloned())?;
        append_jsonl(
            &self.ledger_path(),
            &LedgerEntry {
                record_id: record_id.into(),
                labels,
            },
        )?;
        Ok(())
    }
}

/// Runs `config.trials` trials of every problem, seed tags `t1..tN`.
///
/// With a run directory, finished trials are journaled and skipped on the
/// next call, so an interrupted run resumes where it stopped. Records come
/// back in dataset order, trials ascending.
pub fn run_benchmark(
    dataset: &Dataset,
    config: &BenchConfig,
    ports: Ports<'_>,
    run_dir: Option<&RunDir>,
) -> Result<Vec<TrialRecord>, InfrastructureError> {
    let variant = config.trial.variant;
    let mut done: BTreeMap<(usize, u32), TrialRecord> = BTreeMap::new();
    let mut todo = Vec::new();

    let finished: HashSet<String> = match run_dir {
        Some(dir) => dir.journal()?.into_iter().map(|e| e.key).collect(),
        None => HashSet::new(),
    };
    for (pi, problem) in dataset.problems.iter().enumerate() {
        for t in 1..=config.trials.max(1) {
            let stored = match run_dir {
                Some(dir) if finished.contains(&journal_key(&problem.id, t, &variant)) => {
                    dir.load_record(&TrialRecord::id_for(&problem.id, t, &variant))?
                }
                _ => None,
            };
            match stored {
                Some(r) => {
                    done.insert((pi, t), r);
                }
                None => todo.push((pi, t)),
            }
        }
    }
    log::info!("{} trials to run, {} already journaled", todo.len(), done.len());

    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let results = Mutex::new(Vec::with_capacity(todo.len()));
    let failure: Mutex<Option<InfrastructureError>> = Mutex::new(None);

    let worker = || {
        loop {
            if stop.load(Ordering::SeqCst) {
                return;
            }
            let i = next.fetch_add(1, Ordering::SeqCst);
            let Some(&(pi, t)) = todo.get(i) else { return };
            let outcome = run_trial(&dataset.problems[pi], t, &config.trial, ports).and_then(|record| {
                if let Some(dir) = run_dir {
                    dir.save_record(&record)?;
                    dir.log_finished(&record)?;
                }
                Ok(record)
            });
            match outcome {
                Ok(record) => results.lock().unwrap().push(((pi, t), record)),
                Err(e) => {
                    stop.store(true, Ordering::SeqCst);
                    failure.lock().unwrap().get_or_insert(e);
                    return;
                }
            }
        }
    };
    let jobs = config.jobs.clamp(1, todo.len().max(1));
    if jobs == 1 {
        worker();
    } else {
        std::thread::scope(|s| {
            for _ in 0..jobs {
                s.spawn(worker);
            }
        });
    }

    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    done.extend(results.into_inner().unwrap());
    Ok(done.into_values().collect())
}
