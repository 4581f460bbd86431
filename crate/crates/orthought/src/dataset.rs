//! Annotated datasets on disk.
//!
//! ```text
//! <dataset>/manifest.json           {"<id>": {ground_truth, problem_type, problem_size, details}, ...}
//! <dataset>/problems/<id>.txt       problem description
//! <dataset>/reference/<id>.model.txt   optional reference model
//! <dataset>/reference/<id>.code.txt    optional reference program
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use orthought_core::{Annotation, ModelingArtifacts, ProblemInstance, validate_artifacts};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read manifest {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("malformed manifest {path}: {message}")]
    ManifestMalformed { path: PathBuf, message: String },
    #[error("problem {id} is in the manifest but {path} is missing")]
    MissingDescription { id: String, path: PathBuf },
}

/// A problem-level finding that does not stop loading.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DatasetFlag {
    pub problem_id: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Reference {
    pub model_text: Option<String>,
    pub code_text: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub problems: Vec<ProblemInstance>,
    pub source_path: PathBuf,
    pub flags: Vec<DatasetFlag>,
    pub references: BTreeMap<String, Reference>,
}

impl Dataset {
    pub fn problem(&self, id: &str) -> Option<&ProblemInstance> {
        self.problems.iter().find(|p| p.id == id)
    }
}

fn read_optional(path: &Path) -> Result<Option<String>, DatasetError> {
    match fs::read_to_string(path) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(source) => Err(DatasetError::Io {
            path: path.into(),
            source,
        }),
    }
}

/// Loads `<dir>/manifest.json` and the description of every listed problem.
/// Problems come back ordered by id. Annotation inconsistencies are
/// collected in [`Dataset::flags`].
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
    let dir = dir.as_ref();
    let manifest_path = dir.join("manifest.json");
    let text = fs::read_to_string(&manifest_path).map_err(|source| DatasetError::Io {
        path: manifest_path.clone(),
        source,
    })?;
    let malformed = |message: String| DatasetError::ManifestMalformed {
        path: manifest_path.clone(),
        message,
    };
    let raw: serde_json::Map<String, serde_json::Value> =
        serde_json::from_str(&text).map_err(|e| malformed(e.to_string()))?;

    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());

    let mut entries: Vec<(String, Annotation)> = Vec::with_capacity(raw.len());
    for (id, value) in raw {
        if id.trim().is_empty() {
            return Err(malformed("empty problem id".into()));
        }
        let annotation: Annotation = serde_json::from_value(value).map_err(|e| malformed(format!("{id}: {e}")))?;
        entries.push((id, annotation));
    }
    entries.sort_by(|a, b| a.0.cmp(&b.0));

    let mut problems = Vec::with_capacity(entries.len());
    let mut flags = Vec::new();
    let mut references = BTreeMap::new();
    for (id, annotation) in entries {
        let path = dir.join("problems").join(format!("{id}.txt"));
        let description = read_optional(&path)?.ok_or_else(|| DatasetError::MissingDescription {
            id: id.clone(),
            path: path.clone(),
        })?;
        if description.trim().is_empty() {
            flags.push(DatasetFlag {
                problem_id: id.clone(),
                message: "description is empty".into(),
            });
        }
        for issue in annotation.issues() {
            flags.push(DatasetFlag {
                problem_id: id.clone(),
                message: issue.to_string(),
            });
        }
        let reference = Reference {
            model_text: read_optional(&dir.join("reference").join(format!("{id}.model.txt")))?,
            code_text: read_optional(&dir.join("reference").join(format!("{id}.code.txt")))?,
        };
        if reference != Reference::default() {
            references.insert(id.clone(), reference);
        }
        problems.push(
            ProblemInstance::new(id, description.trim_end())
                .with_annotation(annotation)
                .in_dataset(name.clone()),
        );
    }

    Ok(Dataset {
        name,
        problems,
        source_path: dir.into(),
        flags,
        references,
    })
}

/// Annotation flags plus defects found in reference models and programs.
pub fn validate_dataset(dataset: &Dataset) -> Vec<DatasetFlag> {
    let mut flags = dataset.flags.clone();
    for (id, reference) in &dataset.references {
        let artifacts = ModelingArtifacts {
            model_text: reference.model_text.clone().unwrap_or_default(),
            code_text: reference.code_text.clone().unwrap_or_default(),
            ..Default::default()
        };
        for defect in validate_artifacts(&artifacts) {
            flags.push(DatasetFlag {
                problem_id: id.clone(),
                message: format!("reference: {defect}"),
            });
        }
    }
    flags
}
