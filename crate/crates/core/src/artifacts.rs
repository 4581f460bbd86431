//! Extraction of the three Model Agent artifacts from one completion, and
//! non-blocking validation of what was extracted.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chat::TokenUsage;
use crate::sections::parse_model_sections;

pub const SOLUTION_PATH_OPEN: &str = "<solution_path>";
pub const SOLUTION_PATH_CLOSE: &str = "</solution_path>";
pub const MODEL_FENCE_TAG: &str = "model";
/// Fence info strings that mark solver code. `code` is what the repair
/// prompt asks for; `python` is what the modeling prompt asks for.
pub const CODE_FENCE_TAGS: [&str; 3] = ["python", "py", "code"];

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ModelingArtifacts {
    pub solution_path: String,
    pub model_text: String,
    pub code_text: String,
    pub raw_completion: String,
    pub usage: TokenUsage,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    /// Carries whatever else was extracted so the failed trial keeps it.
    #[error("completion contains no code block")]
    NoCodeBlock(Box<ModelingArtifacts>),
}

/// A fenced block: its info string and body (fence lines excluded).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fence<'a> {
    pub tag: &'a str,
    pub body: String,
}

/// Scans for ```` ```tag ```` ... ```` ``` ```` blocks. An unterminated block
/// runs to the end of the text.
pub fn fences(text: &str) -> Vec<Fence<'_>> {
    let mut out = Vec::new();
    let mut open: Option<(&str, Vec<&str>)> = None;
    for line in text.lines() {
        let t = line.trim();
        match &mut open {
            None => {
                if let Some(info) = t.strip_prefix("```") {
                    let tag = info.split_whitespace().next().unwrap_or("");
                    open = Some((tag, Vec::new()));
                }
            }
            Some((tag, body)) => {
                if t == "```" {
                    out.push(Fence {
                        tag,
                        body: body.join("\n"),
                    });
                    open = None;
                } else {
                    body.push(line);
                }
            }
        }
    }
    if let Some((tag, body)) = open {
        out.push(Fence {
            tag,
            body: body.join("\n"),
        });
    }
    out
}

fn is_code_tag(tag: &str) -> bool {
    CODE_FENCE_TAGS.iter().any(|t| tag.eq_ignore_ascii_case(t))
}

/// Body of the last code fence, if any. Later blocks win: models often
/// revise code after discussing it.
pub fn extract_code(text: &str) -> Option<String> {
    fences(text)
        .into_iter()
        .rev()
        .find(|f| is_code_tag(f.tag))
        .map(|f| f.body)
}

fn extract_solution_path(text: &str) -> String {
    let Some(start) = text.find(SOLUTION_PATH_OPEN) else {
        return String::new();
    };
    let body = &text[start + SOLUTION_PATH_OPEN.len()..];
    let end = body.find(SOLUTION_PATH_CLOSE).unwrap_or(body.len());
    body[..end].trim().into()
}

pub fn extract_artifacts(completion_text: &str) -> Result<ModelingArtifacts, ExtractError> {
    let model_text = fences(completion_text)
        .into_iter()
        .find(|f| f.tag.eq_ignore_ascii_case(MODEL_FENCE_TAG))
        .map(|f| f.body)
        .unwrap_or_default();
    let mut artifacts = ModelingArtifacts {
        solution_path: extract_solution_path(completion_text),
        model_text,
        code_text: String::new(),
        raw_completion: completion_text.into(),
        usage: TokenUsage::default(),
    };
    match extract_code(completion_text) {
        Some(code) => {
            artifacts.code_text = code;
            Ok(artifacts)
        }
        None => Err(ExtractError::NoCodeBlock(Box::new(artifacts))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Defect {
    MissingModel,
    MalformedModel,
    MissingCode,
    NoFunctionDefinition,
    NoReturnContract,
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::MissingModel => "missing model",
            Self::MalformedModel => "malformed model",
            Self::MissingCode => "missing code",
            Self::NoFunctionDefinition => "no function definition",
            Self::NoReturnContract => "no return contract",
        })
    }
}

pub fn validate_artifacts(artifacts: &ModelingArtifacts) -> Vec<Defect> {
    let mut defects = Vec::new();
    if artifacts.model_text.trim().is_empty() {
        defects.push(Defect::MissingModel);
    } else if parse_model_sections(&artifacts.model_text).is_err() {
        defects.push(Defect::MalformedModel);
    }
    if artifacts.code_text.trim().is_empty() {
        defects.push(Defect::MissingCode);
        return defects;
    }
    let keywords = python_keywords(&artifacts.code_text);
    if !keywords.contains(&"def") {
        defects.push(Defect::NoFunctionDefinition);
    } else if !keywords.contains(&"return") {
        defects.push(Defect::NoReturnContract);
    }
    defects
}

/// Identifier tokens of Python source that sit outside comments and string
/// literals. Enough to tell `def`/`return` statements from those words in a
/// docstring or `# comment`.
pub fn python_keywords(src: &str) -> Vec<&str> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if b == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
        } else if b == b'"' || b == b'\'' {
            i = skip_string(bytes, i);
        } else if b.is_ascii_alphabetic() || b == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            // String prefixes such as f"..." or rb'...'.
            let word = &src[start..i];
            if i < bytes.len()
                && (bytes[i] == b'"' || bytes[i] == b'\'')
                && word.len() <= 2
                && word.bytes().all(|c| b"rRbBuUfF".contains(&c))
            {
                i = skip_string(bytes, i);
            } else {
                out.push(word);
            }
        } else {
            i += 1;
        }
    }
    out
}

fn skip_string(bytes: &[u8], start: usize) -> usize {
    let quote = bytes[start];
    let triple = bytes.len() >= start + 3 && bytes[start + 1] == quote && bytes[start + 2] == quote;
    let mut i = start + if triple { 3 } else { 1 };
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            b'\n' if !triple => return i + 1,
            q if q == quote => {
                if !triple {
                    return i + 1;
                }
                if bytes.len() >= i + 3 && bytes[i + 1] == quote && bytes[i + 2] == quote {
                    return i + 3;
                }
                i += 1;
            }
            _ => i += 1,
        }
    }
    bytes.len()
}
