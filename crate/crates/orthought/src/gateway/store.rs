//! Transcript store: one reviewable JSON file per request digest.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use orthought_core::{Completion, CompletionRequest, Message};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TRANSCRIPT_VERSION: u32 = 1;

/// The request fields that identify a completion. `max_tokens` and provider
/// metadata are deliberately absent.
#[derive(Serialize)]
struct KeyInput<'a> {
    v: u32,
    model: &'a str,
    temperature: f64,
    messages: &'a [Message],
    seed_tag: &'a str,
}

/// Hex SHA-256 over the canonical JSON of model, temperature, messages and
/// seed tag.
pub fn cache_key(request: &CompletionRequest) -> String {
    let input = KeyInput {
        v: TRANSCRIPT_VERSION,
        model: &request.model,
        // -0.0 and 0.0 are the same temperature.
        temperature: request.temperature + 0.0,
        messages: &request.messages,
        seed_tag: &request.seed_tag,
    };
    let canonical = serde_json::to_vec(&input).expect("key input serializes");
    hex::encode(Sha256::digest(&canonical))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub version: u32,
    pub key: String,
    pub request: CompletionRequest,
    pub completion: Completion,
}

#[derive(Debug)]
pub struct TranscriptStore {
    dir: PathBuf,
    write_lock: Mutex<()>,
}

impl TranscriptStore {
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            write_lock: Mutex::new(()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn load(&self, key: &str) -> io::Result<Option<Transcript>> {
        match fs::read(self.path_for(key)) {
            Ok(bytes) => {
                let t: Transcript = serde_json::from_slice(&bytes).map_err(io::Error::other)?;
                if t.version != TRANSCRIPT_VERSION {
                    return Err(io::Error::other(format!(
                        "transcript {key} has version {}, expected {TRANSCRIPT_VERSION}",
                        t.version
                    )));
                }
                Ok(Some(t))
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Writes via a temporary file and rename so readers never see a
    /// partial transcript.
    pub fn save(&self, request: &CompletionRequest, completion: &Completion) -> io::Result<String> {
        let key = cache_key(request);
        let transcript = Transcript {
            version: TRANSCRIPT_VERSION,
            key: key.clone(),
            request: request.clone(),
            completion: completion.clone(),
        };
        let mut body = serde_json::to_vec_pretty(&transcript).map_err(io::Error::other)?;
        body.push(b'\n');

        let _guard = self.write_lock.lock().unwrap_or_else(|e| e.into_inner());
        let tmp = self.dir.join(format!(".{key}.tmp"));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&body)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, self.path_for(&key))?;
        Ok(key)
    }

    /// Every stored transcript, ordered by key.
    pub fn entries(&self) -> io::Result<Vec<Transcript>> {
        let mut keys: Vec<String> = fs::read_dir(&self.dir)?
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let name = e.file_name().into_string().ok()?;
                name.strip_suffix(".json")
                    .filter(|k| !k.starts_with('.'))
                    .map(str::to_owned)
            })
            .collect();
        keys.sort();
        keys.iter().filter_map(|k| self.load(k).transpose()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use orthought_core::TokenUsage;
    use proptest::prelude::*;

    fn req(text: &str, seed: &str) -> CompletionRequest {
        CompletionRequest::single_turn("gpt-4.1-nano", 0.0, text, seed)
    }

    #[test]
    fn key_is_stable_and_seed_sensitive() {
        assert_eq!(cache_key(&req("a", "t1")), cache_key(&req("a", "t1")));
        assert_ne!(cache_key(&req("a", "t1")), cache_key(&req("a", "t2")));
        let mut r = req("a", "t1");
        r.max_tokens = Some(100);
        assert_eq!(cache_key(&r), cache_key(&req("a", "t1")));
        let mut r = req("a", "t1");
        r.temperature = -0.0;
        assert_eq!(cache_key(&r), cache_key(&req("a", "t1")));
        assert_eq!(cache_key(&r).len(), 64);
    }

    #[test]
    fn save_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let store = TranscriptStore::open(dir.path()).unwrap();
        let r = req("hello", "t1");
        let mut c = Completion::new("world", TokenUsage::new(3, 1));
        c.provider_meta.insert("z".into(), "1".into());
        c.provider_meta.insert("a".into(), "2".into());
        let key = store.save(&r, &c).unwrap();
        let t = store.load(&key).unwrap().unwrap();
        assert_eq!(t.request, r);
        assert_eq!(t.completion, c);
        assert!(store.load("missing").unwrap().is_none());
        assert_eq!(store.entries().unwrap().len(), 1);
    }

    proptest! {
        #[test]
        fn any_character_change_changes_key(s in "[ -~]{1,60}", idx in 0usize..60, c in proptest::char::range(' ', '~')) {
            let idx = idx % s.len();
            let mut t: Vec<char> = s.chars().collect();
            prop_assume!(t[idx] != c);
            t[idx] = c;
            let t: String = t.into_iter().collect();
            prop_assert_ne!(cache_key(&req(&s, "t1")), cache_key(&req(&t, "t1")));
        }
    }
}
