use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{cache_key, BackendKind, ChatBackend, ChatRequest, ChatResponse, LlmError};

/// Append-only response store: `<dir>/<first 2 hex>/<key>.json`, one file
/// per request holding both request and response.
pub struct CachedBackend {
    dir: PathBuf,
    inner: Arc<dyn ChatBackend>,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    key: String,
    request: ChatRequest,
    response: StoredResponse,
}

#[derive(Serialize, Deserialize)]
struct StoredResponse {
    text: String,
    prompt_tokens: u64,
    completion_tokens: u64,
}

impl CachedBackend {
    pub fn new(dir: impl Into<PathBuf>, inner: Arc<dyn ChatBackend>) -> Self {
        CachedBackend { dir: dir.into(), inner }
    }

    pub fn entry_path(&self, key: &str) -> PathBuf {
        self.dir.join(&key[..2]).join(format!("{key}.json"))
    }

    fn read(path: &Path) -> Result<ChatResponse, LlmError> {
        let text = fs::read_to_string(path).map_err(|e| LlmError::Cache(format!("{}: {e}", path.display())))?;
        let entry: Entry =
            serde_json::from_str(&text).map_err(|e| LlmError::Cache(format!("{}: {e}", path.display())))?;
        Ok(ChatResponse {
            text: entry.response.text,
            prompt_tokens: entry.response.prompt_tokens,
            completion_tokens: entry.response.completion_tokens,
            backend: BackendKind::Cache,
        })
    }

    fn write(&self, path: &Path, entry: &Entry) -> Result<(), LlmError> {
        let err = |e: &dyn std::fmt::Display| LlmError::Cache(format!("{}: {e}", path.display()));
        let parent = path.parent().expect("entry path has a parent");
        fs::create_dir_all(parent).map_err(|e| err(&e))?;
        let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(|e| err(&e))?;
        let json = serde_json::to_string_pretty(entry).map_err(|e| err(&e))?;
        tmp.write_all(json.as_bytes()).map_err(|e| err(&e))?;
        match tmp.persist_noclobber(path) {
            Ok(_) => Ok(()),
            // A concurrent writer stored the same key first.
            Err(e) if path.exists() => {
                drop(e);
                Ok(())
            }
            Err(e) => Err(err(&e.error)),
        }
    }
}

impl ChatBackend for CachedBackend {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let key = cache_key(req);
        let path = self.entry_path(&key);
        if path.exists() {
            return Self::read(&path);
        }
        let resp = self.inner.complete(req)?;
        let entry = Entry {
            key,
            request: req.clone(),
            response: StoredResponse {
                text: resp.text.clone(),
                prompt_tokens: resp.prompt_tokens,
                completion_tokens: resp.completion_tokens,
            },
        };
        self.write(&path, &entry)?;
        Ok(resp)
    }
}
