//! One JSON snapshot per session, replaced atomically.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::ApiError;
use crate::session::{Session, SessionFile};

#[derive(Debug, Clone)]
pub struct Store {
    dir: PathBuf,
}

/// Session ids are generated as lowercase hex; anything else is rejected
/// before it can reach the filesystem.
pub fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_hexdigit() || b == b'-')
}

impl Store {
    pub fn open(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }

    pub fn exists(&self, id: &str) -> bool {
        valid_id(id) && self.path(id).is_file()
    }

    /// Write to a temporary file, sync, then rename over the snapshot.
    pub fn save(&self, session: &Session) -> Result<(), ApiError> {
        let id = session.id();
        let body = serde_json::to_vec_pretty(&session.to_file())
            .map_err(|e| ApiError::internal(format!("serializing session {id}: {e}")))?;
        let tmp = self.dir.join(format!(".{id}.json.tmp"));
        let io = |e: std::io::Error| ApiError::internal(format!("writing session {id}: {e}"));
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(&body).map_err(io)?;
        f.sync_all().map_err(io)?;
        fs::rename(&tmp, self.path(id)).map_err(io)
    }

    pub fn load_file(&self, id: &str) -> Result<SessionFile, ApiError> {
        if !self.exists(id) {
            return Err(ApiError::not_found(format!("no session {id:?}")));
        }
        let bytes = fs::read(self.path(id))
            .map_err(|e| ApiError::internal(format!("reading session {id}: {e}")))?;
        serde_json::from_slice(&bytes)
            .map_err(|e| ApiError::internal(format!("corrupt snapshot for session {id}: {e}")))
    }

    pub fn load(&self, id: &str) -> Result<Session, ApiError> {
        Session::from_file(self.load_file(id)?)
    }
}
