//! Content-addressed result cache: `<root>/<kind>/<sha256>.json`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use dilates_core::search::{ResultCache, SearchResult};
use dilates_core::Error;
use serde::de::DeserializeOwned;
use serde::Serialize;

pub const CACHE_DIR_ENV: &str = "DILATES_CACHE_DIR";
pub const SEARCH_KIND: &str = "search";

#[derive(Debug, Clone)]
pub struct FileCache {
    root: PathBuf,
}

impl FileCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        FileCache { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, kind: &str, digest: &str) -> PathBuf {
        self.root.join(kind).join(format!("{digest}.json"))
    }

    /// A missing or unreadable entry is a miss.
    pub fn load<T: DeserializeOwned>(&self, kind: &str, digest: &str) -> Option<T> {
        let text = fs::read_to_string(self.path(kind, digest)).ok()?;
        serde_json::from_str(&text).ok()
    }

    pub fn store<T: Serialize>(&self, kind: &str, digest: &str, value: &T) -> std::io::Result<PathBuf> {
        let path = self.path(kind, digest);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }

    /// Every parseable entry of a kind, in file-name order.
    pub fn entries<T: DeserializeOwned>(&self, kind: &str) -> std::io::Result<Vec<T>> {
        let dir = self.root.join(kind);
        let listing = match fs::read_dir(&dir) {
            Ok(listing) => listing,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e),
        };
        let mut paths: Vec<PathBuf> = listing
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        Ok(paths
            .iter()
            .filter_map(|p| fs::read_to_string(p).ok())
            .filter_map(|text| serde_json::from_str(&text).ok())
            .collect())
    }
}

impl ResultCache for FileCache {
    fn get(&mut self, digest: &str) -> Option<SearchResult> {
        self.load(SEARCH_KIND, digest)
    }

    fn put(&mut self, result: &SearchResult) -> dilates_core::Result<()> {
        self.store(SEARCH_KIND, &result.task_digest, result)
            .map(|_| ())
            .map_err(|e| Error::InvalidParameter(format!("cache write failed: {e}")))
    }
}

/// Writes to a temporary file in the target directory, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
