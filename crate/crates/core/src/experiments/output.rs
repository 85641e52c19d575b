//! Atomic, schema-tagged output files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Version stamped into every CSV header comment.
pub const SCHEMA_VERSION: u32 = 1;

/// Writes `contents` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp: PathBuf = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// A CSV document whose first line is `# usv-auv <kind> v<version>`.
#[derive(Debug, Clone)]
pub struct CsvDoc {
    text: String,
}

impl CsvDoc {
    pub fn new(kind: &str, header: &str) -> Self {
        Self {
            text: format!("# usv-auv {kind} v{SCHEMA_VERSION}\n{header}\n"),
        }
    }

    pub fn row(&mut self, row: &str) {
        self.text.push_str(row);
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.text.as_bytes())
    }
}
