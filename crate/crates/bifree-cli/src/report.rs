//! Report serialization and atomic file output.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::CliError;

/// Pretty JSON with a trailing newline. Field order is fixed by the types, so
/// equal values give equal bytes.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(format!("serializing report: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Writes `text` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_atomic(path, &to_json(value)?)
}
