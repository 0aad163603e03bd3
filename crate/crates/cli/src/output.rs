//! Report serialization: atomic file writes, finiteness guards, units.

use crate::CliError;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Units {
    Nats,
    Bits,
}

impl Units {
    pub fn label(self) -> &'static str {
        match self {
            Units::Nats => "nats",
            Units::Bits => "bits",
        }
    }

    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            Units::Nats => nats,
            Units::Bits => nats / std::f64::consts::LN_2,
        }
    }
}

/// Write atomically: temp file in the target directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("creating {}: {e}", dir.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
    ));
    std::fs::write(&tmp, contents)
        .map_err(|e| CliError::Io(format!("writing {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::Io(format!("renaming into {}: {e}", path.display())))?;
    Ok(())
}

/// Every number in an emitted JSON document must be finite; serde_json would
/// silently turn NaN/inf into null.
pub fn assert_finite(value: &serde_json::Value, context: &str) -> Result<(), CliError> {
    match value {
        serde_json::Value::Number(n) => {
            if n.as_f64().is_some_and(|v| !v.is_finite()) {
                return Err(CliError::Io(format!("non-finite number in {context}")));
            }
            Ok(())
        }
        serde_json::Value::Null => Err(CliError::Io(format!(
            "null (possibly a non-finite float) in {context}"
        ))),
        serde_json::Value::Array(items) => {
            for item in items {
                assert_finite(item, context)?;
            }
            Ok(())
        }
        serde_json::Value::Object(map) => {
            for (key, item) in map {
                // Optional report fields are allowed to be absent but not null.
                if item.is_null() {
                    return Err(CliError::Io(format!("null field {key:?} in {context}")));
                }
                assert_finite(item, &format!("{context}.{key}"))?;
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

pub fn out_path(out_dir: &Option<PathBuf>, name: &str) -> PathBuf {
    match out_dir {
        Some(dir) => dir.join(name),
        None => PathBuf::from(name),
    }
}
