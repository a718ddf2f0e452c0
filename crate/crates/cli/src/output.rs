//! Artifact writing. Every file embeds the crate version and the resolved
//! config, so outputs are self-describing and reruns are diffable.

use std::path::Path;

use serde::Serialize;
use serde_json::json;

use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn config_json<T: Serialize>(config: &T) -> Result<serde_json::Value, CliError> {
    serde_json::to_value(config).map_err(|e| CliError::Io(format!("encoding config: {e}")))
}

/// CSV body prefixed with `# version` and `# config` comment lines.
pub fn csv_document(config: &serde_json::Value, body: &str) -> String {
    format!("# version: {VERSION}\n# config: {config}\n{body}")
}

pub fn json_document(
    config: &serde_json::Value,
    results: serde_json::Value,
) -> Result<String, CliError> {
    let doc = json!({ "version": VERSION, "config": config, "results": results });
    let mut text = serde_json::to_string_pretty(&doc)
        .map_err(|e| CliError::Io(format!("encoding results: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// Write `<base>.csv` (when present) and `<base>.json`, or stream both to
/// stdout when no output base was given.
pub fn emit(out: Option<&Path>, csv: Option<&str>, json_text: &str) -> Result<(), CliError> {
    let Some(base) = out else {
        if let Some(csv_text) = csv {
            print!("{csv_text}");
        }
        print!("{json_text}");
        return Ok(());
    };
    if let Some(parent) = base.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Io(format!("creating {}: {e}", parent.display())))?;
        }
    }
    let mut written = Vec::new();
    if let Some(csv_text) = csv {
        let path = base.with_extension("csv");
        std::fs::write(&path, csv_text)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
        written.push(path);
    }
    let path = base.with_extension("json");
    std::fs::write(&path, json_text)
        .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
    written.push(path);
    for path in written {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}
