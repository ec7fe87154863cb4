//! Flat `key = value` config files, merged underneath command-line flags.
//!
//! Each entry becomes a `--key=value` argument placed directly after the
//! subcommand name, ahead of the user's own arguments. Every argument takes
//! its last occurrence, so explicit flags win.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use crate::CliError;

/// One entry per non-blank, non-comment line.
pub fn parse_config(text: &str, origin: &Path) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "{}:{}: expected key = value, got {line:?}",
                origin.display(),
                i + 1
            )));
        };
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key.starts_with('-') {
            return Err(CliError::Usage(format!("{}:{}: bad key {key:?}", origin.display(), i + 1)));
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

/// Global flags that take a separate value argument.
const VALUE_FLAGS: [&str; 2] = ["--config", "--log"];

/// The `--config` path, if any, given before the subcommand.
fn config_path(args: &[OsString]) -> Result<Option<PathBuf>, CliError> {
    let mut i = 1;
    while i < args.len() {
        let arg = args[i].to_string_lossy();
        if arg == "--config" {
            let path = args
                .get(i + 1)
                .ok_or_else(|| CliError::Usage("--config needs a path".into()))?;
            return Ok(Some(PathBuf::from(path)));
        }
        if let Some(path) = arg.strip_prefix("--config=") {
            return Ok(Some(PathBuf::from(path)));
        }
        if !arg.starts_with('-') {
            return Ok(None);
        }
        i += if VALUE_FLAGS.contains(&arg.as_ref()) { 2 } else { 1 };
    }
    Ok(None)
}

/// Position of the subcommand name: the first argument that is neither a
/// global flag nor its value.
fn subcommand_index(args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let arg = args[i].to_string_lossy();
        if VALUE_FLAGS.contains(&arg.as_ref()) {
            i += 2;
            continue;
        }
        if !arg.starts_with('-') {
            return Some(i);
        }
        i += 1;
    }
    None
}

/// `args` with the config file's entries spliced in after the subcommand.
pub fn merge_config(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&args)? else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
    let entries = parse_config(&text, &path)?;
    let Some(at) = subcommand_index(&args) else {
        return Ok(args);
    };
    let mut merged = args[..=at].to_vec();
    merged.extend(entries.into_iter().map(|(k, v)| OsString::from(format!("--{k}={v}"))));
    merged.extend_from_slice(&args[at + 1..]);
    Ok(merged)
}
