//! `key = value` files merged into the argument list.

use std::path::Path;

use crate::args::{NESTED, TOP_LEVEL};
use crate::UsageError;

/// Parses a config file into `--key value` tokens. `true` and `false`
/// values toggle switches.
pub fn config_tokens(text: &str, path: &Path) -> Result<Vec<String>, UsageError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(UsageError(format!("{}:{}: expected `key = value`", path.display(), idx + 1)));
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(UsageError(format!("{}:{}: invalid key", path.display(), idx + 1)));
        }
        match value {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            _ => {
                out.push(format!("--{key}"));
                out.push(value.to_string());
            }
        }
    }
    Ok(out)
}

/// Finds `--config` in `argv` and splices the file's tokens in right after
/// the subcommand path, so that flags given later on the command line win.
pub fn expand(argv: Vec<String>) -> Result<Vec<String>, UsageError> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        if a == "--config" {
            path = argv.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else {
        return Ok(argv);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    let tokens = config_tokens(&text, path)?;
    let Some(top) = argv.iter().position(|a| TOP_LEVEL.contains(&a.as_str())) else {
        return Ok(argv);
    };
    let insert_at = if NESTED.contains(&argv[top].as_str()) { (top + 2).min(argv.len()) } else { top + 1 };
    let mut out = argv[..insert_at].to_vec();
    out.extend(tokens);
    out.extend_from_slice(&argv[insert_at..]);
    Ok(out)
}
