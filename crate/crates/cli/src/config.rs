//! Merges a JSON config file into argv. Config values are inserted right
//! after the subcommand name, ahead of the user's own flags; with
//! `args_override_self` the later (explicit) occurrence wins.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::{Map, Value};

use crate::args::SUBCOMMANDS;

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut iter = argv.iter().skip(1);
    while let Some(arg) = iter.next() {
        let arg = arg.to_string_lossy();
        if arg == "--" {
            break;
        }
        if arg == "--config" {
            return iter.next().map(PathBuf::from);
        }
        if let Some(path) = arg.strip_prefix("--config=") {
            return Some(PathBuf::from(path));
        }
    }
    None
}

fn flags_from(section: &Map<String, Value>) -> Result<Vec<OsString>> {
    let mut out = Vec::new();
    for (key, value) in section {
        let flag = format!("--{}", key.replace('_', "-"));
        if flag == "--config" {
            bail!("config file cannot name another config file");
        }
        let values = match value {
            Value::Array(items) => items.clone(),
            other => vec![other.clone()],
        };
        for item in values {
            match item {
                Value::Null | Value::Bool(false) => {}
                Value::Bool(true) => out.push(flag.clone().into()),
                Value::String(s) => {
                    out.push(flag.clone().into());
                    out.push(s.into());
                }
                Value::Number(n) => {
                    out.push(flag.clone().into());
                    out.push(n.to_string().into());
                }
                other => bail!("config key {key:?}: unsupported value {other}"),
            }
        }
    }
    Ok(out)
}

/// Returns argv with config-file flags spliced in.
pub fn merge(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path).with_context(|| format!("reading config {}", path.display()))?;
    let root: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    let root = root
        .as_object()
        .ok_or_else(|| anyhow!("config {} must hold a JSON object", path.display()))?;

    let Some(position) = argv
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
    else {
        return Ok(argv);
    };
    let subcommand = argv[position].to_string_lossy().into_owned();
    let section = match root.get(&subcommand) {
        Some(Value::Object(section)) => section.clone(),
        _ if root.keys().any(|k| SUBCOMMANDS.contains(&k.as_str())) => Map::new(),
        _ => root.clone(),
    };

    let mut merged = argv[..=position].to_vec();
    merged.extend(flags_from(&section)?);
    merged.extend(argv[position + 1..].iter().cloned());
    Ok(merged)
}
