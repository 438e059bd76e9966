//! Key-value config files merged into the command line.
//!
//! Each non-comment line is `key = value`. Keys of the form
//! `subcommand.flag` apply to that subcommand; bare keys are global flags.
//! Config values are inserted before the user's own flags, and repeated
//! flags keep their last value, so the command line wins.

use anyhow::{bail, Context, Result};
use std::path::Path;

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigEntry {
    pub namespace: Option<String>,
    pub flag: String,
    pub value: String,
}

pub fn parse_config(text: &str) -> Result<Vec<ConfigEntry>> {
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("config line {}: expected `key = value`, got `{line}`", lineno + 1);
        };
        let key = key.trim();
        let value = value.trim().trim_matches('"').to_string();
        if key.is_empty() {
            bail!("config line {}: empty key", lineno + 1);
        }
        let (namespace, flag) = match key.split_once('.') {
            Some((ns, flag)) => (Some(ns.to_string()), flag.to_string()),
            None => (None, key.to_string()),
        };
        entries.push(ConfigEntry { namespace, flag, value });
    }
    Ok(entries)
}

fn as_args(entry: &ConfigEntry) -> Vec<String> {
    match entry.value.as_str() {
        "true" => vec![format!("--{}", entry.flag)],
        "false" => vec![],
        v => vec![format!("--{}", entry.flag), v.to_string()],
    }
}

/// Finds `--config <path>` or `--config=<path>` before the subcommand.
fn config_path(args: &[String], subcommands: &[&str]) -> Option<(usize, usize, String)> {
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if subcommands.contains(&a.as_str()) {
            return None;
        }
        if a == "--config" {
            return args.get(i + 1).map(|p| (i, 2, p.clone()));
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some((i, 1, p.to_string()));
        }
        i += 1;
    }
    None
}

/// Returns `args` with any config file's entries spliced in.
pub fn merge_config(args: Vec<String>, subcommands: &[&str]) -> Result<Vec<String>> {
    let Some((at, len, path)) = config_path(&args, subcommands) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path)).with_context(|| format!("reading config {path}"))?;
    let entries = parse_config(&text)?;
    let mut args = args;
    args.drain(at..at + len);
    let Some(sub_at) = args.iter().position(|a| subcommands.contains(&a.as_str())) else {
        return Ok(args);
    };
    let sub = args[sub_at].clone();
    let global: Vec<String> = entries
        .iter()
        .filter(|e| e.namespace.is_none())
        .flat_map(as_args)
        .collect();
    let local: Vec<String> = entries
        .iter()
        .filter(|e| e.namespace.as_deref() == Some(sub.as_str()))
        .flat_map(as_args)
        .collect();
    let mut merged = Vec::with_capacity(args.len() + global.len() + local.len());
    merged.push(args[0].clone());
    merged.extend(global);
    merged.extend_from_slice(&args[1..=sub_at]);
    merged.extend(local);
    merged.extend_from_slice(&args[sub_at + 1..]);
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_namespaced_and_global_keys() {
        let e = parse_config("# comment\nworkers = 2\ndecode-bench.p-grid = 0.01,0.02\n\nthermal.quantum = true\n").unwrap();
        assert_eq!(e.len(), 3);
        assert_eq!(e[0].namespace, None);
        assert_eq!(e[1].namespace.as_deref(), Some("decode-bench"));
        assert_eq!(e[1].flag, "p-grid");
        assert_eq!(e[1].value, "0.01,0.02");
        assert!(parse_config("no equals sign").is_err());
    }
}
