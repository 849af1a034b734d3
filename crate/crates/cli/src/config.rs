//! `key = value` config files, spliced into the argument list ahead of the
//! command-line flags.

use std::fs;

/// Keys that are boolean switches rather than valued flags.
const SWITCHES: &[&str] = &["sweep"];

/// Parses a flat `key = value` file. Blank lines and lines starting with `#`
/// are skipped.
pub fn parse(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected `key = value`", i + 1))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || key.starts_with('-') {
            return Err(format!("config line {}: bad key {key:?}", i + 1));
        }
        out.push((key.to_string(), value.to_string()));
    }
    Ok(out)
}

fn config_path(args: &[String]) -> Result<Option<String>, String> {
    for (i, a) in args.iter().enumerate() {
        if a == "--config" {
            return args
                .get(i + 1)
                .cloned()
                .map(Some)
                .ok_or_else(|| "--config needs a path".to_string());
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Ok(Some(p.to_string()));
        }
    }
    Ok(None)
}

fn given_on_command_line(args: &[String], key: &str) -> bool {
    let flag = format!("--{key}");
    args.iter().any(|a| {
        *a == flag
            || a.strip_prefix(&flag)
                .is_some_and(|rest| rest.starts_with('='))
    })
}

/// Returns `args` with the entries of the `--config` file inserted after the
/// subcommand, skipping keys that also appear as flags.
pub fn expand(args: Vec<String>) -> Result<Vec<String>, String> {
    let Some(path) = config_path(&args)? else {
        return Ok(args);
    };
    if args.len() < 2 || args[1].starts_with('-') {
        return Ok(args);
    }
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let mut extra = Vec::new();
    for (key, value) in parse(&text)? {
        if key == "config" || given_on_command_line(&args, &key) {
            continue;
        }
        if SWITCHES.contains(&key.as_str()) {
            match value.as_str() {
                "true" => extra.push(format!("--{key}")),
                "false" => {}
                _ => return Err(format!("config key {key}: expected true or false")),
            }
        } else {
            extra.push(format!("--{key}={value}"));
        }
    }
    let mut out = args[..2].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[2..]);
    Ok(out)
}
