//! Config files and argv assembly.
//!
//! A config file holds `key = value` lines; each becomes `--key=value`.
//! `command = backtest kupiec` names the subcommand when argv has none.
//! Boolean flags take `true` or `false`. Entries are placed ahead of the
//! command-line flags so the command line wins.

use std::path::Path;

use clap::CommandFactory;
use sha2::{Digest, Sha256};

use crate::args::Cli;
use crate::CliError;

const GLOBAL_VALUE_FLAGS: [&str; 3] = ["--seed", "--out", "--config"];

#[derive(Debug, Default, PartialEq)]
pub struct ConfigFile {
    pub command: Vec<String>,
    pub flags: Vec<String>,
}

pub fn parse_config(text: &str) -> Result<ConfigFile, CliError> {
    let mut cfg = ConfigFile::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| CliError::Config(format!("config line {}: {msg}", i + 1));
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(err(format!("bad key `{key}`")));
        }
        match key {
            "command" => cfg.command = value.split_whitespace().map(str::to_string).collect(),
            "config" => return Err(err("config files cannot include other config files".into())),
            _ => match value {
                "true" => cfg.flags.push(format!("--{key}")),
                "false" => {}
                _ => cfg.flags.push(format!("--{key}={value}")),
            },
        }
    }
    Ok(cfg)
}

fn take_config_path(raw: &mut Vec<String>) -> Result<Option<String>, CliError> {
    let Some(i) = raw
        .iter()
        .position(|a| a == "--config" || a.starts_with("--config="))
    else {
        return Ok(None);
    };
    let arg = raw.remove(i);
    if let Some(v) = arg.strip_prefix("--config=") {
        return Ok(Some(v.to_string()));
    }
    if i < raw.len() {
        Ok(Some(raw.remove(i)))
    } else {
        Err(CliError::Config("--config needs a file".into()))
    }
}

/// Index just past the subcommand path in `raw`.
fn subcommand_end(raw: &[String]) -> usize {
    let mut cmd = Cli::command();
    let mut end = 0;
    let mut i = 0;
    while i < raw.len() {
        let t = raw[i].as_str();
        if let Some(sub) = cmd.find_subcommand(t).cloned() {
            cmd = sub;
            i += 1;
            end = i;
        } else if GLOBAL_VALUE_FLAGS.contains(&t) {
            i += 2;
        } else if t.starts_with('-') {
            i += 1;
        } else {
            break;
        }
    }
    end
}

/// Merges the config file named in `raw`, if any, into the argument list.
pub fn assemble_args(mut raw: Vec<String>) -> Result<Vec<String>, CliError> {
    let Some(path) = take_config_path(&mut raw)? else {
        return Ok(raw);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| CliError::Config(format!("config {path}: {e}")))?;
    let cfg = parse_config(&text)?;
    let end = subcommand_end(&raw);
    let mut out = Vec::with_capacity(raw.len() + cfg.flags.len() + cfg.command.len());
    if end == 0 {
        out.extend(cfg.command);
        out.extend(cfg.flags);
        out.extend(raw);
    } else {
        out.extend_from_slice(&raw[..end]);
        out.extend(cfg.flags);
        out.extend_from_slice(&raw[end..]);
    }
    Ok(out)
}

/// SHA-256 of the effective arguments, output path excluded.
pub fn config_digest(args: &[String]) -> String {
    let mut h = Sha256::new();
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
            continue;
        }
        if a == "--out" {
            skip = true;
            continue;
        }
        if a.starts_with("--out=") {
            continue;
        }
        h.update(a.as_bytes());
        h.update([0u8]);
    }
    hex::encode(h.finalize())
}
