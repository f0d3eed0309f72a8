//! Config files and their merge into the argument list.
//!
//! Config entries become `--key=value` tokens placed right after the
//! subcommand name, ahead of everything the user typed there, and every
//! argument overrides itself, so flags on the command line win.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Command};

use crate::error::{CliError, Result};

const GLOBAL_VALUE_FLAGS: [&str; 5] = ["--seed", "--threads", "--out", "--format", "--config"];

pub fn parse_config(path: &Path, text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: &str| CliError::ConfigSyntax { path: path.to_path_buf(), line: k + 1, msg: msg.into() };
        let (key, value) = line.split_once('=').ok_or_else(|| err("expected `key = value`"))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(err("empty key"));
        }
        let mut value = value.trim();
        if value.len() >= 2 && value.starts_with('"') && value.ends_with('"') {
            value = &value[1..value.len() - 1];
        }
        out.push((k + 1, key.replace('_', "-"), value.to_string()));
    }
    Ok(out)
}

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

fn subcommand_position(argv: &[OsString], cmd: &Command) -> Option<usize> {
    let mut i = 1;
    while i < argv.len() {
        let s = argv[i].to_string_lossy();
        if GLOBAL_VALUE_FLAGS.contains(&s.as_ref()) {
            i += 2;
            continue;
        }
        if s.starts_with('-') {
            i += 1;
            continue;
        }
        return cmd.find_subcommand(s.as_ref()).map(|_| i);
    }
    None
}

/// Returns `argv` with the config file's entries spliced in.
pub fn merge(argv: Vec<OsString>, cmd: &Command) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io { path: path.clone(), source })?;
    let entries = parse_config(&path, &text)?;
    let Some(pos) = subcommand_position(&argv, cmd) else {
        return Ok(argv);
    };
    let name = argv[pos].to_string_lossy().to_string();
    let sub = cmd.find_subcommand(&name).expect("subcommand found above");
    let mut inserted = Vec::new();
    for (line, key, value) in entries {
        if key == "config" {
            return Err(CliError::ConfigSyntax { path, line, msg: "a config file cannot name another".into() });
        }
        let arg = sub
            .get_arguments()
            .chain(cmd.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| CliError::UnknownKey { path: path.clone(), key: key.clone(), command: name.clone() })?;
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match value.as_str() {
                "true" => inserted.push(OsString::from(format!("--{key}"))),
                "false" => {}
                _ => {
                    return Err(CliError::ConfigSyntax { path, line, msg: format!("`{key}` takes true or false") });
                }
            }
        } else {
            inserted.push(OsString::from(format!("--{key}={value}")));
        }
    }
    let mut out = argv[..=pos].to_vec();
    out.extend(inserted);
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_quotes() {
        let got = parse_config(Path::new("c"), "# top\nbeta = 1.5  # inline\n\nn_levels = \"1,2\"\n").unwrap();
        assert_eq!(got, vec![(2, "beta".into(), "1.5".into()), (4, "n-levels".into(), "1,2".into())]);
    }

    #[test]
    fn rejects_lines_without_equals() {
        assert!(matches!(parse_config(Path::new("c"), "beta 1"), Err(CliError::ConfigSyntax { line: 1, .. })));
    }
}
