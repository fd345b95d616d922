//! `--config file.toml` support. Keys are long flag names (`lambda-star` or
//! `lambda_star`); the file's values are spliced in right after the
//! subcommand so anything given on the command line wins.

use std::ffi::OsString;
use std::path::Path;

use crate::args::SUBCOMMANDS;
use crate::io::{CliError, CliResult};

/// Replace `--config PATH` in `argv` by the flags the file holds.
pub fn expand(mut argv: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let mut path = None;
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].to_string_lossy().into_owned();
        if a == "--config" {
            if i + 1 >= argv.len() {
                return Err(CliError::Config("--config needs a path".into()));
            }
            path = Some(argv[i + 1].clone());
            argv.drain(i..i + 2);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(OsString::from(p));
            argv.remove(i);
        } else {
            i += 1;
        }
    }
    let Some(path) = path else { return Ok(argv) };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| CliError::Config(format!("{}: {e}", Path::new(&path).display())))?;
    let (command, flags) = flags_from_toml(&text)?;
    let at = match argv.iter().position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref())) {
        Some(k) => k + 1,
        None => {
            let Some(c) = command else {
                return Err(CliError::Config("no subcommand given and the config file has no `command` key".into()));
            };
            argv.push(c.into());
            argv.len()
        }
    };
    argv.splice(at..at, flags.into_iter().map(OsString::from));
    Ok(argv)
}

/// Flags equivalent to a TOML table, plus its optional `command` entry.
pub fn flags_from_toml(text: &str) -> CliResult<(Option<String>, Vec<String>)> {
    let table: toml::Table = text.parse().map_err(|e| CliError::Config(format!("config file: {e}")))?;
    let mut command = None;
    let mut flags = Vec::new();
    for (key, value) in table {
        if key == "command" {
            match value {
                toml::Value::String(s) => command = Some(s),
                _ => return Err(CliError::Config("`command` must be a string".into())),
            }
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            toml::Value::Boolean(true) => flags.push(flag),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                let parts = items.iter().map(|v| scalar(&key, v)).collect::<CliResult<Vec<_>>>()?;
                flags.push(flag);
                flags.push(parts.join(","));
            }
            v => {
                flags.push(flag);
                flags.push(scalar(&key, &v)?);
            }
        }
    }
    Ok((command, flags))
}

fn scalar(key: &str, v: &toml::Value) -> CliResult<String> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        _ => Err(CliError::Config(format!("`{key}` must be a string, number or list of those"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn toml_values_become_flags() {
        let (cmd, flags) = flags_from_toml("command = \"pvalue\"\nlambda_star = 1.65\nL = 5000\nstat = \"l1\"\nt-star = [1, 2.5]\nquiet = false\n").unwrap();
        assert_eq!(cmd.as_deref(), Some("pvalue"));
        assert_eq!(flags, ["--L", "5000", "--lambda-star", "1.65", "--stat", "l1", "--t-star", "1,2.5"]);
    }

    #[test]
    fn nested_tables_are_rejected() {
        assert!(flags_from_toml("[a]\nb = 1\n").is_err());
    }

    #[test]
    fn file_flags_go_after_the_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        std::fs::write(&cfg, "seed = 3\n").unwrap();
        let argv = os(&["alasso", "--threads", "2", "gen-data", "--config", cfg.to_str().unwrap(), "--seed", "9"]);
        let out = expand(argv).unwrap();
        assert_eq!(out, os(&["alasso", "--threads", "2", "gen-data", "--seed", "3", "--seed", "9"]));
    }

    #[test]
    fn command_key_supplies_the_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        std::fs::write(&cfg, "command = \"gen-data\"\nn = 5\n").unwrap();
        let out = expand(os(&["alasso", &format!("--config={}", cfg.display())])).unwrap();
        assert_eq!(out, os(&["alasso", "gen-data", "--n", "5"]));
    }
}
