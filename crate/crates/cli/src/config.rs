//! Flat `key = value` configuration files.
//!
//! Each key is the long name of a flag of the chosen subcommand, and the
//! special key `command` names the subcommand itself. A value of `true`
//! turns a switch on and `false` leaves it off. Blank lines and lines
//! starting with `#` are ignored.
//!
//! ```text
//! command = simulate
//! preset = fig1-row3
//! seed = 7
//! out = row3.csv
//! ```
//!
//! Flags given on the command line override the file.

use std::ffi::OsString;
use std::path::Path;

use crate::error::{CliError, CliResult};

pub const COMMANDS: [&str; 5] = ["simulate", "field", "converge", "scale-check", "render"];

/// Parsed entries of a config file, in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub command: Option<String>,
    pub entries: Vec<(String, String)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut file = ConfigFile::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("config line {}: expected `key = value`, got `{line}`", n + 1)))?;
            let key = key.trim().trim_start_matches("--").to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(CliError::Config(format!("config line {}: empty key", n + 1)));
            }
            if key == "command" {
                file.command = Some(value);
            } else {
                file.entries.push((key, value));
            }
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn as_args(&self) -> Vec<OsString> {
        let mut out = Vec::new();
        for (key, value) in &self.entries {
            match value.as_str() {
                "false" => {}
                "true" => out.push(format!("--{key}").into()),
                _ => {
                    out.push(format!("--{key}").into());
                    out.push(value.into());
                }
            }
        }
        out
    }
}

/// Splits out `--config <file>` and splices the file's entries in front of
/// the user's own flags, so that the latter take precedence.
pub fn expand_args<I, T>(args: I) -> CliResult<Vec<OsString>>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let mut iter = args.into_iter().map(Into::into);
    let bin = iter.next().unwrap_or_else(|| "lmsm".into());
    let mut rest = Vec::new();
    let mut config_path: Option<OsString> = None;
    while let Some(arg) = iter.next() {
        let text = arg.to_string_lossy().into_owned();
        if text == "--config" {
            let path = iter
                .next()
                .ok_or_else(|| CliError::Config("--config needs a file path".into()))?;
            config_path = Some(path);
        } else if let Some(path) = text.strip_prefix("--config=") {
            config_path = Some(path.into());
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = config_path else {
        let mut all = vec![bin];
        all.extend(rest);
        return Ok(all);
    };
    let file = ConfigFile::load(Path::new(&path))?;

    let given = rest
        .iter()
        .position(|a| COMMANDS.contains(&a.to_string_lossy().as_ref()));
    let (command, user_flags) = match (given, &file.command) {
        (Some(i), _) => {
            let cmd = rest.remove(i);
            (cmd, rest)
        }
        (None, Some(cmd)) => (cmd.into(), rest),
        (None, None) => {
            return Err(CliError::Config(
                "no subcommand given on the command line or as `command` in the config file".into(),
            ))
        }
    };
    let mut all = vec![bin, command];
    all.extend(file.as_args());
    all.extend(user_flags);
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_comments_and_switches() {
        let f = ConfigFile::parse("# run\ncommand = simulate\n\nseed=7\nallow-boundary = true\nno-svg = false\n").unwrap();
        assert_eq!(f.command.as_deref(), Some("simulate"));
        assert_eq!(f.entries.len(), 3);
        let args: Vec<String> = f.as_args().into_iter().map(|a| a.into_string().unwrap()).collect();
        assert_eq!(args, ["--seed", "7", "--allow-boundary"]);
    }

    #[test]
    fn rejects_lines_without_equals() {
        assert!(matches!(ConfigFile::parse("seed 7"), Err(CliError::Config(_))));
        assert!(matches!(ConfigFile::parse("= 7"), Err(CliError::Config(_))));
    }

    #[test]
    fn passes_through_without_config() {
        let args = expand_args(["lmsm", "simulate", "--seed", "3"]).unwrap();
        assert_eq!(args.len(), 4);
    }
}
