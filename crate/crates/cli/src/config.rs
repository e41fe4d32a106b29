//! `--config FILE` expansion: flat `key=value` lines become flags placed
//! before the command-line ones, so explicit flags win.

use crate::CliError;
use std::ffi::OsString;
use std::path::Path;

pub fn parse(text: &str, origin: &Path) -> Result<Vec<OsString>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!("{}:{}: expected key=value", origin.display(), i + 1)));
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(CliError::Config(format!("{}:{}: invalid key", origin.display(), i + 1)));
        }
        match value {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                out.push(format!("--{key}").into());
                out.push(value.into());
            }
        }
    }
    Ok(out)
}

/// Splice config-file flags in right after the subcommand name.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut config = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            let path = it.next().ok_or_else(|| CliError::Config("--config needs a path".into()))?;
            config = Some(path);
        } else if let Some(p) = s.strip_prefix("--config=") {
            config = Some(p.into());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else { return Ok(rest) };
    let path = std::path::PathBuf::from(path);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let flags = parse(&text, &path)?;
    // insert after binary and subcommand
    let at = rest.len().min(2);
    let mut out: Vec<OsString> = rest[..at].to_vec();
    out.extend(flags);
    out.extend_from_slice(&rest[at..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expands_before_explicit_flags() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.conf");
        std::fs::write(&p, "# grid point\nwindow = 5\nmin_count=3\nno-filter=true\nquiet=false\n").unwrap();
        let args: Vec<OsString> = ["lscd", "train", "--config", p.to_str().unwrap(), "--window", "7"]
            .iter()
            .map(Into::into)
            .collect();
        let out: Vec<String> = expand(args).unwrap().into_iter().map(|s| s.into_string().unwrap()).collect();
        assert_eq!(out, ["lscd", "train", "--window", "5", "--min-count", "3", "--no-filter", "--window", "7"]);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(parse("window 5", Path::new("x")).is_err());
        assert!(parse("config=other", Path::new("x")).is_err());
    }
}
