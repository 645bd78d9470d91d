//! `key = value` configuration files, merged into the argument vector.

use std::fs;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: expected `key = value`")]
    Syntax { path: String, line: usize },
}

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse(text: &str, path: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            path: path.to_owned(),
            line: i + 1,
        })?;
        let key = key.trim().trim_start_matches("--");
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                path: path.to_owned(),
                line: i + 1,
            });
        }
        out.push((key.to_owned(), value.trim().to_owned()));
    }
    Ok(out)
}

fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_owned());
        }
    }
    None
}

fn mentions(args: &[String], key: &str) -> bool {
    let flag = format!("--{key}");
    args.iter()
        .any(|a| *a == flag || a.strip_prefix(&flag).is_some_and(|r| r.starts_with('=')))
}

/// Inserts `--key value` for every config entry whose flag is absent from
/// `args`, directly after the subcommand name.
pub fn merge(args: Vec<String>) -> Result<Vec<String>, ConfigError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).map_err(|source| ConfigError::Io {
        path: path.clone(),
        source,
    })?;
    let entries = parse(&text, &path)?;
    let at = 2.min(args.len());
    let mut merged: Vec<String> = args[..at].to_vec();
    for (key, value) in entries {
        if key != "config" && !mentions(&args, &key) {
            merged.push(format!("--{key}"));
            merged.push(value);
        }
    }
    merged.extend_from_slice(&args[at..]);
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn parses_comments_and_blank_lines() {
        let e = parse("# run\n\nk = 2\n--m=5 # exponent\n", "x").unwrap();
        assert_eq!(e, vec![("k".into(), "2".into()), ("m".into(), "5".into())]);
        assert!(matches!(parse("k 2", "x"), Err(ConfigError::Syntax { line: 1, .. })));
    }

    #[test]
    fn flags_win_over_file() {
        let dir = std::env::temp_dir().join(format!("horolab-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        std::fs::write(&path, "m = 4\ny = 0.5\n").unwrap();
        let args = argv(&format!("horolab delta --config {} --m 3", path.display()));
        let merged = merge(args).unwrap();
        assert_eq!(&merged[..4], &argv("horolab delta --y 0.5")[..]);
        assert!(!merged.contains(&"4".to_string()));
        std::fs::remove_dir_all(dir).ok();
    }
}
