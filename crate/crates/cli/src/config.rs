//! `key = value` config files that mirror command-line flags.
//!
//! Each key names a long flag (`max_tokens` and `max-tokens` both mean
//! `--max-tokens`). Values from the file are inserted right after the
//! subcommand, so any flag also given on the command line wins. `true` turns
//! on a boolean flag and `false` leaves it off.

use std::path::Path;

use anyhow::{bail, Context, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigEntry {
    pub flag: String,
    pub value: String,
}

pub fn parse_config(text: &str, origin: &str) -> Result<Vec<ConfigEntry>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split_once('#').map_or(raw, |(l, _)| l).trim();
        if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{origin}: line {}: expected `key = value`", k + 1);
        };
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key.starts_with('-') {
            bail!("{origin}: line {}: bad key `{}`", k + 1, key);
        }
        let value = value.trim();
        let value = value
            .strip_prefix('"')
            .and_then(|v| v.strip_suffix('"'))
            .unwrap_or(value);
        out.push(ConfigEntry {
            flag: format!("--{key}"),
            value: value.to_owned(),
        });
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> Result<Vec<ConfigEntry>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse_config(&text, &path.display().to_string())
}

fn given(args: &[String], flag: &str) -> bool {
    args.iter()
        .any(|a| a == flag || a.strip_prefix(flag).is_some_and(|rest| rest.starts_with('=')))
}

/// Splices config entries into `args` after the argument at `insert_at`,
/// skipping flags the user already passed.
pub fn merge_config(args: &[String], insert_at: usize, entries: &[ConfigEntry]) -> Vec<String> {
    let mut extra = Vec::new();
    for e in entries {
        if given(args, &e.flag) {
            continue;
        }
        match e.value.as_str() {
            "true" => extra.push(e.flag.clone()),
            "false" => {}
            v => {
                extra.push(e.flag.clone());
                extra.push(v.to_owned());
            }
        }
    }
    let at = (insert_at + 1).min(args.len());
    let mut out = args[..at].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[at..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn flags_win_and_booleans_expand() {
        let cfg = parse_config("# defaults\nmax_tokens = 600\nper-rule-cap=\"20\"\nstrict = true\nquiet = false\n", "c")
            .unwrap();
        let args = s(&["smellprop", "filter", "--per-rule-cap", "5"]);
        let merged = merge_config(&args, 1, &cfg);
        assert_eq!(merged, s(&["smellprop", "filter", "--max-tokens", "600", "--strict", "--per-rule-cap", "5"]));
    }

    #[test]
    fn malformed_line_is_reported() {
        let err = parse_config("a = 1\nnonsense\n", "c").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }
}
