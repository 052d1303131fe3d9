//! `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Values may be
//! wrapped in double quotes.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

pub fn parse_key_values(text: &str, path: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Format {
            path: path.to_path_buf(),
            line: i + 1,
            message: format!("expected `key = value`, got {line:?}"),
        })?;
        let value = value.trim();
        let value = value
            .strip_prefix('"')
            .and_then(|v| v.strip_suffix('"'))
            .unwrap_or(value);
        out.insert(key.trim().to_string(), value.to_string());
    }
    Ok(out)
}

pub fn load_key_values(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_key_values(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_quotes() {
        let kv = parse_key_values(
            "# backend\nurl = \"http://localhost:8000\"\n\ntimeout_ms=500\n",
            Path::new("x.conf"),
        )
        .unwrap();
        assert_eq!(kv["url"], "http://localhost:8000");
        assert_eq!(kv["timeout_ms"], "500");
    }

    #[test]
    fn reports_line_number() {
        let err = parse_key_values("a = 1\nbogus\n", Path::new("x.conf")).unwrap_err();
        assert!(err.to_string().contains("x.conf:2"), "{err}");
    }
}
