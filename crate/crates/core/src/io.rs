//! Small text-format helpers shared by every exporter: 17-significant-digit
//! number formatting, atomic file writes and the flat `key = value` config
//! format.

use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

/// Formats a float with 17 significant digits, enough to round-trip any f64.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `contents` to `path` via a sibling temp file and a rename, so that
/// readers never observe a half-written file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
    }
    let name = path.file_name().ok_or_else(|| Error::Io(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = match dir {
        Some(d) => d.join(tmp_name),
        None => tmp_name.into(),
    };
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::from(e)
    })
}

/// One parsed `key = value` line.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub value: String,
}

/// Parsed flat config. Keys are unique; `#` starts a comment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, Entry>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body.split_once('=').ok_or_else(|| Error::Config {
                line,
                key: body.to_string(),
                message: "expected `key = value`".into(),
            })?;
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(Error::Config { line, key, message: "empty key".into() });
            }
            let value = v.trim().to_string();
            if entries.contains_key(&key) {
                return Err(Error::Config { line, key, message: "duplicate key".into() });
            }
            entries.insert(key, Entry { line, value });
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        let Some(e) = self.entries.get(key) else {
            return Ok(None);
        };
        let v: f64 = e.value.parse().map_err(|_| Error::Config {
            line: e.line,
            key: key.to_string(),
            message: format!("not a number: `{}`", e.value),
        })?;
        if !v.is_finite() {
            return Err(Error::Config { line: e.line, key: key.to_string(), message: "value must be finite".into() });
        }
        Ok(Some(v))
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>> {
        let Some(e) = self.entries.get(key) else {
            return Ok(None);
        };
        match e.value.as_str() {
            "true" => Ok(Some(true)),
            "false" => Ok(Some(false)),
            other => Err(Error::Config {
                line: e.line,
                key: key.to_string(),
                message: format!("expected true or false, got `{other}`"),
            }),
        }
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    /// Rejects any key not in `allowed`.
    pub fn reject_unknown(&self, allowed: &[&str]) -> Result<()> {
        for (k, e) in &self.entries {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::Config { line: e.line, key: k.clone(), message: "unknown key".into() });
            }
        }
        Ok(())
    }

    /// Error for a value that parsed but is out of range.
    pub fn invalid(&self, key: &str, message: impl Into<String>) -> Error {
        Error::Config {
            line: self.entries.get(key).map_or(0, |e| e.line),
            key: key.to_string(),
            message: message.into(),
        }
    }
}

/// Renders `(key, value)` pairs in the same flat format.
pub fn render_key_values<'a>(pairs: impl IntoIterator<Item = (&'a str, String)>) -> String {
    let mut out = String::new();
    for (k, v) in pairs {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt17_round_trips() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, std::f64::consts::PI] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[test]
    fn parse_config() {
        let kv = KeyValues::parse("# header\nC = 1\n  g_L=8 # leak\n\nflag = true\n").unwrap();
        assert_eq!(kv.f64("C").unwrap(), Some(1.0));
        assert_eq!(kv.f64("g_L").unwrap(), Some(8.0));
        assert_eq!(kv.bool("flag").unwrap(), Some(true));
        assert_eq!(kv.f64("missing").unwrap(), None);
    }

    #[test]
    fn config_errors_name_the_key() {
        let err = KeyValues::parse("a = 1\nb = x\n").unwrap().f64("b").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, ref key, .. } if key == "b"));
        let err = KeyValues::parse("a = 1\na = 2\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }));
        let err = KeyValues::parse("just words\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 1, .. }));
        let kv = KeyValues::parse("a = 1\nzzz = 2\n").unwrap();
        let err = kv.reject_unknown(&["a"]).unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "zzz"));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
