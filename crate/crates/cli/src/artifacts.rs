use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use qkdlab::bits::BitString;

use crate::config::KeyFormat;

/// Tool version, seed and config hash, stamped on every file.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool_version: String,
    pub seed: u64,
    pub config_hash: String,
}

impl Provenance {
    pub fn new(seed: u64, config_hash: String) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config_hash,
        }
    }

    pub fn pairs(&self) -> [(&'static str, String); 3] {
        [
            ("tool_version", self.tool_version.clone()),
            ("seed", self.seed.to_string()),
            ("config_hash", self.config_hash.clone()),
        ]
    }
}

pub fn write(dir: &Path, name: &str, contents: &[u8]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(dir, name, text.as_bytes())
}

pub fn remove_if_present(dir: &Path, name: &str) -> Result<()> {
    match fs::remove_file(dir.join(name)) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(e.into()),
        _ => Ok(()),
    }
}

/// `# key=value` header lines followed by the key on one line.
pub fn render_key(bits: &BitString, format: KeyFormat, header: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in header {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out.push_str(&format!("# length={}\n", bits.len()));
    match format {
        KeyFormat::Hex => {
            out.push_str("# format=hex\n");
            out.push_str(&bits.to_hex());
        }
        KeyFormat::Bits => {
            out.push_str("# format=bits\n");
            out.push_str(&bits.to_bit_chars());
        }
    }
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_file_layout() {
        let bits = BitString::from_bit_chars("1010000011").unwrap();
        let text = render_key(&bits, KeyFormat::Hex, &[("seed", "7".into())]);
        assert_eq!(text, "# seed=7\n# length=10\n# format=hex\na0c0\n");
        let text = render_key(&bits, KeyFormat::Bits, &[]);
        assert_eq!(text.lines().last(), Some("1010000011"));
    }
}
