//! Artifact files: a provenance header followed by CSV rows or a JSON body.
//!
//! CSV files open with `# key: value` lines (kind, format version, config
//! hash, seed, and the full config text one line per `config-toml` entry),
//! then a mandatory column row. JSON files carry the same fields under a
//! top-level `header` object. Either form is enough to re-run the producer.

use std::fmt::Write as _;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::FORMAT_VERSION;

/// Line endings normalized to `\n`, with exactly one trailing newline.
pub fn normalize_config(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 1);
    for line in text.lines() {
        out.push_str(line.trim_end_matches('\r'));
        out.push('\n');
    }
    out
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub kind: String,
    pub format_version: u32,
    pub config_sha256: String,
    pub seed: u64,
    /// Normalized config text the artifact was produced from.
    pub config_toml: String,
}

impl Header {
    pub fn new(kind: &str, config_text: &str, seed: u64) -> Self {
        let config_toml = normalize_config(config_text);
        Header {
            kind: kind.to_string(),
            format_version: FORMAT_VERSION,
            config_sha256: sha256_hex(&config_toml),
            seed,
            config_toml,
        }
    }

    fn render_comment(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# kind: {}", self.kind).unwrap();
        writeln!(s, "# format-version: {}", self.format_version).unwrap();
        writeln!(s, "# config-sha256: {}", self.config_sha256).unwrap();
        writeln!(s, "# seed: {}", self.seed).unwrap();
        for line in self.config_toml.lines() {
            if line.is_empty() {
                s.push_str("# config-toml:\n");
            } else {
                writeln!(s, "# config-toml: {line}").unwrap();
            }
        }
        s
    }

    /// Reads the header of a CSV or JSON artifact and checks its integrity.
    pub fn parse(text: &str) -> Result<Self> {
        let header = if text.trim_start().starts_with('{') {
            #[derive(Deserialize)]
            struct Envelope {
                header: Header,
            }
            serde_json::from_str::<Envelope>(text)
                .context("artifact JSON has no readable header")?
                .header
        } else {
            Self::parse_comment(text)?
        };
        if header.format_version != FORMAT_VERSION {
            bail!(
                "artifact format-version {} is not supported (expected {FORMAT_VERSION})",
                header.format_version
            );
        }
        let sha = sha256_hex(&header.config_toml);
        if sha != header.config_sha256 {
            bail!(
                "embedded config hashes to {sha}, header says {}",
                header.config_sha256
            );
        }
        Ok(header)
    }

    fn parse_comment(text: &str) -> Result<Self> {
        let mut kind = None;
        let mut version = None;
        let mut sha = None;
        let mut seed = None;
        let mut config = String::new();
        for line in text.lines() {
            let Some(body) = line.strip_prefix('#') else {
                break;
            };
            let body = body.strip_prefix(' ').unwrap_or(body);
            let (key, value) = match body.split_once(':') {
                Some((k, v)) => (k, v.strip_prefix(' ').unwrap_or(v)),
                None => (body, ""),
            };
            match key {
                "kind" => kind = Some(value.to_string()),
                "format-version" => {
                    version = Some(value.parse().context("bad format-version in header")?)
                }
                "config-sha256" => sha = Some(value.to_string()),
                "seed" => seed = Some(value.parse().context("bad seed in header")?),
                "config-toml" => {
                    config.push_str(value);
                    config.push('\n');
                }
                other => bail!("unknown header key {other:?}"),
            }
        }
        Ok(Header {
            kind: kind.ok_or_else(|| anyhow!("artifact header lacks kind"))?,
            format_version: version
                .ok_or_else(|| anyhow!("artifact header lacks format-version"))?,
            config_sha256: sha.ok_or_else(|| anyhow!("artifact header lacks config-sha256"))?,
            seed: seed.ok_or_else(|| anyhow!("artifact header lacks seed"))?,
            config_toml: config,
        })
    }
}

/// Column-ordered CSV body.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, header: &Header) -> String {
        let mut s = header.render_comment();
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// JSON artifact body under `rows`, pretty-printed one field per line.
pub fn render_json<T: Serialize>(header: &Header, rows: &T) -> Result<String> {
    #[derive(Serialize)]
    struct Envelope<'a, T> {
        header: &'a Header,
        rows: &'a T,
    }
    let mut s = serde_json::to_string_pretty(&Envelope { header, rows })?;
    s.push('\n');
    Ok(s)
}

/// Shortest round-trip decimal; non-finite values spelled out.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Empty cell for a missing value.
pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    /// 1-based line number in the file.
    pub line: usize,
    pub expected: Option<String>,
    pub found: Option<String>,
}

/// First line where `found` departs from `expected`, if any.
pub fn first_divergence(expected: &str, found: &str) -> Option<Divergence> {
    if expected == found {
        return None;
    }
    let mut e = expected.split_inclusive('\n');
    let mut f = found.split_inclusive('\n');
    let mut line = 1;
    loop {
        match (e.next(), f.next()) {
            (Some(a), Some(b)) if a == b => line += 1,
            (None, None) => {
                return Some(Divergence {
                    line,
                    expected: None,
                    found: None,
                })
            }
            (a, b) => {
                let trim = |s: &str| s.trim_end_matches('\n').to_string();
                return Some(Divergence {
                    line,
                    expected: a.map(trim),
                    found: b.map(trim),
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> Header {
        Header::new("edge-sweep", "format_version = 1\r\n\nseed = 3", 3)
    }

    #[test]
    fn csv_header_round_trips() {
        let h = header();
        assert_eq!(h.config_toml, "format_version = 1\n\nseed = 3\n");
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![num(1.5), opt(None)]);
        let text = t.render(&h);
        assert!(text.ends_with("a,b\n1.5,\n"));
        assert_eq!(Header::parse(&text).unwrap(), h);
    }

    #[test]
    fn json_header_round_trips() {
        let h = header();
        let text = render_json(&h, &vec![1.0, 2.5]).unwrap();
        assert_eq!(Header::parse(&text).unwrap(), h);
    }

    #[test]
    fn tampered_config_is_detected() {
        let text = Table::new(&["a"]).render(&header());
        let bad = text.replace("seed = 3", "seed = 4");
        assert!(Header::parse(&bad)
            .unwrap_err()
            .to_string()
            .contains("hashes"));
    }

    #[test]
    fn future_versions_are_refused() {
        let text = Table::new(&["a"]).render(&header());
        let bad = text.replace("format-version: 1", "format-version: 2");
        assert!(Header::parse(&bad)
            .unwrap_err()
            .to_string()
            .contains("not supported"));
    }

    #[test]
    fn divergence_reports_first_line() {
        assert_eq!(first_divergence("a\nb\n", "a\nb\n"), None);
        let d = first_divergence("a\nb\nc\n", "a\nx\nc\n").unwrap();
        assert_eq!(d.line, 2);
        assert_eq!(d.expected.as_deref(), Some("b"));
        assert_eq!(d.found.as_deref(), Some("x"));
        let d = first_divergence("a\nb\n", "a\n").unwrap();
        assert_eq!((d.line, d.found), (2, None));
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1e-20, 12345.678, -0.0, 85_000.0] {
            assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(num(f64::NAN), "nan");
    }
}
