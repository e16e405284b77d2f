use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Scientific notation with six significant digits.
pub fn sci(x: f64) -> String {
    format!("{x:.5e}")
}

/// CSV table with a header row. Fields are never quoted, so callers keep
/// commas out of them.
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: format!("{}\n", header.join(",")), columns: header.len() }
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        assert_eq!(fields.len(), self.columns, "row width");
        let line: Vec<&str> = fields.iter().map(|s| s.as_ref()).collect();
        debug_assert!(line.iter().all(|f| !f.contains(',')));
        let _ = writeln!(self.text, "{}", line.join(","));
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    parameters: &'a BTreeMap<String, String>,
    seed: Option<u64>,
    version: &'static str,
    outputs: BTreeMap<String, String>,
}

/// Files written by one command. Dropping without [`Outputs::finish`]
/// removes everything written so far.
pub struct Outputs {
    dir: Option<PathBuf>,
    written: Vec<(String, PathBuf, String)>,
    finished: bool,
}

impl Outputs {
    pub fn new(dir: Option<&Path>) -> Result<Self> {
        if let Some(d) = dir {
            fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
        }
        Ok(Self { dir: dir.map(Path::to_path_buf), written: vec![], finished: false })
    }

    /// Writes `name` into the output directory, if there is one.
    pub fn write(&mut self, name: &str, content: &str) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = dir.join(name);
        fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
        let digest = Sha256::digest(content.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.written.push((name.to_string(), path, hex));
        Ok(())
    }

    pub fn finish(mut self, command: &str, parameters: &BTreeMap<String, String>, seed: Option<u64>) -> Result<()> {
        if self.dir.is_some() {
            let outputs = self.written.iter().map(|(n, _, h)| (n.clone(), h.clone())).collect();
            let m = Manifest { command, parameters, seed, version: env!("CARGO_PKG_VERSION"), outputs };
            let json = serde_json::to_string_pretty(&m)? + "\n";
            self.write("manifest.json", &json)?;
        }
        self.finished = true;
        Ok(())
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if !self.finished {
            for (_, path, _) in &self.written {
                let _ = fs::remove_file(path);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sci_has_six_digits() {
        assert_eq!(sci(2.3012345678e-16), "2.30123e-16");
        assert_eq!(sci(0.0), "0.00000e0");
    }

    #[test]
    fn unfinished_outputs_are_removed() {
        let dir = tempfile::tempdir().unwrap();
        {
            let mut o = Outputs::new(Some(dir.path())).unwrap();
            o.write("a.csv", "x\n").unwrap();
            assert!(dir.path().join("a.csv").exists());
        }
        assert!(!dir.path().join("a.csv").exists());
        let mut o = Outputs::new(Some(dir.path())).unwrap();
        o.write("a.csv", "x\n").unwrap();
        o.finish("t", &BTreeMap::new(), None).unwrap();
        assert!(dir.path().join("a.csv").exists());
        assert!(dir.path().join("manifest.json").exists());
    }
}
