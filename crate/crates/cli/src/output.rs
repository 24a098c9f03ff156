//! Output directories: CSV/JSON writers at 17 significant digits and the manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Number, Value};
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

/// 17 significant digits, exact round trip.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::I(x as i64)
    }
}

impl From<i8> for Cell {
    fn from(x: i8) -> Self {
        Cell::I(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::S(x.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::F)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => fmt_f64(*x),
            Cell::I(i) => i.to_string(),
            Cell::S(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

/// Rewrites every non-integer number to the 17-digit form.
fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => match n.as_f64() {
            Some(x) => serde_json::from_str::<Number>(&fmt_f64(x)).map(Value::Number).unwrap_or(Value::Null),
            None => Value::Null,
        },
        Value::Array(a) => Value::Array(a.into_iter().map(normalize).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, normalize(v))).collect()),
        other => other,
    }
}

pub fn to_json_string(value: &impl Serialize) -> Result<String, serde_json::Error> {
    let v = normalize(serde_json::to_value(value)?);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub struct OutputDir {
    pub root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<(), CliError> {
        let p = self.path(name);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        fs::write(&p, text).map_err(|e| CliError::io(&p, e))
    }

    pub fn csv<R: IntoIterator<Item = Vec<Cell>>>(&self, name: &str, header: &[&str], rows: R) -> Result<(), CliError> {
        let mut out = header.join(",");
        out.push('\n');
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            out.push_str(&row.iter().map(Cell::render).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        self.write_text(name, &out)
    }

    pub fn json(&self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let s = to_json_string(value).map_err(|e| CliError::Input {
            path: self.path(name),
            msg: e.to_string(),
        })?;
        self.write_text(name, &s)
    }

    /// Relative paths of every file below the root except the manifest, sorted.
    pub fn inventory(&self) -> Result<Vec<FileEntry>, CliError> {
        let mut files = Vec::new();
        collect(&self.root, &self.root, &mut files)?;
        files.sort();
        files
            .into_iter()
            .filter(|f| f != MANIFEST)
            .map(|name| {
                let p = self.path(&name);
                let bytes = fs::read(&p).map_err(|e| CliError::io(&p, e))?;
                Ok(FileEntry {
                    sha256: hex::encode(Sha256::digest(&bytes)),
                    bytes: bytes.len() as u64,
                    name,
                })
            })
            .collect()
    }

    pub fn write_manifest(&self, command: &str, config: &Config, wall_clock: f64) -> Result<(), CliError> {
        let m = Manifest {
            command: command.to_string(),
            config_hash: config.hash(),
            versions: Versions {
                critblow_core: critblow::VERSION,
                critblow_cli: env!("CARGO_PKG_VERSION"),
            },
            config: config.canonical.clone(),
            params: config.params,
            run: config.run,
            shrink: config.shrink,
            options: config.options.clone(),
            outputs: self.inventory()?,
            wall_clock_seconds: wall_clock,
        };
        self.json(MANIFEST, &m)
    }
}

fn collect(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<(), CliError> {
    for entry in fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let entry = entry.map_err(|e| CliError::io(dir, e))?;
        let p = entry.path();
        if p.is_dir() {
            collect(root, &p, out)?;
        } else {
            let rel = p.strip_prefix(root).unwrap_or(&p);
            out.push(rel.to_string_lossy().replace('\\', "/"));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Serialize)]
struct Versions {
    critblow_core: &'static str,
    critblow_cli: &'static str,
}

#[derive(Serialize)]
struct Manifest {
    command: String,
    config_hash: String,
    versions: Versions,
    config: std::collections::BTreeMap<String, String>,
    params: critblow::ModelParams,
    run: critblow::RunConfig,
    shrink: critblow::ShrinkParams,
    options: crate::config::CommandOptions,
    outputs: Vec<FileEntry>,
    /// the only field that differs between identical reruns
    wall_clock_seconds: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.75), "7.5000000000000000e-1");
        let x = 0.1 + 0.2;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        assert_eq!(fmt_f64(f64::NAN), "nan");
    }

    #[test]
    fn json_numbers_normalized() {
        #[derive(Serialize)]
        struct T {
            a: f64,
            n: usize,
        }
        let s = to_json_string(&T { a: 1.0 / 3.0, n: 7 }).unwrap();
        assert!(s.contains("3.3333333333333331e-1"), "{s}");
        assert!(s.contains("\"n\": 7"), "{s}");
    }
}
