//! Deterministic CSV artifacts: `#` provenance lines, one header row, LF
//! line endings, shortest round-trip floats.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::config::fmt_f64;

/// One CSV cell.
pub enum Cell {
    F(f64),
    U(u64),
    I(i64),
    Opt(Option<f64>),
    B(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => fmt_f64(*x),
            Cell::U(x) => x.to_string(),
            Cell::I(x) => x.to_string(),
            Cell::Opt(x) => x.map(fmt_f64).unwrap_or_default(),
            Cell::B(b) => u8::from(*b).to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::U(x as u64)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::U(u64::from(x))
    }
}

impl From<i32> for Cell {
    fn from(x: i32) -> Self {
        Cell::I(i64::from(x))
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        Cell::Opt(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::B(x)
    }
}

pub struct Table {
    comments: Vec<String>,
    header: Vec<&'static str>,
    body: String,
}

impl Table {
    pub fn new(command: &str, provenance: &str, header: &[&'static str]) -> Self {
        Self {
            comments: vec![
                format!("dicke-quench {} {command}", env!("CARGO_PKG_VERSION")),
                provenance.to_string(),
            ],
            header: header.to_vec(),
            body: String::new(),
        }
    }

    /// Extra `#` line placed after the provenance lines.
    pub fn note(&mut self, line: impl Into<String>) {
        self.comments.push(line.into());
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.header.len(), "row width");
        let s: Vec<String> = cells.iter().map(Cell::render).collect();
        self.body.push_str(&s.join(","));
        self.body.push('\n');
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.comments {
            s.push_str("# ");
            s.push_str(c);
            s.push('\n');
        }
        s.push_str(&self.header.join(","));
        s.push('\n');
        s.push_str(&self.body);
        s
    }

    pub fn write(&self, dir: &Path, name: &str) -> io::Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(name);
        fs::write(&path, self.render())?;
        Ok(path)
    }
}
