//! Binary field snapshots.
//!
//! A snapshot is the line `FPS1`, a text header line
//! `n1 n2 l1 l2 time name [# comment]`, then `n1 * n2` little-endian `f64`
//! values with the first index running fastest.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::spectral::{Grid, PhysicalField};

pub const MAGIC: &[u8; 5] = b"FPS1\n";

#[derive(Clone, Debug, PartialEq)]
pub struct FieldSnapshot {
    pub n1: usize,
    pub n2: usize,
    pub l1: f64,
    pub l2: f64,
    pub time: f64,
    pub name: String,
    pub comment: Option<String>,
    pub values: Vec<f64>,
}

impl FieldSnapshot {
    pub fn from_field(field: &PhysicalField, time: f64, name: &str) -> Self {
        let g = field.grid();
        FieldSnapshot {
            n1: g.n1(),
            n2: g.n2(),
            l1: g.l1(),
            l2: g.l2(),
            time,
            name: name.to_string(),
            comment: None,
            values: field.values().to_vec(),
        }
    }

    pub fn with_comment(mut self, comment: impl Into<String>) -> Self {
        self.comment = Some(comment.into());
        self
    }

    /// The field on `grid`, which must match the snapshot's size and
    /// lengths.
    pub fn to_field(&self, grid: &Grid) -> Result<PhysicalField> {
        let same = grid.n1() == self.n1 && grid.n2() == self.n2 && grid.l1() == self.l1 && grid.l2() == self.l2;
        if !same {
            return Err(Error::Snapshot(format!(
                "snapshot is {}x{} on {}x{}, grid is {}x{} on {}x{}",
                self.n1,
                self.n2,
                self.l1,
                self.l2,
                grid.n1(),
                grid.n2(),
                grid.l1(),
                grid.l2()
            )));
        }
        PhysicalField::from_values(grid, self.values.clone())
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        if self.name.is_empty() || self.name.contains(char::is_whitespace) || self.name.starts_with('#') {
            return Err(Error::Snapshot(format!("invalid field name {:?}", self.name)));
        }
        if self.values.len() != self.n1 * self.n2 {
            return Err(Error::Snapshot(format!(
                "{} values for a {}x{} grid",
                self.values.len(),
                self.n1,
                self.n2
            )));
        }
        w.write_all(MAGIC)?;
        let mut header = format!("{} {} {} {} {} {}", self.n1, self.n2, self.l1, self.l2, self.time, self.name);
        if let Some(c) = &self.comment {
            header.push_str(" # ");
            header.push_str(&c.replace('\n', " "));
        }
        header.push('\n');
        w.write_all(header.as_bytes())?;
        let mut buf = Vec::with_capacity(8 * self.values.len());
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from(r: impl Read) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)
            .map_err(|_| Error::Snapshot("file too short for the magic line".into()))?;
        if &magic != MAGIC {
            return Err(Error::Snapshot("bad magic, not an FPS1 snapshot".into()));
        }
        let mut line = String::new();
        r.read_line(&mut line)?;
        let line = line
            .strip_suffix('\n')
            .ok_or_else(|| Error::Snapshot("unterminated header".into()))?;
        let (fields, comment) = match line.split_once(" # ") {
            Some((f, c)) => (f, Some(c.to_string())),
            None => (line, None),
        };
        let parts: Vec<&str> = fields.split_whitespace().collect();
        if parts.len() != 6 {
            return Err(Error::Snapshot(format!("header has {} fields, expected 6", parts.len())));
        }
        let bad = |what: &str| Error::Snapshot(format!("cannot parse {what} in header {fields:?}"));
        let n1: usize = parts[0].parse().map_err(|_| bad("n1"))?;
        let n2: usize = parts[1].parse().map_err(|_| bad("n2"))?;
        let l1: f64 = parts[2].parse().map_err(|_| bad("l1"))?;
        let l2: f64 = parts[3].parse().map_err(|_| bad("l2"))?;
        let time: f64 = parts[4].parse().map_err(|_| bad("time"))?;
        let len = n1
            .checked_mul(n2)
            .filter(|&l| l > 0 && l <= 1 << 28)
            .ok_or_else(|| bad("grid size"))?;
        let mut bytes = Vec::with_capacity(8 * len);
        r.read_to_end(&mut bytes)?;
        if bytes.len() != 8 * len {
            return Err(Error::Snapshot(format!(
                "payload is {} bytes, expected {}",
                bytes.len(),
                8 * len
            )));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunks of 8")))
            .collect();
        Ok(FieldSnapshot {
            n1,
            n2,
            l1,
            l2,
            time,
            name: parts[5].to_string(),
            comment,
            values,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(File::open(path)?)
    }
}
