//! Stored solutions and the checkpoint file format.
//!
//! A checkpoint is a single file: one line of JSON (the header) terminated by
//! `\n`, followed by little-endian `f64` values. The body holds every stored
//! `u` sample in step-major order, then every stored `w` sample in the same
//! order, so its length is `2 · n_steps · n_nodes · 8` bytes.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DomainGrid, ShapeSpec};

pub const CHECKPOINT_FORMAT: &str = "stefan-lab-checkpoint";

/// Temperature and enthalpy samples on a grid over stored time steps.
#[derive(Debug, Clone)]
pub struct SpaceTimeField {
    pub grid: Arc<DomainGrid>,
    pub times: Vec<f64>,
    /// `u[step][node]`
    pub u: Vec<Vec<f64>>,
    /// `w[step][node]`, with `w = β_ε(u)` up to solver tolerance.
    pub w: Vec<Vec<f64>>,
}

impl SpaceTimeField {
    pub fn new(grid: Arc<DomainGrid>) -> Self {
        Self { grid, times: Vec::new(), u: Vec::new(), w: Vec::new() }
    }

    pub fn push(&mut self, t: f64, u: Vec<f64>, w: Vec<f64>) {
        debug_assert_eq!(u.len(), self.grid.len());
        self.times.push(t);
        self.u.push(u);
        self.w.push(w);
    }

    pub fn n_steps(&self) -> usize {
        self.times.len()
    }

    pub fn last_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Index of the stored step closest to `t`.
    pub fn step_near(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, &s) in self.times.iter().enumerate() {
            if (s - t).abs() < (self.times[best] - t).abs() {
                best = i;
            }
        }
        best
    }

    pub fn max_abs_u(&self) -> f64 {
        self.u.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `Σ_cells w · |cell|` at a stored step.
    pub fn total_enthalpy(&self, step: usize) -> f64 {
        self.w[step].iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Sup distance over the stored samples the two fields share.
    pub fn sup_distance(&self, other: &SpaceTimeField) -> Result<f64> {
        if self.grid.len() != other.grid.len() || self.times.len() != other.times.len() {
            return Err(Error::InvalidArgument("fields are not sampled on the same grid and steps".into()));
        }
        let mut d = 0.0_f64;
        for (a, b) in self.u.iter().zip(&other.u) {
            for (x, y) in a.iter().zip(b) {
                d = d.max((x - y).abs());
            }
        }
        Ok(d)
    }

    /// Zero level set of a 1D solution by linear interpolation: the first
    /// crossing from `u ≥ 0` to `u < 0` scanning left to right.
    pub fn interface_position(&self, step: usize) -> Option<f64> {
        if self.grid.dim() != 1 {
            return None;
        }
        let u = &self.u[step];
        for i in 0..u.len().saturating_sub(1) {
            if u[i] >= 0.0 && u[i + 1] < 0.0 {
                let x = self.grid.center(i)[0];
                return Some(x + self.grid.h() * u[i] / (u[i] - u[i + 1]));
            }
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub shape: ShapeSpec,
    pub h: f64,
    pub n_nodes: usize,
    pub n_steps: usize,
    pub eps: f64,
    pub p: f64,
    pub nu: f64,
    pub times: Vec<f64>,
}

pub fn write_checkpoint<W: Write>(mut out: W, field: &SpaceTimeField, config_hash: &str, eps: f64, p: f64, nu: f64) -> Result<()> {
    let header = CheckpointHeader {
        format: CHECKPOINT_FORMAT.to_string(),
        version: 1,
        config_hash: config_hash.to_string(),
        shape: field.grid.spec().clone(),
        h: field.grid.h(),
        n_nodes: field.grid.len(),
        n_steps: field.n_steps(),
        eps,
        p,
        nu,
        times: field.times.clone(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(16 * field.grid.len() * field.n_steps());
    for row in field.u.iter().chain(field.w.iter()) {
        for v in row {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn save_checkpoint(path: &Path, field: &SpaceTimeField, config_hash: &str, eps: f64, p: f64, nu: f64) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_checkpoint(&mut w, field, config_hash, eps, p, nu)?;
    w.flush()?;
    Ok(())
}

/// Read a checkpoint back; the grid is rebuilt from the stored shape and `h`.
pub fn read_checkpoint<R: Read>(input: R) -> Result<(CheckpointHeader, SpaceTimeField)> {
    let mut reader = BufReader::new(input);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header: CheckpointHeader = serde_json::from_str(line.trim_end())?;
    if header.format != CHECKPOINT_FORMAT || header.version != 1 {
        return Err(Error::Checkpoint(format!("unsupported format {} v{}", header.format, header.version)));
    }
    let grid = DomainGrid::build(&header.shape, header.h)?;
    if grid.len() != header.n_nodes || header.times.len() != header.n_steps {
        return Err(Error::Checkpoint("header does not match the rebuilt grid".into()));
    }
    let mut body = Vec::new();
    reader.read_to_end(&mut body)?;
    let per = header.n_nodes * header.n_steps;
    if body.len() != 16 * per {
        return Err(Error::Checkpoint(format!("body has {} bytes, expected {}", body.len(), 16 * per)));
    }
    let values: Vec<f64> = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let rows = |offset: usize| -> Vec<Vec<f64>> {
        (0..header.n_steps)
            .map(|s| values[offset + s * header.n_nodes..offset + (s + 1) * header.n_nodes].to_vec())
            .collect()
    };
    let field = SpaceTimeField { grid: Arc::new(grid), times: header.times.clone(), u: rows(0), w: rows(per) };
    Ok((header, field))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoint_layout_and_roundtrip() {
        let grid = Arc::new(DomainGrid::build(&ShapeSpec::Interval { a: 0.0, b: 1.0 }, 0.25).unwrap());
        let mut f = SpaceTimeField::new(grid);
        f.push(0.0, vec![1.0, 2.0, 3.0, 4.0], vec![5.0, 6.0, 7.0, 8.0]);
        f.push(0.1, vec![-1.0, -2.0, -3.0, -4.0], vec![0.5, 0.25, 0.125, 1e-300]);
        let mut bytes = Vec::new();
        write_checkpoint(&mut bytes, &f, "abc", 0.1, 2.0, 1.0).unwrap();
        let nl = bytes.iter().position(|&b| b == b'\n').unwrap();
        assert_eq!(bytes.len() - nl - 1, 2 * 2 * 4 * 8);
        // first body value is u[0][0], the ninth is w[0][0]
        let body = &bytes[nl + 1..];
        assert_eq!(f64::from_le_bytes(body[0..8].try_into().unwrap()), 1.0);
        assert_eq!(f64::from_le_bytes(body[64..72].try_into().unwrap()), 5.0);
        let (h, g) = read_checkpoint(&bytes[..]).unwrap();
        assert_eq!(h.config_hash, "abc");
        assert_eq!(g.u, f.u);
        assert_eq!(g.w, f.w);
        assert_eq!(g.times, f.times);
        assert!(read_checkpoint(&bytes[..bytes.len() - 8]).is_err());
    }
}
