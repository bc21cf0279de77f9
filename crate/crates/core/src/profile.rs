//! Cell-average profiles and their CSV representation.
//!
//! Columns: `subcell,x_left,x_right,rho,rho_v,E,v,p`. Values are written with
//! 17 significant digits so that a profile reads back bit-identically.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::discretization::Grid;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "subcell,x_left,x_right,rho,rho_v,E,v,p";

#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub x_left: Vec<f64>,
    pub x_right: Vec<f64>,
    pub averages: Vec<[f64; 3]>,
}

pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl Profile {
    pub fn from_edges(edges: &[f64], averages: Vec<[f64; 3]>) -> Self {
        assert_eq!(edges.len(), averages.len() + 1);
        Profile {
            x_left: edges[..edges.len() - 1].to_vec(),
            x_right: edges[1..].to_vec(),
            averages,
        }
    }

    pub fn from_grid(grid: &Grid, averages: Vec<[f64; 3]>) -> Self {
        let (x_left, x_right) = (0..grid.total_subcells())
            .map(|g| grid.subcell_bounds(g))
            .unzip();
        Profile {
            x_left,
            x_right,
            averages,
        }
    }

    pub fn len(&self) -> usize {
        self.averages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.averages.is_empty()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.x_left
            .iter()
            .zip(&self.x_right)
            .map(|(a, b)| b - a)
            .collect()
    }

    pub fn density(&self) -> Vec<f64> {
        self.averages.iter().map(|u| u[0]).collect()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.x_left
            .iter()
            .zip(&self.x_right)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    /// Mean of the piecewise-constant profile over `[a, b]`.
    pub fn resample(&self, a: f64, b: f64) -> [f64; 3] {
        let start = self.x_right.partition_point(|&r| r <= a);
        let mut total = [0.0; 3];
        for i in start..self.len() {
            let lo = self.x_left[i].max(a);
            let hi = self.x_right[i].min(b);
            if lo >= b {
                break;
            }
            if hi > lo {
                for c in 0..3 {
                    total[c] += (hi - lo) * self.averages[i][c];
                }
            }
        }
        total.map(|x| x / (b - a))
    }

    pub fn write_csv(&self, path: &Path, gamma: f64) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_to(&mut out, gamma)?;
        out.flush()?;
        Ok(())
    }

    pub fn write_to<W: Write>(&self, out: &mut W, gamma: f64) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for (i, u) in self.averages.iter().enumerate() {
            let v = u[1] / u[0];
            let p = (gamma - 1.0) * (u[2] - 0.5 * u[1] * v);
            writeln!(
                out,
                "{i},{},{},{},{},{},{},{}",
                fmt_f64(self.x_left[i]),
                fmt_f64(self.x_right[i]),
                fmt_f64(u[0]),
                fmt_f64(u[1]),
                fmt_f64(u[2]),
                fmt_f64(v),
                fmt_f64(p)
            )?;
        }
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut lines = reader.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != CSV_HEADER {
            return Err(Error::Format(format!("{}: missing header", path.display())));
        }
        let mut profile = Profile {
            x_left: Vec::new(),
            x_right: Vec::new(),
            averages: Vec::new(),
        };
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format(format!("{}:{}: {e}", path.display(), n + 2)))?;
            if fields.len() != 8 {
                return Err(Error::Format(format!(
                    "{}:{}: expected 8 fields, found {}",
                    path.display(),
                    n + 2,
                    fields.len()
                )));
            }
            profile.x_left.push(fields[1]);
            profile.x_right.push(fields[2]);
            profile.averages.push([fields[3], fields[4], fields[5]]);
        }
        Ok(profile)
    }
}
