//! Moment profiles sampled on a grid, shared by every solver.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolutionError {
    #[error("grid must be non-empty and strictly increasing")]
    BadGrid,
    #[error("moment {moment} has {got} values, grid has {expected}")]
    Shape {
        moment: usize,
        expected: usize,
        got: usize,
    },
    #[error("x = {0} lies outside the sampled grid")]
    OutOfRange(f64),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed csv: {0}")]
    Format(String),
}

/// `moments[n][g]` is φ_n at `grid[g]`. `stderr`, when present, is the
/// statistical standard error of φ_0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxSolution {
    pub grid: Vec<f64>,
    pub moments: Vec<Vec<f64>>,
    pub stderr: Option<Vec<f64>>,
    pub label: String,
}

impl FluxSolution {
    pub fn new(grid: Vec<f64>, moments: Vec<Vec<f64>>, label: impl Into<String>) -> Result<Self, SolutionError> {
        let s = FluxSolution {
            grid,
            moments,
            stderr: None,
            label: label.into(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_stderr(mut self, stderr: Vec<f64>) -> Result<Self, SolutionError> {
        if stderr.len() != self.grid.len() {
            return Err(SolutionError::Shape {
                moment: 0,
                expected: self.grid.len(),
                got: stderr.len(),
            });
        }
        self.stderr = Some(stderr);
        Ok(self)
    }

    fn validate(&self) -> Result<(), SolutionError> {
        if self.grid.is_empty() || self.grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(SolutionError::BadGrid);
        }
        if self.moments.is_empty() {
            return Err(SolutionError::Format("no moments".into()));
        }
        for (n, m) in self.moments.iter().enumerate() {
            if m.len() != self.grid.len() {
                return Err(SolutionError::Shape {
                    moment: n,
                    expected: self.grid.len(),
                    got: m.len(),
                });
            }
        }
        Ok(())
    }

    pub fn n_moments(&self) -> usize {
        self.moments.len()
    }

    pub fn phi0(&self) -> &[f64] {
        &self.moments[0]
    }

    /// Linear interpolation of φ_0 between grid points.
    pub fn phi0_at(&self, x: f64) -> Result<f64, SolutionError> {
        let g = &self.grid;
        let last = g.len() - 1;
        if !(x >= g[0] && x <= g[last]) {
            return Err(SolutionError::OutOfRange(x));
        }
        if last == 0 {
            return Ok(self.moments[0][0]);
        }
        let i = g.partition_point(|&v| v <= x).clamp(1, last);
        let t = (x - g[i - 1]) / (g[i] - g[i - 1]);
        Ok((1.0 - t) * self.moments[0][i - 1] + t * self.moments[0][i])
    }

    pub fn max_abs_phi0(&self) -> f64 {
        self.moments[0].iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Columns `x, phi_0 … phi_N` and, when present, `stderr`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SolutionError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["x".to_string()];
        header.extend((0..self.n_moments()).map(|n| format!("phi_{n}")));
        if self.stderr.is_some() {
            header.push("stderr".into());
        }
        w.write_record(&header)?;
        for g in 0..self.grid.len() {
            let mut row = vec![self.grid[g].to_string()];
            row.extend(self.moments.iter().map(|m| m[g].to_string()));
            if let Some(se) = &self.stderr {
                row.push(se[g].to_string());
            }
            w.write_record(&row)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, label: impl Into<String>) -> Result<Self, SolutionError> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        if header.get(0) != Some("x") {
            return Err(SolutionError::Format("first column must be x".into()));
        }
        let mut moment_cols = Vec::new();
        let mut stderr_col = None;
        for (i, name) in header.iter().enumerate().skip(1) {
            match name.strip_prefix("phi_").map(str::parse::<usize>) {
                Some(Ok(n)) if n == moment_cols.len() => moment_cols.push(i),
                _ if name == "stderr" => stderr_col = Some(i),
                _ => return Err(SolutionError::Format(format!("unexpected column {name:?}"))),
            }
        }
        let mut grid = Vec::new();
        let mut moments = vec![Vec::new(); moment_cols.len()];
        let mut stderr = Vec::new();
        for record in r.records() {
            let record = record?;
            let field = |i: usize| -> Result<f64, SolutionError> {
                record
                    .get(i)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| SolutionError::Format(format!("bad number in column {i}")))
            };
            grid.push(field(0)?);
            for (m, &c) in moments.iter_mut().zip(&moment_cols) {
                m.push(field(c)?);
            }
            if let Some(c) = stderr_col {
                stderr.push(field(c)?);
            }
        }
        let s = FluxSolution::new(grid, moments, label)?;
        if stderr_col.is_some() {
            s.with_stderr(stderr)
        } else {
            Ok(s)
        }
    }
}

/// `count` equidistant points covering `[x_l, x_r]` including both ends.
pub fn uniform_grid(x_l: f64, x_r: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5 * (x_l + x_r)],
        _ => (0..count)
            .map(|i| {
                if i == count - 1 {
                    x_r
                } else {
                    x_l + (x_r - x_l) * i as f64 / (count - 1) as f64
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FluxSolution {
        FluxSolution::new(
            vec![0.0, 1.0, 3.0],
            vec![vec![1.0, 3.0, -1.0], vec![0.1, 0.2, 0.3]],
            "s",
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let s = sample().with_stderr(vec![0.0, 0.5, 0.25]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,phi_0,phi_1,stderr\n"));
        let back = FluxSolution::read_csv(buf.as_slice(), "s").unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn interpolation() {
        let s = sample();
        assert_eq!(s.phi0_at(0.0).unwrap(), 1.0);
        assert_eq!(s.phi0_at(0.5).unwrap(), 2.0);
        assert_eq!(s.phi0_at(2.0).unwrap(), 1.0);
        assert_eq!(s.phi0_at(3.0).unwrap(), -1.0);
        assert!(s.phi0_at(3.5).is_err());
        assert_eq!(s.max_abs_phi0(), 3.0);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(FluxSolution::new(vec![0.0, 0.0], vec![vec![1.0, 1.0]], "").is_err());
        assert!(FluxSolution::new(vec![0.0, 1.0], vec![vec![1.0]], "").is_err());
        let bad = "x,phi_1\n0,1\n";
        assert!(FluxSolution::read_csv(bad.as_bytes(), "").is_err());
    }

    #[test]
    fn uniform_grid_ends() {
        let g = uniform_grid(0.0, 10.0, 200);
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[199], 10.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
