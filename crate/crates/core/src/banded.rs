//! Square banded matrices with Cholesky and pivoted LU solvers.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BandError {
    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("matrix is singular to working precision at column {column} (pivot ratio {pivot_ratio:e})")]
    Singular { column: usize, pivot_ratio: f64 },
    #[error("dimension mismatch: matrix {n}, vector {got}")]
    Dimension { n: usize, got: usize },
}

/// `n × n` matrix holding entries with `|i - j| <= bandwidth`, row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        BandMatrix {
            n,
            bw: bandwidth,
            data: vec![0.0; n * (2 * bandwidth + 1)],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, 0);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        (i < self.n && j < self.n && i.abs_diff(j) <= self.bw).then(|| i * (2 * self.bw + 1) + j + self.bw - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |k| self.data[k])
    }

    /// Panics when `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.slot(i, j).expect("entry outside band");
        self.data[k] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.slot(i, j).expect("entry outside band");
        self.data[k] += v;
    }

    fn cols(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.bw)..(i + self.bw + 1).min(self.n)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.cols(i).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    /// `xᵀ A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in self.cols(i) {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Largest `|i - j|` among nonzero entries.
    pub fn occupied_bandwidth(&self) -> usize {
        let mut b = 0;
        for i in 0..self.n {
            for j in self.cols(i) {
                if self.get(i, j) != 0.0 {
                    b = b.max(i.abs_diff(j));
                }
            }
        }
        b
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Nonzero entries as `row col value` lines, 1-based, with a size header.
    pub fn to_coordinate_text(&self) -> String {
        let mut entries = Vec::new();
        for i in 0..self.n {
            for j in self.cols(i) {
                let v = self.get(i, j);
                if v != 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        let mut s = format!("{} {} {}\n", self.n, self.n, entries.len());
        for (i, j, v) in entries {
            let _ = writeln!(s, "{} {} {:e}", i + 1, j + 1, v);
        }
        s
    }

    pub fn cholesky(&self) -> Result<BandCholesky, BandError> {
        let (n, bw) = (self.n, self.bw);
        // l[i][k] stored at i*(bw+1) + (k + bw - i)
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        let at = |i: usize, k: usize| i * w + k + bw - i;
        for j in 0..n {
            let lo = j.saturating_sub(bw);
            let mut d = self.get(j, j);
            for k in lo..j {
                d -= l[at(j, k)] * l[at(j, k)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(BandError::NotPositiveDefinite { row: j, pivot: d });
            }
            let djj = d.sqrt();
            l[at(j, j)] = djj;
            for i in j + 1..(j + bw + 1).min(n) {
                let mut s = self.get(i, j);
                for k in i.saturating_sub(bw)..j {
                    s -= l[at(i, k)] * l[at(j, k)];
                }
                l[at(i, j)] = s / djj;
            }
        }
        Ok(BandCholesky { n, bw, l })
    }

    pub fn lu(&self) -> Result<BandLu, BandError> {
        let (n, bw) = (self.n, self.bw);
        // row i keeps columns i-bw ..= i+2bw to absorb pivoting fill-in
        let w = 3 * bw + 1;
        let at = |i: usize, j: usize| i * w + j + bw - i;
        let mut u = vec![0.0; n * w];
        for i in 0..n {
            for j in self.cols(i) {
                u[at(i, j)] = self.get(i, j);
            }
        }
        let mut lower = vec![0.0; n * (bw + 1)];
        let mut perm = vec![0usize; n];
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let last_row = (k + bw).min(n - 1);
            let p = (k..=last_row)
                .max_by(|&a, &b| u[at(a, k)].abs().total_cmp(&u[at(b, k)].abs()))
                .unwrap();
            perm[k] = p;
            let last_col = (k + 2 * bw).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    u.swap(at(k, j), at(p, j));
                }
            }
            let pivot = u[at(k, k)];
            min_pivot = min_pivot.min(pivot.abs());
            if pivot.abs() <= f64::EPSILON * scale * n as f64 || !pivot.is_finite() {
                return Err(BandError::Singular {
                    column: k,
                    pivot_ratio: pivot.abs() / scale,
                });
            }
            for i in k + 1..=last_row {
                let m = u[at(i, k)] / pivot;
                u[at(i, k)] = 0.0;
                if m != 0.0 {
                    for j in k + 1..=last_col {
                        u[at(i, j)] -= m * u[at(k, j)];
                    }
                }
                lower[k * (bw + 1) + (i - k - 1)] = m;
            }
        }
        Ok(BandLu {
            n,
            bw,
            u,
            lower,
            perm,
            pivot_ratio: min_pivot / scale,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, BandError> {
        let (n, bw) = (self.n, self.bw);
        if b.len() != n {
            return Err(BandError::Dimension { n, got: b.len() });
        }
        let w = bw + 1;
        let at = |i: usize, k: usize| i * w + k + bw - i;
        let mut y = b.to_vec();
        for i in 0..n {
            for k in i.saturating_sub(bw)..i {
                y[i] -= self.l[at(i, k)] * y[k];
            }
            y[i] /= self.l[at(i, i)];
        }
        for i in (0..n).rev() {
            for k in i + 1..(i + bw + 1).min(n) {
                y[i] -= self.l[at(k, i)] * y[k];
            }
            y[i] /= self.l[at(i, i)];
        }
        Ok(y)
    }

    /// Smallest over largest diagonal entry of the factor, squared.
    pub fn pivot_ratio(&self) -> f64 {
        let w = self.bw + 1;
        let diag = (0..self.n).map(|i| self.l[i * w + self.bw]);
        let (lo, hi) = diag.fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
        (lo / hi).powi(2)
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    bw: usize,
    u: Vec<f64>,
    /// Multipliers of elimination step k, stored as `lower[k*(bw+1) + (i-k-1)]`.
    lower: Vec<f64>,
    perm: Vec<usize>,
    pivot_ratio: f64,
}

impl BandLu {
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, BandError> {
        let (n, bw) = (self.n, self.bw);
        if b.len() != n {
            return Err(BandError::Dimension { n, got: b.len() });
        }
        let w = 3 * bw + 1;
        let at = |i: usize, j: usize| i * w + j + bw - i;
        let mut y = b.to_vec();
        for k in 0..n {
            y.swap(k, self.perm[k]);
            for i in k + 1..(k + bw + 1).min(n) {
                y[i] -= self.lower[k * (bw + 1) + (i - k - 1)] * y[k];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..(i + 2 * bw + 1).min(n) {
                y[i] -= self.u[at(i, j)] * y[j];
            }
            y[i] /= self.u[at(i, i)];
        }
        Ok(y)
    }

    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Factorization {
    Cholesky,
    Lu,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolveReport {
    pub factorization: Factorization,
    /// `‖A x − b‖ / ‖b‖`.
    pub relative_residual: f64,
    pub pivot_ratio: f64,
}

/// Cholesky first; pivoted LU when a nonpositive pivot shows up.
pub fn solve_spd(a: &BandMatrix, b: &[f64]) -> Result<(Vec<f64>, SolveReport), BandError> {
    if b.len() != a.dim() {
        return Err(BandError::Dimension { n: a.dim(), got: b.len() });
    }
    let (x, factorization, pivot_ratio) = match a.cholesky() {
        Ok(f) => (f.solve(b)?, Factorization::Cholesky, f.pivot_ratio()),
        Err(BandError::NotPositiveDefinite { .. }) => {
            let f = a.lu()?;
            (f.solve(b)?, Factorization::Lu, f.pivot_ratio())
        }
        Err(e) => return Err(e),
    };
    let ax = a.matvec(&x);
    let num: f64 = ax.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let relative_residual = if den > 0.0 { num / den } else { num };
    Ok((
        x,
        SolveReport {
            factorization,
            relative_residual,
            pivot_ratio,
        },
    ))
}
