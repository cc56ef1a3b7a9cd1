//! Sobol low-discrepancy points for collocation.
//!
//! Direction numbers for the first two dimensions of the Joe–Kuo
//! `new-joe-kuo-6.21201` table. Points are produced in Gray-code order with
//! 32-bit resolution; the first 2^k points of the raw stream form a (0,k,1)-net
//! in each dimension.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SobolError {
    #[error("unsupported Sobol dimension {0} (only 1 and 2 are available)")]
    UnsupportedDimension(usize),
    #[error("point count must be >= 1")]
    EmptyRequest,
    #[error("Sobol stream exhausted after 2^32 - 1 points")]
    Exhausted,
    #[error("degenerate interval [{0}, {1}]")]
    DegenerateInterval(f64, f64),
}

const BITS: usize = 32;

/// Per-dimension direction numbers `v_k = m_k 2^{32-k}`.
fn direction_numbers(degree: usize, poly: u32, initial: &[u32]) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    for (k, &m) in initial.iter().enumerate() {
        v[k] = m << (BITS - 1 - k);
    }
    for k in degree..BITS {
        let mut value = v[k - degree] ^ (v[k - degree] >> degree);
        for j in 1..degree {
            if (poly >> (degree - 1 - j)) & 1 == 1 {
                value ^= v[k - j];
            }
        }
        v[k] = value;
    }
    v
}

fn table(dimension: usize) -> Result<[u32; BITS], SobolError> {
    match dimension {
        // van der Corput: every m_k = 1
        0 => {
            let mut v = [0u32; BITS];
            for (k, slot) in v.iter_mut().enumerate() {
                *slot = 1 << (BITS - 1 - k);
            }
            Ok(v)
        }
        // primitive polynomial x + 1 (s = 1, a = 0), m_1 = 1
        1 => Ok(direction_numbers(1, 0, &[1])),
        d => Err(SobolError::UnsupportedDimension(d + 1)),
    }
}

/// Raw Sobol stream, starting at the all-zeros point (index 0).
#[derive(Debug, Clone)]
pub struct SobolStream {
    directions: Vec<[u32; BITS]>,
    state: Vec<u32>,
    index: u64,
}

impl SobolStream {
    pub fn new(dimension: usize) -> Result<Self, SobolError> {
        if dimension == 0 || dimension > 2 {
            return Err(SobolError::UnsupportedDimension(dimension));
        }
        let directions = (0..dimension).map(table).collect::<Result<Vec<_>, _>>()?;
        Ok(SobolStream {
            directions,
            state: vec![0; dimension],
            index: 0,
        })
    }

    pub fn dimension(&self) -> usize {
        self.directions.len()
    }

    /// Index of the next point to be returned.
    pub fn index(&self) -> u64 {
        self.index
    }

    /// Next point as integers scaled by 2^32.
    pub fn next_raw(&mut self) -> Result<Vec<u32>, SobolError> {
        if self.index >= u32::MAX as u64 {
            return Err(SobolError::Exhausted);
        }
        let point = self.state.clone();
        let bit = (self.index as u32).trailing_ones() as usize;
        for (s, v) in self.state.iter_mut().zip(&self.directions) {
            *s ^= v[bit];
        }
        self.index += 1;
        Ok(point)
    }

    pub fn next_point(&mut self) -> Result<Vec<f64>, SobolError> {
        const SCALE: f64 = 1.0 / 4_294_967_296.0;
        Ok(self
            .next_raw()?
            .into_iter()
            .map(|v| v as f64 * SCALE)
            .collect())
    }
}

impl Iterator for SobolStream {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        self.next_point().ok()
    }
}

/// First `count` Sobol points after the leading all-zeros point.
pub fn sobol_points(dimension: usize, count: usize) -> Result<Vec<Vec<f64>>, SobolError> {
    if count == 0 {
        return Err(SobolError::EmptyRequest);
    }
    let mut stream = SobolStream::new(dimension)?;
    stream.next_raw()?;
    (0..count).map(|_| stream.next_point()).collect()
}

/// Affine map of unit-interval coordinates onto `[x_l, x_r]`.
pub fn map_to_domain(points: &[f64], x_l: f64, x_r: f64) -> Result<Vec<f64>, SobolError> {
    if !(x_l < x_r) || !x_l.is_finite() || !x_r.is_finite() {
        return Err(SobolError::DegenerateInterval(x_l, x_r));
    }
    Ok(points.iter().map(|u| x_l + u * (x_r - x_l)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dyadic_counts(values: &[f64], level: u32) -> Vec<usize> {
        let cells = 1usize << level;
        let mut counts = vec![0; cells];
        for &v in values {
            counts[((v * cells as f64).floor() as usize).min(cells - 1)] += 1;
        }
        counts
    }

    #[test]
    fn first_point_after_zero_is_half() {
        for d in 1..=2 {
            let pts = sobol_points(d, 3).unwrap();
            assert_eq!(pts[0], vec![0.5; d]);
        }
        let mut raw = SobolStream::new(1).unwrap();
        assert_eq!(raw.next_point().unwrap(), vec![0.0]);
    }

    #[test]
    fn second_dimension_known_prefix() {
        let pts: Vec<Vec<f64>> = SobolStream::new(2).unwrap().take(4).collect();
        let dim2: Vec<f64> = pts.iter().map(|p| p[1]).collect();
        let mut sorted = dim2.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(sorted, vec![0.0, 0.25, 0.5, 0.75]);
        assert_ne!(
            pts.iter().map(|p| p[0]).collect::<Vec<_>>(),
            dim2,
            "dimensions must differ"
        );
    }

    #[test]
    fn raw_stream_is_a_dyadic_net() {
        for d in 1..=2 {
            let pts: Vec<Vec<f64>> = SobolStream::new(d).unwrap().take(1 << 10).collect();
            for axis in 0..d {
                let values: Vec<f64> = pts.iter().map(|p| p[axis]).collect();
                for level in 0..=10 {
                    let counts = dyadic_counts(&values, level);
                    assert!(counts.iter().all(|&c| c == 1 << (10 - level)));
                }
            }
        }
    }

    #[test]
    fn mapped_points_keep_dyadic_counts() {
        let raw: Vec<f64> = SobolStream::new(1).unwrap().take(256).map(|p| p[0]).collect();
        let mapped = map_to_domain(&raw, 0.0, 10.0).unwrap();
        let back: Vec<f64> = mapped.iter().map(|x| x / 10.0).collect();
        for level in 0..=8 {
            assert_eq!(dyadic_counts(&back, level), dyadic_counts(&raw, level));
        }
    }

    #[test]
    fn map_to_domain_endpoints() {
        assert_eq!(map_to_domain(&[0.0, 0.5], 0.0, 10.0).unwrap(), vec![0.0, 5.0]);
        assert_eq!(map_to_domain(&[0.0], -2.0, 3.0).unwrap(), vec![-2.0]);
        assert!(map_to_domain(&[0.1], 1.0, 1.0).is_err());
    }

    #[test]
    fn errors() {
        assert_eq!(SobolStream::new(3).unwrap_err(), SobolError::UnsupportedDimension(3));
        assert_eq!(sobol_points(0, 4).unwrap_err(), SobolError::UnsupportedDimension(0));
        assert_eq!(sobol_points(1, 0).unwrap_err(), SobolError::EmptyRequest);
    }

    #[test]
    fn deterministic() {
        assert_eq!(sobol_points(2, 100).unwrap(), sobol_points(2, 100).unwrap());
    }
}
