//! Charts and deterministic quasi-random sample sets.

use serde::Serialize;
use thiserror::Error;

use crate::expr::Point;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChartError {
    #[error("sampling box must be contained in the chart domain (coordinate {0})")]
    BoxOutsideDomain(usize),
    #[error("degenerate interval for coordinate {0}")]
    DegenerateInterval(usize),
}

/// A single coordinate chart: three named coordinates, a (possibly unbounded)
/// rectangular domain and a finite sampling box with a boundary margin.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub name: String,
    pub coords: [String; 3],
    /// Per-coordinate closed intervals; `±inf` endpoints mean unbounded.
    pub domain: [(f64, f64); 3],
    /// Finite box actually sampled. Must sit inside the domain.
    pub sampling_box: [(f64, f64); 3],
    /// Samples stay this far inside the sampling box.
    pub margin: f64,
}

impl Chart {
    pub fn new(
        name: impl Into<String>,
        coords: [&str; 3],
        domain: [(f64, f64); 3],
        sampling_box: [(f64, f64); 3],
        margin: f64,
    ) -> Result<Chart, ChartError> {
        for i in 0..3 {
            if !(domain[i].0 < domain[i].1) || !(sampling_box[i].0 < sampling_box[i].1) {
                return Err(ChartError::DegenerateInterval(i));
            }
            if sampling_box[i].0 < domain[i].0 || sampling_box[i].1 > domain[i].1 {
                return Err(ChartError::BoxOutsideDomain(i));
            }
        }
        Ok(Chart {
            name: name.into(),
            coords: coords.map(|c| c.to_string()),
            domain,
            sampling_box,
            margin,
        })
    }

    /// Unbounded chart with the default `[-2, 2]^3` sampling box, margin 1e-3.
    pub fn unbounded(name: impl Into<String>, coords: [&str; 3]) -> Chart {
        let inf = f64::INFINITY;
        Chart::new(
            name,
            coords,
            [(-inf, inf); 3],
            [(-2.0, 2.0); 3],
            1e-3,
        )
        .unwrap()
    }

    pub fn coord_names(&self) -> Vec<String> {
        self.coords.to_vec()
    }

    /// Center of the sampling box.
    pub fn center(&self) -> Point {
        let b = &self.sampling_box;
        [
            0.5 * (b[0].0 + b[0].1),
            0.5 * (b[1].0 + b[1].1),
            0.5 * (b[2].0 + b[2].1),
        ]
    }
}

/// Radical-inverse of `n` in the given prime base, in (0, 1) for `n >= 1`.
pub fn radical_inverse(base: u64, mut n: u64) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut r = 0.0;
    while n > 0 {
        r += (n % base) as f64 * inv;
        n /= base;
        inv /= b;
    }
    r
}

/// How a [`SampleSet`] was generated, kept for reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSpec {
    pub seed: u64,
    pub count: usize,
    pub sampling_box: [(f64, f64); 3],
    pub margin: f64,
}

/// Deterministic Halton samples (bases 2, 3, 5) strictly inside the sampling
/// box shrunk by the margin. The seed offsets the Halton index range, so equal
/// `(seed, count, box, margin)` always reproduce the same points.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub points: Vec<Point>,
    pub spec: SampleSpec,
}

impl SampleSet {
    pub fn halton(chart: &Chart, seed: u64, count: usize) -> SampleSet {
        const BASES: [u64; 3] = [2, 3, 5];
        let m = chart.margin;
        let lo = [
            chart.sampling_box[0].0 + m,
            chart.sampling_box[1].0 + m,
            chart.sampling_box[2].0 + m,
        ];
        let hi = [
            chart.sampling_box[0].1 - m,
            chart.sampling_box[1].1 - m,
            chart.sampling_box[2].1 - m,
        ];
        let mut points = Vec::with_capacity(count);
        for k in 0..count {
            // Index starts at seed+1: radical_inverse(.., 0) = 0 would land
            // exactly on the shrunk-box corner.
            let n = seed + 1 + k as u64;
            let mut p = [0.0; 3];
            for v in 0..3 {
                let u = radical_inverse(BASES[v], n);
                p[v] = lo[v] + u * (hi[v] - lo[v]);
            }
            points.push(p);
        }
        SampleSet {
            points,
            spec: SampleSpec {
                seed,
                count,
                sampling_box: chart.sampling_box,
                margin: m,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_points_stay_strictly_inside() {
        let chart = Chart::unbounded("h", ["x", "y", "t"]);
        let s = SampleSet::halton(&chart, 7, 512);
        assert_eq!(s.len(), 512);
        for p in &s.points {
            for v in 0..3 {
                assert!(p[v] > chart.sampling_box[v].0 + chart.margin - 1e-15);
                assert!(p[v] < chart.sampling_box[v].1 - chart.margin + 1e-15);
            }
        }
    }

    #[test]
    fn halton_is_reproducible_bitwise() {
        let chart = Chart::unbounded("h", ["x", "y", "t"]);
        let a = SampleSet::halton(&chart, 7, 64);
        let b = SampleSet::halton(&chart, 7, 64);
        assert_eq!(a, b);
        let c = SampleSet::halton(&chart, 8, 64);
        assert_ne!(a.points[0], c.points[0]);
    }

    #[test]
    fn box_must_sit_inside_domain() {
        let err = Chart::new(
            "bad",
            ["x", "y", "t"],
            [(-1.0, 1.0); 3],
            [(-2.0, 2.0); 3],
            1e-3,
        )
        .unwrap_err();
        assert_eq!(err, ChartError::BoxOutsideDomain(0));
    }
}
