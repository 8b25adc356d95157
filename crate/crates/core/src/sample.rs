//! Sample points for pointwise checks.

use std::ops::Index;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A point of the chart, coordinates ordered `(u, v, x3, ..., xN)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Point {
        Point(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn with(&self, index: usize, value: f64) -> Point {
        let mut c = self.0.clone();
        c[index] = value;
        Point(c)
    }
}

impl Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SampleError {
    #[error("range for coordinate {index} is empty or not finite: [{lo}, {hi}]")]
    BadRange { index: usize, lo: f64, hi: f64 },
    #[error("expected {expected} coordinate ranges, got {got}")]
    WrongDimension { expected: usize, got: usize },
}

/// Seeded uniform sampling of a coordinate box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub count: usize,
    pub seed: u64,
    pub ranges: Vec<(f64, f64)>,
}

pub const DEFAULT_U_RANGE: (f64, f64) = (0.5, 2.0);
pub const DEFAULT_V_RANGE: (f64, f64) = (-2.0, 2.0);
pub const DEFAULT_X_RANGE: (f64, f64) = (-1.0, 1.0);

impl SamplePlan {
    pub fn new(dimension: usize, count: usize, seed: u64) -> SamplePlan {
        let mut ranges = vec![DEFAULT_U_RANGE, DEFAULT_V_RANGE];
        ranges.resize(dimension, DEFAULT_X_RANGE);
        SamplePlan { count, seed, ranges }
    }

    pub fn with_range(mut self, index: usize, lo: f64, hi: f64) -> SamplePlan {
        self.ranges[index] = (lo, hi);
        self
    }

    /// Same range for every transverse coordinate.
    pub fn with_x_range(mut self, lo: f64, hi: f64) -> SamplePlan {
        for r in self.ranges.iter_mut().skip(2) {
            *r = (lo, hi);
        }
        self
    }

    pub fn validate(&self, dimension: usize) -> Result<(), SampleError> {
        if self.ranges.len() != dimension {
            return Err(SampleError::WrongDimension {
                expected: dimension,
                got: self.ranges.len(),
            });
        }
        for (index, &(lo, hi)) in self.ranges.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(SampleError::BadRange { index, lo, hi });
            }
        }
        Ok(())
    }

    /// Deterministic in the seed and ranges.
    pub fn points(&self) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.count)
            .map(|_| {
                Point(
                    self.ranges
                        .iter()
                        .map(|&(lo, hi)| if lo == hi { lo } else { rng.gen_range(lo..hi) })
                        .collect(),
                )
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_points_repeat() {
        let plan = SamplePlan::new(5, 10, 42);
        assert_eq!(plan.points(), plan.points());
        assert_ne!(plan.points(), SamplePlan::new(5, 10, 43).points());
        for p in plan.points() {
            assert!((0.5..2.0).contains(&p[0]));
            assert!((-1.0..1.0).contains(&p[4]));
        }
    }
}
