use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::measures::{Grid, GridDensity};

/// Relative tolerance on the spacing of a "uniform" time grid.
const UNIFORM_TIME_TOLERANCE: f64 = 1e-9;

/// Time-indexed sequence of grid slices on a uniform time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurePath<S> {
    times: Vec<f64>,
    slices: Vec<S>,
}

impl<S: GridDensity> MeasurePath<S> {
    pub fn new(times: Vec<f64>, slices: Vec<S>) -> Result<Self> {
        if times.is_empty() || times.len() != slices.len() {
            return Err(invalid(
                "path needs one time per slice and at least one slice",
            ));
        }
        let grid = *slices[0].grid();
        if slices.iter().any(|s| *s.grid() != grid) {
            return Err(Error::GridMismatch);
        }
        if times.len() > 1 {
            let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
            if !(dt > 0.0) {
                return Err(invalid("path times must increase"));
            }
            for w in times.windows(2) {
                if ((w[1] - w[0]) - dt).abs() > UNIFORM_TIME_TOLERANCE * dt.max(1.0) {
                    return Err(invalid("path times must be uniformly spaced"));
                }
            }
        }
        Ok(Self { times, slices })
    }

    /// Slices at `t0, t0 + dt, ...`.
    pub fn from_slices(t0: f64, dt: f64, slices: Vec<S>) -> Result<Self> {
        let times = (0..slices.len()).map(|k| t0 + k as f64 * dt).collect();
        Self::new(times, slices)
    }

    pub fn constant(slice: S, t_end: f64, intervals: usize) -> Result<Self> {
        let dt = t_end / intervals as f64;
        Self::from_slices(0.0, dt, vec![slice; intervals + 1])
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn slices(&self) -> &[S] {
        &self.slices
    }

    pub fn into_slices(self) -> Vec<S> {
        self.slices
    }

    pub fn grid(&self) -> &Grid {
        self.slices[0].grid()
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn intervals(&self) -> usize {
        self.slices.len() - 1
    }

    pub fn first(&self) -> &S {
        &self.slices[0]
    }

    pub fn last(&self) -> &S {
        &self.slices[self.slices.len() - 1]
    }

    /// Uniform time step, `0` for a single-slice path.
    pub fn dt(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            (self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64
        }
    }

    /// Same slices in reverse order on the same time grid.
    pub fn reversed(&self) -> Self {
        let mut slices = self.slices.clone();
        slices.reverse();
        Self {
            times: self.times.clone(),
            slices,
        }
    }

    /// Densities of the cellwise midpoints `(ρ_k + ρ_{k+1}) / 2`.
    pub fn midpoint_densities(&self) -> Vec<Vec<f64>> {
        self.slices
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0].density(), w[1].density());
                a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect()
            })
            .collect()
    }

    /// Forward differences `(f_{k+1} - f_k) / Δt` of the densities.
    pub fn velocities(&self) -> Vec<Vec<f64>> {
        let dt = self.dt();
        self.slices
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0].density(), w[1].density());
                a.iter().zip(&b).map(|(x, y)| (y - x) / dt).collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::GridMeasure;

    #[test]
    fn rejects_irregular_times() {
        let g = Grid::unit_interval(4);
        let m = GridMeasure::uniform(g);
        assert!(
            MeasurePath::new(vec![0.0, 0.1, 0.3], vec![m.clone(), m.clone(), m.clone()]).is_err()
        );
        assert!(
            MeasurePath::new(vec![0.0, 0.1, 0.2], vec![m.clone(), m.clone(), m.clone()]).is_ok()
        );
        let other = GridMeasure::uniform(Grid::unit_interval(5));
        assert!(matches!(
            MeasurePath::new(vec![0.0, 1.0], vec![m, other]),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn reversal_and_velocity() {
        let g = Grid::unit_interval(2);
        let a = GridMeasure::new(g, vec![1.0, 0.0]).unwrap();
        let b = GridMeasure::new(g, vec![0.0, 1.0]).unwrap();
        let p = MeasurePath::from_slices(0.0, 0.5, vec![a.clone(), b.clone()]).unwrap();
        assert_eq!(p.velocities(), vec![vec![-4.0, 4.0]]);
        assert_eq!(p.reversed().first(), &b);
        assert_eq!(p.midpoint_densities(), vec![vec![1.0, 1.0]]);
    }
}
