//! Classical mean-field amplitudes: closed-form linear solution and the
//! nonlinear two-point boundary-value solver.

mod banded;
mod bvp;
mod linear;

use std::io::Write;

use thiserror::Error;

use crate::equations::flux;
use crate::model::{Mode, ModelError, C64};

pub use banded::{BandLu, BandMatrix, SingularAt};
pub use bvp::{solve_bvp, solve_bvp_detailed, BvpOptions, BvpReport, Seed};
pub use linear::{linear_solution, LinearPair};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeanFieldError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("grid must have at least 2 points (got {0})")]
    GridTooSmall(usize),
    #[error("grid must start at 0, end at the waveguide length {length} and increase strictly")]
    BadGrid { length: f64 },
    #[error("boundary matching system for the {pair} pair is singular")]
    SingularBoundaryMatching { pair: &'static str },
    #[error("newton iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("newton jacobian is singular near z = {z}")]
    SingularJacobian { z: f64 },
}

/// Sample positions `0 = z_0 < ... < z_{N-1} = L`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(Vec<f64>);

impl Grid {
    pub fn uniform(length: f64, points: usize) -> Result<Self, MeanFieldError> {
        if points < 2 {
            return Err(MeanFieldError::GridTooSmall(points));
        }
        let h = length / (points - 1) as f64;
        let mut z: Vec<f64> = (0..points).map(|k| k as f64 * h).collect();
        z[points - 1] = length;
        Grid::new(z, length)
    }

    pub fn new(z: Vec<f64>, length: f64) -> Result<Self, MeanFieldError> {
        if z.len() < 2 {
            return Err(MeanFieldError::GridTooSmall(z.len()));
        }
        let ok = z[0] == 0.0
            && (z[z.len() - 1] - length).abs() <= 1e-12 * length.abs().max(1.0)
            && z.windows(2).all(|w| w[1] > w[0])
            && z.iter().all(|x| x.is_finite());
        if !ok {
            return Err(MeanFieldError::BadGrid { length });
        }
        Ok(Grid(z))
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.0[self.0.len() - 1]
    }
}

/// Six complex amplitude profiles sampled on a grid, with the conserved flux.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldSolution {
    pub grid: Grid,
    /// One entry per grid point, amplitudes in [`Mode`] order.
    pub amplitudes: Vec<[C64; 6]>,
    pub flux: Vec<f64>,
}

impl MeanFieldSolution {
    pub fn new(grid: Grid, amplitudes: Vec<[C64; 6]>) -> Self {
        assert_eq!(grid.len(), amplitudes.len());
        let flux = amplitudes.iter().map(flux).collect();
        MeanFieldSolution {
            grid,
            amplitudes,
            flux,
        }
    }

    pub fn profile(&self, mode: Mode) -> Vec<C64> {
        self.amplitudes.iter().map(|a| a[mode.index()]).collect()
    }

    pub fn at_entrance(&self) -> &[C64; 6] {
        &self.amplitudes[0]
    }

    pub fn at_exit(&self) -> &[C64; 6] {
        &self.amplitudes[self.amplitudes.len() - 1]
    }

    /// `max_z |D(z) - D(0)| / max(1, |D(0)|)`.
    pub fn flux_drift(&self) -> f64 {
        let d0 = self.flux[0];
        let worst = self.flux.iter().fold(0.0f64, |m, d| m.max((d - d0).abs()));
        worst / d0.abs().max(1.0)
    }

    /// Max-norm distance between two solutions on the same grid.
    pub fn max_difference(&self, other: &MeanFieldSolution) -> f64 {
        assert_eq!(self.amplitudes.len(), other.amplitudes.len());
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max)
    }

    /// CSV with columns `z`, real and imaginary part of each amplitude, `flux`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "z")?;
        for m in Mode::ALL {
            write!(out, ",re_{m},im_{m}")?;
        }
        writeln!(out, ",flux")?;
        for ((z, a), d) in self.grid.points().iter().zip(&self.amplitudes).zip(&self.flux) {
            write!(out, "{z}")?;
            for x in a {
                write!(out, ",{},{}", x.re, x.im)?;
            }
            writeln!(out, ",{d}")?;
        }
        Ok(())
    }
}
