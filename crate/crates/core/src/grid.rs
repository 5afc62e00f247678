//! Uniform periodic grids on the cube `[-L, L)^N`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A uniform periodic grid with `n` points per axis on `[-L, L)^N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub points_per_axis: usize,
    pub half_length: f64,
}

impl GridSpec {
    pub fn new(dim: usize, points_per_axis: usize, half_length: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDim(dim));
        }
        if !points_per_axis.is_multiple_of(2) {
            return Err(Error::OddGridSize(points_per_axis));
        }
        if points_per_axis < 8 {
            return Err(Error::GridTooSmall(points_per_axis));
        }
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(Error::BadHalfLength(half_length));
        }
        Ok(Self {
            dim,
            points_per_axis,
            half_length,
        })
    }

    /// Default desk-scale grid for each dimension.
    pub fn default_for_dim(dim: usize) -> Result<Self> {
        match dim {
            1 => Self::new(1, 1024, 40.0),
            2 => Self::new(2, 128, 20.0),
            3 => Self::new(3, 64, 12.0),
            d => Err(Error::UnsupportedDim(d)),
        }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.points_per_axis as f64
    }

    /// Quadrature weight `h^N`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Axis coordinates `x_j = -L + j h`.
    pub fn axis_coords(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.points_per_axis)
            .map(|j| -self.half_length + j as f64 * h)
            .collect()
    }

    /// Integer wave index for FFT slot `j`: `0, 1, .., n/2-1, -n/2, .., -1`.
    pub fn wave_index(&self, j: usize) -> i64 {
        let n = self.points_per_axis as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    /// Axis wavenumbers `k_j = (pi / L) * index`, in FFT order.
    pub fn axis_wavenumbers(&self) -> Vec<f64> {
        let base = PI / self.half_length;
        (0..self.points_per_axis)
            .map(|j| base * self.wave_index(j) as f64)
            .collect()
    }

    /// Multi-index of a flat row-major position.
    pub fn unravel(&self, mut flat: usize) -> [usize; 3] {
        let n = self.points_per_axis;
        let mut idx = [0usize; 3];
        for a in (0..self.dim).rev() {
            idx[a] = flat % n;
            flat /= n;
        }
        idx
    }

    /// Euclidean wavenumber magnitudes `|k|` for every spectral slot.
    pub fn wavenumber_magnitudes(&self) -> Vec<f64> {
        let k = self.axis_wavenumbers();
        (0..self.len())
            .map(|f| {
                let idx = self.unravel(f);
                idx[..self.dim].iter().map(|&i| k[i] * k[i]).sum::<f64>().sqrt()
            })
            .collect()
    }

    /// Point coordinates for every sample, row-major.
    pub fn points(&self) -> Vec<[f64; 3]> {
        let x = self.axis_coords();
        (0..self.len())
            .map(|f| {
                let idx = self.unravel(f);
                let mut p = [0.0; 3];
                for a in 0..self.dim {
                    p[a] = x[idx[a]];
                }
                p
            })
            .collect()
    }

    /// Euclidean radius of each sample.
    pub fn radii(&self) -> Vec<f64> {
        self.points()
            .iter()
            .map(|p| p[..self.dim].iter().map(|c| c * c).sum::<f64>().sqrt())
            .collect()
    }

    /// Sup-norm of each sample position.
    pub fn sup_radii(&self) -> Vec<f64> {
        self.points()
            .iter()
            .map(|p| p[..self.dim].iter().fold(0.0f64, |m, c| m.max(c.abs())))
            .collect()
    }

    /// Same grid with every length multiplied by `factor` (points unchanged).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.dim, self.points_per_axis, self.half_length * factor)
    }

    /// Same box with twice the points per axis.
    pub fn refined(&self) -> Result<Self> {
        Self::new(self.dim, self.points_per_axis * 2, self.half_length)
    }
}
