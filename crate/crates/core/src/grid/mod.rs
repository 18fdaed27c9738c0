//! Periodic grids in one or two dimensions and the spectral machinery on them.
//!
//! Samples are stored flat, row-major with the first coordinate `x_1`
//! varying fastest: `flat = j_2 * N_1 + j_1`.
//!
//! All DFTs are unitary, so Parseval holds without extra factors:
//! `Σ|f_j|² = Σ|f̂_m|²`, and the continuum `L²` norm is `(dxⁿ Σ|f_j|²)^½`
//! in either representation.

mod field;
mod spectral;

pub use field::{Field, Spectrum};
pub use spectral::{boundary_mass, spectral_gradient, spectral_tail, spectral_translate};

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, GuardKind, Result};

/// Fraction of the box (per axis, centered) regarded as the interior.
pub const INTERIOR_FRACTION: f64 = 0.8;

/// Uniform periodic grid on the centered box `[-L/2, L/2)ⁿ`, `n ∈ {1, 2}`.
pub struct Grid {
    points: Vec<usize>,
    lengths: Vec<f64>,
    spacing: Vec<f64>,
    coords: Vec<Vec<f64>>,
    wavenumbers: Vec<Vec<f64>>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("points", &self.points)
            .field("lengths", &self.lengths)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points && self.lengths == other.lengths
    }
}

impl Grid {
    /// Builds a grid with `points[a]` samples over a box of side `lengths[a]`
    /// along each axis.
    pub fn new(points: &[usize], lengths: &[f64]) -> Result<Arc<Grid>> {
        let dim = points.len();
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2, got {dim}"
            )));
        }
        if lengths.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: lengths.len(),
            });
        }
        for (&n, &l) in points.iter().zip(lengths) {
            if n < 8 || !n.is_power_of_two() {
                return Err(Error::InvalidGrid(format!(
                    "points per axis must be a power of two >= 8, got {n}"
                )));
            }
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "box length must be positive and finite, got {l}"
                )));
            }
        }

        let mut planner = FftPlanner::<f64>::new();
        let mut grid = Grid {
            points: points.to_vec(),
            lengths: lengths.to_vec(),
            spacing: Vec::with_capacity(dim),
            coords: Vec::with_capacity(dim),
            wavenumbers: Vec::with_capacity(dim),
            forward: Vec::with_capacity(dim),
            inverse: Vec::with_capacity(dim),
        };
        for (&n, &l) in points.iter().zip(lengths) {
            let dx = l / n as f64;
            grid.spacing.push(dx);
            grid.coords
                .push((0..n).map(|j| -0.5 * l + j as f64 * dx).collect());
            grid.wavenumbers.push(
                (0..n)
                    .map(|m| {
                        let m = if m < n / 2 {
                            m as f64
                        } else {
                            m as f64 - n as f64
                        };
                        2.0 * PI * m / l
                    })
                    .collect(),
            );
            grid.forward
                .push(planner.plan_fft(n, FftDirection::Forward));
            grid.inverse
                .push(planner.plan_fft(n, FftDirection::Inverse));
        }
        Ok(Arc::new(grid))
    }

    /// Same `N` and `L` along every axis.
    pub fn cube(dim: usize, points: usize, length: f64) -> Result<Arc<Grid>> {
        Grid::new(&vec![points; dim], &vec![length; dim])
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn dx(&self, axis: usize) -> f64 {
        self.spacing[axis]
    }

    /// Quadrature weight `dx₁ ⋯ dxₙ`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Total number of samples `N₁ ⋯ Nₙ`.
    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coords(&self, axis: usize) -> &[f64] {
        &self.coords[axis]
    }

    /// Wavenumbers along `axis` in standard DFT ordering.
    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.wavenumbers[axis]
    }

    /// Largest representable `|k|` along `axis` (the Nyquist wavenumber).
    pub fn k_nyquist(&self, axis: usize) -> f64 {
        PI / self.spacing[axis]
    }

    pub(crate) fn stride(&self, axis: usize) -> usize {
        self.points[..axis].iter().product()
    }

    /// Index along `axis` of the flat sample index `flat`.
    #[inline]
    pub fn axis_index(&self, flat: usize, axis: usize) -> usize {
        (flat / self.stride(axis)) % self.points[axis]
    }

    /// Per-axis table (of length `self.len()`) of a quantity depending on one
    /// coordinate only.
    pub(crate) fn broadcast(&self, axis: usize, table: &[f64]) -> Vec<f64> {
        let stride = self.stride(axis);
        let n = self.points[axis];
        (0..self.len()).map(|i| table[(i / stride) % n]).collect()
    }

    /// Position `x_a` of every sample, one flat table per axis.
    pub fn positions(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|a| self.broadcast(a, &self.coords[a]))
            .collect()
    }

    /// `|k|²` for every spectral sample.
    pub fn k_squared(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for a in 0..self.dim() {
            let k2: Vec<f64> = self.wavenumbers[a].iter().map(|k| k * k).collect();
            for (o, v) in out.iter_mut().zip(self.broadcast(a, &k2)) {
                *o += v;
            }
        }
        out
    }

    /// Largest `|k|²` on the grid.
    pub fn k_squared_max(&self) -> f64 {
        (0..self.dim()).map(|a| self.k_nyquist(a).powi(2)).sum()
    }

    /// Whether flat sample `i` lies in the central `INTERIOR_FRACTION` of the
    /// box along every axis.
    pub fn is_interior(&self, flat: usize) -> bool {
        (0..self.dim()).all(|a| {
            let x = self.coords[a][self.axis_index(flat, a)];
            x.abs() <= 0.5 * INTERIOR_FRACTION * self.lengths[a]
        })
    }

    pub(crate) fn dft(&self, data: &mut [Complex64], direction: FftDirection) {
        debug_assert_eq!(data.len(), self.len());
        let plans = match direction {
            FftDirection::Forward => &self.forward,
            FftDirection::Inverse => &self.inverse,
        };
        let n0 = self.points[0];
        let mut scratch = vec![
            Complex64::new(0.0, 0.0);
            plans
                .iter()
                .map(|p| p.get_inplace_scratch_len())
                .max()
                .unwrap_or(0)
        ];
        // axis 0 is contiguous
        plans[0].process_with_scratch(data, &mut scratch);
        if self.dim() == 2 {
            let n1 = self.points[1];
            let mut column = vec![Complex64::new(0.0, 0.0); n1];
            for j0 in 0..n0 {
                for (j1, c) in column.iter_mut().enumerate() {
                    *c = data[j1 * n0 + j0];
                }
                plans[1].process_with_scratch(&mut column, &mut scratch);
                for (j1, c) in column.iter().enumerate() {
                    data[j1 * n0 + j0] = *c;
                }
            }
        }
        let norm = 1.0 / (self.len() as f64).sqrt();
        for v in data.iter_mut() {
            *v *= norm;
        }
    }
}

/// Thresholds certifying that the periodic box stands in for whole space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Containment {
    /// Largest admissible fraction of mass outside the central box.
    pub boundary_mass_max: f64,
    /// Largest admissible fraction of spectral mass in the outer band.
    pub spectral_tail_max: f64,
}

impl Default for Containment {
    fn default() -> Self {
        Containment {
            boundary_mass_max: 1e-8,
            spectral_tail_max: 1e-8,
        }
    }
}

impl Containment {
    /// Only the boundary-mass guard (no transform needed).
    pub fn check_support(&self, f: &Field) -> Result<f64> {
        let bm = boundary_mass(f);
        if !(bm <= self.boundary_mass_max) {
            return Err(Error::Containment {
                kind: GuardKind::BoundaryMass,
                value: bm,
                limit: self.boundary_mass_max,
            });
        }
        Ok(bm)
    }

    pub fn check_spectrum(&self, f: &Field) -> Result<f64> {
        let tail = spectral_tail(f);
        if !(tail <= self.spectral_tail_max) {
            return Err(Error::Containment {
                kind: GuardKind::SpectralTail,
                value: tail,
                limit: self.spectral_tail_max,
            });
        }
        Ok(tail)
    }

    /// Both guards; returns `(boundary_mass, spectral_tail)`.
    pub fn check(&self, f: &Field) -> Result<(f64, f64)> {
        Ok((self.check_support(f)?, self.check_spectrum(f)?))
    }
}
