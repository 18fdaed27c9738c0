use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftDirection;

use super::Grid;
use crate::error::{Error, Result};

/// Complex samples of a wavefunction on a [`Grid`].
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
    time: Option<f64>,
}

/// DFT coefficients of a [`Field`] (unitary normalization, DFT ordering).
#[derive(Debug, Clone)]
pub struct Spectrum {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

impl Field {
    /// Validated constructor: length must match the grid, samples finite.
    pub fn new(grid: &Arc<Grid>, values: Vec<Complex64>) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if !values.iter().all(|z| z.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Field::from_raw(grid.clone(), values))
    }

    pub(crate) fn from_raw(grid: Arc<Grid>, values: Vec<Complex64>) -> Field {
        Field {
            grid,
            values,
            time: None,
        }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Field {
        Field::from_raw(grid.clone(), vec![Complex64::new(0.0, 0.0); grid.len()])
    }

    /// Samples `f(x)` at every grid point; `x` has one entry per axis.
    pub fn from_fn(grid: &Arc<Grid>, mut f: impl FnMut(&[f64]) -> Complex64) -> Field {
        let dim = grid.dim();
        let mut x = vec![0.0; dim];
        let values = (0..grid.len())
            .map(|i| {
                for (a, xa) in x.iter_mut().enumerate() {
                    *xa = grid.coords(a)[grid.axis_index(i, a)];
                }
                f(&x)
            })
            .collect();
        Field::from_raw(grid.clone(), values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn time(&self) -> Option<f64> {
        self.time
    }

    pub fn with_time(mut self, t: f64) -> Field {
        self.time = Some(t);
        self
    }

    pub fn set_time(&mut self, t: Option<f64>) {
        self.time = t;
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.is_finite())
    }

    pub(crate) fn same_grid(&self, other: &Field) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Applies `f` pointwise, keeping grid and time tag.
    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&z| f(z)).collect(),
            time: self.time,
        }
    }

    /// Pointwise combination with another field on the same grid.
    pub fn zip_map(
        &self,
        other: &Field,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Field> {
        self.same_grid(other)?;
        Ok(Field {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            time: self.time,
        })
    }

    pub fn scale(&self, c: Complex64) -> Field {
        self.map(|z| z * c)
    }

    /// Multiplies pointwise by a real table of the grid's size.
    pub fn mul_real(&self, table: &[f64]) -> Field {
        debug_assert_eq!(table.len(), self.values.len());
        Field {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(table)
                .map(|(&z, &w)| z * w)
                .collect(),
            time: self.time,
        }
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a + b)
    }

    /// `∫ |u|² dx` (rectangle rule).
    pub fn mass(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    /// `‖u‖_{L²}`.
    pub fn l2_norm(&self) -> f64 {
        self.mass().sqrt()
    }

    /// `∫ |u|^p dx` for finite `p >= 1`.
    pub fn lp_integral(&self, p: f64) -> f64 {
        self.values
            .iter()
            .map(|z| z.norm_sqr().powf(0.5 * p))
            .sum::<f64>()
            * self.grid.cell_volume()
    }

    /// `‖u‖_{L^p}` for finite `p >= 1`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        self.lp_integral(p).powf(1.0 / p)
    }

    /// `∫ conj(u) w dx`.
    pub fn inner(&self, other: &Field) -> Result<Complex64> {
        self.same_grid(other)?;
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.grid.cell_volume())
    }

    /// `‖u − w‖_{L²}`.
    pub fn l2_distance(&self, other: &Field) -> Result<f64> {
        self.same_grid(other)?;
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((s * self.grid.cell_volume()).sqrt())
    }

    /// `max_j |u_j|`.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max_j |u_j − w_j|`.
    pub fn max_abs_diff(&self, other: &Field) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Unitary forward DFT.
    pub fn forward_dft(&self) -> Spectrum {
        let mut coeffs = self.values.clone();
        self.grid.dft(&mut coeffs, FftDirection::Forward);
        Spectrum {
            grid: self.grid.clone(),
            coeffs,
        }
    }
}

impl Spectrum {
    pub fn new(grid: &Arc<Grid>, coeffs: Vec<Complex64>) -> Result<Spectrum> {
        if coeffs.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        Ok(Spectrum {
            grid: grid.clone(),
            coeffs,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// `dxⁿ Σ|û|²`, equal to [`Field::mass`] by Parseval.
    pub fn mass(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    /// Multiplies every coefficient by `multiplier[m]`.
    pub fn apply(&self, multiplier: impl Fn(usize) -> Complex64) -> Spectrum {
        Spectrum {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(m, &c)| c * multiplier(m))
                .collect(),
        }
    }

    /// Unitary inverse DFT.
    pub fn inverse_dft(&self) -> Field {
        let mut values = self.coeffs.clone();
        self.grid.dft(&mut values, FftDirection::Inverse);
        Field::from_raw(self.grid.clone(), values)
    }

    pub(crate) fn into_field(mut self) -> Field {
        self.grid.dft(&mut self.coeffs, FftDirection::Inverse);
        Field::from_raw(self.grid, self.coeffs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constructor_checks() {
        let g = Grid::cube(1, 8, 1.0).unwrap();
        assert!(matches!(
            Field::new(&g, vec![c(0.0, 0.0); 7]),
            Err(Error::SizeMismatch {
                expected: 8,
                got: 7
            })
        ));
        let mut v = vec![c(0.0, 0.0); 8];
        v[3] = c(f64::NAN, 0.0);
        assert!(matches!(Field::new(&g, v), Err(Error::NonFinite)));
    }

    #[test]
    fn constant_field_lands_in_zero_mode() {
        let g = Grid::cube(1, 32, 4.0).unwrap();
        let f = Field::from_fn(&g, |_| c(1.0, 0.0));
        let s = f.forward_dft();
        assert!((s.coeffs()[0] - c(32f64.sqrt(), 0.0)).norm() < 1e-12);
        for z in &s.coeffs()[1..] {
            assert!(z.norm() < 1e-13);
        }
    }

    #[test]
    fn plane_wave_is_a_single_mode() {
        let g = Grid::cube(1, 64, 2.0 * PI).unwrap();
        for m in [-32i64, -5, 0, 3, 31] {
            let k = m as f64;
            let f = Field::from_fn(&g, |x| Complex64::from_polar(1.0, k * x[0]));
            let s = f.forward_dft();
            let idx = m.rem_euclid(64) as usize;
            for (j, z) in s.coeffs().iter().enumerate() {
                if j == idx {
                    assert!((z.norm() - 8.0).abs() < 1e-12);
                } else {
                    assert!(z.norm() < 1e-12, "mode {j} for m={m}: {z}");
                }
            }
        }
    }

    #[test]
    fn plane_wave_2d() {
        let g = Grid::new(&[16, 32], &[2.0 * PI, 2.0 * PI]).unwrap();
        let f = Field::from_fn(&g, |x| Complex64::from_polar(1.0, 2.0 * x[0] - 3.0 * x[1]));
        let s = f.forward_dft();
        let idx = (32 - 3) * 16 + 2;
        for (j, z) in s.coeffs().iter().enumerate() {
            let expect = if j == idx { (512f64).sqrt() } else { 0.0 };
            assert!((z.norm() - expect).abs() < 1e-11);
        }
    }

    #[test]
    fn lp_norms_of_constant() {
        let g = Grid::cube(2, 8, 2.0).unwrap();
        let f = Field::from_fn(&g, |_| c(0.0, 2.0));
        assert!((f.mass() - 16.0).abs() < 1e-12);
        assert!((f.lp_integral(4.0) - 64.0).abs() < 1e-12);
        assert!((f.lp_norm(4.0) - 64f64.powf(0.25)).abs() < 1e-12);
    }
}
