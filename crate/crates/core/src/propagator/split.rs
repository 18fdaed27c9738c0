use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftDirection;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::problem::{Hartree, Problem};

/// Spectral multiplier of the periodized kernel `|x|^{-γ}` with the origin
/// regularized to `dx^{-γ}`.
#[derive(Debug, Clone)]
pub struct HartreeKernel {
    grid: Arc<Grid>,
    multiplier: Vec<Complex64>,
}

impl HartreeKernel {
    pub fn new(grid: &Arc<Grid>, gamma: f64) -> Result<HartreeKernel> {
        let dim = grid.dim();
        if !(gamma > 0.0 && gamma < dim as f64) {
            return Err(Error::param(
                "gamma",
                format!("must lie in (0, {dim}), got {gamma}"),
            ));
        }
        let dx_min = (0..dim).map(|a| grid.dx(a)).fold(f64::INFINITY, f64::min);
        // offsets in DFT order, i.e. minimal periodic images
        let offsets: Vec<Vec<f64>> = (0..dim)
            .map(|a| {
                let n = grid.points()[a];
                let dx = grid.dx(a);
                let d: Vec<f64> = (0..n)
                    .map(|j| {
                        if j < n / 2 {
                            j as f64 * dx
                        } else {
                            (j as f64 - n as f64) * dx
                        }
                    })
                    .collect();
                grid.broadcast(a, &d)
            })
            .collect();
        let mut samples: Vec<Complex64> = (0..grid.len())
            .map(|i| {
                let r = offsets.iter().map(|d| d[i] * d[i]).sum::<f64>().sqrt();
                let k = if r == 0.0 {
                    dx_min.powf(-gamma)
                } else {
                    r.powf(-gamma)
                };
                Complex64::new(k, 0.0)
            })
            .collect();
        grid.dft(&mut samples, FftDirection::Forward);
        let factor = (grid.len() as f64).sqrt() * grid.cell_volume();
        for s in samples.iter_mut() {
            *s *= factor;
        }
        Ok(HartreeKernel {
            grid: grid.clone(),
            multiplier: samples,
        })
    }

    /// `(K * |f|²)(x)` by circular convolution.
    pub fn convolve_density(&self, f: &Field) -> Vec<f64> {
        debug_assert!(**f.grid() == *self.grid);
        let mut rho: Vec<Complex64> = f
            .values()
            .iter()
            .map(|z| Complex64::new(z.norm_sqr(), 0.0))
            .collect();
        self.grid.dft(&mut rho, FftDirection::Forward);
        for (r, m) in rho.iter_mut().zip(&self.multiplier) {
            *r *= m;
        }
        self.grid.dft(&mut rho, FftDirection::Inverse);
        rho.into_iter().map(|z| z.re).collect()
    }
}

/// `μ (K_γ * |f|²)` sampled on the grid.
pub fn hartree_potential(f: &Field, mu: f64, gamma: f64) -> Result<Vec<f64>> {
    let kernel = HartreeKernel::new(f.grid(), gamma)?;
    Ok(kernel
        .convolve_density(f)
        .into_iter()
        .map(|v| mu * v)
        .collect())
}

/// Cached pieces of one Strang step for a fixed `(grid, dt, problem)`.
#[derive(Debug, Clone)]
pub struct SplitStep {
    grid: Arc<Grid>,
    dt: f64,
    problem: Problem,
    /// `[stark_on] E·x`
    potential: Vec<f64>,
    kinetic: Vec<Complex64>,
    hartree: Option<(Hartree, HartreeKernel)>,
}

impl SplitStep {
    pub fn new(grid: &Arc<Grid>, dt: f64, problem: &Problem) -> Result<SplitStep> {
        problem.validate()?;
        if problem.dim() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                got: problem.dim(),
            });
        }
        let e = problem.effective_field();
        let pos = grid.positions();
        let potential = (0..grid.len())
            .map(|i| (0..grid.dim()).map(|a| e[a] * pos[a][i]).sum())
            .collect();
        let eps = problem.epsilon;
        let kinetic = grid
            .k_squared()
            .into_iter()
            .map(|k2| Complex64::from_polar(1.0, -0.5 * eps * k2 * dt))
            .collect();
        let hartree = match problem.hartree {
            Some(h) => Some((h, HartreeKernel::new(grid, h.gamma)?)),
            None => None,
        };
        Ok(SplitStep {
            grid: grid.clone(),
            dt,
            problem: problem.clone(),
            potential,
            kinetic,
            hartree,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Exact potential + nonlinear sub-flow over `tau`:
    /// `f ← f · exp(−iτ(V + λ|f|^{2σ} + V_H[f])/ε)`.
    pub fn potential_flow(&self, values: &mut [Complex64], tau: f64, hartree: Option<&[f64]>) {
        let p = &self.problem;
        let scale = -tau / p.epsilon;
        let lambda = p.lambda;
        let sigma = p.sigma;
        for (i, z) in values.iter_mut().enumerate() {
            let mut w = self.potential[i];
            if lambda != 0.0 {
                w += lambda * z.norm_sqr().powf(sigma);
            }
            if let Some(h) = hartree {
                w += h[i];
            }
            if w != 0.0 {
                *z *= Complex64::from_polar(1.0, scale * w);
            }
        }
    }

    fn hartree_of(&self, f: &Field) -> Option<Vec<f64>> {
        self.hartree.as_ref().map(|(h, kernel)| {
            kernel
                .convolve_density(f)
                .into_iter()
                .map(|v| h.mu * v)
                .collect()
        })
    }

    fn half_potential(&self, f: &mut Field) {
        let h = self.hartree_of(f);
        self.potential_flow(f.values_mut(), 0.5 * self.dt, h.as_deref());
    }

    /// One step `N(dt/2) K(dt) N(dt/2)` in place; advances the time tag.
    pub fn step(&self, f: &mut Field) {
        debug_assert!(**f.grid() == *self.grid);
        self.half_potential(f);
        let values = f.values_mut();
        self.grid.dft(values, FftDirection::Forward);
        for (z, k) in values.iter_mut().zip(&self.kinetic) {
            *z *= k;
        }
        self.grid.dft(values, FftDirection::Inverse);
        self.half_potential(f);
        let t = f.time();
        f.set_time(t.map(|t| t + self.dt));
    }
}

/// Exact sub-flow of the multiplicative part over `dt`.
pub fn nonlinear_phase_step(f: &Field, dt: f64, p: &Problem) -> Result<Field> {
    let stepper = SplitStep::new(f.grid(), dt, p)?;
    let mut out = f.clone();
    let h = stepper.hartree_of(f);
    stepper.potential_flow(out.values_mut(), dt, h.as_deref());
    Ok(out)
}

/// One Strang step: potential half-step, kinetic full step, potential
/// half-step.
pub fn strang_step(f: &Field, dt: f64, p: &Problem) -> Result<Field> {
    let stepper = SplitStep::new(f.grid(), dt, p)?;
    let mut out = f.clone();
    stepper.step(&mut out);
    Ok(out)
}
