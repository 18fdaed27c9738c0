//! Physical configuration and closed-form initial data.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{spectral_gradient, Containment, Field, Grid};

/// Hartree interaction `μ (|x|^{-γ} * |u|²) u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hartree {
    pub mu: f64,
    pub gamma: f64,
}

/// Parameters of
/// `iε∂ₜu + ½ε²Δu = [stark_on] (E·x) u + λ|u|^{2σ}u [+ Hartree]`.
///
/// With `stark_on == false` the field `E` is ignored and the equation is the
/// free one; `stark_on == true` with `E = 0` is the same equation.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub epsilon: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub field: Vec<f64>,
    pub hartree: Option<Hartree>,
    pub stark_on: bool,
}

impl Problem {
    pub fn new(
        epsilon: f64,
        lambda: f64,
        sigma: f64,
        field: Vec<f64>,
        hartree: Option<Hartree>,
        stark_on: bool,
    ) -> Result<Problem> {
        let p = Problem {
            epsilon,
            lambda,
            sigma,
            field,
            hartree,
            stark_on,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::param(
                "epsilon",
                format!("must lie in (0, 1], got {}", self.epsilon),
            ));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::param(
                "sigma",
                format!("must be positive, got {}", self.sigma),
            ));
        }
        if !self.lambda.is_finite() {
            return Err(Error::param("lambda", "must be finite"));
        }
        let dim = self.field.len();
        if !(1..=2).contains(&dim) {
            return Err(Error::param(
                "E",
                format!("must have 1 or 2 components, got {dim}"),
            ));
        }
        if !self.field.iter().all(|e| e.is_finite()) {
            return Err(Error::param("E", "components must be finite"));
        }
        if let Some(h) = self.hartree {
            if !h.mu.is_finite() {
                return Err(Error::param("mu", "must be finite"));
            }
            if !(h.gamma > 0.0 && h.gamma < dim as f64) {
                return Err(Error::param(
                    "gamma",
                    format!("must lie in (0, {dim}), got {}", h.gamma),
                ));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.field.len()
    }

    /// The field actually felt by the solution: `E` when the Stark term is
    /// on, zero otherwise.
    pub fn effective_field(&self) -> Vec<f64> {
        if self.stark_on {
            self.field.clone()
        } else {
            vec![0.0; self.field.len()]
        }
    }

    /// Same problem without the Stark potential.
    pub fn free(&self) -> Problem {
        Problem {
            stark_on: false,
            ..self.clone()
        }
    }

    pub fn with_field(&self, field: Vec<f64>) -> Problem {
        Problem {
            field,
            ..self.clone()
        }
    }
}

/// Parameters of a localized wave packet.
#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub amplitude: f64,
    pub center: Vec<f64>,
    pub width: f64,
    /// Phase slope `p` in `exp(i p·x / ε)`.
    pub momentum: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum InitialData {
    /// `A exp(−|x − x₀|²/(2w²)) exp(i p·x/ε)`
    Gaussian(Packet),
    /// Same closed form as [`InitialData::Gaussian`], listed separately so
    /// configurations can say what they mean.
    GaussianBoosted(Packet),
    /// `A sech(|x − x₀|/w) exp(i p·x/ε)`
    SolitonLike(Packet),
    Custom(Field),
}

impl InitialData {
    /// Centered, unboosted Gaussian.
    pub fn gaussian(dim: usize, amplitude: f64, width: f64) -> InitialData {
        InitialData::Gaussian(Packet {
            amplitude,
            center: vec![0.0; dim],
            width,
            momentum: vec![0.0; dim],
        })
    }
}

fn check_packet(p: &Packet, dim: usize) -> Result<()> {
    if p.center.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: p.center.len(),
        });
    }
    if p.momentum.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: p.momentum.len(),
        });
    }
    if !(p.width > 0.0 && p.width.is_finite()) {
        return Err(Error::param(
            "width",
            format!("must be positive, got {}", p.width),
        ));
    }
    if !p.amplitude.is_finite() {
        return Err(Error::param("amplitude", "must be finite"));
    }
    Ok(())
}

fn sample_packet(g: &Arc<Grid>, p: &Packet, eps: f64, profile: impl Fn(f64) -> f64) -> Field {
    Field::from_fn(g, |x| {
        let r2: f64 = x
            .iter()
            .zip(&p.center)
            .map(|(xi, ci)| (xi - ci).powi(2))
            .sum();
        let phase: f64 = x
            .iter()
            .zip(&p.momentum)
            .map(|(xi, pi)| xi * pi)
            .sum::<f64>()
            / eps;
        Complex64::from_polar(p.amplitude * profile(r2), phase)
    })
}

/// Samples the initial datum on `g`; the result is tagged `t = 0` and must
/// pass both containment guards.
pub fn realize_initial_data(
    d: &InitialData,
    g: &Arc<Grid>,
    eps: f64,
    guards: &Containment,
) -> Result<Field> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::param(
            "epsilon",
            format!("must lie in (0, 1], got {eps}"),
        ));
    }
    let dim = g.dim();
    let field = match d {
        InitialData::Gaussian(p) | InitialData::GaussianBoosted(p) => {
            check_packet(p, dim)?;
            let w2 = p.width * p.width;
            sample_packet(g, p, eps, |r2| (-0.5 * r2 / w2).exp())
        }
        InitialData::SolitonLike(p) => {
            check_packet(p, dim)?;
            sample_packet(g, p, eps, |r2| 1.0 / (r2.sqrt() / p.width).cosh())
        }
        InitialData::Custom(f) => {
            if **f.grid() != **g {
                return Err(Error::GridMismatch);
            }
            if !f.is_finite() {
                return Err(Error::NonFinite);
            }
            f.clone()
        }
    };
    guards.check(&field)?;
    Ok(field.with_time(0.0))
}

/// `½‖∇u₀‖² + λ/(σ+1) ‖u₀‖_{2σ+2}^{2σ+2}`; negative values with `λ < 0`,
/// `σ ≥ 2/n` guarantee finite-time blow-up (stated for `ε = 1`).
pub fn blowup_energy_sign(u0: &Field, p: &Problem) -> f64 {
    let grad: f64 = spectral_gradient(u0).iter().map(Field::mass).sum();
    let s = p.sigma;
    0.5 * grad + p.lambda / (s + 1.0) * u0.lp_integral(2.0 * s + 2.0)
}

/// Lower bound on `σ` for the scattering statement,
/// `(2 − n + √(n² + 12n + 4)) / (4n)`.
pub fn scattering_sigma_threshold(n: usize) -> Result<f64> {
    if !(1..=2).contains(&n) {
        return Err(Error::param(
            "n",
            format!("dimension must be 1 or 2, got {n}"),
        ));
    }
    let n = n as f64;
    Ok((2.0 - n + (n * n + 12.0 * n + 4.0).sqrt()) / (4.0 * n))
}
