use std::sync::Arc;

use num_complex::Complex64;

use crate::error::Result;
use crate::grid::spectral_gradient;
use crate::grid::{boundary_mass, spectral_tail, Field, Grid};
use crate::problem::Problem;
use crate::propagator::HartreeKernel;
use crate::transform::{j_e_from_gradient, StarkFrame};

/// Monitored quantities of one state `u(t)`.
///
/// Energies use the effective field (zero when the Stark term is off) and
/// include `½μ∫(K*|u|²)|u|²` when a Hartree term is present.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `‖u‖²_{L²}`
    pub mass: f64,
    /// `‖∇u‖_{L²}`
    pub grad_norm: f64,
    /// `‖u‖_{L^{2σ+2}}`
    pub lr_norm_2s2: f64,
    /// `½ε²‖∇u‖² + λ/(σ+1)‖u‖^{2σ+2}_{2σ+2} + ∫E·x|u|²`
    pub natural_energy: f64,
    /// `½‖(tE − iε∇)u‖² + λ/(σ+1)‖u‖^{2σ+2}_{2σ+2}`
    pub shifted_energy: f64,
    /// `½‖J_E(t)u‖² + λt²/(σ+1)‖u‖^{2σ+2}_{2σ+2}`
    pub pc_quantity: f64,
    /// `‖J_E(t)u‖_{L²}`
    pub je_norm: f64,
    /// `Re ∫ ū (J_E(t)u)_a dx` per axis.
    pub momentum_invariant: Vec<f64>,
    pub boundary_mass: f64,
    pub spectral_tail: f64,
    /// Sub-grid location of `max |u|²`.
    pub peak_location: Vec<f64>,
    pub sigma_norm: Option<f64>,
}

impl DiagnosticsRecord {
    /// `‖u‖^{2σ+2}_{L^{2σ+2}}`
    pub fn lr_integral(&self, sigma: f64) -> f64 {
        self.lr_norm_2s2.powf(2.0 * sigma + 2.0)
    }

    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.mass,
            self.grad_norm,
            self.lr_norm_2s2,
            self.natural_energy,
            self.shifted_energy,
            self.pc_quantity,
            self.je_norm,
            self.boundary_mass,
            self.spectral_tail,
        ]
        .iter()
        .chain(&self.momentum_invariant)
        .chain(&self.peak_location)
        .all(|v| v.is_finite())
    }
}

/// Computes [`DiagnosticsRecord`]s for one problem, caching the Hartree
/// kernel and coordinate tables.
#[derive(Debug, Clone)]
pub struct Recorder {
    grid: Arc<Grid>,
    problem: Problem,
    positions: Vec<Vec<f64>>,
    hartree: Option<(f64, HartreeKernel)>,
    with_sigma_norm: bool,
}

impl Recorder {
    pub fn new(grid: &Arc<Grid>, problem: &Problem, with_sigma_norm: bool) -> Result<Recorder> {
        problem.validate()?;
        let hartree = match problem.hartree {
            Some(h) => Some((h.mu, HartreeKernel::new(grid, h.gamma)?)),
            None => None,
        };
        Ok(Recorder {
            grid: grid.clone(),
            problem: problem.clone(),
            positions: grid.positions(),
            hartree,
            with_sigma_norm,
        })
    }

    pub fn record(&self, u: &Field, t: f64) -> DiagnosticsRecord {
        let g = &self.grid;
        let p = &self.problem;
        let dim = g.dim();
        let vol = g.cell_volume();
        let eps = p.epsilon;
        let e = p.effective_field();
        let s = p.sigma;

        let mass = u.mass();
        let grad = spectral_gradient(u);
        let grad2: f64 = grad.iter().map(Field::mass).sum();
        let lr_int = u.lp_integral(2.0 * s + 2.0);
        let nonlinear = p.lambda / (s + 1.0) * lr_int;
        let hartree_energy = self.hartree.as_ref().map_or(0.0, |(mu, kernel)| {
            let vh = kernel.convolve_density(u);
            0.5 * mu
                * u.values()
                    .iter()
                    .zip(&vh)
                    .map(|(z, v)| z.norm_sqr() * v)
                    .sum::<f64>()
                * vol
        });

        let (mut potential, mut x2) = (0.0, 0.0);
        for (i, z) in u.values().iter().enumerate() {
            let rho = z.norm_sqr();
            for a in 0..dim {
                let x = self.positions[a][i];
                potential += e[a] * x * rho;
                x2 += x * x * rho;
            }
        }
        potential *= vol;
        x2 *= vol;

        // ‖(tE − iε∇)u‖² = t²|E|²M + ε²‖∇u‖² + 2εt E·Im∫ū∇u
        let mut shifted_kinetic = eps * eps * grad2;
        for a in 0..dim {
            let current: Complex64 = u.inner(&grad[a]).expect("same grid");
            shifted_kinetic += (t * e[a]).powi(2) * mass + 2.0 * eps * t * e[a] * current.im;
        }

        let frame = StarkFrame {
            t,
            field: e.clone(),
            epsilon: eps,
        };
        let je = j_e_from_gradient(u, &grad, &frame);
        let je2: f64 = je.iter().map(Field::mass).sum();
        let momentum_invariant = je
            .iter()
            .map(|j| u.inner(j).expect("same grid").re)
            .collect();

        let sigma_norm = self.with_sigma_norm.then(|| (mass + grad2 + x2).sqrt());

        DiagnosticsRecord {
            t,
            mass,
            grad_norm: grad2.sqrt(),
            lr_norm_2s2: lr_int.powf(1.0 / (2.0 * s + 2.0)),
            natural_energy: 0.5 * eps * eps * grad2 + nonlinear + potential + hartree_energy,
            shifted_energy: 0.5 * shifted_kinetic + nonlinear + hartree_energy,
            pc_quantity: 0.5 * je2 + p.lambda * t * t / (s + 1.0) * lr_int,
            je_norm: je2.sqrt(),
            momentum_invariant,
            boundary_mass: boundary_mass(u),
            spectral_tail: spectral_tail(u),
            peak_location: peak_location(u),
            sigma_norm,
        }
    }
}

/// Builds the full record of `u` at time `t` for problem `p`.
pub fn record(u: &Field, t: f64, p: &Problem) -> Result<DiagnosticsRecord> {
    Ok(Recorder::new(u.grid(), p, false)?.record(u, t))
}

/// Location of `max |u|²`, refined per axis by the parabola through the
/// maximal sample and its two periodic neighbors.
pub fn peak_location(u: &Field) -> Vec<f64> {
    let g = u.grid();
    let (imax, _) = u.values().iter().map(|z| z.norm_sqr()).enumerate().fold(
        (0, f64::NEG_INFINITY),
        |best, (i, v)| if v > best.1 { (i, v) } else { best },
    );
    let y0 = u.values()[imax].norm_sqr();
    (0..g.dim())
        .map(|a| {
            let n = g.points()[a];
            let stride = g.stride(a);
            let j = g.axis_index(imax, a);
            let base = imax - j * stride;
            let at = |jj: usize| u.values()[base + jj * stride].norm_sqr();
            let ym = at((j + n - 1) % n);
            let yp = at((j + 1) % n);
            let curvature = ym - 2.0 * y0 + yp;
            let offset = if curvature < 0.0 {
                (0.5 * (ym - yp) / curvature).clamp(-0.5, 0.5)
            } else {
                0.0
            };
            g.coords(a)[j] + offset * g.dx(a)
        })
        .collect()
}
