//! The Avron–Herbst change of variables and the `J_E` operator.
//!
//! With `s(t) = t²E/2` and `θ(t, x) = tE·x + t³|E|²/6`, the forward map sends
//! a free solution `v` to the Stark solution
//!
//! ```text
//! u(t, x) = v(t, x + s) · exp(−iθ(t, x)/ε)
//! ```
//!
//! and its exact inverse is `v(t, y) = u(t, y − s) · exp(i(tE·y − t³|E|²/3)/ε)`.
//! Substituting one into the other fixes the cubic phase at `t³|E|²/3` once
//! the translation has moved the argument of `θ`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{spectral_gradient, spectral_translate, Containment, Field, Grid};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Below this modulus the chain-rule coefficients are set to zero.
pub const CHAIN_RULE_FLOOR: f64 = 1e-14;

/// The `(t, E, ε)` triple parameterizing `J_E^ε(t)` and the transform pair.
#[derive(Debug, Clone, PartialEq)]
pub struct StarkFrame {
    pub t: f64,
    pub field: Vec<f64>,
    pub epsilon: f64,
}

impl StarkFrame {
    pub fn new(t: f64, field: Vec<f64>, epsilon: f64) -> Result<StarkFrame> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::param(
                "epsilon",
                format!("must lie in (0, 1], got {epsilon}"),
            ));
        }
        if !t.is_finite() || !field.iter().all(|e| e.is_finite()) {
            return Err(Error::param("frame", "t and E must be finite"));
        }
        Ok(StarkFrame { t, field, epsilon })
    }

    pub fn at(&self, t: f64) -> StarkFrame {
        StarkFrame { t, ..self.clone() }
    }

    /// `s = t²E/2`, the displacement of the Stark packet.
    pub fn shift(&self) -> Vec<f64> {
        self.field
            .iter()
            .map(|e| 0.5 * self.t * self.t * e)
            .collect()
    }

    fn field_sq(&self) -> f64 {
        self.field.iter().map(|e| e * e).sum()
    }

    fn check_dim(&self, g: &Grid) -> Result<()> {
        if self.field.len() != g.dim() {
            return Err(Error::DimensionMismatch {
                expected: g.dim(),
                got: self.field.len(),
            });
        }
        Ok(())
    }

    /// `θ(t, x) = tE·x + t³|E|²/6` at every grid point.
    fn theta(&self, g: &Grid) -> Vec<f64> {
        let t = self.t;
        let c = t * t * t * self.field_sq() / 6.0;
        let pos = g.positions();
        (0..g.len())
            .map(|i| {
                let ex: f64 = (0..g.dim()).map(|a| self.field[a] * pos[a][i]).sum();
                t * ex + c
            })
            .collect()
    }
}

/// `φ(t, x) = |x|²/(2t) − (t/2)E·x − (t³/24)|E|²` on the grid.
pub fn phase_phi(fr: &StarkFrame, g: &Grid) -> Result<Vec<f64>> {
    if fr.t == 0.0 {
        return Err(Error::ZeroTime("phase φ is singular at t = 0"));
    }
    fr.check_dim(g)?;
    let t = fr.t;
    let e2 = fr.field_sq();
    let pos = g.positions();
    Ok((0..g.len())
        .map(|i| {
            let (mut r2, mut ex) = (0.0, 0.0);
            for a in 0..g.dim() {
                r2 += pos[a][i] * pos[a][i];
                ex += fr.field[a] * pos[a][i];
            }
            r2 / (2.0 * t) - 0.5 * t * ex - t * t * t * e2 / 24.0
        })
        .collect())
}

/// Max over the interior of `∂ₜφ + ½|∇φ|² + E·x`, from the closed-form
/// derivatives.
pub fn eikonal_residual(fr: &StarkFrame, g: &Grid) -> Result<f64> {
    eikonal_residual_perturbed(fr, g, &vec![0.0; g.dim()])
}

/// Same as [`eikonal_residual`] for the phase `φ + c·x` (negative control).
pub fn eikonal_residual_perturbed(fr: &StarkFrame, g: &Grid, slope: &[f64]) -> Result<f64> {
    if fr.t == 0.0 {
        return Err(Error::ZeroTime("eikonal equation needs t ≠ 0"));
    }
    fr.check_dim(g)?;
    let t = fr.t;
    let e2 = fr.field_sq();
    let pos = g.positions();
    let mut worst: f64 = 0.0;
    for i in (0..g.len()).filter(|&i| g.is_interior(i)) {
        let (mut r2, mut ex, mut grad2) = (0.0, 0.0, 0.0);
        for a in 0..g.dim() {
            let x = pos[a][i];
            r2 += x * x;
            ex += fr.field[a] * x;
            let d = x / t - 0.5 * t * fr.field[a] + slope[a];
            grad2 += d * d;
        }
        let dphi_dt = -r2 / (2.0 * t * t) - 0.5 * ex - t * t * e2 / 8.0;
        worst = worst.max((dphi_dt + 0.5 * grad2 + ex).abs());
    }
    Ok(worst)
}

/// Free solution → Stark solution: translate by `+t²E/2`, then multiply by
/// `exp(−iθ/ε)`.
pub fn ah_forward(v: &Field, fr: &StarkFrame) -> Field {
    if fr.t == 0.0 {
        return v.clone();
    }
    let shifted = spectral_translate(v, &fr.shift());
    let theta = fr.theta(v.grid());
    let mut out = shifted;
    for (z, th) in out.values_mut().iter_mut().zip(&theta) {
        *z *= Complex64::from_polar(1.0, -th / fr.epsilon);
    }
    out
}

/// Stark solution → free solution, the exact inverse of [`ah_forward`]:
/// multiply by `exp(iθ/ε)`, then translate by `−t²E/2`.
pub fn ah_inverse(u: &Field, fr: &StarkFrame) -> Field {
    if fr.t == 0.0 {
        return u.clone();
    }
    let theta = fr.theta(u.grid());
    let mut demod = u.clone();
    for (z, th) in demod.values_mut().iter_mut().zip(&theta) {
        *z *= Complex64::from_polar(1.0, th / fr.epsilon);
    }
    let back: Vec<f64> = fr.shift().iter().map(|s| -s).collect();
    spectral_translate(&demod, &back)
}

/// [`ah_forward`] followed by the support guard on the result.
pub fn ah_forward_checked(v: &Field, fr: &StarkFrame, guards: &Containment) -> Result<Field> {
    fr.check_dim(v.grid())?;
    let u = ah_forward(v, fr);
    guards.check_support(&u)?;
    Ok(u)
}

/// [`ah_inverse`] followed by the support guard on the result.
pub fn ah_inverse_checked(u: &Field, fr: &StarkFrame, guards: &Containment) -> Result<Field> {
    fr.check_dim(u.grid())?;
    let v = ah_inverse(u, fr);
    guards.check_support(&v)?;
    Ok(v)
}

/// Components `(x_a/ε) u + i t ∂_a u − (t²/(2ε)) E_a u`.
pub fn j_e_direct(u: &Field, fr: &StarkFrame) -> Vec<Field> {
    let grad = spectral_gradient(u);
    j_e_from_gradient(u, &grad, fr)
}

pub(crate) fn j_e_from_gradient(u: &Field, grad: &[Field], fr: &StarkFrame) -> Vec<Field> {
    let g = u.grid();
    let t = fr.t;
    let eps = fr.epsilon;
    (0..g.dim())
        .map(|a| {
            let shift = 0.5 * t * t * fr.field[a];
            let x = g.broadcast(a, g.coords(a));
            let mut out = u.clone();
            for ((z, d), xa) in out.values_mut().iter_mut().zip(grad[a].values()).zip(&x) {
                *z = *z * ((xa - shift) / eps) + I * t * d;
            }
            out
        })
        .collect()
}

/// `i t e^{iφ/ε} ∇(e^{−iφ/ε} u)`, the conjugated form of `J_E^ε(t)`.
pub fn j_e_conjugated(u: &Field, fr: &StarkFrame, guards: &Containment) -> Result<Vec<Field>> {
    let phi = phase_phi(fr, u.grid())?;
    j_e_conjugated_with_phase(u, fr.t, &phi, fr.epsilon, guards)
}

/// [`j_e_conjugated`] with an explicit phase table; exposed so the prefactor
/// can be checked with the phase held fixed.
pub fn j_e_conjugated_with_phase(
    u: &Field,
    t: f64,
    phi: &[f64],
    eps: f64,
    guards: &Containment,
) -> Result<Vec<Field>> {
    if t == 0.0 {
        return Err(Error::ZeroTime("conjugated form of J_E needs t ≠ 0"));
    }
    if phi.len() != u.values().len() {
        return Err(Error::SizeMismatch {
            expected: u.values().len(),
            got: phi.len(),
        });
    }
    let mut demod = u.clone();
    for (z, p) in demod.values_mut().iter_mut().zip(phi) {
        *z *= Complex64::from_polar(1.0, -p / eps);
    }
    guards.check_spectrum(&demod)?;
    Ok(spectral_gradient(&demod)
        .into_iter()
        .map(|mut d| {
            for (z, p) in d.values_mut().iter_mut().zip(phi) {
                *z *= I * t * Complex64::from_polar(1.0, p / eps);
            }
            d
        })
        .collect())
}

/// Components `t E_a u − iε ∂_a u` (the operator `tE − i∇` at `ε = 1`).
pub fn shifted_momentum(u: &Field, fr: &StarkFrame) -> Vec<Field> {
    spectral_gradient(u)
        .iter()
        .enumerate()
        .map(|(a, d)| {
            let te = fr.t * fr.field[a];
            u.zip_map(d, |z, dz| z * te - I * fr.epsilon * dz)
                .expect("gradient lives on the same grid")
        })
        .collect()
}

/// An identity residual together with the scale it should be judged against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub absolute: f64,
    pub scale: f64,
}

impl Residual {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.absolute
        } else {
            self.absolute / self.scale
        }
    }
}

/// Power nonlinearity `F(z) = λ|z|^{2σ} z`.
pub fn power_nonlinearity(w: &Field, lambda: f64, sigma: f64) -> Field {
    w.map(|z| z * (lambda * z.norm_sqr().powf(sigma)))
}

/// `‖J F(w) − (∂_z F(w) J w − ∂_z̄ F(w) conj(J w))‖_{L²}` for the power
/// nonlinearity, with `scale = ‖J F(w)‖_{L²}`.
pub fn gauge_chain_rule_residual(
    w: &Field,
    fr: &StarkFrame,
    lambda: f64,
    sigma: f64,
) -> Result<Residual> {
    if fr.t == 0.0 {
        return Err(Error::ZeroTime("chain rule is stated for t ≠ 0"));
    }
    fr.check_dim(w.grid())?;
    let lhs = j_e_direct(&power_nonlinearity(w, lambda, sigma), fr);
    let jw = j_e_direct(w, fr);

    let (dz, dzbar): (Vec<f64>, Vec<Complex64>) = w
        .values()
        .iter()
        .map(|&z| {
            let r2 = z.norm_sqr();
            if z.norm() < CHAIN_RULE_FLOOR {
                (0.0, Complex64::new(0.0, 0.0))
            } else {
                (
                    lambda * (sigma + 1.0) * r2.powf(sigma),
                    z * z * (lambda * sigma * r2.powf(sigma - 1.0)),
                )
            }
        })
        .unzip();

    let mut diff2 = 0.0;
    let mut scale2 = 0.0;
    for (l, j) in lhs.iter().zip(&jw) {
        let rhs: Vec<Complex64> = j
            .values()
            .iter()
            .enumerate()
            .map(|(i, &jz)| dz[i] * jz - dzbar[i] * jz.conj())
            .collect();
        let rhs = Field::new(w.grid(), rhs)?;
        diff2 += l.l2_distance(&rhs)?.powi(2);
        scale2 += l.mass();
    }
    Ok(Residual {
        absolute: diff2.sqrt(),
        scale: scale2.sqrt(),
    })
}

/// `(‖u‖² + ‖∇u‖² + ‖x u‖²)^½` without containment checks.
pub fn sigma_norm_unchecked(u: &Field) -> f64 {
    let grad: f64 = spectral_gradient(u).iter().map(Field::mass).sum();
    let g = u.grid();
    let pos = g.positions();
    let x2: f64 = u
        .values()
        .iter()
        .enumerate()
        .map(|(i, z)| z.norm_sqr() * (0..g.dim()).map(|a| pos[a][i] * pos[a][i]).sum::<f64>())
        .sum::<f64>()
        * g.cell_volume();
    (u.mass() + grad + x2).sqrt()
}

/// Norm on `Σ = {f ∈ H¹ : |x| f ∈ L²}`, requiring a contained field.
pub fn sigma_norm(u: &Field, guards: &Containment) -> Result<f64> {
    guards.check_support(u)?;
    Ok(sigma_norm_unchecked(u))
}

pub(crate) fn frame_for(g: &Arc<Grid>, t: f64, field: &[f64], eps: f64) -> Result<StarkFrame> {
    let fr = StarkFrame::new(t, field.to_vec(), eps)?;
    fr.check_dim(g)?;
    Ok(fr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gauss(g: &Arc<Grid>, a: f64) -> Field {
        Field::from_fn(g, |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            Complex64::new(a * (-0.5 * r2).exp(), 0.0)
        })
    }

    #[test]
    fn phase_values() {
        let g = Grid::cube(1, 16, 16.0).unwrap();
        // x_8 = 0
        let phi = phase_phi(&StarkFrame::new(2.0, vec![1.5], 1.0).unwrap(), &g).unwrap();
        assert!((phi[8] + 1.5f64.powi(2) / 3.0).abs() < 1e-14);
        // x_9 = 1
        let phi = phase_phi(&StarkFrame::new(1.0, vec![1.0], 1.0).unwrap(), &g).unwrap();
        assert!((phi[9] + 1.0 / 24.0).abs() < 1e-15);
        let phi = phase_phi(&StarkFrame::new(0.5, vec![0.0], 1.0).unwrap(), &g).unwrap();
        for (i, x) in g.coords(0).iter().enumerate() {
            assert!((phi[i] - x * x).abs() < 1e-13);
        }
        assert!(phase_phi(&StarkFrame::new(0.0, vec![1.0], 1.0).unwrap(), &g).is_err());
    }

    #[test]
    fn eikonal_identity_and_negative_control() {
        let g = Grid::cube(2, 32, 12.0).unwrap();
        let fr = StarkFrame::new(0.7, vec![1.0, -0.4], 1.0).unwrap();
        assert!(eikonal_residual(&fr, &g).unwrap() < 1e-12);
        let free = StarkFrame::new(-1.3, vec![0.0, 0.0], 1.0).unwrap();
        assert!(eikonal_residual(&free, &g).unwrap() < 1e-12);
        assert!(eikonal_residual_perturbed(&fr, &g, &[1.0, 0.0]).unwrap() > 0.1);
        assert!(eikonal_residual(&fr.at(0.0), &g).is_err());
    }

    #[test]
    fn transform_degenerate_cases() {
        let g = Grid::cube(1, 256, 40.0).unwrap();
        let v = gauss(&g, 1.0);
        let t0 = StarkFrame::new(0.0, vec![1.0], 1.0).unwrap();
        assert_eq!(ah_forward(&v, &t0).values(), v.values());
        assert_eq!(ah_inverse(&v, &t0).values(), v.values());
        let e0 = StarkFrame::new(1.7, vec![0.0], 1.0).unwrap();
        assert!(ah_forward(&v, &e0).max_abs_diff(&v).unwrap() < 1e-15);
        let fr = StarkFrame::new(1.2, vec![0.8], 0.5).unwrap();
        let u = ah_forward(&v, &fr);
        assert!((u.l2_norm() - v.l2_norm()).abs() < 1e-13);
    }

    #[test]
    fn inverse_phase_on_grid_shift() {
        // t²E/2 = dx exactly: L = 16, N = 128, dx = 1/8, t = 1, E = 1/4.
        let g = Grid::cube(1, 128, 16.0).unwrap();
        let dx = g.dx(0);
        let fr = StarkFrame::new(1.0, vec![0.25], 1.0).unwrap();
        assert_eq!(fr.shift()[0], dx);
        let u = Field::from_fn(&g, |x| Complex64::new((-x[0] * x[0]).exp(), 0.3 * x[0]));
        let v = ah_inverse(&u, &fr);
        let x = g.coords(0);
        for j in 1..128 {
            // v(y_j) = u(y_j − dx) · exp(i(tE y_j − t³E²/3))
            let ph = 0.25 * x[j] - 0.25f64.powi(2) / 3.0;
            let want = u.values()[j - 1] * Complex64::from_polar(1.0, ph);
            assert!((v.values()[j] - want).norm() < 1e-13, "j = {j}");
        }
    }

    #[test]
    fn j_e_special_cases() {
        let g = Grid::cube(1, 512, 40.0).unwrap();
        let u = gauss(&g, 1.0);
        let x = g.coords(0);

        let j0 = j_e_direct(&u, &StarkFrame::new(0.0, vec![1.0], 0.5).unwrap());
        for (i, z) in j0[0].values().iter().enumerate() {
            assert!((z - u.values()[i] * (x[i] / 0.5)).norm() < 1e-14);
        }

        // E = 0: x u + i t u'
        let t = 0.8;
        let j = j_e_direct(&u, &StarkFrame::new(t, vec![0.0], 1.0).unwrap());
        for (i, z) in j[0].values().iter().enumerate() {
            let want = Complex64::new(
                x[i] * (-0.5 * x[i] * x[i]).exp(),
                -t * x[i] * (-0.5 * x[i] * x[i]).exp(),
            );
            assert!((z - want).norm() < 1e-10);
        }
    }

    #[test]
    fn j_e_two_forms_agree() {
        let g = Grid::cube(1, 1024, 30.0).unwrap();
        let u = gauss(&g, 1.0);
        let fr = StarkFrame::new(1.0, vec![1.0], 1.0).unwrap();
        let d = j_e_direct(&u, &fr);
        let c = j_e_conjugated(&u, &fr, &Containment::default()).unwrap();
        let err = d[0].max_abs_diff(&c[0]).unwrap() / d[0].max_abs();
        assert!(err < 1e-9, "{err}");
        let fr = fr.at(0.5);
        let d = j_e_direct(&u, &fr);
        let c = j_e_conjugated(&u, &fr, &Containment::default()).unwrap();
        assert!(d[0].max_abs_diff(&c[0]).unwrap() < 1e-8 * d[0].max_abs());
        assert!(j_e_conjugated(&u, &fr.at(0.0), &Containment::default()).is_err());
    }

    #[test]
    fn j_e_conjugated_of_pure_phase_vanishes() {
        let g = Grid::cube(1, 1024, 30.0).unwrap();
        let fr = StarkFrame::new(0.5, vec![1.0], 1.0).unwrap();
        let phi = phase_phi(&fr, &g).unwrap();
        let u = Field::new(
            &g,
            phi.iter().map(|p| Complex64::from_polar(1.0, *p)).collect(),
        )
        .unwrap();
        let loose = Containment {
            boundary_mass_max: 1.0,
            spectral_tail_max: 1.0,
        };
        let j = j_e_conjugated(&u, &fr, &loose).unwrap();
        for (i, z) in j[0].values().iter().enumerate() {
            if g.is_interior(i) {
                assert!(z.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn j_e_conjugated_prefactor_is_linear_in_t() {
        let g = Grid::cube(1, 512, 30.0).unwrap();
        let u = gauss(&g, 1.0);
        let phi = phase_phi(&StarkFrame::new(2.0, vec![0.5], 1.0).unwrap(), &g).unwrap();
        let guards = Containment::default();
        let a = j_e_conjugated_with_phase(&u, 0.5, &phi, 1.0, &guards).unwrap();
        let b = j_e_conjugated_with_phase(&u, 1.0, &phi, 1.0, &guards).unwrap();
        let doubled = a[0].scale(Complex64::new(2.0, 0.0));
        assert!(b[0].max_abs_diff(&doubled).unwrap() < 1e-14);
    }

    #[test]
    fn shifted_momentum_cases() {
        let g = Grid::cube(1, 64, 2.0 * PI).unwrap();
        let k = 3.0;
        let u = Field::from_fn(&g, |x| Complex64::from_polar(1.0, k * x[0]));
        let p = shifted_momentum(&u, &StarkFrame::new(1.0, vec![1.0], 1.0).unwrap());
        assert!(
            p[0].max_abs_diff(&u.scale(Complex64::new(1.0 + k, 0.0)))
                .unwrap()
                < 1e-12
        );
        for fr in [
            StarkFrame::new(0.0, vec![1.0], 1.0).unwrap(),
            StarkFrame::new(2.0, vec![0.0], 1.0).unwrap(),
        ] {
            let p = shifted_momentum(&u, &fr);
            assert!(p[0].max_abs_diff(&u.scale(Complex64::new(k, 0.0))).unwrap() < 1e-12);
        }
    }

    #[test]
    fn chain_rule() {
        let g = Grid::cube(1, 1024, 40.0 * PI).unwrap();
        let fr = StarkFrame::new(0.5, vec![1.0], 1.0).unwrap();
        assert_eq!(
            gauge_chain_rule_residual(&Field::zeros(&g), &fr, -1.0, 1.0)
                .unwrap()
                .absolute,
            0.0
        );
        let w = gauss(&g, 1.0);
        assert_eq!(
            gauge_chain_rule_residual(&w, &fr, 0.0, 1.0)
                .unwrap()
                .absolute,
            0.0
        );
        for sigma in [1.0, 2.0] {
            let r = gauge_chain_rule_residual(&w, &fr, -1.0, sigma).unwrap();
            assert!(r.relative() < 1e-7, "sigma={sigma}: {:?}", r);
        }
    }

    #[test]
    fn sigma_norm_cases() {
        let g = Grid::cube(1, 1024, 40.0 * PI).unwrap();
        let guards = Containment::default();
        assert_eq!(sigma_norm(&Field::zeros(&g), &guards).unwrap(), 0.0);

        // Oracle: Gaussian moments of exp(−x²/2): ‖u‖² = √π, ‖u′‖² = ‖xu‖² = √π/2.
        let u = gauss(&g, 1.0);
        let want = (2.0 * PI.sqrt()).sqrt();
        assert!((sigma_norm(&u, &guards).unwrap() - want).abs() < 1e-8 * want);

        let moved = spectral_translate(&u, &[1.5]);
        assert!(sigma_norm(&moved, &guards).unwrap() > sigma_norm(&u, &guards).unwrap());

        let edge = Field::from_fn(&g, |x| Complex64::new((-(x[0] - 60.0).powi(2)).exp(), 0.0));
        assert!(sigma_norm(&edge, &guards).is_err());
    }
}
