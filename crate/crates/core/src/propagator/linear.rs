use num_complex::Complex64;

use crate::error::Result;
use crate::grid::{Containment, Field};
use crate::problem::Problem;
use crate::transform::{ah_forward, ah_inverse, frame_for};

/// Exact flow of `iε∂ₜv + ½ε²Δv = 0` over `dt`: multiplier
/// `exp(−iε|k|²dt/2)`.
pub fn linear_free_propagate(f: &Field, dt: f64, eps: f64) -> Field {
    if dt == 0.0 {
        return f.clone();
    }
    let k2 = f.grid().k_squared();
    let mut out = f
        .forward_dft()
        .apply(|m| Complex64::from_polar(1.0, -0.5 * eps * k2[m] * dt))
        .into_field();
    out.set_time(f.time().map(|t| t + dt));
    out
}

/// Exact linear Stark flow from `t0` to `t1`, assembled as
/// `ah_forward(t1) ∘ free(t1 − t0) ∘ ah_inverse(t0)`.
///
/// Only `p.epsilon` and the effective field are used; a problem with the
/// Stark term off reduces to [`linear_free_propagate`].
pub fn linear_stark_propagate(f: &Field, t0: f64, t1: f64, p: &Problem) -> Result<Field> {
    let e = p.effective_field();
    let g = f.grid();
    let from = frame_for(g, t0, &e, p.epsilon)?;
    let to = from.at(t1);
    let v0 = ah_inverse(f, &from);
    let v1 = linear_free_propagate(&v0, t1 - t0, p.epsilon);
    Ok(ah_forward(&v1, &to).with_time(t1))
}

/// [`linear_stark_propagate`] with the support guard checked at `t1`.
pub fn linear_stark_propagate_checked(
    f: &Field,
    t0: f64,
    t1: f64,
    p: &Problem,
    guards: &Containment,
) -> Result<Field> {
    let u = linear_stark_propagate(f, t0, t1, p)?;
    guards.check_support(&u)?;
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;
    use std::sync::Arc;

    /// Closed-form free Gaussian: complex width `w² → w² + iεt`.
    fn free_gaussian(g: &Arc<Grid>, t: f64, eps: f64) -> Field {
        let s = Complex64::new(1.0, eps * t);
        Field::from_fn(g, |x| (1.0 / s).sqrt() * (-(x[0] * x[0]) / (2.0 * s)).exp())
    }

    #[test]
    fn plane_wave_dispersion() {
        let g = Grid::cube(1, 64, 2.0 * PI).unwrap();
        let (k, dt, eps) = (4.0, 0.3, 0.7);
        let f = Field::from_fn(&g, |x| Complex64::from_polar(1.0, k * x[0]));
        let out = linear_free_propagate(&f, dt, eps);
        let want = f.scale(Complex64::from_polar(1.0, -eps * k * k * dt / 2.0));
        assert!(out.max_abs_diff(&want).unwrap() < 1e-12);
        assert_eq!(linear_free_propagate(&f, 0.0, eps).values(), f.values());
    }

    #[test]
    fn free_gaussian_matches_closed_form() {
        let g = Grid::cube(1, 1024, 40.0 * PI).unwrap();
        let u0 = free_gaussian(&g, 0.0, 1.0);
        for t in [0.5, 2.0, 5.0] {
            let u = linear_free_propagate(&u0, t, 1.0);
            let err = u.max_abs_diff(&free_gaussian(&g, t, 1.0)).unwrap();
            assert!(err < 1e-10, "t={t}: {err}");
        }
    }

    #[test]
    fn stark_flow_basics() {
        let g = Grid::cube(1, 1024, 40.0 * PI).unwrap();
        let u0 = free_gaussian(&g, 0.0, 1.0);
        let p = Problem::new(1.0, 0.0, 1.0, vec![1.0], None, true).unwrap();

        let same = linear_stark_propagate(&u0, 0.7, 0.7, &p).unwrap();
        assert!(same.max_abs_diff(&u0).unwrap() < 1e-14);

        let free = linear_stark_propagate(&u0, 0.0, 1.3, &p.with_field(vec![0.0])).unwrap();
        assert!(
            free.max_abs_diff(&linear_free_propagate(&u0, 1.3, 1.0))
                .unwrap()
                < 1e-14
        );

        let a = linear_stark_propagate(&u0, 0.0, 1.0, &p).unwrap();
        let ab = linear_stark_propagate(&a, 1.0, 2.5, &p).unwrap();
        let direct = linear_stark_propagate(&u0, 0.0, 2.5, &p).unwrap();
        assert!(ab.l2_distance(&direct).unwrap() < 1e-10 * direct.l2_norm());
        assert!((direct.mass() - u0.mass()).abs() < 1e-12 * u0.mass());
    }
}
