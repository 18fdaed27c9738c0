use num_complex::Complex64;

use super::{Field, Grid};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Gradient multiplier `i k_a` along `axis` with the Nyquist mode zeroed.
pub(crate) fn gradient_symbol(grid: &Grid, axis: usize) -> Vec<f64> {
    let n = grid.points()[axis];
    let mut k = grid.wavenumbers(axis).to_vec();
    k[n / 2] = 0.0;
    grid.broadcast(axis, &k)
}

/// `∂_a f` for every axis `a`, computed by Fourier multiplication.
pub fn spectral_gradient(f: &Field) -> Vec<Field> {
    let spectrum = f.forward_dft();
    (0..f.grid().dim())
        .map(|a| {
            let k = gradient_symbol(f.grid(), a);
            let mut g = spectrum.apply(|m| I * k[m]).into_field();
            g.set_time(f.time());
            g
        })
        .collect()
}

/// `g(x) = f(x + offset)` on the periodic box, exact for band-limited `f`.
pub fn spectral_translate(f: &Field, offset: &[f64]) -> Field {
    let grid = f.grid();
    assert_eq!(offset.len(), grid.dim(), "offset dimension");
    if offset.iter().all(|&a| a == 0.0) {
        return f.clone();
    }
    let mut phase = vec![0.0; grid.len()];
    for (a, &shift) in offset.iter().enumerate() {
        let ka: Vec<f64> = grid.wavenumbers(a).iter().map(|k| k * shift).collect();
        for (p, v) in phase.iter_mut().zip(grid.broadcast(a, &ka)) {
            *p += v;
        }
    }
    let mut g = f
        .forward_dft()
        .apply(|m| Complex64::from_polar(1.0, phase[m]))
        .into_field();
    g.set_time(f.time());
    g
}

/// Fraction of spectral `L²` mass in the outer 1/8 of the wavenumbers along
/// any axis. Zero for the zero field.
pub fn spectral_tail(f: &Field) -> f64 {
    let grid = f.grid();
    let s = f.forward_dft();
    let outer: Vec<Vec<bool>> = (0..grid.dim())
        .map(|a| {
            let n = grid.points()[a] as i64;
            (0..n)
                .map(|m| {
                    let m = if m < n / 2 { m } else { m - n };
                    m >= 7 * n / 16 || m < -7 * n / 16
                })
                .collect()
        })
        .collect();
    let mut total = 0.0;
    let mut tail = 0.0;
    for (i, z) in s.coeffs().iter().enumerate() {
        let p = z.norm_sqr();
        total += p;
        if (0..grid.dim()).any(|a| outer[a][grid.axis_index(i, a)]) {
            tail += p;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        tail / total
    }
}

/// Fraction of mass outside the central box (see
/// [`INTERIOR_FRACTION`](super::INTERIOR_FRACTION)). Zero for the zero field.
pub fn boundary_mass(f: &Field) -> f64 {
    let grid = f.grid();
    let mut total = 0.0;
    let mut outside = 0.0;
    for (i, z) in f.values().iter().enumerate() {
        let p = z.norm_sqr();
        total += p;
        if !grid.is_interior(i) {
            outside += p;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        outside / total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    fn gaussian(g: &std::sync::Arc<Grid>, shift: f64) -> Field {
        Field::from_fn(g, |x| Complex64::new((-(x[0] - shift).powi(2)).exp(), 0.0))
    }

    #[test]
    fn gradient_of_plane_wave_and_constant() {
        let g = Grid::cube(1, 64, 2.0 * PI).unwrap();
        let f = Field::from_fn(&g, |x| Complex64::from_polar(1.0, 5.0 * x[0]));
        let d = &spectral_gradient(&f)[0];
        let expect = f.scale(Complex64::new(0.0, 5.0));
        assert!(d.max_abs_diff(&expect).unwrap() < 1e-12);

        let one = Field::from_fn(&g, |_| Complex64::new(1.0, 0.0));
        assert!(spectral_gradient(&one)[0].max_abs() < 1e-14);
    }

    #[test]
    fn gradient_of_gaussian() {
        let g = Grid::cube(1, 256, 20.0).unwrap();
        let f = gaussian(&g, 0.0);
        let d = &spectral_gradient(&f)[0];
        let exact = Field::from_fn(&g, |x| {
            Complex64::new(-2.0 * x[0] * (-x[0] * x[0]).exp(), 0.0)
        });
        assert!(d.max_abs_diff(&exact).unwrap() < 1e-10);
    }

    #[test]
    fn nyquist_mode_has_zero_derivative() {
        let g = Grid::cube(1, 16, 2.0 * PI).unwrap();
        let f = Field::from_fn(&g, |x| Complex64::from_polar(1.0, -8.0 * x[0]));
        assert!(spectral_gradient(&f)[0].max_abs() < 1e-13);
    }

    #[test]
    fn translation_cases() {
        let g = Grid::cube(1, 128, 16.0).unwrap();
        let f = gaussian(&g, 0.0);
        assert!(spectral_translate(&f, &[0.0]).max_abs_diff(&f).unwrap() == 0.0);

        // one cell: g_j = f_{j+1}
        let dx = g.dx(0);
        let shifted = spectral_translate(&f, &[dx]);
        for j in 0..128 {
            let want = f.values()[(j + 1) % 128];
            assert!((shifted.values()[j] - want).norm() < 1e-13);
        }

        // sub-grid: f(x + a) = exp(-(x + a)^2)
        let a = 0.3 * dx;
        let shifted = spectral_translate(&f, &[a]);
        assert!(shifted.max_abs_diff(&gaussian(&g, -a)).unwrap() < 1e-10);
    }

    #[test]
    fn tail_metric() {
        let g = Grid::cube(1, 256, 40.0).unwrap();
        let one = Field::from_fn(&g, |_| Complex64::new(1.0, 0.0));
        assert!(spectral_tail(&one) < 1e-28);
        let f = Field::from_fn(&g, |x| Complex64::new((-x[0] * x[0] / 2.0).exp(), 0.0));
        assert!(spectral_tail(&f) < 1e-12);
        let k = g.wavenumbers(0)[127];
        let p = Field::from_fn(&g, |x| Complex64::from_polar(1.0, k * x[0]));
        assert!((spectral_tail(&p) - 1.0).abs() < 1e-12);
        assert_eq!(spectral_tail(&Field::zeros(&g)), 0.0);
    }

    #[test]
    fn boundary_mass_metric() {
        let g = Grid::cube(1, 256, 40.0).unwrap();
        assert!(boundary_mass(&gaussian(&g, 0.0)) < 1e-100);
        assert!(boundary_mass(&gaussian(&g, 19.0)) > 0.4);
        let g2 = Grid::cube(2, 32, 10.0).unwrap();
        let flat = Field::from_fn(&g2, |_| Complex64::new(1.0, 0.0));
        // interior is the central 0.8 x 0.8 square (inclusive sampling)
        let bm = boundary_mass(&flat);
        assert!(bm > 0.3 && bm < 0.4, "{bm}");
    }
}
