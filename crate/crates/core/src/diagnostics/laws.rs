use crate::error::{Error, Result};
use crate::grid::Field;
use crate::problem::Problem;
use crate::propagator::{linear_stark_propagate, Trajectory};
use crate::transform::{j_e_direct, sigma_norm_unchecked, StarkFrame};

/// `δ(r) = n(1/2 − 1/r)`.
pub fn delta_r(n: usize, r: f64) -> Result<f64> {
    if !(r >= 2.0) {
        return Err(Error::param("r", format!("must be >= 2, got {r}")));
    }
    if !(1..=2).contains(&n) {
        return Err(Error::param(
            "n",
            format!("dimension must be 1 or 2, got {n}"),
        ));
    }
    Ok(n as f64 * (0.5 - 1.0 / r))
}

/// `‖u‖_{L^r} |t|^{δ(r)} / (‖u‖^{1−δ}_{L²} ‖J_E(t)u‖^δ_{L²})`, the ratio
/// whose boundedness is the dispersive estimate.
pub fn dispersive_ratio(u: &Field, fr: &StarkFrame, r: f64) -> Result<f64> {
    if fr.t == 0.0 {
        return Err(Error::ZeroTime("dispersive ratio needs t ≠ 0"));
    }
    let delta = delta_r(u.grid().dim(), r)?;
    let l2 = u.l2_norm();
    if l2 == 0.0 {
        return Err(Error::Precondition(
            "dispersive ratio of the zero field".into(),
        ));
    }
    if delta == 0.0 {
        return Ok(u.lp_norm(r) / l2);
    }
    let je: f64 = j_e_direct(u, fr)
        .iter()
        .map(Field::mass)
        .sum::<f64>()
        .sqrt();
    Ok(u.lp_norm(r) * fr.t.abs().powf(delta) / (l2.powf(1.0 - delta) * je.powf(delta)))
}

/// `½‖J_E(t)u‖² + λt²/(σ+1)‖u‖^{2σ+2}_{L^{2σ+2}}` with `t`, `E`, `ε` from the
/// frame and `λ`, `σ` from the problem.
pub fn pc_quantity(u: &Field, fr: &StarkFrame, p: &Problem) -> f64 {
    let je2: f64 = j_e_direct(u, fr).iter().map(Field::mass).sum();
    let s = p.sigma;
    0.5 * je2 + p.lambda * fr.t * fr.t / (s + 1.0) * u.lp_integral(2.0 * s + 2.0)
}

/// Centered difference of the pseudo-conformal quantity minus the
/// right-hand side `λt(2 − nσ)/(σ+1) ‖u‖^{2σ+2}_{2σ+2}`, at every interior
/// sample. Returns `(t, residual)` pairs.
pub fn pc_law_residual(traj: &Trajectory) -> Result<Vec<(f64, f64)>> {
    let recs = &traj.records;
    if recs.len() < 3 {
        return Err(Error::Precondition(format!(
            "pseudo-conformal residual needs at least 3 samples, got {}",
            recs.len()
        )));
    }
    let h = recs[1].t - recs[0].t;
    for w in recs.windows(2) {
        if ((w[1].t - w[0].t) - h).abs() > 1e-9 * h.abs() {
            return Err(Error::Precondition(format!(
                "samples are not uniformly spaced near t = {}",
                w[0].t
            )));
        }
    }
    let p = &traj.problem;
    let n = p.dim() as f64;
    let s = p.sigma;
    Ok(recs
        .windows(3)
        .map(|w| {
            let lhs = (w[2].pc_quantity - w[0].pc_quantity) / (w[2].t - w[0].t);
            let t = w[1].t;
            let rhs = p.lambda * t / (s + 1.0) * (2.0 - n * s) * w[1].lr_integral(s);
            (t, lhs - rhs)
        })
        .collect())
}

/// Series of `w(t_j) = U(−t_j) u(t_j)` distances in the `Σ` norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringSeries {
    pub times: Vec<f64>,
    /// `‖w(t_{j+1}) − w(t_j)‖_Σ`, one shorter than `times`.
    pub cauchy: Vec<f64>,
    /// `‖w(t_j) − w(t_last)‖_Σ`, the last computed `w` standing in for `u₊`.
    pub to_final: Vec<f64>,
    /// Time and reason the series stopped early, if it did.
    pub truncated: Option<(f64, String)>,
}

impl ScatteringSeries {
    /// Whether the Cauchy distances with left endpoint `t_j >= t_min`
    /// decrease strictly, together with how many such distances there are.
    pub fn strictly_decreasing_after(&self, t_min: f64) -> (bool, usize) {
        let tail: Vec<f64> = self
            .cauchy
            .iter()
            .zip(&self.times)
            .filter(|(_, t)| **t >= t_min - 1e-12)
            .map(|(c, _)| *c)
            .collect();
        (tail.windows(2).all(|w| w[1] < w[0]), tail.len())
    }
}

/// Pulls every stored snapshot back to `t = 0` with the exact linear
/// propagator of `p` and measures how fast the result settles.
pub fn scattering_residual(traj: &Trajectory, p: &Problem) -> Result<ScatteringSeries> {
    let snaps = traj
        .snapshots
        .as_ref()
        .ok_or_else(|| Error::Precondition("trajectory has no stored snapshots".into()))?;
    let guards = traj.containment;
    let mut times = Vec::new();
    let mut pulled: Vec<Field> = Vec::new();
    let mut truncated = None;
    for (t, u) in traj.times.iter().zip(snaps) {
        let w = guards
            .check_support(u)
            .and_then(|_| linear_stark_propagate(u, *t, 0.0, p))
            .and_then(|w| guards.check_support(&w).map(|_| w));
        match w {
            Ok(w) => {
                times.push(*t);
                pulled.push(w);
            }
            Err(e) => {
                truncated = Some((*t, e.to_string()));
                break;
            }
        }
    }
    let dist = |a: &Field, b: &Field| -> Result<f64> { Ok(sigma_norm_unchecked(&a.sub(b)?)) };
    let cauchy = pulled
        .windows(2)
        .map(|w| dist(&w[1], &w[0]))
        .collect::<Result<Vec<_>>>()?;
    let to_final = match pulled.last() {
        Some(last) => pulled
            .iter()
            .map(|w| dist(w, last))
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    Ok(ScatteringSeries {
        times,
        cauchy,
        to_final,
        truncated,
    })
}
