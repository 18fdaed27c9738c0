//! Time evolution: exact linear flows and the Strang split-step driver.

mod linear;
mod split;

pub use linear::{linear_free_propagate, linear_stark_propagate, linear_stark_propagate_checked};
pub use split::{hartree_potential, nonlinear_phase_step, strang_step, HartreeKernel, SplitStep};

use std::f64::consts::PI;

use crate::diagnostics::{BlowupMonitor, DiagnosticsRecord, Recorder};
use crate::error::{Error, GuardKind, Result};
use crate::grid::{Containment, Field, Grid};
use crate::problem::Problem;

/// Largest fraction of the Nyquist wavenumber the accelerating packet may
/// reach over a run.
pub const MOMENTUM_BUDGET: f64 = 0.8;

/// Second-order Strang splitting with a fixed step (negative steps run
/// backward in time).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepScheme {
    pub dt: f64,
}

impl StepScheme {
    pub fn strang(dt: f64) -> Result<StepScheme> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        Ok(StepScheme { dt })
    }

    /// Kinetic phase per step `|dt| ε |k|²_max / 2`, required below `π`.
    pub fn kinetic_phase(&self, grid: &Grid, eps: f64) -> f64 {
        0.5 * self.dt.abs() * eps * grid.k_squared_max()
    }
}

/// Why a run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    Completed,
    BlowUp {
        t_trigger: f64,
    },
    Guard {
        kind: GuardKind,
        t: f64,
        value: f64,
        limit: f64,
    },
    NonFinite {
        t: f64,
    },
    Observer {
        t: f64,
        reason: String,
    },
}

impl StopReason {
    pub fn is_completed(&self) -> bool {
        matches!(self, StopReason::Completed)
    }
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StopReason::Completed => write!(f, "completed"),
            StopReason::BlowUp { t_trigger } => {
                write!(f, "blow-up monitor triggered at t = {t_trigger}")
            }
            StopReason::Guard {
                kind,
                t,
                value,
                limit,
            } => {
                write!(f, "guard {kind} failed at t = {t}: {value:e} > {limit:e}")
            }
            StopReason::NonFinite { t } => write!(f, "non-finite field at t = {t}"),
            StopReason::Observer { t, reason } => {
                write!(f, "stopped by observer at t = {t}: {reason}")
            }
        }
    }
}

/// Observer verdict after seeing a sample.
#[derive(Debug, Clone, PartialEq)]
pub enum Control {
    Continue,
    Stop(String),
}

/// Called on the stepping thread at every sample.
pub trait Observer {
    fn observe(&mut self, u: &Field, rec: &DiagnosticsRecord) -> Result<Control>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Record every this many steps (the last step is always recorded).
    pub sample_every: usize,
    pub containment: Containment,
    pub store_snapshots: bool,
    pub sigma_norm: bool,
    /// Blow-up monitor threshold factor; `None` disables the monitor.
    pub blowup_threshold: Option<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            sample_every: 1,
            containment: Containment::default(),
            store_snapshots: false,
            sigma_norm: false,
            blowup_threshold: None,
        }
    }
}

/// Sampled solution map `t ↦ u(t)`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub problem: Problem,
    pub dt: f64,
    pub times: Vec<f64>,
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Option<Vec<Field>>,
    pub stop: StopReason,
    pub monitor: Option<BlowupMonitor>,
    pub containment: Containment,
    pub final_field: Field,
}

impl Trajectory {
    /// Largest `|mass(t) − mass(t₀)| / mass(t₀)` over the samples.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.records[0].mass;
        self.max_deviation(|r| r.mass) / if m0 == 0.0 { 1.0 } else { m0 }
    }

    /// Largest `|q(t) − q(t₀)|` over the samples.
    pub fn max_deviation(&self, q: impl Fn(&DiagnosticsRecord) -> f64) -> f64 {
        let q0 = q(&self.records[0]);
        self.records
            .iter()
            .map(|r| (q(r) - q0).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_boundary_mass(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.boundary_mass)
            .fold(0.0, f64::max)
    }

    pub fn max_spectral_tail(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.spectral_tail)
            .fold(0.0, f64::max)
    }
}

/// Smallest `K_a` per axis such that the spectral mass with `|k_a| > K_a` is
/// at most `tail` of the total.
pub fn occupied_wavenumbers(f: &Field, tail: f64) -> Vec<f64> {
    let g = f.grid();
    let s = f.forward_dft();
    let total: f64 = s.coeffs().iter().map(|z| z.norm_sqr()).sum();
    (0..g.dim())
        .map(|a| {
            let ks = g.wavenumbers(a);
            let mut per_k = vec![0.0; ks.len()];
            for (i, z) in s.coeffs().iter().enumerate() {
                per_k[g.axis_index(i, a)] += z.norm_sqr();
            }
            let mut order: Vec<usize> = (0..ks.len()).collect();
            order.sort_by(|&i, &j| ks[j].abs().total_cmp(&ks[i].abs()));
            let mut acc = 0.0;
            for &m in &order {
                if acc + per_k[m] > tail * total {
                    return ks[m].abs();
                }
                acc += per_k[m];
            }
            0.0
        })
        .collect()
}

/// Checks the momentum budget: the packet accelerates by `E t / ε`, and its
/// occupied band must stay below `MOMENTUM_BUDGET × k_Nyquist` over
/// `[t0, t_end]`. Inactive when the effective field vanishes.
pub fn check_momentum_budget(f: &Field, p: &Problem, t0: f64, t_end: f64, tail: f64) -> Result<()> {
    let e = p.effective_field();
    if e.iter().all(|v| *v == 0.0) {
        return Ok(());
    }
    let g = f.grid();
    let occupied = occupied_wavenumbers(f, tail);
    let tmax = t0.abs().max(t_end.abs());
    for a in 0..g.dim() {
        let need = occupied[a] + e[a].abs() * tmax / p.epsilon;
        let limit = MOMENTUM_BUDGET * g.k_nyquist(a);
        if need > limit {
            return Err(Error::Precondition(format!(
                "momentum budget exceeded on axis {}: occupied {:.3} + |E|T/ε {:.3} > {:.3}",
                a + 1,
                occupied[a],
                e[a].abs() * tmax / p.epsilon,
                limit
            )));
        }
    }
    Ok(())
}

/// Integrates from `t0` to `t_end` (either direction) with Strang steps of
/// size `scheme.dt`, recording diagnostics at the configured cadence.
///
/// Configuration problems (guards failing at `t0`, step too large, momentum
/// budget) are errors; anything that happens during the run ends it early
/// and is reported in [`Trajectory::stop`].
pub fn propagate(
    f0: &Field,
    t0: f64,
    t_end: f64,
    scheme: StepScheme,
    p: &Problem,
    opts: &RunOptions,
    observers: &mut [&mut dyn Observer],
) -> Result<Trajectory> {
    let grid = f0.grid().clone();
    p.validate()?;
    if p.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            got: p.dim(),
        });
    }
    if opts.sample_every == 0 {
        return Err(Error::param("sample_every", "must be at least 1"));
    }
    if !f0.is_finite() {
        return Err(Error::NonFinite);
    }
    let phase = scheme.kinetic_phase(&grid, p.epsilon);
    if phase >= PI {
        return Err(Error::param(
            "dt",
            format!("kinetic phase per step {phase:.3} must stay below π"),
        ));
    }
    opts.containment.check(f0)?;
    check_momentum_budget(f0, p, t0, t_end, opts.containment.spectral_tail_max)?;

    let span = t_end - t0;
    let dt = scheme.dt.abs() * span.signum();
    let n_steps = if span == 0.0 {
        0
    } else {
        (span.abs() / scheme.dt.abs() - 1e-9).ceil().max(1.0) as usize
    };
    let full = SplitStep::new(&grid, dt, p)?;
    let remainder = span - (n_steps.saturating_sub(1)) as f64 * dt;
    let last = if n_steps > 0 && (remainder - dt).abs() > 1e-12 * dt.abs() {
        Some(SplitStep::new(&grid, remainder, p)?)
    } else {
        None
    };

    let recorder = Recorder::new(&grid, p, opts.sigma_norm)?;
    let mut monitor = opts.blowup_threshold.map(BlowupMonitor::new);
    let mut u = f0.clone().with_time(t0);
    let mut traj = Trajectory {
        problem: p.clone(),
        dt,
        times: Vec::new(),
        records: Vec::new(),
        snapshots: opts.store_snapshots.then(Vec::new),
        stop: StopReason::Completed,
        monitor: None,
        containment: opts.containment,
        final_field: u.clone(),
    };

    for k in 0..=n_steps {
        let t = if k == n_steps {
            t_end
        } else {
            t0 + k as f64 * dt
        };
        if k > 0 {
            match (&last, k == n_steps) {
                (Some(step), true) => step.step(&mut u),
                _ => full.step(&mut u),
            }
            u.set_time(Some(t));
            if !u.is_finite() {
                traj.stop = StopReason::NonFinite { t };
                break;
            }
        }
        if k % opts.sample_every != 0 && k != n_steps {
            continue;
        }
        let rec = recorder.record(&u, t);
        if !rec.is_finite() {
            traj.stop = StopReason::NonFinite { t };
            break;
        }
        let mut stop = None;
        for obs in observers.iter_mut() {
            if let Control::Stop(reason) = obs.observe(&u, &rec)? {
                stop.get_or_insert(StopReason::Observer { t, reason });
            }
        }
        if let Some(m) = monitor.as_mut() {
            m.update(&rec)?;
            if m.triggered {
                stop.get_or_insert(StopReason::BlowUp {
                    t_trigger: m.t_trigger.unwrap_or(t),
                });
            }
        }
        let guards = &opts.containment;
        if rec.boundary_mass > guards.boundary_mass_max {
            stop.get_or_insert(StopReason::Guard {
                kind: GuardKind::BoundaryMass,
                t,
                value: rec.boundary_mass,
                limit: guards.boundary_mass_max,
            });
        } else if rec.spectral_tail > guards.spectral_tail_max {
            stop.get_or_insert(StopReason::Guard {
                kind: GuardKind::SpectralTail,
                t,
                value: rec.spectral_tail,
                limit: guards.spectral_tail_max,
            });
        }
        traj.times.push(t);
        traj.records.push(rec);
        if let Some(snaps) = traj.snapshots.as_mut() {
            snaps.push(u.clone());
        }
        if let Some(reason) = stop {
            traj.stop = reason;
            break;
        }
    }
    traj.monitor = monitor;
    traj.final_field = u;
    Ok(traj)
}
