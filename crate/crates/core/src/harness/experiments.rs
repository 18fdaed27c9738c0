//! Experiment drivers behind the CLI subcommands.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use thiserror::Error;

use crate::diagnostics::{
    pc_law_residual, scattering_residual, DiagnosticsRecord, ScatteringSeries,
};
use crate::error::GuardKind;
use crate::grid::{Field, Grid};
use crate::problem::{
    blowup_energy_sign, realize_initial_data, scattering_sigma_threshold, InitialData, Packet,
    Problem,
};
use crate::propagator::{
    linear_stark_propagate, propagate, Control, Observer, RunOptions, StepScheme, StopReason,
    Trajectory,
};
use crate::transform::{
    ah_forward, ah_inverse, eikonal_residual, eikonal_residual_perturbed,
    gauge_chain_rule_residual, j_e_conjugated, j_e_direct, StarkFrame,
};

use super::config::{ConfigError, ExperimentConfig, ExperimentKind, Profile};
use super::csv::{columns_csv, write_diagnostics_csv};
use super::snapshot::{read_snapshot_into, write_snapshot, SnapshotError};

/// Relative drift allowed for mass along any guarded run.
pub const MASS_TOLERANCE: f64 = 1e-11;
/// Absolute eikonal residual per unit size of the largest term.
pub const EIKONAL_TOLERANCE: f64 = 1e-12;
pub const TWO_FORM_TOLERANCE: f64 = 1e-8;
pub const CHAIN_RULE_TOLERANCE: f64 = 1e-7;
pub const COMMUTATION_TOLERANCE: f64 = 1e-8;
/// Accepted band for the error ratio under dt halving of a second-order scheme.
pub const CONVERGENCE_BAND: (f64, f64) = (3.3, 4.7);
/// Residuals below this are treated as exact (nothing left to converge).
pub const ROUNDOFF_FLOOR: f64 = 1e-10;
pub const SCATTER_CONSISTENCY: f64 = 1e-6;
pub const FLAT_SERIES_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Core(#[from] crate::Error),

    #[error(transparent)]
    Snapshot(#[from] SnapshotError),

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{run} run: guard `{kind}` failed at t = {t}: {value:e} > {limit:e}")]
    Guard {
        run: String,
        kind: GuardKind,
        t: f64,
        value: f64,
        limit: f64,
    },

    #[error("{run} run stopped early: {reason}")]
    Stopped { run: String, reason: String },
}

/// Outcome of an experiment, mapped onto the process exit status.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Pass,
    /// A tolerance or identity check failed.
    Fail(String),
    /// A containment guard or run failure invalidated the experiment.
    Guard(String),
}

impl Verdict {
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail(_) => 1,
            Verdict::Guard(_) => 2,
        }
    }

    fn combine(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Guard(a), _) => Verdict::Guard(a),
            (_, Verdict::Guard(b)) => Verdict::Guard(b),
            (Verdict::Fail(a), _) => Verdict::Fail(a),
            (_, b) => b,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => write!(f, "PASS"),
            Verdict::Fail(m) => write!(f, "FAIL: {m}"),
            Verdict::Guard(m) => write!(f, "GUARD: {m}"),
        }
    }
}

/// Largest guard readings observed over a set of runs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GuardSummary {
    pub max_boundary_mass: f64,
    pub max_spectral_tail: f64,
}

impl GuardSummary {
    pub fn of<'a>(trajs: impl IntoIterator<Item = &'a Trajectory>) -> GuardSummary {
        trajs
            .into_iter()
            .fold(GuardSummary::default(), |s, tr| GuardSummary {
                max_boundary_mass: s.max_boundary_mass.max(tr.max_boundary_mass()),
                max_spectral_tail: s.max_spectral_tail.max(tr.max_spectral_tail()),
            })
    }
}

impl fmt::Display for GuardSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "guards: max boundary_mass = {:.3e}, max spectral_tail = {:.3e}",
            self.max_boundary_mass, self.max_spectral_tail
        )
    }
}

pub fn build_grid(cfg: &ExperimentConfig) -> Result<Arc<Grid>, HarnessError> {
    let g = &cfg.grid;
    Ok(Grid::cube(g.n, g.points, g.length)?)
}

/// Samples the configured initial datum (or loads it from a snapshot).
pub fn initial_field(cfg: &ExperimentConfig, grid: &Arc<Grid>) -> Result<Field, HarnessError> {
    let id = &cfg.initial_data;
    let packet = Packet {
        amplitude: id.amplitude,
        center: id.center.clone(),
        width: id.width,
        momentum: id.momentum.clone(),
    };
    let data = match &id.profile {
        Profile::Gaussian => InitialData::Gaussian(packet),
        Profile::GaussianBoosted => InitialData::GaussianBoosted(packet),
        Profile::SolitonLike => InitialData::SolitonLike(packet),
        Profile::Snapshot(path) => InitialData::Custom(read_snapshot_into(path, grid)?.field),
    };
    Ok(realize_initial_data(
        &data,
        grid,
        cfg.problem.epsilon,
        &cfg.guards.containment(),
    )?)
}

fn run_options(cfg: &ExperimentConfig, store_snapshots: bool, sample_every: usize) -> RunOptions {
    RunOptions {
        sample_every,
        containment: cfg.guards.containment(),
        store_snapshots,
        sigma_norm: false,
        blowup_threshold: None,
    }
}

/// Stops a run once another run of the same experiment has failed.
struct Cancel<'a>(&'a AtomicBool);

impl Observer for Cancel<'_> {
    fn observe(&mut self, _: &Field, _: &DiagnosticsRecord) -> crate::Result<Control> {
        Ok(if self.0.load(Ordering::Relaxed) {
            Control::Stop("paired run failed".into())
        } else {
            Control::Continue
        })
    }
}

/// Runs several trajectories on scoped threads; the first to stop early
/// cancels the rest at their next sample.
fn run_concurrently(
    u0: &Field,
    jobs: &[(f64, StepScheme, Problem, RunOptions)],
) -> Vec<Result<Trajectory, crate::Error>> {
    let cancel = AtomicBool::new(false);
    thread::scope(|s| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(t_end, scheme, p, opts)| {
                let cancel = &cancel;
                s.spawn(move || {
                    let mut obs = Cancel(cancel);
                    let tr = propagate(u0, 0.0, *t_end, *scheme, p, opts, &mut [&mut obs]);
                    match &tr {
                        Ok(tr)
                            if matches!(
                                tr.stop,
                                StopReason::Completed | StopReason::BlowUp { .. }
                            ) => {}
                        _ => cancel.store(true, Ordering::Relaxed),
                    }
                    tr
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("run thread panicked"))
            .collect()
    })
}

/// Converts an early stop into an error naming the run.
fn require_completed(label: &str, tr: &Trajectory) -> Result<(), HarnessError> {
    match &tr.stop {
        StopReason::Completed => Ok(()),
        StopReason::Guard {
            kind,
            t,
            value,
            limit,
        } => Err(HarnessError::Guard {
            run: label.into(),
            kind: *kind,
            t: *t,
            value: *value,
            limit: *limit,
        }),
        other => Err(HarnessError::Stopped {
            run: label.into(),
            reason: other.to_string(),
        }),
    }
}

/// First genuine failure among paired runs (a cancelled run only reports
/// when nothing else did).
fn first_failure(runs: &[(&str, &Trajectory)]) -> Result<(), HarnessError> {
    let mut cancelled = None;
    for (label, tr) in runs {
        if let Err(e) = require_completed(label, tr) {
            if matches!(tr.stop, StopReason::Observer { .. }) {
                cancelled.get_or_insert(e);
            } else {
                return Err(e);
            }
        }
    }
    cancelled.map_or(Ok(()), Err)
}

fn frame(p: &Problem, t: f64) -> Result<StarkFrame, HarnessError> {
    Ok(StarkFrame::new(t, p.effective_field(), p.epsilon)?)
}

// ---------------------------------------------------------------- run

#[derive(Debug, Clone)]
pub struct RunReport {
    pub trajectory: Trajectory,
    pub mass_drift: f64,
    pub guards: GuardSummary,
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunReport, HarnessError> {
    let grid = build_grid(cfg)?;
    let u0 = initial_field(cfg, &grid)?;
    let scheme = StepScheme::strang(cfg.scheme.dt)?;
    let opts = run_options(
        cfg,
        cfg.outputs.snapshot_dir.is_some(),
        cfg.scheme.sample_every,
    );
    let trajectory = propagate(
        &u0,
        0.0,
        cfg.scheme.t_final,
        scheme,
        &cfg.problem,
        &opts,
        &mut [],
    )?;
    Ok(RunReport {
        mass_drift: trajectory.mass_drift(),
        guards: GuardSummary::of([&trajectory]),
        trajectory,
    })
}

impl RunReport {
    pub fn verdict(&self) -> Verdict {
        match &self.trajectory.stop {
            StopReason::Completed if self.mass_drift <= MASS_TOLERANCE => Verdict::Pass,
            StopReason::Completed => Verdict::Fail(format!(
                "mass drift {:.3e} > {MASS_TOLERANCE:e}",
                self.mass_drift
            )),
            other => Verdict::Guard(other.to_string()),
        }
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tr = &self.trajectory;
        writeln!(
            f,
            "run: {} samples, t = {} .. {}",
            tr.times.len(),
            tr.times[0],
            tr.times.last().unwrap()
        )?;
        writeln!(f, "stop: {}", tr.stop)?;
        writeln!(f, "relative mass drift: {:.3e}", self.mass_drift)?;
        write!(f, "{}", self.guards)
    }
}

// ---------------------------------------------------------------- compare

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub times: Vec<f64>,
    /// `‖ah_inverse(u_stark(t)) − v_free(t)‖ / ‖v_free(t)‖` per sample.
    pub discrepancy: Vec<f64>,
    pub max_discrepancy: f64,
    pub tolerance: f64,
    pub stark: Trajectory,
    pub free: Trajectory,
    pub guards: GuardSummary,
}

/// Runs the Stark equation and the free equation from the same datum and
/// pulls the Stark states back to the free frame sample by sample.
pub fn run_compare(cfg: &ExperimentConfig) -> Result<CompareReport, HarnessError> {
    if !cfg.problem.stark_on {
        return Err(ConfigError::Physical {
            name: "problem.stark_on".into(),
            reason: "compare needs the Stark term on".into(),
        }
        .into());
    }
    let grid = build_grid(cfg)?;
    let u0 = initial_field(cfg, &grid)?;
    let scheme = StepScheme::strang(cfg.scheme.dt)?;
    let opts = run_options(cfg, true, cfg.scheme.sample_every);
    let p = cfg.problem.clone();
    let jobs = [
        (cfg.scheme.t_final, scheme, p.clone(), opts.clone()),
        (cfg.scheme.t_final, scheme, p.free(), opts),
    ];
    let mut results = run_concurrently(&u0, &jobs).into_iter();
    let stark = results.next().unwrap()?;
    let free = results.next().unwrap()?;
    first_failure(&[("stark", &stark), ("free", &free)])?;

    let snaps_s = stark.snapshots.as_ref().expect("snapshots stored");
    let snaps_f = free.snapshots.as_ref().expect("snapshots stored");
    let mut discrepancy = Vec::with_capacity(snaps_s.len());
    for ((t, us), vf) in stark.times.iter().zip(snaps_s).zip(snaps_f) {
        let pulled = ah_inverse(us, &frame(&p, *t)?);
        discrepancy.push(pulled.l2_distance(vf)? / vf.l2_norm());
    }
    let max_discrepancy = discrepancy.iter().copied().fold(0.0, f64::max);
    Ok(CompareReport {
        times: stark.times.clone(),
        discrepancy,
        max_discrepancy,
        tolerance: cfg.compare.tolerance,
        guards: GuardSummary::of([&stark, &free]),
        stark,
        free,
    })
}

impl CompareReport {
    pub fn verdict(&self) -> Verdict {
        let drift = self.stark.mass_drift().max(self.free.mass_drift());
        if self.max_discrepancy > self.tolerance {
            Verdict::Fail(format!(
                "max discrepancy {:.3e} > tolerance {:.3e}",
                self.max_discrepancy, self.tolerance
            ))
        } else if drift > MASS_TOLERANCE {
            Verdict::Fail(format!("mass drift {drift:.3e} > {MASS_TOLERANCE:e}"))
        } else {
            Verdict::Pass
        }
    }
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "compare: {} samples up to t = {}",
            self.times.len(),
            self.times.last().unwrap()
        )?;
        writeln!(
            f,
            "max relative discrepancy: {:.3e} (tolerance {:.3e})",
            self.max_discrepancy, self.tolerance
        )?;
        writeln!(
            f,
            "relative mass drift: stark {:.3e}, free {:.3e}",
            self.stark.mass_drift(),
            self.free.mass_drift()
        )?;
        write!(f, "{}", self.guards)
    }
}

// ---------------------------------------------------------------- lemma-check

#[derive(Debug, Clone, PartialEq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped(String),
    Guard(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub status: CheckStatus,
}

impl IdentityCheck {
    fn measured(name: String, value: f64, threshold: f64) -> IdentityCheck {
        let status = if value <= threshold {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        IdentityCheck {
            name,
            value,
            threshold,
            status,
        }
    }

    fn other(name: String, threshold: f64, status: CheckStatus) -> IdentityCheck {
        IdentityCheck {
            name,
            value: f64::NAN,
            threshold,
            status,
        }
    }
}

impl fmt::Display for IdentityCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.status {
            CheckStatus::Pass => write!(
                f,
                "PASS {}: {:.3e} <= {:.1e}",
                self.name, self.value, self.threshold
            ),
            CheckStatus::Fail => write!(
                f,
                "FAIL {}: {:.3e} > {:.1e}",
                self.name, self.value, self.threshold
            ),
            CheckStatus::Skipped(r) => write!(f, "SKIP {}: {r}", self.name),
            CheckStatus::Guard(r) => write!(f, "GUARD {}: {r}", self.name),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LemmaReport {
    pub checks: Vec<IdentityCheck>,
    /// Trajectory used for the pseudo-conformal law, when it ran.
    pub trajectory: Option<Trajectory>,
    pub guards: GuardSummary,
}

impl LemmaReport {
    pub fn verdict(&self) -> Verdict {
        let mut v = Verdict::Pass;
        for c in &self.checks {
            let this = match &c.status {
                CheckStatus::Fail => Verdict::Fail(c.name.clone()),
                CheckStatus::Guard(r) => Verdict::Guard(format!("{}: {r}", c.name)),
                _ => Verdict::Pass,
            };
            v = v.combine(this);
        }
        v
    }
}

impl fmt::Display for LemmaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        write!(f, "{}", self.guards)
    }
}

/// Largest size of the individual terms of the eikonal equation over the
/// interior, the natural roundoff scale of the residual.
fn eikonal_scale(fr: &StarkFrame, g: &Grid) -> f64 {
    let t = fr.t;
    let e2: f64 = fr.field.iter().map(|e| e * e).sum();
    let pos = g.positions();
    (0..g.len())
        .filter(|&i| g.is_interior(i))
        .map(|i| {
            let (mut r2, mut ex) = (0.0, 0.0);
            for a in 0..g.dim() {
                r2 += pos[a][i] * pos[a][i];
                ex += fr.field[a] * pos[a][i];
            }
            r2 / (t * t) + ex.abs() + t * t * e2
        })
        .fold(1.0, f64::max)
}

fn relative_l2(a: &[Field], b: &[Field]) -> Result<f64, HarnessError> {
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        num += x.l2_distance(y)?.powi(2);
        den += y.mass();
    }
    Ok(if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    })
}

fn guarded<T>(r: crate::Result<T>) -> Result<std::result::Result<T, String>, HarnessError> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e @ crate::Error::Containment { .. }) => Ok(Err(e.to_string())),
        Err(e) => Err(e.into()),
    }
}

/// Runs the transform identity suite on the configured datum and the
/// pseudo-conformal law along the configured nonlinear run.
pub fn run_lemma_check(cfg: &ExperimentConfig) -> Result<LemmaReport, HarnessError> {
    let grid = build_grid(cfg)?;
    let u0 = initial_field(cfg, &grid)?;
    let p = &cfg.problem;
    let e = p.effective_field();
    let eps = p.epsilon;
    let guards = cfg.guards.containment();
    let mut checks = Vec::new();

    // eikonal equation over random (t, E) plus the configured field
    let mut rng = StdRng::seed_from_u64(cfg.lemma.seed);
    let mut frames: Vec<StarkFrame> = cfg
        .lemma
        .times
        .iter()
        .filter(|t| **t != 0.0)
        .map(|t| StarkFrame::new(*t, e.clone(), eps))
        .collect::<crate::Result<_>>()?;
    for _ in 0..cfg.lemma.samples {
        let t = rng.gen_range(0.25..4.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let field = (0..grid.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        frames.push(StarkFrame::new(t, field, eps)?);
    }
    let slope = vec![if cfg.lemma.negative_control { 1.0 } else { 0.0 }; grid.dim()];
    let mut worst: f64 = 0.0;
    for fr in &frames {
        let r = if cfg.lemma.negative_control {
            eikonal_residual_perturbed(fr, &grid, &slope)?
        } else {
            eikonal_residual(fr, &grid)?
        };
        worst = worst.max(r / eikonal_scale(fr, &grid));
    }
    let label = if cfg.lemma.negative_control {
        "eikonal equation (perturbed phase)"
    } else {
        "eikonal equation"
    };
    checks.push(IdentityCheck::measured(
        format!("{label}, {} frames", frames.len()),
        worst,
        EIKONAL_TOLERANCE,
    ));

    let lambda = if p.lambda == 0.0 { -1.0 } else { p.lambda };
    for &t in &cfg.lemma.times {
        let name = format!("J_E two forms at t = {t}");
        if t == 0.0 {
            checks.push(IdentityCheck::other(
                name,
                TWO_FORM_TOLERANCE,
                CheckStatus::Skipped("t ≠ 0 required".into()),
            ));
            continue;
        }
        let fr = StarkFrame::new(t, e.clone(), eps)?;
        match guarded(j_e_conjugated(&u0, &fr, &guards))? {
            Ok(conj) => {
                let direct = j_e_direct(&u0, &fr);
                checks.push(IdentityCheck::measured(
                    name,
                    relative_l2(&conj, &direct)?,
                    TWO_FORM_TOLERANCE,
                ));
            }
            Err(reason) => checks.push(IdentityCheck::other(
                name,
                TWO_FORM_TOLERANCE,
                CheckStatus::Guard(reason),
            )),
        }
    }

    for sigma in [1.0, 2.0] {
        for &t in &cfg.lemma.times {
            let name = format!("chain rule, sigma = {sigma}, t = {t}");
            if t == 0.0 {
                checks.push(IdentityCheck::other(
                    name,
                    CHAIN_RULE_TOLERANCE,
                    CheckStatus::Skipped("t ≠ 0 required".into()),
                ));
                continue;
            }
            let fr = StarkFrame::new(t, e.clone(), eps)?;
            let r = gauge_chain_rule_residual(&u0, &fr, lambda, sigma)?;
            checks.push(IdentityCheck::measured(
                name,
                r.relative(),
                CHAIN_RULE_TOLERANCE,
            ));
        }
    }

    let linear = Problem {
        lambda: 0.0,
        hartree: None,
        ..p.clone()
    };
    let x_u0 = j_e_direct(&u0, &frame(&linear, 0.0)?);
    for &t in &cfg.lemma.times {
        let name = format!("linear flow commutes with J_E at t = {t}");
        let ut = linear_stark_propagate(&u0, 0.0, t, &linear)?;
        if let Err(reason) = guarded(guards.check_support(&ut))? {
            checks.push(IdentityCheck::other(
                name,
                COMMUTATION_TOLERANCE,
                CheckStatus::Guard(reason),
            ));
            continue;
        }
        let lhs = j_e_direct(&ut, &frame(&linear, t)?);
        let rhs = x_u0
            .iter()
            .map(|f| linear_stark_propagate(f, 0.0, t, &linear))
            .collect::<crate::Result<Vec<_>>>()?;
        checks.push(IdentityCheck::measured(
            name,
            relative_l2(&lhs, &rhs)?,
            COMMUTATION_TOLERANCE,
        ));
    }

    let mut trajectory = None;
    let pc_name = "pseudo-conformal law, residual ratio under dt halving".to_string();
    if eps != 1.0 {
        checks.push(IdentityCheck::other(
            pc_name,
            CONVERGENCE_BAND.0,
            CheckStatus::Skipped("stated for ε = 1".into()),
        ));
    } else if p.hartree.is_some() {
        checks.push(IdentityCheck::other(
            pc_name,
            CONVERGENCE_BAND.0,
            CheckStatus::Skipped("stated for the power nonlinearity".into()),
        ));
    } else {
        let dt = cfg.scheme.dt;
        let every = cfg.scheme.sample_every;
        // same sample_every: the law's time quadrature refines with dt
        let jobs = [
            (
                cfg.scheme.t_final,
                StepScheme::strang(dt)?,
                p.clone(),
                run_options(cfg, false, every),
            ),
            (
                cfg.scheme.t_final,
                StepScheme::strang(dt / 2.0)?,
                p.clone(),
                run_options(cfg, false, every),
            ),
        ];
        let mut results = run_concurrently(&u0, &jobs).into_iter();
        let coarse = results.next().unwrap()?;
        let fine = results.next().unwrap()?;
        match first_failure(&[("coarse", &coarse), ("fine", &fine)]) {
            Err(e @ (HarnessError::Guard { .. } | HarnessError::Stopped { .. })) => {
                checks.push(IdentityCheck::other(
                    pc_name,
                    CONVERGENCE_BAND.0,
                    CheckStatus::Guard(e.to_string()),
                ));
            }
            Err(e) => return Err(e),
            Ok(()) => {
                let max_res = |tr: &Trajectory| -> Result<f64, HarnessError> {
                    Ok(pc_law_residual(tr)?
                        .iter()
                        .map(|(_, r)| r.abs())
                        .fold(0.0, f64::max))
                };
                let (rc, rf) = (max_res(&coarse)?, max_res(&fine)?);
                let check = if rc <= ROUNDOFF_FLOOR {
                    IdentityCheck {
                        name: format!("pseudo-conformal law residual at roundoff ({rc:.3e})"),
                        value: rc,
                        threshold: ROUNDOFF_FLOOR,
                        status: CheckStatus::Pass,
                    }
                } else {
                    let ratio = rc / rf;
                    let ok = ratio >= CONVERGENCE_BAND.0 && ratio <= CONVERGENCE_BAND.1;
                    IdentityCheck {
                        name: format!("{pc_name} ({rc:.3e} -> {rf:.3e}), band [3.3, 4.7]"),
                        value: ratio,
                        threshold: CONVERGENCE_BAND.0,
                        status: if ok {
                            CheckStatus::Pass
                        } else {
                            CheckStatus::Fail
                        },
                    }
                };
                checks.push(check);
            }
        }
        trajectory = Some(coarse);
    }

    Ok(LemmaReport {
        checks,
        guards: GuardSummary::of(trajectory.iter()),
        trajectory,
    })
}

// ---------------------------------------------------------------- blowup

#[derive(Debug, Clone)]
pub struct BlowupRun {
    pub label: String,
    pub field: Vec<f64>,
    pub trajectory: Trajectory,
}

impl BlowupRun {
    pub fn t_trigger(&self) -> Option<f64> {
        self.trajectory.monitor.as_ref().and_then(|m| m.t_trigger)
    }

    pub fn peak(&self) -> Option<&[f64]> {
        self.trajectory
            .monitor
            .as_ref()
            .and_then(|m| m.peak_at_trigger.as_deref())
    }
}

/// Stark and free trigger comparison in one time direction.
#[derive(Debug, Clone, PartialEq)]
pub struct TriggerComparison {
    pub direction: f64,
    pub t_stark: Option<f64>,
    pub t_free: Option<f64>,
    /// `|t_stark − t_free|`
    pub time_gap: Option<f64>,
    /// Predicted `peak_stark − peak_free = −t²E/2`.
    pub predicted_offset: Option<Vec<f64>>,
    pub measured_offset: Option<Vec<f64>>,
    /// Largest per-axis `|measured − predicted|`.
    pub offset_error: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BlowupReport {
    pub energy: f64,
    pub warnings: Vec<String>,
    /// Stark forward, free forward, Stark backward, free backward.
    pub runs: Vec<BlowupRun>,
    pub comparisons: Vec<TriggerComparison>,
    pub dt: f64,
    pub dx: f64,
    pub guards: GuardSummary,
}

/// Runs the Stark and free equations forward and backward in time with the
/// blow-up monitor on and compares trigger times and locations.
pub fn run_blowup(cfg: &ExperimentConfig) -> Result<BlowupReport, HarnessError> {
    let grid = build_grid(cfg)?;
    let u0 = initial_field(cfg, &grid)?;
    let p = cfg.problem.clone();
    let mut warnings = Vec::new();
    let energy = blowup_energy_sign(&u0, &p);
    if energy >= 0.0 {
        warnings.push(format!(
            "warning: initial energy {energy:.4e} is not negative; blow-up is not guaranteed"
        ));
    }
    if p.lambda >= 0.0 {
        warnings.push("warning: lambda >= 0 is defocusing; no blow-up expected".into());
    }
    let scheme = StepScheme::strang(cfg.scheme.dt)?;
    let mut opts = run_options(
        cfg,
        cfg.outputs.snapshot_dir.is_some(),
        cfg.scheme.sample_every,
    );
    opts.blowup_threshold = Some(cfg.guards.grad_threshold_factor);
    let stark = Problem {
        stark_on: true,
        ..p.clone()
    };
    let free = p.free();
    let horizon = cfg.scheme.t_final.abs();
    let jobs = [
        (horizon, scheme, stark.clone(), opts.clone()),
        (horizon, scheme, free.clone(), opts.clone()),
        (-horizon, scheme, stark.clone(), opts.clone()),
        (-horizon, scheme, free.clone(), opts),
    ];
    let labels = [
        "stark_forward",
        "free_forward",
        "stark_backward",
        "free_backward",
    ];
    let mut runs = Vec::new();
    for ((tr, label), (_, _, prob, _)) in run_concurrently(&u0, &jobs)
        .into_iter()
        .zip(labels)
        .zip(&jobs)
    {
        runs.push(BlowupRun {
            label: label.into(),
            field: prob.effective_field(),
            trajectory: tr?,
        });
    }

    let e = stark.effective_field();
    let comparisons = [(1.0, 0, 1), (-1.0, 2, 3)]
        .into_iter()
        .map(|(direction, i, j)| {
            let (s, f) = (&runs[i], &runs[j]);
            let (ts, tf) = (s.t_trigger(), f.t_trigger());
            let predicted = ts.map(|t| e.iter().map(|ea| -0.5 * t * t * ea).collect::<Vec<f64>>());
            let measured = match (s.peak(), f.peak()) {
                (Some(a), Some(b)) => Some(
                    a.iter()
                        .zip(b)
                        .enumerate()
                        .map(|(ax, (x, y))| wrap(x - y, grid.lengths()[ax]))
                        .collect::<Vec<f64>>(),
                ),
                _ => None,
            };
            let offset_error = match (&predicted, &measured) {
                (Some(pr), Some(me)) => Some(
                    pr.iter()
                        .zip(me)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max),
                ),
                _ => None,
            };
            TriggerComparison {
                direction,
                t_stark: ts,
                t_free: tf,
                time_gap: ts.zip(tf).map(|(a, b)| (a - b).abs()),
                predicted_offset: predicted,
                measured_offset: measured,
                offset_error,
            }
        })
        .collect();

    let dx = (0..grid.dim()).map(|a| grid.dx(a)).fold(0.0, f64::max);
    Ok(BlowupReport {
        energy,
        warnings,
        guards: GuardSummary::of(runs.iter().map(|r| &r.trajectory)),
        runs,
        comparisons,
        dt: cfg.scheme.dt,
        dx,
    })
}

/// Periodic difference folded into `[−L/2, L/2)`.
fn wrap(d: f64, l: f64) -> f64 {
    d - l * (d / l).round()
}

impl BlowupReport {
    pub fn verdict(&self) -> Verdict {
        let mut v = Verdict::Pass;
        for r in &self.runs {
            match &r.trajectory.stop {
                StopReason::Completed | StopReason::BlowUp { .. } => {}
                StopReason::NonFinite { t } => {
                    v = v.combine(Verdict::Guard(format!(
                        "{}: blow-up faster than monitor cadence (non-finite field at t = {t})",
                        r.label
                    )))
                }
                other => v = v.combine(Verdict::Guard(format!("{}: {other}", r.label))),
            }
        }
        for c in &self.comparisons {
            let dir = if c.direction > 0.0 {
                "forward"
            } else {
                "backward"
            };
            let this = match (c.time_gap, c.offset_error) {
                (Some(gap), _) if gap > 2.0 * self.dt => {
                    Verdict::Fail(format!("{dir}: trigger times differ by {gap:.3e} > 2 dt"))
                }
                (Some(_), Some(err)) if err > 2.0 * self.dx => {
                    Verdict::Fail(format!("{dir}: peak offset error {err:.3e} > 2 dx"))
                }
                (Some(_), _) => Verdict::Pass,
                (None, None) if c.t_stark.is_none() && c.t_free.is_none() => Verdict::Pass,
                _ => Verdict::Fail(format!("{dir}: only one of the paired runs triggered")),
            };
            v = v.combine(this);
        }
        v
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("none".into(), |x| format!("{x:.6}"))
}

fn fmt_vec(v: &Option<Vec<f64>>) -> String {
    match v {
        Some(v) => {
            let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
            format!("[{}]", parts.join(", "))
        }
        None => "none".into(),
    }
}

impl fmt::Display for BlowupReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for w in &self.warnings {
            writeln!(f, "{w}")?;
        }
        writeln!(f, "initial energy: {:.6e}", self.energy)?;
        for r in &self.runs {
            writeln!(
                f,
                "{}: t_trigger = {}, peak = {}, stop: {}",
                r.label,
                fmt_opt(r.t_trigger()),
                fmt_vec(&r.peak().map(<[f64]>::to_vec)),
                r.trajectory.stop
            )?;
        }
        for c in &self.comparisons {
            writeln!(
                f,
                "{}: |dt_trigger| = {} (2 dt = {:.1e}), predicted offset = {}, measured = {}, error = {} (2 dx = {:.3e})",
                if c.direction > 0.0 { "forward" } else { "backward" },
                fmt_opt(c.time_gap),
                2.0 * self.dt,
                fmt_vec(&c.predicted_offset),
                fmt_vec(&c.measured_offset),
                fmt_opt(c.offset_error),
                2.0 * self.dx
            )?;
        }
        write!(f, "{}", self.guards)
    }
}

// ---------------------------------------------------------------- scatter

#[derive(Debug, Clone)]
pub struct ScatterReport {
    pub warnings: Vec<String>,
    pub series: ScatteringSeries,
    /// Series of the free run pushed into the Stark frame, when `E ≠ 0`.
    pub free_series: Option<ScatteringSeries>,
    /// Largest difference between the two series.
    pub consistency: Option<f64>,
    pub decreasing: bool,
    /// Number of Cauchy distances with left endpoint `t ≥ t_min`.
    pub trend_samples: usize,
    pub t_min: f64,
    pub min_samples: usize,
    pub lambda: f64,
    pub stark: Trajectory,
    pub free: Option<Trajectory>,
    pub guards: GuardSummary,
}

/// Pulls the solution back with the linear group and tracks how fast the
/// pulled-back states settle.
pub fn run_scatter(cfg: &ExperimentConfig) -> Result<ScatterReport, HarnessError> {
    let grid = build_grid(cfg)?;
    let u0 = initial_field(cfg, &grid)?;
    let p = cfg.problem.clone();
    let n = grid.dim();
    let mut warnings = Vec::new();
    if p.lambda <= 0.0 {
        warnings.push("warning: scattering is expected for lambda > 0 only".into());
    }
    let threshold = scattering_sigma_threshold(n)?;
    if p.sigma < threshold {
        warnings.push(format!(
            "warning: sigma = {} is below the scattering threshold {threshold:.4} for n = {n}",
            p.sigma
        ));
    }
    let scheme = StepScheme::strang(cfg.scheme.dt)?;
    let mut opts = run_options(cfg, true, cfg.scheme.sample_every);
    opts.sigma_norm = true;
    let paired = p.effective_field().iter().any(|e| *e != 0.0);
    let mut jobs = vec![(cfg.scheme.t_final, scheme, p.clone(), opts.clone())];
    if paired {
        jobs.push((cfg.scheme.t_final, scheme, p.free(), opts));
    }
    let mut results = run_concurrently(&u0, &jobs).into_iter();
    let stark = results.next().unwrap()?;
    let free = results.next().transpose()?;

    let series = scattering_residual(&stark, &p)?;
    let (free_series, consistency) = match &free {
        Some(fr) => {
            let pushed = fr
                .times
                .iter()
                .zip(fr.snapshots.as_ref().expect("snapshots stored"))
                .map(|(t, v)| Ok(ah_forward(v, &frame(&p, *t)?)))
                .collect::<Result<Vec<_>, HarnessError>>()?;
            let transformed = Trajectory {
                snapshots: Some(pushed),
                ..fr.clone()
            };
            let fs = scattering_residual(&transformed, &p)?;
            let diff = series
                .cauchy
                .iter()
                .zip(&fs.cauchy)
                .chain(series.to_final.iter().zip(&fs.to_final))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            (Some(fs), Some(diff))
        }
        None => (None, None),
    };
    let (decreasing, trend_samples) = series.strictly_decreasing_after(cfg.scatter.t_min);
    Ok(ScatterReport {
        warnings,
        decreasing,
        trend_samples,
        t_min: cfg.scatter.t_min,
        min_samples: cfg.scatter.min_samples,
        lambda: p.lambda,
        guards: GuardSummary::of(std::iter::once(&stark).chain(free.iter())),
        series,
        free_series,
        consistency,
        stark,
        free,
    })
}

impl ScatterReport {
    pub fn verdict(&self) -> Verdict {
        let mut v = Verdict::Pass;
        for tr in std::iter::once(&self.stark).chain(self.free.iter()) {
            if !tr.stop.is_completed() {
                v = v.combine(Verdict::Guard(format!("series ended early: {}", tr.stop)));
            }
        }
        if let Some((t, reason)) = &self.series.truncated {
            v = v.combine(Verdict::Guard(format!(
                "series truncated at t = {t}: {reason}"
            )));
        }
        if let Some(c) = self.consistency {
            if c > SCATTER_CONSISTENCY {
                v = v.combine(Verdict::Fail(format!(
                    "Stark and transformed free series differ by {c:.3e} > {SCATTER_CONSISTENCY:e}"
                )));
            }
        }
        if self.lambda == 0.0 {
            let worst = self.series.cauchy.iter().copied().fold(0.0, f64::max);
            if worst > FLAT_SERIES_TOLERANCE {
                v = v.combine(Verdict::Fail(format!(
                    "linear series not flat: {worst:.3e}"
                )));
            }
        } else if !self.decreasing || self.trend_samples < self.min_samples {
            v = v.combine(Verdict::Fail(format!(
                "Cauchy distances after t = {} decreasing: {} over {} samples (need {})",
                self.t_min, self.decreasing, self.trend_samples, self.min_samples
            )));
        }
        v
    }
}

impl fmt::Display for ScatterReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for w in &self.warnings {
            writeln!(f, "{w}")?;
        }
        let s = &self.series;
        for (i, t) in s.times.iter().enumerate() {
            let next = s
                .cauchy
                .get(i)
                .map_or("-".to_string(), |c| format!("{c:.6e}"));
            writeln!(
                f,
                "t = {t:.4}: to_next = {next}, to_final = {:.6e}",
                s.to_final[i]
            )?;
        }
        writeln!(
            f,
            "Cauchy distances decreasing after t = {}: {} ({} samples)",
            self.t_min, self.decreasing, self.trend_samples
        )?;
        if let Some(c) = self.consistency {
            writeln!(
                f,
                "Stark vs transformed free series: max difference {c:.3e}"
            )?;
        }
        write!(f, "{}", self.guards)
    }
}

// ---------------------------------------------------------------- dispatch

/// What one CLI invocation produced.
#[derive(Debug)]
pub struct Execution {
    pub report: String,
    pub verdict: Verdict,
    pub files: Vec<PathBuf>,
}

fn resolve(out_dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        out_dir.join(p)
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("diagnostics");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}_{suffix}.{ext}"))
}

fn write_text(path: &Path, text: &str) -> Result<PathBuf, HarnessError> {
    std::fs::write(path, text).map_err(|source| HarnessError::Io {
        path: path.into(),
        source,
    })?;
    Ok(path.into())
}

fn write_records(path: &Path, tr: &Trajectory) -> Result<PathBuf, HarnessError> {
    write_diagnostics_csv(path, tr.problem.dim(), &tr.records).map_err(|source| {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    })?;
    Ok(path.into())
}

fn write_snapshots(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    prefix: &str,
    tr: &Trajectory,
) -> Result<Vec<PathBuf>, HarnessError> {
    let (Some(dir), Some(snaps)) = (&cfg.outputs.snapshot_dir, &tr.snapshots) else {
        return Ok(Vec::new());
    };
    let dir = resolve(out_dir, dir);
    std::fs::create_dir_all(&dir).map_err(|source| HarnessError::Io {
        path: dir.clone(),
        source,
    })?;
    let mut files = Vec::new();
    for (i, f) in snaps.iter().enumerate().step_by(cfg.outputs.snapshot_every) {
        let path = dir.join(format!("{prefix}{i:06}.nlsf"));
        write_snapshot(f, cfg.problem.epsilon, &path)?;
        files.push(path);
    }
    Ok(files)
}

/// Runs the configured experiment and writes its outputs under `out_dir`.
pub fn execute(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Execution, HarnessError> {
    std::fs::create_dir_all(out_dir).map_err(|source| HarnessError::Io {
        path: out_dir.into(),
        source,
    })?;
    let csv = resolve(out_dir, &cfg.outputs.csv_path);
    let mut files = Vec::new();
    let (report, verdict) = match cfg.kind {
        ExperimentKind::Run => {
            let r = run(cfg)?;
            files.push(write_records(&csv, &r.trajectory)?);
            files.extend(write_snapshots(cfg, out_dir, "snap_", &r.trajectory)?);
            (r.to_string(), r.verdict())
        }
        ExperimentKind::Compare => {
            let r = run_compare(cfg)?;
            files.push(write_records(&with_suffix(&csv, "stark"), &r.stark)?);
            files.push(write_records(&with_suffix(&csv, "free"), &r.free)?);
            files.push(write_text(
                &with_suffix(&csv, "discrepancy"),
                &columns_csv(&["t", "discrepancy"], &[&r.times, &r.discrepancy]),
            )?);
            files.extend(write_snapshots(cfg, out_dir, "stark_", &r.stark)?);
            files.extend(write_snapshots(cfg, out_dir, "free_", &r.free)?);
            (r.to_string(), r.verdict())
        }
        ExperimentKind::LemmaCheck => {
            let r = run_lemma_check(cfg)?;
            if let Some(tr) = &r.trajectory {
                files.push(write_records(&csv, tr)?);
            }
            (r.to_string(), r.verdict())
        }
        ExperimentKind::Blowup => {
            let r = run_blowup(cfg)?;
            for run in &r.runs {
                files.push(write_records(
                    &with_suffix(&csv, &run.label),
                    &run.trajectory,
                )?);
                files.extend(write_snapshots(
                    cfg,
                    out_dir,
                    &format!("{}_", run.label),
                    &run.trajectory,
                )?);
            }
            (r.to_string(), r.verdict())
        }
        ExperimentKind::Scatter => {
            let r = run_scatter(cfg)?;
            files.push(write_records(&csv, &r.stark)?);
            let s = &r.series;
            let next: Vec<f64> = (0..s.times.len())
                .map(|i| s.cauchy.get(i).copied().unwrap_or(f64::NAN))
                .collect();
            files.push(write_text(
                &with_suffix(&csv, "scattering"),
                &columns_csv(
                    &["t", "cauchy_to_next", "distance_to_final"],
                    &[&s.times, &next, &s.to_final],
                ),
            )?);
            files.extend(write_snapshots(cfg, out_dir, "snap_", &r.stark)?);
            (r.to_string(), r.verdict())
        }
    };
    Ok(Execution {
        report,
        verdict,
        files,
    })
}

impl HarnessError {
    /// Configuration and guard problems map to status 2.
    pub fn exit_code(&self) -> i32 {
        2
    }
}
