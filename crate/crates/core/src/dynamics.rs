//! Exact free propagator and the Strang split-step integrator.
//!
//! One step is `N(dt/2) ∘ L(dt) ∘ N(dt/2)` where `L(t) = e^{itΔ}` acts as the
//! multiplier `e^{-itk²}` and `N(t)` solves `i u_t = |u|^{2p} u` exactly,
//! `u ↦ e^{-it|u|^{2p}} u`. Because `N` preserves `|u|`, two consecutive
//! half steps merge into one full step; [`evolve`] uses that and only splits
//! the nonlinear phase at diagnostic times.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::functionals::{base_record, flow_energy, pow_density, DiagnosticsRecord};
use crate::imethod::{apply_i, IMultiplier};
use crate::morawetz::{interaction_action_checked, MorawetzConfig};
use crate::spectral::{apply_symbol, lebesgue_norm, ComplexField, Grid1D, SymbolSpec};

/// The nonlinear term of the flow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Nonlinearity {
    /// `+|u|^{2p} u`, `p > 0`.
    Defocusing { p: f64 },
    /// Linear Schrödinger flow.
    Free,
}

impl Nonlinearity {
    pub fn exponent(&self) -> Option<f64> {
        match *self {
            Nonlinearity::Defocusing { p } => Some(p),
            Nonlinearity::Free => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverConfig {
    pub nonlinearity: Nonlinearity,
    pub dt: f64,
    pub t_final: f64,
    /// Time between diagnostic records; must be a whole number of steps.
    pub diag_stride: f64,
    /// Spectral-tail level above which a resolution warning is raised.
    pub tail_threshold: f64,
}

pub const DEFAULT_TAIL_THRESHOLD: f64 = 1e-8;

impl SolverConfig {
    /// Monomial nonlinearity `|u|^{2k} u`.
    pub fn with_degree(k: u32, dt: f64, t_final: f64, diag_stride: f64) -> Result<Self> {
        if k == 0 {
            return Err(invalid("k", "degree must be at least 1"));
        }
        Self::with_exponent(k as f64, dt, t_final, diag_stride)
    }

    /// Real exponent `|u|^{2p} u`.
    pub fn with_exponent(p: f64, dt: f64, t_final: f64, diag_stride: f64) -> Result<Self> {
        let cfg = Self {
            nonlinearity: Nonlinearity::Defocusing { p },
            dt,
            t_final,
            diag_stride,
            tail_threshold: DEFAULT_TAIL_THRESHOLD,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn free(dt: f64, t_final: f64, diag_stride: f64) -> Result<Self> {
        let cfg = Self {
            nonlinearity: Nonlinearity::Free,
            dt,
            t_final,
            diag_stride,
            tail_threshold: DEFAULT_TAIL_THRESHOLD,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_tail_threshold(mut self, tail_threshold: f64) -> Result<Self> {
        self.tail_threshold = tail_threshold;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if let Nonlinearity::Defocusing { p } = self.nonlinearity {
            if !(p.is_finite() && p > 0.0) {
                return Err(invalid("p", format!("exponent must be positive, got {p}")));
            }
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(invalid(
                "T",
                format!("must be positive, got {}", self.t_final),
            ));
        }
        if !(self.diag_stride.is_finite() && self.diag_stride >= self.dt * (1.0 - 1e-12)) {
            return Err(invalid(
                "diag_stride",
                format!(
                    "must be at least dt = {}, got {}",
                    self.dt, self.diag_stride
                ),
            ));
        }
        if !(self.tail_threshold > 0.0 && self.tail_threshold < 1.0) {
            return Err(invalid(
                "tail_threshold",
                format!("must lie in (0, 1), got {}", self.tail_threshold),
            ));
        }
        whole_steps("T", self.t_final, self.dt)?;
        whole_steps("diag_stride", self.diag_stride, self.dt)?;
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn steps_per_record(&self) -> usize {
        ((self.diag_stride / self.dt).round() as usize).max(1)
    }
}

fn whole_steps(name: &'static str, span: f64, dt: f64) -> Result<usize> {
    let ratio = span / dt;
    let steps = ratio.round();
    if (ratio - steps).abs() > 1e-6 * steps.max(1.0) {
        return Err(invalid(
            name,
            format!("{span} is not a whole number of steps of size {dt}"),
        ));
    }
    Ok(steps as usize)
}

/// `e^{itΔ} u`, exact. The time stamp advances by `t`.
pub fn free_propagate(field: &ComplexField, t: f64) -> ComplexField {
    if t == 0.0 {
        return field.clone();
    }
    let out = apply_symbol(field, &SymbolSpec::free_phase(t)).expect("unimodular symbol is finite");
    let time = field.time() + t;
    out.with_time(time)
}

/// Exact solution of `i u_t = |u|^{2p} u` over time `dt`.
pub fn nonlinear_phase_step(field: &ComplexField, dt: f64, p: f64) -> ComplexField {
    let samples = field.samples().iter().map(|&u| rotate(u, dt, p)).collect();
    ComplexField::from_parts(field.grid().clone(), samples, field.time() + dt)
}

#[inline]
fn rotate(u: Complex64, dt: f64, p: f64) -> Complex64 {
    let rho = u.norm_sqr();
    if rho == 0.0 {
        return u;
    }
    let (s, c) = (-dt * pow_density(rho, p)).sin_cos();
    // Multiply componentwise so |u| changes only at the last-ulp level.
    Complex64::new(u.re * c - u.im * s, u.re * s + u.im * c)
}

#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub field: ComplexField,
    /// Spectral-tail indicator after the linear substep.
    pub tail: f64,
}

/// One Strang step `N(dt/2) ∘ L(dt) ∘ N(dt/2)`. A tail above
/// `cfg.tail_threshold` is logged as a resolution warning.
pub fn strang_step(field: &ComplexField, dt: f64, cfg: &SolverConfig) -> Result<StepOutcome> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    let mut stepper = Stepper::new(field.grid().clone(), cfg.nonlinearity, dt);
    let mut samples = field.samples().to_vec();
    stepper.half_nonlinear(&mut samples);
    let tail = stepper.linear(&mut samples);
    stepper.half_nonlinear(&mut samples);
    if tail > cfg.tail_threshold {
        log::warn!(
            "spectral tail {tail:.3e} above threshold {:.1e} at t = {}",
            cfg.tail_threshold,
            field.time() + dt
        );
    }
    Ok(StepOutcome {
        field: ComplexField::from_parts(field.grid().clone(), samples, field.time() + dt),
        tail,
    })
}

/// Reusable buffers for repeated steps on one grid.
struct Stepper {
    grid: Arc<Grid1D>,
    nonlinearity: Nonlinearity,
    dt: f64,
    /// `e^{-i dt k²} / n`: the inverse-transform normalisation folded in.
    phase: Vec<Complex64>,
    scratch: Vec<Complex64>,
    tail_mask: Vec<bool>,
}

impl Stepper {
    fn new(grid: Arc<Grid1D>, nonlinearity: Nonlinearity, dt: f64) -> Self {
        let scale = 1.0 / grid.n() as f64;
        let phase = grid
            .wavenumbers()
            .iter()
            .map(|&k| Complex64::from_polar(scale, -dt * k * k))
            .collect();
        let cut = 0.5 * grid.nyquist();
        let tail_mask = grid.wavenumbers().iter().map(|k| k.abs() > cut).collect();
        let scratch = vec![Complex64::new(0.0, 0.0); grid.scratch_len()];
        Self {
            grid,
            nonlinearity,
            dt,
            phase,
            scratch,
            tail_mask,
        }
    }

    fn nonlinear(&self, samples: &mut [Complex64], tau: f64) {
        if let Nonlinearity::Defocusing { p } = self.nonlinearity {
            samples.iter_mut().for_each(|u| *u = rotate(*u, tau, p));
        }
    }

    fn half_nonlinear(&self, samples: &mut [Complex64]) {
        self.nonlinear(samples, 0.5 * self.dt);
    }

    fn full_nonlinear(&self, samples: &mut [Complex64]) {
        self.nonlinear(samples, self.dt);
    }

    /// Applies `L(dt)` and returns the spectral tail, or NaN if the field is
    /// no longer finite.
    fn linear(&mut self, samples: &mut [Complex64]) -> f64 {
        self.grid.forward_with_scratch(samples, &mut self.scratch);
        let (mut tail, mut total) = (0.0, 0.0);
        for ((c, ph), &hi) in samples.iter_mut().zip(&self.phase).zip(&self.tail_mask) {
            let w = c.norm_sqr();
            total += w;
            if hi {
                tail += w;
            }
            *c *= ph;
        }
        self.grid
            .inverse_raw_with_scratch(samples, &mut self.scratch);
        if !total.is_finite() {
            f64::NAN
        } else if total == 0.0 {
            0.0
        } else {
            (tail / total).sqrt()
        }
    }
}

/// Which record times keep a full copy of the field.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum SnapshotPolicy {
    #[default]
    None,
    All,
    /// Record times closest to each requested time (within half a step).
    Times(Vec<f64>),
}

/// Optional diagnostics evaluated at every record.
#[derive(Clone, Debug, Default)]
pub struct DiagnosticsRequest {
    pub morawetz: Option<MorawetzConfig>,
    pub modified_energy: Option<IMultiplier>,
    /// Extra `L^r` norms stored in each record.
    pub lebesgue: Vec<f64>,
    pub snapshots: SnapshotPolicy,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TailWarning {
    pub first_t: f64,
    pub first_tail: f64,
    pub steps_over: usize,
    pub max_tail: f64,
}

/// Output of [`evolve`].
#[derive(Clone, Debug)]
pub struct Trajectory {
    records: Vec<DiagnosticsRecord>,
    snapshots: Vec<ComplexField>,
    config: SolverConfig,
    initial: ComplexField,
    tail_warning: Option<TailWarning>,
    max_tail: f64,
    max_boundary: f64,
}

impl Trajectory {
    /// Assembles a trajectory from precomputed parts (records must have
    /// strictly increasing times).
    pub fn from_parts(
        records: Vec<DiagnosticsRecord>,
        snapshots: Vec<ComplexField>,
        config: SolverConfig,
        initial: ComplexField,
    ) -> Result<Self> {
        if records.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(invalid("records", "times must increase strictly"));
        }
        let max_tail = records.iter().map(|r| r.tail).fold(0.0, f64::max);
        let max_boundary = records.iter().map(|r| r.boundary).fold(0.0, f64::max);
        Ok(Self {
            records,
            snapshots,
            config,
            initial,
            tail_warning: None,
            max_tail,
            max_boundary,
        })
    }

    pub fn records(&self) -> &[DiagnosticsRecord] {
        &self.records
    }

    pub fn snapshots(&self) -> &[ComplexField] {
        &self.snapshots
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn initial(&self) -> &ComplexField {
        &self.initial
    }

    pub fn tail_warning(&self) -> Option<&TailWarning> {
        self.tail_warning.as_ref()
    }

    /// Largest per-step spectral tail seen during the run.
    pub fn max_tail(&self) -> f64 {
        self.max_tail
    }

    /// Largest boundary-mass indicator over the records.
    pub fn max_boundary(&self) -> f64 {
        self.max_boundary
    }

    pub fn final_record(&self) -> &DiagnosticsRecord {
        self.records
            .last()
            .expect("trajectories hold at least one record")
    }

    /// `max_t |X(t) - X(0)| / |X(0)|` for a record quantity; absolute when
    /// `X(0) = 0`.
    pub fn relative_drift(&self, quantity: impl Fn(&DiagnosticsRecord) -> f64) -> f64 {
        let x0 = quantity(&self.records[0]);
        let dev = self
            .records
            .iter()
            .map(|r| (quantity(r) - x0).abs())
            .fold(0.0, f64::max);
        if x0 == 0.0 {
            dev
        } else {
            dev / x0.abs()
        }
    }
}

/// Evaluates every requested diagnostic for one field.
pub fn diagnose(
    field: &ComplexField,
    nonlinearity: &Nonlinearity,
    request: &DiagnosticsRequest,
) -> Result<DiagnosticsRecord> {
    let mut rec = base_record(field, nonlinearity, &request.lebesgue)?;
    if let Some(mcfg) = &request.morawetz {
        let (value, loss) = interaction_action_checked(field, mcfg)?;
        rec.morawetz_action = Some(value);
        rec.morawetz_loss = Some(loss);
    }
    if let Some(im) = &request.modified_energy {
        rec.modified_energy = Some(flow_energy(&apply_i(field, im), nonlinearity).total);
    }
    Ok(rec)
}

fn wants_snapshot(policy: &SnapshotPolicy, t: f64, dt: f64) -> bool {
    match policy {
        SnapshotPolicy::None => false,
        SnapshotPolicy::All => true,
        SnapshotPolicy::Times(ts) => ts.iter().any(|&s| (s - t).abs() <= 0.5 * dt),
    }
}

/// Integrates from `u0` (taken to be at `t = 0`) to `cfg.t_final`, recording
/// diagnostics at `t = 0`, every `diag_stride`, and at `t_final`.
/// Deterministic given its inputs.
pub fn evolve(
    u0: &ComplexField,
    cfg: &SolverConfig,
    request: &DiagnosticsRequest,
) -> Result<Trajectory> {
    cfg.validate()?;
    if !u0.is_finite() {
        return Err(Error::NonFinite("initial data"));
    }
    if let Some(m) = &request.morawetz {
        m.validate(u0.grid())?;
    }
    let grid = u0.grid().clone();
    let initial = u0.clone().with_time(0.0);
    let total = cfg.steps();
    let stride = cfg.steps_per_record();
    let mut stepper = Stepper::new(grid.clone(), cfg.nonlinearity, cfg.dt);

    let mut records = Vec::with_capacity(total / stride + 2);
    let mut snapshots = Vec::new();
    let mut tail_warning: Option<TailWarning> = None;
    let mut max_tail = 0.0f64;

    let emit = |field: ComplexField,
                records: &mut Vec<DiagnosticsRecord>,
                snapshots: &mut Vec<ComplexField>|
     -> Result<()> {
        let rec = diagnose(&field, &cfg.nonlinearity, request)?;
        log::debug!(
            "t = {:.6} mass = {:.15e} energy = {:.15e} tail = {:.2e}",
            rec.t,
            rec.mass,
            rec.energy,
            rec.tail
        );
        records.push(rec);
        if wants_snapshot(&request.snapshots, field.time(), cfg.dt) {
            snapshots.push(field);
        }
        Ok(())
    };

    emit(initial.clone(), &mut records, &mut snapshots)?;
    let mut samples = initial.samples().to_vec();
    let mut step = 0usize;
    while step < total {
        let chunk = stride.min(total - step);
        stepper.half_nonlinear(&mut samples);
        for i in 0..chunk {
            if i > 0 {
                stepper.full_nonlinear(&mut samples);
            }
            let tail = stepper.linear(&mut samples);
            let t = (step + i + 1) as f64 * cfg.dt;
            log::trace!("step {} t = {t:.6} tail = {tail:.2e}", step + i + 1);
            if tail.is_nan() {
                let last = records.last().expect("initial record exists");
                log::error!("non-finite field at t = {t}; last healthy record: {last:?}");
                return Err(Error::Blowup {
                    t,
                    last_healthy_t: last.t,
                });
            }
            max_tail = max_tail.max(tail);
            if tail > cfg.tail_threshold {
                match tail_warning.as_mut() {
                    None => {
                        log::warn!(
                            "spectral tail {tail:.3e} above threshold {:.1e} at t = {t}; \
                             consider a finer grid",
                            cfg.tail_threshold
                        );
                        tail_warning = Some(TailWarning {
                            first_t: t,
                            first_tail: tail,
                            steps_over: 1,
                            max_tail: tail,
                        });
                    }
                    Some(w) => {
                        w.steps_over += 1;
                        w.max_tail = w.max_tail.max(tail);
                    }
                }
            }
        }
        stepper.half_nonlinear(&mut samples);
        step += chunk;
        let t = step as f64 * cfg.dt;
        let field = ComplexField::from_parts(grid.clone(), samples.clone(), t);
        emit(field, &mut records, &mut snapshots)?;
    }

    let max_boundary = records.iter().map(|r| r.boundary).fold(0.0, f64::max);
    Ok(Trajectory {
        records,
        snapshots,
        config: cfg.clone(),
        initial,
        tail_warning,
        max_tail,
        max_boundary,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DispersiveSample {
    pub t: f64,
    pub sup_norm: f64,
    pub l1_norm: f64,
    /// `‖e^{itΔ}f‖_∞ (4π|t|)^{1/2} / ‖f‖₁`; 0 for `f = 0`.
    pub ratio: f64,
}

/// Compares `‖e^{itΔ}f‖_∞` with the kernel bound `(4π|t|)^{-1/2}‖f‖₁`.
pub fn dispersive_audit(f: &ComplexField, times: &[f64]) -> Result<Vec<DispersiveSample>> {
    let l1 = lebesgue_norm(f, 1.0)?;
    times
        .iter()
        .map(|&t| {
            if t == 0.0 || !t.is_finite() {
                return Err(invalid(
                    "t",
                    format!("dispersive audit needs t != 0, got {t}"),
                ));
            }
            let sup = lebesgue_norm(&free_propagate(f, t), f64::INFINITY)?;
            let ratio = if l1 == 0.0 {
                0.0
            } else {
                sup * (4.0 * std::f64::consts::PI * t.abs()).sqrt() / l1
            };
            Ok(DispersiveSample {
                t,
                sup_norm: sup,
                l1_norm: l1,
                ratio,
            })
        })
        .collect()
}
