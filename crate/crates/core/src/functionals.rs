//! Conserved quantities, spacetime slab norms and admissible-pair arithmetic.

use serde::Serialize;

use crate::dynamics::{Nonlinearity, Trajectory};
use crate::error::{invalid, Error, Result};
use crate::spectral::{lebesgue_norm_of, sobolev_norm_of_spectrum, spectral_tail_of, ComplexField};

/// `M[u] = ‖u‖²₂`.
pub fn mass(field: &ComplexField) -> f64 {
    field.samples().iter().map(|c| c.norm_sqr()).sum::<f64>() * field.grid().dx()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EnergyParts {
    /// `½‖∂_x u‖²₂`, evaluated spectrally.
    pub kinetic: f64,
    /// `‖u‖^{2p+2}_{2p+2} / (2p+2)`, by quadrature.
    pub potential: f64,
    pub total: f64,
}

/// `E[u] = ½‖∇u‖²₂ + ‖u‖^{2p+2}_{2p+2}/(2p+2)` for a real exponent `p > 0`
/// (`p = k` for the monomial `|u|^{2k}u`).
pub fn energy(field: &ComplexField, p: f64) -> EnergyParts {
    let spec = field.spectrum();
    let kinetic = kinetic_of_spectrum(field, &spec);
    let potential = potential_energy(field, p);
    EnergyParts {
        kinetic,
        potential,
        total: kinetic + potential,
    }
}

/// The Hamiltonian of the flow: `energy(·, p)` for the defocusing flow and
/// the kinetic part alone for the free flow.
pub fn flow_energy(field: &ComplexField, nonlinearity: &Nonlinearity) -> EnergyParts {
    match nonlinearity.exponent() {
        Some(p) => energy(field, p),
        None => {
            let kinetic = kinetic_of_spectrum(field, &field.spectrum());
            EnergyParts {
                kinetic,
                potential: 0.0,
                total: kinetic,
            }
        }
    }
}

fn kinetic_of_spectrum(field: &ComplexField, spec: &[num_complex::Complex64]) -> f64 {
    let grid = field.grid();
    let acc: f64 = spec
        .iter()
        .zip(grid.wavenumbers())
        .map(|(c, &k)| k * k * c.norm_sqr())
        .sum();
    0.5 * acc * grid.dx() / grid.n() as f64
}

fn potential_energy(field: &ComplexField, p: f64) -> f64 {
    let r = 2.0 * p + 2.0;
    let sum: f64 = field
        .samples()
        .iter()
        .map(|c| pow_density(c.norm_sqr(), p + 1.0))
        .sum();
    sum * field.grid().dx() / r
}

/// `(|u|²)^e`, using integer powers when `e` is integral.
pub(crate) fn pow_density(rho: f64, e: f64) -> f64 {
    if e.fract() == 0.0 && e.abs() < 64.0 {
        rho.powi(e as i32)
    } else {
        rho.powf(e)
    }
}

/// `∫|u|⁸ dx`.
pub fn l8_density(field: &ComplexField) -> f64 {
    field
        .samples()
        .iter()
        .map(|c| c.norm_sqr().powi(4))
        .sum::<f64>()
        * field.grid().dx()
}

/// Schrödinger-admissible pair `2/q + 1/r = 1/2`, `2 ≤ r ≤ ∞`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AdmissiblePair {
    q: f64,
    r: f64,
}

impl AdmissiblePair {
    pub fn new(q: f64, r: f64) -> Result<Self> {
        if is_admissible(q, r) {
            Ok(Self { q, r })
        } else {
            Err(invalid("(q, r)", format!("({q}, {r}) is not admissible")))
        }
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn r(&self) -> f64 {
        self.r
    }
}

fn recip(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

/// `2/q + 1/r = 1/2` with `2 ≤ r ≤ ∞`, `1/∞ = 0`. Exact on the usual dyadic
/// and integer exponents; tolerance `1e-12` otherwise.
pub fn is_admissible(q: f64, r: f64) -> bool {
    if q.is_nan() || r.is_nan() || q < 1.0 || r < 2.0 {
        return false;
    }
    (2.0 * recip(q) + recip(r) - 0.5).abs() <= 1e-12
}

/// Running estimate of `‖u‖_{L^q_t L^r_x}` from `(t_i, ‖u(t_i)‖_r)` samples,
/// composite trapezoid in time; `q = ∞` keeps the running maximum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlabAccumulator {
    q: f64,
    r: f64,
    samples: Vec<(f64, f64)>,
    integral: f64,
    sup: f64,
}

impl SlabAccumulator {
    pub fn new(q: f64, r: f64) -> Result<Self> {
        if q.is_nan() || q < 1.0 {
            return Err(invalid("q", format!("must be >= 1, got {q}")));
        }
        if r.is_nan() || r < 1.0 {
            return Err(invalid("r", format!("must be >= 1, got {r}")));
        }
        Ok(Self {
            q,
            r,
            samples: Vec::new(),
            integral: 0.0,
            sup: 0.0,
        })
    }

    pub fn push(&mut self, t: f64, norm: f64) -> Result<()> {
        if let Some(&(t_prev, n_prev)) = self.samples.last() {
            if t <= t_prev {
                return Err(invalid(
                    "t",
                    format!("sample times must increase: {t} after {t_prev}"),
                ));
            }
            if self.q.is_finite() {
                self.integral += 0.5 * (t - t_prev) * (n_prev.powf(self.q) + norm.powf(self.q));
            }
        }
        self.sup = self.sup.max(norm);
        self.samples.push((t, norm));
        Ok(())
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn value(&self) -> f64 {
        if self.q.is_infinite() {
            self.sup
        } else {
            self.integral.powf(1.0 / self.q)
        }
    }
}

/// Per-time-sample scalar diagnostics.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    /// `‖u‖_{Ḣ^{1/2}}`
    pub hhalf: f64,
    /// `∫|u|⁸ dx`
    pub l8_density: f64,
    pub morawetz_action: Option<f64>,
    pub modified_energy: Option<f64>,
    /// Spectral-tail indicator.
    pub tail: f64,
    /// Boundary-mass indicator.
    pub boundary: f64,
    pub kinetic: f64,
    /// Relative `L²` loss of the Morawetz quadrature sub-grid.
    pub morawetz_loss: Option<f64>,
    /// Extra `(r, ‖u‖_r)` samples requested by the caller.
    pub lebesgue: Vec<(f64, f64)>,
}

impl DiagnosticsRecord {
    pub const CSV_HEADER: &'static str =
        "t,mass,energy,hhalf,l8_density,morawetz_action,modified_energy,tail";

    /// One CSV row in the fixed column order of [`Self::CSV_HEADER`]; absent
    /// optionals are empty cells. Floats use Rust's shortest round-trip form.
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        format!(
            "{:e},{:e},{:e},{:e},{:e},{},{},{:e}",
            self.t,
            self.mass,
            self.energy,
            self.hhalf,
            self.l8_density,
            opt(self.morawetz_action),
            opt(self.modified_energy),
            self.tail
        )
    }

    /// `‖u(t)‖_r` if the record carries it.
    pub fn lebesgue_norm(&self, r: f64) -> Option<f64> {
        if r == 8.0 {
            return Some(self.l8_density.powf(0.125));
        }
        if r == 2.0 {
            return Some(self.mass.sqrt());
        }
        self.lebesgue.iter().find(|(e, _)| *e == r).map(|&(_, v)| v)
    }
}

/// Scalar part of a diagnostics record (everything except the optional
/// Morawetz and modified-energy entries).
pub fn base_record(
    field: &ComplexField,
    nonlinearity: &Nonlinearity,
    extra_exponents: &[f64],
) -> Result<DiagnosticsRecord> {
    let grid = field.grid();
    let spec = field.spectrum();
    let e = flow_energy(field, nonlinearity);
    let lebesgue = extra_exponents
        .iter()
        .map(|&r| lebesgue_norm_of(field.samples(), grid.dx(), r).map(|v| (r, v)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DiagnosticsRecord {
        t: field.time(),
        mass: mass(field),
        energy: e.total,
        hhalf: sobolev_norm_of_spectrum(grid, &spec, 0.5, true)?,
        l8_density: l8_density(field),
        morawetz_action: None,
        modified_energy: None,
        tail: spectral_tail_of(grid, &spec),
        boundary: field.boundary_mass(),
        kinetic: e.kinetic,
        morawetz_loss: None,
        lebesgue,
    })
}

fn trapezoid(points: impl Iterator<Item = (f64, f64)>) -> f64 {
    let mut acc = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for (t, v) in points {
        if let Some((tp, vp)) = prev {
            acc += 0.5 * (t - tp) * (v + vp);
        }
        prev = Some((t, v));
    }
    acc
}

/// `‖u‖_{L^q_t L^r_x}` over the record times (trapezoid in time).
pub fn slab_norm(traj: &Trajectory, q: f64, r: f64) -> Result<f64> {
    let records = traj.records();
    if records.len() < 2 {
        return Err(Error::MissingSamples("at least two records".into()));
    }
    let mut acc = SlabAccumulator::new(q, r)?;
    for rec in records {
        let v = rec
            .lebesgue_norm(r)
            .ok_or_else(|| Error::MissingSamples(format!("L^{r} norm at t = {}", rec.t)))?;
        acc.push(rec.t, v)?;
    }
    Ok(acc.value())
}

/// `∫∫|u|⁸ dx dt` over the whole trajectory.
pub fn l8_spacetime_integral(traj: &Trajectory) -> f64 {
    trapezoid(traj.records().iter().map(|r| (r.t, r.l8_density)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntervalSplit {
    /// Nondecreasing boundaries `t_0 = 0 < … < t_L = T`.
    pub boundaries: Vec<f64>,
    /// `L⁸_{t,x}` norm of each subinterval.
    pub norms: Vec<f64>,
}

impl IntervalSplit {
    pub fn count(&self) -> usize {
        self.norms.len()
    }
}

/// Greedy left-to-right partition of the trajectory's time span into
/// subintervals of `L⁸_{t,x}` norm exactly `delta` (the last one may be
/// smaller). `∫|u|⁸dx` is treated as piecewise linear between records,
/// matching the trapezoid rule used by [`slab_norm`]; a split point is
/// located by solving the quadratic for the partial-interval integral.
///
/// Fails with [`Error::RefineSampling`] if one record interval would have to
/// host more than one boundary.
pub fn l8_interval_split(traj: &Trajectory, delta: f64) -> Result<IntervalSplit> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(invalid("delta", format!("must be positive, got {delta}")));
    }
    let records = traj.records();
    if records.len() < 2 {
        return Err(Error::MissingSamples("at least two records".into()));
    }
    let target = delta.powi(8);
    let mut boundaries = vec![records[0].t];
    let mut norms = Vec::new();
    let mut acc = 0.0;
    for w in records.windows(2) {
        let (t0, t1) = (w[0].t, w[1].t);
        let (f0, f1) = (w[0].l8_density, w[1].l8_density);
        let h = t1 - t0;
        let full = 0.5 * h * (f0 + f1);
        if acc + full < target {
            acc += full;
            continue;
        }
        if acc + full - target > target * (1.0 + 1e-12) {
            return Err(Error::RefineSampling(format!(
                "record interval [{t0}, {t1}] carries more than one delta^8 of L8 mass"
            )));
        }
        // ∫_{t0}^{t0+τ} f = f0 τ + (f1-f0) τ²/(2h) = target - acc
        let need = target - acc;
        let a = 0.5 * (f1 - f0) / h;
        let tau = if a.abs() < 1e-300 {
            need / f0
        } else {
            let disc = (f0 * f0 + 4.0 * a * need).max(0.0);
            2.0 * need / (f0 + disc.sqrt())
        };
        let split = (t0 + tau).clamp(t0, t1);
        boundaries.push(split);
        norms.push(delta);
        acc = full - need;
    }
    let t_end = records.last().map(|r| r.t).unwrap_or(0.0);
    if *boundaries.last().unwrap() < t_end {
        boundaries.push(t_end);
        norms.push(acc.max(0.0).powf(0.125));
    } else if norms.is_empty() {
        norms.push(0.0);
        boundaries.push(t_end);
    }
    Ok(IntervalSplit { boundaries, norms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn mass_examples() {
        let g = make_grid(40.0, 512).unwrap();
        assert_eq!(mass(&ComplexField::zeros(g.clone(), 0.0)), 0.0);
        let c = Complex64::new(1.0, -2.0);
        let u = ComplexField::from_fn(g.clone(), 0.0, |_| c).unwrap();
        assert!((mass(&u) - 5.0 * 40.0).abs() < 1e-11);
        let u = ComplexField::from_fn(g, 0.0, |x| Complex64::new((-x * x).exp(), 0.0)).unwrap();
        assert!((mass(&u) - (PI / 2.0).sqrt()).abs() < 1e-12);
        assert!((mass(&u) - 1.2533).abs() < 1e-4);
    }

    #[test]
    fn energy_single_mode() {
        let g = make_grid(40.0, 512).unwrap();
        assert_eq!(energy(&ComplexField::zeros(g.clone(), 0.0), 3.0).total, 0.0);
        let a = Complex64::new(0.7, 0.2);
        let k1 = 2.0 * PI * 5.0 / 40.0;
        let u = ComplexField::from_fn(g, 0.0, |x| a * Complex64::from_polar(1.0, k1 * x)).unwrap();
        let e = energy(&u, 3.0);
        let expect_kin = 0.5 * a.norm_sqr() * k1 * k1 * 40.0;
        let expect_pot = a.norm_sqr().powi(4) * 40.0 / 8.0;
        assert!((e.kinetic - expect_kin).abs() < 1e-12 * expect_kin);
        assert!((e.potential - expect_pot).abs() < 1e-12 * expect_pot);
        assert!((e.total - expect_kin - expect_pot).abs() < 1e-12);
    }

    #[test]
    fn admissible_pairs() {
        assert!(is_admissible(f64::INFINITY, 2.0));
        assert!(is_admissible(6.0, 6.0));
        assert!(is_admissible(4.0, f64::INFINITY));
        assert!(is_admissible(8.0, 4.0));
        assert!(!is_admissible(4.0, 4.0));
        assert!(!is_admissible(f64::INFINITY, 1.0));
        assert!(AdmissiblePair::new(4.0, 4.0).is_err());
        assert_eq!(AdmissiblePair::new(6.0, 6.0).unwrap().q(), 6.0);
    }

    #[test]
    fn slab_accumulator_is_monotone() {
        let mut acc = SlabAccumulator::new(8.0, 8.0).unwrap();
        let mut prev = 0.0;
        for i in 0..20 {
            let t = i as f64 * 0.1;
            acc.push(t, (1.0 + t).recip()).unwrap();
            assert!(acc.value() >= prev);
            prev = acc.value();
        }
        assert!(acc.push(0.5, 1.0).is_err());
    }
}
