//! Periodic grids, discrete Fourier transforms, Fourier multipliers,
//! Littlewood–Paley projections and Lebesgue/Sobolev norms.
//!
//! Mode ordering is DC-first (the standard DFT layout): spectral index `j`
//! carries the angular wavenumber `2πm/L` with `m = j` for `j < n/2` and
//! `m = j - n` for `j >= n/2`, so `m` runs over `{-n/2, …, n/2-1}` and the
//! Nyquist mode sits at index `n/2` with wavenumber `-πn/L`.
//!
//! The forward transform is unnormalised, `û_j = Σ_m u_m e^{-ik_j (x_m - x_0)}`,
//! and the discrete Plancherel identity reads `dx Σ|u_m|² = (dx/n) Σ|û_j|²`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Uniform periodic grid on `[-L/2, L/2)`.
pub struct Grid1D {
    length: f64,
    n: usize,
    dx: f64,
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid1D")
            .field("length", &self.length)
            .field("n", &self.n)
            .field("dx", &self.dx)
            .finish()
    }
}

impl PartialEq for Grid1D {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

/// Builds a grid of physical length `length` with `n` points.
pub fn make_grid(length: f64, n: usize) -> Result<Arc<Grid1D>> {
    Grid1D::new(length, n)
}

impl Grid1D {
    pub fn new(length: f64, n: usize) -> Result<Arc<Self>> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::GridLength(length));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::GridSize(n));
        }
        let half = (n / 2) as i64;
        let wavenumbers = (0..n as i64)
            .map(|j| {
                let m = if j < half { j } else { j - n as i64 };
                2.0 * PI * m as f64 / length
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Self {
            length,
            n,
            dx: length / n as f64,
            wavenumbers,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }))
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Angular wavenumbers in DC-first order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Largest resolved wavenumber magnitude, `πn/L`.
    pub fn nyquist(&self) -> f64 {
        PI * self.n as f64 / self.length
    }

    /// Left end point of the periodic cell.
    pub fn origin(&self) -> f64 {
        -0.5 * self.length
    }

    pub fn position(&self, j: usize) -> f64 {
        self.origin() + j as f64 * self.dx
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.position(j)).collect()
    }

    /// Unnormalised forward DFT.
    pub fn forward(&self, samples: &[Complex64]) -> Vec<Complex64> {
        let mut buf = samples.to_vec();
        self.forward.process(&mut buf);
        buf
    }

    /// Inverse DFT including the `1/n` normalisation.
    pub fn inverse(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        let mut buf = spectrum.to_vec();
        self.inverse_in_place(&mut buf);
        buf
    }

    pub(crate) fn scratch_len(&self) -> usize {
        self.forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len())
    }

    pub(crate) fn forward_with_scratch(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, scratch);
    }

    /// Inverse DFT *without* the `1/n` factor.
    pub(crate) fn inverse_raw_with_scratch(
        &self,
        buf: &mut [Complex64],
        scratch: &mut [Complex64],
    ) {
        self.inverse.process_with_scratch(buf, scratch);
    }

    pub(crate) fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
    }
}

/// Complex samples of `u(t, ·)` on a grid, stamped with the simulation time.
#[derive(Clone, Debug)]
pub struct ComplexField {
    grid: Arc<Grid1D>,
    samples: Vec<Complex64>,
    time: f64,
}

impl ComplexField {
    pub fn new(grid: Arc<Grid1D>, samples: Vec<Complex64>, time: f64) -> Result<Self> {
        if samples.len() != grid.n() {
            return Err(Error::SampleCount {
                expected: grid.n(),
                got: samples.len(),
            });
        }
        if !time.is_finite() {
            return Err(Error::NonFinite("time stamp"));
        }
        if samples
            .iter()
            .any(|c| !(c.re.is_finite() && c.im.is_finite()))
        {
            return Err(Error::NonFinite("field samples"));
        }
        Ok(Self {
            grid,
            samples,
            time,
        })
    }

    /// Samples `f(x_j)` at the grid points.
    pub fn from_fn(grid: Arc<Grid1D>, time: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let samples = grid.positions().into_iter().map(f).collect();
        Self::new(grid, samples, time)
    }

    pub fn zeros(grid: Arc<Grid1D>, time: f64) -> Self {
        let n = grid.n();
        Self {
            grid,
            samples: vec![Complex64::new(0.0, 0.0); n],
            time,
        }
    }

    /// Inverse transform of a DC-first spectrum.
    pub fn from_spectrum(grid: Arc<Grid1D>, spectrum: &[Complex64], time: f64) -> Result<Self> {
        if spectrum.len() != grid.n() {
            return Err(Error::SampleCount {
                expected: grid.n(),
                got: spectrum.len(),
            });
        }
        let samples = grid.inverse(spectrum);
        Self::new(grid, samples, time)
    }

    // Internal constructor for values already known to be finite.
    pub(crate) fn from_parts(grid: Arc<Grid1D>, samples: Vec<Complex64>, time: f64) -> Self {
        debug_assert_eq!(samples.len(), grid.n());
        Self {
            grid,
            samples,
            time,
        }
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn spectrum(&self) -> Vec<Complex64> {
        self.grid.forward(&self.samples)
    }

    pub fn is_finite(&self) -> bool {
        self.samples
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self::from_parts(
            self.grid.clone(),
            self.samples.iter().map(|&s| s * c).collect(),
            self.time,
        )
    }

    pub fn conj(&self) -> Self {
        Self::from_parts(
            self.grid.clone(),
            self.samples.iter().map(|s| s.conj()).collect(),
            self.time,
        )
    }

    /// `a·self + b·other`; the time stamp of `self` is kept.
    pub fn combine(&self, a: Complex64, other: &ComplexField, b: Complex64) -> Result<Self> {
        if *self.grid != *other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self::from_parts(
            self.grid.clone(),
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(&u, &v)| a * u + b * v)
                .collect(),
            self.time,
        ))
    }

    pub fn sub(&self, other: &ComplexField) -> Result<Self> {
        self.combine(Complex64::new(1.0, 0.0), other, Complex64::new(-1.0, 0.0))
    }

    /// Cyclic shift by `cells` grid points (positive moves mass to the right).
    pub fn shifted(&self, cells: isize) -> Self {
        let n = self.samples.len() as isize;
        let samples = (0..n)
            .map(|j| self.samples[(j - cells).rem_euclid(n) as usize])
            .collect();
        Self::from_parts(self.grid.clone(), samples, self.time)
    }

    /// Spectral-tail indicator `‖P_{>k_max/2} u‖₂ / ‖u‖₂` with a sharp cutoff
    /// at half the Nyquist wavenumber. Zero for the zero field.
    pub fn spectral_tail(&self) -> f64 {
        spectral_tail_of(&self.grid, &self.spectrum())
    }

    /// Boundary-mass indicator `‖u‖_{L²(|x| > L/4)} / ‖u‖₂`.
    pub fn boundary_mass(&self) -> f64 {
        let quarter = 0.25 * self.grid.length();
        let (mut outer, mut total) = (0.0, 0.0);
        for (j, s) in self.samples.iter().enumerate() {
            let w = s.norm_sqr();
            total += w;
            if self.grid.position(j).abs() > quarter {
                outer += w;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            (outer / total).sqrt()
        }
    }
}

pub(crate) fn spectral_tail_of(grid: &Grid1D, spectrum: &[Complex64]) -> f64 {
    let cut = 0.5 * grid.nyquist();
    let (mut tail, mut total) = (0.0, 0.0);
    for (c, &k) in spectrum.iter().zip(grid.wavenumbers()) {
        let w = c.norm_sqr();
        total += w;
        if k.abs() > cut {
            tail += w;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        (tail / total).sqrt()
    }
}

type Evaluator = dyn Fn(f64) -> Complex64 + Send + Sync;

/// A Fourier multiplier: a map from angular wavenumber to a complex value.
#[derive(Clone)]
pub struct SymbolSpec {
    name: String,
    order: Option<f64>,
    eval: Arc<Evaluator>,
}

impl fmt::Debug for SymbolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymbolSpec")
            .field("name", &self.name)
            .field("order", &self.order)
            .finish()
    }
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `|k|^s` with `|0|^0 = 1`, `|0|^s = 0` for `s > 0` and `+∞` for `s < 0`.
pub fn homogeneous_weight(k: f64, s: f64) -> f64 {
    if k == 0.0 {
        if s == 0.0 {
            1.0
        } else if s > 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        k.abs().powf(s)
    }
}

impl SymbolSpec {
    pub fn new(
        name: impl Into<String>,
        order: Option<f64>,
        eval: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            order,
            eval: Arc::new(eval),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> Option<f64> {
        self.order
    }

    pub fn eval(&self, k: f64) -> Complex64 {
        (self.eval)(k)
    }

    pub fn identity() -> Self {
        Self::new("1", Some(0.0), |_| real(1.0))
    }

    /// `|∇|^s`.
    pub fn homogeneous(s: f64) -> Self {
        Self::new(format!("|k|^{s}"), Some(s), move |k| {
            real(homogeneous_weight(k, s))
        })
    }

    /// `⟨∇⟩^s = (1 + |∇|²)^{s/2}`.
    pub fn bessel(s: f64) -> Self {
        Self::new(format!("<k>^{s}"), Some(s), move |k| {
            real((1.0 + k * k).powf(0.5 * s))
        })
    }

    /// `∂_x`, i.e. multiplication by `ik`.
    pub fn derivative() -> Self {
        Self::new("ik", Some(1.0), |k| Complex64::new(0.0, k))
    }

    /// Free Schrödinger phase `e^{-itk²}` (the multiplier of `e^{itΔ}`).
    pub fn free_phase(t: f64) -> Self {
        Self::new(format!("exp(-i{t}k^2)"), None, move |k| {
            Complex64::from_polar(1.0, -t * k * k)
        })
    }

    pub fn littlewood_paley(n_scale: f64, mode: LpMode) -> Self {
        let name = format!("{mode:?}({n_scale})");
        Self::new(name, Some(0.0), move |k| real(mode.multiplier(k, n_scale)))
    }

    /// Pointwise product; the second factor is not evaluated where the first
    /// vanishes, so `P_N · |∇|^{-s}` is well defined at `k = 0`.
    pub fn product(a: &SymbolSpec, b: &SymbolSpec) -> Self {
        let order = match (a.order, b.order) {
            (Some(x), Some(y)) => Some(x + y),
            _ => None,
        };
        let (fa, fb) = (a.eval.clone(), b.eval.clone());
        Self::new(format!("{}*{}", a.name, b.name), order, move |k| {
            let va = fa(k);
            if va == Complex64::new(0.0, 0.0) {
                va
            } else {
                va * fb(k)
            }
        })
    }
}

/// The Littlewood–Paley bump `φ`: one on `[0,1]`, zero on `[2,∞)` and
/// `cos²(π(ρ-1)/2)` in between. `C¹`, and `φ + (1-φ) = 1` holds exactly.
#[derive(Clone, Copy, Debug, Default)]
pub struct LpBump;

impl LpBump {
    pub const DESCRIPTION: &'static str = "phi(r)=1 (r<=1), cos^2(pi(r-1)/2) (1<r<2), 0 (r>=2)";

    pub fn profile(rho: f64) -> f64 {
        let rho = rho.abs();
        if rho <= 1.0 {
            1.0
        } else if rho >= 2.0 {
            0.0
        } else {
            let c = (0.5 * PI * (rho - 1.0)).cos();
            c * c
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LpMode {
    /// `P_N`: `φ(k/N) - φ(2k/N)`.
    AtN,
    /// `P_{≤N}`: `φ(k/N)`.
    LeqN,
    /// `P_{>N}`: `1 - φ(k/N)`.
    GtN,
}

impl LpMode {
    pub fn multiplier(self, k: f64, n_scale: f64) -> f64 {
        let rho = k.abs() / n_scale;
        match self {
            LpMode::AtN => LpBump::profile(rho) - LpBump::profile(2.0 * rho),
            LpMode::LeqN => LpBump::profile(rho),
            LpMode::GtN => 1.0 - LpBump::profile(rho),
        }
    }
}

/// Inverse DFT of `symbol(k_j) · DFT(field)_j`; the time stamp is kept.
pub fn apply_symbol(field: &ComplexField, symbol: &SymbolSpec) -> Result<ComplexField> {
    let grid = field.grid();
    let mut spec = field.spectrum();
    for (c, &k) in spec.iter_mut().zip(grid.wavenumbers()) {
        let m = symbol.eval(k);
        if !(m.re.is_finite() && m.im.is_finite()) {
            return Err(Error::SymbolNotFinite {
                name: symbol.name().to_string(),
                k,
            });
        }
        *c *= m;
    }
    grid.inverse_in_place(&mut spec);
    ComplexField::new(grid.clone(), spec, field.time())
}

pub fn lp_project(field: &ComplexField, n_scale: f64, mode: LpMode) -> Result<ComplexField> {
    if !(n_scale.is_finite() && n_scale > 0.0) {
        return Err(invalid("N", format!("must be positive, got {n_scale}")));
    }
    apply_symbol(field, &SymbolSpec::littlewood_paley(n_scale, mode))
}

/// `‖|∇|^s u‖₂` (homogeneous) or `‖⟨∇⟩^s u‖₂`, Plancherel normalised so that
/// `s = 0` reproduces the rectangle-rule `L²` norm.
pub fn sobolev_norm(field: &ComplexField, s: f64, homogeneous: bool) -> Result<f64> {
    let spec = field.spectrum();
    sobolev_norm_of_spectrum(field.grid(), &spec, s, homogeneous)
}

pub(crate) fn sobolev_norm_of_spectrum(
    grid: &Grid1D,
    spec: &[Complex64],
    s: f64,
    homogeneous: bool,
) -> Result<f64> {
    if !s.is_finite() {
        return Err(invalid("s", "must be finite"));
    }
    let mut acc = 0.0;
    if homogeneous && s < 0.0 {
        let total: f64 = spec.iter().map(|c| c.norm_sqr()).sum();
        if spec[0].norm_sqr() > 1e-24 * total {
            return Err(Error::NonzeroMean { s });
        }
    }
    for (c, &k) in spec.iter().zip(grid.wavenumbers()) {
        let w = if homogeneous {
            if k == 0.0 {
                if s == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                k.abs().powf(2.0 * s)
            }
        } else {
            (1.0 + k * k).powf(s)
        };
        acc += w * c.norm_sqr();
    }
    Ok((acc * grid.dx() / grid.n() as f64).sqrt())
}

/// Rectangle-rule `L^r` norm; `r = ∞` returns `max |u_j|`.
pub fn lebesgue_norm(field: &ComplexField, r: f64) -> Result<f64> {
    lebesgue_norm_of(field.samples(), field.grid().dx(), r)
}

pub(crate) fn lebesgue_norm_of(samples: &[Complex64], dx: f64, r: f64) -> Result<f64> {
    if r.is_nan() || r < 1.0 {
        return Err(invalid("r", format!("exponent must be >= 1, got {r}")));
    }
    if r.is_infinite() {
        return Ok(samples.iter().map(|c| c.norm()).fold(0.0, f64::max));
    }
    let sum: f64 = if r == 2.0 {
        samples.iter().map(|c| c.norm_sqr()).sum()
    } else {
        samples.iter().map(|c| c.norm_sqr().powf(0.5 * r)).sum()
    };
    Ok((sum * dx).powf(1.0 / r))
}

/// LHS/RHS ratios for the Bernstein family at one dyadic scale. `None`
/// marks a 0/0 comparison (e.g. an empty frequency band), which is skipped.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BernsteinReport {
    pub n_scale: f64,
    pub s: f64,
    pub p: f64,
    pub q: f64,
    /// `‖P_{≥N} f‖_p / (N^{-s} ‖|∇|^s P_{≥N} f‖_p)`
    pub high_frequency: Option<f64>,
    /// `‖|∇|^s P_{≤N} f‖_p / (N^s ‖P_{≤N} f‖_p)`
    pub low_frequency: Option<f64>,
    /// `‖|∇|^s P_N f‖_p / (N^s ‖P_N f‖_p)`
    pub annulus: Option<f64>,
    /// `‖|∇|^{-s} P_N f‖_p / (N^{-s} ‖P_N f‖_p)`
    pub annulus_inverse: Option<f64>,
    /// `‖P_{≤N} f‖_q / (N^{1/p-1/q} ‖P_{≤N} f‖_p)`
    pub low_frequency_sobolev: Option<f64>,
    /// `‖P_N f‖_q / (N^{1/p-1/q} ‖P_N f‖_p)`
    pub annulus_sobolev: Option<f64>,
}

impl BernsteinReport {
    /// The present ratios as `(label, value)` pairs.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        [
            ("high_frequency", self.high_frequency),
            ("low_frequency", self.low_frequency),
            ("annulus", self.annulus),
            ("annulus_inverse", self.annulus_inverse),
            ("low_frequency_sobolev", self.low_frequency_sobolev),
            ("annulus_sobolev", self.annulus_sobolev),
        ]
        .into_iter()
        .filter_map(|(name, v)| v.map(|v| (name, v)))
        .collect()
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    // Both sides vanish up to roundoff: nothing to compare.
    if den <= 1e-300 && num <= 1e-300 {
        None
    } else if den <= 1e-300 {
        Some(f64::INFINITY)
    } else {
        Some(num / den)
    }
}

/// Evaluates both sides of the Bernstein inequalities for `field` at scale
/// `n_scale`. `P_{≥N}` is realised as `P_{>N/2}` so that its support is
/// `|k| ≥ N/2`.
pub fn bernstein_audit(
    field: &ComplexField,
    n_scale: f64,
    s: f64,
    p: f64,
    q: f64,
) -> Result<BernsteinReport> {
    if !(n_scale.is_finite() && n_scale > 0.0) {
        return Err(invalid("N", format!("must be positive, got {n_scale}")));
    }
    if !(s.is_finite() && s > 0.0) {
        return Err(invalid("s", format!("must be positive, got {s}")));
    }
    if p.is_nan() || q.is_nan() || p < 1.0 || q < p {
        return Err(invalid(
            "p, q",
            format!("need 1 <= p <= q, got p={p}, q={q}"),
        ));
    }
    let high = lp_project(field, 0.5 * n_scale, LpMode::GtN)?;
    let low = lp_project(field, n_scale, LpMode::LeqN)?;
    let band = lp_project(field, n_scale, LpMode::AtN)?;
    let deriv = SymbolSpec::homogeneous(s);
    let antideriv = SymbolSpec::product(
        &SymbolSpec::littlewood_paley(n_scale, LpMode::AtN),
        &SymbolSpec::homogeneous(-s),
    );
    let norm = |f: &ComplexField, r: f64| lebesgue_norm(f, r);
    let sobolev_gain = n_scale.powf(1.0 / p - if q.is_infinite() { 0.0 } else { 1.0 / q });

    let high_norm = norm(&high, p)?;
    let low_norm = norm(&low, p)?;
    let band_norm = norm(&band, p)?;
    Ok(BernsteinReport {
        n_scale,
        s,
        p,
        q,
        high_frequency: ratio(
            high_norm,
            n_scale.powf(-s) * norm(&apply_symbol(&high, &deriv)?, p)?,
        ),
        low_frequency: ratio(
            norm(&apply_symbol(&low, &deriv)?, p)?,
            n_scale.powf(s) * low_norm,
        ),
        annulus: ratio(
            norm(&apply_symbol(&band, &deriv)?, p)?,
            n_scale.powf(s) * band_norm,
        ),
        annulus_inverse: ratio(
            norm(&apply_symbol(field, &antideriv)?, p)?,
            n_scale.powf(-s) * band_norm,
        ),
        low_frequency_sobolev: ratio(norm(&low, q)?, sobolev_gain * low_norm),
        annulus_sobolev: ratio(norm(&band, q)?, sobolev_gain * band_norm),
    })
}

/// Evaluates the trigonometric interpolant of `field`, truncated to
/// `|k| <= cutoff`, and its derivative at arbitrary points. The Nyquist mode
/// (if retained) enters as a cosine so real data interpolate to real values.
pub fn band_limited_samples(
    field: &ComplexField,
    points: &[f64],
    cutoff: f64,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let grid = field.grid();
    let n = grid.n();
    let spec = field.spectrum();
    let nyq = n / 2;
    let modes: Vec<(f64, Complex64, bool)> = spec
        .iter()
        .zip(grid.wavenumbers())
        .enumerate()
        .filter(|(_, (_, &k))| k.abs() <= cutoff)
        .map(|(j, (&c, &k))| (k, c / n as f64, j == nyq))
        .collect();
    let x0 = grid.origin();
    let mut values = Vec::with_capacity(points.len());
    let mut derivs = Vec::with_capacity(points.len());
    for &x in points {
        let (mut v, mut d) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for &(k, c, is_nyq) in &modes {
            let arg = k * (x - x0);
            if is_nyq {
                v += c * arg.cos();
                d += c * (-k * arg.sin());
            } else {
                let e = Complex64::from_polar(1.0, arg);
                v += c * e;
                d += c * Complex64::new(0.0, k) * e;
            }
        }
        values.push(v);
        derivs.push(d);
    }
    (values, derivs)
}
