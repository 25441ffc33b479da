//! Initial-data library and the seeded generator behind it.
//!
//! Randomness comes from ChaCha20 (`rand_chacha`, seeded with
//! `seed_from_u64`), turned into standard normals by the Box–Muller
//! transform: `u₁ = (a + 1)/2⁵³`, `u₂ = b/2⁵³` from the top 53 bits of two
//! consecutive `next_u64` draws, then `√(-2 ln u₁)(cos 2πu₂, sin 2πu₂)`.
//! Both pieces are fully specified, so streams are reproducible on any
//! platform or language.

use std::f64::consts::PI;
use std::sync::Arc;

use nls_core::dynamics::free_propagate;
use nls_core::spectral::{sobolev_norm, ComplexField, Grid1D};
use nls_core::Complex64;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::LabError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Gaussian,
    BoostedGaussian,
    RandomBand,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitialDataSpec {
    pub family: Family,
    /// Peak amplitude `A` (Gaussian families).
    pub amplitude: f64,
    /// Standard deviation `σ` of `A e^{-(x-x₀)²/(2σ²)}`.
    pub width: f64,
    pub center: f64,
    /// Boost `v` in `e^{ivx}` (boosted family only).
    pub velocity: f64,
    /// If positive, the profile is the free evolution by `-focus` of the
    /// Gaussian, so the linear flow refocuses it at `t = focus`.
    pub focus: f64,
    /// Wavenumber band `[k_lo, k_hi]` (random family).
    pub band: (f64, f64),
    /// `H^s` order and target norm (random family).
    pub hs_order: f64,
    pub hs_norm: f64,
    /// Width of the Gaussian envelope that localises random data.
    pub envelope: f64,
    pub seed: u64,
}

impl Default for InitialDataSpec {
    fn default() -> Self {
        Self {
            family: Family::Gaussian,
            amplitude: 1.0,
            width: std::f64::consts::FRAC_1_SQRT_2,
            center: 0.0,
            velocity: 0.0,
            focus: 0.0,
            band: (1.0, 4.0),
            hs_order: 1.0,
            hs_norm: 1.0,
            envelope: 1.5,
            seed: 0,
        }
    }
}

impl InitialDataSpec {
    pub fn gaussian(amplitude: f64, width: f64) -> Self {
        Self {
            amplitude,
            width,
            ..Self::default()
        }
    }

    pub fn boosted(amplitude: f64, width: f64, velocity: f64) -> Self {
        Self {
            family: Family::BoostedGaussian,
            amplitude,
            width,
            velocity,
            ..Self::default()
        }
    }

    pub fn random_band(k_lo: f64, k_hi: f64, hs_order: f64, hs_norm: f64, seed: u64) -> Self {
        Self {
            family: Family::RandomBand,
            band: (k_lo, k_hi),
            hs_order,
            hs_norm,
            seed,
            ..Self::default()
        }
    }

    /// Field-level validation; the error names the offending key.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        let positive = |key, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err((key, format!("must be positive, got {v}")))
            }
        };
        match self.family {
            Family::Gaussian | Family::BoostedGaussian => {
                if !self.amplitude.is_finite() || self.amplitude < 0.0 {
                    return Err(("data.amplitude", "must be non-negative".into()));
                }
                positive("data.width", self.width)?;
                if self.family == Family::Gaussian && self.velocity != 0.0 {
                    return Err((
                        "data.velocity",
                        "only boosted_gaussian takes a velocity".into(),
                    ));
                }
            }
            Family::RandomBand => {
                let (lo, hi) = self.band;
                if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
                    return Err((
                        "data.k_hi",
                        format!("need 0 <= k_lo < k_hi, got [{lo}, {hi}]"),
                    ));
                }
                positive("data.envelope", self.envelope)?;
                if !(self.hs_norm.is_finite() && self.hs_norm >= 0.0) {
                    return Err(("data.norm", "must be non-negative".into()));
                }
                if !self.hs_order.is_finite() {
                    return Err(("data.s", "must be finite".into()));
                }
            }
        }
        if !(self.focus.is_finite() && self.focus >= 0.0) {
            return Err(("data.focus", "must be non-negative".into()));
        }
        if !self.center.is_finite() {
            return Err(("data.center", "must be finite".into()));
        }
        Ok(())
    }
}

/// Standard normal pairs from a ChaCha20 stream.
pub struct NormalStream {
    rng: ChaCha20Rng,
}

impl NormalStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn pair(&mut self) -> (f64, f64) {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        let u1 = ((self.rng.next_u64() >> 11) as f64 + 1.0) * SCALE;
        let u2 = (self.rng.next_u64() >> 11) as f64 * SCALE;
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        (r * c, r * s)
    }
}

/// Samples the requested family on `grid` at `t = 0`. Fails if more than
/// `1e-6` of the `L²` norm lies in `|x| > L/4`.
pub fn generate_initial_data(
    spec: &InitialDataSpec,
    grid: &Arc<Grid1D>,
) -> Result<ComplexField, LabError> {
    spec.validate()
        .map_err(|(k, m)| LabError::Data(format!("{k}: {m}")))?;
    let core = |e: nls_core::Error| LabError::Data(e.to_string());
    let mut field = match spec.family {
        Family::Gaussian | Family::BoostedGaussian => {
            let (a, x0, v) = (spec.amplitude, spec.center, spec.velocity);
            let inv = 1.0 / (2.0 * spec.width * spec.width);
            ComplexField::from_fn(grid.clone(), 0.0, |x| {
                let g = a * (-(x - x0) * (x - x0) * inv).exp();
                if v == 0.0 {
                    Complex64::new(g, 0.0)
                } else {
                    Complex64::from_polar(g, v * x)
                }
            })
            .map_err(core)?
        }
        Family::RandomBand => random_band(spec, grid)?,
    };
    if spec.focus > 0.0 {
        field = free_propagate(&field, -spec.focus).with_time(0.0);
    }
    let b = field.boundary_mass();
    if b >= 1e-6 {
        return Err(LabError::Data(format!(
            "boundary-mass indicator {b:.2e} >= 1e-6; increase grid.length"
        )));
    }
    Ok(field)
}

fn random_band(spec: &InitialDataSpec, grid: &Arc<Grid1D>) -> Result<ComplexField, LabError> {
    let core = |e: nls_core::Error| LabError::Data(e.to_string());
    let (lo, hi) = spec.band;
    let mut normals = NormalStream::new(spec.seed);
    // Modes are drawn in the grid-independent order m = 0, 1, -1, 2, -2, …
    // (k = 2πm/L), so refining n at fixed L reproduces the same function.
    let n = grid.n();
    let dk = 2.0 * PI / grid.length();
    let m_max = (hi / dk).floor() as i64;
    let mut spectrum = vec![Complex64::new(0.0, 0.0); n];
    for m in 0..=m_max {
        for m in if m == 0 { vec![0] } else { vec![m, -m] } {
            let (a, b) = normals.pair();
            let k = (m as f64 * dk).abs();
            let j = if m >= 0 { m } else { n as i64 + m };
            if k >= lo && k <= hi && m.unsigned_abs() < (n as u64).div_ceil(2) {
                spectrum[j as usize] = Complex64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2;
            }
        }
    }
    if spectrum.iter().all(|c| c.norm_sqr() == 0.0) {
        return Err(LabError::Data(format!(
            "no grid wavenumber lies in the band [{lo}, {hi}]"
        )));
    }
    let raw = ComplexField::from_spectrum(grid.clone(), &spectrum, 0.0).map_err(core)?;
    let inv = 1.0 / (2.0 * spec.envelope * spec.envelope);
    let samples = raw
        .samples()
        .iter()
        .enumerate()
        .map(|(j, u)| {
            let x = grid.position(j) - spec.center;
            u * (-x * x * inv).exp()
        })
        .collect();
    let shaped = ComplexField::new(grid.clone(), samples, 0.0).map_err(core)?;
    let norm = sobolev_norm(&shaped, spec.hs_order, false).map_err(core)?;
    Ok(shaped.scaled(Complex64::new(spec.hs_norm / norm, 0.0)))
}
