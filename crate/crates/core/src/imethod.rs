//! The smoothing operator `I_N`, the modified energy `E(I_N u)`, the scaling
//! map `u ↦ u^λ` and the almost-conservation sweep.

use std::f64::consts::LN_2;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{evolve, DiagnosticsRequest, SolverConfig};
use crate::error::{invalid, Error, Result};
use crate::functionals::{energy, slab_norm};
use crate::spectral::{
    apply_symbol, lp_project, sobolev_norm, ComplexField, Grid1D, LpMode, SymbolSpec,
};

/// `m_N(ξ)`: 1 for `|ξ| ≤ N`, `(|ξ|/N)^{s-1}` for `|ξ| ≥ 2N`.
///
/// On the transition band, with `τ = log₂(|ξ|/N) ∈ (0, 1)`,
/// `log m = (s-1) ln2 ∫₀^τ g`, where `g` is the trapezoid that rises
/// linearly from 0 to `G` on `[0, ε]`, stays at `G` and then moves linearly
/// to 1 on `[1-ε, 1]`; `ε = min(s, 1/2)` and `G = (1-ε/2)/(1-ε)` so that
/// `∫₀¹ g = 1`. The result is C¹, decreasing, and `|ξ| m_N(ξ)` is
/// nondecreasing because `g ≤ 1/(1-s)`.
pub fn m_symbol(xi: f64, n_scale: f64, s: f64) -> f64 {
    let rho = xi.abs() / n_scale;
    if rho <= 1.0 {
        return 1.0;
    }
    if rho >= 2.0 {
        return rho.powf(s - 1.0);
    }
    let tau = rho.log2();
    let eps = s.min(0.5);
    let g = (1.0 - 0.5 * eps) / (1.0 - eps);
    let area = if tau <= eps {
        g * tau * tau / (2.0 * eps)
    } else if tau <= 1.0 - eps {
        g * (0.5 * eps + tau - eps)
    } else {
        let d = tau - (1.0 - eps);
        g * (0.5 * eps + 1.0 - 2.0 * eps + d) + (1.0 - g) * d * d / (2.0 * eps)
    };
    ((s - 1.0) * LN_2 * area).exp()
}

/// `I_N` with `Î_N u(ξ) = m_N(ξ) û(ξ)`.
#[derive(Clone, Debug)]
pub struct IMultiplier {
    n_scale: f64,
    s: f64,
    symbol: SymbolSpec,
}

impl IMultiplier {
    pub fn new(n_scale: f64, s: f64) -> Result<Self> {
        if !(n_scale.is_finite() && n_scale > 1.0) {
            return Err(invalid("N", format!("must exceed 1, got {n_scale}")));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(invalid("s", format!("must lie in (0, 1), got {s}")));
        }
        let symbol = SymbolSpec::new(format!("m_N(N={n_scale}, s={s})"), None, move |k| {
            Complex64::new(m_symbol(k, n_scale, s), 0.0)
        });
        Ok(Self { n_scale, s, symbol })
    }

    pub fn n_scale(&self) -> f64 {
        self.n_scale
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn symbol(&self) -> &SymbolSpec {
        &self.symbol
    }
}

pub fn apply_i(field: &ComplexField, im: &IMultiplier) -> ComplexField {
    apply_symbol(field, &im.symbol).expect("m_N is finite")
}

/// LHS/RHS ratios of the basic `I_N` estimates at `p = 2`; `None` marks a
/// 0/0 comparison.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct IPropertyReport {
    pub n_scale: f64,
    pub s: f64,
    pub sigma: f64,
    /// `‖If‖₂ / ‖f‖₂`
    pub i1: Option<f64>,
    /// `‖|∇|^σ P_{>N} f‖₂ / (N^{σ-1} ‖∇If‖₂)`
    pub i2: Option<f64>,
    /// `‖f‖_{H^s} / ‖If‖_{H¹}`
    pub i3_lower: Option<f64>,
    /// `‖If‖_{H¹} / (N^{1-s} ‖f‖_{H^s})`
    pub i3_upper: Option<f64>,
    /// `‖If‖_{Ḣ¹} / (N^{1-s} ‖f‖_{Ḣ^s})`
    pub i4: Option<f64>,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    if num <= 1e-300 && den <= 1e-300 {
        None
    } else if den <= 1e-300 {
        Some(f64::INFINITY)
    } else {
        Some(num / den)
    }
}

pub fn i_property_audit(
    field: &ComplexField,
    im: &IMultiplier,
    sigma: f64,
) -> Result<IPropertyReport> {
    let (n, s) = (im.n_scale, im.s);
    if !(sigma >= 0.0 && sigma <= s) {
        return Err(invalid(
            "sigma",
            format!("need 0 <= sigma <= s = {s}, got {sigma}"),
        ));
    }
    let i_f = apply_i(field, im);
    let high = lp_project(field, n, LpMode::GtN)?;
    let l2 = |f: &ComplexField| sobolev_norm(f, 0.0, true);
    Ok(IPropertyReport {
        n_scale: n,
        s,
        sigma,
        i1: ratio(l2(&i_f)?, l2(field)?),
        i2: ratio(
            sobolev_norm(&high, sigma, true)?,
            n.powf(sigma - 1.0) * sobolev_norm(&i_f, 1.0, true)?,
        ),
        i3_lower: ratio(
            sobolev_norm(field, s, false)?,
            sobolev_norm(&i_f, 1.0, false)?,
        ),
        i3_upper: ratio(
            sobolev_norm(&i_f, 1.0, false)?,
            n.powf(1.0 - s) * sobolev_norm(field, s, false)?,
        ),
        i4: ratio(
            sobolev_norm(&i_f, 1.0, true)?,
            n.powf(1.0 - s) * sobolev_norm(field, s, true)?,
        ),
    })
}

/// `E(I_N u)` for the nonlinearity `|u|^{2p} u`.
pub fn modified_energy(field: &ComplexField, im: &IMultiplier, p: f64) -> f64 {
    energy(&apply_i(field, im), p).total
}

/// Parameters of `u^λ(t, x) = λ^{-1/p} u(λ^{-2}t, λ^{-1}x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RescaleParams {
    pub lambda: f64,
    /// Nonlinearity exponent (`k` for `|u|^{2k}u`).
    pub p: f64,
    /// Largest admissible point count of the enlarged grid.
    pub max_points: usize,
}

pub const DEFAULT_MAX_POINTS: usize = 1 << 22;

impl RescaleParams {
    pub fn new(lambda: f64, p: f64) -> Result<Self> {
        let rp = Self {
            lambda,
            p,
            max_points: DEFAULT_MAX_POINTS,
        };
        rp.validate()?;
        Ok(rp)
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda >= 1.0 && self.lambda.is_finite()) {
            return Err(invalid(
                "lambda",
                format!("must be >= 1, got {}", self.lambda),
            ));
        }
        let int = self.lambda.round();
        if int != self.lambda || !(int as u64).is_power_of_two() {
            return Err(invalid(
                "lambda",
                format!(
                    "must be a power of two to keep the spacing, got {}",
                    self.lambda
                ),
            ));
        }
        if !(self.p.is_finite() && self.p > 0.0) {
            return Err(invalid("p", format!("must be positive, got {}", self.p)));
        }
        Ok(())
    }
}

/// `u^λ(x) = λ^{-1/p} u(x/λ)` on the grid of length `λL` with `λn` points
/// (same spacing), by zero-padded trigonometric interpolation. The time
/// stamp is multiplied by `λ²`.
pub fn rescale(field: &ComplexField, rp: &RescaleParams) -> Result<ComplexField> {
    rp.validate()?;
    let grid = field.grid();
    let lam = rp.lambda as usize;
    if lam == 1 {
        return Ok(field.clone());
    }
    let n = grid.n();
    let big = n
        .checked_mul(lam)
        .filter(|&m| m <= rp.max_points)
        .ok_or(Error::OverBudget {
            points: n as u128 * lam as u128,
            budget: rp.max_points as u128,
        })?;
    let spec = field.spectrum();
    let mut padded = vec![Complex64::new(0.0, 0.0); big];
    let half = n / 2;
    padded[..half].copy_from_slice(&spec[..half]);
    padded[big - half + 1..].copy_from_slice(&spec[half + 1..]);
    // Split the Nyquist coefficient between ±k so real data stay real.
    padded[half] = 0.5 * spec[half];
    padded[big - half] = 0.5 * spec[half];
    // Samples of the padded inverse sit at x0 + m dx/λ on the original cell,
    // which is x/λ for the node x = -λL/2 + m dx of the enlarged grid.
    let fine = Grid1D::new(grid.length(), big)?;
    let amp = rp.lambda.powf(-1.0 / rp.p) * (big as f64 / n as f64);
    let mut samples = fine.inverse(&padded);
    samples.iter_mut().for_each(|c| *c *= amp);
    let out_grid = Grid1D::new(grid.length() * rp.lambda, big)?;
    ComplexField::new(out_grid, samples, field.time() * rp.lambda * rp.lambda)
}

/// Critical index `s_c = 1/2 - 1/p`.
pub fn critical_index(p: f64) -> f64 {
    0.5 - 1.0 / p
}

/// Values of the two smallness constraints at `λ`:
/// `N^{1-s} λ^{1/2-1/p-s} ‖u₀‖_{H^s}` and `λ^{1/(2p+2)-1/p} ‖u₀‖_{H^s}`.
pub fn lambda_constraints(lambda: f64, hs_norm: f64, n_scale: f64, s: f64, p: f64) -> (f64, f64) {
    (
        n_scale.powf(1.0 - s) * lambda.powf(0.5 - 1.0 / p - s) * hs_norm,
        lambda.powf(1.0 / (2.0 * p + 2.0) - 1.0 / p) * hs_norm,
    )
}

/// Smallest power of two `λ` with both [`lambda_constraints`] at most `eta`.
pub fn lambda_for_small_energy(
    hs_norm: f64,
    n_scale: f64,
    s: f64,
    p: f64,
    eta: f64,
) -> Result<f64> {
    if s <= critical_index(p) {
        return Err(Error::Infeasible(format!(
            "s = {s} must exceed the critical index {} for rescaling to help",
            critical_index(p)
        )));
    }
    if !(eta > 0.0 && hs_norm >= 0.0 && hs_norm.is_finite()) {
        return Err(invalid("eta", "need eta > 0 and a finite norm"));
    }
    let mut lambda = 1.0f64;
    for _ in 0..1024 {
        let (a, b) = lambda_constraints(lambda, hs_norm, n_scale, s, p);
        if a <= eta && b <= eta {
            return Ok(lambda);
        }
        lambda *= 2.0;
    }
    Err(Error::Infeasible("no lambda below 2^1024".into()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepOptions {
    pub s: f64,
    /// Smallness level recorded for the slab `L⁸` norm.
    pub eta: f64,
    /// Inclusion requires `increment > floor_factor × noise`.
    pub floor_factor: f64,
    /// Records between modified-energy samples follow `cfg.diag_stride`.
    pub max_points: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            s: 0.7,
            eta: 0.1,
            floor_factor: 10.0,
            max_points: DEFAULT_MAX_POINTS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: f64,
    pub lambda: f64,
    /// `E(I_N u(0))`
    pub e0: f64,
    /// `sup_t E(I_N u(t))`
    pub sup_e: f64,
    pub increment: f64,
    pub noise_floor: f64,
    pub included_in_fit: bool,
    /// `‖u‖_{L⁸_{t,x}}` over the run.
    pub l8_norm: f64,
    /// Relative drift of the unmodified energy.
    pub energy_drift: f64,
    /// The rescaling rule's `λ` for `η`, for reference.
    pub eta_rule_lambda: Option<f64>,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str = "N,lambda,E0,sup_E,increment,noise_floor,included_in_fit";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:e},{:e},{:e},{:e},{}",
            self.n,
            self.lambda,
            self.e0,
            self.sup_e,
            self.increment,
            self.noise_floor,
            self.included_in_fit
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `log inc` against `log N` over included rows.
    pub slope: Option<f64>,
    pub slope_stderr: Option<f64>,
    pub included: usize,
    pub eta: f64,
    /// Whether every run's `L⁸_{t,x}` norm stayed below `eta`.
    pub eta_satisfied: bool,
    pub s: f64,
}

/// Least-squares line through `(x, y)`; returns `(slope, stderr)`.
pub fn fit_line(points: &[(f64, f64)]) -> Option<(f64, Option<f64>)> {
    let m = points.len();
    if m < 2 {
        return None;
    }
    let mf = m as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / mf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / mf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let stderr = (m > 2).then(|| {
        let rss: f64 = points
            .iter()
            .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
            .sum();
        (rss / (mf - 2.0) / sxx).sqrt()
    });
    Some((slope, stderr))
}

fn sup_increment(values: &[f64]) -> (f64, f64, f64) {
    let e0 = values[0];
    let sup = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (e0, sup, sup - e0)
}

/// For each `N`: picks the smallest power-of-two `λ` with
/// `E(I_N u₀^λ) ≤ 1`, evolves `u₀^λ` to `λ²T`, and records
/// `inc(N) = sup_t E(I_N u(t)) - E(I_N u₀)`. The noise floor of each row is
/// `floor_factor` times the larger of the linear-flow control increment and
/// the drift of the unmodified energy; rows at or below it are excluded from
/// the fit. Rows run in parallel and are returned in `n_list` order.
pub fn increment_sweep(
    u0: &ComplexField,
    p: f64,
    n_list: &[f64],
    cfg: &SolverConfig,
    opts: &SweepOptions,
) -> Result<SweepReport> {
    if n_list.is_empty() {
        return Err(invalid("N_list", "must not be empty"));
    }
    cfg.validate()?;
    let hs = sobolev_norm(u0, opts.s, false)?;
    let rows = n_list
        .par_iter()
        .map(|&n| sweep_point(u0, p, n, hs, cfg, opts))
        .collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.included_in_fit)
        .map(|r| (r.n.ln(), r.increment.ln()))
        .collect();
    let fit = fit_line(&pts);
    Ok(SweepReport {
        eta_satisfied: rows.iter().all(|r| r.l8_norm <= opts.eta),
        included: pts.len(),
        slope: fit.map(|f| f.0),
        slope_stderr: fit.and_then(|f| f.1),
        rows,
        eta: opts.eta,
        s: opts.s,
    })
}

fn sweep_point(
    u0: &ComplexField,
    p: f64,
    n: f64,
    hs: f64,
    cfg: &SolverConfig,
    opts: &SweepOptions,
) -> Result<SweepRow> {
    let im = IMultiplier::new(n, opts.s)?;
    let mut lambda = 1.0;
    let mut data: ComplexField = u0.clone();
    while modified_energy(&data, &im, p) > 1.0 {
        lambda *= 2.0;
        let rp = RescaleParams {
            lambda,
            p,
            max_points: opts.max_points,
        };
        data = rescale(u0, &rp)?;
    }
    let scaled_cfg = SolverConfig {
        t_final: cfg.t_final * lambda * lambda,
        ..cfg.clone()
    };
    let request = DiagnosticsRequest {
        modified_energy: Some(im.clone()),
        ..Default::default()
    };
    let traj = evolve(&data, &scaled_cfg, &request)?;
    let me: Vec<f64> = traj
        .records()
        .iter()
        .map(|r| r.modified_energy.unwrap_or(0.0))
        .collect();
    let (e0, sup_e, increment) = sup_increment(&me);

    let control_cfg = SolverConfig {
        nonlinearity: crate::dynamics::Nonlinearity::Free,
        ..scaled_cfg.clone()
    };
    let control = evolve(&data, &control_cfg, &request)?;
    let cme: Vec<f64> = control
        .records()
        .iter()
        .map(|r| r.modified_energy.unwrap_or(0.0))
        .collect();
    let control_inc = sup_increment(&cme).2.abs();
    let e_first = traj.records()[0].energy;
    let drift_abs = traj
        .records()
        .iter()
        .map(|r| (r.energy - e_first).abs())
        .fold(0.0, f64::max);
    let noise_floor = opts.floor_factor * control_inc.max(drift_abs);
    let l8_norm = slab_norm(&traj, 8.0, 8.0)?;
    log::info!(
        "sweep N = {n}: lambda = {lambda}, inc = {increment:.3e}, floor = {noise_floor:.3e}"
    );
    Ok(SweepRow {
        n,
        lambda,
        e0,
        sup_e,
        increment,
        noise_floor,
        included_in_fit: increment > noise_floor && increment > 0.0,
        l8_norm,
        energy_drift: traj.relative_drift(|r| r.energy),
        eta_rule_lambda: lambda_for_small_energy(hs, n, opts.s, p, opts.eta).ok(),
    })
}

/// Helper for tests and experiments: a grid of the same spacing scaled by
/// `λ`.
pub fn rescaled_grid(grid: &Grid1D, lambda: usize) -> Result<Arc<Grid1D>> {
    Grid1D::new(grid.length() * lambda as f64, grid.n() * lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::mass;
    use crate::spectral::make_grid;

    #[test]
    fn m_symbol_branches() {
        assert_eq!(m_symbol(8.0, 16.0, 0.5), 1.0);
        assert!((m_symbol(64.0, 16.0, 0.5) - 0.5).abs() < 1e-15);
        let (a, b, c) = (
            m_symbol(16.0, 16.0, 0.3),
            m_symbol(24.0, 16.0, 0.3),
            m_symbol(32.0, 16.0, 0.3),
        );
        assert_eq!(a, 1.0);
        assert!(a >= b && b >= c);
        assert!((c - 2f64.powf(-0.7)).abs() < 1e-14);
    }

    #[test]
    fn m_symbol_is_c1_and_gradient_symbol_increases() {
        for &s in &[0.05, 0.2, 0.4, 0.5, 0.7, 0.95] {
            let n = 10.0;
            let h = 1e-4;
            let mut prev_m = 1.0;
            let mut prev_km = 0.0;
            for i in 0..=4000 {
                let xi = 4.0 * n * i as f64 / 4000.0;
                let m = m_symbol(xi, n, s);
                assert!(m <= prev_m + 1e-15, "s={s} xi={xi}");
                assert!(xi * m >= prev_km - 1e-12, "s={s} xi={xi}");
                prev_m = m;
                prev_km = xi * m;
            }
            for &edge in &[n, 2.0 * n] {
                let left = (m_symbol(edge, n, s) - m_symbol(edge - h, n, s)) / h;
                let right = (m_symbol(edge + h, n, s) - m_symbol(edge, n, s)) / h;
                assert!((left - right).abs() < 1e-3, "s={s} edge={edge}");
            }
        }
    }

    #[test]
    fn rescale_identities() {
        let g = make_grid(40.0, 256).unwrap();
        let u = ComplexField::from_fn(g, 0.3, |x| Complex64::from_polar((-x * x).exp(), 0.5 * x))
            .unwrap();
        let same = rescale(&u, &RescaleParams::new(1.0, 3.0).unwrap()).unwrap();
        assert_eq!(same.samples(), u.samples());
        for lam in [2.0, 4.0] {
            let v = rescale(&u, &RescaleParams::new(lam, 3.0).unwrap()).unwrap();
            assert_eq!(v.grid().n(), 256 * lam as usize);
            assert!((v.time() - 0.3 * lam * lam).abs() < 1e-14);
            let expect = lam.powf(1.0 - 2.0 / 3.0) * mass(&u);
            assert!(((mass(&v) - expect) / expect).abs() < 1e-12);
            // Pointwise: u^λ(λx) = λ^{-1/3} u(x) at the original nodes.
            let amp = lam.powf(-1.0 / 3.0);
            for j in 0..256 {
                let d = v.samples()[lam as usize * j] - amp * u.samples()[j];
                assert!(d.norm() < 1e-13);
            }
        }
        assert!(RescaleParams::new(3.0, 3.0).is_err());
        assert!(RescaleParams::new(0.5, 3.0).is_err());
    }

    #[test]
    fn lambda_rule() {
        let p = 3.0;
        let l = lambda_for_small_energy(2.0, 64.0, 0.7, p, 0.1).unwrap();
        let (a, b) = lambda_constraints(l, 2.0, 64.0, 0.7, p);
        assert!(a <= 0.1 && b <= 0.1);
        let (a, b) = lambda_constraints(l / 2.0, 2.0, 64.0, 0.7, p);
        assert!(a > 0.1 || b > 0.1);
        assert!(lambda_for_small_energy(200.0, 64.0, 0.7, p, 0.1).unwrap() > l);
        assert!(lambda_for_small_energy(2.0, 64.0, 0.1, p, 0.1).is_err());
    }

    #[test]
    fn fit_line_recovers_slope() {
        let pts: Vec<_> = (1..5).map(|i| (i as f64, 3.0 - 2.0 * i as f64)).collect();
        let (s, e) = fit_line(&pts).unwrap();
        assert!((s + 2.0).abs() < 1e-14);
        assert!(e.unwrap() < 1e-12);
    }
}
