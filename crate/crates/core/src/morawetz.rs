//! The four-particle interaction Morawetz action
//!
//! ```text
//!     M_a(t) = 2 Im ∫_{R⁴} w̄ ∇_x[a(Ax)] · ∇_x w dx,   w(x) = u(x₁)u(x₂)u(x₃)u(x₄),
//! ```
//!
//! with the convex weight `a(z) = |(z₂, z₃, z₄)|` and the rotation `A` below.
//! Since `Im(w̄ ∂_{x_j} w) = J(x_j) ∏_{i≠j} ρ(x_i)` with `ρ = |u|²` and
//! `J = Im(ū u')`, the integrand is real and the 4D sum factorises into pair
//! tables, so one evaluation costs `O(n_sub⁴)` flops.
//!
//! The quadrature runs on an `n_sub`-point tensor grid covering a window
//! `[c - W, c + W)`. The window samples are taken from the trigonometric
//! interpolant of `u` truncated to the window grid's Nyquist wavenumber.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::Trajectory;
use crate::error::{invalid, Error, Result};
use crate::functionals::mass;
use crate::spectral::apply_symbol;
use crate::spectral::{band_limited_samples, sobolev_norm, ComplexField, Grid1D, SymbolSpec};

/// `A = ½[[1,1,1,1],[1,1,-1,-1],[1,-1,1,-1],[-1,1,1,-1]]`, stored as the
/// integer matrix `2A`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RotationMatrix;

impl RotationMatrix {
    pub const TWICE: [[i32; 4]; 4] = [[1, 1, 1, 1], [1, 1, -1, -1], [1, -1, 1, -1], [-1, 1, 1, -1]];

    pub fn entry(i: usize, j: usize) -> f64 {
        0.5 * Self::TWICE[i][j] as f64
    }

    /// `z = Ax`.
    pub fn apply(x: [f64; 4]) -> [f64; 4] {
        let mut z = [0.0; 4];
        for (i, zi) in z.iter_mut().enumerate() {
            *zi = (0..4).map(|j| Self::entry(i, j) * x[j]).sum();
        }
        z
    }

    /// `Aᵀ v`.
    pub fn apply_transpose(v: [f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (j, oj) in out.iter_mut().enumerate() {
            *oj = (0..4).map(|i| Self::entry(i, j) * v[i]).sum();
        }
        out
    }

    /// `(2A)ᵀ(2A)`, which equals `4I` exactly.
    pub fn gram_times_four() -> [[i32; 4]; 4] {
        let m = Self::TWICE;
        let mut g = [[0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                g[i][j] = (0..4).map(|r| m[r][i] * m[r][j]).sum();
            }
        }
        g
    }

    /// `det(2A)`; `|det A| = |det(2A)| / 16`.
    pub fn det_twice() -> i64 {
        let m: Vec<Vec<i64>> = Self::TWICE
            .iter()
            .map(|r| r.iter().map(|&v| v as i64).collect())
            .collect();
        det(&m)
    }
}

fn det(m: &[Vec<i64>]) -> i64 {
    if m.len() == 1 {
        return m[0][0];
    }
    (0..m.len())
        .map(|c| {
            let minor: Vec<Vec<i64>> = m[1..]
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|(j, _)| *j != c)
                        .map(|(_, &v)| v)
                        .collect()
                })
                .collect();
            let sign = if c % 2 == 0 { 1 } else { -1 };
            sign * m[0][c] * det(&minor)
        })
        .sum()
}

/// `∇a(z) = (0, z₂, z₃, z₄)/|z'|`, and the zero vector on `z' = 0`.
pub fn weight_gradient(z: [f64; 4]) -> [f64; 4] {
    let r = (z[1] * z[1] + z[2] * z[2] + z[3] * z[3]).sqrt();
    if r == 0.0 {
        [0.0; 4]
    } else {
        [0.0, z[1] / r, z[2] / r, z[3] / r]
    }
}

/// Treatment of the diagonal `x₁ = x₂ = x₃ = x₄` where `∇a` is undefined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum SingularPolicy {
    /// The integrand is set to zero there (it is bounded nearby).
    #[default]
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MorawetzConfig {
    /// Points per axis of the 4D tensor grid.
    pub n_sub: usize,
    /// Window half-width; `None` means a quarter of the domain length.
    pub window: Option<f64>,
    /// Window centre; `None` means the centre of mass of `|u|²`.
    pub center: Option<f64>,
    pub singular: SingularPolicy,
    /// Largest admissible `n_sub⁴`.
    pub budget: u128,
    /// Largest admissible relative `L²` loss of the window samples.
    pub loss_tolerance: f64,
}

pub const DEFAULT_N_SUB: usize = 48;
pub const DEFAULT_BUDGET: u128 = 1 << 26;

impl Default for MorawetzConfig {
    fn default() -> Self {
        Self {
            n_sub: DEFAULT_N_SUB,
            window: None,
            center: None,
            singular: SingularPolicy::Zero,
            budget: DEFAULT_BUDGET,
            loss_tolerance: 1e-4,
        }
    }
}

impl MorawetzConfig {
    pub fn with_n_sub(n_sub: usize) -> Self {
        Self {
            n_sub,
            ..Self::default()
        }
    }

    pub fn validate(&self, grid: &Grid1D) -> Result<()> {
        let points = (self.n_sub as u128).pow(4);
        if points > self.budget {
            return Err(Error::OverBudget {
                points,
                budget: self.budget,
            });
        }
        if self.n_sub < 4 || self.n_sub > grid.n() {
            return Err(invalid(
                "n_sub",
                format!("must lie in [4, {}], got {}", grid.n(), self.n_sub),
            ));
        }
        if let Some(w) = self.window {
            if !(w.is_finite() && w > 0.0 && w <= 0.5 * grid.length()) {
                return Err(invalid(
                    "window",
                    format!("half-width must lie in (0, L/2], got {w}"),
                ));
            }
        }
        if self.loss_tolerance.is_nan() || self.loss_tolerance <= 0.0 {
            return Err(invalid("loss_tolerance", "must be positive"));
        }
        Ok(())
    }

    fn half_width(&self, grid: &Grid1D) -> f64 {
        self.window.unwrap_or(0.25 * grid.length())
    }
}

/// Centre of mass `∫x|u|² / ∫|u|²` (0 for the zero field).
pub fn center_of_mass(field: &ComplexField) -> f64 {
    let grid = field.grid();
    let (mut m, mut mx) = (0.0, 0.0);
    for (j, u) in field.samples().iter().enumerate() {
        let w = u.norm_sqr();
        m += w;
        mx += w * grid.position(j);
    }
    if m == 0.0 {
        0.0
    } else {
        mx / m
    }
}

/// Window samples of `u` and `u'`, with positions relative to the centre.
pub(crate) struct WindowSamples {
    pub x: Vec<f64>,
    pub h: f64,
    pub u: Vec<num_complex::Complex64>,
    pub du: Vec<num_complex::Complex64>,
    pub loss: f64,
}

pub(crate) fn window_samples(field: &ComplexField, cfg: &MorawetzConfig) -> Result<WindowSamples> {
    let grid = field.grid();
    cfg.validate(grid)?;
    let w = cfg.half_width(grid);
    let c = cfg.center.unwrap_or_else(|| center_of_mass(field));
    let n = cfg.n_sub;
    let h = 2.0 * w / n as f64;
    let x: Vec<f64> = (0..n).map(|i| -w + i as f64 * h).collect();
    let abs: Vec<f64> = x.iter().map(|&xi| xi + c).collect();
    let cutoff = PI / h;
    let (u, du) = band_limited_samples(field, &abs, cutoff);
    let full = mass(field).sqrt();
    let sub = (u.iter().map(|v| v.norm_sqr()).sum::<f64>() * h).sqrt();
    let loss = if full == 0.0 {
        0.0
    } else {
        (full - sub).abs() / full
    };
    Ok(WindowSamples { x, h, u, du, loss })
}

fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// Tensor-grid quadrature of `2 Σ_j ∫ g_j J(x_j) ∏_{i≠j} ρ(x_i) dx⁴`.
fn quadrature(x: &[f64], rho: &[f64], cur: &[f64], h: f64) -> f64 {
    let n = x.len();
    // Pair tables indexed by (a, b) -> a * n + b.
    let mut s = vec![0.0; n * n];
    let mut d = vec![0.0; n * n];
    let mut rr = vec![0.0; n * n];
    let mut ja = vec![0.0; n * n];
    let mut jb = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            let i = a * n + b;
            s[i] = 0.5 * (x[a] + x[b]);
            d[i] = 0.5 * (x[a] - x[b]);
            rr[i] = rho[a] * rho[b];
            ja[i] = cur[a] * rho[b];
            jb[i] = rho[a] * cur[b];
        }
    }
    let partial: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|x1| {
            let mut acc = 0.0;
            for x2 in 0..n {
                let p = x1 * n + x2;
                let (s12, d12, a12, b1, b2) = (s[p], d[p], rr[p], ja[p], jb[p]);
                if a12 == 0.0 && b1 == 0.0 && b2 == 0.0 {
                    continue;
                }
                let mut inner = 0.0;
                for q in 0..n * n {
                    let z2 = s12 - s[q];
                    let z3 = d12 + d[q];
                    let z4 = d[q] - d12;
                    let r2 = z2 * z2 + z3 * z3 + z4 * z4;
                    if r2 == 0.0 {
                        continue;
                    }
                    let inv = 0.5 / r2.sqrt();
                    let g1 = (z2 + z3 - z4) * inv;
                    let g2 = (z2 - z3 + z4) * inv;
                    let g3 = (z3 + z4 - z2) * inv;
                    let g4 = -(z2 + z3 + z4) * inv;
                    inner += (g1 * b1 + g2 * b2) * rr[q] + (g3 * ja[q] + g4 * jb[q]) * a12;
                }
                acc += inner;
            }
            acc
        })
        .collect();
    2.0 * pairwise_sum(&partial) * h.powi(4)
}

/// `M_a` together with the relative `L²` loss of the window samples.
pub fn interaction_action_checked(
    field: &ComplexField,
    cfg: &MorawetzConfig,
) -> Result<(f64, f64)> {
    let ws = window_samples(field, cfg)?;
    if ws.loss > cfg.loss_tolerance {
        return Err(Error::DownsamplingLoss {
            loss: ws.loss,
            tol: cfg.loss_tolerance,
        });
    }
    let rho: Vec<f64> = ws.u.iter().map(|v| v.norm_sqr()).collect();
    let cur: Vec<f64> =
        ws.u.iter()
            .zip(&ws.du)
            .map(|(v, dv)| (v.conj() * dv).im)
            .collect();
    Ok((quadrature(&ws.x, &rho, &cur, ws.h), ws.loss))
}

/// The interaction Morawetz action `M_a` of one field.
pub fn interaction_action(field: &ComplexField, cfg: &MorawetzConfig) -> Result<f64> {
    interaction_action_checked(field, cfg).map(|(v, _)| v)
}

/// A priori size of `M_a`: since `|∇_x a(Ax)| ≤ 1`,
/// `|M_a| ≤ 2 M[u]³ ‖u‖₂ ‖u'‖₂`. Used to scale tolerances.
pub fn action_scale(field: &ComplexField) -> f64 {
    let m = mass(field);
    let du = apply_symbol(field, &SymbolSpec::derivative()).expect("finite symbol");
    2.0 * m.powi(3) * m.sqrt() * mass(&du).sqrt()
}

/// `|M_a| / (4 ‖u‖²_{Ḣ^{1/2}} ‖u‖₂⁶)`; zero for the zero field.
pub fn action_bound_ratio(field: &ComplexField, cfg: &MorawetzConfig) -> Result<f64> {
    let m = mass(field);
    if m == 0.0 {
        return Ok(0.0);
    }
    let hh = sobolev_norm(field, 0.5, true)?;
    let den = 4.0 * hh * hh * m.powi(3);
    let ma = interaction_action(field, cfg)?;
    Ok(if den == 0.0 { 0.0 } else { ma.abs() / den })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct IntegratedCheck {
    /// `M_a(T) - M_a(0)`
    pub action_change: f64,
    /// `8π ∫∫|u|⁸`
    pub lower_bound: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MonotonicityReport {
    /// Interior record times at which the defect is evaluated.
    pub t_samples: Vec<f64>,
    /// `M_a` at every record time.
    pub ma_values: Vec<f64>,
    /// `dM_a/dt - 8π ∫|u|⁸` at `t_samples`.
    pub defects: Vec<f64>,
    pub min_defect: f64,
    pub tol_mono: f64,
    /// `min_t (dM_a/dt) / ∫|u|⁸` over samples with nonzero `∫|u|⁸`.
    pub empirical_constant: Option<f64>,
    /// Finite-difference part of `tol_mono`.
    pub fd_tolerance: f64,
    /// Quadrature part of `tol_mono`.
    pub quadrature_tolerance: f64,
    pub integrated: IntegratedCheck,
    pub passed: bool,
}

/// Relative accuracy assumed for each `M_a` evaluation when forming
/// tolerances; matches the default downsampling-loss tolerance.
pub const DEFAULT_QUADRATURE_REL: f64 = 1e-4;

/// Checks `∂_t M_a ≥ 8π ∫|u|⁸` by central differences at interior records
/// (uniform record spacing required), and its integrated form.
///
/// `tol_mono = 5 Δt² S₃ + ε/Δt` where `S₃` is the largest third difference
/// quotient of `M_a` and `ε = quad_rel · max|M_a|` bounds the quadrature
/// error of each evaluation.
pub fn monotonicity_audit(traj: &Trajectory, quad_rel: f64) -> Result<MonotonicityReport> {
    let recs = traj.records();
    let ma: Vec<f64> = recs
        .iter()
        .map(|r| {
            r.morawetz_action
                .ok_or_else(|| Error::MissingSamples(format!("M_a at t = {}", r.t)))
        })
        .collect::<Result<_>>()?;
    if ma.len() < 3 {
        return Err(Error::MissingSamples(
            "M_a at three or more consecutive record times".into(),
        ));
    }
    let times: Vec<f64> = recs.iter().map(|r| r.t).collect();
    let dt = times[1] - times[0];
    if times
        .windows(2)
        .any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt)
    {
        return Err(Error::RefineSampling(
            "monotonicity audit needs uniformly spaced records".into(),
        ));
    }
    let l8: Vec<f64> = recs.iter().map(|r| r.l8_density).collect();

    let s3 = ma
        .windows(4)
        .map(|w| ((w[3] - 3.0 * w[2] + 3.0 * w[1] - w[0]) / dt.powi(3)).abs())
        .fold(0.0, f64::max);
    let eps = quad_rel * ma.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let fd_tolerance = 5.0 * dt * dt * s3;
    let quadrature_tolerance = eps / dt;
    let tol_mono = fd_tolerance + quadrature_tolerance;

    let mut t_samples = Vec::new();
    let mut defects = Vec::new();
    let mut constant: Option<f64> = None;
    for i in 1..ma.len() - 1 {
        let deriv = (ma[i + 1] - ma[i - 1]) / (2.0 * dt);
        t_samples.push(times[i]);
        defects.push(deriv - 8.0 * PI * l8[i]);
        if l8[i] > 0.0 {
            let c = deriv / l8[i];
            constant = Some(constant.map_or(c, |m: f64| m.min(c)));
        }
    }
    let min_defect = defects.iter().copied().fold(f64::INFINITY, f64::min);

    // Integrated form, with the time-quadrature error estimated by comparing
    // against the trapezoid rule on every other record.
    let fine = trapezoid(&times, &l8, 1);
    let coarse = if times.len() % 2 == 1 {
        trapezoid(&times, &l8, 2)
    } else {
        fine
    };
    let action_change = ma[ma.len() - 1] - ma[0];
    let lower_bound = 8.0 * PI * fine;
    let tolerance = 2.0 * eps + 8.0 * PI * (fine - coarse).abs();
    let integrated = IntegratedCheck {
        action_change,
        lower_bound,
        tolerance,
        passed: action_change >= lower_bound - tolerance,
    };
    let passed = min_defect >= -tol_mono && integrated.passed;
    Ok(MonotonicityReport {
        t_samples,
        ma_values: ma,
        defects,
        min_defect,
        tol_mono,
        empirical_constant: constant,
        fd_tolerance,
        quadrature_tolerance,
        integrated,
        passed,
    })
}

fn trapezoid(t: &[f64], f: &[f64], stride: usize) -> f64 {
    let idx: Vec<usize> = (0..t.len()).step_by(stride).collect();
    idx.windows(2)
        .map(|w| 0.5 * (t[w[1]] - t[w[0]]) * (f[w[1]] + f[w[0]]))
        .sum()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct IntegratedAudit {
    /// `∫∫|u|⁸ dx dt`
    pub spacetime_l8: f64,
    /// `sup_t ‖u(t)‖_{Ḣ^{1/2}}`
    pub sup_hhalf: f64,
    /// `M[u₀]`
    pub initial_mass: f64,
    /// `∫∫|u|⁸ / (sup_t ‖u‖²_{Ḣ^{1/2}} M[u₀]³)`; 0 for zero data.
    pub ratio: f64,
}

/// Compares the spacetime `L⁸` integral with `‖u‖²_{L^∞Ḣ^{1/2}} ‖u₀‖₂⁶`.
pub fn integrated_audit(traj: &Trajectory) -> IntegratedAudit {
    let recs = traj.records();
    let times: Vec<f64> = recs.iter().map(|r| r.t).collect();
    let l8: Vec<f64> = recs.iter().map(|r| r.l8_density).collect();
    let spacetime_l8 = trapezoid(&times, &l8, 1);
    let sup_hhalf = recs.iter().map(|r| r.hhalf).fold(0.0, f64::max);
    let initial_mass = recs.first().map(|r| r.mass).unwrap_or(0.0);
    let den = sup_hhalf * sup_hhalf * initial_mass.powi(3);
    IntegratedAudit {
        spacetime_l8,
        sup_hhalf,
        initial_mass,
        ratio: if den == 0.0 { 0.0 } else { spacetime_l8 / den },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;
    use num_complex::Complex64;

    /// Direct complex evaluation of `2 Im Σ w̄ Σ_j g_j ∂_j w`, returned as
    /// the complex number `-i(S - S̄)` whose imaginary part must vanish.
    fn complex_oracle(field: &ComplexField, cfg: &MorawetzConfig) -> Complex64 {
        let ws = window_samples(field, cfg).unwrap();
        let n = ws.x.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for i1 in 0..n {
            for i2 in 0..n {
                for i3 in 0..n {
                    for i4 in 0..n {
                        let idx = [i1, i2, i3, i4];
                        let x = idx.map(|i| ws.x[i]);
                        let g = RotationMatrix::apply_transpose(weight_gradient(
                            RotationMatrix::apply(x),
                        ));
                        let u = idx.map(|i| ws.u[i]);
                        let w = u[0] * u[1] * u[2] * u[3];
                        let mut gw = Complex64::new(0.0, 0.0);
                        for j in 0..4 {
                            let mut dj = ws.du[idx[j]];
                            for (i, ui) in u.iter().enumerate() {
                                if i != j {
                                    dj *= ui;
                                }
                            }
                            gw += g[j] * dj;
                        }
                        acc += w.conj() * gw;
                    }
                }
            }
        }
        let s = acc * ws.h.powi(4);
        Complex64::new(0.0, -1.0) * (s - s.conj())
    }

    fn boosted(grid: &std::sync::Arc<Grid1D>, v: f64, amp: f64) -> ComplexField {
        ComplexField::from_fn(grid.clone(), 0.0, |x| {
            Complex64::from_polar(amp * (-x * x).exp(), v * x)
        })
        .unwrap()
    }

    fn chirped(grid: &std::sync::Arc<Grid1D>) -> ComplexField {
        ComplexField::from_fn(grid.clone(), 0.0, |x| {
            Complex64::from_polar((-x * x).exp(), 0.8 * x * x)
                + 0.5 * (-(x - 1.0) * (x - 1.0)).exp()
        })
        .unwrap()
    }

    #[test]
    fn rotation_is_orthonormal() {
        let g = RotationMatrix::gram_times_four();
        for (i, row) in g.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(v, if i == j { 4 } else { 0 });
            }
        }
        assert_eq!(RotationMatrix::det_twice().abs(), 16);
    }

    #[test]
    fn weight_gradient_examples() {
        assert_eq!(weight_gradient([5.0, 1.0, 0.0, 0.0]), [0.0, 1.0, 0.0, 0.0]);
        assert_eq!(weight_gradient([3.0, 0.0, 0.0, 0.0]), [0.0; 4]);
        let g = weight_gradient([0.3, -1.0, 2.0, 0.5]);
        let n: f64 = g.iter().map(|v| v * v).sum();
        assert!((n - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fast_quadrature_matches_complex_oracle() {
        let grid = make_grid(40.0, 256).unwrap();
        let u = chirped(&grid);
        let cfg = MorawetzConfig {
            n_sub: 12,
            window: Some(4.0),
            center: Some(0.0),
            loss_tolerance: 1.0,
            ..Default::default()
        };
        let fast = interaction_action(&u, &cfg).unwrap();
        let slow = complex_oracle(&u, &cfg);
        let scale = action_scale(&u);
        assert!(slow.im.abs() < 1e-12 * scale);
        assert!(
            (slow.re - fast).abs() < 1e-12 * scale,
            "{fast} vs {}",
            slow.re
        );
    }

    #[test]
    fn real_data_has_zero_action() {
        let grid = make_grid(40.0, 256).unwrap();
        let u = boosted(&grid, 0.0, 1.0);
        let cfg = MorawetzConfig {
            n_sub: 16,
            window: Some(4.0),
            ..Default::default()
        };
        let ma = interaction_action(&u, &cfg).unwrap();
        assert!(ma.abs() < 1e-10 * action_scale(&u));
        assert_eq!(
            action_bound_ratio(&u, &cfg).unwrap(),
            ma.abs() / {
                let h = sobolev_norm(&u, 0.5, true).unwrap();
                4.0 * h * h * mass(&u).powi(3)
            }
        );
        let z = ComplexField::zeros(grid, 0.0);
        assert_eq!(action_bound_ratio(&z, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn homogeneity_of_degree_eight() {
        let grid = make_grid(40.0, 256).unwrap();
        // A pure boost has M_a = 0 (the weights sum to zero), so use a
        // chirped two-bump profile with a genuinely nonzero action.
        let u = chirped(&grid);
        let cfg = MorawetzConfig {
            n_sub: 16,
            window: Some(4.0),
            center: Some(0.0),
            ..Default::default()
        };
        let c = Complex64::new(0.6, 0.8) * 1.3;
        let a = interaction_action(&u, &cfg).unwrap();
        let b = interaction_action(&u.scaled(c), &cfg).unwrap();
        assert!(a.abs() > 1e-3 * action_scale(&u));
        assert!(
            (b - c.norm().powi(8) * a).abs() < 1e-10 * b.abs(),
            "{a} {b}"
        );
    }

    #[test]
    fn config_rejections() {
        let grid = make_grid(40.0, 256).unwrap();
        let u = boosted(&grid, 1.0, 1.0);
        let over = MorawetzConfig::with_n_sub(200);
        assert!(matches!(
            interaction_action(&u, &over),
            Err(Error::OverBudget { .. })
        ));
        let coarse = MorawetzConfig {
            n_sub: 8,
            ..Default::default()
        };
        assert!(matches!(
            interaction_action(&u, &coarse),
            Err(Error::DownsamplingLoss { .. })
        ));
    }
}
