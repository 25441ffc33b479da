//! Interaction-picture pullback `v(t) = e^{-itΔ} u(t)` and scattering
//! diagnostics built on it.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{free_propagate, Nonlinearity, Trajectory};
use crate::error::{Error, Result};
use crate::functionals::l8_spacetime_integral;
use crate::morawetz::integrated_audit;
use crate::spectral::{sobolev_norm, ComplexField};

/// `e^{-itΔ} u(t)` where `t` is the field's time stamp, which is kept.
pub fn pullback(field: &ComplexField) -> ComplexField {
    let t = field.time();
    free_propagate(field, -t).with_time(t)
}

fn hs_distance(a: &ComplexField, b: &ComplexField, s: f64) -> Result<f64> {
    sobolev_norm(&a.sub(b)?, s, false)
}

/// Pairwise `H^s` distances; symmetric with an exact zero diagonal.
pub fn distance_matrix(fields: &[ComplexField], s: f64) -> Result<Vec<Vec<f64>>> {
    let m = fields.len();
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| hs_distance(&fields[i], &fields[j], s))
        .collect::<Result<Vec<f64>>>()?;
    let mut d = vec![vec![0.0; m]; m];
    for (&(i, j), v) in pairs.iter().zip(values) {
        d[i][j] = v;
        d[j][i] = v;
    }
    Ok(d)
}

/// Indices of snapshots at `T/2^m`, in increasing time order.
fn geometric_chain(snapshots: &[ComplexField], t_final: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = snapshots
        .iter()
        .enumerate()
        .filter(|(_, f)| {
            let r = t_final / f.time();
            f.time() > 0.0 && {
                let m = r.log2().round();
                m >= 0.0 && (r - 2f64.powf(m)).abs() <= 1e-9 * r
            }
        })
        .map(|(i, _)| i)
        .collect();
    idx.sort_by(|&a, &b| snapshots[a].time().total_cmp(&snapshots[b].time()));
    idx
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CauchyAudit {
    /// Snapshot times (all snapshots).
    pub times: Vec<f64>,
    /// `‖v(t_i) - v(t_j)‖_{H^s}`
    pub distance_matrix: Vec<Vec<f64>>,
    /// Times of the geometric chain `T/2^m`.
    pub chain_times: Vec<f64>,
    /// Consecutive chain distances.
    pub chain_distances: Vec<f64>,
    pub chain_nonincreasing: bool,
    /// Last over first consecutive chain distance (0 when both vanish).
    pub decay_ratio: f64,
    pub s: f64,
}

/// Distances between pullbacks of all stored snapshots, with the Cauchy
/// trend read off the snapshots at geometric times `T/2^m`
/// (at least four are required).
pub fn cauchy_audit(traj: &Trajectory, s: f64) -> Result<CauchyAudit> {
    let snaps = traj.snapshots();
    let t_final = traj.final_record().t;
    let chain = geometric_chain(snaps, t_final);
    if chain.len() < 4 {
        return Err(Error::MissingSamples(format!(
            "snapshots at four or more geometric times T/2^m (found {})",
            chain.len()
        )));
    }
    let pulled: Vec<ComplexField> = snaps.par_iter().map(pullback).collect();
    let d = distance_matrix(&pulled, s)?;
    let chain_distances: Vec<f64> = chain.windows(2).map(|w| d[w[0]][w[1]]).collect();
    let first = chain_distances[0];
    let last = *chain_distances.last().unwrap();
    let decay_ratio = if first == 0.0 {
        if last == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        last / first
    };
    Ok(CauchyAudit {
        times: snaps.iter().map(|f| f.time()).collect(),
        chain_times: chain.iter().map(|&i| snaps[i].time()).collect(),
        chain_nonincreasing: chain_distances.windows(2).all(|w| w[1] <= w[0]),
        chain_distances,
        decay_ratio,
        distance_matrix: d,
        s,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ScatteringReport {
    pub times: Vec<f64>,
    pub distance_matrix: Vec<Vec<f64>>,
    /// `r(t_i) = ‖u(t_i) - e^{it_iΔ}u₊‖_{H^s}`
    pub residuals: Vec<f64>,
    pub decay_ratio: f64,
    /// Residuals nonincreasing over `[T/2, T]`.
    pub residual_nonincreasing_late: bool,
    pub conclusive: bool,
    /// Set for exponents `p ≤ 2`, where no scattering claim is made.
    pub exploratory: bool,
    pub s: f64,
    #[serde(skip)]
    pub u_plus: ComplexField,
    #[serde(skip)]
    pub cauchy: CauchyAudit,
}

/// Estimates `u₊ = v(T)` and the residual curve over all snapshots. The
/// report is marked inconclusive (not an error) when the Cauchy decay ratio
/// is not below 1.
pub fn scattering_state(traj: &Trajectory, s: f64) -> Result<ScatteringReport> {
    let cauchy = cauchy_audit(traj, s)?;
    let snaps = traj.snapshots();
    let last = snaps
        .iter()
        .max_by(|a, b| a.time().total_cmp(&b.time()))
        .ok_or_else(|| Error::MissingSamples("snapshots".into()))?;
    let u_plus = pullback(last);
    // ‖u(t) - e^{itΔ}u₊‖_{H^s} = ‖v(t) - u₊‖_{H^s} since e^{itΔ} is unitary
    // on every H^s.
    let residuals = snaps
        .par_iter()
        .map(|f| hs_distance(&pullback(f), &u_plus, s))
        .collect::<Result<Vec<f64>>>()?;
    let t_final = last.time();
    let mut late: Vec<(f64, f64)> = snaps
        .iter()
        .map(|f| f.time())
        .zip(residuals.iter().copied())
        .filter(|(t, _)| *t >= 0.5 * t_final * (1.0 - 1e-12))
        .collect();
    late.sort_by(|a, b| a.0.total_cmp(&b.0));
    let residual_nonincreasing_late = late.windows(2).all(|w| w[1].1 <= w[0].1);
    let exploratory = match traj.config().nonlinearity {
        Nonlinearity::Defocusing { p } => p <= 2.0,
        Nonlinearity::Free => false,
    };
    Ok(ScatteringReport {
        times: cauchy.times.clone(),
        distance_matrix: cauchy.distance_matrix.clone(),
        residuals,
        decay_ratio: cauchy.decay_ratio,
        residual_nonincreasing_late,
        conclusive: cauchy.decay_ratio < 1.0,
        exploratory,
        s,
        u_plus,
        cauchy,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct L8Budget {
    /// `‖u‖_{L⁸_{t,x}}` over the run.
    pub l8_norm: f64,
    pub initial_h1: f64,
    pub initial_mass: f64,
    pub sup_hhalf: f64,
    /// `‖u‖_{L⁸} / ‖u₀‖_{H¹}`
    pub h1_ratio: f64,
    /// `‖u‖_{L⁸} / (‖u₀‖₂^{3/4} sup_t ‖u‖_{Ḣ^{1/2}}^{1/4})`
    pub morawetz_ratio: f64,
    /// The integrated Morawetz ratio to the power 1/8, for comparison with
    /// `morawetz_ratio`.
    pub integrated_eighth_root: f64,
}

/// Spacetime `L⁸` norm relative to the initial `H¹` norm and to the
/// Morawetz-side quantity.
pub fn global_l8_budget(traj: &Trajectory) -> Result<L8Budget> {
    let l8_norm = l8_spacetime_integral(traj).max(0.0).powf(0.125);
    let initial_h1 = sobolev_norm(traj.initial(), 1.0, false)?;
    let ia = integrated_audit(traj);
    let den = ia.initial_mass.powf(0.375) * ia.sup_hhalf.powf(0.25);
    let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    Ok(L8Budget {
        l8_norm,
        initial_h1,
        initial_mass: ia.initial_mass,
        sup_hhalf: ia.sup_hhalf,
        h1_ratio: div(l8_norm, initial_h1),
        morawetz_ratio: div(l8_norm, den),
        integrated_eighth_root: ia.ratio.powf(0.125),
    })
}
