//! Experiment registry: each experiment turns a validated config into CSV,
//! JSON and plot files plus a pass/fail verdict.

use std::fmt::Write as _;

use nls_core::dynamics::{
    dispersive_audit, evolve, DiagnosticsRequest, SnapshotPolicy, SolverConfig, Trajectory,
};
use nls_core::functionals::{l8_interval_split, DiagnosticsRecord};
use nls_core::imethod::{increment_sweep, SweepOptions, SweepRow};
use nls_core::morawetz::{integrated_audit, monotonicity_audit};
use nls_core::scattering::{global_l8_budget, scattering_state};
use nls_core::spectral::{bernstein_audit, make_grid, ComplexField, LpBump};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    BernsteinOptions, ConservationOptions, DispersiveOptions, ExperimentConfig, ExperimentKind,
    ImethodOptions, L8Options, ModuleOptions, MorawetzOptions, ScatteringOptions,
};
use crate::data::{generate_initial_data, InitialDataSpec};
use crate::error::LabError;

/// One emitted file, relative to the experiment's output directory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub kind: ExperimentKind,
    pub passed: bool,
    pub summary: Value,
    pub files: Vec<OutputFile>,
}

impl ExperimentOutcome {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|f| f.name == name)
            .map(|f| f.contents.as_str())
    }
}

fn file(name: impl Into<String>, contents: String) -> OutputFile {
    OutputFile {
        name: name.into(),
        contents,
    }
}

fn json_file(name: &str, value: &impl Serialize) -> Result<OutputFile, LabError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(file(name, s))
}

/// Two-column `x,y` curve under `plots/`.
fn plot(name: &str, points: impl IntoIterator<Item = (f64, f64)>) -> OutputFile {
    let mut s = String::from("x,y\n");
    for (x, y) in points {
        let _ = writeln!(s, "{x:e},{y:e}");
    }
    file(format!("plots/{name}.csv"), s)
}

pub fn trajectory_csv(records: &[DiagnosticsRecord]) -> String {
    let mut s = String::from(DiagnosticsRecord::CSV_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
}

impl Ctx<'_> {
    fn core(&self, source: nls_core::Error) -> LabError {
        LabError::Core {
            experiment: self.cfg.kind.name(),
            hash: self.cfg.hash(),
            source,
        }
    }

    fn initial(&self) -> Result<ComplexField, LabError> {
        let grid = make_grid(self.cfg.grid.length, self.cfg.grid.n).map_err(|e| self.core(e))?;
        generate_initial_data(&self.cfg.data, &grid)
    }

    fn evolve(
        &self,
        u0: &ComplexField,
        solver: &SolverConfig,
        request: &DiagnosticsRequest,
    ) -> Result<Trajectory, LabError> {
        evolve(u0, solver, request).map_err(|e| self.core(e))
    }
}

fn run_info(traj: &Trajectory) -> Value {
    json!({
        "records": traj.records().len(),
        "max_tail": traj.max_tail(),
        "max_boundary": traj.max_boundary(),
        "tail_warning": traj.tail_warning(),
    })
}

/// Dispatches to the experiment named in the config.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome, LabError> {
    let ctx = Ctx { cfg };
    log::info!("running {} (config {})", cfg.kind.name(), &cfg.hash()[..12]);
    let (passed, summary, files) = match &cfg.options {
        ModuleOptions::Conservation(o) => conservation(&ctx, o)?,
        ModuleOptions::Dispersive(o) => dispersive(&ctx, o)?,
        ModuleOptions::Bernstein(o) => bernstein(&ctx, o)?,
        ModuleOptions::Morawetz(o) => morawetz(&ctx, o)?,
        ModuleOptions::ImethodSweep(o) => imethod(&ctx, o)?,
        ModuleOptions::Scattering(o) => scattering(&ctx, o)?,
        ModuleOptions::L8Budget(o) => l8_budget(&ctx, o)?,
    };
    Ok(ExperimentOutcome {
        kind: cfg.kind,
        passed,
        summary,
        files,
    })
}

type Parts = (bool, Value, Vec<OutputFile>);

fn conservation(ctx: &Ctx<'_>, o: &ConservationOptions) -> Result<Parts, LabError> {
    let u0 = ctx.initial()?;
    let solver = &ctx.cfg.solver;
    let traj = ctx.evolve(&u0, solver, &DiagnosticsRequest::default())?;
    let mass_drift = traj.relative_drift(|r| r.mass);
    let energy_drift = traj.relative_drift(|r| r.energy);
    let mut passed = mass_drift < o.mass_tol && energy_drift < o.energy_tol;
    let mut refinement = Value::Null;
    if o.refine {
        let half = SolverConfig {
            dt: 0.5 * solver.dt,
            ..solver.clone()
        };
        let fine = ctx.evolve(&u0, &half, &DiagnosticsRequest::default())?;
        let fine_drift = fine.relative_drift(|r| r.energy);
        let ratio = energy_drift / fine_drift;
        let ok = ratio >= o.ratio_range.0 && ratio <= o.ratio_range.1;
        passed &= ok;
        refinement = json!({
            "dt_half_energy_drift": fine_drift,
            "ratio": ratio,
            "range": [o.ratio_range.0, o.ratio_range.1],
            "passed": ok,
        });
    }
    let recs = traj.records();
    let (m0, e0) = (recs[0].mass, recs[0].energy);
    let rel = |v: f64, v0: f64| if v0 == 0.0 { v - v0 } else { (v - v0) / v0 };
    let summary = json!({
        "experiment": "conservation",
        "mass_drift": mass_drift,
        "energy_drift": energy_drift,
        "mass_tol": o.mass_tol,
        "energy_tol": o.energy_tol,
        "refinement": refinement,
        "run": run_info(&traj),
        "passed": passed,
    });
    let files = vec![
        file("trajectory.csv", trajectory_csv(recs)),
        json_file("summary.json", &summary)?,
        plot("mass_drift", recs.iter().map(|r| (r.t, rel(r.mass, m0)))),
        plot(
            "energy_drift",
            recs.iter().map(|r| (r.t, rel(r.energy, e0))),
        ),
    ];
    Ok((passed, summary, files))
}

fn dispersive(ctx: &Ctx<'_>, o: &DispersiveOptions) -> Result<Parts, LabError> {
    let f = ctx.initial()?;
    let samples = dispersive_audit(&f, &o.times).map_err(|e| ctx.core(e))?;
    let max_ratio = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
    let passed = max_ratio <= 1.0 + o.tol;
    let mut csv = String::from("t,sup_norm,l1_norm,ratio\n");
    for s in &samples {
        let _ = writeln!(
            csv,
            "{:e},{:e},{:e},{:e}",
            s.t, s.sup_norm, s.l1_norm, s.ratio
        );
    }
    let summary = json!({
        "experiment": "dispersive",
        "samples": samples,
        "max_ratio": max_ratio,
        "tol": o.tol,
        "passed": passed,
    });
    let files = vec![
        file("dispersive.csv", csv),
        json_file("summary.json", &summary)?,
        plot("ratio", samples.iter().map(|s| (s.t, s.ratio))),
    ];
    Ok((passed, summary, files))
}

/// Per-family maxima of the Bernstein ratios over seeds, one entry per `N`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BernsteinTable {
    pub n_list: Vec<f64>,
    /// `(family, max ratio per N)`
    pub families: Vec<(String, Vec<f64>)>,
}

impl BernsteinTable {
    pub fn overall_max(&self, family: &str) -> Option<f64> {
        self.families
            .iter()
            .find(|(f, _)| f == family)
            .map(|(_, v)| v.iter().copied().fold(0.0, f64::max))
    }
}

/// Runs the Bernstein audit over `seeds` random fields drawn from `data`
/// (seeds `data.seed, data.seed + 1, …`) at every scale of `o.n_list`.
pub fn bernstein_table(
    data: &InitialDataSpec,
    grid_length: f64,
    n: usize,
    o: &BernsteinOptions,
) -> Result<BernsteinTable, LabError> {
    let grid = make_grid(grid_length, n).map_err(|e| LabError::Data(e.to_string()))?;
    let per_seed = (0..o.seeds)
        .into_par_iter()
        .map(|i| {
            let spec = InitialDataSpec {
                seed: data.seed.wrapping_add(i),
                ..data.clone()
            };
            let f = generate_initial_data(&spec, &grid)?;
            o.n_list
                .iter()
                .map(|&scale| {
                    bernstein_audit(&f, scale, o.s, o.p, o.q)
                        .map_err(|e| LabError::Data(e.to_string()))
                })
                .collect::<Result<Vec<_>, LabError>>()
        })
        .collect::<Result<Vec<_>, LabError>>()?;
    let names = [
        "high_frequency",
        "low_frequency",
        "annulus",
        "annulus_inverse",
        "low_frequency_sobolev",
        "annulus_sobolev",
    ];
    let families = names
        .iter()
        .map(|&name| {
            let maxima = (0..o.n_list.len())
                .map(|j| {
                    per_seed
                        .iter()
                        .filter_map(|reports| {
                            reports[j]
                                .entries()
                                .into_iter()
                                .find(|(n, _)| *n == name)
                                .map(|(_, v)| v)
                        })
                        .fold(0.0, f64::max)
                })
                .collect();
            (name.to_string(), maxima)
        })
        .collect();
    Ok(BernsteinTable {
        n_list: o.n_list.clone(),
        families,
    })
}

fn bernstein(ctx: &Ctx<'_>, o: &BernsteinOptions) -> Result<Parts, LabError> {
    let cfg = ctx.cfg;
    let table = bernstein_table(&cfg.data, cfg.grid.length, cfg.grid.n, o)?;
    let worst = table
        .families
        .iter()
        .flat_map(|(_, v)| v.iter().copied())
        .fold(0.0, f64::max);
    let passed = worst.is_finite() && worst <= o.bound;
    let mut csv = String::from("N,family,max_ratio\n");
    for (name, maxima) in &table.families {
        for (n, m) in table.n_list.iter().zip(maxima) {
            let _ = writeln!(csv, "{n},{name},{m:e}");
        }
    }
    let summary = json!({
        "experiment": "bernstein",
        "bump": LpBump::DESCRIPTION,
        "s": o.s, "p": o.p, "q": if o.q.is_infinite() { json!("inf") } else { json!(o.q) },
        "seeds": o.seeds,
        "table": table,
        "max_ratio": worst,
        "bound": o.bound,
        "passed": passed,
    });
    let mut files = vec![
        file("bernstein.csv", csv),
        json_file("summary.json", &summary)?,
    ];
    for (name, maxima) in &table.families {
        files.push(plot(
            &format!("bernstein_{name}"),
            table.n_list.iter().copied().zip(maxima.iter().copied()),
        ));
    }
    Ok((passed, summary, files))
}

fn morawetz(ctx: &Ctx<'_>, o: &MorawetzOptions) -> Result<Parts, LabError> {
    let u0 = ctx.initial()?;
    let request = DiagnosticsRequest {
        morawetz: Some(o.config.clone()),
        ..Default::default()
    };
    let traj = ctx.evolve(&u0, &ctx.cfg.solver, &request)?;
    let report = monotonicity_audit(&traj, o.quad_rel).map_err(|e| ctx.core(e))?;
    let integrated = integrated_audit(&traj);
    let bound_ratios: Vec<(f64, f64)> = traj
        .records()
        .iter()
        .map(|r| {
            let den = 4.0 * r.hhalf * r.hhalf * r.mass.powi(3);
            let ma = r.morawetz_action.unwrap_or(0.0).abs();
            (r.t, if den == 0.0 { 0.0 } else { ma / den })
        })
        .collect();
    let max_bound_ratio = bound_ratios.iter().map(|p| p.1).fold(0.0, f64::max);
    let max_loss = traj
        .records()
        .iter()
        .filter_map(|r| r.morawetz_loss)
        .fold(0.0, f64::max);
    let passed = report.passed;
    let summary = json!({
        "experiment": "morawetz",
        "n_sub": o.config.n_sub,
        "min_defect": report.min_defect,
        "tol_mono": report.tol_mono,
        "empirical_constant": report.empirical_constant,
        "integrated": report.integrated,
        "integrated_audit": integrated,
        "max_action_bound_ratio": max_bound_ratio,
        "max_downsampling_loss": max_loss,
        "run": run_info(&traj),
        "passed": passed,
    });
    let block = json!({
        "t_samples": report.t_samples,
        "M_a": report.ma_values,
        "defects": report.defects,
        "min_defect": report.min_defect,
        "tol_mono": report.tol_mono,
        "empirical_constant": report.empirical_constant,
    });
    let files = vec![
        file("trajectory.csv", trajectory_csv(traj.records())),
        json_file("morawetz.json", &block)?,
        json_file("summary.json", &summary)?,
        plot(
            "action",
            traj.records()
                .iter()
                .map(|r| (r.t, r.morawetz_action.unwrap_or(0.0))),
        ),
        plot(
            "defect",
            report
                .t_samples
                .iter()
                .copied()
                .zip(report.defects.iter().copied()),
        ),
        plot("action_bound_ratio", bound_ratios),
    ];
    Ok((passed, summary, files))
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SweepRow::CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

fn imethod(ctx: &Ctx<'_>, o: &ImethodOptions) -> Result<Parts, LabError> {
    let u0 = ctx.initial()?;
    let solver = &ctx.cfg.solver;
    let p = solver
        .nonlinearity
        .exponent()
        .expect("validated: nonlinear flow");
    let opts = SweepOptions {
        s: o.s,
        eta: o.eta,
        floor_factor: o.floor_factor,
        ..SweepOptions::default()
    };
    let report = increment_sweep(&u0, p, &o.n_list, solver, &opts).map_err(|e| ctx.core(e))?;
    let passed = report.included >= o.min_points && report.slope.is_some_and(|s| s <= o.slope_max);
    let summary = json!({
        "experiment": "imethod_sweep",
        "slope": report.slope,
        "slope_stderr": report.slope_stderr,
        "included": report.included,
        "slope_max": o.slope_max,
        "min_points": o.min_points,
        "eta": report.eta,
        "eta_satisfied": report.eta_satisfied,
        "s": report.s,
        "rows": report.rows,
        "passed": passed,
    });
    let files = vec![
        file("sweep.csv", sweep_csv(&report.rows)),
        json_file("summary.json", &summary)?,
        plot(
            "increment",
            report
                .rows
                .iter()
                .filter(|r| r.increment > 0.0)
                .map(|r| (r.n.ln(), r.increment.ln())),
        ),
    ];
    Ok((passed, summary, files))
}

/// Snapshot times `T/2^m` (`m = 0..=levels`) plus `tail` uniform samples
/// strictly inside `(T/2, T)`.
pub fn scattering_schedule(t_final: f64, levels: u32, tail: u32) -> Vec<f64> {
    let mut times: Vec<f64> = (0..=levels)
        .map(|m| t_final / 2f64.powi(m as i32))
        .collect();
    for i in 1..=tail {
        times.push(0.5 * t_final * (1.0 + i as f64 / (tail + 1) as f64));
    }
    times.sort_by(f64::total_cmp);
    times
}

fn scattering(ctx: &Ctx<'_>, o: &ScatteringOptions) -> Result<Parts, LabError> {
    let u0 = ctx.initial()?;
    let solver = &ctx.cfg.solver;
    let times = scattering_schedule(solver.t_final, o.levels, o.tail_samples);
    let request = DiagnosticsRequest {
        snapshots: SnapshotPolicy::Times(times),
        ..Default::default()
    };
    let traj = ctx.evolve(&u0, solver, &request)?;
    let report = scattering_state(&traj, o.s).map_err(|e| ctx.core(e))?;
    let passed =
        report.conclusive && report.decay_ratio < o.decay_max && report.residual_nonincreasing_late;
    let summary = json!({
        "experiment": "scattering",
        "decay_ratio": report.decay_ratio,
        "decay_max": o.decay_max,
        "chain_times": report.cauchy.chain_times,
        "chain_distances": report.cauchy.chain_distances,
        "residual_nonincreasing_late": report.residual_nonincreasing_late,
        "conclusive": report.conclusive,
        "exploratory": report.exploratory,
        "run": run_info(&traj),
        "passed": passed,
    });
    let block = json!({
        "times": report.times,
        "distance_matrix": report.distance_matrix,
        "residuals": report.residuals,
        "decay_ratio": report.decay_ratio,
        "conclusive": report.conclusive,
    });
    let files = vec![
        file("trajectory.csv", trajectory_csv(traj.records())),
        json_file("scattering.json", &block)?,
        json_file("summary.json", &summary)?,
        plot(
            "residual",
            report
                .times
                .iter()
                .copied()
                .zip(report.residuals.iter().copied()),
        ),
        plot(
            "chain_distance",
            report
                .cauchy
                .chain_times
                .iter()
                .skip(1)
                .copied()
                .zip(report.cauchy.chain_distances.iter().copied()),
        ),
    ];
    Ok((passed, summary, files))
}

fn l8_budget(ctx: &Ctx<'_>, o: &L8Options) -> Result<Parts, LabError> {
    let u0 = ctx.initial()?;
    let traj = ctx.evolve(&u0, &ctx.cfg.solver, &DiagnosticsRequest::default())?;
    let budget = global_l8_budget(&traj).map_err(|e| ctx.core(e))?;
    let split = l8_interval_split(&traj, o.delta).map_err(|e| ctx.core(e))?;
    let integrated = integrated_audit(&traj);
    let passed = budget.h1_ratio.is_finite() && budget.morawetz_ratio.is_finite();
    let summary = json!({
        "experiment": "l8_budget",
        "budget": budget,
        "integrated_audit": integrated,
        "delta": o.delta,
        "intervals": split.count(),
        "boundaries": split.boundaries,
        "interval_norms": split.norms,
        "run": run_info(&traj),
        "passed": passed,
    });
    let files = vec![
        file("trajectory.csv", trajectory_csv(traj.records())),
        json_file("summary.json", &summary)?,
        plot(
            "l8_density",
            traj.records().iter().map(|r| (r.t, r.l8_density)),
        ),
    ];
    Ok((passed, summary, files))
}
