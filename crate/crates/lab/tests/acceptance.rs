//! Acceptance suite: runs the eleven acceptance criteria and prints one
//! PASS/FAIL line per criterion. Exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nls_core::dynamics::free_propagate;
use nls_core::functionals::mass;
use nls_core::imethod::{i_property_audit, rescale, IMultiplier, RescaleParams};
use nls_core::spectral::{make_grid, sobolev_norm, ComplexField};
use nls_core::Complex64;
use nls_lab::config::{read_matrix, ExperimentConfig};
use nls_lab::data::{generate_initial_data, InitialDataSpec};
use nls_lab::experiments::{run_experiment, ExperimentOutcome};
use serde_json::Value;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::from_file(&configs_dir().join(name)).expect("config parses")
}

fn variant(cfg: &ExperimentConfig, edits: &[(&str, &str)]) -> ExperimentConfig {
    let mut text = cfg.text().clone();
    for (k, v) in edits {
        text.set(k, *v);
    }
    ExperimentConfig::from_text(text).expect("variant parses")
}

fn timed(cfg: &ExperimentConfig) -> (ExperimentOutcome, Duration) {
    let start = Instant::now();
    let out = run_experiment(cfg).unwrap_or_else(|e| panic!("{e}"));
    (out, start.elapsed())
}

fn num(v: &Value, path: &[&str]) -> f64 {
    let mut cur = v;
    for p in path {
        cur = &cur[*p];
    }
    cur.as_f64().unwrap_or(f64::NAN)
}

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

/// First-pass outcomes, reused by the determinism check.
type Runs = BTreeMap<String, ExperimentOutcome>;

type Criterion = (&'static str, Box<dyn FnOnce(&mut Runs) -> Verdict>);

fn conservation(runs: &mut Runs) -> Verdict {
    let mut worst = (0.0f64, 0.0f64);
    let mut ratios = Vec::new();
    let mut failures = Vec::new();
    let mut slowest = Duration::ZERO;
    for fam in ["gaussian", "boosted", "random"] {
        for k in 3..=5 {
            let name = format!("conservation_{fam}_k{k}.conf");
            let (out, wall) = timed(&load(&name));
            slowest = slowest.max(wall);
            let s = &out.summary;
            worst.0 = worst.0.max(num(s, &["mass_drift"]));
            worst.1 = worst.1.max(num(s, &["energy_drift"]));
            ratios.push(num(s, &["refinement", "ratio"]));
            if !out.passed {
                failures.push(name.clone());
            }
            runs.insert(name, out);
        }
    }
    let rmin = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let rmax = ratios.iter().copied().fold(0.0, f64::max);
    let ok = failures.is_empty()
        && worst.0 < 1e-10
        && worst.1 < 1e-6
        && rmin >= 3.2
        && rmax <= 4.8
        && slowest < Duration::from_secs(30);
    verdict(
        ok,
        format!(
            "max mass drift {:.2e}, max energy drift {:.2e}, dt-halving ratios in [{rmin:.3}, {rmax:.3}], slowest run {:.1}s{}",
            worst.0,
            worst.1,
            slowest.as_secs_f64(),
            if failures.is_empty() { String::new() } else { format!(", failing: {failures:?}") }
        ),
    )
}

fn free_propagator() -> Verdict {
    let start = Instant::now();
    let grid = make_grid(40.0, 1024).unwrap();
    let u0 =
        ComplexField::from_fn(grid.clone(), 0.0, |x| Complex64::new((-x * x).exp(), 0.0)).unwrap();
    let t = 0.5;
    let u = free_propagate(&u0, t);
    let a = Complex64::new(1.0, 4.0 * t);
    let err = u
        .samples()
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let x = grid.position(j);
            (v - (-x * x / a).exp() / a.sqrt()).norm()
        })
        .fold(0.0, f64::max);
    let wall = start.elapsed();
    verdict(
        err < 1e-8 && wall < Duration::from_secs(1),
        format!("max pointwise error {err:.2e} at t = 0.5"),
    )
}

fn dispersive(runs: &mut Runs) -> Verdict {
    let (out, wall) = timed(&load("dispersive.conf"));
    let r = num(&out.summary, &["max_ratio"]);
    let ok = out.passed && r <= 1.0 + 1e-3 && wall < Duration::from_secs(5);
    runs.insert("dispersive.conf".into(), out);
    verdict(ok, format!("max ratio {r:.6} over t in [0.1, 2]"))
}

fn family_maxima(out: &ExperimentOutcome) -> Vec<(String, f64)> {
    out.summary["table"]["families"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| {
            let name = f[0].as_str().unwrap().to_string();
            let m = f[1]
                .as_array()
                .unwrap()
                .iter()
                .map(|v| v.as_f64().unwrap_or(f64::INFINITY))
                .fold(0.0, f64::max);
            (name, m)
        })
        .collect()
}

fn bernstein(runs: &mut Runs) -> Verdict {
    let cfg = load("bernstein.conf");
    let (out, wall) = timed(&cfg);
    let (fine, wall2) = timed(&variant(&cfg, &[("grid.n", "2048")]));
    let base = family_maxima(&out);
    let refined = family_maxima(&fine);
    let worst_change = base
        .iter()
        .zip(&refined)
        .map(|((_, a), (_, b))| ((b - a) / a).abs())
        .fold(0.0, f64::max);
    let max_ratio = num(&out.summary, &["max_ratio"]);
    let ok =
        out.passed && fine.passed && worst_change <= 0.1 && wall + wall2 < Duration::from_secs(60);
    runs.insert("bernstein.conf".into(), out);
    verdict(
        ok,
        format!(
            "max ratio {max_ratio:.3} (bound 16), largest change under n doubling {:.2}%",
            100.0 * worst_change
        ),
    )
}

fn morawetz(runs: &mut Runs) -> Verdict {
    let (out, wall) = timed(&load("morawetz.conf"));
    let s = &out.summary;
    let (min_defect, tol) = (num(s, &["min_defect"]), num(s, &["tol_mono"]));
    let integrated = s["integrated"]["passed"].as_bool().unwrap_or(false);
    let ok = out.passed && min_defect >= -tol && integrated && wall < Duration::from_secs(900);
    let detail = format!(
        "min defect {min_defect:.3e} (tol {tol:.3e}), integrated change {:.4} vs lower bound {:.4} (tol {:.2e})",
        num(s, &["integrated", "action_change"]),
        num(s, &["integrated", "lower_bound"]),
        num(s, &["integrated", "tolerance"]),
    );
    runs.insert("morawetz.conf".into(), out);
    verdict(ok, detail)
}

fn interaction_bound(runs: &mut Runs) -> Verdict {
    let start = Instant::now();
    let cfg = load("l8_budget.conf");
    let base = run_experiment(&cfg).unwrap();
    let ratio = |o: &ExperimentOutcome| num(&o.summary, &["integrated_audit", "ratio"]);
    let r0 = ratio(&base);
    let variants = [
        ("dt/2", variant(&cfg, &[("solver.dt", "5e-4")])),
        ("2n", variant(&cfg, &[("grid.n", "2048")])),
        (
            "2L,2n",
            variant(&cfg, &[("grid.length", "80"), ("grid.n", "2048")]),
        ),
    ];
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (label, v) in &variants {
        let r = ratio(&run_experiment(v).unwrap());
        let change = ((r - r0) / r0).abs();
        worst = worst.max(change);
        parts.push(format!("{label}: {r:.5}"));
    }
    let cross = num(&base.summary, &["budget", "morawetz_ratio"]).powi(8);
    let cross_err = ((cross - r0) / r0).abs();
    let ok = r0.is_finite()
        && r0 > 0.0
        && worst <= 0.2
        && cross_err <= 0.1
        && start.elapsed() < Duration::from_secs(1200);
    runs.insert("l8_budget.conf".into(), base);
    verdict(
        ok,
        format!(
            "ratio {r0:.5} ({}), worst change {:.2}%, budget cross-check {cross:.5}",
            parts.join(", "),
            100.0 * worst
        ),
    )
}

fn i_sandwich() -> Verdict {
    let start = Instant::now();
    let grid = make_grid(40.0, 1024).unwrap();
    let s = 0.7;
    let (mut i1_max, mut lower_max, mut upper_max) = (0.0f64, 0.0f64, 0.0f64);
    for seed in 0..50u64 {
        let spec = InitialDataSpec::random_band(0.0, 75.0, s, 1.0, 1000 + seed);
        let f = generate_initial_data(&spec, &grid).unwrap();
        for n in [8.0, 16.0, 32.0, 64.0] {
            let rep = i_property_audit(&f, &IMultiplier::new(n, s).unwrap(), s).unwrap();
            i1_max = i1_max.max(rep.i1.unwrap());
            lower_max = lower_max.max(rep.i3_lower.unwrap());
            upper_max = upper_max.max(rep.i3_upper.unwrap());
        }
    }
    let ok = i1_max <= 1.0
        && lower_max <= 16.0
        && upper_max <= 16.0
        && start.elapsed() < Duration::from_secs(60);
    verdict(
        ok,
        format!("max i1 {i1_max:.15}, max lower ratio {lower_max:.4}, max upper ratio {upper_max:.4} (bound 16)"),
    )
}

fn sweep(runs: &mut Runs) -> Verdict {
    let (out, wall) = timed(&load("imethod_sweep.conf"));
    let s = &out.summary;
    let slope = num(s, &["slope"]);
    let included = s["included"].as_u64().unwrap_or(0);
    let ok = out.passed && slope <= -0.5 && included >= 3 && wall < Duration::from_secs(1800);
    runs.insert("imethod_sweep.conf".into(), out);
    verdict(
        ok,
        format!("fitted slope {slope:.3} over {included} points"),
    )
}

fn scaling() -> Verdict {
    let start = Instant::now();
    let grid = make_grid(40.0, 1024).unwrap();
    let u = ComplexField::from_fn(grid, 0.0, |x| {
        Complex64::from_polar((-x * x).exp(), 0.7 * x) + 0.3 * (-(x - 1.0) * (x - 1.0)).exp()
    })
    .unwrap();
    let mut worst = 0.0f64;
    for p in [2.0, 3.0] {
        let sc = 0.5 - 1.0 / p;
        for lambda in [2.0, 4.0] {
            let v = rescale(&u, &RescaleParams::new(lambda, p).unwrap()).unwrap();
            let check = |s: f64, power: f64| {
                let a = sobolev_norm(&u, s, true).unwrap();
                let b = sobolev_norm(&v, s, true).unwrap();
                ((b / a) / lambda.powf(power) - 1.0).abs()
            };
            worst = worst.max(((mass(&v) / mass(&u)) / lambda.powf(1.0 - 2.0 / p) - 1.0).abs());
            worst = worst.max(check(sc, 0.0));
            for s in [0.7, 1.0] {
                worst = worst.max(check(s, sc - s));
            }
        }
    }
    verdict(
        worst < 1e-6 && start.elapsed() < Duration::from_secs(10),
        format!("largest relative deviation from analytic scaling {worst:.2e}"),
    )
}

fn scattering(runs: &mut Runs) -> Verdict {
    let cfg = load("scattering.conf");
    let (out, wall) = timed(&cfg);
    let t = cfg.solver.t_final;
    let (long, wall2) = timed(&variant(
        &cfg,
        &[("solver.t_final", &(2.0 * t).to_string())],
    ));
    let residual_at = |o: &ExperimentOutcome, at: f64| {
        let block: Value = serde_json::from_str(o.file("scattering.json").unwrap()).unwrap();
        let times = block["times"].as_array().unwrap();
        let i = times
            .iter()
            .position(|v| (v.as_f64().unwrap() - at).abs() < 1e-9)
            .unwrap();
        block["residuals"][i].as_f64().unwrap()
    };
    let r_half = residual_at(&out, 0.5 * t);
    let r_half_long = residual_at(&long, t);
    let decay = num(&out.summary, &["decay_ratio"]);
    let late = out.summary["residual_nonincreasing_late"]
        .as_bool()
        .unwrap_or(false);
    let ok = out.passed
        && decay < 0.5
        && late
        && r_half_long < r_half
        && wall + wall2 < Duration::from_secs(300);
    runs.insert("scattering.conf".into(), out);
    verdict(
        ok,
        format!(
            "decay ratio {decay:.3}, late residual nonincreasing {late}, r(T/2) {r_half:.3e} -> {r_half_long:.3e} when T doubles"
        ),
    )
}

fn determinism(runs: &Runs) -> Verdict {
    let matrix = read_matrix(&configs_dir().join("acceptance.matrix")).unwrap();
    let mut mismatches = Vec::new();
    for path in &matrix {
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let cfg = ExperimentConfig::from_file(path).unwrap();
        let first = match runs.get(&name) {
            Some(o) => o.clone(),
            None => run_experiment(&cfg).unwrap(),
        };
        let second = run_experiment(&cfg).unwrap();
        if first.files != second.files {
            mismatches.push(name);
        }
    }
    verdict(
        mismatches.is_empty(),
        format!(
            "{} configs rerun, byte-identical outputs{}",
            matrix.len(),
            if mismatches.is_empty() {
                String::new()
            } else {
                format!("; differing: {mismatches:?}")
            }
        ),
    )
}

fn main() -> ExitCode {
    let mut runs = Runs::new();
    let criteria: Vec<Criterion> = vec![
        ("conservation", Box::new(conservation)),
        ("free propagator exactness", Box::new(|_| free_propagator())),
        ("dispersive constant", Box::new(dispersive)),
        ("bernstein suite", Box::new(bernstein)),
        ("morawetz monotonicity", Box::new(morawetz)),
        ("interaction morawetz bound", Box::new(interaction_bound)),
        ("I-operator sandwich", Box::new(|_| i_sandwich())),
        ("almost conservation sweep", Box::new(sweep)),
        ("scaling laws", Box::new(|_| scaling())),
        ("scattering", Box::new(scattering)),
        ("determinism", Box::new(|r: &mut Runs| determinism(r))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let v = check(&mut runs);
        if !v.passed {
            failed += 1;
        }
        println!(
            "{} {:>2}. {name}: {} [{:.1}s]",
            if v.passed { "PASS" } else { "FAIL" },
            i + 1,
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
