//! The four commands.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use tfwlab::bounds::{bound_curve, compute_b, restore_units};
use tfwlab::io::{fmt_f64, read_solution, write_curve, write_solution, write_tf_solution};
use tfwlab::model::{critical_excess_bound, gamma_critical};
use tfwlab::radial::{make_grid, RadialGrid};
use tfwlab::solvers::{
    default_r_min, default_tf_grid, default_tfw_r_max, solve_tf, solve_tfw, DEFAULT_GRID_N, DEFAULT_TF_R_MAX,
};
use tfwlab::verify::{parse_selection, run_suite, CheckOptions, SuiteInput};
use tfwlab::{BoundOptions, ModelParams, SolverOptions, TfwSolution};

use crate::config::{Model, RunConfig};
use crate::svg::{Plot, Series};
use crate::Failure;

/// Lower end of the default `p` sweep.
pub const DEFAULT_P_MIN: f64 = 1.55;
/// Upper end of the default `p` sweep.
pub const DEFAULT_P_MAX: f64 = 1.99;
/// Points in the default `p` sweep.
pub const DEFAULT_P_STEPS: usize = 90;
/// Default `γ` sweep at `p = 3/2`.
pub const DEFAULT_GAMMA_RANGE: (f64, f64) = (4.0, 10.0);
/// Points in the default `γ` sweep.
pub const DEFAULT_GAMMA_STEPS: usize = 13;
/// Slack allowed on `Q ≤ bound` in the critical sweep, relative to `Z`.
pub const CRITICAL_TOL: f64 = 1e-3;

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn write_svg(path: &Path, plot: &Plot) -> Result<(), Failure> {
    fs::write(path, plot.render()).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn grid(cfg: &RunConfig, default_r_max: f64, z: f64) -> Result<RadialGrid, Failure> {
    let f = &cfg.flags;
    Ok(make_grid(
        f.r_min.unwrap_or_else(|| default_r_min(z)),
        f.r_max.unwrap_or(default_r_max),
        f.grid_n.unwrap_or(DEFAULT_GRID_N),
    )?)
}

fn atom(cfg: &RunConfig) -> Result<ModelParams, Failure> {
    Ok(ModelParams::atom(cfg.p(), cfg.gamma(), cfg.big_a(), cfg.z())?)
}

fn solve_atom(cfg: &RunConfig, params: &ModelParams) -> Result<TfwSolution, Failure> {
    let grid = grid(cfg, default_tfw_r_max(params), params.z)?;
    Ok(solve_tfw(params, &grid, &SolverOptions::default())?)
}

/// Radial density `4πr²ρ` out to the radius holding all but `10⁻⁴` of `N`.
fn radial_density_series(sol: &TfwSolution) -> Vec<(f64, f64)> {
    let r = sol.psi.nodes();
    let s = sol.psi.values();
    let total = sol.n_particles;
    let h = sol.grid().h();
    let mut acc = 0.0;
    let mut out = Vec::new();
    for i in 0..r.len() {
        let d = 4.0 * std::f64::consts::PI * r[i] * r[i] * s[i] * s[i];
        out.push((r[i], d));
        acc += d * r[i] * h;
        if acc >= (1.0 - 1e-4) * total {
            break;
        }
    }
    out
}

/// `solve`: one atom, written as CSV plus sidecar.
pub fn solve(cfg: &RunConfig) -> Result<(), Failure> {
    let params = atom(cfg)?;
    match cfg.flags.model.unwrap_or_default() {
        Model::Tfw => {
            let sol = solve_atom(cfg, &params)?;
            let out = cfg.out_or("tfw_solution.csv");
            write_solution(&out, &sol)?;
            let t = &sol.terms;
            println!("model = tfw");
            println!("p = {}", params.p);
            println!("Z = {}", params.z);
            println!("N = {}", fmt_f64(sol.n_particles));
            println!("Q = {}", fmt_f64(sol.q));
            println!("T = {}", fmt_f64(t.kinetic));
            println!("F = {}", fmt_f64(t.tf));
            println!("Aterm = {}", fmt_f64(t.attraction));
            println!("D = {}", fmt_f64(t.repulsion));
            println!("E = {}", fmt_f64(t.total()));
            println!("euler_residual = {:.3e}", sol.euler_residual);
            println!("iterations = {}", sol.iterations);
            println!("written {}", out.display());
            if let Some(svg) = &cfg.flags.svg {
                let plot = Plot {
                    title: format!("TFW density, p = {:.4}, Z = {}", params.p, params.z),
                    x_label: "r".into(),
                    y_label: "4 pi r^2 rho(r)".into(),
                    series: vec![Series { label: String::new(), points: radial_density_series(&sol), color: "black" }],
                    ..Default::default()
                };
                write_svg(svg, &plot)?;
            }
        }
        Model::Tf => {
            let tf_grid = match (cfg.flags.r_min, cfg.flags.r_max, cfg.flags.grid_n) {
                (None, None, None) => default_tf_grid(&params)?,
                _ => grid(cfg, DEFAULT_TF_R_MAX, params.z)?,
            };
            let sol = solve_tf(&params, &tf_grid, &SolverOptions::default())?;
            let out = cfg.out_or("tf_solution.csv");
            write_tf_solution(&out, &sol)?;
            println!("model = tf");
            println!("p = {}", params.p);
            println!("Z = {}", params.z);
            println!("N = {}", fmt_f64(sol.n_particles));
            println!("slope = {}", fmt_f64(sol.slope));
            println!("stages = {}", sol.stages);
            println!("written {}", out.display());
            if let Some(svg) = &cfg.flags.svg {
                let pts = sol.phi.nodes().iter().zip(sol.phi.values()).map(|(r, f)| (*r, r * f)).collect();
                let plot = Plot {
                    title: format!("TF screening, p = {:.4}, Z = {}", params.p, params.z),
                    x_label: "r".into(),
                    y_label: "r phi(r)".into(),
                    series: vec![Series { label: String::new(), points: pts, color: "black" }],
                    ..Default::default()
                };
                write_svg(svg, &plot)?;
            }
        }
    }
    Ok(())
}

/// `bound-curve`: `B(p)` over a sweep.
pub fn bound_curve_cmd(cfg: &RunConfig) -> Result<(), Failure> {
    let f = &cfg.flags;
    let lo = f.p_min.unwrap_or(DEFAULT_P_MIN);
    let hi = f.p_max.unwrap_or(DEFAULT_P_MAX);
    let steps = f.steps.unwrap_or(DEFAULT_P_STEPS);
    if !(lo > 1.5 && hi < 2.0 && lo <= hi) {
        return Err(Failure::Usage(format!(
            "the sweep [{lo}, {hi}] must satisfy 3/2 < p-min <= p-max < 2"
        )));
    }
    let ps = linspace(lo, hi, steps);
    let curve = bound_curve(&ps, &BoundOptions::default())?;
    let out = cfg.out_or("bound_curve.csv");
    write_curve(&out, &curve)?;
    let best = curve.iter().min_by(|a, b| a.b_value.total_cmp(&b.b_value)).expect("sweep has at least one point");
    println!("points = {}", curve.len());
    println!("argmin p = {:.6}", best.p);
    println!("min B = {:.6}", best.b_value);
    if f.big_a.is_some() || f.gamma.is_some() {
        let restored = restore_units(best.b_value, best.p, cfg.big_a(), cfg.gamma())?;
        println!("min B (A = {}, gamma = {}) = {:.6}", cfg.big_a(), cfg.gamma(), restored);
    }
    println!("written {}", out.display());
    if let Some(svg) = &f.svg {
        let plot = Plot {
            title: "Upper bound B(p) on the excess charge".into(),
            x_label: "p".into(),
            y_label: "B(p)".into(),
            series: vec![Series {
                label: String::new(),
                points: curve.iter().map(|c| (c.p, c.b_value)).collect(),
                color: "black",
            }],
            points: vec![(best.p, best.b_value, format!("min {:.2} at p = {:.4}", best.b_value, best.p))],
            ..Default::default()
        };
        write_svg(svg, &plot)?;
    }
    Ok(())
}

/// `verify`: runs the check suite on a solved or loaded atom.
pub fn verify(cfg: &RunConfig) -> Result<(), Failure> {
    let selection = parse_selection(cfg.checks())?;
    let sol = match &cfg.flags.solution {
        Some(path) => read_solution(path)?,
        None => solve_atom(cfg, &atom(cfg)?)?,
    };
    let params = sol.params;
    let in_window = params.p > 1.5 && params.p < 2.0;
    let wants = |name: &str| selection.contains(&name);
    let tf = if in_window && (wants("tf_sommerfeld") || wants("coercivity")) {
        let tf_params = ModelParams::atom(params.p, params.gamma, 1.0, params.z)?;
        Some(solve_tf(&tf_params, &default_tf_grid(&tf_params)?, &SolverOptions::default())?)
    } else {
        None
    };
    let bound = if in_window && wants("excess_bounds") {
        Some(compute_b(params.p, &BoundOptions::default())?)
    } else {
        None
    };
    let input = SuiteInput { tfw: &sol, tf: tf.as_ref(), bound: bound.as_ref() };
    let report = run_suite(&selection, &input, &CheckOptions::default());
    let out = cfg.out_or("verify_report.txt");
    let text = report.to_text();
    fs::write(&out, &text).map_err(|e| Failure::Usage(format!("{}: {e}", out.display())))?;
    let json = out.with_extension("json");
    fs::write(&json, report.to_json()?).map_err(|e| Failure::Usage(format!("{}: {e}", json.display())))?;
    print!("{text}");
    println!("written {} and {}", out.display(), json.display());
    if report.all_pass() {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        Err(Failure::Verification(format!("failed checks: {}", failed.join(", "))))
    }
}

struct CriticalRow {
    gamma: f64,
    n: f64,
    q: f64,
    bound: f64,
}

/// `critical`: the excess charge at `p = 3/2` over a `γ` sweep.
pub fn critical(cfg: &RunConfig) -> Result<(), Failure> {
    let f = &cfg.flags;
    if let Some(p) = f.p {
        if p != 1.5 {
            return Err(Failure::Usage(format!("critical runs at p = 3/2, got --p {p}")));
        }
    }
    let lo = f.gamma_min.unwrap_or(DEFAULT_GAMMA_RANGE.0);
    let hi = f.gamma_max.unwrap_or(DEFAULT_GAMMA_RANGE.1);
    if !(lo > 0.0 && lo <= hi) {
        return Err(Failure::Usage(format!("the sweep [{lo}, {hi}] must satisfy 0 < gamma-min <= gamma-max")));
    }
    let steps = if lo == hi { 1 } else { f.steps.unwrap_or(DEFAULT_GAMMA_STEPS) };
    let (big_a, z) = (cfg.big_a(), cfg.z());
    let rows: Vec<CriticalRow> = linspace(lo, hi, steps)
        .par_iter()
        .map(|&gamma| -> Result<CriticalRow, Failure> {
            let params = ModelParams::atom(1.5, gamma, big_a, z)?;
            let sol = solve_atom(cfg, &params)?;
            let bound = critical_excess_bound(gamma / big_a.sqrt(), z)?;
            Ok(CriticalRow { gamma, n: sol.n_particles, q: sol.q, bound })
        })
        .collect::<Result<_, _>>()?;

    let gc = gamma_critical() * big_a.sqrt();
    let out = cfg.out_or("critical.csv");
    let mut w = csv::Writer::from_path(&out).map_err(|e| Failure::Usage(format!("{}: {e}", out.display())))?;
    let io_err = |e: csv::Error| Failure::Usage(format!("{}: {e}", out.display()));
    w.write_record(["gamma", "N", "Q", "bound", "supercritical"]).map_err(io_err)?;
    println!("gamma_c = {}", fmt_f64(gc));
    println!("{:>12} {:>14} {:>14} {:>14}", "gamma", "N", "Q", "bound");
    let mut violations = Vec::new();
    for row in &rows {
        let supercritical = row.gamma / big_a.sqrt() >= gamma_critical();
        w.write_record([
            fmt_f64(row.gamma),
            fmt_f64(row.n),
            fmt_f64(row.q),
            fmt_f64(row.bound),
            u8::from(supercritical).to_string(),
        ])
        .map_err(io_err)?;
        println!("{:>12.6} {:>14.8} {:>14.6e} {:>14.6e}", row.gamma, row.n, row.q, row.bound);
        if row.q > row.bound + CRITICAL_TOL * z {
            violations.push(row.gamma);
        }
    }
    w.flush().map_err(|e| Failure::Usage(format!("{}: {e}", out.display())))?;
    println!("written {}", out.display());
    if let Some(svg) = &f.svg {
        let plot = Plot {
            title: format!("Excess charge at p = 3/2, Z = {z}"),
            x_label: "gamma".into(),
            y_label: "Q".into(),
            series: vec![
                Series { label: "Q".into(), points: rows.iter().map(|r| (r.gamma, r.q)).collect(), color: "black" },
                Series {
                    label: "bound".into(),
                    points: rows.iter().map(|r| (r.gamma, r.bound)).collect(),
                    color: "steelblue",
                },
            ],
            vlines: vec![(gc, "gamma_c".into())],
            ..Default::default()
        };
        write_svg(svg, &plot)?;
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(format!("Q above the bound at gamma = {violations:?}")))
    }
}
