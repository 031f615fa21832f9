//! Derivative-free local minimization.

use std::cell::Cell;

/// Outcome of [`nelder_mead`].
#[derive(Clone, Debug)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Settings for [`nelder_mead`].
#[derive(Clone, Copy, Debug)]
pub(crate) struct NelderMead {
    /// Initial simplex edge along each axis.
    pub step: f64,
    /// Stop when the simplex diameter falls below this.
    pub x_tol: f64,
    /// Stop when the spread of values falls below this (relative).
    pub f_tol: f64,
    pub max_evaluations: usize,
}

/// Standard Nelder-Mead simplex search (reflection 1, expansion 2,
/// contraction 1/2, shrink 1/2), restarted once from the best vertex to
/// guard against premature collapse.
pub(crate) fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], opts: NelderMead) -> Minimum {
    let first = simplex_run(f, x0, opts, 0);
    let second = simplex_run(f, &first.x, opts, first.evaluations);
    if second.value <= first.value {
        second
    } else {
        Minimum { evaluations: second.evaluations, ..first }
    }
}

fn simplex_run(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], opts: NelderMead, used: usize) -> Minimum {
    let d = x0.len();
    let evals = Cell::new(used);
    let eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..d {
        let mut x = x0.to_vec();
        x[i] += opts.step;
        pts.push(x);
    }
    let mut vals: Vec<f64> = pts.iter().map(|x| eval(x)).collect();
    let mut converged = false;
    while evals.get() < opts.max_evaluations {
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let diameter = pts[1..]
            .iter()
            .map(|x| x.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let spread = (vals[d] - vals[0]).abs();
        if diameter < opts.x_tol && spread <= opts.f_tol * vals[0].abs().max(1.0) {
            converged = true;
            break;
        }

        let centroid: Vec<f64> =
            (0..d).map(|j| pts[..d].iter().map(|x| x[j]).sum::<f64>() / d as f64).collect();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&pts[d]).map(|(c, w)| c + t * (w - c)).collect()
        };
        let xr = along(-1.0);
        let fr = eval(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = eval(&xe);
            if fe < fr {
                pts[d] = xe;
                vals[d] = fe;
            } else {
                pts[d] = xr;
                vals[d] = fr;
            }
        } else if fr < vals[d - 1] {
            pts[d] = xr;
            vals[d] = fr;
        } else {
            let (xc, fc) = if fr < vals[d] {
                let xc = along(-0.5);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < vals[d].min(fr) {
                pts[d] = xc;
                vals[d] = fc;
            } else {
                for i in 1..=d {
                    let x: Vec<f64> = pts[i].iter().zip(&pts[0]).map(|(a, b)| b + 0.5 * (a - b)).collect();
                    vals[i] = eval(&x);
                    pts[i] = x;
                }
            }
        }
    }
    let best = (0..=d).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    Minimum { x: pts[best].clone(), value: vals[best], evaluations: evals.get(), converged }
}
