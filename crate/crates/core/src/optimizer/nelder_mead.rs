//! Nelder-Mead simplex minimization with restarts. Infeasible points are
//! signalled by a non-finite objective and are never accepted.

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub max_evals: usize,
    /// Initial edge length along each axis.
    pub step: f64,
    /// Stop when the spread of simplex values falls below `f_tol (1 + |f_best|)`...
    pub f_tol: f64,
    /// ... and every vertex is within `x_tol` of the best one.
    pub x_tol: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            max_evals: 1000,
            step: 0.5,
            f_tol: 1e-13,
            x_tol: 1e-9,
        }
    }
}

const ALPHA: f64 = 1.0;
const GAMMA: f64 = 2.0;
const RHO: f64 = 0.5;
const SIGMA: f64 = 0.5;

/// Minimizes `f` from the feasible point `x0`. After each converged run the
/// search restarts around the incumbent with a fresh simplex until the
/// budget is spent or a restart brings no improvement.
pub fn minimize<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], s: &Settings) -> Minimum {
    let mut evals = 0usize;
    let f0 = f(x0);
    evals += 1;
    let mut best = Minimum {
        x: x0.to_vec(),
        f: f0,
        evals,
    };
    if !f0.is_finite() {
        return best;
    }
    let mut step = s.step;
    loop {
        let before = best.f;
        let run = simplex_run(
            &mut f,
            &best.x,
            best.f,
            step,
            s,
            s.max_evals.saturating_sub(evals),
        );
        evals += run.evals;
        if run.f < best.f {
            best.x = run.x;
            best.f = run.f;
        }
        best.evals = evals;
        let improved = before - best.f > s.f_tol * (1.0 + best.f.abs());
        if !improved || evals + x0.len() + 2 > s.max_evals {
            break;
        }
        step = (step * 0.5).max(1e-3);
    }
    best
}

fn simplex_run<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x0: &[f64],
    f0: f64,
    step: f64,
    s: &Settings,
    budget: usize,
) -> Minimum {
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    let mut vals = vec![f0];
    for i in 0..n {
        if evals >= budget {
            break;
        }
        // try +step, then -step, so that a vertex on a box edge still
        // spans the direction
        let mut p = x0.to_vec();
        p[i] += step;
        let mut v = eval(&p, &mut evals);
        if !v.is_finite() && evals < budget {
            p[i] = x0[i] - step;
            v = eval(&p, &mut evals);
        }
        pts.push(p);
        vals.push(v);
    }
    if pts.len() < n + 1 {
        return Minimum {
            x: x0.to_vec(),
            f: f0,
            evals,
        };
    }

    let mut order: Vec<usize> = (0..=n).collect();
    while evals < budget {
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
        let (ib, iw, isw) = (order[0], order[n], order[n - 1]);
        let fb = vals[ib];
        let spread = vals[iw] - fb;
        let size = pts
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&pts[ib])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread.is_finite() && spread <= s.f_tol * (1.0 + fb.abs()) && size <= s.x_tol {
            break;
        }
        let mut centroid = vec![0.0; n];
        for &k in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&pts[k]) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[iw])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(ALPHA);
        let fr = eval(&xr, &mut evals);
        if fr < fb {
            let xe = along(GAMMA);
            let fe = if evals < budget {
                eval(&xe, &mut evals)
            } else {
                f64::INFINITY
            };
            if fe < fr {
                pts[iw] = xe;
                vals[iw] = fe;
            } else {
                pts[iw] = xr;
                vals[iw] = fr;
            }
            continue;
        }
        if fr < vals[isw] {
            pts[iw] = xr;
            vals[iw] = fr;
            continue;
        }
        if evals >= budget {
            break;
        }
        // outside contraction if the reflection helped at all, else inside
        let xc = along(if fr < vals[iw] { RHO } else { -RHO });
        let fc = eval(&xc, &mut evals);
        if fc < vals[iw].min(fr) {
            pts[iw] = xc;
            vals[iw] = fc;
            continue;
        }
        // shrink toward the best vertex
        let best = pts[ib].clone();
        for &k in &order[1..] {
            if evals >= budget {
                break;
            }
            let p: Vec<f64> = best
                .iter()
                .zip(&pts[k])
                .map(|(b, x)| b + SIGMA * (x - b))
                .collect();
            vals[k] = eval(&p, &mut evals);
            pts[k] = p;
        }
    }
    let ib = (0..=n)
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)))
        .expect("non-empty simplex");
    Minimum {
        x: pts[ib].clone(),
        f: vals[ib],
        evals,
    }
}
