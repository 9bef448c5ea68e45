//! Derivative-free minimisers: Nelder–Mead and golden-section search.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Stop when every vertex lies within this distance of the best one.
    pub xtol: f64,
    pub max_evals: usize,
    /// Re-seed a fresh simplex at the optimum this many times.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            xtol: 1e-6,
            max_evals: 20_000,
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

fn diameter(simplex: &[Vec<f64>]) -> f64 {
    let best = &simplex[0];
    simplex[1..]
        .iter()
        .map(|v| {
            v.iter()
                .zip(best)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

fn nm_once(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    steps: &[f64],
    opts: &NelderMeadOptions,
    evals: &mut usize,
) -> (Vec<f64>, f64, bool) {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex
        .iter()
        .map(|v| {
            *evals += 1;
            f(v)
        })
        .collect();
    let mut converged = false;
    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        if diameter(&simplex) < opts.xtol {
            converged = true;
            break;
        }
        if *evals >= opts.max_evals {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            (0..n)
                .map(|j| centroid[j] + t * (simplex[n][j] - centroid[j]))
                .collect()
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        *evals += 1;
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            *evals += 1;
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
        } else {
            let (xc, fc) = if fr < values[n] {
                let xc = along(-0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            *evals += 1;
            if fc < values[n].min(fr) {
                simplex[n] = xc;
                values[n] = fc;
            } else {
                for i in 1..=n {
                    let shrunk: Vec<f64> = (0..n)
                        .map(|j| simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]))
                        .collect();
                    values[i] = f(&shrunk);
                    simplex[i] = shrunk;
                    *evals += 1;
                }
            }
        }
    }
    (simplex.swap_remove(0), values[0], converged)
}

/// Nelder–Mead with standard coefficients (reflect 1, expand 2, contract
/// 1/2, shrink 1/2). `steps` sizes the initial simplex per coordinate.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    steps: &[f64],
    opts: &NelderMeadOptions,
) -> Minimum {
    assert_eq!(x0.len(), steps.len());
    let mut evals = 0;
    let (mut x, mut fx, mut converged) = nm_once(&mut f, x0, steps, opts, &mut evals);
    for _ in 0..opts.restarts {
        if evals >= opts.max_evals {
            break;
        }
        let small: Vec<f64> = steps.iter().map(|s| s * 0.1).collect();
        let (x2, f2, c2) = nm_once(&mut f, &x, &small, opts, &mut evals);
        if f2 <= fx {
            x = x2;
            fx = f2;
            converged = c2;
        }
    }
    Minimum {
        x,
        f: fx,
        evals,
        converged,
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a minimum of `f` on `[a, b]`, stopping once the
/// bracket is narrower than `tol`.
pub fn golden_section(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    // The midpoint can lose to an interior probe on non-smooth objectives.
    [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .unwrap()
}

/// Samples `samples + 1` evenly spaced points on `[lo, hi]` and refines the
/// best with golden-section inside its neighbouring cells.
pub fn scan_then_golden(
    mut f: impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    samples: usize,
    tol: f64,
) -> (f64, f64) {
    let samples = samples.max(2);
    let h = (hi - lo) / samples as f64;
    let (mut best_k, mut best_f) = (0, f64::INFINITY);
    for k in 0..=samples {
        let v = f(lo + k as f64 * h);
        if v < best_f {
            best_f = v;
            best_k = k;
        }
    }
    let center = lo + best_k as f64 * h;
    let a = (center - h).max(lo);
    let b = (center + h).min(hi);
    let (x, fx) = golden_section(&mut f, a, b, tol);
    if fx <= best_f {
        (x, fx)
    } else {
        (center, best_f)
    }
}
