//! Derivative-free local minimisers: a box-constrained Nelder-Mead simplex
//! and Brent's bounded scalar method.

/// Axis-aligned box. Trial points outside it are projected back onto it.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len());
        assert!(lower.iter().zip(&upper).all(|(l, u)| l <= u));
        Self { lower, upper }
    }

    pub fn unbounded(dim: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
        }
    }

    pub fn project(&self, x: &mut [f64]) {
        for ((xi, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *xi = xi.clamp(*lo, *hi);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.lower)
            .zip(&self.upper)
            .all(|((xi, lo), hi)| xi >= lo && xi <= hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadOptions {
    /// Initial simplex edge along each coordinate.
    pub initial_step: Vec<f64>,
    /// Absolute spread of the simplex vertices below which it has collapsed.
    pub x_tol: f64,
    /// Spread of vertex values that must also hold for collapse.
    pub f_tol: f64,
    /// Stop as soon as the best value drops to this level.
    pub f_target: f64,
    pub max_evals: usize,
    /// Number of times the simplex is rebuilt around the best vertex after
    /// collapsing; guards against premature convergence on a degenerate
    /// simplex.
    pub restarts: usize,
}

impl NelderMeadOptions {
    pub fn with_step(initial_step: Vec<f64>) -> Self {
        Self {
            initial_step,
            x_tol: 1e-12,
            f_tol: f64::INFINITY,
            f_target: f64::NEG_INFINITY,
            max_evals: 20_000,
            restarts: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub iterations: usize,
    pub converged: bool,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimises `f` from `x0` with the standard simplex moves
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: &NelderMeadOptions, bounds: &Bounds) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert_eq!(opts.initial_step.len(), n);
    let mut evals = 0usize;
    let mut iterations = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        sanitize(f(x))
    };

    let mut best_x = x0.to_vec();
    bounds.project(&mut best_x);
    let mut best_f = eval(&best_x, &mut evals);
    let mut converged = false;

    for _round in 0..=opts.restarts {
        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        let mut values: Vec<f64> = Vec::with_capacity(n + 1);
        simplex.push(best_x.clone());
        values.push(best_f);
        for i in 0..n {
            let mut v = best_x.clone();
            v[i] += opts.initial_step[i];
            if !bounds.contains(&v) {
                v[i] = best_x[i] - opts.initial_step[i];
            }
            bounds.project(&mut v);
            let fv = eval(&v, &mut evals);
            simplex.push(v);
            values.push(fv);
        }

        let mut collapsed = false;
        while evals < opts.max_evals {
            iterations += 1;
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();

            if values[0] <= opts.f_target {
                break;
            }
            let x_spread = simplex[1..]
                .iter()
                .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            let f_spread = (values[n] - values[0]).abs();
            if x_spread <= opts.x_tol && f_spread <= opts.f_tol {
                collapsed = true;
                break;
            }

            let mut centroid = vec![0.0; n];
            for v in &simplex[..n] {
                for (c, vi) in centroid.iter_mut().zip(v) {
                    *c += vi / n as f64;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                let mut p: Vec<f64> = centroid
                    .iter()
                    .zip(&simplex[n])
                    .map(|(c, w)| c + t * (c - w))
                    .collect();
                bounds.project(&mut p);
                p
            };

            let xr = along(1.0);
            let fr = eval(&xr, &mut evals);
            if fr < values[0] {
                let xe = along(2.0);
                let fe = eval(&xe, &mut evals);
                if fe < fr {
                    simplex[n] = xe;
                    values[n] = fe;
                } else {
                    simplex[n] = xr;
                    values[n] = fr;
                }
                continue;
            }
            if fr < values[n - 1] {
                simplex[n] = xr;
                values[n] = fr;
                continue;
            }
            let (xc, fc) = if fr < values[n] {
                let xc = along(0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = along(-0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < values[n].min(fr) {
                simplex[n] = xc;
                values[n] = fc;
                continue;
            }
            // shrink towards the best vertex
            for i in 1..=n {
                let mut p: Vec<f64> = simplex[0]
                    .iter()
                    .zip(&simplex[i])
                    .map(|(b, v)| b + 0.5 * (v - b))
                    .collect();
                bounds.project(&mut p);
                values[i] = eval(&p, &mut evals);
                simplex[i] = p;
            }
        }

        let (ib, fb) = values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
        if fb <= best_f {
            best_f = fb;
            best_x = simplex[ib].clone();
        }
        if best_f <= opts.f_target {
            converged = true;
            break;
        }
        converged = collapsed;
        if !collapsed {
            break;
        }
    }

    Minimum {
        x: best_x,
        f: best_f,
        evals,
        iterations,
        converged,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMinimum {
    pub x: f64,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Brent's method on `[a, b]` (golden section with parabolic steps).
///
/// Terminates when the bracket around the minimiser is narrower than
/// `sqrt(eps) |x| + x_tol / 3` on each side.
pub fn brent_bounded<F>(mut f: F, a: f64, b: f64, x_tol: f64, max_evals: usize) -> ScalarMinimum
where
    F: FnMut(f64) -> f64,
{
    assert!(a <= b, "empty bracket [{a}, {b}]");
    let sqrt_eps = f64::EPSILON.sqrt();
    let golden = 0.5 * (3.0 - 5f64.sqrt());
    let (mut a, mut b) = (a, b);

    let mut fulc = a + golden * (b - a);
    let mut nfc = fulc;
    let mut xf = fulc;
    let mut rat: f64 = 0.0;
    let mut e: f64 = 0.0;
    let mut fx = sanitize(f(xf));
    let mut evals = 1;
    let mut ffulc = fx;
    let mut fnfc = fx;
    let mut xm = 0.5 * (a + b);
    let mut tol1 = sqrt_eps * xf.abs() + x_tol / 3.0;
    let mut tol2 = 2.0 * tol1;
    let mut converged = true;

    while (xf - xm).abs() > tol2 - 0.5 * (b - a) {
        let mut golden_step = true;
        if e.abs() > tol1 {
            golden_step = false;
            let mut r = (xf - nfc) * (fx - ffulc);
            let mut q = (xf - fulc) * (fx - fnfc);
            let mut p = (xf - fulc) * q - (xf - nfc) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            r = e;
            e = rat;
            if p.abs() < (0.5 * q * r).abs() && p > q * (a - xf) && p < q * (b - xf) {
                rat = p / q;
                let x = xf + rat;
                if (x - a) < tol2 || (b - x) < tol2 {
                    let si = if xm - xf >= 0.0 { 1.0 } else { -1.0 };
                    rat = tol1 * si;
                }
            } else {
                golden_step = true;
            }
        }
        if golden_step {
            e = if xf >= xm { a - xf } else { b - xf };
            rat = golden * e;
        }
        let si = if rat >= 0.0 { 1.0 } else { -1.0 };
        let x = xf + si * rat.abs().max(tol1);
        let fu = sanitize(f(x));
        evals += 1;

        if fu <= fx {
            if x >= xf {
                a = xf;
            } else {
                b = xf;
            }
            fulc = nfc;
            ffulc = fnfc;
            nfc = xf;
            fnfc = fx;
            xf = x;
            fx = fu;
        } else {
            if x < xf {
                a = x;
            } else {
                b = x;
            }
            if fu <= fnfc || nfc == xf {
                fulc = nfc;
                ffulc = fnfc;
                nfc = x;
                fnfc = fu;
            } else if fu <= ffulc || fulc == xf || fulc == nfc {
                fulc = x;
                ffulc = fu;
            }
        }
        xm = 0.5 * (a + b);
        tol1 = sqrt_eps * xf.abs() + x_tol / 3.0;
        tol2 = 2.0 * tol1;
        if evals >= max_evals {
            converged = false;
            break;
        }
    }

    ScalarMinimum {
        x: xf,
        f: fx,
        evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nelder_mead_rosenbrock() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = NelderMeadOptions::with_step(vec![0.5, 0.5]);
        let m = nelder_mead(rosen, &[-1.2, 1.0], &opts, &Bounds::unbounded(2));
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-8 && (m.x[1] - 1.0).abs() < 1e-8, "{:?}", m.x);
    }

    #[test]
    fn nelder_mead_respects_bounds() {
        let f = |x: &[f64]| (x[0] + 3.0).powi(2) + (x[1] - 0.25).powi(2);
        let b = Bounds::new(vec![-1.0, -1.0], vec![1.0, 1.0]);
        let m = nelder_mead(f, &[0.5, 0.5], &NelderMeadOptions::with_step(vec![0.1, 0.1]), &b);
        assert!((m.x[0] + 1.0).abs() < 1e-9);
        assert!((m.x[1] - 0.25).abs() < 1e-6);
    }

    #[test]
    fn nelder_mead_stops_at_target() {
        let f = |x: &[f64]| x[0] * x[0] + x[1] * x[1];
        let mut opts = NelderMeadOptions::with_step(vec![1.0, 1.0]);
        opts.f_target = 1e-6;
        let m = nelder_mead(f, &[3.0, -2.0], &opts, &Bounds::unbounded(2));
        assert!(m.converged && m.f <= 1e-6);
    }

    #[test]
    fn brent_finds_parabola_vertex() {
        let m = brent_bounded(|x| (x - 1.3).powi(2) + 2.0, -5.0, 5.0, 1e-12, 500);
        assert!(m.converged);
        assert!((m.x - 1.3).abs() < 1e-7);
        assert!((m.f - 2.0).abs() < 1e-13);
    }

    #[test]
    fn brent_pins_to_boundary() {
        let m = brent_bounded(|x| x, 2.0, 3.0, 1e-10, 500);
        assert!((m.x - 2.0).abs() < 1e-6);
    }
}
