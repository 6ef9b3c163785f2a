//! Pseudo-arclength tracing of the `T_b = 0` curve in
//! `(kappa_ex, delta12, delta_c)`.
//!
//! `T_b = 0` is two real conditions (the real and imaginary parts of the
//! backward amplitude), so the zero set is a curve. With backscattering it
//! can fold back in `kappa_ex`, which is why it is followed by arclength
//! rather than parametrised by `kappa_ex`.

use super::{ideal_seeds, search_bounds, t_fwd_at, OptimizationResult, OptimizeError};
use crate::linalg::C64;
use crate::minimize::{brent_bounded, nelder_mead, Bounds, NelderMeadOptions};
use crate::model::{self, DriveSpec, SystemParams};

/// `T_b` accepted as on the curve.
const CURVE_TB_TOL: f64 = 1e-12;
const MAX_STEPS: usize = 6000;
const MIN_STEP: f64 = 1e-7;
const MAX_STEP: f64 = 2.0;
const FIRST_STEP: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// `(kappa_ex, delta12, delta_c)`.
    pub x: [f64; 3],
    pub t_fwd: f64,
    pub t_bwd: f64,
}

fn amplitude(fixed: &SystemParams, x: &[f64; 3]) -> Option<C64> {
    let p = fixed.with_kappa_ex(x[0]).with_delta12(x[1]);
    model::transmission_amplitude(&p, DriveSpec::backward(x[2])).ok()
}

fn t_bwd(fixed: &SystemParams, x: &[f64; 3]) -> f64 {
    amplitude(fixed, x).map_or(f64::INFINITY, |r| r.norm_sqr())
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(x: &[f64; 3], s: f64, t: &[f64; 3]) -> [f64; 3] {
    [x[0] + s * t[0], x[1] + s * t[1], x[2] + s * t[2]]
}

/// Unit tangent `grad Re r x grad Im r` from central differences.
fn tangent(fixed: &SystemParams, x: &[f64; 3]) -> Option<[f64; 3]> {
    let mut grad = [[0.0; 3]; 2];
    for i in 0..3 {
        let h = 1e-6 * x[i].abs().max(1.0);
        let mut up = *x;
        let mut down = *x;
        up[i] += h;
        down[i] -= h;
        let d = (amplitude(fixed, &up)? - amplitude(fixed, &down)?) / (2.0 * h);
        grad[0][i] = d.re;
        grad[1][i] = d.im;
    }
    let [a, b] = grad;
    let t = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    let n = norm(&t);
    (n > 0.0 && n.is_finite()).then(|| [t[0] / n, t[1] / n, t[2] / n])
}

/// Orthonormal basis of the plane normal to `t`.
fn normal_plane(t: &[f64; 3]) -> [[f64; 3]; 2] {
    let k = (0..3)
        .min_by(|&i, &j| t[i].abs().total_cmp(&t[j].abs()))
        .unwrap_or(0);
    let mut e = [0.0; 3];
    e[k] = 1.0;
    let proj = dot(&e, t);
    let n1 = axpy(&e, -proj, t);
    let l = norm(&n1);
    let n1 = [n1[0] / l, n1[1] / l, n1[2] / l];
    let n2 = [
        t[1] * n1[2] - t[2] * n1[1],
        t[2] * n1[0] - t[0] * n1[2],
        t[0] * n1[1] - t[1] * n1[0],
    ];
    [n1, n2]
}

/// Drives `T_b` to zero within the plane through `pred` normal to `t`;
/// rejects corrections longer than `radius`.
fn correct(fixed: &SystemParams, pred: &[f64; 3], t: &[f64; 3], radius: f64) -> Option<[f64; 3]> {
    let [n1, n2] = normal_plane(t);
    let at = |u: &[f64]| axpy(&axpy(pred, u[0], &n1), u[1], &n2);
    let step = (0.1 * radius).max(1e-6);
    let opts = NelderMeadOptions {
        f_target: 1e-26,
        x_tol: 1e-14,
        max_evals: 6000,
        ..NelderMeadOptions::with_step(vec![step, step])
    };
    let m = nelder_mead(|u| t_bwd(fixed, &at(u)), &[0.0, 0.0], &opts, &Bounds::unbounded(2));
    let y = at(&m.x);
    let shift = m.x[0].hypot(m.x[1]);
    (m.f <= CURVE_TB_TOL && shift <= radius && search_bounds(fixed).contains(&y)).then_some(y)
}

/// Minimises `T_b` over all three coordinates from `seed`.
fn project(fixed: &SystemParams, seed: &[f64; 3]) -> Option<[f64; 3]> {
    let g = fixed.gamma;
    let opts = NelderMeadOptions {
        f_target: 1e-26,
        x_tol: 1e-14,
        max_evals: 30_000,
        ..NelderMeadOptions::with_step(vec![0.5 * g, 2.0 * g, 2.0 * g])
    };
    let m = nelder_mead(
        |x| t_bwd(fixed, &[x[0], x[1], x[2]]),
        seed,
        &opts,
        &search_bounds(fixed),
    );
    let y = [m.x[0], m.x[1], m.x[2]];
    (m.f <= CURVE_TB_TOL).then_some(y)
}

fn curve_point(fixed: &SystemParams, x: [f64; 3]) -> CurvePoint {
    CurvePoint {
        x,
        t_fwd: t_fwd_at(fixed, x[0], x[1], x[2]),
        t_bwd: t_bwd(fixed, &x),
    }
}

/// Follows the curve from `start` in direction `sign` until it leaves the
/// search box, closes on itself or the step size collapses.
fn follow(fixed: &SystemParams, start: [f64; 3], sign: f64) -> Vec<CurvePoint> {
    let mut out = Vec::new();
    let Some(t0) = tangent(fixed, &start) else {
        return out;
    };
    let mut t = t0.map(|v| sign * v);
    let mut x = start;
    let mut s = FIRST_STEP;
    let mut travelled = 0.0;
    for _ in 0..MAX_STEPS {
        if s < MIN_STEP {
            break;
        }
        let pred = axpy(&x, s, &t);
        let next = correct(fixed, &pred, &t, s).and_then(|y| {
            let tn = tangent(fixed, &y)?;
            let tn = if dot(&tn, &t) < 0.0 { tn.map(|v| -v) } else { tn };
            // a sharp turn means the corrector jumped branches
            (dot(&tn, &t) > 0.9).then_some((y, tn))
        });
        match next {
            Some((y, tn)) => {
                travelled += norm(&[y[0] - x[0], y[1] - x[1], y[2] - x[2]]);
                x = y;
                t = tn;
                out.push(curve_point(fixed, x));
                s = (s * 1.5).min(MAX_STEP);
                let back = [x[0] - start[0], x[1] - start[1], x[2] - start[2]];
                if travelled > 10.0 * FIRST_STEP && norm(&back) < s {
                    break;
                }
            }
            None => s /= 2.0,
        }
    }
    out
}

/// Points of the `T_b = 0` curve through the projection of `seed`, ordered
/// along the curve.
pub fn trace_zero_tb_curve(
    fixed: &SystemParams,
    seed: [f64; 3],
) -> Result<Vec<CurvePoint>, OptimizeError> {
    fixed.validate()?;
    let start = project(fixed, &seed).ok_or(OptimizeError::NoZeroLine)?;
    let mut back = follow(fixed, start, -1.0);
    back.reverse();
    back.push(curve_point(fixed, start));
    back.extend(follow(fixed, start, 1.0));
    Ok(back)
}

/// Point of the zero-`T_b` curve with the largest forward transmission.
///
/// The curve is traced from the projections of the ideal-device optima of
/// both coupling regimes; the best sample is refined by a Brent search along
/// the local tangent with every trial point corrected back onto the curve.
pub fn maximize_contrast(fixed: &SystemParams) -> Result<OptimizationResult, OptimizeError> {
    fixed.validate()?;
    let mut curves = Vec::new();
    for s in ideal_seeds(fixed) {
        if let Ok(c) = trace_zero_tb_curve(fixed, [s.kappa_ex, s.delta12, s.delta_c]) {
            curves.push(c);
        }
    }
    let steps: usize = curves.iter().map(Vec::len).sum();
    let (ci, pi) = curves
        .iter()
        .enumerate()
        .flat_map(|(ci, c)| c.iter().enumerate().map(move |(pi, p)| (ci, pi, p.t_fwd)))
        .filter(|t| t.2.is_finite())
        .max_by(|a, b| a.2.total_cmp(&b.2))
        .map(|(ci, pi, _)| (ci, pi))
        .ok_or(OptimizeError::NoZeroLine)?;
    let curve = &curves[ci];
    let best = curve[pi].x;
    let t = tangent(fixed, &best).ok_or(OptimizeError::NoZeroLine)?;
    let reach = |j: Option<usize>| {
        j.and_then(|j| curve.get(j))
            .map(|p| dot(&[p.x[0] - best[0], p.x[1] - best[1], p.x[2] - best[2]], &t))
    };
    let lo = reach(pi.checked_sub(1)).unwrap_or(-FIRST_STEP);
    let hi = reach(Some(pi + 1)).unwrap_or(FIRST_STEP);
    let (lo, hi) = (lo.min(hi).min(-1e-9), hi.max(lo).max(1e-9));
    let radius = 4.0 * (hi - lo);
    let on_curve = |tau: f64| correct(fixed, &axpy(&best, tau, &t), &t, radius);
    let refined = brent_bounded(
        |tau| on_curve(tau).map_or(f64::INFINITY, |y| -t_fwd_at(fixed, y[0], y[1], y[2])),
        lo,
        hi,
        1e-10,
        200,
    );
    let x = match on_curve(refined.x) {
        Some(y) if -refined.f >= curve[pi].t_fwd => y,
        _ => best,
    };
    let mut result = OptimizationResult::evaluate(fixed, x[0], x[1], x[2], steps + refined.evals, false)?;
    result.converged = result.t_bwd <= CURVE_TB_TOL;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::optimal_coupling;

    #[test]
    fn tangent_is_orthogonal_to_gradients() {
        let fixed = SystemParams::ideal(20.0, 5.0, 5.0);
        let c = crate::analytic::isolation_conditions(20.0, 1.0, 5.0, 5.3).unwrap();
        let x = [5.3, c.delta12, c.delta_c];
        let t = tangent(&fixed, &x).unwrap();
        assert!((norm(&t) - 1.0).abs() < 1e-12);
        // moving along the tangent keeps T_b second-order small
        let y = axpy(&x, 1e-3, &t);
        assert!(t_bwd(&fixed, &y) < 1e-9);
    }

    #[test]
    fn ideal_maximum_matches_analytic() {
        let fixed = SystemParams::ideal(20.0, 5.0, 5.0);
        let r = maximize_contrast(&fixed).unwrap();
        let a = optimal_coupling(20.0, 1.0, 5.0).unwrap();
        assert!((r.kappa_ex - a.kappa_ex).abs() < 1e-3, "{r:?} vs {a:?}");
        assert!((r.t_fwd - a.t_fwd_predicted).abs() < 1e-6);
        assert!(r.converged && r.saturated);
    }
}
