//! Isolation-contrast optimisation on the zero-backward-transmission
//! manifold and `(kappa_ex, delta12)` contour sweeps.
//!
//! Everything here is deterministic: fixed seeds, fixed evaluation order, no
//! random restarts.

mod curve;
mod sweep;

pub use curve::{maximize_contrast, trace_zero_tb_curve, CurvePoint};
pub use sweep::{sweep_grid, ContourData, RidgePoint};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{self, isolation_conditions, AnalyticError, CouplingRegime, IsolationPoint};
use crate::minimize::{brent_bounded, nelder_mead, Bounds, NelderMeadOptions};
use crate::model::{self, DriveSpec, ModelError, SystemParams};

/// `T_b` at or below which contrast is reported as saturated.
pub const TB_FLOOR: f64 = 1e-12;
/// Acceptance threshold for points of the `kappa_ex`-parametrised line.
pub const LINE_TB_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("no transmission dip: local search escaped [{lower}, {upper}] (seed {seed})")]
    NoDip { seed: f64, lower: f64, upper: f64 },
    #[error("backward transmission could not be driven below {threshold:e} at kappa_ex = {kappa_ex:?}")]
    ContinuationFailure { kappa_ex: Vec<f64>, threshold: f64 },
    #[error("no zero-backward-transmission point found near the seeds")]
    NoZeroLine,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `10 log10(T_f / max(T_b, floor))` and whether the floor was hit.
pub fn contrast_db(t_fwd: f64, t_bwd: f64) -> (f64, bool) {
    let saturated = t_bwd < TB_FLOOR;
    (10.0 * (t_fwd / t_bwd.max(TB_FLOOR)).log10(), saturated)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub kappa_ex: f64,
    pub delta12: f64,
    pub delta_c: f64,
    pub t_fwd: f64,
    pub t_bwd: f64,
    pub contrast_db: f64,
    /// `T_b` fell below [`TB_FLOOR`]; `contrast_db` is a lower bound.
    pub saturated: bool,
    pub iterations: usize,
    pub converged: bool,
}

impl OptimizationResult {
    /// Evaluates the model at `(kappa_ex, delta12, delta_c)`.
    pub fn evaluate(
        fixed: &SystemParams,
        kappa_ex: f64,
        delta12: f64,
        delta_c: f64,
        iterations: usize,
        converged: bool,
    ) -> Result<Self, OptimizeError> {
        let p = fixed.with_kappa_ex(kappa_ex).with_delta12(delta12);
        let t_fwd = model::transmission(&p, DriveSpec::forward(delta_c))?;
        let t_bwd = model::transmission(&p, DriveSpec::backward(delta_c))?;
        let (contrast_db, saturated) = contrast_db(t_fwd, t_bwd);
        Ok(Self {
            kappa_ex,
            delta12,
            delta_c,
            t_fwd,
            t_bwd,
            contrast_db,
            saturated,
            iterations,
            converged,
        })
    }
}

fn t_bwd_at(fixed: &SystemParams, kappa_ex: f64, delta12: f64, delta_c: f64) -> f64 {
    let p = fixed.with_kappa_ex(kappa_ex).with_delta12(delta12);
    model::transmission(&p, DriveSpec::backward(delta_c)).unwrap_or(f64::INFINITY)
}

fn t_fwd_at(fixed: &SystemParams, kappa_ex: f64, delta12: f64, delta_c: f64) -> f64 {
    let p = fixed.with_kappa_ex(kappa_ex).with_delta12(delta12);
    model::transmission(&p, DriveSpec::forward(delta_c)).unwrap_or(f64::NAN)
}

/// Detuning of the cavity-like dip of the backward spectrum.
///
/// A polariton of energy `lambda` gives a dip at `Delta_C = -lambda`. Each
/// polariton dip with `Delta_C <= 0` (every dip if there are none) seeds a
/// bounded Brent search over a bracket reaching halfway to the neighbouring
/// dips; the deepest refined dip wins, ties going to the more photon-like
/// polariton (`|a|^2 + |b|^2`). With backscattering the most photon-like
/// polariton need not be the one whose dip can close, hence the depth test.
pub fn cavity_dip_detuning(params: &SystemParams) -> Result<f64, OptimizeError> {
    params.validate()?;
    let modes = analytic::polariton_modes(params)?;
    let dips: Vec<f64> = modes.values.iter().map(|l| -l).collect();
    let weights: Vec<f64> = modes.vectors.iter().map(analytic::photonic_weight).collect();
    let tol = 1e-9 * (1.0 + params.g0 + params.h + params.delta12.abs());
    let mut candidates: Vec<usize> = (0..4).filter(|&k| dips[k] <= tol).collect();
    if candidates.is_empty() {
        candidates = (0..4).collect();
    }
    // degenerate polaritons share a dip; keep the more photon-like one
    let mut unique: Vec<usize> = Vec::new();
    for k in candidates {
        match unique.last_mut() {
            Some(u) if (dips[*u] - dips[k]).abs() <= tol => {
                if weights[k] > weights[*u] {
                    *u = k;
                }
            }
            _ => unique.push(k),
        }
    }

    let min_width = 0.25 * (params.kappa() + params.gamma / 2.0);
    let t_b = |d: f64| model::transmission(params, DriveSpec::backward(d)).unwrap_or(f64::INFINITY);
    let mut best: Option<(f64, f64, f64)> = None;
    let mut escaped = None;
    for &k in &unique {
        let seed = dips[k];
        let nearest = dips
            .iter()
            .map(|d| (d - seed).abs())
            .filter(|&g| g > tol)
            .fold(f64::INFINITY, f64::min);
        let width = if nearest.is_finite() {
            (nearest / 2.0).max(min_width)
        } else {
            2.0 * params.kappa() + params.gamma
        };
        let (lower, upper) = (seed - width, seed + width);
        let found = brent_bounded(t_b, lower, upper, 1e-10, 500);
        let edge = 1e-6 * width;
        if found.x - lower <= edge || upper - found.x <= edge {
            escaped.get_or_insert(OptimizeError::NoDip { seed, lower, upper });
            continue;
        }
        let better = match best {
            None => true,
            Some((f, _, w)) => found.f < f || (found.f == f && weights[k] > w),
        };
        if better {
            best = Some((found.f, found.x, weights[k]));
        }
    }
    match (best, escaped) {
        (Some((_, x, _)), _) => Ok(x),
        (None, Some(e)) => Err(e),
        (None, None) => unreachable!("at least one candidate dip"),
    }
}

/// Search box for `(kappa_ex, delta12, delta_c)` around a device.
pub(crate) fn search_bounds(fixed: &SystemParams) -> Bounds {
    let span = 50.0 * fixed.g0.max(fixed.h).max(fixed.gamma);
    Bounds::new(
        vec![1e-9 * fixed.gamma, -span, -span],
        vec![fixed.kappa_i + fixed.gamma / 2.0 + 10.0 * fixed.g0.max(fixed.gamma), span, span],
    )
}

/// Minimises `T_b` over `(delta12, delta_c)` at fixed `kappa_ex`.
fn null_at_kappa(fixed: &SystemParams, kappa_ex: f64, seed: [f64; 2], step: f64) -> (f64, [f64; 2], usize) {
    let b3 = search_bounds(fixed);
    let bounds = Bounds::new(b3.lower[1..].to_vec(), b3.upper[1..].to_vec());
    let opts = NelderMeadOptions {
        f_target: 1e-26,
        ..NelderMeadOptions::with_step(vec![step, step])
    };
    let m = nelder_mead(|x| t_bwd_at(fixed, kappa_ex, x[0], x[1]), &seed, &opts, &bounds);
    (m.f, [m.x[0], m.x[1]], m.iterations)
}

/// Ideal-device optimum used to seed the non-ideal searches, one per regime
/// that exists.
pub(crate) fn ideal_seeds(fixed: &SystemParams) -> Vec<IsolationPoint> {
    [CouplingRegime::CavityLike, CouplingRegime::EmitterLike]
        .into_iter()
        .filter_map(|r| analytic::optimal_coupling_in_regime(fixed.g0, fixed.gamma, fixed.kappa_i, r).ok())
        .collect()
}

fn null_from(fixed: &SystemParams, kappa_ex: f64, seed: [f64; 2], widen: f64) -> (f64, [f64; 2]) {
    let step = widen * 0.5 * fixed.gamma.max(1e-3 * (seed[0].abs() + seed[1].abs()));
    let (tb, x, _) = null_at_kappa(fixed, kappa_ex, seed, step);
    (tb, x)
}

/// Samples the zero-`T_b` line at `n_points` evenly spaced `kappa_ex` values
/// in `[lo, hi]`, minimising `T_b` over `(delta12, delta_c)` at each one.
///
/// The first sample is seeded from the ideal-device conditions at that
/// `kappa_ex`, falling back to the ideal optima of both coupling regimes;
/// later samples are seeded by linear extrapolation of the previous two.
/// Every sample must reach `T_b <= 1e-8`. The reported `t_fwd_predicted` is the model's forward
/// transmission at the point.
pub fn trace_zero_tb_line(
    fixed: &SystemParams,
    kappa_ex_range: (f64, f64),
    n_points: usize,
) -> Result<Vec<IsolationPoint>, OptimizeError> {
    fixed.validate()?;
    let (lo, hi) = kappa_ex_range;
    if !(lo > fixed.kappa_i) || !(hi >= lo) || n_points == 0 {
        return Err(OptimizeError::InvalidInput(format!(
            "kappa_ex range ({lo}, {hi}) with {n_points} points; need kappa_i < lo <= hi"
        )));
    }
    let kappas = model::linspace(lo, hi, n_points);
    let mut out: Vec<IsolationPoint> = Vec::with_capacity(n_points);
    let mut failed = Vec::new();
    let mut history: Vec<(f64, [f64; 2])> = Vec::new();
    for &k in &kappas {
        let (tb, x) = match history.as_slice() {
            [.., (k0, x0), (k1, x1)] => {
                let t = (k - k1) / (k1 - k0);
                let seed = [x1[0] + t * (x1[0] - x0[0]), x1[1] + t * (x1[1] - x0[1])];
                let (tb, x) = null_from(fixed, k, seed, 1.0);
                if tb <= LINE_TB_TOL {
                    (tb, x)
                } else {
                    // retry from the previous point with a wider simplex
                    let (tb2, x2) = null_from(fixed, k, *x1, 4.0);
                    if tb2 < tb { (tb2, x2) } else { (tb, x) }
                }
            }
            [(_, x1)] => null_from(fixed, k, *x1, 1.0),
            [] => {
                // ideal-device conditions at this kappa_ex, then the ideal optima
                let mut seeds: Vec<[f64; 2]> = isolation_conditions(fixed.g0, fixed.gamma, fixed.kappa_i, k)
                    .map(|c| vec![[c.delta12, c.delta_c]])
                    .unwrap_or_default();
                seeds.extend(ideal_seeds(fixed).iter().map(|s| [s.delta12, s.delta_c]));
                let mut best = (f64::INFINITY, [f64::NAN; 2]);
                for seed in seeds {
                    let found = null_from(fixed, k, seed, 1.0);
                    if found.0 < best.0 {
                        best = found;
                    }
                    if best.0 <= LINE_TB_TOL {
                        break;
                    }
                }
                best
            }
        };
        if tb > LINE_TB_TOL {
            failed.push(k);
            continue;
        }
        history.push((k, x));
        out.push(IsolationPoint {
            kappa_ex: k,
            delta12: x[0],
            delta_c: x[1],
            t_fwd_predicted: t_fwd_at(fixed, k, x[0], x[1]),
        });
    }
    if failed.is_empty() {
        Ok(out)
    } else {
        Err(OptimizeError::ContinuationFailure {
            kappa_ex: failed,
            threshold: LINE_TB_TOL,
        })
    }
}

/// Maximises the contrast over `(kappa_ex, delta_c)` with the splitting held
/// at `delta12`.
pub fn maximize_contrast_at_splitting(
    fixed: &SystemParams,
    delta12: f64,
) -> Result<OptimizationResult, OptimizeError> {
    fixed.validate()?;
    let seed = ideal_seeds(fixed)
        .into_iter()
        .max_by(|a, b| a.t_fwd_predicted.total_cmp(&b.t_fwd_predicted))
        .map(|s| [s.kappa_ex, s.delta_c])
        .unwrap_or([fixed.kappa_ex, 0.0]);
    let b3 = search_bounds(fixed);
    let bounds = Bounds::new(vec![b3.lower[0], b3.lower[2]], vec![b3.upper[0], b3.upper[2]]);
    let opts = NelderMeadOptions {
        // contrast in dB: differences below 1e-10 dB carry no information
        f_tol: 1e-10,
        x_tol: 1e-6,
        ..NelderMeadOptions::with_step(vec![0.5 * fixed.gamma, 2.0 * fixed.gamma])
    };
    let objective = |x: &[f64]| {
        let tf = t_fwd_at(fixed, x[0], delta12, x[1]);
        let tb = t_bwd_at(fixed, x[0], delta12, x[1]);
        -contrast_db(tf, tb).0
    };
    let m = nelder_mead(objective, &seed, &opts, &bounds);
    OptimizationResult::evaluate(fixed, m.x[0], delta12, m.x[1], m.iterations, m.converged)
}
