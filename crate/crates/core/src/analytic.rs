//! Closed-form results for the ideal device (`h = 0`, `p = 1`) and the
//! exciton-polariton spectrum of the coupling matrix.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format::{write_csv_header, write_csv_row};
use crate::linalg::{self, HermitianEigen, C64, I};
use crate::minimize::brent_bounded;
use crate::model::{hamiltonian_matrix, Direction, SystemParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("ideal transmission denominator vanishes at delta_c = {detuning}")]
    DegenerateDenominator { detuning: f64 },
    #[error("zero-backward-transmission conditions need {constraint} (got {detail})")]
    Constraint {
        constraint: &'static str,
        detail: String,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("eigendecomposition failed")]
    Eigen,
}

fn ideal_denominator_term(gamma: f64, detuning: f64, delta12: f64, direction: Direction) -> C64 {
    let sign = match direction {
        Direction::Forward => 1.0,
        Direction::Backward => -1.0,
    };
    C64::new(gamma / 2.0, detuning + sign * delta12 / 2.0)
}

/// Transmitted amplitude of the decoupled ideal device; its squared modulus
/// is the transmission.
pub fn ideal_amplitude(
    params: &SystemParams,
    direction: Direction,
    detuning: f64,
) -> Result<C64, AnalyticError> {
    let x = ideal_denominator_term(params.gamma, detuning, params.delta12, direction);
    let cavity = C64::new(params.kappa_ex + params.kappa_i, detuning);
    let denom = params.g0 * params.g0 + x * cavity;
    if denom.norm() < 1e-300 {
        return Err(AnalyticError::DegenerateDenominator { detuning });
    }
    Ok(1.0 - 2.0 * params.kappa_ex * x / denom)
}

/// `T = |1 - 2 kappa_ex X / (g0^2 + X (kappa + i Delta_C))|^2` with
/// `X = gamma/2 + i (Delta_C +- delta12/2)`, `+` forward and `-` backward.
///
/// Only `g0`, `gamma`, `kappa_i`, `kappa_ex` and `delta12` enter; the result
/// models the `h = 0`, `p = 1` device whatever the other fields hold.
pub fn ideal_transmission(
    params: &SystemParams,
    direction: Direction,
    detuning: f64,
) -> Result<f64, AnalyticError> {
    ideal_amplitude(params, direction, detuning).map(|t| t.norm_sqr())
}

/// Splitting and detuning that null the backward transmission of the ideal
/// device at a given waveguide coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsolationConditions {
    pub delta12: f64,
    pub delta_c: f64,
}

pub fn isolation_conditions(
    g0: f64,
    gamma: f64,
    kappa_i: f64,
    kappa_ex: f64,
) -> Result<IsolationConditions, AnalyticError> {
    if !(gamma > 0.0) || !g0.is_finite() || !kappa_i.is_finite() || !kappa_ex.is_finite() {
        return Err(AnalyticError::InvalidInput(format!(
            "g0={g0}, gamma={gamma}, kappa_i={kappa_i}, kappa_ex={kappa_ex}"
        )));
    }
    let excess = kappa_ex - kappa_i;
    if !(excess > 0.0) {
        return Err(AnalyticError::Constraint {
            constraint: "kappa_ex > kappa_i",
            detail: format!("kappa_ex = {kappa_ex}, kappa_i = {kappa_i}"),
        });
    }
    if g0 * g0 < gamma * excess / 2.0 {
        return Err(AnalyticError::Constraint {
            constraint: "g0^2 >= gamma (kappa_ex - kappa_i) / 2",
            detail: format!("g0^2 = {}, bound = {}", g0 * g0, gamma * excess / 2.0),
        });
    }
    let root = (2.0 * g0 * g0 / (gamma * excess) - 1.0).max(0.0).sqrt();
    Ok(IsolationConditions {
        delta12: (gamma - 2.0 * excess) * root,
        delta_c: -excess * root,
    })
}

/// Which polariton the backward null sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingRegime {
    /// `kappa_i < kappa_ex < kappa_i + gamma/2`.
    CavityLike,
    /// `kappa_ex > kappa_i + gamma/2`.
    EmitterLike,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsolationPoint {
    pub kappa_ex: f64,
    pub delta12: f64,
    pub delta_c: f64,
    pub t_fwd_predicted: f64,
}

impl IsolationPoint {
    pub fn regime(&self, kappa_i: f64, gamma: f64) -> CouplingRegime {
        if self.kappa_ex < kappa_i + gamma / 2.0 {
            CouplingRegime::CavityLike
        } else {
            CouplingRegime::EmitterLike
        }
    }
}

/// Ideal forward transmission along the backward-null line at `kappa_ex`.
pub fn isolation_point(
    g0: f64,
    gamma: f64,
    kappa_i: f64,
    kappa_ex: f64,
) -> Result<IsolationPoint, AnalyticError> {
    let cond = isolation_conditions(g0, gamma, kappa_i, kappa_ex)?;
    let params = SystemParams {
        g0,
        gamma,
        kappa_i,
        kappa_ex,
        delta12: cond.delta12,
        ..SystemParams::default()
    };
    let t_fwd = ideal_transmission(&params, Direction::Forward, cond.delta_c)?;
    Ok(IsolationPoint {
        kappa_ex,
        delta12: cond.delta12,
        delta_c: cond.delta_c,
        t_fwd_predicted: t_fwd,
    })
}

const SCAN_POINTS: usize = 201;

/// Search interval of `kappa_ex` for a regime, or `None` when the regime is
/// empty for these rates.
pub fn regime_bracket(
    g0: f64,
    gamma: f64,
    kappa_i: f64,
    regime: CouplingRegime,
) -> Option<(f64, f64)> {
    // beyond this excess the square-root argument turns negative
    let max_excess = 2.0 * g0 * g0 / gamma;
    let edge = 1e-9 * gamma.max(1.0);
    let (lo, hi) = match regime {
        CouplingRegime::CavityLike => (edge, (gamma / 2.0).min(max_excess) - edge),
        CouplingRegime::EmitterLike => {
            (gamma / 2.0 + edge, (gamma / 2.0 + 10.0 * g0).min(max_excess))
        }
    };
    (hi > lo).then_some((kappa_i + lo, kappa_i + hi))
}

/// Maximises the ideal forward transmission over `kappa_ex` within one
/// regime, with splitting and detuning pinned to the backward null.
pub fn optimal_coupling_in_regime(
    g0: f64,
    gamma: f64,
    kappa_i: f64,
    regime: CouplingRegime,
) -> Result<IsolationPoint, AnalyticError> {
    if !(g0 > 0.0) {
        return Err(AnalyticError::InvalidInput(format!("g0 must be > 0, got {g0}")));
    }
    let (lo, hi) = regime_bracket(g0, gamma, kappa_i, regime).ok_or_else(|| {
        AnalyticError::Constraint {
            constraint: "a non-empty kappa_ex interval for the requested regime",
            detail: format!("g0 = {g0}, gamma = {gamma}"),
        }
    })?;
    let objective = |k: f64| match isolation_point(g0, gamma, kappa_i, k) {
        Ok(pt) => -pt.t_fwd_predicted,
        Err(_) => f64::INFINITY,
    };
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let samples: Vec<f64> = (0..SCAN_POINTS).map(|i| lo + step * i as f64).collect();
    let best = samples
        .iter()
        .enumerate()
        .map(|(i, &k)| (i, objective(k)))
        .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc })
        .0;
    let a = samples[best.saturating_sub(1)];
    let b = samples[(best + 1).min(SCAN_POINTS - 1)];
    let refined = brent_bounded(objective, a, b, 1e-10, 500);
    isolation_point(g0, gamma, kappa_i, refined.x)
}

/// Global optimum over both regimes.
pub fn optimal_coupling(g0: f64, gamma: f64, kappa_i: f64) -> Result<IsolationPoint, AnalyticError> {
    let candidates: Vec<IsolationPoint> = [CouplingRegime::CavityLike, CouplingRegime::EmitterLike]
        .into_iter()
        .filter_map(|r| optimal_coupling_in_regime(g0, gamma, kappa_i, r).ok())
        .collect();
    candidates
        .into_iter()
        .max_by(|a, b| a.t_fwd_predicted.total_cmp(&b.t_fwd_predicted))
        .ok_or_else(|| {
            if g0 > 0.0 {
                AnalyticError::Constraint {
                    constraint: "a feasible coupling regime",
                    detail: format!("g0 = {g0}, gamma = {gamma}, kappa_i = {kappa_i}"),
                }
            } else {
                AnalyticError::InvalidInput(format!("g0 must be > 0, got {g0}"))
            }
        })
}

/// Eigenpairs of the coupling matrix with `Delta_C = 0`.
pub fn polariton_modes(params: &SystemParams) -> Result<HermitianEigen<4>, AnalyticError> {
    linalg::hermitian_eigen(&hamiltonian_matrix(params, 0.0)).ok_or(AnalyticError::Eigen)
}

/// Exciton-polariton energies relative to the bare cavity resonance,
/// ascending.
pub fn polariton_eigenvalues(params: &SystemParams) -> Result<[f64; 4], AnalyticError> {
    polariton_modes(params).map(|m| m.values)
}

/// `|a|^2 + |b|^2` of a unit eigenvector.
pub fn photonic_weight(vector: &[C64; 4]) -> f64 {
    vector[0].norm_sqr() + vector[1].norm_sqr()
}

/// Eigenvalues of `N - i diag(kappa, kappa, gamma/2, gamma/2)`: energies
/// (real part) and half-linewidths (minus the imaginary part) of the lossy
/// polaritons. Diagnostic only.
pub fn lossy_eigenvalues(params: &SystemParams) -> Result<[C64; 4], AnalyticError> {
    let mut m = hamiltonian_matrix(params, 0.0);
    let damping = [params.kappa(), params.kappa(), params.gamma / 2.0, params.gamma / 2.0];
    for (i, d) in damping.iter().enumerate() {
        m[i][i] -= I * d;
    }
    linalg::general_eigenvalues(&m).ok_or(AnalyticError::Eigen)
}

/// Groups ascending eigenvalues closer than `tol` into `(value, multiplicity)`.
pub fn degeneracies(values: &[f64], tol: f64) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    let mut group_start = f64::NAN;
    for &v in values {
        match out.last_mut() {
            Some((mean, count)) if (v - group_start).abs() <= tol => {
                *mean = (*mean * *count as f64 + v) / (*count + 1) as f64;
                *count += 1;
            }
            _ => {
                out.push((v, 1));
                group_start = v;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVariable {
    Delta12,
    P,
}

pub fn eigenvalue_sweep(
    params: &SystemParams,
    variable: SweepVariable,
    values: &[f64],
) -> Result<Vec<[f64; 4]>, AnalyticError> {
    values
        .iter()
        .map(|&v| {
            let mut q = *params;
            match variable {
                SweepVariable::Delta12 => q.delta12 = v,
                SweepVariable::P => q.p = v,
            }
            polariton_eigenvalues(&q)
        })
        .collect()
}

pub fn write_eigen_sweep<W: Write>(
    out: W,
    values: &[f64],
    eigenvalues: &[[f64; 4]],
) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    write_csv_header(&mut w, &["sweep_var", "lambda1", "lambda2", "lambda3", "lambda4"])?;
    for (v, e) in values.iter().zip(eigenvalues) {
        write_csv_row(&mut w, &[*v, e[0], e[1], e[2], e[3]])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mat_vec;

    fn eig_residual_ok(params: &SystemParams) {
        let n = hamiltonian_matrix(params, 0.0);
        let norm = linalg::frobenius(&n);
        let modes = polariton_modes(params).unwrap();
        for k in 0..4 {
            let nv = mat_vec(&n, &modes.vectors[k]);
            let r: f64 = nv
                .iter()
                .zip(&modes.vectors[k])
                .map(|(a, v)| (a - v * modes.values[k]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(r <= 1e-10 * norm, "residual {r}");
        }
    }

    #[test]
    fn reciprocal_without_splitting() {
        let params = SystemParams::ideal(20.0, 3.0, 5.0);
        for &d in &[-40.0, -20.0, -3.0, 0.0, 7.0, 33.0] {
            let f = ideal_transmission(&params, Direction::Forward, d).unwrap();
            let b = ideal_transmission(&params, Direction::Backward, d).unwrap();
            assert_eq!(f, b);
        }
    }

    #[test]
    fn bare_critical_coupling() {
        let params = SystemParams {
            g0: 0.0,
            kappa_i: 4.0,
            kappa_ex: 4.0,
            ..SystemParams::default()
        };
        assert!(ideal_transmission(&params, Direction::Forward, 0.0).unwrap() < 1e-30);
    }

    #[test]
    fn isolation_conditions_example() {
        let c = isolation_conditions(20.0, 1.0, 5.0, 5.24).unwrap();
        // direct evaluation: root = sqrt(800 / 0.24 - 1)
        let root = (800.0f64 / 0.24 - 1.0).sqrt();
        assert!((c.delta12 - 0.52 * root).abs() < 1e-9);
        assert!((c.delta_c + 0.24 * root).abs() < 1e-9);
        assert!((c.delta12 - 30.0).abs() < 0.05);
        assert!((c.delta_c + 13.85).abs() < 0.01);

        let params = SystemParams::ideal(20.0, 5.0, 5.24).with_delta12(c.delta12);
        assert!(ideal_transmission(&params, Direction::Backward, c.delta_c).unwrap() <= 1e-10);
        let tf = ideal_transmission(&params, Direction::Forward, c.delta_c).unwrap();
        assert!((tf - 0.975).abs() < 0.005, "{tf}");
    }

    #[test]
    fn isolation_conditions_boundaries() {
        let err = isolation_conditions(20.0, 1.0, 5.0, 5.0).unwrap_err();
        assert!(matches!(err, AnalyticError::Constraint { constraint, .. } if constraint.contains("kappa_ex > kappa_i")));

        // g0^2 = gamma (kappa_ex - kappa_i) / 2 exactly: zero radicand
        let c = isolation_conditions(1.0, 1.0, 3.0, 5.0).unwrap();
        assert_eq!(c.delta12, 0.0);
        assert_eq!(c.delta_c, 0.0);

        let err = isolation_conditions(0.5, 1.0, 3.0, 5.0).unwrap_err();
        assert!(matches!(err, AnalyticError::Constraint { constraint, .. } if constraint.starts_with("g0^2")));
    }

    #[test]
    fn optimal_coupling_example() {
        let pt = optimal_coupling(20.0, 1.0, 5.0).unwrap();
        assert!((pt.kappa_ex - 5.2).abs() <= 0.1, "{pt:?}");
        assert!((pt.t_fwd_predicted - 0.975).abs() <= 0.01);
        assert!(pt.kappa_ex > 5.0 && pt.kappa_ex < 5.5);
        assert_eq!(pt.regime(5.0, 1.0), CouplingRegime::CavityLike);
    }

    #[test]
    fn optimal_coupling_improves_with_g0() {
        let t: Vec<f64> = [20.0, 100.0, 1000.0]
            .iter()
            .map(|&g| optimal_coupling(g, 1.0, 5.0).unwrap().t_fwd_predicted)
            .collect();
        assert!(t[0] < t[1] && t[1] < t[2] && t[2] <= 1.0, "{t:?}");
    }

    #[test]
    fn optimal_coupling_rejects_zero_g0() {
        assert!(optimal_coupling(0.0, 1.0, 5.0).is_err());
    }

    #[test]
    fn eigenvalues_ideal_degenerate_pairs() {
        let params = SystemParams::ideal(20.0, 3.0, 5.0);
        let e = polariton_eigenvalues(&params).unwrap();
        let expected = [-20.0, -20.0, 20.0, 20.0];
        for k in 0..4 {
            assert!((e[k] - expected[k]).abs() < 1e-9);
        }
        let d = degeneracies(&e, 1e-9);
        assert_eq!(d.len(), 2);
        assert!((d[0].0 + 20.0).abs() < 1e-9 && d[0].1 == 2);
        assert!((d[1].0 - 20.0).abs() < 1e-9 && d[1].1 == 2);
        eig_residual_ok(&params);
    }

    #[test]
    fn eigenvalues_zero_helicity_standing_wave() {
        // the emitter couples to one standing-wave combination with strength sqrt(2) g0
        let params = SystemParams::ideal(20.0, 3.0, 5.0).with_mixing(0.0, 0.0);
        let e = polariton_eigenvalues(&params).unwrap();
        let s = 20.0 * 2f64.sqrt();
        let expected = [-s, 0.0, 0.0, s];
        for k in 0..4 {
            assert!((e[k] - expected[k]).abs() < 1e-9, "{e:?}");
        }
        let d = degeneracies(&e, 1e-9);
        assert_eq!(d.len(), 3);
        assert_eq!(d[1].1, 2);
        eig_residual_ok(&params);
    }

    #[test]
    fn eigenvalues_backscatter_only() {
        let params = SystemParams {
            g0: 0.0,
            h: 20.0,
            ..SystemParams::default()
        };
        let e = polariton_eigenvalues(&params).unwrap();
        let expected = [-20.0, 0.0, 0.0, 20.0];
        for k in 0..4 {
            assert!((e[k] - expected[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn eigenvalue_trace_vanishes() {
        for &(h, p, d) in &[(0.0, 1.0, 17.0), (20.0, 0.8, 30.0), (3.0, -0.2, -44.0)] {
            let params = SystemParams::ideal(20.0, 3.0, 5.0).with_mixing(h, p).with_delta12(d);
            let e = polariton_eigenvalues(&params).unwrap();
            assert!(e.iter().sum::<f64>().abs() < 1e-10);
            eig_residual_ok(&params);
        }
    }

    #[test]
    fn lossy_eigenvalues_have_damped_imaginary_parts() {
        let params = SystemParams::ideal(20.0, 3.0, 5.0).with_mixing(20.0, 0.8).with_delta12(30.0);
        let l = lossy_eigenvalues(&params).unwrap();
        let herm = polariton_eigenvalues(&params).unwrap();
        for (z, e) in l.iter().zip(&herm) {
            assert!(z.im < 0.0);
            assert!((z.re - e).abs() < 2.0);
        }
        // trace of the lossy matrix: sum of -i damping
        let tr: C64 = l.iter().sum();
        assert!((tr.im + 2.0 * 8.0 + 1.0).abs() < 1e-9);
    }

    #[test]
    fn degeneracy_grouping() {
        let d = degeneracies(&[-1.0, -1.0 + 1e-12, 0.5, 2.0, 2.0, 2.0], 1e-9);
        assert_eq!(d.len(), 3);
        assert_eq!(d[0].1, 2);
        assert_eq!(d[2], (2.0, 3));
    }
}
