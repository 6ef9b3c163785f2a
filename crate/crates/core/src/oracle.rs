//! Reference steady state of the full master equation on a truncated Fock
//! space, used to check the linearised model at weak drive.
//!
//! `drho/dt = -i[H, rho] + 2 kappa L(a) rho + 2 kappa L(b) rho
//!            + gamma L(sigma_1) rho + gamma L(sigma_2) rho`
//! with `L(O) rho = O rho O^+ - (O^+ O rho + rho O^+ O) / 2` and genuine
//! (non-bosonic) emitter operators.

use std::io::Write;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::lu::partial_pivoting::{factor, solve};
use faer::{Mat, Par};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format::{write_csv_header, write_csv_row};
use crate::linalg::{self, C64, I, ONE, ZERO};
use crate::model::{self, couplings, Direction, DriveSpec, ModelError, SystemParams};

pub const MAX_PHOTONS: usize = 4;

const HERMITICITY_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const POSITIVITY_TOL: f64 = -1e-8;
const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("photon cutoff n_max = {n_max} outside 1..={MAX_PHOTONS}")]
    DimensionGuard { n_max: usize },
    #[error("oracle drive amplitude must be finite and >= 0 (> 0 for transmission), got {0}")]
    InvalidDrive(f64),
    #[error("steady state is not unique: null space of the Liouvillian has dimension {dimension}")]
    NonUniqueSteadyState { dimension: usize },
    #[error("steady-state residual {residual:e} exceeds {RESIDUAL_TOL:e}")]
    Residual { residual: f64 },
    #[error("steady state is unphysical: {what} = {value:e}")]
    Unphysical { what: &'static str, value: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Internal level structure of the emitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmitterModel {
    /// Ground state plus two excited states; at most one excitation.
    #[default]
    VType,
    /// Two independent two-level systems (four states, both excited allowed).
    TwoLevelPair,
}

impl EmitterModel {
    pub fn levels(self) -> usize {
        match self {
            EmitterModel::VType => 3,
            EmitterModel::TwoLevelPair => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSpec {
    /// Photon cutoff per cavity mode.
    pub n_max: usize,
    /// Drive amplitude used by the oracle, in units of `gamma`.
    pub drive_amp: f64,
    #[serde(default)]
    pub emitter: EmitterModel,
}

impl TruncationSpec {
    pub fn new(n_max: usize, drive_amp: f64) -> Self {
        Self {
            n_max,
            drive_amp,
            emitter: EmitterModel::VType,
        }
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        if !(1..=MAX_PHOTONS).contains(&self.n_max) {
            return Err(OracleError::DimensionGuard { n_max: self.n_max });
        }
        if !(self.drive_amp.is_finite() && self.drive_amp >= 0.0) {
            return Err(OracleError::InvalidDrive(self.drive_amp));
        }
        Ok(())
    }

    pub fn space(&self) -> HilbertSpace {
        HilbertSpace {
            n_max: self.n_max,
            emitter: self.emitter,
        }
    }
}

/// Truncated product space, basis `(n_a, n_b, s)` in lexicographic order;
/// `s` runs over `(g, e1, e2)` for [`EmitterModel::VType`] and over
/// `(s1, s2)` in `{0, 1}^2` for [`EmitterModel::TwoLevelPair`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HilbertSpace {
    pub n_max: usize,
    pub emitter: EmitterModel,
}

impl HilbertSpace {
    pub fn dim(&self) -> usize {
        (self.n_max + 1) * (self.n_max + 1) * self.emitter.levels()
    }

    pub fn index(&self, n_a: usize, n_b: usize, s: usize) -> usize {
        (n_a * (self.n_max + 1) + n_b) * self.emitter.levels() + s
    }

    fn states(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let n = self.n_max + 1;
        let s = self.emitter.levels();
        (0..n).flat_map(move |a| (0..n).flat_map(move |b| (0..s).map(move |e| (a, b, e))))
    }

    fn op_a(&self) -> Op {
        let mut op = Op::zeros(self.dim());
        for (na, nb, s) in self.states().filter(|t| t.0 > 0) {
            op.add(self.index(na - 1, nb, s), self.index(na, nb, s), C64::from((na as f64).sqrt()));
        }
        op
    }

    fn op_b(&self) -> Op {
        let mut op = Op::zeros(self.dim());
        for (na, nb, s) in self.states().filter(|t| t.1 > 0) {
            op.add(self.index(na, nb - 1, s), self.index(na, nb, s), C64::from((nb as f64).sqrt()));
        }
        op
    }

    /// Lowering operator of excited state `k` (1 or 2).
    fn op_sigma(&self, k: usize) -> Op {
        let mut op = Op::zeros(self.dim());
        for (na, nb, s) in self.states() {
            let target = match self.emitter {
                EmitterModel::VType => (s == k).then_some(0),
                // s = 2 s1 + s2
                EmitterModel::TwoLevelPair => {
                    let bit = if k == 1 { 2 } else { 1 };
                    (s & bit != 0).then_some(s & !bit)
                }
            };
            if let Some(t) = target {
                op.add(self.index(na, nb, t), self.index(na, nb, s), ONE);
            }
        }
        op
    }
}

/// Dense row-major operator on the truncated space.
#[derive(Debug, Clone, PartialEq)]
struct Op {
    dim: usize,
    data: Vec<C64>,
}

impl Op {
    fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    fn add(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.dim + j] += v;
    }

    fn dagger(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.data[j * self.dim + i] = self.get(i, j).conj();
            }
        }
        out
    }

    fn matmul(&self, other: &Op) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for (i, k, v) in self.nonzeros() {
            for j in 0..n {
                let w = other.get(k, j);
                if w != ZERO {
                    out.data[i * n + j] += v * w;
                }
            }
        }
        out
    }

    fn axpy(&mut self, alpha: C64, x: &Op) {
        for (d, s) in self.data.iter_mut().zip(&x.data) {
            *d += alpha * s;
        }
    }

    fn nonzeros(&self) -> Vec<(usize, usize, C64)> {
        let n = self.dim;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != ZERO)
            .map(|(k, v)| (k / n, k % n, *v))
            .collect()
    }
}

/// Generator of the master equation acting on row-major `vec(rho)`
/// (`rho_ij` at index `i * dim + j`).
#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub matrix: Mat<C64>,
    pub space: HilbertSpace,
}

impl Liouvillian {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

struct Operators {
    a: Op,
    b: Op,
}

fn hamiltonian(params: &SystemParams, space: &HilbertSpace, drive: DriveSpec, amp: f64) -> (Op, Operators, [Op; 2]) {
    let a = space.op_a();
    let b = space.op_b();
    let s1 = space.op_sigma(1);
    let s2 = space.op_sigma(2);
    let (ad, bd, s1d, s2d) = (a.dagger(), b.dagger(), s1.dagger(), s2.dagger());
    let (gp, gm) = couplings(params.g0, params.theta, params.p);
    let det = C64::from(drive.detuning);
    let half = params.delta12 / 2.0;

    let mut h = Op::zeros(space.dim());
    h.axpy(det, &ad.matmul(&a));
    h.axpy(det, &bd.matmul(&b));
    h.axpy(det + half, &s1d.matmul(&s1));
    h.axpy(det - half, &s2d.matmul(&s2));
    let ab = ad.matmul(&b);
    h.axpy(C64::from(params.h), &ab);
    h.axpy(C64::from(params.h), &ab.dagger());
    // a^+ (g+^* s1 + g-^* s2) + b^+ (g- s1 + g+ s2) + h.c.
    let mut int = Op::zeros(space.dim());
    int.axpy(gp.conj(), &ad.matmul(&s1));
    int.axpy(gm.conj(), &ad.matmul(&s2));
    int.axpy(gm, &bd.matmul(&s1));
    int.axpy(gp, &bd.matmul(&s2));
    h.axpy(ONE, &int);
    h.axpy(ONE, &int.dagger());
    let driven = if drive.direction == Direction::Forward { &a } else { &b };
    h.axpy(C64::from(amp), driven);
    h.axpy(C64::from(amp), &driven.dagger());
    (h, Operators { a, b }, [s1, s2])
}

pub fn build_liouvillian(
    params: &SystemParams,
    trunc: &TruncationSpec,
    drive: DriveSpec,
) -> Result<Liouvillian, OracleError> {
    trunc.validate()?;
    params.validate()?;
    let space = trunc.space();
    let d = space.dim();
    let (h, ops, sigmas) = hamiltonian(params, &space, drive, trunc.drive_amp);
    let collapse = [
        (2.0 * params.kappa(), &ops.a),
        (2.0 * params.kappa(), &ops.b),
        (params.gamma, &sigmas[0]),
        (params.gamma, &sigmas[1]),
    ];

    // K = -i H - sum r c^+ c / 2;  d rho = K rho + rho K^+ + sum r c rho c^+
    let mut k = Op::zeros(d);
    k.axpy(-I, &h);
    for (rate, c) in &collapse {
        k.axpy(C64::from(-rate / 2.0), &c.dagger().matmul(c));
    }
    let mut l = Mat::<C64>::zeros(d * d, d * d);
    for (i, kk, v) in k.nonzeros() {
        for j in 0..d {
            l[(i * d + j, kk * d + j)] += v;
        }
    }
    for (j, ll, v) in k.nonzeros() {
        // (rho K^+)_ij = sum_l rho_il conj(K_jl)
        for i in 0..d {
            l[(i * d + j, i * d + ll)] += v.conj();
        }
    }
    for (rate, c) in &collapse {
        let nz = c.nonzeros();
        for &(i, kk, x) in &nz {
            for &(j, ll, y) in &nz {
                l[(i * d + j, kk * d + ll)] += x * y.conj() * *rate;
            }
        }
    }
    Ok(Liouvillian { matrix: l, space })
}

/// Normalised steady state with its physicality diagnostics.
#[derive(Debug, Clone)]
pub struct SteadyDensityMatrix {
    pub matrix: Mat<C64>,
    pub space: HilbertSpace,
    /// `||L vec(rho)||_2`.
    pub residual: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl SteadyDensityMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)]).sum()
    }

    pub fn purity(&self) -> f64 {
        let n = self.dim();
        let mut acc = ZERO;
        for i in 0..n {
            for j in 0..n {
                acc += self.matrix[(i, j)] * self.matrix[(j, i)];
            }
        }
        acc.re
    }

    fn expect(&self, op: &Op) -> C64 {
        op.nonzeros()
            .into_iter()
            .map(|(i, j, v)| v * self.matrix[(j, i)])
            .sum()
    }

    /// `<a>`.
    pub fn expect_a(&self) -> C64 {
        self.expect(&self.space.op_a())
    }

    /// `<b>`.
    pub fn expect_b(&self) -> C64 {
        self.expect(&self.space.op_b())
    }

    /// `<sigma_k>`, `k` in `{1, 2}`.
    pub fn expect_sigma(&self, k: usize) -> C64 {
        self.expect(&self.space.op_sigma(k))
    }

    /// `<n_a + n_b>`.
    pub fn photon_number(&self) -> f64 {
        let a = self.space.op_a();
        let b = self.space.op_b();
        (self.expect(&a.dagger().matmul(&a)) + self.expect(&b.dagger().matmul(&b))).re
    }

    /// Probability of finding the emitter in any excited state.
    pub fn excited_population(&self) -> f64 {
        let mut p = 0.0;
        for (na, nb, s) in self.space.states().filter(|t| t.2 != 0) {
            let i = self.space.index(na, nb, s);
            p += self.matrix[(i, i)].re;
        }
        p
    }
}

/// Solves `L rho = 0`, `Tr rho = 1` by replacing the first row of `L` with
/// the trace functional and factorising densely (single-threaded).
pub fn steady_density_matrix(liouvillian: &Liouvillian) -> Result<SteadyDensityMatrix, OracleError> {
    let n = liouvillian.dim();
    let d = liouvillian.space.dim();
    let mut lu = liouvillian.matrix.clone();
    for col in 0..n {
        lu[(0, col)] = ZERO;
    }
    for i in 0..d {
        lu[(0, i * d + i)] = ONE;
    }
    let mut rhs = Mat::<C64>::zeros(n, 1);
    rhs[(0, 0)] = ONE;

    let par = Par::Seq;
    let mut perm = vec![0usize; n];
    let mut perm_inv = vec![0usize; n];
    let mut mem = MemBuffer::new(factor::lu_in_place_scratch::<usize, C64>(n, n, par, Default::default()));
    let (_, p) = factor::lu_in_place(
        lu.as_mut(),
        &mut perm,
        &mut perm_inv,
        par,
        MemStack::new(&mut mem),
        Default::default(),
    );
    let pivots: Vec<f64> = (0..n).map(|i| lu[(i, i)].norm()).collect();
    let max_pivot = pivots.iter().cloned().fold(0.0, f64::max);
    let min_pivot = pivots.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min_pivot > 1e-13 * max_pivot) {
        let dimension = null_space_dimension(&liouvillian.matrix);
        if dimension > 1 {
            return Err(OracleError::NonUniqueSteadyState { dimension });
        }
    }
    let mut mem = MemBuffer::new(solve::solve_in_place_scratch::<usize, C64>(n, 1, par));
    solve::solve_in_place(lu.as_ref(), lu.as_ref(), p, rhs.as_mut(), par, MemStack::new(&mut mem));

    let residual = (&liouvillian.matrix * &rhs).col(0).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(residual <= RESIDUAL_TOL) {
        let dimension = null_space_dimension(&liouvillian.matrix);
        if dimension > 1 {
            return Err(OracleError::NonUniqueSteadyState { dimension });
        }
        return Err(OracleError::Residual { residual });
    }
    let rho = Mat::from_fn(d, d, |i, j| rhs[(i * d + j, 0)]);
    finish(rho, liouvillian.space, residual)
}

fn finish(rho: Mat<C64>, space: HilbertSpace, residual: f64) -> Result<SteadyDensityMatrix, OracleError> {
    let d = rho.nrows();
    let mut herm = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            herm = herm.max((rho[(i, j)] - rho[(j, i)].conj()).norm());
        }
    }
    if herm > HERMITICITY_TOL {
        return Err(OracleError::Unphysical {
            what: "hermiticity error",
            value: herm,
        });
    }
    let trace: C64 = (0..d).map(|i| rho[(i, i)]).sum();
    if (trace - ONE).norm() > TRACE_TOL {
        return Err(OracleError::Unphysical {
            what: "trace deviation",
            value: (trace - ONE).norm(),
        });
    }
    let hermitian = Mat::from_fn(d, d, |i, j| (rho[(i, j)] + rho[(j, i)].conj()) * 0.5);
    let min_eigenvalue = linalg::hermitian_eigenvalues_dyn(&hermitian)
        .and_then(|v| v.first().copied())
        .unwrap_or(f64::NAN);
    if !(min_eigenvalue >= POSITIVITY_TOL) {
        return Err(OracleError::Unphysical {
            what: "minimum eigenvalue",
            value: min_eigenvalue,
        });
    }
    Ok(SteadyDensityMatrix {
        matrix: rho,
        space,
        residual,
        hermiticity_error: herm,
        min_eigenvalue,
    })
}

/// Null-space dimension of `L` from the pivots of a full-pivoting LU.
pub fn null_space_dimension(matrix: &Mat<C64>) -> usize {
    let lu = matrix.full_piv_lu();
    let u = lu.U();
    let k = u.nrows().min(u.ncols());
    let scale = (0..k).map(|i| u[(i, i)].norm()).fold(0.0, f64::max);
    let tol = 1e-10 * scale.max(f64::MIN_POSITIVE);
    (0..k).filter(|&i| u[(i, i)].norm() <= tol).count() + (matrix.nrows() - k)
}

/// Transmission, reflection and mode amplitudes from the oracle steady state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResponse {
    pub transmission: f64,
    pub reflection: f64,
    /// `(<a>, <b>)`.
    pub cavity: [C64; 2],
}

pub fn oracle_response(
    params: &SystemParams,
    trunc: &TruncationSpec,
    drive: DriveSpec,
) -> Result<OracleResponse, OracleError> {
    if !(trunc.drive_amp > 0.0) {
        return Err(OracleError::InvalidDrive(trunc.drive_amp));
    }
    let rho = steady_density_matrix(&build_liouvillian(params, trunc, drive)?)?;
    let cavity = [rho.expect_a(), rho.expect_b()];
    let scale = 2.0 * params.kappa_ex / trunc.drive_amp;
    let o = cavity[drive.direction.driven_mode()];
    let r = cavity[drive.direction.reflected_mode()];
    Ok(OracleResponse {
        transmission: (I + o * scale).norm_sqr(),
        reflection: (r * scale).norm_sqr(),
        cavity,
    })
}

pub fn oracle_transmission(
    params: &SystemParams,
    trunc: &TruncationSpec,
    direction: Direction,
    detuning: f64,
) -> Result<f64, OracleError> {
    oracle_response(
        params,
        trunc,
        DriveSpec {
            direction,
            detuning,
        },
    )
    .map(|r| r.transmission)
}

/// Linearised vs oracle transmission over a detuning grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub detunings: Vec<f64>,
    pub t_fwd_linear: Vec<f64>,
    pub t_fwd_oracle: Vec<f64>,
    pub t_bwd_linear: Vec<f64>,
    pub t_bwd_oracle: Vec<f64>,
}

/// `|T_oracle - T_linear| / max(T_linear, 0.01)`.
pub fn relative_deviation(oracle: f64, linear: f64) -> f64 {
    (oracle - linear).abs() / linear.max(0.01)
}

impl Comparison {
    pub fn deviations(&self, direction: Direction) -> Vec<f64> {
        let (o, l) = match direction {
            Direction::Forward => (&self.t_fwd_oracle, &self.t_fwd_linear),
            Direction::Backward => (&self.t_bwd_oracle, &self.t_bwd_linear),
        };
        o.iter().zip(l).map(|(o, l)| relative_deviation(*o, *l)).collect()
    }

    pub fn max_deviation(&self) -> f64 {
        Direction::BOTH
            .iter()
            .flat_map(|&d| self.deviations(d))
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(out);
        write_csv_header(
            &mut w,
            &[
                "delta_c",
                "t_fwd_linear",
                "t_fwd_oracle",
                "t_bwd_linear",
                "t_bwd_oracle",
                "rel_dev_fwd",
                "rel_dev_bwd",
            ],
        )?;
        let (df, db) = (self.deviations(Direction::Forward), self.deviations(Direction::Backward));
        for i in 0..self.detunings.len() {
            write_csv_row(
                &mut w,
                &[
                    self.detunings[i],
                    self.t_fwd_linear[i],
                    self.t_fwd_oracle[i],
                    self.t_bwd_linear[i],
                    self.t_bwd_oracle[i],
                    df[i],
                    db[i],
                ],
            )?;
        }
        w.flush()
    }
}

/// Evaluates both models at every detuning; oracle points run in parallel.
pub fn compare_with_linear(
    params: &SystemParams,
    trunc: &TruncationSpec,
    detunings: &[f64],
) -> Result<Comparison, OracleError> {
    trunc.validate()?;
    params.validate()?;
    model::check_increasing(detunings)?;
    let jobs: Vec<(usize, Direction)> = (0..detunings.len())
        .flat_map(|i| Direction::BOTH.map(|d| (i, d)))
        .collect();
    let oracle: Vec<f64> = jobs
        .par_iter()
        .map(|&(i, d)| oracle_transmission(params, trunc, d, detunings[i]))
        .collect::<Result<_, _>>()?;
    let mut out = Comparison {
        detunings: detunings.to_vec(),
        t_fwd_linear: Vec::new(),
        t_fwd_oracle: Vec::new(),
        t_bwd_linear: Vec::new(),
        t_bwd_oracle: Vec::new(),
    };
    for (k, &(i, d)) in jobs.iter().enumerate() {
        let linear = model::transmission(params, DriveSpec { direction: d, detuning: detunings[i] })?;
        match d {
            Direction::Forward => {
                out.t_fwd_linear.push(linear);
                out.t_fwd_oracle.push(oracle[k]);
            }
            Direction::Backward => {
                out.t_bwd_linear.push(linear);
                out.t_bwd_oracle.push(oracle[k]);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n: usize, amp: f64) -> TruncationSpec {
        TruncationSpec::new(n, amp)
    }

    #[test]
    fn dimension_guard() {
        let p = SystemParams::default();
        for n in [0, 5] {
            assert!(matches!(
                build_liouvillian(&p, &small(n, 0.01), DriveSpec::forward(0.0)),
                Err(OracleError::DimensionGuard { .. })
            ));
        }
    }

    #[test]
    fn trace_preserving_columns() {
        let p = SystemParams::default().with_mixing(5.0, 0.3).with_delta12(7.0);
        let l = build_liouvillian(&p, &small(2, 0.3), DriveSpec::backward(-4.0)).unwrap();
        let d = l.space.dim();
        for col in 0..l.dim() {
            let s: C64 = (0..d).map(|i| l.matrix[(i * d + i, col)]).sum();
            assert!(s.norm() < 1e-10, "column {col}: {s}");
        }
    }

    #[test]
    fn undriven_vacuum_is_dark_and_steady() {
        let p = SystemParams::default().with_mixing(20.0, 0.8).with_delta12(30.0);
        let l = build_liouvillian(&p, &small(2, 0.0), DriveSpec::forward(3.0)).unwrap();
        let vac = l.space.index(0, 0, 0);
        let d = l.space.dim();
        let col = vac * d + vac;
        for r in 0..l.dim() {
            assert!(l.matrix[(r, col)].norm() < 1e-15);
        }
        let rho = steady_density_matrix(&l).unwrap();
        for i in 0..d {
            for j in 0..d {
                let expected = if i == vac && j == vac { ONE } else { ZERO };
                assert!((rho.matrix[(i, j)] - expected).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn bare_cavity_coherent_state() {
        let p = SystemParams {
            g0: 0.0,
            h: 0.0,
            ..SystemParams::default()
        };
        for &det in &[0.0, 4.0, -11.0] {
            let trunc = small(2, 0.01);
            let rho = steady_density_matrix(&build_liouvillian(&p, &trunc, DriveSpec::forward(det)).unwrap()).unwrap();
            let expected = -I * 0.01 / C64::new(p.kappa(), det);
            assert!((rho.expect_a() - expected).norm() < 1e-6);
            assert!(rho.expect_b().norm() < 1e-15);
        }
    }

    #[test]
    fn two_level_pair_space_also_has_unique_steady_state() {
        let p = SystemParams::default().with_delta12(10.0);
        let trunc = TruncationSpec {
            emitter: EmitterModel::TwoLevelPair,
            ..small(1, 0.05)
        };
        let rho = steady_density_matrix(&build_liouvillian(&p, &trunc, DriveSpec::forward(20.0)).unwrap()).unwrap();
        assert!((rho.trace() - ONE).norm() < 1e-10);
        assert_eq!(rho.dim(), 16);
    }

    #[test]
    fn detects_non_unique_steady_state() {
        // no loss anywhere: every Hamiltonian eigenprojector is stationary
        let p = SystemParams {
            kappa_i: 0.0,
            kappa_ex: 1e-300,
            gamma: 1e-300,
            ..SystemParams::default()
        };
        let l = build_liouvillian(&p, &small(1, 0.0), DriveSpec::forward(0.0)).unwrap();
        match steady_density_matrix(&l) {
            Err(OracleError::NonUniqueSteadyState { dimension }) => assert!(dimension > 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn weak_drive_state_is_nearly_pure() {
        let p = SystemParams::default().with_mixing(20.0, 0.8).with_delta12(30.0);
        let rho = steady_density_matrix(&build_liouvillian(&p, &small(2, 0.01), DriveSpec::forward(-12.0)).unwrap()).unwrap();
        let purity = rho.purity();
        assert!(purity > 0.99 && purity <= 1.0 + 1e-12, "{purity}");
        assert!(rho.hermiticity_error <= 1e-10);
        assert!(rho.min_eigenvalue >= -1e-8);
        assert!(rho.residual <= 1e-8);
    }

    #[test]
    fn no_splitting_is_reciprocal() {
        let p = SystemParams::default().with_mixing(20.0, 0.8);
        let trunc = small(2, 0.01);
        for &det in &[-20.0, 5.0] {
            let f = oracle_transmission(&p, &trunc, Direction::Forward, det).unwrap();
            let b = oracle_transmission(&p, &trunc, Direction::Backward, det).unwrap();
            assert!((f - b).abs() < 1e-6);
        }
    }

    #[test]
    fn weak_drive_matches_linear_model_at_dip() {
        let p = SystemParams::default();
        let o = oracle_transmission(&p, &small(2, 0.01), Direction::Forward, 20.0).unwrap();
        let l = model::transmission(&p, DriveSpec::forward(20.0)).unwrap();
        assert!(relative_deviation(o, l) < 1e-3, "{o} vs {l}");
    }

    #[test]
    fn zero_drive_transmission_is_an_error() {
        let p = SystemParams::default();
        assert!(matches!(
            oracle_transmission(&p, &small(1, 0.0), Direction::Forward, 0.0),
            Err(OracleError::InvalidDrive(_))
        ));
    }
}
