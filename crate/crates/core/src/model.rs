//! Linearised cavity-QED model of the waveguide / two-mode resonator /
//! V-type emitter system.
//!
//! All rates are in units of the emitter decay rate `gamma`. The state vector
//! is ordered `(<a>, <b>, <sigma_1>, <sigma_2>)`: `a` is the clockwise mode
//! driven from the forward waveguide direction, `b` the counter-clockwise
//! mode driven from the backward direction, and `sigma_1` (`sigma_2`) the
//! lowering operator of the excited state addressed by positive (negative)
//! field helicity.

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format::{fmt17, write_csv_header, write_csv_row};
use crate::linalg::{self, C64, I, ZERO};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter `{field}` = {value}: must satisfy {constraint}")]
    InvalidParameter {
        field: &'static str,
        value: f64,
        constraint: &'static str,
    },
    #[error("steady-state matrix is singular ({direction} drive, delta_c = {detuning})")]
    Singular { direction: Direction, detuning: f64 },
    #[error("steady-state residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },
    #[error("detuning grid must be strictly increasing (violated at index {index})")]
    NonMonotoneGrid { index: usize },
    #[error("i/o error writing {path}: {message}")]
    Io { path: String, message: String },
}

/// Model rates and couplings, in units of `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemParams {
    /// Emitter-cavity coupling magnitude.
    pub g0: f64,
    /// Phase of the emitter coupling relative to the backscattering `h`.
    pub theta: f64,
    /// Helicity degree of the clockwise mode at the emitter.
    pub p: f64,
    /// Backscattering (CW-CCW) coupling, real and non-negative.
    pub h: f64,
    pub kappa_i: f64,
    pub kappa_ex: f64,
    pub gamma: f64,
    /// Excited-state splitting.
    pub delta12: f64,
    /// Drive amplitude. Irrelevant for the linear response, kept so that
    /// amplitudes can be reported in field units.
    pub drive_amp: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            g0: 20.0,
            theta: FRAC_PI_4,
            p: 1.0,
            h: 0.0,
            kappa_i: 3.0,
            kappa_ex: 5.0,
            gamma: 1.0,
            delta12: 0.0,
            drive_amp: 1.0,
        }
    }
}

impl SystemParams {
    /// Ideal-case parameters (`h = 0`, `p = 1`, `theta = pi/4`, `gamma = 1`).
    pub fn ideal(g0: f64, kappa_i: f64, kappa_ex: f64) -> Self {
        Self {
            g0,
            kappa_i,
            kappa_ex,
            ..Self::default()
        }
    }

    /// Total cavity field decay rate.
    pub fn kappa(&self) -> f64 {
        self.kappa_ex + self.kappa_i
    }

    pub fn with_delta12(mut self, delta12: f64) -> Self {
        self.delta12 = delta12;
        self
    }

    pub fn with_kappa_ex(mut self, kappa_ex: f64) -> Self {
        self.kappa_ex = kappa_ex;
        self
    }

    pub fn with_mixing(mut self, h: f64, p: f64) -> Self {
        self.h = h;
        self.p = p;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let check = |field, value: f64, ok: bool, constraint| {
            if value.is_finite() && ok {
                Ok(())
            } else {
                Err(ModelError::InvalidParameter {
                    field,
                    value,
                    constraint,
                })
            }
        };
        check("g0", self.g0, self.g0 >= 0.0, "g0 >= 0")?;
        check("theta", self.theta, true, "finite")?;
        check("p", self.p, (-1.0..=1.0).contains(&self.p), "-1 <= p <= 1")?;
        check("h", self.h, self.h >= 0.0, "h >= 0")?;
        check("kappa_i", self.kappa_i, self.kappa_i >= 0.0, "kappa_i >= 0")?;
        check("kappa_ex", self.kappa_ex, self.kappa_ex >= 0.0, "kappa_ex >= 0")?;
        check("gamma", self.gamma, self.gamma > 0.0, "gamma > 0")?;
        check("delta12", self.delta12, true, "finite")?;
        check("drive_amp", self.drive_amp, self.drive_amp > 0.0, "drive_amp > 0")?;
        check(
            "kappa_ex",
            self.kappa_ex,
            self.kappa() > 0.0,
            "kappa_ex + kappa_i > 0",
        )?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::Forward, Direction::Backward];

    /// Index of the driven cavity mode in the state vector.
    pub fn driven_mode(self) -> usize {
        match self {
            Direction::Forward => 0,
            Direction::Backward => 1,
        }
    }

    /// Index of the mode that radiates back into the input port.
    pub fn reflected_mode(self) -> usize {
        1 - self.driven_mode()
    }

    pub fn reversed(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        })
    }
}

/// Probe direction and cavity-probe detuning `omega_C - omega_p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSpec {
    pub direction: Direction,
    pub detuning: f64,
}

impl DriveSpec {
    pub fn forward(detuning: f64) -> Self {
        Self {
            direction: Direction::Forward,
            detuning,
        }
    }

    pub fn backward(detuning: f64) -> Self {
        Self {
            direction: Direction::Backward,
            detuning,
        }
    }
}

/// `g_pm = g0 e^{i theta} sqrt((1 +- p) / 2)`.
pub fn couplings(g0: f64, theta: f64, p: f64) -> (C64, C64) {
    let g = C64::from_polar(g0, theta);
    let plus = ((1.0 + p) / 2.0).max(0.0).sqrt();
    let minus = ((1.0 - p) / 2.0).max(0.0).sqrt();
    (g * plus, g * minus)
}

/// Hermitian coupling matrix `N` of the rotating-frame Hamiltonian in the
/// single-excitation (bosonised) picture.
pub fn hamiltonian_matrix(params: &SystemParams, detuning: f64) -> [[C64; 4]; 4] {
    let (gp, gm) = couplings(params.g0, params.theta, params.p);
    let d = C64::new(detuning, 0.0);
    let h = C64::new(params.h, 0.0);
    let half = params.delta12 / 2.0;
    [
        [d, h, gp.conj(), gm.conj()],
        [h, d, gm, gp],
        [gp, gm.conj(), d + half, ZERO],
        [gm, gp.conj(), ZERO, d - half],
    ]
}

/// Linear equations of motion `dx/dt = A x + drive_amp * drive`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSystem {
    /// `A = -i N - diag(kappa, kappa, gamma/2, gamma/2)`.
    pub matrix: [[C64; 4]; 4],
    /// `-i u` with `u` the unit vector of the driven mode.
    pub drive: [C64; 4],
    pub direction: Direction,
    pub detuning: f64,
}

pub fn build_linear_system(params: &SystemParams, drive: DriveSpec) -> LinearSystem {
    let n = hamiltonian_matrix(params, drive.detuning);
    let damping = [
        params.kappa(),
        params.kappa(),
        params.gamma / 2.0,
        params.gamma / 2.0,
    ];
    let mut matrix = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            matrix[i][j] = -I * n[i][j];
        }
        matrix[i][i] -= damping[i];
    }
    let mut vec = [ZERO; 4];
    vec[drive.direction.driven_mode()] = -I;
    LinearSystem {
        matrix,
        drive: vec,
        direction: drive.direction,
        detuning: drive.detuning,
    }
}

/// Steady-state amplitudes `(<a>, <b>, <sigma_1>, <sigma_2>)`.
pub fn steady_state(sys: &LinearSystem, drive_amp: f64) -> Result<[C64; 4], ModelError> {
    if drive_amp == 0.0 {
        return Ok([ZERO; 4]);
    }
    let rhs = sys.drive.map(|d| -d * drive_amp);
    let x = linalg::solve(&sys.matrix, &rhs).ok_or(ModelError::Singular {
        direction: sys.direction,
        detuning: sys.detuning,
    })?;
    let ax = linalg::mat_vec(&sys.matrix, &x);
    let residual = linalg::vec_norm(
        &ax.iter()
            .zip(&rhs)
            .map(|(l, r)| l - r)
            .collect::<Vec<_>>(),
    );
    let tolerance = 1e-10 * linalg::frobenius(&sys.matrix) * linalg::vec_norm(&x);
    if residual > tolerance {
        return Err(ModelError::Residual {
            residual,
            tolerance,
        });
    }
    Ok(x)
}

/// Normalised transmission and reflection for one drive configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Response {
    pub transmission: f64,
    pub reflection: f64,
    pub amplitudes: [C64; 4],
}

pub fn response(params: &SystemParams, drive: DriveSpec) -> Result<Response, ModelError> {
    let sys = build_linear_system(params, drive);
    let amps = steady_state(&sys, params.drive_amp)?;
    Ok(response_from_amplitudes(params, drive.direction, &amps, params.drive_amp))
}

/// Input-output relations: `T = |i + 2 kappa_ex <o>/E|^2`,
/// `R = |2 kappa_ex <o'>/E|^2` with `o` the driven and `o'` the opposite mode.
pub fn response_from_amplitudes(
    params: &SystemParams,
    direction: Direction,
    amps: &[C64; 4],
    drive_amp: f64,
) -> Response {
    let scale = 2.0 * params.kappa_ex / drive_amp;
    let t = I + amps[direction.driven_mode()] * scale;
    let r = amps[direction.reflected_mode()] * scale;
    Response {
        transmission: t.norm_sqr(),
        reflection: r.norm_sqr(),
        amplitudes: *amps,
    }
}

pub fn transmission(params: &SystemParams, drive: DriveSpec) -> Result<f64, ModelError> {
    response(params, drive).map(|r| r.transmission)
}

pub fn reflection(params: &SystemParams, drive: DriveSpec) -> Result<f64, ModelError> {
    response(params, drive).map(|r| r.reflection)
}

/// Complex transmitted field amplitude `i + 2 kappa_ex <o>/E`; `T` is its
/// squared modulus. Used by the optimisers, which need the phase too.
pub fn transmission_amplitude(params: &SystemParams, drive: DriveSpec) -> Result<C64, ModelError> {
    let sys = build_linear_system(params, drive);
    let amps = steady_state(&sys, params.drive_amp)?;
    Ok(I + amps[drive.direction.driven_mode()] * (2.0 * params.kappa_ex / params.drive_amp))
}

/// Forward and backward transmission/reflection on a detuning grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectrumResult {
    pub detunings: Vec<f64>,
    pub t_fwd: Vec<f64>,
    pub t_bwd: Vec<f64>,
    pub r_fwd: Vec<f64>,
    pub r_bwd: Vec<f64>,
    /// Grid points dropped because the steady-state system was singular.
    pub skipped: Vec<f64>,
}

impl SpectrumResult {
    pub fn len(&self) -> usize {
        self.detunings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detunings.is_empty()
    }

    pub fn transmission(&self, direction: Direction) -> &[f64] {
        match direction {
            Direction::Forward => &self.t_fwd,
            Direction::Backward => &self.t_bwd,
        }
    }

    /// Detunings of strict interior local minima of the transmission that lie
    /// below `threshold`.
    pub fn dips(&self, direction: Direction, threshold: f64) -> Vec<f64> {
        let t = self.transmission(direction);
        (1..t.len().saturating_sub(1))
            .filter(|&i| t[i] < t[i - 1] && t[i] < t[i + 1] && t[i] < threshold)
            .map(|i| self.detunings[i])
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(out);
        write_csv_header(&mut w, &["delta_c", "t_fwd", "t_bwd", "r_fwd", "r_bwd"])?;
        for i in 0..self.len() {
            write_csv_row(
                &mut w,
                &[
                    self.detunings[i],
                    self.t_fwd[i],
                    self.t_bwd[i],
                    self.r_fwd[i],
                    self.r_bwd[i],
                ],
            )?;
        }
        w.flush()
    }

    /// Writes `<path>` as CSV and `<path>` with a `.toml` extension holding
    /// the system parameters.
    pub fn save(&self, path: &Path, params: &SystemParams) -> Result<(), ModelError> {
        let io = |e: std::io::Error, p: &Path| ModelError::Io {
            path: p.display().to_string(),
            message: e.to_string(),
        };
        let file = std::fs::File::create(path).map_err(|e| io(e, path))?;
        self.write_csv(file).map_err(|e| io(e, path))?;
        let sidecar = path.with_extension("toml");
        let mut meta = toml::Table::new();
        meta.insert(
            "params".into(),
            toml::Value::try_from(params).expect("params serialise"),
        );
        meta.insert("points".into(), toml::Value::Integer(self.len() as i64));
        meta.insert(
            "skipped".into(),
            toml::Value::Array(self.skipped.iter().map(|&d| toml::Value::Float(d)).collect()),
        );
        std::fs::write(&sidecar, toml::to_string(&meta).expect("sidecar serialises"))
            .map_err(|e| io(e, &sidecar))
    }
}

/// Evenly spaced grid including both endpoints.
pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (points - 1) as f64;
            (0..points)
                .map(|i| {
                    if i == points - 1 {
                        stop
                    } else {
                        start + step * i as f64
                    }
                })
                .collect()
        }
    }
}

pub(crate) fn check_increasing(grid: &[f64]) -> Result<(), ModelError> {
    match grid.windows(2).position(|w| !(w[1] > w[0])) {
        Some(i) => Err(ModelError::NonMonotoneGrid { index: i + 1 }),
        None => Ok(()),
    }
}

pub fn spectrum(params: &SystemParams, detunings: &[f64]) -> Result<SpectrumResult, ModelError> {
    params.validate()?;
    check_increasing(detunings)?;
    let rows: Vec<Option<[f64; 4]>> = detunings
        .par_iter()
        .map(|&d| {
            let f = response(params, DriveSpec::forward(d)).ok()?;
            let b = response(params, DriveSpec::backward(d)).ok()?;
            Some([f.transmission, b.transmission, f.reflection, b.reflection])
        })
        .collect();
    let mut out = SpectrumResult::default();
    for (&d, row) in detunings.iter().zip(rows) {
        match row {
            Some([tf, tb, rf, rb]) => {
                out.detunings.push(d);
                out.t_fwd.push(tf);
                out.t_bwd.push(tb);
                out.r_fwd.push(rf);
                out.r_bwd.push(rb);
            }
            None => out.skipped.push(d),
        }
    }
    Ok(out)
}

impl fmt::Display for SystemParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "g0={} theta={} p={} h={} kappa_i={} kappa_ex={} gamma={} delta12={}",
            fmt17(self.g0),
            fmt17(self.theta),
            fmt17(self.p),
            fmt17(self.h),
            fmt17(self.kappa_i),
            fmt17(self.kappa_ex),
            fmt17(self.gamma),
            fmt17(self.delta12)
        )
    }
}
