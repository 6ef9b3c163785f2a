//! Local helicity of resonator mode profiles.
//!
//! A whispering-gallery mode `E(r) = E_M(rho, z) e^{i M phi}` is described by
//! its cross-section `E_M = (E_rho, E_phi, E_z)` in cylindrical components.
//! At each point the transverse (`rho`-`z`) part of the field fixes a unit
//! vector `e_perp`; together with `phi` it spans the circular basis
//! `e_pm = (e_perp +- i phi) / sqrt(2)` whose rotation axis is
//! `e_axis = e_perp x phi`.
//!
//! Vectors are stored in `(rho, phi, z)` component order throughout.

mod io;

pub use io::{read_field_grid, load_field_grid, save_field_grid, write_field_grid, write_helicity_map, save_helicity_map};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{C64, I};

/// Relative threshold below which a field (or its transverse part) counts as
/// zero.
pub const DEGENERATE_REL_TOL: f64 = 1e-24;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HelicityError {
    #[error("field vanishes at (rho={rho}, z={z}); helicity undefined")]
    DegenerateField { rho: f64, z: f64 },
    #[error("transverse field vanishes at (rho={rho}, z={z}); local basis undefined")]
    DegenerateTransverse { rho: f64, z: f64 },
    #[error("invalid field grid: {0}")]
    InvalidGrid(String),
    #[error("field grid is missing columns: {}", missing.join(", "))]
    Schema { missing: Vec<String> },
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("row {row} duplicates grid point (rho={rho}, z={z}) first given on row {first}")]
    DuplicatePoint {
        row: usize,
        first: usize,
        rho: f64,
        z: f64,
    },
    #[error("expected {expected} rows for a {n_rho} x {n_z} grid, found {found}")]
    RowCount {
        expected: usize,
        found: usize,
        n_rho: usize,
        n_z: usize,
    },
    #[error("row {row}: grid rows are not row-major over strictly increasing rho and z")]
    NonMonotone { row: usize },
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

/// Field sample on the mode cross-section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPoint {
    pub rho: f64,
    pub z: f64,
    pub e_rho: C64,
    pub e_phi: C64,
    pub e_z: C64,
}

impl FieldPoint {
    pub fn new(rho: f64, z: f64, e_rho: C64, e_phi: C64, e_z: C64) -> Self {
        Self {
            rho,
            z,
            e_rho,
            e_phi,
            e_z,
        }
    }

    /// `(E_rho, E_phi, E_z)`.
    pub fn field(&self) -> [C64; 3] {
        [self.e_rho, self.e_phi, self.e_z]
    }

    pub fn intensity(&self) -> f64 {
        self.e_rho.norm_sqr() + self.e_phi.norm_sqr() + self.e_z.norm_sqr()
    }

    fn transverse_intensity(&self) -> f64 {
        self.e_rho.norm_sqr() + self.e_z.norm_sqr()
    }

    /// Time-reversed (counter-propagating) field: complex conjugate.
    pub fn conj(&self) -> Self {
        Self {
            e_rho: self.e_rho.conj(),
            e_phi: self.e_phi.conj(),
            e_z: self.e_z.conj(),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeLabel {
    QuasiTe,
    QuasiTm,
}

/// Local helicity basis at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalBasis {
    pub e_perp: [f64; 3],
    pub e_plus: [C64; 3],
    pub e_minus: [C64; 3],
    pub e_axis: [f64; 3],
}

impl LocalBasis {
    fn from_perp(perp_rho: f64, perp_z: f64) -> Self {
        let e_perp = [perp_rho, 0.0, perp_z];
        let s = FRAC_1_SQRT_2;
        let e_plus = [C64::new(perp_rho * s, 0.0), I * s, C64::new(perp_z * s, 0.0)];
        let e_minus = [C64::new(perp_rho * s, 0.0), -I * s, C64::new(perp_z * s, 0.0)];
        // (a rho + c z) x phi = a z - c rho
        let e_axis = [-perp_z, 0.0, perp_rho];
        Self {
            e_perp,
            e_plus,
            e_minus,
            e_axis,
        }
    }

    /// `(E . e_+^*, E . e_-^*)`.
    pub fn project(&self, field: &[C64; 3]) -> (C64, C64) {
        let dot = |b: &[C64; 3]| field.iter().zip(b).map(|(e, v)| e * v.conj()).sum::<C64>();
        (dot(&self.e_plus), dot(&self.e_minus))
    }

    pub fn axis_component(&self, field: &[C64; 3]) -> C64 {
        field.iter().zip(&self.e_axis).map(|(e, a)| e * a).sum()
    }
}

/// Direction of the major axis of the transverse field ellipse, with a
/// non-negative `z` component (`+rho` for a purely radial field).
fn transverse_direction(e_rho: C64, e_z: C64) -> (f64, f64) {
    // |Re(e^{i chi} t)|^2 is maximal for chi = -arg(t . t) / 2
    let chi = -(e_rho * e_rho + e_z * e_z).arg() / 2.0;
    let rot = C64::from_polar(1.0, chi);
    let (mut a, mut c) = ((rot * e_rho).re, (rot * e_z).re);
    let norm = a.hypot(c);
    a /= norm;
    c /= norm;
    if c < 0.0 || (c == 0.0 && a < 0.0) {
        a = -a;
        c = -c;
    }
    (a, c)
}

pub fn local_basis(point: &FieldPoint) -> Result<LocalBasis, HelicityError> {
    let t = point.transverse_intensity();
    if t == 0.0 || !t.is_finite() || t < DEGENERATE_REL_TOL * point.intensity() {
        return Err(HelicityError::DegenerateTransverse {
            rho: point.rho,
            z: point.z,
        });
    }
    let (a, c) = transverse_direction(point.e_rho, point.e_z);
    Ok(LocalBasis::from_perp(a, c))
}

/// Basis used for helicity evaluation; falls back to `e_perp = rho` where the
/// transverse field vanishes (any in-plane choice gives `p = 0` there).
fn evaluation_basis(point: &FieldPoint) -> LocalBasis {
    local_basis(point).unwrap_or_else(|_| LocalBasis::from_perp(1.0, 0.0))
}

/// `p = (|E . e_+^*|^2 - |E . e_-^*|^2) / |E|^2`, clamped to `[-1, 1]`
/// against rounding.
pub fn helicity_degree(point: &FieldPoint) -> Result<f64, HelicityError> {
    let total = point.intensity();
    if total == 0.0 || !total.is_finite() {
        return Err(HelicityError::DegenerateField {
            rho: point.rho,
            z: point.z,
        });
    }
    let (plus, minus) = evaluation_basis(point).project(&point.field());
    Ok(((plus.norm_sqr() - minus.norm_sqr()) / total).clamp(-1.0, 1.0))
}

/// `E_pm = |E_M| e^{i M phi} sqrt((1 +- p) / 2)` for `M > 0`, with the roles of
/// `+` and `-` swapped for `M < 0`; `p` is the helicity degree of the
/// clockwise (`M > 0`) mode.
pub fn helicity_amplitudes(abs_e: f64, p_cw: f64, mode_number: i32, phi: f64) -> (C64, C64) {
    let phase = C64::from_polar(abs_e, mode_number as f64 * phi);
    let up = ((1.0 + p_cw) / 2.0).max(0.0).sqrt();
    let down = ((1.0 - p_cw) / 2.0).max(0.0).sqrt();
    if mode_number >= 0 {
        (phase * up, phase * down)
    } else {
        (phase * down, phase * up)
    }
}

/// Mode cross-section sampled on a rectilinear `(rho, z)` grid.
///
/// Points are stored with `rho` as the outer index.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    rho: Vec<f64>,
    z: Vec<f64>,
    fields: Vec<[C64; 3]>,
    mode_number: i32,
    label: ModeLabel,
}

fn check_axis(name: &str, axis: &[f64]) -> Result<(), HelicityError> {
    if axis.is_empty() {
        return Err(HelicityError::InvalidGrid(format!("{name} axis is empty")));
    }
    if let Some(i) = axis.iter().position(|v| !v.is_finite()) {
        return Err(HelicityError::InvalidGrid(format!("{name}[{i}] is not finite")));
    }
    if let Some(i) = axis.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(HelicityError::InvalidGrid(format!(
            "{name} axis not strictly increasing at index {}",
            i + 1
        )));
    }
    Ok(())
}

impl FieldGrid {
    pub fn new(
        rho: Vec<f64>,
        z: Vec<f64>,
        fields: Vec<[C64; 3]>,
        mode_number: i32,
        label: ModeLabel,
    ) -> Result<Self, HelicityError> {
        check_axis("rho", &rho)?;
        check_axis("z", &z)?;
        if rho[0] < 0.0 {
            return Err(HelicityError::InvalidGrid(format!("rho must be >= 0, got {}", rho[0])));
        }
        if mode_number == 0 {
            return Err(HelicityError::InvalidGrid("mode number must be non-zero".into()));
        }
        if fields.len() != rho.len() * z.len() {
            return Err(HelicityError::RowCount {
                expected: rho.len() * z.len(),
                found: fields.len(),
                n_rho: rho.len(),
                n_z: z.len(),
            });
        }
        if fields.iter().flatten().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(HelicityError::InvalidGrid("non-finite field value".into()));
        }
        Ok(Self {
            rho,
            z,
            fields,
            mode_number,
            label,
        })
    }

    /// Samples `f(rho, z) -> (E_rho, E_phi, E_z)` on the given axes.
    pub fn from_fn<F>(
        rho: Vec<f64>,
        z: Vec<f64>,
        mode_number: i32,
        label: ModeLabel,
        f: F,
    ) -> Result<Self, HelicityError>
    where
        F: Fn(f64, f64) -> [C64; 3],
    {
        let fields = rho
            .iter()
            .flat_map(|&r| z.iter().map(move |&zz| (r, zz)))
            .map(|(r, zz)| f(r, zz))
            .collect();
        Self::new(rho, z, fields, mode_number, label)
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn fields(&self) -> &[[C64; 3]] {
        &self.fields
    }

    pub fn mode_number(&self) -> i32 {
        self.mode_number
    }

    pub fn label(&self) -> ModeLabel {
        self.label
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rho.len(), self.z.len())
    }

    pub fn point(&self, index: usize) -> FieldPoint {
        let nz = self.z.len();
        let [e_rho, e_phi, e_z] = self.fields[index];
        FieldPoint::new(self.rho[index / nz], self.z[index % nz], e_rho, e_phi, e_z)
    }

    pub fn points(&self) -> impl Iterator<Item = FieldPoint> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    fn max_intensity(&self) -> f64 {
        self.fields
            .iter()
            .map(|f| f.iter().map(|c| c.norm_sqr()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// The same mode travelling the other way round: conjugated field and
    /// `M -> -M`.
    pub fn counter_propagating_partner(&self) -> Self {
        Self {
            fields: self.fields.iter().map(|f| f.map(|c| c.conj())).collect(),
            mode_number: -self.mode_number,
            ..self.clone()
        }
    }
}

/// Helicity degree, normalised field magnitude and rotation axis per grid
/// point. Undefined entries (field nulls) are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct HelicityMap {
    pub rho: Vec<f64>,
    pub z: Vec<f64>,
    pub p: Vec<Option<f64>>,
    /// `|E| / max |E|`.
    pub abs_e: Vec<f64>,
    /// `(axis_rho, axis_z)` of `e_axis`.
    pub axis: Vec<Option<[f64; 2]>>,
    pub mode_number: i32,
}

impl HelicityMap {
    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn defined(&self) -> impl Iterator<Item = f64> + '_ {
        self.p.iter().flatten().copied()
    }
}

fn is_degenerate(point: &FieldPoint, max_intensity: f64) -> bool {
    let i = point.intensity();
    i == 0.0 || i < DEGENERATE_REL_TOL * max_intensity
}

pub fn map_helicity(grid: &FieldGrid) -> HelicityMap {
    let max_i = grid.max_intensity();
    let max_abs = max_i.sqrt();
    let rows: Vec<(Option<f64>, f64, Option<[f64; 2]>)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let pt = grid.point(i);
            let abs_e = if max_abs > 0.0 { pt.intensity().sqrt() / max_abs } else { 0.0 };
            if is_degenerate(&pt, max_i) {
                return (None, abs_e, None);
            }
            let basis = evaluation_basis(&pt);
            let p = helicity_degree(&pt).ok();
            (p, abs_e, Some([basis.e_axis[0], basis.e_axis[2]]))
        })
        .collect();
    let mut map = HelicityMap {
        rho: grid.rho.clone(),
        z: grid.z.clone(),
        p: Vec::with_capacity(rows.len()),
        abs_e: Vec::with_capacity(rows.len()),
        axis: Vec::with_capacity(rows.len()),
        mode_number: grid.mode_number,
    };
    for (p, a, ax) in rows {
        map.p.push(p);
        map.abs_e.push(a);
        map.axis.push(ax);
    }
    map
}

/// Per-point `(E . e_+^*, E . e_-^*)`; `None` marks field nulls.
#[derive(Debug, Clone, PartialEq)]
pub struct HelicityComponents {
    pub plus: Vec<Option<C64>>,
    pub minus: Vec<Option<C64>>,
}

pub fn decompose(grid: &FieldGrid) -> HelicityComponents {
    let max_i = grid.max_intensity();
    let (plus, minus) = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let pt = grid.point(i);
            if is_degenerate(&pt, max_i) {
                (None, None)
            } else {
                let (p, m) = evaluation_basis(&pt).project(&pt.field());
                (Some(p), Some(m))
            }
        })
        .unzip();
    HelicityComponents { plus, minus }
}

/// Synthetic cross-section with a Gaussian envelope, a chosen helicity
/// degree and a transverse polarisation tilted by `tilt + 0.3 (z + 0.5)`
/// from `rho` towards `z`; for tests, demos and the CLI. With the tilt in
/// `[0, pi - 0.3)` the helicity degree is `p` at every point.
pub fn synthetic_grid(
    n_rho: usize,
    n_z: usize,
    p: f64,
    tilt: f64,
    mode_number: i32,
) -> Result<FieldGrid, HelicityError> {
    let rho = crate::model::linspace(1.0, 2.0, n_rho.max(1));
    let z = crate::model::linspace(-0.5, 0.5, n_z.max(1));
    let up = ((1.0 + p.clamp(-1.0, 1.0)) / 2.0).sqrt();
    let down = ((1.0 - p.clamp(-1.0, 1.0)) / 2.0).sqrt();
    let grid = FieldGrid::from_fn(rho, z, mode_number.abs().max(1), ModeLabel::QuasiTe, |r, zz| {
        let env = (-((r - 1.5) * (r - 1.5) + zz * zz) * 8.0).exp();
        let angle = tilt + 0.3 * (zz + 0.5);
        let (s, c) = angle.sin_cos();
        // e_perp (a + b) + i phi (a - b) with |a|^2 - |b|^2 = p
        let t = FRAC_1_SQRT_2 * (up + down) * env;
        let ph = FRAC_1_SQRT_2 * (up - down) * env;
        [C64::new(t * c, 0.0), I * ph, C64::new(t * s, 0.0)]
    })?;
    Ok(if mode_number < 0 {
        grid.counter_propagating_partner()
    } else {
        grid
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ZERO;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pt(e_rho: C64, e_phi: C64, e_z: C64) -> FieldPoint {
        FieldPoint::new(1.0, 0.0, e_rho, e_phi, e_z)
    }

    fn close3(a: [f64; 3], b: [f64; 3]) -> bool {
        a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn basis_examples() {
        let b = local_basis(&pt(c(1.0, 0.0), ZERO, ZERO)).unwrap();
        assert!(close3(b.e_perp, [1.0, 0.0, 0.0]));
        assert!(close3(b.e_axis, [0.0, 0.0, 1.0]));

        let b = local_basis(&pt(ZERO, ZERO, c(1.0, 0.0))).unwrap();
        assert!(close3(b.e_perp, [0.0, 0.0, 1.0]));
        assert!(close3(b.e_axis, [-1.0, 0.0, 0.0]));

        let n = 2.25f64.sqrt();
        let b = local_basis(&pt(c(1.0 / n, 0.0), c(0.0, 0.5 / n), c(1.0 / n, 0.0))).unwrap();
        let s = FRAC_1_SQRT_2;
        assert!(close3(b.e_perp, [s, 0.0, s]));
        for v in [&b.e_plus, &b.e_minus] {
            let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn basis_of_pure_azimuthal_field_is_undefined() {
        let err = local_basis(&pt(ZERO, c(1.0, 0.0), ZERO)).unwrap_err();
        assert!(matches!(err, HelicityError::DegenerateTransverse { .. }));
        assert_eq!(helicity_degree(&pt(ZERO, c(0.0, 2.0), ZERO)).unwrap(), 0.0);
    }

    #[test]
    fn elliptical_transverse_field_uses_major_axis() {
        // major axis along z (amplitude 2) with a quarter-period radial part
        let b = local_basis(&pt(c(0.0, 1.0), ZERO, c(-2.0, 0.0))).unwrap();
        assert!(close3(b.e_perp, [0.0, 0.0, 1.0]), "{:?}", b.e_perp);
    }

    #[test]
    fn degree_examples() {
        assert!((helicity_degree(&pt(c(1.0, 0.0), c(0.0, 1.0), ZERO)).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(helicity_degree(&pt(c(1.0, 0.0), ZERO, ZERO)).unwrap(), 0.0);
        let p = helicity_degree(&pt(c(0.6, 0.0), c(0.0, 0.8), ZERO)).unwrap();
        assert!((p - 0.96).abs() < 1e-14);
        assert!(matches!(
            helicity_degree(&pt(ZERO, ZERO, ZERO)),
            Err(HelicityError::DegenerateField { .. })
        ));
    }

    #[test]
    fn partner_has_opposite_degree() {
        let p = pt(c(0.6, 0.1), c(-0.05, 0.8), c(0.3, -0.2));
        let a = helicity_degree(&p).unwrap();
        let b = helicity_degree(&p.conj()).unwrap();
        assert!((a + b).abs() < 1e-12);
    }

    #[test]
    fn closed_form_amplitudes() {
        let (p, m) = helicity_amplitudes(1.0, 1.0, 5, 0.0);
        assert_eq!((p, m), (c(1.0, 0.0), ZERO));
        let (p, m) = helicity_amplitudes(1.0, 0.0, 5, 0.0);
        assert!((p.re - FRAC_1_SQRT_2).abs() < 1e-15 && (m.re - FRAC_1_SQRT_2).abs() < 1e-15);
        let (p, m) = helicity_amplitudes(1.0, 0.96, -5, 0.0);
        assert!((p.re - 0.02f64.sqrt()).abs() < 1e-15);
        assert!((m.re - 0.98f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn decompose_matches_closed_form_for_in_plane_fields() {
        let grid = synthetic_grid(5, 4, 0.6, 0.3, 7).unwrap();
        let comps = decompose(&grid);
        let partner = decompose(&grid.counter_propagating_partner());
        for (i, point) in grid.points().enumerate() {
            let p = helicity_degree(&point).unwrap();
            let abs_e = point.intensity().sqrt();
            let (ep, em) = helicity_amplitudes(abs_e, p, 7, 0.0);
            assert!((comps.plus[i].unwrap().norm() - ep.norm()).abs() < 1e-12);
            assert!((comps.minus[i].unwrap().norm() - em.norm()).abs() < 1e-12);
            let (cp, cm) = helicity_amplitudes(abs_e, p, -7, 0.0);
            assert!((partner.plus[i].unwrap().norm() - cp.norm()).abs() < 1e-12);
            assert!((partner.minus[i].unwrap().norm() - cm.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn map_examples() {
        let rho = vec![0.5, 1.0, 1.5];
        let z = vec![-1.0, 0.0, 1.0];
        let cw = FieldGrid::from_fn(rho.clone(), z.clone(), 3, ModeLabel::QuasiTe, |r, zz| {
            let e = c(r + zz * zz, 0.3 * r);
            [e, I * e, ZERO]
        })
        .unwrap();
        let m = map_helicity(&cw);
        assert!(m.defined().all(|p| (p - 1.0).abs() < 1e-12));
        assert_eq!(m.defined().count(), 9);
        let ccw = map_helicity(&cw.counter_propagating_partner());
        assert_eq!(ccw.mode_number, -3);
        assert!(ccw.defined().all(|p| (p + 1.0).abs() < 1e-12));

        let flat = FieldGrid::from_fn(rho, z, 3, ModeLabel::QuasiTm, |r, zz| {
            [c(r, 0.0), ZERO, c(zz, 0.1)]
        })
        .unwrap();
        let m = map_helicity(&flat);
        assert!(m.defined().all(|p| p == 0.0));
        let max = flat.points().map(|p| p.intensity().sqrt()).fold(0.0, f64::max);
        for (i, point) in flat.points().enumerate() {
            let t = (point.e_rho.norm_sqr() + point.e_z.norm_sqr()).sqrt();
            assert!((m.abs_e[i] - t / max).abs() < 1e-15);
        }
    }

    #[test]
    fn map_marks_nulls() {
        let grid = FieldGrid::from_fn(vec![0.0, 1.0], vec![0.0], 1, ModeLabel::QuasiTe, |r, _| {
            [c(r, 0.0), ZERO, ZERO]
        })
        .unwrap();
        let m = map_helicity(&grid);
        assert_eq!(m.p, vec![None, Some(0.0)]);
        assert_eq!(m.axis[0], None);
        assert_eq!(m.abs_e, vec![0.0, 1.0]);
    }

    #[test]
    fn grid_validation() {
        let f = vec![[ZERO; 3]; 4];
        assert!(FieldGrid::new(vec![0.0, 1.0], vec![0.0, 1.0], f.clone(), 0, ModeLabel::QuasiTe).is_err());
        assert!(FieldGrid::new(vec![1.0, 0.0], vec![0.0, 1.0], f.clone(), 1, ModeLabel::QuasiTe).is_err());
        assert!(FieldGrid::new(vec![-1.0, 0.0], vec![0.0, 1.0], f.clone(), 1, ModeLabel::QuasiTe).is_err());
        assert!(matches!(
            FieldGrid::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0], f, 1, ModeLabel::QuasiTe),
            Err(HelicityError::RowCount { expected: 6, found: 4, .. })
        ));
    }
}
