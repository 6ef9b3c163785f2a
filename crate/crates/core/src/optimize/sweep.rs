//! Contrast maps over `(kappa_ex, delta12)` with `delta_c` pinned to the
//! cavity-like backward dip.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cavity_dip_detuning, contrast_db, OptimizeError};
use crate::format::fmt17;
use crate::minimize::brent_bounded;
use crate::model::{self, DriveSpec, SystemParams};

/// `T_b` below which a refined column minimum counts as a ridge point.
pub const RIDGE_TB_TOL: f64 = 1e-6;

const COLUMNS: [&str; 7] = [
    "kappa_ex",
    "delta12",
    "delta_c",
    "t_fwd",
    "t_bwd",
    "contrast_db",
    "saturated",
];

/// One evaluated `(kappa_ex, delta12)` node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RidgePoint {
    pub kappa_ex: f64,
    pub delta12: f64,
    pub delta_c: f64,
    pub t_fwd: f64,
    pub t_bwd: f64,
    pub contrast_db: f64,
    pub saturated: bool,
}

impl RidgePoint {
    fn failed(kappa_ex: f64, delta12: f64) -> Self {
        Self {
            kappa_ex,
            delta12,
            delta_c: f64::NAN,
            t_fwd: f64::NAN,
            t_bwd: f64::NAN,
            contrast_db: f64::NAN,
            saturated: false,
        }
    }

    fn write<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            fmt17(self.kappa_ex),
            fmt17(self.delta12),
            fmt17(self.delta_c),
            fmt17(self.t_fwd),
            fmt17(self.t_bwd),
            fmt17(self.contrast_db),
            u8::from(self.saturated)
        )
    }
}

fn evaluate(fixed: &SystemParams, kappa_ex: f64, delta12: f64) -> Result<RidgePoint, OptimizeError> {
    let p = fixed.with_kappa_ex(kappa_ex).with_delta12(delta12);
    let delta_c = cavity_dip_detuning(&p)?;
    let t_fwd = model::transmission(&p, DriveSpec::forward(delta_c))?;
    let t_bwd = model::transmission(&p, DriveSpec::backward(delta_c))?;
    let (contrast_db, saturated) = contrast_db(t_fwd, t_bwd);
    Ok(RidgePoint {
        kappa_ex,
        delta12,
        delta_c,
        t_fwd,
        t_bwd,
        contrast_db,
        saturated,
    })
}

/// Node values (`kappa_ex` outer, `delta12` inner) plus the ridge of
/// vanishing backward transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourData {
    pub kappa_ex: Vec<f64>,
    pub delta12: Vec<f64>,
    /// `kappa_ex.len() * delta12.len()` nodes; failed nodes hold NaN.
    pub nodes: Vec<RidgePoint>,
    /// `(node index, reason)` of nodes where no dip was found.
    pub failures: Vec<(usize, String)>,
    /// Per-column `delta12` minimisers of `T_b` with `T_b < 1e-6`, in
    /// `kappa_ex` order.
    pub ridge: Vec<RidgePoint>,
}

impl ContourData {
    pub fn node(&self, i_kappa: usize, i_delta: usize) -> &RidgePoint {
        &self.nodes[i_kappa * self.delta12.len() + i_delta]
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        write_points(out, &self.nodes)
    }

    pub fn write_ridge_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        write_points(out, &self.ridge)
    }

    /// Ridge point with the largest contrast (ties: largest `T_f`).
    pub fn best_ridge_point(&self) -> Option<&RidgePoint> {
        self.ridge.iter().max_by(|a, b| {
            a.contrast_db
                .total_cmp(&b.contrast_db)
                .then(a.t_fwd.total_cmp(&b.t_fwd))
        })
    }
}

fn write_points<W: Write>(out: W, points: &[RidgePoint]) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "{}", COLUMNS.join(","))?;
    for p in points {
        p.write(&mut w)?;
    }
    w.flush()
}

/// Interior local minima of `T_b` along one `kappa_ex` column, refined by a
/// Brent search over the neighbouring `delta12` interval.
fn column_ridge(fixed: &SystemParams, kappa_ex: f64, delta12: &[f64], column: &[RidgePoint]) -> Vec<RidgePoint> {
    let tb: Vec<f64> = column.iter().map(|p| p.t_bwd).collect();
    let mut out = Vec::new();
    for j in 1..tb.len().saturating_sub(1) {
        let (l, c, r) = (tb[j - 1], tb[j], tb[j + 1]);
        if !(l.is_finite() && c.is_finite() && r.is_finite()) || !(c < l && c <= r) {
            continue;
        }
        let f = |d: f64| evaluate(fixed, kappa_ex, d).map_or(f64::INFINITY, |p| p.t_bwd);
        let m = brent_bounded(f, delta12[j - 1], delta12[j + 1], 1e-10, 300);
        if let Ok(p) = evaluate(fixed, kappa_ex, m.x) {
            if p.t_bwd < RIDGE_TB_TOL {
                out.push(p);
            }
        }
    }
    out
}

pub fn sweep_grid(
    fixed: &SystemParams,
    kappa_ex_axis: &[f64],
    delta12_axis: &[f64],
) -> Result<ContourData, OptimizeError> {
    fixed.validate()?;
    model::check_increasing(kappa_ex_axis)?;
    model::check_increasing(delta12_axis)?;
    let nd = delta12_axis.len();
    let results: Vec<Result<RidgePoint, String>> = (0..kappa_ex_axis.len() * nd)
        .into_par_iter()
        .map(|k| {
            let (ke, d) = (kappa_ex_axis[k / nd], delta12_axis[k % nd]);
            evaluate(fixed, ke, d).map_err(|e| e.to_string())
        })
        .collect();
    let mut nodes = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(p) => nodes.push(p),
            Err(e) => {
                nodes.push(RidgePoint::failed(kappa_ex_axis[k / nd], delta12_axis[k % nd]));
                failures.push((k, e));
            }
        }
    }
    let ridge: Vec<RidgePoint> = kappa_ex_axis
        .par_iter()
        .enumerate()
        .map(|(i, &ke)| column_ridge(fixed, ke, delta12_axis, &nodes[i * nd..(i + 1) * nd]))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    Ok(ContourData {
        kappa_ex: kappa_ex_axis.to_vec(),
        delta12: delta12_axis.to_vec(),
        nodes,
        failures,
        ridge,
    })
}
