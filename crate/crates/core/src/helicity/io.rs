//! Delimited-text field grids and helicity-map export.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{FieldGrid, HelicityError, HelicityMap, ModeLabel};
use crate::format::{write_csv_header, write_csv_row};
use crate::linalg::C64;

pub const GRID_COLUMNS: [&str; 8] = [
    "rho", "z", "e_rho_re", "e_rho_im", "e_phi_re", "e_phi_im", "e_z_re", "e_z_im",
];

const MAP_EXTRA_COLUMNS: [&str; 4] = ["p", "abs_e", "axis_rho", "axis_z"];

fn io_err(path: &Path, e: impl ToString) -> HelicityError {
    HelicityError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Parses a field grid. Rows may run over `z` fastest (rho-outer) or over
/// `rho` fastest; extra columns are ignored. Row numbers in errors count the
/// header as row 1.
pub fn read_field_grid<R: Read>(
    source: R,
    mode_number: i32,
    label: ModeLabel,
) -> Result<FieldGrid, HelicityError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| HelicityError::Parse { row: 1, message: e.to_string() })?
        .clone();
    let mut index = [0usize; 8];
    let mut missing = Vec::new();
    for (k, name) in GRID_COLUMNS.iter().enumerate() {
        match headers.iter().position(|h| h == *name) {
            Some(i) => index[k] = i,
            None => missing.push(name.to_string()),
        }
    }
    if !missing.is_empty() {
        return Err(HelicityError::Schema { missing });
    }

    let mut rows: Vec<[f64; 8]> = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let row = n + 2;
        let record = record.map_err(|e| HelicityError::Parse { row, message: e.to_string() })?;
        let mut vals = [0.0f64; 8];
        for (k, &col) in index.iter().enumerate() {
            let cell = record.get(col).ok_or_else(|| HelicityError::Parse {
                row,
                message: format!("missing value for `{}`", GRID_COLUMNS[k]),
            })?;
            vals[k] = cell.parse().map_err(|_| HelicityError::Parse {
                row,
                message: format!("`{}` is not a number: {cell:?}", GRID_COLUMNS[k]),
            })?;
            if !vals[k].is_finite() {
                return Err(HelicityError::Parse {
                    row,
                    message: format!("`{}` is not finite", GRID_COLUMNS[k]),
                });
            }
        }
        rows.push(vals);
    }
    if rows.is_empty() {
        return Err(HelicityError::InvalidGrid("no data rows".into()));
    }

    let mut seen: HashMap<(u64, u64), usize> = HashMap::new();
    for (n, r) in rows.iter().enumerate() {
        // +0.0 and -0.0 are the same coordinate
        let key = ((r[0] + 0.0).to_bits(), (r[1] + 0.0).to_bits());
        if let Some(&first) = seen.get(&key) {
            return Err(HelicityError::DuplicatePoint {
                row: n + 2,
                first,
                rho: r[0],
                z: r[1],
            });
        }
        seen.insert(key, n + 2);
    }

    let mut rho: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let mut z: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    for axis in [&mut rho, &mut z] {
        axis.sort_by(f64::total_cmp);
        axis.dedup();
    }
    let (n_rho, n_z) = (rho.len(), z.len());
    if rows.len() != n_rho * n_z {
        return Err(HelicityError::RowCount {
            expected: n_rho * n_z,
            found: rows.len(),
            n_rho,
            n_z,
        });
    }

    let rho_outer = |k: usize| (rho[k / n_z], z[k % n_z]);
    let z_outer = |k: usize| (rho[k % n_rho], z[k / n_rho]);
    let mismatch = |layout: &dyn Fn(usize) -> (f64, f64)| {
        rows.iter()
            .enumerate()
            .position(|(k, r)| layout(k) != (r[0], r[1]))
    };
    let fields_of = |r: &[f64; 8]| {
        [
            C64::new(r[2], r[3]),
            C64::new(r[4], r[5]),
            C64::new(r[6], r[7]),
        ]
    };
    let fields: Vec<[C64; 3]> = match (mismatch(&rho_outer), mismatch(&z_outer)) {
        (None, _) => rows.iter().map(fields_of).collect(),
        (Some(_), None) => (0..rows.len())
            .map(|k| {
                let (i, j) = (k / n_z, k % n_z);
                fields_of(&rows[j * n_rho + i])
            })
            .collect(),
        (Some(a), Some(b)) => return Err(HelicityError::NonMonotone { row: a.max(b) + 2 }),
    };
    FieldGrid::new(rho, z, fields, mode_number, label)
}

pub fn load_field_grid(
    path: &Path,
    mode_number: i32,
    label: ModeLabel,
) -> Result<FieldGrid, HelicityError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    read_field_grid(file, mode_number, label)
}

fn grid_row(rho: f64, z: f64, f: &[C64; 3]) -> [f64; 8] {
    [rho, z, f[0].re, f[0].im, f[1].re, f[1].im, f[2].re, f[2].im]
}

/// Writes the grid rho-outer with round-trip precision.
pub fn write_field_grid<W: Write>(grid: &FieldGrid, out: W) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    write_csv_header(&mut w, &GRID_COLUMNS)?;
    for pt in grid.points() {
        write_csv_row(&mut w, &grid_row(pt.rho, pt.z, &pt.field()))?;
    }
    w.flush()
}

pub fn save_field_grid(grid: &FieldGrid, path: &Path) -> Result<(), HelicityError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    write_field_grid(grid, file).map_err(|e| io_err(path, e))
}

/// Grid columns followed by `p,abs_e,axis_rho,axis_z`; undefined entries are
/// written as `nan`.
pub fn write_helicity_map<W: Write>(
    grid: &FieldGrid,
    map: &HelicityMap,
    out: W,
) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    let header: Vec<&str> = GRID_COLUMNS.iter().chain(&MAP_EXTRA_COLUMNS).copied().collect();
    write_csv_header(&mut w, &header)?;
    for (i, pt) in grid.points().enumerate() {
        let mut row = grid_row(pt.rho, pt.z, &pt.field()).to_vec();
        let axis = map.axis[i].unwrap_or([f64::NAN; 2]);
        row.extend([map.p[i].unwrap_or(f64::NAN), map.abs_e[i], axis[0], axis[1]]);
        write_csv_row(&mut w, &row)?;
    }
    w.flush()
}

pub fn save_helicity_map(
    grid: &FieldGrid,
    map: &HelicityMap,
    path: &Path,
) -> Result<(), HelicityError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    write_helicity_map(grid, map, file).map_err(|e| io_err(path, e))
}
