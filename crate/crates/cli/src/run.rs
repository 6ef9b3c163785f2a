use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use wgm_isolator::analytic::{eigenvalue_sweep, write_eigen_sweep};
use wgm_isolator::format::{write_csv_header, write_csv_row};
use wgm_isolator::helicity::{load_field_grid, map_helicity, save_helicity_map, synthetic_grid};
use wgm_isolator::model::{self, linspace};
use wgm_isolator::optimize::{
    contrast_db, maximize_contrast, maximize_contrast_at_splitting, sweep_grid, trace_zero_tb_curve,
};
use wgm_isolator::oracle::compare_with_linear;
use wgm_isolator::{FieldGrid, HelicityMap, OptimizationResult, SystemParams};

use crate::config::{HelicitySpec, OptimizeSpec, RunConfig, SweepSpec, Task, ValidateSpec};
use crate::CliError;

const POINT_COLUMNS: [&str; 7] = [
    "kappa_ex",
    "delta12",
    "delta_c",
    "t_fwd",
    "t_bwd",
    "contrast_db",
    "saturated",
];

pub const SIDECAR: &str = "run.toml";

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub outputs: Vec<PathBuf>,
    /// Human-readable result lines.
    pub lines: Vec<String>,
    pub wall_time_s: f64,
}

struct Outputs<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
    lines: Vec<String>,
}

impl Outputs<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        let p = self.path(name);
        File::create(&p)
            .map(BufWriter::new)
            .map_err(|e| CliError::Compute(format!("cannot create {}: {e}", p.display())))
    }

    fn note(&mut self, line: String) {
        self.lines.push(line);
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Compute(format!("write failed: {e}"))
}

/// Executes the configured command, writing its files and the `run.toml`
/// sidecar into `out_dir`.
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<RunSummary, CliError> {
    let start = Instant::now();
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Compute(format!("cannot create {}: {e}", out_dir.display())))?;
    let _ = std::fs::remove_file(out_dir.join("error.json"));
    let mut out = Outputs {
        dir: out_dir,
        files: Vec::new(),
        lines: Vec::new(),
    };
    let p = &config.params;
    let verdict = match &config.task {
        Task::Spectrum(s) => {
            let grid = linspace(s.delta_c_min, s.delta_c_max, s.points);
            let result = model::spectrum(p, &grid).map_err(CliError::compute)?;
            let path = out.path("spectrum.csv");
            result.save(&path, p).map_err(CliError::compute)?;
            out.files.push(path.with_extension("toml"));
            let asym = result
                .t_fwd
                .iter()
                .zip(&result.t_bwd)
                .map(|(f, b)| (f - b).abs())
                .fold(0.0, f64::max);
            out.note(format!(
                "spectrum: {} points ({} skipped), max |T_f - T_b| = {asym:.6}",
                result.len(),
                result.skipped.len()
            ));
            Ok(())
        }
        Task::Eigen(s) => {
            let values = linspace(s.start, s.stop, s.points);
            let eig = eigenvalue_sweep(p, s.variable, &values).map_err(CliError::compute)?;
            let w = out.create("eigenvalues.csv")?;
            write_eigen_sweep(w, &values, &eig).map_err(io_err)?;
            out.note(format!("eigen: {} samples over {:?}", values.len(), s.variable));
            Ok(())
        }
        Task::Helicity(s) => run_helicity(s, &mut out),
        Task::Optimize(s) => run_optimize(p, s, &mut out),
        Task::Sweep(s) => run_sweep(p, s, &mut out),
        Task::Validate(s) => run_validate(p, s, &mut out),
    };
    let wall_time_s = start.elapsed().as_secs_f64();
    write_sidecar(config, out_dir, wall_time_s, &out.files)?;
    verdict?;
    out.files.push(out_dir.join(SIDECAR));
    Ok(RunSummary {
        outputs: out.files,
        lines: out.lines,
        wall_time_s,
    })
}

fn write_sidecar(config: &RunConfig, dir: &Path, wall_time_s: f64, files: &[PathBuf]) -> Result<(), CliError> {
    let mut table = config.to_table();
    let mut meta = toml::Table::new();
    meta.insert("tool".into(), "wgm-isolator".into());
    meta.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    meta.insert("wall_time_s".into(), wall_time_s.into());
    let names: Vec<toml::Value> = files
        .iter()
        .filter_map(|f| f.file_name())
        .map(|n| n.to_string_lossy().into_owned().into())
        .collect();
    meta.insert("outputs".into(), toml::Value::Array(names));
    table.insert("meta".into(), toml::Value::Table(meta));
    let text = toml::to_string(&table).map_err(CliError::compute)?;
    std::fs::write(dir.join(SIDECAR), text).map_err(io_err)
}

fn p_range(map: &HelicityMap) -> (f64, f64, usize) {
    map.defined()
        .fold((f64::INFINITY, f64::NEG_INFINITY, 0), |(lo, hi, n), p| (lo.min(p), hi.max(p), n + 1))
}

fn run_helicity(s: &HelicitySpec, out: &mut Outputs) -> Result<(), CliError> {
    let grid: FieldGrid = match &s.input {
        Some(path) => load_field_grid(path, s.mode_number, s.label),
        None => {
            let g = &s.synthetic;
            synthetic_grid(g.n_rho, g.n_z, g.p, g.tilt, s.mode_number)
        }
    }
    .map_err(CliError::compute)?;
    let mut maps = vec![("helicity_map.csv", grid.clone())];
    if s.partner {
        maps.push(("helicity_map_partner.csv", grid.counter_propagating_partner()));
    }
    for (name, g) in maps {
        let map = map_helicity(&g);
        save_helicity_map(&g, &map, &out.path(name)).map_err(CliError::compute)?;
        let (lo, hi, n) = p_range(&map);
        out.note(format!(
            "{name}: M = {}, {n}/{} points defined, p in [{lo:.6}, {hi:.6}]",
            g.mode_number(),
            g.len()
        ));
    }
    Ok(())
}

fn write_point_row<W: Write>(w: &mut W, x: [f64; 3], t_fwd: f64, t_bwd: f64) -> std::io::Result<()> {
    let (c, saturated) = contrast_db(t_fwd, t_bwd);
    write_csv_row(w, &[x[0], x[1], x[2], t_fwd, t_bwd, c, f64::from(u8::from(saturated))])
}

fn run_optimize(p: &SystemParams, s: &OptimizeSpec, out: &mut Outputs) -> Result<(), CliError> {
    let best: OptimizationResult = match s.delta12 {
        Some(d) => maximize_contrast_at_splitting(p, d),
        None => maximize_contrast(p),
    }
    .map_err(CliError::compute)?;
    let x = [best.kappa_ex, best.delta12, best.delta_c];
    let mut w = out.create("optimum.csv")?;
    write_csv_header(&mut w, &POINT_COLUMNS).map_err(io_err)?;
    write_point_row(&mut w, x, best.t_fwd, best.t_bwd).map_err(io_err)?;
    w.flush().map_err(io_err)?;
    out.note(format!(
        "optimum: kappa_ex = {:.6}, delta12 = {:.6}, delta_c = {:.6}, T_f = {:.6}, T_b = {:.3e}, contrast = {:.2} dB{}",
        best.kappa_ex,
        best.delta12,
        best.delta_c,
        best.t_fwd,
        best.t_bwd,
        best.contrast_db,
        if best.saturated { " (lower bound)" } else { "" }
    ));
    if s.delta12.is_none() {
        let curve = trace_zero_tb_curve(p, x).map_err(CliError::compute)?;
        let mut w = out.create("zero_tb_trace.csv")?;
        write_csv_header(&mut w, &POINT_COLUMNS).map_err(io_err)?;
        for c in &curve {
            write_point_row(&mut w, c.x, c.t_fwd, c.t_bwd).map_err(io_err)?;
        }
        w.flush().map_err(io_err)?;
        out.note(format!("zero_tb_trace: {} points", curve.len()));
    }
    Ok(())
}

fn run_sweep(p: &SystemParams, s: &SweepSpec, out: &mut Outputs) -> Result<(), CliError> {
    let (lo, hi) = (
        s.kappa_ex_min.unwrap_or(p.kappa_i),
        s.kappa_ex_max.unwrap_or(p.kappa_i + 20.0 * p.gamma),
    );
    let kappa = linspace(lo, hi, s.kappa_ex_points);
    let delta = linspace(s.delta12_min, s.delta12_max, s.delta12_points);
    let data = sweep_grid(p, &kappa, &delta).map_err(CliError::compute)?;
    data.write_csv(out.create("contour.csv")?).map_err(io_err)?;
    data.write_ridge_csv(out.create("ridge.csv")?).map_err(io_err)?;
    out.note(format!(
        "sweep: {} nodes, {} without a dip, {} ridge points",
        data.nodes.len(),
        data.failures.len(),
        data.ridge.len()
    ));
    if let Some(b) = data.best_ridge_point() {
        out.note(format!(
            "best ridge point: kappa_ex = {:.6}, delta12 = {:.6}, T_f = {:.6}, contrast = {:.2} dB",
            b.kappa_ex, b.delta12, b.t_fwd, b.contrast_db
        ));
    }
    Ok(())
}

fn run_validate(p: &SystemParams, s: &ValidateSpec, out: &mut Outputs) -> Result<(), CliError> {
    let grid = linspace(s.delta_c_min, s.delta_c_max, s.points);
    let cmp = compare_with_linear(p, &s.truncation(), &grid).map_err(CliError::compute)?;
    cmp.write_csv(out.create("comparison.csv")?).map_err(io_err)?;
    let dev = cmp.max_deviation();
    out.note(format!(
        "validate: n_max = {}, drive = {}, max relative deviation = {dev:.3e} (tolerance {:.1e})",
        s.n_max, s.drive_amp, s.tolerance
    ));
    if dev > s.tolerance {
        return Err(CliError::Compute(format!(
            "linearised and master-equation transmission differ by {dev:.3e} > {:.1e}",
            s.tolerance
        )));
    }
    Ok(())
}
