//! Exit criteria. Every criterion runs, prints one PASS/FAIL line and the
//! target fails if any criterion does.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use wgm_isolator::analytic::{
    degeneracies, eigenvalue_sweep, ideal_transmission, isolation_conditions, optimal_coupling,
    polariton_eigenvalues, SweepVariable,
};
use wgm_isolator::helicity::{map_helicity, synthetic_grid};
use wgm_isolator::linalg::C64;
use wgm_isolator::model::{self, linspace, Direction, DriveSpec, SystemParams};
use wgm_isolator::optimize::{maximize_contrast, sweep_grid};
use wgm_isolator::oracle::{compare_with_linear, TruncationSpec};
use wgm_isolator::{FieldGrid, ModeLabel, OptimizationResult};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

/// Collects sub-checks; the criterion passes only if all of them do.
#[derive(Default)]
struct Checks {
    failed: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if ok {
            self.notes.push(what);
        } else {
            self.failed.push(what);
        }
    }

    fn within_time(&mut self, elapsed: Duration, limit_s: f64) {
        let s = elapsed.as_secs_f64();
        self.check(s < limit_s, format!("runtime {s:.2}s < {limit_s}s"));
    }

    fn outcome(self) -> Outcome {
        if self.failed.is_empty() {
            Outcome::new(true, self.notes.join("; "))
        } else {
            Outcome::new(
                false,
                format!("failed: {} | passed: {}", self.failed.join("; "), self.notes.join("; ")),
            )
        }
    }
}

fn t(params: &SystemParams, direction: Direction, detuning: f64) -> f64 {
    model::transmission(params, DriveSpec { direction, detuning }).expect("valid parameters")
}

fn moderate_mixing() -> SystemParams {
    SystemParams {
        g0: 20.0,
        kappa_i: 3.0,
        kappa_ex: 5.0,
        h: 20.0,
        p: 0.8,
        delta12: 30.0,
        ..SystemParams::default()
    }
}

fn ideal_optimum() -> Outcome {
    let start = Instant::now();
    let mut c = Checks::default();
    let a = match optimal_coupling(20.0, 1.0, 5.0) {
        Ok(a) => a,
        Err(e) => return Outcome::new(false, format!("optimal_coupling: {e}")),
    };
    let fixed = SystemParams::ideal(20.0, 5.0, 5.0);
    let at = OptimizationResult::evaluate(&fixed, a.kappa_ex, a.delta12, a.delta_c, 0, true)
        .expect("optimum evaluates");
    c.check((a.kappa_ex - 5.2).abs() <= 0.1, format!("kappa_ex {:.4}", a.kappa_ex));
    c.check((a.delta12 - 30.3).abs() <= 1.0, format!("delta12 {:.3}", a.delta12));
    c.check((a.delta_c + 13.8).abs() <= 0.5, format!("delta_c {:.3}", a.delta_c));
    c.check((at.t_fwd - 0.975).abs() <= 0.01, format!("T_f {:.5}", at.t_fwd));
    c.check(at.t_bwd <= 1e-8, format!("T_b {:.1e}", at.t_bwd));
    match maximize_contrast(&fixed) {
        Ok(m) => {
            c.check(
                (m.kappa_ex - 5.2).abs() <= 0.1
                    && (m.delta12 - 30.3).abs() <= 1.0
                    && (m.delta_c + 13.8).abs() <= 0.5
                    && (m.t_fwd - 0.975).abs() <= 0.01
                    && m.t_bwd <= 1e-8,
                format!("numeric optimiser agrees (kappa_ex {:.4}, T_f {:.5})", m.kappa_ex, m.t_fwd),
            );
        }
        Err(e) => c.check(false, format!("maximize_contrast: {e}")),
    }
    c.within_time(start.elapsed(), 5.0);
    c.outcome()
}

fn non_ideal_isolation() -> Outcome {
    let start = Instant::now();
    let mut c = Checks::default();
    let fixed = SystemParams {
        g0: 20.0,
        kappa_i: 5.0,
        h: 20.0,
        p: 0.8,
        ..SystemParams::default()
    };
    let m = match maximize_contrast(&fixed) {
        Ok(m) => m,
        Err(e) => return Outcome::new(false, format!("maximize_contrast: {e}")),
    };
    c.check(m.t_fwd >= 0.70, format!("T_f {:.4}", m.t_fwd));
    c.check(m.contrast_db >= 30.0, format!("contrast {:.1} dB", m.contrast_db));
    let kappa_axis = linspace(0.7 * m.kappa_ex, 1.3 * m.kappa_ex, 41);
    let delta_axis = linspace(0.7 * m.delta12, 1.3 * m.delta12, 121);
    match sweep_grid(&fixed, &kappa_axis, &delta_axis) {
        Ok(data) => {
            let worst = data.ridge.iter().map(|r| r.contrast_db).fold(f64::INFINITY, f64::min);
            c.check(!data.ridge.is_empty(), format!("{} ridge points in box", data.ridge.len()));
            c.check(worst >= 30.0, format!("min ridge contrast {worst:.1} dB"));
        }
        Err(e) => c.check(false, format!("sweep_grid: {e}")),
    }
    c.within_time(start.elapsed(), 60.0);
    c.outcome()
}

fn reciprocity(rng: &mut StdRng) -> Outcome {
    let start = Instant::now();
    let grid = linspace(-60.0, 60.0, 101);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let p = SystemParams {
            g0: rng.random_range(0.0..50.0),
            theta: rng.random_range(-PI..PI),
            p: rng.random_range(-1.0..=1.0),
            h: rng.random_range(0.0..30.0),
            kappa_i: rng.random_range(0.0..10.0),
            kappa_ex: rng.random_range(0.01..20.0),
            delta12: 0.0,
            ..SystemParams::default()
        };
        let s = model::spectrum(&p, &grid).expect("spectrum");
        if s.len() != grid.len() {
            return Outcome::new(false, format!("{} points skipped", s.skipped.len()));
        }
        for (f, b) in s.t_fwd.iter().zip(&s.t_bwd) {
            worst = worst.max((f - b).abs());
        }
    }
    let mut c = Checks::default();
    c.check(worst <= 1e-10, format!("max |T_f - T_b| = {worst:.1e} over 50 draws"));
    c.within_time(start.elapsed(), 5.0);
    c.outcome()
}

fn analytic_equivalence(rng: &mut StdRng) -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let kappa = rng.random_range(0.01..=20.0);
        let kappa_ex = kappa * rng.random_range(0.01..=1.0);
        let p = SystemParams::ideal(rng.random_range(0.0..=50.0), kappa - kappa_ex, kappa_ex)
            .with_delta12(rng.random_range(-50.0..=50.0));
        let d = rng.random_range(-60.0..=60.0);
        for dir in Direction::BOTH {
            let closed = ideal_transmission(&p, dir, d).expect("closed form");
            worst = worst.max((closed - t(&p, dir, d)).abs());
        }
    }
    let mut worst_tb = 0.0f64;
    for _ in 0..100 {
        let g0 = rng.random_range(1.0..=50.0);
        let kappa_i = rng.random_range(0.0..=10.0);
        // excess coupling inside (0, 2 g0^2 / gamma)
        let kappa_ex = kappa_i + rng.random_range(0.001..0.999) * 2.0 * g0 * g0;
        let cond = isolation_conditions(g0, 1.0, kappa_i, kappa_ex).expect("valid draw");
        let p = SystemParams::ideal(g0, kappa_i, kappa_ex).with_delta12(cond.delta12);
        worst_tb = worst_tb.max(ideal_transmission(&p, Direction::Backward, cond.delta_c).unwrap());
    }
    let mut c = Checks::default();
    c.check(worst <= 1e-10, format!("closed form vs linear solve {worst:.1e}"));
    c.check(worst_tb <= 1e-10, format!("max T_b at isolation conditions {worst_tb:.1e}"));
    c.within_time(start.elapsed(), 5.0);
    c.outcome()
}

fn oracle_certification() -> Outcome {
    let start = Instant::now();
    let mut c = Checks::default();
    let grid = linspace(-60.0, 60.0, 41);
    let sets = [
        ("ideal, no splitting", SystemParams::ideal(20.0, 3.0, 5.0)),
        ("backscattering + splitting", moderate_mixing()),
    ];
    for (name, p) in sets {
        let (n3, n2) = match (
            compare_with_linear(&p, &TruncationSpec::new(3, 0.01), &grid),
            compare_with_linear(&p, &TruncationSpec::new(2, 0.01), &grid),
        ) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                c.check(false, format!("{name}: {e}"));
                continue;
            }
        };
        let dev = n3.max_deviation();
        c.check(dev <= 1e-3, format!("{name}: rel dev {dev:.1e}"));
        let cutoff = n3
            .t_fwd_oracle
            .iter()
            .zip(&n2.t_fwd_oracle)
            .chain(n3.t_bwd_oracle.iter().zip(&n2.t_bwd_oracle))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        c.check(cutoff < 1e-6, format!("{name}: |T(3) - T(2)| {cutoff:.1e}"));
    }
    c.within_time(start.elapsed(), 300.0);
    c.outcome()
}

fn eigenvalue_structure() -> Outcome {
    let mut c = Checks::default();
    let g0 = 20.0;
    let base = SystemParams::ideal(g0, 3.0, 5.0);
    let mismatch = |got: [f64; 4], want: [f64; 4]| {
        got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    let e0 = polariton_eigenvalues(&SystemParams { p: 0.0, ..base }).expect("eigenvalues");
    let d0 = mismatch(e0, [-g0, 0.0, 0.0, g0]);
    c.check(d0 <= 1e-9, format!("p=0 eigenvalues {e0:.6?} vs +-g0, 0, 0 (off by {d0:.3e})"));
    let e1 = polariton_eigenvalues(&base).expect("eigenvalues");
    let d1 = mismatch(e1, [-g0, -g0, g0, g0]);
    c.check(d1 <= 1e-9, format!("p=1 eigenvalues +-g0 doubly (off by {d1:.1e})"));

    let ps = linspace(0.0, 1.0, 101);
    let sweep = eigenvalue_sweep(&base, SweepVariable::P, &ps).expect("sweep");
    let interior_split = ps
        .iter()
        .zip(&sweep)
        .filter(|(&p, _)| p > 0.05 && p < 0.95)
        .all(|(_, e)| degeneracies(e, 1e-6).len() == 4);
    let ends = degeneracies(&sweep[0], 1e-6).len() == 3 && degeneracies(&sweep[100], 1e-6).len() == 2;
    c.check(
        interior_split && ends,
        "p-sweep: degenerate pairs at the ends split into four branches in between",
    );
    c.outcome()
}

fn dip_structure() -> Outcome {
    let mut c = Checks::default();
    let p = moderate_mixing();
    let grid = linspace(-60.0, 60.0, 1201);
    let s = model::spectrum(&p, &grid).expect("spectrum");
    let mut expected: Vec<f64> = polariton_eigenvalues(&p).expect("eigenvalues").iter().map(|l| -l).collect();
    expected.sort_by(f64::total_cmp);
    for dir in Direction::BOTH {
        let dips = s.dips(dir, 0.9);
        if dips.len() != 4 {
            c.check(false, format!("{dir:?}: {} dips {dips:?}", dips.len()));
            continue;
        }
        let off = dips.iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        c.check(off <= 1.0, format!("{dir:?}: 4 dips, max offset {off:.3} gamma"));
    }
    c.outcome()
}

fn helicity_antisymmetry(rng: &mut StdRng) -> Outcome {
    let mut grids = Vec::new();
    for &(p, tilt, m) in &[(1.0, 0.0, 1), (0.8, 0.4, 129), (-0.35, 1.2, 7), (0.0, 2.0, 40)] {
        grids.push(synthetic_grid(9, 7, p, tilt, m).expect("synthetic grid"));
    }
    // arbitrary complex fields, including an exact null
    let samples: Vec<[C64; 3]> = (0..80)
        .map(|k| {
            if k == 17 {
                return [C64::new(0.0, 0.0); 3];
            }
            let mut c = || C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            [c(), c(), c()]
        })
        .collect();
    grids.push(
        FieldGrid::new(linspace(1.0, 2.0, 10), linspace(-0.4, 0.4, 8), samples, 33, ModeLabel::QuasiTm)
            .expect("random grid"),
    );
    let mut worst = 0.0f64;
    let mut max_abs = 0.0f64;
    let mut points = 0;
    let mut mismatched_nulls = 0;
    for g in &grids {
        let cw = map_helicity(g);
        let ccw = map_helicity(&g.counter_propagating_partner());
        for (a, b) in cw.p.iter().zip(&ccw.p) {
            match (a, b) {
                (Some(a), Some(b)) => {
                    worst = worst.max((a + b).abs());
                    max_abs = max_abs.max(a.abs()).max(b.abs());
                    points += 1;
                }
                (None, None) => {}
                _ => mismatched_nulls += 1,
            }
        }
    }
    let mut c = Checks::default();
    c.check(worst <= 1e-12, format!("max |p_cw + p_ccw| {worst:.1e} over {points} points"));
    c.check(max_abs <= 1.0, format!("max |p| {max_abs:.3}"));
    c.check(mismatched_nulls == 0, "undefined points coincide");
    c.outcome()
}

type Criterion = Box<dyn FnOnce(&mut StdRng) -> Outcome>;

fn main() -> ExitCode {
    let mut rng = StdRng::seed_from_u64(0x5eed_0f15);
    let criteria: Vec<(&str, Criterion)> = vec![
        ("ideal isolation optimum", Box::new(|_| ideal_optimum())),
        ("non-ideal isolation and ridge", Box::new(|_| non_ideal_isolation())),
        ("reciprocity without splitting", Box::new(reciprocity)),
        ("closed form and isolation conditions", Box::new(analytic_equivalence)),
        ("master-equation certification", Box::new(|_| oracle_certification())),
        ("polariton eigenvalue structure", Box::new(|_| eigenvalue_structure())),
        ("four dips at the polariton energies", Box::new(|_| dip_structure())),
        ("helicity antisymmetry", Box::new(helicity_antisymmetry)),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let o = run(&mut rng);
        let status = if o.pass { "PASS" } else { "FAIL" };
        failures += usize::from(!o.pass);
        println!(
            "{status} [{}] {name} ({:.2}s): {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
