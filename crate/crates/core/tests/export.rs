use std::fs;

use tempfile::TempDir;
use wgm_isolator::helicity::{load_field_grid, map_helicity, save_field_grid, save_helicity_map, synthetic_grid};
use wgm_isolator::model::{linspace, spectrum};
use wgm_isolator::{HelicityError, ModeLabel, SystemParams};

#[test]
fn spectrum_file_and_sidecar() {
    let dir = TempDir::new().unwrap();
    let params = SystemParams::ideal(20.0, 3.0, 5.0).with_delta12(30.0);
    let s = spectrum(&params, &linspace(-60.0, 60.0, 121)).unwrap();
    let path = dir.path().join("spec.csv");
    s.save(&path, &params).unwrap();

    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("delta_c,t_fwd,t_bwd,r_fwd,r_bwd"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 121);
    for (i, r) in rows.iter().enumerate() {
        // values survive the text round trip bit for bit
        assert_eq!(r[1].to_bits(), s.t_fwd[i].to_bits());
        assert_eq!(r[2].to_bits(), s.t_bwd[i].to_bits());
    }

    let meta: toml::Table = fs::read_to_string(dir.path().join("spec.toml")).unwrap().parse().unwrap();
    let back: SystemParams = meta["params"].clone().try_into().unwrap();
    assert_eq!(back, params);
    assert_eq!(meta["points"].as_integer(), Some(121));
}

#[test]
fn field_grid_files() {
    let dir = TempDir::new().unwrap();
    let grid = synthetic_grid(5, 4, 0.25, 0.7, 21).unwrap();
    let path = dir.path().join("grid.csv");
    save_field_grid(&grid, &path).unwrap();
    assert_eq!(load_field_grid(&path, 21, ModeLabel::QuasiTe).unwrap(), grid);

    let map_path = dir.path().join("map.csv");
    save_helicity_map(&grid, &map_helicity(&grid), &map_path).unwrap();
    let text = fs::read_to_string(&map_path).unwrap();
    assert_eq!(text.lines().count(), 21);
    for line in text.lines().skip(1) {
        let p: f64 = line.split(',').nth(8).unwrap().parse().unwrap();
        assert!((p - 0.25).abs() < 1e-12);
    }

    let missing = dir.path().join("absent.csv");
    assert!(matches!(
        load_field_grid(&missing, 1, ModeLabel::QuasiTm),
        Err(HelicityError::Io { .. })
    ));
}
