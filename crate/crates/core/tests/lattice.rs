//! Lattice solver against closed-form solutions and the structural
//! properties of the retarded wave operator.

use bvcheck::error::Error;
use bvcheck::lattice::{order, Field, Grid, Lattice};
use bvcheck::models::Mutations;
use bvcheck::verify::grid::{green_study, rop_study};
use bvcheck::verify::{Config, LatticeConfig};
use std::f64::consts::PI;

/// Max deviation from the Klein-Gordon standing wave `cos(ωt) cos(kx)`.
fn plane_wave_error(nx: usize, nt: usize, dx: f64, dt: f64) -> f64 {
    let grid = Grid::new(nx, nt, dx, dt).unwrap();
    let lat = Lattice::new(grid, 1.0, 0.0).unwrap();
    let k = 2.0 * PI / grid.length();
    let w = (k * k + 1.0).sqrt();
    let u0: Vec<f64> = (0..nx).map(|i| (k * grid.x(i)).cos()).collect();
    let u = lat.solve_linear(&Field::zeros(grid), &u0, &vec![0.0; nx]).unwrap();
    let exact = Field::from_fn(grid, |t, x| (w * t).cos() * (k * x).cos());
    u.zip(&exact, |a, b| a - b).max_abs()
}

#[test]
fn standing_wave_converges_at_second_order() {
    let coarse = plane_wave_error(16, 32, 0.5, 0.25);
    let fine = plane_wave_error(32, 64, 0.25, 0.125);
    let p = order(coarse, fine);
    assert!((p - 2.0).abs() <= 0.2, "order {p} from {coarse:e}, {fine:e}");
}

fn setup() -> (Lattice, Field) {
    let grid = Grid::new(32, 64, 0.25, 0.125).unwrap();
    let lat = Lattice::new(grid, 1.0, 1.0).unwrap();
    let k = 2.0 * PI / grid.length();
    let phi0: Vec<f64> = (0..32).map(|i| 0.7 * (k * grid.x(i)).cos()).collect();
    let bg = lat.solve_background(&phi0, &vec![0.0; 32]).unwrap();
    (lat, bg)
}

#[test]
fn retarded_wave_operator_on_equal_potentials_is_the_identity() {
    let (lat, bg) = setup();
    let pot = lat.potential(&bg);
    let u = lat.solve_linear(&pot, &vec![1.0; 32], &vec![0.0; 32]).unwrap();
    assert_eq!(lat.retarded_wave_op(&pot, &pot, &u).unwrap().data, u.data);
}

#[test]
fn retarded_wave_operator_maps_solutions_to_solutions() {
    let (lat, bg) = setup();
    let g = lat.grid;
    let from = lat.potential(&bg);
    // change the potential only after the first quarter
    let to = from.zip(
        &Field::from_fn(g, |t, x| {
            if t > g.duration() / 4.0 {
                0.3 * x.sin().powi(2)
            } else {
                0.0
            }
        }),
        |a, b| a + b,
    );
    let u = lat.solve_linear(&from, &vec![0.5; 32], &vec![0.2; 32]).unwrap();
    let ru = lat.retarded_wave_op(&from, &to, &u).unwrap();
    let res = lat.apply(&to, &ru);
    assert!(res.max_abs() <= 1e-9, "{}", res.max_abs());
    // unchanged before the potentials differ
    let n0 = g.point(g.duration() / 4.0, 0.0).0;
    for n in 0..=n0 {
        assert_eq!(ru.row(n), u.row(n));
    }
}

#[test]
fn potentials_must_agree_on_the_initial_levels() {
    let (lat, bg) = setup();
    let from = lat.potential(&bg);
    let to = from.map(|v| v + 1e-3);
    let u = Field::zeros(lat.grid);
    assert!(matches!(
        lat.retarded_wave_op(&from, &to, &u),
        Err(Error::SupportMismatch)
    ));
}

#[test]
fn retarded_variation_of_a_background_only_functional() {
    let (lat, bg) = setup();
    let pot = lat.potential(&bg);
    let phi = lat.solve_linear(&pot, &vec![0.1; 32], &vec![0.0; 32]).unwrap();
    let family = |_s: f64| Ok(bg.clone());
    let d = lat
        .retarded_variation(&family, &|s, _, _| Ok(1.0 - 3.0 * s + s * s), &phi, 0.1)
        .unwrap();
    assert!((d + 3.0).abs() <= 1e-12, "{d}");
    assert!(matches!(
        lat.retarded_variation(&family, &|_, _, _| Ok(0.0), &phi, -1.0),
        Err(Error::StepTooLarge(_))
    ));
}

fn small_config() -> Config {
    Config {
        lattice: LatticeConfig {
            nx: 64,
            nt: 128,
            dx: 0.25,
            dt: 0.125,
            ..LatticeConfig::default()
        },
        ..Config::default()
    }
}

#[test]
fn green_columns_on_a_small_grid() {
    let s = green_study(&small_config()).unwrap();
    assert!(s.support_exact);
    assert!(s.delta_residual <= 1e-9 && s.antisymmetry <= 1e-9, "{s:?}");
    assert_eq!(s.free_errors.len(), 2);
}

#[test]
fn doubled_point_source_breaks_the_delta_identity() {
    let mut cfg = small_config();
    cfg.mutations = Mutations::single("lattice_source_scale").unwrap();
    let s = green_study(&cfg).unwrap();
    assert!((s.delta_residual - 1.0).abs() < 1e-9, "{}", s.delta_residual);
}

#[test]
fn retarded_wave_operator_study_on_a_small_grid() {
    let s = rop_study(&small_config()).unwrap();
    assert!(s.identity_exact && s.coincidence_exact);
    assert!(s.composition.iter().all(|c| *c <= 1e-10), "{:?}", s.composition);
}
