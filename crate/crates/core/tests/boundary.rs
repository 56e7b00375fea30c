use proptest::prelude::*;
use revinv::boundary::{certify, residual_minus, residual_plus, terminal_values};
use revinv::io::{read_curves_csv, write_curves_csv};
use revinv::{interpolate, solve_boundaries, BoundaryCurves, Error, GridConfig, Model};
use std::sync::OnceLock;

fn solved() -> &'static BoundaryCurves {
    static CURVES: OnceLock<BoundaryCurves> = OnceLock::new();
    CURVES.get_or_init(|| solve_boundaries(&Model::reference(), &GridConfig::default()).unwrap())
}

#[test]
fn terminal_row_is_forced() {
    let c = solved();
    let n = c.n_steps();
    assert_eq!(c.y_plus()[n], 0.0);
    assert_eq!(c.y_minus()[n], 2.44140625);
    assert_eq!(terminal_values(&Model::reference()).unwrap(), (0.0, 2.44140625));
}

#[test]
fn curves_are_monotone_and_bounded() {
    let c = solved();
    let n = c.n_steps();
    for i in 0..n {
        assert!(c.y_plus()[i] >= c.y_plus()[i + 1], "y_plus increases at {i}");
        assert!(c.y_minus()[i] >= c.y_minus()[i + 1], "y_minus increases at {i}");
        assert!(c.y_plus()[i] > 0.0 && c.y_plus()[i] < 1.5625);
        assert!(c.y_minus()[i] > 2.44140625 && c.y_minus()[i].is_finite());
    }
}

#[test]
fn residuals_vanish_at_every_interior_node() {
    let model = Model::reference();
    let grid = GridConfig::default();
    let norms = certify(&model, &grid, solved()).unwrap();
    assert!(norms.max() <= grid.residual_tol, "{norms:?}");
}

#[test]
fn residual_brackets_the_root_at_the_last_interior_node() {
    // Dense scan of the disinvestment residual over (y_minus[N], cap): exactly
    // one sign change, from positive to negative.
    let model = Model::reference();
    let grid = GridConfig::with_steps(100);
    let c = solve_boundaries(&model, &grid).unwrap();
    let n = c.n_steps();
    let lo = c.y_minus()[n];
    let hi = grid.y_minus_cap_factor * lo;
    let scan: Vec<f64> = (1..400)
        .map(|k| lo + (hi - lo) * k as f64 / 400.0)
        .map(|y| residual_minus(&model, &grid, &c, n - 1, y).unwrap())
        .collect();
    let changes = scan.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count();
    assert_eq!(changes, 1);
    assert!(scan[0] > 0.0 && *scan.last().unwrap() < 0.0);
    let root = c.y_minus()[n - 1];
    assert!(lo < root && root < hi);
}

#[test]
fn residuals_at_the_solution_are_small_and_move_off_it() {
    let model = Model::reference();
    let grid = GridConfig::with_steps(50);
    let c = solve_boundaries(&model, &grid).unwrap();
    let i = 10;
    let at = residual_plus(&model, &grid, &c, i, c.y_plus()[i]).unwrap();
    let off = residual_plus(&model, &grid, &c, i, 1.2 * c.y_plus()[i]).unwrap();
    assert!(at.abs() <= grid.residual_tol);
    assert!(off.abs() > 1e3 * grid.residual_tol);
}

#[test]
fn grid_doubling_changes_little() {
    let model = Model::reference();
    let coarse = solve_boundaries(&model, &GridConfig::with_steps(50)).unwrap();
    let fine = solve_boundaries(&model, &GridConfig::with_steps(100)).unwrap();
    let mut worst: f64 = 0.0;
    for (k, &t) in coarse.t_grid().iter().enumerate() {
        let (p, m) = interpolate(&fine, t).unwrap();
        worst = worst.max((p - coarse.y_plus()[k]).abs()).max((m - coarse.y_minus()[k]).abs());
    }
    assert!(worst < 2e-3, "{worst}");
}

#[test]
fn invalid_grid_is_rejected() {
    let model = Model::reference();
    let grid = GridConfig {
        root_tol: 0.0,
        ..GridConfig::default()
    };
    match solve_boundaries(&model, &grid) {
        Err(Error::Validation { field, .. }) => assert_eq!(field, "root_tol"),
        other => panic!("expected validation error, got {other:?}"),
    }
}

#[test]
fn csv_round_trip_reproduces_solved_nodes() {
    let c = solved();
    let mut buf = Vec::new();
    write_curves_csv(c, &mut buf).unwrap();
    let back = read_curves_csv(&buf[..]).unwrap();
    assert_eq!(&back, c);
}

#[test]
fn interpolation_outside_horizon_is_an_error() {
    let c = solved();
    assert!(interpolate(c, -0.1).is_err());
    assert!(interpolate(c, 1.1).is_err());
    assert_eq!(interpolate(c, 0.5).unwrap(), (c.y_plus()[100], c.y_minus()[100]));
}

proptest! {
    #[test]
    fn interpolation_stays_between_neighbouring_nodes(t in 0.0f64..=1.0) {
        let c = solved();
        let (p, m) = interpolate(c, t).unwrap();
        let k = ((t / (1.0 / 200.0)).floor() as usize).min(199);
        let (p0, p1) = (c.y_plus()[k], c.y_plus()[k + 1]);
        let (m0, m1) = (c.y_minus()[k], c.y_minus()[k + 1]);
        prop_assert!(p <= p0.max(p1) + 1e-15 && p >= p0.min(p1) - 1e-15);
        prop_assert!(m <= m0.max(m1) + 1e-15 && m >= m0.min(m1) - 1e-15);
    }
}
