use proptest::prelude::*;
use revinv::simulate::{
    constant_band_oracle, estimate_control_value, estimate_game_value, explicit_reflection, game_payoff,
    hitting_times, recursive_reflection, reflect_path, sample_path, skorokhod_conditions_check, strategy_comparison,
    ControlArm, Measure,
};
use revinv::{solve_boundaries, BoundaryCurves, GameEstimate, GridConfig, Model, SimConfig};
use std::sync::OnceLock;

fn curves() -> &'static BoundaryCurves {
    static C: OnceLock<BoundaryCurves> = OnceLock::new();
    C.get_or_init(|| solve_boundaries(&Model::reference(), &GridConfig::with_steps(100)).unwrap())
}

fn sim(n: usize, dt: f64) -> SimConfig {
    SimConfig {
        n_paths: n,
        dt,
        seed: 7,
        antithetic: false,
        bridge: false,
    }
}

/// Literal double-loop form of the net control:
/// `−max( min((y − b₀)⁺, min_{j≤k} a_j), max_{j≤k} min(b_j, min_{j≤i≤k} a_i) )`.
fn literal_reflection(c0: &[f64], y: f64, lower: &[f64], upper: &[f64]) -> Vec<f64> {
    let a: Vec<f64> = c0.iter().zip(lower).map(|(c, l)| y - l / c).collect();
    let b: Vec<f64> = c0.iter().zip(upper).map(|(c, u)| y - u / c).collect();
    (0..c0.len())
        .map(|k| {
            let first = a[..=k].iter().fold((y - upper[0]).max(0.0), |m, &v| m.min(v));
            let second = (0..=k)
                .map(|j| a[j..=k].iter().fold(b[j], |m, &v| m.min(v)))
                .fold(f64::NEG_INFINITY, f64::max);
            -first.max(second)
        })
        .collect()
}

fn tracks(c: &BoundaryCurves, times: &[f64]) -> (Vec<f64>, Vec<f64>) {
    times.iter().map(|&s| revinv::interpolate(c, s).unwrap()).unzip()
}

#[test]
fn changed_measure_mean_matches_lognormal_moment() {
    let model = Model::reference();
    let cfg = sim(20_000, 0.25);
    let ends: Vec<f64> = (0..cfg.n_paths as u64)
        .map(|i| *sample_path(&model, 0.0, &cfg, Measure::PTilde, i).unwrap().c0.last().unwrap())
        .collect();
    let est = GameEstimate::from_samples(&ends, false);
    let exact = 0.8f64.exp();
    assert!((est.mean - exact).abs() <= 4.0 * est.std_err, "{est:?} vs {exact}");
    let phys: Vec<f64> = (0..cfg.n_paths as u64)
        .map(|i| *sample_path(&model, 0.0, &cfg, Measure::P, i).unwrap().c0.last().unwrap())
        .collect();
    let est = GameEstimate::from_samples(&phys, false);
    assert!((est.mean - (-0.2f64).exp()).abs() <= 4.0 * est.std_err, "{est:?}");
}

#[test]
fn antithetic_pairs_mirror_their_normals() {
    let model = Model::reference();
    let cfg = SimConfig { antithetic: true, ..sim(4, 0.1) };
    let p0 = sample_path(&model, 0.0, &cfg, Measure::PTilde, 2).unwrap();
    let p1 = sample_path(&model, 0.0, &cfg, Measure::PTilde, 3).unwrap();
    let drift = Measure::PTilde.log_drift(&model);
    for ((a, b), s) in p0.c0.iter().zip(&p1.c0).zip(&p0.times) {
        assert!((a.ln() + b.ln() - 2.0 * drift * s).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn three_reflection_constructions_agree(index in 0u64..10_000, y in 0.05f64..6.0) {
        let model = Model::reference();
        let path = sample_path(&model, 0.0, &sim(1, 0.01), Measure::PTilde, index).unwrap();
        let (lower, upper) = tracks(curves(), &path.times);
        let running = explicit_reflection(&path.c0, y, &lower, &upper);
        let recursive = recursive_reflection(&path.c0, y, &lower, &upper);
        let literal = literal_reflection(&path.c0, y, &lower, &upper);
        for k in 0..running.len() {
            prop_assert!((running[k] - literal[k]).abs() <= 1e-12 * (1.0 + y));
            prop_assert!((running[k] - recursive[k]).abs() <= 1e-10 * (1.0 + y));
        }
    }
}

#[test]
fn constant_band_matches_classical_reflection() {
    let model = Model::reference();
    let (a, b) = (0.7, 2.0);
    let flat = BoundaryCurves::new(vec![0.0, 0.5, 1.0], vec![a; 3], vec![b; 3]).unwrap();
    for (i, y) in [(0u64, 0.3), (1, 1.1), (2, 3.5), (3, 2.0)] {
        let path = sample_path(&model, 0.0, &sim(1, 1e-3), Measure::PTilde, i).unwrap();
        let rp = reflect_path(&path, y, 0.0, &flat).unwrap();
        let oracle = constant_band_oracle(&path.c0, y, a, b);
        for (z, w) in rp.capacity.iter().zip(&oracle) {
            assert!((z - w).abs() <= 1e-12 * w, "{z} vs {w}");
        }
        let report = skorokhod_conditions_check(&rp, &flat, 0.0, 1e-12, 1e-12).unwrap();
        assert!(report.pass, "{report:?}");
    }
}

#[test]
fn skorokhod_check_catches_action_inside_the_band() {
    let model = Model::reference();
    let c = curves();
    let path = sample_path(&model, 0.0, &sim(1, 1e-3), Measure::PTilde, 11).unwrap();
    let mut rp = reflect_path(&path, 1.5, 0.0, c).unwrap();
    assert!(skorokhod_conditions_check(&rp, c, 0.0, 1e-9, 1e-9).unwrap().pass);
    let (lower, upper) = tracks(c, &path.times);
    let k = (1..rp.capacity.len())
        .find(|&k| rp.capacity[k] > lower[k] + 0.1 && rp.capacity[k] < upper[k] - 0.1)
        .expect("path spends time inside the band");
    // Invest a little at node k and keep the capacity identity intact.
    let delta = 1e-3;
    for j in k..rp.capacity.len() {
        rp.nu_bar_plus[j] += delta;
        rp.capacity[j] += path.c0[j] * delta;
    }
    let report = skorokhod_conditions_check(&rp, c, 0.0, 1e-9, 1e-9).unwrap();
    assert!(report.identity_ok && report.monotone_ok);
    assert!(report.flat_plus_violations >= 1 && !report.pass, "{report:?}");
}

#[test]
fn payoff_examples() {
    let model = Model::reference();
    let path = sample_path(&model, 0.0, &sim(1, 0.25), Measure::PTilde, 3).unwrap();
    let y = 1.2;
    assert_eq!(game_payoff(&path, y, 0.0, 0.0, 0.0, &model).unwrap(), 1.0);
    assert_eq!(game_payoff(&path, y, 0.0, 1.0, 0.0, &model).unwrap(), 0.8);
    // Investment at 0.5 against no disinvestment.
    let disc = |s: f64| (-0.8 * s).exp();
    let f = |k: usize| disc(path.times[k]) * (y * path.c0[k]).powf(-0.5);
    let run2 = 0.125 * (f(0) + f(1)) + 0.125 * (f(1) + f(2));
    let got = game_payoff(&path, y, 0.0, 0.5, 1.0, &model).unwrap();
    assert!((got - (run2 + disc(0.5))).abs() < 1e-14);
    let run4 = run2 + 0.125 * (f(2) + f(3)) + 0.125 * (f(3) + f(4));
    let got = game_payoff(&path, y, 0.0, 1.0, 1.0, &model).unwrap();
    assert!((got - (run4 + 0.8 * disc(1.0))).abs() < 1e-14);
    assert!(game_payoff(&path, y, 0.0, 0.3, 1.0, &model).is_err());
}

#[test]
fn hitting_times_follow_the_boundaries() {
    let model = Model::reference();
    let c = curves();
    let path = sample_path(&model, 0.0, &sim(1, 1e-3), Measure::PTilde, 5).unwrap();
    assert_eq!(hitting_times(&path, c, 0.0, 0.1).unwrap().0, 0.0);
    assert_eq!(hitting_times(&path, c, 0.0, 10.0).unwrap().1, 0.0);
    let (s, t) = hitting_times(&path, c, 0.0, 1.5).unwrap();
    assert!(s > 0.0 && t > 0.0 && s <= 1.0 && t <= 1.0);
}

#[test]
fn degenerate_game_estimates_are_exact() {
    let model = Model::reference();
    let c = curves();
    let at_end = estimate_game_value(&model, c, 1.0, 1.0, &sim(50, 1e-2)).unwrap();
    assert_eq!((at_end.mean, at_end.std_err), (0.8, 0.0));
    let far = estimate_game_value(&model, c, 0.0, 40.0, &sim(50, 1e-2)).unwrap();
    assert_eq!((far.mean, far.std_err), (0.8, 0.0));
    let low = estimate_game_value(&model, c, 0.0, 0.05, &sim(50, 1e-2)).unwrap();
    assert_eq!((low.mean, low.std_err), (1.0, 0.0));
}

#[test]
fn passive_strategy_matches_closed_form() {
    // Without action, E[√C_s] = √y e^{-0.225 s} under the physical measure and
    // E[C_T] = y e^{-0.2}; profit is 2√C, discounted at 0.6.
    let model = Model::reference();
    let y = 1.5;
    let cmp = strategy_comparison(&model, curves(), y, &sim(20_000, 1e-2), &[ControlArm::NoAction]).unwrap();
    let est = cmp.arms[0].estimate;
    let exact = 2.0 * y.sqrt() * (1.0 - (-0.825f64).exp()) / 0.825 + 0.8 * y * (-0.8f64).exp();
    assert!((est.mean - exact).abs() <= 4.0 * est.std_err, "{est:?} vs {exact}");
    assert!(cmp.arms[0].pass);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let model = Model::reference();
    let c = curves();
    let cfg = sim(2_000, 1e-2);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            (
                estimate_game_value(&model, c, 0.0, 1.5, &cfg).unwrap(),
                estimate_control_value(&model, c, 1.5, &cfg).unwrap(),
            )
        })
    };
    assert_eq!(run(1), run(3));
}
