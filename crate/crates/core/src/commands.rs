//! The `solve`, `value` and `verify` batch commands behind the binary.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::boundary::{certify, solve_boundaries, BoundaryCurves, ResidualNorms};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::io;
use crate::model::Model;
use crate::pde::{self, Overshoot};
use crate::simulate::{
    constant_band_oracle, default_deviations, game_value_agreement, marginal_value_check, reflect_path, sample_path,
    saddle_deviation_test, skorokhod_suite, strategy_comparison, ControlArm, ControlComparison, GameAgreement, Measure,
    MarginalReport, SaddleReport, SkorokhodSuite,
};
use crate::svg::boundaries_svg;
use crate::value::{pde_residual_check, PdeResidualReport, ValueEvaluator};

const IDENTITY_TOL: f64 = 1e-7;
const SMOOTH_FIT_TOL: f64 = 1e-2;
const ORACLE_VALUE_TOL: f64 = 1e-2;
const ORACLE_CURVE_TOL: f64 = 2e-2;
/// Curves are compared up to this distance from the horizon.
const ORACLE_CURVE_CUTOFF: f64 = 0.05;
const SKOROKHOD_TOL: f64 = 1e-8;

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::write(dir.join(name), contents)?;
    Ok(())
}

pub fn prepare_output(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| Error::invalid("output_dir", format!("{}: {e}", cfg.output_dir.display())))
}

/// Solves the boundaries and writes `boundaries.{csv,json,svg}`.
pub fn solve(cfg: &RunConfig, model: &Model) -> Result<(BoundaryCurves, ResidualNorms)> {
    let curves = solve_boundaries(model, &cfg.grid)?;
    let norms = certify(model, &cfg.grid, &curves)?;
    let dir = &cfg.output_dir;
    let mut csv = Vec::new();
    io::write_curves_csv(&curves, &mut csv)?;
    fs::write(dir.join("boundaries.csv"), csv)?;
    let doc = io::CurvesDocument::new(cfg.model, cfg.production, cfg.grid, norms, &curves);
    write(dir, "boundaries.json", &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    write(dir, "boundaries.svg", &boundaries_svg(&curves))?;
    Ok((curves, norms))
}

#[derive(Debug, Clone, Serialize)]
pub struct Check<T> {
    pub pass: bool,
    #[serde(flatten)]
    pub detail: T,
}

#[derive(Debug, Clone, Serialize)]
pub struct Identities {
    pub max_gap_at_upper_boundary: f64,
    pub max_gap_at_lower_boundary: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SmoothFit {
    pub h: f64,
    /// `(t, slope at ŷ₊, slope at ŷ₋)`.
    pub slopes: Vec<(f64, f64, f64)>,
    pub tol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Bounds {
    pub min: f64,
    pub max: f64,
    pub terminal_row_exact: bool,
    pub max_monotonicity_violation: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Oracle {
    pub epsilon: f64,
    pub domain_margin_ok: bool,
    pub max_value_gap: f64,
    pub value_tol: f64,
    pub boundary_distance: f64,
    pub boundary_tol: f64,
    pub boundary_t_max: f64,
    pub overshoot: Overshoot,
    pub kappa: f64,
    pub overshoot_within_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValueDiagnostics {
    pub identities: Check<Identities>,
    pub smooth_fit: Check<SmoothFit>,
    pub bounds: Check<Bounds>,
    pub pde_residual: Check<PdeResidualReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<Check<Oracle>>,
    pub pass: bool,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 })
        .collect()
}

/// Tabulates `v`, writes `value_grid.{csv,json}` and `value_diagnostics.json`.
pub fn value(cfg: &RunConfig, model: &Model, curves: &BoundaryCurves, oracle: bool) -> Result<ValueDiagnostics> {
    let ev = ValueEvaluator::new(model, curves, &cfg.grid);
    let (hi, lo) = (model.params.upper_level(), model.params.lower_level());
    let vs = &cfg.value;
    let horizon = model.params.horizon;
    let grid = ev.value_grid(&linspace(0.0, horizon, vs.t_points), &linspace(vs.x_min, vs.x_max, vs.x_points))?;
    let dir = &cfg.output_dir;
    let mut csv = Vec::new();
    io::write_value_grid_csv(&grid, &mut csv)?;
    fs::write(dir.join("value_grid.csv"), csv)?;
    write(dir, "value_grid.json", &(io::value_grid_json(&grid)? + "\n"))?;

    let mut id = Identities {
        max_gap_at_upper_boundary: 0.0,
        max_gap_at_lower_boundary: 0.0,
        tol: IDENTITY_TOL,
    };
    for i in 0..curves.n_steps() {
        let t = curves.t_grid()[i];
        id.max_gap_at_lower_boundary = id.max_gap_at_lower_boundary.max((ev.value_at(t, curves.y_plus()[i])? - hi).abs());
        id.max_gap_at_upper_boundary = id.max_gap_at_upper_boundary.max((ev.value_at(t, curves.y_minus()[i])? - lo).abs());
    }
    let identities = Check {
        pass: id.max_gap_at_lower_boundary <= IDENTITY_TOL && id.max_gap_at_upper_boundary <= IDENTITY_TOL,
        detail: id,
    };

    let mut slopes = Vec::new();
    for k in 1..=9 {
        let t = 0.1 * k as f64 * horizon;
        let (p, m) = ev.extrapolated_slopes(t, vs.smooth_fit_h)?;
        slopes.push((t, p, m));
    }
    let smooth_fit = Check {
        pass: slopes.iter().all(|(_, p, m)| p.abs() <= SMOOTH_FIT_TOL && m.abs() <= SMOOTH_FIT_TOL),
        detail: SmoothFit {
            h: vs.smooth_fit_h,
            slopes,
            tol: SMOOTH_FIT_TOL,
        },
    };

    let last = grid.values.last().expect("at least two rows");
    let b = Bounds {
        min: grid.min(),
        max: grid.max(),
        terminal_row_exact: last.iter().all(|&v| v == lo),
        max_monotonicity_violation: grid.max_monotonicity_violation(),
        tol: IDENTITY_TOL,
    };
    let bounds = Check {
        pass: b.min >= lo - IDENTITY_TOL
            && b.max <= hi + IDENTITY_TOL
            && b.terminal_row_exact
            && b.max_monotonicity_violation <= IDENTITY_TOL,
        detail: b,
    };

    let residual = pde_residual_check(&grid, model, curves)?;
    let pde_residual = Check {
        pass: residual.above_ok && residual.below_ok,
        detail: residual,
    };

    let oracle = if oracle { Some(run_oracle(cfg, model, curves, &ev)?) } else { None };
    let pass = identities.pass
        && smooth_fit.pass
        && bounds.pass
        && pde_residual.pass
        && oracle.as_ref().is_none_or(|o| o.pass);
    let diagnostics = ValueDiagnostics {
        identities,
        smooth_fit,
        bounds,
        pde_residual,
        oracle,
        pass,
    };
    write(dir, "value_diagnostics.json", &io::report_json(&diagnostics)?)?;
    Ok(diagnostics)
}

fn run_oracle(cfg: &RunConfig, model: &Model, curves: &BoundaryCurves, ev: &ValueEvaluator<'_, crate::model::ProductionFn>) -> Result<Check<Oracle>> {
    let pc = &cfg.pde;
    let domain_margin_ok = pc.check_domain(curves).is_ok();
    let u = pde::solve_penalized(model, pc)?;
    let extracted = pde::extract_boundaries(model, &u, 0.0)?;
    let t_max = model.params.horizon - ORACLE_CURVE_CUTOFF;
    let stride_t = (pc.n_t / 20).max(1);
    let stride_x = (pc.n_x / 40).max(1);
    let max_value_gap = pde::max_gap(&u, ev, stride_t, stride_x)?;
    let boundary_distance = pde::curve_distance(&extracted, curves, t_max + 1e-9)?;
    let kappa = pde::penalty_kappa(model);
    let detail = Oracle {
        epsilon: pc.epsilon,
        domain_margin_ok,
        max_value_gap,
        value_tol: ORACLE_VALUE_TOL,
        boundary_distance,
        boundary_tol: ORACLE_CURVE_TOL,
        boundary_t_max: t_max,
        overshoot: pde::overshoot(model, &u),
        kappa,
        overshoot_within_bound: pde::respects_overshoot_bound(model, &u, pc.epsilon, kappa),
    };
    let mut csv = Vec::new();
    io::write_value_grid_csv(&u, &mut csv)?;
    fs::write(cfg.output_dir.join("pde_grid.csv"), csv)?;
    let mut csv = Vec::new();
    io::write_curves_csv(&extracted, &mut csv)?;
    fs::write(cfg.output_dir.join("pde_boundaries.csv"), csv)?;
    Ok(Check {
        pass: domain_margin_ok
            && max_value_gap <= ORACLE_VALUE_TOL
            && boundary_distance <= ORACLE_CURVE_TOL
            && detail.overshoot_within_bound,
        detail,
    })
}

/// Constant boundaries at the curve values at `t`: the reflected capacity
/// must coincide with the classical two-sided reflection.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantBand {
    pub lower: f64,
    pub upper: f64,
    pub paths: usize,
    pub max_rel_gap: f64,
    pub pass: bool,
}

/// Outcome of one verification step. A reflection-consistency failure is a
/// failed check rather than an aborted run.
#[derive(Debug, Clone, Serialize)]
pub struct Attempt<T> {
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl<T> Attempt<T> {
    fn of(result: Result<T>, pass: impl Fn(&T) -> bool) -> Result<Self> {
        match result {
            Ok(report) => Ok(Self {
                pass: pass(&report),
                report: Some(report),
                error: None,
            }),
            Err(e @ Error::Consistency(_)) => Ok(Self {
                pass: false,
                report: None,
                error: Some(e.to_string()),
            }),
            Err(e) => Err(e),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub n_paths: usize,
    pub dt: f64,
    pub t: f64,
    pub game_value: Vec<Attempt<GameAgreement>>,
    pub saddle: Vec<Attempt<SaddleReport>>,
    pub skorokhod: Vec<Attempt<SkorokhodSuite>>,
    pub constant_band: ConstantBand,
    pub strategies: Attempt<ControlComparison>,
    pub marginal_value: Attempt<MarginalReport>,
    pub pass: bool,
}

/// Runs every Monte Carlo check and writes `verify.json`.
pub fn verify(cfg: &RunConfig, model: &Model, curves: &BoundaryCurves, dump_paths: bool) -> Result<VerifyReport> {
    let vf = &cfg.verify;
    let sim = cfg.sim;
    let ev = ValueEvaluator::new(model, curves, &cfg.grid);
    let mut game_value = Vec::new();
    let mut saddle = Vec::new();
    let mut skorokhod = Vec::new();
    for &y in &vf.ys {
        game_value.push(Attempt::of(game_value_agreement(&ev, vf.t, y, &sim, &vf.dt_ladder), |g| g.pass)?);
        saddle.push(Attempt::of(
            saddle_deviation_test(model, curves, vf.t, y, &sim, &default_deviations()),
            |s| s.all_pass,
        )?);
        let run = sim.with_paths(vf.skorokhod_paths);
        skorokhod.push(Attempt::of(skorokhod_suite(model, curves, vf.t, y, &run, SKOROKHOD_TOL), |s| s.pass)?);
    }
    let constant_band = constant_band_check(cfg, model, curves)?;
    let strategies = Attempt::of(
        strategy_comparison(model, curves, vf.marginal_y, &sim.with_paths(vf.comparison_paths), &ControlArm::defaults()),
        |c| c.all_pass,
    )?;
    let marginal_value = Attempt::of(
        marginal_value_check(&ev, vf.marginal_y, vf.bump, &sim.with_paths(vf.marginal_paths)),
        |m| m.pass,
    )?;
    if dump_paths {
        dump_reflected_paths(cfg, model, curves)?;
    }
    let pass = game_value.iter().all(|a| a.pass)
        && saddle.iter().all(|a| a.pass)
        && skorokhod.iter().all(|a| a.pass)
        && constant_band.pass
        && strategies.pass
        && marginal_value.pass;
    let report = VerifyReport {
        seed: sim.seed,
        n_paths: sim.n_paths,
        dt: sim.dt,
        t: vf.t,
        game_value,
        saddle,
        skorokhod,
        constant_band,
        strategies,
        marginal_value,
        pass,
    };
    write(&cfg.output_dir, "verify.json", &io::report_json(&report)?)?;
    Ok(report)
}

fn constant_band_check(cfg: &RunConfig, model: &Model, curves: &BoundaryCurves) -> Result<ConstantBand> {
    let vf = &cfg.verify;
    let (lower, upper) = crate::boundary::interpolate(curves, vf.t)?;
    let flat = BoundaryCurves::constant(curves.t_grid().to_vec(), lower, upper)?;
    let sim = cfg.sim.with_paths(cfg.verify.skorokhod_paths.min(1000));
    let mut max_rel_gap: f64 = 0.0;
    let mut ok = true;
    for i in 0..sim.n_paths as u64 {
        for &y in &vf.ys {
            let path = sample_path(model, vf.t, &sim, Measure::PTilde, i)?;
            let rp = match reflect_path(&path, y, vf.t, &flat) {
                Ok(rp) => rp,
                Err(Error::Consistency(_)) => {
                    ok = false;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let oracle = constant_band_oracle(&path.c0, y, lower, upper);
            for (a, b) in rp.capacity.iter().zip(&oracle) {
                max_rel_gap = max_rel_gap.max((a - b).abs() / b.abs());
            }
            ok &= crate::simulate::skorokhod_conditions_check(&rp, &flat, vf.t, SKOROKHOD_TOL, SKOROKHOD_TOL)?.pass;
        }
    }
    Ok(ConstantBand {
        lower,
        upper,
        paths: sim.n_paths,
        max_rel_gap,
        pass: ok && max_rel_gap <= 1e-10,
    })
}

fn dump_reflected_paths(cfg: &RunConfig, model: &Model, curves: &BoundaryCurves) -> Result<()> {
    let dir = cfg.output_dir.join("paths");
    fs::create_dir_all(&dir)?;
    let vf = &cfg.verify;
    for &y in &vf.ys {
        for i in 0..vf.dump_paths as u64 {
            let path = sample_path(model, vf.t, &cfg.sim, Measure::PTilde, i)?;
            // Paths on which the two constructions disagree are already
            // reported as failures; they are not dumped.
            let rp = match reflect_path(&path, y, vf.t, curves) {
                Ok(rp) => rp,
                Err(Error::Consistency(_)) => continue,
                Err(e) => return Err(e),
            };
            let mut csv = Vec::new();
            io::write_reflected_path_csv(&rp, &mut csv)?;
            fs::write(dir.join(format!("path_y{y}_{i}.csv")), csv)?;
        }
    }
    Ok(())
}
