//! Net profit of reflected strategies under the physical measure and the
//! finite-difference check of the marginal value.

use serde::{Deserialize, Serialize};

use super::reflect::reflect_on_track;
use super::{boundary_track, draw_path, map_paths, time_grid, GameEstimate, Measure, Path, SimConfig};
use crate::boundary::BoundaryCurves;
use crate::error::{Error, Result};
use crate::model::{MarginalProfit, Model};
use crate::value::ValueEvaluator;

/// A strategy compared against the optimal reflection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlArm {
    Optimal,
    NoAction,
    /// Reflection between `plus × ŷ₊` and `minus × ŷ₋`.
    Scaled { plus: f64, minus: f64 },
}

impl ControlArm {
    pub fn label(&self) -> String {
        match self {
            ControlArm::Optimal => "optimal".into(),
            ControlArm::NoAction => "no action".into(),
            ControlArm::Scaled { plus, minus } => format!("y_plus x {plus}, y_minus x {minus}"),
        }
    }

    /// No action plus both boundaries shifted by ±20%, one at a time.
    pub fn defaults() -> Vec<ControlArm> {
        vec![
            ControlArm::NoAction,
            ControlArm::Scaled { plus: 0.8, minus: 1.0 },
            ControlArm::Scaled { plus: 1.2, minus: 1.0 },
            ControlArm::Scaled { plus: 1.0, minus: 0.8 },
            ControlArm::Scaled { plus: 1.0, minus: 1.2 },
        ]
    }
}

/// Boundary tracks of one arm on the path grid; `None` means no action.
type Track = Option<(Vec<f64>, Vec<f64>)>;

fn arm_track(arm: ControlArm, lower: &[f64], upper: &[f64]) -> Track {
    match arm {
        ControlArm::Optimal => Some((lower.to_vec(), upper.to_vec())),
        ControlArm::NoAction => None,
        ControlArm::Scaled { plus, minus } => Some((
            lower.iter().map(|v| v * plus).collect(),
            upper.iter().map(|v| v * minus).collect(),
        )),
    }
}

/// Net discounted profit of one path started at `y` under the given arm.
fn net_profit<P: MarginalProfit>(model: &Model<P>, path: &Path, y: f64, track: &Track) -> Result<f64> {
    let p = &model.params;
    let n = path.times.len();
    let (capacity, nu_plus, nu_minus) = match track {
        Some((lower, upper)) => {
            let rp = reflect_on_track(path, y, 0.0, lower, upper)?;
            (rp.capacity, rp.nu_bar_plus, rp.nu_bar_minus)
        }
        None => (path.c0.iter().map(|c| y * c).collect(), vec![0.0; n], vec![0.0; n]),
    };
    let discount: Vec<f64> = path.times.iter().map(|&s| (-p.mu_f * s).exp()).collect();
    let mut total = 0.0;
    for k in 1..n {
        let h = path.times[k] - path.times[k - 1];
        total += 0.5 * h * (discount[k - 1] * model.prod.profit(capacity[k - 1]) + discount[k] * model.prod.profit(capacity[k]));
    }
    total += discount[n - 1] * p.lower_level() * capacity[n - 1];
    let (mut prev_p, mut prev_m) = (0.0, 0.0);
    for k in 0..n {
        let scale = discount[k] * path.c0[k] / p.f_c;
        total -= p.c_plus * scale * (nu_plus[k] - prev_p);
        total += p.c_minus * scale * (nu_minus[k] - prev_m);
        prev_p = nu_plus[k];
        prev_m = nu_minus[k];
    }
    Ok(total)
}

fn check_inputs<P: MarginalProfit>(model: &Model<P>, y: f64, sim: &SimConfig) -> Result<Vec<f64>> {
    sim.validate(model.params.horizon)?;
    if !(y > 0.0) {
        return Err(Error::domain(format!("start value must be positive, got {y}")));
    }
    Ok(time_grid(model.params.horizon, sim.dt))
}

/// Per-path profits for each `(start, arm)` pair on common paths under `P`.
fn control_samples<P: MarginalProfit>(
    model: &Model<P>,
    curves: &BoundaryCurves,
    runs: &[(f64, ControlArm)],
    sim: &SimConfig,
) -> Result<Vec<Vec<f64>>> {
    let times = check_inputs(model, runs.first().map_or(1.0, |r| r.0), sim)?;
    let (lower, upper) = boundary_track(curves, 0.0, &times)?;
    let tracks: Vec<Track> = runs.iter().map(|&(_, arm)| arm_track(arm, &lower, &upper)).collect();
    map_paths(sim.n_paths, |i| {
        let path = draw_path(model, &times, sim, Measure::P, i);
        runs.iter()
            .zip(&tracks)
            .map(|(&(y, _), track)| net_profit(model, &path, y, track))
            .collect::<Result<Vec<f64>>>()
    })
    .into_iter()
    .collect()
}

/// Monte Carlo estimate of the optimal net profit `J(y)` from time 0.
pub fn estimate_control_value<P: MarginalProfit>(
    model: &Model<P>,
    curves: &BoundaryCurves,
    y: f64,
    sim: &SimConfig,
) -> Result<GameEstimate> {
    check_inputs(model, y, sim)?;
    let samples: Vec<f64> = control_samples(model, curves, &[(y, ControlArm::Optimal)], sim)?
        .into_iter()
        .map(|v| v[0])
        .collect();
    Ok(GameEstimate::from_samples(&samples, sim.antithetic))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmResult {
    pub label: String,
    pub arm: ControlArm,
    pub estimate: GameEstimate,
    /// Paired difference arm − optimal.
    pub diff_mean: f64,
    pub diff_se: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlComparison {
    pub y: f64,
    pub optimal: GameEstimate,
    pub arms: Vec<ArmResult>,
    pub all_pass: bool,
}

/// Checks `J(arm) ≤ J(optimal) + 3·SE` of the paired difference for each arm.
pub fn strategy_comparison<P: MarginalProfit>(
    model: &Model<P>,
    curves: &BoundaryCurves,
    y: f64,
    sim: &SimConfig,
    arms: &[ControlArm],
) -> Result<ControlComparison> {
    check_inputs(model, y, sim)?;
    let mut runs = vec![(y, ControlArm::Optimal)];
    runs.extend(arms.iter().map(|&a| (y, a)));
    let samples = control_samples(model, curves, &runs, sim)?;
    let column = |j: usize| samples.iter().map(|v| v[j]).collect::<Vec<f64>>();
    let base = column(0);
    let optimal = GameEstimate::from_samples(&base, sim.antithetic);
    let arms: Vec<ArmResult> = arms
        .iter()
        .enumerate()
        .map(|(j, &arm)| {
            let col = column(j + 1);
            let diffs: Vec<f64> = col.iter().zip(&base).map(|(a, b)| a - b).collect();
            let diff = GameEstimate::from_samples(&diffs, sim.antithetic);
            ArmResult {
                label: arm.label(),
                arm,
                estimate: GameEstimate::from_samples(&col, sim.antithetic),
                diff_mean: diff.mean,
                diff_se: diff.std_err,
                pass: diff.mean <= 3.0 * diff.std_err,
            }
        })
        .collect();
    let all_pass = arms.iter().all(|a| a.pass);
    Ok(ControlComparison {
        y,
        optimal,
        arms,
        all_pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalReport {
    pub y: f64,
    pub bump: f64,
    pub quotient: GameEstimate,
    pub value: f64,
    /// `|v_yy|·bump²/6`, with `v_yy` from a central difference of the value.
    pub bump_allowance: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub pass: bool,
}

/// Central difference `[Ĵ(y+h) − Ĵ(y−h)]/(2h)` on common paths, each start
/// reflected optimally, against `v(0, y)`.
pub fn marginal_value_check<P: MarginalProfit>(
    evaluator: &ValueEvaluator<'_, P>,
    y: f64,
    bump: f64,
    sim: &SimConfig,
) -> Result<MarginalReport> {
    let model = evaluator.model();
    if !(bump > 0.0 && bump < y) {
        return Err(Error::domain(format!("bump must lie in (0, y), got {bump}")));
    }
    check_inputs(model, y, sim)?;
    let runs = [(y + bump, ControlArm::Optimal), (y - bump, ControlArm::Optimal)];
    let samples = control_samples(model, evaluator.curves(), &runs, sim)?;
    let quotients: Vec<f64> = samples.iter().map(|v| (v[0] - v[1]) / (2.0 * bump)).collect();
    let quotient = GameEstimate::from_samples(&quotients, sim.antithetic);
    let value = evaluator.value_at(0.0, y)?;
    let curvature = (evaluator.value_at(0.0, y + bump)? - 2.0 * value + evaluator.value_at(0.0, y - bump)?) / (bump * bump);
    let bump_allowance = curvature.abs() * bump * bump / 6.0;
    let half = 3.0 * quotient.std_err + bump_allowance;
    Ok(MarginalReport {
        y,
        bump,
        quotient,
        value,
        bump_allowance,
        ci_low: quotient.mean - 3.0 * quotient.std_err,
        ci_high: quotient.mean + 3.0 * quotient.std_err,
        pass: (quotient.mean - value).abs() <= half,
    })
}
