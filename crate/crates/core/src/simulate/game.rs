//! Stopping-game payoffs under the changed measure, the boundary-hitting
//! saddle point, and unilateral deviations from it.

use serde::{Deserialize, Serialize};

use super::{boundary_track, check_start, draw_path, map_paths, time_grid, GameEstimate, Measure, Path, SimConfig};
use crate::boundary::BoundaryCurves;
use crate::error::{Error, Result};
use crate::model::{MarginalProfit, Model};
use crate::value::ValueEvaluator;

/// The player choosing a stopping time: the minimizer stops at `ŷ₊`
/// (investment), the maximizer at `ŷ₋` (disinvestment).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    Inf,
    Sup,
}

/// A threshold stopping rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    /// Stop at the first grid time the process reaches `scale ×` the player's boundary.
    Boundary { scale: f64 },
    Immediate,
    Never,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub label: String,
    pub player: Player,
    pub rule: Rule,
}

impl Deviation {
    pub fn new(label: &str, player: Player, rule: Rule) -> Self {
        Self {
            label: label.to_string(),
            player,
            rule,
        }
    }
}

/// Boundary shifts by ±20%, immediate stopping and never stopping, for each player.
pub fn default_deviations() -> Vec<Deviation> {
    vec![
        Deviation::new("sup: y_minus x 0.8", Player::Sup, Rule::Boundary { scale: 0.8 }),
        Deviation::new("sup: y_minus x 1.2", Player::Sup, Rule::Boundary { scale: 1.2 }),
        Deviation::new("sup: stop at once", Player::Sup, Rule::Immediate),
        Deviation::new("sup: never stop", Player::Sup, Rule::Never),
        Deviation::new("inf: y_plus x 0.8", Player::Inf, Rule::Boundary { scale: 0.8 }),
        Deviation::new("inf: y_plus x 1.2", Player::Inf, Rule::Boundary { scale: 1.2 }),
        Deviation::new("inf: stop at once", Player::Inf, Rule::Immediate),
        Deviation::new("inf: never stop", Player::Inf, Rule::Never),
    ]
}

/// Everything about one path needed to evaluate stopping rules.
struct Track<'a> {
    level: Vec<f64>,
    lower: &'a [f64],
    upper: &'a [f64],
    /// `(uniforms, σ²)` when the bridge correction is on.
    bridge: Option<(&'a [[f64; 2]], f64)>,
    times: &'a [f64],
}

impl Track<'_> {
    fn last(&self) -> usize {
        self.level.len() - 1
    }

    fn crossed_between(&self, k: usize, a: f64, b: f64, lane: usize) -> bool {
        let Some((uniforms, sigma2)) = self.bridge else {
            return false;
        };
        if !(a > 0.0 && b > 0.0) {
            return false;
        }
        let h = self.times[k + 1] - self.times[k];
        let da = (self.level[k] / a).ln();
        let db = (self.level[k + 1] / b).ln();
        if da * db <= 0.0 {
            return false;
        }
        uniforms[k][lane] < (-2.0 * da * db / (sigma2 * h)).exp()
    }

    fn stop_index(&self, player: Player, rule: Rule) -> usize {
        let scale = match rule {
            Rule::Immediate => return 0,
            Rule::Never => return self.last(),
            Rule::Boundary { scale } => scale,
        };
        let n = self.last();
        for k in 0..=n {
            let hit = match player {
                Player::Inf => self.level[k] <= scale * self.lower[k],
                Player::Sup => self.level[k] >= scale * self.upper[k],
            };
            if hit {
                return k;
            }
            if k < n {
                let (a, b, lane) = match player {
                    Player::Inf => (scale * self.lower[k], scale * self.lower[k + 1], 0),
                    Player::Sup => (scale * self.upper[k], scale * self.upper[k + 1], 1),
                };
                if self.crossed_between(k, a, b, lane) {
                    return k + 1;
                }
            }
        }
        n
    }
}

/// Discount factors and the running profit `∫₀^{s_k} e^{−μ̄s} R_c(y C⁰(s)) ds`
/// (trapezoid) along a path.
struct Payoffs {
    discount: Vec<f64>,
    running: Vec<f64>,
    upper_level: f64,
    lower_level: f64,
}

impl Payoffs {
    fn new<P: MarginalProfit>(model: &Model<P>, path: &Path, y: f64) -> Self {
        let bar_mu = model.derived.bar_mu;
        let discount: Vec<f64> = path.times.iter().map(|&s| (-bar_mu * s).exp()).collect();
        let mut running = Vec::with_capacity(path.times.len());
        running.push(0.0);
        let mut prev = discount[0] * model.prod.rc(y * path.c0[0]);
        for k in 1..path.times.len() {
            let f = discount[k] * model.prod.rc(y * path.c0[k]);
            let h = path.times[k] - path.times[k - 1];
            running.push(running[k - 1] + 0.5 * h * (prev + f));
            prev = f;
        }
        Self {
            discount,
            running,
            upper_level: model.params.upper_level(),
            lower_level: model.params.lower_level(),
        }
    }

    fn value(&self, ks: usize, kt: usize) -> f64 {
        let n = self.discount.len() - 1;
        let stop = if ks <= kt && ks < n {
            self.upper_level * self.discount[ks]
        } else if kt < ks {
            self.lower_level * self.discount[kt]
        } else {
            self.lower_level * self.discount[n]
        };
        stop + self.running[ks.min(kt)]
    }
}

/// First grid times `(σ*, τ*)` at which `y·C⁰` reaches `ŷ₊` from above or
/// `ŷ₋` from below, `T − t` if never.
pub fn hitting_times(path: &Path, curves: &BoundaryCurves, t: f64, y: f64) -> Result<(f64, f64)> {
    let (lower, upper) = boundary_track(curves, t, &path.times)?;
    let track = Track {
        level: path.c0.iter().map(|c| y * c).collect(),
        lower: &lower,
        upper: &upper,
        bridge: None,
        times: &path.times,
    };
    let ks = track.stop_index(Player::Inf, Rule::Boundary { scale: 1.0 });
    let kt = track.stop_index(Player::Sup, Rule::Boundary { scale: 1.0 });
    Ok((path.times[ks], path.times[kt]))
}

fn grid_index(times: &[f64], s: f64, what: &str) -> Result<usize> {
    let tol = 1e-9 * times.last().copied().unwrap_or(1.0).max(1.0);
    times
        .iter()
        .position(|&x| (x - s).abs() <= tol)
        .ok_or_else(|| Error::domain(format!("{what} = {s} is not a path grid time")))
}

/// `Ψ` for given grid stopping times `sigma` (minimizer) and `tau` (maximizer).
pub fn game_payoff<P: MarginalProfit>(path: &Path, y: f64, t: f64, sigma: f64, tau: f64, model: &Model<P>) -> Result<f64> {
    check_start(model.params.horizon, t)?;
    let ks = grid_index(&path.times, sigma, "sigma")?;
    let kt = grid_index(&path.times, tau, "tau")?;
    Ok(Payoffs::new(model, path, y).value(ks, kt))
}

/// Per-path payoffs for the saddle pair followed by each deviation.
fn game_samples<P: MarginalProfit>(
    model: &Model<P>,
    curves: &BoundaryCurves,
    t: f64,
    y: f64,
    sim: &SimConfig,
    deviations: &[Deviation],
) -> Result<Vec<Vec<f64>>> {
    sim.validate(model.params.horizon)?;
    check_start(model.params.horizon, t)?;
    if !(y > 0.0) {
        return Err(Error::domain(format!("start value must be positive, got {y}")));
    }
    let times = time_grid(model.params.horizon - t, sim.dt);
    let (lower, upper) = boundary_track(curves, t, &times)?;
    let sigma2 = model.params.sigma_c * model.params.sigma_c;
    Ok(map_paths(sim.n_paths, |i| {
        let path = draw_path(model, &times, sim, Measure::PTilde, i);
        let track = Track {
            level: path.c0.iter().map(|c| y * c).collect(),
            lower: &lower,
            upper: &upper,
            bridge: sim.bridge.then_some((&path.uniforms[..], sigma2)),
            times: &path.times,
        };
        let payoffs = Payoffs::new(model, &path, y);
        let ks = track.stop_index(Player::Inf, Rule::Boundary { scale: 1.0 });
        let kt = track.stop_index(Player::Sup, Rule::Boundary { scale: 1.0 });
        let mut out = Vec::with_capacity(deviations.len() + 1);
        out.push(payoffs.value(ks, kt));
        for d in deviations {
            let k = track.stop_index(d.player, d.rule);
            out.push(match d.player {
                Player::Inf => payoffs.value(k, kt),
                Player::Sup => payoffs.value(ks, k),
            });
        }
        out
    }))
}

pub fn estimate_game_value<P: MarginalProfit>(
    model: &Model<P>,
    curves: &BoundaryCurves,
    t: f64,
    y: f64,
    sim: &SimConfig,
) -> Result<GameEstimate> {
    let samples: Vec<f64> = game_samples(model, curves, t, y, sim, &[])?
        .into_iter()
        .map(|v| v[0])
        .collect();
    Ok(GameEstimate::from_samples(&samples, sim.antithetic))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationResult {
    pub label: String,
    pub player: Player,
    pub estimate: GameEstimate,
    /// Mean and standard error of the paired difference deviation − saddle.
    pub diff_mean: f64,
    pub diff_se: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleReport {
    pub t: f64,
    pub y: f64,
    pub saddle: GameEstimate,
    pub deviations: Vec<DeviationResult>,
    pub all_pass: bool,
}

/// Checks `Ψ(σ*, τ̃) ≤ Ψ(σ*, τ*) ≤ Ψ(σ̃, τ*)` within three standard errors of
/// the paired differences, on common random numbers.
pub fn saddle_deviation_test<P: MarginalProfit>(
    model: &Model<P>,
    curves: &BoundaryCurves,
    t: f64,
    y: f64,
    sim: &SimConfig,
    deviations: &[Deviation],
) -> Result<SaddleReport> {
    let samples = game_samples(model, curves, t, y, sim, deviations)?;
    let column = |j: usize| samples.iter().map(|v| v[j]).collect::<Vec<f64>>();
    let base = column(0);
    let saddle = GameEstimate::from_samples(&base, sim.antithetic);
    let mut results = Vec::with_capacity(deviations.len());
    for (j, d) in deviations.iter().enumerate() {
        let arm = column(j + 1);
        let diffs: Vec<f64> = arm.iter().zip(&base).map(|(a, b)| a - b).collect();
        let diff = GameEstimate::from_samples(&diffs, sim.antithetic);
        let pass = match d.player {
            Player::Sup => diff.mean <= 3.0 * diff.std_err,
            Player::Inf => diff.mean >= -3.0 * diff.std_err,
        };
        results.push(DeviationResult {
            label: d.label.clone(),
            player: d.player,
            estimate: GameEstimate::from_samples(&arm, sim.antithetic),
            diff_mean: diff.mean,
            diff_se: diff.std_err,
            pass,
        });
    }
    let all_pass = results.iter().all(|r| r.pass);
    Ok(SaddleReport {
        t,
        y,
        saddle,
        deviations: results,
        all_pass,
    })
}

/// Weighted least-squares fit `estimate(dt) ≈ v0 + c·√dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DtFit {
    pub v0: f64,
    pub c: f64,
    pub se_v0: f64,
}

pub fn fit_dt_bias(points: &[(f64, GameEstimate)]) -> Result<DtFit> {
    if points.len() < 2 {
        return Err(Error::domain("dt fit needs at least two step sizes"));
    }
    let weight = |e: &GameEstimate| if e.std_err > 0.0 { 1.0 / (e.std_err * e.std_err) } else { 1.0 };
    let (mut s0, mut s1, mut s2, mut b0, mut b1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (dt, e) in points {
        let (w, x) = (weight(e), dt.sqrt());
        s0 += w;
        s1 += w * x;
        s2 += w * x * x;
        b0 += w * e.mean;
        b1 += w * x * e.mean;
    }
    let det = s0 * s2 - s1 * s1;
    if !(det.abs() > 0.0) {
        return Err(Error::domain("dt fit needs distinct step sizes"));
    }
    Ok(DtFit {
        v0: (s2 * b0 - s1 * b1) / det,
        c: (s0 * b1 - s1 * b0) / det,
        se_v0: (s2 / det).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameAgreement {
    pub t: f64,
    pub y: f64,
    pub value: f64,
    pub dt: f64,
    pub estimate: GameEstimate,
    pub ladder: Vec<(f64, GameEstimate)>,
    pub fit: DtFit,
    /// `|c|·√dt` at the main step size.
    pub bias_allowance: f64,
    /// `|estimate − v| ≤ 3·SE + |c|·√dt`.
    pub pass: bool,
    /// `|v0 − v| ≤ 3·SE(v0)`.
    pub extrapolated_pass: bool,
}

/// Compares Monte Carlo estimates with `v(t, y)` over a ladder of step sizes.
/// The entry at `sim.dt` uses `sim.seed`; the others use independent seeds.
pub fn game_value_agreement<P: MarginalProfit>(
    evaluator: &ValueEvaluator<'_, P>,
    t: f64,
    y: f64,
    sim: &SimConfig,
    dts: &[f64],
) -> Result<GameAgreement> {
    let model = evaluator.model();
    let curves = evaluator.curves();
    let value = evaluator.value_at(t, y)?;
    let estimate = estimate_game_value(model, curves, t, y, sim)?;
    let mut ladder = Vec::with_capacity(dts.len() + 1);
    for (i, &dt) in dts.iter().enumerate() {
        if (dt - sim.dt).abs() <= 1e-12 * sim.dt {
            ladder.push((dt, estimate));
            continue;
        }
        let seed = sim.seed.wrapping_add((i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let run = sim.with_dt(dt).with_seed(seed);
        ladder.push((dt, estimate_game_value(model, curves, t, y, &run)?));
    }
    if !ladder.iter().any(|(dt, _)| (dt - sim.dt).abs() <= 1e-12 * sim.dt) {
        ladder.push((sim.dt, estimate));
    }
    let fit = fit_dt_bias(&ladder)?;
    let bias_allowance = fit.c.abs() * sim.dt.sqrt();
    let pass = (estimate.mean - value).abs() <= 3.0 * estimate.std_err + bias_allowance;
    let extrapolated_pass = (fit.v0 - value).abs() <= 3.0 * fit.se_v0;
    Ok(GameAgreement {
        t,
        y,
        value,
        dt: sim.dt,
        estimate,
        ladder,
        fit,
        bias_allowance,
        pass,
        extrapolated_pass,
    })
}
