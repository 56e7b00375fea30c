//! Monte Carlo engine for the stopping game and the reflected control.
//!
//! Path `i` draws its normals from the ChaCha8 stream `i` of the run seed (the
//! pair index `i/2` under antithetic sampling), so results do not depend on
//! scheduling. Per-path outputs are collected in path order and reduced
//! sequentially.

mod control;
mod game;
mod reflect;

pub use control::{
    estimate_control_value, marginal_value_check, strategy_comparison, ArmResult, ControlArm,
    ControlComparison, MarginalReport,
};
pub use game::{
    default_deviations, estimate_game_value, fit_dt_bias, game_payoff, game_value_agreement, hitting_times,
    saddle_deviation_test, Deviation, DeviationResult, DtFit, GameAgreement, Player, Rule, SaddleReport,
};
pub use reflect::{
    constant_band_oracle, explicit_reflection, recursive_reflection, reflect_path, skorokhod_conditions_check,
    skorokhod_suite, ReflectedPath, SkorokhodReport, SkorokhodSuite,
};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::boundary::{interpolate, BoundaryCurves};
use crate::error::{Error, Result};
use crate::model::{MarginalProfit, Model};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub antithetic: bool,
    /// Brownian-bridge correction of discretely monitored hitting times.
    pub bridge: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            dt: 1e-3,
            seed: 42,
            antithetic: false,
            bridge: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, horizon: f64) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::invalid("n_paths", "need at least one path"));
        }
        if self.antithetic && !self.n_paths.is_multiple_of(2) {
            return Err(Error::invalid("n_paths", "antithetic sampling needs an even path count"));
        }
        if !(self.dt > 0.0 && self.dt <= horizon) {
            return Err(Error::invalid("dt", format!("need 0 < dt <= T = {horizon}, got {}", self.dt)));
        }
        Ok(())
    }

    pub fn with_paths(self, n_paths: usize) -> Self {
        Self { n_paths, ..self }
    }

    pub fn with_dt(self, dt: f64) -> Self {
        Self { dt, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// Law under which `C⁰` is simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Measure {
    /// Physical measure: `ln C⁰` has drift `−μ_C − σ_C²/2`.
    P,
    /// Changed measure: `ln C⁰` has drift `μ̂_C`.
    PTilde,
}

impl Measure {
    pub fn log_drift<P: MarginalProfit>(self, model: &Model<P>) -> f64 {
        match self {
            Measure::P => -model.params.mu_c - 0.5 * model.params.sigma_c * model.params.sigma_c,
            Measure::PTilde => model.derived.hat_mu_c,
        }
    }
}

/// A sampled path of the uncontrolled capacity `C⁰` on `s ∈ [0, T − t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub times: Vec<f64>,
    pub c0: Vec<f64>,
    pub measure: Measure,
    /// Per-step uniforms for the bridge correction (one pair per step), empty
    /// when the correction is off.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub uniforms: Vec<[f64; 2]>,
}

impl Path {
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }
}

/// `0 = s_0 < … < s_N = T − t` with step `dt`; the last step may be shorter.
pub fn time_grid(remaining: f64, dt: f64) -> Vec<f64> {
    if remaining <= 0.0 {
        return vec![0.0];
    }
    let n = ((remaining / dt) - 1e-9).ceil().max(1.0) as usize;
    (0..=n).map(|k| if k == n { remaining } else { k as f64 * dt }).collect()
}

fn check_start(horizon: f64, t: f64) -> Result<()> {
    if !(0.0..=horizon).contains(&t) {
        return Err(Error::domain(format!("start time {t} outside [0, {horizon}]")));
    }
    Ok(())
}

/// Exact log-normal sampling of path `index` of a run.
pub fn sample_path<P: MarginalProfit>(
    model: &Model<P>,
    t: f64,
    sim: &SimConfig,
    measure: Measure,
    index: u64,
) -> Result<Path> {
    sim.validate(model.params.horizon)?;
    check_start(model.params.horizon, t)?;
    let times = time_grid(model.params.horizon - t, sim.dt);
    Ok(draw_path(model, &times, sim, measure, index))
}

pub(crate) fn draw_path<P: MarginalProfit>(
    model: &Model<P>,
    times: &[f64],
    sim: &SimConfig,
    measure: Measure,
    index: u64,
) -> Path {
    let (stream, sign) = if sim.antithetic {
        (index / 2, if index % 2 == 1 { -1.0 } else { 1.0 })
    } else {
        (index, 1.0)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(sim.seed);
    rng.set_stream(stream);
    let drift = measure.log_drift(model);
    let sigma = model.params.sigma_c;
    let mut c0 = Vec::with_capacity(times.len());
    let mut uniforms = Vec::new();
    c0.push(1.0);
    let mut log_c = 0.0;
    for w in times.windows(2) {
        let h = w[1] - w[0];
        let z: f64 = rng.sample(StandardNormal);
        log_c += drift * h + sigma * h.sqrt() * sign * z;
        c0.push(log_c.exp());
        if sim.bridge {
            uniforms.push([rng.random::<f64>(), rng.random::<f64>()]);
        }
    }
    Path {
        times: times.to_vec(),
        c0,
        measure,
        uniforms,
    }
}

/// Runs `f` on every path index and returns the outputs in index order.
pub(crate) fn map_paths<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n as u64).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n as u64).map(f).collect()
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub n: usize,
}

impl GameEstimate {
    /// Mean and standard error of per-path samples, averaging antithetic pairs
    /// first. Summation runs in path order.
    pub fn from_samples(samples: &[f64], antithetic: bool) -> Self {
        let pooled: Vec<f64>;
        let xs = if antithetic {
            pooled = samples.chunks(2).map(|p| p.iter().sum::<f64>() / p.len() as f64).collect();
            &pooled[..]
        } else {
            samples
        };
        let m = xs.len();
        if m == 0 {
            return Self {
                mean: f64::NAN,
                std_err: f64::NAN,
                n: 0,
            };
        }
        // Shifted by the first sample so constant samples give an exact mean.
        let shift = xs[0];
        let mean = shift + xs.iter().map(|x| x - shift).sum::<f64>() / m as f64;
        let var = if m > 1 {
            xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            std_err: (var / m as f64).sqrt(),
            n: samples.len(),
        }
    }
}

/// Boundary values `(ŷ₊(t + s_k), ŷ₋(t + s_k))` along a path grid.
pub(crate) fn boundary_track(curves: &BoundaryCurves, t: f64, times: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let horizon = curves.horizon();
    let mut lower = Vec::with_capacity(times.len());
    let mut upper = Vec::with_capacity(times.len());
    for &s in times {
        let (a, b) = interpolate(curves, (t + s).min(horizon))?;
        lower.push(a);
        upper.push(b);
    }
    Ok((lower, upper))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_reaches_remaining_time() {
        let g = time_grid(1.0, 0.3);
        assert_eq!(g.len(), 5);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert_eq!(time_grid(1.0, 0.25).len(), 5);
        assert_eq!(time_grid(0.0, 0.1), vec![0.0]);
    }

    #[test]
    fn same_seed_same_path() {
        let m = Model::reference();
        let sim = SimConfig::default().with_paths(10);
        let a = sample_path(&m, 0.0, &sim, Measure::PTilde, 3).unwrap();
        let b = sample_path(&m, 0.0, &sim, Measure::PTilde, 3).unwrap();
        assert_eq!(a, b);
        let c = sample_path(&m, 0.0, &sim, Measure::PTilde, 4).unwrap();
        assert_ne!(a.c0, c.c0);
        assert_eq!(a.c0[0], 1.0);
    }

    #[test]
    fn antithetic_pairs_mirror() {
        let m = Model::reference();
        let sim = SimConfig {
            antithetic: true,
            n_paths: 10,
            ..SimConfig::default()
        };
        let a = sample_path(&m, 0.0, &sim, Measure::PTilde, 6).unwrap();
        let b = sample_path(&m, 0.0, &sim, Measure::PTilde, 7).unwrap();
        let drift = m.derived.hat_mu_c;
        let (la, lb) = (a.c0[5].ln(), b.c0[5].ln());
        let mid = drift * a.times[5];
        assert!((la - mid + lb - mid).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::default().with_paths(0).validate(1.0).is_err());
        assert!(SimConfig::default().with_dt(2.0).validate(1.0).is_err());
        let odd = SimConfig {
            antithetic: true,
            n_paths: 3,
            ..SimConfig::default()
        };
        assert!(odd.validate(1.0).is_err());
    }

    #[test]
    fn estimate_of_constant_has_zero_error() {
        let e = GameEstimate::from_samples(&[0.8; 10], false);
        assert_eq!(e.mean, 0.8);
        assert_eq!(e.std_err, 0.0);
    }
}
