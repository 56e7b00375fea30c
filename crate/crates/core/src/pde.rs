//! Penalized double-obstacle problem in `x = ln y`, solved independently of
//! the integral equations:
//!
//! ```text
//! ∂_t u + (σ²/2) u_xx + μ̂ u_x − μ̄ u = −R_c(eˣ) − (1/ε)(c₋/f_C − u)⁺ + (1/ε)(u − c₊/f_C)⁺,
//! u(T, ·) = c₋/f_C,   u(t, x_min) = c₊/f_C,   u(t, x_max) = c₋/f_C.
//! ```
//!
//! Implicit Euler in time; each step is a semismooth Newton iteration on a
//! tridiagonal system.

use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryCurves;
use crate::error::{Error, Result};
use crate::model::{LogNormalStep, MarginalProfit, Model};
use crate::quadrature::GaussLegendre;
use crate::value::{GridSource, ValueEvaluator, ValueGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PdeConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    pub n_t: usize,
    pub epsilon: f64,
    pub newton_tol: f64,
    pub newton_max_iters: usize,
    /// Project onto `[c₋/f_C, c₊/f_C]` after every implicit step.
    pub clamp: bool,
}

impl Default for PdeConfig {
    fn default() -> Self {
        Self {
            x_min: -4.0,
            x_max: 3.5,
            n_x: 400,
            n_t: 400,
            epsilon: 1e-4,
            newton_tol: 1e-12,
            newton_max_iters: 100,
            clamp: false,
        }
    }
}

impl PdeConfig {
    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_x - 1) as f64
    }

    /// Checks the grid and the lower domain margin. The upper margin depends on
    /// the solved `ŷ₋(0)`; see [`PdeConfig::check_domain`].
    pub fn validate<P: MarginalProfit>(&self, model: &Model<P>) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::invalid("epsilon", "must be positive"));
        }
        if self.n_x < 50 {
            return Err(Error::invalid("n_x", format!("need at least 50 nodes, got {}", self.n_x)));
        }
        if self.n_t < 50 {
            return Err(Error::invalid("n_t", format!("need at least 50 steps, got {}", self.n_t)));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::invalid("newton_tol", "must be positive"));
        }
        if self.newton_max_iters == 0 {
            return Err(Error::invalid("newton_max_iters", "must be at least 1"));
        }
        if !(self.x_min.is_finite() && self.x_max.is_finite() && self.x_min < self.x_max) {
            return Err(Error::invalid("x_max", "need finite x_min < x_max"));
        }
        let cap = model.invest_cap()?.ln();
        if !(self.x_min < cap - 2.0) {
            return Err(Error::invalid(
                "x_min",
                format!("must lie below ln of the investment cap minus 2 ({})", cap - 2.0),
            ));
        }
        let sigma2 = model.params.sigma_c * model.params.sigma_c;
        if model.derived.hat_mu_c.abs() * self.dx() > sigma2 {
            return Err(Error::invalid(
                "n_x",
                "space step too coarse for a monotone central drift stencil",
            ));
        }
        Ok(())
    }

    /// Upper domain margin against solved boundaries: `x_max > ln ŷ₋(0) + 2`.
    pub fn check_domain(&self, curves: &BoundaryCurves) -> Result<()> {
        let top = curves.y_minus()[0].ln() + 2.0;
        if !(self.x_max > top) {
            return Err(Error::invalid(
                "x_max",
                format!("must exceed ln ŷ₋(0) + 2 = {top}"),
            ));
        }
        Ok(())
    }
}

/// Solves `a_i x_{i-1} + b_i x_i + c_i x_{i+1} = d_i` in place (`d` becomes `x`).
fn thomas(sub: &[f64], diag: &mut [f64], sup: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    for i in 1..n {
        let w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
    }
}

pub fn solve_penalized<P: MarginalProfit>(model: &Model<P>, cfg: &PdeConfig) -> Result<ValueGrid> {
    cfg.validate(model)?;
    let params = &model.params;
    let (hi_level, lo_level) = (params.upper_level(), params.lower_level());
    let n_x = cfg.n_x;
    let dx = cfg.dx();
    let dt = params.horizon / cfg.n_t as f64;
    let x_grid: Vec<f64> = (0..n_x).map(|j| cfg.x_min + dx * j as f64).collect();
    let t_grid: Vec<f64> = (0..=cfg.n_t)
        .map(|k| if k == cfg.n_t { params.horizon } else { dt * k as f64 })
        .collect();
    let source: Vec<f64> = x_grid.iter().map(|&x| dt * model.prod.rc(x.exp())).collect();

    let diff = 0.5 * params.sigma_c * params.sigma_c / (dx * dx);
    let adv = model.derived.hat_mu_c / (2.0 * dx);
    let lower_coef = -dt * (diff - adv);
    let upper_coef = -dt * (diff + adv);
    let base_diag = 1.0 + model.derived.bar_mu * dt + 2.0 * diff * dt;
    let stiff = dt / cfg.epsilon;

    let m = n_x - 2;
    let mut rows = vec![vec![lo_level; n_x]; cfg.n_t + 1];
    let mut u = vec![lo_level; n_x];
    let (mut sub, mut diag, mut sup, mut rhs) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    for k in (0..cfg.n_t).rev() {
        let next = u.clone();
        u[0] = hi_level;
        u[n_x - 1] = lo_level;
        let mut converged = false;
        for _ in 0..cfg.newton_max_iters {
            let mut step = 0.0_f64;
            for i in 0..m {
                let j = i + 1;
                let below = u[j] < lo_level;
                let above = u[j] > hi_level;
                let penalty = (lo_level - u[j]).max(0.0) - (u[j] - hi_level).max(0.0);
                let residual = base_diag * u[j] + lower_coef * u[j - 1] + upper_coef * u[j + 1]
                    - stiff * penalty
                    - next[j]
                    - source[j];
                sub[i] = if i > 0 { lower_coef } else { 0.0 };
                sup[i] = if i + 1 < m { upper_coef } else { 0.0 };
                diag[i] = base_diag + stiff * (f64::from(u8::from(below)) + f64::from(u8::from(above)));
                rhs[i] = -residual;
            }
            thomas(&sub, &mut diag, &sup, &mut rhs);
            for i in 0..m {
                u[i + 1] += rhs[i];
                step = step.max(rhs[i].abs());
            }
            if step <= cfg.newton_tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Convergence {
                what: "penalized Newton step",
                step: k,
                iters: cfg.newton_max_iters,
            });
        }
        if cfg.clamp {
            for v in &mut u {
                *v = v.clamp(lo_level, hi_level);
            }
        }
        rows[k].copy_from_slice(&u);
    }
    ValueGrid::new(t_grid, x_grid, rows, GridSource::Pde)
}

/// Boundary estimates from the level crossings of a penalized solution.
///
/// `ŷ₊` is taken at the last crossing of `c₊/f_C − level_tol` and `ŷ₋` at the
/// first crossing of `c₋/f_C + level_tol`. Since the value meets the obstacle
/// tangentially, each crossing is refined to the vertex of the parabola
/// through the three adjacent band-side nodes. Lateral nodes are excluded
/// from the search. When no interior node reaches the upper level, `ŷ₊` lies
/// below the domain and `e^{x_min}` is reported. The terminal row is pinned to `(0, R_c⁻¹(μ̄c₋/f_C))`.
pub fn extract_boundaries<P: MarginalProfit>(
    model: &Model<P>,
    grid: &ValueGrid,
    level_tol: f64,
) -> Result<BoundaryCurves> {
    if grid.x_grid.len() < 3 || grid.t_grid.len() < 2 {
        return Err(Error::domain("grid too small for boundary extraction"));
    }
    let hi = model.params.upper_level() - level_tol;
    let lo = model.params.lower_level() + level_tol;
    let xs = &grid.x_grid;
    let last = xs.len() - 1;
    let n = grid.t_grid.len() - 1;
    let (mut y_plus, mut y_minus) = (vec![0.0; n + 1], vec![0.0; n + 1]);
    for (k, row) in grid.values.iter().enumerate().take(n) {
        let t = grid.t_grid[k];
        let g = |j: usize| row[j] - hi;
        y_plus[k] = match (1..last).rev().find(|&j| g(j) >= 0.0) {
            None => xs[0].exp(),
            Some(j) if j + 1 == last => {
                return Err(Error::Extraction(format!(
                    "value stays at the investment level across the domain at t = {t}"
                )))
            }
            Some(j) => contact(xs, j, 1, |i| -g(i), last).exp(),
        };
        let h = |j: usize| lo - row[j];
        y_minus[k] = match (1..last).find(|&j| h(j) >= 0.0) {
            None => {
                return Err(Error::Extraction(format!(
                    "disinvestment level not reached below x_max = {} at t = {t}",
                    xs[last]
                )))
            }
            Some(1) => {
                return Err(Error::Extraction(format!(
                    "value at the disinvestment level across the domain at t = {t}"
                )))
            }
            Some(j) => contact(xs, j, -1, |i| -h(i), last).exp(),
        };
    }
    y_plus[n] = 0.0;
    y_minus[n] = model.disinvest_floor()?;
    BoundaryCurves::new(grid.t_grid.clone(), y_plus, y_minus)
}

/// Contact point between the stopping-side node `stop` and the band-side node
/// `band` (`step` = ±1 points from `stop` into the band). The value meets the
/// obstacle tangentially, so the contact is located as the vertex of the
/// parabola through three band-side nodes, kept within one cell of the
/// crossing; linear inverse interpolation of `gap` is used when fewer band
/// nodes are available or the fit is not convex.
fn contact<F: Fn(usize) -> f64>(xs: &[f64], stop: usize, step: isize, gap: F, last: usize) -> f64 {
    let at = |k: isize| (stop as isize + k * step) as usize;
    let (band, g_stop) = (at(1), gap(stop));
    let g_band = gap(band);
    let linear = xs[band] + g_band / (g_band - g_stop) * (xs[stop] - xs[band]);
    let far = stop as isize + 3 * step;
    if far < 1 || far >= last as isize {
        return linear;
    }
    let (x0, x1, x2) = (xs[at(1)], xs[at(2)], xs[at(3)]);
    let (g0, g1, g2) = (g_band, gap(at(2)), gap(at(3)));
    let d01 = (g1 - g0) / (x1 - x0);
    let d12 = (g2 - g1) / (x2 - x1);
    let curv = (d12 - d01) / (x2 - x0);
    if !(curv > 0.0) {
        return linear;
    }
    let vertex = 0.5 * (x0 + x1) - d01 / (2.0 * curv);
    let h = xs[stop] - xs[band];
    let (a, b) = if h > 0.0 { (xs[band] - h, xs[stop] + h) } else { (xs[stop] + h, xs[band] - h) };
    vertex.clamp(a, b)
}

/// Measured penalty violations `max (u − c₊/f_C)⁺` and `max (c₋/f_C − u)⁺`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overshoot {
    pub above_upper: f64,
    pub below_lower: f64,
}

pub fn overshoot<P: MarginalProfit>(model: &Model<P>, grid: &ValueGrid) -> Overshoot {
    let (hi, lo) = (model.params.upper_level(), model.params.lower_level());
    let mut o = Overshoot {
        above_upper: 0.0,
        below_lower: 0.0,
    };
    for &v in grid.values.iter().flatten() {
        o.above_upper = o.above_upper.max(v - hi);
        o.below_lower = o.below_lower.max(lo - v);
    }
    o
}

/// `κ = sup_y Ẽ∫₀^T R_c²(y C⁰(r)) dr / (1 + y⁻²)`, by quadrature in time and
/// in the normal variable, maximized over `ln y`.
pub fn penalty_kappa<P: MarginalProfit>(model: &Model<P>) -> f64 {
    let time = GaussLegendre::new(32);
    let normal = GaussLegendre::new(64);
    let horizon = model.params.horizon;
    let sigma = model.params.sigma_c;
    let drift = model.derived.hat_mu_c;
    let second_moment = |y: f64| {
        time.integrate(0.0, horizon, |r| {
            let law = LogNormalStep::new(y, r, drift, sigma);
            normal.integrate(-10.0, 10.0, |z| {
                let yr = y * (drift * r + law.vol() * z).exp();
                let rc = model.prod.rc(yr);
                rc * rc * (-0.5 * z * z).exp()
            }) / (2.0 * std::f64::consts::PI).sqrt()
        })
    };
    let ratio = |ln_y: f64| {
        let y = ln_y.exp();
        second_moment(y) / (1.0 + 1.0 / (y * y))
    };
    let mut best = (f64::NEG_INFINITY, 0.0);
    let steps = 400;
    for k in 0..=steps {
        let ln_y = -10.0 + 20.0 * k as f64 / steps as f64;
        let r = ratio(ln_y);
        if r > best.0 {
            best = (r, ln_y);
        }
    }
    // Golden-section refinement around the best scan point.
    let phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let (mut a, mut b) = (best.1 - 0.05, best.1 + 0.05);
    for _ in 0..60 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if ratio(c) > ratio(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.0.max(ratio(0.5 * (a + b)))
}

/// `√(ε / (2(1 + μ̄ε))) · √(κ(1 + y⁻²))`, the bound on `(u − c₊/f_C)⁺`. The
/// bound on `(c₋/f_C − u)⁺` adds `μ̄c₋/f_C · ε/(1 + μ̄ε)`.
pub fn overshoot_bound<P: MarginalProfit>(model: &Model<P>, epsilon: f64, kappa: f64, y: f64) -> (f64, f64) {
    let bar_mu = model.derived.bar_mu;
    let upper = (epsilon / (2.0 * (1.0 + bar_mu * epsilon))).sqrt() * (kappa * (1.0 + 1.0 / (y * y))).sqrt();
    let lower = upper + bar_mu * model.params.lower_level() * epsilon / (1.0 + bar_mu * epsilon);
    (upper, lower)
}

/// Whether every node of a penalized grid respects the two overshoot bounds.
pub fn respects_overshoot_bound<P: MarginalProfit>(model: &Model<P>, grid: &ValueGrid, epsilon: f64, kappa: f64) -> bool {
    let (hi, lo) = (model.params.upper_level(), model.params.lower_level());
    grid.values.iter().all(|row| {
        row.iter().zip(&grid.x_grid).all(|(&v, &x)| {
            let (bu, bl) = overshoot_bound(model, epsilon, kappa, x.exp());
            v - hi <= bu && lo - v <= bl
        })
    })
}

/// Max `|v_volterra − u|` over every `t_stride`-th row and `x_stride`-th
/// interior column of a penalized grid.
pub fn max_gap<P: MarginalProfit>(
    pde: &ValueGrid,
    volterra: &ValueEvaluator<'_, P>,
    t_stride: usize,
    x_stride: usize,
) -> Result<f64> {
    let t_rows: Vec<usize> = (0..pde.t_grid.len()).step_by(t_stride.max(1)).collect();
    let x_cols: Vec<usize> = (1..pde.x_grid.len() - 1).step_by(x_stride.max(1)).collect();
    let ts: Vec<f64> = t_rows.iter().map(|&i| pde.t_grid[i]).collect();
    let xs: Vec<f64> = x_cols.iter().map(|&j| pde.x_grid[j]).collect();
    let reference = volterra.value_grid(&ts, &xs)?;
    let mut gap: f64 = 0.0;
    for (a, &i) in t_rows.iter().enumerate() {
        for (b, &j) in x_cols.iter().enumerate() {
            gap = gap.max((reference.values[a][b] - pde.values[i][j]).abs());
        }
    }
    Ok(gap)
}

/// Max-norm distance between two sets of curves over `t ≤ t_max`, sampling
/// `other` at the nodes of `reference`.
pub fn curve_distance(reference: &BoundaryCurves, other: &BoundaryCurves, t_max: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (k, &t) in reference.t_grid().iter().enumerate() {
        if t > t_max {
            break;
        }
        let (p, m) = crate::boundary::interpolate(other, t)?;
        worst = worst
            .max((reference.y_plus()[k] - p).abs())
            .max((reference.y_minus()[k] - m).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> PdeConfig {
        PdeConfig {
            n_x: 120,
            n_t: 60,
            epsilon: 1e-3,
            ..PdeConfig::default()
        }
    }

    #[test]
    fn thomas_solves_tridiagonal() {
        let sub = [0.0, 1.0, 1.0];
        let mut diag = [4.0, 4.0, 4.0];
        let sup = [1.0, 1.0, 0.0];
        // x = (1, 2, 3)
        let mut rhs = [6.0, 12.0, 14.0];
        thomas(&sub, &mut diag, &sup, &mut rhs);
        for (v, e) in rhs.iter().zip([1.0, 2.0, 3.0]) {
            assert!((v - e).abs() < 1e-14);
        }
    }

    #[test]
    fn terminal_slice_is_lower_level() {
        let model = Model::reference();
        let g = solve_penalized(&model, &small()).unwrap();
        assert!(g.values.last().unwrap().iter().all(|&v| v == 0.8));
        assert_eq!(g.source, GridSource::Pde);
    }

    #[test]
    fn config_validation_names_fields() {
        let model = Model::reference();
        let bad = PdeConfig { epsilon: 0.0, ..small() };
        assert!(matches!(bad.validate(&model), Err(Error::Validation { field: "epsilon", .. })));
        let bad = PdeConfig { x_min: -1.0, ..small() };
        assert!(matches!(bad.validate(&model), Err(Error::Validation { field: "x_min", .. })));
        let bad = PdeConfig { n_x: 10, ..small() };
        assert!(matches!(bad.validate(&model), Err(Error::Validation { field: "n_x", .. })));
    }

    #[test]
    fn extraction_pins_terminal_row() {
        let model = Model::reference();
        let g = solve_penalized(&model, &small()).unwrap();
        let c = extract_boundaries(&model, &g, 0.0).unwrap();
        assert_eq!(c.y_plus()[c.n_steps()], 0.0);
        assert_eq!(c.y_minus()[c.n_steps()], 2.44140625);
    }

    #[test]
    fn extraction_fails_on_short_domain() {
        let model = Model::reference();
        let cfg = PdeConfig { x_max: 1.0, ..small() };
        let g = solve_penalized(&model, &cfg).unwrap();
        assert!(matches!(extract_boundaries(&model, &g, 0.0), Err(Error::Extraction(_))));
    }
}
