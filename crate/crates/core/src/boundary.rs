//! Backward solution of the coupled Volterra equations for the investment
//! boundary `ŷ₊` and the disinvestment boundary `ŷ₋`.
//!
//! At every node `t_i < T` both boundary values must reproduce the marginal
//! levels through the value representation:
//!
//! ```text
//! c∓/f_C = e^{−μ̄(T−t)} c₋/f_C
//!        + ∫₀^{T−t} e^{−μ̄s} { K₁(ŷ∓(t); s, ŷ₊(t+s), ŷ₋(t+s))
//!                            + μ̄/f_C [c₊ K₂(ŷ∓(t); s, ŷ₊(t+s)) + c₋ K₃(ŷ∓(t); s, ŷ₋(t+s))] } ds
//! ```
//!
//! Each grid panel is integrated with Gauss–Legendre. Inside a panel `ŷ₊` is
//! interpolated linearly in time and `ŷ₋` linearly in `√(T − t)`, since it
//! approaches its terminal level like a square root. The panel starting at
//! `s = 0` carries a `1/√s` layer (the start value sits on a boundary) and the
//! panel ending at the horizon a `√(T − t)` layer; both are integrated in the
//! square-root variable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MarginalProfit, Model};
use crate::quadrature::GaussLegendre;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub n_steps: usize,
    /// Absolute tolerance on the per-step Gauss–Seidel updates.
    pub root_tol: f64,
    pub residual_tol: f64,
    pub max_outer_iters: usize,
    pub y_minus_cap_factor: f64,
    /// Lower end of the investment bracket at the last interior node.
    pub floor: f64,
    /// Gauss–Legendre nodes on the panels at either end of the integral.
    pub first_panel_nodes: usize,
    /// Gauss–Legendre nodes on every other panel.
    pub panel_nodes: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_steps: 200,
            root_tol: 1e-12,
            residual_tol: 1e-8,
            max_outer_iters: 50,
            y_minus_cap_factor: 4.0,
            floor: 1e-12,
            first_panel_nodes: 24,
            panel_nodes: 4,
        }
    }
}

impl GridConfig {
    pub fn with_steps(n_steps: usize) -> Self {
        Self {
            n_steps,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_steps < 2 {
            return Err(Error::invalid("n_steps", "must be at least 2"));
        }
        if !(self.root_tol > 0.0) {
            return Err(Error::invalid("root_tol", "must be positive"));
        }
        if !(self.residual_tol > 0.0) {
            return Err(Error::invalid("residual_tol", "must be positive"));
        }
        if self.max_outer_iters == 0 {
            return Err(Error::invalid("max_outer_iters", "must be positive"));
        }
        if !(self.y_minus_cap_factor > 1.0) {
            return Err(Error::invalid("y_minus_cap_factor", "must exceed 1"));
        }
        if !(self.floor > 0.0) {
            return Err(Error::invalid("floor", "must be positive"));
        }
        if self.first_panel_nodes == 0 {
            return Err(Error::invalid("first_panel_nodes", "must be positive"));
        }
        if self.panel_nodes == 0 {
            return Err(Error::invalid("panel_nodes", "must be positive"));
        }
        Ok(())
    }
}

/// The two boundaries sampled on a uniform grid over `[0, T]`.
///
/// Unfilled nodes (while solving) hold `NaN`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurves {
    t_grid: Vec<f64>,
    y_plus: Vec<f64>,
    y_minus: Vec<f64>,
}

impl BoundaryCurves {
    pub fn new(t_grid: Vec<f64>, y_plus: Vec<f64>, y_minus: Vec<f64>) -> Result<Self> {
        let n = t_grid.len();
        if n < 2 || y_plus.len() != n || y_minus.len() != n {
            return Err(Error::domain(format!(
                "curve lengths must agree and be >= 2 (t: {n}, y_plus: {}, y_minus: {})",
                y_plus.len(),
                y_minus.len()
            )));
        }
        if t_grid[0] != 0.0 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("time grid must start at 0 and increase"));
        }
        Ok(Self {
            t_grid,
            y_plus,
            y_minus,
        })
    }

    /// `n_steps + 1` uniform nodes on `[0, horizon]` with every value unfilled.
    pub fn unfilled(horizon: f64, n_steps: usize) -> Self {
        let dt = horizon / n_steps as f64;
        let mut t_grid: Vec<f64> = (0..=n_steps).map(|i| i as f64 * dt).collect();
        t_grid[n_steps] = horizon;
        Self {
            t_grid,
            y_plus: vec![f64::NAN; n_steps + 1],
            y_minus: vec![f64::NAN; n_steps + 1],
        }
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    pub fn y_plus(&self) -> &[f64] {
        &self.y_plus
    }

    pub fn y_minus(&self) -> &[f64] {
        &self.y_minus
    }

    pub fn n_steps(&self) -> usize {
        self.t_grid.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.t_grid[self.n_steps()]
    }

    pub fn set(&mut self, i: usize, y_plus: f64, y_minus: f64) {
        self.y_plus[i] = y_plus;
        self.y_minus[i] = y_minus;
    }

    /// Both curves multiplied by constant factors.
    pub fn scaled(&self, plus_factor: f64, minus_factor: f64) -> Self {
        Self {
            t_grid: self.t_grid.clone(),
            y_plus: self.y_plus.iter().map(|v| v * plus_factor).collect(),
            y_minus: self.y_minus.iter().map(|v| v * minus_factor).collect(),
        }
    }

    /// Constant boundaries `lower < upper` on the same grid.
    pub fn constant(t_grid: Vec<f64>, lower: f64, upper: f64) -> Result<Self> {
        let n = t_grid.len();
        Self::new(t_grid, vec![lower; n], vec![upper; n])
    }

    fn is_filled(&self, i: usize) -> bool {
        self.y_plus[i].is_finite() && self.y_minus[i].is_finite()
    }

    /// Index of the grid node at `t`, if `t` falls on one.
    pub(crate) fn node_index(&self, t: f64) -> Option<usize> {
        let scale = self.horizon().max(1.0) * 1e-12;
        let k = self.t_grid.partition_point(|&x| x < t - scale);
        (k < self.t_grid.len() && (self.t_grid[k] - t).abs() <= scale).then_some(k)
    }
}

/// Piecewise-linear values `(ŷ₊(t), ŷ₋(t))`, exact at the nodes.
pub fn interpolate(curves: &BoundaryCurves, t: f64) -> Result<(f64, f64)> {
    let horizon = curves.horizon();
    if !(t >= 0.0 && t <= horizon) {
        return Err(Error::domain(format!("t = {t} outside [0, {horizon}]")));
    }
    Ok(interpolate_unchecked(curves, t))
}

pub(crate) fn interpolate_unchecked(curves: &BoundaryCurves, t: f64) -> (f64, f64) {
    if let Some(k) = curves.node_index(t) {
        return (curves.y_plus[k], curves.y_minus[k]);
    }
    let g = &curves.t_grid;
    let k = g.partition_point(|&x| x <= t).clamp(1, g.len() - 1);
    let w = (t - g[k - 1]) / (g[k] - g[k - 1]);
    (
        (1.0 - w) * curves.y_plus[k - 1] + w * curves.y_plus[k],
        (1.0 - w) * curves.y_minus[k - 1] + w * curves.y_minus[k],
    )
}

/// `(0, R_c⁻¹(μ̄c₋/f_C))`.
pub fn terminal_values<P: MarginalProfit>(model: &Model<P>) -> Result<(f64, f64)> {
    Ok((0.0, model.disinvest_floor()?))
}

/// One quadrature node of the representation: elapsed time and boundary values.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Node {
    pub s: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Quadrature rules used to discretize the representation integral.
#[derive(Debug, Clone)]
pub(crate) struct PanelRules {
    /// Panels touching `s = 0` or `s = T − t`, in the square-root variable.
    pub edge: GaussLegendre,
    /// Interior panels.
    pub interior: GaussLegendre,
    /// Number of geometric (ratio 1/4) refinements of the first panel toward
    /// `s = 0`. Start values off the boundaries have a transition layer of
    /// width `~ln(y/ŷ)²` there.
    pub head_levels: usize,
}

impl PanelRules {
    pub fn new(grid: &GridConfig) -> Self {
        Self {
            edge: GaussLegendre::new(grid.first_panel_nodes),
            interior: GaussLegendre::new(grid.panel_nodes),
            head_levels: 0,
        }
    }

    pub fn graded(grid: &GridConfig, head_levels: usize) -> Self {
        Self {
            head_levels,
            ..Self::new(grid)
        }
    }

    /// `∫ f(u) du` over `[lo, hi]` in the square-root variable, refined toward `lo = 0`.
    fn head<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut f: F) -> f64 {
        if self.head_levels == 0 || lo > 0.0 {
            return self.edge.integrate(lo, hi, f);
        }
        let mut total = 0.0;
        let mut right = hi;
        for _ in 0..self.head_levels {
            let left = 0.25 * right;
            total += self.edge.integrate(left, right, &mut f);
            right = left;
        }
        total + self.edge.integrate(0.0, right, f)
    }
}

/// Boundary values across one panel `[a.s, b.s]` of an integral that ends at
/// the horizon `s = tau`. The investment boundary is linear in time; the
/// disinvestment boundary is linear in `√(T − t)`, matching its square-root
/// approach to the terminal level.
fn panel_bounds(a: &Node, b: &Node, s: f64, tau: f64) -> (f64, f64) {
    let w = (s - a.s) / (b.s - a.s);
    let lower = (1.0 - w) * a.lower + w * b.lower;
    let (ra, rb) = ((tau - a.s).sqrt(), (tau - b.s).max(0.0).sqrt());
    let v = ((ra - (tau - s).max(0.0).sqrt()) / (ra - rb)).clamp(0.0, 1.0);
    let upper = (1.0 - v) * a.upper + v * b.upper;
    (lower, upper)
}

/// Right-hand side of the value representation for start value `y`, given the
/// boundary values along `nodes`; `nodes[0].s == 0` and the last node is the
/// horizon, `s = T − t`.
pub(crate) fn representation<P: MarginalProfit>(
    model: &Model<P>,
    y: f64,
    nodes: &[Node],
    rules: &PanelRules,
) -> f64 {
    let tau = nodes.last().map_or(0.0, |n| n.s);
    let mut total = (-model.derived.bar_mu * tau).exp() * model.params.lower_level();
    if nodes.len() < 2 {
        return total;
    }
    let f = |s: f64, (lower, upper): (f64, f64)| model.representation_integrand(y, s, lower, upper);
    let panels = nodes.len() - 1;
    for (k, w) in nodes.windows(2).enumerate() {
        let (a, b) = (&w[0], &w[1]);
        let h = b.s - a.s;
        if h <= 0.0 {
            continue;
        }
        let bounds = |s: f64| panel_bounds(a, b, s, tau);
        // Square-root layer at the start of the first panel.
        let head = |lo: f64, hi: f64| {
            rules.head(lo.sqrt(), hi.sqrt(), |u| {
                let s = a.s + u * u;
                2.0 * u * f(s, bounds(s))
            })
        };
        // Square-root layer at the horizon.
        let tail = |lo: f64, hi: f64| {
            rules.edge.integrate((tau - hi).sqrt(), (tau - lo).sqrt(), |v| {
                let s = tau - v * v;
                2.0 * v * f(s, bounds(s))
            })
        };
        total += match (k == 0, k + 1 == panels) {
            (true, true) => head(0.0, 0.5 * h) + tail(a.s + 0.5 * h, b.s),
            (true, false) => head(0.0, h),
            (false, true) => tail(a.s, b.s),
            (false, false) => rules.interior.integrate(a.s, b.s, |s| f(s, bounds(s))),
        };
    }
    total
}

/// Boundary values at an arbitrary time, using the same rule as the
/// quadrature: linear for `ŷ₊`, linear in `√(T − t)` for `ŷ₋`.
pub(crate) fn quadrature_bounds_at(curves: &BoundaryCurves, t: f64) -> (f64, f64) {
    if let Some(k) = curves.node_index(t) {
        return (curves.y_plus[k], curves.y_minus[k]);
    }
    let g = &curves.t_grid;
    let k = g.partition_point(|&x| x <= t).clamp(1, g.len() - 1);
    let horizon = curves.horizon();
    let a = Node {
        s: g[k - 1],
        lower: curves.y_plus[k - 1],
        upper: curves.y_minus[k - 1],
    };
    let b = Node {
        s: g[k],
        lower: curves.y_plus[k],
        upper: curves.y_minus[k],
    };
    panel_bounds(&a, &b, t, horizon)
}

fn nodes_from(curves: &BoundaryCurves, i: usize, lower_i: f64, upper_i: f64) -> Result<Vec<Node>> {
    let n = curves.n_steps();
    if i > n {
        return Err(Error::domain(format!("node {i} beyond grid of {n} steps")));
    }
    let t_i = curves.t_grid[i];
    let mut nodes = Vec::with_capacity(n - i + 1);
    nodes.push(Node {
        s: 0.0,
        lower: lower_i,
        upper: upper_i,
    });
    for j in i + 1..=n {
        if !curves.is_filled(j) {
            return Err(Error::State(format!(
                "node {j} must be filled before evaluating node {i}"
            )));
        }
        nodes.push(Node {
            s: curves.t_grid[j] - t_i,
            lower: curves.y_plus[j],
            upper: curves.y_minus[j],
        });
    }
    Ok(nodes)
}

/// Evaluates the two Volterra residuals against a (partially) filled set of curves.
pub struct ResidualContext<'a, P> {
    model: &'a Model<P>,
    rules: PanelRules,
}

impl<'a, P: MarginalProfit> ResidualContext<'a, P> {
    pub fn new(model: &'a Model<P>, grid: &GridConfig) -> Self {
        Self {
            model,
            rules: PanelRules::new(grid),
        }
    }

    pub fn model(&self) -> &Model<P> {
        self.model
    }

    /// Residual of the disinvestment equation with `ŷ₋(t_i) := y_cand` and
    /// `ŷ₊(t_i)` taken from `curves`.
    pub fn residual_minus(&self, curves: &BoundaryCurves, i: usize, y_cand: f64) -> Result<f64> {
        check_candidate(y_cand)?;
        let lower = curves.y_plus.get(i).copied().unwrap_or(f64::NAN);
        let lower = if lower.is_finite() { lower } else { 0.0 };
        let nodes = nodes_from(curves, i, lower, y_cand)?;
        Ok(representation(self.model, y_cand, &nodes, &self.rules) - self.model.params.lower_level())
    }

    /// Residual of the investment equation with `ŷ₊(t_i) := y_cand` and
    /// `ŷ₋(t_i)` taken from `curves`.
    pub fn residual_plus(&self, curves: &BoundaryCurves, i: usize, y_cand: f64) -> Result<f64> {
        check_candidate(y_cand)?;
        let upper = curves.y_minus.get(i).copied().unwrap_or(f64::NAN);
        let upper = if upper.is_finite() {
            upper
        } else {
            curves
                .y_minus
                .get(i + 1)
                .copied()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::State(format!("no disinvestment iterate at node {i}")))?
        };
        let nodes = nodes_from(curves, i, y_cand, upper)?;
        Ok(representation(self.model, y_cand, &nodes, &self.rules) - self.model.params.upper_level())
    }
}

fn check_candidate(y: f64) -> Result<()> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::domain(format!("candidate boundary must be positive, got {y}")));
    }
    Ok(())
}

pub fn residual_minus<P: MarginalProfit>(
    model: &Model<P>,
    grid: &GridConfig,
    curves: &BoundaryCurves,
    t_index: usize,
    y_cand: f64,
) -> Result<f64> {
    ResidualContext::new(model, grid).residual_minus(curves, t_index, y_cand)
}

pub fn residual_plus<P: MarginalProfit>(
    model: &Model<P>,
    grid: &GridConfig,
    curves: &BoundaryCurves,
    t_index: usize,
    y_cand: f64,
) -> Result<f64> {
    ResidualContext::new(model, grid).residual_plus(curves, t_index, y_cand)
}

/// Bisection for a residual that is positive at `lo` and negative at `hi`.
fn bisect<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    target: f64,
) -> Result<(f64, f64)> {
    let mut best = (lo, f64::INFINITY);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let r = f(mid)?;
        if r.abs() < best.1.abs() {
            best = (mid, r);
        }
        if r.abs() <= target {
            break;
        }
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

fn scan<F: FnMut(f64) -> Result<f64>>(mut f: F, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    (0..=8)
        .map(|k| {
            let y = lo + (hi - lo) * k as f64 / 8.0;
            (y, f(y).unwrap_or(f64::NAN))
        })
        .collect()
}

/// Residual sizes of a solved set of curves.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualNorms {
    pub max_abs_plus: f64,
    pub max_abs_minus: f64,
}

impl ResidualNorms {
    pub fn max(&self) -> f64 {
        self.max_abs_plus.max(self.max_abs_minus)
    }
}

/// Recomputes both residuals at every node `t_i < T`.
pub fn certify<P: MarginalProfit>(
    model: &Model<P>,
    grid: &GridConfig,
    curves: &BoundaryCurves,
) -> Result<ResidualNorms> {
    let ctx = ResidualContext::new(model, grid);
    let mut norms = ResidualNorms::default();
    for i in 0..curves.n_steps() {
        let rp = ctx.residual_plus(curves, i, curves.y_plus[i])?;
        let rm = ctx.residual_minus(curves, i, curves.y_minus[i])?;
        norms.max_abs_plus = norms.max_abs_plus.max(rp.abs());
        norms.max_abs_minus = norms.max_abs_minus.max(rm.abs());
    }
    Ok(norms)
}

/// Solves for both boundaries backward from `T`, alternating bisection on the
/// investment and disinvestment equations at each node until the pair settles.
pub fn solve_boundaries<P: MarginalProfit>(
    model: &Model<P>,
    grid: &GridConfig,
) -> Result<BoundaryCurves> {
    grid.validate()?;
    let n = grid.n_steps;
    let mut curves = BoundaryCurves::unfilled(model.params.horizon, n);
    let (plus_t, minus_t) = terminal_values(model)?;
    curves.set(n, plus_t, minus_t);

    let ctx = ResidualContext::new(model, grid);
    let invest_cap = model.invest_cap()?;
    let base_cap = grid.y_minus_cap_factor * minus_t;
    let target = 0.01 * grid.residual_tol;

    for i in (0..n).rev() {
        let t = curves.t_grid[i];
        let plus_lo = if i + 1 == n {
            grid.floor
        } else {
            curves.y_plus[i + 1]
        };
        let minus_lo = curves.y_minus[i + 1];
        curves.set(i, plus_lo, minus_lo);

        let mut converged = false;
        let mut cap = base_cap;
        for _ in 0..grid.max_outer_iters {
            let (old_plus, old_minus) = (curves.y_plus[i], curves.y_minus[i]);

            let rp = |y: f64| ctx.residual_plus(&curves, i, y);
            let plus_hi = invest_cap.min(curves.y_minus[i]);
            let (r_lo, r_hi) = (rp(plus_lo)?, rp(plus_hi)?);
            let new_plus = if r_lo <= 0.0 && r_lo.abs() <= grid.residual_tol {
                plus_lo
            } else if r_lo > 0.0 && r_hi < 0.0 {
                bisect(rp, plus_lo, plus_hi, target)?.0
            } else {
                return Err(Error::Bracket {
                    which: "investment boundary",
                    node: i,
                    t,
                    scan: scan(rp, plus_lo, plus_hi),
                });
            };
            curves.y_plus[i] = new_plus;

            let rm = |y: f64| ctx.residual_minus(&curves, i, y);
            let r_lo = rm(minus_lo)?;
            let new_minus = if r_lo <= 0.0 && r_lo.abs() <= grid.residual_tol {
                minus_lo
            } else if r_lo > 0.0 {
                let mut doublings = 0;
                while rm(cap)? >= 0.0 {
                    if doublings == 10 {
                        return Err(Error::Bracket {
                            which: "disinvestment boundary",
                            node: i,
                            t,
                            scan: scan(rm, minus_lo, cap),
                        });
                    }
                    cap *= 2.0;
                    doublings += 1;
                }
                bisect(rm, minus_lo, cap, target)?.0
            } else {
                return Err(Error::Bracket {
                    which: "disinvestment boundary",
                    node: i,
                    t,
                    scan: scan(rm, minus_lo, cap),
                });
            };
            curves.y_minus[i] = new_minus;

            if (new_plus - old_plus).abs() < grid.root_tol
                && (new_minus - old_minus).abs() < grid.root_tol
            {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Convergence {
                what: "boundary Gauss-Seidel sweep",
                step: i,
                iters: grid.max_outer_iters,
            });
        }
        let rp = ctx.residual_plus(&curves, i, curves.y_plus[i])?;
        let rm = ctx.residual_minus(&curves, i, curves.y_minus[i])?;
        if rp.abs() > grid.residual_tol || rm.abs() > grid.residual_tol {
            return Err(Error::Convergence {
                what: "Volterra residual",
                step: i,
                iters: grid.max_outer_iters,
            });
        }
    }
    Ok(curves)
}

/// Pass/fail summary of the structural properties of a set of curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub monotone_plus: bool,
    pub monotone_minus: bool,
    pub plus_within_bounds: bool,
    pub minus_within_bounds: bool,
    pub ordered: bool,
    pub terminal_ok: bool,
}

impl StructureReport {
    pub fn all_pass(&self) -> bool {
        self.monotone_plus
            && self.monotone_minus
            && self.plus_within_bounds
            && self.minus_within_bounds
            && self.ordered
            && self.terminal_ok
    }
}

pub fn check_structure<P: MarginalProfit>(
    model: &Model<P>,
    curves: &BoundaryCurves,
) -> Result<StructureReport> {
    let n = curves.n_steps();
    let (yp, ym) = (curves.y_plus(), curves.y_minus());
    let cap = model.invest_cap()?;
    let floor = model.disinvest_floor()?;
    Ok(StructureReport {
        monotone_plus: yp.windows(2).all(|w| w[0] >= w[1]),
        monotone_minus: ym.windows(2).all(|w| w[0] >= w[1]),
        plus_within_bounds: yp[..n].iter().all(|&v| v > 0.0 && v < cap),
        minus_within_bounds: ym[..n].iter().all(|&v| v > floor && v.is_finite()),
        ordered: yp.iter().zip(ym).all(|(a, b)| a < b),
        terminal_ok: yp[n] == 0.0 && ym[n] == floor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_is_exact_at_nodes_and_linear_between() {
        let c = BoundaryCurves::new(
            vec![0.0, 0.5, 1.0],
            vec![1.0, 0.6, 0.0],
            vec![3.0, 2.8, 2.4],
        )
        .unwrap();
        assert_eq!(interpolate(&c, 1.0).unwrap(), (0.0, 2.4));
        assert_eq!(interpolate(&c, 0.0).unwrap(), (1.0, 3.0));
        let (p, m) = interpolate(&c, 0.25).unwrap();
        assert!((p - 0.8).abs() < 1e-15 && (m - 2.9).abs() < 1e-15);
        assert!(interpolate(&c, 1.5).is_err());
        assert!(interpolate(&c, -0.1).is_err());
    }

    #[test]
    fn terminal_values_examples() {
        let m = Model::reference();
        assert_eq!(terminal_values(&m).unwrap(), (0.0, 2.44140625));
        assert_eq!(m.invest_cap().unwrap(), 1.5625);
        let p = crate::ModelParams {
            mu_c: 0.2,
            mu_f: 0.8,
            c_minus: 1.0,
            c_plus: 1.2,
            ..crate::ModelParams::reference()
        };
        let m = Model::new(p, crate::ProductionFn::default()).unwrap();
        assert_eq!(terminal_values(&m).unwrap(), (0.0, 1.0));
    }

    #[test]
    fn grid_validation() {
        assert!(GridConfig::with_steps(1).validate().is_err());
        let g = GridConfig {
            y_minus_cap_factor: 1.0,
            ..GridConfig::default()
        };
        assert!(matches!(
            g.validate(),
            Err(Error::Validation {
                field: "y_minus_cap_factor",
                ..
            })
        ));
    }

    #[test]
    fn residual_needs_future_nodes() {
        let m = Model::reference();
        let g = GridConfig::with_steps(4);
        let mut c = BoundaryCurves::unfilled(1.0, 4);
        c.set(4, 0.0, 2.44140625);
        c.set(2, 0.5, 3.0);
        let err = residual_minus(&m, &g, &c, 2, 3.0).unwrap_err();
        assert!(matches!(err, Error::State(_)));
    }

    #[test]
    fn terminal_residual_vanishes() {
        let m = Model::reference();
        let g = GridConfig::with_steps(4);
        let mut c = BoundaryCurves::unfilled(1.0, 4);
        c.set(4, 0.0, 2.44140625);
        assert_eq!(residual_minus(&m, &g, &c, 4, 2.44140625).unwrap(), 0.0);
    }
}
