//! Game value `v(t, y)` from the representation over solved boundaries, plus
//! smooth-fit and free-boundary diagnostics.

use serde::{Deserialize, Serialize};

use crate::boundary::{quadrature_bounds_at, representation, BoundaryCurves, GridConfig, Node, PanelRules};
use crate::error::{Error, Result};
use crate::model::{MarginalProfit, Model};

/// Geometric refinements of the first panel used when evaluating the value
/// off the boundaries.
const HEAD_LEVELS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridSource {
    Volterra,
    Pde,
}

impl GridSource {
    pub fn as_str(self) -> &'static str {
        match self {
            GridSource::Volterra => "volterra",
            GridSource::Pde => "pde",
        }
    }
}

/// `v` sampled on a (time × log-capacity) lattice, `values[t_index][x_index]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueGrid {
    pub t_grid: Vec<f64>,
    pub x_grid: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub source: GridSource,
}

impl ValueGrid {
    pub fn new(t_grid: Vec<f64>, x_grid: Vec<f64>, values: Vec<Vec<f64>>, source: GridSource) -> Result<Self> {
        if values.len() != t_grid.len() || values.iter().any(|row| row.len() != x_grid.len()) {
            return Err(Error::invalid("values", "matrix shape must be t_grid × x_grid"));
        }
        Ok(Self {
            t_grid,
            x_grid,
            values,
            source,
        })
    }

    pub fn min(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest increase of `v` along a row in `x` or a column in `t`.
    pub fn max_monotonicity_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.values {
            for w in row.windows(2) {
                worst = worst.max(w[1] - w[0]);
            }
        }
        for k in 1..self.values.len() {
            for (a, b) in self.values[k - 1].iter().zip(&self.values[k]) {
                worst = worst.max(b - a);
            }
        }
        worst
    }
}

/// Evaluates `v` for fixed model and boundaries.
pub struct ValueEvaluator<'a, P> {
    model: &'a Model<P>,
    curves: &'a BoundaryCurves,
    rules: PanelRules,
}

impl<'a, P: MarginalProfit> ValueEvaluator<'a, P> {
    /// Uses the quadrature node counts of `grid`.
    pub fn new(model: &'a Model<P>, curves: &'a BoundaryCurves, grid: &GridConfig) -> Self {
        Self {
            model,
            curves,
            rules: PanelRules::graded(grid, HEAD_LEVELS),
        }
    }

    pub fn model(&self) -> &Model<P> {
        self.model
    }

    pub fn curves(&self) -> &BoundaryCurves {
        self.curves
    }

    /// Boundary values at `t`, interpolated as inside the quadrature.
    pub fn bounds_at(&self, t: f64) -> Result<(f64, f64)> {
        self.check_time(t)?;
        Ok(quadrature_bounds_at(self.curves, t))
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let horizon = self.curves.horizon();
        let slack = 1e-12 * horizon.max(1.0);
        if !(t >= -slack && t <= horizon + slack) {
            return Err(Error::domain(format!("t = {t} outside [0, {horizon}]")));
        }
        Ok(())
    }

    pub fn value_at(&self, t: f64, y: f64) -> Result<f64> {
        self.check_time(t)?;
        if !(y > 0.0) || !y.is_finite() {
            return Err(Error::domain(format!("value needs y > 0, got {y}")));
        }
        let params = &self.model.params;
        let curves = self.curves;
        let n = curves.n_steps();
        let start = curves.node_index(t);
        if start == Some(n) {
            return Ok(params.lower_level());
        }
        let (lower, upper) = quadrature_bounds_at(curves, t);
        if y < lower {
            return Ok(params.upper_level());
        }
        if y > upper {
            return Ok(params.lower_level());
        }
        let t0 = match start {
            Some(i) => curves.t_grid()[i],
            None => t,
        };
        let first = match start {
            Some(i) => i + 1,
            None => curves.t_grid().partition_point(|&s| s <= t),
        };
        let mut nodes = Vec::with_capacity(n + 2 - first);
        nodes.push(Node { s: 0.0, lower, upper });
        for j in first..=n {
            nodes.push(Node {
                s: curves.t_grid()[j] - t0,
                lower: curves.y_plus()[j],
                upper: curves.y_minus()[j],
            });
        }
        Ok(representation(self.model, y, &nodes, &self.rules))
    }

    pub fn value_grid(&self, t_grid: &[f64], x_grid: &[f64]) -> Result<ValueGrid> {
        check_sorted("t_grid", t_grid)?;
        check_sorted("x_grid", x_grid)?;
        let cells: Vec<(usize, usize)> = (0..t_grid.len())
            .flat_map(|i| (0..x_grid.len()).map(move |j| (i, j)))
            .collect();
        let eval = |&(i, j): &(usize, usize)| self.value_at(t_grid[i], x_grid[j].exp());
        #[cfg(feature = "parallel")]
        let flat: Vec<Result<f64>> = {
            use rayon::prelude::*;
            cells.par_iter().map(eval).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let flat: Vec<Result<f64>> = cells.iter().map(eval).collect();
        let flat = flat.into_iter().collect::<Result<Vec<f64>>>()?;
        let values = flat.chunks(x_grid.len().max(1)).map(<[f64]>::to_vec).collect();
        ValueGrid::new(t_grid.to_vec(), x_grid.to_vec(), values, GridSource::Volterra)
    }

    /// One-sided difference quotients across each boundary at time `t`:
    /// `[v(ŷ₊ + h) − v(ŷ₊)]/h` and `[v(ŷ₋) − v(ŷ₋ − h)]/h`.
    pub fn smooth_fit_check(&self, t: f64, h: f64) -> Result<(f64, f64)> {
        self.check_time(t)?;
        if t >= self.curves.horizon() {
            return Err(Error::domain("smooth fit needs t < T"));
        }
        let (lower, upper) = quadrature_bounds_at(self.curves, t);
        let gap = upper - lower;
        if !(h > 0.0) || h >= 0.25 * gap {
            return Err(Error::domain(format!(
                "bump h = {h} must lie in (0, {}) (a quarter of the band width)",
                0.25 * gap
            )));
        }
        let plus = (self.value_at(t, lower + h)? - self.value_at(t, lower)?) / h;
        let minus = (self.value_at(t, upper)? - self.value_at(t, upper - h)?) / h;
        Ok((plus, minus))
    }

    /// Extrapolated limits `h → 0` of the smooth-fit quotients from bumps `h`
    /// and `h/10`.
    pub fn extrapolated_slopes(&self, t: f64, h: f64) -> Result<(f64, f64)> {
        let coarse = self.smooth_fit_check(t, h)?;
        let fine = self.smooth_fit_check(t, 0.1 * h)?;
        Ok((richardson(coarse.0, fine.0), richardson(coarse.1, fine.1)))
    }
}

/// Eliminates the first-order term of quotients taken at `h` and `h/10`.
pub fn richardson(coarse: f64, fine: f64) -> f64 {
    (10.0 * fine - coarse) / 9.0
}

fn check_sorted(field: &'static str, grid: &[f64]) -> Result<()> {
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(field, "values must be finite"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(field, "must be strictly increasing"));
    }
    Ok(())
}

pub fn value_at<P: MarginalProfit>(model: &Model<P>, curves: &BoundaryCurves, t: f64, y: f64) -> Result<f64> {
    ValueEvaluator::new(model, curves, &GridConfig::default()).value_at(t, y)
}

pub fn value_grid<P: MarginalProfit>(
    model: &Model<P>,
    curves: &BoundaryCurves,
    t_grid: &[f64],
    x_grid: &[f64],
) -> Result<ValueGrid> {
    ValueEvaluator::new(model, curves, &GridConfig::default()).value_grid(t_grid, x_grid)
}

pub fn smooth_fit_check<P: MarginalProfit>(
    model: &Model<P>,
    curves: &BoundaryCurves,
    t: f64,
    h: f64,
) -> Result<(f64, f64)> {
    ValueEvaluator::new(model, curves, &GridConfig::default()).smooth_fit_check(t, h)
}

/// Finite-difference check of `(∂_t + 𝓛 − μ̄)v + R_c` on a value grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeResidualReport {
    /// Max `|(∂_t + 𝓛 − μ̄)v + R_c|` over stencils inside the continuation band.
    pub band_max_abs: f64,
    pub band_points: usize,
    /// Max of `(∂_t + 𝓛 − μ̄)v + R_c` above the disinvestment boundary (must be ≤ 0).
    pub above_max: f64,
    pub above_points: usize,
    /// Min of `(∂_t + 𝓛 − μ̄)v + R_c` below the investment boundary (must be ≥ 0).
    pub below_min: f64,
    pub below_points: usize,
    pub above_ok: bool,
    pub below_ok: bool,
}

#[derive(Clone, Copy, PartialEq)]
enum Region {
    Below,
    Band,
    Above,
}

pub fn pde_residual_check<P: MarginalProfit>(
    grid: &ValueGrid,
    model: &Model<P>,
    curves: &BoundaryCurves,
) -> Result<PdeResidualReport> {
    let (nt, nx) = (grid.t_grid.len(), grid.x_grid.len());
    if nt < 3 || nx < 3 {
        return Err(Error::domain(format!("value grid {nt}×{nx} too coarse, need at least 3×3")));
    }
    let sigma = model.params.sigma_c;
    let drift = model.derived.hat_mu_c;
    let bar_mu = model.derived.bar_mu;
    let horizon = curves.horizon();
    let region = |i: usize, j: usize| -> Region {
        let (lo, hi) = quadrature_bounds_at(curves, grid.t_grid[i].clamp(0.0, horizon));
        let y = grid.x_grid[j].exp();
        if y <= lo {
            Region::Below
        } else if y >= hi {
            Region::Above
        } else {
            Region::Band
        }
    };
    let mut report = PdeResidualReport {
        band_max_abs: 0.0,
        band_points: 0,
        above_max: f64::NEG_INFINITY,
        above_points: 0,
        below_min: f64::INFINITY,
        below_points: 0,
        above_ok: true,
        below_ok: true,
    };
    let v = &grid.values;
    // The terminal row is excluded: the interior equation holds on [0, T).
    for i in 1..nt - 1 {
        if grid.t_grid[i + 1] > horizon + 1e-12 {
            continue;
        }
        for j in 1..nx - 1 {
            let here = region(i, j);
            let same = [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1), (i - 1, j - 1), (i - 1, j + 1), (i + 1, j - 1), (i + 1, j + 1)]
                .iter()
                .all(|&(a, b)| region(a, b) == here);
            if !same {
                continue;
            }
            let (tm, tp) = (grid.t_grid[i - 1], grid.t_grid[i + 1]);
            let (xm, x0, xp) = (grid.x_grid[j - 1], grid.x_grid[j], grid.x_grid[j + 1]);
            let v_t = (v[i + 1][j] - v[i - 1][j]) / (tp - tm);
            let (hl, hr) = (x0 - xm, xp - x0);
            let v_x = (v[i][j + 1] - v[i][j - 1]) / (hl + hr);
            let v_xx = 2.0 * (hl * v[i][j + 1] - (hl + hr) * v[i][j] + hr * v[i][j - 1]) / (hl * hr * (hl + hr));
            let r = v_t + 0.5 * sigma * sigma * v_xx + drift * v_x - bar_mu * v[i][j] + model.prod.rc(x0.exp());
            match here {
                Region::Band => {
                    report.band_max_abs = report.band_max_abs.max(r.abs());
                    report.band_points += 1;
                }
                Region::Above => {
                    report.above_max = report.above_max.max(r);
                    report.above_points += 1;
                }
                Region::Below => {
                    report.below_min = report.below_min.min(r);
                    report.below_points += 1;
                }
            }
        }
    }
    report.above_ok = report.above_points == 0 || report.above_max <= 0.0;
    report.below_ok = report.below_points == 0 || report.below_min >= 0.0;
    Ok(report)
}
