//! Two-sided reflection of `y·C⁰` between the boundaries.
//!
//! Controls are stored per grid node as post-action values `ν̄(s_k+)`, so
//! index 0 already contains any initial jump.

use serde::{Deserialize, Serialize};

use super::{boundary_track, check_start, draw_path, map_paths, time_grid, Measure, Path, SimConfig};
use crate::boundary::BoundaryCurves;
use crate::error::{Error, Result};
use crate::model::{MarginalProfit, Model};

const AGREEMENT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectedPath {
    pub base: Path,
    pub y: f64,
    pub t: f64,
    pub nu_bar_plus: Vec<f64>,
    pub nu_bar_minus: Vec<f64>,
    /// `C⁰(s_k)·(y + ν̄₊ − ν̄₋)` after the action at `s_k`.
    pub capacity: Vec<f64>,
}

/// Net control `ν̄(s_k+)` from the running max/min form of the explicit
/// solution, with `a_k = y − ŷ₊/C⁰` and `b_k = y − ŷ₋/C⁰`.
pub fn explicit_reflection(c0: &[f64], y: f64, lower: &[f64], upper: &[f64]) -> Vec<f64> {
    let mut running_inf = (y - upper[0]).max(0.0);
    let mut sup_inf = f64::NEG_INFINITY;
    c0.iter()
        .zip(lower.iter().zip(upper))
        .map(|(&c, (&lo, &hi))| {
            let a = y - lo / c;
            let b = y - hi / c;
            running_inf = running_inf.min(a);
            sup_inf = sup_inf.max(b).min(a);
            -running_inf.max(sup_inf)
        })
        .collect()
}

/// Net control from the projection recursion `X_k = clamp(X_{k−1}, ŷ₊/C⁰, ŷ₋/C⁰)`,
/// `X_{−1} = y`, `ν̄ = X − y`.
pub fn recursive_reflection(c0: &[f64], y: f64, lower: &[f64], upper: &[f64]) -> Vec<f64> {
    let mut x = y;
    c0.iter()
        .zip(lower.iter().zip(upper))
        .map(|(&c, (&lo, &hi))| {
            x = x.max(lo / c).min(hi / c);
            x - y
        })
        .collect()
}

fn split(net: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut plus = Vec::with_capacity(net.len());
    let mut minus = Vec::with_capacity(net.len());
    let (mut p, mut m, mut prev) = (0.0, 0.0, 0.0);
    for &v in net {
        let d = v - prev;
        if d > 0.0 {
            p += d;
        } else {
            m -= d;
        }
        plus.push(p);
        minus.push(m);
        prev = v;
    }
    (plus, minus)
}

pub(crate) fn reflect_on_track(path: &Path, y: f64, t: f64, lower: &[f64], upper: &[f64]) -> Result<ReflectedPath> {
    let explicit = explicit_reflection(&path.c0, y, lower, upper);
    let recursive = recursive_reflection(&path.c0, y, lower, upper);
    for (k, (a, b)) in explicit.iter().zip(&recursive).enumerate() {
        if (a - b).abs() > AGREEMENT_TOL * (1.0 + y.abs()) {
            return Err(Error::Consistency(format!(
                "reflection constructions differ at node {k}: explicit {a}, recursive {b}"
            )));
        }
    }
    let (nu_bar_plus, nu_bar_minus) = split(&explicit);
    let capacity = path.c0.iter().zip(&explicit).map(|(c, v)| c * (y + v)).collect();
    Ok(ReflectedPath {
        base: path.clone(),
        y,
        t,
        nu_bar_plus,
        nu_bar_minus,
        capacity,
    })
}

/// Reflects `y·C⁰` on `[ŷ₊(t+s), ŷ₋(t+s)]` by both constructions and checks
/// that they agree node by node.
pub fn reflect_path(path: &Path, y: f64, t: f64, curves: &BoundaryCurves) -> Result<ReflectedPath> {
    if !(y > 0.0) {
        return Err(Error::domain(format!("start value must be positive, got {y}")));
    }
    let (lower, upper) = boundary_track(curves, t, &path.times)?;
    reflect_on_track(path, y, t, &lower, &upper)
}

/// Classical two-sided reflection of the capacity in `[a, b]`:
/// `Z_k = clamp(Z_{k−1}·C⁰_k/C⁰_{k−1}, a, b)`, `Z_{−1} = y`.
pub fn constant_band_oracle(c0: &[f64], y: f64, a: f64, b: f64) -> Vec<f64> {
    let mut z = y;
    let mut prev = 1.0;
    c0.iter()
        .map(|&c| {
            z = (z * c / prev).max(a).min(b);
            prev = c;
            z
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkorokhodReport {
    pub band_ok: bool,
    pub max_band_excess: f64,
    pub monotone_ok: bool,
    pub identity_ok: bool,
    /// Nodes where `ν̄₊` grows with the capacity above `ŷ₊ + flat_tol`.
    pub flat_plus_violations: usize,
    /// Nodes where `ν̄₋` grows with the capacity below `ŷ₋ − flat_tol`.
    pub flat_minus_violations: usize,
    pub pass: bool,
}

pub fn skorokhod_conditions_check(
    rp: &ReflectedPath,
    curves: &BoundaryCurves,
    t: f64,
    band_tol: f64,
    flat_tol: f64,
) -> Result<SkorokhodReport> {
    let (lower, upper) = boundary_track(curves, t, &rp.base.times)?;
    let n = rp.capacity.len();
    let mut max_band_excess: f64 = 0.0;
    let mut monotone_ok = rp.nu_bar_plus.first().is_none_or(|v| *v >= 0.0)
        && rp.nu_bar_minus.first().is_none_or(|v| *v >= 0.0);
    let mut identity_ok = true;
    let (mut flat_plus_violations, mut flat_minus_violations) = (0, 0);
    for k in 0..n {
        let cap = rp.capacity[k];
        max_band_excess = max_band_excess.max(lower[k] - cap).max(cap - upper[k]);
        let expected = rp.base.c0[k] * (rp.y + rp.nu_bar_plus[k] - rp.nu_bar_minus[k]);
        if (expected - cap).abs() > 1e-12 * (1.0 + cap.abs()) {
            identity_ok = false;
        }
        let (dp, dm) = if k == 0 {
            (rp.nu_bar_plus[0], rp.nu_bar_minus[0])
        } else {
            (rp.nu_bar_plus[k] - rp.nu_bar_plus[k - 1], rp.nu_bar_minus[k] - rp.nu_bar_minus[k - 1])
        };
        if dp < 0.0 || dm < 0.0 {
            monotone_ok = false;
        }
        if dp > 0.0 && cap > lower[k] + flat_tol {
            flat_plus_violations += 1;
        }
        if dm > 0.0 && cap < upper[k] - flat_tol {
            flat_minus_violations += 1;
        }
    }
    let band_ok = max_band_excess <= band_tol;
    let pass = band_ok && monotone_ok && identity_ok && flat_plus_violations == 0 && flat_minus_violations == 0;
    Ok(SkorokhodReport {
        band_ok,
        max_band_excess,
        monotone_ok,
        identity_ok,
        flat_plus_violations,
        flat_minus_violations,
        pass,
    })
}

/// Reflection checks over many paths started at `(t, y)` under the changed measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkorokhodSuite {
    pub t: f64,
    pub y: f64,
    pub paths: usize,
    /// Largest node-wise gap between the explicit and recursive constructions.
    pub max_disagreement: f64,
    pub agreement_failures: usize,
    pub condition_failures: usize,
    pub max_band_excess: f64,
    pub pass: bool,
}

pub fn skorokhod_suite<P: MarginalProfit>(
    model: &Model<P>,
    curves: &BoundaryCurves,
    t: f64,
    y: f64,
    sim: &SimConfig,
    tol: f64,
) -> Result<SkorokhodSuite> {
    sim.validate(model.params.horizon)?;
    check_start(model.params.horizon, t)?;
    if !(y > 0.0) {
        return Err(Error::domain(format!("start value must be positive, got {y}")));
    }
    let times = time_grid(model.params.horizon - t, sim.dt);
    let (lower, upper) = boundary_track(curves, t, &times)?;
    let outcomes = map_paths(sim.n_paths, |i| {
        let path = draw_path(model, &times, sim, Measure::PTilde, i);
        let explicit = explicit_reflection(&path.c0, y, &lower, &upper);
        let recursive = recursive_reflection(&path.c0, y, &lower, &upper);
        let gap = explicit
            .iter()
            .zip(&recursive)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let (nu_bar_plus, nu_bar_minus) = split(&explicit);
        let capacity = path.c0.iter().zip(&explicit).map(|(c, v)| c * (y + v)).collect();
        let rp = ReflectedPath {
            base: path,
            y,
            t,
            nu_bar_plus,
            nu_bar_minus,
            capacity,
        };
        let report = skorokhod_conditions_check(&rp, curves, t, tol, tol);
        (gap, report)
    });
    let mut suite = SkorokhodSuite {
        t,
        y,
        paths: sim.n_paths,
        max_disagreement: 0.0,
        agreement_failures: 0,
        condition_failures: 0,
        max_band_excess: 0.0,
        pass: false,
    };
    for (gap, report) in outcomes {
        let report = report?;
        suite.max_disagreement = suite.max_disagreement.max(gap);
        if !(gap <= AGREEMENT_TOL * (1.0 + y.abs())) {
            suite.agreement_failures += 1;
        }
        if !report.pass {
            suite.condition_failures += 1;
        }
        suite.max_band_excess = suite.max_band_excess.max(report.max_band_excess);
    }
    suite.pass = suite.agreement_failures == 0 && suite.condition_failures == 0;
    Ok(suite)
}
