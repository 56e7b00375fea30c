//! Model constants, the marginal-profit family and the lognormal kernels
//! shared by the boundary solver, the value function and the oracles.
//!
//! Under the changed measure the uncontrolled capacity started at `y` is
//! `Y(s) = y·exp(μ̂_C s + σ_C W̃(s))`, so every expectation the solver needs
//! reduces to a Gaussian integral in the standardized score
//! `d(x) = (ln(x/y) − μ̂_C s)/(σ_C √s)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Market and firm constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Capacity decay rate.
    pub mu_c: f64,
    /// Capacity volatility.
    pub sigma_c: f64,
    /// Discount rate.
    pub mu_f: f64,
    /// Units of capacity obtained per unit of investment.
    pub f_c: f64,
    /// Unit investment cost.
    pub c_plus: f64,
    /// Unit disinvestment benefit.
    pub c_minus: f64,
    /// Time horizon.
    #[serde(alias = "T")]
    pub horizon: f64,
}

impl ModelParams {
    /// The parameter set behind the reference drawing of the boundaries:
    /// `μ̄ = 0.8`, `μ_C = 0.2`, `σ_C = 1`, `f_C = 1`, `c₊ = 1`, `c₋ = 0.8`, `T = 1`.
    pub fn reference() -> Self {
        Self {
            mu_c: 0.2,
            sigma_c: 1.0,
            mu_f: 0.6,
            f_c: 1.0,
            c_plus: 1.0,
            c_minus: 0.8,
            horizon: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("mu_c", self.mu_c),
            ("sigma_c", self.sigma_c),
            ("mu_f", self.mu_f),
            ("f_c", self.f_c),
            ("c_plus", self.c_plus),
            ("c_minus", self.c_minus),
            ("horizon", self.horizon),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::invalid(name, format!("must be finite, got {v}")));
            }
        }
        if self.sigma_c <= 0.0 {
            return Err(Error::invalid("sigma_c", "must be positive"));
        }
        if self.horizon <= 0.0 {
            return Err(Error::invalid("horizon", "must be positive"));
        }
        if self.mu_f <= 0.0 {
            return Err(Error::invalid("mu_f", "must be positive"));
        }
        if self.f_c <= 0.0 {
            return Err(Error::invalid("f_c", "must be positive"));
        }
        if self.c_minus <= 0.0 {
            return Err(Error::invalid("c_minus", "must be positive"));
        }
        if self.c_plus <= self.c_minus {
            return Err(Error::invalid(
                "c_plus",
                format!(
                    "must exceed c_minus ({} <= {})",
                    self.c_plus, self.c_minus
                ),
            ));
        }
        Ok(())
    }

    pub fn derived(&self) -> DerivedConstants {
        derived_constants(self)
    }

    /// Marginal value when investing, `c₊/f_C`.
    pub fn upper_level(&self) -> f64 {
        self.c_plus / self.f_c
    }

    /// Marginal value when disinvesting, `c₋/f_C`.
    pub fn lower_level(&self) -> f64 {
        self.c_minus / self.f_c
    }
}

/// Parameters, derived constants and marginal profit bundled for the solvers.
#[derive(Debug, Clone)]
pub struct Model<P = ProductionFn> {
    pub params: ModelParams,
    pub derived: DerivedConstants,
    pub prod: P,
}

impl<P: MarginalProfit> Model<P> {
    pub fn new(params: ModelParams, prod: P) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            derived: params.derived(),
            params,
            prod,
        })
    }

    /// `R_c⁻¹(μ̄c₊/f_C)`, the level no investment boundary can exceed.
    pub fn invest_cap(&self) -> Result<f64> {
        self.prod
            .rc_inverse_scaled(self.derived.bar_mu, self.params.upper_level())
    }

    /// `R_c⁻¹(μ̄c₋/f_C)`, the terminal value of the disinvestment boundary.
    pub fn disinvest_floor(&self) -> Result<f64> {
        self.prod
            .rc_inverse_scaled(self.derived.bar_mu, self.params.lower_level())
    }

    pub(crate) fn law(&self, y: f64, s: f64) -> LogNormalStep {
        LogNormalStep::new(y, s, self.derived.hat_mu_c, self.params.sigma_c)
    }

    /// Discounted integrand of the value representation at elapsed time `s`
    /// for boundary values `lower = ŷ₊(t+s)` and `upper = ŷ₋(t+s)`.
    pub(crate) fn representation_integrand(&self, y: f64, s: f64, lower: f64, upper: f64) -> f64 {
        let bar_mu = self.derived.bar_mu;
        let (k1, k2, k3) = if s == 0.0 {
            (
                if lower < y && y < upper { self.prod.rc(y) } else { 0.0 },
                if y < lower { 1.0 } else { 0.0 },
                if y > upper { 1.0 } else { 0.0 },
            )
        } else {
            let law = self.law(y, s);
            let k1 = if lower < upper {
                self.prod.truncated_expectation(&law, lower, upper)
            } else {
                0.0
            };
            (k1, law.prob_below(lower), law.prob_above(upper))
        };
        let p = &self.params;
        (-bar_mu * s).exp() * (k1 + bar_mu / p.f_c * (p.c_plus * k2 + p.c_minus * k3))
    }
}

impl Model<ProductionFn> {
    pub fn reference() -> Self {
        Self::new(ModelParams::reference(), ProductionFn::default()).expect("valid constants")
    }
}

/// Combined discount `μ̄ = μ_F + μ_C` and the drift `μ̂_C = −μ_C + σ_C²/2`
/// of `ln C⁰` under the changed measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub bar_mu: f64,
    pub hat_mu_c: f64,
}

pub fn derived_constants(params: &ModelParams) -> DerivedConstants {
    DerivedConstants {
        bar_mu: params.mu_f + params.mu_c,
        hat_mu_c: -params.mu_c + 0.5 * params.sigma_c * params.sigma_c,
    }
}

/// A marginal profit `R_c` satisfying the Inada conditions.
///
/// Only `rc` is essential. The truncated expectation defaults to Gauss–Legendre
/// quadrature in the standardized normal variable; families with a closed form
/// override it.
pub trait MarginalProfit: Send + Sync {
    /// `R_c(y)`.
    fn rc(&self, y: f64) -> f64;

    /// `R(y)`, the production rate with `R(0) = 0`.
    fn profit(&self, y: f64) -> f64;

    /// `R_cc(y)`.
    fn rcc(&self, y: f64) -> f64;

    /// Solves `R_c(y) = rate·level`. Families with a closed form override this
    /// to avoid rounding the product before inversion.
    fn rc_inverse_scaled(&self, rate: f64, level: f64) -> Result<f64> {
        self.rc_inverse(rate * level)
    }

    /// Solves `R_c(y) = z` by bisection in `ln y`.
    fn rc_inverse(&self, z: f64) -> Result<f64> {
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::domain(format!("R_c inverse needs z > 0, got {z}")));
        }
        let (mut lo, mut hi) = (-700.0_f64, 700.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.rc(mid.exp()) > z {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((0.5 * (lo + hi)).exp())
    }

    /// `Ẽ[R_c(Y(s)) 1{a < Y(s) < b}]` for `Y(0) = y`; `s > 0`, `a < b`.
    fn truncated_expectation(&self, law: &LogNormalStep, a: f64, b: f64) -> f64 {
        truncated_expectation_by_quadrature(self, law, a, b, default_rule())
    }
}

/// Power family `R_c(y) = a·y^(−p)` with `p ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductionFn {
    pub scale: f64,
    pub exponent: f64,
}

impl Default for ProductionFn {
    fn default() -> Self {
        Self {
            scale: 1.0,
            exponent: 0.5,
        }
    }
}

impl ProductionFn {
    pub fn new(scale: f64, exponent: f64) -> Result<Self> {
        let f = Self { scale, exponent };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::invalid("scale", "must be positive and finite"));
        }
        if !(self.exponent > 0.0 && self.exponent < 1.0) {
            return Err(Error::invalid("exponent", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

impl MarginalProfit for ProductionFn {
    fn rc(&self, y: f64) -> f64 {
        self.scale * y.powf(-self.exponent)
    }

    fn profit(&self, y: f64) -> f64 {
        self.scale * y.powf(1.0 - self.exponent) / (1.0 - self.exponent)
    }

    fn rcc(&self, y: f64) -> f64 {
        -self.scale * self.exponent * y.powf(-self.exponent - 1.0)
    }

    fn rc_inverse(&self, z: f64) -> Result<f64> {
        rc_inverse(self, z)
    }

    fn rc_inverse_scaled(&self, rate: f64, level: f64) -> Result<f64> {
        let z = rate * level;
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::domain(format!("R_c inverse needs z > 0, got {z}")));
        }
        Ok(power_root(self.scale / rate / level, 1.0 / self.exponent))
    }

    fn truncated_expectation(&self, law: &LogNormalStep, a: f64, b: f64) -> f64 {
        let p = self.exponent;
        let shift = p * law.vol();
        let moment = self.scale
            * law.y.powf(-p)
            * (-p * law.drift * law.s + 0.5 * p * p * law.sigma * law.sigma * law.s).exp();
        moment * norm_interval(law.score(a) + shift, law.score(b) + shift)
    }
}

/// `R_c⁻¹(z) = (z/a)^(−1/p)` for the power family.
pub fn rc_inverse(prod: &ProductionFn, z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::domain(format!("R_c inverse needs z > 0, got {z}")));
    }
    Ok(power_root(prod.scale / z, 1.0 / prod.exponent))
}

fn power_root(base: f64, power: f64) -> f64 {
    if power.fract() == 0.0 && power <= f64::from(i32::MAX) {
        base.powi(power as i32)
    } else {
        base.powf(power)
    }
}

/// The law of `Y(s) = y·exp(drift·s + σ√s Z)` at a fixed elapsed time `s > 0`.
#[derive(Debug, Clone, Copy)]
pub struct LogNormalStep {
    pub y: f64,
    pub s: f64,
    pub drift: f64,
    pub sigma: f64,
    ln_y: f64,
    vol: f64,
}

impl LogNormalStep {
    pub fn new(y: f64, s: f64, drift: f64, sigma: f64) -> Self {
        Self {
            y,
            s,
            drift,
            sigma,
            ln_y: y.ln(),
            vol: sigma * s.sqrt(),
        }
    }

    /// Standard deviation of `ln Y(s)`.
    pub fn vol(&self) -> f64 {
        self.vol
    }

    /// Standardized score `d(x)`, saturating to `∓∞` at `x = 0` and `x = ∞`.
    pub fn score(&self, x: f64) -> f64 {
        if x <= 0.0 {
            f64::NEG_INFINITY
        } else if x == f64::INFINITY {
            f64::INFINITY
        } else {
            (x.ln() - self.ln_y - self.drift * self.s) / self.vol
        }
    }

    pub fn prob_below(&self, a: f64) -> f64 {
        norm_cdf(self.score(a))
    }

    pub fn prob_above(&self, b: f64) -> f64 {
        norm_sf(self.score(b))
    }
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal survival function `1 − Φ(x)`, accurate in the upper tail.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `Φ(hi) − Φ(lo)`, evaluated on whichever tail keeps precision.
pub fn norm_interval(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if lo > 0.0 {
        norm_sf(lo) - norm_sf(hi)
    } else {
        norm_cdf(hi) - norm_cdf(lo)
    }
}

fn check_elapsed(y: f64, s: f64) -> Result<()> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::domain(format!("start value must be positive, got {y}")));
    }
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::domain(format!("elapsed time must be >= 0, got {s}")));
    }
    Ok(())
}

/// `P̃(y·C⁰(s) < a)`; the indicator `1{y < a}` at `s = 0`.
pub fn crossing_prob_below(
    dc: &DerivedConstants,
    params: &ModelParams,
    y: f64,
    s: f64,
    a: f64,
) -> Result<f64> {
    check_elapsed(y, s)?;
    if a.is_nan() || a < 0.0 {
        return Err(Error::domain(format!("threshold must be >= 0, got {a}")));
    }
    if s == 0.0 {
        return Ok(if y < a { 1.0 } else { 0.0 });
    }
    Ok(LogNormalStep::new(y, s, dc.hat_mu_c, params.sigma_c).prob_below(a))
}

/// `P̃(y·C⁰(s) > b)`; `b = +∞` is allowed and gives 0.
pub fn crossing_prob_above(
    dc: &DerivedConstants,
    params: &ModelParams,
    y: f64,
    s: f64,
    b: f64,
) -> Result<f64> {
    check_elapsed(y, s)?;
    if b.is_nan() || b <= 0.0 {
        return Err(Error::domain(format!("threshold must be > 0, got {b}")));
    }
    if s == 0.0 {
        return Ok(if y > b { 1.0 } else { 0.0 });
    }
    Ok(LogNormalStep::new(y, s, dc.hat_mu_c, params.sigma_c).prob_above(b))
}

/// `Ẽ[R_c(y·C⁰(s)) 1{a < y·C⁰(s) < b}]` with `0 ≤ a < b ≤ ∞`.
pub fn truncated_marginal_expectation<P: MarginalProfit + ?Sized>(
    dc: &DerivedConstants,
    params: &ModelParams,
    prod: &P,
    y: f64,
    s: f64,
    a: f64,
    b: f64,
) -> Result<f64> {
    check_truncation(y, s, a, b)?;
    if s == 0.0 {
        return Ok(if a < y && y < b { prod.rc(y) } else { 0.0 });
    }
    let law = LogNormalStep::new(y, s, dc.hat_mu_c, params.sigma_c);
    Ok(prod.truncated_expectation(&law, a, b))
}

/// The quadrature route for the truncated expectation, usable with any `R_c`.
#[allow(clippy::too_many_arguments)]
pub fn truncated_marginal_expectation_quadrature<P: MarginalProfit + ?Sized>(
    dc: &DerivedConstants,
    params: &ModelParams,
    prod: &P,
    y: f64,
    s: f64,
    a: f64,
    b: f64,
    nodes: usize,
) -> Result<f64> {
    check_truncation(y, s, a, b)?;
    if s == 0.0 {
        return Ok(if a < y && y < b { prod.rc(y) } else { 0.0 });
    }
    let law = LogNormalStep::new(y, s, dc.hat_mu_c, params.sigma_c);
    Ok(truncated_expectation_by_quadrature(
        prod,
        &law,
        a,
        b,
        &GaussLegendre::new(nodes),
    ))
}

fn check_truncation(y: f64, s: f64, a: f64, b: f64) -> Result<()> {
    check_elapsed(y, s)?;
    if a.is_nan() || b.is_nan() || a < 0.0 {
        return Err(Error::domain(format!("need 0 <= a < b, got a={a}, b={b}")));
    }
    if a >= b {
        return Err(Error::domain(format!("need a < b, got a={a}, b={b}")));
    }
    Ok(())
}

fn default_rule() -> &'static GaussLegendre {
    use std::sync::OnceLock;
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(64))
}

/// Integrates `R_c(y·e^{drift·s + vol·z}) φ(z)` over `z ∈ (d(a), d(b))`, with
/// infinite ends cut where the Gaussian weight is negligible.
pub fn truncated_expectation_by_quadrature<P: MarginalProfit + ?Sized>(
    prod: &P,
    law: &LogNormalStep,
    a: f64,
    b: f64,
    rule: &GaussLegendre,
) -> f64 {
    let reach = 12.0 + 2.0 * law.vol();
    let lo = law.score(a).max(-reach);
    let hi = law.score(b).min(reach);
    if hi <= lo {
        return 0.0;
    }
    let base = law.ln_y + law.drift * law.s;
    // Split wide windows so the fixed rule resolves the Gaussian bulk.
    let panels = ((hi - lo) / 6.0).ceil().max(1.0) as usize;
    let width = (hi - lo) / panels as f64;
    (0..panels)
        .map(|k| {
            let a = lo + k as f64 * width;
            rule.integrate(a, a + width, |z| {
                prod.rc((base + law.vol() * z).exp()) * norm_pdf(z)
            })
        })
        .sum()
}
