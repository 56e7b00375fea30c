//! Acceptance suite: runs every criterion at full scale, prints one PASS/FAIL
//! line each and exits non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use revinv::boundary::certify;
use revinv::pde::{curve_distance, max_gap, overshoot, penalty_kappa, respects_overshoot_bound};
use revinv::simulate::{
    constant_band_oracle, default_deviations, game_value_agreement, marginal_value_check, reflect_path,
    sample_path, saddle_deviation_test, skorokhod_suite, strategy_comparison, ControlArm, Measure,
};
use revinv::svg::boundaries_svg;
use revinv::{
    extract_boundaries, interpolate, solve_boundaries, solve_penalized, BoundaryCurves, GridConfig, Model, PdeConfig,
    Result, SimConfig, ValueEvaluator,
};

const CAP: f64 = 1.5625;
const FLOOR: f64 = 2.44140625;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

struct Ctx {
    model: Model,
    grid: GridConfig,
    curves: BoundaryCurves,
}

impl Ctx {
    fn evaluator(&self) -> ValueEvaluator<'_, revinv::ProductionFn> {
        ValueEvaluator::new(&self.model, &self.curves, &self.grid)
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Solves afresh on a coarse grid (the terminal row does not depend on the
/// grid) and checks the shared fine solution too.
fn terminal_identities(ctx: &Ctx) -> Result<Outcome> {
    let coarse = solve_boundaries(&ctx.model, &GridConfig::with_steps(50))?;
    let mut pass = true;
    for c in [&coarse, &ctx.curves] {
        let n = c.n_steps();
        pass &= c.y_plus()[n] == 0.0 && c.y_minus()[n] == FLOOR;
    }
    let n = ctx.curves.n_steps();
    let (p, m) = (ctx.curves.y_plus()[n], ctx.curves.y_minus()[n]);
    outcome(pass, format!("y_plus(T) = {p}, y_minus(T) = {m} at 50 and {n} steps"))
}

fn structure(ctx: &Ctx) -> Result<Outcome> {
    let c = &ctx.curves;
    let n = c.n_steps();
    let monotone = (0..n).all(|i| c.y_plus()[i] >= c.y_plus()[i + 1] && c.y_minus()[i] >= c.y_minus()[i + 1]);
    let bounded = (0..n).all(|i| {
        c.y_plus()[i] > 0.0 && c.y_plus()[i] < CAP && c.y_minus()[i] > FLOOR && c.y_minus()[i].is_finite()
    });
    let norms = certify(&ctx.model, &ctx.grid, c)?;
    outcome(
        monotone && bounded && norms.max() <= 1e-8,
        format!("monotone {monotone}, bounded {bounded}, max residual {:.2e} (n = {n})", norms.max()),
    )
}

/// Points of the polyline with the given id.
fn polyline(svg: &str, id: &str) -> Vec<(f64, f64)> {
    let tag = format!(r#"<polyline id="{id}" points=""#);
    let start = svg.find(&tag).map(|i| i + tag.len()).unwrap_or(svg.len());
    let end = svg[start..].find('"').map_or(start, |j| start + j);
    svg[start..end]
        .split_whitespace()
        .filter_map(|p| p.split_once(','))
        .filter_map(|(x, y)| Some((x.parse().ok()?, y.parse().ok()?)))
        .collect()
}

/// Vertical-axis tick labels as `(pixel y, data value)`.
fn y_ticks(svg: &str) -> Vec<(f64, f64)> {
    svg.lines()
        .filter(|l| l.starts_with("<text") && l.contains(r#"text-anchor="end""#))
        .filter_map(|l| {
            let y = l.split(r#" y=""#).nth(1)?.split('"').next()?.parse::<f64>().ok()?;
            let v = l.split('>').nth(1)?.split('<').next()?.parse::<f64>().ok()?;
            // Labels sit 4 px below their tick.
            Some((y - 4.0, v))
        })
        .collect()
}

fn figure_shape(ctx: &Ctx) -> Result<Outcome> {
    let svg = boundaries_svg(&ctx.curves);
    let ticks = y_ticks(&svg);
    let (lower, upper) = (polyline(&svg, "y_plus"), polyline(&svg, "y_minus"));
    let labelled = svg.contains(">t</text>") && svg.contains(">y</text>");
    let mut shape_ok = labelled && ticks.len() >= 2 && lower.len() == upper.len() && lower.len() > 2;
    if shape_ok {
        let ((p0, v0), (p1, v1)) = (ticks[0], ticks[ticks.len() - 1]);
        let data = |py: f64| v0 + (py - p0) * (v1 - v0) / (p1 - p0);
        let px_tol = 2e-3 * (v1 - v0).abs() / (p1 - p0).abs();
        for line in [&lower, &upper] {
            let forward = line.windows(2).all(|w| w[1].0 > w[0].0);
            let decreasing = line.windows(2).all(|w| data(w[1].1) <= data(w[0].1) + px_tol);
            let falls = data(line[0].1) > data(line[line.len() - 1].1) + 0.1;
            shape_ok &= forward && decreasing && falls;
        }
        shape_ok &= data(lower[lower.len() - 1].1).abs() <= px_tol;
        // The upper curve settles onto its terminal level from above.
        shape_ok &= (data(upper[upper.len() - 1].1) - FLOOR).abs() <= px_tol;
        shape_ok &= upper.iter().all(|p| data(p.1) >= FLOOR - px_tol);
    }
    let fine = solve_boundaries(&ctx.model, &GridConfig::with_steps(400))?;
    let mut change: f64 = 0.0;
    for (k, &t) in ctx.curves.t_grid().iter().enumerate() {
        let (p, m) = interpolate(&fine, t)?;
        change = change.max((p - ctx.curves.y_plus()[k]).abs()).max((m - ctx.curves.y_minus()[k]).abs());
    }
    outcome(
        shape_ok && change <= 1e-3,
        format!("svg shape {shape_ok}, max change 200 -> 400 steps {change:.2e}"),
    )
}

fn value_identities(ctx: &Ctx) -> Result<Outcome> {
    let ev = ctx.evaluator();
    let c = &ctx.curves;
    let (mut at_lower, mut at_upper): (f64, f64) = (0.0, 0.0);
    for i in 0..c.n_steps() {
        let t = c.t_grid()[i];
        at_lower = at_lower.max((ev.value_at(t, c.y_minus()[i])? - 0.8).abs());
        at_upper = at_upper.max((ev.value_at(t, c.y_plus()[i])? - 1.0).abs());
    }
    let g = ev.value_grid(&linspace(0.0, 1.0, 21), &linspace(-3.0, 2.0, 101))?;
    let bounded = g.min() >= 0.8 - 1e-7 && g.max() <= 1.0 + 1e-7;
    let terminal = g.values.last().is_some_and(|row| row.iter().all(|&v| v == 0.8));
    outcome(
        at_lower <= 1e-7 && at_upper <= 1e-7 && bounded && terminal,
        format!(
            "max gaps {at_lower:.2e} / {at_upper:.2e}, range [{:.9}, {:.9}], terminal row exact {terminal}",
            g.min(),
            g.max()
        ),
    )
}

fn smooth_fit(ctx: &Ctx) -> Result<Outcome> {
    let ev = ctx.evaluator();
    let mut worst: f64 = 0.0;
    for k in 1..=9 {
        let (p, m) = ev.extrapolated_slopes(0.1 * k as f64, 1e-3)?;
        worst = worst.max(p.abs()).max(m.abs());
    }
    outcome(worst <= 1e-2, format!("max extrapolated slope {worst:.2e}"))
}

fn cross_method(ctx: &Ctx) -> Result<Outcome> {
    let cfg = PdeConfig::default();
    let u = solve_penalized(&ctx.model, &cfg)?;
    let gap = max_gap(&u, &ctx.evaluator(), cfg.n_t / 20, cfg.n_x / 40)?;
    let extracted = extract_boundaries(&ctx.model, &u, 0.0)?;
    let dist = curve_distance(&ctx.curves, &extracted, ctx.model.params.horizon - 0.05 + 1e-9)?;
    outcome(
        gap <= 1e-2 && dist <= 2e-2,
        format!("value gap {gap:.2e}, boundary distance {dist:.2e} ({}x{} grid)", cfg.n_x, cfg.n_t),
    )
}

fn penalty_convergence(ctx: &Ctx) -> Result<Outcome> {
    let kappa = penalty_kappa(&ctx.model);
    let mut rows = Vec::new();
    let mut within = true;
    for eps in [1e-2, 1e-3, 1e-4] {
        let u = solve_penalized(&ctx.model, &PdeConfig { epsilon: eps, ..PdeConfig::default() })?;
        within &= respects_overshoot_bound(&ctx.model, &u, eps, kappa);
        rows.push(overshoot(&ctx.model, &u));
    }
    let decreasing = rows
        .windows(2)
        .all(|w| w[1].above_upper < w[0].above_upper && w[1].below_lower < w[0].below_lower);
    let shown: Vec<String> = rows
        .iter()
        .map(|o| format!("{:.2e}/{:.2e}", o.above_upper, o.below_lower))
        .collect();
    outcome(
        decreasing && within,
        format!("overshoots {} , bound respected {within}, kappa {kappa:.6}", shown.join(" ")),
    )
}

fn reference_sim() -> SimConfig {
    SimConfig {
        n_paths: 100_000,
        dt: 1e-3,
        seed: 42,
        antithetic: false,
        bridge: false,
    }
}

fn saddle(ctx: &Ctx) -> Result<Outcome> {
    let ev = ctx.evaluator();
    let sim = reference_sim();
    let deviations = default_deviations();
    let mut pass = true;
    let mut parts = Vec::new();
    for y in [0.8, 1.5, 2.2] {
        let agree = game_value_agreement(&ev, 0.0, y, &sim, &[4e-3, 1e-3, 2.5e-4])?;
        let report = saddle_deviation_test(&ctx.model, &ctx.curves, 0.0, y, &sim, &deviations)?;
        let ok_dev = report.deviations.iter().filter(|d| d.pass).count();
        pass &= agree.pass && report.all_pass;
        parts.push(format!(
            "y={y}: v {:.5}, MC {:.5}+-{:.5}, allowance {:.1e}, deviations {ok_dev}/{}",
            agree.value,
            agree.estimate.mean,
            agree.estimate.std_err,
            agree.bias_allowance,
            report.deviations.len()
        ));
    }
    outcome(pass, parts.join("; "))
}

fn skorokhod(ctx: &Ctx) -> Result<Outcome> {
    let sim = reference_sim().with_paths(10_000);
    let mut pass = true;
    let mut parts = Vec::new();
    for y in [0.8, 1.5, 2.2] {
        let s = skorokhod_suite(&ctx.model, &ctx.curves, 0.0, y, &sim, 1e-8)?;
        pass &= s.pass;
        parts.push(format!(
            "y={y}: disagreement {:.1e}, failures {}+{}",
            s.max_disagreement, s.agreement_failures, s.condition_failures
        ));
    }
    let (a, b) = (0.9, 2.0);
    let band = BoundaryCurves::constant(ctx.curves.t_grid().to_vec(), a, b)?;
    let mut rel: f64 = 0.0;
    for (i, y) in (0..1_000u64).zip([0.5, 1.3, 3.0].iter().cycle()) {
        let path = sample_path(&ctx.model, 0.0, &sim, Measure::PTilde, i)?;
        let rp = reflect_path(&path, *y, 0.0, &band)?;
        for (z, w) in rp.capacity.iter().zip(constant_band_oracle(&path.c0, *y, a, b)) {
            rel = rel.max((z - w).abs() / w);
        }
    }
    pass &= rel <= 1e-10;
    parts.push(format!("constant band rel gap {rel:.1e}"));
    outcome(pass, parts.join("; "))
}

fn marginal(ctx: &Ctx) -> Result<Outcome> {
    let sim = reference_sim().with_paths(200_000);
    let ev = ctx.evaluator();
    let m = marginal_value_check(&ev, 1.5, 0.05, &sim)?;
    let cmp = strategy_comparison(&ctx.model, &ctx.curves, 1.5, &sim, &ControlArm::defaults())?;
    let arms: Vec<String> = cmp
        .arms
        .iter()
        .map(|a| format!("{} {:+.4}", a.label, a.diff_mean))
        .collect();
    outcome(
        m.pass && cmp.all_pass,
        format!(
            "quotient {:.5}+-{:.5} vs v {:.5}; arms minus optimum: {}",
            m.quotient.mean,
            m.quotient.std_err,
            m.value,
            arms.join(", ")
        ),
    )
}

type Criterion = (&'static str, u64, fn(&Ctx) -> Result<Outcome>);

fn main() -> ExitCode {
    let model = Model::reference();
    let grid = GridConfig::default();
    let start = Instant::now();
    let curves = match solve_boundaries(&model, &grid) {
        Ok(c) => c,
        Err(e) => {
            println!("boundary solve failed: {e}");
            return ExitCode::FAILURE;
        }
    };
    let solve_time = start.elapsed();
    let ctx = Ctx { model, grid, curves };
    let criteria: [Criterion; 10] = [
        ("terminal identities", 1, terminal_identities),
        ("structural suite", 60, structure),
        ("figure shape and grid doubling", 120, figure_shape),
        ("value identities and bounds", 60, value_identities),
        ("smooth fit", 60, smooth_fit),
        ("cross-method agreement", 300, cross_method),
        ("penalty convergence", 300, penalty_convergence),
        ("saddle verification", 300, saddle),
        ("Skorokhod suite", 120, skorokhod),
        ("marginal value and strategy comparison", 600, marginal),
    ];
    let mut failures = 0;
    for (k, (name, budget, run)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let result = run(&ctx);
        // The structural suite is charged for the shared boundary solve.
        let elapsed = t0.elapsed() + if k == 1 { solve_time } else { Duration::ZERO };
        let on_time = elapsed.as_secs_f64() < *budget as f64;
        let (pass, detail) = match result {
            Ok(o) => (o.pass && on_time, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {:>2} {}: {} | {detail} | {:.1}s of {budget}s",
            k + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {}/10 passed", 10 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
