//! Browser bindings: solve the boundaries once, then query value slices and
//! reflected sample paths. Every call returns a JSON string.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use revinv::simulate::{reflect_path, sample_path, Measure};
use revinv::{solve_boundaries, BoundaryCurves, GridConfig, Model, ModelParams, ProductionFn, SimConfig, ValueEvaluator};

fn js_err(e: revinv::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, JsError> {
    serde_json::to_string(v).map_err(|e| JsError::new(&e.to_string()))
}

#[derive(Serialize)]
struct Curves<'a> {
    t: &'a [f64],
    y_plus: &'a [f64],
    y_minus: &'a [f64],
    invest_cap: f64,
    disinvest_floor: f64,
}

#[derive(Serialize)]
struct Slice {
    t: f64,
    y: Vec<f64>,
    v: Vec<f64>,
    y_plus: f64,
    y_minus: f64,
}

#[derive(Serialize)]
struct PathView {
    s: Vec<f64>,
    uncontrolled: Vec<f64>,
    capacity: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    invested: f64,
    disinvested: f64,
}

/// A solved model held between calls from the page.
#[wasm_bindgen]
pub struct Demo {
    model: Model,
    grid: GridConfig,
    curves: BoundaryCurves,
}

#[wasm_bindgen]
impl Demo {
    /// Solves the boundaries for the given market constants, with
    /// `f_C = 1` and marginal profit `y^{-1/2}`.
    #[wasm_bindgen(constructor)]
    pub fn new(
        mu_c: f64,
        sigma_c: f64,
        mu_f: f64,
        c_plus: f64,
        c_minus: f64,
        horizon: f64,
        n_steps: usize,
    ) -> Result<Demo, JsError> {
        let params = ModelParams {
            mu_c,
            sigma_c,
            mu_f,
            f_c: 1.0,
            c_plus,
            c_minus,
            horizon,
        };
        let model = Model::new(params, ProductionFn::default()).map_err(js_err)?;
        let grid = GridConfig::with_steps(n_steps);
        let curves = solve_boundaries(&model, &grid).map_err(js_err)?;
        Ok(Demo { model, grid, curves })
    }

    pub fn boundaries(&self) -> Result<String, JsError> {
        to_json(&Curves {
            t: self.curves.t_grid(),
            y_plus: self.curves.y_plus(),
            y_minus: self.curves.y_minus(),
            invest_cap: self.model.invest_cap().map_err(js_err)?,
            disinvest_floor: self.model.disinvest_floor().map_err(js_err)?,
        })
    }

    /// `v(t, ·)` on `points` log-spaced values in `[y_min, y_max]`.
    pub fn value_slice(&self, t: f64, y_min: f64, y_max: f64, points: usize) -> Result<String, JsError> {
        if !(y_min > 0.0 && y_max > y_min && points >= 2) {
            return Err(JsError::new("need 0 < y_min < y_max and at least two points"));
        }
        let ev = ValueEvaluator::new(&self.model, &self.curves, &self.grid);
        let (a, b) = (y_min.ln(), y_max.ln());
        let y: Vec<f64> = (0..points)
            .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
            .collect();
        let v = y
            .iter()
            .map(|&y| ev.value_at(t, y))
            .collect::<revinv::Result<Vec<f64>>>()
            .map_err(js_err)?;
        let (y_plus, y_minus) = ev.bounds_at(t).map_err(js_err)?;
        to_json(&Slice { t, y, v, y_plus, y_minus })
    }

    /// One capacity path from time 0, kept in the band by minimal investment
    /// and disinvestment.
    pub fn reflected_path(&self, y: f64, seed: u64, dt: f64) -> Result<String, JsError> {
        let sim = SimConfig {
            n_paths: 1,
            dt,
            seed,
            antithetic: false,
            bridge: false,
        };
        let path = sample_path(&self.model, 0.0, &sim, Measure::P, 0).map_err(js_err)?;
        let rp = reflect_path(&path, y, 0.0, &self.curves).map_err(js_err)?;
        let (lower, upper) = path
            .times
            .iter()
            .map(|&s| revinv::interpolate(&self.curves, s))
            .collect::<revinv::Result<(Vec<f64>, Vec<f64>)>>()
            .map_err(js_err)?;
        to_json(&PathView {
            uncontrolled: path.c0.iter().map(|c| y * c).collect(),
            capacity: rp.capacity,
            invested: rp.nu_bar_plus.last().copied().unwrap_or(0.0),
            disinvested: rp.nu_bar_minus.last().copied().unwrap_or(0.0),
            s: path.times,
            lower,
            upper,
        })
    }
}
