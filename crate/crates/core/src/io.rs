//! File formats: boundary curves, value grids, reflected paths and reports.
//!
//! Floats are written in shortest round-trip form, so a write followed by a
//! read reproduces every value bit for bit.

use std::fs;
use std::io::{Read, Write};
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryCurves, GridConfig, ResidualNorms};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::simulate::ReflectedPath;
use crate::value::{GridSource, ValueGrid};

/// Version tag carried by every JSON document written here.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct CurveRow {
    t: f64,
    y_plus: f64,
    y_minus: f64,
}

pub fn write_curves_csv<W: Write>(curves: &BoundaryCurves, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for ((&t, &y_plus), &y_minus) in curves.t_grid().iter().zip(curves.y_plus()).zip(curves.y_minus()) {
        w.serialize(CurveRow { t, y_plus, y_minus })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_curves_csv<R: Read>(input: R) -> Result<BoundaryCurves> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["t", "y_plus", "y_minus"] {
        return Err(Error::Parse(format!("expected header t,y_plus,y_minus, got {}", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let (mut t, mut yp, mut ym) = (Vec::new(), Vec::new(), Vec::new());
    for row in r.deserialize() {
        let row: CurveRow = row?;
        t.push(row.t);
        yp.push(row.y_plus);
        ym.push(row.y_minus);
    }
    BoundaryCurves::new(t, yp, ym)
}

/// Self-describing curves document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvesDocument<P> {
    pub schema_version: u32,
    pub params: ModelParams,
    pub production: P,
    pub grid: GridConfig,
    pub residual_norms: ResidualNorms,
    pub t_grid: Vec<f64>,
    pub y_plus: Vec<f64>,
    pub y_minus: Vec<f64>,
}

impl<P> CurvesDocument<P> {
    pub fn new(params: ModelParams, production: P, grid: GridConfig, residual_norms: ResidualNorms, curves: &BoundaryCurves) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            params,
            production,
            grid,
            residual_norms,
            t_grid: curves.t_grid().to_vec(),
            y_plus: curves.y_plus().to_vec(),
            y_minus: curves.y_minus().to_vec(),
        }
    }

    pub fn curves(&self) -> Result<BoundaryCurves> {
        BoundaryCurves::new(self.t_grid.clone(), self.y_plus.clone(), self.y_minus.clone())
    }
}

#[derive(Deserialize)]
struct CurvesOnly {
    t_grid: Vec<f64>,
    y_plus: Vec<f64>,
    y_minus: Vec<f64>,
}

/// Reads curves from a CSV file or a curves JSON document (by extension).
pub fn load_curves(path: &FsPath) -> Result<BoundaryCurves> {
    let file = fs::File::open(path)?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        let doc: CurvesOnly = serde_json::from_reader(std::io::BufReader::new(file))?;
        BoundaryCurves::new(doc.t_grid, doc.y_plus, doc.y_minus)
    } else {
        read_curves_csv(file)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct GridRow {
    t: f64,
    x: f64,
    y: f64,
    v: f64,
    source: GridSource,
}

/// One row per lattice point: `t,x,y,v,source` with `y = e^x`.
pub fn write_value_grid_csv<W: Write>(grid: &ValueGrid, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (row, &t) in grid.values.iter().zip(&grid.t_grid) {
        for (&v, &x) in row.iter().zip(&grid.x_grid) {
            w.serialize(GridRow {
                t,
                x,
                y: x.exp(),
                v,
                source: grid.source,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_value_grid_csv<R: Read>(input: R) -> Result<ValueGrid> {
    let mut r = csv::Reader::from_reader(input);
    let mut t_grid: Vec<f64> = Vec::new();
    let mut x_grid: Vec<f64> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    let mut source = None;
    for row in r.deserialize() {
        let row: GridRow = row?;
        if t_grid.last() != Some(&row.t) {
            t_grid.push(row.t);
            values.push(Vec::new());
        }
        if t_grid.len() == 1 {
            x_grid.push(row.x);
        }
        values.last_mut().expect("row pushed above").push(row.v);
        source = Some(row.source);
    }
    let source = source.ok_or_else(|| Error::Parse("empty value grid".into()))?;
    ValueGrid::new(t_grid, x_grid, values, source)
}

#[derive(Serialize)]
struct GridDocument<'a> {
    schema_version: u32,
    #[serde(flatten)]
    grid: &'a ValueGrid,
}

/// JSON with the two grids and the row-major value matrix.
pub fn value_grid_json(grid: &ValueGrid) -> Result<String> {
    Ok(serde_json::to_string_pretty(&GridDocument {
        schema_version: SCHEMA_VERSION,
        grid,
    })?)
}

/// `s,c0,capacity,nu_plus,nu_minus` for one reflected path.
pub fn write_reflected_path_csv<W: Write>(rp: &ReflectedPath, out: W) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        s: f64,
        c0: f64,
        capacity: f64,
        nu_plus: f64,
        nu_minus: f64,
    }
    let mut w = csv::Writer::from_writer(out);
    for k in 0..rp.capacity.len() {
        w.serialize(Row {
            s: rp.base.times[k],
            c0: rp.base.c0[k],
            capacity: rp.capacity[k],
            nu_plus: rp.nu_bar_plus[k],
            nu_minus: rp.nu_bar_minus[k],
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON of the fields of `body` plus `schema_version`.
pub fn report_json<T: Serialize>(body: &T) -> Result<String> {
    let mut map = serde_json::Map::new();
    map.insert("schema_version".into(), SCHEMA_VERSION.into());
    match serde_json::to_value(body)? {
        serde_json::Value::Object(fields) => map.extend(fields),
        other => {
            map.insert("report".into(), other);
        }
    }
    let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(map))?;
    text.push('\n');
    Ok(text)
}

/// Machine-readable error document.
pub fn error_json(err: &Error) -> String {
    let doc = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "error": { "kind": err.kind(), "message": err.to_string() },
    });
    serde_json::to_string_pretty(&doc).expect("plain JSON value") + "\n"
}
