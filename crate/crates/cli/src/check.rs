//! `check`: re-evaluates the hard conservation invariants of a finished run
//! from its artifacts and resolves every traceability row.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::Path;

use patchflow::fields::Snapshot;
use patchflow::patch::{read_marker_csv, signed_area_of};
use serde_json::Value;

use crate::runner::{
    Check, Manifest, TraceRow, AREA_DRIFT_LIMIT, MASS_DRIFT_LIMIT, MOMENTUM_DRIFT_LIMIT,
};

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub invariants: BTreeMap<String, Check>,
    /// Rows that did not resolve, with the reason.
    pub unresolved: Vec<(TraceRow, String)>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.unresolved.is_empty() && self.invariants.values().all(|c| c.passed)
    }
}

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn read_csv(path: &Path) -> Result<Csv, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| format!("{}: empty file", path.display()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| format!("{}: {e}", path.display()))
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    Ok(Csv { header, rows })
}

fn column(csv: &Csv, name: &str) -> Result<Vec<f64>, String> {
    let k = csv
        .header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| format!("missing column {name}"))?;
    Ok(csv.rows.iter().map(|r| r[k]).collect())
}

fn resolve(dir: &Path, row: &TraceRow) -> Result<(), String> {
    let path = dir.join(&row.file);
    if !path.is_file() {
        return Err(format!("{} does not exist", row.file));
    }
    if row.column.is_empty() {
        return Ok(());
    }
    if row.file.ends_with(".csv") {
        let first = fs::read_to_string(&path)
            .map_err(|e| e.to_string())?
            .lines()
            .next()
            .unwrap_or("")
            .to_string();
        return match first.split(',').any(|h| h == row.column) {
            true => Ok(()),
            false => Err(format!("{} has no column {}", row.file, row.column)),
        };
    }
    let json: Value = serde_json::from_str(&fs::read_to_string(&path).map_err(|e| e.to_string())?)
        .map_err(|e| format!("{}: {e}", row.file))?;
    let mut at = &json;
    for key in row.column.split('.') {
        at = at
            .get(key)
            .filter(|v| !v.is_null())
            .ok_or_else(|| format!("{} has no key {}", row.file, row.column))?;
    }
    Ok(())
}

fn load(dir: &Path, name: &str) -> Result<Snapshot, String> {
    Snapshot::load(&dir.join(name)).map_err(|e| e.to_string())
}

/// Mass of component 0 and `∫ρ|u|` of a `(ρ, u, v, …)` snapshot.
fn mass_and_scale(s: &Snapshot) -> (f64, f64) {
    let a = s.grid.cell_area();
    let c = &s.components;
    let mass = c[0].iter().sum::<f64>() * a;
    let scale = (0..c[0].len())
        .map(|k| c[0][k] * c[1][k].hypot(c[2][k]))
        .sum::<f64>()
        * a;
    (mass, scale)
}

pub fn check_output(dir: &Path) -> Result<CheckReport, String> {
    let manifest: Manifest = serde_json::from_str(
        &fs::read_to_string(dir.join("manifest.json"))
            .map_err(|e| format!("manifest.json: {e}"))?,
    )
    .map_err(|e| format!("manifest.json: {e}"))?;
    let unresolved = manifest
        .traceability
        .iter()
        .filter_map(|r| resolve(dir, r).err().map(|e| (r.clone(), e)))
        .collect();

    let mut invariants = BTreeMap::new();
    let s0 = load(dir, "initial.pfld")?;
    let s1 = load(dir, "final.pfld")?;
    if s0.components.len() < 3 || s1.components.len() < 3 {
        return Err("snapshots need density and velocity components".into());
    }
    let (m0, scale) = mass_and_scale(&s0);
    let (m1, _) = mass_and_scale(&s1);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    if s1.t > 0.0 {
        invariants.insert(
            "mass_drift_rate".into(),
            Check::at_most(((m1 - m0) / m0).abs() / s1.t, MASS_DRIFT_LIMIT),
        );
    }

    let diag = read_csv(&dir.join("diagnostics.csv"))?;
    let finite = diag.rows.iter().flatten().all(|v| v.is_finite());
    invariants.insert(
        "finite".into(),
        Check::at_least(f64::from(u8::from(finite)), 1.0),
    );
    let (t, mx, my) = (
        column(&diag, "t")?,
        column(&diag, "Mx")?,
        column(&diag, "My")?,
    );
    let mut drift = 0.0f64;
    for k in 1..t.len() {
        if t[k] > 0.0 {
            let dp = (mx[k] - mx[0]).hypot(my[k] - my[0]) * m0;
            drift = drift.max(dp / scale / t[k]);
        }
    }
    invariants.insert(
        "momentum_drift_rate".into(),
        Check::at_most(drift, MOMENTUM_DRIFT_LIMIT),
    );

    let markers = dir.join("markers.csv");
    if markers.is_file() {
        let f = fs::File::open(&markers).map_err(|e| e.to_string())?;
        let blocks = read_marker_csv(BufReader::new(f), &markers).map_err(|e| e.to_string())?;
        if let Some(first) = blocks.first() {
            let a0 = signed_area_of(&first.markers).abs();
            let rate = blocks
                .iter()
                .filter(|b| b.t > 0.0)
                .map(|b| ((signed_area_of(&b.markers).abs() - a0) / a0).abs() / b.t)
                .fold(0.0f64, f64::max);
            invariants.insert(
                "area_drift_rate".into(),
                Check::at_most(rate, AREA_DRIFT_LIMIT),
            );
        }
    }
    Ok(CheckReport {
        invariants,
        unresolved,
    })
}
