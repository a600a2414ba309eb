//! `decompose` and `stokes-tail`.

use std::path::{Path, PathBuf};

use patchflow::besov::atomic_decompose;
use patchflow::fields::{ScalarField, Snapshot, VectorField};
use patchflow::stokes::{
    farfield_profile, farfield_slopes, gaussian_disk_source, geometric_radii, write_profile_csv,
    PointForce,
};
use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::config::{from_toml, located, ConfigError, Float};

/// Atomic decomposition of a snapshot's mean-free velocity (components 1
/// and 2), with momenta over the region where component 0 is at least half
/// its maximum.
pub fn decompose_snapshot(path: &Path, eta: f64) -> patchflow::Result<String> {
    let s = Snapshot::load(path)?;
    if s.components.len() < 3 {
        return Err(patchflow::Error::Format {
            path: path.to_path_buf(),
            message: "snapshot needs density and two velocity components".into(),
        });
    }
    let g = s.grid;
    let rho = ScalarField::new(g, s.components[0].clone())?;
    let u = VectorField::new(g, s.components[1].clone(), s.components[2].clone())?;
    let u = mean_free(&u);
    let half = 0.5 * rho.max();
    let area = rho.values().iter().filter(|&&r| r >= half).count() as f64 * g.cell_area();
    atomic_decompose(&u, eta)?
        .with_momenta(&rho, area)?
        .to_json()
}

/// `u` minus its mean; a field constant to round-off maps to exact zero.
pub(crate) fn mean_free(u: &VectorField) -> VectorField {
    let mean = u.mean();
    let v = u.shift([-mean[0], -mean[1]]);
    if v.max_magnitude() <= 1e-12 * u.max_magnitude() {
        VectorField::zeros(*u.grid())
    } else {
        v
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    source: Spanned<RawSource>,
    profile: Option<Spanned<RawProfile>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSource {
    kind: Spanned<String>,
    width: Option<Spanned<Float>>,
    support_radius: Option<Spanned<Float>>,
    direction: Option<[Float; 2]>,
    n: Option<Spanned<i64>>,
    points: Option<Spanned<Vec<[Float; 4]>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    r_min: Option<Spanned<Float>>,
    r_max: Option<Spanned<Float>>,
    count: Option<Spanned<i64>>,
    angles: Option<Spanned<i64>>,
    output: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailReport {
    pub sources: usize,
    pub support_radius: f64,
    pub net_force: [f64; 2],
    pub slope_w: f64,
    pub slope_q: f64,
    pub output: PathBuf,
}

#[derive(Debug)]
pub enum TailError {
    Spec(ConfigError),
    Runtime(String),
}

impl std::fmt::Display for TailError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Spec(e) => write!(f, "source spec: {e}"),
            Self::Runtime(m) => f.write_str(m),
        }
    }
}

/// Far-field profile of the source described by the TOML at `path`, written
/// as CSV next to it unless `[profile] output` says otherwise.
pub fn stokes_tail(path: &Path) -> Result<TailReport, TailError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| TailError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    let raw: RawSpec = from_toml(&text).map_err(TailError::Spec)?;
    let bad = |span: std::ops::Range<usize>, m: String| TailError::Spec(located(&text, span, m));
    let src_span = raw.source.span();
    let src = raw.source.into_inner();
    let num = |v: &Option<Spanned<Float>>, d: f64| v.as_ref().map_or(d, |s| s.get_ref().0);
    let span_or = |v: Option<std::ops::Range<usize>>| v.unwrap_or(src_span.clone());
    let width = num(&src.width, 0.3);
    let radius = num(&src.support_radius, 1.0);
    let n = src.n.as_ref().map_or(64, |s| *s.get_ref());
    let direction = src.direction.map_or([1.0, 0.3], |d| [d[0].0, d[1].0]);
    if !(width > 0.0) {
        return Err(bad(
            span_or(src.width.as_ref().map(|s| s.span())),
            format!("width must be positive, got {width}"),
        ));
    }
    if !(radius > 0.0) {
        return Err(bad(
            span_or(src.support_radius.as_ref().map(|s| s.span())),
            format!("support_radius must be positive, got {radius}"),
        ));
    }
    if !(16..=1024).contains(&n) || n % 2 != 0 {
        return Err(bad(
            span_or(src.n.as_ref().map(|s| s.span())),
            format!("n must be an even integer in [16, 1024], got {n}"),
        ));
    }
    let kind = src.kind.get_ref().as_str();
    if kind != "points" {
        if let Some(p) = &src.points {
            return Err(bad(
                p.span(),
                format!("points is not used by kind `{kind}`"),
            ));
        }
    }
    let (sources, radius) = match kind {
        "dipole" | "monopole" => (
            gaussian_disk_source(kind == "dipole", width, radius, direction, n as usize)
                .map_err(|e| bad(src_span.clone(), e.to_string()))?,
            radius,
        ),
        "points" => {
            let pts = src.points.as_ref().ok_or_else(|| {
                bad(
                    src_span.clone(),
                    "kind `points` needs `points = [[x, y, fx, fy], ...]`".into(),
                )
            })?;
            let sources: Vec<PointForce> = pts
                .get_ref()
                .iter()
                .map(|p| PointForce {
                    at: [p[0].0, p[1].0],
                    force: [p[2].0, p[3].0],
                })
                .collect();
            if sources.is_empty() {
                return Err(bad(pts.span(), "points must not be empty".into()));
            }
            let k = sources.len() as f64;
            let c = sources
                .iter()
                .fold([0.0, 0.0], |a, s| [a[0] + s.at[0] / k, a[1] + s.at[1] / k]);
            let r = sources
                .iter()
                .fold(0.0f64, |m, s| m.max((s.at[0] - c[0]).hypot(s.at[1] - c[1])));
            (sources, r.max(f64::MIN_POSITIVE))
        }
        other => {
            return Err(bad(
                src.kind.span(),
                format!("unknown source kind `{other}`, expected dipole, monopole or points"),
            ))
        }
    };

    let (pspan, prof) = match raw.profile {
        Some(p) => (p.span(), Some(p.into_inner())),
        None => (0..0, None),
    };
    let pnum = |f: fn(&RawProfile) -> &Option<Spanned<Float>>, d: f64| {
        prof.as_ref()
            .and_then(|p| f(p).as_ref())
            .map_or(d, |s| s.get_ref().0)
    };
    let r_min = pnum(|p| &p.r_min, 5.0 * radius);
    let r_max = pnum(|p| &p.r_max, 300.0 * radius);
    let count = prof
        .as_ref()
        .and_then(|p| p.count.as_ref())
        .map_or(10, |s| *s.get_ref());
    let angles = prof
        .as_ref()
        .and_then(|p| p.angles.as_ref())
        .map_or(64, |s| *s.get_ref());
    if !(r_min > 0.0 && r_max > r_min) {
        return Err(bad(
            pspan,
            format!("need 0 < r_min < r_max, got {r_min} and {r_max}"),
        ));
    }
    if !(2..=10_000).contains(&count) || !(1..=100_000).contains(&angles) {
        return Err(bad(
            pspan,
            format!(
                "count must lie in [2, 10000] and angles in [1, 100000], got {count} and {angles}"
            ),
        ));
    }
    let dir = path.parent().unwrap_or(Path::new("."));
    let output = dir.join(
        prof.as_ref()
            .and_then(|p| p.output.clone())
            .unwrap_or_else(|| "stokes_tail.csv".into()),
    );

    let k = sources.len() as f64;
    let c = sources
        .iter()
        .fold([0.0, 0.0], |a, s| [a[0] + s.at[0] / k, a[1] + s.at[1] / k]);
    let net = sources
        .iter()
        .fold([0.0, 0.0], |a, s| [a[0] + s.force[0], a[1] + s.force[1]]);
    let radii = geometric_radii(r_min, r_max, count as usize);
    let profile = farfield_profile(&sources, c, &radii, angles as usize)
        .map_err(|e| TailError::Runtime(e.to_string()))?;
    write_profile_csv(&output, &profile).map_err(|e| TailError::Runtime(e.to_string()))?;
    let (slope_w, slope_q) =
        farfield_slopes(&profile, radius).map_err(|e| TailError::Runtime(e.to_string()))?;
    Ok(TailReport {
        sources: sources.len(),
        support_radius: radius,
        net_force: net,
        slope_w,
        slope_q,
        output,
    })
}
