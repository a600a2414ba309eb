//! Scenario files: a TOML subset with sections `[sim] [patch] [velocity]
//! [experiments]`, one `key = value` per line.

use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};

use patchflow::fields::Grid;
use patchflow::patch::{read_marker_csv, Patch, Point};
use patchflow::solver::{SimConfig, VelocitySpec};
use patchflow::transport::admissible_dt;
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize};
use toml::{Spanned, Table, Value};

/// Malformed scenario, located at a 1-based line and column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}, column {}: {}",
            self.line, self.column, self.message
        )
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    None,
    Disk {
        center: Point,
        radius: f64,
    },
    Ellipse {
        center: Point,
        a: f64,
        b: f64,
    },
    Rectangle {
        center: Point,
        width: f64,
        height: f64,
    },
    RoundedSquare {
        center: Point,
        side: f64,
        corner_radius: f64,
    },
    /// First block of a marker CSV.
    Markers {
        file: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchSpec {
    pub shape: Shape,
    /// Target marker gap in grid spacings.
    pub marker_spacing: f64,
}

/// Post-processing attached to a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "diagnostic", rename_all = "snake_case")]
pub enum Experiment {
    /// Per-slice diagnostics rows, A functionals and ledgers.
    Diagnostics { eta: f64, support_threshold: f64 },
    /// Atomic decomposition of the mean-free initial velocity.
    Decomposition { eta: f64 },
    /// Rate fit of `‖u − M‖_{L²(D_t)}` on a window given as fractions of T,
    /// soft-checked against `min_ratio · λ_bound`.
    DecayFit { window: (f64, f64), min_ratio: f64 },
    /// Lagrangian tracers seeded in the patch and the asymptotic map.
    FlowMap { tracers: usize },
    /// Relative-energy stability against a dipole perturbation.
    Stability { amplitude: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub config: SimConfig,
    pub patch: PatchSpec,
    pub experiments: Vec<Experiment>,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Stride of written diagnostics rows and marker blocks; the last slice
    /// is always written.
    pub output_every: usize,
}

/// Every optional key and its default, as documented in run manifests.
pub const DEFAULTS: &[(&str, &str)] = &[
    ("sim.box_length", "8.0"),
    ("sim.nu", "0.1"),
    ("sim.epsilon", "0.01"),
    ("sim.dt", "0.01"),
    ("sim.t_final", "1.0"),
    ("sim.seed", "0"),
    ("sim.output_dir", "runs/<name>"),
    ("sim.output_every", "1"),
    ("sim.mollify_cells", "1.0"),
    ("sim.advect", "true"),
    ("sim.pressure_tol", "1e-10"),
    ("sim.diffusion_tol", "1e-12"),
    ("patch.shape", "none"),
    ("patch.center", "[0.0, 0.0]"),
    ("patch.marker_spacing", "0.5"),
    ("velocity.center", "[0.0, 0.0]"),
    ("velocity.amplitude", "1.0"),
    ("velocity.sigma", "0.5"),
    ("velocity.width", "1.0"),
    ("velocity.shells", "4"),
    ("velocity.decay", "1.0"),
    ("velocity.direction", "0.0"),
    ("experiments.eta", "0.25"),
    ("experiments.support_threshold", "0.5"),
    ("experiments.decompose_eta", "0.25"),
    ("experiments.decay_window", "[0.2, 0.9]"),
    ("experiments.decay_ratio_min", "1.0"),
    ("experiments.tracers", "32"),
    (
        "experiments.stability_amplitude",
        "unset (no stability run)",
    ),
];

/// Accepts TOML integers where a float is expected.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Float(pub(crate) f64);

impl<'de> Deserialize<'de> for Float {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Float;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Float, E> {
                Ok(Float(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Float, E> {
                Ok(Float(v as f64))
            }
        }
        d.deserialize_any(V)
    }
}

type Opt<T> = Option<Spanned<T>>;

/// Error at the start of byte range `span` of `text`.
pub(crate) fn located(text: &str, span: Range<usize>, message: impl Into<String>) -> ConfigError {
    let at = span.start.min(text.len());
    let before = &text[..at];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    ConfigError {
        line,
        column,
        message: message.into(),
    }
}

/// `toml::from_str` with the parser's span turned into a line and column.
pub(crate) fn from_toml<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, ConfigError> {
    toml::from_str(text).map_err(|e| located(text, e.span().unwrap_or(0..0), e.message().trim()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    sim: Spanned<RawSim>,
    patch: Option<Spanned<RawPatch>>,
    velocity: Spanned<RawVelocity>,
    experiments: Option<Spanned<RawExperiments>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    name: Opt<String>,
    n: Opt<i64>,
    box_length: Opt<Float>,
    nu: Opt<Float>,
    epsilon: Opt<Float>,
    dt: Opt<Float>,
    t_final: Opt<Float>,
    seed: Opt<i64>,
    output_dir: Opt<String>,
    output_every: Opt<i64>,
    mollify_cells: Opt<Float>,
    advect: Opt<bool>,
    pressure_tol: Opt<Float>,
    diffusion_tol: Opt<Float>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPatch {
    shape: Opt<String>,
    center: Opt<[Float; 2]>,
    radius: Opt<Float>,
    a: Opt<Float>,
    b: Opt<Float>,
    width: Opt<Float>,
    height: Opt<Float>,
    side: Opt<Float>,
    corner_radius: Opt<Float>,
    file: Opt<String>,
    marker_spacing: Opt<Float>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVelocity {
    family: Opt<String>,
    m: Opt<[Float; 2]>,
    mean: Opt<[Float; 2]>,
    center: Opt<[Float; 2]>,
    amplitude: Opt<Float>,
    sigma: Opt<Float>,
    k: Opt<Float>,
    k0: Opt<Float>,
    width: Opt<Float>,
    shells: Opt<i64>,
    decay: Opt<Float>,
    direction: Opt<Float>,
    path: Opt<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiments {
    eta: Opt<Float>,
    support_threshold: Opt<Float>,
    decompose_eta: Opt<Float>,
    decay_window: Opt<[Float; 2]>,
    decay_ratio_min: Opt<Float>,
    tracers: Opt<i64>,
    stability_amplitude: Opt<Float>,
}

/// Scenario plus the keys that took their default.
#[derive(Clone, Debug)]
pub struct Parsed {
    pub scenario: Scenario,
    pub defaulted: Vec<String>,
}

struct Ctx<'a> {
    text: &'a str,
    defaulted: Vec<String>,
}

impl Ctx<'_> {
    fn err(&self, span: Range<usize>, message: impl Into<String>) -> ConfigError {
        located(self.text, span, message)
    }

    fn or<T: Clone>(&mut self, v: &Opt<T>, key: &str, default: T) -> T {
        match v {
            Some(s) => s.get_ref().clone(),
            None => {
                self.defaulted.push(key.to_string());
                default
            }
        }
    }

    fn required<T: Clone>(
        &self,
        v: &Opt<T>,
        key: &str,
        section: Range<usize>,
    ) -> Result<T, ConfigError> {
        v.as_ref()
            .map(|s| s.get_ref().clone())
            .ok_or_else(|| self.err(section, format!("missing required key `{key}`")))
    }

    /// `check(value)` or a range error at the value, or at `fallback` when
    /// the key was defaulted.
    fn range<T>(
        &self,
        v: &Opt<T>,
        fallback: Range<usize>,
        ok: bool,
        message: impl FnOnce() -> String,
    ) -> Result<(), ConfigError> {
        if ok {
            return Ok(());
        }
        let span = v.as_ref().map_or(fallback, |s| s.span());
        Err(self.err(span, message()))
    }
}

fn pt(v: [Float; 2]) -> Point {
    [v[0].0, v[1].0]
}

fn span_of<T>(v: &Opt<T>) -> Option<Range<usize>> {
    v.as_ref().map(|s| s.span())
}

pub fn parse_config(text: &str) -> Result<Scenario, ConfigError> {
    parse_config_in(text, None).map(|p| p.scenario)
}

/// Parses `text`, resolving relative paths against `base` when given.
pub fn parse_config_in(text: &str, base: Option<&Path>) -> Result<Parsed, ConfigError> {
    let mut cx = Ctx {
        text,
        defaulted: Vec::new(),
    };
    let raw: RawFile = from_toml(text)?;
    let resolve = |p: &str| match base {
        Some(b) => b.join(p),
        None => PathBuf::from(p),
    };

    let sim_span = raw.sim.span();
    let sim = raw.sim.into_inner();
    let name = cx.required(&sim.name, "sim.name", sim_span.clone())?;
    cx.range(&sim.name, sim_span.clone(), !name.trim().is_empty(), || {
        "sim.name must be nonempty".into()
    })?;
    let n = cx.required(&sim.n, "sim.n", sim_span.clone())?;
    cx.range(
        &sim.n,
        sim_span.clone(),
        n >= 16 && n <= 4096 && n % 2 == 0,
        || format!("sim.n must be an even integer in [16, 4096], got {n}"),
    )?;
    let box_length = cx.or(&sim.box_length, "sim.box_length", Float(8.0)).0;
    cx.range(
        &sim.box_length,
        sim_span.clone(),
        box_length > 0.0 && box_length.is_finite(),
        || format!("sim.box_length must be positive, got {box_length}"),
    )?;
    let nu = cx.or(&sim.nu, "sim.nu", Float(0.1)).0;
    cx.range(
        &sim.nu,
        sim_span.clone(),
        nu > 0.0 && nu.is_finite(),
        || format!("sim.nu must be positive, got {nu}"),
    )?;
    let epsilon = cx.or(&sim.epsilon, "sim.epsilon", Float(0.01)).0;
    cx.range(
        &sim.epsilon,
        sim_span.clone(),
        epsilon > 0.0 && epsilon <= 1.0,
        || format!("sim.epsilon out of range: must lie in (0, 1], got {epsilon}"),
    )?;
    let dt = cx.or(&sim.dt, "sim.dt", Float(0.01)).0;
    cx.range(
        &sim.dt,
        sim_span.clone(),
        dt > 0.0 && dt.is_finite(),
        || format!("sim.dt must be positive, got {dt}"),
    )?;
    let t_final = cx.or(&sim.t_final, "sim.t_final", Float(1.0)).0;
    cx.range(
        &sim.t_final,
        sim_span.clone(),
        t_final >= dt && t_final.is_finite(),
        || format!("sim.t_final = {t_final} must be at least dt = {dt}"),
    )?;
    let seed = cx.or(&sim.seed, "sim.seed", 0);
    cx.range(&sim.seed, sim_span.clone(), seed >= 0, || {
        format!("sim.seed must be non-negative, got {seed}")
    })?;
    let output_dir = match &sim.output_dir {
        Some(s) => resolve(s.get_ref()),
        None => {
            cx.defaulted.push("sim.output_dir".into());
            resolve(&format!("runs/{name}"))
        }
    };
    let output_every = cx.or(&sim.output_every, "sim.output_every", 1);
    cx.range(
        &sim.output_every,
        sim_span.clone(),
        output_every >= 1,
        || format!("sim.output_every must be at least 1, got {output_every}"),
    )?;
    let mollify_cells = cx.or(&sim.mollify_cells, "sim.mollify_cells", Float(1.0)).0;
    cx.range(
        &sim.mollify_cells,
        sim_span.clone(),
        mollify_cells >= 0.0,
        || format!("sim.mollify_cells must be >= 0, got {mollify_cells}"),
    )?;
    let advect = cx.or(&sim.advect, "sim.advect", true);
    let pressure_tol = cx.or(&sim.pressure_tol, "sim.pressure_tol", Float(1e-10)).0;
    cx.range(
        &sim.pressure_tol,
        sim_span.clone(),
        pressure_tol > 0.0,
        || format!("sim.pressure_tol must be positive, got {pressure_tol}"),
    )?;
    let diffusion_tol = cx
        .or(&sim.diffusion_tol, "sim.diffusion_tol", Float(1e-12))
        .0;
    cx.range(
        &sim.diffusion_tol,
        sim_span.clone(),
        diffusion_tol > 0.0,
        || format!("sim.diffusion_tol must be positive, got {diffusion_tol}"),
    )?;
    let grid =
        Grid::new(n as usize, box_length).map_err(|e| cx.err(sim_span.clone(), e.to_string()))?;

    let (patch_spec, patch) = parse_patch(&mut cx, raw.patch, &grid, &resolve)?;

    let vel_span = raw.velocity.span();
    let velocity = parse_velocity(
        &mut cx,
        raw.velocity.into_inner(),
        vel_span.clone(),
        &resolve,
    )?;

    let experiments = parse_experiments(&mut cx, raw.experiments)?;

    let mut config = SimConfig::new(grid, nu, epsilon, dt, t_final).with_velocity(velocity);
    config.patch = patch;
    config.mollify_cells = mollify_cells;
    config.advect = advect;
    config.pressure_tol = pressure_tol;
    config.diffusion_tol = diffusion_tol;
    config
        .validate()
        .map_err(|e| cx.err(sim_span.clone(), e.to_string()))?;

    let u0 = config
        .initial_velocity
        .build(&grid)
        .map_err(|e| cx.err(vel_span.clone(), e.to_string()))?;
    let admissible = admissible_dt(&u0);
    let dt_span = span_of(&sim.dt).unwrap_or(sim_span);
    if dt > admissible {
        return Err(cx.err(
            dt_span,
            format!("sim.dt = {dt} violates the CFL bound: admissible step is {admissible:.6e}"),
        ));
    }

    Ok(Parsed {
        scenario: Scenario {
            name,
            config,
            patch: patch_spec,
            experiments,
            output_dir,
            seed: seed as u64,
            output_every: output_every as usize,
        },
        defaulted: cx.defaulted,
    })
}

fn parse_patch(
    cx: &mut Ctx,
    raw: Option<Spanned<RawPatch>>,
    grid: &Grid,
    resolve: &dyn Fn(&str) -> PathBuf,
) -> Result<(PatchSpec, Option<Patch>), ConfigError> {
    let Some(raw) = raw else {
        cx.defaulted.push("patch.shape".into());
        cx.defaulted.push("patch.marker_spacing".into());
        let spec = PatchSpec {
            shape: Shape::None,
            marker_spacing: 0.5,
        };
        return Ok((spec, None));
    };
    let span = raw.span();
    let p = raw.into_inner();
    let shape_name = cx.or(&p.shape, "patch.shape", "none".to_string());
    let marker_spacing = cx
        .or(&p.marker_spacing, "patch.marker_spacing", Float(0.5))
        .0;
    cx.range(
        &p.marker_spacing,
        span.clone(),
        marker_spacing > 0.0 && marker_spacing <= 2.0,
        || format!("patch.marker_spacing must lie in (0, 2], got {marker_spacing}"),
    )?;
    let keys: [(&str, Option<Range<usize>>); 9] = [
        ("center", span_of(&p.center)),
        ("radius", span_of(&p.radius)),
        ("a", span_of(&p.a)),
        ("b", span_of(&p.b)),
        ("width", span_of(&p.width)),
        ("height", span_of(&p.height)),
        ("side", span_of(&p.side)),
        ("corner_radius", span_of(&p.corner_radius)),
        ("file", span_of(&p.file)),
    ];
    let used: &[&str] = match shape_name.as_str() {
        "none" => &[],
        "disk" => &["center", "radius"],
        "ellipse" => &["center", "a", "b"],
        "rectangle" => &["center", "width", "height"],
        "rounded_square" => &["center", "side", "corner_radius"],
        "markers" => &["file"],
        other => {
            return Err(cx.err(
                span_of(&p.shape).unwrap_or(span),
                format!(
                    "unknown patch shape `{other}`, expected one of none, disk, ellipse, rectangle, rounded_square, markers"
                ),
            ))
        }
    };
    reject_unused(cx, &keys, used, "patch", "shape", &shape_name)?;
    let mut center = || pt(cx.or(&p.center, "patch.center", [Float(0.0), Float(0.0)]));
    let positive = |cx: &Ctx, v: &Opt<Float>, key: &str| -> Result<f64, ConfigError> {
        let x = cx.required(v, &format!("patch.{key}"), span.clone())?.0;
        cx.range(v, span.clone(), x > 0.0 && x.is_finite(), || {
            format!("patch.{key} must be positive, got {x}")
        })?;
        Ok(x)
    };
    let shape = match shape_name.as_str() {
        "none" => Shape::None,
        "disk" => Shape::Disk {
            center: center(),
            radius: positive(cx, &p.radius, "radius")?,
        },
        "ellipse" => Shape::Ellipse {
            center: center(),
            a: positive(cx, &p.a, "a")?,
            b: positive(cx, &p.b, "b")?,
        },
        "rectangle" => Shape::Rectangle {
            center: center(),
            width: positive(cx, &p.width, "width")?,
            height: positive(cx, &p.height, "height")?,
        },
        "rounded_square" => Shape::RoundedSquare {
            center: center(),
            side: positive(cx, &p.side, "side")?,
            corner_radius: positive(cx, &p.corner_radius, "corner_radius")?,
        },
        _ => Shape::Markers {
            file: resolve(&cx.required(&p.file, "patch.file", span.clone())?),
        },
    };
    let spec = PatchSpec {
        shape,
        marker_spacing,
    };
    let at = span_of(&p.shape).unwrap_or(span);
    let patch = build_patch(&spec, grid).map_err(|m| cx.err(at, m))?;
    Ok((spec, patch))
}

/// Markers of `spec` on `grid`.
pub fn build_patch(spec: &PatchSpec, grid: &Grid) -> Result<Option<Patch>, String> {
    let gap = spec.marker_spacing * grid.spacing();
    let patch = match &spec.shape {
        Shape::None => return Ok(None),
        Shape::Disk { center, radius } => Patch::disk(*center, *radius, gap),
        Shape::Ellipse { center, a, b } => Patch::ellipse(*center, *a, *b, gap),
        Shape::Rectangle {
            center,
            width,
            height,
        } => Patch::rectangle(*center, *width, *height, gap),
        Shape::RoundedSquare {
            center,
            side,
            corner_radius,
        } => Patch::rounded_square(*center, *side, *corner_radius, gap),
        Shape::Markers { file } => {
            let f = std::fs::File::open(file)
                .map_err(|e| format!("cannot open marker file {}: {e}", file.display()))?;
            let blocks =
                read_marker_csv(std::io::BufReader::new(f), file).map_err(|e| e.to_string())?;
            let first = blocks
                .into_iter()
                .next()
                .ok_or_else(|| format!("marker file {} is empty", file.display()))?;
            Patch::new(first.markers, gap)
        }
    };
    let patch = patch.map_err(|e| e.to_string())?;
    let half = 0.5 * grid.box_length();
    let b = patch.bounding_box();
    if b[0] <= -half || b[1] >= half || b[2] <= -half || b[3] >= half {
        return Err("patch does not fit inside the box".into());
    }
    Ok(Some(patch))
}

fn reject_unused(
    cx: &Ctx,
    keys: &[(&str, Option<Range<usize>>)],
    used: &[&str],
    section: &str,
    selector: &str,
    choice: &str,
) -> Result<(), ConfigError> {
    for (k, span) in keys {
        if let Some(span) = span {
            if !used.contains(k) {
                return Err(cx.err(
                    span.clone(),
                    format!("{section}.{k} is not used by {selector} `{choice}`"),
                ));
            }
        }
    }
    Ok(())
}

fn parse_velocity(
    cx: &mut Ctx,
    v: RawVelocity,
    span: Range<usize>,
    resolve: &dyn Fn(&str) -> PathBuf,
) -> Result<VelocitySpec, ConfigError> {
    let family = cx.required(&v.family, "velocity.family", span.clone())?;
    let keys: [(&str, Option<Range<usize>>); 11] = [
        ("m", span_of(&v.m)),
        ("center", span_of(&v.center)),
        ("amplitude", span_of(&v.amplitude)),
        ("sigma", span_of(&v.sigma)),
        ("k", span_of(&v.k)),
        ("k0", span_of(&v.k0)),
        ("width", span_of(&v.width)),
        ("shells", span_of(&v.shells)),
        ("decay", span_of(&v.decay)),
        ("direction", span_of(&v.direction)),
        ("path", span_of(&v.path)),
    ];
    let used: &[&str] = match family.as_str() {
        "constant" => &["m"],
        "taylor_green" => &["amplitude"],
        "gaussian_vortex" | "dipole" => &["center", "sigma", "amplitude"],
        "single_shell" => &["center", "k", "width", "amplitude", "direction"],
        "lacunary" => &["center", "k0", "width", "shells", "amplitude", "decay", "direction"],
        "jet_stack" => &["center", "direction", "width", "shells", "amplitude", "decay"],
        "snapshot" => &["path"],
        other => {
            return Err(cx.err(
                span_of(&v.family).unwrap_or(span),
                format!(
                    "unknown velocity family `{other}`, expected one of constant, taylor_green, gaussian_vortex, dipole, single_shell, lacunary, jet_stack, snapshot"
                ),
            ))
        }
    };
    reject_unused(cx, &keys, used, "velocity", "family", &family)?;
    if family == "constant" {
        if let Some(s) = &v.mean {
            return Err(cx.err(s.span(), "velocity.mean is not used by family `constant`"));
        }
    }
    let center = pt(if used.contains(&"center") {
        cx.or(&v.center, "velocity.center", [Float(0.0), Float(0.0)])
    } else {
        [Float(0.0), Float(0.0)]
    });
    let float = |cx: &mut Ctx, o: &Opt<Float>, key: &str, default: Option<f64>, positive: bool| {
        let x = match default {
            Some(d) => cx.or(o, &format!("velocity.{key}"), Float(d)).0,
            None => cx.required(o, &format!("velocity.{key}"), span.clone())?.0,
        };
        let ok = x.is_finite() && (!positive || x > 0.0);
        cx.range(o, span.clone(), ok, || {
            if positive {
                format!("velocity.{key} must be positive, got {x}")
            } else {
                format!("velocity.{key} must be finite, got {x}")
            }
        })?;
        Ok::<f64, ConfigError>(x)
    };
    let shells = |cx: &mut Ctx| -> Result<usize, ConfigError> {
        let s = cx.or(&v.shells, "velocity.shells", 4);
        cx.range(&v.shells, span.clone(), (1..=16).contains(&s), || {
            format!("velocity.shells must lie in [1, 16], got {s}")
        })?;
        Ok(s as usize)
    };
    let spec = match family.as_str() {
        "constant" => VelocitySpec::Constant {
            m: pt(cx.required(&v.m, "velocity.m", span.clone())?),
        },
        "taylor_green" => VelocitySpec::TaylorGreen {
            amplitude: float(cx, &v.amplitude, "amplitude", Some(1.0), false)?,
        },
        "gaussian_vortex" => VelocitySpec::GaussianVortex {
            center,
            sigma: float(cx, &v.sigma, "sigma", Some(0.5), true)?,
            amplitude: float(cx, &v.amplitude, "amplitude", Some(1.0), false)?,
        },
        "dipole" => VelocitySpec::Dipole {
            center,
            sigma: float(cx, &v.sigma, "sigma", Some(0.5), true)?,
            amplitude: float(cx, &v.amplitude, "amplitude", Some(1.0), false)?,
        },
        "single_shell" => VelocitySpec::Lacunary {
            center,
            k0: float(cx, &v.k, "k", None, true)?,
            width: float(cx, &v.width, "width", Some(1.0), true)?,
            shells: 1,
            amplitude: float(cx, &v.amplitude, "amplitude", Some(1.0), false)?,
            decay: 1.0,
            direction: float(cx, &v.direction, "direction", Some(0.0), false)?,
        },
        "lacunary" => VelocitySpec::Lacunary {
            center,
            k0: float(cx, &v.k0, "k0", None, true)?,
            width: float(cx, &v.width, "width", Some(1.0), true)?,
            shells: shells(cx)?,
            amplitude: float(cx, &v.amplitude, "amplitude", Some(1.0), false)?,
            decay: float(cx, &v.decay, "decay", Some(1.0), true)?,
            direction: float(cx, &v.direction, "direction", Some(0.0), false)?,
        },
        "jet_stack" => VelocitySpec::JetStack {
            center,
            direction: float(cx, &v.direction, "direction", Some(0.0), false)?,
            width: float(cx, &v.width, "width", Some(1.0), true)?,
            shells: shells(cx)?,
            amplitude: float(cx, &v.amplitude, "amplitude", Some(1.0), false)?,
            decay: float(cx, &v.decay, "decay", Some(1.0), true)?,
        },
        _ => VelocitySpec::Snapshot {
            path: resolve(&cx.required(&v.path, "velocity.path", span.clone())?),
        },
    };
    Ok(match &v.mean {
        Some(m) => VelocitySpec::Sum {
            parts: vec![
                spec,
                VelocitySpec::Constant {
                    m: pt(*m.get_ref()),
                },
            ],
        },
        None => spec,
    })
}

fn parse_experiments(
    cx: &mut Ctx,
    raw: Option<Spanned<RawExperiments>>,
) -> Result<Vec<Experiment>, ConfigError> {
    let (span, e) = match raw {
        Some(r) => (r.span(), r.into_inner()),
        None => (
            0..0,
            RawExperiments {
                eta: None,
                support_threshold: None,
                decompose_eta: None,
                decay_window: None,
                decay_ratio_min: None,
                tracers: None,
                stability_amplitude: None,
            },
        ),
    };
    let eta = cx.or(&e.eta, "experiments.eta", Float(0.25)).0;
    cx.range(&e.eta, span.clone(), eta > 0.0 && eta < 0.5, || {
        format!("experiments.eta must lie in (0, 1/2), got {eta}")
    })?;
    let support_threshold = cx
        .or(
            &e.support_threshold,
            "experiments.support_threshold",
            Float(0.5),
        )
        .0;
    cx.range(
        &e.support_threshold,
        span.clone(),
        support_threshold > 0.0 && support_threshold <= 0.5,
        || format!("experiments.support_threshold must lie in (0, 1/2], got {support_threshold}"),
    )?;
    let decompose_eta = cx
        .or(&e.decompose_eta, "experiments.decompose_eta", Float(0.25))
        .0;
    cx.range(
        &e.decompose_eta,
        span.clone(),
        decompose_eta > 0.0 && decompose_eta < 0.5,
        || format!("experiments.decompose_eta must lie in (0, 1/2), got {decompose_eta}"),
    )?;
    let w = cx.or(
        &e.decay_window,
        "experiments.decay_window",
        [Float(0.2), Float(0.9)],
    );
    let window = (w[0].0, w[1].0);
    cx.range(
        &e.decay_window,
        span.clone(),
        0.0 <= window.0 && window.0 < window.1 && window.1 <= 1.0,
        || {
            format!(
                "experiments.decay_window must satisfy 0 <= a < b <= 1, got [{}, {}]",
                window.0, window.1
            )
        },
    )?;
    let min_ratio = cx
        .or(
            &e.decay_ratio_min,
            "experiments.decay_ratio_min",
            Float(1.0),
        )
        .0;
    cx.range(
        &e.decay_ratio_min,
        span.clone(),
        min_ratio >= 0.0 && min_ratio.is_finite(),
        || format!("experiments.decay_ratio_min must be >= 0, got {min_ratio}"),
    )?;
    let tracers = cx.or(&e.tracers, "experiments.tracers", 32);
    cx.range(
        &e.tracers,
        span.clone(),
        (0..=100_000).contains(&tracers),
        || format!("experiments.tracers must lie in [0, 100000], got {tracers}"),
    )?;
    let mut out = vec![
        Experiment::Diagnostics {
            eta,
            support_threshold,
        },
        Experiment::Decomposition { eta: decompose_eta },
        Experiment::DecayFit { window, min_ratio },
        Experiment::FlowMap {
            tracers: tracers as usize,
        },
    ];
    match &e.stability_amplitude {
        Some(a) => {
            let x = a.get_ref().0;
            cx.range(&e.stability_amplitude, span, x.is_finite(), || {
                format!("experiments.stability_amplitude must be finite, got {x}")
            })?;
            out.push(Experiment::Stability { amplitude: x });
        }
        None => cx.defaulted.push("experiments.stability_amplitude".into()),
    }
    Ok(out)
}

fn float(x: f64) -> Value {
    Value::Float(x)
}

fn pair(p: [f64; 2]) -> Value {
    Value::Array(vec![float(p[0]), float(p[1])])
}

fn path_value(p: &Path) -> Value {
    Value::String(p.to_string_lossy().into_owned())
}

fn velocity_table(v: &VelocitySpec) -> Result<Table, String> {
    let mut t = Table::new();
    let mut put = |k: &str, v: Value| {
        t.insert(k.to_string(), v);
    };
    match v {
        VelocitySpec::Constant { m } => {
            put("family", "constant".into());
            put("m", pair(*m));
        }
        VelocitySpec::TaylorGreen { amplitude } => {
            put("family", "taylor_green".into());
            put("amplitude", float(*amplitude));
        }
        VelocitySpec::GaussianVortex {
            center,
            sigma,
            amplitude,
        }
        | VelocitySpec::Dipole {
            center,
            sigma,
            amplitude,
        } => {
            let fam = if matches!(v, VelocitySpec::Dipole { .. }) {
                "dipole"
            } else {
                "gaussian_vortex"
            };
            put("family", fam.into());
            put("center", pair(*center));
            put("sigma", float(*sigma));
            put("amplitude", float(*amplitude));
        }
        VelocitySpec::Lacunary {
            center,
            k0,
            width,
            shells,
            amplitude,
            decay,
            direction,
        } => {
            put("center", pair(*center));
            put("width", float(*width));
            put("amplitude", float(*amplitude));
            put("direction", float(*direction));
            if *shells == 1 && *decay == 1.0 {
                put("family", "single_shell".into());
                put("k", float(*k0));
            } else {
                put("family", "lacunary".into());
                put("k0", float(*k0));
                put("shells", Value::Integer(*shells as i64));
                put("decay", float(*decay));
            }
        }
        VelocitySpec::JetStack {
            center,
            direction,
            width,
            shells,
            amplitude,
            decay,
        } => {
            put("family", "jet_stack".into());
            put("center", pair(*center));
            put("direction", float(*direction));
            put("width", float(*width));
            put("shells", Value::Integer(*shells as i64));
            put("amplitude", float(*amplitude));
            put("decay", float(*decay));
        }
        VelocitySpec::Snapshot { path } => {
            put("family", "snapshot".into());
            put("path", path_value(path));
        }
        VelocitySpec::Sum { parts } => match parts.as_slice() {
            [base, VelocitySpec::Constant { m }]
                if !matches!(
                    base,
                    VelocitySpec::Constant { .. } | VelocitySpec::Sum { .. }
                ) =>
            {
                let mut t = velocity_table(base)?;
                t.insert("mean".into(), pair(*m));
                return Ok(t);
            }
            _ => return Err("general velocity sums have no scenario form".into()),
        },
    }
    Ok(t)
}

impl Scenario {
    /// Every key written out explicitly; parses back to an identical
    /// scenario. Paths are written as stored.
    pub fn to_config_text(&self) -> Result<String, String> {
        let c = &self.config;
        let mut sim = Table::new();
        sim.insert("name".into(), self.name.clone().into());
        sim.insert("n".into(), Value::Integer(c.grid.n() as i64));
        sim.insert("box_length".into(), float(c.grid.box_length()));
        sim.insert("nu".into(), float(c.nu));
        sim.insert("epsilon".into(), float(c.epsilon));
        sim.insert("dt".into(), float(c.dt));
        sim.insert("t_final".into(), float(c.t_final));
        sim.insert("seed".into(), Value::Integer(self.seed as i64));
        sim.insert("output_dir".into(), path_value(&self.output_dir));
        sim.insert(
            "output_every".into(),
            Value::Integer(self.output_every as i64),
        );
        sim.insert("mollify_cells".into(), float(c.mollify_cells));
        sim.insert("advect".into(), Value::Boolean(c.advect));
        sim.insert("pressure_tol".into(), float(c.pressure_tol));
        sim.insert("diffusion_tol".into(), float(c.diffusion_tol));

        let mut patch = Table::new();
        let mut put = |k: &str, v: Value| {
            patch.insert(k.to_string(), v);
        };
        match &self.patch.shape {
            Shape::None => put("shape", "none".into()),
            Shape::Disk { center, radius } => {
                put("shape", "disk".into());
                put("center", pair(*center));
                put("radius", float(*radius));
            }
            Shape::Ellipse { center, a, b } => {
                put("shape", "ellipse".into());
                put("center", pair(*center));
                put("a", float(*a));
                put("b", float(*b));
            }
            Shape::Rectangle {
                center,
                width,
                height,
            } => {
                put("shape", "rectangle".into());
                put("center", pair(*center));
                put("width", float(*width));
                put("height", float(*height));
            }
            Shape::RoundedSquare {
                center,
                side,
                corner_radius,
            } => {
                put("shape", "rounded_square".into());
                put("center", pair(*center));
                put("side", float(*side));
                put("corner_radius", float(*corner_radius));
            }
            Shape::Markers { file } => {
                put("shape", "markers".into());
                put("file", path_value(file));
            }
        }
        put("marker_spacing", float(self.patch.marker_spacing));

        let mut exp = Table::new();
        for e in &self.experiments {
            match e {
                Experiment::Diagnostics {
                    eta,
                    support_threshold,
                } => {
                    exp.insert("eta".into(), float(*eta));
                    exp.insert("support_threshold".into(), float(*support_threshold));
                }
                Experiment::Decomposition { eta } => {
                    exp.insert("decompose_eta".into(), float(*eta));
                }
                Experiment::DecayFit { window, min_ratio } => {
                    exp.insert("decay_window".into(), pair([window.0, window.1]));
                    exp.insert("decay_ratio_min".into(), float(*min_ratio));
                }
                Experiment::FlowMap { tracers } => {
                    exp.insert("tracers".into(), Value::Integer(*tracers as i64));
                }
                Experiment::Stability { amplitude } => {
                    exp.insert("stability_amplitude".into(), float(*amplitude));
                }
            }
        }

        let mut doc = Table::new();
        doc.insert("sim".into(), Value::Table(sim));
        doc.insert("patch".into(), Value::Table(patch));
        doc.insert(
            "velocity".into(),
            Value::Table(velocity_table(&c.initial_velocity)?),
        );
        doc.insert("experiments".into(), Value::Table(exp));
        toml::to_string(&doc).map_err(|e| e.to_string())
    }

    pub fn experiment<T>(&self, pick: impl Fn(&Experiment) -> Option<T>) -> Option<T> {
        self.experiments.iter().find_map(pick)
    }
}
