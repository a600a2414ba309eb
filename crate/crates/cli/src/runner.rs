//! `run`: one scenario end to end, with its artifact set.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use patchflow::besov::atomic_decompose;
use patchflow::diagnostics::{
    decay_fit, galilean_shift, lambda_bound, momentum, stability_experiment, write_diagnostics_csv,
    Recorder, RecorderOptions, StabilityReport,
};
use patchflow::lagrangian::{
    asymptotic_map, write_asymptotic_csv, write_trajectories_csv, FlowTracker,
};
use patchflow::patch::{fine_poincare_constant, save_marker_csv, MarkerBlock, Patch, Point};
use patchflow::solver::{step, write_checkpoint, AFunctionals, Ledger, SimState, VelocitySpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{parse_config_in, ConfigError, Experiment, Parsed, Scenario, DEFAULTS};

/// Hard limits, relative and per unit time.
pub const MASS_DRIFT_LIMIT: f64 = 1e-8;
pub const MOMENTUM_DRIFT_LIMIT: f64 = 1e-6;
pub const AREA_DRIFT_LIMIT: f64 = 1e-3;
/// The Galilean momentum identity is bilinear and survives spectral
/// translation to round-off; relative.
pub const GALILEAN_LIMIT: f64 = 1e-9;
/// The energy identity is trilinear; spectral translation of ρ and u
/// separately leaves an interpolation error. Soft; relative.
pub const GALILEAN_ENERGY_LIMIT: f64 = 1e-3;
/// Soft threshold on the Taylor–Green decay-rate error.
pub const TAYLOR_GREEN_RATE_LIMIT: f64 = 1e-4;

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Runtime {
        message: String,
        checkpoint: Option<PathBuf>,
    },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 64,
            Self::Runtime { .. } => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(e) => write!(f, "config error: {e}"),
            Self::Runtime {
                message,
                checkpoint: Some(p),
            } => write!(
                f,
                "runtime failure: {message}; last good state in {}",
                p.display()
            ),
            Self::Runtime { message, .. } => write!(f, "runtime failure: {message}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

fn runtime(e: impl fmt::Display) -> RunError {
    RunError::Runtime {
        message: e.to_string(),
        checkpoint: None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    pub(crate) fn at_most(value: f64, limit: f64) -> Self {
        Self {
            value,
            limit,
            passed: value <= limit,
        }
    }

    pub(crate) fn at_least(value: f64, limit: f64) -> Self {
        Self {
            value,
            limit,
            passed: value >= limit,
        }
    }
}

/// One theorem check and where its evidence lives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub check: String,
    pub file: String,
    /// CSV column name, or a dotted key path into a JSON file.
    pub column: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub config_sha256: String,
    pub effective_config: String,
    pub defaults: BTreeMap<String, String>,
    pub defaults_applied: Vec<String>,
    pub versions: BTreeMap<String, String>,
    pub threads: usize,
    pub wall_seconds: f64,
    pub exit_status: i32,
    pub outputs: Vec<String>,
    pub traceability: Vec<TraceRow>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayReport {
    pub window: (f64, f64),
    pub lambda_fit: f64,
    pub below_floor: bool,
    pub poincare_constant: f64,
    pub l_infty: f64,
    pub lambda_bound: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GalileanReport {
    pub m: [f64; 2],
    pub momentum_identity_error: f64,
    pub energy_identity_error: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExactReport {
    pub rel_l2_error: f64,
    pub decay_rate: f64,
    pub exact_rate: f64,
    pub decay_rate_error: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowReport {
    pub tracers: usize,
    pub error_bar: f64,
    pub margin_exceeded: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LedgerReport {
    pub ledger: Ledger,
    pub a_functionals: AFunctionals,
    /// Hard invariants; any failure gives exit status 2.
    pub invariants: BTreeMap<String, Check>,
    /// Fitted-constant checks, reported only.
    pub soft: BTreeMap<String, Check>,
    pub galilean: GalileanReport,
    pub decay_fit: Option<DecayReport>,
    pub exact_solution: Option<ExactReport>,
    pub flow_map: Option<FlowReport>,
    pub stability: Option<StabilityReport>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub output_dir: PathBuf,
    pub failures: Vec<String>,
    pub manifest: Manifest,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            2
        }
    }
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Parses `path` (relative paths resolve against its directory) and runs it.
pub fn run_scenario(path: &Path) -> Result<RunOutcome, RunError> {
    let text = fs::read_to_string(path).map_err(|e| {
        RunError::Config(ConfigError {
            line: 0,
            column: 0,
            message: format!("cannot read {}: {e}", path.display()),
        })
    })?;
    let base = path
        .parent()
        .map(|p| {
            if p.as_os_str().is_empty() {
                Path::new(".")
            } else {
                p
            }
        })
        .unwrap_or(Path::new("."));
    let base = base.canonicalize().map_err(runtime)?;
    let parsed = parse_config_in(&text, Some(&base))?;
    run_parsed(&parsed)
}

/// `count` points drawn uniformly from the patch, or from the central
/// quarter of the box without one.
pub fn seed_tracers(patch: Option<&Patch>, box_length: f64, count: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = 0.25 * box_length;
    let b = patch.map_or([-q, q, -q, q], |p| p.bounding_box());
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = [rng.gen_range(b[0]..b[1]), rng.gen_range(b[2]..b[3])];
        if patch.map_or(true, |d| d.contains(p)) {
            out.push(p);
        }
    }
    out
}

struct Drift {
    mass0: f64,
    p0: [f64; 2],
    scale: f64,
    area0: Option<f64>,
    mass: f64,
    momentum: f64,
    area: f64,
}

impl Drift {
    fn new(s: &SimState) -> Result<Self, RunError> {
        let mass0 = s.mass();
        let p0 = s.momentum().map_err(runtime)?;
        let scale =
            s.u.magnitude()
                .zip_map(&s.rho, |a, r| a * r)
                .map_err(runtime)?
                .integral();
        Ok(Self {
            mass0,
            p0,
            scale: if scale > 0.0 { scale } else { 1.0 },
            area0: s.markers.as_ref().map(|p| p.area()),
            mass: 0.0,
            momentum: 0.0,
            area: 0.0,
        })
    }

    fn push(&mut self, s: &SimState) -> Result<(), RunError> {
        if s.t <= 0.0 {
            return Ok(());
        }
        let mass = s.mass();
        let p = s.momentum().map_err(runtime)?;
        self.mass = self
            .mass
            .max(((mass - self.mass0) / self.mass0).abs() / s.t);
        self.momentum = self
            .momentum
            .max((p[0] - self.p0[0]).hypot(p[1] - self.p0[1]) / self.scale / s.t);
        if let (Some(a0), Some(mk)) = (self.area0, &s.markers) {
            self.area = self.area.max(((mk.area() - a0) / a0).abs() / s.t);
        }
        Ok(())
    }
}

fn all_finite(s: &SimState) -> bool {
    s.rho
        .values()
        .iter()
        .chain(s.u.x())
        .chain(s.u.y())
        .all(|v| v.is_finite())
}

fn checkpoint_failure(dir: &Path, state: &SimState, message: String) -> RunError {
    match write_checkpoint(dir, "checkpoint", state) {
        Ok(f) => RunError::Runtime {
            message,
            checkpoint: Some(f.fields),
        },
        Err(e) => RunError::Runtime {
            message: format!("{message}; checkpoint failed: {e}"),
            checkpoint: None,
        },
    }
}

/// Standard traceability rows for the artifacts a scenario writes.
fn traceability(sc: &Scenario, has_patch: bool, tracers: bool) -> Vec<TraceRow> {
    let row = |check: &str, file: &str, column: &str| TraceRow {
        check: check.into(),
        file: file.into(),
        column: column.into(),
    };
    let mut rows = vec![
        row("energy equality", "diagnostics.csv", "E"),
        row("momentum conservation (x)", "diagnostics.csv", "Mx"),
        row("momentum conservation (y)", "diagnostics.csv", "My"),
        row(
            "relaxation to the mean velocity",
            "diagnostics.csv",
            "u_minus_M_l2",
        ),
        row(
            "Lipschitz bound on the velocity",
            "diagnostics.csv",
            "linf_grad",
        ),
        row("flow-map distortion", "diagnostics.csv", "L_inf"),
        row("A functional A0", "diagnostics.csv", "A0"),
        row("A functional A1", "diagnostics.csv", "A1"),
        row("A functional A2", "diagnostics.csv", "A2"),
        row("A functional A3", "diagnostics.csv", "A3"),
        row("L1-in-time ledger of grad u", "diagnostics.csv", "led1"),
        row("L1-in-time ledger of rho u_t", "diagnostics.csv", "led2"),
        row(
            "L1-in-time ledger of grad u_t in L4",
            "diagnostics.csv",
            "led3",
        ),
        row(
            "L1-in-time ledger of grad u_t in L2",
            "diagnostics.csv",
            "led4",
        ),
        row(
            "mass conservation",
            "ledger.json",
            "invariants.mass_drift_rate",
        ),
        row(
            "momentum conservation",
            "ledger.json",
            "invariants.momentum_drift_rate",
        ),
        row("finite fields", "ledger.json", "invariants.finite"),
        row(
            "Galilean momentum identity",
            "ledger.json",
            "invariants.galilean_momentum",
        ),
        row(
            "Galilean energy identity",
            "ledger.json",
            "soft.galilean_energy",
        ),
        row(
            "A functional integrals",
            "ledger.json",
            "a_functionals.series",
        ),
        row("atomic decomposition", "decomposition.json", "shells"),
        row(
            "atomic decomposition norm",
            "decomposition.json",
            "besov_norm",
        ),
        row("final state", "final.pfld", ""),
    ];
    if has_patch {
        rows.extend([
            row("support growth", "diagnostics.csv", "supp_excess"),
            row(
                "patch area conservation",
                "ledger.json",
                "invariants.area_drift_rate",
            ),
            row("patch transport (x)", "markers.csv", "x"),
            row("patch transport (y)", "markers.csv", "y"),
            row(
                "exponential relaxation rate",
                "ledger.json",
                "decay_fit.lambda_fit",
            ),
            row(
                "relaxation rate bound",
                "ledger.json",
                "decay_fit.lambda_bound",
            ),
            row("decomposition momenta", "decomposition.json", "shells"),
        ]);
    }
    if tracers {
        rows.extend([
            row("Lagrangian flow map", "trajectories.csv", "x"),
            row("asymptotic map", "asymptotic.csv", "xinf"),
            row("asymptotic map tail", "asymptotic.csv", "tail"),
            row(
                "asymptotic map error bar",
                "ledger.json",
                "flow_map.error_bar",
            ),
        ]);
    }
    if sc
        .experiment(|e| matches!(e, Experiment::Stability { .. }).then_some(()))
        .is_some()
    {
        rows.push(row(
            "relative-energy stability",
            "ledger.json",
            "stability.e_rel",
        ));
        rows.push(row(
            "stability constant fit",
            "ledger.json",
            "stability.c_fit",
        ));
    }
    if exact_family(sc).is_some() {
        rows.push(row(
            "Taylor-Green decay rate",
            "ledger.json",
            "exact_solution.decay_rate_error",
        ));
    }
    rows
}

/// Amplitude of a Taylor–Green datum on uniform density.
fn exact_family(sc: &Scenario) -> Option<f64> {
    match (&sc.config.initial_velocity, &sc.config.patch) {
        (VelocitySpec::TaylorGreen { amplitude }, None) => Some(*amplitude),
        _ => None,
    }
}

pub fn run_parsed(parsed: &Parsed) -> Result<RunOutcome, RunError> {
    let started = Instant::now();
    let sc = &parsed.scenario;
    let cfg = &sc.config;
    let dir = &sc.output_dir;
    fs::create_dir_all(dir).map_err(runtime)?;
    let text = sc.to_config_text().map_err(runtime)?;

    let (eta, support_threshold) = sc
        .experiment(|e| match e {
            Experiment::Diagnostics {
                eta,
                support_threshold,
            } => Some((*eta, *support_threshold)),
            _ => None,
        })
        .unwrap_or((0.25, 0.5));
    let tracers = sc
        .experiment(|e| match e {
            Experiment::FlowMap { tracers } => Some(*tracers),
            _ => None,
        })
        .unwrap_or(0);

    let s0 = SimState::initial(cfg).map_err(runtime)?;
    write_checkpoint(dir, "initial", &s0).map_err(runtime)?;
    let mut recorder = Recorder::new(
        cfg.patch.as_ref(),
        &cfg.grid,
        cfg.epsilon,
        RecorderOptions {
            eta,
            support_threshold,
        },
    )
    .map_err(runtime)?;
    recorder.push(&s0).map_err(runtime)?;
    let seeds = seed_tracers(cfg.patch.as_ref(), cfg.grid.box_length(), tracers, sc.seed);
    let mut flow = if tracers > 0 {
        Some(FlowTracker::new(&seeds, &s0.u, 0.0).map_err(runtime)?)
    } else {
        None
    };
    let mut drift = Drift::new(&s0)?;
    let mut blocks = Vec::new();
    let block = |s: &SimState| {
        s.markers.as_ref().map(|m| MarkerBlock {
            t: s.t,
            markers: m.markers().to_vec(),
        })
    };
    blocks.extend(block(&s0));

    let steps = cfg.steps();
    let mut s = s0.clone();
    for k in 1..=steps {
        let next = match step(&s, cfg) {
            Ok(n) if all_finite(&n) => n,
            Ok(_) => {
                return Err(checkpoint_failure(
                    dir,
                    &s,
                    format!("non-finite fields at step {k}"),
                ))
            }
            Err(e) => return Err(checkpoint_failure(dir, &s, format!("step {k}: {e}"))),
        };
        if let Some(f) = &mut flow {
            f.advance(&s.u, &next.u, next.t - s.t);
        }
        let pushed = recorder
            .push(&next)
            .map_err(|e| e.to_string())
            .and_then(|_| drift.push(&next).map_err(|e| e.to_string()));
        if let Err(e) = pushed {
            return Err(checkpoint_failure(dir, &next, e));
        }
        if k % sc.output_every == 0 || k == steps {
            blocks.extend(block(&next));
        }
        s = next;
    }
    let last = s;
    let post = |e: patchflow::Error| checkpoint_failure(dir, &last, e.to_string());

    let (rows, a_functionals) = recorder.finish();
    let written: Vec<_> = rows
        .iter()
        .enumerate()
        .filter(|(k, _)| k % sc.output_every == 0 || *k == rows.len() - 1)
        .map(|(_, r)| r.clone())
        .collect();
    let mut outputs = vec!["diagnostics.csv".to_string()];
    write_diagnostics_csv(&dir.join("diagnostics.csv"), &written).map_err(post)?;
    if cfg.patch.is_some() {
        save_marker_csv(&dir.join("markers.csv"), &blocks).map_err(post)?;
        outputs.push("markers.csv".into());
    }

    let mut invariants = BTreeMap::new();
    invariants.insert(
        "mass_drift_rate".to_string(),
        Check::at_most(drift.mass, MASS_DRIFT_LIMIT),
    );
    invariants.insert(
        "momentum_drift_rate".to_string(),
        Check::at_most(drift.momentum, MOMENTUM_DRIFT_LIMIT),
    );
    if cfg.patch.is_some() {
        invariants.insert(
            "area_drift_rate".to_string(),
            Check::at_most(drift.area, AREA_DRIFT_LIMIT),
        );
    }
    let finite = rows.iter().all(|r| {
        [
            r.t,
            r.energy,
            r.momentum[0],
            r.momentum[1],
            r.support_excess,
            r.u_minus_m_l2,
            r.linf_grad,
            r.l_inf,
        ]
        .iter()
        .chain(&r.a)
        .chain(&r.led)
        .all(|v| v.is_finite())
    });
    invariants.insert(
        "finite".to_string(),
        Check::at_least(f64::from(u8::from(finite)), 1.0),
    );

    // Galilean identities at the final slice, in the frame of the initial mean velocity.
    let m = momentum(&s0.rho, &s0.u).map_err(post)?;
    let frame = galilean_shift(&last, m);
    let mass = last.mass();
    let p = last.momentum().map_err(post)?;
    let pm = frame.momentum().map_err(post)?;
    let expect_p = [p[0] - m[0] * mass, p[1] - m[1] * mass];
    let momentum_identity_error = (pm[0] - expect_p[0]).hypot(pm[1] - expect_p[1]) / drift.scale;
    let e_lab = patchflow::solver::kinetic_energy(&last.rho, &last.u).map_err(post)?;
    let m2 = m[0] * m[0] + m[1] * m[1];
    let expect_e = 2.0 * e_lab - 2.0 * (m[0] * p[0] + m[1] * p[1]) + m2 * mass;
    let e_frame = frame.energy().map_err(post)?;
    let energy_identity_error =
        (e_frame - expect_e).abs() / (2.0 * e_lab + m2 * mass).max(f64::MIN_POSITIVE);
    invariants.insert(
        "galilean_momentum".to_string(),
        Check::at_most(momentum_identity_error, GALILEAN_LIMIT),
    );
    let mut soft = BTreeMap::new();
    soft.insert(
        "galilean_energy".to_string(),
        Check::at_most(energy_identity_error, GALILEAN_ENERGY_LIMIT),
    );
    let galilean = GalileanReport {
        m,
        momentum_identity_error,
        energy_identity_error,
    };

    let decay = match (
        &cfg.patch,
        sc.experiment(|e| match e {
            Experiment::DecayFit { window, min_ratio } => Some((*window, *min_ratio)),
            _ => None,
        }),
    ) {
        (Some(patch), Some((w, min_ratio))) => {
            let series: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.u_minus_m_l2)).collect();
            let window = (w.0 * cfg.t_final, w.1 * cfg.t_final);
            match decay_fit(&series, window, 1e-12) {
                Ok(fit) => {
                    let cd = fine_poincare_constant(patch).map_err(post)?;
                    let l_infty = last.ledger.distortion();
                    let lp = lambda_bound(cfg.nu, cd, l_infty);
                    // A series already at the floor has nothing to fit.
                    if !fit.below_floor {
                        soft.insert(
                            "lambda_fit_over_lambda_bound".to_string(),
                            Check::at_least(fit.lambda_fit / lp, min_ratio),
                        );
                    }
                    Some(DecayReport {
                        window,
                        lambda_fit: fit.lambda_fit,
                        below_floor: fit.below_floor,
                        poincare_constant: cd,
                        l_infty,
                        lambda_bound: lp,
                    })
                }
                Err(_) => None,
            }
        }
        _ => None,
    };

    let exact_solution = match exact_family(sc) {
        Some(a) => {
            let k = 2.0 * PI / cfg.grid.box_length();
            let exact_rate = 2.0 * cfg.nu * k * k;
            let exact = VelocitySpec::TaylorGreen {
                amplitude: a * (-exact_rate * last.t).exp(),
            }
            .build(&cfg.grid)
            .map_err(post)?;
            let d = last.u.sub(&exact).map_err(post)?;
            let rel = (d.dot(&d).map_err(post)? / exact.dot(&exact).map_err(post)?).sqrt();
            let n0 = s0.u.dot(&s0.u).map_err(post)?.sqrt();
            let n1 = last.u.dot(&last.u).map_err(post)?.sqrt();
            let rate = -(n1 / n0).ln() / last.t;
            let err = (rate - exact_rate).abs();
            soft.insert(
                "taylor_green_decay_rate_error".to_string(),
                Check::at_most(err, TAYLOR_GREEN_RATE_LIMIT),
            );
            Some(ExactReport {
                rel_l2_error: rel,
                decay_rate: rate,
                exact_rate,
                decay_rate_error: err,
            })
        }
        None => None,
    };

    let flow_map = match flow {
        Some(f) => {
            let fm = f.finish();
            write_trajectories_csv(&dir.join("trajectories.csv"), &fm.trajectories)
                .map_err(post)?;
            let map = asymptotic_map(&fm.trajectories, m).map_err(post)?;
            write_asymptotic_csv(&dir.join("asymptotic.csv"), &fm.trajectories, &map)
                .map_err(post)?;
            outputs.extend(["trajectories.csv".into(), "asymptotic.csv".into()]);
            soft.insert(
                "tracers_inside_margin".to_string(),
                Check::at_least(f64::from(u8::from(!fm.margin_exceeded)), 1.0),
            );
            Some(FlowReport {
                tracers,
                error_bar: map.error_bar,
                margin_exceeded: fm.margin_exceeded,
            })
        }
        None => None,
    };

    if let Some(eta) = sc.experiment(|e| match e {
        Experiment::Decomposition { eta } => Some(*eta),
        _ => None,
    }) {
        let mf = crate::tools::mean_free(&s0.u);
        let area = cfg
            .patch
            .as_ref()
            .map_or(cfg.grid.box_length().powi(2), |p| p.area());
        let dec = atomic_decompose(&mf, eta)
            .and_then(|d| d.with_momenta(&s0.rho, area))
            .map_err(post)?;
        fs::write(dir.join("decomposition.json"), dec.to_json().map_err(post)?).map_err(runtime)?;
        outputs.push("decomposition.json".into());
    }

    let stability = match sc.experiment(|e| match e {
        Experiment::Stability { amplitude } => Some(*amplitude),
        _ => None,
    }) {
        Some(a) => {
            let c = cfg.patch.as_ref().map_or([0.0, 0.0], |p| p.centroid());
            let delta = VelocitySpec::Dipole {
                center: c,
                sigma: 0.5,
                amplitude: a,
            }
            .build(&cfg.grid)
            .map_err(post)?;
            let r = stability_experiment(cfg, &delta).map_err(post)?;
            invariants.insert(
                "stability_runs_finished".to_string(),
                Check::at_least(f64::from(u8::from(!r.diverged)), 1.0),
            );
            Some(r)
        }
        None => None,
    };

    write_checkpoint(dir, "final", &last).map_err(post)?;
    outputs.extend(["final.pfld".into(), "initial.pfld".into()]);

    let report = LedgerReport {
        ledger: last.ledger,
        a_functionals,
        invariants,
        soft,
        galilean,
        decay_fit: decay,
        exact_solution,
        flow_map,
        stability,
    };
    let json = serde_json::to_string_pretty(&report).map_err(runtime)?;
    fs::write(dir.join("ledger.json"), json).map_err(runtime)?;
    outputs.push("ledger.json".into());

    let failures: Vec<String> = report
        .invariants
        .iter()
        .filter(|(_, c)| !c.passed)
        .map(|(k, c)| format!("{k}: {:e} exceeds limit {:e}", c.value, c.limit))
        .collect();
    if !failures.is_empty() {
        let body = serde_json::json!({
            "failures": failures,
            "invariants": report.invariants,
        });
        fs::write(
            dir.join("failures.json"),
            serde_json::to_string_pretty(&body).map_err(runtime)?,
        )
        .map_err(runtime)?;
        outputs.push("failures.json".into());
    }
    outputs.push("manifest.json".into());

    let manifest = Manifest {
        name: sc.name.clone(),
        config_sha256: sha256_hex(&text),
        effective_config: text,
        defaults: DEFAULTS
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect(),
        defaults_applied: parsed.defaulted.clone(),
        versions: BTreeMap::from([
            ("patchflow".to_string(), patchflow::VERSION.to_string()),
            (
                "patchflow-cli".to_string(),
                env!("CARGO_PKG_VERSION").to_string(),
            ),
        ]),
        threads: rayon::current_num_threads(),
        wall_seconds: started.elapsed().as_secs_f64(),
        exit_status: if failures.is_empty() { 0 } else { 2 },
        outputs,
        traceability: traceability(sc, cfg.patch.is_some(), tracers > 0),
    };
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).map_err(runtime)?,
    )
    .map_err(runtime)?;
    Ok(RunOutcome {
        output_dir: dir.clone(),
        failures,
        manifest,
    })
}
