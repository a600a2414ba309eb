//! Desk-scale verification experiments. Each function runs one scenario end
//! to end and reports its metrics together with a pass/fail verdict.

mod analysis;
mod dynamics;
mod regression;

pub use analysis::{
    atomic_identities, dynamic_interpolation, gn_refinement, linearized_gluing, stokeslet_tails,
};
pub use dynamics::{
    asymptotic_map_run, epsilon_convergence, relaxation, stability, support_growth, RelaxationRun,
};
pub use regression::{conservation, rigid_translation, taylor_green};

use std::fmt;
use std::time::Instant;

use serde::Serialize;

use crate::error::Result;

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub metrics: Vec<(String, f64)>,
    /// Checks that failed, by name.
    pub failures: Vec<String>,
    pub wall_seconds: f64,
    #[serde(skip)]
    started: Option<Instant>,
}

impl Outcome {
    pub(crate) fn start(id: u32, name: &'static str) -> Self {
        Self {
            id,
            name,
            passed: true,
            metrics: Vec::new(),
            failures: Vec::new(),
            wall_seconds: 0.0,
            started: Some(Instant::now()),
        }
    }

    pub(crate) fn metric(&mut self, key: impl Into<String>, value: f64) -> f64 {
        self.metrics.push((key.into(), value));
        value
    }

    /// Records `check`; a false or NaN condition fails the outcome.
    pub(crate) fn require(&mut self, check: &str, ok: bool) {
        if !ok {
            self.passed = false;
            self.failures.push(check.to_string());
        }
    }

    /// Records `value` under `key` and requires `ok(value)`.
    pub(crate) fn check(&mut self, check: &str, key: &str, value: f64, ok: impl Fn(f64) -> bool) {
        self.metric(key, value);
        self.require(check, ok(value));
    }

    pub(crate) fn done(mut self) -> Self {
        if let Some(t) = self.started.take() {
            self.wall_seconds = t.elapsed().as_secs_f64();
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} {:<24} {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" }
        )?;
        for (k, v) in &self.metrics {
            write!(f, " {k}={v:.4e}")?;
        }
        if !self.failures.is_empty() {
            write!(f, " failed=[{}]", self.failures.join(", "))?;
        }
        write!(f, " ({:.1}s)", self.wall_seconds)
    }
}

/// Every criterion in order. Criteria 5 and 11 share one relaxation run.
pub fn all() -> Result<Vec<Outcome>> {
    let relax = RelaxationRun::execute(&RelaxationRun::default_config()?)?;
    Ok(vec![
        rigid_translation()?,
        taylor_green()?,
        conservation()?,
        support_growth()?,
        relaxation(&relax)?,
        dynamic_interpolation()?,
        atomic_identities()?,
        linearized_gluing()?,
        gn_refinement()?,
        stokeslet_tails()?,
        asymptotic_map_run(&relax)?,
        stability()?,
        epsilon_convergence()?,
    ])
}
