//! The thirteen acceptance criteria. Each test writes its verdict line to
//! stdout directly so the lines show up without `--nocapture`.

use std::io::Write;
use std::sync::OnceLock;

use patchflow::experiments::{self, Outcome, RelaxationRun};

fn report(out: patchflow::Result<Outcome>) {
    let out = out.expect("experiment ran");
    let mut w = std::io::stdout().lock();
    writeln!(w, "\n{out}").unwrap();
    w.flush().unwrap();
    drop(w);
    assert!(out.passed, "{out}");
}

fn relaxation_run() -> &'static RelaxationRun {
    static RUN: OnceLock<RelaxationRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let cfg = RelaxationRun::default_config().unwrap();
        RelaxationRun::execute(&cfg).unwrap()
    })
}

#[test]
fn criterion_01_rigid_translation() {
    report(experiments::rigid_translation());
}

#[test]
fn criterion_02_taylor_green() {
    report(experiments::taylor_green());
}

#[test]
fn criterion_03_conservation() {
    report(experiments::conservation());
}

#[test]
fn criterion_04_support_growth() {
    report(experiments::support_growth());
}

#[test]
fn criterion_05_relaxation() {
    report(experiments::relaxation(relaxation_run()));
}

#[test]
fn criterion_06_dynamic_interpolation() {
    report(experiments::dynamic_interpolation());
}

#[test]
fn criterion_07_atomic_identities() {
    report(experiments::atomic_identities());
}

#[test]
fn criterion_08_linearized_gluing() {
    report(experiments::linearized_gluing());
}

#[test]
fn criterion_09_gn_refinement() {
    report(experiments::gn_refinement());
}

#[test]
fn criterion_10_stokeslet_tails() {
    report(experiments::stokeslet_tails());
}

#[test]
fn criterion_11_asymptotic_map() {
    report(experiments::asymptotic_map_run(relaxation_run()));
}

#[test]
fn criterion_12_stability() {
    report(experiments::stability());
}

#[test]
fn criterion_13_epsilon_convergence() {
    report(experiments::epsilon_convergence());
}
