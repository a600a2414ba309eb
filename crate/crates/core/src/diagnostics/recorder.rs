use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{momentum, patch_mask, u_minus_m_l2, udot_integrands};
use crate::error::{Error, Result};
use crate::fields::ops::grad_l2_sq;
use crate::patch::Patch;
use crate::solver::{AFunctionalTracker, AFunctionals, SimState, Slice};
use crate::transport::SupportProbe;

pub const DIAGNOSTICS_HEADER: &str =
    "t,E,Mx,My,supp_excess,u_minus_M_l2,linf_grad,L_inf,A0,A1,A2,A3,led1,led2,led3,led4";

/// One output time. `a` and `led[1..]` depend on `u̇` and lag one slice;
/// the final row carries the last available values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub energy: f64,
    pub momentum: [f64; 2],
    pub support_excess: f64,
    pub u_minus_m_l2: f64,
    pub linf_grad: f64,
    pub l_inf: f64,
    pub a: [f64; 4],
    pub led: [f64; 4],
    /// `√t ‖∇u‖₂`, not written to CSV.
    #[serde(skip)]
    pub sqrt_t_grad: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecorderOptions {
    pub eta: f64,
    /// Level of `ρ − ε` defining the transported support.
    pub support_threshold: f64,
}

impl Default for RecorderOptions {
    fn default() -> Self {
        Self {
            eta: 0.25,
            support_threshold: 0.5,
        }
    }
}

/// Streams [`DiagnosticsRow`]s from consecutive solver states.
pub struct Recorder {
    opts: RecorderOptions,
    epsilon: f64,
    probe: Option<SupportProbe>,
    tracker: AFunctionalTracker,
    acc: [f64; 3],
    prev: Option<(f64, [f64; 3])>,
    rows: Vec<DiagnosticsRow>,
}

impl Recorder {
    /// `reference` is the initial patch for the support monitor and `epsilon`
    /// the vacuum lift subtracted before thresholding.
    pub fn new(
        reference: Option<&Patch>,
        grid: &crate::fields::Grid,
        epsilon: f64,
        opts: RecorderOptions,
    ) -> Result<Self> {
        if !(opts.support_threshold > 0.0 && opts.support_threshold <= 0.5) {
            return Err(Error::InvalidParameter(format!(
                "support threshold must lie in (0, 1/2], got {}",
                opts.support_threshold
            )));
        }
        Ok(Self {
            opts,
            epsilon,
            probe: reference.map(|p| SupportProbe::new(p, grid)),
            tracker: AFunctionalTracker::new(opts.eta)?,
            acc: [0.0; 3],
            prev: None,
            rows: Vec::new(),
        })
    }

    pub fn push(&mut self, s: &SimState) -> Result<()> {
        let m = momentum(&s.rho, &s.u)?;
        let region = match &s.markers {
            Some(p) => Some(patch_mask(p, s.grid())?),
            None => None,
        };
        let support_excess = match &self.probe {
            Some(probe) => {
                let eps = self.epsilon;
                probe.excess(&s.rho.map(|r| r - eps), self.opts.support_threshold)?
            }
            None => 0.0,
        };
        let carried = self.rows.last().map_or([0.0; 4], |r| r.led);
        self.rows.push(DiagnosticsRow {
            t: s.t,
            energy: s.ledger.energy,
            momentum: m,
            support_excess,
            u_minus_m_l2: u_minus_m_l2(&s.u, m, region.as_ref())?,
            linf_grad: s.ledger.grad_inf,
            l_inf: s.ledger.distortion(),
            a: self.tracker.values(),
            led: [
                s.ledger.linf_grad_integral,
                carried[1],
                carried[2],
                carried[3],
            ],
            sqrt_t_grad: s.t.sqrt() * grad_l2_sq(&s.u)?.sqrt(),
        });
        let Some(ms) = self.tracker.push(Slice::of(s))? else {
            let a = self.tracker.values();
            self.rows.last_mut().expect("row just pushed").a = a;
            return Ok(());
        };
        let f = udot_integrands(ms.slice.t, &ms.slice.rho, &ms.udot)?;
        if let Some((t0, f0)) = self.prev {
            for c in 0..3 {
                self.acc[c] += 0.5 * (ms.slice.t - t0) * (f0[c] + f[c]);
            }
        }
        self.prev = Some((ms.slice.t, f));
        let a = self.tracker.values();
        let acc = self.acc;
        let k = self.rows.len() - 2;
        for row in &mut self.rows[k..] {
            row.a = a;
            row.led[1..].copy_from_slice(&acc);
        }
        Ok(())
    }

    pub fn rows(&self) -> &[DiagnosticsRow] {
        &self.rows
    }

    pub fn finish(self) -> (Vec<DiagnosticsRow>, AFunctionals) {
        (self.rows, self.tracker.finish())
    }
}

pub fn write_diagnostics_csv(path: &Path, rows: &[DiagnosticsRow]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{DIAGNOSTICS_HEADER}")?;
    for r in rows {
        write!(
            w,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            r.t,
            r.energy,
            r.momentum[0],
            r.momentum[1],
            r.support_excess,
            r.u_minus_m_l2,
            r.linf_grad,
            r.l_inf
        )?;
        for v in r.a.iter().chain(&r.led) {
            write!(w, ",{v:.17e}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}
