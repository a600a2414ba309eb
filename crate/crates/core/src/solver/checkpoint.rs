use std::fs;
use std::path::{Path, PathBuf};

use super::state::SimState;
use crate::error::Result;
use crate::fields::Snapshot;
use crate::patch::{save_marker_csv, MarkerBlock};

/// Paths written by [`write_checkpoint`].
#[derive(Clone, Debug)]
pub struct CheckpointFiles {
    pub fields: PathBuf,
    pub markers: Option<PathBuf>,
    pub ledger: PathBuf,
}

/// `<stem>.pfld` (ρ, u, v, P), `<stem>_markers.csv` and `<stem>_ledger.json`.
pub fn write_checkpoint(dir: &Path, stem: &str, state: &SimState) -> Result<CheckpointFiles> {
    fs::create_dir_all(dir)?;
    let fields = dir.join(format!("{stem}.pfld"));
    Snapshot {
        grid: *state.grid(),
        t: state.t,
        components: vec![
            state.rho.values().to_vec(),
            state.u.x().to_vec(),
            state.u.y().to_vec(),
            state.p.values().to_vec(),
        ],
    }
    .save(&fields)?;
    let markers = match &state.markers {
        Some(m) => {
            let path = dir.join(format!("{stem}_markers.csv"));
            save_marker_csv(
                &path,
                &[MarkerBlock {
                    t: state.t,
                    markers: m.markers().to_vec(),
                }],
            )?;
            Some(path)
        }
        None => None,
    };
    let ledger = dir.join(format!("{stem}_ledger.json"));
    fs::write(&ledger, serde_json::to_string_pretty(&state.ledger)?)?;
    Ok(CheckpointFiles {
        fields,
        markers,
        ledger,
    })
}
