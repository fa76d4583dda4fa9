//! Scenario runner for the `kerrfilter` simulations.
//!
//! A scenario names a model, its parameters, an initial state, a duration
//! and the quantities to record. Runs produce a CSV time series and a JSON
//! companion file; see [`output`] for the formats.

pub mod error;
pub mod output;
pub mod presets;
pub mod runner;
pub mod scenario;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use error::{ExperimentError, Result};
pub use runner::{run_scenario, RunOutput, Summary};
pub use scenario::{load_scenario, ModelKind, Prepared, Scenario};

/// A preset name, or else a path to a scenario document.
pub fn resolve(reference: &str) -> Result<Scenario> {
    if let Some(s) = presets::preset(reference) {
        return Ok(s);
    }
    let path = Path::new(reference);
    if path.is_file() {
        load_scenario(path)
    } else {
        Err(ExperimentError::UnknownScenario(reference.to_string()))
    }
}

/// Files written for one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Written {
    pub csv: PathBuf,
    pub metadata: PathBuf,
    pub state: Option<PathBuf>,
}

/// Runs a validated scenario and writes `<name>.csv`, `<name>.json` and,
/// if asked, the final density matrix `<name>_rho.csv` into `out_dir`.
pub fn run_to_dir(p: &Prepared, out_dir: &Path, save_state: bool) -> Result<(RunOutput, Written)> {
    std::fs::create_dir_all(out_dir).map_err(|e| ExperimentError::io(out_dir, e))?;
    let start = Instant::now();
    let out = run_scenario(p)?;
    let elapsed = start.elapsed().as_secs_f64();
    let name = &p.scenario.name;
    let written = Written {
        csv: out_dir.join(format!("{name}.csv")),
        metadata: out_dir.join(format!("{name}.json")),
        state: save_state.then(|| out_dir.join(format!("{name}_rho.csv"))),
    };
    output::write_timeseries(&out.record, &written.csv)?;
    let meta = output::Metadata::new(&p.scenario, elapsed, out.summary.clone());
    output::write_metadata(&meta, &written.metadata)?;
    if let Some(path) = &written.state {
        output::write_density(&out.final_state, path)?;
    }
    Ok((out, written))
}
