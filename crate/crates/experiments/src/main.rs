use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kerrfilter::master::{stabilization_report, LossModel};
use kerrfilter::metrics::wigner_grid;
use kerrfilter_experiments::output::{read_density, write_wigner};
use kerrfilter_experiments::presets::{preset, PRESET_NAMES};
use kerrfilter_experiments::{resolve, run_to_dir, ExperimentError, ModelKind, Result};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "kfsim", version, about = "Kerr-cavity loss-engineering simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenarios given as preset names or paths to JSON documents.
    Run {
        #[arg(required = true)]
        scenarios: Vec<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Scenarios run concurrently; each scenario is single-threaded.
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        nmax: Option<usize>,
        #[arg(long)]
        record_every: Option<usize>,
        #[arg(long, value_enum)]
        model: Option<ModelKind>,
        #[arg(long)]
        steps: Option<usize>,
        /// Also write the final density matrix.
        #[arg(long)]
        save_state: bool,
    },
    ListPresets,
    /// Print a preset as a scenario document.
    DumpPreset { name: String },
    /// Photon numbers protected from loss for a scenario's parameters.
    StabilityReport {
        scenario: String,
        #[arg(long, default_value_t = 60)]
        n_range: usize,
    },
    /// Wigner function of a saved density matrix, as `x,p,w` rows.
    Wigner {
        rho: PathBuf,
        out: PathBuf,
        /// Half-width of the square phase-space window.
        #[arg(long, default_value_t = 5.0)]
        extent: f64,
        #[arg(long, default_value_t = 101)]
        resolution: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run {
            scenarios,
            out,
            threads,
            nmax,
            record_every,
            model,
            steps,
            save_state,
        } => {
            let mut prepared = Vec::with_capacity(scenarios.len());
            for reference in &scenarios {
                let mut s = resolve(reference)?;
                if let Some(n) = nmax {
                    s.n_max = Some(n);
                }
                if let Some(r) = record_every {
                    s.record_every = r;
                }
                if let Some(m) = model {
                    s.model = m;
                }
                if let Some(n) = steps {
                    s.n_steps = n;
                }
                prepared.push(s.validate()?);
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build()
                .map_err(|e| ExperimentError::Invalid {
                    field: "threads".into(),
                    reason: e.to_string(),
                })?;
            let results: Vec<Result<_>> =
                pool.install(|| prepared.par_iter().map(|p| run_to_dir(p, &out, save_state)).collect());
            for (p, r) in prepared.iter().zip(results) {
                let (run, written) = r?;
                println!("{}: {}", p.scenario.name, written.csv.display());
                for t in &run.summary.targets {
                    println!(
                        "  {}: peak F = {:.5} (sqrt F = {:.5}) at step {}",
                        t.label, t.peak_fidelity, t.peak_sqrt_fidelity, t.peak_step
                    );
                }
                if let Some(td) = run.summary.max_trace_distance {
                    println!("  max trace distance to initial state: {td:.5}");
                }
                if run.summary.leak_flagged {
                    println!("  warning: cutoff population reached {:.3e}", run.summary.max_edge_population);
                }
            }
            Ok(())
        }
        Command::ListPresets => {
            for name in PRESET_NAMES {
                println!("{name}");
            }
            Ok(())
        }
        Command::DumpPreset { name } => {
            let s = preset(&name).ok_or(ExperimentError::UnknownScenario(name))?;
            println!("{}", s.to_json());
            Ok(())
        }
        Command::StabilityReport { scenario, n_range } => {
            let p = resolve(&scenario)?.validate()?;
            let report = stabilization_report(&LossModel::new(p.params), n_range);
            println!("delta_n = {}", report.delta_n);
            println!("integer comb: {}", report.is_integer_comb);
            for (n0, m) in &report.n0_solutions {
                println!("protected n0 = {n0} (m = {m})");
            }
            Ok(())
        }
        Command::Wigner {
            rho,
            out,
            extent,
            resolution,
        } => {
            let state = read_density(&rho)?;
            let grid = wigner_grid(&state, (-extent, extent), (-extent, extent), resolution).map_err(|e| {
                ExperimentError::Invalid {
                    field: "wigner".into(),
                    reason: e.to_string(),
                }
            })?;
            write_wigner(&grid, &out)
        }
    }
}
