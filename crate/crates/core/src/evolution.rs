//! Shared stepping loop for the three dissipation models.

use std::ops::ControlFlow;

use log::warn;

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, HilbertSpec};

/// One fixed-duration step of a dissipative evolution.
pub trait Propagator {
    fn dim(&self) -> usize;

    /// Time advanced by one call to [`Propagator::step`].
    fn step_duration(&self) -> f64;

    fn step(&self, rho: &DensityMatrix) -> DensityMatrix;
}

/// A recorded point of an evolution, handed to observers.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot<'a> {
    pub step: usize,
    pub time: f64,
    pub state: &'a DensityMatrix,
    pub edge_population: f64,
    /// `edge_population > leak_tol`.
    pub leaked: bool,
}

/// Runs `n_steps` steps of `prop` from `rho0`, calling `observer` at step 0
/// and after every `record_every` steps. Returns the number of steps taken,
/// which is smaller than `n_steps` only if the observer breaks.
pub fn run_observed<P, F>(
    prop: &P,
    rho0: &DensityMatrix,
    spec: &HilbertSpec,
    n_steps: usize,
    record_every: usize,
    mut observer: F,
) -> Result<usize>
where
    P: Propagator + ?Sized,
    F: FnMut(&Snapshot<'_>) -> ControlFlow<()>,
{
    spec.check_dim(rho0.dim())?;
    spec.check_dim(prop.dim())?;
    if record_every == 0 {
        return Err(Error::invalid("record_every", "must be at least 1"));
    }
    let dt = prop.step_duration();
    let mut warned = false;
    let mut emit = |step: usize, rho: &DensityMatrix| {
        let edge = rho.edge_population();
        let leaked = edge > spec.leak_tol();
        if leaked && !warned {
            warn!(
                "population {edge:.3e} at n_max = {} exceeds leak_tol {:.1e} at step {step}",
                spec.n_max(),
                spec.leak_tol()
            );
            warned = true;
        }
        observer(&Snapshot {
            step,
            time: step as f64 * dt,
            state: rho,
            edge_population: edge,
            leaked,
        })
    };

    if emit(0, rho0).is_break() {
        return Ok(0);
    }
    let mut rho = rho0.clone();
    for step in 1..=n_steps {
        rho = prop.step(&rho);
        if step % record_every == 0 && emit(step, &rho).is_break() {
            return Ok(step);
        }
    }
    Ok(n_steps)
}

/// Time-stamped states recorded along an evolution.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<DensityMatrix>,
    leak_flags: Vec<bool>,
}

impl Trajectory {
    /// Runs the evolution and keeps every recorded snapshot.
    pub fn collect<P: Propagator + ?Sized>(
        prop: &P,
        rho0: &DensityMatrix,
        spec: &HilbertSpec,
        n_steps: usize,
        record_every: usize,
    ) -> Result<Self> {
        let mut traj = Trajectory::default();
        run_observed(prop, rho0, spec, n_steps, record_every, |snap| {
            traj.push(snap.time, snap.state.clone(), snap.leaked);
            ControlFlow::Continue(())
        })?;
        Ok(traj)
    }

    fn push(&mut self, time: f64, state: DensityMatrix, leaked: bool) {
        debug_assert!(self.times.last().map_or(true, |&t| time > t));
        self.times.push(time);
        self.states.push(state);
        self.leak_flags.push(leaked);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn leak_flags(&self) -> &[bool] {
        &self.leak_flags
    }

    pub fn last(&self) -> Option<&DensityMatrix> {
        self.states.last()
    }

    pub fn any_leak(&self) -> bool {
        self.leak_flags.iter().any(|&f| f)
    }
}
