//! Executes a prepared scenario and condenses it into a time series and a
//! summary.

use std::ops::ControlFlow;

use kerrfilter::channel::{ExactChannel, UpdateRule};
use kerrfilter::evolution::run_observed;
use kerrfilter::master::{LossModel, MasterIntegrator};
use kerrfilter::metrics::{
    amplitude_fidelity, best_squeezed_vacuum_fidelity, coherence_sum, comb_coherence_sum,
    comb_weight, fidelity_pure, fidelity_rotation_optimized, parity, trace_distance,
};
use kerrfilter::states::{self, CatSpec};
use kerrfilter::{DensityMatrix, Propagator, StateVector};
use log::info;
use serde::{Deserialize, Serialize};

use crate::error::{ExperimentError, Result};
use crate::output::TimeSeriesRecord;
use crate::scenario::{ModelKind, Output, Prepared, StateDesc};

/// Edge population, in units of `leak_tol`, at which a run is abandoned.
pub const LEAK_ABORT_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSummary {
    pub label: String,
    pub rotation_optimized: bool,
    /// Number of Kerr-period samples the fidelity was evaluated at.
    pub samples: usize,
    pub peak_fidelity: f64,
    pub peak_sqrt_fidelity: f64,
    pub peak_step: usize,
    /// Frame rotation at the peak; zero unless rotation-optimized.
    pub peak_theta: f64,
    pub final_third_peak_fidelity: f64,
    pub final_third_peak_step: usize,
    pub final_fidelity: f64,
}

/// Fidelity against rescaled copies of the first target, evaluated at the
/// state where that target peaked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeScan {
    pub target: String,
    pub best_scale: f64,
    pub best_fidelity: f64,
    pub best_sqrt_fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub model: ModelKind,
    pub n_max: usize,
    pub steps: usize,
    /// Kerr recurrence in steps; `None` without Kerr or delay.
    pub kerr_period_steps: Option<f64>,
    pub max_edge_population: f64,
    pub leak_tol: f64,
    /// Edge population exceeded `leak_tol` at some recorded step.
    pub leak_flagged: bool,
    pub max_trace_distance: Option<f64>,
    pub final_trace: f64,
    pub targets: Vec<TargetSummary>,
    pub amplitude_scan: Option<AmplitudeScan>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: TimeSeriesRecord,
    pub summary: Summary,
    pub final_state: DensityMatrix,
}

pub fn propagator(p: &Prepared) -> Result<Box<dyn Propagator + Send + Sync>> {
    Ok(match p.scenario.model {
        ModelKind::ExactMzi => Box::new(ExactChannel::new(&p.params, &p.spec)),
        ModelKind::UpdateRule => Box::new(UpdateRule::new(&p.params, &p.spec)),
        ModelKind::Continuous => {
            let substeps = p.substeps.ok_or_else(|| ExperimentError::Invalid {
                field: "dt_over_tau".into(),
                reason: "required by the eq2_master model".into(),
            })?;
            Box::new(MasterIntegrator::per_tau(&LossModel::new(p.params), &p.spec, substeps)?)
        }
    })
}

/// Kerr recurrence in units of `tau`.
fn kerr_period_steps(p: &Prepared) -> Option<f64> {
    let k = p.params.cavity().kerr_period() / p.params.tau();
    k.is_finite().then_some(k)
}

/// Whether `step` is the step nearest to a whole number of Kerr periods.
fn is_kerr_sample(step: usize, period: Option<f64>) -> bool {
    match period {
        None => true,
        Some(k) => {
            let j = (step as f64 / k).round();
            (j * k).round() as usize == step
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn observation_interval(p: &Prepared, period: Option<f64>) -> usize {
    let every = p.scenario.record_every;
    if p.targets.is_empty() {
        return every;
    }
    match period {
        None => every,
        Some(k) if (k - k.round()).abs() < 1e-9 * k.max(1.0) && k.round() >= 1.0 => {
            gcd(every, k.round() as usize)
        }
        Some(_) => 1,
    }
}

pub fn columns(p: &Prepared) -> Vec<String> {
    let mut cols = vec!["t".to_string(), "t_over_tau".to_string()];
    for out in &p.outputs {
        match *out {
            Output::Populations => cols.extend((0..p.spec.dim()).map(|n| format!("p_{n}"))),
            Output::Coherence { k } => cols.push(format!("coh_{k}")),
            Output::CombCoherence { k, delta_n, offset } => {
                cols.push(format!("combcoh_{k}_{delta_n}_{offset}"))
            }
            Output::CombWeight { delta_n, offset } => cols.push(format!("comb_{delta_n}_{offset}")),
            Output::Parity => cols.push("parity".into()),
            Output::TraceDistance => cols.push("trace_distance".into()),
            Output::SqueezedFit => cols.push("squeezed_fit".into()),
        }
    }
    for (t, _) in &p.targets {
        cols.push(format!("fid_{}", t.label));
        cols.push(format!("sqrtfid_{}", t.label));
        if t.rotation_optimized {
            cols.push(format!("theta_{}", t.label));
        }
    }
    cols.push("leak".into());
    cols
}

fn output_values(out: &Output, rho: &DensityMatrix, initial: &DensityMatrix, row: &mut Vec<Option<f64>>) -> Result<()> {
    match *out {
        Output::Populations => row.extend(rho.populations().into_iter().map(Some)),
        Output::Coherence { k } => row.push(Some(coherence_sum(rho, k)?)),
        Output::CombCoherence { k, delta_n, offset } => {
            row.push(Some(comb_coherence_sum(rho, k, delta_n, offset)?))
        }
        Output::CombWeight { delta_n, offset } => row.push(Some(comb_weight(rho, delta_n, offset)?)),
        Output::Parity => row.push(Some(parity(rho))),
        Output::TraceDistance => row.push(Some(trace_distance(rho, initial)?)),
        Output::SqueezedFit => row.push(Some(best_squeezed_vacuum_fidelity(rho)?.fidelity)),
    }
    Ok(())
}

fn target_fidelity(rho: &DensityMatrix, target: &StateVector, rotate: bool) -> Result<(f64, f64)> {
    Ok(if rotate {
        fidelity_rotation_optimized(rho, target)?
    } else {
        (fidelity_pure(rho, target)?, 0.0)
    })
}

struct Tracker {
    summary: TargetSummary,
    peak_state: Option<DensityMatrix>,
}

impl Tracker {
    fn new(label: &str, rotate: bool) -> Self {
        Tracker {
            summary: TargetSummary {
                label: label.to_string(),
                rotation_optimized: rotate,
                samples: 0,
                peak_fidelity: f64::NEG_INFINITY,
                peak_sqrt_fidelity: 0.0,
                peak_step: 0,
                peak_theta: 0.0,
                final_third_peak_fidelity: f64::NEG_INFINITY,
                final_third_peak_step: 0,
                final_fidelity: f64::NAN,
            },
            peak_state: None,
        }
    }

    fn observe(&mut self, step: usize, final_third_from: usize, f: f64, theta: f64, rho: &DensityMatrix, keep: bool) {
        let s = &mut self.summary;
        s.samples += 1;
        s.final_fidelity = f;
        if f > s.peak_fidelity {
            s.peak_fidelity = f;
            s.peak_sqrt_fidelity = amplitude_fidelity(f);
            s.peak_step = step;
            s.peak_theta = theta;
            if keep {
                self.peak_state = Some(rho.clone());
            }
        }
        if step >= final_third_from && f > s.final_third_peak_fidelity {
            s.final_third_peak_fidelity = f;
            s.final_third_peak_step = step;
        }
    }
}

const SCAN_RANGE: (f64, f64) = (0.80, 1.05);
const SCAN_STEP: f64 = 0.005;

fn amplitude_scan(p: &Prepared, tracker: &Tracker) -> Result<Option<AmplitudeScan>> {
    let Some((desc, _)) = p.targets.first() else {
        return Ok(None);
    };
    let (StateDesc::Cat { alpha, legs }, Some(rho)) = (desc.state, tracker.peak_state.as_ref()) else {
        return Ok(None);
    };
    let n = ((SCAN_RANGE.1 - SCAN_RANGE.0) / SCAN_STEP).round() as usize;
    let mut best = (f64::NEG_INFINITY, 1.0);
    for i in 0..=n {
        let scale = SCAN_RANGE.0 + i as f64 * SCAN_STEP;
        let target = states::cat(&CatSpec::new(alpha.value() * scale, legs)?, &p.spec)?;
        let (f, _) = target_fidelity(rho, &target, desc.rotation_optimized)?;
        if f > best.0 {
            best = (f, scale);
        }
    }
    Ok(Some(AmplitudeScan {
        target: desc.label.clone(),
        best_scale: best.1,
        best_fidelity: best.0,
        best_sqrt_fidelity: amplitude_fidelity(best.0),
    }))
}

/// Runs the scenario. Rows are written every `record_every` steps; target
/// fidelities are evaluated only at whole Kerr periods and left blank in
/// other rows.
pub fn run_scenario(p: &Prepared) -> Result<RunOutput> {
    let prop = propagator(p)?;
    run_with(p, prop.as_ref())
}

pub fn run_with(p: &Prepared, prop: &(dyn Propagator + Send + Sync)) -> Result<RunOutput> {
    let s = &p.scenario;
    let tau = p.params.tau();
    let period = kerr_period_steps(p);
    let interval = observation_interval(p, period);
    let final_third_from = (2 * s.n_steps).div_ceil(3);
    let leak_limit = LEAK_ABORT_FACTOR * p.spec.leak_tol();
    let mut record = TimeSeriesRecord::new(columns(p));
    let mut trackers: Vec<Tracker> = p
        .targets
        .iter()
        .map(|(t, _)| Tracker::new(&t.label, t.rotation_optimized))
        .collect();
    let mut max_edge: f64 = 0.0;
    let mut flagged = false;
    let mut max_td: Option<f64> = None;
    let mut failure: Option<ExperimentError> = None;
    let mut last = (0, p.initial.clone());
    let log_every = (s.n_steps / 10).max(1);
    let mut next_log = log_every;

    let mut observe = |step: usize, rho: &DensityMatrix, edge: f64, leaked: bool| -> Result<()> {
        max_edge = max_edge.max(edge);
        flagged |= leaked;
        if edge > leak_limit {
            return Err(ExperimentError::LeakExceeded {
                step,
                edge,
                limit: leak_limit,
            });
        }
        let sample = !p.targets.is_empty() && is_kerr_sample(step, period);
        let mut fids = Vec::with_capacity(p.targets.len());
        if sample {
            for (i, (desc, psi)) in p.targets.iter().enumerate() {
                let (f, theta) = target_fidelity(rho, psi, desc.rotation_optimized)?;
                trackers[i].observe(step, final_third_from, f, theta, rho, i == 0);
                fids.push((f, theta));
            }
        }
        if step % s.record_every == 0 {
            let mut row = Vec::with_capacity(record.columns().len());
            row.push(Some(step as f64 * tau));
            row.push(Some(step as f64));
            for out in &p.outputs {
                output_values(out, rho, &p.initial, &mut row)?;
                if *out == Output::TraceDistance {
                    let td = row.last().copied().flatten().unwrap_or(0.0);
                    max_td = Some(max_td.map_or(td, |m: f64| m.max(td)));
                }
            }
            for (i, (desc, _)) in p.targets.iter().enumerate() {
                match fids.get(i) {
                    Some(&(f, theta)) => {
                        row.push(Some(f));
                        row.push(Some(amplitude_fidelity(f)));
                        if desc.rotation_optimized {
                            row.push(Some(theta));
                        }
                    }
                    None => {
                        let blanks = if desc.rotation_optimized { 3 } else { 2 };
                        row.extend(std::iter::repeat_n(None, blanks));
                    }
                }
            }
            row.push(Some(edge));
            record.push(row);
        }
        Ok(())
    };

    let taken = run_observed(prop, &p.initial, &p.spec, s.n_steps, interval, |snap| {
        if snap.step >= next_log {
            info!("{}: step {}/{}", s.name, snap.step, s.n_steps);
            next_log += log_every;
        }
        match observe(snap.step, snap.state, snap.edge_population, snap.leaked) {
            Ok(()) => {
                last = (snap.step, snap.state.clone());
                ControlFlow::Continue(())
            }
            Err(e) => {
                failure = Some(e);
                ControlFlow::Break(())
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    debug_assert_eq!(taken, s.n_steps);
    // The final state is not observed when n_steps is not a multiple of the
    // observation interval.
    let last = advance(prop, &last.1, s.n_steps - last.0);

    let amplitude_scan = match trackers.first() {
        Some(t) => amplitude_scan(p, t)?,
        None => None,
    };
    let targets = trackers
        .into_iter()
        .map(|mut t| {
            if t.summary.samples == 0 {
                t.summary.peak_fidelity = f64::NAN;
                t.summary.final_third_peak_fidelity = f64::NAN;
                t.summary.peak_sqrt_fidelity = f64::NAN;
            }
            if t.summary.final_third_peak_fidelity == f64::NEG_INFINITY {
                t.summary.final_third_peak_fidelity = f64::NAN;
            }
            t.summary
        })
        .collect();
    let summary = Summary {
        model: s.model,
        n_max: p.spec.n_max(),
        steps: s.n_steps,
        kerr_period_steps: period,
        max_edge_population: max_edge,
        leak_tol: p.spec.leak_tol(),
        leak_flagged: flagged,
        max_trace_distance: max_td,
        final_trace: last.trace(),
        targets,
        amplitude_scan,
    };
    Ok(RunOutput {
        record,
        summary,
        final_state: last,
    })
}

fn advance(prop: &(dyn Propagator + Send + Sync), rho: &DensityMatrix, steps: usize) -> DensityMatrix {
    (0..steps).fold(rho.clone(), |r, _| prop.step(&r))
}
