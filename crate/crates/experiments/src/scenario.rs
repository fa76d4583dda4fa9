//! Scenario documents: what to simulate, for how long, and what to record.

use std::collections::BTreeMap;
use std::path::Path;

use kerrfilter::channel::MziParams;
use kerrfilter::fock::default_cutoff;
use kerrfilter::master::MasterIntegrator;
use kerrfilter::states::{self, CatSpec, SqueezeParam};
use kerrfilter::{CavityParams, DensityMatrix, HilbertSpec, StateVector, C64};
use serde::{Deserialize, Serialize};

use crate::error::{ExperimentError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ModelKind {
    ExactMzi,
    /// Element-wise small-`chi` update.
    #[serde(rename = "eq1_update")]
    #[value(name = "eq1_update")]
    UpdateRule,
    /// Continuous-time master equation.
    #[serde(rename = "eq2_master")]
    #[value(name = "eq2_master")]
    Continuous,
}

/// A complex number written either as a real number or as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexValue {
    pub fn value(self) -> C64 {
        match self {
            ComplexValue::Real(re) => C64::new(re, 0.0),
            ComplexValue::Pair([re, im]) => C64::new(re, im),
        }
    }
}

impl From<f64> for ComplexValue {
    fn from(re: f64) -> Self {
        ComplexValue::Real(re)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateDesc {
    Coherent { alpha: ComplexValue },
    Cat { alpha: ComplexValue, legs: usize },
    ICat { alpha: ComplexValue },
    SqueezedVacuum { z: ComplexValue },
    DisplacedSqueezed { alpha: ComplexValue, z: ComplexValue },
    PhaseState { n: usize },
    Fock { n: usize },
    MixedCoherent { alpha: ComplexValue },
}

impl StateDesc {
    /// Amplitude governing the default cutoff, for coherent-family states.
    fn coherent_amplitude(&self) -> Option<f64> {
        match *self {
            StateDesc::Coherent { alpha }
            | StateDesc::Cat { alpha, .. }
            | StateDesc::ICat { alpha }
            | StateDesc::MixedCoherent { alpha }
            | StateDesc::DisplacedSqueezed { alpha, .. } => Some(alpha.value().norm()),
            _ => None,
        }
    }

    pub fn pure(&self, spec: &HilbertSpec) -> kerrfilter::Result<Option<StateVector>> {
        let sq = |z: ComplexValue| SqueezeParam::new(z.value());
        Ok(Some(match *self {
            StateDesc::Coherent { alpha } => states::coherent(alpha.value(), spec)?,
            StateDesc::Cat { alpha, legs } => states::cat(&CatSpec::new(alpha.value(), legs)?, spec)?,
            StateDesc::ICat { alpha } => states::i_cat(alpha.value(), spec)?,
            StateDesc::SqueezedVacuum { z } => states::squeezed_vacuum(sq(z)?, spec)?,
            StateDesc::DisplacedSqueezed { alpha, z } => {
                states::displaced_squeezed(alpha.value(), sq(z)?, spec)?
            }
            StateDesc::PhaseState { n } => states::phase_state(n, spec)?,
            StateDesc::Fock { n } => states::fock(n, spec)?,
            StateDesc::MixedCoherent { .. } => return Ok(None),
        }))
    }

    pub fn density(&self, spec: &HilbertSpec) -> kerrfilter::Result<DensityMatrix> {
        match *self {
            StateDesc::MixedCoherent { alpha } => states::mixed_coherent(alpha.value(), spec),
            _ => Ok(self.pure(spec)?.expect("pure state").density()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsDesc {
    #[serde(default = "unit")]
    pub omega_a: f64,
    pub beta: f64,
    pub chi: f64,
    /// Interaction time in units of `pi / omega_a`.
    pub tau_over_pi: f64,
}

fn unit() -> f64 {
    1.0
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetDesc {
    pub label: String,
    pub state: StateDesc,
    #[serde(default)]
    pub rotation_optimized: bool,
}

/// A scenario as written in a document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub model: ModelKind,
    pub params: ParamsDesc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leak_tol: Option<f64>,
    pub initial: StateDesc,
    /// Number of interferometer units, i.e. duration in units of `tau`.
    pub n_steps: usize,
    /// Integration step of the continuous model, in units of `tau`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_over_tau: Option<f64>,
    #[serde(default = "one")]
    pub record_every: usize,
    #[serde(default)]
    pub targets: Vec<TargetDesc>,
    #[serde(default)]
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, String>,
}

/// A recorded observable other than target fidelities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Output {
    Populations,
    Coherence { k: usize },
    CombCoherence { k: usize, delta_n: usize, offset: usize },
    CombWeight { delta_n: usize, offset: usize },
    Parity,
    TraceDistance,
    SqueezedFit,
}

impl Output {
    pub fn parse(text: &str) -> Option<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let num = |i: usize| parts.get(i).and_then(|p| p.parse::<usize>().ok());
        Some(match (parts[0], parts.len()) {
            ("populations", 1) => Output::Populations,
            ("parity", 1) => Output::Parity,
            ("trace_distance", 1) => Output::TraceDistance,
            ("squeezed_fit", 1) => Output::SqueezedFit,
            ("coherence", 2) => Output::Coherence { k: num(1)? },
            ("comb_coherence", 4) => Output::CombCoherence {
                k: num(1)?,
                delta_n: num(2).filter(|&d| d > 0)?,
                offset: num(3)?,
            },
            ("comb_weight", 3) => Output::CombWeight {
                delta_n: num(1).filter(|&d| d > 0)?,
                offset: num(2)?,
            },
            _ => return None,
        })
    }
}

/// A validated scenario with every referenced object constructed.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub scenario: Scenario,
    pub spec: HilbertSpec,
    pub params: MziParams,
    pub initial: DensityMatrix,
    pub targets: Vec<(TargetDesc, StateVector)>,
    pub outputs: Vec<Output>,
    /// Integration steps per `tau` for the continuous model.
    pub substeps: Option<usize>,
}

fn invalid(field: impl Into<String>, reason: impl ToString) -> ExperimentError {
    ExperimentError::Invalid {
        field: field.into(),
        reason: reason.to_string(),
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| ExperimentError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn effective_n_max(&self) -> Result<usize> {
        match (self.n_max, self.initial.coherent_amplitude()) {
            (Some(n), _) => Ok(n),
            (None, Some(a)) => Ok(default_cutoff(a)),
            (None, None) => Err(invalid("n_max", "required when the initial state is not coherent-like")),
        }
    }

    pub fn validate(&self) -> Result<Prepared> {
        if self.name.trim().is_empty() {
            return Err(invalid("name", "must not be empty"));
        }
        let p = &self.params;
        let cavity = CavityParams::new(p.omega_a, p.beta).map_err(|e| core_field(e, "params"))?;
        let params = MziParams::from_tau_over_pi(cavity, p.chi, p.tau_over_pi)
            .map_err(|e| core_field(e, "params"))?;
        let n_max = self.effective_n_max()?;
        let spec = match self.leak_tol {
            Some(tol) => HilbertSpec::with_leak_tol(n_max, tol),
            None => HilbertSpec::new(n_max),
        }
        .map_err(|e| core_field(e, "n_max"))?;
        if self.record_every == 0 {
            return Err(invalid("record_every", "must be at least 1"));
        }
        let initial = self.initial.density(&spec).map_err(|e| core_field(e, "initial"))?;

        let mut targets = Vec::with_capacity(self.targets.len());
        for (i, t) in self.targets.iter().enumerate() {
            let field = format!("targets[{i}]");
            if t.label.is_empty() || !t.label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
                return Err(invalid(field, "label must be non-empty [A-Za-z0-9_.]"));
            }
            let psi = t
                .state
                .pure(&spec)
                .map_err(|e| invalid(field.clone(), e))?
                .ok_or_else(|| invalid(field.clone(), "target must be a pure state"))?;
            targets.push((t.clone(), psi));
        }

        let mut outputs = Vec::with_capacity(self.outputs.len());
        for (i, text) in self.outputs.iter().enumerate() {
            let out = Output::parse(text).ok_or_else(|| invalid(format!("outputs[{i}]"), format!("unknown output {text:?}")))?;
            let k = match out {
                Output::Coherence { k } | Output::CombCoherence { k, .. } => Some(k),
                _ => None,
            };
            if k.is_some_and(|k| k > n_max) {
                return Err(invalid(format!("outputs[{i}]"), format!("coherence order exceeds n_max = {n_max}")));
            }
            outputs.push(out);
        }

        let substeps = match (self.model, self.dt_over_tau) {
            (ModelKind::Continuous, None) => {
                return Err(invalid("dt_over_tau", "required by the eq2_master model"));
            }
            (_, Some(dt)) => {
                if !(dt > 0.0 && dt <= MasterIntegrator::MAX_DT_OVER_TAU + 1e-12) {
                    return Err(invalid("dt_over_tau", format!("must lie in (0, {}]", MasterIntegrator::MAX_DT_OVER_TAU)));
                }
                let n = (1.0 / dt).round();
                if (n * dt - 1.0).abs() > 1e-9 {
                    return Err(invalid("dt_over_tau", "must divide 1 into a whole number of steps"));
                }
                if self.model == ModelKind::Continuous && !(params.tau() > 0.0) {
                    return Err(invalid("params", "eq2_master requires tau > 0"));
                }
                Some(n as usize)
            }
            (_, None) => None,
        };

        Ok(Prepared {
            scenario: self.clone(),
            spec,
            params,
            initial,
            targets,
            outputs,
            substeps,
        })
    }
}

fn core_field(e: kerrfilter::Error, fallback: &str) -> ExperimentError {
    match &e {
        kerrfilter::Error::InvalidParameter { name, .. } if fallback == "params" => {
            invalid(format!("params.{}", if *name == "tau" { "tau_over_pi" } else { name }), e)
        }
        _ => invalid(fallback, e),
    }
}

/// Reads and parses a scenario document; [`Scenario::validate`] checks it.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Scenario::from_json(&text)
}
