//! Scenarios compiled into the binary.

use std::collections::BTreeMap;

use crate::scenario::{ModelKind, ParamsDesc, Scenario, StateDesc, TargetDesc};

pub const PRESET_NAMES: &[&str] = &[
    "fig2a_comb",
    "fig2b_squeezed",
    "fig2c_stability",
    "fig2c_coherent",
    "fig2c_mixed",
    "fig3b_evencat",
    "fig3c_coherence",
    "fig3d_fivecat",
    "crosscheck_small",
];

/// Notes key set on presets whose parameters are chosen here rather than
/// read off a published figure.
pub const DERIVED_NOTE: &str = "derived";

/// Integration step used whenever a preset is rerun under the continuous
/// model.
const DT_OVER_TAU: f64 = 0.05;

fn even_comb(chi: f64) -> ParamsDesc {
    // omega_a beta tau = pi / 2, with omega_a tau = pi mod 2 pi for n = 1.
    ParamsDesc {
        omega_a: 1.0,
        beta: 2.5e-3,
        chi,
        tau_over_pi: 200.0,
    }
}

fn cat_target(label: &str, alpha: f64, legs: usize, rotation_optimized: bool) -> TargetDesc {
    TargetDesc {
        label: label.into(),
        state: StateDesc::Cat {
            alpha: alpha.into(),
            legs,
        },
        rotation_optimized,
    }
}

fn base(name: &str, params: ParamsDesc, initial: StateDesc, n_steps: usize) -> Scenario {
    Scenario {
        name: name.into(),
        model: ModelKind::ExactMzi,
        params,
        n_max: None,
        leak_tol: None,
        initial,
        n_steps,
        dt_over_tau: Some(DT_OVER_TAU),
        record_every: 1,
        targets: Vec::new(),
        outputs: Vec::new(),
        notes: BTreeMap::new(),
    }
}

fn note(s: &mut Scenario, key: &str, value: &str) {
    s.notes.insert(key.into(), value.into());
}

/// Three lifetimes `tau / chi^2`, in steps.
fn three_lifetimes(chi: f64) -> usize {
    (3.0 / (chi * chi)).round() as usize
}

fn duration_note(s: &mut Scenario) {
    note(
        s,
        "duration",
        "run to 3 tau/chi^2; summary reports the fidelity peak over the whole run and over its final third",
    );
}

pub fn preset(name: &str) -> Option<Scenario> {
    let sqrt10 = 10f64.sqrt();
    let s = match name {
        "fig2a_comb" => {
            // omega_a beta tau = pi / 4 and omega_a tau (1 + 6 beta) = 201 pi,
            // which protects n = 4 and with it the comb 0, 4, 8, ...
            let chi = 0.01;
            let params = ParamsDesc {
                omega_a: 1.0,
                beta: 1.0 / 798.0,
                chi,
                tau_over_pi: 199.5,
            };
            let mut s = base(name, params, StateDesc::PhaseState { n: 12 }, (5.0 / (chi * chi)) as usize);
            s.n_max = Some(20);
            s.record_every = 100;
            s.outputs = ["populations", "comb_weight:4:0", "coherence:4", "comb_coherence:4:4:0"]
                .map(String::from)
                .to_vec();
            note(&mut s, DERIVED_NOTE, "comb spacing 4 through n0 = 4, chi = 0.01, phase state of 13 levels");
            s
        }
        "fig2b_squeezed" => {
            let chi = 0.01;
            let initial = StateDesc::DisplacedSqueezed {
                alpha: 1.5.into(),
                z: 0.6.into(),
            };
            let mut s = base(name, even_comb(chi), initial, three_lifetimes(chi));
            s.n_max = Some(30);
            s.record_every = 100;
            s.outputs = ["populations", "parity", "comb_weight:2:1", "squeezed_fit"]
                .map(String::from)
                .to_vec();
            note(&mut s, DERIVED_NOTE, "even comb of fig3b_evencat, displaced squeezed input alpha = 1.5, z = 0.6");
            s
        }
        "fig2c_stability" | "fig2c_coherent" | "fig2c_mixed" => {
            let chi = 0.01;
            let alpha = sqrt10.into();
            let initial = match name {
                "fig2c_stability" => StateDesc::Cat { alpha, legs: 2 },
                "fig2c_coherent" => StateDesc::Coherent { alpha },
                _ => StateDesc::MixedCoherent { alpha },
            };
            let mut s = base(name, even_comb(chi), initial, three_lifetimes(chi));
            s.n_max = Some(40);
            s.record_every = 100;
            s.outputs = ["trace_distance", "parity"].map(String::from).to_vec();
            s
        }
        "fig3b_evencat" => {
            let chi = 0.01;
            let mut s = base(name, even_comb(chi), StateDesc::Coherent { alpha: sqrt10.into() }, three_lifetimes(chi));
            s.n_max = Some(40);
            s.record_every = 20;
            s.targets = [("cat_a0", 1.0), ("cat_098", 0.98), ("cat_095", 0.95), ("cat_090", 0.90)]
                .iter()
                .map(|&(label, scale)| cat_target(label, scale * sqrt10, 2, false))
                .collect();
            s.outputs = ["populations", "parity", "coherence:2"].map(String::from).to_vec();
            duration_note(&mut s);
            s
        }
        "fig3c_coherence" => {
            let chi = 0.01;
            let mut s = base(name, even_comb(chi), StateDesc::Coherent { alpha: sqrt10.into() }, three_lifetimes(chi));
            s.n_max = Some(40);
            s.record_every = 2;
            s.outputs = ["coherence:2", "comb_coherence:2:2:0", "parity"].map(String::from).to_vec();
            s
        }
        "fig3d_fivecat" => {
            // omega_a beta tau = pi / 5.
            let chi = 0.003;
            let tau_over_pi = 201.4;
            let params = ParamsDesc {
                omega_a: 1.0,
                beta: 1.0 / (5.0 * tau_over_pi),
                chi,
                tau_over_pi,
            };
            let a0 = 15f64.sqrt();
            // Rounded down to a multiple of both the Kerr period and the
            // recording interval.
            let steps = three_lifetimes(chi) / 500 * 500;
            let mut s = base(name, params, StateDesc::Coherent { alpha: a0.into() }, steps);
            s.n_max = Some(45);
            s.record_every = 500;
            s.targets = [("cat_a0", 1.0), ("cat_098", 0.98), ("cat_095", 0.95), ("cat_090", 0.90)]
                .iter()
                .map(|&(label, scale)| cat_target(label, scale * a0, 5, true))
                .collect();
            s.outputs = ["comb_weight:5:0", "coherence:5"].map(String::from).to_vec();
            duration_note(&mut s);
            note(&mut s, "rotation", "targets compared up to a global phase-space rotation");
            s
        }
        "crosscheck_small" => {
            let mut s = base(name, even_comb(0.005), StateDesc::Coherent { alpha: 1.0.into() }, 100);
            s.n_max = Some(12);
            s.outputs = ["populations", "coherence:1", "coherence:2"].map(String::from).to_vec();
            s
        }
        _ => return None,
    };
    Some(s)
}
