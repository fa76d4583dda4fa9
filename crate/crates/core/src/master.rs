//! Continuous-time loss model with the two-path loss function
//! `K1(w) = chi^2 (1 + exp(i w tau))`.
//!
//! Rates carry a factor `1 / tau` so that one interferometer unit spans a
//! time `tau` in both the discrete and the continuous description.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::channel::MziParams;
use crate::error::{Error, Result};
use crate::evolution::{Propagator, Trajectory};
use crate::fock::{CavityParams, DensityMatrix, HilbertSpec, C64};

/// Continuous-time view of an interferometer chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossModel {
    params: MziParams,
}

impl LossModel {
    pub fn new(params: MziParams) -> Self {
        Self { params }
    }

    pub fn params(&self) -> &MziParams {
        &self.params
    }

    pub fn cavity(&self) -> &CavityParams {
        self.params.cavity()
    }

    pub fn chi(&self) -> f64 {
        self.params.chi()
    }

    pub fn tau(&self) -> f64 {
        self.params.tau()
    }
}

impl From<MziParams> for LossModel {
    fn from(params: MziParams) -> Self {
        Self::new(params)
    }
}

/// `omega_{n,n-k} = (E_n - E_{n-k}) / hbar`.
pub fn transition_frequency(cavity: &CavityParams, n: usize, k: usize) -> Result<f64> {
    if k > n {
        return Err(Error::invalid("k", format!("k = {k} exceeds n = {n}")));
    }
    Ok(cavity.energy(n) - cavity.energy(n - k))
}

/// Frequency of the `n -> n - 1` transition continued to all `n`:
/// `omega_a (1 + 2 beta (n - 1))`.
fn ladder_frequency(cavity: &CavityParams, n: f64) -> f64 {
    cavity.omega_a() * (1.0 + 2.0 * cavity.beta() * (n - 1.0))
}

pub fn loss_function_k1(omega: f64, model: &LossModel) -> C64 {
    (C64::from(1.0) + C64::from_polar(1.0, omega * model.tau())) * model.chi().powi(2)
}

/// Decay rate of `rho_{n,n-k}` per unit step, `L_{n,n-k}`.
pub fn loss_rate(n: usize, k: usize, model: &LossModel) -> Result<f64> {
    if k > n {
        return Err(Error::invalid("k", format!("k = {k} exceeds n = {n}")));
    }
    let chi2 = model.chi().powi(2);
    let tau = model.tau();
    let cav = model.cavity();
    let term = |j: usize| {
        let j = j as f64;
        chi2 * j * (1.0 + (ladder_frequency(cav, j) * tau).cos())
    };
    Ok(term(n) + term(n - k))
}

/// Photon numbers protected from loss and the spacing of the resulting comb.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilizationReport {
    /// `pi / (omega_a beta tau)`; infinite without Kerr or delay.
    pub delta_n: f64,
    pub is_integer_comb: bool,
    /// `(n0, m)` with `omega_a tau (1 + 2 beta (n0 - 1)) = pi + 2 pi m`.
    pub n0_solutions: Vec<(usize, i64)>,
}

const STABILIZATION_RTOL: f64 = 1e-9;

pub fn stabilization_report(model: &LossModel, n_range: usize) -> StabilizationReport {
    let cav = model.cavity();
    let tau = model.tau();
    let delta_n = PI / (cav.omega_a() * cav.beta() * tau);
    let is_integer_comb = delta_n.is_finite()
        && delta_n.abs() >= 1.0 - STABILIZATION_RTOL
        && (delta_n - delta_n.round()).abs() <= STABILIZATION_RTOL * delta_n.abs();
    let n0_solutions = (0..=n_range)
        .filter_map(|n0| {
            let phase = ladder_frequency(cav, n0 as f64) * tau;
            let m = ((phase - PI) / (2.0 * PI)).round();
            let target = PI + 2.0 * PI * m;
            let ok = (phase - target).abs() <= STABILIZATION_RTOL * phase.abs().max(PI);
            ok.then_some((n0, m as i64))
        })
        .collect();
    StabilizationReport {
        delta_n,
        is_integer_comb,
        n0_solutions,
    }
}

/// Precomputed linear structure of the right-hand side,
/// `d rho_{nm}/dt = decay_{nm} rho_{nm} + gain_{nm} rho_{n+1,m+1}`.
#[derive(Debug, Clone)]
struct Coefficients {
    decay: DMatrix<C64>,
    gain: DMatrix<C64>,
}

impl Coefficients {
    fn new(model: &LossModel, dim: usize) -> Self {
        let cav = model.cavity();
        let tau = model.tau();
        let k1 = |n: usize| {
            if n == 0 {
                C64::from(0.0)
            } else {
                loss_function_k1(cav.energy(n) - cav.energy(n - 1), model)
            }
        };
        let k1s: Vec<C64> = (0..=dim).map(k1).collect();
        let decay = DMatrix::from_fn(dim, dim, |n, m| {
            let omega = cav.energy(n) - cav.energy(m);
            C64::new(0.0, -omega) - (k1s[n] * n as f64 + k1s[m].conj() * m as f64) / tau
        });
        let gain = DMatrix::from_fn(dim, dim, |n, m| {
            if n + 1 >= dim || m + 1 >= dim {
                return C64::from(0.0);
            }
            (k1s[n + 1] + k1s[m + 1].conj()) * ((((n + 1) * (m + 1)) as f64).sqrt() / tau)
        });
        Self { decay, gain }
    }

    fn apply_gain(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let d = rho.nrows();
        DMatrix::from_fn(d, d, |n, m| {
            if n + 1 < d && m + 1 < d {
                self.gain[(n, m)] * rho[(n + 1, m + 1)]
            } else {
                C64::from(0.0)
            }
        })
    }
}

/// `d rho / dt` of the continuous model. Gain from beyond the cutoff is
/// omitted.
pub fn rhs_eq2(rho: &DensityMatrix, model: &LossModel) -> DMatrix<C64> {
    let c = Coefficients::new(model, rho.dim());
    c.decay.component_mul(rho.entries()) + c.apply_gain(rho.entries())
}

/// Fixed-step integrator for the continuous model.
///
/// The diagonal part `-i omega_{nm} - loss` is integrated exactly and the
/// gain coupling with classical fourth-order Runge-Kutta in the rotating
/// variables (Lawson scheme). Plain RK4 is unusable at `dt = tau / 20`
/// because `omega dt` exceeds its stability region for realistic `tau`.
#[derive(Debug, Clone)]
pub struct MasterIntegrator {
    coeffs: Coefficients,
    half: DMatrix<C64>,
    full: DMatrix<C64>,
    dt: f64,
    substeps: usize,
}

impl MasterIntegrator {
    /// Largest admitted `dt / tau`.
    pub const MAX_DT_OVER_TAU: f64 = 0.1;

    /// One propagator step is one integration step of length `dt`.
    pub fn new(model: &LossModel, spec: &HilbertSpec, dt: f64) -> Result<Self> {
        Self::build(model, spec, dt, 1)
    }

    /// One propagator step spans `tau`, split into `substeps` steps.
    pub fn per_tau(model: &LossModel, spec: &HilbertSpec, substeps: usize) -> Result<Self> {
        if substeps == 0 {
            return Err(Error::invalid("dt", "at least one step per tau is required"));
        }
        Self::build(model, spec, model.tau() / substeps as f64, substeps)
    }

    fn build(model: &LossModel, spec: &HilbertSpec, dt: f64, substeps: usize) -> Result<Self> {
        let tau = model.tau();
        if !(tau > 0.0) {
            return Err(Error::invalid("tau", "the continuous model needs tau > 0"));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
        }
        if dt > Self::MAX_DT_OVER_TAU * tau * (1.0 + 1e-12) {
            return Err(Error::invalid(
                "dt",
                format!("dt / tau = {} exceeds {}", dt / tau, Self::MAX_DT_OVER_TAU),
            ));
        }
        let coeffs = Coefficients::new(model, spec.dim());
        let half = coeffs.decay.map(|z| (z * (0.5 * dt)).exp());
        let full = coeffs.decay.map(|z| (z * dt).exp());
        Ok(Self {
            coeffs,
            half,
            full,
            dt,
            substeps,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn rk_step(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let h = C64::from(self.dt);
        let e = &self.half;
        let g = |x: &DMatrix<C64>| self.coeffs.apply_gain(x);

        let k1 = g(rho);
        let k2 = g(&e.component_mul(&(rho + &k1 * (h * 0.5))));
        let e_rho = e.component_mul(rho);
        let k3 = g(&(&e_rho + &k2 * (h * 0.5)));
        let k4 = g(&(self.full.component_mul(rho) + e.component_mul(&k3) * h));

        self.full.component_mul(&(rho + &k1 * (h / 6.0)))
            + e.component_mul(&((k2 + k3) * (h / 3.0)))
            + k4 * (h / 6.0)
    }
}

impl Propagator for MasterIntegrator {
    fn dim(&self) -> usize {
        self.half.nrows()
    }

    fn step_duration(&self) -> f64 {
        self.dt * self.substeps as f64
    }

    fn step(&self, rho: &DensityMatrix) -> DensityMatrix {
        let mut x = rho.entries().clone();
        for _ in 0..self.substeps {
            x = self.rk_step(&x);
        }
        DensityMatrix::hermitized(x)
    }
}

/// Integrates to `t_end`, which must be a whole number of steps `dt`;
/// `record_every` counts integration steps.
pub fn integrate(
    rho0: &DensityMatrix,
    model: &LossModel,
    spec: &HilbertSpec,
    t_end: f64,
    dt: f64,
    record_every: usize,
) -> Result<Trajectory> {
    let integ = MasterIntegrator::new(model, spec, dt)?;
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::invalid("t_end", format!("must be finite and >= 0, got {t_end}")));
    }
    let steps = (t_end / dt).round();
    if (steps * dt - t_end).abs() > 1e-9 * t_end.max(dt) {
        return Err(Error::invalid("t_end", "must be a whole number of steps dt"));
    }
    Trajectory::collect(&integ, rho0, spec, steps as usize, record_every)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::MaxNorm;
    use crate::fock::StateVector;
    use crate::states;
    use approx::assert_abs_diff_eq;

    fn model(beta: f64, chi: f64, tau_over_pi: f64) -> LossModel {
        let cav = CavityParams::new(1.0, beta).unwrap();
        LossModel::new(MziParams::from_tau_over_pi(cav, chi, tau_over_pi).unwrap())
    }

    fn fig3b(chi: f64) -> LossModel {
        model(2.5e-3, chi, 200.0)
    }

    #[test]
    fn transition_frequencies() {
        let cav = CavityParams::new(1.0, 2.5e-3).unwrap();
        assert_eq!(transition_frequency(&cav, 1, 1).unwrap(), 1.0);
        assert_eq!(transition_frequency(&cav, 7, 0).unwrap(), 0.0);
        assert_abs_diff_eq!(transition_frequency(&cav, 3, 1).unwrap(), 1.01, epsilon = 1e-14);
        assert!(transition_frequency(&cav, 2, 3).is_err());
        for n in 1..20 {
            let direct = transition_frequency(&cav, n, 1).unwrap();
            assert_abs_diff_eq!(direct, ladder_frequency(&cav, n as f64), epsilon = 1e-13);
        }
    }

    #[test]
    fn loss_function_values() {
        let chi = 0.03;
        let m = model(0.0, chi, 2.0);
        let tau = m.tau();
        assert!(loss_function_k1(PI / tau, &m).norm() < 1e-18);
        assert_abs_diff_eq!(loss_function_k1(0.0, &m).re, 2.0 * chi * chi, epsilon = 1e-18);
        let z = loss_function_k1(PI / (2.0 * tau), &m);
        assert_abs_diff_eq!(z.re, chi * chi, epsilon = 1e-17);
        assert_abs_diff_eq!(z.im, chi * chi, epsilon = 1e-17);
    }

    #[test]
    fn loss_rates_under_even_comb() {
        let chi = 0.01;
        let m = fig3b(chi);
        for n in 0..=40usize {
            let l = loss_rate(n, 0, &m).unwrap();
            if n % 2 == 0 {
                assert!(l < 1e-15, "n = {n}: {l}");
            } else {
                assert_abs_diff_eq!(l, 4.0 * chi * chi * n as f64, epsilon = 1e-15);
            }
        }
        assert!(loss_rate(1, 2, &m).is_err());
    }

    #[test]
    fn stabilization_reports() {
        let r = stabilization_report(&fig3b(0.01), 40);
        assert_abs_diff_eq!(r.delta_n, 2.0, epsilon = 1e-12);
        assert!(r.is_integer_comb);
        let ns: Vec<usize> = r.n0_solutions.iter().map(|s| s.0).collect();
        assert_eq!(ns, (0..=40).step_by(2).collect::<Vec<_>>());
        // n0 = 2: 200 pi (1 + 5e-3) = 201 pi = pi + 2 pi * 100.
        assert!(r.n0_solutions.contains(&(2, 100)));

        let tau_over_pi = 201.4;
        let r = stabilization_report(&model(1.0 / (5.0 * tau_over_pi), 0.003, tau_over_pi), 45);
        assert_abs_diff_eq!(r.delta_n, 5.0, epsilon = 1e-9);
        assert!(r.is_integer_comb);
        let m = model(1.0 / (5.0 * tau_over_pi), 0.003, tau_over_pi);
        for &(n0, _) in &r.n0_solutions {
            assert!(loss_rate(n0, 0, &m).unwrap() < 1e-12);
        }

        let r = stabilization_report(&model(0.0, 0.01, 200.0), 5);
        assert!(r.delta_n.is_infinite());
        assert!(!r.is_integer_comb);
        assert!(r.n0_solutions.is_empty());
    }

    #[test]
    fn rhs_examples() {
        let m = fig3b(0.01);
        let spec = HilbertSpec::new(10).unwrap();
        let vac = StateVector::basis(0, &spec).unwrap().density();
        assert!(rhs_eq2(&vac, &m).max_norm() < 1e-18);

        let comb = DensityMatrix::mixture(&[
            (0.5, &StateVector::basis(2, &spec).unwrap().density()),
            (0.5, &StateVector::basis(6, &spec).unwrap().density()),
        ])
        .unwrap();
        let d = rhs_eq2(&comb, &m);
        for n in 0..=10 {
            assert!(d[(n, n)].norm() < 1e-15);
        }
    }

    #[test]
    fn rhs_is_traceless_below_edge() {
        let m = model(0.0123, 0.02, 37.3);
        let spec = HilbertSpec::new(14).unwrap();
        let rho = states::coherent(C64::new(1.1, 0.6), &spec).unwrap().density();
        let d = rhs_eq2(&rho, &m);
        assert!(d.trace().norm() < 1e-12 * 15.0);
    }

    #[test]
    fn rhs_matches_dense_generator() {
        // Liouvillian assembled diagonal by diagonal in (n, k) labels.
        let m = model(0.0071, 0.04, 11.3);
        let spec = HilbertSpec::new(7).unwrap();
        let d = spec.dim();
        let cav = *m.cavity();
        let k1 = |n: usize| loss_function_k1(transition_frequency(&cav, n, 1).unwrap(), &m);
        let idx = |n: usize, l: usize| n + d * l;
        let mut gen = DMatrix::<C64>::zeros(d * d, d * d);
        for n in 0..d {
            for l in 0..d {
                let w = cav.energy(n) - cav.energy(l);
                let mut diag = C64::new(0.0, -w);
                if n > 0 {
                    diag -= k1(n) * n as f64 / m.tau();
                }
                if l > 0 {
                    diag -= k1(l).conj() * l as f64 / m.tau();
                }
                gen[(idx(n, l), idx(n, l))] = diag;
                if n + 1 < d && l + 1 < d {
                    let s = (((n + 1) * (l + 1)) as f64).sqrt();
                    gen[(idx(n, l), idx(n + 1, l + 1))] = (k1(n + 1) + k1(l + 1).conj()) * s / m.tau();
                }
            }
        }
        let psi = StateVector::from_slice(
            &(0..d).map(|n| C64::new(1.0 / (n + 1) as f64, 0.3 * n as f64 - 0.5)).collect::<Vec<_>>(),
        )
        .unwrap();
        let rho = psi.density();
        let vec = nalgebra::DVector::from_column_slice(rho.entries().as_slice());
        let expect = gen * vec;
        let got = rhs_eq2(&rho, &m);
        let got = nalgebra::DVector::from_column_slice(got.as_slice());
        assert!((expect - got).max_norm() < 1e-12);
    }

    #[test]
    fn integrator_validation() {
        let m = fig3b(0.01);
        let spec = HilbertSpec::new(5).unwrap();
        assert!(MasterIntegrator::new(&m, &spec, m.tau() / 5.0).is_err());
        assert!(MasterIntegrator::new(&m, &spec, 0.0).is_err());
        assert!(MasterIntegrator::new(&m, &spec, m.tau() / 10.0).is_ok());
        assert!(MasterIntegrator::per_tau(&m, &spec, 0).is_err());
        let no_tau = LossModel::new(
            MziParams::new(CavityParams::new(1.0, 0.0).unwrap(), 0.01, 0.0).unwrap(),
        );
        assert!(MasterIntegrator::per_tau(&no_tau, &spec, 20).is_err());
    }

    #[test]
    fn zero_time_returns_initial_state() {
        let m = fig3b(0.01);
        let spec = HilbertSpec::new(5).unwrap();
        let rho = StateVector::basis(3, &spec).unwrap().density();
        let traj = integrate(&rho, &m, &spec, 0.0, m.tau() / 20.0, 1).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.states()[0], rho);
    }

    #[test]
    fn single_photon_decay_at_maximal_loss() {
        let chi = 0.05;
        let m = model(0.0, chi, 2.0);
        let spec = HilbertSpec::new(1).unwrap();
        let rho = DensityMatrix::mixture(&[
            (0.3, &StateVector::basis(0, &spec).unwrap().density()),
            (0.7, &StateVector::basis(1, &spec).unwrap().density()),
        ])
        .unwrap();
        let dt = m.tau() / 20.0;
        let t_end = 0.75 * m.tau() / (chi * chi);
        let traj = integrate(&rho, &m, &spec, t_end, dt, 100).unwrap();
        for (t, s) in traj.times().iter().zip(traj.states()) {
            let expect = 0.7 * (-4.0 * chi * chi * t / m.tau()).exp();
            assert!((s.get(1, 1).re / expect - 1.0).abs() < 1e-4, "t = {t}");
        }
    }

    #[test]
    fn step_halving_converges() {
        let m = fig3b(0.01);
        let spec = HilbertSpec::new(12).unwrap();
        let rho = states::coherent(C64::from(1.0), &spec).unwrap().density();
        let run = |sub: usize| {
            let integ = MasterIntegrator::per_tau(&m, &spec, sub).unwrap();
            Trajectory::collect(&integ, &rho, &spec, 100, 100)
                .unwrap()
                .last()
                .unwrap()
                .clone()
        };
        let diff = (run(20).entries() - run(40).entries()).max_norm();
        assert!(diff < 1e-6, "{diff}");
    }

    #[test]
    fn trace_drift_is_small() {
        let m = fig3b(0.01);
        let spec = HilbertSpec::new(14).unwrap();
        let rho = states::coherent(C64::from(1.0), &spec).unwrap().density();
        let integ = MasterIntegrator::per_tau(&m, &spec, 20).unwrap();
        let traj = Trajectory::collect(&integ, &rho, &spec, 200, 200).unwrap();
        let drift = (traj.last().unwrap().trace() - 1.0).abs();
        assert!(drift < 1e-8 * 200.0, "{drift}");
    }
}
