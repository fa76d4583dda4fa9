//! One nonlinear Mach-Zehnder unit as a single-mode channel.
//!
//! The unit is beamsplitter, Kerr phase on arm `a` for time `tau`, identical
//! beamsplitter; arm `b` enters in vacuum and is traced out afterwards. The
//! beamsplitter generator `a^dag b + a b^dag` conserves `n_a + n_b`, so for a
//! vacuum `b` input the Kraus operator for `k` photons leaving through `b`
//! maps `|n>` to a multiple of `|n - k>`. [`KrausSet`] stores exactly those
//! multiples `m_k(n)`.

use log::warn;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::evolution::{Propagator, Trajectory};
use crate::fock::{CavityParams, DensityMatrix, HilbertSpec, C64};
use crate::linalg;

/// Mixing angle above which the perturbative update rule is not trusted.
pub const UPDATE_RULE_CHI_LIMIT: f64 = 0.1;

/// Parameters of one interferometer unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MziParams {
    cavity: CavityParams,
    chi: f64,
    tau: f64,
}

impl MziParams {
    /// `chi` in `[0, pi/2)`, `tau >= 0`. The closed ends are admitted so that
    /// the identity channel (`chi = 0` or `tau = 0`) is representable.
    pub fn new(cavity: CavityParams, chi: f64, tau: f64) -> Result<Self> {
        if !(chi.is_finite() && (0.0..std::f64::consts::FRAC_PI_2).contains(&chi)) {
            return Err(Error::invalid("chi", format!("must lie in [0, pi/2), got {chi}")));
        }
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::invalid("tau", format!("must be finite and >= 0, got {tau}")));
        }
        Ok(Self { cavity, chi, tau })
    }

    pub fn from_tau_over_pi(cavity: CavityParams, chi: f64, tau_over_pi: f64) -> Result<Self> {
        Self::new(cavity, chi, tau_over_pi * std::f64::consts::PI)
    }

    pub fn cavity(&self) -> &CavityParams {
        &self.cavity
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `(E_n - E_m) / hbar` for arbitrary ordering of `n` and `m`.
    pub(crate) fn omega(&self, n: usize, m: usize) -> f64 {
        self.cavity.energy(n) - self.cavity.energy(m)
    }
}

/// Real symmetric generator of `a^dag b + a b^dag` on the total-`n` block,
/// in the basis `|n - j, j>`, `j = 0..=n`.
fn beamsplitter_generator(n: usize) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(n + 1, n + 1);
    for j in 0..n {
        let v = (((n - j) * (j + 1)) as f64).sqrt();
        g[(j + 1, j)] = v;
        g[(j, j + 1)] = v;
    }
    g
}

/// `exp(i chi (a^dag b + a b^dag))` restricted to total photon number `n`,
/// basis `|n - j, j>`.
pub fn beamsplitter_block(chi: f64, n: usize) -> DMatrix<C64> {
    linalg::exp_i_real_symmetric(&beamsplitter_generator(n), chi)
}

/// Dense two-mode beamsplitter unitary, basis index `n_a * dim_b + n_b`.
///
/// Blocks with total number above `min(dim_a, dim_b) - 1` are cut by the
/// truncation; they are exponentiated in truncated form and are unitary on
/// their own but differ from the untruncated operator.
pub fn beamsplitter_unitary(chi: f64, dim_a: usize, dim_b: usize) -> Result<DMatrix<C64>> {
    if dim_a < 2 || dim_b < 2 {
        return Err(Error::invalid("dim", "both mode dimensions must be at least 2"));
    }
    let mut u = DMatrix::zeros(dim_a * dim_b, dim_a * dim_b);
    for n in 0..=(dim_a + dim_b - 2) {
        // j = n_b ranges over the values keeping both modes in range.
        let lo = n.saturating_sub(dim_a - 1);
        let hi = n.min(dim_b - 1);
        let size = hi - lo + 1;
        let mut g = DMatrix::<f64>::zeros(size, size);
        for r in 0..size - 1 {
            let j = lo + r;
            let v = (((n - j) * (j + 1)) as f64).sqrt();
            g[(r + 1, r)] = v;
            g[(r, r + 1)] = v;
        }
        let block = linalg::exp_i_real_symmetric(&g, chi);
        let index = |r: usize| (n - (lo + r)) * dim_b + lo + r;
        for c in 0..size {
            for r in 0..size {
                u[(index(r), index(c))] = block[(r, c)];
            }
        }
    }
    Ok(u)
}

/// Kraus operators `M_k = <k|_b U_bs Kerr_a(tau) U_bs |0>_b` in compact
/// form: `M_k |n> = m_k(n) |n - k>`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    /// `amps[k][n] = m_k(n)`, zero for `n < k`.
    amps: Vec<Vec<C64>>,
}

impl KrausSet {
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitude(&self, k: usize, n: usize) -> C64 {
        self.amps[k][n]
    }

    /// `M_k` as a dense matrix.
    pub fn operator(&self, k: usize) -> DMatrix<C64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for n in k..d {
            m[(n - k, n)] = self.amps[k][n];
        }
        m
    }

    /// `max_n |sum_k |m_k(n)|^2 - 1|`. The completeness operator is diagonal
    /// by number conservation, so this is its full max-norm defect.
    pub fn completeness_defect(&self) -> f64 {
        (0..self.dim())
            .map(|n| {
                let s: f64 = (0..=n).map(|k| self.amps[k][n].norm_sqr()).sum();
                (s - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

pub fn kraus_from_mzi(params: &MziParams, spec: &HilbertSpec) -> KrausSet {
    let d = spec.dim();
    let mut amps = vec![vec![C64::from(0.0); d]; d];
    for n in 0..d {
        let u = beamsplitter_block(params.chi, n);
        // Kerr phase on arm a, which holds n - j photons in column j.
        let phase: Vec<C64> = (0..=n)
            .map(|j| C64::from_polar(1.0, -params.cavity.energy(n - j) * params.tau))
            .collect();
        for (k, row) in amps.iter_mut().enumerate().take(n + 1) {
            row[n] = (0..=n).map(|j| u[(k, j)] * phase[j] * u[(j, 0)]).sum();
        }
    }
    let set = KrausSet { amps };
    let defect = set.completeness_defect();
    if defect > 1e-10 {
        warn!("Kraus completeness defect {defect:.3e}");
    }
    set
}

/// `sum_k M_k rho M_k^dag`, Hermitian by construction.
pub fn apply_channel(rho: &DensityMatrix, kraus: &KrausSet) -> Result<DensityMatrix> {
    let d = kraus.dim();
    if rho.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: rho.dim(),
        });
    }
    Ok(apply_unchecked(rho, kraus))
}

fn apply_unchecked(rho: &DensityMatrix, kraus: &KrausSet) -> DensityMatrix {
    let d = kraus.dim();
    let r = rho.entries();
    let mut out = DMatrix::<C64>::zeros(d, d);
    // Lower triangle only; out[i, j] += m_k(i+k) m_k(j+k)^* rho[i+k, j+k].
    for (k, m) in kraus.amps.iter().enumerate() {
        for j in 0..d - k {
            let mj = m[j + k].conj();
            if mj == C64::from(0.0) {
                continue;
            }
            for i in j..d - k {
                out[(i, j)] += m[i + k] * mj * r[(i + k, j + k)];
            }
        }
    }
    DensityMatrix::from_lower(out)
}

/// The exact channel as a [`Propagator`]; one step spans `tau`.
#[derive(Debug, Clone)]
pub struct ExactChannel {
    kraus: KrausSet,
    tau: f64,
}

impl ExactChannel {
    pub fn new(params: &MziParams, spec: &HilbertSpec) -> Self {
        Self {
            kraus: kraus_from_mzi(params, spec),
            tau: params.tau,
        }
    }

    pub fn kraus(&self) -> &KrausSet {
        &self.kraus
    }
}

impl Propagator for ExactChannel {
    fn dim(&self) -> usize {
        self.kraus.dim()
    }

    fn step_duration(&self) -> f64 {
        self.tau
    }

    fn step(&self, rho: &DensityMatrix) -> DensityMatrix {
        apply_unchecked(rho, &self.kraus)
    }
}

pub fn evolve_exact(
    rho0: &DensityMatrix,
    params: &MziParams,
    spec: &HilbertSpec,
    n_steps: usize,
    record_every: usize,
) -> Result<Trajectory> {
    let channel = ExactChannel::new(params, spec);
    Trajectory::collect(&channel, rho0, spec, n_steps, record_every)
}

/// The perturbative single-pass update rule, O(chi^2) in the mixing angle:
/// `rho'_{nm} = R_{nm} rho_{nm} + G_{nm} rho_{n+1,m+1}`.
#[derive(Debug, Clone)]
pub struct UpdateRule {
    retain: DMatrix<C64>,
    gain: DMatrix<C64>,
    tau: f64,
}

impl UpdateRule {
    pub fn new(params: &MziParams, spec: &HilbertSpec) -> Self {
        if params.chi > UPDATE_RULE_CHI_LIMIT {
            warn!(
                "update rule used with chi = {} > {UPDATE_RULE_CHI_LIMIT}; O(chi^4) terms are not small",
                params.chi
            );
        }
        let d = spec.dim();
        let tau = params.tau;
        let chi2 = params.chi * params.chi;
        let e = |theta: f64| C64::from_polar(1.0, theta);
        // e^{i omega_{n,n-1} tau}; the n = 0 value is never weighted.
        let up: Vec<C64> = (0..=d)
            .map(|n| if n == 0 { C64::from(0.0) } else { e(params.omega(n, n - 1) * tau) })
            .collect();
        let one = C64::from(1.0);
        let retain = DMatrix::from_fn(d, d, |n, m| {
            let decay = (one + up[n]) * n as f64 + (one + up[m].conj()) * m as f64;
            e(-params.omega(n, m) * tau) * (one - decay * chi2)
        });
        let gain = DMatrix::from_fn(d, d, |n, m| {
            if n + 1 >= d || m + 1 >= d {
                return C64::from(0.0);
            }
            let (p, q) = (up[n + 1], up[m + 1].conj());
            let paths = one + p + q + p * q;
            e(-params.omega(n + 1, m + 1) * tau) * paths * (chi2 * (((n + 1) * (m + 1)) as f64).sqrt())
        });
        Self { retain, gain, tau }
    }
}

impl Propagator for UpdateRule {
    fn dim(&self) -> usize {
        self.retain.nrows()
    }

    fn step_duration(&self) -> f64 {
        self.tau
    }

    fn step(&self, rho: &DensityMatrix) -> DensityMatrix {
        let d = self.dim();
        let r = rho.entries();
        let mut out = DMatrix::<C64>::zeros(d, d);
        for m in 0..d {
            for n in m..d {
                let mut v = self.retain[(n, m)] * r[(n, m)];
                if n + 1 < d {
                    v += self.gain[(n, m)] * r[(n + 1, m + 1)];
                }
                out[(n, m)] = v;
            }
        }
        DensityMatrix::from_lower(out)
    }
}

/// One application of the update rule. For repeated steps build an
/// [`UpdateRule`] once instead.
pub fn update_rule_step(
    rho: &DensityMatrix,
    params: &MziParams,
    spec: &HilbertSpec,
) -> Result<DensityMatrix> {
    spec.check_dim(rho.dim())?;
    Ok(UpdateRule::new(params, spec).step(rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::MaxNorm;
    use crate::fock::{kerr_phases, StateVector};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn params(beta: f64, chi: f64, tau: f64) -> MziParams {
        MziParams::new(CavityParams::new(1.0, beta).unwrap(), chi, tau).unwrap()
    }

    #[test]
    fn params_validation() {
        let cav = CavityParams::new(1.0, 0.0).unwrap();
        assert!(MziParams::new(cav, -0.1, 1.0).is_err());
        assert!(MziParams::new(cav, PI / 2.0, 1.0).is_err());
        assert!(MziParams::new(cav, 0.1, -1.0).is_err());
        assert!(MziParams::new(cav, 0.1, f64::NAN).is_err());
        let p = MziParams::from_tau_over_pi(cav, 0.01, 200.0).unwrap();
        assert_abs_diff_eq!(p.tau(), 200.0 * PI);
    }

    #[test]
    fn one_photon_block_is_rotation() {
        let chi = 0.37;
        let u = beamsplitter_block(chi, 1);
        assert_abs_diff_eq!(u[(0, 0)].re, chi.cos(), epsilon = 1e-14);
        assert_abs_diff_eq!(u[(1, 0)].im, chi.sin(), epsilon = 1e-14);
        assert_abs_diff_eq!(u[(1, 0)].re, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn two_photon_block_closed_form() {
        // Generator eigenvalues are 0 and +-2 with eigenvectors
        // (1, 0, -1)/sqrt2 and (1, +-sqrt2, 1)/2.
        let chi = 0.23;
        let u = beamsplitter_block(chi, 2);
        let s2 = 2f64.sqrt();
        let vecs = [
            (0.0, [1.0 / s2, 0.0, -1.0 / s2]),
            (2.0, [0.5, s2 / 2.0, 0.5]),
            (-2.0, [0.5, -s2 / 2.0, 0.5]),
        ];
        for r in 0..3 {
            for c in 0..3 {
                let expect: C64 = vecs
                    .iter()
                    .map(|(l, v)| C64::from_polar(1.0, chi * l) * v[r] * v[c])
                    .sum();
                assert!((u[(r, c)] - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn dense_beamsplitter_unitary_on_complete_blocks() {
        let (da, db) = (4, 3);
        let u = beamsplitter_unitary(0.4, da, db).unwrap();
        let id = &u.adjoint() * &u;
        for r in 0..da * db {
            for c in 0..da * db {
                let e = if r == c { 1.0 } else { 0.0 };
                assert!((id[(r, c)] - C64::from(e)).norm() < 1e-12);
            }
        }
        // |1,0> -> cos|1,0> + i sin|0,1>
        assert_abs_diff_eq!(u[(db, db)].re, 0.4f64.cos(), epsilon = 1e-14);
        assert_abs_diff_eq!(u[(1, db)].im, 0.4f64.sin(), epsilon = 1e-14);
        let id0 = beamsplitter_unitary(0.0, 3, 3).unwrap();
        assert!((id0 - DMatrix::<C64>::identity(9, 9)).max_norm() < 1e-15);
        assert!(beamsplitter_unitary(0.1, 1, 3).is_err());
    }

    #[test]
    fn compact_kraus_matches_dense_two_mode_construction() {
        let spec = HilbertSpec::new(5).unwrap();
        let p = params(0.013, 0.21, 3.7);
        let d = spec.dim();
        let u = beamsplitter_unitary(p.chi(), d, d).unwrap();
        let kerr_a = kerr_phases(p.cavity(), d, p.tau());
        let kerr = DMatrix::from_fn(d * d, d * d, |r, c| {
            if r == c { kerr_a[r / d] } else { C64::from(0.0) }
        });
        let full = &u * kerr * &u;
        let kraus = kraus_from_mzi(&p, &spec);
        for k in 0..d {
            let dense = DMatrix::from_fn(d, d, |na, ma| full[(na * d + k, ma * d)]);
            assert!((dense - kraus.operator(k)).max_norm() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn kraus_completeness() {
        let spec = HilbertSpec::new(40).unwrap();
        let kraus = kraus_from_mzi(&params(2.5e-3, 0.01, 200.0 * PI), &spec);
        assert!(kraus.completeness_defect() < 1e-12);
        let mut sum = DMatrix::<C64>::zeros(41, 41);
        for k in 0..41 {
            let m = kraus.operator(k);
            sum += m.adjoint() * m;
        }
        assert!((sum - DMatrix::identity(41, 41)).max_norm() < 1e-12);
    }

    #[test]
    fn single_photon_bic() {
        let spec = HilbertSpec::new(4).unwrap();
        for beta in [0.0, 0.3, -0.7] {
            let kraus = kraus_from_mzi(&params(beta, 0.3, PI), &spec);
            assert!(kraus.amplitude(1, 1).norm() < 1e-14);
            let rho = StateVector::basis(1, &spec).unwrap().density();
            let out = apply_channel(&rho, &kraus).unwrap();
            assert!((out.entries() - rho.entries()).max_norm() < 1e-14);
        }
    }

    #[test]
    fn zero_mixing_is_kerr_unitary() {
        let spec = HilbertSpec::new(6).unwrap();
        let p = params(0.02, 0.0, 5.0);
        let kraus = kraus_from_mzi(&p, &spec);
        let phases = kerr_phases(p.cavity(), 7, 5.0);
        for n in 0..7 {
            assert!((kraus.amplitude(0, n) - phases[n]).norm() < 1e-14);
            for k in 1..=n {
                assert!(kraus.amplitude(k, n).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn vacuum_is_invariant() {
        let spec = HilbertSpec::new(6).unwrap();
        let kraus = kraus_from_mzi(&params(0.02, 0.4, 5.0), &spec);
        assert!((kraus.amplitude(0, 0).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_channel_leaves_state() {
        let spec = HilbertSpec::new(6).unwrap();
        let psi = StateVector::from_slice(&[
            C64::new(0.3, 0.1),
            C64::new(-0.2, 0.5),
            C64::new(0.0, 0.4),
            C64::from(0.1),
            C64::from(0.0),
            C64::new(0.2, -0.2),
            C64::from(0.05),
        ])
        .unwrap();
        let rho = psi.density();
        {
            let p = params(0.1, 0.0, 0.0);
            let out = apply_channel(&rho, &kraus_from_mzi(&p, &spec)).unwrap();
            assert!((out.entries() - rho.entries()).max_norm() < 1e-14);
        }
    }

    #[test]
    fn maximal_single_photon_loss() {
        let spec = HilbertSpec::new(3).unwrap();
        let rho = StateVector::basis(1, &spec).unwrap().density();
        for chi in [0.01, 0.2, 0.7] {
            let out = apply_channel(&rho, &kraus_from_mzi(&params(0.0, chi, 2.0 * PI), &spec))
                .unwrap();
            let expect = 1.0 - (2.0 * chi).sin().powi(2);
            assert_abs_diff_eq!(out.get(1, 1).re, expect, epsilon = 1e-13);
            assert_abs_diff_eq!(out.trace(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn apply_rejects_wrong_dimension() {
        let kraus = kraus_from_mzi(&params(0.0, 0.1, 1.0), &HilbertSpec::new(3).unwrap());
        let rho = StateVector::basis(0, &HilbertSpec::new(4).unwrap()).unwrap().density();
        assert!(apply_channel(&rho, &kraus).is_err());
    }

    #[test]
    fn update_rule_vacuum_gain() {
        let spec = HilbertSpec::new(3).unwrap();
        let (chi, tau) = (0.05, 1.3);
        let p = params(0.0, chi, tau);
        let psi = StateVector::from_slice(&[C64::from(0.6), C64::from(0.8)])
            .unwrap();
        let mut padded = vec![C64::from(0.0); 4];
        padded[..2].copy_from_slice(psi.amplitudes().as_slice());
        let rho = StateVector::from_slice(&padded).unwrap().density();
        let out = update_rule_step(&rho, &p, &spec).unwrap();
        let expect = 0.36 + 2.0 * chi * chi * (1.0 + tau.cos()) * 0.64;
        assert_abs_diff_eq!(out.get(0, 0).re, expect, epsilon = 1e-15);
    }

    #[test]
    fn update_rule_comb_factor_has_unit_modulus() {
        // omega_{n,n-1} tau = pi (1 + (n - 1)) makes even n lossless.
        let spec = HilbertSpec::new(12).unwrap();
        let p = params(2.5e-3, 0.05, 200.0 * PI);
        let rule = UpdateRule::new(&p, &spec);
        for n in (2..=12).step_by(2) {
            for m in (0..=n).step_by(2) {
                assert_abs_diff_eq!(rule.retain[(n, m)].norm(), 1.0, epsilon = 1e-10);
            }
        }
        assert!(rule.retain[(3, 3)].norm() < 1.0 - 1e-3);
    }

    #[test]
    fn update_rule_tracks_exact_channel_to_fourth_order() {
        let spec = HilbertSpec::new(12).unwrap();
        let rho = crate::states::coherent(C64::from(1.0), &spec).unwrap().density();
        let err = |chi: f64| {
            let p = params(2.5e-3, chi, 200.0 * PI);
            let exact = apply_channel(&rho, &kraus_from_mzi(&p, &spec)).unwrap();
            let approx = update_rule_step(&rho, &p, &spec).unwrap();
            (exact.entries() - approx.entries()).max_norm()
        };
        let (e1, e2) = (err(0.01), err(0.005));
        let ratio = e1 / e2;
        assert!((14.0..18.0).contains(&ratio), "ratio {ratio}");
    }
}
