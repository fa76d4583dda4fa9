//! Factories for the pure and mixed states used as inputs and targets.
//!
//! Coherent-family states are evaluated from their Poisson amplitudes.
//! Squeezing and displacement are built by exponentiating their
//! anti-Hermitian generators on an enlarged space (`2 dim + 20` levels) and
//! truncating afterwards, so the truncated generator's edge artifacts stay
//! far above the levels that are kept.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, HilbertSpec, StateVector, C64};
use crate::linalg;

/// Squeezing parameter `z` of `exp((z* a^2 - z a^dag^2) / 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeParam(C64);

impl SqueezeParam {
    pub const MAX_ABS: f64 = 3.0;

    pub fn new(z: C64) -> Result<Self> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::invalid("z", "must be finite"));
        }
        if z.norm() > Self::MAX_ABS {
            return Err(Error::invalid(
                "z",
                format!("|z| = {} exceeds {}", z.norm(), Self::MAX_ABS),
            ));
        }
        Ok(Self(z))
    }

    pub fn value(&self) -> C64 {
        self.0
    }
}

/// `sum_{j < legs} |exp(2 pi i j / legs) alpha>`, normalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatSpec {
    alpha: C64,
    legs: usize,
}

impl CatSpec {
    pub fn new(alpha: C64, legs: usize) -> Result<Self> {
        if legs < 1 {
            return Err(Error::invalid("legs", "must be at least 1"));
        }
        if !(alpha.re.is_finite() && alpha.im.is_finite()) {
            return Err(Error::invalid("alpha", "must be finite"));
        }
        Ok(Self { alpha, legs })
    }

    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    pub fn legs(&self) -> usize {
        self.legs
    }

    /// Leg amplitudes `exp(2 pi i j / legs) alpha`.
    pub fn leg_amplitudes(&self) -> Vec<C64> {
        (0..self.legs)
            .map(|j| self.alpha * C64::from_polar(1.0, 2.0 * PI * j as f64 / self.legs as f64))
            .collect()
    }
}

/// `exp(-|b|^2/2) b^n / sqrt(n!)` for `n < dim`.
fn coherent_amplitudes(beta: C64, dim: usize) -> Vec<C64> {
    let mut amps = Vec::with_capacity(dim);
    let mut c = C64::from((-0.5 * beta.norm_sqr()).exp());
    amps.push(c);
    for n in 1..dim {
        c = c * beta / (n as f64).sqrt();
        amps.push(c);
    }
    amps
}

fn check_coherent_edge(beta: C64, spec: &HilbertSpec) -> Result<()> {
    let amps = coherent_amplitudes(beta, spec.dim());
    let edge = amps[spec.n_max()].norm_sqr();
    if edge > spec.leak_tol() {
        return Err(Error::CutoffTooSmall {
            n_max: spec.n_max(),
            leak: edge,
            tol: spec.leak_tol(),
        });
    }
    Ok(())
}

/// Glauber coherent state `|alpha>`.
pub fn coherent(alpha: C64, spec: &HilbertSpec) -> Result<StateVector> {
    check_coherent_edge(alpha, spec)?;
    StateVector::from_slice(&coherent_amplitudes(alpha, spec.dim()))
}

/// Normalized `sum_i c_i |beta_i>`. The normalization is taken from the exact
/// Gram matrix of the coherent components; the truncated vector is then
/// renormalized to remove the (leak-checked) tail.
fn coherent_superposition(terms: &[(C64, C64)], spec: &HilbertSpec) -> Result<StateVector> {
    let dim = spec.dim();
    let mut amps = DVector::<C64>::zeros(dim);
    for &(coeff, beta) in terms {
        check_coherent_edge(beta, spec)?;
        for (slot, c) in amps.iter_mut().zip(coherent_amplitudes(beta, dim)) {
            *slot += coeff * c;
        }
    }
    let mut gram = C64::from(0.0);
    for &(ci, bi) in terms {
        for &(cj, bj) in terms {
            let overlap = (-0.5 * bi.norm_sqr() - 0.5 * bj.norm_sqr() + bi.conj() * bj).exp();
            gram += ci.conj() * cj * overlap;
        }
    }
    if !(gram.re > 0.0) {
        return Err(Error::invalid("terms", "superposition has zero norm"));
    }
    StateVector::new(amps.unscale(gram.re.sqrt()))
}

/// Normalized `Delta n`-legged cat state.
pub fn cat(cat: &CatSpec, spec: &HilbertSpec) -> Result<StateVector> {
    let terms: Vec<(C64, C64)> = cat
        .leg_amplitudes()
        .into_iter()
        .map(|beta| (C64::from(1.0), beta))
        .collect();
    coherent_superposition(&terms, spec)
}

/// The parity-free state `|i alpha> + i |-i alpha>` reached by pure Kerr
/// evolution of `|alpha>` after half a Kerr period.
pub fn i_cat(alpha: C64, spec: &HilbertSpec) -> Result<StateVector> {
    let i = C64::i();
    coherent_superposition(&[(C64::from(1.0), i * alpha), (i, -i * alpha)], spec)
}

/// `(N+1)^{-1/2} sum_{s <= N} |s>`.
pub fn phase_state(n: usize, spec: &HilbertSpec) -> Result<StateVector> {
    if n > spec.n_max() {
        return Err(Error::invalid(
            "N",
            format!("phase-state size {n} exceeds n_max = {}", spec.n_max()),
        ));
    }
    let amp = C64::from(1.0 / ((n + 1) as f64).sqrt());
    let amps = DVector::from_fn(spec.dim(), |s, _| if s <= n { amp } else { C64::from(0.0) });
    Ok(StateVector::new(amps).expect("non-empty support"))
}

pub fn fock(n: usize, spec: &HilbertSpec) -> Result<StateVector> {
    StateVector::basis(n, spec)
}

/// Incoherent mixture `(|a><a| + |-a><-a|) / 2`.
pub fn mixed_coherent(alpha: C64, spec: &HilbertSpec) -> Result<DensityMatrix> {
    let plus = coherent(alpha, spec)?.density();
    let minus = coherent(-alpha, spec)?.density();
    DensityMatrix::mixture(&[(0.5, &plus), (0.5, &minus)])
}

fn padded_dim(dim: usize) -> usize {
    2 * dim + 20
}

fn annihilation(dim: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |r, c| {
        if c == r + 1 {
            C64::from((c as f64).sqrt())
        } else {
            C64::from(0.0)
        }
    })
}

/// `exp((z* a^2 - z a^dag^2) / 2)` on a `dim`-level space.
pub fn squeeze_operator(z: SqueezeParam, dim: usize) -> DMatrix<C64> {
    let a = annihilation(dim);
    let a2 = &a * &a;
    let ad2 = a2.adjoint();
    let z = z.value();
    let generator = (a2 * z.conj() - ad2 * z) * C64::from(0.5);
    linalg::expm_anti_hermitian(&generator)
}

/// `exp(alpha a^dag - alpha* a)` on a `dim`-level space.
pub fn displacement_operator(alpha: C64, dim: usize) -> DMatrix<C64> {
    let a = annihilation(dim);
    let generator = a.adjoint() * alpha - a * alpha.conj();
    linalg::expm_anti_hermitian(&generator)
}

/// Truncates a state computed on the padded space, failing if the
/// population at or beyond `n_max` exceeds the leak tolerance.
fn truncate_checked(full: &DVector<C64>, spec: &HilbertSpec) -> Result<StateVector> {
    let tail: f64 = full.iter().skip(spec.n_max()).map(|c| c.norm_sqr()).sum::<f64>()
        / full.norm_squared();
    if tail > spec.leak_tol() {
        return Err(Error::CutoffTooSmall {
            n_max: spec.n_max(),
            leak: tail,
            tol: spec.leak_tol(),
        });
    }
    StateVector::new(full.rows(0, spec.dim()).into_owned())
}

fn padded_vacuum(dim: usize) -> DVector<C64> {
    let mut v = DVector::zeros(dim);
    v[0] = C64::from(1.0);
    v
}

/// Squeezed vacuum `S(z)|0>`; odd amplitudes are set to exactly zero.
pub fn squeezed_vacuum(z: SqueezeParam, spec: &HilbertSpec) -> Result<StateVector> {
    let big = padded_dim(spec.dim());
    let mut psi = squeeze_operator(z, big).column(0).into_owned();
    for (n, c) in psi.iter_mut().enumerate() {
        if n % 2 == 1 {
            *c = C64::from(0.0);
        }
    }
    truncate_checked(&psi, spec)
}

/// `D(alpha) S(z) |0>`.
pub fn displaced_squeezed(alpha: C64, z: SqueezeParam, spec: &HilbertSpec) -> Result<StateVector> {
    if alpha == C64::from(0.0) {
        return squeezed_vacuum(z, spec);
    }
    let big = padded_dim(spec.dim());
    let mut psi = padded_vacuum(big);
    if z.value() != C64::from(0.0) {
        psi = squeeze_operator(z, big) * psi;
        for (n, c) in psi.iter_mut().enumerate() {
            if n % 2 == 1 {
                *c = C64::from(0.0);
            }
        }
    }
    psi = displacement_operator(alpha, big) * psi;
    truncate_checked(&psi, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::MaxNorm;
    use crate::fock::ladder_operators;

    fn spec(n: usize) -> HilbertSpec {
        HilbertSpec::new(n).unwrap()
    }

    fn c(re: f64) -> C64 {
        C64::from(re)
    }

    #[test]
    fn vacuum_from_zero_amplitude() {
        let s = spec(10);
        let v = coherent(c(0.0), &s).unwrap();
        assert_eq!(v, StateVector::basis(0, &s).unwrap());
    }

    #[test]
    fn coherent_mean_photon_number() {
        let s = spec(40);
        let v = coherent(c(10f64.sqrt()), &s).unwrap();
        let n = v.expectation(&ladder_operators(&s).number).re;
        assert!((n - 10.0).abs() < 1e-6, "{n}");
    }

    #[test]
    fn coherent_poisson_tie_at_integer_mean() {
        let s = spec(40);
        let p = coherent(c(10f64.sqrt()), &s).unwrap().populations();
        let (argmax, _) = p
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert!(argmax == 9 || argmax == 10);
        assert!((p[9] - p[10]).abs() < 1e-14);
        // Poisson pmf evaluated directly.
        let pmf10 = (-10.0f64).exp() * 10f64.powi(10) / 3628800.0;
        assert!((p[10] - pmf10).abs() < 1e-12);
    }

    #[test]
    fn coherent_rejects_small_cutoff() {
        let err = coherent(c(3.0), &spec(10)).unwrap_err();
        assert!(matches!(err, Error::CutoffTooSmall { n_max: 10, .. }));
    }

    #[test]
    fn squeeze_param_bounds() {
        assert!(SqueezeParam::new(C64::new(3.1, 0.0)).is_err());
        assert!(SqueezeParam::new(C64::new(f64::NAN, 0.0)).is_err());
        assert!(SqueezeParam::new(C64::new(0.0, 3.0)).is_ok());
    }

    #[test]
    fn squeezed_vacuum_identity_and_parity() {
        let s = spec(50);
        let z0 = SqueezeParam::new(c(0.0)).unwrap();
        let v = squeezed_vacuum(z0, &s).unwrap();
        assert!((v.amplitudes() - StateVector::basis(0, &s).unwrap().amplitudes()).max_norm() < 1e-15);

        let z = SqueezeParam::new(C64::new(0.4, -0.7)).unwrap();
        let v = squeezed_vacuum(z, &s).unwrap();
        for (n, p) in v.populations().iter().enumerate() {
            if n % 2 == 1 {
                assert_eq!(*p, 0.0);
            }
        }
    }

    #[test]
    fn squeezed_quadrature_variance() {
        let s = spec(40);
        let ops = ladder_operators(&s);
        let x = &ops.annihilation + &ops.creation;
        let x2 = &x * &x;
        let var = |psi: &StateVector| {
            let m = psi.expectation(&x).re;
            psi.expectation(&x2).re - m * m
        };
        let vac = var(&StateVector::basis(0, &s).unwrap());
        let sq = var(&squeezed_vacuum(SqueezeParam::new(c(0.5)).unwrap(), &s).unwrap());
        assert!((sq / vac - (-1.0f64).exp()).abs() < 1e-4, "{}", sq / vac);
    }

    #[test]
    fn squeezed_vacuum_matches_closed_form() {
        // c_{2m} = (-e^{i phi} tanh r)^m sqrt((2m)!) / (2^m m!) / sqrt(cosh r)
        let s = spec(30);
        let (r, phi) = (0.6f64, 0.9f64);
        let z = SqueezeParam::new(C64::from_polar(r, phi)).unwrap();
        let v = squeezed_vacuum(z, &s).unwrap();
        let mut amp = C64::from(1.0 / r.cosh().sqrt());
        let ratio = -C64::from_polar(r.tanh(), phi);
        for m in 0..=15usize {
            assert!((v.amplitudes()[2 * m] - amp).norm() < 1e-9, "m = {m}");
            let (k1, k2) = ((2 * m + 1) as f64, (2 * m + 2) as f64);
            amp *= ratio * (k1 * k2).sqrt() / (2.0 * (m + 1) as f64);
        }
    }

    #[test]
    fn displaced_squeezed_limits() {
        let s = spec(25);
        let z = SqueezeParam::new(c(0.3)).unwrap();
        let ds = displaced_squeezed(c(0.0), z, &s).unwrap();
        assert_eq!(ds, squeezed_vacuum(z, &s).unwrap());

        let alpha = C64::new(1.5, -0.4);
        let z0 = SqueezeParam::new(c(0.0)).unwrap();
        let ds = displaced_squeezed(alpha, z0, &s).unwrap();
        let coh = coherent(alpha, &s).unwrap();
        assert!((ds.amplitudes() - coh.amplitudes()).max_norm() < 1e-10);

        let a = ladder_operators(&s).annihilation;
        assert!((ds.expectation(&a) - alpha).norm() < 1e-8);
    }

    #[test]
    fn displaced_squeezed_rejects_small_cutoff() {
        let z = SqueezeParam::new(c(0.6)).unwrap();
        assert!(matches!(
            displaced_squeezed(c(3.0), z, &spec(12)),
            Err(Error::CutoffTooSmall { .. })
        ));
    }

    #[test]
    fn one_leg_cat_is_coherent() {
        let s = spec(30);
        let alpha = C64::new(1.2, 0.7);
        let cat1 = cat(&CatSpec::new(alpha, 1).unwrap(), &s).unwrap();
        let coh = coherent(alpha, &s).unwrap();
        assert!((cat1.amplitudes() - coh.amplitudes()).max_norm() < 1e-14);
        assert!(CatSpec::new(alpha, 0).is_err());
    }

    #[test]
    fn even_cat_populations_follow_even_poisson() {
        let s = spec(40);
        let a2 = 10.0f64;
        let v = cat(&CatSpec::new(c(a2.sqrt()), 2).unwrap(), &s).unwrap();
        let p = v.populations();
        let poisson: Vec<f64> = coherent(c(a2.sqrt()), &s).unwrap().populations();
        let even_mass: f64 = poisson.iter().step_by(2).sum();
        for n in 0..=40 {
            if n % 2 == 1 {
                assert!(p[n] < 1e-28);
            } else {
                assert!((p[n] - poisson[n] / even_mass).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn five_leg_cat_support() {
        let s = spec(45);
        let v = cat(&CatSpec::new(c(15f64.sqrt()), 5).unwrap(), &s).unwrap();
        for (n, p) in v.populations().iter().enumerate() {
            if n % 5 != 0 {
                assert!(*p < 1e-12, "n = {n}: {p}");
            }
        }
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn i_cat_properties() {
        let s = spec(40);
        let zero = i_cat(c(0.0), &s).unwrap();
        assert!((zero.amplitudes()[0].norm() - 1.0).abs() < 1e-15);

        let alpha = c(10f64.sqrt());
        let ic = i_cat(alpha, &s).unwrap();
        let even = cat(&CatSpec::new(alpha, 2).unwrap(), &s).unwrap();
        assert!(ic.inner(&even).unwrap().norm() < 1.0 - 1e-3);
        let poisson = coherent(alpha, &s).unwrap().populations();
        for (n, (p, q)) in ic.populations().iter().zip(&poisson).enumerate() {
            assert!((p - q).abs() < 1e-12, "n = {n}");
        }
        assert!(ic.populations()[11] > 1e-3);
    }

    #[test]
    fn phase_state_is_uniform() {
        let s = spec(8);
        let v = phase_state(0, &s).unwrap();
        assert_eq!(v, StateVector::basis(0, &s).unwrap());
        let rho = phase_state(3, &s).unwrap().density();
        for n in 0..4 {
            for m in 0..4 {
                assert!((rho.get(n, m) - c(0.25)).norm() < 1e-15);
            }
        }
        for n in 0..=8 {
            assert!((phase_state(n, &s).unwrap().norm() - 1.0).abs() < 1e-15);
        }
        assert!(phase_state(9, &s).is_err());
    }

    #[test]
    fn mixed_coherent_has_only_even_coherences() {
        let s = spec(30);
        let rho = mixed_coherent(c(2.0), &s).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        assert!(rho.get(3, 2).norm() < 1e-15);
        assert!(rho.get(3, 1).norm() > 1e-3);
    }
}
