//! Observables on density matrices: overlaps, distances, number statistics
//! and phase-space pictures.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, StateVector, C64};
use crate::linalg;
use crate::states::SqueezeParam;

/// Named scalar observables at one time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricSample {
    pub time: f64,
    values: BTreeMap<String, f64>,
}

impl MetricSample {
    pub fn new(time: f64) -> Self {
        Self {
            time,
            values: BTreeMap::new(),
        }
    }

    /// Rejects non-finite values.
    pub fn insert(&mut self, name: impl Into<String>, value: f64) -> Result<()> {
        let name = name.into();
        if !value.is_finite() {
            return Err(Error::invalid("metric", format!("{name} is not finite: {value}")));
        }
        self.values.insert(name, value);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

fn check_same_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `<psi| rho |psi>`.
pub fn fidelity_pure(rho: &DensityMatrix, target: &StateVector) -> Result<f64> {
    check_same_dim(rho.dim(), target.dim())?;
    let v = target.amplitudes();
    Ok((v.adjoint() * rho.entries() * v)[(0, 0)].re)
}

/// `sqrt(F)`, the overlap-amplitude form of a probability fidelity.
pub fn amplitude_fidelity(f: f64) -> f64 {
    f.max(0.0).sqrt()
}

/// `Tr|rho - sigma| / 2`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_same_dim(rho.dim(), sigma.dim())?;
    let diff = rho.entries() - sigma.entries();
    let diff = (&diff + diff.adjoint()) * C64::from(0.5);
    Ok(0.5 * linalg::hermitian_eigenvalues(&diff).iter().map(|l| l.abs()).sum::<f64>())
}

pub fn populations(rho: &DensityMatrix) -> Vec<f64> {
    rho.populations()
}

fn check_k(rho: &DensityMatrix, k: usize) -> Result<()> {
    if k >= rho.dim() {
        return Err(Error::invalid(
            "k",
            format!("coherence order {k} exceeds n_max = {}", rho.dim() - 1),
        ));
    }
    Ok(())
}

/// `sum_n |rho_{n,n-k}|`.
pub fn coherence_sum(rho: &DensityMatrix, k: usize) -> Result<f64> {
    check_k(rho, k)?;
    Ok((k..rho.dim()).map(|n| rho.get(n, n - k).norm()).sum())
}

/// `sum |rho_{n,n-k}|` restricted to `n = offset (mod delta_n)`.
pub fn comb_coherence_sum(rho: &DensityMatrix, k: usize, delta_n: usize, offset: usize) -> Result<f64> {
    check_k(rho, k)?;
    check_delta_n(delta_n)?;
    Ok((k..rho.dim())
        .filter(|n| n % delta_n == offset % delta_n)
        .map(|n| rho.get(n, n - k).norm())
        .sum())
}

fn check_delta_n(delta_n: usize) -> Result<()> {
    if delta_n == 0 {
        return Err(Error::invalid("delta_n", "must be at least 1"));
    }
    Ok(())
}

/// `sum_{n = offset (mod delta_n)} p_n`.
pub fn comb_weight(rho: &DensityMatrix, delta_n: usize, offset: usize) -> Result<f64> {
    check_delta_n(delta_n)?;
    Ok(rho
        .populations()
        .iter()
        .enumerate()
        .filter(|(n, _)| n % delta_n == offset % delta_n)
        .map(|(_, p)| p)
        .sum())
}

/// `<(-1)^n>`.
pub fn parity(rho: &DensityMatrix) -> f64 {
    rho.populations()
        .iter()
        .enumerate()
        .map(|(n, p)| if n % 2 == 0 { *p } else { -p })
        .sum()
}

/// `R rho R^dag` with `R = exp(i theta n)`.
pub fn rotate_frame(rho: &DensityMatrix, theta: f64) -> DensityMatrix {
    let d = rho.dim();
    let phases: Vec<C64> = (0..d).map(|n| C64::from_polar(1.0, theta * n as f64)).collect();
    let m = DMatrix::from_fn(d, d, |n, m| phases[n] * rho.get(n, m) * phases[m].conj());
    DensityMatrix::from_lower(m)
}

/// Number of grid points in the coarse rotation scan.
pub const ROTATION_GRID: usize = 720;
const ROTATION_TOL: f64 = 1e-6;

/// Fourier form of `theta -> F(rotate_frame(rho, theta), psi)`:
/// `F(theta) = S_0 + 2 Re sum_{k >= 1} exp(i k theta) S_k`.
struct RotationProfile {
    s: Vec<C64>,
}

impl RotationProfile {
    fn new(rho: &DensityMatrix, v: &DVector<C64>) -> Self {
        let d = rho.dim();
        let s = (0..d)
            .map(|k| (k..d).map(|n| v[n].conj() * rho.get(n, n - k) * v[n - k]).sum())
            .collect();
        Self { s }
    }

    fn eval(&self, theta: f64) -> f64 {
        let step = C64::from_polar(1.0, theta);
        let mut phase = C64::from(1.0);
        let mut tail = C64::from(0.0);
        for s in &self.s[1..] {
            phase *= step;
            tail += phase * s;
        }
        self.s[0].re + 2.0 * tail.re
    }

    /// `(max F, argmax theta in [0, 2 pi))`.
    fn maximize(&self) -> (f64, f64) {
        let h = TAU / ROTATION_GRID as f64;
        let (mut best_f, mut best_t) = (f64::NEG_INFINITY, 0.0);
        for i in 0..ROTATION_GRID {
            let t = i as f64 * h;
            let f = self.eval(t);
            if f > best_f {
                best_f = f;
                best_t = t;
            }
        }
        let (t, f) = golden_max(|t| self.eval(t), best_t - h, best_t + h, ROTATION_TOL);
        if f > best_f {
            best_f = f;
            best_t = t;
        }
        (best_f, best_t.rem_euclid(TAU))
    }
}

/// Golden-section search for a maximum of `f` on `[a, b]`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

/// `max_theta F(rotate_frame(rho, theta), target)` and the maximizing angle.
pub fn fidelity_rotation_optimized(rho: &DensityMatrix, target: &StateVector) -> Result<(f64, f64)> {
    check_same_dim(rho.dim(), target.dim())?;
    Ok(RotationProfile::new(rho, target.amplitudes()).maximize())
}

/// Best fit of `rho` by a squeezed vacuum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezedFit {
    pub fidelity: f64,
    pub z: SqueezeParam,
}

/// Amplitudes of `S(r)|0>`, real `r >= 0`, truncated but not renormalized.
fn squeezed_vacuum_amplitudes(r: f64, dim: usize) -> DVector<C64> {
    let mut amps = vec![C64::from(0.0); dim];
    let mut c = 1.0 / r.cosh().sqrt();
    let t = -r.tanh();
    let mut n = 0;
    while n < dim {
        amps[n] = C64::from(c);
        let (k1, k2) = ((n + 1) as f64, (n + 2) as f64);
        c *= t * (k1 * k2).sqrt() / k2;
        n += 2;
    }
    // Not renormalized: the overlap with a state supported below the cutoff
    // does not see the tail.
    DVector::from_vec(amps)
}

/// Maximizes `<psi_z| rho |psi_z>` over squeezed vacua `|psi_z>`,
/// `|z| <= 3`. A phase of `z` is a frame rotation, so only `|z|` is scanned
/// and the phase is optimized analytically per magnitude.
pub fn best_squeezed_vacuum_fidelity(rho: &DensityMatrix) -> Result<SqueezedFit> {
    let d = rho.dim();
    let fit = |r: f64| {
        let psi = squeezed_vacuum_amplitudes(r, d);
        RotationProfile::new(rho, &psi).maximize()
    };
    let steps = 60;
    let h = SqueezeParam::MAX_ABS / steps as f64;
    let (mut best_r, mut best) = (0.0, fit(0.0));
    for i in 1..=steps {
        let r = i as f64 * h;
        let f = fit(r);
        if f.0 > best.0 {
            best = f;
            best_r = r;
        }
    }
    let lo = (best_r - h).max(0.0);
    let hi = (best_r + h).min(SqueezeParam::MAX_ABS);
    let (r, _) = golden_max(|r| fit(r).0, lo, hi, 1e-6);
    let refined = fit(r);
    if refined.0 > best.0 {
        best = refined;
        best_r = r;
    }
    // Rotating rho by theta equals testing against phase -2 theta.
    let z = C64::from_polar(best_r, -2.0 * best.1);
    Ok(SqueezedFit {
        fidelity: best.0,
        z: SqueezeParam::new(z)?,
    })
}

/// Wigner function sampled on a rectangular grid, `alpha = x + i p`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    /// `values[ip][ix] = W(xs[ix] + i ps[ip])`.
    pub values: Vec<Vec<f64>>,
}

impl WignerGrid {
    /// Riemann sum of `W dx dp`.
    pub fn integral(&self) -> f64 {
        let step = |v: &[f64]| if v.len() > 1 { v[1] - v[0] } else { 0.0 };
        let total: f64 = self.values.iter().flatten().sum();
        total * step(&self.xs) * step(&self.ps)
    }
}

/// Evaluates `W(alpha) = (2/pi) Tr[rho D(alpha) P D(alpha)^dag]` with `P`
/// the parity operator, through the closed-form Fock matrix elements of
/// `D(2 alpha) P`.
pub struct WignerEvaluator<'a> {
    rho: &'a DensityMatrix,
    ln_fact: Vec<f64>,
}

impl<'a> WignerEvaluator<'a> {
    pub fn new(rho: &'a DensityMatrix) -> Self {
        let d = rho.dim();
        let mut ln_fact = vec![0.0; d + 1];
        for n in 1..=d {
            ln_fact[n] = ln_fact[n - 1] + (n as f64).ln();
        }
        Self { rho, ln_fact }
    }

    pub fn at(&self, alpha: C64) -> f64 {
        let d = self.rho.dim();
        let beta = alpha * 2.0;
        let x = beta.norm_sqr();
        let (r, phi) = beta.to_polar();
        let mut total = 0.0;
        let mut lag = vec![0.0; d];
        for k in 0..d {
            if k > 0 && r == 0.0 {
                break;
            }
            // Generalized Laguerre L_n^{(k)}(x) for n < d - k.
            let len = d - k;
            lag[0] = 1.0;
            if len > 1 {
                lag[1] = 1.0 + k as f64 - x;
            }
            for n in 1..len.saturating_sub(1) {
                let nf = n as f64;
                lag[n + 1] = ((2.0 * nf + 1.0 + k as f64 - x) * lag[n] - (nf + k as f64) * lag[n - 1])
                    / (nf + 1.0);
            }
            let ln_r = if k == 0 { 0.0 } else { k as f64 * r.ln() };
            let rot = C64::from_polar(1.0, -(k as f64) * phi);
            for n in 0..len {
                let ln_pref = 0.5 * (self.ln_fact[n] - self.ln_fact[n + k]) + ln_r - 0.5 * x;
                let a = ln_pref.exp() * lag[n];
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                let term = if k == 0 {
                    self.rho.get(n, n).re
                } else {
                    2.0 * (self.rho.get(n + k, n) * rot).re
                };
                total += sign * a * term;
            }
        }
        2.0 / PI * total
    }
}

fn linspace(range: (f64, f64), n: usize) -> Vec<f64> {
    let (a, b) = range;
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Wigner function on `resolution x resolution` points spanning the given
/// ranges (inclusive).
pub fn wigner_grid(
    rho: &DensityMatrix,
    x_range: (f64, f64),
    p_range: (f64, f64),
    resolution: usize,
) -> Result<WignerGrid> {
    if resolution < 2 {
        return Err(Error::invalid("resolution", "must be at least 2"));
    }
    for (a, b) in [x_range, p_range] {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::invalid("range", format!("invalid interval [{a}, {b}]")));
        }
    }
    let xs = linspace(x_range, resolution);
    let ps = linspace(p_range, resolution);
    let eval = WignerEvaluator::new(rho);
    let values = ps
        .iter()
        .map(|&p| xs.iter().map(|&x| eval.at(C64::new(x, p))).collect())
        .collect();
    Ok(WignerGrid { xs, ps, values })
}
