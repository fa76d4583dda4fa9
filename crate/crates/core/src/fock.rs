//! Truncated single-mode Fock space: state containers, ladder operators, the
//! Kerr unitary and the two-mode partial trace.
//!
//! Basis states are `|0>..|n_max>`. Two-mode operators use the Kronecker
//! ordering `|n_a, n_b> -> n_a * dim_b + n_b`, which is what
//! `DMatrix::kronecker(op_a, op_b)` produces.

use std::f64::consts::PI;

use nalgebra::storage::RawStorage;
use nalgebra::{DMatrix, DVector, Dim, Matrix};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;

pub type C64 = Complex64;

/// Largest tolerated population at `n = n_max` unless overridden.
pub const DEFAULT_LEAK_TOL: f64 = 1e-8;

/// Hermiticity slack accepted by [`DensityMatrix::new`] before the input is
/// symmetrized.
const HERMITIAN_INPUT_TOL: f64 = 1e-10;

/// A truncated Fock space `|0>..|n_max>` together with the leakage policy
/// used by state factories and evolutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HilbertSpec {
    n_max: usize,
    leak_tol: f64,
}

impl HilbertSpec {
    pub fn new(n_max: usize) -> Result<Self> {
        Self::with_leak_tol(n_max, DEFAULT_LEAK_TOL)
    }

    pub fn with_leak_tol(n_max: usize, leak_tol: f64) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::invalid("n_max", "must be at least 1"));
        }
        if !(leak_tol > 0.0 && leak_tol < 1.0) {
            return Err(Error::invalid(
                "leak_tol",
                format!("must lie in (0, 1), got {leak_tol}"),
            ));
        }
        Ok(Self { n_max, leak_tol })
    }

    /// Space sized by [`default_cutoff`] for coherent-family states of
    /// amplitude `alpha_abs`.
    pub fn for_amplitude(alpha_abs: f64) -> Result<Self> {
        Self::new(default_cutoff(alpha_abs))
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn leak_tol(&self) -> f64 {
        self.leak_tol
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    pub(crate) fn check_dim(&self, found: usize) -> Result<()> {
        if found == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                found,
            })
        }
    }
}

/// `ceil(|a|^2 + 5|a| + 10)`: keeps the top-level population of a coherent
/// state of amplitude `a` around 1e-9 or below for `|a|^2` up to ~15.
pub fn default_cutoff(alpha_abs: f64) -> usize {
    let a = alpha_abs.abs();
    (a * a + 5.0 * a + 10.0).ceil() as usize
}

/// Linear frequency and Kerr strength of the bare cavity,
/// `H0 / hbar = omega_a n + beta omega_a n (n - 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    omega_a: f64,
    beta: f64,
}

impl CavityParams {
    pub fn new(omega_a: f64, beta: f64) -> Result<Self> {
        if !(omega_a.is_finite() && omega_a > 0.0) {
            return Err(Error::invalid(
                "omega_a",
                format!("must be positive and finite, got {omega_a}"),
            ));
        }
        if !beta.is_finite() {
            return Err(Error::invalid("beta", "must be finite"));
        }
        Ok(Self { omega_a, beta })
    }

    pub fn omega_a(&self) -> f64 {
        self.omega_a
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `E_n / hbar`.
    pub fn energy(&self, n: usize) -> f64 {
        let n = n as f64;
        self.omega_a * (n + self.beta * n * (n - 1.0))
    }

    /// Recurrence time of lossless Kerr evolution, `pi / (omega_a beta)`.
    /// Infinite for a linear cavity.
    pub fn kerr_period(&self) -> f64 {
        PI / (self.omega_a * self.beta.abs())
    }
}

/// Largest entry modulus of a complex matrix or vector.
pub trait MaxNorm {
    fn max_norm(&self) -> f64;
}

impl<R: Dim, C: Dim, S: RawStorage<C64, R, C>> MaxNorm for Matrix<C64, R, C, S> {
    fn max_norm(&self) -> f64 {
        self.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// A normalized pure state in the Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<C64>,
}

impl StateVector {
    /// Normalizes `amplitudes`; fails on a zero vector.
    pub fn new(amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::invalid("amplitudes", "vector has zero or non-finite norm"));
        }
        Ok(Self {
            amplitudes: amplitudes.unscale(norm),
        })
    }

    pub fn from_slice(amplitudes: &[C64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(amplitudes))
    }

    /// Fock state `|n>`.
    pub fn basis(n: usize, spec: &HilbertSpec) -> Result<Self> {
        if n > spec.n_max() {
            return Err(Error::invalid(
                "n",
                format!("Fock index {n} exceeds n_max = {}", spec.n_max()),
            ));
        }
        let mut amps = DVector::zeros(spec.dim());
        amps[n] = C64::new(1.0, 0.0);
        Ok(Self { amplitudes: amps })
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }

    /// `<psi|op|psi>`.
    pub fn expectation(&self, op: &DMatrix<C64>) -> C64 {
        self.amplitudes.dotc(&(op * &self.amplitudes))
    }
}

/// A cavity density matrix in the Fock basis. Always exactly Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<C64>,
}

impl DensityMatrix {
    /// Accepts a square matrix that is Hermitian to 1e-10 and removes the
    /// residual anti-Hermitian part. Trace and positivity are not enforced.
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        let defect = hermiticity_defect(&entries);
        if defect > HERMITIAN_INPUT_TOL {
            return Err(Error::invalid(
                "entries",
                format!("matrix is not Hermitian (max |rho - rho^dag| = {defect:.3e})"),
            ));
        }
        Ok(Self::hermitized(entries))
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let a = psi.amplitudes();
        Self::hermitized(a * a.adjoint())
    }

    /// Convex combination `sum_i w_i rho_i`.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let (_, first) = parts
            .first()
            .ok_or_else(|| Error::invalid("parts", "empty mixture"))?;
        let dim = first.dim();
        let mut acc = DMatrix::zeros(dim, dim);
        for (w, rho) in parts {
            if rho.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: rho.dim(),
                });
            }
            acc += rho.entries.map(|z| z * *w);
        }
        Ok(Self::hermitized(acc))
    }

    /// `(m + m^dag) / 2`.
    pub(crate) fn hermitized(mut m: DMatrix<C64>) -> Self {
        let n = m.nrows();
        for j in 0..n {
            m[(j, j)] = C64::new(m[(j, j)].re, 0.0);
            for i in (j + 1)..n {
                let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                m[(i, j)] = avg;
                m[(j, i)] = avg.conj();
            }
        }
        Self { entries: m }
    }

    /// Builds from a matrix whose lower triangle (including the diagonal) is
    /// authoritative; the upper triangle is overwritten by its mirror.
    pub(crate) fn from_lower(mut m: DMatrix<C64>) -> Self {
        let n = m.nrows();
        for j in 0..n {
            m[(j, j)] = C64::new(m[(j, j)].re, 0.0);
            for i in (j + 1)..n {
                m[(j, i)] = m[(i, j)].conj();
            }
        }
        Self { entries: m }
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// `<n|rho|m>`.
    pub fn get(&self, n: usize, m: usize) -> C64 {
        self.entries[(n, m)]
    }

    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.entries.diagonal().iter().map(|z| z.re).collect()
    }

    /// Population of the highest retained level `n_max`.
    pub fn edge_population(&self) -> f64 {
        let n = self.dim() - 1;
        self.entries[(n, n)].re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.entries)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = linalg::hermitian_eigenvalues(&self.entries)
            .iter()
            .copied()
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// `Tr(rho op)`.
    pub fn expectation(&self, op: &DMatrix<C64>) -> C64 {
        (&self.entries * op).trace()
    }
}

fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    (m - m.adjoint()).max_norm()
}

/// Annihilation, creation and number operators on a truncated space.
#[derive(Debug, Clone)]
pub struct LadderOperators {
    pub annihilation: DMatrix<C64>,
    pub creation: DMatrix<C64>,
    pub number: DMatrix<C64>,
}

/// `a|n> = sqrt(n)|n-1>`, `a^dag|n> = sqrt(n+1)|n+1>` (dropped at `n_max`),
/// and the exactly diagonal `a^dag a`.
pub fn ladder_operators(spec: &HilbertSpec) -> LadderOperators {
    let dim = spec.dim();
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    let creation = a.adjoint();
    let number = DMatrix::from_diagonal(&DVector::from_fn(dim, |n, _| C64::new(n as f64, 0.0)));
    LadderOperators {
        annihilation: a,
        creation,
        number,
    }
}

/// Diagonal of `exp(-i H0 t / hbar)`.
pub fn kerr_phases(params: &CavityParams, dim: usize, t: f64) -> Vec<C64> {
    (0..dim)
        .map(|n| C64::from_polar(1.0, -params.energy(n) * t))
        .collect()
}

/// `exp(-i H0 t / hbar)` as a dense diagonal matrix.
pub fn kerr_unitary(spec: &HilbertSpec, params: &CavityParams, t: f64) -> Result<DMatrix<C64>> {
    if !t.is_finite() {
        return Err(Error::invalid("t", "must be finite"));
    }
    let phases = kerr_phases(params, spec.dim(), t);
    Ok(DMatrix::from_diagonal(&DVector::from_vec(phases)))
}

/// `(rho_a)_{nm} = sum_k <n,k| rho_ab |m,k>`.
pub fn partial_trace_b(
    rho_ab: &DMatrix<C64>,
    spec_a: &HilbertSpec,
    spec_b: &HilbertSpec,
) -> Result<DensityMatrix> {
    let (da, db) = (spec_a.dim(), spec_b.dim());
    let expected = da * db;
    if rho_ab.nrows() != expected || rho_ab.ncols() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: rho_ab.nrows().max(rho_ab.ncols()),
        });
    }
    let reduced = DMatrix::from_fn(da, da, |n, m| {
        (0..db)
            .map(|k| rho_ab[(n * db + k, m * db + k)])
            .sum::<C64>()
    });
    Ok(DensityMatrix::hermitized(reduced))
}
