//! Two-level and two-qubit operator algebra.
//!
//! Basis ordering is fixed for every matrix in the crate:
//!
//! - single qubit: `{|0⟩, |1⟩}` (spin: `{|↑⟩, |↓⟩}`);
//! - spin ⊗ spatial qubit: `{↑0, ↑1, ↓0, ↓1}` (spin is the first factor);
//! - two spatial qubits: `{00, 01, 10, 11}` (mass 1 is the first factor).
//!
//! Resolution-limited Pauli operators are `σ̃ = g(δθ)·σ` for the x and y
//! axes, where `g(δθ) = (2/δθ)·sin(δθ/2)` is the average of `e^{iθ}` over a
//! top-hat window of width `δθ`. The sign-of-position operator `σ̃z` is not
//! window-blurred; its error channel is leakage (see [`crate::codec`]).

use std::f64::consts::{PI, SQRT_2, TAU};
use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const POSITIVITY_TOL: f64 = -1e-10;
const IMAG_RESIDUE_TOL: f64 = 1e-10;

/// A dense 2×2 or 4×4 complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    inner: DMatrix<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix{}", self.inner)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 4 {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "matrix dimension {dim} (only 2 or 4)"
        )))
    }
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn from_row_slice(dim: usize, entries: &[C64]) -> Result<Self> {
        check_dim(dim)?;
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: entries.len(),
            });
        }
        Ok(Self {
            inner: DMatrix::from_row_slice(dim, dim, entries),
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            inner: DMatrix::identity(dim, dim),
        })
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            inner: DMatrix::zeros(dim, dim),
        })
    }

    /// Outer product `|ψ⟩⟨ψ|` of an amplitude vector of length 2 or 4.
    pub fn outer(amplitudes: &[C64]) -> Result<Self> {
        check_dim(amplitudes.len())?;
        let n = amplitudes.len();
        let inner = DMatrix::from_fn(n, n, |r, c| amplitudes[r] * amplitudes[c].conj());
        Ok(Self { inner })
    }

    pub(crate) fn from_nalgebra(inner: DMatrix<C64>) -> Result<Self> {
        if !inner.is_square() {
            return Err(Error::Unsupported("non-square matrix".into()));
        }
        check_dim(inner.nrows())?;
        Ok(Self { inner })
    }

    pub fn as_nalgebra(&self) -> &DMatrix<C64> {
        &self.inner
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.inner[(row, col)]
    }

    /// Row-major copy of the entries.
    pub fn entries(&self) -> Vec<C64> {
        let n = self.dim();
        (0..n * n).map(|i| self.inner[(i / n, i % n)]).collect()
    }

    /// Tensor product; only 2×2 ⊗ 2×2 is representable.
    pub fn kron(&self, other: &ComplexMatrix) -> Result<Self> {
        if self.dim() != 2 || other.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                actual: self.dim().max(other.dim()),
            });
        }
        Ok(Self {
            inner: self.inner.kronecker(&other.inner),
        })
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            inner: &self.inner * C64::new(factor, 0.0),
        }
    }

    pub fn scale_complex(&self, factor: C64) -> Self {
        Self {
            inner: &self.inner * factor,
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            inner: self.inner.adjoint(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.inner.trace()
    }

    /// Largest entrywise modulus of `M − M†`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for r in 0..n {
            for c in 0..n {
                worst = worst.max((self.inner[(r, c)] - self.inner[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_defect() <= HERMITIAN_TOL
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        self.inner
            .iter()
            .zip(other.inner.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.inner + self.inner.adjoint()) * C64::new(0.5, 0.0);
        let mut values: Vec<f64> = SymmetricEigen::new(herm)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        values.sort_by(|a, b| a.total_cmp(b));
        values
    }

    fn checked_binary(&self, other: &ComplexMatrix) -> Result<()> {
        if self.dim() == other.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            })
        }
    }

    pub fn try_add(&self, other: &ComplexMatrix) -> Result<Self> {
        self.checked_binary(other)?;
        Ok(Self {
            inner: &self.inner + &other.inner,
        })
    }

    pub fn try_sub(&self, other: &ComplexMatrix) -> Result<Self> {
        self.checked_binary(other)?;
        Ok(Self {
            inner: &self.inner - &other.inner,
        })
    }

    pub fn try_mul(&self, other: &ComplexMatrix) -> Result<Self> {
        self.checked_binary(other)?;
        Ok(Self {
            inner: &self.inner * &other.inner,
        })
    }
}

// Infallible operators for code that already knows the dimensions agree.
impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_add(rhs).expect("matrix dimensions differ")
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_sub(rhs).expect("matrix dimensions differ")
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_mul(rhs).expect("matrix dimensions differ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

pub fn pauli(axis: Axis) -> ComplexMatrix {
    let o = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let entries = match axis {
        Axis::X => [o, one, one, o],
        Axis::Y => [o, -i, i, o],
        Axis::Z => [one, o, o, -one],
    };
    ComplexMatrix::from_row_slice(2, &entries).expect("2x2 literal")
}

pub fn identity2() -> ComplexMatrix {
    ComplexMatrix::identity(2).expect("2x2 identity")
}

/// Width `δθ` of the phase-angle window a detector integrates over.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PhaseWindow(f64);

impl PhaseWindow {
    pub const SHARP: PhaseWindow = PhaseWindow(0.0);

    pub fn new(delta_theta: f64) -> Result<Self> {
        if delta_theta.is_finite() && (0.0..TAU).contains(&delta_theta) {
            Ok(Self(delta_theta))
        } else {
            Err(Error::domain(format!(
                "phase window {delta_theta} outside [0, 2π)"
            )))
        }
    }

    pub fn delta_theta(self) -> f64 {
        self.0
    }

    /// Blur factor `g(δθ)` of this window.
    pub fn g(self) -> f64 {
        g_of(self.0)
    }
}

impl Default for PhaseWindow {
    fn default() -> Self {
        Self::SHARP
    }
}

impl TryFrom<f64> for PhaseWindow {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<PhaseWindow> for f64 {
    fn from(w: PhaseWindow) -> f64 {
        w.0
    }
}

// sinc form; the removable singularity at 0 is handled by a short series.
fn g_of(delta_theta: f64) -> f64 {
    let half = 0.5 * delta_theta;
    if half.abs() < 1e-4 {
        let h2 = half * half;
        1.0 - h2 / 6.0 + h2 * h2 / 120.0
    } else {
        half.sin() / half
    }
}

/// `g(δθ) = (2/δθ)·sin(δθ/2)`, with `g(0) = 1`.
pub fn g_factor(delta_theta: f64) -> Result<f64> {
    Ok(PhaseWindow::new(delta_theta)?.g())
}

/// `σ̃ = g(δθ)·σ` for the x or y axis.
pub fn effective_pauli(axis: Axis, window: PhaseWindow) -> Result<ComplexMatrix> {
    match axis {
        Axis::Z => Err(Error::Unsupported(
            "σ̃z is a sign-of-position measurement, not a phase-window average".into(),
        )),
        _ => Ok(pauli(axis).scale(window.g())),
    }
}

/// Kind of tensor factor in a [`DensityMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Factor {
    Spin,
    Spatial,
}

/// Which spatial qubits a dephasing channel acts on. Spatial factors are
/// counted left to right, skipping spin factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subsystem {
    Spatial1,
    Spatial2,
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    factors: Vec<Factor>,
    label: String,
}

impl DensityMatrix {
    /// Validates trace, Hermiticity and positivity.
    pub fn new(
        matrix: ComplexMatrix,
        factors: Vec<Factor>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let expected = 1usize << factors.len();
        if factors.is_empty() || matrix.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: matrix.dim(),
            });
        }
        let defect = matrix.hermitian_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::NotNormalized(tr.re));
        }
        let min_eig = matrix.hermitian_eigenvalues()[0];
        if min_eig < POSITIVITY_TOL {
            return Err(Error::domain(format!(
                "density matrix has negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self {
            matrix,
            factors,
            label: label.into(),
        })
    }

    /// `|ψ⟩⟨ψ|` for a normalized amplitude vector.
    pub fn pure(
        amplitudes: &[C64],
        factors: Vec<Factor>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized(norm));
        }
        Self::new(ComplexMatrix::outer(amplitudes)?, factors, label)
    }

    pub fn maximally_mixed(factors: Vec<Factor>) -> Result<Self> {
        let dim = 1usize << factors.len();
        let m = ComplexMatrix::identity(dim)?.scale(1.0 / dim as f64);
        Self::new(m, factors, "maximally mixed")
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    fn spatial_positions(&self) -> Vec<usize> {
        self.factors
            .iter()
            .enumerate()
            .filter(|(_, f)| **f == Factor::Spatial)
            .map(|(i, _)| i)
            .collect()
    }

    /// Reduced 2×2 state of tensor factor `keep` (0-based, left to right).
    pub fn partial_trace(&self, keep: usize) -> Result<ComplexMatrix> {
        match (self.factors.len(), keep) {
            (1, 0) => Ok(self.matrix.clone()),
            (2, k) if k < 2 => {
                let mut out = [C64::new(0.0, 0.0); 4];
                for a in 0..2 {
                    for b in 0..2 {
                        for other in 0..2 {
                            let (r, c) = if k == 0 {
                                (2 * a + other, 2 * b + other)
                            } else {
                                (2 * other + a, 2 * other + b)
                            };
                            out[2 * a + b] += self.matrix.get(r, c);
                        }
                    }
                }
                ComplexMatrix::from_row_slice(2, &out)
            }
            (n, k) => Err(Error::domain(format!(
                "factor {k} out of range for {n}-factor state"
            ))),
        }
    }
}

/// Multiplies coherences of the selected spatial qubit(s) by `e^{−γt}`.
pub fn dephase(rho: &DensityMatrix, gamma_t: f64, subsystem: Subsystem) -> Result<DensityMatrix> {
    if !(gamma_t >= 0.0) {
        return Err(Error::domain(format!("gamma*t = {gamma_t} must be >= 0")));
    }
    let spatial = rho.spatial_positions();
    let targets: Vec<usize> = match subsystem {
        Subsystem::Spatial1 => spatial.first().copied().into_iter().collect(),
        Subsystem::Spatial2 => spatial.get(1).copied().into_iter().collect(),
        Subsystem::Both => spatial.clone(),
    };
    if targets.is_empty() {
        return Err(Error::domain(format!(
            "state `{}` has no spatial qubit matching {subsystem:?}",
            rho.label
        )));
    }
    let n = rho.factors.len();
    let decay = (-gamma_t).exp();
    let dim = rho.dim();
    let mut inner = rho.matrix.as_nalgebra().clone();
    for r in 0..dim {
        for c in 0..dim {
            // factor i is bit (n-1-i) of the basis index
            let differing = targets
                .iter()
                .filter(|&&f| ((r >> (n - 1 - f)) & 1) != ((c >> (n - 1 - f)) & 1))
                .count();
            if differing > 0 {
                inner[(r, c)] *= decay.powi(differing as i32);
            }
        }
    }
    DensityMatrix::new(
        ComplexMatrix::from_nalgebra(inner)?,
        rho.factors.clone(),
        format!("{} (dephased, γt={gamma_t})", rho.label),
    )
}

/// `|φ⁺⟩ = (|↑,1⟩ + |↓,0⟩)/√2` in the `{↑0, ↑1, ↓0, ↓1}` basis.
pub fn sg_entangled_state() -> DensityMatrix {
    let z = C64::new(0.0, 0.0);
    let h = C64::new(1.0 / SQRT_2, 0.0);
    DensityMatrix::pure(&[z, h, h, z], vec![Factor::Spin, Factor::Spatial], "phi+")
        .expect("phi+ is a valid state")
}

/// Amplitudes `½(|00⟩ + e^{iΔφ01}|01⟩ + e^{iΔφ10}|10⟩ + |11⟩)` of the
/// Casimir-evolved product state, global phase dropped.
pub fn casimir_amplitudes(dphi01: f64, dphi10: f64) -> [C64; 4] {
    [
        C64::new(0.5, 0.0),
        C64::from_polar(0.5, dphi01),
        C64::from_polar(0.5, dphi10),
        C64::new(0.5, 0.0),
    ]
}

pub fn casimir_entangled_state(dphi01: f64, dphi10: f64) -> DensityMatrix {
    DensityMatrix::pure(
        &casimir_amplitudes(dphi01, dphi10),
        vec![Factor::Spatial, Factor::Spatial],
        "casimir",
    )
    .expect("unit-modulus phases keep the state normalized")
}

/// `Tr(obs·ρ)`; the imaginary residue must be below 1e-10.
pub fn expectation(rho: &DensityMatrix, obs: &ComplexMatrix) -> Result<f64> {
    if obs.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: obs.dim(),
        });
    }
    let defect = obs.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let value = obs.try_mul(rho.matrix())?.trace();
    if value.im.abs() > IMAG_RESIDUE_TOL {
        return Err(Error::NotHermitian(value.im.abs()));
    }
    Ok(value.re)
}

/// Local observables of a CHSH test: `A, A'` on the first factor, `B, B'`
/// on the second.
#[derive(Debug, Clone)]
pub struct ChshSettings {
    pub a: ComplexMatrix,
    pub a_prime: ComplexMatrix,
    pub b: ComplexMatrix,
    pub b_prime: ComplexMatrix,
}

impl ChshSettings {
    /// Spin `(τx ± τy)/√2`, spatial `σ̃x, σ̃y` at the given window.
    pub fn spin_motion(window: PhaseWindow) -> Self {
        let tx = pauli(Axis::X);
        let ty = pauli(Axis::Y);
        Self {
            a: (&tx + &ty).scale(1.0 / SQRT_2),
            a_prime: (&tx - &ty).scale(1.0 / SQRT_2),
            b: effective_pauli(Axis::X, window).expect("x axis"),
            b_prime: effective_pauli(Axis::Y, window).expect("y axis"),
        }
    }
}

/// `|⟨AB⟩ + ⟨AB'⟩ + ⟨A'B⟩ − ⟨A'B'⟩|` on a two-factor state.
pub fn chsh_value(rho: &DensityMatrix, settings: &ChshSettings) -> Result<f64> {
    let ChshSettings {
        a,
        a_prime,
        b,
        b_prime,
    } = settings;
    for op in [a, a_prime, b, b_prime] {
        if op.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                actual: op.dim(),
            });
        }
    }
    let corr = |x: &ComplexMatrix, y: &ComplexMatrix| expectation(rho, &x.kron(y)?);
    let s = corr(a, b)? + corr(a, b_prime)? + corr(a_prime, b)? - corr(a_prime, b_prime)?;
    Ok(s.abs())
}

/// `2√2·|g(δθ)|·e^{−γt}`.
pub fn chsh_analytic(window: PhaseWindow, gamma_t: f64) -> Result<f64> {
    if !(gamma_t >= 0.0) {
        return Err(Error::domain(format!("gamma*t = {gamma_t} must be >= 0")));
    }
    Ok(2.0 * SQRT_2 * window.g().abs() * (-gamma_t).exp())
}

/// The `δθ` at which `|g(δθ)| = 1/√2`, i.e. the widest window that still
/// violates CHSH for the ideal state.
pub fn chsh_threshold() -> f64 {
    let target = 1.0 / SQRT_2;
    // g is strictly decreasing on (0, 2π): g(0)=1, g(π)=2/π < 1/√2
    let (mut lo, mut hi) = (0.0_f64, PI);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if g_of(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `W̃ = I⊗I − σ̃x⊗σ̃x − σ̃z⊗σ̃y − σ̃y⊗σ̃z` with an exact `σ̃z`.
pub fn witness_operator(window: PhaseWindow) -> ComplexMatrix {
    witness_operator_with_z(window, &pauli(Axis::Z))
}

/// Witness with a caller-supplied `σ̃z` (e.g. leakage-reduced).
pub fn witness_operator_with_z(window: PhaseWindow, sigma_z: &ComplexMatrix) -> ComplexMatrix {
    let sx = effective_pauli(Axis::X, window).expect("x axis");
    let sy = effective_pauli(Axis::Y, window).expect("y axis");
    let id = ComplexMatrix::identity(4).expect("4x4");
    let xx = sx.kron(&sx).expect("2x2");
    let zy = sigma_z.kron(&sy).expect("2x2");
    let yz = sy.kron(sigma_z).expect("2x2");
    &(&(&id - &xx) - &zy) - &yz
}

/// Closed-form `⟨W̃⟩` on the dephased Casimir state.
pub fn witness_analytic(
    dphi01: f64,
    dphi10: f64,
    gamma_t: f64,
    window: PhaseWindow,
) -> Result<f64> {
    if !(gamma_t >= 0.0) {
        return Err(Error::domain(format!("gamma*t = {gamma_t} must be >= 0")));
    }
    let g = window.g();
    let decay = (-gamma_t).exp();
    Ok(1.0
        - 0.5 * decay * decay * g * g * (1.0 + (dphi10 - dphi01).cos())
        - decay * g * (dphi10.sin() + dphi01.sin()))
}

/// `⟨W̃⟩` via `Tr(W̃ρ)` on the explicitly dephased 4×4 state.
pub fn witness_matrix(dphi01: f64, dphi10: f64, gamma_t: f64, window: PhaseWindow) -> Result<f64> {
    let rho = dephase(
        &casimir_entangled_state(dphi01, dphi10),
        gamma_t,
        Subsystem::Both,
    )?;
    expectation(&rho, &witness_operator(window))
}
