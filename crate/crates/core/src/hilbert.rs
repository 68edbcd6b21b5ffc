//! Operator algebra on the truncated quantum-dot ⊗ Fock space.
//!
//! Basis ordering is qd-major: `index = qd_state * (n_max + 1) + photon_number`
//! with `qd_state` 0 for the ground state |g⟩ and 1 for the exciton |e⟩.
//! Every module in the crate relies on this ordering.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Invariant, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

pub const NORM_TOL: f64 = 1e-9;
pub const TRACE_TOL: f64 = 1e-8;
pub const HERMITICITY_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-7;
pub const PURITY_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QdState {
    Ground = 0,
    Excited = 1,
}

/// Tensor factor an operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Qd,
    Cavity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HilbertLayout {
    n_max: usize,
}

impl HilbertLayout {
    pub fn new(n_max: usize) -> Self {
        Self { n_max }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn fock_dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn dim(&self) -> usize {
        2 * self.fock_dim()
    }

    pub fn index(&self, qd: QdState, photons: usize) -> usize {
        assert!(
            photons <= self.n_max,
            "photon number {photons} above truncation {}",
            self.n_max
        );
        qd as usize * self.fock_dim() + photons
    }

    /// a on the joint space.
    pub fn cavity_lowering(&self) -> ComplexMatrix {
        embed(&annihilation_operator(self.n_max), Slot::Cavity, self)
            .expect("cavity operator matches layout")
    }

    /// σ = |g⟩⟨e| on the joint space.
    pub fn qd_lowering(&self) -> ComplexMatrix {
        embed(&qd_lowering(), Slot::Qd, self).expect("qd operator matches layout")
    }

    /// a†a on the joint space.
    pub fn photon_number(&self) -> ComplexMatrix {
        let a = self.cavity_lowering();
        a.adjoint() * a
    }

    /// σ†σ on the joint space.
    pub fn excited_population(&self) -> ComplexMatrix {
        let s = self.qd_lowering();
        s.adjoint() * s
    }
}

/// Truncated photon annihilation operator with entries (k, k+1) = √(k+1).
pub fn annihilation_operator(n_max: usize) -> ComplexMatrix {
    let n = n_max + 1;
    let mut a = ComplexMatrix::zeros(n, n);
    for k in 0..n_max {
        a[(k, k + 1)] = Complex64::new(((k + 1) as f64).sqrt(), 0.0);
    }
    a
}

/// Two-level lowering operator |g⟩⟨e|.
pub fn qd_lowering() -> ComplexMatrix {
    let mut s = ComplexMatrix::zeros(2, 2);
    s[(QdState::Ground as usize, QdState::Excited as usize)] = ONE;
    s
}

/// Kronecker-embed a single-factor operator into the joint space.
pub fn embed(
    operator: &ComplexMatrix,
    slot: Slot,
    layout: &HilbertLayout,
) -> Result<ComplexMatrix> {
    let expected = match slot {
        Slot::Qd => 2,
        Slot::Cavity => layout.fock_dim(),
    };
    if operator.nrows() != expected || operator.ncols() != expected {
        return Err(Error::DimensionMismatch {
            context: match slot {
                Slot::Qd => "embed (qd slot)",
                Slot::Cavity => "embed (cavity slot)",
            },
            expected,
            found: if operator.nrows() != expected {
                operator.nrows()
            } else {
                operator.ncols()
            },
        });
    }
    Ok(match slot {
        Slot::Qd => operator.kronecker(&ComplexMatrix::identity(
            layout.fock_dim(),
            layout.fock_dim(),
        )),
        Slot::Cavity => ComplexMatrix::identity(2, 2).kronecker(operator),
    })
}

/// Largest entrywise deviation from hermiticity, max |M - M†|.
pub fn hermiticity_error(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Maximum absolute row sum (the induced ∞-norm).
pub fn inf_norm(m: &ComplexMatrix) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    layout: HilbertLayout,
    amplitudes: ComplexVector,
}

impl PureState {
    /// Normalized state from raw amplitudes; rejects a wrong length or a non-unit norm.
    pub fn new(layout: HilbertLayout, amplitudes: ComplexVector) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(Error::DimensionMismatch {
                context: "pure state",
                expected: layout.dim(),
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { layout, amplitudes })
    }

    /// Rescale arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(layout: HilbertLayout, amplitudes: ComplexVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotNormalized { norm });
        }
        Self::new(layout, amplitudes.unscale(norm))
    }

    pub fn basis(layout: HilbertLayout, qd: QdState, photons: usize) -> Self {
        let mut amplitudes = ComplexVector::zeros(layout.dim());
        amplitudes[layout.index(qd, photons)] = ONE;
        Self { layout, amplitudes }
    }

    pub fn vacuum(layout: HilbertLayout) -> Self {
        Self::basis(layout, QdState::Ground, 0)
    }

    pub fn layout(&self) -> HilbertLayout {
        self.layout
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            layout: self.layout,
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    layout: HilbertLayout,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Wrap a matrix after checking every density-matrix invariant.
    pub fn new(layout: HilbertLayout, matrix: ComplexMatrix) -> Result<Self> {
        let rho = Self::new_unchecked(layout, matrix)?;
        if let Some((invariant, detail)) = rho.violation() {
            return Err(Error::InvariantViolation {
                invariant,
                step: 0,
                time: 0.0,
                detail,
            });
        }
        Ok(rho)
    }

    /// Wrap a matrix checking only its shape.
    pub fn new_unchecked(layout: HilbertLayout, matrix: ComplexMatrix) -> Result<Self> {
        if matrix.nrows() != layout.dim() || matrix.ncols() != layout.dim() {
            return Err(Error::DimensionMismatch {
                context: "density matrix",
                expected: layout.dim(),
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self { layout, matrix })
    }

    pub fn ground(layout: HilbertLayout) -> Self {
        PureState::vacuum(layout).to_density()
    }

    /// Incoherent mixture Σ pₖ |ψₖ⟩⟨ψₖ| of basis states.
    pub fn basis_mixture(layout: HilbertLayout, weights: &[(QdState, usize, f64)]) -> Result<Self> {
        let mut m = ComplexMatrix::zeros(layout.dim(), layout.dim());
        for &(qd, n, p) in weights {
            let i = layout.index(qd, n);
            m[(i, i)] += Complex64::new(p, 0.0);
        }
        Self::new(layout, m)
    }

    pub fn layout(&self) -> HilbertLayout {
        self.layout
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.matrix)
    }

    /// Tr ρ², real part.
    pub fn purity(&self) -> f64 {
        // Tr(ρρ) = Σ_ij ρ_ij ρ_ji
        let n = self.matrix.nrows();
        let mut acc = ZERO;
        for i in 0..n {
            for j in 0..n {
                acc += self.matrix[(i, j)] * self.matrix[(j, i)];
            }
        }
        acc.re
    }

    fn hermitian_part(&self) -> ComplexMatrix {
        (&self.matrix + self.matrix.adjoint()).scale(0.5)
    }

    /// Eigenpairs of the hermitian part. nalgebra's implicit-QR solver returns
    /// NaN or −∞ for some states whose entries span hundreds of decades; those
    /// fall back to an SVD, with each eigenvalue recovered as uᴴHu.
    fn hermitian_eigen(&self) -> (Vec<f64>, ComplexMatrix) {
        let herm = self.hermitian_part();
        let eig = herm.clone().symmetric_eigen();
        if eig.eigenvalues.iter().all(|x| x.is_finite()) {
            return (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors);
        }
        let u = herm
            .clone()
            .svd(true, false)
            .u
            .expect("left singular vectors requested");
        let values = u
            .column_iter()
            .map(|v| (v.adjoint() * &herm * v)[(0, 0)].re)
            .collect();
        (values, u)
    }

    /// Smallest eigenvalue of the hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        self.hermitian_eigen()
            .0
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    /// True when every eigenvalue of the hermitian part H = A + iB is ≥ −tol.
    /// Tested by a Cholesky factorization of the real embedding
    /// [[A, −B], [B, A]] + tol·I, which has the spectrum of H + tol·I.
    pub fn is_positive_within(&self, tol: f64) -> bool {
        let n = self.matrix.nrows();
        let herm = self.hermitian_part();
        let real = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
            let z = herm[(i % n, j % n)];
            let shift = if i == j { tol } else { 0.0 };
            match (i < n, j < n) {
                (true, false) => -z.im,
                (false, true) => z.im,
                _ => z.re + shift,
            }
        });
        real.cholesky().is_some()
    }

    /// Eigen-decomposition of the hermitian part: (probability, normalized eigenvector) pairs.
    pub fn eigen_ensemble(&self) -> Vec<(f64, ComplexVector)> {
        let (values, vectors) = self.hermitian_eigen();
        values
            .into_iter()
            .zip(vectors.column_iter())
            .map(|(p, v)| (p, v.into_owned()))
            .collect()
    }

    /// First violated invariant, if any.
    pub fn violation(&self) -> Option<(Invariant, String)> {
        if !is_finite(&self.matrix) {
            return Some((Invariant::Finite, "non-finite entry".into()));
        }
        let herm = self.hermiticity_error();
        if herm >= HERMITICITY_TOL {
            return Some((
                Invariant::Hermiticity,
                format!("max |rho - rho^dag| = {herm:.3e}"),
            ));
        }
        let trace_err = (self.trace() - ONE).norm();
        if trace_err >= TRACE_TOL {
            return Some((Invariant::Trace, format!("|Tr rho - 1| = {trace_err:.3e}")));
        }
        let purity = self.purity();
        if purity > 1.0 + PURITY_TOL {
            return Some((Invariant::Purity, format!("Tr rho^2 = {purity:.12}")));
        }
        if !self.is_positive_within(POSITIVITY_TOL) {
            let min_eig = self.min_eigenvalue();
            return Some((
                Invariant::Positivity,
                format!("min eigenvalue = {min_eig:.3e}"),
            ));
        }
        None
    }
}

/// States that yield expectation values of joint-space operators.
pub trait QuantumState {
    fn layout(&self) -> HilbertLayout;
    fn expectation(&self, operator: &ComplexMatrix) -> Result<Complex64>;
}

fn check_operator(operator: &ComplexMatrix, layout: &HilbertLayout) -> Result<()> {
    let dim = layout.dim();
    if operator.nrows() != dim || operator.ncols() != dim {
        return Err(Error::DimensionMismatch {
            context: "expectation",
            expected: dim,
            found: if operator.nrows() != dim {
                operator.nrows()
            } else {
                operator.ncols()
            },
        });
    }
    Ok(())
}

impl QuantumState for PureState {
    fn layout(&self) -> HilbertLayout {
        self.layout
    }

    fn expectation(&self, operator: &ComplexMatrix) -> Result<Complex64> {
        check_operator(operator, &self.layout)?;
        Ok(self.amplitudes.dotc(&(operator * &self.amplitudes)))
    }
}

impl QuantumState for DensityMatrix {
    fn layout(&self) -> HilbertLayout {
        self.layout
    }

    fn expectation(&self, operator: &ComplexMatrix) -> Result<Complex64> {
        check_operator(operator, &self.layout)?;
        // Tr(Oρ) = Σ_ij O_ij ρ_ji
        let n = self.matrix.nrows();
        let mut acc = ZERO;
        for i in 0..n {
            for j in 0..n {
                acc += operator[(i, j)] * self.matrix[(j, i)];
            }
        }
        Ok(acc)
    }
}

/// Tr(Oρ) for density matrices, ⟨ψ|O|ψ⟩ for pure states.
pub fn expectation<S: QuantumState + ?Sized>(
    operator: &ComplexMatrix,
    state: &S,
) -> Result<Complex64> {
    state.expectation(operator)
}
