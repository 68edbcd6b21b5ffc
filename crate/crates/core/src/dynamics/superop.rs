//! Row-major vectorized Liouvillian, stored sparse.
//!
//! With vec(ρ)[i·d + j] = ρ_ij, the map ρ ↦ AρB has matrix elements
//! (i·d + j, k·d + l) = A_ik·B_lj. The generator is split as
//! L(Ω) = L₀ + Ω*·L_conj + Ω·L_drive so that a time-dependent drive only
//! rescales two fixed operators.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{collapse_operators, hamiltonian_parts, SystemParams};
use crate::hilbert::{ComplexMatrix, HilbertLayout};
use crate::sparse::CsrMatrix;

type Triplets = BTreeMap<(usize, usize), Complex64>;

fn nonzeros(m: &ComplexMatrix) -> Vec<(usize, usize, Complex64)> {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != Complex64::new(0.0, 0.0) {
                out.push((i, j, v));
            }
        }
    }
    out
}

fn identity_entries(dim: usize) -> Vec<(usize, usize, Complex64)> {
    (0..dim).map(|i| (i, i, Complex64::new(1.0, 0.0))).collect()
}

/// Accumulate coeff·(ρ ↦ AρB) into `acc`.
fn add_sandwich(
    acc: &mut Triplets,
    dim: usize,
    left: &[(usize, usize, Complex64)],
    right: &[(usize, usize, Complex64)],
    coeff: Complex64,
) {
    for &(i, k, a) in left {
        for &(l, j, b) in right {
            *acc.entry((i * dim + j, k * dim + l)).or_default() += coeff * a * b;
        }
    }
}

/// Lindblad generator of a system, split by drive dependence.
#[derive(Debug, Clone)]
pub struct Generator {
    layout: HilbertLayout,
    base: CsrMatrix,
    conj_drive: CsrMatrix,
    drive: CsrMatrix,
}

impl Generator {
    pub fn new(params: &SystemParams) -> Self {
        let layout = params.layout();
        let dim = layout.dim();
        let size = dim * dim;
        let parts = hamiltonian_parts(params);
        let ident = identity_entries(dim);
        let i = Complex64::i();

        let commutator = |h: &ComplexMatrix| {
            let mut acc = Triplets::new();
            let hn = nonzeros(h);
            add_sandwich(&mut acc, dim, &hn, &ident, -i);
            add_sandwich(&mut acc, dim, &ident, &hn, i);
            acc
        };

        let mut base = commutator(&parts.static_part);
        let half = Complex64::new(-0.5, 0.0);
        for d in collapse_operators(params) {
            if d.iter().all(|z| z.norm_sqr() == 0.0) {
                continue;
            }
            let dd = nonzeros(&(d.adjoint() * &d));
            let dn = nonzeros(&d);
            let dadj = nonzeros(&d.adjoint());
            add_sandwich(&mut base, dim, &dn, &dadj, Complex64::new(1.0, 0.0));
            add_sandwich(&mut base, dim, &dd, &ident, half);
            add_sandwich(&mut base, dim, &ident, &dd, half);
        }

        Self {
            layout,
            base: CsrMatrix::from_triplets(size, base),
            conj_drive: CsrMatrix::from_triplets(size, commutator(&parts.conj_coupling)),
            drive: CsrMatrix::from_triplets(size, commutator(&parts.drive_coupling)),
        }
    }

    pub fn layout(&self) -> HilbertLayout {
        self.layout
    }

    pub fn size(&self) -> usize {
        self.base.size()
    }

    pub fn nnz(&self) -> usize {
        self.base.nnz() + self.conj_drive.nnz() + self.drive.nnz()
    }

    /// out = L(Ω) x
    pub fn apply(&self, omega: Complex64, x: &[Complex64], out: &mut [Complex64]) {
        out.fill(Complex64::new(0.0, 0.0));
        self.base.mul_add(Complex64::new(1.0, 0.0), x, out);
        if omega != Complex64::new(0.0, 0.0) {
            self.conj_drive.mul_add(omega.conj(), x, out);
            self.drive.mul_add(omega, x, out);
        }
    }

    pub fn dense(&self, omega: Complex64) -> ComplexMatrix {
        let mut m = self.base.to_dense();
        self.conj_drive.add_to_dense(omega.conj(), &mut m);
        self.drive.add_to_dense(omega, &mut m);
        m
    }

    /// Upper bound on ‖L(Ω)‖∞ over all |Ω| ≤ `max_amplitude`; bounds the spectral radius.
    pub fn norm_bound(&self, max_amplitude: f64) -> f64 {
        let b = self.base.row_abs_sums();
        let c = self.conj_drive.row_abs_sums();
        let d = self.drive.row_abs_sums();
        (0..self.size())
            .map(|r| b[r] + max_amplitude * (c[r] + d[r]))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{build_hamiltonian, lindblad_rhs};
    use crate::hilbert::{ComplexVector, DensityMatrix, PureState};
    use proptest::prelude::*;

    fn vectorize(m: &ComplexMatrix) -> Vec<Complex64> {
        let d = m.nrows();
        (0..d * d).map(|k| m[(k / d, k % d)]).collect()
    }

    proptest! {
        #[test]
        fn sparse_generator_matches_dense_rhs(
            g in 0.0f64..30.0, kappa in 0.0f64..30.0, gamma in 0.0f64..1.0, gamma_d in 0.0f64..6.0,
            dc in -30.0f64..30.0, dd in -30.0f64..30.0, re in -3.0f64..3.0, im in -3.0f64..3.0,
            amps in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 8),
        ) {
            let p = SystemParams { g, kappa, gamma, gamma_d, delta_c: dc, delta_d: dd, n_max: 3 };
            let l = p.layout();
            let v = ComplexVector::from_iterator(8, amps.into_iter().map(|(a, b)| Complex64::new(a, b)));
            prop_assume!(v.norm() > 1e-3);
            let rho: DensityMatrix = PureState::normalized(l, v).unwrap().to_density();
            let omega = Complex64::new(re, im);

            let dense = lindblad_rhs(&build_hamiltonian(&p, omega).unwrap(), &collapse_operators(&p), &rho).unwrap();
            let gen = Generator::new(&p);
            let x = vectorize(rho.matrix());
            let mut out = vec![Complex64::new(0.0, 0.0); x.len()];
            gen.apply(omega, &x, &mut out);
            let expected = vectorize(&dense);
            let scale = expected.iter().map(|z| z.norm()).fold(1.0, f64::max);
            for (a, b) in out.iter().zip(expected.iter()) {
                prop_assert!((a - b).norm() < 1e-12 * scale);
            }

            let dm = gen.dense(omega);
            let xv = ComplexVector::from_vec(x.clone());
            let via_dense = &dm * xv;
            for (a, b) in via_dense.iter().zip(expected.iter()) {
                prop_assert!((a - b).norm() < 1e-12 * scale);
            }
        }
    }

    #[test]
    fn norm_bound_dominates_spectral_radius() {
        let p = SystemParams::pulse_pair_device()
            .with_gamma_d(5.0)
            .with_n_max(4);
        let gen = Generator::new(&p);
        let omega = Complex64::new(20.0, 0.0);
        let dense = gen.dense(omega);
        let radius = dense
            .clone()
            .schur()
            .eigenvalues()
            .expect("complex schur form is triangular")
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(radius <= gen.norm_bound(20.0) + 1e-9, "{radius} > bound");
    }
}
