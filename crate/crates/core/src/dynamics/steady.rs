use num_complex::Complex64;

use super::{Generator, SystemParams};
use crate::error::{Error, Result};
use crate::hilbert::{ComplexMatrix, ComplexVector, DensityMatrix};

const RESIDUAL_TOL: f64 = 1e-10;

/// ‖L(ρ)‖∞ / ‖L‖∞ for a constant drive.
pub fn steady_state_residual(params: &SystemParams, omega: Complex64, rho: &DensityMatrix) -> f64 {
    let gen = Generator::new(params);
    residual(&gen, omega, rho.matrix())
}

fn residual(gen: &Generator, omega: Complex64, rho: &ComplexMatrix) -> f64 {
    let d = rho.nrows();
    let x: Vec<Complex64> = (0..d * d).map(|k| rho[(k / d, k % d)]).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); x.len()];
    gen.apply(omega, &x, &mut out);
    let r = out.iter().map(|z| z.norm()).fold(0.0, f64::max);
    r / gen.norm_bound(omega.norm()).max(f64::MIN_POSITIVE)
}

/// Steady state under a constant drive Ω.
///
/// Solves the dense vectorized system L(ρ) = 0 with the first row replaced by
/// the trace condition Tr ρ = 1.
pub fn steady_state(params: &SystemParams, omega: Complex64) -> Result<DensityMatrix> {
    params.validate()?;
    if !(omega.re.is_finite() && omega.im.is_finite()) {
        return Err(Error::invalid("omega", "must be finite"));
    }
    if params.kappa <= 0.0 && params.gamma <= 0.0 {
        return Err(Error::Singular("no dissipation (kappa = gamma = 0)".into()));
    }
    let layout = params.layout();
    let dim = layout.dim();
    let gen = Generator::new(params);
    let mut system = gen.dense(omega);
    let mut rhs = ComplexVector::zeros(dim * dim);
    for c in 0..dim * dim {
        system[(0, c)] = Complex64::new(0.0, 0.0);
    }
    for i in 0..dim {
        system[(0, i * dim + i)] = Complex64::new(1.0, 0.0);
    }
    rhs[0] = Complex64::new(1.0, 0.0);

    let solution = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("LU factorization found a zero pivot".into()))?;
    let rho = ComplexMatrix::from_fn(dim, dim, |i, j| solution[i * dim + j]);
    // Symmetrize away rounding asymmetry; the solution is hermitian up to round-off.
    let rho = (&rho + rho.adjoint()).scale(0.5);

    let res = residual(&gen, omega, &rho);
    if !(res <= RESIDUAL_TOL) {
        return Err(Error::Singular(format!(
            "steady-state residual {res:.3e} above {RESIDUAL_TOL:e}"
        )));
    }
    DensityMatrix::new(layout, rho)
}
