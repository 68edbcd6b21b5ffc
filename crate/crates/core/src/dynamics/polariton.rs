use num_complex::Complex64;

use super::SystemParams;
use crate::hilbert::ComplexMatrix;

/// Complex polariton frequencies (GHz): real part frequency, imaginary part −decay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolaritonPair {
    pub omega_plus: Complex64,
    pub omega_minus: Complex64,
}

impl PolaritonPair {
    /// Re(ω₊ − ω₋)
    pub fn splitting(&self) -> f64 {
        (self.omega_plus - self.omega_minus).re
    }
}

/// ω± = (ω_r + ω_d)/2 − i(κ + γ)/2 ± √(g² + ¼(δ − i(κ − γ))²), δ = ω_d − ω_r, principal root.
pub fn polariton_eigenfrequencies(
    params: &SystemParams,
    omega_r: f64,
    omega_d: f64,
) -> PolaritonPair {
    let i = Complex64::i();
    let (g, kappa, gamma) = (params.g, params.kappa, params.gamma);
    let delta = omega_d - omega_r;
    let center = Complex64::new((omega_r + omega_d) / 2.0, -(kappa + gamma) / 2.0);
    let shifted = Complex64::new(delta, 0.0) - i * (kappa - gamma);
    let root = (Complex64::new(g * g, 0.0) + shifted * shifted * 0.25).sqrt();
    PolaritonPair {
        omega_plus: center + root,
        omega_minus: center - root,
    }
}

/// Non-hermitian single-excitation matrix [[ω_d − iγ, −ig], [ig, ω_r − iκ]] in GHz.
pub fn single_excitation_matrix(
    params: &SystemParams,
    omega_r: f64,
    omega_d: f64,
) -> ComplexMatrix {
    let i = Complex64::i();
    ComplexMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(omega_d, -params.gamma),
            -i * params.g,
            i * params.g,
            Complex64::new(omega_r, -params.kappa),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_splitting() {
        let p = SystemParams::paper_device();
        let pair = polariton_eigenfrequencies(&p, 0.0, 0.0);
        let expected = 2.0 * (625.0f64 - (26.9f64 / 2.0).powi(2)).sqrt();
        assert!((pair.splitting() - expected).abs() < 1e-12);
        assert!((pair.splitting() - 42.15).abs() < 0.01);
        let second = polariton_eigenfrequencies(&SystemParams::pulse_pair_device(), 0.0, 0.0);
        assert!((second.splitting() - 32.6).abs() < 0.05);
    }

    #[test]
    fn uncoupled_limit() {
        let p = SystemParams {
            g: 0.0,
            ..SystemParams::paper_device()
        };
        let pair = polariton_eigenfrequencies(&p, 2.0, 2.0);
        assert!((pair.omega_plus - Complex64::new(2.0, -p.gamma)).norm() < 1e-12);
        assert!((pair.omega_minus - Complex64::new(2.0, -p.kappa)).norm() < 1e-12);

        // Off resonance the printed sign convention pairs the linewidths with the
        // other branch; real and imaginary parts still agree as multisets.
        let (wr, wd) = (3.0, -5.0);
        let pair = polariton_eigenfrequencies(&p, wr, wd);
        let mut re = [pair.omega_plus.re, pair.omega_minus.re];
        let mut im = [pair.omega_plus.im, pair.omega_minus.im];
        re.sort_by(f64::total_cmp);
        im.sort_by(f64::total_cmp);
        assert!((re[0] - wd).abs() < 1e-12 && (re[1] - wr).abs() < 1e-12);
        assert!((im[0] + p.kappa).abs() < 1e-12 && (im[1] + p.gamma).abs() < 1e-12);
    }

    #[test]
    fn decay_parts_non_positive() {
        for delta in [-80.0, -10.0, 0.0, 7.5, 60.0] {
            let pair = polariton_eigenfrequencies(&SystemParams::paper_device(), 0.0, delta);
            assert!(pair.omega_plus.im <= 0.0 && pair.omega_minus.im <= 0.0);
        }
    }
}
