use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::drive::OpticalCalibration;
use crate::dynamics::{angular, steady_state, SystemParams};
use crate::error::{Error, Result};
use crate::hilbert::QuantumState;
use crate::series::SweepCurve;

fn check_detunings(detunings: &[f64]) -> Result<()> {
    if detunings.is_empty() {
        return Err(Error::invalid("detunings", "grid is empty"));
    }
    Ok(())
}

/// Steady-state transmission 2·(2πκ)·⟨a†a⟩ for a constant drive Ω₀ at laser detuning Δ.
fn steady_transmission(params: &SystemParams, omega0: f64, detuning: f64) -> Result<f64> {
    let shifted = params.laser_shifted(detuning);
    let rho = steady_state(&shifted, Complex64::new(omega0, 0.0))?;
    let n = rho.expectation(&shifted.layout().photon_number())?.re;
    Ok(2.0 * angular(params.kappa) * n)
}

/// Steady transmission versus laser detuning (GHz); cavity and QD detunings both shift by −Δ.
pub fn spectrum_scan(params: &SystemParams, omega0: f64, detunings: &[f64]) -> Result<SweepCurve> {
    params.validate()?;
    check_detunings(detunings)?;
    if !(omega0.is_finite() && omega0 >= 0.0) {
        return Err(Error::invalid("omega0", "must be finite and non-negative"));
    }
    let y = detunings
        .par_iter()
        .map(|&d| steady_transmission(params, omega0, d))
        .collect::<Result<Vec<_>>>()?;
    SweepCurve::new("detuning_ghz", detunings.to_vec(), y, None)
}

/// Largest relative change of y/Ω₀² when Ω₀ is halved; small in the linear-response regime.
pub fn weak_drive_deviation(params: &SystemParams, omega0: f64, detunings: &[f64]) -> Result<f64> {
    if !(omega0 > 0.0) {
        return Err(Error::invalid("omega0", "must be positive"));
    }
    let full = spectrum_scan(params, omega0, detunings)?;
    let half = spectrum_scan(params, omega0 / 2.0, detunings)?;
    let mut worst: f64 = 0.0;
    for (a, b) in full.y.iter().zip(&half.y) {
        let (a, b) = (a / (omega0 * omega0), 4.0 * b / (omega0 * omega0));
        if a.abs() > 0.0 {
            worst = worst.max((a - b).abs() / a.abs());
        }
    }
    Ok(worst)
}

/// (peak − dip)/(peak + dip) of a normal-mode doublet.
///
/// Peak is the lower of the maxima over Δ ≤ 0 and Δ ≥ 0; dip is the minimum
/// between the two maxima. A single central peak gives 0.
pub fn normal_mode_contrast(curve: &SweepCurve) -> Result<f64> {
    let argmax = |pred: &dyn Fn(f64) -> bool| {
        curve
            .x
            .iter()
            .zip(&curve.y)
            .enumerate()
            .filter(|(_, (x, _))| pred(**x))
            .max_by(|a, b| a.1 .1.total_cmp(b.1 .1))
            .map(|(k, _)| k)
    };
    let left = argmax(&|x| x <= 0.0)
        .ok_or_else(|| Error::invalid("detunings", "no points at or below zero"))?;
    let right = argmax(&|x| x >= 0.0)
        .ok_or_else(|| Error::invalid("detunings", "no points at or above zero"))?;
    let (lo, hi) = if left <= right {
        (left, right)
    } else {
        (right, left)
    };
    let peak = curve.y[left].min(curve.y[right]);
    let dip = curve.y[lo..=hi]
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if !(peak + dip > 0.0) {
        return Err(Error::invalid(
            "spectrum",
            "contrast undefined for a vanishing spectrum",
        ));
    }
    Ok((peak - dip) / (peak + dip))
}

/// Photon flux (per ns) of a cw drive standing in for a pulse train:
/// the pulse's coupled photons spread evenly over its FWHM.
pub fn cw_equivalent_flux(avg_power_nw: f64, cal: &OpticalCalibration, fwhm: f64) -> Result<f64> {
    if !(fwhm > 0.0 && fwhm.is_finite()) {
        return Err(Error::invalid("fwhm", "must be positive"));
    }
    Ok(cal.photons_per_pulse(avg_power_nw)? / fwhm)
}

#[derive(Debug, Clone, Serialize)]
pub struct SaturationResult {
    pub powers_nw: Vec<f64>,
    pub curves: Vec<SweepCurve>,
    pub contrast: Vec<f64>,
    /// Contrast of the linear-response spectrum.
    pub weak_contrast: f64,
}

/// Flux used for the linear-response reference spectrum (photons/ns).
const WEAK_FLUX: f64 = 1e-8;

/// Spectra at increasing cw-equivalent drive and their normal-mode contrast.
pub fn saturation_scan(
    params: &SystemParams,
    powers_nw: &[f64],
    cal: &OpticalCalibration,
    fwhm: f64,
    detunings: &[f64],
) -> Result<SaturationResult> {
    cal.validate()?;
    if powers_nw.is_empty() {
        return Err(Error::invalid("powers_nw", "list is empty"));
    }
    if powers_nw.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("powers_nw", "powers must increase strictly"));
    }
    let weak = spectrum_scan(params, WEAK_FLUX.sqrt(), detunings)?;
    let weak_contrast = normal_mode_contrast(&weak)?;
    let mut curves = Vec::with_capacity(powers_nw.len());
    let mut contrast = Vec::with_capacity(powers_nw.len());
    for &p in powers_nw {
        let flux = cw_equivalent_flux(p, cal, fwhm)?;
        let curve = spectrum_scan(params, flux.sqrt(), detunings)?;
        contrast.push(normal_mode_contrast(&curve)?);
        curves.push(curve);
    }
    Ok(SaturationResult {
        powers_nw: powers_nw.to_vec(),
        curves,
        contrast,
        weak_contrast,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect()
    }

    #[test]
    fn empty_cavity_is_lorentzian() {
        let p = SystemParams {
            g: 0.0,
            ..SystemParams::paper_device().with_n_max(2)
        };
        let omega0 = 1e-3;
        let detunings = grid(-100.0, 100.0, 41);
        let curve = spectrum_scan(&p, omega0, &detunings).unwrap();
        for (d, y) in curve.x.iter().zip(&curve.y) {
            let n =
                omega0 * omega0 / angular(p.kappa) * p.kappa.powi(2) / (p.kappa.powi(2) + d * d);
            let expected = 2.0 * angular(p.kappa) * n;
            assert!(
                (y / expected - 1.0).abs() < 1e-6,
                "Δ={d}: {y} vs {expected}"
            );
        }
    }

    #[test]
    fn doublet_splitting_and_dip() {
        let p = SystemParams::paper_device().with_n_max(2);
        let detunings = grid(-40.0, 40.0, 801);
        let curve = spectrum_scan(&p, 1e-4, &detunings).unwrap();
        let half = detunings.len() / 2;
        let peak_of = |range: std::ops::Range<usize>| {
            range
                .max_by(|&a, &b| curve.y[a].total_cmp(&curve.y[b]))
                .map(|k| curve.x[k])
                .unwrap()
        };
        // With γ ≪ κ the transmission maxima sit at Δ = ±g, wider than the eigenfrequency splitting.
        let splitting = peak_of(half..detunings.len()) - peak_of(0..half);
        assert!((splitting / (2.0 * p.g) - 1.0).abs() < 0.02, "{splitting}");
        let eigen = crate::dynamics::polariton_eigenfrequencies(&p, 0.0, 0.0).splitting();
        assert!(splitting > eigen);

        let empty = SystemParams { g: 0.0, ..p };
        let with_qd = steady_transmission(&p, 1e-4, 0.0).unwrap();
        let without = steady_transmission(&empty, 1e-4, 0.0).unwrap();
        assert!(with_qd / without < 1e-3);
    }

    #[test]
    fn weak_drive_gate() {
        let p = SystemParams::paper_device().with_n_max(3);
        let dev = weak_drive_deviation(&p, 1e-4, &[-21.0, 0.0, 21.0]).unwrap();
        assert!(dev < 1e-3, "{dev}");
        let strong = weak_drive_deviation(&p, 10.0, &[-21.0, 0.0, 21.0]).unwrap();
        assert!(strong > 1e-3);
    }

    #[test]
    fn contrast_of_synthetic_curves() {
        let x = grid(-2.0, 2.0, 5);
        let doublet = SweepCurve::new("d", x.clone(), vec![0.0, 4.0, 1.0, 4.0, 0.0], None).unwrap();
        assert!((normal_mode_contrast(&doublet).unwrap() - 0.6).abs() < 1e-12);
        let single = SweepCurve::new("d", x, vec![0.0, 1.0, 3.0, 1.0, 0.0], None).unwrap();
        assert_eq!(normal_mode_contrast(&single).unwrap(), 0.0);
    }

    #[test]
    fn saturation_rejects_unsorted_powers() {
        let p = SystemParams::pulse_pair_device().with_n_max(2);
        let cal = OpticalCalibration::default();
        assert!(saturation_scan(&p, &[1.0, 0.5], &cal, 0.04, &[0.0]).is_err());
    }
}
