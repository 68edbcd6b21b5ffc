//! Drive fields and laboratory-unit conversions.
//!
//! Drive amplitudes Ω are in ns^-1/2 so that |Ω|² is a photon flux in
//! photons/ns. The Hamiltonian couples them through √(2πκ), which puts the
//! resonant empty-cavity occupation at |Ω|²/(2πκ).

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// FWHM → standard deviation of a Gaussian.
pub fn fwhm_to_sigma(fwhm: f64) -> f64 {
    fwhm / (2.0 * (2.0 * LN_2).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Envelope {
    Cw,
    /// Gaussian whose intensity |Ω|² has the given FWHM (ns), centered at `center` (ns).
    Gaussian {
        center: f64,
        fwhm: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveComponent {
    pub envelope: Envelope,
    /// Peak amplitude Ω₀ (ns^-1/2).
    pub amplitude: f64,
    /// Carrier offset from the rotating frame (GHz).
    #[serde(default)]
    pub carrier_detuning: f64,
    #[serde(default)]
    pub phase: f64,
}

impl DriveComponent {
    pub fn cw(amplitude: f64) -> Self {
        Self {
            envelope: Envelope::Cw,
            amplitude,
            carrier_detuning: 0.0,
            phase: 0.0,
        }
    }

    pub fn gaussian(amplitude: f64, center: f64, fwhm: f64) -> Self {
        Self {
            envelope: Envelope::Gaussian { center, fwhm },
            amplitude,
            carrier_detuning: 0.0,
            phase: 0.0,
        }
    }

    pub fn with_detuning(mut self, ghz: f64) -> Self {
        self.carrier_detuning = ghz;
        self
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    fn envelope_at(&self, t: f64) -> f64 {
        match self.envelope {
            Envelope::Cw => 1.0,
            Envelope::Gaussian { center, fwhm } => {
                let sigma = fwhm_to_sigma(fwhm);
                (-(t - center).powi(2) / (4.0 * sigma * sigma)).exp()
            }
        }
    }

    pub fn evaluate(&self, t: f64) -> Complex64 {
        let arg = self.phase - 2.0 * PI * self.carrier_detuning * t;
        Complex64::from_polar(self.amplitude * self.envelope_at(t), arg)
    }
}

/// Complex drive envelope Ω(t): a sum of cw tones and Gaussian pulses.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    pub components: Vec<DriveComponent>,
}

impl DriveSpec {
    pub fn new(components: Vec<DriveComponent>) -> Result<Self> {
        let spec = Self { components };
        spec.validate()?;
        Ok(spec)
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn cw(amplitude: f64) -> Self {
        Self {
            components: vec![DriveComponent::cw(amplitude)],
        }
    }

    pub fn with(mut self, component: DriveComponent) -> Self {
        self.components.push(component);
        self
    }

    /// Concatenate the components of two drives.
    pub fn combined(&self, other: &DriveSpec) -> DriveSpec {
        let mut components = self.components.clone();
        components.extend_from_slice(&other.components);
        DriveSpec { components }
    }

    /// Same drive with every component's phase shifted by `phase`.
    pub fn phase_shifted(&self, phase: f64) -> DriveSpec {
        DriveSpec {
            components: self
                .components
                .iter()
                .map(|c| c.with_phase(c.phase + phase))
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (k, c) in self.components.iter().enumerate() {
            if !(c.amplitude.is_finite() && c.carrier_detuning.is_finite() && c.phase.is_finite()) {
                return Err(Error::invalid(
                    format!("drive.components[{k}]"),
                    "non-finite value",
                ));
            }
            if let Envelope::Gaussian { center, fwhm } = c.envelope {
                if !center.is_finite() || !(fwhm > 0.0 && fwhm.is_finite()) {
                    return Err(Error::invalid(
                        format!("drive.components[{k}].fwhm"),
                        "gaussian FWHM must be positive and finite",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.amplitude == 0.0)
    }

    /// Upper bound on |Ω(t)| over all t.
    pub fn max_amplitude(&self) -> f64 {
        self.components.iter().map(|c| c.amplitude.abs()).sum()
    }

    pub fn max_carrier_detuning(&self) -> f64 {
        self.components
            .iter()
            .filter(|c| c.amplitude != 0.0)
            .map(|c| c.carrier_detuning.abs())
            .fold(0.0, f64::max)
    }

    pub fn evaluate(&self, t: f64) -> Complex64 {
        self.components.iter().map(|c| c.evaluate(t)).sum()
    }
}

/// Ω(t) for a drive spec.
pub fn evaluate_drive(spec: &DriveSpec, t: f64) -> Complex64 {
    spec.evaluate(t)
}

/// Uniform relative-phase grid {2πk/K}.
pub fn phase_grid(k_phases: usize) -> Vec<f64> {
    (0..k_phases)
        .map(|k| 2.0 * PI * k as f64 / k_phases as f64)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpticalCalibration {
    /// Fraction of the power before the objective that couples into the cavity mode.
    pub eta: f64,
    /// nm
    pub wavelength: f64,
    /// GHz
    pub repetition_rate: f64,
}

impl Default for OpticalCalibration {
    fn default() -> Self {
        Self {
            eta: 0.03,
            wavelength: 927.0,
            repetition_rate: 0.08,
        }
    }
}

impl OpticalCalibration {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::invalid(
                "calibration.eta",
                format!("{} not in (0, 1]", self.eta),
            ));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(Error::invalid("calibration.wavelength", "must be positive"));
        }
        if !(self.repetition_rate >= 0.0 && self.repetition_rate.is_finite()) {
            return Err(Error::invalid(
                "calibration.repetition_rate",
                "must be non-negative",
            ));
        }
        Ok(())
    }

    /// hc/λ in joules.
    pub fn photon_energy(&self) -> f64 {
        PLANCK * SPEED_OF_LIGHT / (self.wavelength * 1e-9)
    }

    /// Coupled photon flux (photons/ns) for a power in nW.
    pub fn coupled_flux(&self, power_nw: f64) -> f64 {
        self.eta * power_nw * 1e-9 / self.photon_energy() * 1e-9
    }

    /// Power in nW giving a coupled flux (photons/ns).
    pub fn power_for_flux(&self, flux: f64) -> f64 {
        flux / 1e-9 * self.photon_energy() / self.eta / 1e-9
    }

    /// Coupled photons per pulse for an average power in nW.
    pub fn photons_per_pulse(&self, avg_power_nw: f64) -> Result<f64> {
        if !(self.repetition_rate > 0.0) {
            return Err(Error::invalid(
                "calibration.repetition_rate",
                "must be positive for pulsed power",
            ));
        }
        let energy = self.eta * avg_power_nw * 1e-9 / (self.repetition_rate * 1e9);
        Ok(energy / self.photon_energy())
    }
}

fn check_power(power_nw: f64) -> Result<()> {
    if !(power_nw >= 0.0 && power_nw.is_finite()) {
        return Err(Error::invalid(
            "power",
            format!("{power_nw} nW must be non-negative"),
        ));
    }
    Ok(())
}

/// cw power before the objective (nW) → drive amplitude Ω₀ = √Φ (ns^-1/2).
pub fn cw_power_to_amplitude(power_nw: f64, cal: &OpticalCalibration) -> Result<f64> {
    check_power(power_nw)?;
    cal.validate()?;
    Ok(cal.coupled_flux(power_nw).sqrt())
}

/// Time-averaged pulsed power (nW) → peak amplitude of a Gaussian pulse of intensity FWHM `fwhm` (ns).
///
/// The pulse carries E/ħω coupled photons, i.e. ∫|Ω(t)|² dt equals the
/// per-pulse photon number.
pub fn pulsed_power_to_peak_amplitude(
    avg_power_nw: f64,
    cal: &OpticalCalibration,
    fwhm: f64,
) -> Result<f64> {
    check_power(avg_power_nw)?;
    cal.validate()?;
    if !(fwhm > 0.0) {
        return Err(Error::invalid("fwhm", "pulse FWHM must be positive"));
    }
    let photons = cal.photons_per_pulse(avg_power_nw)?;
    let sigma = fwhm_to_sigma(fwhm);
    Ok((photons / (sigma * (2.0 * PI).sqrt())).sqrt())
}

/// Δν = c·Δλ/λ², GHz.
pub fn wavelength_detuning_to_ghz(delta_lambda_nm: f64, wavelength_nm: f64) -> Result<f64> {
    if !(wavelength_nm > 0.0) {
        return Err(Error::invalid("wavelength", "must be positive"));
    }
    Ok(SPEED_OF_LIGHT * (delta_lambda_nm * 1e-9) / (wavelength_nm * 1e-9).powi(2) * 1e-9)
}
