use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drive::{
    phase_grid, pulsed_power_to_peak_amplitude, DriveComponent, DriveSpec, OpticalCalibration,
};
use crate::dynamics::{evolve_master_observed, MasterOptions, SystemParams, TimeGrid};
use crate::error::{Error, Result};
use crate::hilbert::DensityMatrix;
use crate::series::SweepCurve;

use super::switching::default_k_phases;

/// Delays at or beyond this many FWHM form the normalization baseline.
pub const BASELINE_FWHMS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoPulseSetup {
    /// Time-averaged power of each pulse train.
    pub per_pulse_power_nw: f64,
    pub fwhm_ns: f64,
    pub delays_ns: Vec<f64>,
    pub gamma_d: f64,
    #[serde(default = "default_k_phases")]
    pub k_phases: usize,
    /// Simulated time before the first and after the last pulse center.
    #[serde(default = "default_padding")]
    pub padding_ns: f64,
    /// Output sampling step used for the time integral.
    #[serde(default = "default_output_dt")]
    pub output_dt_ns: f64,
}

pub fn default_padding() -> f64 {
    0.16
}

pub fn default_output_dt() -> f64 {
    0.001
}

impl TwoPulseSetup {
    pub fn validate(&self) -> Result<()> {
        if !(self.per_pulse_power_nw.is_finite() && self.per_pulse_power_nw >= 0.0) {
            return Err(Error::invalid(
                "per_pulse_power_nw",
                "must be finite and non-negative",
            ));
        }
        if !(self.fwhm_ns > 0.0 && self.fwhm_ns.is_finite()) {
            return Err(Error::invalid("fwhm_ns", "must be positive"));
        }
        if !(self.gamma_d.is_finite() && self.gamma_d >= 0.0) {
            return Err(Error::invalid("gamma_d", "must be finite and non-negative"));
        }
        if self.k_phases == 0 {
            return Err(Error::invalid("k_phases", "must be at least 1"));
        }
        if !(self.padding_ns > 0.0 && self.output_dt_ns > 0.0) {
            return Err(Error::invalid(
                "padding_ns",
                "padding and output step must be positive",
            ));
        }
        if self.delays_ns.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("delays_ns", "delays must increase strictly"));
        }
        if !self
            .delays_ns
            .iter()
            .any(|d| d.abs() >= BASELINE_FWHMS * self.fwhm_ns)
        {
            return Err(Error::invalid(
                "delays_ns",
                format!("no delay with |Δt| ≥ {BASELINE_FWHMS}·FWHM for the baseline"),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TwoPulseResult {
    /// Phase-averaged ∫⟨a†a⟩dt normalized to the far-delay baseline.
    pub curve: SweepCurve,
    /// Phase-averaged ∫⟨a†a⟩dt in photon·ns.
    pub raw: Vec<f64>,
    pub baseline: f64,
}

fn trapezoid(values: &[f64], dt: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    dt * (inner + 0.5 * (values[0] + values[values.len() - 1]))
}

/// Time-integrated photon number of one pulse pair at delay Δt and relative phase φ.
fn pair_integral(
    params: &SystemParams,
    amplitude: f64,
    setup: &TwoPulseSetup,
    delay: f64,
    phase: f64,
) -> Result<f64> {
    let drive = DriveSpec::none()
        .with(DriveComponent::gaussian(
            amplitude,
            -delay / 2.0,
            setup.fwhm_ns,
        ))
        .with(DriveComponent::gaussian(amplitude, delay / 2.0, setup.fwhm_ns).with_phase(phase));
    let half = delay.abs() / 2.0 + setup.padding_ns;
    let n_steps = ((2.0 * half / setup.output_dt_ns).ceil() as usize).max(1);
    let grid = TimeGrid::new(-half, half, n_steps)?;
    let layout = params.layout();
    let trace = evolve_master_observed(
        &DensityMatrix::ground(layout),
        params,
        &drive,
        &grid,
        &[layout.photon_number()],
        MasterOptions::default(),
    )?;
    Ok(trapezoid(&trace.values[0], grid.dt()))
}

/// Normalized transmission of two equal Gaussian pulses versus their delay,
/// averaged over `k_phases` relative phases.
pub fn two_pulse_sweep(
    params: &SystemParams,
    setup: &TwoPulseSetup,
    cal: &OpticalCalibration,
) -> Result<TwoPulseResult> {
    setup.validate()?;
    let params = params.with_gamma_d(setup.gamma_d);
    params.validate()?;
    let amplitude = pulsed_power_to_peak_amplitude(setup.per_pulse_power_nw, cal, setup.fwhm_ns)?;
    let phases = phase_grid(setup.k_phases);
    let jobs: Vec<(f64, f64)> = setup
        .delays_ns
        .iter()
        .flat_map(|&d| phases.iter().map(move |&phi| (d, phi)))
        .collect();
    let values = jobs
        .par_iter()
        .map(|&(d, phi)| pair_integral(&params, amplitude, setup, d, phi))
        .collect::<Result<Vec<_>>>()?;
    let raw: Vec<f64> = values
        .chunks(phases.len())
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();

    let far: Vec<f64> = setup
        .delays_ns
        .iter()
        .zip(&raw)
        .filter(|(d, _)| d.abs() >= BASELINE_FWHMS * setup.fwhm_ns)
        .map(|(_, v)| *v)
        .collect();
    let baseline = far.iter().sum::<f64>() / far.len() as f64;
    if !(baseline > 0.0) {
        return Err(Error::invalid(
            "per_pulse_power_nw",
            "baseline transmission vanishes",
        ));
    }
    let y = raw.iter().map(|v| v / baseline).collect();
    Ok(TwoPulseResult {
        curve: SweepCurve::new("delay_ns", setup.delays_ns.clone(), y, None)?,
        raw,
        baseline,
    })
}

/// Full width at half maximum of the excess y − 1 around its largest value,
/// by linear interpolation between delay samples.
pub fn excess_peak_width(curve: &SweepCurve) -> Result<f64> {
    let excess: Vec<f64> = curve.y.iter().map(|y| y - 1.0).collect();
    let k = (0..excess.len())
        .max_by(|&a, &b| excess[a].total_cmp(&excess[b]))
        .ok_or_else(|| Error::invalid("curve", "empty"))?;
    let half = excess[k] / 2.0;
    if !(half > 0.0) {
        return Err(Error::invalid("curve", "no excess peak"));
    }
    let cross = |range: &mut dyn Iterator<Item = usize>, step: isize| -> Result<f64> {
        for j in range {
            let i = (j as isize + step) as usize;
            if excess[i] < half {
                let f = (excess[j] - half) / (excess[j] - excess[i]);
                return Ok(curve.x[j] + f * (curve.x[i] - curve.x[j]));
            }
        }
        Err(Error::invalid(
            "curve",
            "excess peak does not fall to half maximum",
        ))
    };
    let right = cross(&mut (k..excess.len() - 1), 1)?;
    let left = cross(&mut (1..=k).rev(), -1)?;
    Ok((right - left).abs())
}

/// Dips shallower than this are below the integration accuracy and count as none.
pub const DIP_RESOLUTION: f64 = 1e-6;

/// Depth 1 − min y over nonzero delays inside the baseline window
/// (|Δt| < [`BASELINE_FWHMS`]·FWHM), or 0 if no resolved dip below the baseline.
pub fn dip_depth(curve: &SweepCurve, fwhm: f64) -> f64 {
    let min = curve
        .x
        .iter()
        .zip(&curve.y)
        .filter(|(x, _)| **x != 0.0 && x.abs() < BASELINE_FWHMS * fwhm)
        .map(|(_, y)| *y)
        .fold(f64::INFINITY, f64::min);
    let depth = 1.0 - min;
    if depth > DIP_RESOLUTION {
        depth
    } else {
        0.0
    }
}
