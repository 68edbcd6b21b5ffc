use crate::drive::{fwhm_to_sigma, DriveSpec};
use crate::dynamics::{angular, evolve_master_observed, MasterOptions, SystemParams, TimeGrid};
use crate::error::{Error, Result};
use crate::hilbert::{PureState, QdState};
use crate::series::TimeSeries;

/// Gaussian IRF kernels are truncated at this many standard deviations.
const IRF_SPAN: f64 = 5.0;

/// Causal convolution with (1/τ)·e^{−t/τ}, exact for piecewise-linear input.
pub fn convolve_exponential(values: &[f64], dt: f64, tau: f64) -> Vec<f64> {
    if tau <= 0.0 || values.is_empty() {
        return values.to_vec();
    }
    let decay = (-dt / tau).exp();
    let r = tau / dt;
    let b = 1.0 - r * (1.0 - decay);
    let a = (1.0 - decay) - b;
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(acc);
    for w in values.windows(2) {
        acc = decay * acc + a * w[0] + b * w[1];
        out.push(acc);
    }
    out
}

/// Convolution with a unit-area Gaussian of the given FWHM on a uniform grid.
///
/// The signal is zero before the first sample and held at its last value beyond the end.
pub fn convolve_gaussian(values: &[f64], dt: f64, fwhm: f64) -> Vec<f64> {
    if fwhm <= 0.0 || values.is_empty() {
        return values.to_vec();
    }
    let sigma = fwhm_to_sigma(fwhm);
    let half = (IRF_SPAN * sigma / dt).ceil() as isize;
    let mut weights: Vec<f64> = (-half..=half)
        .map(|j| {
            let x = j as f64 * dt / sigma;
            (-0.5 * x * x).exp()
        })
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let last = values.len() as isize - 1;
    (0..values.len() as isize)
        .map(|k| {
            (-half..=half)
                .zip(&weights)
                .map(|(j, w)| {
                    let idx = k - j;
                    if idx < 0 {
                        0.0
                    } else {
                        w * values[idx.min(last) as usize]
                    }
                })
                .sum()
        })
        .collect()
}

/// Photoluminescence after non-resonant excitation into |e,0⟩ at the grid start.
///
/// Channels: `I0` raw emission 2·(2πκ)⟨a†a⟩, `I` after the relaxation and IRF
/// convolutions, `pe0` raw ⟨σ†σ⟩ and `pe` after the relaxation convolution.
pub fn pl_decay(
    params: &SystemParams,
    tau_rise: f64,
    irf_fwhm: f64,
    grid: &TimeGrid,
) -> Result<TimeSeries> {
    if !(tau_rise.is_finite() && tau_rise >= 0.0) {
        return Err(Error::invalid(
            "tau_rise",
            "must be finite and non-negative",
        ));
    }
    if !(irf_fwhm.is_finite() && irf_fwhm >= 0.0) {
        return Err(Error::invalid(
            "irf_fwhm",
            "must be finite and non-negative",
        ));
    }
    let layout = params.layout();
    let rho0 = PureState::basis(layout, QdState::Excited, 0).to_density();
    let trace = evolve_master_observed(
        &rho0,
        params,
        &DriveSpec::none(),
        grid,
        &[layout.photon_number(), layout.excited_population()],
        MasterOptions::default(),
    )?;
    let dt = grid.dt();
    let emission: Vec<f64> = trace.values[0]
        .iter()
        .map(|n| 2.0 * angular(params.kappa) * n)
        .collect();
    let population = trace.values[1].clone();
    let intensity = convolve_gaussian(&convolve_exponential(&emission, dt, tau_rise), dt, irf_fwhm);
    let pe = convolve_exponential(&population, dt, tau_rise);

    let mut ts = TimeSeries::from_grid(grid)
        .with_channel("I", intensity)?
        .with_channel("pe", pe)?
        .with_channel("I0", emission)?
        .with_channel("pe0", population)?;
    ts.set_metadata("scenario", "pl-decay");
    ts.set_metadata("tau_rise_ns", tau_rise);
    ts.set_metadata("irf_fwhm_ns", irf_fwhm);
    Ok(ts)
}

/// Index and time of the maximum of a channel.
pub fn peak_time(t: &[f64], y: &[f64]) -> Result<(usize, f64)> {
    let k = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .ok_or_else(|| Error::invalid("series", "empty"))?;
    Ok((k, t[k]))
}

/// Fraction of the peak at which the tail-fit window ends.
pub const TAIL_FLOOR: f64 = 0.1;

/// Mono-exponential decay time (ns) from a log-linear least-squares fit of the
/// tail, from the peak down to [`TAIL_FLOOR`] of the peak.
pub fn fit_tail_decay(t: &[f64], y: &[f64]) -> Result<f64> {
    let (start, _) = peak_time(t, y)?;
    let peak = y[start];
    if !(peak > 0.0) {
        return Err(Error::invalid("series", "no positive peak to fit"));
    }
    let end = (start..y.len())
        .find(|&k| y[k] < TAIL_FLOOR * peak)
        .unwrap_or(y.len());
    let points: Vec<(f64, f64)> = (start..end)
        .filter(|&k| y[k] > 0.0)
        .map(|k| (t[k], y[k].ln()))
        .collect();
    if points.len() < 3 {
        return Err(Error::invalid("series", "tail too short to fit"));
    }
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| {
        (a + (x - mx) * (y - my), b + (x - mx) * (x - mx))
    });
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(Error::invalid("series", "tail is not decaying"));
    }
    Ok(-1.0 / slope)
}
