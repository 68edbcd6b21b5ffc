//! Observable post-processing and the experiment reproductions built on the
//! solvers: spectra, photoluminescence, cw+pulse switching, pulse pairs,
//! saturation and the nonlinear-coefficient map.

mod observables;
mod pl;
mod spectrum;
mod switching;
mod two_pulse;

pub use observables::{differential_transmission, transmission};
pub use pl::{
    convolve_exponential, convolve_gaussian, fit_tail_decay, peak_time, pl_decay, TAIL_FLOOR,
};
pub use spectrum::{
    cw_equivalent_flux, normal_mode_contrast, saturation_scan, spectrum_scan, weak_drive_deviation,
    SaturationResult,
};
pub use switching::{
    channel_extremum, cw_pulse_switch, default_k_phases, nonlinear_map, NonlinearMap, Solver,
    SwitchSetup,
};
pub use two_pulse::{
    default_output_dt, default_padding, dip_depth, excess_peak_width, two_pulse_sweep,
    TwoPulseResult, TwoPulseSetup, BASELINE_FWHMS, DIP_RESOLUTION,
};
