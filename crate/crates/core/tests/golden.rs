//! Values frozen from an independent high-order integration (adaptive
//! DOP853 at rtol 1e-12) and SVD null-space steady states.

use qdswitch::drive::OpticalCalibration;
use qdswitch::dynamics::{SystemParams, TimeGrid};
use qdswitch::scenarios::{channel_extremum, cw_pulse_switch, nonlinear_map, Solver, SwitchSetup};

const PEAK_DN: f64 = 2.13435226604976e-3;
const PEAK_DN_TIME: f64 = 0.159;
const DN_AT_PULSE_CENTER: f64 = 1.8782477211085947e-3;
const N_SIGNAL_12NW: f64 = 1.2196537143476608e-4;
const MAP_12NW: [f64; 5] = [
    3.9521438722553883,
    7.844373668703668,
    11.670465882606814,
    15.424834434516875,
    19.10250794219532,
];

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

#[test]
fn resonant_switch_peak_dn() {
    let setup = SwitchSetup {
        cw_power_nw: 12.0,
        pulse_power_nw: 0.2,
        pulse_center_ns: 0.15,
        pulse_fwhm_ns: 0.04,
        control_detuning_ghz: 0.0,
        k_phases: 8,
    };
    let grid = TimeGrid::new(0.0, 0.3, 300).unwrap();
    let ts = cw_pulse_switch(
        &SystemParams::paper_device(),
        &setup,
        &OpticalCalibration::default(),
        &grid,
        Solver::Master,
    )
    .unwrap();
    let (t, dn) = channel_extremum(&ts, "dn").unwrap();
    assert!((t - PEAK_DN_TIME).abs() < 1e-9, "{t}");
    assert!(rel(dn, PEAK_DN) < 1e-6, "{dn}");
    assert!(rel(ts.channel("dn").unwrap()[150], DN_AT_PULSE_CENTER) < 1e-6);
    for n in ts.channel("n_s").unwrap() {
        assert!(rel(*n, N_SIGNAL_12NW) < 1e-8, "{n}");
    }
}

#[test]
fn nonlinear_map_at_12nw() {
    let map = nonlinear_map(
        &SystemParams::paper_device(),
        &[12.0],
        &[1.0, 2.0, 3.0, 4.0, 5.0],
        &OpticalCalibration::default(),
        8,
    )
    .unwrap();
    assert!(rel(map.n_signal[0], N_SIGNAL_12NW) < 1e-8);
    for (row, expected) in map.values.iter().zip(MAP_12NW) {
        assert!(rel(row[0], expected) < 1e-8, "{} vs {expected}", row[0]);
    }
}
