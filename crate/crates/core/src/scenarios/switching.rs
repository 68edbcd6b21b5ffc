use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drive::{
    cw_power_to_amplitude, phase_grid, pulsed_power_to_peak_amplitude, DriveComponent, DriveSpec,
    OpticalCalibration,
};
use crate::dynamics::{
    evolve_master_observed, steady_state, MasterOptions, SystemParams, TimeGrid,
};
use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, QuantumState};
use crate::series::{fmt_value, TimeSeries};
use crate::trajectories::{ensemble_expectation_mixed, trajectory_seed, InitialState};

use super::{differential_transmission, transmission};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Solver {
    Master,
    Trajectories { n_traj: usize, seed: u64 },
}

/// cw signal plus one Gaussian control pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchSetup {
    pub cw_power_nw: f64,
    /// Time-averaged power of the pulse train.
    pub pulse_power_nw: f64,
    pub pulse_center_ns: f64,
    pub pulse_fwhm_ns: f64,
    /// Control carrier detuning from the signal (GHz).
    #[serde(default)]
    pub control_detuning_ghz: f64,
    /// Relative signal/control phases averaged over.
    #[serde(default = "default_k_phases")]
    pub k_phases: usize,
}

pub fn default_k_phases() -> usize {
    8
}

impl SwitchSetup {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("cw_power_nw", self.cw_power_nw),
            ("pulse_power_nw", self.pulse_power_nw),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(
                    name,
                    format!("{v} must be finite and non-negative"),
                ));
            }
        }
        if !self.pulse_center_ns.is_finite() || !self.control_detuning_ghz.is_finite() {
            return Err(Error::invalid(
                "pulse",
                "center and detuning must be finite",
            ));
        }
        if !(self.pulse_fwhm_ns > 0.0 && self.pulse_fwhm_ns.is_finite()) {
            return Err(Error::invalid("pulse_fwhm_ns", "must be positive"));
        }
        if self.k_phases == 0 {
            return Err(Error::invalid("k_phases", "must be at least 1"));
        }
        Ok(())
    }
}

/// Per-run photon number and, for trajectories, its standard error.
struct RunOutput {
    n: Vec<f64>,
    err: Option<Vec<f64>>,
}

fn run_family(
    params: &SystemParams,
    rho0: &DensityMatrix,
    drives: &[DriveSpec],
    grid: &TimeGrid,
    solver: Solver,
    run_id: u64,
) -> Result<RunOutput> {
    let number = params.layout().photon_number();
    match solver {
        Solver::Master => {
            let runs = drives
                .par_iter()
                .map(|d| {
                    evolve_master_observed(
                        rho0,
                        params,
                        d,
                        grid,
                        std::slice::from_ref(&number),
                        MasterOptions::default(),
                    )
                    .map(|trace| trace.values.into_iter().next().unwrap())
                })
                .collect::<Result<Vec<_>>>()?;
            let mut n = vec![0.0; grid.len()];
            for run in &runs {
                for (acc, v) in n.iter_mut().zip(run) {
                    *acc += v;
                }
            }
            n.iter_mut().for_each(|v| *v /= runs.len() as f64);
            Ok(RunOutput { n, err: None })
        }
        Solver::Trajectories { n_traj, seed } => {
            let initial = InitialState::from_density(rho0)?;
            let obs = vec![("n".to_string(), number)];
            let est = ensemble_expectation_mixed(
                &initial,
                params,
                drives,
                grid,
                &obs,
                n_traj,
                trajectory_seed(seed, run_id),
            )?;
            Ok(RunOutput {
                n: est.mean.channel("n")?.to_vec(),
                err: Some(est.stderr.channel("n")?.to_vec()),
            })
        }
    }
}

fn steady_or_ground(params: &SystemParams, omega: f64) -> Result<DensityMatrix> {
    if omega == 0.0 {
        Ok(DensityMatrix::ground(params.layout()))
    } else {
        steady_state(params, Complex64::new(omega, 0.0))
    }
}

/// Signal-only, control-only and combined runs with their transmissions.
///
/// The signal and combined runs start in the signal's steady state, the
/// control run in the ground state. The combined run averages over
/// `k_phases` uniformly spaced signal/control phases. Channels: `n_s`, `n_c`,
/// `n_sc`, `dn`, `T_s`, `T_c`, `T_sc`, `dT`, plus `*_err` standard errors for
/// trajectory runs.
pub fn cw_pulse_switch(
    params: &SystemParams,
    setup: &SwitchSetup,
    cal: &OpticalCalibration,
    grid: &TimeGrid,
    solver: Solver,
) -> Result<TimeSeries> {
    params.validate()?;
    setup.validate()?;
    grid.validate()?;
    let omega_s = cw_power_to_amplitude(setup.cw_power_nw, cal)?;
    let omega_c = pulsed_power_to_peak_amplitude(setup.pulse_power_nw, cal, setup.pulse_fwhm_ns)?;
    let signal = DriveSpec::cw(omega_s);
    let control = |phase: f64| {
        DriveSpec::none().with(
            DriveComponent::gaussian(omega_c, setup.pulse_center_ns, setup.pulse_fwhm_ns)
                .with_detuning(setup.control_detuning_ghz)
                .with_phase(phase),
        )
    };
    let combined: Vec<DriveSpec> = phase_grid(setup.k_phases)
        .into_iter()
        .map(|phi| signal.combined(&control(phi)))
        .collect();

    let rho_s = steady_or_ground(params, omega_s)?;
    let ground = DensityMatrix::ground(params.layout());
    let s = run_family(
        params,
        &rho_s,
        std::slice::from_ref(&signal),
        grid,
        solver,
        0,
    )?;
    let c = run_family(params, &ground, &[control(0.0)], grid, solver, 1)?;
    let sc = run_family(params, &rho_s, &combined, grid, solver, 2)?;

    let series = |n: &[f64]| TimeSeries::from_grid(grid).with_channel("n", n.to_vec());
    let (t_s, t_c, t_sc) = (
        transmission(&series(&s.n)?, params.kappa)?,
        transmission(&series(&c.n)?, params.kappa)?,
        transmission(&series(&sc.n)?, params.kappa)?,
    );
    let dt = differential_transmission(&t_s, &t_c, &t_sc)?;
    let dn: Vec<f64> = (0..grid.len()).map(|k| sc.n[k] - s.n[k] - c.n[k]).collect();

    let mut out = TimeSeries::from_grid(grid)
        .with_channel("n_s", s.n.clone())?
        .with_channel("n_c", c.n.clone())?
        .with_channel("n_sc", sc.n.clone())?
        .with_channel("dn", dn)?
        .with_channel("T_s", t_s.channel("T")?.to_vec())?
        .with_channel("T_c", t_c.channel("T")?.to_vec())?
        .with_channel("T_sc", t_sc.channel("T")?.to_vec())?
        .with_channel("dT", dt.channel("dT")?.to_vec())?;
    for (name, run) in [("n_s_err", &s), ("n_c_err", &c), ("n_sc_err", &sc)] {
        if let Some(err) = &run.err {
            out.insert(name, err.clone())?;
        }
    }
    out.set_metadata("omega_signal", omega_s);
    out.set_metadata("omega_control_peak", omega_c);
    if let Solver::Trajectories { n_traj, seed } = solver {
        out.set_metadata("n_traj", n_traj);
        out.set_metadata("master_seed", seed);
    }
    Ok(out)
}

/// Δn/n(s) over signal power and control/signal power multiplier.
#[derive(Debug, Clone, Serialize)]
pub struct NonlinearMap {
    pub signal_powers_nw: Vec<f64>,
    pub multipliers: Vec<f64>,
    /// n(s) per signal power.
    pub n_signal: Vec<f64>,
    /// values[m][p] = Δn/n(s) for multiplier m and signal power p.
    pub values: Vec<Vec<f64>>,
}

impl NonlinearMap {
    /// Long-form table: one block per multiplier, signal power ascending within each block.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,signal_power_nw,n_s,dn_over_ns\n");
        for (mi, m) in self.multipliers.iter().enumerate() {
            for (pi, p) in self.signal_powers_nw.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{}",
                    fmt_value(*m),
                    fmt_value(*p),
                    fmt_value(self.n_signal[pi]),
                    fmt_value(self.values[mi][pi])
                )
                .unwrap();
            }
        }
        out
    }
}

fn steady_photons(params: &SystemParams, omega: Complex64) -> Result<f64> {
    if omega == Complex64::new(0.0, 0.0) {
        return Ok(0.0);
    }
    Ok(steady_state(params, omega)?
        .expectation(&params.layout().photon_number())?
        .re)
}

/// Steady-state nonlinear coefficient with a cw control of m times the signal power.
///
/// n(s+c) is averaged over `k_phases` relative phases, so the interference
/// term of two independent lasers drops out.
pub fn nonlinear_map(
    params: &SystemParams,
    signal_powers_nw: &[f64],
    multipliers: &[f64],
    cal: &OpticalCalibration,
    k_phases: usize,
) -> Result<NonlinearMap> {
    params.validate()?;
    cal.validate()?;
    if k_phases == 0 {
        return Err(Error::invalid("k_phases", "must be at least 1"));
    }
    if let Some(p) = signal_powers_nw
        .iter()
        .find(|p| !(**p > 0.0 && p.is_finite()))
    {
        return Err(Error::invalid(
            "signal_powers_nw",
            format!("{p} must be positive"),
        ));
    }
    if let Some(m) = multipliers.iter().find(|m| !(**m > 0.0 && m.is_finite())) {
        return Err(Error::invalid(
            "multipliers",
            format!("{m} must be positive"),
        ));
    }
    let phases = phase_grid(k_phases);
    let n_signal = signal_powers_nw
        .par_iter()
        .map(|&p| steady_photons(params, Complex64::new(cw_power_to_amplitude(p, cal)?, 0.0)))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..multipliers.len())
        .flat_map(|mi| (0..signal_powers_nw.len()).map(move |pi| (mi, pi)))
        .collect();
    let flat = jobs
        .par_iter()
        .map(|&(mi, pi)| {
            let omega_s = cw_power_to_amplitude(signal_powers_nw[pi], cal)?;
            let omega_c = cw_power_to_amplitude(multipliers[mi] * signal_powers_nw[pi], cal)?;
            let n_c = steady_photons(params, Complex64::new(omega_c, 0.0))?;
            let mut n_sc = 0.0;
            for &phi in &phases {
                n_sc += steady_photons(
                    params,
                    Complex64::new(omega_s, 0.0) + Complex64::from_polar(omega_c, phi),
                )?;
            }
            n_sc /= phases.len() as f64;
            let n_s = n_signal[pi];
            Ok((n_sc - n_s - n_c) / n_s)
        })
        .collect::<Result<Vec<f64>>>()?;
    let values = flat
        .chunks(signal_powers_nw.len())
        .map(|c| c.to_vec())
        .collect();
    Ok(NonlinearMap {
        signal_powers_nw: signal_powers_nw.to_vec(),
        multipliers: multipliers.to_vec(),
        n_signal,
        values,
    })
}

/// Largest |value| of a channel together with its time.
pub fn channel_extremum(ts: &TimeSeries, name: &str) -> Result<(f64, f64)> {
    let v = ts.channel(name)?;
    let k = (0..v.len())
        .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))
        .ok_or_else(|| Error::invalid(name, "empty channel"))?;
    Ok((ts.t()[k], v[k]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(cw: f64, pulse: f64) -> SwitchSetup {
        SwitchSetup {
            cw_power_nw: cw,
            pulse_power_nw: pulse,
            pulse_center_ns: 0.1,
            pulse_fwhm_ns: 0.04,
            control_detuning_ghz: 0.0,
            k_phases: 4,
        }
    }

    #[test]
    fn zero_powers_give_zero_channels() {
        let p = SystemParams::paper_device().with_n_max(2);
        let grid = TimeGrid::new(0.0, 0.2, 20).unwrap();
        let ts = cw_pulse_switch(
            &p,
            &setup(0.0, 0.0),
            &OpticalCalibration::default(),
            &grid,
            Solver::Master,
        )
        .unwrap();
        for c in ts.channels() {
            assert!(c.values.iter().all(|&v| v == 0.0), "{}", c.name);
        }
    }

    #[test]
    fn empty_cavity_has_no_nonlinearity() {
        let p = SystemParams {
            g: 0.0,
            ..SystemParams::paper_device().with_n_max(8)
        };
        let grid = TimeGrid::new(0.0, 0.2, 40).unwrap();
        let ts = cw_pulse_switch(
            &p,
            &setup(12.0, 0.2),
            &OpticalCalibration::default(),
            &grid,
            Solver::Master,
        )
        .unwrap();
        for v in ts.channel("dT").unwrap() {
            assert!(v.abs() < 1e-8, "{v}");
        }
    }

    #[test]
    fn map_vanishes_without_coupling() {
        let p = SystemParams {
            g: 0.0,
            ..SystemParams::paper_device().with_n_max(8)
        };
        let map = nonlinear_map(
            &p,
            &[1.0, 12.0],
            &[1.0, 3.0],
            &OpticalCalibration::default(),
            8,
        )
        .unwrap();
        for row in &map.values {
            for v in row {
                assert!(v.abs() < 1e-8, "{v}");
            }
        }
        assert_eq!(map.to_csv().lines().count(), 5);
    }

    #[test]
    fn map_vanishes_in_weak_limit() {
        let p = SystemParams::paper_device().with_n_max(3);
        let cal = OpticalCalibration::default();
        // The dot saturates at ~1e-5 photons, so the linear onset lies far below 1 nW.
        let map = nonlinear_map(&p, &[1e-7, 1e-6, 1e-5], &[1.0], &cal, 8).unwrap();
        let row = &map.values[0];
        assert!(row[0].abs() < 1e-4, "{row:?}");
        for w in row.windows(2) {
            assert!((w[1] / w[0] / 10.0 - 1.0).abs() < 0.1, "{row:?}");
        }
    }

    #[test]
    fn solver_spec_parses() {
        let s: Solver = toml::from_str("kind = \"trajectories\"\nn_traj = 10\nseed = 3").unwrap();
        assert_eq!(
            s,
            Solver::Trajectories {
                n_traj: 10,
                seed: 3
            }
        );
        let m: Solver = toml::from_str("kind = \"master\"").unwrap();
        assert_eq!(m, Solver::Master);
    }
}
