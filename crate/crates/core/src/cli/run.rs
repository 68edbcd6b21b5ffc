use std::fmt::Write as _;

use serde_json::{json, Map, Value};

use super::config::{RunConfig, Scenario, SolverBlock};
use super::CliError;
use crate::drive::{
    cw_power_to_amplitude, pulsed_power_to_peak_amplitude, wavelength_detuning_to_ghz,
    DriveComponent, DriveSpec,
};
use crate::dynamics::polariton_eigenfrequencies;
use crate::scenarios::{
    channel_extremum, cw_pulse_switch, dip_depth, excess_peak_width, fit_tail_decay, nonlinear_map,
    peak_time, pl_decay, saturation_scan, spectrum_scan, two_pulse_sweep, weak_drive_deviation,
    Solver, SwitchSetup, TwoPulseSetup,
};
use crate::series::{fmt_value, SweepCurve, TimeSeries};

/// Named CSV bodies plus scalar results for the JSON sidecar.
#[derive(Debug, Default)]
pub struct Output {
    pub files: Vec<(String, String)>,
    pub summary: Map<String, Value>,
}

impl Output {
    fn file(&mut self, name: impl Into<String>, csv: String) {
        self.files.push((name.into(), csv));
    }

    fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }
}

fn switch_setup(cfg: &RunConfig) -> Result<SwitchSetup, CliError> {
    let b = cfg
        .switch
        .as_ref()
        .ok_or(CliError::MissingBlock("switch"))?;
    Ok(SwitchSetup {
        cw_power_nw: b.cw_power_nw,
        pulse_power_nw: b.pulse_power_nw,
        pulse_center_ns: b.pulse_center_ns,
        pulse_fwhm_ns: b.pulse_fwhm_ns,
        control_detuning_ghz: wavelength_detuning_to_ghz(
            b.control_delta_lambda_nm,
            cfg.calibration.wavelength,
        )?,
        k_phases: b.k_phases,
    })
}

fn two_pulse_setups(cfg: &RunConfig) -> Result<Vec<TwoPulseSetup>, CliError> {
    let b = cfg
        .two_pulse
        .as_ref()
        .ok_or(CliError::MissingBlock("two_pulse"))?;
    if b.gamma_d.is_empty() {
        return Err(CliError::Invalid(
            "two_pulse.gamma_d lists no dephasing rate".into(),
        ));
    }
    let setups: Vec<TwoPulseSetup> = b
        .gamma_d
        .iter()
        .map(|&gd| TwoPulseSetup {
            per_pulse_power_nw: b.per_pulse_power_nw,
            fwhm_ns: b.fwhm_ns,
            delays_ns: b.delays_ns.values(),
            gamma_d: gd,
            k_phases: b.k_phases,
            padding_ns: b.padding_ns,
            output_dt_ns: b.output_dt_ns,
        })
        .collect();
    for s in &setups {
        s.validate()?;
    }
    Ok(setups)
}

/// Strongest time-dependent drives of a grid-based scenario, for the step gate.
/// Also checks that the scenario's blocks convert to solver inputs.
pub fn scenario_setups(cfg: &RunConfig) -> Result<Vec<DriveSpec>, CliError> {
    let cal = &cfg.calibration;
    match cfg.scenario {
        Scenario::PlDecay => Ok(vec![DriveSpec::none()]),
        Scenario::CwPulse | Scenario::DetunedControl => {
            let s = switch_setup(cfg)?;
            s.validate()?;
            let cw = cw_power_to_amplitude(s.cw_power_nw, cal)?;
            let pulse = pulsed_power_to_peak_amplitude(s.pulse_power_nw, cal, s.pulse_fwhm_ns)?;
            Ok(vec![DriveSpec::cw(cw).with(
                DriveComponent::gaussian(pulse, s.pulse_center_ns, s.pulse_fwhm_ns)
                    .with_detuning(s.control_detuning_ghz),
            )])
        }
        Scenario::TwoPulse => {
            two_pulse_setups(cfg)?;
            Ok(Vec::new())
        }
        _ => Ok(Vec::new()),
    }
}

fn solver(cfg: &RunConfig) -> Result<Solver, CliError> {
    Ok(match cfg.solver {
        SolverBlock::Master => Solver::Master,
        SolverBlock::Trajectories { n_traj } => Solver::Trajectories {
            n_traj,
            seed: cfg.seed()?,
        },
    })
}

fn subset(ts: &TimeSeries, columns: &[(&str, &str)]) -> Result<String, CliError> {
    let mut out = TimeSeries::new(ts.t().to_vec())?;
    for (name, source) in columns {
        if let Ok(v) = ts.channel(source) {
            out.insert(*name, v.to_vec())?;
        }
    }
    Ok(out.to_csv())
}

fn run_switch(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let setup = switch_setup(cfg)?;
    let ts = cw_pulse_switch(
        &cfg.system,
        &setup,
        &cfg.calibration,
        &cfg.grid()?,
        solver(cfg)?,
    )?;
    out.file(
        "signal",
        subset(&ts, &[("n", "n_s"), ("T", "T_s"), ("n_err", "n_s_err")])?,
    );
    out.file(
        "control",
        subset(&ts, &[("n", "n_c"), ("T", "T_c"), ("n_err", "n_c_err")])?,
    );
    out.file(
        "combined",
        subset(&ts, &[("n", "n_sc"), ("T", "T_sc"), ("n_err", "n_sc_err")])?,
    );
    out.file("differential", subset(&ts, &[("dn", "dn"), ("dT", "dT")])?);
    let (t_dn, dn) = channel_extremum(&ts, "dn")?;
    let (t_dt, dt) = channel_extremum(&ts, "dT")?;
    out.note("control_detuning_ghz", setup.control_detuning_ghz);
    out.note("peak_dn", dn);
    out.note("peak_dn_time_ns", t_dn);
    out.note("peak_dT", dt);
    out.note("peak_dT_time_ns", t_dt);
    for (k, v) in ts.metadata() {
        out.note(k, v.clone());
    }
    Ok(())
}

fn run_spectrum(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let b = cfg
        .spectrum
        .as_ref()
        .ok_or(CliError::MissingBlock("spectrum"))?;
    let detunings = b.detunings.values();
    out.file(
        "with-qd",
        spectrum_scan(&cfg.system, b.omega0, &detunings)?.to_csv(),
    );
    if b.empty_cavity {
        let empty = crate::dynamics::SystemParams {
            g: 0.0,
            ..cfg.system
        };
        out.file(
            "empty-cavity",
            spectrum_scan(&empty, b.omega0, &detunings)?.to_csv(),
        );
    }
    if b.omega0 > 0.0 {
        out.note(
            "weak_drive_deviation",
            weak_drive_deviation(&cfg.system, b.omega0, &detunings)?,
        );
    }
    Ok(())
}

fn run_pl(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let b = cfg.pl.as_ref().ok_or(CliError::MissingBlock("pl"))?;
    let ts = pl_decay(&cfg.system, b.tau_rise_ns, b.irf_fwhm_ns, &cfg.grid()?)?;
    out.file("traces", ts.to_csv());
    out.note("fitted_decay_ns", fit_tail_decay(ts.t(), ts.channel("I")?)?);
    out.note("intensity_peak_ns", peak_time(ts.t(), ts.channel("I")?)?.1);
    out.note(
        "population_peak_ns",
        peak_time(ts.t(), ts.channel("pe")?)?.1,
    );
    Ok(())
}

fn run_two_pulse(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let mut per_rate = Vec::new();
    for setup in two_pulse_setups(cfg)? {
        let res = two_pulse_sweep(&cfg.system, &setup, &cfg.calibration)?;
        let y0 = res
            .curve
            .x
            .iter()
            .position(|x| *x == 0.0)
            .map(|k| res.curve.y[k]);
        per_rate.push(json!({
            "gamma_d": setup.gamma_d,
            "baseline": res.baseline,
            "y_at_zero_delay": y0,
            "excess_width_ns": excess_peak_width(&res.curve).ok(),
            "dip_depth": dip_depth(&res.curve, setup.fwhm_ns),
        }));
        out.file(format!("gd-{}", setup.gamma_d), res.curve.to_csv());
    }
    out.note("sweeps", per_rate);
    Ok(())
}

fn run_saturation(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let b = cfg
        .saturation
        .as_ref()
        .ok_or(CliError::MissingBlock("saturation"))?;
    let res = saturation_scan(
        &cfg.system,
        &b.powers_nw,
        &cfg.calibration,
        b.fwhm_ns,
        &b.detunings.values(),
    )?;
    for (k, curve) in res.curves.iter().enumerate() {
        out.file(format!("spectrum-{k:02}"), curve.to_csv());
    }
    let contrast = SweepCurve::new(
        "power_nw",
        res.powers_nw.clone(),
        res.contrast.clone(),
        None,
    )?;
    out.file("contrast", contrast.to_csv());
    out.note("weak_contrast", res.weak_contrast);
    out.note("powers_nw", res.powers_nw);
    out.note("contrast", res.contrast);
    Ok(())
}

fn run_map(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let b = cfg
        .nonlinear_map
        .as_ref()
        .ok_or(CliError::MissingBlock("nonlinear_map"))?;
    let map = nonlinear_map(
        &cfg.system,
        &b.signal_powers_nw.values(),
        &b.multipliers,
        &cfg.calibration,
        b.k_phases,
    )?;
    out.file("map", map.to_csv());
    out.note("n_signal", map.n_signal);
    Ok(())
}

fn run_eigen(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let b = cfg
        .eigenfrequencies
        .as_ref()
        .ok_or(CliError::MissingBlock("eigenfrequencies"))?;
    let mut csv = String::from("delta_ghz,re_plus,im_plus,re_minus,im_minus\n");
    for d in b.delta.values() {
        let p = polariton_eigenfrequencies(&cfg.system, 0.0, d);
        writeln!(
            csv,
            "{},{},{},{},{}",
            fmt_value(d),
            fmt_value(p.omega_plus.re),
            fmt_value(p.omega_plus.im),
            fmt_value(p.omega_minus.re),
            fmt_value(p.omega_minus.im)
        )
        .unwrap();
    }
    out.file("frequencies", csv);
    out.note(
        "splitting_at_resonance_ghz",
        polariton_eigenfrequencies(&cfg.system, 0.0, 0.0).splitting(),
    );
    out.note("strong_coupling", cfg.system.is_strongly_coupled());
    Ok(())
}

/// Run the configured scenario. Output order is fixed by the configuration.
pub fn execute(cfg: &RunConfig) -> Result<Output, CliError> {
    let mut out = Output::default();
    match cfg.scenario {
        Scenario::Spectrum => run_spectrum(cfg, &mut out)?,
        Scenario::PlDecay => run_pl(cfg, &mut out)?,
        Scenario::CwPulse | Scenario::DetunedControl => run_switch(cfg, &mut out)?,
        Scenario::TwoPulse => run_two_pulse(cfg, &mut out)?,
        Scenario::Saturation => run_saturation(cfg, &mut out)?,
        Scenario::NonlinearMap => run_map(cfg, &mut out)?,
        Scenario::Eigenfrequencies => run_eigen(cfg, &mut out)?,
    }
    Ok(out)
}
