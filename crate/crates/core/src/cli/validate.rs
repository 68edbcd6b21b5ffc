//! Static configuration checks. Never runs a simulation.

use std::fmt;

use super::config::{RunConfig, Scenario, SolverBlock, SCHEMA_VERSION};
use super::run::scenario_setups;
use crate::drive::{cw_power_to_amplitude, pulsed_power_to_peak_amplitude, DriveSpec};
use crate::dynamics::{angular, max_stable_step, SystemParams};
use crate::scenarios::cw_equivalent_flux;

/// Coherent-state tail probability above n_max that triggers a truncation warning.
const TRUNCATION_TAIL: f64 = 1e-6;

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Report {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", if self.is_valid() { "valid" } else { "invalid" })?;
        for e in &self.errors {
            writeln!(f, "error: {e}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        Ok(())
    }
}

/// P(N > n_max) for a Poisson distribution of mean `mean`.
fn poisson_tail(mean: f64, n_max: usize) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    let mut term = (-mean).exp();
    for k in 1..=n_max + 1 {
        term *= mean / k as f64;
    }
    let mut tail = 0.0;
    let mut k = n_max + 1;
    while term > 1e-300 && k < n_max + 400 {
        tail += term;
        k += 1;
        term *= mean / k as f64;
    }
    tail
}

/// Upper estimate of the drive's photon flux (per ns) for truncation checks.
fn peak_flux(cfg: &RunConfig) -> Option<f64> {
    let cal = &cfg.calibration;
    let flux = |p: f64| cal.coupled_flux(p);
    match cfg.scenario {
        Scenario::Spectrum => cfg.spectrum.as_ref().map(|s| s.omega0 * s.omega0),
        Scenario::PlDecay | Scenario::Eigenfrequencies => Some(0.0),
        Scenario::CwPulse | Scenario::DetunedControl => cfg.switch.as_ref().and_then(|s| {
            let cw = cw_power_to_amplitude(s.cw_power_nw, cal).ok()?;
            let pulse =
                pulsed_power_to_peak_amplitude(s.pulse_power_nw, cal, s.pulse_fwhm_ns).ok()?;
            Some((cw + pulse).powi(2))
        }),
        Scenario::TwoPulse => cfg.two_pulse.as_ref().and_then(|s| {
            let a = pulsed_power_to_peak_amplitude(s.per_pulse_power_nw, cal, s.fwhm_ns).ok()?;
            Some(4.0 * a * a)
        }),
        Scenario::Saturation => cfg.saturation.as_ref().and_then(|s| {
            let top = s.powers_nw.iter().cloned().fold(0.0, f64::max);
            cw_equivalent_flux(top, cal, s.fwhm_ns).ok()
        }),
        Scenario::NonlinearMap => cfg.nonlinear_map.as_ref().map(|m| {
            let p = m.signal_powers_nw.values().into_iter().fold(0.0, f64::max);
            let k = m.multipliers.iter().cloned().fold(0.0, f64::max);
            flux(p) * (1.0 + k.sqrt()).powi(2)
        }),
    }
}

fn block_present(cfg: &RunConfig, block: &str) -> bool {
    match block {
        "spectrum" => cfg.spectrum.is_some(),
        "pl" => cfg.pl.is_some(),
        "switch" => cfg.switch.is_some(),
        "grid" => cfg.grid.is_some(),
        "two_pulse" => cfg.two_pulse.is_some(),
        "saturation" => cfg.saturation.is_some(),
        "nonlinear_map" => cfg.nonlinear_map.is_some(),
        "eigenfrequencies" => cfg.eigenfrequencies.is_some(),
        _ => false,
    }
}

fn check_step_gate(report: &mut Report, cfg: &RunConfig, params: &SystemParams, drive: &DriveSpec) {
    let Some(grid) = cfg.grid else { return };
    let step = max_stable_step(params, drive);
    let dt = grid.dt();
    if dt > step {
        report.notes.push(format!(
            "grid step {dt:.3e} ns exceeds the step gate {step:.3e} ns; each output interval is split into {} substeps",
            (dt / step).ceil()
        ));
    } else {
        report.notes.push(format!(
            "grid step {dt:.3e} ns within the step gate {step:.3e} ns"
        ));
    }
}

pub fn validate_config(cfg: &RunConfig) -> Report {
    let mut report = Report::default();
    if cfg.schema_version != SCHEMA_VERSION {
        report.errors.push(format!(
            "schema_version {} is not supported (expected {SCHEMA_VERSION})",
            cfg.schema_version
        ));
    }
    if let Err(e) = cfg.system.validate() {
        report.errors.push(e.to_string());
    }
    if let Err(e) = cfg.calibration.validate() {
        report.errors.push(e.to_string());
    }
    for block in cfg.scenario.required_blocks() {
        if !block_present(cfg, block) {
            report.errors.push(format!(
                "scenario {} requires a [{block}] block",
                cfg.scenario.name()
            ));
        }
    }
    if let Some(grid) = cfg.grid {
        if let Err(e) = grid.validate() {
            report.errors.push(e.to_string());
        }
    }
    if let SolverBlock::Trajectories { n_traj } = cfg.solver {
        if !cfg.scenario.supports_trajectories() {
            report.errors.push(format!(
                "solver.kind = trajectories is not available for {}",
                cfg.scenario.name()
            ));
        }
        if cfg.master_seed.is_none() {
            report
                .errors
                .push("master_seed is required when solver.kind = trajectories".into());
        }
        if n_traj == 0 {
            report.errors.push("solver.n_traj must be positive".into());
        } else if n_traj < 2000 {
            report.warnings.push(format!(
                "solver.n_traj = {n_traj} is below the 2000 used for master/trajectory checks"
            ));
        }
    }

    let params = &cfg.system;
    report.notes.push(format!(
        "strong coupling (g² > ((κ−γ)/2)²): {}",
        params.is_strongly_coupled()
    ));

    if report.is_valid() {
        match scenario_setups(cfg) {
            Ok(drives) => {
                for d in &drives {
                    check_step_gate(&mut report, cfg, params, d);
                }
            }
            Err(e) => report.errors.push(e.to_string()),
        }
    }

    if let Some(flux) = peak_flux(cfg) {
        if params.kappa > 0.0 && flux > 0.0 {
            let mean = flux / angular(params.kappa);
            let tail = poisson_tail(mean, params.n_max);
            report.notes.push(format!(
                "empty-cavity photon number bound {mean:.3e}, coherent tail above n_max = {}: {tail:.1e}",
                params.n_max
            ));
            if tail > TRUNCATION_TAIL {
                report.warnings.push(format!(
                    "truncation n_max = {} is low for ⟨a†a⟩ up to {mean:.3e}; raise system.n_max",
                    params.n_max
                ));
            }
        }
    }
    report
}
