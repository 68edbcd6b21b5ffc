//! Jaynes–Cummings dynamics: Hamiltonian and collapse-operator assembly,
//! master-equation propagation, steady states and polariton frequencies.
//!
//! Configuration rates are ordinary frequencies in GHz; [`angular`] is the
//! single place where they become rad/ns. Time is in ns throughout.

mod master;
mod polariton;
mod steady;
mod superop;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{ComplexMatrix, DensityMatrix, HilbertLayout};

pub use master::{
    evolve_master, evolve_master_observed, evolve_master_with, max_stable_step, MasterOptions,
    MasterTrace, STABILITY_RADIUS,
};
pub(crate) use master::{resolution_step, stability_step};
pub use polariton::{polariton_eigenfrequencies, single_excitation_matrix, PolaritonPair};
pub use steady::{steady_state, steady_state_residual};
pub use superop::Generator;

/// GHz (ordinary frequency) → rad/ns.
pub fn angular(ghz: f64) -> f64 {
    2.0 * PI * ghz
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// QD–cavity coupling g/2π (GHz).
    pub g: f64,
    /// Cavity field decay rate κ/2π (GHz).
    pub kappa: f64,
    /// QD dipole decay rate γ/2π (GHz).
    pub gamma: f64,
    /// QD pure dephasing rate γ_d/2π (GHz).
    #[serde(default)]
    pub gamma_d: f64,
    /// Cavity detuning from the rotating-frame laser (GHz).
    #[serde(default)]
    pub delta_c: f64,
    /// QD detuning from the rotating-frame laser (GHz).
    #[serde(default)]
    pub delta_d: f64,
    /// Fock truncation: photon numbers 0..=n_max.
    #[serde(default = "default_n_max")]
    pub n_max: usize,
}

fn default_n_max() -> usize {
    7
}

impl SystemParams {
    /// g/2π = 25, κ/2π = 27, γ/2π = 0.1 GHz, resonant.
    pub fn paper_device() -> Self {
        Self {
            g: 25.0,
            kappa: 27.0,
            gamma: 0.1,
            gamma_d: 0.0,
            delta_c: 0.0,
            delta_d: 0.0,
            n_max: default_n_max(),
        }
    }

    /// Second device used for the pulse-pair experiment: {κ, g, γ}/2π = {27.2, 21.2, 0.1} GHz.
    pub fn pulse_pair_device() -> Self {
        Self {
            g: 21.2,
            kappa: 27.2,
            ..Self::paper_device()
        }
    }

    pub fn layout(&self) -> HilbertLayout {
        HilbertLayout::new(self.n_max)
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn with_gamma_d(mut self, gamma_d: f64) -> Self {
        self.gamma_d = gamma_d;
        self
    }

    /// Shift both cavity and QD detunings by −Δ (laser moved by +Δ).
    pub fn laser_shifted(mut self, laser_detuning: f64) -> Self {
        self.delta_c -= laser_detuning;
        self.delta_d -= laser_detuning;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("system.g", self.g),
            ("system.kappa", self.kappa),
            ("system.gamma", self.gamma),
            ("system.gamma_d", self.gamma_d),
            ("system.delta_c", self.delta_c),
            ("system.delta_d", self.delta_d),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        for (name, v) in &fields[..4] {
            if *v < 0.0 {
                return Err(Error::invalid(*name, format!("{v} must be non-negative")));
            }
        }
        Ok(())
    }

    /// g² > ((κ−γ)/2)²: the square-root argument of the polariton frequencies is positive at δ = 0.
    pub fn is_strongly_coupled(&self) -> bool {
        self.g * self.g > ((self.kappa - self.gamma) / 2.0).powi(2)
    }

    /// Largest frequency scale entering the step rule (GHz).
    pub fn frequency_scale(&self) -> f64 {
        [
            self.g,
            self.kappa,
            self.gamma,
            self.gamma_d,
            self.delta_c.abs(),
            self.delta_d.abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Uniform output grid on [t_start, t_end] with `n_steps` intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        let grid = Self {
            t_start,
            t_end,
            n_steps,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_start.is_finite() && self.t_end.is_finite() && self.t_end > self.t_start) {
            return Err(Error::invalid("grid", "t_end must exceed t_start"));
        }
        if self.n_steps == 0 {
            return Err(Error::invalid("grid.n_steps", "must be positive"));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.n_steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt()
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }
}

/// Drive-independent part H₀ plus the two drive couplings, H = H₀ + Ω*·H_conj + Ω·H_drive.
#[derive(Debug, Clone)]
pub(crate) struct HamiltonianParts {
    pub static_part: ComplexMatrix,
    pub conj_coupling: ComplexMatrix,
    pub drive_coupling: ComplexMatrix,
}

pub(crate) fn hamiltonian_parts(params: &SystemParams) -> HamiltonianParts {
    let layout = params.layout();
    let a = layout.cavity_lowering();
    let s = layout.qd_lowering();
    let ad = a.adjoint();
    let sd = s.adjoint();
    let i = Complex64::i();

    let static_part = (&ad * &a).scale(angular(params.delta_c))
        + (&sd * &s).scale(angular(params.delta_d))
        + (&ad * &s - &a * &sd) * (i * angular(params.g));
    let root_kappa = angular(params.kappa).sqrt();
    HamiltonianParts {
        static_part,
        conj_coupling: &a * (i * root_kappa),
        drive_coupling: &ad * (-i * root_kappa),
    }
}

fn check_finite(name: &str, z: Complex64) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, "must be finite"))
    }
}

/// Rotating-frame Jaynes–Cummings Hamiltonian (rad/ns):
///
/// H = 2πΔ_c a†a + 2πΔ_d σ†σ + i2πg(a†σ − aσ†) + i√(2πκ)(Ω* a − Ω a†)
pub fn build_hamiltonian(params: &SystemParams, omega: Complex64) -> Result<ComplexMatrix> {
    params.validate()?;
    check_finite("omega", omega)?;
    let parts = hamiltonian_parts(params);
    Ok(parts.static_part + parts.conj_coupling * omega.conj() + parts.drive_coupling * omega)
}

/// Jump operators √(2·2πκ)·a, √(2·2πγ)·σ and √(2·2πγ_d)·σ†σ, always in that order.
///
/// A zero rate yields a zero matrix rather than dropping the channel, so
/// channel indices are stable.
pub fn collapse_operators(params: &SystemParams) -> Vec<ComplexMatrix> {
    let layout = params.layout();
    let a = layout.cavity_lowering();
    let s = layout.qd_lowering();
    let ss = s.adjoint() * &s;
    let rate = |ghz: f64| (2.0 * angular(ghz)).sqrt();
    vec![
        a.scale(rate(params.kappa)),
        s.scale(rate(params.gamma)),
        ss.scale(rate(params.gamma_d)),
    ]
}

pub const CHANNEL_NAMES: [&str; 3] = ["cavity", "qd_decay", "qd_dephasing"];

/// dρ/dt = −i[H, ρ] + Σ_D (DρD† − ½D†Dρ − ½ρD†D), evaluated densely.
pub fn lindblad_rhs(
    h: &ComplexMatrix,
    collapse: &[ComplexMatrix],
    rho: &DensityMatrix,
) -> Result<ComplexMatrix> {
    let r = rho.matrix();
    let dim = r.nrows();
    let check = |m: &ComplexMatrix, context: &'static str| {
        if m.nrows() != dim || m.ncols() != dim {
            Err(Error::DimensionMismatch {
                context,
                expected: dim,
                found: m.nrows(),
            })
        } else {
            Ok(())
        }
    };
    check(h, "lindblad_rhs (hamiltonian)")?;
    for d in collapse {
        check(d, "lindblad_rhs (collapse operator)")?;
    }

    let mut out = (h * r - r * h) * (-Complex64::i());
    for d in collapse {
        let dd = d.adjoint() * d;
        out += d * r * d.adjoint() - (&dd * r + r * &dd).scale(0.5);
    }
    Ok(out)
}
