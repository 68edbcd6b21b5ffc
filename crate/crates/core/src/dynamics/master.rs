//! Fixed-step classical RK4 propagation of the master equation.

use num_complex::Complex64;

use super::{Generator, SystemParams, TimeGrid};
use crate::drive::DriveSpec;
use crate::error::{Error, Result};
use crate::hilbert::{ComplexMatrix, DensityMatrix, QuantumState};
use crate::integrate::Rk4;

/// Radius of the left half-disk inside the RK4 stability region, with margin (the exact radius is ≈ 2.6).
pub const STABILITY_RADIUS: f64 = 2.5;

/// Resolution: dt ≤ 0.01 / (largest rate in GHz). Half the customary 0.02 so that
/// halving the step moves photon numbers by well under 1e-6 relative.
const RESOLUTION_FACTOR: f64 = 0.01;

/// Largest internal step for a system and drive.
///
/// The smaller of the resolution rule 0.01/max(g, κ, |Δ_c|, |Δ_d|, |carrier|)
/// and the stability limit 2.5/‖L‖∞, which grows with the Fock truncation and
/// the peak drive amplitude.
pub fn max_stable_step(params: &SystemParams, drive: &DriveSpec) -> f64 {
    let generator = Generator::new(params);
    max_step_for(&generator, params, drive)
}

/// Resolution part of the step rule alone.
pub(crate) fn resolution_step(params: &SystemParams, drive: &DriveSpec) -> f64 {
    let scale = params.frequency_scale().max(drive.max_carrier_detuning());
    if scale > 0.0 {
        RESOLUTION_FACTOR / scale
    } else {
        f64::INFINITY
    }
}

/// Largest step keeping RK4 stable for an operator with the given ‖·‖∞ bound.
pub(crate) fn stability_step(norm_bound: f64) -> f64 {
    if norm_bound > 0.0 {
        STABILITY_RADIUS / norm_bound
    } else {
        f64::INFINITY
    }
}

fn max_step_for(generator: &Generator, params: &SystemParams, drive: &DriveSpec) -> f64 {
    resolution_step(params, drive).min(stability_step(generator.norm_bound(drive.max_amplitude())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MasterOptions {
    /// Extra subdivision of every internal step; 2 halves dt. Used by convergence checks.
    pub refine: usize,
}

impl Default for MasterOptions {
    fn default() -> Self {
        Self { refine: 1 }
    }
}

fn to_vec(m: &ComplexMatrix) -> Vec<Complex64> {
    let d = m.nrows();
    (0..d * d).map(|k| m[(k / d, k % d)]).collect()
}

fn to_matrix(x: &[Complex64], dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, dim, |i, j| x[i * dim + j])
}

/// Propagate ρ over the output grid, handing every output state to `visit`.
///
/// Each output interval is split into equal internal RK4 steps no larger than
/// [`max_stable_step`]. Every output state is checked against the
/// density-matrix invariants; the first violation aborts with the step index.
pub fn evolve_master_with<F>(
    rho0: &DensityMatrix,
    params: &SystemParams,
    drive: &DriveSpec,
    grid: &TimeGrid,
    options: MasterOptions,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(usize, f64, &DensityMatrix) -> Result<()>,
{
    params.validate()?;
    drive.validate()?;
    grid.validate()?;
    let layout = params.layout();
    if rho0.layout() != layout {
        return Err(Error::DimensionMismatch {
            context: "evolve_master (initial state)",
            expected: layout.dim(),
            found: rho0.layout().dim(),
        });
    }
    if let Some((invariant, detail)) = rho0.violation() {
        return Err(Error::InvariantViolation {
            invariant,
            step: 0,
            time: grid.t_start,
            detail,
        });
    }

    let generator = Generator::new(params);
    let dt_max = max_step_for(&generator, params, drive);
    let substeps = ((grid.dt() / dt_max).ceil() as usize).max(1) * options.refine.max(1);
    let h = grid.dt() / substeps as f64;

    let dim = layout.dim();
    let mut x = to_vec(rho0.matrix());
    let mut rk = Rk4::new(x.len());
    visit(0, grid.t_start, rho0)?;
    for k in 1..grid.len() {
        let t0 = grid.time(k - 1);
        for s in 0..substeps {
            rk.step(
                |w, y, out| generator.apply(w, y, out),
                drive,
                t0 + s as f64 * h,
                h,
                &mut x,
            );
        }
        let t = grid.time(k);
        let rho = DensityMatrix::new_unchecked(layout, to_matrix(&x, dim))?;
        if let Some((invariant, detail)) = rho.violation() {
            return Err(Error::InvariantViolation {
                invariant,
                step: k,
                time: t,
                detail,
            });
        }
        visit(k, t, &rho)?;
    }
    Ok(())
}

/// Density matrices at every grid point, starting with `rho0`.
pub fn evolve_master(
    rho0: &DensityMatrix,
    params: &SystemParams,
    drive: &DriveSpec,
    grid: &TimeGrid,
) -> Result<Vec<DensityMatrix>> {
    let mut states = Vec::with_capacity(grid.len());
    evolve_master_with(
        rho0,
        params,
        drive,
        grid,
        MasterOptions::default(),
        |_, _, rho| {
            states.push(rho.clone());
            Ok(())
        },
    )?;
    Ok(states)
}

/// Real expectation values of `observables` along a master-equation run.
#[derive(Debug, Clone)]
pub struct MasterTrace {
    pub times: Vec<f64>,
    /// values[obs][k]
    pub values: Vec<Vec<f64>>,
    pub final_state: DensityMatrix,
}

pub fn evolve_master_observed(
    rho0: &DensityMatrix,
    params: &SystemParams,
    drive: &DriveSpec,
    grid: &TimeGrid,
    observables: &[ComplexMatrix],
    options: MasterOptions,
) -> Result<MasterTrace> {
    let mut times = Vec::with_capacity(grid.len());
    let mut values = vec![Vec::with_capacity(grid.len()); observables.len()];
    let mut last = rho0.clone();
    evolve_master_with(rho0, params, drive, grid, options, |k, t, rho| {
        times.push(t);
        for (o, series) in observables.iter().zip(values.iter_mut()) {
            series.push(rho.expectation(o)?.re);
        }
        if k + 1 == grid.len() {
            last = rho.clone();
        }
        Ok(())
    })?;
    Ok(MasterTrace {
        times,
        values,
        final_state: last,
    })
}
