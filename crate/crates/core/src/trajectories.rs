//! Monte-Carlo wavefunction (quantum-jump) unraveling of the master equation.
//!
//! Between jumps |ψ⟩ follows H_eff = H − (i/2)Σ D†D without renormalization.
//! A jump fires at the first internal step where ‖ψ‖² falls to a pre-drawn
//! uniform threshold; the channel is chosen with weight ‖Dψ‖².
//!
//! Trajectory `i` of an ensemble draws from its own ChaCha8 stream seeded by
//! [`trajectory_seed`]. Trajectories are reduced in fixed-size chunks of
//! consecutive indices and the chunks are merged in index order, so the
//! estimate is bit-identical for any thread count.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::drive::DriveSpec;
use crate::dynamics::{
    collapse_operators, hamiltonian_parts, resolution_step, stability_step, SystemParams, TimeGrid,
};
use crate::error::{Error, Invariant, Result};
use crate::hilbert::{
    ComplexMatrix, ComplexVector, DensityMatrix, HilbertLayout, PureState, NORM_TOL,
};
use crate::integrate::Rk4;
use crate::series::TimeSeries;
use crate::sparse::CsrMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Trajectories per reduction chunk.
const CHUNK: usize = 16;

/// Eigen-ensemble weights below this are dropped when unravelling a mixed state.
const WEIGHT_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub time: f64,
    /// Index into [`crate::dynamics::CHANNEL_NAMES`].
    pub channel: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<PureState>,
    pub jumps: Vec<Jump>,
    pub seed: u64,
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trajectory `index` in an ensemble; depends only on the pair.
pub fn trajectory_seed(master_seed: u64, index: u64) -> u64 {
    mix(mix(master_seed) ^ index.wrapping_mul(0xd134_2543_de82_ef95))
}

/// Pure initial state or a weighted ensemble of pure states.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Pure(PureState),
    Mixture(Vec<(f64, PureState)>),
}

impl InitialState {
    /// Unravel ρ into its eigen-ensemble; tiny or negative weights are dropped.
    pub fn from_density(rho: &DensityMatrix) -> Result<Self> {
        let layout = rho.layout();
        let mut members = Vec::new();
        for (p, v) in rho.eigen_ensemble() {
            if p > WEIGHT_FLOOR {
                members.push((p, PureState::normalized(layout, v)?));
            }
        }
        let total: f64 = members.iter().map(|(p, _)| p).sum();
        if !(total > 0.0) {
            return Err(Error::invalid(
                "initial state",
                "density matrix has no positive weight",
            ));
        }
        for (p, _) in &mut members {
            *p /= total;
        }
        if members.len() == 1 {
            return Ok(Self::Pure(members.pop().unwrap().1));
        }
        Ok(Self::Mixture(members))
    }

    pub fn layout(&self) -> HilbertLayout {
        match self {
            Self::Pure(psi) => psi.layout(),
            Self::Mixture(m) => m[0].1.layout(),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> &PureState {
        match self {
            Self::Pure(psi) => psi,
            Self::Mixture(members) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (p, psi) in members {
                    acc += p;
                    if u < acc {
                        return psi;
                    }
                }
                &members[members.len() - 1].1
            }
        }
    }
}

impl From<PureState> for InitialState {
    fn from(psi: PureState) -> Self {
        Self::Pure(psi)
    }
}

/// −i·H_eff split by drive dependence, plus the jump operators.
struct JumpSolver {
    layout: HilbertLayout,
    base: CsrMatrix,
    conj_drive: CsrMatrix,
    drive: CsrMatrix,
    /// (channel index, operator) for every channel with a nonzero rate.
    jumps: Vec<(usize, CsrMatrix)>,
    substeps: usize,
    h: f64,
}

impl JumpSolver {
    fn new(params: &SystemParams, drives: &[DriveSpec], grid: &TimeGrid) -> Result<Self> {
        params.validate()?;
        grid.validate()?;
        for d in drives {
            d.validate()?;
        }
        let layout = params.layout();
        let parts = hamiltonian_parts(params);
        let minus_i = -Complex64::i();
        let mut heff = parts.static_part.clone();
        let mut jumps = Vec::new();
        for (k, d) in collapse_operators(params).into_iter().enumerate() {
            if d.iter().all(|z| z.norm_sqr() == 0.0) {
                continue;
            }
            heff -= (d.adjoint() * &d) * Complex64::new(0.0, 0.5);
            jumps.push((k, CsrMatrix::from_dense(&d)));
        }
        let solver_parts = [
            heff * minus_i,
            parts.conj_coupling * minus_i,
            parts.drive_coupling * minus_i,
        ];
        let [base, conj_drive, drive] = solver_parts.map(|m| CsrMatrix::from_dense(&m));

        let (b, c, w) = (
            base.row_abs_sums(),
            conj_drive.row_abs_sums(),
            drive.row_abs_sums(),
        );
        let mut dt_max = f64::INFINITY;
        for spec in drives {
            let amp = spec.max_amplitude();
            let bound = (0..layout.dim())
                .map(|r| b[r] + amp * (c[r] + w[r]))
                .fold(0.0, f64::max);
            dt_max = dt_max
                .min(resolution_step(params, spec))
                .min(stability_step(bound));
        }
        let substeps = ((grid.dt() / dt_max).ceil() as usize).max(1);
        Ok(Self {
            layout,
            base,
            conj_drive,
            drive,
            jumps,
            substeps,
            h: grid.dt() / substeps as f64,
        })
    }

    fn apply(&self, omega: Complex64, x: &[Complex64], out: &mut [Complex64]) {
        out.fill(ZERO);
        self.base.mul_add(ONE, x, out);
        if omega != ZERO {
            self.conj_drive.mul_add(omega.conj(), x, out);
            self.drive.mul_add(omega, x, out);
        }
    }

    /// Propagate one trajectory, calling `visit(k, ψ_normalized)` at every grid point.
    fn run<F>(
        &self,
        psi0: &[Complex64],
        drive: &DriveSpec,
        grid: &TimeGrid,
        rng: &mut ChaCha8Rng,
        jumps: &mut Vec<Jump>,
        mut visit: F,
    ) -> Result<()>
    where
        F: FnMut(usize, &[Complex64]) -> Result<()>,
    {
        let dim = self.layout.dim();
        let mut psi = psi0.to_vec();
        let mut normalized = vec![ZERO; dim];
        let mut scratch = vec![ZERO; dim];
        let mut rk = Rk4::new(dim);
        let mut threshold: f64 = rng.random();

        visit(0, psi0)?;
        for k in 1..grid.len() {
            let t0 = grid.time(k - 1);
            for s in 0..self.substeps {
                let t = t0 + s as f64 * self.h;
                rk.step(
                    |w, y, out| self.apply(w, y, out),
                    drive,
                    t,
                    self.h,
                    &mut psi,
                );
                let norm_sqr: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
                if !norm_sqr.is_finite() {
                    return Err(Error::InvariantViolation {
                        invariant: Invariant::Finite,
                        step: k,
                        time: t + self.h,
                        detail: "non-finite wavefunction amplitude".into(),
                    });
                }
                if norm_sqr <= threshold {
                    let channel = self.jump(&mut psi, &mut scratch, rng, t + self.h)?;
                    jumps.push(Jump {
                        time: t + self.h,
                        channel,
                    });
                    threshold = rng.random();
                }
            }
            let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if !(norm > 0.0) {
                return Err(Error::InvariantViolation {
                    invariant: Invariant::Norm,
                    step: k,
                    time: grid.time(k),
                    detail: format!("wavefunction norm {norm:e}"),
                });
            }
            for (n, z) in normalized.iter_mut().zip(&psi) {
                *n = z / norm;
            }
            visit(k, &normalized)?;
        }
        Ok(())
    }

    /// Apply a randomly chosen jump in place; returns the channel index.
    fn jump(
        &self,
        psi: &mut [Complex64],
        scratch: &mut [Complex64],
        rng: &mut ChaCha8Rng,
        time: f64,
    ) -> Result<usize> {
        let weights: Vec<f64> = self
            .jumps
            .iter()
            .map(|(_, d)| d.apply_norm_sqr(psi))
            .collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Trajectory(format!(
                "zero total jump rate at a forced jump (t = {time} ns)"
            )));
        }
        let u = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = self.jumps.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                pick = i;
                break;
            }
        }
        let (channel, op) = &self.jumps[pick];
        scratch.fill(ZERO);
        op.mul_add(ONE, psi, scratch);
        let norm = weights[pick].sqrt();
        for (p, s) in psi.iter_mut().zip(scratch.iter()) {
            *p = s / norm;
        }
        Ok(*channel)
    }
}

fn check_initial(psi0: &PureState, layout: HilbertLayout) -> Result<()> {
    if psi0.layout() != layout {
        return Err(Error::DimensionMismatch {
            context: "trajectory (initial state)",
            expected: layout.dim(),
            found: psi0.layout().dim(),
        });
    }
    let norm = psi0.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm });
    }
    Ok(())
}

/// One quantum-jump trajectory with normalized states stored on every grid point.
pub fn run_trajectory(
    psi0: &PureState,
    params: &SystemParams,
    drive: &DriveSpec,
    grid: &TimeGrid,
    seed: u64,
) -> Result<TrajectoryRecord> {
    let solver = JumpSolver::new(params, std::slice::from_ref(drive), grid)?;
    check_initial(psi0, solver.layout)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jumps = Vec::new();
    let mut states = Vec::with_capacity(grid.len());
    solver.run(
        psi0.amplitudes().as_slice(),
        drive,
        grid,
        &mut rng,
        &mut jumps,
        |_, psi| {
            states.push(PureState::new(
                solver.layout,
                ComplexVector::from_column_slice(psi),
            )?);
            Ok(())
        },
    )?;
    Ok(TrajectoryRecord {
        times: grid.times(),
        states,
        jumps,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleEstimate {
    pub mean: TimeSeries,
    pub stderr: TimeSeries,
    pub n_traj: usize,
    pub master_seed: u64,
}

/// Running mean and sum of squared deviations per (observable, time).
#[derive(Debug, Clone)]
struct Moments {
    count: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    fn new(len: usize) -> Self {
        Self {
            count: 0.0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    fn push(&mut self, sample: &[f64]) {
        self.count += 1.0;
        for ((m, s2), x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(sample) {
            let delta = x - *m;
            *m += delta / self.count;
            *s2 += delta * (x - *m);
        }
    }

    fn merge(&mut self, other: &Moments) {
        if other.count == 0.0 {
            return;
        }
        let n = self.count + other.count;
        for i in 0..self.mean.len() {
            let delta = other.mean[i] - self.mean[i];
            self.mean[i] += delta * other.count / n;
            self.m2[i] += other.m2[i] + delta * delta * self.count * other.count / n;
        }
        self.count = n;
    }

    fn stderr(&self) -> Vec<f64> {
        if self.count < 2.0 {
            return vec![0.0; self.mean.len()];
        }
        let n = self.count;
        self.m2
            .iter()
            .map(|s| (s.max(0.0) / (n - 1.0) / n).sqrt())
            .collect()
    }
}

/// Ensemble mean and standard error of `observables` from `n_traj` trajectories.
pub fn ensemble_expectation(
    psi0: &PureState,
    params: &SystemParams,
    drive: &DriveSpec,
    grid: &TimeGrid,
    observables: &[(String, ComplexMatrix)],
    n_traj: usize,
    master_seed: u64,
) -> Result<EnsembleEstimate> {
    ensemble_expectation_mixed(
        &InitialState::Pure(psi0.clone()),
        params,
        std::slice::from_ref(drive),
        grid,
        observables,
        n_traj,
        master_seed,
    )
}

/// General ensemble: the initial state may be a mixture, and trajectory `i`
/// uses `drives[i % drives.len()]` (phase averaging over a drive family).
pub fn ensemble_expectation_mixed(
    initial: &InitialState,
    params: &SystemParams,
    drives: &[DriveSpec],
    grid: &TimeGrid,
    observables: &[(String, ComplexMatrix)],
    n_traj: usize,
    master_seed: u64,
) -> Result<EnsembleEstimate> {
    if n_traj == 0 {
        return Err(Error::invalid("n_traj", "must be at least 1"));
    }
    if drives.is_empty() {
        return Err(Error::invalid("drives", "at least one drive is required"));
    }
    let solver = JumpSolver::new(params, drives, grid)?;
    let layout = solver.layout;
    match initial {
        InitialState::Pure(psi) => check_initial(psi, layout)?,
        InitialState::Mixture(members) => {
            for (_, psi) in members {
                check_initial(psi, layout)?;
            }
        }
    }
    let mut ops = Vec::with_capacity(observables.len());
    for (name, op) in observables {
        if op.nrows() != layout.dim() || op.ncols() != layout.dim() {
            return Err(Error::DimensionMismatch {
                context: "ensemble observable",
                expected: layout.dim(),
                found: op.nrows(),
            });
        }
        ops.push((name.clone(), CsrMatrix::from_dense(op)));
    }
    let n_points = grid.len();
    let n_obs = ops.len();

    let run_chunk = |chunk: usize| -> Result<Moments> {
        let mut moments = Moments::new(n_obs * n_points);
        let mut sample = vec![0.0; n_obs * n_points];
        let mut scratch = vec![ZERO; layout.dim()];
        let mut jumps = Vec::new();
        let end = ((chunk + 1) * CHUNK).min(n_traj);
        for index in chunk * CHUNK..end {
            let mut rng = ChaCha8Rng::seed_from_u64(trajectory_seed(master_seed, index as u64));
            let psi0 = initial.sample(&mut rng);
            let drive = &drives[index % drives.len()];
            jumps.clear();
            solver.run(
                psi0.amplitudes().as_slice(),
                drive,
                grid,
                &mut rng,
                &mut jumps,
                |k, psi| {
                    for (o, (_, op)) in ops.iter().enumerate() {
                        scratch.fill(ZERO);
                        op.mul_add(ONE, psi, &mut scratch);
                        let value: Complex64 =
                            psi.iter().zip(&scratch).map(|(a, b)| a.conj() * b).sum();
                        sample[o * n_points + k] = value.re;
                    }
                    Ok(())
                },
            )?;
            moments.push(&sample);
        }
        Ok(moments)
    };

    let n_chunks = n_traj.div_ceil(CHUNK);
    let partials: Vec<Moments> = (0..n_chunks)
        .into_par_iter()
        .map(run_chunk)
        .collect::<Result<_>>()?;
    let mut total = Moments::new(n_obs * n_points);
    for p in &partials {
        total.merge(p);
    }

    let errors = total.stderr();
    let mut mean = TimeSeries::from_grid(grid);
    let mut stderr = TimeSeries::from_grid(grid);
    for (o, (name, _)) in ops.iter().enumerate() {
        let range = o * n_points..(o + 1) * n_points;
        mean.insert(name.clone(), total.mean[range.clone()].to_vec())?;
        stderr.insert(name.clone(), errors[range].to_vec())?;
    }
    for ts in [&mut mean, &mut stderr] {
        ts.set_metadata("n_traj", n_traj);
        ts.set_metadata("master_seed", master_seed);
    }
    Ok(EnsembleEstimate {
        mean,
        stderr,
        n_traj,
        master_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::angular;
    use crate::hilbert::QdState;

    fn cavity_only(kappa: f64) -> SystemParams {
        SystemParams {
            g: 0.0,
            kappa,
            gamma: 0.0,
            gamma_d: 0.0,
            delta_c: 0.0,
            delta_d: 0.0,
            n_max: 2,
        }
    }

    #[test]
    fn idle_system_never_jumps() {
        let p = SystemParams {
            kappa: 0.0,
            ..cavity_only(0.0)
        };
        let psi0 = PureState::vacuum(p.layout());
        let grid = TimeGrid::new(0.0, 1.0, 20).unwrap();
        let rec = run_trajectory(&psi0, &p, &DriveSpec::none(), &grid, 7).unwrap();
        assert!(rec.jumps.is_empty());
        assert_eq!(rec.states.len(), 21);
        assert!(rec.states.iter().all(|s| s == &psi0));
    }

    #[test]
    fn same_seed_same_record() {
        let p = SystemParams::paper_device().with_n_max(3);
        let psi0 = PureState::basis(p.layout(), QdState::Excited, 0);
        let grid = TimeGrid::new(0.0, 0.1, 20).unwrap();
        let drive = DriveSpec::cw(2.0);
        let a = run_trajectory(&psi0, &p, &drive, &grid, 11).unwrap();
        let b = run_trajectory(&psi0, &p, &drive, &grid, 11).unwrap();
        assert_eq!(a, b);
        for s in &a.states {
            assert!((s.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_wrong_layout() {
        let p = SystemParams::paper_device();
        let psi0 = PureState::vacuum(HilbertLayout::new(1));
        let grid = TimeGrid::new(0.0, 0.1, 2).unwrap();
        assert!(run_trajectory(&psi0, &p, &DriveSpec::none(), &grid, 0).is_err());
    }

    #[test]
    fn single_trajectory_has_zero_stderr() {
        let p = cavity_only(27.0);
        let psi0 = PureState::basis(p.layout(), QdState::Ground, 1);
        let grid = TimeGrid::new(0.0, 0.05, 10).unwrap();
        let obs = vec![("n".to_string(), p.layout().photon_number())];
        let est = ensemble_expectation(&psi0, &p, &DriveSpec::none(), &grid, &obs, 1, 3).unwrap();
        assert!(est.stderr.channel("n").unwrap().iter().all(|&e| e == 0.0));

        let rec =
            run_trajectory(&psi0, &p, &DriveSpec::none(), &grid, trajectory_seed(3, 0)).unwrap();
        let n = p.layout().photon_number();
        for (m, s) in est.mean.channel("n").unwrap().iter().zip(&rec.states) {
            let direct = crate::hilbert::expectation(&n, s).unwrap().re;
            assert!((m - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn photon_decay_matches_exponential() {
        let kappa = 2.0;
        let p = cavity_only(kappa);
        let psi0 = PureState::basis(p.layout(), QdState::Ground, 1);
        let grid = TimeGrid::new(0.0, 0.1, 20).unwrap();
        let obs = vec![("n".to_string(), p.layout().photon_number())];
        let est =
            ensemble_expectation(&psi0, &p, &DriveSpec::none(), &grid, &obs, 4000, 2024).unwrap();
        let mean = est.mean.channel("n").unwrap();
        let err = est.stderr.channel("n").unwrap();
        for (k, t) in grid.times().into_iter().enumerate() {
            let exact = (-2.0 * angular(kappa) * t).exp();
            // A pure 0/1 outcome: its binomial spread bounds the deviation.
            let sigma = err[k]
                .max((exact * (1.0 - exact) / 4000.0).sqrt())
                .max(1e-12);
            assert!(
                (mean[k] - exact).abs() <= 3.0 * sigma + 1e-12,
                "t={t}: {} vs {exact}",
                mean[k]
            );
        }
    }

    #[test]
    fn thread_count_does_not_change_estimate() {
        let p = SystemParams::paper_device().with_n_max(3);
        let psi0 = PureState::vacuum(p.layout());
        let grid = TimeGrid::new(0.0, 0.1, 10).unwrap();
        let drive = DriveSpec::cw(3.0);
        let obs = vec![
            ("n".to_string(), p.layout().photon_number()),
            ("pe".to_string(), p.layout().excited_population()),
        ];
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| ensemble_expectation(&psi0, &p, &drive, &grid, &obs, 100, 9).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn mixture_unravels_eigen_ensemble() {
        let layout = HilbertLayout::new(1);
        let rho = DensityMatrix::basis_mixture(
            layout,
            &[(QdState::Ground, 1, 0.25), (QdState::Ground, 0, 0.75)],
        )
        .unwrap();
        match InitialState::from_density(&rho).unwrap() {
            InitialState::Mixture(m) => {
                let mut w: Vec<f64> = m.iter().map(|(p, _)| *p).collect();
                w.sort_by(f64::total_cmp);
                assert!((w[0] - 0.25).abs() < 1e-12 && (w[1] - 0.75).abs() < 1e-12);
            }
            other => panic!("expected a mixture, got {other:?}"),
        }
        let pure = PureState::vacuum(layout).to_density();
        assert!(matches!(
            InitialState::from_density(&pure).unwrap(),
            InitialState::Pure(_)
        ));
    }

    #[test]
    fn seeds_differ_across_indices() {
        let seeds: std::collections::BTreeSet<u64> =
            (0..1000).map(|i| trajectory_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(trajectory_seed(1, 0), trajectory_seed(2, 0));
    }
}
