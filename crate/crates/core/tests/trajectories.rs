use qdswitch::drive::DriveSpec;
use qdswitch::dynamics::{angular, evolve_master_observed, MasterOptions, SystemParams, TimeGrid};
use qdswitch::hilbert::{DensityMatrix, PureState, QdState};
use qdswitch::trajectories::{ensemble_expectation, run_trajectory, trajectory_seed};

fn only_rates(kappa: f64, gamma: f64, n_max: usize) -> SystemParams {
    SystemParams {
        g: 0.0,
        kappa,
        gamma,
        gamma_d: 0.0,
        delta_c: 0.0,
        delta_d: 0.0,
        n_max,
    }
}

#[test]
fn waiting_times_pass_ks_against_exponential() {
    // Bare QD decay from |e,0⟩: a single jump at rate R = 2·2πγ.
    let p = only_rates(0.0, 1.0, 0);
    let rate = 2.0 * angular(p.gamma);
    let psi0 = PureState::basis(p.layout(), QdState::Excited, 0);
    let grid = TimeGrid::new(0.0, 25.0 / rate, 5000).unwrap();
    let n = 5000;
    let mut waits: Vec<f64> = (0..n)
        .map(|i| {
            let rec = run_trajectory(&psi0, &p, &DriveSpec::none(), &grid, trajectory_seed(77, i))
                .unwrap();
            assert_eq!(rec.jumps.len(), 1);
            assert_eq!(rec.jumps[0].channel, 1);
            rec.jumps[0].time
        })
        .collect();
    waits.sort_by(f64::total_cmp);
    let d = waits
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let cdf = 1.0 - (-rate * t).exp();
            let lo = k as f64 / n as f64;
            let hi = (k + 1) as f64 / n as f64;
            (cdf - lo).abs().max((hi - cdf).abs())
        })
        .fold(0.0, f64::max);
    let critical = 1.628 / (n as f64).sqrt();
    assert!(d < critical, "KS D = {d:.4} above {critical:.4}");
}

#[test]
fn jump_fraction_follows_photon_lifetime() {
    let p = only_rates(2.0, 0.0, 1);
    let psi0 = PureState::basis(p.layout(), QdState::Ground, 1);
    let grid = TimeGrid::new(0.0, 0.08, 400).unwrap();
    let n = 3000;
    let first_jumps: Vec<Option<f64>> = (0..n)
        .map(|i| {
            let rec = run_trajectory(&psi0, &p, &DriveSpec::none(), &grid, trajectory_seed(5, i))
                .unwrap();
            rec.jumps.first().map(|j| j.time)
        })
        .collect();
    for t in [0.01, 0.02, 0.04, 0.08] {
        let fraction = first_jumps
            .iter()
            .filter(|j| j.is_some_and(|x| x <= t + 1e-12))
            .count() as f64
            / n as f64;
        let exact = 1.0 - (-2.0 * angular(p.kappa) * t).exp();
        let sigma = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!(
            (fraction - exact).abs() < 3.0 * sigma + 1e-3,
            "t={t}: {fraction} vs {exact}"
        );
    }
}

#[test]
fn ensemble_matches_master_under_weak_drive() {
    // ⟨a†a⟩ ≈ 0.05: weak, yet jumps are frequent enough for 2000 samples to resolve it.
    let p = SystemParams::paper_device().with_n_max(5);
    let drive = DriveSpec::cw(6.0);
    let grid = TimeGrid::new(0.0, 0.2, 20).unwrap();
    let layout = p.layout();
    let obs = vec![("n".to_string(), layout.photon_number())];
    let psi0 = PureState::vacuum(layout);
    let est = ensemble_expectation(&psi0, &p, &drive, &grid, &obs, 2000, 31).unwrap();
    let master = evolve_master_observed(
        &DensityMatrix::ground(layout),
        &p,
        &drive,
        &grid,
        &[layout.photon_number()],
        MasterOptions::default(),
    )
    .unwrap();
    let mean = est.mean.channel("n").unwrap();
    let err = est.stderr.channel("n").unwrap();
    let mut misses = 0;
    for k in 0..grid.len() {
        let diff = (mean[k] - master.values[0][k]).abs();
        if diff > 3.0 * err[k] + 1e-12 {
            misses += 1;
            eprintln!(
                "t={:.3}: traj {} master {} stderr {}",
                grid.time(k),
                mean[k],
                master.values[0][k],
                err[k]
            );
        }
    }
    assert_eq!(misses, 0);
}
