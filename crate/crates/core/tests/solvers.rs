use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use roid_core::admm::Residuals;
use roid_core::datagen::{
    add_noise, gen_tucker, laplacian_from_affinity, random_affinity, sample_mask,
};
use roid_core::linalg::Matrix;
use roid_core::metrics::rse;
use roid_core::solvers::steps::{aux_targets, shooi_z_update, target_sum};
use roid_core::solvers::{
    core_update, factor_update, hooi_with_history, initial_factors, interpolate_x, solve_full,
    solve_groid, solve_groid_monitored, solve_hooi, solve_roid, solve_roid_monitored, solve_shooi,
    solve_shooi_monitored, subproblem_objective, Init, Monitor, SweepInfo,
};
use roid_core::tensor::{frobenius, multi_mode_product, unfold};
use roid_core::{DenseTensor3, Error, ObservationSet, SolverConfig, TuckerModel};

fn gaussian(rng: &mut ChaCha8Rng, dims: [usize; 3]) -> DenseTensor3 {
    DenseTensor3::from_fn(dims, |_, _, _| StandardNormal.sample(rng)).unwrap()
}

fn subspace_gap(a: &Matrix, b: &Matrix) -> f64 {
    (a * a.transpose() - b * b.transpose()).norm()
}

#[test]
fn roid_full_observation_large_lambda() {
    let t = gen_tucker([40, 40, 40], [3, 3, 3], 1).unwrap();
    let omega = ObservationSet::full(&t);
    let mut c = SolverConfig::new([3, 3, 3]);
    c.lambda = 1e6;
    let r = solve_roid(&omega, &c).unwrap();
    assert!(rse(&r.model.reconstruct(), &t).unwrap() <= 1e-3);
    assert_eq!(r.completed, t);
}

#[test]
fn roid_matches_observations_and_stays_orthonormal() {
    let t = gen_tucker([15, 14, 13], [3, 3, 3], 2).unwrap();
    let omega = sample_mask(&t, 0.3, 3).unwrap();
    let mut c = SolverConfig::new([4, 4, 4]);
    c.maxiter = 60;
    let mut worst: f64 = 0.0;
    let mut cb = |s: &SweepInfo<'_>| worst = worst.max(s.model.orthonormality_error());
    let r = solve_roid_monitored(
        &omega,
        &c,
        Monitor {
            reference: None,
            on_sweep: Some(&mut cb),
        },
    )
    .unwrap();
    assert!(worst <= 1e-8, "{worst}");
    for (e, &o) in omega.entries().iter().zip(omega.offsets()) {
        assert_eq!(r.completed.as_slice()[o], e.value);
    }
}

#[test]
fn roid_zero_observations_give_zero() {
    let t = DenseTensor3::zeros([6, 5, 4]).unwrap();
    let omega = sample_mask(&t, 0.5, 1).unwrap();
    let r = solve_roid(&omega, &SolverConfig::new([2, 2, 2])).unwrap();
    assert!(r.converged);
    assert_eq!(frobenius(&r.completed), 0.0);
}

#[test]
fn roid_rejects_empty_and_bad_rank() {
    let empty = ObservationSet::new([4, 4, 4], vec![]).unwrap();
    assert!(matches!(
        solve_roid(&empty, &SolverConfig::new([2, 2, 2])),
        Err(Error::Degenerate(_))
    ));
    let t = gen_tucker([4, 4, 4], [2, 2, 2], 0).unwrap();
    let omega = sample_mask(&t, 0.5, 0).unwrap();
    assert!(matches!(
        solve_roid(&omega, &SolverConfig::new([5, 2, 2])),
        Err(Error::Range(_))
    ));
}

#[test]
fn roid_is_deterministic() {
    let t = add_noise(&gen_tucker([12, 12, 12], [3, 3, 3], 4).unwrap(), 0.05, 5).unwrap();
    let omega = sample_mask(&t, 0.4, 6).unwrap();
    let mut c = SolverConfig::new([4, 4, 4]);
    c.maxiter = 40;
    c.record_trace = true;
    let a = solve_roid(&omega, &c).unwrap();
    let b = solve_roid(&omega, &c).unwrap();
    assert_eq!(a, b);
    c.init = Init::RandomOrthonormal;
    c.seed = 3;
    assert_eq!(
        solve_roid(&omega, &c).unwrap(),
        solve_roid(&omega, &c).unwrap()
    );
}

#[test]
fn roid_maxiter_returns_last_iterate() {
    let t = gen_tucker([10, 10, 10], [3, 3, 3], 7).unwrap();
    let omega = sample_mask(&t, 0.2, 8).unwrap();
    let mut c = SolverConfig::new([6, 6, 6]);
    c.maxiter = 3;
    c.record_trace = true;
    let r = solve_roid(&omega, &c).unwrap();
    assert!(!r.converged);
    assert_eq!(r.iterations, 3);
    assert_eq!(r.trace.len(), 3);
}

#[test]
fn converged_runs_satisfy_residual_bounds() {
    let t = gen_tucker([20, 20, 20], [3, 3, 3], 9).unwrap();
    let omega = sample_mask(&t, 0.3, 10).unwrap();
    let mut c = SolverConfig::new([3, 3, 3]);
    c.lambda = 1e3;
    let mut last: Option<(Residuals, f64, f64)> = None;
    let mut cb = |s: &SweepInfo<'_>| last = Some((s.residuals, s.x_change, s.aux_change));
    let r = solve_roid_monitored(
        &omega,
        &c,
        Monitor {
            reference: Some(&t),
            on_sweep: Some(&mut cb),
        },
    )
    .unwrap();
    assert!(r.converged);
    let (res, dx, dg) = last.unwrap();
    let tn = omega.norm();
    assert!(res.primal / tn < c.tol);
    assert!(res.dual.is_finite());
    assert!(dx < 10.0 * c.tol * tn, "{dx}");
    assert!(dg < 10.0 * c.tol * tn, "{dg}");
}

#[test]
fn full_recovers_exact_rank() {
    let t = gen_tucker([30, 30, 30], [3, 3, 3], 11).unwrap();
    let mut c = SolverConfig::new([3, 3, 3]);
    c.lambda = 1e6;
    let r = solve_full(&t, &c).unwrap();
    assert!(rse(&r.completed, &t).unwrap() <= 1e-3);
    let z = solve_full(
        &DenseTensor3::zeros([5, 5, 5]).unwrap(),
        &SolverConfig::new([2, 2, 2]),
    )
    .unwrap();
    assert_eq!(frobenius(&z.model.core), 0.0);
}

#[test]
fn full_never_inflates_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let t = gaussian(&mut rng, [8, 7, 6]);
        let mut c = SolverConfig::new([3, 3, 3]);
        c.maxiter = 50;
        c.lambda = 1.0;
        let r = solve_full(&t, &c).unwrap();
        let tn = frobenius(&t);
        assert!(frobenius(&r.completed) <= tn + c.tol * tn);
    }
}

#[test]
fn shooi_exact_rank_completion() {
    let t = gen_tucker([40, 40, 40], [3, 3, 3], 13).unwrap();
    let omega = sample_mask(&t, 0.3, 14).unwrap();
    let r = solve_shooi(&omega, &SolverConfig::new([3, 3, 3])).unwrap();
    assert!(r.converged);
    assert!(rse(&r.completed, &t).unwrap() <= 1e-3);
    let full = solve_shooi(&ObservationSet::full(&t), &SolverConfig::new([3, 3, 3])).unwrap();
    assert!(rse(&full.model.reconstruct(), &t).unwrap() <= 1e-6);
}

#[test]
fn shooi_converged_residual_and_orthonormality() {
    let t = add_noise(&gen_tucker([12, 11, 10], [2, 2, 2], 15).unwrap(), 0.01, 1).unwrap();
    let omega = sample_mask(&t, 0.5, 16).unwrap();
    let mut worst: f64 = 0.0;
    let mut cb = |s: &SweepInfo<'_>| worst = worst.max(s.model.orthonormality_error());
    let c = SolverConfig::new([2, 2, 2]);
    let r = solve_shooi_monitored(
        &omega,
        &c,
        Monitor {
            reference: None,
            on_sweep: Some(&mut cb),
        },
    )
    .unwrap();
    assert!(worst <= 1e-8);
    assert!(r.converged);
}

#[test]
fn shooi_z_update_on_empty_mask() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let recon = gaussian(&mut rng, [3, 3, 3]);
    let y = gaussian(&mut rng, [3, 3, 3]);
    let empty = ObservationSet::new([3, 3, 3], vec![]).unwrap();
    let z = shooi_z_update(&empty, &recon, &y, 4.0).unwrap();
    assert!(frobenius(&z.sub(&recon.sub(&y.scale(0.25)).unwrap()).unwrap()) < 1e-14);
}

/// A SHOOI fixed point, rewritten as `X = P_Omega(T) + P_Omega^c(recon)`, is a
/// stationary point of the unregularized completion problem: the core is the
/// projection of `X` and each factor spans the dominant subspace of its
/// projected unfolding.
#[test]
fn shooi_fixed_point_is_completion_stationary() {
    let t = gen_tucker([10, 9, 8], [2, 2, 2], 18).unwrap();
    let noisy = add_noise(&t, 0.02, 19).unwrap();
    let omega = sample_mask(&noisy, 0.6, 20).unwrap();
    let mut c = SolverConfig::new([2, 2, 2]);
    c.tol = 1e-12;
    c.maxiter = 5000;
    let r = solve_shooi(&omega, &c).unwrap();
    let m = &r.model;
    let x = interpolate_x(&omega, m).unwrap();
    let core = multi_mode_product(&x, &m.u, &m.v, &m.w, true).unwrap();
    assert!(frobenius(&core.sub(&m.core).unwrap()) <= 1e-6 * frobenius(&x));
    let m1 = unfold(
        &multi_mode_product(&x, &Matrix::identity(10, 10), &m.v, &m.w, true).unwrap(),
        1,
    )
    .unwrap();
    let g = &m1 * m1.transpose();
    let stationarity = (&g * &m.u - &m.u * (m.u.transpose() * &g * &m.u)).norm();
    assert!(stationarity <= 1e-6 * g.norm(), "{stationarity}");
}

#[test]
fn hooi_examples() {
    let t = gen_tucker([12, 11, 10], [2, 2, 2], 21).unwrap();
    let m = solve_hooi(&t, [2, 2, 2], 1e-14, 100).unwrap();
    assert!(rse(&m.reconstruct(), &t).unwrap() <= 1e-10);
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let g = gaussian(&mut rng, [4, 3, 5]);
    let m = solve_hooi(&g, [4, 3, 5], 1e-14, 10).unwrap();
    assert!(rse(&m.reconstruct(), &g).unwrap() <= 1e-12);
}

#[test]
fn hooi_fit_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..5 {
        let t = gaussian(&mut rng, [9, 8, 7]);
        let (_, fits) = hooi_with_history(&t, [3, 2, 3], 0.0, 30).unwrap();
        for w in fits.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{fits:?}");
        }
    }
}

/// With rho forced to 0 the factor and core steps are exactly HOOI sweeps.
#[test]
fn zero_penalty_steps_reproduce_hooi() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let t = gaussian(&mut rng, [9, 8, 7]);
    let rank = [3, 3, 2];
    let [u, v, w] = initial_factors(&t, rank, Init::HosvdOfFilled, 0).unwrap();
    let core = multi_mode_product(&t, &u, &v, &w, true).unwrap();
    let mut model = TuckerModel::new(core, u, v, w).unwrap();
    let b = gaussian(&mut rng, rank);
    for sweep in 1..=4 {
        let up = factor_update(&t, &model, &b, 0.0).unwrap();
        let core = core_update(&t, &up.u, &up.v, &up.w, &b, 0.0).unwrap();
        model = TuckerModel::new(core, up.u, up.v, up.w).unwrap();
        let (h, _) = hooi_with_history(&t, rank, 0.0, sweep).unwrap();
        assert!(subspace_gap(&model.u, &h.u) < 1e-10);
        assert!(subspace_gap(&model.v, &h.v) < 1e-10);
        assert!(subspace_gap(&model.w, &h.w) < 1e-10);
    }
}

/// The factor/core block update never increases its joint objective for
/// fixed auxiliaries and multipliers.
#[test]
fn block_update_decreases_subproblem_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let rank = [3, 2, 3];
    for _ in 0..10 {
        let x = gaussian(&mut rng, [8, 7, 9]);
        let [u, v, w] = initial_factors(&x, rank, Init::RandomOrthonormal, 1).unwrap();
        let model = TuckerModel::new(gaussian(&mut rng, rank), u, v, w).unwrap();
        let aux: Vec<Matrix> = (1..=3)
            .map(|n| unfold(&gaussian(&mut rng, rank), n).unwrap())
            .collect();
        let ys = [1, 2, 3].map(|n| unfold(&gaussian(&mut rng, rank), n).unwrap());
        let rho = 0.4;
        let targets = aux_targets(&aux, &ys, rho, rank).unwrap();
        let b = target_sum(&targets).unwrap();
        let before = subproblem_objective(&x, &model, &targets, rho).unwrap();
        let up = factor_update(&x, &model, &b, rho).unwrap();
        let core = core_update(&x, &up.u, &up.v, &up.w, &b, rho).unwrap();
        let next = TuckerModel::new(core, up.u, up.v, up.w).unwrap();
        let after = subproblem_objective(&x, &next, &targets, rho).unwrap();
        assert!(after <= before + 1e-10, "{after} > {before}");
    }
}

fn psd_laplacians(seed: u64, dims: [usize; 3]) -> [Matrix; 3] {
    [0, 1, 2].map(|n| {
        laplacian_from_affinity(&random_affinity(dims[n], 0.3, seed + n as u64).unwrap())
            .unwrap()
            .into_matrix()
    })
}

#[test]
fn groid_orthonormal_every_sweep() {
    let dims = [14, 12, 10];
    let t = gen_tucker(dims, [3, 3, 3], 26).unwrap();
    let omega = sample_mask(&t, 0.3, 27).unwrap();
    let laps = psd_laplacians(28, dims);
    let mut c = SolverConfig::new([3, 3, 3]);
    c.mu = 0.5;
    c.maxiter = 80;
    let mut worst: f64 = 0.0;
    let mut cb = |s: &SweepInfo<'_>| worst = worst.max(s.model.orthonormality_error());
    let r = solve_groid_monitored(
        &omega,
        &laps,
        &c,
        Monitor {
            reference: None,
            on_sweep: Some(&mut cb),
        },
    )
    .unwrap();
    assert!(worst <= 1e-8);
    for (e, &o) in omega.entries().iter().zip(omega.offsets()) {
        assert_eq!(r.completed.as_slice()[o], e.value);
    }
}

#[test]
fn groid_zero_mu_equals_zero_laplacian() {
    let dims = [10, 9, 8];
    let t = gen_tucker(dims, [2, 2, 2], 29).unwrap();
    let omega = sample_mask(&t, 0.4, 30).unwrap();
    let laps = psd_laplacians(31, dims);
    let zero = [
        Matrix::zeros(10, 10),
        Matrix::zeros(9, 9),
        Matrix::zeros(8, 8),
    ];
    let mut c = SolverConfig::new([2, 2, 2]);
    c.maxiter = 40;
    let a = solve_groid(&omega, &laps, &c).unwrap();
    c.mu = 2.0;
    let b = solve_groid(&omega, &zero, &c).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.completed, b.completed);
}

#[test]
fn groid_rejects_asymmetric_laplacian() {
    let t = gen_tucker([4, 4, 4], [2, 2, 2], 0).unwrap();
    let omega = sample_mask(&t, 0.5, 0).unwrap();
    let mut l = Matrix::zeros(4, 4);
    l[(0, 1)] = 1.0;
    let laps = [l, Matrix::zeros(4, 4), Matrix::zeros(4, 4)];
    assert!(matches!(
        solve_groid(&omega, &laps, &SolverConfig::new([2, 2, 2])),
        Err(Error::Input(_))
    ));
}
