use super::*;
use crate::channel::ChannelRealization;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub(crate) fn random_problem<R: Rng>(u: usize, m: usize, scale: f64, rng: &mut R) -> PhaseProblem {
    let mut theta = Vec::new();
    let mut direct = Vec::new();
    for _ in 0..u {
        theta.push(
            (0..m)
                .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * c(2.0 * scale, 0.0))
                .collect(),
        );
        direct.push(c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * c(scale, 0.0));
    }
    PhaseProblem { theta, direct }
}

/// Exhaustive search over `levels`-PSK phase combinations.
pub(crate) fn grid_best(problem: &PhaseProblem, levels: usize) -> f64 {
    let m = problem.num_elements();
    let mut idx = vec![0usize; m];
    let mut best = f64::NEG_INFINITY;
    let mut s = vec![c(1.0, 0.0); m];
    loop {
        for (k, &i) in idx.iter().enumerate() {
            s[k] = Complex64::from_polar(1.0, std::f64::consts::TAU * i as f64 / levels as f64);
        }
        best = best.max(problem.min_gain(&s));
        // odometer increment
        let mut k = 0;
        loop {
            if k == m {
                return best;
            }
            idx[k] += 1;
            if idx[k] < levels {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

#[test]
fn build_problem_from_channels() {
    let channels = ChannelRealization {
        h_direct_hat: vec![c(0.4, -0.2)],
        g_ris_hat: vec![vec![c(1.0, 1.0), c(0.0, 2.0)]],
        h_gnb_ris: vec![c(0.5, 0.0), c(0.0, -1.0)],
        beta_direct: vec![4.0],
        beta_cascaded: vec![9.0],
        estimated_at_slot: 0,
    };
    let p = build_problem(&channels, &[(0.8, 0.6)]).unwrap();
    // theta_m = rho_c / sqrt(beta_c) * g_m * h_m, by hand:
    // (0.8/3)*(1+j)(0.5) = 0.8/3*(0.5+0.5j); (0.8/3)*(2j)(-j) = 0.8/3*2.
    let k = 0.8 / 3.0;
    assert!((p.theta[0][0] - c(0.5 * k, 0.5 * k)).norm() < 1e-12);
    assert!((p.theta[0][1] - c(2.0 * k, 0.0)).norm() < 1e-12);
    // d = rho_d / sqrt(beta_d) * h_direct = 0.6/2 * (0.4 - 0.2j).
    assert!((p.direct[0] - c(0.12, -0.06)).norm() < 1e-12);

    // rho_c = 0 zeroes the reflected part.
    let p0 = build_problem(&channels, &[(0.0, 0.6)]).unwrap();
    assert!(p0.theta[0].iter().all(|t| t.norm() == 0.0));

    // Scaling beta_cascaded by 4 halves theta.
    let mut scaled = channels.clone();
    scaled.beta_cascaded[0] *= 4.0;
    let p4 = build_problem(&scaled, &[(0.8, 0.6)]).unwrap();
    for (a, b) in p4.theta[0].iter().zip(&p.theta[0]) {
        assert!((a * c(2.0, 0.0) - b).norm() < 1e-12);
    }

    assert!(build_problem(&channels, &[(0.8, 0.6), (1.0, 1.0)]).is_err());
}

#[test]
fn lifted_matrix_structure() {
    let problem = PhaseProblem {
        theta: vec![vec![c(1.0, 2.0)]],
        direct: vec![c(0.5, -0.5)],
    };
    let x = &build_lifted(&problem)[0];
    assert_eq!(x.shape(), (2, 2));
    // Hand computation: theta*conj(theta) = 5; theta*conj(d) = (1+2j)(0.5+0.5j).
    assert!((x[(0, 0)] - c(5.0, 0.0)).norm() < 1e-12);
    assert!((x[(0, 1)] - c(1.0, 2.0) * c(0.5, 0.5)).norm() < 1e-12);
    assert!((x[(1, 0)] - x[(0, 1)].conj()).norm() < 1e-12);
    assert_eq!(x[(1, 1)], c(0.0, 0.0));

    // Zero direct term leaves only the theta block.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut p = random_problem(1, 4, 1.0, &mut rng);
    p.direct[0] = c(0.0, 0.0);
    let x = &build_lifted(&p)[0];
    for i in 0..4 {
        assert_eq!(x[(i, 4)], c(0.0, 0.0));
        assert_eq!(x[(4, i)], c(0.0, 0.0));
    }
    // trace(X) = ||theta||^2.
    let tr: Complex64 = x.diagonal().iter().sum();
    let want: f64 = p.theta[0].iter().map(|t| t.norm_sqr()).sum();
    assert!((tr.re - want).abs() < 1e-12 && tr.im.abs() < 1e-14);
}

#[test]
fn hermitian_lifted_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p = random_problem(3, 5, 2.0, &mut rng);
    for x in build_lifted(&p) {
        let diff = (&x - x.adjoint()).norm();
        assert!(diff < 1e-12);
    }
}

#[test]
fn align_single_ue_cases() {
    // M = 1, theta = 1, d = 1: s = 1, gain 4.
    let p = PhaseProblem {
        theta: vec![vec![c(1.0, 0.0)]],
        direct: vec![c(1.0, 0.0)],
    };
    let sol = align_single_ue(&p).unwrap();
    assert!((sol.s[0] - c(1.0, 0.0)).norm() < 1e-12);
    assert!((sol.achieved_gain - 4.0).abs() < 1e-12);

    // d = 0: triangle equality, gain (sum |theta|)^2.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut p = random_problem(1, 6, 1.0, &mut rng);
    p.direct[0] = c(0.0, 0.0);
    let sol = align_single_ue(&p).unwrap();
    let want: f64 = p.theta[0].iter().map(|t| t.norm()).sum::<f64>().powi(2);
    assert!((sol.achieved_gain - want).abs() / want < 1e-12);

    // Beats 1e4 random unit-modulus vectors.
    let p = random_problem(1, 8, 1.0, &mut rng);
    let sol = align_single_ue(&p).unwrap();
    for _ in 0..10_000 {
        let s: Vec<Complex64> = (0..8)
            .map(|_| Complex64::from_polar(1.0, rng.gen::<f64>() * std::f64::consts::TAU))
            .collect();
        assert!(p.min_gain(&s) <= sol.achieved_gain + 1e-9);
    }

    let p2 = random_problem(2, 3, 1.0, &mut rng);
    assert!(align_single_ue(&p2).is_err());
}

#[test]
fn sdp_single_ue_is_tight() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for m in [1usize, 2, 4] {
        let p = random_problem(1, m, 1.0, &mut rng);
        let lifted = build_lifted(&p);
        let gains: Vec<f64> = p.direct.iter().map(|d| d.norm_sqr()).collect();
        let (_, xi, status) = solve_sdp(&lifted, &gains, &IpmOptions::default()).unwrap();
        assert_eq!(status, SolverStatus::Optimal);
        let want = align_single_ue(&p).unwrap().achieved_gain;
        assert!(
            (xi - want).abs() / want < 1e-6,
            "m={m}: xi={xi} closed form={want}"
        );
    }
}

#[test]
fn sdp_zero_theta_reduces_to_min_direct() {
    let p = PhaseProblem {
        theta: vec![vec![c(0.0, 0.0); 3], vec![c(0.0, 0.0); 3]],
        direct: vec![c(0.6, 0.8), c(0.3, 0.0)],
    };
    let lifted = build_lifted(&p);
    let gains: Vec<f64> = p.direct.iter().map(|d| d.norm_sqr()).collect();
    let (_, xi, _) = solve_sdp(&lifted, &gains, &IpmOptions::default()).unwrap();
    assert!((xi - 0.09).abs() < 1e-6, "xi = {xi}");
}

#[test]
fn sdp_upper_bounds_discrete_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..5 {
        let p = random_problem(2, 3, 1.0, &mut rng);
        let lifted = build_lifted(&p);
        let gains: Vec<f64> = p.direct.iter().map(|d| d.norm_sqr()).collect();
        let (_, xi, _) = solve_sdp(&lifted, &gains, &IpmOptions::default()).unwrap();
        let grid = grid_best(&p, 64);
        assert!(
            xi >= grid * (1.0 - 1e-6),
            "trial {trial}: xi={xi} below grid={grid}"
        );
    }
}

#[test]
fn sdp_degenerate_all_zero_ue() {
    let p = PhaseProblem {
        theta: vec![vec![c(0.0, 0.0); 2], vec![c(1.0, 0.0), c(0.0, 1.0)]],
        direct: vec![c(0.0, 0.0), c(1.0, 0.0)],
    };
    let lifted = build_lifted(&p);
    let gains: Vec<f64> = p.direct.iter().map(|d| d.norm_sqr()).collect();
    let (_, xi, status) = solve_sdp(&lifted, &gains, &IpmOptions::default()).unwrap();
    assert_eq!(status, SolverStatus::Optimal);
    assert_eq!(xi, 0.0);
}

#[test]
fn randomization_recovers_rank_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let p = random_problem(2, 4, 1.0, &mut rng);
    // Build S = sbar sbar^H for a random unit-modulus sbar (auxiliary
    // coordinate 1): projection must reproduce its gain exactly.
    let m = 4;
    let sbar: Vec<Complex64> = (0..m)
        .map(|_| Complex64::from_polar(1.0, rng.gen::<f64>() * std::f64::consts::TAU))
        .chain(std::iter::once(c(1.0, 0.0)))
        .collect();
    let mut s_mat = nalgebra::DMatrix::<Complex64>::zeros(m + 1, m + 1);
    for i in 0..=m {
        for j in 0..=m {
            s_mat[(i, j)] = sbar[i] * sbar[j].conj();
        }
    }
    let want = p.min_gain(&sbar[..m]);
    let sol = gaussian_randomize(&s_mat, &p, 3, &mut rng, want, SolverStatus::Optimal);
    // Identity up to eigendecomposition roundoff in the factorization.
    assert!(
        (sol.achieved_gain - want).abs() / want < 1e-6,
        "got {} want {}",
        sol.achieved_gain,
        want
    );
}

#[test]
fn randomization_more_trials_never_worse() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let p = random_problem(2, 4, 1.0, &mut rng);
    let lifted = build_lifted(&p);
    let gains: Vec<f64> = p.direct.iter().map(|d| d.norm_sqr()).collect();
    let (s_mat, xi, status) = solve_sdp(&lifted, &gains, &IpmOptions::default()).unwrap();
    let one = gaussian_randomize(
        &s_mat,
        &p,
        1,
        &mut ChaCha8Rng::seed_from_u64(42),
        xi,
        status,
    );
    let many = gaussian_randomize(
        &s_mat,
        &p,
        500,
        &mut ChaCha8Rng::seed_from_u64(42),
        xi,
        status,
    );
    assert!(many.achieved_gain >= one.achieved_gain);
}

#[test]
fn relaxation_bound_holds_for_returned_solutions() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for trial in 0..12 {
        let u = 1 + trial % 3;
        let m = 2 + trial % 5;
        let p = random_problem(u, m, 1.0, &mut rng);
        for solver in [PhaseSolver::InteriorPoint, PhaseSolver::LowRank] {
            if u == 1 {
                continue;
            }
            let cfg = PhaseOptConfig {
                solver,
                randomization_trials: 100,
                ..Default::default()
            };
            let sol = optimize(&p, &cfg, &mut rng).unwrap();
            assert!(
                sol.achieved_gain <= sol.xi_star + 1e-6 * (1.0 + sol.xi_star),
                "solver {solver:?}: achieved {} exceeds bound {}",
                sol.achieved_gain,
                sol.xi_star
            );
            for sm in &sol.s {
                assert!((sm.norm() - 1.0).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn single_ue_randomization_near_alignment() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let p = random_problem(1, 4, 1.0, &mut rng);
    let lifted = build_lifted(&p);
    let gains: Vec<f64> = p.direct.iter().map(|d| d.norm_sqr()).collect();
    let (s_mat, xi, status) = solve_sdp(&lifted, &gains, &IpmOptions::default()).unwrap();
    let sol = gaussian_randomize(&s_mat, &p, 500, &mut rng, xi, status);
    let want = align_single_ue(&p).unwrap().achieved_gain;
    assert!(
        (sol.achieved_gain - want).abs() / want < 1e-3,
        "randomized {} vs aligned {}",
        sol.achieved_gain,
        want
    );
}

#[test]
fn lowrank_competitive_with_interior_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..4 {
        let p = random_problem(3, 6, 1.0, &mut rng);
        let ipm_cfg = PhaseOptConfig {
            solver: PhaseSolver::InteriorPoint,
            ..Default::default()
        };
        let lr_cfg = PhaseOptConfig {
            solver: PhaseSolver::LowRank,
            ..Default::default()
        };
        let a = optimize(&p, &ipm_cfg, &mut rng).unwrap();
        let b = optimize(&p, &lr_cfg, &mut rng).unwrap();
        assert_eq!(b.solver_status, SolverStatus::Fallback);
        assert!(
            b.achieved_gain >= 0.85 * a.achieved_gain,
            "lowrank {} far below ipm {}",
            b.achieved_gain,
            a.achieved_gain
        );
        // The low-rank bound is still a genuine upper bound.
        assert!(b.xi_star >= a.achieved_gain * (1.0 - 1e-9));
    }
}

#[test]
fn grid_95_percent_small_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p = random_problem(2, 3, 1.0, &mut rng);
    let cfg = PhaseOptConfig::default();
    let sol = optimize(&p, &cfg, &mut rng).unwrap();
    let grid = grid_best(&p, 32);
    assert!(
        sol.achieved_gain >= 0.95 * grid,
        "achieved {} below 95% of grid {grid}",
        sol.achieved_gain
    );
    assert!(sol.xi_star >= grid * (1.0 - 1e-6));
}
