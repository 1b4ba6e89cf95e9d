use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use risim::phaseopt::{self, PhaseOptConfig, PhaseSolver};
use risim::powalloc::{self, PowerCoefficients, RateMode, SolveOptions};
use std::time::Instant;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    // Synthetic 4-UE, M=32 problem at desk-like scales.
    let mk_problem = |rng: &mut ChaCha8Rng| {
        let theta: Vec<Vec<Complex64>> = (0..4)
            .map(|_| (0..32).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * Complex64::from(1.2e-3)).collect())
            .collect();
        let direct: Vec<Complex64> = (0..4).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * Complex64::from(2e-5)).collect();
        phaseopt::PhaseProblem { theta, direct }
    };
    let cfg = PhaseOptConfig { solver: PhaseSolver::LowRank, randomization_trials: 40,
        lowrank: phaseopt::LowRankOptions { max_iterations: 64, ..Default::default() }, ..Default::default() };
    let t = Instant::now();
    let mut acc = 0.0;
    for _ in 0..500 { let p = mk_problem(&mut rng); acc += phaseopt::optimize(&p, &cfg, &mut rng).unwrap().achieved_gain; }
    println!("phaseopt optimize (lowrank 64it + 40 trials): {:?}/solve  (acc {acc:.3e})", t.elapsed() / 500);

    // Power allocation, warm-started, coefficients jittering +-30%.
    let base = [2.3e-4f64, 1.1e-4, 3.3e-4, 1.8e-4];
    let mut opts = SolveOptions::default();
    let t = Instant::now();
    let mut iters = 0usize;
    for i in 0..5000 {
        let coeffs: Vec<PowerCoefficients> = base.iter().map(|a| PowerCoefficients {
            a: a * (0.7 + 0.6 * rng.gen::<f64>()), b_noise: 5e-7 * rng.gen::<f64>(), c: 3.16e-9, w_eff: 24.0 * 180e3,
        }).collect();
        let alloc = powalloc::solve(&coeffs, 0.1, 24, RateMode::Actual, &opts).unwrap();
        iters += alloc.iterations;
        opts = SolveOptions::warm(alloc.nu);
        if i == 0 { println!("cold iters: {}", alloc.iterations); }
    }
    println!("powalloc warm: {:?}/solve, avg iters {}", t.elapsed() / 5000, iters / 5000);
}
