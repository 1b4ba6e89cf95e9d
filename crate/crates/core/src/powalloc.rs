//! Sum-throughput power allocation across UEs by Lagrangian duality: each
//! UE's power follows from the dual price nu through a closed-form root of
//! the stationarity quadratic, and nu is driven by a projected subgradient
//! with a normalized step, then polished by a monotone bisection so the
//! total-power constraint is met exactly.
//!
//! Every UE sees SINR(P) = A P / (B P + C): A carries the (actual or
//! expected) channel gain, B the power-proportional outdated-CSI noise, C
//! the AWGN plus interference floor.

use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::linkmetrics::LinkState;
use crate::phaseopt::PhaseSolution;

const LN2: f64 = std::f64::consts::LN_2;

/// Which rate expression the coefficients describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateMode {
    /// Combined-amplitude gain |rho_u g L Phi h + rho_u0 sqrt(1/beta) h0|^2.
    Actual,
    /// Statistical expectation of that gain.
    Expected,
}

/// Per-UE coefficients of the rate curve W_eff log2(1 + A P / (B P + C)).
#[derive(Debug, Clone)]
pub struct PowerCoefficients {
    pub a: f64,
    pub b_noise: f64,
    pub c: f64,
    /// Effective bandwidth b * (1 - alpha T_p/N_c) * W in Hz.
    pub w_eff: f64,
}

impl PowerCoefficients {
    pub fn validate(&self) -> Result<()> {
        if self.a < 0.0 || self.b_noise < 0.0 {
            return Err(Error::invalid("power coefficients: A and B must be >= 0"));
        }
        if !(self.c > 0.0) {
            return Err(Error::invalid("power coefficients: C must be > 0"));
        }
        if !(self.w_eff > 0.0) {
            return Err(Error::invalid("power coefficients: W_eff must be > 0"));
        }
        Ok(())
    }

    pub fn rate_bps(&self, power_w: f64) -> f64 {
        self.w_eff * (1.0 + self.a * power_w / (self.b_noise * power_w + self.c)).log2()
    }
}

/// Build the per-UE coefficients for one slot. The expected mode uses the
/// four-term channel-power expansion; the actual mode evaluates the
/// combined amplitude of the given phases on the channel estimates.
pub fn compute_coefficients(
    states: &[LinkState],
    phases: &PhaseSolution,
    channels: &ChannelRealization,
    mode: RateMode,
) -> Result<Vec<PowerCoefficients>> {
    if states.len() != channels.num_ues() {
        return Err(Error::invalid("compute_coefficients: UE count mismatch"));
    }
    let phi = phases.ris_phases();
    states
        .iter()
        .enumerate()
        .map(|(u, state)| {
            let a = match mode {
                RateMode::Actual => {
                    let mut casc = Complex64::new(0.0, 0.0);
                    for ((p, g), h) in phi
                        .iter()
                        .zip(&channels.g_ris_hat[u])
                        .zip(&channels.h_gnb_ris)
                    {
                        casc += g * p * h;
                    }
                    let amp = state.rho_cascaded * (1.0 / state.beta_cascaded).sqrt() * casc
                        + state.rho_direct
                            * (1.0 / state.beta_direct).sqrt()
                            * channels.h_direct_hat[u];
                    amp.norm_sqr()
                }
                RateMode::Expected => expected_gain_bracket(state),
            };
            Ok(PowerCoefficients {
                a,
                b_noise: noise_slope(state),
                c: state.noise_power_w + state.interference_mean_w(),
                w_eff: state.rbs_per_ue as f64 * state.overhead_factor()
                    * state.bandwidth_per_rb_hz,
            })
        })
        .collect()
}

/// The four-term bracket of the expected combined channel power.
pub fn expected_gain_bracket(state: &LinkState) -> f64 {
    let m = state.num_elements as f64;
    let rho_c = state.rho_cascaded;
    let rho_d = state.rho_direct;
    m * rho_c * rho_c / state.beta_cascaded
        + m * (m - 1.0) * (rho_c * state.omega1 * state.omega2).powi(2) / state.beta_cascaded
        + 2.0 * m * rho_c * rho_d * state.omega0 * state.omega1 * state.omega2
            / (state.beta_direct * state.beta_cascaded).sqrt()
        + rho_d * rho_d / state.beta_direct
}

/// Power-proportional part of the effective noise (so that
/// sigma_uf^2 = B * P + sigma^2).
pub fn noise_slope(state: &LinkState) -> f64 {
    let m = state.num_elements as f64;
    m * (1.0 - state.rho_cascaded * state.rho_cascaded) * (1.0 - state.omega2 * state.omega2)
        / state.beta_cascaded
        + (1.0 - state.rho_direct * state.rho_direct) * (1.0 - state.omega0 * state.omega0)
            / state.beta_direct
}

/// Closed-form per-UE power at dual price nu: the nonnegative root of
/// (A+B)B P^2 + C(A+2B) P + C^2 - W A C/(nu ln2) = 0, clamped at zero when
/// power is not profitable. B = 0 degenerates to classic water-filling.
pub fn closed_form_power(nu: f64, coeff: &PowerCoefficients) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::invalid(format!(
            "closed_form_power: nu must be > 0, got {nu}"
        )));
    }
    let (a_sig, b, c, w) = (coeff.a, coeff.b_noise, coeff.c, coeff.w_eff);
    if a_sig <= 0.0 {
        return Ok(0.0);
    }
    let quad_a = (a_sig + b) * b;
    if quad_a == 0.0 {
        // Water-filling form.
        return Ok((w / (nu * LN2) - c / a_sig).max(0.0));
    }
    let quad_b = c * (a_sig + 2.0 * b);
    let disc = quad_b * quad_b - 4.0 * quad_a * (c * c - w * a_sig * c / (nu * LN2));
    if disc < 0.0 {
        return Ok(0.0);
    }
    Ok(((-quad_b + disc.sqrt()) / (2.0 * quad_a)).max(0.0))
}

/// Residual of the per-UE stationarity condition at (P, nu); zero for
/// powers produced by [`closed_form_power`] with positive value.
pub fn stationarity_residual(coeff: &PowerCoefficients, power_w: f64, nu: f64) -> f64 {
    let denom = (coeff.b_noise * power_w + coeff.c)
        * ((coeff.a + coeff.b_noise) * power_w + coeff.c);
    coeff.w_eff * coeff.a * coeff.c / (LN2 * denom) - nu
}

/// Lagrangian dual objective at price nu (weak duality upper bound on the
/// achievable sum rate).
pub fn dual_value(coeffs: &[PowerCoefficients], p_tot: f64, b_rbs: u64, nu: f64) -> f64 {
    let kappa = nu / b_rbs as f64;
    let mut acc = kappa * p_tot;
    for c in coeffs {
        let p = closed_form_power(nu, c).unwrap_or(0.0);
        acc += c.rate_bps(p) - kappa * (b_rbs as f64) * p;
    }
    acc
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Relative step applied to the P_tot-normalized subgradient.
    pub chi: f64,
    /// Stop once successive power vectors differ by less than this (watts).
    pub eps_w: Option<f64>,
    pub max_iterations: usize,
    pub nu_init: f64,
    pub nu_floor: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            chi: 1e-3,
            eps_w: None, // 1e-8 * P_tot
            max_iterations: 100_000,
            nu_init: 100.0,
            nu_floor: 1e-12,
        }
    }
}

impl SolveOptions {
    /// Warm start from a previous slot's dual price.
    pub fn warm(nu: f64) -> Self {
        SolveOptions {
            nu_init: nu,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct PowerAllocation {
    /// Per-UE transmit power in watts.
    pub powers_w: Vec<f64>,
    /// Sum of b-scaled UE rates at this allocation, bits/s.
    pub objective_bps: f64,
    pub mode: RateMode,
    pub nu: f64,
    pub iterations: usize,
}

fn allocated(coeffs: &[PowerCoefficients], b_rbs: u64, nu: f64) -> (Vec<f64>, f64) {
    let powers: Vec<f64> = coeffs
        .iter()
        .map(|c| closed_form_power(nu, c).unwrap_or(0.0))
        .collect();
    let total = powers.iter().sum::<f64>() * b_rbs as f64;
    (powers, total)
}

/// Dual descent for one slot: projected subgradient on nu with the
/// gradient P_tot - sum_u b P_u(nu) (normalized by P_tot, step relative to
/// nu), stopping when successive power vectors agree to eps. A final
/// monotone bisection pins the allocation onto the power budget, which the
/// fixed-step iteration alone cannot guarantee to 1e-9.
pub fn solve(
    coeffs: &[PowerCoefficients],
    p_tot: f64,
    b_rbs: u64,
    mode: RateMode,
    opts: &SolveOptions,
) -> Result<PowerAllocation> {
    if coeffs.is_empty() {
        return Err(Error::invalid("solve: no UEs"));
    }
    if !(p_tot > 0.0) || b_rbs == 0 {
        return Err(Error::invalid("solve: need P_tot > 0 and b >= 1"));
    }
    for c in coeffs {
        c.validate()?;
    }
    let eps = opts.eps_w.unwrap_or(1e-8 * p_tot);

    let mut nu = opts.nu_init.max(opts.nu_floor);
    let (mut powers, mut total) = allocated(coeffs, b_rbs, nu);
    let mut iterations = 0usize;
    let mut converged = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        // Normalized subgradient, clamped so a wildly infeasible iterate
        // cannot explode the multiplicative update.
        let grad = ((p_tot - total) / p_tot).clamp(-1e3, 1.0);
        let nu_next = (nu * (1.0 - opts.chi * grad)).max(opts.nu_floor);
        let (powers_next, total_next) = allocated(coeffs, b_rbs, nu_next);
        let delta = powers
            .iter()
            .zip(&powers_next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        nu = nu_next;
        powers = powers_next;
        total = total_next;
        if delta <= eps {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence(format!(
            "power allocation: no fixed point after {} iterations (nu = {nu:.3e})",
            opts.max_iterations
        )));
    }

    // Feasibility polish: walk nu onto the budget surface. P(nu) decreases
    // monotonically in nu, so plain bisection applies.
    if total > p_tot {
        let mut lo = nu; // over-allocated: price too low
        let mut hi = nu;
        for _ in 0..200 {
            hi *= 2.0;
            if allocated(coeffs, b_rbs, hi).1 <= p_tot {
                break;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if allocated(coeffs, b_rbs, mid).1 > p_tot {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        nu = hi;
    } else if total < p_tot * (1.0 - 1e-10) && nu > opts.nu_floor * (1.0 + 1e-9) {
        // Under-allocated with a price above the floor: bring the price down
        // until the budget binds (or the floor is hit, in which case the
        // constraint is genuinely slack).
        let mut hi = nu;
        let mut lo = nu;
        let mut floor_hit = true;
        for _ in 0..200 {
            lo = (lo * 0.5).max(opts.nu_floor);
            if allocated(coeffs, b_rbs, lo).1 >= p_tot {
                floor_hit = false;
                break;
            }
            if lo <= opts.nu_floor {
                break;
            }
        }
        if floor_hit {
            nu = opts.nu_floor;
        } else {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if allocated(coeffs, b_rbs, mid).1 > p_tot {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            nu = hi;
        }
    }
    let (powers, _total) = allocated(coeffs, b_rbs, nu);
    let objective_bps = coeffs
        .iter()
        .zip(&powers)
        .map(|(c, &p)| c.rate_bps(p))
        .sum();
    Ok(PowerAllocation {
        powers_w: powers,
        objective_bps,
        mode,
        nu,
        iterations,
    })
}

/// Same optimum as [`solve`], found by monotone bisection on the dual price
/// instead of the fixed-step subgradient: sum_u b P_u(nu) decreases in nu,
/// so the budget equation has a unique root. Used in simulation hot loops
/// where the subgradient's travel time is too slow; `nu_hint` warm-starts
/// the bracket.
pub fn solve_bisection(
    coeffs: &[PowerCoefficients],
    p_tot: f64,
    b_rbs: u64,
    mode: RateMode,
    nu_hint: Option<f64>,
) -> Result<PowerAllocation> {
    if coeffs.is_empty() {
        return Err(Error::invalid("solve_bisection: no UEs"));
    }
    if !(p_tot > 0.0) || b_rbs == 0 {
        return Err(Error::invalid("solve_bisection: need P_tot > 0 and b >= 1"));
    }
    for c in coeffs {
        c.validate()?;
    }
    let floor = 1e-12;
    let finish = |nu: f64, iterations: usize| -> PowerAllocation {
        let (powers, _) = allocated(coeffs, b_rbs, nu);
        let objective_bps = coeffs
            .iter()
            .zip(&powers)
            .map(|(c, &p)| c.rate_bps(p))
            .sum();
        PowerAllocation {
            powers_w: powers,
            objective_bps,
            mode,
            nu,
            iterations,
        }
    };
    if coeffs.iter().all(|c| c.a <= 0.0) {
        return Ok(finish(floor, 0));
    }
    let mut iterations = 0usize;
    let start = nu_hint.unwrap_or(100.0).max(floor);
    let mut lo = start;
    let mut hi = start;
    // Bracket the budget-binding price.
    while allocated(coeffs, b_rbs, hi).1 > p_tot {
        hi *= 4.0;
        iterations += 1;
        if iterations > 400 {
            return Err(Error::NonConvergence("budget bracket (high side)".into()));
        }
    }
    while allocated(coeffs, b_rbs, lo).1 <= p_tot {
        lo *= 0.25;
        iterations += 1;
        if lo <= floor {
            lo = floor;
            break;
        }
        if iterations > 400 {
            return Err(Error::NonConvergence("budget bracket (low side)".into()));
        }
    }
    if lo <= floor && allocated(coeffs, b_rbs, floor).1 <= p_tot {
        // Budget slack even at the price floor.
        return Ok(finish(floor, iterations));
    }
    for _ in 0..100 {
        iterations += 1;
        let mid = (lo * hi).sqrt();
        if allocated(coeffs, b_rbs, mid).1 > p_tot {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(finish(hi, iterations))
}

/// Equal-split reference allocation (P_tot spread uniformly over the b-RB
/// shares), used as an optimality sanity bound in tests.
pub fn equal_split_objective(coeffs: &[PowerCoefficients], p_tot: f64, b_rbs: u64) -> f64 {
    let p = p_tot / (coeffs.len() as f64 * b_rbs as f64);
    coeffs.iter().map(|c| c.rate_bps(p)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn coeff(a: f64, b: f64, c: f64, w: f64) -> PowerCoefficients {
        PowerCoefficients {
            a,
            b_noise: b,
            c,
            w_eff: w,
        }
    }

    #[test]
    fn closed_form_waterfilling_reduction() {
        // B = 0, A = 1, C = 1, W = 1: P = max(1/(nu ln2) - 1, 0).
        let c = coeff(1.0, 0.0, 1.0, 1.0);
        for nu in [0.1, 0.5, 1.0, 3.0, 100.0] {
            let want = (1.0 / (nu * LN2) - 1.0).max(0.0);
            assert!((closed_form_power(nu, &c).unwrap() - want).abs() < 1e-12);
        }
        // Huge price: clamped to zero.
        assert_eq!(closed_form_power(1e9, &c).unwrap(), 0.0);
        assert!(closed_form_power(0.0, &c).is_err());
    }

    #[test]
    fn closed_form_satisfies_stationarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let c = coeff(
                rng.gen_range(0.1..10.0),
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.2..3.0),
                rng.gen_range(0.5..4.0),
            );
            let nu = rng.gen_range(1e-3..2.0);
            let p = closed_form_power(nu, &c).unwrap();
            if p > 0.0 {
                let res = stationarity_residual(&c, p, nu);
                assert!(
                    res.abs() <= 1e-8 * nu.max(1.0),
                    "residual {res} at nu={nu}, p={p}"
                );
            }
        }
    }

    #[test]
    fn single_ue_takes_full_budget() {
        let c = vec![coeff(5.0, 0.2, 1.0, 1.0)];
        let alloc = solve(&c, 2.0, 4, RateMode::Actual, &SolveOptions::default()).unwrap();
        assert!((alloc.powers_w[0] - 0.5).abs() < 1e-9, "{:?}", alloc.powers_w);
    }

    #[test]
    fn identical_ues_split_evenly() {
        let c = vec![coeff(3.0, 0.1, 1.0, 1.0); 2];
        let alloc = solve(&c, 1.0, 3, RateMode::Expected, &SolveOptions::default()).unwrap();
        assert!((alloc.powers_w[0] - alloc.powers_w[1]).abs() < 1e-9);
        let total = 3.0 * (alloc.powers_w[0] + alloc.powers_w[1]);
        assert!((total - 1.0).abs() < 1e-9);
    }

    /// Brute-force reference: scan the binding face of the power simplex.
    fn grid_best_objective(coeffs: &[PowerCoefficients], p_tot: f64, b_rbs: u64) -> f64 {
        let b = b_rbs as f64;
        let steps = 1000usize;
        let mut best = f64::NEG_INFINITY;
        match coeffs.len() {
            2 => {
                for i in 0..=steps {
                    let x0 = p_tot * i as f64 / steps as f64;
                    let p0 = x0 / b;
                    let p1 = (p_tot - x0) / b;
                    best = best.max(coeffs[0].rate_bps(p0) + coeffs[1].rate_bps(p1));
                }
            }
            3 => {
                for i in 0..=steps {
                    for j in 0..=(steps - i) {
                        let p0 = p_tot * i as f64 / steps as f64 / b;
                        let p1 = p_tot * j as f64 / steps as f64 / b;
                        let p2 = p_tot * (steps - i - j) as f64 / steps as f64 / b;
                        best = best.max(
                            coeffs[0].rate_bps(p0)
                                + coeffs[1].rate_bps(p1)
                                + coeffs[2].rate_bps(p2),
                        );
                    }
                }
            }
            _ => unreachable!(),
        }
        best
    }

    #[test]
    fn asymmetric_two_ue_matches_grid() {
        let coeffs = vec![coeff(10.0, 0.0, 1.0, 1.0), coeff(1.0, 0.0, 1.0, 1.0)];
        let alloc = solve(&coeffs, 1.0, 1, RateMode::Actual, &SolveOptions::default()).unwrap();
        let grid = grid_best_objective(&coeffs, 1.0, 1);
        assert!(
            alloc.objective_bps >= grid * (1.0 - 1e-3),
            "solve {} vs grid {grid}",
            alloc.objective_bps
        );
    }

    #[test]
    fn random_instances_beat_equal_split_and_close_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for trial in 0..10 {
            let u = 2 + trial % 2;
            let coeffs: Vec<PowerCoefficients> = (0..u)
                .map(|_| {
                    coeff(
                        rng.gen_range(0.5..10.0),
                        rng.gen_range(0.0..0.5),
                        rng.gen_range(0.5..2.0),
                        1.0,
                    )
                })
                .collect();
            let alloc = solve(&coeffs, 1.0, 1, RateMode::Actual, &SolveOptions::default()).unwrap();
            // Feasible.
            assert!(alloc.powers_w.iter().all(|&p| p >= 0.0));
            let total: f64 = alloc.powers_w.iter().sum();
            assert!(total <= 1.0 + 1e-9);
            // At least as good as equal split.
            let eq = equal_split_objective(&coeffs, 1.0, 1);
            assert!(alloc.objective_bps >= eq - 1e-9);
            // Close to brute force.
            let grid = grid_best_objective(&coeffs, 1.0, 1);
            assert!(
                alloc.objective_bps >= grid * (1.0 - 1e-3),
                "trial {trial}: {} vs {grid}",
                alloc.objective_bps
            );
            // KKT residual.
            for (c, &p) in coeffs.iter().zip(&alloc.powers_w) {
                if p > 0.0 {
                    assert!(stationarity_residual(c, p, alloc.nu).abs() <= 1e-6 * alloc.nu);
                }
            }
        }
    }

    #[test]
    fn zero_gain_instance_rests_at_floor() {
        let coeffs = vec![coeff(0.0, 0.3, 1.0, 1.0); 2];
        let alloc = solve(&coeffs, 1.0, 1, RateMode::Actual, &SolveOptions::default()).unwrap();
        assert!(alloc.powers_w.iter().all(|&p| p == 0.0));
        assert!(alloc.nu <= 1e-12 * 1.001);
        assert_eq!(alloc.objective_bps, 0.0);
    }

    #[test]
    fn duality_gap_small_on_random_three_ue() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..8 {
            let coeffs: Vec<PowerCoefficients> = (0..3)
                .map(|_| {
                    coeff(
                        rng.gen_range(0.5..8.0),
                        rng.gen_range(0.0..0.4),
                        rng.gen_range(0.5..2.0),
                        rng.gen_range(0.5..2.0),
                    )
                })
                .collect();
            let alloc = solve(&coeffs, 1.0, 2, RateMode::Actual, &SolveOptions::default()).unwrap();
            let dual = dual_value(&coeffs, 1.0, 2, alloc.nu);
            let gap = (dual - alloc.objective_bps) / alloc.objective_bps.abs().max(1e-12);
            assert!(gap >= -1e-9, "dual below primal: {gap}");
            assert!(gap <= 1e-4, "duality gap too large: {gap}");
        }
    }

    #[test]
    fn complementary_slackness_at_floor() {
        // A tiny budget appetite: price floor with slack constraint only
        // happens when no UE wants power, covered above; here verify the
        // binding case reports nu above floor.
        let coeffs = vec![coeff(4.0, 0.1, 1.0, 1.0); 3];
        let alloc = solve(&coeffs, 0.5, 1, RateMode::Actual, &SolveOptions::default()).unwrap();
        let total: f64 = alloc.powers_w.iter().sum();
        assert!((total - 0.5).abs() < 1e-9);
        assert!(alloc.nu > 1e-6);
    }

    #[test]
    fn bisection_route_matches_subgradient_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let u = 2 + (rng.gen::<u32>() % 3) as usize;
            let coeffs: Vec<PowerCoefficients> = (0..u)
                .map(|_| {
                    coeff(
                        rng.gen_range(0.0..8.0),
                        rng.gen_range(0.0..0.5),
                        rng.gen_range(0.3..2.0),
                        rng.gen_range(0.5..3.0),
                    )
                })
                .collect();
            let a = solve(&coeffs, 1.0, 2, RateMode::Actual, &SolveOptions::default()).unwrap();
            let b = solve_bisection(&coeffs, 1.0, 2, RateMode::Actual, None).unwrap();
            assert!(
                (a.objective_bps - b.objective_bps).abs()
                    <= 1e-6 * a.objective_bps.abs().max(1e-12),
                "objectives diverge: {} vs {}",
                a.objective_bps,
                b.objective_bps
            );
            for (pa, pb) in a.powers_w.iter().zip(&b.powers_w) {
                assert!((pa - pb).abs() < 1e-6, "powers diverge: {pa} vs {pb}");
            }
            let total: f64 = b.powers_w.iter().sum::<f64>() * 2.0;
            assert!(total <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn warm_start_agrees_with_cold_start() {
        let coeffs = vec![coeff(2.0, 0.05, 1.0, 1.0), coeff(6.0, 0.2, 0.8, 1.0)];
        let cold = solve(&coeffs, 1.0, 1, RateMode::Actual, &SolveOptions::default()).unwrap();
        let warm = solve(
            &coeffs,
            1.0,
            1,
            RateMode::Actual,
            &SolveOptions::warm(cold.nu),
        )
        .unwrap();
        for (a, b) in cold.powers_w.iter().zip(&warm.powers_w) {
            assert!((a - b).abs() < 1e-7);
        }
        assert!(warm.iterations <= cold.iterations);
    }
}
