//! Low-rank factorization ascent for the max-min phase SDP, used when the
//! lifted dimension outgrows the interior-point solver's budget (and as the
//! fast path inside episode loops).
//!
//! The PSD variable is parameterized as S = V^H V with unit-norm columns of
//! V (rank r), under which every UE constraint collapses to
//! tr(X_u S) + c_u = ||V a_u||^2 with a_u = [theta_u; d_u]. The smoothed
//! min-gain is maximized by projected gradient ascent with a decaying
//! soft-min temperature and a couple of restarts. The reported `xi` is a
//! certified upper bound from a cheap dual point, never the (possibly
//! suboptimal) ascent value itself.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{PhaseProblem, PhaseSolution, SolverStatus};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LowRankOptions {
    /// Factor rank; defaults to ceil(sqrt(2U)) when unset.
    pub rank: Option<usize>,
    pub max_iterations: usize,
    pub restarts: usize,
}

impl Default for LowRankOptions {
    fn default() -> Self {
        LowRankOptions {
            rank: None,
            max_iterations: 150,
            restarts: 2,
        }
    }
}

/// Row-major r x n factor with unit-norm columns; S = V^H V.
#[derive(Debug, Clone)]
pub struct LowRankFactor {
    pub rows: Vec<Vec<Complex64>>,
    /// Certified upper bound on the SDP optimum.
    pub upper_bound: f64,
    /// min_u ||V a_u||^2 at the returned factor.
    pub attained: f64,
}

fn normalize_columns(rows: &mut [Vec<Complex64>]) {
    let n = rows[0].len();
    for j in 0..n {
        let mut norm_sq = 0.0;
        for row in rows.iter() {
            norm_sq += row[j].norm_sqr();
        }
        if norm_sq > 0.0 {
            let inv = 1.0 / norm_sq.sqrt();
            for row in rows.iter_mut() {
                row[j] *= Complex64::from(inv);
            }
        } else {
            rows[0][j] = Complex64::new(1.0, 0.0);
        }
    }
}

/// V a_u for every row, then the squared norms per UE.
fn constraint_values(rows: &[Vec<Complex64>], stacked: &[Vec<Complex64>]) -> Vec<f64> {
    stacked
        .iter()
        .map(|a| {
            let mut acc = 0.0;
            for row in rows {
                let mut dot = Complex64::new(0.0, 0.0);
                for (v, x) in row.iter().zip(a) {
                    dot += v * x;
                }
                acc += dot.norm_sqr();
            }
            acc
        })
        .collect()
}

/// Dual upper bound n * lambda_max(sum_u lam_u a_u a_u^H) + sum_u lam_u c_u
/// minimized over a few candidate weightings on the simplex. The Gram trick
/// keeps the eigenproblem at U x U.
fn dual_bound(problem: &PhaseProblem, stacked: &[Vec<Complex64>], weight_sets: &[Vec<f64>]) -> f64 {
    let n = problem.num_elements() + 1;
    let u_count = problem.num_ues();
    let mut best = f64::INFINITY;
    for lam in weight_sets {
        let mut gram = DMatrix::<Complex64>::zeros(u_count, u_count);
        for i in 0..u_count {
            for j in 0..u_count {
                let mut dot = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    dot += stacked[i][k].conj() * stacked[j][k];
                }
                gram[(i, j)] = dot * Complex64::from((lam[i] * lam[j]).sqrt());
            }
        }
        let lam_max = nalgebra::SymmetricEigen::new(gram)
            .eigenvalues
            .iter()
            .cloned()
            .fold(0.0f64, f64::max);
        let cost = n as f64 * lam_max
            + lam
                .iter()
                .zip(&problem.direct)
                .map(|(&w, d)| w * d.norm_sqr())
                .sum::<f64>();
        best = best.min(cost);
    }
    best
}

/// Dominant direction of sum_u a_u a_u^H / ||a_u||^2 by power iteration,
/// never forming the n x n matrix.
fn top_direction(stacked: &[Vec<Complex64>], n: usize) -> Vec<Complex64> {
    let weights: Vec<f64> = stacked
        .iter()
        .map(|a| {
            let s: f64 = a.iter().map(|z| z.norm_sqr()).sum();
            if s > 0.0 {
                1.0 / s
            } else {
                0.0
            }
        })
        .collect();
    let mut x: Vec<Complex64> = stacked[0].clone();
    if x.iter().all(|z| z.norm_sqr() == 0.0) {
        x[0] = Complex64::new(1.0, 0.0);
    }
    for _ in 0..25 {
        let mut next = vec![Complex64::new(0.0, 0.0); n];
        for (a, &w) in stacked.iter().zip(&weights) {
            let mut dot = Complex64::new(0.0, 0.0);
            for (ai, xi) in a.iter().zip(&x) {
                dot += ai.conj() * xi;
            }
            let lead = dot * Complex64::from(w);
            for (ni, ai) in next.iter_mut().zip(a) {
                *ni += ai * lead;
            }
        }
        let norm = next.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm <= 1e-300 {
            break;
        }
        for z in next.iter_mut() {
            *z /= Complex64::from(norm);
        }
        x = next;
    }
    x
}

pub fn solve_lowrank<R: Rng + ?Sized>(
    problem: &PhaseProblem,
    opts: &LowRankOptions,
    rng: &mut R,
) -> Result<LowRankFactor> {
    let u_count = problem.num_ues();
    let n = problem.num_elements() + 1;
    if u_count == 0 {
        return Err(Error::invalid("solve_lowrank: no UEs"));
    }
    let rank = opts
        .rank
        .unwrap_or_else(|| ((2.0 * u_count as f64).sqrt().ceil() as usize).max(2))
        .min(n);
    let stacked: Vec<Vec<Complex64>> = (0..u_count).map(|u| problem.stacked(u)).collect();
    let gain_scale = stacked
        .iter()
        .map(|a| a.iter().map(|z| z.norm_sqr()).sum::<f64>())
        .fold(0.0f64, f64::max)
        .max(1e-300);

    let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("std");
    let mut best_rows: Option<Vec<Vec<Complex64>>> = None;
    let mut best_min = f64::NEG_INFINITY;
    let mut final_weights = vec![1.0 / u_count as f64; u_count];

    let mut va = vec![Complex64::new(0.0, 0.0); rank];
    for restart in 0..opts.restarts.max(1) {
        let mut rows: Vec<Vec<Complex64>> = if restart == 0 {
            // First row along the dominant channel direction, the rest random.
            let mut rows = vec![top_direction(&stacked, n)];
            for _ in 1..rank {
                rows.push(
                    (0..n)
                        .map(|_| Complex64::new(normal.sample(rng), normal.sample(rng)))
                        .collect(),
                );
            }
            rows
        } else {
            (0..rank)
                .map(|_| {
                    (0..n)
                        .map(|_| Complex64::new(normal.sample(rng), normal.sample(rng)))
                        .collect()
                })
                .collect()
        };
        normalize_columns(&mut rows);

        let mut step = 0.5;
        let mut grad: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); n]; rank];
        for iter in 0..opts.max_iterations {
            let gains = constraint_values(&rows, &stacked);
            let g_min = gains.iter().cloned().fold(f64::INFINITY, f64::min);
            if g_min > best_min {
                best_min = g_min;
                best_rows = Some(rows.clone());
            }
            // Soft-min weights with a decaying temperature.
            let tau = (0.25 * gain_scale * 0.97f64.powi(iter as i32)).max(1e-9 * gain_scale);
            let mut weights: Vec<f64> = gains.iter().map(|g| (-(g - g_min) / tau).exp()).collect();
            let wsum: f64 = weights.iter().sum();
            for w in weights.iter_mut() {
                *w /= wsum;
            }
            if iter + 1 == opts.max_iterations {
                final_weights = weights.clone();
            }
            // Gradient sum_u w_u (V a_u) a_u^H, Frobenius-normalized step.
            for row in grad.iter_mut() {
                for z in row.iter_mut() {
                    *z = Complex64::new(0.0, 0.0);
                }
            }
            let mut grad_norm_sq = 0.0;
            for (a, &w) in stacked.iter().zip(&weights) {
                for (vi, row) in va.iter_mut().zip(&rows) {
                    let mut dot = Complex64::new(0.0, 0.0);
                    for (v, x) in row.iter().zip(a) {
                        dot += v * x;
                    }
                    *vi = dot;
                }
                for (gi, row) in grad.iter_mut().zip(&va) {
                    let lead = row * Complex64::from(w);
                    for (g, ai) in gi.iter_mut().zip(a) {
                        *g += lead * ai.conj();
                    }
                }
            }
            for row in &grad {
                for z in row {
                    grad_norm_sq += z.norm_sqr();
                }
            }
            if grad_norm_sq <= 1e-30 * gain_scale {
                break;
            }
            let scale = step * (n as f64).sqrt() / grad_norm_sq.sqrt();
            for (row, grow) in rows.iter_mut().zip(&grad) {
                for (v, g) in row.iter_mut().zip(grow) {
                    *v += g * Complex64::from(scale);
                }
            }
            normalize_columns(&mut rows);
            step *= 0.985;
        }
    }

    let rows = best_rows.expect("at least one iterate");
    // Candidate dual weightings: uniform, the final soft-min weights, and
    // the indicator of the binding constraint.
    let gains = constraint_values(&rows, &stacked);
    let argmin = gains
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut one_hot = vec![0.0; u_count];
    one_hot[argmin] = 1.0;
    let uniform = vec![1.0 / u_count as f64; u_count];
    let bound = dual_bound(problem, &stacked, &[uniform, final_weights, one_hot]);

    Ok(LowRankFactor {
        rows,
        upper_bound: bound,
        attained: best_min,
    })
}

/// Randomization that samples directly from the factor (v = V^H z with
/// z ~ CN(0, I_r)), so each trial costs O(n r). Row candidates of V and the
/// dominant right-singular direction are included deterministically.
pub(crate) fn randomize_from_factor<R: Rng + ?Sized>(
    out: &LowRankFactor,
    problem: &PhaseProblem,
    count: usize,
    rng: &mut R,
) -> PhaseSolution {
    let rank = out.rows.len();
    let n = out.rows[0].len();
    let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("std");

    let mut best_s: Option<Vec<Complex64>> = None;
    let mut best_gain = f64::NEG_INFINITY;
    let mut consider = |v: &[Complex64]| {
        let cand = super::project_candidate(v);
        let gain = problem.min_gain(&cand);
        if gain > best_gain {
            best_gain = gain;
            best_s = Some(cand);
        }
    };

    // Deterministic candidates: each factor row, plus a few power
    // iterations toward the top singular direction of V.
    let mut row_conj = vec![Complex64::new(0.0, 0.0); n];
    for row in &out.rows {
        for (slot, v) in row_conj.iter_mut().zip(row) {
            *slot = v.conj();
        }
        consider(&row_conj);
    }
    let mut x: Vec<Complex64> = out.rows[0].iter().map(|z| z.conj()).collect();
    for _ in 0..15 {
        let mut vx = vec![Complex64::new(0.0, 0.0); rank];
        for (vi, row) in vx.iter_mut().zip(&out.rows) {
            for (v, xi) in row.iter().zip(&x) {
                *vi += v * xi;
            }
        }
        let mut next = vec![Complex64::new(0.0, 0.0); n];
        for (row, vi) in out.rows.iter().zip(&vx) {
            for (slot, v) in next.iter_mut().zip(row) {
                *slot += v.conj() * vi;
            }
        }
        let norm = next.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
        for z in next.iter_mut() {
            *z /= Complex64::from(norm);
        }
        x = next;
    }
    consider(&x);

    let mut v = vec![Complex64::new(0.0, 0.0); n];
    let mut z = vec![Complex64::new(0.0, 0.0); rank];
    for _ in 0..count {
        for zi in z.iter_mut() {
            *zi = Complex64::new(normal.sample(rng), normal.sample(rng));
        }
        for slot in v.iter_mut() {
            *slot = Complex64::new(0.0, 0.0);
        }
        for (row, zi) in out.rows.iter().zip(&z) {
            for (slot, vi) in v.iter_mut().zip(row) {
                *slot += vi.conj() * zi;
            }
        }
        consider(&v);
    }

    let s = best_s.expect("candidates were evaluated");
    let per_ue_gain = problem.gains(&s);
    PhaseSolution {
        achieved_gain: best_gain,
        per_ue_gain,
        s,
        xi_star: out.upper_bound,
        solver_status: SolverStatus::Fallback,
    }
}
