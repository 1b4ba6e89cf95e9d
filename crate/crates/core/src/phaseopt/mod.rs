//! Max-min channel-gain RIS phase optimization.
//!
//! The unit-modulus phase vector is lifted to a PSD matrix with unit
//! diagonal, the resulting semidefinite program is solved by a
//! primal-dual interior-point method (or a low-rank factorization ascent
//! for large element counts), and a rank-1 phase vector is recovered by
//! Gaussian randomization.
//!
//! Conventions: the per-UE channel is summarized by `theta_u` (element-wise
//! cascaded amplitudes) and a direct term `d_u`; the gain of a phase vector
//! `s` at UE u is |s^H theta_u + d_u|^2. The physical RIS reflection
//! coefficients are the conjugates of `s` (see [`PhaseSolution::ris_phases`]).

mod ipm;
mod lowrank;

pub use ipm::{solve_sdp, IpmOptions};
pub use lowrank::{solve_lowrank, LowRankOptions};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};

/// Channel data for one phase-optimization instance.
#[derive(Debug, Clone)]
pub struct PhaseProblem {
    /// theta_u = diag(rho_u * g'_u) h, one M-vector per UE.
    pub theta: Vec<Vec<Complex64>>,
    /// d_u = rho_u0 * sqrt(1/beta_u0) * hat h_u0.
    pub direct: Vec<Complex64>,
}

impl PhaseProblem {
    pub fn num_ues(&self) -> usize {
        self.theta.len()
    }

    pub fn num_elements(&self) -> usize {
        self.theta.first().map_or(0, |t| t.len())
    }

    /// |s^H theta_u + d_u|^2 for every UE.
    pub fn gains(&self, s: &[Complex64]) -> Vec<f64> {
        self.theta
            .iter()
            .zip(&self.direct)
            .map(|(theta, d)| {
                let mut acc = *d;
                for (sm, th) in s.iter().zip(theta) {
                    acc += sm.conj() * th;
                }
                acc.norm_sqr()
            })
            .collect()
    }

    pub fn min_gain(&self, s: &[Complex64]) -> f64 {
        self.gains(s).into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Stacked vector a_u = [theta_u; d_u] used by both solvers.
    pub(crate) fn stacked(&self, u: usize) -> Vec<Complex64> {
        let mut a = self.theta[u].clone();
        a.push(self.direct[u]);
        a
    }
}

/// Build the per-UE phase problem from channel estimates and the slot's
/// correlation coefficients (rho_cascaded, rho_direct) per UE.
pub fn build_problem(
    channels: &ChannelRealization,
    rhos: &[(f64, f64)],
) -> Result<PhaseProblem> {
    channels.validate()?;
    let u = channels.num_ues();
    if rhos.len() != u {
        return Err(Error::invalid(format!(
            "build_problem: {u} UEs but {} correlation pairs",
            rhos.len()
        )));
    }
    let m = channels.num_elements();
    let mut theta = Vec::with_capacity(u);
    let mut direct = Vec::with_capacity(u);
    for ue in 0..u {
        let (rho_c, rho_d) = rhos[ue];
        let casc_scale = rho_c * (1.0 / channels.beta_cascaded[ue]).sqrt();
        let mut t = Vec::with_capacity(m);
        for i in 0..m {
            t.push(casc_scale * channels.g_ris_hat[ue][i] * channels.h_gnb_ris[i]);
        }
        theta.push(t);
        direct.push(
            rho_d * (1.0 / channels.beta_direct[ue]).sqrt() * channels.h_direct_hat[ue],
        );
    }
    Ok(PhaseProblem { theta, direct })
}

/// Lifted constraint matrices X_u: Hermitian (M+1) x (M+1) with blocks
/// [[theta theta^H, theta d^*], [d theta^H, 0]].
pub fn build_lifted(problem: &PhaseProblem) -> Vec<DMatrix<Complex64>> {
    let m = problem.num_elements();
    let n = m + 1;
    problem
        .theta
        .iter()
        .zip(&problem.direct)
        .map(|(theta, d)| {
            let mut x = DMatrix::<Complex64>::zeros(n, n);
            for i in 0..m {
                for j in 0..m {
                    x[(i, j)] = theta[i] * theta[j].conj();
                }
                x[(i, m)] = theta[i] * d.conj();
                x[(m, i)] = *d * theta[i].conj();
            }
            x
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    Optimal,
    MaxIter,
    Fallback,
}

/// Optimized phases plus the relaxation bound they were recovered from.
#[derive(Debug, Clone)]
pub struct PhaseSolution {
    /// Unit-modulus phase vector of length M.
    pub s: Vec<Complex64>,
    /// SDP optimum (interior-point path) or a certified upper bound
    /// (low-rank path).
    pub xi_star: f64,
    /// min_u |s^H theta_u + d_u|^2 achieved by `s`.
    pub achieved_gain: f64,
    pub per_ue_gain: Vec<f64>,
    pub solver_status: SolverStatus,
}

impl PhaseSolution {
    /// Reflection coefficients to apply at the RIS so that the combined
    /// amplitude of UE u equals s^H theta_u + d_u.
    pub fn ris_phases(&self) -> Vec<Complex64> {
        self.s.iter().map(|z| z.conj()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseSolver {
    /// Interior point while the lifted dimension M+1 stays within
    /// [`AUTO_IPM_LIMIT`], low-rank ascent beyond.
    Auto,
    InteriorPoint,
    LowRank,
}

/// Largest lifted dimension the Auto policy hands to the interior-point
/// solver.
pub const AUTO_IPM_LIMIT: usize = 64;

#[derive(Debug, Clone)]
pub struct PhaseOptConfig {
    pub solver: PhaseSolver,
    pub randomization_trials: usize,
    pub ipm: IpmOptions,
    pub lowrank: LowRankOptions,
}

impl Default for PhaseOptConfig {
    fn default() -> Self {
        PhaseOptConfig {
            solver: PhaseSolver::Auto,
            randomization_trials: 200,
            ipm: IpmOptions::default(),
            lowrank: LowRankOptions::default(),
        }
    }
}

/// Exact single-UE optimum: co-phase every element with the direct path.
/// Also serves as the large-M fallback when only one UE is active.
pub fn align_single_ue(problem: &PhaseProblem) -> Result<PhaseSolution> {
    if problem.num_ues() != 1 {
        return Err(Error::invalid(format!(
            "align_single_ue: needs exactly one UE, got {}",
            problem.num_ues()
        )));
    }
    let theta = &problem.theta[0];
    let d = problem.direct[0];
    let ref_phase = if d.norm() > 0.0 { d.arg() } else { 0.0 };
    let s: Vec<Complex64> = theta
        .iter()
        .map(|t| Complex64::from_polar(1.0, t.arg() - ref_phase))
        .collect();
    let gain = (theta.iter().map(|t| t.norm()).sum::<f64>() + d.norm()).powi(2);
    Ok(PhaseSolution {
        xi_star: gain,
        achieved_gain: gain,
        per_ue_gain: vec![gain],
        s,
        solver_status: SolverStatus::Optimal,
    })
}

/// Project a lifted candidate vector to unit modulus, rotating the phase
/// reference so the auxiliary coordinate becomes 1. Implemented with
/// magnitude normalization rather than arg/exp.
fn project_candidate(v: &[Complex64]) -> Vec<Complex64> {
    let m = v.len() - 1;
    let unit = |z: Complex64| -> Complex64 {
        let norm = z.norm();
        if norm > 0.0 {
            z / Complex64::from(norm)
        } else {
            Complex64::new(1.0, 0.0)
        }
    };
    let ref_conj = unit(v[m]).conj();
    v[..m].iter().map(|&z| unit(z) * ref_conj).collect()
}

/// Gaussian randomization: draw `count` vectors with covariance S, project
/// each to unit modulus and keep the best by min-UE gain. A deterministic
/// candidate from the dominant eigenvector of S is always included.
pub fn gaussian_randomize<R: Rng + ?Sized>(
    s_matrix: &DMatrix<Complex64>,
    problem: &PhaseProblem,
    count: usize,
    rng: &mut R,
    xi_star: f64,
    status: SolverStatus,
) -> PhaseSolution {
    let n = s_matrix.nrows();
    let eig = nalgebra::SymmetricEigen::new(s_matrix.clone());
    // Factor F with F F^H = S (negative eigenvalues clamped: S is PSD up to
    // roundoff).
    let mut factor = eig.eigenvectors.clone();
    let mut dominant_idx = 0usize;
    let mut dominant_val = f64::NEG_INFINITY;
    for j in 0..n {
        let lam = eig.eigenvalues[j].max(0.0);
        if eig.eigenvalues[j] > dominant_val {
            dominant_val = eig.eigenvalues[j];
            dominant_idx = j;
        }
        let scale = lam.sqrt();
        for i in 0..n {
            factor[(i, j)] *= Complex64::new(scale, 0.0);
        }
    }

    let top: Vec<Complex64> = (0..n).map(|i| eig.eigenvectors[(i, dominant_idx)]).collect();
    let mut best_s = project_candidate(&top);
    let mut best_gain = problem.min_gain(&best_s);

    let normal = rand_distr::Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("std");
    let mut draw = vec![Complex64::new(0.0, 0.0); n];
    for _ in 0..count {
        for slot in draw.iter_mut() {
            *slot = Complex64::new(
                rand_distr::Distribution::sample(&normal, rng),
                rand_distr::Distribution::sample(&normal, rng),
            );
        }
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            let zj = draw[j];
            for i in 0..n {
                v[i] += factor[(i, j)] * zj;
            }
        }
        let cand = project_candidate(&v);
        let gain = problem.min_gain(&cand);
        if gain > best_gain {
            best_gain = gain;
            best_s = cand;
        }
    }

    let per_ue_gain = problem.gains(&best_s);
    PhaseSolution {
        s: best_s,
        xi_star,
        achieved_gain: best_gain,
        per_ue_gain,
        solver_status: status,
    }
}

/// Full pipeline: exact alignment for a single UE, otherwise relaxation
/// (interior point or low-rank ascent) followed by randomization.
pub fn optimize<R: Rng + ?Sized>(
    problem: &PhaseProblem,
    cfg: &PhaseOptConfig,
    rng: &mut R,
) -> Result<PhaseSolution> {
    let u = problem.num_ues();
    if u == 0 {
        return Err(Error::invalid("optimize: no UEs"));
    }
    if u == 1 {
        return align_single_ue(problem);
    }
    let n = problem.num_elements() + 1;
    let solver = match cfg.solver {
        PhaseSolver::Auto => {
            if n <= AUTO_IPM_LIMIT {
                PhaseSolver::InteriorPoint
            } else {
                PhaseSolver::LowRank
            }
        }
        s => s,
    };
    match solver {
        PhaseSolver::InteriorPoint => {
            let lifted = build_lifted(problem);
            let direct_gains: Vec<f64> = problem.direct.iter().map(|d| d.norm_sqr()).collect();
            let (s_mat, xi, status) = solve_sdp(&lifted, &direct_gains, &cfg.ipm)?;
            Ok(gaussian_randomize(
                &s_mat,
                problem,
                cfg.randomization_trials,
                rng,
                xi,
                status,
            ))
        }
        PhaseSolver::LowRank => {
            let out = solve_lowrank(problem, &cfg.lowrank, rng)?;
            Ok(lowrank::randomize_from_factor(
                &out,
                problem,
                cfg.randomization_trials,
                rng,
            ))
        }
        PhaseSolver::Auto => unreachable!(),
    }
}

#[cfg(test)]
mod tests;
