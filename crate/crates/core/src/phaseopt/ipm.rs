//! Primal-dual interior-point solver for the max-min phase-shift SDP:
//!
//!   max  xi
//!   s.t. tr(X_u S) + c_u >= xi   (u = 1..U)
//!        S_mm = 1                (m = 1..n)
//!        S PSD Hermitian, xi >= 0
//!
//! The constraint structure is fixed (diagonal equalities, one PSD block, U
//! linear inequalities with slacks), so the solver is specialized: the
//! Schur complement has dimension n + U and is assembled directly from
//! Z^{-1} and S. Directions are HKM with a Mehrotra predictor-corrector;
//! both primal and dual starts are strictly feasible, so the iteration is
//! purely a complementarity-gap reduction.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::SolverStatus;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct IpmOptions {
    /// Relative complementarity-gap tolerance.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for IpmOptions {
    fn default() -> Self {
        IpmOptions {
            tolerance: 1e-9,
            max_iterations: 100,
        }
    }
}

type CMat = DMatrix<Complex64>;

fn hsym(m: &CMat) -> CMat {
    (m + m.adjoint()).map(|z| 0.5 * z)
}

fn re_inner(a: &CMat, b: &CMat) -> f64 {
    // Re tr(A^H B) for Hermitian A equals Re tr(A B).
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x.re * y.re + x.im * y.im;
    }
    acc
}

/// Largest alpha in (0, 1] with M + alpha * dM PSD, via the minimum
/// eigenvalue of L^{-1} dM L^{-H} where M = L L^H.
fn max_psd_step(m: &CMat, dm: &CMat) -> Result<f64> {
    let chol = nalgebra::Cholesky::new(m.clone())
        .ok_or_else(|| Error::NonConvergence("interior iterate lost definiteness".into()))?;
    let l = chol.l();
    let x = l
        .clone()
        .solve_lower_triangular(dm)
        .ok_or_else(|| Error::NonConvergence("singular triangular factor".into()))?;
    // y = x * L^{-H}  <=>  y^H = L^{-1} x^H
    let xh = x.adjoint();
    let yh = l
        .solve_lower_triangular(&xh)
        .ok_or_else(|| Error::NonConvergence("singular triangular factor".into()))?;
    let y = hsym(&yh.adjoint());
    let eig = nalgebra::SymmetricEigen::new(y);
    let lam_min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if lam_min >= 0.0 {
        Ok(1.0)
    } else {
        Ok((-1.0 / lam_min).min(1.0))
    }
}

fn max_ratio_step(x: &[f64], dx: &[f64]) -> f64 {
    let mut alpha = 1.0f64;
    for (&v, &d) in x.iter().zip(dx) {
        if d < 0.0 {
            alpha = alpha.min(-v / d);
        }
    }
    alpha
}

struct Directions {
    dy: DVector<f64>,
    ds_mat: CMat,
    dz_mat: CMat,
    dxi: f64,
    dslack: Vec<f64>,
    dzxi: f64,
    dzs: Vec<f64>,
}

/// Solve the max-min SDP. Returns the PSD matrix S, the optimum xi and the
/// solver status (MaxIter carries the best feasible iterate reached).
pub fn solve_sdp(
    lifted: &[CMat],
    direct_gains: &[f64],
    opts: &IpmOptions,
) -> Result<(CMat, f64, SolverStatus)> {
    let u_count = lifted.len();
    if u_count == 0 || direct_gains.len() != u_count {
        return Err(Error::invalid(
            "solve_sdp: need one lifted matrix and one direct gain per UE",
        ));
    }
    let n = lifted[0].nrows();
    if lifted.iter().any(|x| x.nrows() != n || x.ncols() != n) {
        return Err(Error::invalid("solve_sdp: lifted matrices must share shape"));
    }

    // Constraint margins at S = I decide the strictly feasible start; if a
    // UE has neither a reflected nor a direct path the optimum is pinned at
    // zero and the interior is empty.
    let margins: Vec<f64> = lifted
        .iter()
        .zip(direct_gains)
        .map(|(x, &c)| x.diagonal().iter().map(|z| z.re).sum::<f64>() + c)
        .collect();
    let min_margin = margins.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = margins.iter().cloned().fold(0.0f64, f64::max).max(1.0);
    if min_margin <= 1e-14 * scale {
        return Ok((CMat::identity(n, n), 0.0, SolverStatus::Optimal));
    }

    let m_total = n + u_count;

    // Primal start: S = I, xi = min_margin / 2, slacks make constraints tight.
    let mut s_mat = CMat::identity(n, n);
    let mut xi = 0.5 * min_margin;
    let mut slack: Vec<f64> = margins.iter().map(|&mg| mg - xi).collect();

    // Dual start: yu = 2/U each (sum 2 > 1), yd chosen to dominate.
    let mut yu = vec![2.0 / u_count as f64; u_count];
    let mut weighted = CMat::zeros(n, n);
    for (x, &w) in lifted.iter().zip(&yu) {
        weighted += x.map(|z| z * w);
    }
    let lam_max = nalgebra::SymmetricEigen::new(hsym(&weighted))
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let shift = lam_max.max(0.0) + 1.0 + 0.1 * scale;
    let mut yd = vec![-shift; n];
    let mut z_mat = CMat::identity(n, n).map(|z| z * shift) - &weighted;
    let mut zxi = yu.iter().sum::<f64>() - 1.0;
    let mut zs = yu.clone();

    let mut status = SolverStatus::MaxIter;

    for _iter in 0..opts.max_iterations {
        // Complementarity gap across all three cones.
        let gap_sdp = re_inner(&s_mat, &z_mat);
        let gap_lp = xi * zxi + slack.iter().zip(&zs).map(|(a, b)| a * b).sum::<f64>();
        let mu = (gap_sdp + gap_lp) / (n + 1 + u_count) as f64;
        if mu <= opts.tolerance * (1.0 + xi.abs()) * scale.max(1.0) {
            status = SolverStatus::Optimal;
            break;
        }

        let z_chol = nalgebra::Cholesky::new(z_mat.clone())
            .ok_or_else(|| Error::NonConvergence("dual slack lost definiteness".into()))?;
        let z_inv = z_chol.inverse();

        // Residuals (stay near machine zero: both starts are feasible).
        let mut rp = DVector::<f64>::zeros(m_total);
        for i in 0..n {
            rp[i] = 1.0 - s_mat[(i, i)].re;
        }
        for u in 0..u_count {
            let lhs = re_inner(&lifted[u], &s_mat) - xi - slack[u];
            rp[n + u] = -direct_gains[u] - lhs;
        }
        let mut rd_mat = CMat::zeros(n, n);
        for i in 0..n {
            rd_mat[(i, i)] -= Complex64::new(yd[i], 0.0);
        }
        for (x, &w) in lifted.iter().zip(&yu) {
            rd_mat += x.map(|z| z * (-w));
        }
        rd_mat -= &z_mat;
        let rd_xi = yu.iter().sum::<f64>() - 1.0 - zxi;
        let rd_s: Vec<f64> = yu.iter().zip(&zs).map(|(a, b)| a - b).collect();

        // Schur complement B over (diag rows, UE rows).
        let mut b = DMatrix::<f64>::zeros(m_total, m_total);
        // diag-diag block: Re(Zinv_ij * conj(S_ij)).
        for i in 0..n {
            for j in 0..n {
                let zi = z_inv[(i, j)];
                let sj = s_mat[(i, j)];
                b[(i, j)] = zi.re * sj.re + zi.im * sj.im;
            }
        }
        // r_u = S X_u Zinv; diag gives the mixed block, traces the UE block.
        let mut r_mats: Vec<CMat> = Vec::with_capacity(u_count);
        for x in lifted {
            r_mats.push(&s_mat * x * &z_inv);
        }
        for u in 0..u_count {
            for j in 0..n {
                let val = r_mats[u][(j, j)].re;
                b[(n + u, j)] = val;
                b[(j, n + u)] = val;
            }
            for v in 0..u_count {
                // Re tr(X_v R_u)
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        let xv = lifted[v][(i, j)];
                        let ru = r_mats[u][(j, i)];
                        acc += xv.re * ru.re - xv.im * ru.im;
                    }
                }
                b[(n + u, n + v)] += acc;
            }
        }
        // LP contributions on the UE block.
        let xi_over = xi / zxi;
        for u in 0..u_count {
            for v in 0..u_count {
                b[(n + u, n + v)] += xi_over;
            }
            b[(n + u, n + u)] += slack[u] / zs[u];
        }
        // Symmetrize against roundoff and factor once per iteration.
        let b = (b.clone() + b.transpose()).map(|v| 0.5 * v);
        let b_chol = match nalgebra::Cholesky::new(b.clone()) {
            Some(c) => c,
            None => {
                let ridge = DMatrix::<f64>::identity(m_total, m_total) * (1e-12 * scale);
                nalgebra::Cholesky::new(b + ridge).ok_or_else(|| {
                    Error::NonConvergence("Schur complement not positive definite".into())
                })?
            }
        };

        let assemble_rhs = |sigma_mu: f64,
                            corr_sdp: Option<&CMat>,
                            corr_xi: f64,
                            corr_s: Option<&[f64]>|
         -> DVector<f64> {
            // K = sigma*mu*Zinv - S - Hsym(Zinv (Rd S + corr)), where corr
            // is the Mehrotra second-order product dZ_aff dS_aff.
            let mut inner = &rd_mat * &s_mat;
            if let Some(c) = corr_sdp {
                inner += c;
            }
            let k = {
                let mut k = z_inv.map(|z| z * sigma_mu);
                k -= &s_mat;
                k -= hsym(&(&z_inv * inner));
                k
            };
            let mut rhs = DVector::<f64>::zeros(m_total);
            for i in 0..n {
                rhs[i] = rp[i] - k[(i, i)].re;
            }
            for u in 0..u_count {
                let corr_su = corr_s.map_or(0.0, |c| c[u]);
                rhs[n + u] = rp[n + u] - re_inner(&lifted[u], &k)
                    + (sigma_mu - corr_xi) / zxi
                    - xi
                    - xi_over * rd_xi
                    + (sigma_mu - corr_su) / zs[u]
                    - slack[u]
                    - (slack[u] / zs[u]) * rd_s[u];
            }
            rhs
        };

        let recover = |dy: DVector<f64>,
                       sigma_mu: f64,
                       corr_sdp: Option<&CMat>,
                       corr_xi: f64,
                       corr_s: Option<&[f64]>|
         -> Directions {
            let mut dz_mat = rd_mat.clone();
            for i in 0..n {
                dz_mat[(i, i)] -= Complex64::new(dy[i], 0.0);
            }
            for (u, x) in lifted.iter().enumerate() {
                dz_mat += x.map(|z| z * (-dy[n + u]));
            }
            let dzxi = rd_xi + (0..u_count).map(|u| dy[n + u]).sum::<f64>();
            let dzs: Vec<f64> = (0..u_count).map(|u| rd_s[u] + dy[n + u]).collect();
            let mut inner = &dz_mat * &s_mat;
            if let Some(c) = corr_sdp {
                inner += c;
            }
            let ds_mat = {
                let mut d = z_inv.map(|z| z * sigma_mu);
                d -= &s_mat;
                d -= hsym(&(&z_inv * inner));
                d
            };
            let dxi = (sigma_mu - corr_xi) / zxi - xi - xi_over * dzxi;
            let dslack: Vec<f64> = (0..u_count)
                .map(|u| {
                    let corr_su = corr_s.map_or(0.0, |c| c[u]);
                    (sigma_mu - corr_su) / zs[u] - slack[u] - (slack[u] / zs[u]) * dzs[u]
                })
                .collect();
            Directions {
                dy,
                ds_mat,
                dz_mat,
                dxi,
                dslack,
                dzxi,
                dzs,
            }
        };

        // Predictor (affine scaling).
        let rhs_aff = assemble_rhs(0.0, None, 0.0, None);
        let dy_aff = b_chol.solve(&rhs_aff);
        let aff = recover(dy_aff, 0.0, None, 0.0, None);

        let alpha_p_aff = {
            let lp = max_ratio_step(
                &[&[xi][..], &slack[..]].concat(),
                &[&[aff.dxi][..], &aff.dslack[..]].concat(),
            );
            max_psd_step(&s_mat, &aff.ds_mat)?.min(lp)
        };
        let alpha_d_aff = {
            let lp = max_ratio_step(
                &[&[zxi][..], &zs[..]].concat(),
                &[&[aff.dzxi][..], &aff.dzs[..]].concat(),
            );
            max_psd_step(&z_mat, &aff.dz_mat)?.min(lp)
        };

        // Mehrotra centering from the affine gap.
        let gap_aff = {
            let mut s_try = s_mat.clone();
            s_try.zip_apply(&aff.ds_mat, |s, d| *s += d * Complex64::from(alpha_p_aff));
            let mut z_try = z_mat.clone();
            z_try.zip_apply(&aff.dz_mat, |z, d| *z += d * Complex64::from(alpha_d_aff));
            let xi_try = xi + alpha_p_aff * aff.dxi;
            let zxi_try = zxi + alpha_d_aff * aff.dzxi;
            let mut g = re_inner(&s_try, &z_try) + xi_try * zxi_try;
            for u in 0..u_count {
                g += (slack[u] + alpha_p_aff * aff.dslack[u]) * (zs[u] + alpha_d_aff * aff.dzs[u]);
            }
            g / (n + 1 + u_count) as f64
        };
        let sigma = (gap_aff / mu).powi(3).clamp(1e-6, 0.9);

        // Corrector with second-order terms.
        let corr_sdp = Some(&aff.dz_mat * &aff.ds_mat);
        let corr_xi = aff.dxi * aff.dzxi;
        let corr_s: Vec<f64> = aff
            .dslack
            .iter()
            .zip(&aff.dzs)
            .map(|(a, b)| a * b)
            .collect();

        let sigma_mu = sigma * mu;
        let rhs = assemble_rhs(sigma_mu, corr_sdp.as_ref(), corr_xi, Some(&corr_s));
        let dy = b_chol.solve(&rhs);
        let dir = recover(dy, sigma_mu, corr_sdp.as_ref(), corr_xi, Some(&corr_s));

        let tau = 0.98;
        let alpha_p = tau
            * max_psd_step(&s_mat, &dir.ds_mat)?
                .min(max_ratio_step(
                    &[&[xi][..], &slack[..]].concat(),
                    &[&[dir.dxi][..], &dir.dslack[..]].concat(),
                ))
                .min(1.0 / tau);
        let alpha_d = tau
            * max_psd_step(&z_mat, &dir.dz_mat)?
                .min(max_ratio_step(
                    &[&[zxi][..], &zs[..]].concat(),
                    &[&[dir.dzxi][..], &dir.dzs[..]].concat(),
                ))
                .min(1.0 / tau);

        s_mat.zip_apply(&dir.ds_mat, |s, d| *s += d * Complex64::from(alpha_p));
        s_mat = hsym(&s_mat);
        xi += alpha_p * dir.dxi;
        for (sl, d) in slack.iter_mut().zip(&dir.dslack) {
            *sl += alpha_p * d;
        }
        z_mat.zip_apply(&dir.dz_mat, |z, d| *z += d * Complex64::from(alpha_d));
        z_mat = hsym(&z_mat);
        zxi += alpha_d * dir.dzxi;
        for (z, d) in zs.iter_mut().zip(&dir.dzs) {
            *z += alpha_d * d;
        }
        for (i, y) in yd.iter_mut().enumerate() {
            *y += alpha_d * dir.dy[i];
        }
        for (u, y) in yu.iter_mut().enumerate() {
            *y += alpha_d * dir.dy[n + u];
        }
    }

    Ok((s_mat, xi.max(0.0), status))
}
