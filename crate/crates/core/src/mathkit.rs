//! Special functions and unit conversions shared by the channel and SINR
//! models: the Bessel function J0 driving the Jakes time correlation, the
//! mean of a unit-power Rician envelope, and the log-normal interference
//! moment.
//!
//! All public APIs elsewhere in the crate take linear quantities; dB and dBm
//! conversions are centralized here.

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// Series/asymptotic split for `bessel_j0`. Below this the power series is
/// exact to ~1e-13 in f64; above it the Hankel expansion truncated at its
/// smallest term is accurate to better than 1e-10 (the plain asymptotic
/// series cannot reach that accuracy for x < ~10, which is why the split
/// sits here and not lower).
const J0_SERIES_LIMIT: f64 = 12.0;

/// Bessel function of the first kind, order zero.
///
/// Power series for |x| < 12, Hankel asymptotic expansion beyond, with the
/// expansion truncated adaptively at its smallest term. Absolute error is
/// below 1e-10 for all finite x (and well below 1e-11 on |x| <= 50).
pub fn bessel_j0(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::invalid(format!("bessel_j0: non-finite input {x}")));
    }
    let ax = x.abs();
    if ax < J0_SERIES_LIMIT {
        Ok(j0_series(ax))
    } else {
        Ok(j0_asymptotic(ax))
    }
}

fn j0_series(x: f64) -> f64 {
    // J0(x) = sum_m (-1)^m (x/2)^{2m} / (m!)^2
    let q = -0.25 * x * x;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    for m in 1..=80u32 {
        term *= q / ((m as f64) * (m as f64));
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

fn j0_asymptotic(x: f64) -> f64 {
    // J0(x) = sqrt(2/(pi x)) [P(x) cos(x - pi/4) - Q(x) sin(x - pi/4)]
    // with P = a0 - a2/x^2 + a4/x^4 - ..., Q = -a1/x + a3/x^3 - ... and
    // a_{k+1} = a_k (2k+1)^2 / (8(k+1)). The series is divergent; summing
    // until terms stop decreasing leaves an error below the last kept term.
    let mut p = 0.0_f64;
    let mut q = 0.0_f64;
    let mut a = 1.0_f64; // a_0
    let mut xp = 1.0_f64; // x^{-k}
    let mut last = f64::INFINITY;
    for k in 0..40u32 {
        let term = a * xp;
        if term.abs() >= last {
            break; // smallest-term truncation
        }
        last = term.abs();
        match k % 4 {
            0 => p += term,
            1 => q -= term,
            2 => p -= term,
            _ => q += term,
        }
        a *= ((2 * k + 1) as f64).powi(2) / (8.0 * (k + 1) as f64);
        xp /= x;
    }
    let chi = x - std::f64::consts::FRAC_PI_4;
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Exponentially scaled modified Bessel functions e^{-x} I0(x), e^{-x} I1(x)
/// for x >= 0. Series below 30, asymptotic beyond.
fn i0e_i1e(x: f64) -> (f64, f64) {
    debug_assert!(x >= 0.0);
    if x < 30.0 {
        let q = 0.25 * x * x;
        let mut t0 = 1.0_f64;
        let mut s0 = 1.0_f64;
        let mut t1 = 0.5 * x;
        let mut s1 = t1;
        for m in 1..=120u32 {
            let mf = m as f64;
            t0 *= q / (mf * mf);
            s0 += t0;
            t1 *= q / (mf * (mf + 1.0));
            s1 += t1;
            if t0 < 1e-18 * s0 && t1 <= 1e-18 * (s1 + 1e-300) {
                break;
            }
        }
        let e = (-x).exp();
        (e * s0, e * s1)
    } else {
        // I_nu(x) ~ e^x/sqrt(2 pi x) * sum_k (-1)^k c_k(nu)/x^k with
        // c_k(nu) = prod_{j=1..k} (4 nu^2 - (2j-1)^2) / (k! 8^k).
        let scale = 1.0 / (2.0 * std::f64::consts::PI * x).sqrt();
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        let mut c0 = 1.0_f64; // nu = 0
        let mut c1 = 1.0_f64; // nu = 1
        let mut xp = 1.0_f64;
        for k in 0..12u32 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            s0 += sign * c0 * xp;
            s1 += sign * c1 * xp;
            let odd = (2 * k + 1) as f64;
            let denom = 8.0 * (k + 1) as f64;
            c0 *= -odd * odd / denom; // 4*0^2 - odd^2
            c1 *= (4.0 - odd * odd) / denom;
            xp /= x;
        }
        (scale * s0, scale * s1)
    }
}

/// Mean of a Rician envelope normalized to unit second moment (E[|h|^2] = 1):
/// line-of-sight power K/(K+1), scatter power 1/(K+1).
///
/// Closed form via the Laguerre polynomial L_{1/2}:
/// E[R] = sqrt(pi/(4(K+1))) * e^{-K/2} [(1+K) I0(K/2) + K I1(K/2)].
pub fn rice_envelope_mean(k_factor: f64) -> Result<f64> {
    if !k_factor.is_finite() || k_factor < 0.0 {
        return Err(Error::invalid(format!(
            "rice_envelope_mean: K must be finite and >= 0, got {k_factor}"
        )));
    }
    let (i0e, i1e) = i0e_i1e(0.5 * k_factor);
    let l_half = (1.0 + k_factor) * i0e + k_factor * i1e;
    Ok((std::f64::consts::PI / (4.0 * (k_factor + 1.0))).sqrt() * l_half)
}

/// Log-normal interference moment E(I_u) = exp(2 mu + 2 sigma^2), the exact
/// expression used by the SINR denominators. Note this is not the standard
/// log-normal mean exp(mu + sigma^2/2).
pub fn lognormal_interference_mean(mu: f64, sigma: f64) -> Result<f64> {
    if !mu.is_finite() || !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::invalid(format!(
            "lognormal_interference_mean: need finite mu and sigma >= 0, got mu={mu} sigma={sigma}"
        )));
    }
    Ok((2.0 * mu + 2.0 * sigma * sigma).exp())
}

/// Solve exp(2 mu + 2 sigma^2) = mean_w for mu; used to calibrate the
/// interference distribution from a configured mean power.
pub fn lognormal_mu_for_mean(mean_w: f64, sigma: f64) -> Result<f64> {
    if mean_w <= 0.0 {
        return Err(Error::invalid(format!(
            "lognormal_mu_for_mean: mean must be positive, got {mean_w}"
        )));
    }
    Ok(0.5 * (mean_w.ln() - 2.0 * sigma * sigma))
}
