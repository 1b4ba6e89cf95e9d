//! Per-UE SINR, throughput and throughput-gain computations for both the
//! "keep transmitting on outdated CSI" branch and the "re-estimate now"
//! branch.
//!
//! The estimation error of an outdated channel is folded into an effective
//! noise term, so both SINR forms are functions of the channel estimates and
//! the correlation coefficients alone.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mathkit::lognormal_interference_mean;

/// Everything the SINR and rate formulas need for one UE in one slot.
#[derive(Debug, Clone)]
pub struct LinkState {
    /// Correlation of the direct-channel estimate at this slot, in [0,1].
    pub rho_direct: f64,
    /// Correlation of the cascaded-channel estimate at this slot, in [0,1].
    pub rho_cascaded: f64,
    pub beta_direct: f64,
    pub beta_cascaded: f64,
    /// Envelope means of |h_u0|, |h_m| and |g_um| under unit-power fading.
    pub omega0: f64,
    pub omega1: f64,
    pub omega2: f64,
    /// AWGN power sigma_u^2 in watts.
    pub noise_power_w: f64,
    /// Log-normal interference parameters (mu, Sigma).
    pub interference_mu: f64,
    pub interference_sigma: f64,
    /// Transmit power allocated to this UE, watts.
    pub power_w: f64,
    pub bandwidth_per_rb_hz: f64,
    pub rbs_per_ue: u64,
    pub pilot_overhead_symbols: u64,
    pub coherence_block_symbols: u64,
    /// True when CE runs in this slot and its pilot overhead is charged.
    pub alpha: bool,
    pub num_elements: usize,
}

impl LinkState {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho_direct) || !(0.0..=1.0).contains(&self.rho_cascaded) {
            return Err(Error::invalid("link state: correlations must lie in [0,1]"));
        }
        if self.power_w < 0.0 {
            return Err(Error::invalid("link state: power must be >= 0"));
        }
        if self.pilot_overhead_symbols >= self.coherence_block_symbols {
            return Err(Error::invalid("link state: T_p must be below N_c"));
        }
        if !(self.beta_direct > 0.0 && self.beta_cascaded > 0.0) {
            return Err(Error::invalid("link state: pathlosses must be > 0"));
        }
        if !(self.noise_power_w > 0.0) {
            return Err(Error::invalid("link state: noise power must be > 0"));
        }
        Ok(())
    }

    /// Mean interference power E(I_u).
    pub fn interference_mean_w(&self) -> f64 {
        lognormal_interference_mean(self.interference_mu, self.interference_sigma)
            .expect("validated state")
    }

    /// Rate multiplier (1 - alpha T_p / N_c).
    pub fn overhead_factor(&self) -> f64 {
        if self.alpha {
            1.0 - self.pilot_overhead_symbols as f64 / self.coherence_block_symbols as f64
        } else {
            1.0
        }
    }
}

/// Effective noise: outdated-CSI noise plus AWGN,
/// sigma_uf^2 = P M (1-rho_u^2)(1-Omega2^2)/beta_u
///            + P (1-rho_u0^2)(1-Omega0^2)/beta_u0 + sigma_u^2.
pub fn effective_noise(state: &LinkState) -> f64 {
    let rho_bar_casc_sq = 1.0 - state.rho_cascaded * state.rho_cascaded;
    let rho_bar_dir_sq = 1.0 - state.rho_direct * state.rho_direct;
    state.power_w * state.num_elements as f64 * rho_bar_casc_sq
        * (1.0 - state.omega2 * state.omega2)
        / state.beta_cascaded
        + state.power_w * rho_bar_dir_sq * (1.0 - state.omega0 * state.omega0)
            / state.beta_direct
        + state.noise_power_w
}

/// Combined cascaded + direct amplitude seen by a UE for RIS phases `phi`
/// (unit-modulus diagonal entries of the reflection matrix):
/// g L Phi h + sqrt(1/beta_u0) h_u0.
pub fn combined_amplitude(
    phases: &[Complex64],
    g_ris: &[Complex64],
    h_gnb_ris: &[Complex64],
    h_direct: Complex64,
    beta_cascaded: f64,
    beta_direct: f64,
) -> Complex64 {
    let casc_scale = (1.0 / beta_cascaded).sqrt();
    let mut acc = Complex64::new(0.0, 0.0);
    for ((phi, g), h) in phases.iter().zip(g_ris).zip(h_gnb_ris) {
        acc += g * phi * h;
    }
    acc * casc_scale + (1.0 / beta_direct).sqrt() * h_direct
}

/// Received SINR on outdated CSI: the correlation-weighted estimate carries
/// the signal, the estimation error is charged to the effective noise.
pub fn actual_sinr(
    state: &LinkState,
    phases: &[Complex64],
    g_ris_hat: &[Complex64],
    h_gnb_ris: &[Complex64],
    h_direct_hat: Complex64,
) -> Result<f64> {
    if phases.len() != state.num_elements
        || g_ris_hat.len() != state.num_elements
        || h_gnb_ris.len() != state.num_elements
    {
        return Err(Error::invalid("actual_sinr: vector length mismatch"));
    }
    if phases.iter().any(|p| (p.norm() - 1.0).abs() > 1e-6) {
        return Err(Error::invalid("actual_sinr: phases must be unit modulus"));
    }
    let casc_scale = (1.0 / state.beta_cascaded).sqrt();
    let mut casc = Complex64::new(0.0, 0.0);
    for ((phi, g), h) in phases.iter().zip(g_ris_hat).zip(h_gnb_ris) {
        acc_add(&mut casc, g * phi * h);
    }
    let amp = state.rho_cascaded * casc_scale * casc
        + state.rho_direct * (1.0 / state.beta_direct).sqrt() * h_direct_hat;
    let denom = effective_noise(state) + state.interference_mean_w();
    Ok(state.power_w * amp.norm_sqr() / denom)
}

#[inline]
fn acc_add(acc: &mut Complex64, v: Complex64) {
    *acc += v;
}

/// Expected SINR over the fading statistics: the four-term expansion of the
/// combined channel power, normalized by effective noise plus interference.
pub fn expected_sinr(state: &LinkState) -> f64 {
    let m = state.num_elements as f64;
    let rho_c = state.rho_cascaded;
    let rho_d = state.rho_direct;
    let bracket = m * rho_c * rho_c / state.beta_cascaded
        + m * (m - 1.0) * (rho_c * state.omega1 * state.omega2).powi(2) / state.beta_cascaded
        + 2.0 * m * rho_c * rho_d * state.omega0 * state.omega1 * state.omega2
            / (state.beta_direct * state.beta_cascaded).sqrt()
        + rho_d * rho_d / state.beta_direct;
    let denom = effective_noise(state) + state.interference_mean_w();
    state.power_w / denom * bracket
}

/// Shannon rate over one resource block with the pilot overhead charged when
/// `alpha` is set: (1 - alpha T_p/N_c) W log2(1 + sinr). Callers scale by
/// the UE's RB count for totals.
pub fn throughput(state: &LinkState, sinr: f64) -> Result<f64> {
    if !(sinr >= 0.0) {
        return Err(Error::invalid(format!(
            "throughput: sinr must be >= 0, got {sinr}"
        )));
    }
    Ok(state.overhead_factor() * state.bandwidth_per_rb_hz * (1.0 + sinr).log2())
}

/// Window bookkeeping for the gain formula: the slot offset n, the
/// coherence-based CE window in slots, and the horizon N_max.
#[derive(Debug, Clone, Copy)]
pub struct GainContext {
    pub psi_slots: u64,
    pub n: u64,
    pub n_max: u64,
    pub rate_threshold_bps: f64,
}

impl GainContext {
    pub fn validate(&self) -> Result<()> {
        if self.psi_slots == 0 {
            return Err(Error::invalid("gain context: psi_slots must be >= 1"));
        }
        if self.n == 0 || self.n + 1 > self.n_max {
            return Err(Error::invalid(format!(
                "gain context: need 1 <= n <= N_max - 1, got n={} N_max={}",
                self.n, self.n_max
            )));
        }
        Ok(())
    }

    fn in_first_window(&self) -> bool {
        self.n <= self.psi_slots
    }
}

/// Throughput gain, expected-minus-actual orientation:
/// inside the CE window, max(Rbar_u(l) - R_u(l+n), 0); past it,
/// R_u(l+n) - Rbar_u(l + n mod psi) (sign unconstrained).
pub fn gain_ue(rate_actual: f64, rate_expected_ref: f64, ctx: &GainContext) -> Result<f64> {
    ctx.validate()?;
    if ctx.in_first_window() {
        Ok((rate_expected_ref - rate_actual).max(0.0))
    } else {
        Ok(rate_actual - rate_expected_ref)
    }
}

/// Throughput gain, actual-minus-expected orientation: positive when
/// skipping CE at slot l+n out-earns the hypothetical re-estimation. The
/// first-window branch keeps the zero clamp.
pub fn gain_ue_skip(rate_actual: f64, rate_expected_ref: f64, ctx: &GainContext) -> Result<f64> {
    ctx.validate()?;
    if ctx.in_first_window() {
        Ok((rate_actual - rate_expected_ref).max(0.0))
    } else {
        Ok(rate_actual - rate_expected_ref)
    }
}

/// Sign convention for the per-UE throughput gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainOrientation {
    /// Expected-with-CE minus actual-without-CE inside the window
    /// (clamped at zero).
    ExpectedMinusActual,
    /// Actual-without-CE minus expected-with-CE inside the window
    /// (clamped at zero). This is the orientation under which a positive
    /// gain means skipping is profitable.
    ActualMinusExpected,
}

pub fn gain_ue_oriented(
    orientation: GainOrientation,
    rate_actual: f64,
    rate_expected_ref: f64,
    ctx: &GainContext,
) -> Result<f64> {
    match orientation {
        GainOrientation::ExpectedMinusActual => gain_ue(rate_actual, rate_expected_ref, ctx),
        GainOrientation::ActualMinusExpected => gain_ue_skip(rate_actual, rate_expected_ref, ctx),
    }
}

/// Aggregate throughput gain across UEs.
pub fn aggregate_gain(gains: &[f64]) -> f64 {
    gains.iter().sum()
}
