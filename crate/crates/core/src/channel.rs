//! Geometry, pathloss, Rician channel sampling, outdated-CSI evolution and
//! coherence-time bookkeeping.
//!
//! Channel estimates age according to the Jakes model: the correlation
//! between an estimate and the live channel after a delay `tau` is
//! `J0(2 pi f_d tau)`, clamped at zero once the first Bessel root is passed
//! (beyond that point the channels are treated as fully decorrelated).

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::mathkit::{bessel_j0, SPEED_OF_LIGHT};

/// Cell layout: gNB and RIS positions in meters, UEs roam a disk of
/// `cell_radius` around the origin at ground level.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub gnb_position: [f64; 3],
    pub ris_center: [f64; 3],
    pub ris_range: f64,
    pub cell_radius: f64,
}

impl Geometry {
    /// Distance from the gNB to the RIS center (the fixed first hop of the
    /// cascaded link).
    pub fn gnb_ris_distance(&self) -> f64 {
        dist3(self.gnb_position, self.ris_center)
    }

    pub fn validate(&self) -> Result<()> {
        for v in self.gnb_position.iter().chain(self.ris_center.iter()) {
            if !v.is_finite() {
                return Err(Error::invalid("geometry coordinates must be finite"));
            }
        }
        if self.ris_range <= 0.0 || self.cell_radius <= 0.0 {
            return Err(Error::invalid("ris_range and cell_radius must be > 0"));
        }
        Ok(())
    }

    pub fn distance_gnb_to(&self, ue_xy: [f64; 2]) -> f64 {
        dist3(self.gnb_position, [ue_xy[0], ue_xy[1], 0.0])
    }

    /// Total propagation length of the gNB -> RIS -> UE path.
    pub fn distance_cascaded_to(&self, ue_xy: [f64; 2]) -> f64 {
        self.gnb_ris_distance() + dist3(self.ris_center, [ue_xy[0], ue_xy[1], 0.0])
    }
}

fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    Direct,
    Cascaded,
}

/// Power-law pathloss with a free-space intercept at `reference_distance`.
/// Antenna gains divide the loss: both ends for the direct link, gNB side
/// only for the cascaded link.
#[derive(Debug, Clone)]
pub struct PathlossModel {
    pub exponent_cascaded: f64,
    pub exponent_direct: f64,
    pub reference_distance_m: f64,
    pub reference_loss_db: f64,
    pub gnb_antenna_gain_db: f64,
    pub ue_antenna_gain_db: f64,
}

impl PathlossModel {
    /// Free-space reference loss at 1 m for carrier `f_c`.
    pub fn free_space_at_1m(f_c_hz: f64) -> f64 {
        20.0 * (4.0 * std::f64::consts::PI * f_c_hz / SPEED_OF_LIGHT).log10()
    }

    pub fn validate(&self) -> Result<()> {
        if self.exponent_cascaded <= 0.0 || self.exponent_direct <= 0.0 {
            return Err(Error::invalid("pathloss exponents must be > 0"));
        }
        if self.reference_distance_m <= 0.0 {
            return Err(Error::invalid("reference distance must be > 0"));
        }
        Ok(())
    }
}

/// Linear pathloss beta for one link. `beta` multiplies the noise-referred
/// terms, i.e. received amplitude scales with sqrt(1/beta).
pub fn pathloss(distance_m: f64, model: &PathlossModel, which: LinkKind) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::invalid(format!(
            "pathloss: distance must be > 0, got {distance_m}"
        )));
    }
    let exponent = match which {
        LinkKind::Direct => model.exponent_direct,
        LinkKind::Cascaded => model.exponent_cascaded,
    };
    let gain_db = match which {
        LinkKind::Direct => model.gnb_antenna_gain_db + model.ue_antenna_gain_db,
        LinkKind::Cascaded => model.gnb_antenna_gain_db,
    };
    let reference = crate::mathkit::db_to_linear(model.reference_loss_db);
    let beta = reference * (distance_m / model.reference_distance_m).powf(exponent);
    Ok(beta / crate::mathkit::db_to_linear(gain_db))
}

/// Coherence time from the correlation threshold: the largest delay with
/// J0-correlation above `rho_th`, approximated as
/// c * arccos(rho_th) / (2 pi V f_c).
pub fn coherence_time(rho_th: f64, velocity_mps: f64, f_c_hz: f64) -> Result<f64> {
    if !(rho_th > 0.0 && rho_th < 1.0) {
        return Err(Error::invalid(format!(
            "coherence_time: rho_th must lie in (0,1), got {rho_th}"
        )));
    }
    if !(velocity_mps > 0.0) {
        return Err(Error::invalid(format!(
            "coherence_time: velocity must be > 0, got {velocity_mps}"
        )));
    }
    if !(f_c_hz > 0.0) {
        return Err(Error::invalid("coherence_time: carrier must be > 0"));
    }
    Ok(SPEED_OF_LIGHT * rho_th.acos() / (2.0 * std::f64::consts::PI * velocity_mps * f_c_hz))
}

/// Coherence bandwidth and block length for a slot of duration `t_c`:
/// B_c = arccos(rho_th) / (2 pi tau_max), N_c = floor(T_c * B_c).
pub fn coherence_block(t_c: f64, tau_max: f64, rho_th: f64) -> Result<(f64, u64)> {
    if !(t_c > 0.0 && tau_max > 0.0) {
        return Err(Error::invalid("coherence_block: inputs must be > 0"));
    }
    if !(rho_th > 0.0 && rho_th < 1.0) {
        return Err(Error::invalid("coherence_block: rho_th must lie in (0,1)"));
    }
    let b_c = rho_th.acos() / (2.0 * std::f64::consts::PI * tau_max);
    let n_c = (t_c * b_c).floor() as u64;
    Ok((b_c, n_c))
}

/// Jakes time correlation of a channel estimate after `delay` seconds at
/// Doppler spread `f_d`, clamped to [0, 1]: negative J0 lobes are treated as
/// fully decorrelated.
pub fn correlation(f_d_hz: f64, delay_s: f64) -> Result<f64> {
    if f_d_hz < 0.0 || delay_s < 0.0 {
        return Err(Error::invalid("correlation: f_d and delay must be >= 0"));
    }
    let rho = bessel_j0(2.0 * std::f64::consts::PI * f_d_hz * delay_s)?;
    Ok(rho.clamp(0.0, 1.0))
}

/// First slot offset at which the channel correlation reaches zero:
/// smallest n >= 1 with J0(2 pi f_d (t1 + n T_c)) <= 0.
pub fn n_max(f_d_hz: f64, t_c: f64, t1: f64) -> Result<usize> {
    if !(f_d_hz > 0.0 && t_c > 0.0) || t1 < 0.0 {
        return Err(Error::invalid("n_max: need f_d > 0, T_c > 0, t1 >= 0"));
    }
    let omega = 2.0 * std::f64::consts::PI * f_d_hz;
    for n in 1..=100_000_000usize {
        if bessel_j0(omega * (t1 + n as f64 * t_c))? <= 0.0 {
            return Ok(n);
        }
    }
    Err(Error::invalid(
        "n_max: no zero crossing found (degenerate f_d * T_c)",
    ))
}

/// i.i.d. unit-power Rician samples: deterministic LOS part
/// sqrt(K/(K+1)) e^{j theta} with one uniform phase per vector, plus
/// circular complex Gaussian scatter of variance 1/(K+1).
pub fn sample_rician<R: Rng + ?Sized>(
    k_factor: f64,
    length: usize,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    if !(k_factor >= 0.0) {
        return Err(Error::invalid(format!(
            "sample_rician: K must be >= 0, got {k_factor}"
        )));
    }
    if length == 0 {
        return Err(Error::invalid("sample_rician: length must be >= 1"));
    }
    let los_amp = (k_factor / (k_factor + 1.0)).sqrt();
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let los = Complex64::from_polar(los_amp, theta);
    let comp_std = (0.5 / (k_factor + 1.0)).sqrt();
    let normal = Normal::new(0.0, comp_std).expect("valid std");
    Ok((0..length)
        .map(|_| los + Complex64::new(normal.sample(rng), normal.sample(rng)))
        .collect())
}

/// Evolve an outdated estimate to the live channel at correlation `rho`:
/// rho * hat + sqrt(1 - rho^2) * omega with omega ~ CN(0, scatter_var) per
/// entry.
pub fn evolve_channel<R: Rng + ?Sized>(
    hat: &[Complex64],
    rho: f64,
    scatter_var: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::invalid(format!(
            "evolve_channel: rho must lie in [0,1], got {rho}"
        )));
    }
    if scatter_var < 0.0 {
        return Err(Error::invalid("evolve_channel: scatter_var must be >= 0"));
    }
    let rho_bar = (1.0 - rho * rho).sqrt();
    let comp_std = (0.5 * scatter_var).sqrt();
    let normal = Normal::new(0.0, comp_std).expect("valid std");
    Ok(hat
        .iter()
        .map(|&h| rho * h + rho_bar * Complex64::new(normal.sample(rng), normal.sample(rng)))
        .collect())
}

/// Per-UE outdated channel estimates taken at the last CE slot, plus the
/// pathlosses in force at that moment.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// hat h_u0, direct gNB -> UE estimate (one scalar per UE).
    pub h_direct_hat: Vec<Complex64>,
    /// hat g_u, RIS -> UE estimates (one M-vector per UE).
    pub g_ris_hat: Vec<Vec<Complex64>>,
    /// h, gNB -> RIS channel (shared by all UEs; both ends static so it does
    /// not age).
    pub h_gnb_ris: Vec<Complex64>,
    /// beta_u0 per UE (linear).
    pub beta_direct: Vec<f64>,
    /// beta_u per UE (linear).
    pub beta_cascaded: Vec<f64>,
    pub estimated_at_slot: u64,
}

impl ChannelRealization {
    pub fn num_ues(&self) -> usize {
        self.h_direct_hat.len()
    }

    pub fn num_elements(&self) -> usize {
        self.h_gnb_ris.len()
    }

    pub fn validate(&self) -> Result<()> {
        let u = self.num_ues();
        let m = self.num_elements();
        if self.g_ris_hat.len() != u || self.beta_direct.len() != u || self.beta_cascaded.len() != u
        {
            return Err(Error::invalid("channel realization: per-UE length mismatch"));
        }
        if self.g_ris_hat.iter().any(|g| g.len() != m) {
            return Err(Error::invalid(
                "channel realization: RIS vector length mismatch",
            ));
        }
        if self
            .beta_direct
            .iter()
            .chain(self.beta_cascaded.iter())
            .any(|&b| !(b > 0.0))
        {
            return Err(Error::invalid("channel realization: pathloss must be > 0"));
        }
        Ok(())
    }
}

/// Slot timing derived from the correlation threshold: slot duration,
/// coherence bandwidth/block, and pilot overhead.
#[derive(Debug, Clone)]
pub struct CoherenceConfig {
    pub rho_threshold: f64,
    pub carrier_frequency_hz: f64,
    pub max_delay_spread_s: f64,
    pub slot_duration_s: f64,
    pub coherence_bandwidth_hz: f64,
    pub coherence_block_symbols: u64,
    pub pilot_overhead_symbols: u64,
}

impl CoherenceConfig {
    /// Derive timing from the scenario radio parameters. `t_c_override`
    /// replaces the formula-derived slot duration when set (the two are
    /// inconsistent in some published parameter sets, so both are allowed).
    pub fn derive(
        rho_threshold: f64,
        f_c_hz: f64,
        tau_max_s: f64,
        v_max_mps: f64,
        num_elements: usize,
        t_c_override: Option<f64>,
        t_p_override: Option<u64>,
    ) -> Result<Self> {
        let t_c = match t_c_override {
            Some(t) if t > 0.0 => t,
            Some(t) => {
                return Err(Error::config("t_c_override_s", format!("must be > 0, got {t}")))
            }
            None => coherence_time(rho_threshold, v_max_mps, f_c_hz)?,
        };
        let (b_c, n_c) = coherence_block(t_c, tau_max_s, rho_threshold)?;
        let t_p = t_p_override.unwrap_or(num_elements as u64 + 1);
        if t_p < num_elements as u64 + 1 {
            return Err(Error::config(
                "pilot_overhead_symbols",
                format!("must be >= M+1 = {}, got {t_p}", num_elements + 1),
            ));
        }
        if n_c <= t_p {
            return Err(Error::config(
                "coherence_block",
                format!(
                    "N_c = {n_c} symbols does not exceed the pilot overhead T_p = {t_p}; \
                     no time would remain for data (reduce M, tau_max or velocity, or \
                     override T_c)"
                ),
            ));
        }
        Ok(CoherenceConfig {
            rho_threshold,
            carrier_frequency_hz: f_c_hz,
            max_delay_spread_s: tau_max_s,
            slot_duration_s: t_c,
            coherence_bandwidth_hz: b_c,
            coherence_block_symbols: n_c,
            pilot_overhead_symbols: t_p,
        })
    }

    /// Fraction of a slot consumed by pilots when CE runs in that slot.
    pub fn pilot_fraction(&self) -> f64 {
        self.pilot_overhead_symbols as f64 / self.coherence_block_symbols as f64
    }

    /// Minimal estimation delay: a fresh estimate is already outdated by the
    /// pilot burst itself when data transmission starts.
    pub fn initial_delay_s(&self) -> f64 {
        self.pilot_fraction() * self.slot_duration_s
    }
}
