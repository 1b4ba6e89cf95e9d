//! Full system configuration and its derived per-run parameters.

use crate::channel::{CoherenceConfig, Geometry, PathlossModel};
use crate::error::{Error, Result};
use crate::linkmetrics::GainOrientation;
use crate::mathkit::{db_to_linear, dbm_to_watts, SPEED_OF_LIGHT};
use crate::phaseopt::PhaseSolver;
use crate::scheduler::{self, Policy};

/// How the skip predictor sees future slots: statistically, or through the
/// realized channel draws (a non-causal bound used for gap analysis).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictionMode {
    Expected,
    Realized,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub num_ues: usize,
    pub num_ris_elements: usize,
    pub num_rbs: u64,
    pub bandwidth_per_rb_hz: f64,
    pub p_tot_w: f64,
    pub f_c_hz: f64,
    pub noise_w: f64,
    pub interference_mean_w: f64,
    pub interference_sigma: f64,
    pub velocity_min_mps: f64,
    pub velocity_max_mps: f64,
    pub rho_threshold: f64,
    pub tau_max_s: f64,
    pub rate_threshold_bps: f64,
    pub total_time_s: f64,
    pub geometry: Geometry,
    pub pathloss: PathlossModel,
    /// Rician K of the direct gNB-UE link (linear; 0 = Rayleigh).
    pub rician_k_direct: f64,
    /// Rician K of the gNB-RIS link (linear).
    pub rician_k_gnb_ris: f64,
    /// Rician K of the RIS-UE links (linear).
    pub rician_k_ris_ue: f64,
    pub policy: Policy,
    pub seed: u64,
    /// Overrides the formula-derived slot duration when set.
    pub t_c_override_s: Option<f64>,
    /// Overrides the default pilot length M+1 (must stay >= M+1).
    pub pilot_overhead_symbols: Option<u64>,
    pub phase_solver: PhaseSolver,
    pub randomization_trials: usize,
    pub lowrank_iterations: usize,
    pub gain_orientation: GainOrientation,
    pub prediction: PredictionMode,
}

impl Scenario {
    /// Published full-scale parameter set. Two adjustments keep it
    /// self-consistent: the slot-duration override (at these velocities the
    /// formula-derived slot would leave no room for the M+1 pilot symbols)
    /// and a default UE count of 16 so that the 96 RBs divide evenly.
    pub fn paper_default() -> Self {
        let f_c = 5e9;
        Scenario {
            num_ues: 16,
            num_ris_elements: 300,
            num_rbs: 96,
            bandwidth_per_rb_hz: 180e3,
            p_tot_w: dbm_to_watts(20.0),
            f_c_hz: f_c,
            noise_w: dbm_to_watts(-120.0),
            interference_mean_w: dbm_to_watts(-95.0),
            interference_sigma: 0.5,
            velocity_min_mps: 30.0,
            velocity_max_mps: 70.0,
            rho_threshold: 0.9,
            tau_max_s: 250e-9,
            rate_threshold_bps: 256e6,
            total_time_s: 50.0,
            geometry: Geometry {
                gnb_position: [50.0, 0.0, 10.0],
                ris_center: [25.0, 30.0, 10.0],
                ris_range: 100.0,
                cell_radius: 100.0,
            },
            pathloss: PathlossModel {
                exponent_cascaded: 2.0,
                exponent_direct: 3.5,
                reference_distance_m: 1.0,
                reference_loss_db: PathlossModel::free_space_at_1m(f_c),
                gnb_antenna_gain_db: 20.0,
                ue_antenna_gain_db: 0.0,
            },
            rician_k_direct: 0.0,
            rician_k_gnb_ris: db_to_linear(1.0),
            rician_k_ris_ue: db_to_linear(1.0),
            policy: Policy::proposed(0.9),
            seed: 42,
            t_c_override_s: Some(0.06),
            pilot_overhead_symbols: None,
            phase_solver: PhaseSolver::Auto,
            randomization_trials: 200,
            lowrank_iterations: 150,
            gain_orientation: GainOrientation::ActualMinusExpected,
            prediction: PredictionMode::Expected,
        }
    }

    /// CI-sized scenario: small RIS and user counts, short horizon and a
    /// formula-derived slot duration. The rate floor is scaled to the
    /// correspondingly smaller per-UE rates, and the interference floor is
    /// raised so the fresh-estimate SINR advantage stays comparable to the
    /// pilot overhead (at 32 elements the published floor would make
    /// re-estimation always win and the schedule would never adapt).
    pub fn desk_default() -> Self {
        let mut s = Self::paper_default();
        s.num_ues = 4;
        s.num_ris_elements = 32;
        s.total_time_s = 2.0;
        s.velocity_min_mps = 10.0;
        s.velocity_max_mps = 40.0;
        s.rho_threshold = 0.8;
        s.interference_mean_w = dbm_to_watts(-55.0);
        s.rate_threshold_bps = 1e6;
        s.t_c_override_s = None;
        s.policy = Policy::proposed(0.8);
        s.phase_solver = PhaseSolver::LowRank;
        s.randomization_trials = 40;
        s.lowrank_iterations = 64;
        s
    }

    pub fn rbs_per_ue(&self) -> u64 {
        self.num_rbs / self.num_ues as u64
    }

    pub fn doppler_hz(&self) -> f64 {
        self.f_c_hz * self.velocity_max_mps / SPEED_OF_LIGHT
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_ues == 0 {
            return Err(Error::config("num_ues", "must be >= 1"));
        }
        if self.num_ris_elements == 0 {
            return Err(Error::config("num_ris_elements", "must be >= 1"));
        }
        if self.num_rbs == 0 || self.num_rbs % self.num_ues as u64 != 0 {
            return Err(Error::config(
                "num_rbs",
                format!(
                    "B mod U != 0: B = {} does not divide evenly across U = {} UEs",
                    self.num_rbs, self.num_ues
                ),
            ));
        }
        if !(self.velocity_min_mps > 0.0) {
            return Err(Error::config("velocity_min_mps", "must be > 0"));
        }
        if self.velocity_max_mps < self.velocity_min_mps {
            return Err(Error::config(
                "velocity_max_mps",
                format!(
                    "must be >= velocity_min ({} < {})",
                    self.velocity_max_mps, self.velocity_min_mps
                ),
            ));
        }
        if !(self.rho_threshold > 0.0 && self.rho_threshold < 1.0) {
            return Err(Error::config("rho_threshold", "must lie in (0, 1)"));
        }
        if !(self.policy.rho_bar_threshold > 0.0 && self.policy.rho_bar_threshold < 1.0) {
            return Err(Error::config("policy", "rho_bar threshold must lie in (0, 1)"));
        }
        for (key, v) in [
            ("bandwidth_per_rb_hz", self.bandwidth_per_rb_hz),
            ("p_tot", self.p_tot_w),
            ("f_c_hz", self.f_c_hz),
            ("noise", self.noise_w),
            ("interference_mean", self.interference_mean_w),
            ("tau_max_s", self.tau_max_s),
            ("total_time_s", self.total_time_s),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(key, format!("must be positive, got {v}")));
            }
        }
        if self.interference_sigma < 0.0 {
            return Err(Error::config("interference_sigma", "must be >= 0"));
        }
        if self.rate_threshold_bps < 0.0 {
            return Err(Error::config("r_th_bps", "must be >= 0"));
        }
        if self.rician_k_direct < 0.0 || self.rician_k_gnb_ris < 0.0 || self.rician_k_ris_ue < 0.0
        {
            return Err(Error::config("rician_k", "K factors must be >= 0"));
        }
        if self.randomization_trials == 0 {
            return Err(Error::config("randomization_trials", "must be >= 1"));
        }
        self.geometry.validate()?;
        self.pathloss.validate()?;
        Ok(())
    }

    /// Validate and compute every derived quantity an episode needs.
    pub fn derive(&self) -> Result<DerivedParams> {
        self.validate()?;
        let coherence = CoherenceConfig::derive(
            self.rho_threshold,
            self.f_c_hz,
            self.tau_max_s,
            self.velocity_max_mps,
            self.num_ris_elements,
            self.t_c_override_s,
            self.pilot_overhead_symbols,
        )?;
        let f_d = self.doppler_hz();
        let t_c = coherence.slot_duration_s;
        let num_slots = (self.total_time_s / t_c).floor() as u64;
        if num_slots == 0 {
            return Err(Error::config(
                "total_time_s",
                "shorter than a single slot; nothing to simulate",
            ));
        }
        let n_max = crate::channel::n_max(f_d, t_c, coherence.initial_delay_s())? as u64;
        let psi_slots = scheduler::psi_slots(
            self.policy.rho_bar_threshold,
            self.velocity_max_mps,
            self.f_c_hz,
            t_c,
        )?;
        let omega_direct = crate::mathkit::rice_envelope_mean(self.rician_k_direct)?;
        let omega_gnb_ris = crate::mathkit::rice_envelope_mean(self.rician_k_gnb_ris)?;
        let omega_ris_ue = crate::mathkit::rice_envelope_mean(self.rician_k_ris_ue)?;
        let interference_mu = crate::mathkit::lognormal_mu_for_mean(
            self.interference_mean_w,
            self.interference_sigma,
        )?;
        Ok(DerivedParams {
            coherence,
            f_d_hz: f_d,
            n_max,
            num_slots,
            psi_slots,
            rbs_per_ue: self.rbs_per_ue(),
            omega_direct,
            omega_gnb_ris,
            omega_ris_ue,
            interference_mu,
        })
    }

    /// Apply one configuration entry. Shared by the config-file parser and
    /// the Python bindings so both speak the same key set.
    pub fn set_key(&mut self, key: &str, value: &toml::Value) -> Result<()> {
        let num = |v: &toml::Value| -> Result<f64> {
            match v {
                toml::Value::Float(f) => Ok(*f),
                toml::Value::Integer(i) => Ok(*i as f64),
                _ => Err(Error::config(key, format!("expected a number, got {v}"))),
            }
        };
        let int = |v: &toml::Value| -> Result<u64> {
            match v {
                toml::Value::Integer(i) if *i >= 0 => Ok(*i as u64),
                _ => Err(Error::config(
                    key,
                    format!("expected a non-negative integer, got {v}"),
                )),
            }
        };
        let text = |v: &toml::Value| -> Result<String> {
            match v {
                toml::Value::String(s) => Ok(s.clone()),
                _ => Err(Error::config(key, format!("expected a string, got {v}"))),
            }
        };
        match key {
            "num_ues" => self.num_ues = int(value)? as usize,
            "num_ris_elements" => self.num_ris_elements = int(value)? as usize,
            "num_rbs" => self.num_rbs = int(value)?,
            "bandwidth_per_rb_hz" => self.bandwidth_per_rb_hz = num(value)?,
            "p_tot_dbm" => self.p_tot_w = dbm_to_watts(num(value)?),
            "noise_dbm" => self.noise_w = dbm_to_watts(num(value)?),
            "interference_dbm" => self.interference_mean_w = dbm_to_watts(num(value)?),
            "interference_sigma" => self.interference_sigma = num(value)?,
            "f_c_hz" => self.f_c_hz = num(value)?,
            "velocity_min_mps" => self.velocity_min_mps = num(value)?,
            "velocity_max_mps" => self.velocity_max_mps = num(value)?,
            "rho_threshold" => self.rho_threshold = num(value)?,
            "tau_max_s" => self.tau_max_s = num(value)?,
            "r_th_bps" => self.rate_threshold_bps = num(value)?,
            "total_time_s" => self.total_time_s = num(value)?,
            "gnb_x_m" => self.geometry.gnb_position[0] = num(value)?,
            "gnb_y_m" => self.geometry.gnb_position[1] = num(value)?,
            "gnb_z_m" => self.geometry.gnb_position[2] = num(value)?,
            "ris_x_m" => self.geometry.ris_center[0] = num(value)?,
            "ris_y_m" => self.geometry.ris_center[1] = num(value)?,
            "ris_z_m" => self.geometry.ris_center[2] = num(value)?,
            "cell_radius_m" => self.geometry.cell_radius = num(value)?,
            "ris_range_m" => self.geometry.ris_range = num(value)?,
            "pathloss_exponent_cascaded" => self.pathloss.exponent_cascaded = num(value)?,
            "pathloss_exponent_direct" => self.pathloss.exponent_direct = num(value)?,
            "gnb_antenna_gain_db" => self.pathloss.gnb_antenna_gain_db = num(value)?,
            "ue_antenna_gain_db" => self.pathloss.ue_antenna_gain_db = num(value)?,
            "reference_loss_db" => self.pathloss.reference_loss_db = num(value)?,
            "rician_k_direct" => self.rician_k_direct = num(value)?,
            "rician_k_gnb_ris_db" => self.rician_k_gnb_ris = db_to_linear(num(value)?),
            "rician_k_ris_ue_db" => self.rician_k_ris_ue = db_to_linear(num(value)?),
            "seed" => self.seed = int(value)?,
            "t_c_override_s" => self.t_c_override_s = Some(num(value)?),
            "pilot_overhead_symbols" => self.pilot_overhead_symbols = Some(int(value)?),
            "randomization_trials" => self.randomization_trials = int(value)? as usize,
            "lowrank_iterations" => self.lowrank_iterations = int(value)? as usize,
            "policy" => self.policy = parse_policy(&text(value)?, self.rho_threshold)?,
            "phase_solver" => {
                self.phase_solver = match text(value)?.as_str() {
                    "auto" => PhaseSolver::Auto,
                    "ipm" => PhaseSolver::InteriorPoint,
                    "lowrank" => PhaseSolver::LowRank,
                    other => {
                        return Err(Error::config(
                            key,
                            format!("unknown solver `{other}` (auto|ipm|lowrank)"),
                        ))
                    }
                }
            }
            "gain_orientation" => {
                self.gain_orientation = match text(value)?.as_str() {
                    "actual_minus_expected" => GainOrientation::ActualMinusExpected,
                    "expected_minus_actual" => GainOrientation::ExpectedMinusActual,
                    other => {
                        return Err(Error::config(
                            key,
                            format!(
                                "unknown orientation `{other}` \
                                 (actual_minus_expected|expected_minus_actual)"
                            ),
                        ))
                    }
                }
            }
            "prediction" => {
                self.prediction = match text(value)?.as_str() {
                    "expected" => PredictionMode::Expected,
                    "realized" => PredictionMode::Realized,
                    other => {
                        return Err(Error::config(
                            key,
                            format!("unknown prediction mode `{other}` (expected|realized)"),
                        ))
                    }
                }
            }
            _ => {
                return Err(Error::config(key, "unknown configuration key"));
            }
        }
        Ok(())
    }
}

/// Parse a policy name: `proposed`, `proposed:<rho>`, or
/// `coherence:<rho>` / `fixed:<rho>` (also accepted with `_`).
pub fn parse_policy(name: &str, default_rho_bar: f64) -> Result<Policy> {
    let norm = name.trim().replace('_', ":");
    let mut parts = norm.splitn(2, ':');
    let kind = parts.next().unwrap_or_default();
    let arg = parts.next();
    let rho = |arg: Option<&str>, fallback: Option<f64>| -> Result<f64> {
        match arg {
            Some(s) => s.parse::<f64>().map_err(|_| {
                Error::config("policy", format!("cannot parse threshold in `{name}`"))
            }),
            None => fallback
                .ok_or_else(|| Error::config("policy", format!("`{name}` needs a threshold"))),
        }
    };
    match kind {
        "proposed" => Ok(Policy::proposed(rho(arg, Some(default_rho_bar))?)),
        "coherence" | "fixed" => Ok(Policy::coherence_fixed(rho(arg, None)?)),
        _ => Err(Error::config(
            "policy",
            format!("unknown policy `{name}` (proposed|coherence:<rho>)"),
        )),
    }
}

/// Everything derived from a validated scenario.
#[derive(Debug, Clone)]
pub struct DerivedParams {
    pub coherence: CoherenceConfig,
    pub f_d_hz: f64,
    /// First slot offset with zero correlation; skip horizon is n_max - 1.
    pub n_max: u64,
    pub num_slots: u64,
    /// CE window of the scenario policy, in slots.
    pub psi_slots: u64,
    pub rbs_per_ue: u64,
    pub omega_direct: f64,
    pub omega_gnb_ris: f64,
    pub omega_ris_ue: f64,
    pub interference_mu: f64,
}

impl DerivedParams {
    /// Estimate-to-slot correlation at slot offset n after a CE slot.
    pub fn rho_at(&self, n: u64) -> Result<f64> {
        crate::channel::correlation(
            self.f_d_hz,
            self.coherence.initial_delay_s() + n as f64 * self.coherence.slot_duration_s,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_defaults_validate_and_derive() {
        let s = Scenario::paper_default();
        let d = s.derive().unwrap();
        assert_eq!(d.rbs_per_ue, 6);
        assert_eq!(d.coherence.pilot_overhead_symbols, 301);
        assert_eq!(d.coherence.coherence_block_symbols, 17227);
    }

    #[test]
    fn desk_defaults_derive() {
        let s = Scenario::desk_default();
        let d = s.derive().unwrap();
        assert_eq!(d.rbs_per_ue, 24);
        assert!(d.n_max >= 2, "desk horizon too small: {}", d.n_max);
        assert!(d.coherence.coherence_block_symbols > d.coherence.pilot_overhead_symbols);
    }

    #[test]
    fn rb_divisibility_enforced() {
        let mut s = Scenario::desk_default();
        s.num_ues = 7;
        let err = s.validate().unwrap_err();
        assert!(err.to_string().contains("B mod U"));
    }

    #[test]
    fn velocity_range_enforced() {
        let mut s = Scenario::desk_default();
        s.velocity_max_mps = 5.0; // below min (10)
        assert!(s.validate().is_err());
    }

    #[test]
    fn set_key_roundtrip() {
        let mut s = Scenario::desk_default();
        s.set_key("p_tot_dbm", &toml::Value::Float(20.0)).unwrap();
        assert!((s.p_tot_w - 0.1).abs() < 1e-12);
        s.set_key("num_ues", &toml::Value::Integer(8)).unwrap();
        assert_eq!(s.num_ues, 8);
        s.set_key("policy", &toml::Value::String("coherence:0.7".into()))
            .unwrap();
        assert_eq!(s.policy, Policy::coherence_fixed(0.7));
        let err = s
            .set_key("not_a_key", &toml::Value::Integer(1))
            .unwrap_err();
        assert!(err.to_string().contains("not_a_key"));
        let err = s
            .set_key("num_ues", &toml::Value::String("four".into()))
            .unwrap_err();
        assert!(err.to_string().contains("num_ues"));
    }

    #[test]
    fn policy_parsing() {
        assert_eq!(
            parse_policy("proposed", 0.8).unwrap(),
            Policy::proposed(0.8)
        );
        assert_eq!(
            parse_policy("coherence:0.9", 0.8).unwrap(),
            Policy::coherence_fixed(0.9)
        );
        assert_eq!(
            parse_policy("fixed:0.7", 0.8).unwrap(),
            Policy::coherence_fixed(0.7)
        );
        assert_eq!(
            parse_policy("coherence_0.7", 0.8).unwrap(),
            Policy::coherence_fixed(0.7)
        );
        assert!(parse_policy("magic", 0.8).is_err());
        assert!(parse_policy("coherence", 0.8).is_err());
    }
}
