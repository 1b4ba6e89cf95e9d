//! CE scheduling: the dynamic skip-prediction policy and the fixed
//! coherence-time baselines it is compared against.
//!
//! The prediction loop is written against a [`GainOracle`] so it can be
//! traced with stubbed gains in tests; the production oracle (rates from
//! phase optimization + power allocation) lives in the simulation kit.

use crate::channel::coherence_time;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyKind {
    /// Re-estimate only when the predicted aggregate gain or the per-UE
    /// rate floor says so.
    Proposed,
    /// Re-estimate every floor(Psi/T_c) slots, Psi from the coherence time
    /// at a relaxed correlation threshold.
    CoherenceFixed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Policy {
    pub kind: PolicyKind,
    /// Correlation threshold defining Psi (must satisfy 0 < rho < 1). The
    /// proposed policy also uses it, for the window bookkeeping of the gain
    /// formula.
    pub rho_bar_threshold: f64,
}

impl Policy {
    pub fn proposed(rho_bar_threshold: f64) -> Self {
        Policy {
            kind: PolicyKind::Proposed,
            rho_bar_threshold,
        }
    }

    pub fn coherence_fixed(rho_bar_threshold: f64) -> Self {
        Policy {
            kind: PolicyKind::CoherenceFixed,
            rho_bar_threshold,
        }
    }

    /// Stable label for report rows.
    pub fn label(&self) -> String {
        match self.kind {
            PolicyKind::Proposed => "proposed".to_string(),
            PolicyKind::CoherenceFixed => format!("coherence_{}", self.rho_bar_threshold),
        }
    }
}

/// Number of slots in the coherence-based CE interval Psi, never below 1.
pub fn psi_slots(rho_bar_th: f64, v_max_mps: f64, f_c_hz: f64, t_c_s: f64) -> Result<u64> {
    let psi = coherence_time(rho_bar_th, v_max_mps, f_c_hz)?;
    Ok(((psi / t_c_s).floor() as u64).max(1))
}

/// Overhead flags for slot offset n after a CE slot: alpha charges the
/// pilot overhead in the actual branch (only the CE slot itself),
/// alpha_bar in the hypothetical re-estimation branch (every Psi-boundary
/// slot).
pub fn alpha_flags(n: u64, psi_slots: u64) -> (bool, bool) {
    let alpha_bar = psi_slots > 0 && n % psi_slots == 0;
    (n == 0, alpha_bar)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    GainNonpositive,
    RateBelowThreshold,
    NMaxReached,
}

#[derive(Debug, Clone)]
pub struct ScheduleDecision {
    /// Consecutive slots after the CE slot where estimation is skipped.
    pub skips: u64,
    pub per_slot_gains: Vec<f64>,
    pub stop_reason: StopReason,
}

/// What the prediction loop needs to know about one candidate slot.
#[derive(Debug, Clone, Copy)]
pub struct SlotEvaluation {
    pub aggregate_gain: f64,
    /// True when every UE's predicted rate clears the threshold.
    pub min_rate_ok: bool,
}

pub trait GainOracle {
    fn evaluate(&mut self, n: u64) -> Result<SlotEvaluation>;
}

impl<F> GainOracle for F
where
    F: FnMut(u64) -> Result<SlotEvaluation>,
{
    fn evaluate(&mut self, n: u64) -> Result<SlotEvaluation> {
        self(n)
    }
}

/// Skip-prediction loop: extend the skip run while the aggregate gain stays
/// positive and every UE clears the rate floor, stopping at the first
/// violation or at the decorrelation horizon N_max - 1.
pub fn predict_skips<O: GainOracle>(oracle: &mut O, n_max: u64) -> Result<ScheduleDecision> {
    let mut skips = 0u64;
    let mut gains = Vec::new();
    for n in 1..n_max {
        let eval = oracle.evaluate(n)?;
        gains.push(eval.aggregate_gain);
        if eval.aggregate_gain <= 0.0 {
            return Ok(ScheduleDecision {
                skips,
                per_slot_gains: gains,
                stop_reason: StopReason::GainNonpositive,
            });
        }
        if !eval.min_rate_ok {
            return Ok(ScheduleDecision {
                skips,
                per_slot_gains: gains,
                stop_reason: StopReason::RateBelowThreshold,
            });
        }
        skips += 1;
    }
    Ok(ScheduleDecision {
        skips,
        per_slot_gains: gains,
        stop_reason: StopReason::NMaxReached,
    })
}

/// Fixed-interval baselines skip psi_slots - 1 slots between estimates.
pub fn baseline_skips(psi_slots: u64) -> u64 {
    psi_slots.saturating_sub(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn psi_slot_counts() {
        // Ratio engineered to 3.7 slots.
        let t_psi = coherence_time(0.8, 30.0, 5e9).unwrap();
        assert_eq!(psi_slots(0.8, 30.0, 5e9, t_psi / 3.7).unwrap(), 3);
        // Same threshold and velocity as the slot clock: exactly one slot.
        let t_c = coherence_time(0.9, 40.0, 5e9).unwrap();
        assert_eq!(psi_slots(0.9, 40.0, 5e9, t_c).unwrap(), 1);
        // arccos(0.7)/arccos(0.9) = 1.76 floors to 1.
        assert_eq!(psi_slots(0.7, 40.0, 5e9, t_c).unwrap(), 1);
        // Never below one slot even for tiny Psi.
        assert_eq!(psi_slots(0.999, 40.0, 5e9, t_c).unwrap(), 1);
    }

    #[test]
    fn alpha_flag_pattern() {
        assert_eq!(alpha_flags(0, 3), (true, true));
        assert_eq!(alpha_flags(3, 3), (false, true));
        assert_eq!(alpha_flags(4, 3), (false, false));
        // Over three periods the bar flag fires exactly at 0, p, 2p.
        let p = 4u64;
        let fired: Vec<u64> = (0..3 * p).filter(|&n| alpha_flags(n, p).1).collect();
        assert_eq!(fired, vec![0, p, 2 * p]);
    }

    fn stub(gains: Vec<f64>, rate_ok: Vec<bool>) -> impl FnMut(u64) -> Result<SlotEvaluation> {
        move |n: u64| {
            let i = (n - 1) as usize;
            Ok(SlotEvaluation {
                aggregate_gain: gains[i],
                min_rate_ok: rate_ok[i],
            })
        }
    }

    #[test]
    fn immediate_gain_violation() {
        let mut oracle = stub(vec![0.0; 9], vec![true; 9]);
        let d = predict_skips(&mut oracle, 10).unwrap();
        assert_eq!(d.skips, 0);
        assert_eq!(d.stop_reason, StopReason::GainNonpositive);
        assert_eq!(d.per_slot_gains.len(), 1);
    }

    #[test]
    fn full_horizon_run() {
        let mut oracle = stub(vec![1.0; 9], vec![true; 9]);
        let d = predict_skips(&mut oracle, 10).unwrap();
        assert_eq!(d.skips, 9);
        assert_eq!(d.stop_reason, StopReason::NMaxReached);
    }

    #[test]
    fn rate_floor_stops_at_three() {
        // Gains positive throughout; UE rate check fails at n = 4.
        let mut oracle = stub(
            vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
            vec![true, true, true, false, true, true],
        );
        let d = predict_skips(&mut oracle, 7).unwrap();
        assert_eq!(d.skips, 3);
        assert_eq!(d.stop_reason, StopReason::RateBelowThreshold);
        assert_eq!(d.per_slot_gains.len(), 4);
    }

    #[test]
    fn gain_checked_before_rate() {
        let mut oracle = stub(vec![-1.0], vec![false]);
        let d = predict_skips(&mut oracle, 2).unwrap();
        assert_eq!(d.stop_reason, StopReason::GainNonpositive);
    }

    #[test]
    fn skips_bounded_by_horizon_in_random_runs() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
        for _ in 0..1000 {
            let n_max = rng.gen_range(1..12u64);
            let horizon = n_max.saturating_sub(1) as usize;
            let gains: Vec<f64> = (0..horizon.max(1))
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let oks: Vec<bool> = (0..horizon.max(1)).map(|_| rng.gen_bool(0.8)).collect();
            let mut oracle = stub(gains, oks);
            let d = predict_skips(&mut oracle, n_max).unwrap();
            assert!(d.skips <= n_max.saturating_sub(1));
        }
    }

    #[test]
    fn zero_threshold_and_positive_gains_run_to_horizon() {
        // With every rate above a zero threshold and strictly positive
        // gains, the loop must reach N_max - 1.
        let mut oracle = |_n: u64| {
            Ok(SlotEvaluation {
                aggregate_gain: 1e-9,
                min_rate_ok: true,
            })
        };
        let d = predict_skips(&mut oracle, 6).unwrap();
        assert_eq!(d.skips, 5);
    }

    #[test]
    fn deterministic_given_same_oracle() {
        let make = || stub(vec![0.5, 0.4, -0.1, 0.2], vec![true; 4]);
        let a = predict_skips(&mut make(), 5).unwrap();
        let b = predict_skips(&mut make(), 5).unwrap();
        assert_eq!(a.skips, b.skips);
        assert_eq!(a.per_slot_gains, b.per_slot_gains);
    }

    #[test]
    fn baseline_counts() {
        assert_eq!(baseline_skips(1), 0);
        assert_eq!(baseline_skips(3), 2);
        // Lower threshold never skips less (arccos is monotone).
        let t_c = coherence_time(0.9, 35.0, 5e9).unwrap();
        let loose = baseline_skips(psi_slots(0.7, 35.0, 5e9, t_c).unwrap());
        let tight = baseline_skips(psi_slots(0.9, 35.0, 5e9, t_c).unwrap());
        assert!(loose >= tight);
    }

    #[test]
    fn policy_labels() {
        assert_eq!(Policy::proposed(0.9).label(), "proposed");
        assert_eq!(Policy::coherence_fixed(0.9).label(), "coherence_0.9");
        assert_eq!(Policy::coherence_fixed(0.7).label(), "coherence_0.7");
    }
}
