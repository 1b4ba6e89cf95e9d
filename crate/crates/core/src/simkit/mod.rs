//! Scenario assembly, UE mobility, episode execution and experiment sweeps.

mod episode;
mod scenario;

pub use episode::{run_episode, step_mobility, EpisodeMetrics, UEState};
pub use scenario::{parse_policy, DerivedParams, PredictionMode, Scenario};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scheduler::Policy;

/// Five-number summary of a sample of counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Standard five-number summary with linearly interpolated quartiles.
pub fn boxplot_stats(samples: &[u64]) -> Result<BoxStats> {
    if samples.is_empty() {
        return Err(Error::invalid("boxplot_stats: empty sample"));
    }
    let mut sorted: Vec<f64> = samples.iter().map(|&v| v as f64).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("counts are finite"));
    let quantile = |p: f64| -> f64 {
        let pos = p * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    };
    Ok(BoxStats {
        min: sorted[0],
        q1: quantile(0.25),
        median: quantile(0.5),
        q3: quantile(0.75),
        max: sorted[sorted.len() - 1],
    })
}

/// Number of adjacent pairs in the skip sequence with differing values.
pub fn change_frequency(skips: &[u64]) -> u64 {
    skips.windows(2).filter(|w| w[0] != w[1]).count() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Velocity,
    RisElements,
    NumUes,
}

impl SweepAxis {
    pub fn label(&self) -> &'static str {
        match self {
            SweepAxis::Velocity => "velocity",
            SweepAxis::RisElements => "elements",
            SweepAxis::NumUes => "ues",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "velocity" => Ok(SweepAxis::Velocity),
            "elements" | "ris_elements" => Ok(SweepAxis::RisElements),
            "ues" | "num_ues" => Ok(SweepAxis::NumUes),
            other => Err(Error::config(
                "sweep",
                format!("unknown axis `{other}` (velocity|elements|ues)"),
            )),
        }
    }

    /// Apply one sweep value to a scenario copy.
    pub fn apply(&self, scenario: &mut Scenario, value: f64) -> Result<()> {
        match self {
            SweepAxis::Velocity => {
                if !(value > 0.0) {
                    return Err(Error::config("sweep", "velocity values must be > 0"));
                }
                scenario.velocity_max_mps = value;
                scenario.velocity_min_mps = scenario.velocity_min_mps.min(value);
            }
            SweepAxis::RisElements => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::config("sweep", "element counts must be integers >= 1"));
                }
                scenario.num_ris_elements = value as usize;
            }
            SweepAxis::NumUes => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::config("sweep", "UE counts must be integers >= 1"));
                }
                scenario.num_ues = value as usize;
            }
        }
        Ok(())
    }
}

/// Aggregated results of one (value, policy) sweep cell.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub policy: String,
    pub mean_throughput_bps: f64,
    pub stderr_bps: f64,
    pub skip_stats: BoxStats,
    pub change_frequency_mean: f64,
}

/// Run `seeds` independent episodes for every (value, policy) pair and
/// aggregate. Episodes run in parallel; aggregation order is fixed by the
/// job list, so results are deterministic regardless of thread scheduling.
pub fn sweep(
    base: &Scenario,
    axis: Option<SweepAxis>,
    values: &[f64],
    policies: &[Policy],
    seeds: usize,
    seed_base: u64,
) -> Result<Vec<SweepRow>> {
    if policies.is_empty() {
        return Err(Error::invalid("sweep: no policies"));
    }
    if seeds == 0 {
        return Err(Error::invalid("sweep: need at least one seed"));
    }
    let mut values: Vec<f64> = if axis.is_some() {
        if values.is_empty() {
            return Err(Error::invalid("sweep: axis set but no values"));
        }
        values.to_vec()
    } else {
        vec![0.0]
    };
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite sweep values"));

    // Build and validate every scenario up front so configuration errors
    // surface before any episode runs.
    let mut jobs: Vec<Scenario> = Vec::with_capacity(values.len() * policies.len() * seeds);
    for &value in &values {
        for policy in policies {
            for s in 0..seeds {
                let mut sc = base.clone();
                if let Some(axis) = axis {
                    axis.apply(&mut sc, value)?;
                }
                sc.policy = *policy;
                sc.seed = seed_base.wrapping_add(s as u64);
                sc.derive()?;
                jobs.push(sc);
            }
        }
    }

    let results: Vec<Result<EpisodeMetrics>> =
        jobs.par_iter().map(run_episode).collect();

    let mut rows = Vec::with_capacity(values.len() * policies.len());
    let mut it = results.into_iter();
    for &value in &values {
        for policy in policies {
            let mut throughputs = Vec::with_capacity(seeds);
            let mut skips = Vec::new();
            let mut change_sum = 0.0;
            for _ in 0..seeds {
                let m = it.next().expect("job list matches result list")?;
                throughputs.push(m.sum_throughput_bps);
                skips.extend_from_slice(&m.skip_counts);
                change_sum += m.change_frequency as f64;
            }
            let mean = throughputs.iter().sum::<f64>() / seeds as f64;
            let stderr = if seeds > 1 {
                let var = throughputs
                    .iter()
                    .map(|t| (t - mean).powi(2))
                    .sum::<f64>()
                    / (seeds - 1) as f64;
                (var / seeds as f64).sqrt()
            } else {
                0.0
            };
            rows.push(SweepRow {
                value,
                policy: policy.label(),
                mean_throughput_bps: mean,
                stderr_bps: stderr,
                skip_stats: boxplot_stats(&skips)?,
                change_frequency_mean: change_sum / seeds as f64,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boxplot_constant_and_even_spacing() {
        let b = boxplot_stats(&[3, 3, 3]).unwrap();
        assert_eq!(b, BoxStats { min: 3.0, q1: 3.0, median: 3.0, q3: 3.0, max: 3.0 });
        let b = boxplot_stats(&[5, 1, 3, 2, 4]).unwrap();
        assert_eq!(b.min, 1.0);
        assert_eq!(b.q1, 2.0);
        assert_eq!(b.median, 3.0);
        assert_eq!(b.q3, 4.0);
        assert_eq!(b.max, 5.0);
        assert!(boxplot_stats(&[]).is_err());
    }

    #[test]
    fn boxplot_matches_sort_based_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let samples: Vec<u64> = (0..100).map(|_| rng.gen_range(0..40)).collect();
        let b = boxplot_stats(&samples).unwrap();
        // Independent quantile via explicit index arithmetic on a sorted copy.
        let mut sorted = samples.clone();
        sorted.sort_unstable();
        let q = |p: f64| {
            let pos = p * 99.0;
            let lo = pos.floor() as usize;
            let frac = pos - lo as f64;
            let a = sorted[lo] as f64;
            let b = sorted[(lo + 1).min(99)] as f64;
            a + frac * (b - a)
        };
        assert_eq!(b.min, sorted[0] as f64);
        assert_eq!(b.max, sorted[99] as f64);
        assert!((b.q1 - q(0.25)).abs() < 1e-12);
        assert!((b.median - q(0.5)).abs() < 1e-12);
        assert!((b.q3 - q(0.75)).abs() < 1e-12);
    }

    #[test]
    fn change_frequency_counts_adjacent_differences() {
        assert_eq!(change_frequency(&[2, 2, 2]), 0);
        assert_eq!(change_frequency(&[1, 2, 1]), 2);
        assert_eq!(change_frequency(&[1]), 0);
        assert_eq!(change_frequency(&[]), 0);
    }

    #[test]
    fn axis_parsing_and_apply() {
        assert_eq!(SweepAxis::parse("velocity").unwrap(), SweepAxis::Velocity);
        assert_eq!(SweepAxis::parse("elements").unwrap(), SweepAxis::RisElements);
        assert_eq!(SweepAxis::parse("ues").unwrap(), SweepAxis::NumUes);
        assert!(SweepAxis::parse("bananas").is_err());
        let mut s = Scenario::desk_default();
        SweepAxis::Velocity.apply(&mut s, 20.0).unwrap();
        assert_eq!(s.velocity_max_mps, 20.0);
        assert!(s.velocity_min_mps <= 20.0);
        SweepAxis::RisElements.apply(&mut s, 16.0).unwrap();
        assert_eq!(s.num_ris_elements, 16);
        assert!(SweepAxis::RisElements.apply(&mut s, 16.5).is_err());
    }

    #[test]
    fn tiny_sweep_produces_ordered_rows() {
        let mut base = Scenario::desk_default();
        base.num_ues = 2;
        base.num_ris_elements = 8;
        base.total_time_s = 0.01;
        base.velocity_min_mps = 30.0;
        base.velocity_max_mps = 40.0;
        let policies = [Policy::proposed(0.8), Policy::coherence_fixed(0.9)];
        let rows = sweep(
            &base,
            Some(SweepAxis::Velocity),
            &[40.0, 30.0],
            &policies,
            2,
            7,
        )
        .unwrap();
        assert_eq!(rows.len(), 4);
        // Sorted by value, policies in given order.
        assert_eq!(rows[0].value, 30.0);
        assert_eq!(rows[0].policy, "proposed");
        assert_eq!(rows[1].policy, "coherence_0.9");
        assert_eq!(rows[2].value, 40.0);
        for r in &rows {
            assert!(r.mean_throughput_bps > 0.0);
        }
        // Single point, no axis.
        let rows = sweep(&base, None, &[], &policies[..1], 1, 7).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].stderr_bps, 0.0);
    }
}
