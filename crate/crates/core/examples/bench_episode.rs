use risim::scheduler::Policy;
use risim::simkit::{run_episode, Scenario};
use std::time::Instant;

fn main() {
    let tau: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(225e-9);
    let seeds: u64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(3);
    for v in [10.0f64, 20.0, 30.0, 40.0] {
        for policy in [Policy::proposed(0.8), Policy::coherence_fixed(0.9), Policy::coherence_fixed(0.7)] {
            let mut thr = Vec::new();
            let mut skips_all = Vec::new();
            let t = Instant::now();
            for seed in 0..seeds {
                let mut s = Scenario::desk_default();
                s.tau_max_s = tau;
                s.velocity_max_mps = v;
                s.velocity_min_mps = s.velocity_min_mps.min(v);
                s.policy = policy;
                s.seed = 1000 + seed;
                let m = run_episode(&s).unwrap();
                thr.push(m.sum_throughput_bps);
                let mean_skip = m.skip_counts.iter().sum::<u64>() as f64 / m.skip_counts.len() as f64;
                skips_all.push(mean_skip);
            }
            let mean = thr.iter().sum::<f64>() / thr.len() as f64;
            let sd = (thr.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (thr.len() - 1).max(1) as f64).sqrt();
            println!("v={v:>4} {:>14} thr={mean:.4e} (sd {sd:.2e}) mean_skips={:.2} [{:?}]",
                policy.label(), skips_all.iter().sum::<f64>() / skips_all.len() as f64, t.elapsed());
        }
    }
}
