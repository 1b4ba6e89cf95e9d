//! Configuration parsing, experiment orchestration and machine-readable
//! result emission.
//!
//! Config files are flat `key = value` TOML with the keys named after
//! scenario fields (dB/dBm quantities carry unit suffixes and are converted
//! to linear at parse time). Results land as one CSV per sweep plus a
//! `run_meta.txt` with the seed list, versions and wall time.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::scheduler::Policy;
use crate::simkit::{parse_policy, sweep, Scenario, SweepAxis, SweepRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// CI-sized defaults (small RIS, short horizon).
    Desk,
    /// Full published parameter set (slow; interior-point phase solver is
    /// replaced by the low-rank path automatically at M = 300).
    Paper,
}

impl Scale {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            other => Err(Error::config(
                "scale",
                format!("unknown scale `{other}` (desk|paper)"),
            )),
        }
    }

    pub fn default_scenario(&self) -> Scenario {
        match self {
            Scale::Desk => Scenario::desk_default(),
            Scale::Paper => Scenario::paper_default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario_file: Option<PathBuf>,
    pub sweep_axis: Option<SweepAxis>,
    pub sweep_values: Vec<f64>,
    /// Policies to evaluate; empty means the standard trio (proposed plus
    /// the 0.9 and 0.7 coherence baselines).
    pub policies: Vec<String>,
    pub seeds: usize,
    pub seed_base: u64,
    pub output_dir: PathBuf,
    pub scale: Scale,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario_file: None,
            sweep_axis: None,
            sweep_values: Vec::new(),
            policies: Vec::new(),
            seeds: 20,
            seed_base: 1000,
            output_dir: PathBuf::from("out"),
            scale: Scale::Desk,
        }
    }
}

/// Load the scenario for a run: scale defaults, then the config file's
/// keys applied over them. The `policy` key is applied last so it can
/// reference the file's correlation threshold.
pub fn parse_config(path: Option<&Path>, scale: Scale) -> Result<Scenario> {
    let mut scenario = scale.default_scenario();
    let Some(path) = path else {
        return Ok(scenario);
    };
    let text = std::fs::read_to_string(path).map_err(|source| Error::FileRead {
        path: path.to_path_buf(),
        source,
    })?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| Error::config(path.display().to_string(), format!("not valid TOML: {e}")))?;
    let mut policy_entry = None;
    for (key, value) in &table {
        if key == "policy" {
            policy_entry = Some(value.clone());
            continue;
        }
        scenario.set_key(key, value)?;
    }
    if let Some(value) = policy_entry {
        scenario.set_key("policy", &value)?;
    }
    scenario.validate()?;
    Ok(scenario)
}

fn resolve_policies(config: &RunConfig, scenario: &Scenario) -> Result<Vec<Policy>> {
    if config.policies.is_empty() {
        return Ok(vec![
            Policy::proposed(scenario.policy.rho_bar_threshold),
            Policy::coherence_fixed(0.9),
            Policy::coherence_fixed(0.7),
        ]);
    }
    config
        .policies
        .iter()
        .map(|name| parse_policy(name, scenario.policy.rho_bar_threshold))
        .collect()
}

pub const CSV_HEADER: &str = "value,policy,mean_throughput_bps,stderr,skip_min,skip_q1,\
skip_median,skip_q3,skip_max,change_frequency_mean";

fn write_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.value,
            r.policy,
            r.mean_throughput_bps,
            r.stderr_bps,
            r.skip_stats.min,
            r.skip_stats.q1,
            r.skip_stats.median,
            r.skip_stats.q3,
            r.skip_stats.max,
            r.change_frequency_mean,
        ));
    }
    std::fs::write(path, out.as_bytes())?;
    Ok(())
}

#[derive(Debug)]
pub struct RunSummary {
    pub rows: Vec<SweepRow>,
    pub csv_path: PathBuf,
    pub meta_path: PathBuf,
}

/// Execute a run: parse configuration, sweep, write `sweep_<axis>.csv` and
/// `run_meta.txt` into the output directory.
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    let started = Instant::now();
    std::fs::create_dir_all(&config.output_dir)?;
    let meta_path = config.output_dir.join("run_meta.txt");

    let outcome = (|| -> Result<(Vec<SweepRow>, PathBuf, Vec<Policy>)> {
        let scenario = parse_config(config.scenario_file.as_deref(), config.scale)?;
        let policies = resolve_policies(config, &scenario)?;
        if config.seeds == 0 {
            return Err(Error::config("seeds", "must be >= 1"));
        }
        let rows = sweep(
            &scenario,
            config.sweep_axis,
            &config.sweep_values,
            &policies,
            config.seeds,
            config.seed_base,
        )?;
        let axis_label = config.sweep_axis.map_or("single", |a| a.label());
        let csv_path = config.output_dir.join(format!("sweep_{axis_label}.csv"));
        write_csv(&csv_path, &rows)?;
        Ok((rows, csv_path, policies))
    })();

    let mut meta = String::new();
    meta.push_str(&format!("version: {}\n", env!("CARGO_PKG_VERSION")));
    meta.push_str(&format!(
        "scale: {}\n",
        match config.scale {
            Scale::Desk => "desk",
            Scale::Paper => "paper",
        }
    ));
    meta.push_str(&format!(
        "config: {}\n",
        config
            .scenario_file
            .as_ref()
            .map_or("(defaults)".to_string(), |p| p.display().to_string())
    ));
    meta.push_str(&format!(
        "sweep: {}\n",
        config.sweep_axis.map_or("(single point)", |a| a.label())
    ));
    if !config.sweep_values.is_empty() {
        meta.push_str(&format!("values: {:?}\n", config.sweep_values));
    }
    meta.push_str(&format!(
        "seeds: {:?}\n",
        (0..config.seeds)
            .map(|s| config.seed_base.wrapping_add(s as u64))
            .collect::<Vec<_>>()
    ));
    match &outcome {
        Ok((rows, csv_path, policies)) => {
            meta.push_str(&format!(
                "policies: {}\n",
                policies
                    .iter()
                    .map(|p| p.label())
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
            meta.push_str(&format!("rows: {}\n", rows.len()));
            meta.push_str(&format!("csv: {}\n", csv_path.display()));
            meta.push_str("status: complete\n");
        }
        Err(e) => {
            meta.push_str("status: failed (partial results, see error)\n");
            meta.push_str(&format!("error: {e}\n"));
        }
    }
    meta.push_str(&format!(
        "wall_time_s: {:.3}\n",
        started.elapsed().as_secs_f64()
    ));
    let mut f = std::fs::File::create(&meta_path)?;
    f.write_all(meta.as_bytes())?;

    let (rows, csv_path, _) = outcome?;
    Ok(RunSummary {
        rows,
        csv_path,
        meta_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp_dir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("risim_cli_{tag}_{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn smoke_config_file(dir: &Path) -> PathBuf {
        let path = dir.join("smoke.toml");
        std::fs::write(
            &path,
            "num_ues = 2\nnum_ris_elements = 8\ntotal_time_s = 0.01\n\
             velocity_min_mps = 30.0\nvelocity_max_mps = 40.0\nr_th_bps = 0.0\n",
        )
        .unwrap();
        path
    }

    #[test]
    fn defaults_when_no_file() {
        let s = parse_config(None, Scale::Desk).unwrap();
        assert_eq!(s.num_ris_elements, 32);
        let p = parse_config(None, Scale::Paper).unwrap();
        assert_eq!(p.num_ris_elements, 300);
        assert_eq!(p.t_c_override_s, Some(0.06));
    }

    #[test]
    fn config_errors_name_the_key() {
        let dir = tmp_dir("badkey");
        let path = dir.join("bad.toml");
        std::fs::write(&path, "num_ues = 7\n").unwrap();
        // 96 RBs cannot split across 7 UEs.
        let err = parse_config(Some(&path), Scale::Desk).unwrap_err();
        assert!(err.to_string().contains("B mod U"), "{err}");
        std::fs::write(&path, "velocity_max_mps = 5.0\n").unwrap();
        let err = parse_config(Some(&path), Scale::Desk).unwrap_err();
        assert!(err.to_string().contains("velocity_max"), "{err}");
        std::fs::write(&path, "mystery_knob = 3\n").unwrap();
        let err = parse_config(Some(&path), Scale::Desk).unwrap_err();
        assert!(err.to_string().contains("mystery_knob"), "{err}");
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn smoke_run_writes_csv_and_meta() {
        let dir = tmp_dir("smoke");
        let cfg_path = smoke_config_file(&dir);
        let config = RunConfig {
            scenario_file: Some(cfg_path),
            policies: vec!["proposed".into(), "coherence:0.9".into()],
            seeds: 1,
            output_dir: dir.join("out"),
            ..Default::default()
        };
        let summary = run(&config).unwrap();
        assert_eq!(summary.rows.len(), 2);
        let csv = std::fs::read_to_string(&summary.csv_path).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert_eq!(lines.count(), 2);
        let meta = std::fs::read_to_string(&summary.meta_path).unwrap();
        assert!(meta.contains("status: complete"));
        assert!(meta.contains("seeds: [1000]"));
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let dir = tmp_dir("determinism");
        let cfg_path = smoke_config_file(&dir);
        let mk = |out: &str| RunConfig {
            scenario_file: Some(cfg_path.clone()),
            sweep_axis: Some(SweepAxis::Velocity),
            sweep_values: vec![30.0, 40.0],
            policies: vec!["proposed".into()],
            seeds: 2,
            output_dir: dir.join(out),
            ..Default::default()
        };
        let a = run(&mk("a")).unwrap();
        let b = run(&mk("b")).unwrap();
        let bytes_a = std::fs::read(&a.csv_path).unwrap();
        let bytes_b = std::fs::read(&b.csv_path).unwrap();
        assert_eq!(bytes_a, bytes_b);
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn failed_run_flags_meta_and_errors() {
        let dir = tmp_dir("fail");
        let config = RunConfig {
            scenario_file: Some(dir.join("does_not_exist.toml")),
            output_dir: dir.join("out"),
            seeds: 1,
            ..Default::default()
        };
        assert!(run(&config).is_err());
        let meta = std::fs::read_to_string(dir.join("out/run_meta.txt")).unwrap();
        assert!(meta.contains("status: failed"));
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn sweep_cardinality() {
        let dir = tmp_dir("cardinality");
        let cfg_path = smoke_config_file(&dir);
        let config = RunConfig {
            scenario_file: Some(cfg_path),
            sweep_axis: Some(SweepAxis::Velocity),
            sweep_values: vec![30.0, 35.0, 40.0, 45.0],
            policies: vec![
                "proposed".into(),
                "coherence:0.9".into(),
                "coherence:0.7".into(),
            ],
            seeds: 1,
            output_dir: dir.join("out"),
            ..Default::default()
        };
        let summary = run(&config).unwrap();
        assert_eq!(summary.rows.len(), 12);
        let _ = std::fs::remove_dir_all(&dir);
    }
}
