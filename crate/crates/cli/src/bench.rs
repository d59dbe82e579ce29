use std::fmt::Write as _;

use crate::generate::{generate, GenConfig};
use crate::pipeline::{run_pipeline, Pipeline};
use crate::{fmt_num, CliError};

pub const CSV_HEADER: &str = "pipeline,n_vertices,filtration_size,filtration_time_s,persistence_time_s,total_s";

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub epsilons: Vec<f64>,
    pub cech_cap: usize,
    pub min_side: f64,
    pub max_side: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Per size, one row per pipeline averaged over the seeds; the full nerve
/// row is filled with `-` above its cap.
pub fn run_bench(cfg: &BenchConfig) -> Result<String, CliError> {
    if cfg.sizes.is_empty() || cfg.seeds.is_empty() {
        return Err(CliError::Usage("bench needs at least one size and one seed".into()));
    }
    let mut out = format!("{CSV_HEADER}\n");
    for &n in &cfg.sizes {
        let instances = cfg
            .seeds
            .iter()
            .map(|&seed| {
                generate(&GenConfig { n, seed, min_side: cfg.min_side, max_side: cfg.max_side, ..GenConfig::default() })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let n_vertices = mean(&instances.iter().map(|s| s.total_vertices() as f64).collect::<Vec<_>>());
        let mut pipelines = vec![("restricted".to_string(), Pipeline::Restricted)];
        pipelines.extend(cfg.epsilons.iter().map(|&epsilon| (format!("sample(eps={})", fmt_num(epsilon)), Pipeline::Sample { epsilon })));
        pipelines.push(("cech".to_string(), Pipeline::Cech { cap: cfg.cech_cap }));
        for (name, pipeline) in pipelines {
            if matches!(pipeline, Pipeline::Cech { cap } if n > cap) {
                let _ = writeln!(out, "{name},{},-,-,-,-", fmt_num(n_vertices));
                continue;
            }
            let runs = instances.iter().map(|s| run_pipeline(s, pipeline)).collect::<Result<Vec<_>, _>>()?;
            let col = |f: &dyn Fn(&crate::Run) -> f64| mean(&runs.iter().map(f).collect::<Vec<_>>());
            let _ = writeln!(
                out,
                "{name},{},{},{:.6},{:.6},{:.6}",
                fmt_num(n_vertices),
                fmt_num(col(&|r| r.filtration_size as f64)),
                col(&|r| r.filtration_seconds),
                col(&|r| r.persistence_seconds),
                col(&|r| r.total_seconds()),
            );
        }
    }
    Ok(out)
}
