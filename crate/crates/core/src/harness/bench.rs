//! Benchmark runs, their records, and record output.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::decomp::{run_distributed, FetchStats};
use crate::engine::{run_treecode, EvalConfig, InteractionCounts, PhaseTimes};
use crate::error::{BltcError, Result};
use crate::kernels::KernelKind;
use crate::particles::ParticleSystem;

use super::{checked_oracle, relative_error, sample_indices};

/// Oracle sample size used when verification is requested without one.
pub const DEFAULT_VERIFY_SAMPLES: usize = 10_000;

pub fn default_sample_size(n: usize) -> usize {
    n.min(DEFAULT_VERIFY_SAMPLES)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    /// Relative 2-norm error against the direct sum.
    pub value: f64,
    pub sample_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub n_particles: usize,
    pub kernel: KernelKind,
    pub kappa: f64,
    pub theta: f64,
    pub degree: usize,
    pub leaf_size: usize,
    pub batch_size: usize,
    pub ranks: usize,
    pub seed: u64,
    pub times: PhaseTimes,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorEstimate>,
    pub interaction_counts: InteractionCounts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fetch_stats: Option<Vec<FetchStats>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub eval: EvalConfig,
    pub ranks: usize,
    /// Seed the particles came from; also seeds the oracle sample.
    pub seed: u64,
    /// Oracle sample size; `None` skips verification.
    pub verify: Option<usize>,
    /// Permits an unsampled oracle above the size limit.
    pub allow_full_oracle: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            eval: EvalConfig::default(),
            ranks: 1,
            seed: 42,
            verify: None,
            allow_full_oracle: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub thetas: Vec<f64>,
    pub degrees: Vec<usize>,
}

impl Default for Sweep {
    fn default() -> Self {
        Self {
            thetas: vec![0.5, 0.7, 0.9],
            degrees: (1..=13).step_by(2).collect(),
        }
    }
}

/// One record per `(theta, degree)` of the sweep (theta outer), or a single
/// record for `bench.eval` without a sweep. The oracle is evaluated once and
/// shared by all records.
pub fn run_benchmark(particles: &ParticleSystem, bench: &BenchConfig, sweep: Option<&Sweep>) -> Result<Vec<RunRecord>> {
    let configs: Vec<EvalConfig> = match sweep {
        None => vec![bench.eval],
        Some(s) => s
            .thetas
            .iter()
            .flat_map(|&theta| {
                s.degrees.iter().map(move |&degree| EvalConfig {
                    theta,
                    degree,
                    ..bench.eval
                })
            })
            .collect(),
    };
    for c in &configs {
        c.validate()?;
    }
    if bench.ranks == 0 {
        return Err(BltcError::InvalidConfig("ranks must be at least 1".into()));
    }

    let n = particles.len();
    let reference = match bench.verify {
        Some(m) => {
            let idx = sample_indices(n, m, bench.seed);
            let sample = (idx.len() < n).then_some(idx.as_slice());
            let ds = checked_oracle(particles, &bench.eval.kernel, sample, bench.allow_full_oracle)?;
            Some((idx, ds))
        }
        None => None,
    };

    configs
        .iter()
        .map(|config| {
            let (potentials, times, counts, fetch_stats) = if bench.ranks == 1 {
                let run = run_treecode(particles, particles, config)?;
                (run.potentials, run.times, run.counts, None)
            } else {
                let run = run_distributed(particles, bench.ranks, config)?;
                (run.potentials, run.times, run.counts, Some(run.fetch_stats))
            };
            let error = match &reference {
                Some((idx, ds)) => {
                    let tc: Vec<f64> = idx.iter().map(|&i| potentials[i]).collect();
                    Some(ErrorEstimate {
                        value: relative_error(ds, &tc)?,
                        sample_size: idx.len(),
                    })
                }
                None => None,
            };
            Ok(RunRecord {
                n_particles: n,
                kernel: config.kernel.kind,
                kappa: config.kernel.kappa,
                theta: config.theta,
                degree: config.degree,
                leaf_size: config.leaf_size,
                batch_size: config.batch_size,
                ranks: bench.ranks,
                seed: bench.seed,
                times,
                error,
                interaction_counts: counts,
                fetch_stats,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Writes records as a JSON array, or as CSV with dotted column names.
/// In CSV, `fetch_stats.*` columns hold totals over all rank pairs and are
/// empty for single-rank records.
pub fn write_records<W: Write>(records: &[RunRecord], format: OutputFormat, mut writer: W) -> Result<()> {
    match format {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut writer, records)?;
            writeln!(writer)?;
        }
        OutputFormat::Csv => {
            let mut wtr = csv::Writer::from_writer(writer);
            wtr.write_record(CSV_COLUMNS)?;
            for r in records {
                wtr.write_record(csv_row(r))?;
            }
            wtr.flush()?;
        }
    }
    Ok(())
}

pub const CSV_COLUMNS: [&str; 24] = [
    "n_particles",
    "kernel",
    "kappa",
    "theta",
    "degree",
    "leaf_size",
    "batch_size",
    "ranks",
    "seed",
    "times.setup_s",
    "times.precompute_s",
    "times.compute_s",
    "times.total_s",
    "error.value",
    "error.sample_size",
    "interaction_counts.direct_pairs",
    "interaction_counts.approx_pairs",
    "fetch_stats.pairs",
    "fetch_stats.tree_records",
    "fetch_stats.clusters_fetched",
    "fetch_stats.moments_fetched",
    "fetch_stats.particles_fetched",
    "fetch_stats.bytes",
    "fetch_stats.max_bytes",
];

fn csv_row(r: &RunRecord) -> Vec<String> {
    let opt = |v: Option<String>| v.unwrap_or_default();
    let fetch = |f: fn(&FetchStats) -> usize| {
        opt(r
            .fetch_stats
            .as_ref()
            .map(|s| s.iter().map(f).sum::<usize>().to_string()))
    };
    vec![
        r.n_particles.to_string(),
        r.kernel.to_string(),
        r.kappa.to_string(),
        r.theta.to_string(),
        r.degree.to_string(),
        r.leaf_size.to_string(),
        r.batch_size.to_string(),
        r.ranks.to_string(),
        r.seed.to_string(),
        r.times.setup_s.to_string(),
        r.times.precompute_s.to_string(),
        r.times.compute_s.to_string(),
        r.times.total_s.to_string(),
        opt(r.error.map(|e| e.value.to_string())),
        opt(r.error.map(|e| e.sample_size.to_string())),
        r.interaction_counts.direct_pairs.to_string(),
        r.interaction_counts.approx_pairs.to_string(),
        opt(r.fetch_stats.as_ref().map(|s| s.len().to_string())),
        fetch(|f| f.tree_records),
        fetch(|f| f.clusters_fetched),
        fetch(|f| f.moments_fetched),
        fetch(|f| f.particles_fetched),
        fetch(|f| f.bytes),
        opt(r
            .fetch_stats
            .as_ref()
            .map(|s| s.iter().map(|f| f.bytes).max().unwrap_or(0).to_string())),
    ]
}
