//! Run execution and artifact writers: trace.csv, summary.json,
//! snap_<step>.el snapshots, DOT renderings, and merged sweep reports.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use regnet::{generate, Engine, ExperimentConfig, GenKind, GenSpec, LabeledGraph};
use serde::Serialize;

use crate::manifest::{GraphSource, RunManifest};
use crate::CliError;

/// One run's result; `config` plus `gen`/`graph_file` are enough to
/// regenerate the trace byte for byte.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub config: ExperimentConfig,
    pub gen: Option<GenSpec>,
    pub graph_file: Option<String>,
    pub initial_edges: usize,
    pub final_edges: usize,
    pub final_degree_range: usize,
    pub absorption_step: Option<u64>,
    pub absorbed_m: Option<usize>,
    pub final_alpha: Option<f64>,
    pub wall_ms: u64,
}

#[derive(Debug, Serialize)]
pub struct SweepSummary {
    pub runs: usize,
    pub absorbed: usize,
    pub summaries: Vec<SeedSummary>,
}

#[derive(Debug, Serialize)]
pub struct SeedSummary {
    pub seed: u64,
    #[serde(flatten)]
    pub summary: Summary,
}

fn load_start(
    manifest: &RunManifest,
    seed: u64,
) -> Result<(LabeledGraph, Option<GenSpec>, Option<String>), CliError> {
    match &manifest.source {
        GraphSource::File(path) => {
            let text = fs::read_to_string(path)
                .map_err(|err| CliError::Runtime(format!("{}: {err}", path.display())))?;
            let g = LabeledGraph::parse_edge_list(&text)
                .map_err(|err| CliError::Runtime(format!("{}: {err}", path.display())))?;
            Ok((g, None, Some(path.display().to_string())))
        }
        GraphSource::Gen { kind, e } => {
            let n = manifest.n.unwrap_or(match kind {
                GenKind::Barbell => 10,
                _ => 6,
            });
            let spec = GenSpec {
                kind: *kind,
                n,
                e: *e,
                seed: manifest.topology_seed.unwrap_or(seed),
            };
            let g = generate(&spec)?;
            Ok((g, Some(spec), None))
        }
    }
}

fn write_snapshot(dir: &Path, step: u64, g: &LabeledGraph, dot: bool) -> std::io::Result<()> {
    fs::write(dir.join(format!("snap_{step}.el")), g.to_edge_list_string())?;
    if dot {
        fs::write(dir.join(format!("snap_{step}.dot")), g.to_dot())?;
    }
    Ok(())
}

pub fn run_single(manifest: &RunManifest, seed: u64, out_dir: &Path) -> Result<Summary, CliError> {
    fs::create_dir_all(out_dir)?;
    let (g0, gen, graph_file) = load_start(manifest, seed)?;
    let initial_edges = g0.edge_count();
    let config = manifest.config_for(g0.node_count(), seed);
    let mut engine = Engine::new(g0, config)?;

    let started = Instant::now();
    let mut snapshot_err = None;
    let trace = engine.run_with_observer(|step, g| {
        if snapshot_err.is_none() {
            if let Err(err) = write_snapshot(out_dir, step, g, manifest.dot) {
                snapshot_err = Some(err);
            }
        }
    });
    if let Some(err) = snapshot_err {
        return Err(err.into());
    }
    let wall_ms = started.elapsed().as_millis() as u64;

    let mut csv = fs::File::create(out_dir.join("trace.csv"))?;
    trace.write_csv(&mut csv)?;
    if manifest.dot {
        fs::write(out_dir.join("final.dot"), engine.graph().to_dot())?;
    }

    let summary = Summary {
        config,
        gen,
        graph_file,
        initial_edges,
        final_edges: engine.graph().edge_count(),
        final_degree_range: engine.graph().degree_range(),
        absorption_step: trace.absorption.map(|a| a.step),
        absorbed_m: trace.absorption.map(|a| a.m),
        final_alpha: trace.final_alpha(),
        wall_ms,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(out_dir.join("summary.json"), json + "\n")?;
    Ok(summary)
}

/// Inclusive seed sweep; workers own one simulation each, results are
/// merged in seed order afterwards.
pub fn run_sweep(manifest: &RunManifest, lo: u64, hi: u64) -> Result<SweepSummary, CliError> {
    let mut summaries: Vec<SeedSummary> = (lo..=hi)
        .into_par_iter()
        .map(|seed| {
            let dir = manifest.out_dir.join(format!("seed-{seed}"));
            run_single(manifest, seed, &dir).map(|summary| SeedSummary { seed, summary })
        })
        .collect::<Result<_, _>>()?;
    summaries.sort_by_key(|s| s.seed);
    let sweep = SweepSummary {
        runs: summaries.len(),
        absorbed: summaries
            .iter()
            .filter(|s| s.summary.absorbed_m.is_some())
            .count(),
        summaries,
    };
    fs::create_dir_all(&manifest.out_dir)?;
    let json = serde_json::to_string_pretty(&sweep).expect("sweep serializes");
    fs::write(manifest.out_dir.join("sweep.json"), json + "\n")?;
    Ok(sweep)
}
